use serde::{Deserialize, Serialize};

use super::flow::ContactIsotopy;
use super::hamiltonian::ContactHamiltonian;
use crate::error::{Error, Result};
use crate::geometry::{apply_j, dot, norm_sq, omega, polar_compose, polar_decompose, PhaseVector, PolarPoint};
use crate::sampling::{stream, uniform_sphere};

/// `S phi (r, theta) = (r / c_phi(theta), phi(theta))`.
pub fn symplectize(phi: &ContactIsotopy, p: &PolarPoint) -> Result<PolarPoint> {
    let (theta, c) = phi.apply(&p.theta)?;
    PolarPoint::new(p.r / c, theta)
}

/// Constants of a smoothed symplectization: `max_c`/`min_c` bound the
/// conformal factors of the whole isotopy and `k_phi = 4 max_c / min_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingCertificate {
    #[serde(with = "crate::num17")]
    pub max_c: f64,
    #[serde(with = "crate::num17")]
    pub min_c: f64,
    #[serde(with = "crate::num17")]
    pub k_phi: f64,
    #[serde(with = "crate::num17")]
    pub eps: f64,
}

/// A symplectomorphism of `R^{2n}` that is the identity on `{r <= eps}` and
/// agrees with `S phi` on `{r >= k_phi eps}`.
///
/// It is the time-1 map of `G_t(z) = chi(|z|^2) |z|^2 K_t(z/|z|)` where
/// `chi` rises from 0 at `r = eps` to 1 at `r = 4 eps / min_c`. Trajectories
/// of `S phi_t` started at `r >= k_phi eps` never drop below `4 eps / min_c`,
/// so on that region `G_t` generates `S phi_t` itself.
#[derive(Debug, Clone)]
pub struct SmoothedSymplectization {
    iso: ContactIsotopy,
    cert: SmoothingCertificate,
    r_lo: f64,
    r_hi: f64,
}

/// Quintic smoothstep `6s^5 - 15s^4 + 10s^3` on `[lo, hi]` and its derivative.
fn cutoff(r: f64, lo: f64, hi: f64) -> (f64, f64) {
    if r <= lo {
        return (0.0, 0.0);
    }
    if r >= hi {
        return (1.0, 0.0);
    }
    let w = hi - lo;
    let s = (r - lo) / w;
    let v = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
    let d = 30.0 * s * s * (1.0 - s) * (1.0 - s) / w;
    (v, d)
}

pub fn smoothed_symplectization(phi: &ContactIsotopy, eps: f64, samples: usize, seed: u64) -> Result<SmoothedSymplectization> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    let b = phi.conformal_bounds(samples, seed)?;
    // c_{phi_0} = 1, so the range always contains 1.
    let (max_c, min_c) = (b.max.max(1.0), b.min.min(1.0));
    let cert = SmoothingCertificate { max_c, min_c, k_phi: 4.0 * max_c / min_c, eps };
    Ok(SmoothedSymplectization { iso: phi.clone(), cert, r_lo: eps, r_hi: 4.0 * eps / min_c })
}

impl SmoothedSymplectization {
    pub fn certificate(&self) -> &SmoothingCertificate {
        &self.cert
    }

    pub fn isotopy(&self) -> &ContactIsotopy {
        &self.iso
    }

    /// Radii (squared) where the cutoff starts and finishes.
    pub fn cutoff_window(&self) -> (f64, f64) {
        (self.r_lo, self.r_hi)
    }

    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != 2 * self.iso.n() {
            return Err(Error::DimensionMismatch { expected: 2 * self.iso.n(), got: z.len() });
        }
        let r = norm_sq(z);
        let mut p = z.to_vec();
        if r <= self.r_lo {
            return Ok(p);
        }
        let dim = p.len();
        let mut ws = vec![vec![0.0; dim]; 6];
        let step = self.iso.step();
        for seg in self.iso.segments() {
            let r = norm_sq(&p);
            let mut theta = p.clone();
            theta.iter_mut().for_each(|c| *c /= r.sqrt());
            if r <= self.r_lo || seg.outside_support(&theta) {
                continue;
            }
            let steps = (1.0 / step).ceil() as usize;
            let h = 1.0 / steps as f64;
            for _ in 0..steps {
                self.rk4(seg, &mut p, h, &mut ws);
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::Integration(format!("non-finite state starting from {z:?}")));
            }
        }
        Ok(p)
    }

    fn rk4(&self, k: &ContactHamiltonian, p: &mut [f64], h: f64, ws: &mut [Vec<f64>]) {
        let dim = p.len();
        let (head, rest) = ws.split_at_mut(1);
        let tmp = &mut head[0];
        let [k1, k2, k3, k4, scratch] = rest else { unreachable!() };
        self.field(k, p, k1, scratch);
        for i in 0..dim {
            tmp[i] = p[i] + 0.5 * h * k1[i];
        }
        self.field(k, tmp, k2, scratch);
        for i in 0..dim {
            tmp[i] = p[i] + 0.5 * h * k2[i];
        }
        self.field(k, tmp, k3, scratch);
        for i in 0..dim {
            tmp[i] = p[i] + h * k3[i];
        }
        self.field(k, tmp, k4, scratch);
        for i in 0..dim {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// Hamiltonian field of `chi(r) r K(z/|z|)`.
    fn field(&self, k: &ContactHamiltonian, z: &[f64], out: &mut [f64], grad: &mut [f64]) {
        let r = norm_sq(z);
        let (chi, dchi) = cutoff(r, self.r_lo, self.r_hi);
        if chi == 0.0 && dchi == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let s = r.sqrt();
        let theta: Vec<f64> = z.iter().map(|c| c / s).collect();
        if k.outside_support(&theta) {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let kv = k.value_and_gradient(&theta, grad);
        let radial = dot(grad, &theta);
        // grad (r K) = 2 z K + |z| P grad K; grad chi = 2 chi' z.
        for i in 0..z.len() {
            let g_rk = 2.0 * z[i] * kv + s * (grad[i] - radial * theta[i]);
            grad[i] = chi * g_rk + 2.0 * dchi * z[i] * r * kv;
        }
        apply_j(grad, out);
    }
}

/// Central-difference Jacobian columns `dF/dz_i`.
pub fn jacobian(f: impl Fn(&[f64]) -> Result<Vec<f64>>, z: &[f64], h: f64) -> Result<Vec<Vec<f64>>> {
    (0..z.len())
        .map(|i| {
            let mut p = z.to_vec();
            let mut m = z.to_vec();
            p[i] += h;
            m[i] -= h;
            let (fp, fm) = (f(&p)?, f(&m)?);
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        })
        .collect()
}

/// `max |omega(J e_i, J e_j) - omega(e_i, e_j)|` for Jacobian columns `J e_i`.
pub fn symplectic_defect(cols: &[Vec<f64>]) -> f64 {
    let d = cols.len();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut ei = vec![0.0; d];
            let mut ej = vec![0.0; d];
            ei[i] = 1.0;
            ej[j] = 1.0;
            worst = worst.max((omega(&cols[i], &cols[j]) - omega(&ei, &ej)).abs());
        }
    }
    worst
}

/// Cartesian form of [`symplectize`].
pub fn symplectize_cartesian(phi: &ContactIsotopy, z: &[f64]) -> Result<Vec<f64>> {
    let p = polar_decompose(&PhaseVector::new(z.to_vec())?)?;
    Ok(polar_compose(&symplectize(phi, &p)?).into_coords())
}

/// Worst deviations found by [`audit_smoothing`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingAudit {
    pub certificate: SmoothingCertificate,
    pub inner_samples: usize,
    /// Largest `|Psi(z) - z|_inf` with `|z|^2 <= eps`.
    #[serde(with = "crate::num17")]
    pub inner_displacement: f64,
    pub outer_samples: usize,
    /// Largest `|Psi(z) - S phi(z)|_inf` with `|z|^2 >= k_phi eps`.
    #[serde(with = "crate::num17")]
    pub outer_deviation: f64,
    pub jacobian_points: usize,
    #[serde(with = "crate::num17")]
    pub symplectic_defect: f64,
}

impl SmoothingAudit {
    pub fn passed(&self, inner_tol: f64, outer_tol: f64, sympl_tol: f64) -> bool {
        self.inner_displacement < inner_tol && self.outer_deviation < outer_tol && self.symplectic_defect < sympl_tol
    }
}

/// Samples the ball `{|z|^2 <= eps}`, the shell `k_phi eps <= |z|^2 <= 4 k_phi eps`
/// and, for the Jacobian, all three regimes (inside, cutoff window, outside).
pub fn audit_smoothing(
    s: &SmoothedSymplectization,
    samples: usize,
    jacobian_points: usize,
    fd_step: f64,
    seed: u64,
) -> Result<SmoothingAudit> {
    let cert = *s.certificate();
    let dim = 2 * s.iso.n();
    let mut rng = stream(seed, 0);
    let mut inner: f64 = 0.0;
    let mut outer: f64 = 0.0;
    for _ in 0..samples {
        let theta = uniform_sphere(&mut rng, dim);
        let r_in = cert.eps * rand::Rng::gen::<f64>(&mut rng);
        let z: Vec<f64> = theta.iter().map(|c| c * r_in.sqrt()).collect();
        let w = s.apply(&z)?;
        inner = z.iter().zip(&w).fold(inner, |m, (a, b)| m.max((a - b).abs()));
        let r_out = cert.k_phi * cert.eps * (1.0 + 3.0 * rand::Rng::gen::<f64>(&mut rng));
        let z: Vec<f64> = theta.iter().map(|c| c * r_out.sqrt()).collect();
        let w = s.apply(&z)?;
        let e = symplectize_cartesian(&s.iso, &z)?;
        outer = w.iter().zip(&e).fold(outer, |m, (a, b)| m.max((a - b).abs()));
    }
    let (lo, hi) = s.cutoff_window();
    let mut defect: f64 = 0.0;
    for i in 0..jacobian_points {
        let r = match i % 3 {
            0 => 0.5 * lo,
            1 => 0.5 * (lo + hi),
            _ => 2.0 * cert.k_phi * cert.eps,
        };
        let z: Vec<f64> = uniform_sphere(&mut rng, dim).iter().map(|c| c * r.sqrt()).collect();
        let j = jacobian(|p| s.apply(p), &z, fd_step)?;
        defect = defect.max(symplectic_defect(&j));
    }
    Ok(SmoothingAudit {
        certificate: cert,
        inner_samples: samples,
        inner_displacement: inner,
        outer_samples: samples,
        outer_deviation: outer,
        jacobian_points,
        symplectic_defect: defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{stream, uniform_sphere};

    fn iso() -> ContactIsotopy {
        let a = ContactHamiltonian::from_expression("0.5*bump(rho; 0.3, 1.5) * (x1 + 0.5*y1*x2 + 0.4)", 2, 1).unwrap();
        let b = ContactHamiltonian::from_expression("0.4*ball(0.6, 0.2, -0.5, 0.3; 0.6)", 2, 1).unwrap();
        ContactIsotopy::new(vec![a, b]).unwrap().with_step(2e-3).unwrap()
    }

    fn sympl_cartesian(phi: &ContactIsotopy, z: &[f64]) -> Vec<f64> {
        symplectize_cartesian(phi, z).unwrap()
    }

    #[test]
    fn identity_and_radial_linearity() {
        let id = ContactIsotopy::identity(2, 1).unwrap();
        let p = PolarPoint::new(2.0, vec![0.6, 0.0, 0.0, 0.8]).unwrap();
        assert_eq!(symplectize(&id, &p).unwrap(), p);
        let phi = iso();
        let q1 = symplectize(&phi, &PolarPoint::new(1.0, vec![0.6, 0.0, 0.0, 0.8]).unwrap()).unwrap();
        let q2 = symplectize(&phi, &PolarPoint::new(2.0, vec![0.6, 0.0, 0.0, 0.8]).unwrap()).unwrap();
        assert!((q2.r - 2.0 * q1.r).abs() < 1e-12);
    }

    #[test]
    fn symplectization_is_symplectic() {
        let phi = iso();
        let mut rng = stream(11, 0);
        for _ in 0..50 {
            let z: Vec<f64> = uniform_sphere(&mut rng, 4).iter().map(|c| c * 1.3).collect();
            let j = jacobian(|p| symplectize_cartesian(&phi, p), &z, 1e-6).unwrap();
            assert!(symplectic_defect(&j) < 1e-6);
        }
    }

    #[test]
    fn smoothing_of_identity() {
        let id = ContactIsotopy::identity(2, 1).unwrap();
        let s = smoothed_symplectization(&id, 0.1, 100, 0).unwrap();
        assert_eq!(s.certificate().k_phi, 4.0);
        assert_eq!(s.apply(&[0.3, 1.0, -2.0, 0.1]).unwrap(), vec![0.3, 1.0, -2.0, 0.1]);
        assert!(smoothed_symplectization(&id, 0.0, 10, 0).is_err());
    }

    #[test]
    fn smoothing_regions() {
        let phi = iso();
        let eps = 0.05;
        let s = smoothed_symplectization(&phi, eps, 300, 0).unwrap();
        let cert = *s.certificate();
        assert!(cert.max_c >= 1.0 && cert.min_c <= 1.0);
        let mut rng = stream(12, 0);
        for _ in 0..100 {
            let theta = uniform_sphere(&mut rng, 4);
            let r_in = eps * rand::Rng::gen::<f64>(&mut rng);
            let z: Vec<f64> = theta.iter().map(|c| c * r_in.sqrt()).collect();
            let w = s.apply(&z).unwrap();
            assert!(z.iter().zip(&w).all(|(a, b)| (a - b).abs() < 1e-9));
            let r_out = cert.k_phi * eps * (1.0 + 3.0 * rand::Rng::gen::<f64>(&mut rng));
            let z: Vec<f64> = theta.iter().map(|c| c * r_out.sqrt()).collect();
            let w = s.apply(&z).unwrap();
            let e = sympl_cartesian(&phi, &z);
            assert!(w.iter().zip(&e).all(|(a, b)| (a - b).abs() < 1e-6), "{w:?} vs {e:?}");
        }
    }

    #[test]
    fn smoothing_is_symplectic_in_all_regimes() {
        let phi = iso();
        let eps = 0.05;
        let s = smoothed_symplectization(&phi, eps, 300, 0).unwrap();
        let (lo, hi) = s.cutoff_window();
        let mut rng = stream(13, 0);
        for i in 0..30 {
            let r = match i % 3 {
                0 => 0.5 * lo,
                1 => 0.5 * (lo + hi),
                _ => 2.0 * s.certificate().k_phi * eps,
            };
            let z: Vec<f64> = uniform_sphere(&mut rng, 4).iter().map(|c| c * r.sqrt()).collect();
            let j = jacobian(|p| s.apply(p), &z, 1e-6).unwrap();
            assert!(symplectic_defect(&j) < 1e-6, "regime {i}");
        }
    }

    #[test]
    fn audit_of_a_random_isotopy() {
        let iso = crate::contact::random_isotopy(&mut stream(21, 0), 2, 1, 0.5, 2.0).unwrap();
        let s = smoothed_symplectization(&iso, 0.05, 300, 0).unwrap();
        let a = audit_smoothing(&s, 100, 9, 1e-5, 4).unwrap();
        assert!(a.passed(1e-9, 1e-6, 1e-6), "{a:?}");
    }
}
