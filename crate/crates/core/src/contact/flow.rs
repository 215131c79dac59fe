use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{ratio_sample, ContactHamiltonian, SphereFunction, SupportMeta};
use super::{check_unit, contact_field_raw};
use crate::error::{Error, Result};
use crate::geometry::normalize;
use crate::sampling::{near_point, stream, uniform_sphere};

/// Conformal factor `c_psi(theta)` of a contactomorphism at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalFactorRecord {
    #[serde(with = "crate::num17")]
    pub value: f64,
    /// `log c` after every integration step.
    #[serde(with = "crate::num17::vec")]
    pub log_derivative_trace: Vec<f64>,
}

/// Piecewise-autonomous contact isotopy: segment `i` is the unit-time flow of
/// its Hamiltonian, and the whole isotopy runs the segments in order, each
/// taking `1/N` of the time interval `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ContactIsotopy {
    segments: Vec<ContactHamiltonian>,
    n: usize,
    k: usize,
    step: f64,
}

/// Range of the conformal factor over sampled trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalBounds {
    #[serde(with = "crate::num17")]
    pub min: f64,
    #[serde(with = "crate::num17")]
    pub max: f64,
}

pub(crate) struct FlowOutcome {
    pub theta: Vec<f64>,
    pub log_c: f64,
    pub min_log_c: f64,
    pub max_log_c: f64,
}

impl ContactIsotopy {
    pub fn new(segments: Vec<ContactHamiltonian>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidParameter("an isotopy needs at least one generator".into()))?;
        let (n, k) = (first.n(), first.k());
        if segments.iter().any(|s| s.n() != n || s.k() != k) {
            return Err(Error::InvalidParameter("all generators must share n and k".into()));
        }
        Ok(Self { segments, n, k, step: 1e-3 })
    }

    pub fn identity(n: usize, k: usize) -> Result<Self> {
        Self::new(vec![ContactHamiltonian::zero(n, k)?])
    }

    /// Flow of a single autonomous Hamiltonian for unit time.
    pub fn autonomous(h: ContactHamiltonian) -> Self {
        let (n, k) = (h.n(), h.k());
        Self { segments: vec![h], n, k, step: 1e-3 }
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 0.5) {
            return Err(Error::InvalidParameter(format!("flow step {step} must lie in (0, 0.5]")));
        }
        self.step = step;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn segments(&self) -> &[ContactHamiltonian] {
        &self.segments
    }

    /// `self` followed by `other`, i.e. the isotopy ending at `other o self`.
    pub fn then(&self, other: &ContactIsotopy) -> Result<Self> {
        let mut segs = self.segments.clone();
        segs.extend(other.segments.iter().cloned());
        Self::new(segs)?.with_step(self.step.min(other.step))
    }

    /// Isotopy whose endpoint is the inverse of this endpoint.
    pub fn inverse(&self) -> Self {
        let segments = self.segments.iter().rev().map(|s| s.scaled(-1.0)).collect();
        Self { segments, n: self.n, k: self.k, step: self.step }
    }

    /// True when every generator vanishes near `theta`, so that the whole
    /// isotopy fixes it with conformal factor 1.
    pub fn fixes(&self, theta: &[f64]) -> bool {
        self.segments.iter().all(|s| s.outside_support(theta))
    }

    /// Largest angle ratio touched by the generators, if known.
    pub fn support_rho_bound(&self) -> Option<f64> {
        self.segments
            .iter()
            .map(|s| s.support_rho_bound())
            .try_fold(0.0f64, |acc, b| b.map(|b| acc.max(b)))
    }

    pub fn sample_hints(&self) -> Vec<(Vec<f64>, f64)> {
        self.segments.iter().flat_map(|s| s.sample_hints()).collect()
    }

    /// `phi_t(theta)` with its conformal factor.
    pub fn flow(&self, theta: &[f64], t: f64) -> Result<(Vec<f64>, ConformalFactorRecord)> {
        let mut trace = Vec::new();
        let out = self.integrate(theta, t, Some(&mut trace))?;
        Ok((out.theta, ConformalFactorRecord { value: out.log_c.exp(), log_derivative_trace: trace }))
    }

    /// Endpoint `phi_1(theta)` and `c_phi(theta)` without a trace.
    pub fn apply(&self, theta: &[f64]) -> Result<(Vec<f64>, f64)> {
        let out = self.integrate(theta, 1.0, None)?;
        Ok((out.theta, out.log_c.exp()))
    }

    pub(crate) fn integrate(&self, theta: &[f64], t: f64, mut trace: Option<&mut Vec<f64>>) -> Result<FlowOutcome> {
        check_unit(theta)?;
        if theta.len() != 2 * self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, got: theta.len() });
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("isotopy time {t} outside [0, 1]")));
        }
        let mut p = theta.to_vec();
        let mut log_c = 0.0;
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        let count = self.segments.len() as f64;
        let dim = p.len();
        let mut ws = Workspace::new(dim);
        for (i, seg) in self.segments.iter().enumerate() {
            let duration = (t * count - i as f64).clamp(0.0, 1.0);
            if duration == 0.0 {
                break;
            }
            if seg.outside_support(&p) {
                if let Some(tr) = trace.as_deref_mut() {
                    tr.push(log_c);
                }
                continue;
            }
            let steps = (duration / self.step).ceil().max(1.0) as usize;
            let h = duration / steps as f64;
            for _ in 0..steps {
                log_c += ws.rk4_step(seg, &mut p, h);
                if !log_c.is_finite() || p.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Integration(format!(
                        "non-finite state in generator {i} starting from {theta:?}"
                    )));
                }
                lo = lo.min(log_c);
                hi = hi.max(log_c);
                if let Some(tr) = trace.as_deref_mut() {
                    tr.push(log_c);
                }
            }
        }
        Ok(FlowOutcome { theta: p, log_c, min_log_c: lo, max_log_c: hi })
    }

    /// Extremes of `c_{phi_t}` over `t` in `[0, 1]` and over sample points:
    /// uniform points, points near the generator hints and points at random
    /// angle ratios inside the support. The best samples are then improved
    /// by a local random search, and the range is widened by `10%` in
    /// logarithmic scale.
    pub fn conformal_bounds(&self, samples: usize, seed: u64) -> Result<ConformalBounds> {
        let pts = self.support_samples(samples, seed);
        let res: Result<Vec<(f64, f64)>> = pts
            .par_iter()
            .map(|p| self.integrate(p, 1.0, None).map(|o| (o.min_log_c, o.max_log_c)))
            .collect();
        let res = res?;
        let mut order: Vec<usize> = (0..res.len()).collect();
        order.sort_by(|&a, &b| res[a].0.total_cmp(&res[b].0));
        let starts = 4.min(order.len());
        let mut jobs: Vec<(usize, bool)> = order[..starts].iter().map(|&i| (i, false)).collect();
        order.sort_by(|&a, &b| res[b].1.total_cmp(&res[a].1));
        jobs.extend(order[..starts].iter().map(|&i| (i, true)));
        let refined: Result<Vec<(f64, bool)>> = jobs
            .par_iter()
            .enumerate()
            .map(|(j, &(i, upper))| {
                let start = if upper { res[i].1 } else { res[i].0 };
                self.local_extreme(&pts[i], start, upper, seed ^ (j as u64 + 1)).map(|v| (v, upper))
            })
            .collect();
        let mut lo = res.iter().map(|r| r.0).fold(0.0f64, f64::min);
        let mut hi = res.iter().map(|r| r.1).fold(0.0f64, f64::max);
        for (v, upper) in refined? {
            if upper {
                hi = hi.max(v);
            } else {
                lo = lo.min(v);
            }
        }
        Ok(ConformalBounds { min: (1.1 * lo).exp(), max: (1.1 * hi).exp() })
    }

    /// Random search for a larger (`upper`) or smaller extreme of `log c`
    /// along trajectories near `start`, with a shrinking step. The search
    /// runs on a coarser time step; the final point is re-evaluated.
    fn local_extreme(&self, start: &[f64], value: f64, upper: bool, seed: u64) -> Result<f64> {
        let coarse = self.clone().with_step((10.0 * self.step).min(1e-2).max(self.step))?;
        let pick = |o: FlowOutcome| if upper { o.max_log_c } else { o.min_log_c };
        let better = |v: f64, w: f64| if upper { v > w } else { v < w };
        let mut rng = stream(seed, 0x10ca1);
        let mut best = start.to_vec();
        let mut best_v = pick(coarse.integrate(start, 1.0, None)?);
        let mut radius = 0.1;
        while radius > 1e-3 {
            let mut improved = false;
            for _ in 0..8 {
                let q = near_point(&mut rng, &best, radius);
                if self.fixes(&q) {
                    continue;
                }
                let v = pick(coarse.integrate(&q, 1.0, None)?);
                if better(v, best_v) {
                    best = q;
                    best_v = v;
                    improved = true;
                }
            }
            if !improved {
                radius *= 0.5;
            }
        }
        let v = pick(self.integrate(&best, 1.0, None)?);
        Ok(if better(v, value) { v } else { value })
    }

    pub(crate) fn support_samples(&self, samples: usize, seed: u64) -> Vec<Vec<f64>> {
        let hints = self.sample_hints();
        let rho = self.support_rho_bound().unwrap_or(10.0);
        let mut rng = stream(seed, 0xc0f);
        let dim = 2 * self.n;
        (0..samples)
            .map(|i| match i % 3 {
                0 => uniform_sphere(&mut rng, dim),
                1 if !hints.is_empty() => {
                    let (c, r) = &hints[i / 3 % hints.len()];
                    near_point(&mut rng, c, *r)
                }
                _ => {
                    let target = rho * rand::Rng::gen::<f64>(&mut rng);
                    ratio_sample(&mut rng, self.n, self.k, target)
                }
            })
            .filter(|p| !self.fixes(p))
            .collect()
    }
}

struct Workspace {
    grad: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        let z = vec![0.0; dim];
        Self { grad: z.clone(), k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// One RK4 step of `(theta, log c)`, renormalising `theta`; returns the
    /// increment of `log c`.
    fn rk4_step(&mut self, h: &ContactHamiltonian, p: &mut [f64], dt: f64) -> f64 {
        let (_, l1) = contact_field_raw(h, p, &mut self.grad, &mut self.k1);
        stage(&mut self.tmp, p, &self.k1, 0.5 * dt);
        let (_, l2) = contact_field_raw(h, &self.tmp, &mut self.grad, &mut self.k2);
        stage(&mut self.tmp, p, &self.k2, 0.5 * dt);
        let (_, l3) = contact_field_raw(h, &self.tmp, &mut self.grad, &mut self.k3);
        stage(&mut self.tmp, p, &self.k3, dt);
        let (_, l4) = contact_field_raw(h, &self.tmp, &mut self.grad, &mut self.k4);
        for i in 0..p.len() {
            p[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        normalize(p);
        dt / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
    }
}

fn stage(out: &mut [f64], p: &[f64], k: &[f64], h: f64) {
    for i in 0..p.len() {
        out[i] = p[i] + h * k[i];
    }
    normalize(out);
}

/// `(c_psi K) o psi^{-1}`, evaluated by flowing backwards:
/// `Ad_psi K(theta) = K(psi^{-1} theta) / c_{psi^{-1}}(theta)`.
#[derive(Debug, Clone)]
pub struct AdjointImage {
    inverse: ContactIsotopy,
    base: ContactHamiltonian,
}

impl AdjointImage {
    pub fn new(psi: &ContactIsotopy, base: ContactHamiltonian) -> Result<Self> {
        if psi.k() != base.k() || psi.n() != base.n() {
            return Err(Error::InvalidParameter("isotopy and Hamiltonian must share n and k".into()));
        }
        Ok(Self { inverse: psi.inverse(), base })
    }

    pub fn try_value(&self, theta: &[f64]) -> Result<f64> {
        if self.inverse.fixes(theta) {
            return Ok(self.base.value(theta));
        }
        let mut t = theta.to_vec();
        normalize(&mut t);
        let (pre, c_inv) = self.inverse.apply(&t)?;
        Ok(self.base.value(&pre) / c_inv)
    }
}

impl SphereFunction for AdjointImage {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        self.try_value(theta).unwrap_or(f64::NAN)
    }

    fn outside_support(&self, theta: &[f64]) -> bool {
        self.inverse.fixes(theta) && self.base.outside_support(theta)
    }

    fn support_rho_bound(&self) -> Option<f64> {
        let a = self.base.support_rho_bound()?;
        let b = self.inverse.support_rho_bound()?;
        Some(a.max(b))
    }

    fn sample_hints(&self) -> Vec<(Vec<f64>, f64)> {
        let mut h = self.base.sample_hints();
        h.extend(self.inverse.sample_hints());
        h
    }
}

/// `Ad_psi K = (c_psi K) o psi^{-1}`. When `K` carries support data, the
/// image gets data re-derived from the conformal bounds of `psi` and from
/// sampling (`samples` points).
pub fn adjoint_action(psi: &ContactIsotopy, k: &ContactHamiltonian, samples: usize, seed: u64) -> Result<ContactHamiltonian> {
    let image = AdjointImage::new(psi, k.clone())?;
    let out = ContactHamiltonian::new(Arc::new(image.clone()), k.n(), k.k())?;
    let Some(meta) = k.meta() else {
        return Ok(out);
    };
    let bounds = psi.conformal_bounds(samples, seed)?;
    let rho1 = match psi.support_rho_bound() {
        Some(b) => meta.rho1.max(b),
        None => return Err(Error::InvalidParameter("isotopy generators need a known support".into())),
    };
    // The inner region keeps its threshold; its minimum is re-sampled.
    let mut rng = stream(seed, 0xad);
    let mut rho0 = meta.rho0;
    for _ in 0..20 {
        let pts: Vec<Vec<f64>> = (0..samples)
            .map(|_| {
                let r = rho0 * rand::Rng::gen::<f64>(&mut rng);
                ratio_sample(&mut rng, k.n(), k.k(), r)
            })
            .collect();
        let vals: Result<Vec<f64>> = pts.par_iter().map(|p| image.try_value(p)).collect();
        let min = vals?.into_iter().fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            let new = SupportMeta { max: meta.max * bounds.max, rho1, rho0, min_inner: 0.9 * min };
            return out.with_meta(new);
        }
        rho0 *= 0.5;
    }
    Err(Error::NotInCone("adjoint image is not positive near the equator".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::lie_bracket;
    use crate::geometry::dot;

    fn gen_a() -> ContactHamiltonian {
        ContactHamiltonian::from_expression("0.6*bump(rho; 0.3, 1.5) * (x1 + 0.5*y1*x2 + 0.4)", 2, 1).unwrap()
    }

    fn gen_b() -> ContactHamiltonian {
        ContactHamiltonian::from_expression("0.5*ball(0.6, 0.2, -0.5, 0.3; 0.6) - 0.3*ball(-0.2, 0.7, 0.4, 0.1; 0.5)", 2, 1)
            .unwrap()
    }

    fn target() -> ContactHamiltonian {
        ContactHamiltonian::from_expression("bump(rho; 1, 3) * (1 + 0.5*x1^2 + 0.2*y1)", 2, 1).unwrap()
    }

    fn points(count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, 0);
        (0..count).map(|_| uniform_sphere(&mut rng, 4)).collect()
    }

    #[test]
    fn identity_flow() {
        let id = ContactIsotopy::identity(2, 1).unwrap();
        for p in points(20, 1) {
            let (q, c) = id.flow(&p, 1.0).unwrap();
            assert_eq!(q, p);
            assert_eq!(c.value, 1.0);
        }
    }

    #[test]
    fn flow_stays_on_sphere_and_round_trips() {
        let iso = ContactIsotopy::new(vec![gen_a(), gen_b()]).unwrap();
        let inv = iso.inverse();
        for p in points(50, 2) {
            let (q, c) = iso.apply(&p).unwrap();
            assert!((dot(&q, &q).sqrt() - 1.0).abs() < 1e-8);
            let (back, c_inv) = inv.apply(&q).unwrap();
            for i in 0..4 {
                assert!((back[i] - p[i]).abs() < 1e-6);
            }
            assert!((c * c_inv - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn reeb_invariant_hamiltonian_has_unit_factor() {
        // x1^2 + y1^2 is invariant under the Reeb flow, so dK(R) = 0.
        let h = ContactHamiltonian::from_expression("x1^2 + y1^2", 2, 1).unwrap();
        let iso = ContactIsotopy::autonomous(h);
        for p in points(20, 3) {
            let (_, c) = iso.flow(&p, 1.0).unwrap();
            assert!((c.value - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn flow_pulls_back_alpha_conformally() {
        // psi^* alpha = c alpha: compare alpha(dpsi v) with c alpha(v) using a
        // finite-difference Jacobian.
        let iso = ContactIsotopy::new(vec![gen_a(), gen_b()]).unwrap();
        let h = 1e-6;
        for p in points(20, 4) {
            let (q, c) = iso.apply(&p).unwrap();
            let mut rng = stream(40, 0);
            let v = uniform_sphere(&mut rng, 4);
            let a = dot(&v, &p);
            let v: Vec<f64> = v.iter().zip(&p).map(|(vi, pi)| vi - a * pi).collect();
            let shift = |s: f64| {
                let mut x: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi + s * vi).collect();
                normalize(&mut x);
                iso.apply(&x).unwrap().0
            };
            let (qp, qm) = (shift(h), shift(-h));
            let dv: Vec<f64> = qp.iter().zip(&qm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let lhs = crate::contact::alpha(&q, &dv);
            let rhs = c * crate::contact::alpha(&p, &v);
            assert!((lhs - rhs).abs() < 1e-5, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn adjoint_of_identity_and_linearity() {
        let id = ContactIsotopy::identity(2, 1).unwrap();
        let k = target();
        let ad = adjoint_action(&id, &k, 100, 0).unwrap();
        let iso = ContactIsotopy::new(vec![gen_a(), gen_b()]).unwrap();
        let ad1 = adjoint_action(&iso, &k, 100, 0).unwrap();
        let ad2 = adjoint_action(&iso, &k.scaled(2.5), 100, 0).unwrap();
        for p in points(100, 5) {
            assert_eq!(ad.value(&p), k.value(&p));
            assert!((ad2.value(&p) - 2.5 * ad1.value(&p)).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_matches_forward_definition() {
        // c_psi(psi^{-1} theta) K(psi^{-1} theta) with c recomputed forwards.
        let iso = ContactIsotopy::new(vec![gen_a(), gen_b()]).unwrap();
        let k = target();
        let ad = adjoint_action(&iso, &k, 100, 0).unwrap();
        let inv = iso.inverse();
        for p in points(100, 6) {
            let (pre, _) = inv.apply(&p).unwrap();
            let (_, c) = iso.apply(&pre).unwrap();
            assert!((ad.value(&p) - c * k.value(&pre)).abs() < 1e-6);
        }
    }

    #[test]
    fn adjoint_cocycle() {
        let psi1 = ContactIsotopy::autonomous(gen_a());
        let psi2 = ContactIsotopy::autonomous(gen_b());
        let k = target();
        // psi1 o psi2 runs psi2 first.
        let composed = psi2.then(&psi1).unwrap();
        let lhs = adjoint_action(&composed, &k, 50, 0).unwrap();
        let inner = adjoint_action(&psi2, &k, 50, 0).unwrap();
        let rhs = adjoint_action(&psi1, &inner, 50, 0).unwrap();
        for p in points(100, 7) {
            assert!((lhs.value(&p) - rhs.value(&p)).abs() < 1e-6);
        }
    }

    #[test]
    fn adjoint_derivative_is_minus_bracket() {
        let h = gen_a();
        let k = target();
        let dt = 1e-3;
        let fwd = ContactIsotopy::autonomous(h.scaled(dt)).with_step(dt).unwrap();
        let bwd = ContactIsotopy::autonomous(h.scaled(-dt)).with_step(dt).unwrap();
        let (adf, adb) = (AdjointImage::new(&fwd, k.clone()).unwrap(), AdjointImage::new(&bwd, k.clone()).unwrap());
        for p in points(50, 8) {
            let d = (adf.value(&p) - adb.value(&p)) / (2.0 * dt);
            let b = lie_bracket(&h, &k, &p, 1e-5).unwrap();
            assert!((d + b).abs() < 2e-4, "{d} vs {b}");
        }
    }

    #[test]
    fn adjoint_meta_is_consistent() {
        let k = ContactHamiltonian::from_expression("0.5*bump(rho;1,3) + 0.5*bump(rho;1,3)*x1^2", 2, 1)
            .unwrap()
            .with_meta(SupportMeta { max: 1.0, rho1: 3.0, rho0: 0.1, min_inner: 0.5 })
            .unwrap();
        let iso = ContactIsotopy::new(vec![gen_a().scaled(0.3), gen_b().scaled(0.3)]).unwrap();
        let ad = adjoint_action(&iso, &k, 1000, 1).unwrap();
        let audit = ad.audit(2000, 2).unwrap();
        assert!(audit.ok, "{audit:?}");
    }
}
