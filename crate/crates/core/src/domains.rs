//! Unbounded star-shaped domains around `Pi_k`: hyperboloids `V_k^{a,b}`,
//! star domains `V(H) = {r H(theta) < 1}`, and the bounded integrable
//! domains `V_C = {G < 1}` exhausting a hyperboloid.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contact::{ContactHamiltonian, SupportMeta};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{check_k, dot, norm_sq, split_uv};
use crate::sampling::{stream, uniform_box, uniform_sphere};
use crate::well::SmoothedWell;

fn check_hyperboloid_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::IndexOutOfRange(format!("k = {k} must satisfy 1 <= k < n = {n}")));
    }
    Ok(())
}

fn check_len(n: usize, z: &[f64]) -> Result<()> {
    if z.len() != 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, got: z.len() });
    }
    Ok(())
}

/// `V_k^{a,b} = {u/a^2 - v/b^2 < 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperboloid {
    pub n: usize,
    pub k: usize,
    #[serde(with = "crate::num17")]
    pub a: f64,
    #[serde(with = "crate::num17")]
    pub b: f64,
}

impl Hyperboloid {
    pub fn new(n: usize, k: usize, a: f64, b: f64) -> Result<Self> {
        check_hyperboloid_k(n, k)?;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("hyperboloid needs a, b > 0, got a = {a}, b = {b}")));
        }
        Ok(Self { n, k, a, b })
    }

    /// `u/a^2 - v/b^2`; the domain is where this is below 1.
    pub fn level(&self, z: &[f64]) -> f64 {
        let (u, v) = split_uv(z, self.k);
        u / (self.a * self.a) - v / (self.b * self.b)
    }

    pub fn contains(&self, z: &[f64]) -> Result<bool> {
        check_len(self.n, z)?;
        Ok(self.level(z) < 1.0)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.n, self.k, s * self.a, s * self.b)
    }
}

/// `V(H) = {(r, theta) : r H(theta) < 1}` for a Hamiltonian of the cone.
#[derive(Debug, Clone)]
pub struct StarDomain {
    h: ContactHamiltonian,
}

impl StarDomain {
    pub fn new(h: ContactHamiltonian) -> Result<Self> {
        h.require_meta()?;
        Ok(Self { h })
    }

    pub fn hamiltonian(&self) -> &ContactHamiltonian {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn k(&self) -> usize {
        self.h.k()
    }

    pub fn contains(&self, z: &[f64]) -> Result<bool> {
        check_len(self.n(), z)?;
        let r = norm_sq(z);
        if r == 0.0 {
            return Ok(true);
        }
        let s = r.sqrt();
        let theta: Vec<f64> = z.iter().map(|c| c / s).collect();
        Ok(r * self.h.value(&theta) < 1.0)
    }

    /// `s V(H) = V(H / s^2)`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("scale {s} must be positive")));
        }
        Ok(Self { h: self.h.scaled(1.0 / (s * s)) })
    }
}

/// `V_C = {G < 1}` with
/// `G = sum_{j<=n-k} (x_j^2 + y_j^2)/a^2 + sum_{j>n-k} (x_j^2/a^2 + g(y_j)/b^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrableDomain {
    pub n: usize,
    pub k: usize,
    #[serde(with = "crate::num17")]
    pub a: f64,
    #[serde(with = "crate::num17")]
    pub b: f64,
    pub well: SmoothedWell,
}

impl IntegrableDomain {
    pub fn new(n: usize, k: usize, a: f64, b: f64, well: SmoothedWell) -> Result<Self> {
        Hyperboloid::new(n, k, a, b)?;
        Ok(Self { n, k, a, b, well })
    }

    pub fn build(n: usize, k: usize, a: f64, b: f64, c: f64, eps: f64) -> Result<Self> {
        Self::new(n, k, a, b, SmoothedWell::build(c, eps)?)
    }

    pub fn hyperboloid(&self) -> Hyperboloid {
        Hyperboloid { n: self.n, k: self.k, a: self.a, b: self.b }
    }

    /// The planar Hamiltonian `H_C(x, y) = x^2/a^2 + g(y)/b^2`.
    pub fn planar(&self, x: f64, y: f64) -> f64 {
        x * x / (self.a * self.a) + self.well.value(y) / (self.b * self.b)
    }

    pub fn planar_gradient(&self, x: f64, y: f64) -> (f64, f64) {
        (2.0 * x / (self.a * self.a), self.well.derivative(y) / (self.b * self.b))
    }

    /// The integrals `G_1..G_n`, one per coordinate pair.
    pub fn integrals(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let a2 = self.a * self.a;
        (0..n)
            .map(|j| {
                if j < n - self.k {
                    (z[j] * z[j] + z[n + j] * z[n + j]) / a2
                } else {
                    self.planar(z[j], z[n + j])
                }
            })
            .collect()
    }

    pub fn defining_function(&self, z: &[f64]) -> f64 {
        self.integrals(z).iter().sum()
    }

    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let a2 = self.a * self.a;
        let mut g = vec![0.0; 2 * n];
        for j in 0..n {
            if j < n - self.k {
                g[j] = 2.0 * z[j] / a2;
                g[n + j] = 2.0 * z[n + j] / a2;
            } else {
                let (gx, gy) = self.planar_gradient(z[j], z[n + j]);
                g[j] = gx;
                g[n + j] = gy;
            }
        }
        g
    }

    pub fn contains(&self, z: &[f64]) -> Result<bool> {
        check_len(self.n, z)?;
        Ok(self.defining_function(z) < 1.0)
    }

    /// `Z.G - 1` at a boundary point, `Z = z/2`.
    pub fn transversality_margin(&self, z: &[f64]) -> Result<f64> {
        check_len(self.n, z)?;
        let g = self.defining_function(z);
        if (g - 1.0).abs() >= 1e-8 {
            return Err(Error::InvalidParameter(format!("point is not on the boundary: G = {g}")));
        }
        Ok(0.5 * dot(z, &self.gradient(z)) - 1.0)
    }

    /// The boundary point on the ray through `dir`, by bisection in the ray
    /// parameter until `|G - 1| <= 1e-12`. `t -> G(t dir)` is increasing
    /// because `(t/2) g' >= g`, so the crossing is unique.
    pub fn boundary_point(&self, dir: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, dir)?;
        if norm_sq(dir) == 0.0 {
            return Err(Error::OriginExcluded);
        }
        let at = |t: f64| -> Vec<f64> { dir.iter().map(|d| d * t).collect() };
        let mut hi = 1.0;
        let mut grow = 0;
        while self.defining_function(&at(hi)) < 1.0 {
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(Error::RootFinding("G does not exceed 1 along the ray".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let g = self.defining_function(&at(mid));
            if (g - 1.0).abs() <= 1e-12 {
                return Ok(at(mid));
            }
            if g < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        let p = at(0.5 * (lo + hi));
        let g = self.defining_function(&p);
        if (g - 1.0).abs() < 1e-10 {
            Ok(p)
        } else {
            Err(Error::RootFinding(format!("bisection stalled at G = {g}")))
        }
    }

    /// `s V_C`: all lengths scale by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("scale {s} must be positive")));
        }
        Self::new(self.n, self.k, s * self.a, s * self.b, self.well.scaled(s)?)
    }
}

/// A domain of any of the supported kinds.
#[derive(Debug, Clone)]
pub enum Domain {
    Hyperboloid(Hyperboloid),
    Star(StarDomain),
    Integrable(IntegrableDomain),
}

impl Domain {
    pub fn n(&self) -> usize {
        match self {
            Domain::Hyperboloid(h) => h.n,
            Domain::Star(s) => s.n(),
            Domain::Integrable(d) => d.n,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Domain::Hyperboloid(h) => h.k,
            Domain::Star(s) => s.k(),
            Domain::Integrable(d) => d.k,
        }
    }

    pub fn contains(&self, z: &[f64]) -> Result<bool> {
        match self {
            Domain::Hyperboloid(h) => h.contains(z),
            Domain::Star(s) => s.contains(z),
            Domain::Integrable(d) => d.contains(z),
        }
    }
}

/// The image of `V` under `z -> s z`.
pub fn scale_domain(v: &Domain, s: f64) -> Result<Domain> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale {s} must be positive")));
    }
    Ok(match v {
        Domain::Hyperboloid(h) => Domain::Hyperboloid(h.scaled(s)?),
        Domain::Star(d) => Domain::Star(d.scaled(s)?),
        Domain::Integrable(d) => Domain::Integrable(d.scaled(s)?),
    })
}

/// Hyperboloids certifying `V_k^{a,b} ⊂ V(H) ⊂ V_k^{a',b'}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichCertificate {
    pub inner: Hyperboloid,
    pub outer: Hyperboloid,
    pub meta: SupportMeta,
    #[serde(with = "crate::num17")]
    pub t: f64,
}

impl SandwichCertificate {
    /// The four defining inequalities, as margins that must be positive:
    /// `T - a^2`, `(b/a)^2 - rho1 T/(T - a^2)`, `rho0 - (b'/a')^2`, `a'^2 - 1/m`.
    pub fn margins(&self) -> [f64; 4] {
        let (a2, b2) = (self.inner.a * self.inner.a, self.inner.b * self.inner.b);
        let (ap2, bp2) = (self.outer.a * self.outer.a, self.outer.b * self.outer.b);
        let t = self.t;
        [
            t - a2,
            b2 / a2 - self.meta.rho1 * t / (t - a2),
            self.meta.rho0 - bp2 / ap2,
            ap2 - 1.0 / self.meta.min_inner,
        ]
    }

    pub fn check(&self) -> Result<()> {
        let m = self.margins();
        if m.iter().all(|v| *v >= 1e-9) {
            Ok(())
        } else {
            Err(Error::Infeasible(format!("sandwich margins {m:?} not all positive")))
        }
    }
}

/// `T = 1/(M(1+rho1))`, `a^2 = T/2`, `b^2 = 4 rho1 a^2`, `a'^2 = 2/m`,
/// `b'^2 = a'^2 rho0 / 2`.
pub fn sandwich_solve(h: &ContactHamiltonian) -> Result<SandwichCertificate> {
    let meta = *h.require_meta()?;
    meta.validate()?;
    check_hyperboloid_k(h.n(), h.k())?;
    let t = 1.0 / (meta.max * (1.0 + meta.rho1));
    let a2 = 0.5 * t;
    let b2 = 4.0 * meta.rho1 * a2;
    let ap2 = 2.0 / meta.min_inner;
    let bp2 = 0.5 * ap2 * meta.rho0;
    if !(bp2 > 0.0) {
        return Err(Error::Infeasible("rho0 must be positive for an outer hyperboloid".into()));
    }
    let cert = SandwichCertificate {
        inner: Hyperboloid::new(h.n(), h.k(), a2.sqrt(), b2.sqrt())?,
        outer: Hyperboloid::new(h.n(), h.k(), ap2.sqrt(), bp2.sqrt())?,
        meta,
        t,
    };
    cert.check()?;
    Ok(cert)
}

/// Monte-Carlo check of both inclusions of a sandwich.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichAudit {
    pub samples: usize,
    /// Samples in the inner hyperboloid (each one is tested against `V(H)`).
    pub inner_tested: usize,
    /// Samples in `V(H)` (each one is tested against the outer hyperboloid).
    pub star_tested: usize,
    pub inner_violations: usize,
    pub outer_violations: usize,
    pub ok: bool,
}

/// Samples uniformly in cubes of half-widths `a`, `a'` and `4 max(a', b')`
/// (cycling through the three) and counts points of `V^{a,b}` outside `V(H)`
/// and points of `V(H)` outside `V^{a',b'}`.
pub fn audit_sandwich(d: &StarDomain, cert: &SandwichCertificate, samples: usize, seed: u64) -> Result<SandwichAudit> {
    let dim = 2 * d.n();
    let scales = [cert.inner.a, cert.outer.a, 4.0 * cert.outer.a.max(cert.outer.b)];
    let chunks = 32usize;
    let per = samples.div_ceil(chunks);
    let parts: Result<Vec<[usize; 4]>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c as u64);
            let mut acc = [0usize; 4];
            for i in 0..per {
                let z = uniform_box(&mut rng, dim, scales[(c * per + i) % 3]);
                let in_star = d.contains(&z)?;
                if cert.inner.contains(&z)? {
                    acc[0] += 1;
                    if !in_star {
                        acc[2] += 1;
                    }
                }
                if in_star {
                    acc[1] += 1;
                    if !cert.outer.contains(&z)? {
                        acc[3] += 1;
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let tot = parts?.iter().fold([0usize; 4], |mut t, p| {
        for i in 0..4 {
            t[i] += p[i];
        }
        t
    });
    Ok(SandwichAudit {
        samples: per * chunks,
        inner_tested: tot[0],
        star_tested: tot[1],
        inner_violations: tot[2],
        outer_violations: tot[3],
        ok: tot[2] == 0 && tot[3] == 0,
    })
}

/// Sampled checks of an integrable domain: `G` grows along rays,
/// `H_C >= x^2/a^2 - y^2/b^2`, and `V_C ⊂ V_k^{a,b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrableAudit {
    pub rays: usize,
    pub unbounded_rays: usize,
    pub planar_grid: usize,
    pub planar_violations: usize,
    pub interior_samples: usize,
    pub containment_violations: usize,
    pub ok: bool,
}

pub fn audit_integrable(d: &IntegrableDomain, samples: usize, seed: u64) -> Result<IntegrableAudit> {
    let dim = 2 * d.n;
    let mut rng = stream(seed, 0);
    let rays = 1000.min(samples);
    let mut unbounded = 0;
    for _ in 0..rays {
        let dir = uniform_sphere(&mut rng, dim);
        if d.boundary_point(&dir).is_err() {
            unbounded += 1;
        }
    }
    let side = 100usize;
    let (xr, yr) = (3.0 * d.a, 3.0 * d.well.c().max(d.b));
    let mut planar_violations = 0;
    for i in 0..side {
        for j in 0..side {
            let x = -xr + 2.0 * xr * i as f64 / (side - 1) as f64;
            let y = -yr + 2.0 * yr * j as f64 / (side - 1) as f64;
            let lower = x * x / (d.a * d.a) - y * y / (d.b * d.b);
            if d.planar(x, y) < lower - 1e-12 * (1.0 + lower.abs()) {
                planar_violations += 1;
            }
        }
    }
    // Interior samples: uniform in a box around V_C, kept when inside.
    // Each last-k pair contributes at least -C^2/b^2, which bounds every coordinate.
    let (a2, b2, c2, k) = (d.a * d.a, d.b * d.b, d.well.c().powi(2), d.k as f64);
    let reach = 1.01 * (a2 * (1.0 + k * c2 / b2)).max((b2 + (k + 3.0) * c2) / 3.0).sqrt();
    let chunks = 32usize;
    let per = samples.div_ceil(chunks);
    let parts: Result<Vec<(usize, usize)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, 1 + c as u64);
            let mut acc = (0, 0);
            for _ in 0..per {
                let z = uniform_box(&mut rng, dim, reach);
                if d.contains(&z)? {
                    acc.0 += 1;
                    if !d.hyperboloid().contains(&z)? {
                        acc.1 += 1;
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let (inside, bad) = parts?.iter().fold((0, 0), |t, p| (t.0 + p.0, t.1 + p.1));
    Ok(IntegrableAudit {
        rays,
        unbounded_rays: unbounded,
        planar_grid: side * side,
        planar_violations,
        interior_samples: inside,
        containment_violations: bad,
        ok: unbounded == 0 && planar_violations == 0 && bad == 0,
    })
}

/// Serialized form of a domain, tagged by `type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainDoc {
    Hyperboloid {
        n: usize,
        k: usize,
        #[serde(with = "crate::num17")]
        a: f64,
        #[serde(with = "crate::num17")]
        b: f64,
    },
    Star {
        n: usize,
        k: usize,
        hamiltonian: String,
        meta: SupportMeta,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        certificate: Option<SandwichCertificate>,
    },
    Integrable {
        n: usize,
        k: usize,
        #[serde(with = "crate::num17")]
        a: f64,
        #[serde(with = "crate::num17")]
        b: f64,
        well: SmoothedWell,
    },
}

impl Domain {
    /// The serialized form; star domains carry their sandwich if it exists.
    pub fn to_doc(&self) -> Result<DomainDoc> {
        Ok(match self {
            Domain::Hyperboloid(h) => DomainDoc::Hyperboloid { n: h.n, k: h.k, a: h.a, b: h.b },
            Domain::Star(s) => {
                let h = s.hamiltonian();
                let hamiltonian = h
                    .expression()
                    .ok_or_else(|| Error::InvalidParameter("only expression Hamiltonians serialize".into()))?;
                DomainDoc::Star {
                    n: h.n(),
                    k: h.k(),
                    hamiltonian,
                    meta: *h.require_meta()?,
                    certificate: sandwich_solve(h).ok(),
                }
            }
            Domain::Integrable(d) => DomainDoc::Integrable { n: d.n, k: d.k, a: d.a, b: d.b, well: d.well },
        })
    }

    pub fn from_doc(doc: &DomainDoc) -> Result<Self> {
        Ok(match doc {
            DomainDoc::Hyperboloid { n, k, a, b } => Domain::Hyperboloid(Hyperboloid::new(*n, *k, *a, *b)?),
            DomainDoc::Star { n, k, hamiltonian, meta, .. } => {
                check_k(*n, *k)?;
                let h = ContactHamiltonian::new(Arc::new(Expr::parse(hamiltonian, *n, *k)?), *n, *k)?.with_meta(*meta)?;
                Domain::Star(StarDomain::new(h)?)
            }
            DomainDoc::Integrable { n, k, a, b, well } => Domain::Integrable(IntegrableDomain::new(*n, *k, *a, *b, *well)?),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_doc()?).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DomainDoc = serde_json::from_str(text).map_err(|e| Error::Parse { pos: 0, msg: e.to_string() })?;
        Self::from_doc(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const WORKED: &str = "0.5*bump(rho;1,3) + 0.5*bump(rho;1,3)*x1^2";

    fn worked() -> ContactHamiltonian {
        ContactHamiltonian::from_expression(WORKED, 2, 1)
            .unwrap()
            .with_meta(SupportMeta { max: 1.0, rho1: 3.0, rho0: 0.1, min_inner: 0.5 })
            .unwrap()
    }

    #[test]
    fn hyperboloid_membership() {
        let v = Hyperboloid::new(2, 1, 1.0, 1.0).unwrap();
        assert!(v.contains(&[0.0; 4]).unwrap());
        assert!(!v.contains(&[2.0, 0.0, 0.0, 0.0]).unwrap());
        assert!(v.contains(&[2.0, 0.0, 0.0, 2.0]).unwrap());
        assert!(Hyperboloid::new(2, 2, 1.0, 1.0).is_err());
        assert!(Hyperboloid::new(2, 1, 0.0, 1.0).is_err());
    }

    #[test]
    fn star_membership() {
        let h = ContactHamiltonian::from_expression("0.5*bump(rho; 1, 3)", 2, 1)
            .unwrap()
            .with_meta(SupportMeta { max: 0.5, rho1: 3.0, rho0: 0.5, min_inner: 0.5 })
            .unwrap();
        let d = StarDomain::new(h).unwrap();
        // H = 0.5 on the equator: the threshold is r = 2.
        assert!(d.contains(&[1.0, 0.0, 0.0, 0.0]).unwrap());
        assert!(!d.contains(&[3f64.sqrt(), 0.0, 0.0, 0.0]).unwrap());
        // H = 0 near Pi_k: the whole ray is inside.
        assert!(d.contains(&[0.0, 0.0, 0.0, 1e6]).unwrap());
        assert!(d.contains(&[0.0; 4]).unwrap());
    }

    #[test]
    fn star_scaling_matches_membership() {
        let d = StarDomain::new(worked()).unwrap();
        let s = 1.7;
        let ds = d.scaled(s).unwrap();
        let mut rng = stream(21, 0);
        for _ in 0..1000 {
            let z = uniform_box(&mut rng, 4, 3.0);
            let sz: Vec<f64> = z.iter().map(|c| c * s).collect();
            assert_eq!(d.contains(&z).unwrap(), ds.contains(&sz).unwrap());
        }
    }

    #[test]
    fn worked_sandwich() {
        let c = sandwich_solve(&worked()).unwrap();
        assert!((c.t - 0.25).abs() < 1e-15);
        assert!((c.inner.a.powi(2) - 0.125).abs() < 1e-15);
        assert!((c.inner.b.powi(2) - 1.5).abs() < 1e-15);
        assert!((c.outer.a.powi(2) - 4.0).abs() < 1e-14);
        assert!((c.outer.b.powi(2) - 0.2).abs() < 1e-15);
        // Re-check the four inequalities by hand.
        let (a2, b2, ap2, bp2) = (0.125, 1.5, 4.0, 0.2);
        assert!(a2 < 0.25 && b2 / a2 > 3.0 * 0.25 / (0.25 - a2));
        assert!(bp2 / ap2 < 0.1 && ap2 > 1.0 / 0.5);
        assert!(c.margins().iter().all(|m| *m > 1e-9));
    }

    #[test]
    fn sandwich_is_homogeneous() {
        let c1 = sandwich_solve(&worked()).unwrap();
        let c4 = sandwich_solve(&worked().scaled(4.0)).unwrap();
        assert!((c4.t - c1.t / 4.0).abs() < 1e-15);
        assert!((c4.inner.a - c1.inner.a / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sandwich_audit_finds_no_violation() {
        let h = worked();
        let c = sandwich_solve(&h).unwrap();
        let a = audit_sandwich(&StarDomain::new(h).unwrap(), &c, 20_000, 0).unwrap();
        assert!(a.ok, "{a:?}");
        assert!(a.inner_tested > 100 && a.star_tested > 100);
    }

    #[test]
    fn sandwich_needs_positive_minimum() {
        let h = ContactHamiltonian::from_expression(WORKED, 2, 1).unwrap();
        assert!(matches!(sandwich_solve(&h), Err(Error::NotInCone(_))));
    }

    #[test]
    fn transversality_regimes() {
        let d = IntegrableDomain::build(2, 1, 1.0, 1.0, 3.0, 0.01).unwrap();
        // y2 small: last pair in the -y^2 regime, margin exactly 0.
        let p = d.boundary_point(&[1.0, 0.0, 0.0, 0.5]).unwrap();
        assert!(d.transversality_margin(&p).unwrap().abs() < 1e-9);
        // Along the y2 axis the boundary sits on the outer branch 3y^2 - 4C^2.
        let p = d.boundary_point(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(p[3] > 3.0);
        assert!(d.transversality_margin(&p).unwrap() > 0.1);
        assert!(d.transversality_margin(&[0.1, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn random_boundary_points_are_transverse() {
        let d = IntegrableDomain::build(3, 2, 1.3, 0.7, 2.0, 0.01).unwrap();
        let mut rng = stream(22, 0);
        for _ in 0..2000 {
            let p = d.boundary_point(&uniform_sphere(&mut rng, 6)).unwrap();
            assert!(d.transversality_margin(&p).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn integrable_domain_audit() {
        let d = IntegrableDomain::build(2, 1, 1.0, 1.0, 3.0, 0.01).unwrap();
        let a = audit_integrable(&d, 20_000, 1).unwrap();
        assert!(a.ok, "{a:?}");
        assert!(a.interior_samples > 100);
    }

    #[test]
    fn scaling() {
        let v = Domain::Hyperboloid(Hyperboloid::new(2, 1, 1.0, 2.0).unwrap());
        match scale_domain(&v, 3.0).unwrap() {
            Domain::Hyperboloid(h) => assert_eq!((h.a, h.b), (3.0, 6.0)),
            _ => unreachable!(),
        }
        match scale_domain(&v, 1.0).unwrap() {
            Domain::Hyperboloid(h) => assert_eq!((h.a, h.b), (1.0, 2.0)),
            _ => unreachable!(),
        }
        let mut rng = stream(23, 0);
        let doms = [
            v,
            Domain::Star(StarDomain::new(worked()).unwrap()),
            Domain::Integrable(IntegrableDomain::build(2, 1, 1.0, 1.0, 3.0, 0.01).unwrap()),
        ];
        for d in &doms {
            let s = 1.9;
            let ds = scale_domain(d, s).unwrap();
            for _ in 0..1000 {
                let z = uniform_box(&mut rng, 4, 4.0);
                let sz: Vec<f64> = z.iter().map(|c| c * s).collect();
                let (a, b) = (d.contains(&z).unwrap(), ds.contains(&sz).unwrap());
                if a != b {
                    // Only tolerated within rounding of the boundary.
                    if let Domain::Integrable(di) = d {
                        assert!((di.defining_function(&z) - 1.0).abs() < 1e-9);
                    } else {
                        panic!("membership differs at {z:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn json_round_trips() {
        let doms = [
            Domain::Hyperboloid(Hyperboloid::new(3, 1, 0.1 + 0.2, 1.0 / 3.0).unwrap()),
            Domain::Star(StarDomain::new(worked().scaled(0.3)).unwrap()),
            Domain::Integrable(IntegrableDomain::build(2, 1, 1.0, 0.7, 3.0, 0.01).unwrap()),
        ];
        for d in &doms {
            let text = d.to_json().unwrap();
            let back = Domain::from_json(&text).unwrap();
            assert_eq!(back.to_doc().unwrap(), d.to_doc().unwrap());
            assert_eq!(back.to_json().unwrap(), text);
        }
        assert!(Domain::from_json(r#"{"type":"hyperboloid","n":2,"k":1,"a":"1","b":"1","extra":1}"#).is_err());
        assert!(Domain::from_json(r#"{"type":"sphere"}"#).is_err());
    }
}
