use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{angle_ratio, check_k, normalize};
use crate::sampling::{near_point, stream, uniform_sphere};

/// A function on the unit sphere `S^{2n-1}`, evaluated through some extension
/// to a neighbourhood of the sphere.
pub trait SphereFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, theta: &[f64]) -> f64;

    /// Ambient gradient of the extension. Only its tangential part is used.
    fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        let h = 1e-6;
        let mut p = theta.to_vec();
        for i in 0..theta.len() {
            p[i] = theta[i] + h;
            let fp = self.value(&p);
            p[i] = theta[i] - h;
            let fm = self.value(&p);
            p[i] = theta[i];
            out[i] = (fp - fm) / (2.0 * h);
        }
    }

    fn value_and_gradient(&self, theta: &[f64], out: &mut [f64]) -> f64 {
        self.gradient(theta, out);
        self.value(theta)
    }

    /// True when `theta` lies outside the open support, where the contact
    /// field vanishes and flows are stationary. `false` is always safe.
    fn outside_support(&self, _theta: &[f64]) -> bool {
        false
    }

    /// An angle ratio beyond which the function vanishes, if known.
    fn support_rho_bound(&self) -> Option<f64> {
        None
    }

    /// Spherical caps `(center, chordal radius)` worth oversampling.
    fn sample_hints(&self) -> Vec<(Vec<f64>, f64)> {
        Vec::new()
    }

    /// Source text, when the function came from an expression.
    fn expression(&self) -> Option<String> {
        None
    }
}

/// Declared extrema and support data of a nonnegative Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportMeta {
    /// Upper bound for the global maximum.
    #[serde(with = "crate::num17")]
    pub max: f64,
    /// The function vanishes where the angle ratio is at least `rho1`.
    #[serde(with = "crate::num17")]
    pub rho1: f64,
    #[serde(with = "crate::num17")]
    pub rho0: f64,
    /// Lower bound for the function on `{angle_ratio <= rho0}`.
    #[serde(with = "crate::num17")]
    pub min_inner: f64,
}

impl SupportMeta {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.max, self.rho1, self.rho0, self.min_inner].iter().all(|v| v.is_finite());
        if !finite || self.rho0 < 0.0 || self.rho0 >= self.rho1 || self.min_inner > self.max {
            return Err(Error::InvalidParameter(format!("inconsistent support data {self:?}")));
        }
        if self.min_inner <= 0.0 {
            return Err(Error::NotInCone(format!("minimum {} near the equator is not positive", self.min_inner)));
        }
        Ok(())
    }
}

/// Outcome of checking declared support data against samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaAudit {
    pub samples: usize,
    #[serde(with = "crate::num17")]
    pub max_seen: f64,
    #[serde(with = "crate::num17")]
    pub min_inner_seen: f64,
    #[serde(with = "crate::num17")]
    pub min_seen: f64,
    /// Samples with angle ratio `>= rho1` and a nonzero value.
    pub support_violations: usize,
    pub ok: bool,
}

/// A (time-independent) contact Hamiltonian on `S^{2n-1}`, excluding `Pi_k`.
#[derive(Clone)]
pub struct ContactHamiltonian {
    func: Arc<dyn SphereFunction>,
    n: usize,
    k: usize,
    scale: f64,
    meta: Option<SupportMeta>,
}

impl fmt::Debug for ContactHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContactHamiltonian")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("scale", &self.scale)
            .field("meta", &self.meta)
            .field("func", &self.func)
            .finish()
    }
}

#[derive(Debug)]
struct Zero(usize);

impl SphereFunction for Zero {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, _: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
    }
    fn outside_support(&self, _: &[f64]) -> bool {
        true
    }
    fn support_rho_bound(&self) -> Option<f64> {
        Some(0.0)
    }
    fn expression(&self) -> Option<String> {
        Some("0".into())
    }
}

impl ContactHamiltonian {
    pub fn new(func: Arc<dyn SphereFunction>, n: usize, k: usize) -> Result<Self> {
        check_k(n, k)?;
        if func.dim() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: func.dim() });
        }
        Ok(Self { func, n, k, scale: 1.0, meta: None })
    }

    pub fn from_expression(text: &str, n: usize, k: usize) -> Result<Self> {
        Self::new(Arc::new(Expr::parse(text, n, k)?), n, k)
    }

    pub fn zero(n: usize, k: usize) -> Result<Self> {
        Self::new(Arc::new(Zero(2 * n)), n, k)
    }

    /// Attaches declared support data; it must describe a member of the cone.
    pub fn with_meta(mut self, meta: SupportMeta) -> Result<Self> {
        meta.validate()?;
        self.meta = Some(meta);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn meta(&self) -> Option<&SupportMeta> {
        self.meta.as_ref()
    }

    /// Support data, or an error naming why this is not a cone member.
    pub fn require_meta(&self) -> Result<&SupportMeta> {
        self.meta.as_ref().ok_or_else(|| Error::NotInCone("no support data declared".into()))
    }

    pub fn function(&self) -> &Arc<dyn SphereFunction> {
        &self.func
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale
    }

    /// Expression text including the scale factor, if available.
    pub fn expression(&self) -> Option<String> {
        let e = self.func.expression()?;
        Some(if self.scale == 1.0 { e } else { format!("{:?} * ({e})", self.scale) })
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        self.scale * self.func.value(theta)
    }

    pub fn value_and_gradient(&self, theta: &[f64], out: &mut [f64]) -> f64 {
        let v = self.func.value_and_gradient(theta, out);
        out.iter_mut().for_each(|g| *g *= self.scale);
        self.scale * v
    }

    pub fn outside_support(&self, theta: &[f64]) -> bool {
        self.scale == 0.0 || self.func.outside_support(theta)
    }

    pub fn sample_hints(&self) -> Vec<(Vec<f64>, f64)> {
        self.func.sample_hints()
    }

    pub fn support_rho_bound(&self) -> Option<f64> {
        if self.scale == 0.0 {
            return Some(0.0);
        }
        self.meta.map(|m| m.rho1).or_else(|| self.func.support_rho_bound())
    }

    /// `s * K`. Support data survive positive scaling.
    pub fn scaled(&self, s: f64) -> Self {
        let meta = if s > 0.0 {
            self.meta.map(|m| SupportMeta { max: m.max * s, min_inner: m.min_inner * s, ..m })
        } else {
            None
        };
        Self { func: self.func.clone(), n: self.n, k: self.k, scale: self.scale * s, meta }
    }

    /// Checks the declared support data on `samples` points: uniform ones,
    /// points near the equator `{angle_ratio <= rho0}`, points beyond `rho1`
    /// and points near the declared sample hints.
    pub fn audit(&self, samples: usize, seed: u64) -> Result<MetaAudit> {
        let meta = *self.require_meta()?;
        let dim = self.dim();
        let chunks = 16usize;
        let per = samples.div_ceil(chunks);
        let hints = self.sample_hints();
        let partial: Vec<(f64, f64, f64, usize)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream(seed, c as u64);
                let mut max_seen = f64::NEG_INFINITY;
                let mut min_inner = f64::INFINITY;
                let mut min_seen = f64::INFINITY;
                let mut viol = 0usize;
                for i in 0..per {
                    let theta = match i % 4 {
                        0 => uniform_sphere(&mut rng, dim),
                        1 => {
                            let rho = meta.rho0 * rng_unit(&mut rng);
                            ratio_sample(&mut rng, self.n, self.k, rho)
                        }
                        2 => {
                            let rho = meta.rho1 * (1.0 + 4.0 * rng_unit(&mut rng));
                            ratio_sample(&mut rng, self.n, self.k, rho)
                        }
                        _ if !hints.is_empty() => {
                            let (c, r) = &hints[i / 4 % hints.len()];
                            near_point(&mut rng, c, *r)
                        }
                        _ => uniform_sphere(&mut rng, dim),
                    };
                    let val = self.value(&theta);
                    let rho = angle_ratio(&theta, self.k);
                    max_seen = max_seen.max(val);
                    min_seen = min_seen.min(val);
                    if rho <= meta.rho0 {
                        min_inner = min_inner.min(val);
                    }
                    if rho >= meta.rho1 && val != 0.0 {
                        viol += 1;
                    }
                }
                (max_seen, min_inner, min_seen, viol)
            })
            .collect();
        let max_seen = partial.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let min_inner_seen = partial.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let min_seen = partial.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
        let support_violations = partial.iter().map(|p| p.3).sum();
        let ok = support_violations == 0
            && min_seen >= -1e-12
            && max_seen <= meta.max + 1e-6
            && min_inner_seen >= meta.min_inner - 1e-6;
        Ok(MetaAudit { samples: per * chunks, max_seen, min_inner_seen, min_seen, support_violations, ok })
    }
}

fn rng_unit<R: rand::Rng>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

/// Random unit vector with angle ratio exactly `rho` (`+inf` allowed).
pub(crate) fn ratio_sample<R: rand::Rng>(rng: &mut R, n: usize, k: usize, rho: f64) -> Vec<f64> {
    let dim = 2 * n;
    let mut theta = uniform_sphere(rng, dim);
    let v_idx = |i: usize| i >= n + (n - k);
    let (u, v) = crate::geometry::split_uv(&theta, k);
    let v_target = if rho.is_infinite() { 1.0 } else { rho / (1.0 + rho) };
    let su = ((1.0 - v_target) / u).sqrt();
    let sv = (v_target / v).sqrt();
    for (i, t) in theta.iter_mut().enumerate() {
        *t *= if v_idx(i) { sv } else { su };
    }
    normalize(&mut theta);
    theta
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str = "0.5*bump(rho;1,3) + 0.5*bump(rho;1,3)*x1^2";

    fn worked() -> ContactHamiltonian {
        ContactHamiltonian::from_expression(WORKED, 2, 1)
            .unwrap()
            .with_meta(SupportMeta { max: 1.0, rho1: 3.0, rho0: 0.1, min_inner: 0.5 })
            .unwrap()
    }

    #[test]
    fn ratio_sample_hits_target() {
        let mut rng = stream(1, 0);
        for rho in [0.0, 0.3, 2.0, 50.0] {
            let t = ratio_sample(&mut rng, 3, 2, rho);
            assert!((angle_ratio(&t, 2) - rho).abs() < 1e-9 * (1.0 + rho));
            assert!((crate::geometry::norm_sq(&t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn audit_accepts_true_meta() {
        let a = worked().audit(10_000, 0).unwrap();
        assert!(a.ok, "{a:?}");
        assert!(a.max_seen <= 1.0 && a.max_seen > 0.9);
    }

    #[test]
    fn audit_rejects_understated_max() {
        let h = ContactHamiltonian::from_expression(WORKED, 2, 1)
            .unwrap()
            .with_meta(SupportMeta { max: 0.6, rho1: 3.0, rho0: 0.1, min_inner: 0.5 })
            .unwrap();
        assert!(!h.audit(4000, 0).unwrap().ok);
    }

    #[test]
    fn audit_rejects_false_support() {
        let h = ContactHamiltonian::from_expression(WORKED, 2, 1)
            .unwrap()
            .with_meta(SupportMeta { max: 1.0, rho1: 2.0, rho0: 0.1, min_inner: 0.5 })
            .unwrap();
        assert!(h.audit(4000, 0).unwrap().support_violations > 0);
    }

    #[test]
    fn non_positive_minimum_is_not_in_cone() {
        let r = ContactHamiltonian::from_expression(WORKED, 2, 1)
            .unwrap()
            .with_meta(SupportMeta { max: 1.0, rho1: 3.0, rho0: 0.1, min_inner: 0.0 });
        assert!(matches!(r, Err(Error::NotInCone(_))));
    }

    #[test]
    fn scaling_updates_meta() {
        let h = worked().scaled(2.5);
        let m = h.meta().unwrap();
        assert_eq!((m.max, m.min_inner, m.rho1), (2.5, 1.25, 3.0));
        let t = [0.6, 0.0, 0.8, 0.0];
        assert!((h.value(&t) - 2.5 * worked().value(&t)).abs() < 1e-15);
        assert!(worked().scaled(-1.0).meta().is_none());
    }
}
