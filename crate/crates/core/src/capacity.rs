//! Enclosures of the capacity `w` on hyperboloids, star domains and the
//! cone, and the non-squeezing sweep.
//!
//! `w(V_k^{a,b}) = pi a^2`, `w` is monotone under inclusion and
//! `w(sV) = s^2 w(V)`. Since `V(H) = {|z|^2 H(z/|z|) < 1}`, `V(sH)` is
//! `V(H)` shrunk by `s^{-1/2}` and `w(sH) = s^{-1} w(H)`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::contact::{ContactHamiltonian, SmoothedSymplectization};
use crate::domains::{sandwich_solve, scale_domain, Domain, DomainDoc, Hyperboloid, SandwichCertificate, StarDomain};
use crate::error::{Error, Result};
use crate::geometry::norm_sq;
use crate::sampling::{stream, uniform_box};

/// Exponent `p` in `w(sH) = s^{-p} w(H)`.
pub const CONE_SCALING_EXPONENT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityInterval {
    #[serde(with = "crate::num17")]
    pub lo: f64,
    #[serde(with = "crate::num17")]
    pub hi: f64,
    pub exact: bool,
}

impl CapacityInterval {
    pub fn exact(v: f64) -> Self {
        Self { lo: v, hi: v, exact: true }
    }

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::InvalidParameter(format!("capacity interval [{lo}, {hi}] is not valid")));
        }
        Ok(Self { lo, hi, exact: lo == hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Both endpoints multiplied by `f > 0`.
    pub fn times(&self, f: f64) -> Self {
        Self { lo: self.lo * f, hi: self.hi * f, exact: self.exact }
    }
}

/// `w(V_k^{a,b}) = pi a^2`, independent of `b`.
pub fn capacity_hyperboloid(v: &Hyperboloid) -> Result<CapacityInterval> {
    if v.k == 0 || v.k >= v.n {
        return Err(Error::OutOfTheory(format!(
            "k = {} >= n = {}: the cone is not orderable up to conjugation and carries no capacity",
            v.k, v.n
        )));
    }
    if !(v.a > 0.0 && v.b > 0.0) {
        return Err(Error::InvalidParameter(format!("a = {}, b = {} must be positive", v.a, v.b)));
    }
    Ok(CapacityInterval::exact(PI * v.a * v.a))
}

fn check_cone_k(n: usize, k: usize) -> Result<()> {
    if k >= n {
        return Err(Error::OutOfTheory(format!("k = {k} >= n = {n}: no capacity exists")));
    }
    Ok(())
}

/// `[pi a^2, pi a'^2]` from the hyperboloids sandwiching `V(H)`.
pub fn capacity_interval(d: &StarDomain) -> Result<(CapacityInterval, SandwichCertificate)> {
    check_cone_k(d.n(), d.k())?;
    let cert = sandwich_solve(d.hamiltonian())?;
    let lo = capacity_hyperboloid(&cert.inner)?.lo;
    let hi = capacity_hyperboloid(&cert.outer)?.lo;
    Ok((CapacityInterval::new(lo, hi)?, cert))
}

/// `w(H) := w(V(H))`.
pub fn capacity_on_cone(h: &ContactHamiltonian) -> Result<CapacityInterval> {
    Ok(capacity_interval(&StarDomain::new(h.clone())?)?.0)
}

/// Exact ratio `w(f) / w(h)` when both are positive multiples of the same
/// function: `w(s f) = s^{-1} w(f)`.
pub fn same_base_ratio(f: &ContactHamiltonian, h: &ContactHamiltonian) -> Option<f64> {
    let same = Arc::ptr_eq(f.function(), h.function()) && f.scale_factor() > 0.0 && h.scale_factor() > 0.0;
    same.then(|| (h.scale_factor() / f.scale_factor()).powf(CONE_SCALING_EXPONENT))
}

/// Capacity enclosure of any supported domain.
pub fn capacity_of(v: &Domain) -> Result<CapacityInterval> {
    match v {
        Domain::Hyperboloid(h) => capacity_hyperboloid(h),
        Domain::Star(d) => Ok(capacity_interval(d)?.0),
        Domain::Integrable(d) => {
            check_cone_k(d.n, d.k)?;
            Err(Error::OutOfTheory("bounded domains V_C are not sandwiched between hyperboloids".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeWitness {
    pub id: usize,
    /// The sampled point `z` of `sV` with `Psi(z)` outside `V`, if found.
    #[serde(with = "crate::num17::opt_vec")]
    pub witness_point: Option<Vec<f64>>,
    #[serde(with = "crate::num17::opt_vec")]
    pub image: Option<Vec<f64>>,
    /// `|Psi(z) - z|`.
    #[serde(with = "crate::num17::opt")]
    pub displacement: Option<f64>,
    /// Points of `sV` examined before the witness (or all of them).
    pub tested: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalVerdict {
    #[serde(with = "crate::num17")]
    pub w_lo: f64,
    #[serde(with = "crate::num17")]
    pub w_hi: f64,
    /// `s^2 w_lo`, a lower bound of `w(sV)`.
    #[serde(with = "crate::num17")]
    pub s2w_lo: f64,
    /// `w(sV) = s^2 w(V) > w(V)`; holds for every `s > 1`.
    pub strict_growth: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    /// `s <= 1`: nothing is claimed.
    Vacuous,
    /// No candidate squeezes, as the theory requires.
    Impossible,
    /// Some candidate mapped every sample of `sV` into `V`.
    Contradiction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonSqueezingReport {
    pub domain: DomainDoc,
    #[serde(with = "crate::num17")]
    pub s: f64,
    pub verdict: Verdict,
    pub candidates: Vec<EscapeWitness>,
    pub theoretical: Option<TheoreticalVerdict>,
}

/// Samples up to `samples` points of `sV` (uniform in a cube, rejected
/// outside `sV`) and returns the first whose image under `psi` leaves `V`.
fn find_escape(
    v: &Domain,
    sv: &Domain,
    psi: &SmoothedSymplectization,
    half: f64,
    samples: usize,
    seed: u64,
    id: usize,
) -> Result<EscapeWitness> {
    let dim = 2 * v.n();
    let mut rng = stream(seed, id as u64);
    let mut tested = 0;
    let mut draws = 0usize;
    while tested < samples {
        draws += 1;
        if draws > 1000 * samples {
            return Err(Error::Infeasible("the sampling cube misses sV".into()));
        }
        let z = uniform_box(&mut rng, dim, half);
        if !sv.contains(&z)? {
            continue;
        }
        tested += 1;
        let image = psi.apply(&z)?;
        if !v.contains(&image)? {
            let d: Vec<f64> = image.iter().zip(&z).map(|(a, b)| a - b).collect();
            return Ok(EscapeWitness {
                id,
                witness_point: Some(z),
                displacement: Some(norm_sq(&d).sqrt()),
                image: Some(image),
                tested,
            });
        }
    }
    Ok(EscapeWitness { id, witness_point: None, image: None, displacement: None, tested })
}

/// The theoretical verdict `w(sV) = s^2 w(V) > w(V)` and, per candidate,
/// a point of `sV` mapped outside `V` among `samples` samples drawn from
/// `sV` inside the cube of half-width `2 s max(a, b)` (for sandwiched
/// domains, of the outer hyperboloid).
pub fn nonsqueezing_verdict(
    v: &Domain,
    s: f64,
    candidates: &[SmoothedSymplectization],
    samples: usize,
    seed: u64,
) -> Result<NonSqueezingReport> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale {s} must be positive")));
    }
    let domain = v.to_doc()?;
    if s <= 1.0 {
        return Ok(NonSqueezingReport { domain, s, verdict: Verdict::Vacuous, candidates: Vec::new(), theoretical: None });
    }
    let w = capacity_of(v)?;
    let theoretical = TheoreticalVerdict { w_lo: w.lo, w_hi: w.hi, s2w_lo: s * s * w.lo, strict_growth: s * s > 1.0 };
    let sv = scale_domain(v, s)?;
    let reach = match v {
        Domain::Hyperboloid(h) => h.a.max(h.b),
        Domain::Star(d) => {
            let cert = sandwich_solve(d.hamiltonian())?;
            cert.outer.a.max(cert.outer.b)
        }
        Domain::Integrable(_) => unreachable!("capacity_of rejects bounded domains"),
    };
    let half = 2.0 * s * reach;
    let mut out = Vec::with_capacity(candidates.len());
    for (id, psi) in candidates.iter().enumerate() {
        if psi.isotopy().n() != v.n() {
            return Err(Error::DimensionMismatch { expected: v.n(), got: psi.isotopy().n() });
        }
        out.push(find_escape(v, &sv, psi, half, samples, seed, id)?);
    }
    let verdict = if out.iter().all(|c| c.witness_point.is_some()) { Verdict::Impossible } else { Verdict::Contradiction };
    Ok(NonSqueezingReport { domain, s, verdict, candidates: out, theoretical: Some(theoretical) })
}
