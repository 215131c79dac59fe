//! Relative growth `rho(f, h) = inf{s : f ⪯ s h}` and the pseudo-metric
//! `d(f, h) = max(|log rho(f, h)|, |log rho(h, f)|)`, enclosed by intervals.
//!
//! Upper bounds are witnessed: a conjugator `g` from a finite pool with
//! `Ad_g f <= s h` on a sphere grid. Lower bounds come from the capacity:
//! `f ⪯ s h` forces `w(f) >= w(s h) = s^{-p} w(h)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{capacity_on_cone, same_base_ratio, CapacityInterval, CONE_SCALING_EXPONENT};
use crate::contact::{random_cone_element, random_isotopy, AdjointImage, ContactHamiltonian, ContactIsotopy};
use crate::error::{Error, Result};
use crate::sampling::{sphere_grid, stream};

/// Grid points used for pointwise domination.
pub const DEFAULT_GRID: usize = 10_000;

/// Tolerance levels `eps` of the witnessed `(1 + eps)`-dominations.
pub const ORDER_LEVELS: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// A pool member; `None` is the identity.
#[derive(Debug, Clone)]
pub struct Conjugator {
    pub id: String,
    pub isotopy: Option<ContactIsotopy>,
}

/// Values of `Ad_g` data on the grid: preimages `g^{-1} theta` and the
/// factors `1 / c_{g^{-1}}(theta)`.
#[derive(Debug, Clone)]
struct Pullback {
    pre: Vec<Vec<f64>>,
    factor: Vec<f64>,
}

/// Chain of conjugators `g_1, g_2, ...` (applied in this order) and the
/// scale `s` with `Ad_{... g_2 g_1} f <= s h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub conjugators: Vec<String>,
    #[serde(with = "crate::num17")]
    pub s: f64,
    /// Intermediate elements of a composed witness.
    pub via: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthInterval {
    #[serde(with = "crate::num17")]
    pub lo: f64,
    #[serde(with = "crate::num17")]
    pub hi: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceInterval {
    #[serde(with = "crate::num17")]
    pub lo: f64,
    #[serde(with = "crate::num17")]
    pub hi: f64,
    /// False when a capacity lower bound exceeds a witnessed upper bound.
    pub consistent: bool,
}

/// Finite family of cone elements with a conjugator pool and a grid.
#[derive(Debug, Clone)]
pub struct ConeFamily {
    pub names: Vec<String>,
    pub elements: Vec<ContactHamiltonian>,
    pub pool: Vec<Conjugator>,
    pub capacities: Vec<CapacityInterval>,
    grid: Vec<Vec<f64>>,
    pullbacks: Vec<Pullback>,
    /// Closed witnessed upper bounds, `best[i][j]` for `rho(f_i, f_j)`.
    best: Vec<Vec<Option<Witness>>>,
}

/// Identity plus `flows` random flows supported in `{rho < rho_max}`.
pub fn default_pool(n: usize, k: usize, flows: usize, rho_max: f64, seed: u64) -> Result<Vec<Conjugator>> {
    let mut pool = vec![Conjugator { id: "identity".into(), isotopy: None }];
    let mut rng = stream(seed, 0x9001);
    for i in 0..flows {
        let amplitude = rng.gen_range(0.1..0.4);
        let iso = random_isotopy(&mut rng, n, k, amplitude, rho_max)?.with_step(1e-2)?;
        pool.push(Conjugator { id: format!("flow{i}"), isotopy: Some(iso) });
    }
    Ok(pool)
}

fn pullback(iso: &Option<ContactIsotopy>, grid: &[Vec<f64>]) -> Result<Pullback> {
    let Some(iso) = iso else {
        return Ok(Pullback { pre: grid.to_vec(), factor: vec![1.0; grid.len()] });
    };
    let inv = iso.inverse();
    let res: Result<Vec<(Vec<f64>, f64)>> = grid
        .par_iter()
        .map(|t| {
            if inv.fixes(t) {
                Ok((t.clone(), 1.0))
            } else {
                inv.apply(t).map(|(p, c)| (p, 1.0 / c))
            }
        })
        .collect();
    let (pre, factor) = res?.into_iter().unzip();
    Ok(Pullback { pre, factor })
}

fn compose(chain: &[&ContactIsotopy]) -> Result<Option<ContactIsotopy>> {
    let mut out: Option<ContactIsotopy> = None;
    for g in chain {
        out = Some(match out {
            None => (*g).clone(),
            Some(acc) => acc.then(g)?,
        });
    }
    Ok(out)
}

impl ConeFamily {
    /// Audits every element (support data on 2000 samples), computes the
    /// capacity enclosures and the pool pullbacks on a grid of `grid_points`.
    pub fn new(
        names: Vec<String>,
        elements: Vec<ContactHamiltonian>,
        pool: Vec<Conjugator>,
        grid_points: usize,
        seed: u64,
    ) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::InvalidParameter("empty family".into()))?;
        let (n, k) = (first.n(), first.k());
        if names.len() != elements.len() {
            return Err(Error::InvalidParameter("one name per element".into()));
        }
        for (name, h) in names.iter().zip(&elements) {
            if h.n() != n || h.k() != k {
                return Err(Error::InvalidParameter("all elements must share n and k".into()));
            }
            let audit = h.audit(2000, seed)?;
            if !audit.ok {
                return Err(Error::NotInCone(format!("{name} fails its support audit: {audit:?}")));
            }
        }
        for c in &pool {
            if let Some(iso) = &c.isotopy {
                if iso.n() != n || iso.k() != k {
                    return Err(Error::InvalidParameter(format!("conjugator {} has the wrong dimension", c.id)));
                }
            }
        }
        let capacities = elements.iter().map(capacity_on_cone).collect::<Result<Vec<_>>>()?;
        let grid = sphere_grid(2 * n, grid_points, seed);
        let pullbacks = pool.iter().map(|c| pullback(&c.isotopy, &grid)).collect::<Result<Vec<_>>>()?;
        let mut fam = Self { names, elements, pool, capacities, grid, pullbacks, best: Vec::new() };
        fam.close();
        Ok(fam)
    }

    /// `{s_i f}` with the given pool.
    pub fn scaling(base: &ContactHamiltonian, scales: &[f64], pool: Vec<Conjugator>, grid_points: usize, seed: u64) -> Result<Self> {
        let names = scales.iter().map(|s| format!("{s}f")).collect();
        let elements = scales.iter().map(|&s| base.scaled(s)).collect();
        Self::new(names, elements, pool, grid_points, seed)
    }

    /// `count` random cone elements sharing the bump window `(1, 3)`, with
    /// the default pool of flows supported where the bump equals 1.
    pub fn random(n: usize, k: usize, count: usize, flows: usize, grid_points: usize, seed: u64) -> Result<Self> {
        let mut rng = stream(seed, 0xfa);
        let elements = (0..count).map(|_| random_cone_element(&mut rng, n, k, 1.0, 3.0)).collect::<Result<Vec<_>>>()?;
        let names = (0..count).map(|i| format!("f{i}")).collect();
        let pool = default_pool(n, k, flows, 0.9, seed)?;
        Self::new(names, elements, pool, grid_points, seed)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    fn index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange(format!("element {i} of {}", self.len())));
        }
        Ok(())
    }

    /// Smallest `s` with `Ad_g f_i <= s f_j` on the grid for pool member `c`.
    fn grid_scale(&self, i: usize, j: usize, c: usize) -> f64 {
        let (f, h, pb) = (&self.elements[i], &self.elements[j], &self.pullbacks[c]);
        let mut s: f64 = 0.0;
        for (idx, theta) in self.grid.iter().enumerate() {
            let a = f.value(&pb.pre[idx]) * pb.factor[idx];
            if a <= 0.0 {
                continue;
            }
            let b = h.value(theta);
            if b <= 0.0 {
                return f64::INFINITY;
            }
            s = s.max(a / b);
        }
        s
    }

    /// Direct witnesses, then multiplicative Floyd-Warshall closure so that
    /// `hi(i, j) <= hi(i, m) hi(m, j)` with composed witnesses.
    fn close(&mut self) {
        let n = self.len();
        let direct: Vec<Option<Witness>> = (0..n * n)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / n, ij % n);
                let mut best: Option<Witness> = None;
                for c in 0..self.pool.len() {
                    let s = self.grid_scale(i, j, c);
                    if s.is_finite() && best.as_ref().is_none_or(|b| s < b.s) {
                        best = Some(Witness { conjugators: vec![self.pool[c].id.clone()], s, via: Vec::new() });
                    }
                }
                best
            })
            .collect();
        let mut best: Vec<Vec<Option<Witness>>> = direct.chunks(n).map(|r| r.to_vec()).collect();
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let (Some(a), Some(b)) = (&best[i][m], &best[m][j]) else { continue };
                    let s = a.s * b.s;
                    if best[i][j].as_ref().is_none_or(|w| s < w.s) {
                        let mut conjugators = a.conjugators.clone();
                        conjugators.extend(b.conjugators.iter().cloned());
                        let mut via = a.via.clone();
                        via.push(m);
                        via.extend(b.via.iter().copied());
                        best[i][j] = Some(Witness { conjugators, s, via });
                    }
                }
            }
        }
        self.best = best;
    }

    /// `w(f_i) / w(f_j)` as an interval, exact for same-base pairs.
    fn capacity_ratio(&self, i: usize, j: usize) -> (f64, f64) {
        match same_base_ratio(&self.elements[i], &self.elements[j]) {
            Some(r) => (r, r),
            None => (self.capacities[i].lo / self.capacities[j].hi, self.capacities[i].hi / self.capacities[j].lo),
        }
    }

    /// The conjugator chain of a witness as one isotopy (`None` = identity).
    pub fn composed_conjugator(&self, w: &Witness) -> Result<Option<ContactIsotopy>> {
        let chain: Vec<&ContactIsotopy> = w
            .conjugators
            .iter()
            .filter_map(|id| self.pool.iter().find(|c| &c.id == id).and_then(|c| c.isotopy.as_ref()))
            .collect();
        compose(&chain)
    }

    /// Largest ratio `Ad_g f_i / f_j` over the grid for an arbitrary
    /// conjugator, evaluated directly (no cached pullback).
    pub fn grid_ratio(&self, i: usize, j: usize, g: &Option<ContactIsotopy>) -> Result<f64> {
        self.index(i)?;
        self.index(j)?;
        let (f, h) = (&self.elements[i], &self.elements[j]);
        let image = match g {
            Some(g) => Some(AdjointImage::new(g, f.clone())?),
            None => None,
        };
        let vals: Result<Vec<f64>> = self
            .grid
            .par_iter()
            .map(|theta| {
                let a = match &image {
                    Some(img) => img.try_value(theta)?,
                    None => f.value(theta),
                };
                if a <= 0.0 {
                    return Ok(0.0);
                }
                let b = h.value(theta);
                Ok(if b <= 0.0 { f64::INFINITY } else { a / b })
            })
            .collect();
        Ok(vals?.into_iter().fold(0.0, f64::max))
    }
}

/// Interval for `rho(f_i, f_j)`.
pub fn relative_growth_bounds(fam: &ConeFamily, i: usize, j: usize) -> Result<GrowthInterval> {
    fam.index(i)?;
    fam.index(j)?;
    let (r_lo, _) = fam.capacity_ratio(j, i);
    let lo = r_lo.max(0.0).powf(1.0 / CONE_SCALING_EXPONENT);
    let witness = fam.best[i][j].clone();
    let hi = witness.as_ref().map_or(f64::INFINITY, |w| w.s);
    Ok(GrowthInterval { lo, hi, witness })
}

fn log_gap(lo: f64, hi: f64) -> f64 {
    let (a, b) = (lo.ln(), hi.ln());
    if a <= 0.0 && 0.0 <= b {
        0.0
    } else {
        a.abs().min(b.abs())
    }
}

/// Interval for `d(f_i, f_j)`.
pub fn pseudo_distance(fam: &ConeFamily, i: usize, j: usize) -> Result<DistanceInterval> {
    let a = relative_growth_bounds(fam, i, j)?;
    let b = relative_growth_bounds(fam, j, i)?;
    let hi = [a.lo, a.hi, b.lo, b.hi].iter().map(|v| v.ln().abs()).fold(0.0, f64::max);
    let consistent = a.lo <= a.hi * (1.0 + 1e-12) && b.lo <= b.hi * (1.0 + 1e-12);
    let lo = log_gap(a.lo.min(a.hi), a.hi).max(log_gap(b.lo.min(b.hi), b.hi));
    Ok(DistanceInterval { lo, hi, consistent })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmultiplicativityCertificate {
    #[serde(with = "crate::num17")]
    pub s_fg: f64,
    #[serde(with = "crate::num17")]
    pub s_gh: f64,
    #[serde(with = "crate::num17")]
    pub s_fh: f64,
    pub composed: Witness,
    /// Grid maximum of `Ad_{composed} f / h`.
    #[serde(with = "crate::num17")]
    pub grid_ratio: f64,
    pub passed: bool,
}

/// Composes the witnesses of `f ⪯ s1 g` and `g ⪯ s2 h` and checks
/// `Ad f <= s1 s2 h` on the grid, up to relative `1e-6`.
pub fn submultiplicativity_check(fam: &ConeFamily, f: usize, g: usize, h: usize) -> Result<SubmultiplicativityCertificate> {
    let a = relative_growth_bounds(fam, f, g)?;
    let b = relative_growth_bounds(fam, g, h)?;
    let c = relative_growth_bounds(fam, f, h)?;
    let (Some(wa), Some(wb)) = (a.witness, b.witness) else {
        return Err(Error::InvalidParameter("submultiplicativity needs finite witnesses".into()));
    };
    let mut conjugators = wa.conjugators.clone();
    conjugators.extend(wb.conjugators.iter().cloned());
    let mut via = wa.via.clone();
    via.push(g);
    via.extend(wb.via.iter().copied());
    let composed = Witness { conjugators, s: wa.s * wb.s, via };
    let iso = fam.composed_conjugator(&composed)?;
    let grid_ratio = fam.grid_ratio(f, h, &iso)?;
    let passed = grid_ratio <= composed.s * (1.0 + 1e-6) && c.hi <= composed.s * (1.0 + 1e-12);
    Ok(SubmultiplicativityCertificate { s_fg: wa.s, s_gh: wb.s, s_fh: c.hi, composed, grid_ratio, passed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwCheck {
    #[serde(with = "crate::num17")]
    pub d_hi: f64,
    /// Smallest value of `(1/p) |log(w(f)/w(h))|` over the enclosures.
    #[serde(with = "crate::num17")]
    pub rhs: f64,
    pub passed: bool,
}

/// `d_hi(f, h) >= (1/p) |log(w(f)/w(h))|`.
pub fn dw_bound_check(fam: &ConeFamily, i: usize, j: usize) -> Result<DwCheck> {
    let d = pseudo_distance(fam, i, j)?;
    let (lo, hi) = fam.capacity_ratio(i, j);
    let rhs = log_gap(lo, hi) / CONE_SCALING_EXPONENT;
    Ok(DwCheck { d_hi: d.hi, rhs, passed: d.hi >= rhs - 1e-12 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub i: usize,
    pub j: usize,
    #[serde(with = "crate::num17")]
    pub lo: f64,
    #[serde(with = "crate::num17")]
    pub hi: f64,
}

/// Witnessed `p ⪯ (1 + eps) q` between classes; `order` when every level
/// of [`ORDER_LEVELS`] is witnessed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEdge {
    pub from: usize,
    pub to: usize,
    #[serde(with = "crate::num17::vec")]
    pub eps_witnessed: Vec<f64>,
    pub order: bool,
    pub witness: Witness,
    /// Elements realising the witness.
    pub elements: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub names: Vec<String>,
    /// Element indices per class (classes of `d_hi = 0`).
    pub classes: Vec<Vec<usize>>,
    pub distances: Vec<PairDistance>,
    pub edges: Vec<OrderEdge>,
    /// Pairs of classes with no witnessed relation in either direction.
    pub unknown_pairs: usize,
    pub antisymmetric: bool,
}

/// Classes of `d_hi = 0`, the witnessed relation between them and the
/// antisymmetry audit.
pub fn equivalence_and_order(fam: &ConeFamily) -> Result<QuotientReport> {
    let n = fam.len();
    let mut dist = vec![vec![DistanceInterval { lo: 0.0, hi: 0.0, consistent: true }; n]; n];
    let mut distances = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = pseudo_distance(fam, i, j)?;
            dist[i][j] = d;
            dist[j][i] = d;
            distances.push(PairDistance { i, j, lo: d.lo, hi: d.hi });
        }
    }
    let mut class_of: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if dist[i][j].hi <= 1e-12 {
                let (a, b) = (class_of[i], class_of[j]);
                class_of.iter_mut().filter(|c| **c == a).for_each(|c| *c = b);
            }
        }
    }
    let mut reps: Vec<usize> = class_of.clone();
    reps.sort_unstable();
    reps.dedup();
    let classes: Vec<Vec<usize>> = reps.iter().map(|r| (0..n).filter(|i| class_of[*i] == *r).collect()).collect();

    let mut edges: Vec<OrderEdge> = Vec::new();
    for p in 0..classes.len() {
        for q in 0..classes.len() {
            if p == q {
                continue;
            }
            let mut best: Option<(f64, Witness, (usize, usize))> = None;
            for &i in &classes[p] {
                for &j in &classes[q] {
                    if let Some(w) = &fam.best[i][j] {
                        if best.as_ref().is_none_or(|b| w.s < b.0) {
                            best = Some((w.s, w.clone(), (i, j)));
                        }
                    }
                }
            }
            let Some((s, witness, elements)) = best else { continue };
            let eps_witnessed: Vec<f64> = ORDER_LEVELS.iter().copied().filter(|e| s <= 1.0 + e).collect();
            if eps_witnessed.is_empty() {
                continue;
            }
            let order = eps_witnessed.len() == ORDER_LEVELS.len();
            edges.push(OrderEdge { from: p, to: q, eps_witnessed, order, witness, elements });
        }
    }
    let related = |p: usize, q: usize| edges.iter().any(|e| e.from == p && e.to == q);
    let mut unknown_pairs = 0;
    let mut antisymmetric = true;
    for p in 0..classes.len() {
        for q in (p + 1)..classes.len() {
            let (pq, qp) = (related(p, q), related(q, p));
            if !pq && !qp {
                unknown_pairs += 1;
            }
            let both = edges.iter().any(|e| e.from == p && e.to == q && e.order)
                && edges.iter().any(|e| e.from == q && e.to == p && e.order);
            if both {
                antisymmetric = false;
            }
        }
    }
    Ok(QuotientReport { names: fam.names.clone(), classes, distances, edges, unknown_pairs, antisymmetric })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::SupportMeta;

    fn base() -> ContactHamiltonian {
        ContactHamiltonian::from_expression("0.5*bump(rho;1,3) + 0.5*bump(rho;1,3)*x1^2", 2, 1)
            .unwrap()
            .with_meta(SupportMeta { max: 1.0, rho1: 3.0, rho0: 0.1, min_inner: 0.5 })
            .unwrap()
    }

    fn identity_pool() -> Vec<Conjugator> {
        vec![Conjugator { id: "identity".into(), isotopy: None }]
    }

    #[test]
    fn scaling_family_is_a_line() {
        let fam = ConeFamily::scaling(&base(), &[1.0, 2.0, 4.0], identity_pool(), 2000, 0).unwrap();
        let expect = [(0, 1, 2f64.ln()), (1, 2, 2f64.ln()), (0, 2, 4f64.ln())];
        for (i, j, v) in expect {
            let d = pseudo_distance(&fam, i, j).unwrap();
            assert!((d.lo - v).abs() < 1e-12 && (d.hi - v).abs() < 1e-12, "{i}{j}: {d:?}");
            assert_eq!(d, pseudo_distance(&fam, j, i).unwrap());
            assert!(dw_bound_check(&fam, i, j).unwrap().passed);
        }
        let g = relative_growth_bounds(&fam, 0, 1).unwrap();
        assert!(g.lo <= 0.5 && 0.5 <= g.hi);
        let q = equivalence_and_order(&fam).unwrap();
        assert_eq!(q.classes.len(), 3);
        assert!(q.antisymmetric);
        assert_eq!(q.edges.iter().filter(|e| e.order).count(), 3);
    }

    #[test]
    fn self_growth_is_one() {
        let fam = ConeFamily::scaling(&base(), &[1.0], identity_pool(), 500, 0).unwrap();
        let g = relative_growth_bounds(&fam, 0, 0).unwrap();
        assert!(g.lo <= 1.0 && g.hi <= 1.0 && g.hi >= 1.0);
        let d = pseudo_distance(&fam, 0, 0).unwrap();
        assert_eq!((d.lo, d.hi), (0.0, 0.0));
        let q = equivalence_and_order(&fam).unwrap();
        assert_eq!(q.classes, vec![vec![0]]);
    }

    #[test]
    fn scaled_triple_multiplies() {
        let fam = ConeFamily::scaling(&base(), &[1.0, 3.0, 9.0], identity_pool(), 500, 0).unwrap();
        let c = submultiplicativity_check(&fam, 0, 1, 2).unwrap();
        assert!(c.passed);
        assert!((c.composed.s - 1.0 / 9.0).abs() < 1e-15);
        let same = submultiplicativity_check(&fam, 0, 0, 2).unwrap();
        assert_eq!(same.s_fg, 1.0);
    }

    #[test]
    fn disjoint_supports_have_no_witness() {
        let f = ContactHamiltonian::from_expression("bump(rho; 1, 2)", 2, 1)
            .unwrap()
            .with_meta(SupportMeta { max: 1.0, rho1: 2.0, rho0: 1.0, min_inner: 1.0 })
            .unwrap();
        let h = ContactHamiltonian::from_expression("100*bump(rho; 0.2, 0.5)", 2, 1)
            .unwrap()
            .with_meta(SupportMeta { max: 100.0, rho1: 0.5, rho0: 0.2, min_inner: 100.0 })
            .unwrap();
        let fam = ConeFamily::new(vec!["f".into(), "h".into()], vec![f, h], identity_pool(), 2000, 0).unwrap();
        let g = relative_growth_bounds(&fam, 0, 1).unwrap();
        assert!(g.hi.is_infinite() && g.witness.is_none());
        assert!(pseudo_distance(&fam, 0, 1).unwrap().hi.is_infinite());
        assert!(fam.capacities[1].hi < fam.capacities[0].lo);
        let dw = dw_bound_check(&fam, 0, 1).unwrap();
        assert!(dw.passed && dw.rhs > 0.0);
    }

    #[test]
    fn random_family_triangle_inequality() {
        let fam = ConeFamily::random(2, 1, 4, 2, 1500, 11).unwrap();
        let n = fam.len();
        let d: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| pseudo_distance(&fam, i, j).unwrap().hi).collect()).collect();
        for i in 0..n {
            for j in 0..n {
                assert!(pseudo_distance(&fam, i, j).unwrap().consistent);
                for m in 0..n {
                    assert!(d[i][j] <= d[i][m] + d[m][j] + 1e-12);
                }
            }
        }
        let c = submultiplicativity_check(&fam, 0, 1, 2).unwrap();
        assert!(c.passed, "{c:?}");
        assert!(equivalence_and_order(&fam).unwrap().antisymmetric);
    }
}
