//! Planar dynamics of `H_C(x, y) = x^2/a^2 + g(y)/b^2`, closed orbits by level
//! contouring, and the closed-characteristic spectrum of `V_C`.
//!
//! Orbits follow `x' = -dH/dy, y' = dH/dx`, the orientation in which every
//! closed orbit runs counter-clockwise and `\oint x dy` is the enclosed area.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::IntegrableDomain;
use crate::error::{Error, Result};
use crate::quadrature::integrate_pieces;
use crate::well::SmoothedWell;

/// Default number of contour points per loop.
pub const CONTOUR_POINTS: usize = 2048;

/// The planar system of one of the last `k` coordinate pairs of `V_C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarSystem {
    #[serde(with = "crate::num17")]
    pub a: f64,
    #[serde(with = "crate::num17")]
    pub b: f64,
    pub well: SmoothedWell,
    /// Largest step of the splitting integrator.
    #[serde(with = "crate::num17")]
    pub step: f64,
}

/// Connected component of a regular level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Around the minimum `(0, C)`, for negative energies.
    Upper,
    /// Around the minimum `(0, -C)`, for negative energies.
    Lower,
    /// Around the whole figure-eight, for positive energies.
    Outer,
}

impl Branch {
    /// The only branch for `e > 0`, the upper one otherwise.
    pub fn default_for(e: f64) -> Self {
        if e > 0.0 {
            Branch::Outer
        } else {
            Branch::Upper
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    pub samples: Vec<[f64; 2]>,
    pub period: f64,
    pub energy: f64,
    /// `\oint x dy` over one period.
    pub action: f64,
    pub closed: bool,
    pub homoclinic_flag: bool,
}

#[derive(Serialize)]
struct OrbitDoc<'a> {
    #[serde(with = "crate::num17")]
    energy: f64,
    #[serde(with = "crate::num17")]
    period: f64,
    #[serde(with = "crate::num17")]
    action: f64,
    closed: bool,
    homoclinic_flag: bool,
    downsample: usize,
    samples: Vec<[&'a str; 2]>,
}

impl OrbitRecord {
    /// JSON with every `downsample`-th sample kept (and always the last one).
    pub fn to_json(&self, downsample: usize) -> Result<String> {
        let step = downsample.max(1);
        let strings: Vec<[String; 2]> = self
            .samples
            .iter()
            .enumerate()
            .filter(|(i, _)| i % step == 0 || *i + 1 == self.samples.len())
            .map(|(_, p)| [crate::num17::format(p[0]), crate::num17::format(p[1])])
            .collect();
        let doc = OrbitDoc {
            energy: self.energy,
            period: self.period,
            action: self.action,
            closed: self.closed,
            homoclinic_flag: self.homoclinic_flag,
            downsample: step,
            samples: strings.iter().map(|p| [p[0].as_str(), p[1].as_str()]).collect(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}

/// A fixed-step trajectory of the planar system.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Points at evenly spaced times, the first and last included.
    pub samples: Vec<[f64; 2]>,
    pub end: [f64; 2],
    pub steps: usize,
    pub dt: f64,
    /// Largest `|H - H(z0)|` seen at the sampled points.
    pub max_energy_error: f64,
}

/// One of the two homoclinic loops of the zero level.
#[derive(Debug, Clone, PartialEq)]
pub struct HomoclinicLoop {
    pub samples: Vec<[f64; 2]>,
    pub area: f64,
    pub enclosed_minimum: [f64; 2],
}

/// The figure-eight `{H_C = 0}`: two loops through the saddle at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct HomoclinicLevel {
    pub saddle: [f64; 2],
    pub loops: [HomoclinicLoop; 2],
}

/// `y(psi) = yc - h cos psi` runs over `[y1, y2]`; `x > 0` on `psi in (0, pi)`.
#[derive(Debug, Clone, Copy)]
struct Level {
    e: f64,
    yc: f64,
    h: f64,
    lower: bool,
}

// Yoshida's fourth-order composition weights.
const Y1: f64 = 1.351_207_191_959_657_6;
const Y0: f64 = -1.702_414_383_919_315_3;

/// The splitting error is dominated by the steep blend of the well, so the
/// step follows its half-width.
fn default_step(well: &SmoothedWell) -> f64 {
    (2.5e-3 * well.half_width() / well.c().max(1.0)).min(1e-3)
}

impl PlanarSystem {
    pub fn new(a: f64, b: f64, well: SmoothedWell) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("a = {a}, b = {b} must be positive")));
        }
        Ok(Self { a, b, well, step: default_step(&well) })
    }

    pub fn from_domain(d: &IntegrableDomain) -> Self {
        Self { a: d.a, b: d.b, well: d.well, step: default_step(&d.well) }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn energy(&self, x: f64, y: f64) -> f64 {
        x * x / (self.a * self.a) + self.well.value(y) / (self.b * self.b)
    }

    /// `(x', y') = (-dH/dy, dH/dx)`.
    pub fn vector_field(&self, x: f64, y: f64) -> [f64; 2] {
        [-self.well.derivative(y) / (self.b * self.b), 2.0 * x / (self.a * self.a)]
    }

    pub fn min_energy(&self) -> f64 {
        self.well.min_value() / (self.b * self.b)
    }

    /// The minima `(0, +-y*)` and the saddle at the origin.
    pub fn critical_points(&self) -> [[f64; 2]; 3] {
        let m = self.well.argmin();
        [[0.0, m], [0.0, -m], [0.0, 0.0]]
    }

    fn kinetic(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        (x, y + 2.0 * x * t / (self.a * self.a))
    }

    fn potential(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        (x - self.well.derivative(y) * t / (self.b * self.b), y)
    }

    fn strang(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let (x, y) = self.kinetic(x, y, 0.5 * t);
        let (x, y) = self.potential(x, y, t);
        self.kinetic(x, y, 0.5 * t)
    }

    /// One fourth-order step of length `dt`.
    pub fn step_once(&self, z: [f64; 2], dt: f64) -> [f64; 2] {
        let (x, y) = self.strang(z[0], z[1], Y1 * dt);
        let (x, y) = self.strang(x, y, Y0 * dt);
        let (x, y) = self.strang(x, y, Y1 * dt);
        [x, y]
    }

    /// The time-`t` map, with `ceil(|t| / step)` equal steps.
    pub fn flow(&self, z0: [f64; 2], t: f64) -> [f64; 2] {
        let steps = (t.abs() / self.step).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        (0..steps).fold(z0, |z, _| self.step_once(z, dt))
    }

    /// Integrates for time `t`, recording about `samples` evenly spaced points.
    pub fn integrate(&self, z0: [f64; 2], t: f64, samples: usize) -> Trajectory {
        let steps = (t.abs() / self.step).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let stride = (steps / samples.max(1)).max(1);
        let e0 = self.energy(z0[0], z0[1]);
        let mut z = z0;
        let mut out = vec![z0];
        let mut err: f64 = 0.0;
        for i in 1..=steps {
            z = self.step_once(z, dt);
            if i % stride == 0 || i == steps {
                err = err.max((self.energy(z[0], z[1]) - e0).abs());
                out.push(z);
            }
        }
        Trajectory { samples: out, end: z, steps, dt, max_energy_error: err }
    }

    fn root_on(&self, target: f64, mut lo: f64, mut hi: f64) -> f64 {
        // g - target changes sign on [lo, hi], g monotone there.
        let rising = self.well.value(hi) > self.well.value(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (self.well.value(mid) < target) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Positive roots of `g(y) = target` on the decreasing and on the
    /// increasing part of the well.
    fn inner_root(&self, target: f64) -> f64 {
        let (c, w) = (self.well.c(), self.well.half_width());
        let r = (-target).max(0.0).sqrt();
        if r <= c - w {
            r
        } else {
            self.root_on(target, c - w, self.well.argmin())
        }
    }

    fn outer_root(&self, target: f64) -> f64 {
        let (c, w) = (self.well.c(), self.well.half_width());
        let r = ((target + 4.0 * c * c) / 3.0).max(0.0).sqrt();
        if r >= c + w {
            r
        } else {
            self.root_on(target, self.well.argmin(), c + w)
        }
    }

    fn level(&self, e: f64, branch: Branch) -> Result<Level> {
        if !e.is_finite() {
            return Err(Error::InvalidParameter(format!("energy {e} is not finite")));
        }
        if e == 0.0 {
            return Err(Error::Homoclinic);
        }
        if e <= self.min_energy() {
            return Err(Error::EmptyLevel(e));
        }
        let target = e * self.b * self.b;
        match (branch, e > 0.0) {
            (Branch::Outer, true) => {
                let y2 = self.outer_root(target);
                Ok(Level { e, yc: 0.0, h: y2, lower: false })
            }
            (Branch::Upper | Branch::Lower, false) => {
                let (y1, y2) = (self.inner_root(target), self.outer_root(target));
                Ok(Level { e, yc: 0.5 * (y1 + y2), h: 0.5 * (y2 - y1), lower: branch == Branch::Lower })
            }
            (Branch::Outer, false) => {
                Err(Error::InvalidParameter(format!("the outer branch needs a positive energy, got {e}")))
            }
            (_, true) => Err(Error::InvalidParameter(format!(
                "energy {e} > 0 has a single component; use the outer branch"
            ))),
        }
    }

    /// `x >= 0` on the level at height `y`.
    fn level_x(&self, e: f64, y: f64) -> f64 {
        self.a * (e - self.well.value(y) / (self.b * self.b)).max(0.0).sqrt()
    }

    fn point(&self, lv: &Level, psi: f64) -> [f64; 2] {
        let y = lv.yc - lv.h * psi.cos();
        let x = self.level_x(lv.e, y);
        let x = if psi.rem_euclid(2.0 * PI) <= PI { x } else { -x };
        if lv.lower {
            // Reflection y -> -y composed with x -> -x keeps the orientation.
            [-x, -y]
        } else {
            [x, y]
        }
    }

    /// Break points of the integrands in `psi in [0, pi]`: the blend
    /// junctions and `y = 0`.
    fn breaks(&self, lv: &Level) -> Vec<f64> {
        let (c, w) = (self.well.c(), self.well.half_width());
        let mut out = vec![0.0, PI];
        for y in [-(c + w), -(c - w), 0.0, c - w, c + w] {
            let s = (lv.yc - y) / lv.h;
            if s.abs() < 1.0 {
                out.push(s.acos());
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// `\oint x dy = 2 int_0^pi x(psi) h sin(psi) dpsi`.
    fn level_action(&self, lv: &Level) -> Result<f64> {
        let f = |psi: f64| {
            let y = lv.yc - lv.h * psi.cos();
            self.level_x(lv.e, y) * lv.h * psi.sin()
        };
        Ok(2.0 * integrate_pieces(&f, &self.breaks(lv), 1e-15, 1e-12)?)
    }

    /// `T = \oint dy / y' = 2 int_0^pi a^2 h sin(psi) / (2 x(psi)) dpsi`.
    fn level_period(&self, lv: &Level) -> Result<f64> {
        let f = |psi: f64| {
            let y = lv.yc - lv.h * psi.cos();
            let x = self.level_x(lv.e, y);
            let s = lv.h * psi.sin();
            if x > 0.0 {
                self.a * self.a * s / (2.0 * x)
            } else {
                0.0
            }
        };
        Ok(2.0 * integrate_pieces(&f, &self.breaks(lv), 1e-13, 1e-11)?)
    }

    /// Contour points on `psi in [0, 2 pi]`, first and last equal, refined by
    /// midpoint insertion where chords are long (near the saddle).
    fn contour(&self, lv: &Level, points: usize) -> Vec<[f64; 2]> {
        let n = points.max(8);
        let mut psis: Vec<f64> = (0..=n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        for _ in 0..4 {
            let pts: Vec<[f64; 2]> = psis.iter().map(|&p| self.point(lv, p)).collect();
            let chords: Vec<f64> = pts.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).collect();
            let limit = 2.0 * chords.iter().sum::<f64>() / n as f64;
            if chords.iter().all(|&c| c <= limit) {
                break;
            }
            let mut next = Vec::with_capacity(psis.len() * 2);
            for (i, w) in psis.windows(2).enumerate() {
                next.push(w[0]);
                if chords[i] > limit {
                    next.push(0.5 * (w[0] + w[1]));
                }
            }
            next.push(2.0 * PI);
            psis = next;
        }
        let mut pts: Vec<[f64; 2]> = psis.iter().map(|&p| self.point(lv, p)).collect();
        let first = pts[0];
        *pts.last_mut().expect("non-empty contour") = first;
        pts
    }

    /// The closed orbit on the `branch` component of `{H_C = e}`.
    pub fn closed_orbit(&self, e: f64, branch: Branch) -> Result<OrbitRecord> {
        self.closed_orbit_with(e, branch, CONTOUR_POINTS)
    }

    pub fn closed_orbit_with(&self, e: f64, branch: Branch, points: usize) -> Result<OrbitRecord> {
        let lv = self.level(e, branch)?;
        let samples = self.contour(&lv, points);
        let action = self.level_action(&lv)?;
        let period = self.level_period(&lv)?;
        let gap = {
            let (p, q) = (samples[0], samples[samples.len() - 1]);
            (p[0] - q[0]).hypot(p[1] - q[1])
        };
        let residual = samples
            .iter()
            .map(|p| (self.energy(p[0], p[1]) - e).abs())
            .fold(0.0, f64::max);
        Ok(OrbitRecord {
            samples,
            period,
            energy: e,
            action,
            closed: gap <= 1e-6 && residual <= 1e-9 * e.abs().max(1.0),
            homoclinic_flag: false,
        })
    }

    /// Action of the orbit without building the contour.
    pub fn orbit_action(&self, e: f64, branch: Branch) -> Result<f64> {
        self.level_action(&self.level(e, branch)?)
    }

    pub fn orbit_period(&self, e: f64, branch: Branch) -> Result<f64> {
        self.level_period(&self.level(e, branch)?)
    }

    /// Smallest action of a closed orbit at energy `e`; zero for the
    /// constant orbits at the origin and at the minima.
    fn min_action_at(&self, e: f64) -> Result<f64> {
        if e.abs() <= 1e-12 || e <= self.min_energy() {
            return Ok(0.0);
        }
        self.orbit_action(e, Branch::default_for(e))
    }

    /// The zero level: two loops `0 <= +-y <= 2C/sqrt(3)` through the saddle.
    pub fn homoclinic_level(&self) -> Result<HomoclinicLevel> {
        let y0 = 2.0 * self.well.c() / 3f64.sqrt();
        let lv = Level { e: 0.0, yc: 0.5 * y0, h: 0.5 * y0, lower: false };
        let samples = self.contour(&lv, CONTOUR_POINTS);
        let area = self.level_action(&lv)?;
        let m = self.well.argmin();
        let lower: Vec<[f64; 2]> = samples.iter().map(|p| [-p[0], -p[1]]).collect();
        Ok(HomoclinicLevel {
            saddle: [0.0, 0.0],
            loops: [
                HomoclinicLoop { samples, area, enclosed_minimum: [0.0, m] },
                HomoclinicLoop { samples: lower, area, enclosed_minimum: [0.0, -m] },
            ],
        })
    }
}

/// Runs the planar flow of `sys` from `z0` for time `t`.
pub fn integrate_planar(sys: &PlanarSystem, z0: [f64; 2], t: f64) -> Trajectory {
    sys.integrate(z0, t, 4096)
}

/// `closed_orbit_at_energy` for the planar system of `d`.
pub fn closed_orbit_at_energy(d: &IntegrableDomain, e: f64, branch: Branch) -> Result<OrbitRecord> {
    PlanarSystem::from_domain(d).closed_orbit(e, branch)
}

pub fn homoclinic_level(d: &IntegrableDomain) -> Result<HomoclinicLevel> {
    PlanarSystem::from_domain(d).homoclinic_level()
}

/// `A_{a,b} = (a/b) * area{chi^2 + 3 eta^2 <= 15/4, eta >= 1}`.
pub fn area_constant_a(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidParameter(format!("a = {a}, b = {b} must be positive")));
    }
    let top = 1.25f64.sqrt();
    let f = |eta: f64| 2.0 * (3.75 - 3.0 * eta * eta).max(0.0).sqrt();
    Ok(a / b * integrate_pieces(&f, &[1.0, top], 1e-16, 1e-13)?)
}

/// `min(A_{a,b}, pi a^2 / (4 b^2))`, the per-`C^2` lower bound on actions
/// outside the sphere orbits.
pub fn bound_constant_b(a: f64, b: f64) -> Result<f64> {
    Ok(area_constant_a(a, b)?.min(PI * a * a / (4.0 * b * b)))
}

/// Values `G_j = c_j` of the integrals; `sum c_j = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusLabel {
    #[serde(with = "crate::num17::vec")]
    pub c: Vec<f64>,
}

impl TorusLabel {
    pub fn new(c: Vec<f64>, k: usize) -> Result<Self> {
        let n = c.len();
        if k == 0 || k >= n {
            return Err(Error::InvalidParameter(format!("need 1 <= k < n, got k = {k}, n = {n}")));
        }
        let sum: f64 = c.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("integral values sum to {sum}, not 1")));
        }
        if c[..n - k].iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter("sphere integrals must be nonnegative".into()));
        }
        Ok(Self { c })
    }

    /// Semicolon-separated values, used as the CSV label.
    pub fn tag(&self) -> String {
        self.c.iter().map(|v| crate::num17::format(*v)).collect::<Vec<_>>().join(";")
    }
}

/// Grid scan of group-(ii) torus labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub labels: usize,
    pub planar_orbits: usize,
    #[serde(with = "crate::num17")]
    pub min_action: f64,
    pub argmin: TorusLabel,
    /// Labels with action below `bound * (1 - 1e-3)`.
    pub violations: usize,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub label: TorusLabel,
    #[serde(with = "crate::num17")]
    pub action: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpectrum {
    #[serde(with = "crate::num17::vec")]
    pub group_i: Vec<f64>,
    #[serde(with = "crate::num17")]
    pub group_ii_min_bound: f64,
    #[serde(with = "crate::num17")]
    pub window_top: f64,
    pub scan: Option<ScanReport>,
    #[serde(skip)]
    pub entries: Vec<ScanEntry>,
}

impl ActionSpectrum {
    /// Rows `group,index_or_label,action,bound_flag`; `bound_flag` marks the
    /// bound row itself and scanned actions that respect it.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,index_or_label,action,bound_flag\n");
        for (i, v) in self.group_i.iter().enumerate() {
            out.push_str(&format!("i,{},{},false\n", i + 1, crate::num17::format(*v)));
        }
        out.push_str(&format!("ii,bound,{},true\n", crate::num17::format(self.group_ii_min_bound)));
        let floor = self.group_ii_min_bound * (1.0 - 1e-3);
        for e in &self.entries {
            out.push_str(&format!(
                "ii,{},{},{}\n",
                e.label.tag(),
                crate::num17::format(e.action),
                e.action >= floor
            ));
        }
        out
    }
}

/// Limits of the group-(ii) scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Approximate number of torus labels.
    pub labels: usize,
    /// Largest number of labels evaluated before the scan stops as partial.
    pub budget: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { labels: 1000, budget: 100_000 }
    }
}

/// Action of the simple closed characteristic on the torus `{G_j = c_j}`:
/// the sphere part contributes `pi a^2 sum_{j<=n-k} c_j`, each planar factor
/// its orbit area.
pub fn torus_action(d: &IntegrableDomain, label: &TorusLabel) -> Result<f64> {
    let sys = PlanarSystem::from_domain(d);
    let n = d.n;
    let sphere: f64 = label.c[..n - d.k].iter().sum();
    let mut total = PI * d.a * d.a * sphere;
    for &e in &label.c[n - d.k..] {
        total += sys.min_action_at(e)?;
    }
    Ok(total)
}

/// Group (i) actions `j pi a^2 <= c` and the group-(ii) bound `C^2 B`.
pub fn characteristic_spectrum(d: &IntegrableDomain, window_top: f64) -> Result<ActionSpectrum> {
    if !(window_top > 0.0 && window_top.is_finite()) {
        return Err(Error::InvalidParameter(format!("window top {window_top} must be positive")));
    }
    let unit = PI * d.a * d.a;
    let group_i: Vec<f64> = (1..).map(|j| j as f64 * unit).take_while(|&v| v <= window_top).collect();
    let c = d.well.c();
    Ok(ActionSpectrum {
        group_i,
        group_ii_min_bound: c * c * bound_constant_b(d.a, d.b)?,
        window_top,
        scan: None,
        entries: Vec::new(),
    })
}

/// [`characteristic_spectrum`] plus a grid scan over torus labels with at
/// least one nonzero planar value. Each planar value runs over `m` points of
/// `(min H_C, 1]`, with `m^k` close to `opts.labels`; the sphere values share
/// the remainder equally. A scan cut short by the budget is flagged partial.
pub fn scan_spectrum(d: &IntegrableDomain, window_top: f64, opts: ScanOptions) -> Result<ActionSpectrum> {
    let mut spec = characteristic_spectrum(d, window_top)?;
    let sys = PlanarSystem::from_domain(d);
    let (n, k) = (d.n, d.k);
    let m = ((opts.labels.max(1) as f64).powf(1.0 / k as f64).round() as usize).max(2);
    let lo = sys.min_energy();
    let grid: Vec<f64> = (1..=m).map(|i| lo + (1.0 - lo) * i as f64 / m as f64).collect();
    let actions: Vec<f64> = grid.par_iter().map(|&e| sys.min_action_at(e)).collect::<Result<_>>()?;

    let mut entries = Vec::new();
    let mut partial = false;
    let mut idx = vec![0usize; k];
    'outer: loop {
        let planar: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        let sum: f64 = planar.iter().sum();
        if sum <= 1.0 && planar.iter().any(|v| v.abs() > 1e-12) {
            if entries.len() >= opts.budget {
                partial = true;
                break;
            }
            let share = (1.0 - sum) / (n - k) as f64;
            let mut c = vec![share; n - k];
            c.extend_from_slice(&planar);
            let action = PI * d.a * d.a * (1.0 - sum) + idx.iter().map(|&i| actions[i]).sum::<f64>();
            entries.push(ScanEntry { label: TorusLabel { c }, action });
        }
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < m {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    let floor = spec.group_ii_min_bound * (1.0 - 1e-3);
    let best = entries
        .iter()
        .min_by(|x, y| x.action.total_cmp(&y.action))
        .ok_or_else(|| Error::InvalidParameter("the label grid is empty".into()))?;
    spec.scan = Some(ScanReport {
        labels: entries.len(),
        planar_orbits: m,
        min_action: best.action,
        argmin: best.label.clone(),
        violations: entries.iter().filter(|e| e.action < floor).count(),
        partial,
    });
    spec.entries = entries;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::stream;
    use rand::Rng;

    fn sys(c: f64) -> PlanarSystem {
        PlanarSystem::new(1.0, 1.0, SmoothedWell::build(c, 0.1).unwrap()).unwrap()
    }

    #[test]
    fn equilibria_are_stationary() {
        let s = sys(3.0);
        for p in s.critical_points() {
            let end = s.flow(p, 10.0);
            assert!((end[0] - p[0]).abs() < 1e-10 && (end[1] - p[1]).abs() < 1e-10, "{p:?} -> {end:?}");
        }
    }

    #[test]
    fn energy_is_conserved() {
        let s = sys(3.0);
        for (z0, t) in [([0.7, 1.2], 1000.0), ([2.0, 0.3], 100.0), ([0.1, 2.9], 100.0)] {
            let tr = s.integrate(z0, t, 1000);
            let e0 = s.energy(z0[0], z0[1]);
            assert!(tr.max_energy_error <= 1e-8 * e0.abs().max(1.0), "{z0:?}: {:e}", tr.max_energy_error);
        }
    }

    #[test]
    fn orbits_close_after_one_period() {
        let s = sys(3.0);
        for (e, br) in [(-2.25, Branch::Upper), (-8.0, Branch::Lower), (-0.3, Branch::Upper), (2.0, Branch::Outer)] {
            let o = s.closed_orbit(e, br).unwrap();
            assert!(o.closed);
            let z0 = o.samples[0];
            let end = s.flow(z0, o.period);
            let d = (end[0] - z0[0]).hypot(end[1] - z0[1]);
            assert!(d < 1e-5, "e = {e}: return distance {d:e}");
        }
    }

    #[test]
    fn action_matches_direct_area_and_shoelace() {
        let s = sys(3.0);
        for (e, br) in [(-2.25, Branch::Upper), (1.5, Branch::Outer)] {
            let o = s.closed_orbit_with(e, br, 1 << 14).unwrap();
            let shoelace: f64 =
                0.5 * o.samples.windows(2).map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1]).sum::<f64>();
            assert!((shoelace - o.action).abs() < 1e-6 * o.action, "{shoelace} vs {}", o.action);
            // Area between the two branches x = +-a sqrt(e - g/b^2), in y.
            let lv = s.level(e, br).unwrap();
            let (y1, y2) = (lv.yc - lv.h, lv.yc + lv.h);
            let n = 400_000;
            let h = (y2 - y1) / n as f64;
            let direct: f64 = (0..n).map(|i| 2.0 * s.level_x(e, y1 + (i as f64 + 0.5) * h) * h).sum();
            assert!((direct - o.action).abs() < 1e-6 * o.action);
        }
    }

    #[test]
    fn action_derivative_is_period() {
        let s = sys(3.0);
        for (e, br) in [(-5.0, Branch::Upper), (-1.0, Branch::Lower), (0.8, Branch::Outer)] {
            let h = 1e-4;
            let da = (s.orbit_action(e + h, br).unwrap() - s.orbit_action(e - h, br).unwrap()) / (2.0 * h);
            let t = s.orbit_period(e, br).unwrap();
            assert!((da - t).abs() < 1e-6 * t, "e = {e}: dA/de = {da}, T = {t}");
        }
    }

    #[test]
    fn level_errors() {
        let s = sys(3.0);
        assert_eq!(s.closed_orbit(0.0, Branch::Upper), Err(Error::Homoclinic));
        assert!(matches!(s.closed_orbit(-9.5, Branch::Upper), Err(Error::EmptyLevel(_))));
        assert!(s.closed_orbit(1.0, Branch::Upper).is_err());
        assert!(s.closed_orbit(-1.0, Branch::Outer).is_err());
    }

    #[test]
    fn action_lower_bound_on_quarter_level() {
        let s = sys(3.0);
        let a = area_constant_a(1.0, 1.0).unwrap();
        for br in [Branch::Upper, Branch::Lower] {
            let o = s.closed_orbit(-2.25, br).unwrap();
            assert!(o.action >= 9.0 * a, "{} < {}", o.action, 9.0 * a);
        }
    }

    #[test]
    fn actions_shrink_to_zero_at_the_minimum() {
        let s = sys(3.0);
        let m = s.min_energy();
        let small = s.orbit_action(m + 1e-6, Branch::Upper).unwrap();
        let smaller = s.orbit_action(m + 1e-8, Branch::Upper).unwrap();
        assert!(small < 1e-4 && smaller < small / 50.0);
    }

    #[test]
    fn nested_levels_increase() {
        let s = sys(3.0);
        let m = s.min_energy();
        let mut prev = 0.0;
        for i in 1..40 {
            let e = m + (-m) * i as f64 / 40.0;
            let v = s.orbit_action(e, Branch::Upper).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let hc = s.homoclinic_level().unwrap();
        assert!(hc.loops[0].area > prev);
        let outer = s.orbit_action(1e-6, Branch::Outer).unwrap();
        assert!(outer > 2.0 * hc.loops[0].area);
        assert!(outer < 2.0 * hc.loops[0].area + 1e-3);
    }

    #[test]
    fn homoclinic_loops() {
        let s = sys(3.0);
        let hc = s.homoclinic_level().unwrap();
        assert_eq!(hc.loops[0].area, hc.loops[1].area);
        let m = s.well.argmin();
        for (lp, sign) in hc.loops.iter().zip([1.0, -1.0]) {
            assert_eq!(lp.enclosed_minimum, [0.0, sign * m]);
            // Winding number of the loop around its minimum is one.
            let wind: f64 = lp
                .samples
                .windows(2)
                .map(|w| {
                    let a = (w[0][1] - sign * m).atan2(w[0][0]);
                    let b = (w[1][1] - sign * m).atan2(w[1][0]);
                    (b - a + PI).rem_euclid(2.0 * PI) - PI
                })
                .sum();
            assert!((wind.abs() - 2.0 * PI).abs() < 1e-6);
            assert!(lp.area > s.orbit_action(-2.25, Branch::Upper).unwrap());
        }
    }

    #[test]
    fn area_constant() {
        // Closed form of 2 int_1^{sqrt 5/2} sqrt(15/4 - 3 eta^2) d eta.
        let r2 = 1.25f64;
        let f = |t: f64| t * (r2 - t * t).max(0.0).sqrt() + r2 * (t / r2.sqrt()).min(1.0).asin();
        let exact = 3f64.sqrt() * (f(r2.sqrt()) - f(1.0));
        let a = area_constant_a(1.0, 1.0).unwrap();
        assert!((a - exact).abs() < 1e-12 * exact, "{a} vs {exact}");
        assert!((a - 0.1379).abs() < 1e-4);
        assert!((area_constant_a(2.0, 1.0).unwrap() - 2.0 * a).abs() < 1e-14);
        assert!((area_constant_a(3.0, 0.5).unwrap() * 0.5 / 3.0 - a).abs() < 1e-14);
    }

    #[test]
    fn group_one_actions() {
        let d = IntegrableDomain::build(2, 1, 1.0, 1.0, 3.0, 0.1).unwrap();
        let s = characteristic_spectrum(&d, 10.0).unwrap();
        assert_eq!(s.group_i.len(), 3);
        for (j, v) in s.group_i.iter().enumerate() {
            assert!((v - (j + 1) as f64 * PI).abs() < 1e-12);
        }
        let d6 = IntegrableDomain::build(2, 1, 1.0, 1.0, 6.0, 0.1).unwrap();
        let s6 = characteristic_spectrum(&d6, 10.0).unwrap();
        assert!((s6.group_ii_min_bound / s.group_ii_min_bound - 4.0).abs() < 1e-12);
        assert!(characteristic_spectrum(&d, 1.0).unwrap().group_i.is_empty());
    }

    #[test]
    fn scan_respects_the_bound() {
        let d = IntegrableDomain::build(2, 1, 1.0, 1.0, 3.0, 0.1).unwrap();
        let s = scan_spectrum(&d, 10.0, ScanOptions::default()).unwrap();
        let r = s.scan.as_ref().unwrap();
        assert_eq!(r.violations, 0);
        assert!(!r.partial);
        assert!(r.labels >= 990);
        let csv = s.to_csv();
        assert!(csv.starts_with("group,index_or_label,action,bound_flag\ni,1,"));
        let cut = scan_spectrum(&d, 10.0, ScanOptions { labels: 1000, budget: 10 }).unwrap();
        assert!(cut.scan.unwrap().partial);
    }

    #[test]
    fn torus_action_sums_factors() {
        let d = IntegrableDomain::build(3, 2, 1.0, 1.0, 2.0, 0.1).unwrap();
        let sys = PlanarSystem::from_domain(&d);
        let label = TorusLabel::new(vec![0.5, -1.0, 1.5], 2).unwrap();
        let v = torus_action(&d, &label).unwrap();
        let expect = 0.5 * PI + sys.orbit_action(-1.0, Branch::Upper).unwrap()
            + sys.orbit_action(1.5, Branch::Outer).unwrap();
        assert!((v - expect).abs() < 1e-12);
        assert!(TorusLabel::new(vec![-0.5, 1.0, 0.5], 2).is_err());
    }

    #[test]
    fn random_orbits_have_nonnegative_action() {
        let s = sys(2.0);
        let mut rng = stream(7, 0);
        let m = s.min_energy();
        for _ in 0..50 {
            let e: f64 = rng.gen_range(m + 0.01..3.0);
            if e.abs() < 1e-9 {
                continue;
            }
            let br = if e > 0.0 { Branch::Outer } else if rng.gen_bool(0.5) { Branch::Upper } else { Branch::Lower };
            assert!(s.orbit_action(e, br).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn orbit_json_downsamples() {
        let o = sys(3.0).closed_orbit(-2.0, Branch::Upper).unwrap();
        let j: serde_json::Value = serde_json::from_str(&o.to_json(16).unwrap()).unwrap();
        assert_eq!(j["downsample"], 16);
        let count = j["samples"].as_array().unwrap().len();
        assert_eq!(count, (o.samples.len() - 1).div_ceil(16) + 1);
    }
}
