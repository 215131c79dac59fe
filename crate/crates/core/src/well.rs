//! The double well `g_C(t) = max(-t^2, 3t^2 - 4C^2)` and its `C^2` smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `C^2` smoothing of `g_C`: equal to `-t^2` for `|t| <= C - w`, to
/// `3t^2 - 4C^2` for `|t| >= C + w`, and a quintic Hermite blend in between,
/// where `w` is the blend half-width.
///
/// The blend dips to about `-C^2 + 1.16 C w`, so `build` takes
/// `w = eps / max(1, 1.5 C)` to keep the minimum within `eps` of `-C^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WellParams", into = "WellParams")]
pub struct SmoothedWell {
    c: f64,
    eps: f64,
    half_width: f64,
    /// Coefficients of the blend in powers of `|t| - (C - w)`.
    coef: [f64; 6],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WellParams {
    #[serde(with = "crate::num17")]
    c: f64,
    #[serde(with = "crate::num17")]
    eps: f64,
    #[serde(with = "crate::num17")]
    half_width: f64,
}

impl From<SmoothedWell> for WellParams {
    fn from(w: SmoothedWell) -> Self {
        Self { c: w.c, eps: w.eps, half_width: w.half_width }
    }
}

impl TryFrom<WellParams> for SmoothedWell {
    type Error = Error;
    fn try_from(p: WellParams) -> Result<Self> {
        SmoothedWell::with_half_width(p.c, p.eps, p.half_width)
    }
}

/// Result of the grid audit of a smoothed well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellAudit {
    pub grid_points: usize,
    /// Smallest value of `(t/2) g'(t) - g(t)` on the grid.
    #[serde(with = "crate::num17")]
    pub min_condition: f64,
    #[serde(with = "crate::num17")]
    pub min_value: f64,
    #[serde(with = "crate::num17")]
    pub argmin: f64,
}

fn quintic(h: f64, v0: f64, d0: f64, s0: f64, v1: f64, d1: f64, s1: f64) -> [f64; 6] {
    let dv = v1 - (v0 + d0 * h + 0.5 * s0 * h * h);
    let dd = d1 - (d0 + s0 * h);
    let ds = s1 - s0;
    let c3 = (20.0 * dv - 8.0 * dd * h + ds * h * h) / (2.0 * h.powi(3));
    let c4 = (-30.0 * dv + 14.0 * dd * h - 2.0 * ds * h * h) / (2.0 * h.powi(4));
    let c5 = (12.0 * dv - 6.0 * dd * h + ds * h * h) / (2.0 * h.powi(5));
    [v0, d0, 0.5 * s0, c3, c4, c5]
}

impl SmoothedWell {
    /// Builds the well for `0 < eps < C/10` and audits it on a grid.
    pub fn build(c: f64, eps: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("well depth C = {c} must be positive")));
        }
        if !(eps > 0.0 && eps < c / 10.0) {
            return Err(Error::InvalidParameter(format!("blend width eps = {eps} must lie in (0, C/10)")));
        }
        let w = Self::with_half_width(c, eps, eps / (1.5 * c).max(1.0))?;
        w.verify(10_000)?;
        Ok(w)
    }

    /// Well with an explicit blend half-width `w <= eps`, without the grid audit.
    pub fn with_half_width(c: f64, eps: f64, half_width: f64) -> Result<Self> {
        if !(c > 0.0 && eps > 0.0 && half_width > 0.0 && half_width <= eps && half_width < c)
            || !(c.is_finite() && eps.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "well parameters C = {c}, eps = {eps}, half width = {half_width} are inconsistent"
            )));
        }
        let (lo, hi) = (c - half_width, c + half_width);
        let coef = quintic(2.0 * half_width, -lo * lo, -2.0 * lo, -2.0, 3.0 * hi * hi - 4.0 * c * c, 6.0 * hi, 6.0);
        Ok(Self { c, eps, half_width, coef })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `t -> s^2 g(t/s)`, the well of the domain scaled by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::with_half_width(self.c * s, self.eps * s.max(s * s), self.half_width * s)
    }

    /// Value, first and second derivative at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let a = t.abs();
        let sign = if t < 0.0 { -1.0 } else { 1.0 };
        let (lo, hi) = (self.c - self.half_width, self.c + self.half_width);
        if a <= lo {
            (-a * a, -2.0 * t, -2.0)
        } else if a >= hi {
            (3.0 * a * a - 4.0 * self.c * self.c, 6.0 * t, 6.0)
        } else {
            let s = a - lo;
            let k = &self.coef;
            let v = k[0] + s * (k[1] + s * (k[2] + s * (k[3] + s * (k[4] + s * k[5]))));
            let d = k[1] + s * (2.0 * k[2] + s * (3.0 * k[3] + s * (4.0 * k[4] + s * 5.0 * k[5])));
            let dd = 2.0 * k[2] + s * (6.0 * k[3] + s * (12.0 * k[4] + s * 20.0 * k[5]));
            (v, sign * d, dd)
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.eval(t).1
    }

    /// Location of the minimum on `t > 0`: the zero of `g'` in the blend
    /// window, by bisection.
    pub fn argmin(&self) -> f64 {
        let (mut lo, mut hi) = (self.c - self.half_width, self.c + self.half_width);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.derivative(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn min_value(&self) -> f64 {
        self.value(self.argmin())
    }

    /// Grid audit of `(t/2) g' >= g`, of the minimum value range and of the
    /// minimiser location. `points` are spread over `[0, 2C]`, a third of
    /// them inside the blend window; `g` is even so `t < 0` mirrors.
    pub fn audit(&self, points: usize) -> WellAudit {
        let (lo, hi) = (self.c - self.half_width, self.c + self.half_width);
        let dense = points / 3;
        let coarse = points - dense;
        let mut min_condition = f64::INFINITY;
        let mut min_value = f64::INFINITY;
        let mut argmin = 0.0;
        let ts = (0..coarse)
            .map(|i| 2.0 * self.c * i as f64 / (coarse - 1) as f64)
            .chain((0..dense).map(|i| lo + (hi - lo) * i as f64 / (dense - 1) as f64));
        for t in ts {
            let (g, d, _) = self.eval(t);
            let cond = 0.5 * t * d - g;
            // Exact equality on the inner branch; allow for rounding.
            min_condition = min_condition.min(cond + 1e-13 * (1.0 + t * t));
            if g < min_value {
                min_value = g;
                argmin = t;
            }
        }
        let m = self.argmin();
        if self.value(m) < min_value {
            min_value = self.value(m);
            argmin = m;
        }
        WellAudit { grid_points: points, min_condition, min_value, argmin }
    }

    pub fn verify(&self, points: usize) -> Result<WellAudit> {
        let a = self.audit(points);
        let c2 = self.c * self.c;
        if a.min_condition < 0.0 {
            return Err(Error::WellCondition(format!("(t/2)g' - g reaches {:e}", a.min_condition)));
        }
        if !(a.min_value >= -c2 - 1e-12 * c2 && a.min_value <= -c2 + self.eps) {
            return Err(Error::WellCondition(format!("minimum {} outside [-C^2, -C^2 + eps]", a.min_value)));
        }
        if (a.argmin - self.c).abs() > self.eps {
            return Err(Error::WellCondition(format!("minimum at {} is not within eps of C", a.argmin)));
        }
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn branch_values() {
        let w = SmoothedWell::build(3.0, 0.01).unwrap();
        assert_eq!(w.value(0.0), 0.0);
        assert_eq!(w.value(6.0), 8.0 * 9.0);
        assert_eq!(w.value(-6.0), 72.0);
        assert_eq!(w.value(2.5), -6.25);
        let m = w.min_value();
        assert!((-9.0..=-9.0 + 0.01).contains(&m));
        assert!((w.argmin() - 3.0).abs() < 0.01);
    }

    #[test]
    fn blend_is_c2_at_junctions() {
        for c in [0.5, 1.0, 3.0, 8.0] {
            let w = SmoothedWell::build(c, 0.01).unwrap();
            for edge in [c - w.half_width(), c + w.half_width()] {
                let (a, b) = (w.eval(edge - 1e-13), w.eval(edge + 1e-13));
                assert!((a.0 - b.0).abs() < 1e-9);
                assert!((a.1 - b.1).abs() < 1e-9);
                // The third derivative is of order 1/w^3, hence the looser bound.
                assert!((a.2 - b.2).abs() < 1e-4, "{c}: {a:?} {b:?}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let w = SmoothedWell::build(2.0, 0.1).unwrap();
        for t in [-2.05, -1.99, 1.95, 2.0, 2.03, 2.06] {
            let h = 1e-6;
            let fd = (w.value(t + h) - w.value(t - h)) / (2.0 * h);
            assert!((fd - w.derivative(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn test_matrix_passes_condition() {
        for c in 1..=8 {
            for eps in [1e-2, 1e-3] {
                let w = SmoothedWell::build(c as f64, eps).unwrap();
                let a = w.verify(10_000).unwrap();
                assert!(a.min_condition >= 0.0);
            }
        }
    }

    #[test]
    fn dominates_inverted_parabola() {
        let w = SmoothedWell::build(2.0, 0.05).unwrap();
        for i in 0..10_000 {
            let t = -5.0 + 10.0 * i as f64 / 9999.0;
            assert!(w.value(t) >= -t * t - 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SmoothedWell::build(1.0, 0.2).is_err());
        assert!(SmoothedWell::build(0.0, 0.01).is_err());
        assert!(SmoothedWell::build(1.0, -0.01).is_err());
    }

    #[test]
    fn scaling_law() {
        let w = SmoothedWell::build(3.0, 0.02).unwrap();
        for s in [0.5, 2.0] {
            let ws = w.scaled(s).unwrap();
            for t in [0.3, 2.99, 3.0, 3.004, 5.0] {
                assert!((ws.value(s * t) - s * s * w.value(t)).abs() < 1e-9 * (1.0 + t * t));
            }
            ws.verify(5000).unwrap();
        }
    }

    #[test]
    fn json_round_trip() {
        let w = SmoothedWell::build(3.0, 0.01).unwrap();
        let back: SmoothedWell = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(w, back);
    }

    proptest! {
        #[test]
        fn condition_holds_everywhere(c in 0.2f64..10.0, frac in 0.001f64..0.099, t in -25.0f64..25.0) {
            let w = SmoothedWell::build(c, frac * c).unwrap();
            let (g, d, _) = w.eval(t);
            prop_assert!(0.5 * t * d - g >= -1e-12 * (1.0 + t * t));
        }
    }
}
