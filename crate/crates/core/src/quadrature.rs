//! Adaptive Gauss-Kronrod (7, 15) quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One G7K15 panel: Kronrod estimate and its difference from the Gauss one.
fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let s = f(c - h * x) + f(c + h * x);
        kron += w * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, (kron - gauss).abs() * h)
}

/// Integral of `f` over `[a, b]` to absolute tolerance `abs_tol` or relative
/// tolerance `rel_tol`, by bisecting the panel with the largest error.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    integrate_pieces(&f, &[a, b], abs_tol, rel_tol)
}

/// As [`integrate`], over consecutive pieces split at `breaks` (sorted, with
/// the end points first and last), so that kinks at the breaks do not slow
/// convergence.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let mut panels: Vec<(f64, f64, f64, f64)> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = panel(f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    for _ in 0..4000 {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::Integration("non-finite integrand".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let (i, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("at least one panel");
        let (a, b, _, _) = panels.swap_remove(i);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            // Interval exhausted at machine resolution.
            let (v, _) = panel(f, a, b);
            panels.push((a, b, v, 0.0));
            continue;
        }
        for (lo, hi) in [(a, m), (m, b)] {
            let (v, e) = panel(f, lo, hi);
            panels.push((lo, hi, v, e));
        }
    }
    let total: f64 = panels.iter().map(|p| p.2).sum();
    let err: f64 = panels.iter().map(|p| p.3).sum();
    if err <= 1e3 * abs_tol.max(rel_tol * total.abs()) {
        Ok(total)
    } else {
        Err(Error::Integration(format!("no convergence, error estimate {err:e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| x.powi(10) - 3.0 * x * x, -1.0, 2.0, 1e-14, 1e-14).unwrap();
        let exact = (2f64.powi(11) + 1.0) / 11.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn square_root_endpoint() {
        // Quarter disc.
        let v = integrate(|x| (1.0 - x * x).max(0.0).sqrt(), 0.0, 1.0, 1e-13, 1e-13).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-11);
    }

    #[test]
    fn kink_at_break() {
        let f = |x: f64| x.abs();
        let v = integrate_pieces(&f, &[-1.0, 0.0, 3.0], 1e-14, 1e-14).unwrap();
        assert!((v - 5.0).abs() < 1e-13);
    }
}
