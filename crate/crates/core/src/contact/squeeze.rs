//! Squeezing a bump Hamiltonian on the standard contact `R^{2n+1}`,
//! `alpha = dt + sum (x_j dy_j - y_j dx_j)`, by the contracting flow
//! `psi_tau(x, y, t) = (e^{-tau} x, e^{-tau} y, e^{-2 tau} t)`, which
//! satisfies `psi_tau^* alpha = e^{-2 tau} alpha`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::smoothstep;

/// `H(p) = amplitude * (1 - step((|p| - r1)/(r2 - r1)))` on `R^{2n+1}`:
/// equal to `amplitude` on the ball of radius `r1`, supported in radius `r2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBump {
    pub n: usize,
    #[serde(with = "crate::num17")]
    pub r1: f64,
    #[serde(with = "crate::num17")]
    pub r2: f64,
    #[serde(with = "crate::num17")]
    pub amplitude: f64,
}

impl RadialBump {
    pub fn new(n: usize, r1: f64, r2: f64, amplitude: f64) -> Result<Self> {
        if n == 0 || !(r1 > 0.0) || !(amplitude > 0.0) || !r2.is_finite() || !amplitude.is_finite() {
            return Err(Error::InvalidParameter("bump needs n >= 1, r1 > 0 and a positive amplitude".into()));
        }
        if r2 <= r1 {
            return Err(Error::Infeasible(format!("outer radius {r2} does not exceed inner radius {r1}")));
        }
        Ok(Self { n, r1, r2, amplitude })
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        let d = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.amplitude * (1.0 - smoothstep((d - self.r1) / (self.r2 - self.r1)).0)
    }

    /// `Ad_{psi_tau} H (p) = e^{-2 tau} H(psi_tau^{-1} p)`.
    pub fn adjoint(&self, tau: f64, p: &[f64]) -> f64 {
        let n = self.n;
        let pre: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(i, c)| if i < 2 * n { c * tau.exp() } else { c * (2.0 * tau).exp() })
            .collect();
        (-2.0 * tau).exp() * self.value(&pre)
    }
}

/// The contraction parameters and the grid check of `Ad H <= s H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeWitness {
    #[serde(with = "crate::num17")]
    pub tau: f64,
    #[serde(with = "crate::num17")]
    pub s: f64,
    pub grid_points: usize,
    /// Largest value of `Ad H - s H` on the grid.
    #[serde(with = "crate::num17")]
    pub max_excess: f64,
    pub verified: bool,
}

pub fn squeeze_scale(tau: f64) -> f64 {
    (-2.0 * tau).exp()
}

/// Returns `tau = log(r2/r1)` (or `min_tau` if larger) and `s = e^{-2 tau}`
/// and checks `Ad_{psi_tau} H <= s H` on a lattice of about `grid` points
/// covering the support.
pub fn liouville_squeeze_witness(h: &RadialBump, min_tau: f64, grid: usize) -> Result<SqueezeWitness> {
    let tau = (h.r2 / h.r1).ln().max(min_tau);
    let s = squeeze_scale(tau);
    let dim = 2 * h.n + 1;
    let per_axis = ((grid as f64).powf(1.0 / dim as f64).ceil() as usize).max(2);
    let total = per_axis.pow(dim as u32);
    let half = 1.1 * h.r2;
    let mut idx = vec![0usize; dim];
    let mut p = vec![0.0; dim];
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..total {
        for i in 0..dim {
            p[i] = -half + 2.0 * half * idx[i] as f64 / (per_axis - 1) as f64;
        }
        max_excess = max_excess.max(h.adjoint(tau, &p) - s * h.value(&p));
        for i in 0..dim {
            idx[i] += 1;
            if idx[i] < per_axis {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(SqueezeWitness { tau, s, grid_points: total, max_excess, verified: max_excess <= 1e-12 })
}
