//! Coordinates on the standard symplectic space `R^{2n}`.
//!
//! Coordinates are always ordered `(x_1..x_n, y_1..y_n)`. The coordinate
//! subspace `Pi_k` is spanned by the last `k` basis vectors, so for `k <= n`
//! it is `{x = 0, y_1 = .. = y_{n-k} = 0}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `R^{2n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    #[serde(with = "crate::num17::vec")]
    coords: Vec<f64>,
}

impl PhaseVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || !coords.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "phase vector needs an even positive length, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        Ok(Self { coords })
    }

    pub fn zeros(n: usize) -> Self {
        Self { coords: vec![0.0; 2 * n] }
    }

    /// Builds `(x, y)`; both halves must have the same length.
    pub fn from_xy(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        Self::new(x.iter().chain(y).copied().collect())
    }

    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn x(&self) -> &[f64] {
        &self.coords[..self.n()]
    }

    pub fn y(&self) -> &[f64] {
        &self.coords[self.n()..]
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.coords)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { coords: self.coords.iter().map(|c| c * s).collect() }
    }
}

/// Point of `R_+ x S^{2n-1}`; `r` is the squared radius, i.e. units of action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    #[serde(with = "crate::num17")]
    pub r: f64,
    #[serde(with = "crate::num17::vec")]
    pub theta: Vec<f64>,
}

impl PolarPoint {
    pub fn new(r: f64, theta: Vec<f64>) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("polar radius must be positive, got {r}")));
        }
        let norm = norm_sq(&theta).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnit(norm));
        }
        Ok(Self { r, theta })
    }
}

/// The split `r = u + v` relative to `Pi_k` together with the angle ratio
/// `v / u` (`+inf` on `Pi_k` itself).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCoordinates {
    pub u: f64,
    pub v: f64,
    pub angle_ratio: f64,
    pub k: usize,
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Rescales `v` in place to unit length.
pub(crate) fn normalize(v: &mut [f64]) {
    let inv = 1.0 / norm_sq(v).sqrt();
    v.iter_mut().for_each(|c| *c *= inv);
}

/// Returns `(u, v)` for raw coordinates without validation.
pub fn split_uv(coords: &[f64], k: usize) -> (f64, f64) {
    let n = coords.len() / 2;
    let (x, y) = coords.split_at(n);
    let u = norm_sq(x) + norm_sq(&y[..n - k]);
    let v = norm_sq(&y[n - k..]);
    (u, v)
}

/// Angle ratio `v/u` of raw coordinates, `+inf` when `u = 0 < v`.
pub fn angle_ratio(coords: &[f64], k: usize) -> f64 {
    let (u, v) = split_uv(coords, k);
    ratio(u, v)
}

fn ratio(u: f64, v: f64) -> f64 {
    if u > 0.0 {
        v / u
    } else if v > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

pub fn polar_decompose(z: &PhaseVector) -> Result<PolarPoint> {
    let r = z.norm_sq();
    if r == 0.0 {
        return Err(Error::OriginExcluded);
    }
    let inv = 1.0 / r.sqrt();
    Ok(PolarPoint { r, theta: z.coords.iter().map(|c| c * inv).collect() })
}

pub fn polar_compose(p: &PolarPoint) -> PhaseVector {
    let s = p.r.sqrt();
    PhaseVector { coords: p.theta.iter().map(|t| t * s).collect() }
}

/// The Liouville field `Z = 1/2 sum (x_i d/dx_i + y_i d/dy_i)`.
pub fn liouville_field(z: &PhaseVector) -> PhaseVector {
    z.scaled(0.5)
}

/// `omega(a, b) = sum_j (a_{x_j} b_{y_j} - a_{y_j} b_{x_j})`.
pub fn symplectic_pairing(a: &PhaseVector, b: &PhaseVector) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.coords.len(), got: b.coords.len() });
    }
    Ok(omega(&a.coords, &b.coords))
}

pub(crate) fn omega(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() / 2;
    (0..n).map(|j| a[j] * b[n + j] - a[n + j] * b[j]).sum()
}

/// Applies the complex structure used for Hamiltonian fields:
/// `X_F = J grad F` with `J(g_x, g_y) = (-g_y, g_x)`.
pub(crate) fn apply_j(grad: &[f64], out: &mut [f64]) {
    let n = grad.len() / 2;
    for j in 0..n {
        out[j] = -grad[n + j];
        out[n + j] = grad[j];
    }
}

pub(crate) fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    Ok(())
}

pub fn split_coordinates(z: &PhaseVector, k: usize) -> Result<SplitCoordinates> {
    check_k(z.n(), k)?;
    if z.norm_sq() == 0.0 {
        return Err(Error::OriginExcluded);
    }
    let (u, v) = split_uv(&z.coords, k);
    Ok(SplitCoordinates { u, v, angle_ratio: ratio(u, v), k })
}
