//! Contact kinematics on the round sphere `S^{2n-1}` with
//! `alpha = 1/2 sum (x_j dy_j - y_j dx_j)`.
//!
//! Contact Hamiltonians are lifted to `R^{2n}` as `H(z) = |z|^2 K(z/|z|)`;
//! the contact field is the Hamiltonian field of the lift projected back to
//! the sphere along the radial direction.

pub mod flow;
pub mod hamiltonian;
pub mod random;
pub mod squeeze;
pub mod symplectization;

pub use flow::{adjoint_action, AdjointImage, ConformalBounds, ConformalFactorRecord, ContactIsotopy};
pub use random::{random_cone_element, random_hamiltonian, random_isotopy};
pub use hamiltonian::{ContactHamiltonian, MetaAudit, SphereFunction, SupportMeta};
pub use squeeze::{liouville_squeeze_witness, squeeze_scale, RadialBump, SqueezeWitness};
pub use symplectization::{
    audit_smoothing, smoothed_symplectization, symplectic_defect, symplectize, symplectize_cartesian, SmoothedSymplectization,
    SmoothingAudit, SmoothingCertificate,
};

use crate::error::{Error, Result};
use crate::geometry::{apply_j, dot, norm_sq, normalize, omega, PhaseVector};

const UNIT_TOL: f64 = 1e-9;

pub(crate) fn check_unit(theta: &[f64]) -> Result<()> {
    let n2 = norm_sq(theta);
    if !n2.is_finite() || (n2.sqrt() - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnit(n2.sqrt()));
    }
    Ok(())
}

/// The round contact form evaluated on `v` at `theta`.
pub fn alpha(theta: &[f64], v: &[f64]) -> f64 {
    0.5 * omega(theta, v)
}

pub(crate) fn reeb_raw(theta: &[f64], out: &mut [f64]) {
    let n = theta.len() / 2;
    for j in 0..n {
        out[j] = -2.0 * theta[n + j];
        out[n + j] = 2.0 * theta[j];
    }
}

pub fn reeb_field(theta: &[f64]) -> Result<Vec<f64>> {
    check_unit(theta)?;
    let mut out = vec![0.0; theta.len()];
    reeb_raw(theta, &mut out);
    Ok(out)
}

/// Writes `Y_K(theta)` into `out` and returns `(K(theta), dK(R)(theta))`.
/// `grad` is scratch space of the same length.
pub(crate) fn contact_field_raw(
    k: &ContactHamiltonian,
    theta: &[f64],
    grad: &mut [f64],
    out: &mut [f64],
) -> (f64, f64) {
    if k.outside_support(theta) {
        out.iter_mut().for_each(|o| *o = 0.0);
        return (0.0, 0.0);
    }
    let val = k.value_and_gradient(theta, grad);
    let n = theta.len() / 2;
    let mut dkr = 0.0;
    for j in 0..n {
        dkr += grad[j] * (-2.0 * theta[n + j]) + grad[n + j] * (2.0 * theta[j]);
    }
    let radial = dot(grad, theta);
    for (g, t) in grad.iter_mut().zip(theta) {
        *g += (2.0 * val - radial) * t;
    }
    apply_j(grad, out);
    let along = dot(out, theta);
    for (o, t) in out.iter_mut().zip(theta) {
        *o -= along * t;
    }
    (val, dkr)
}

pub fn contact_vector_field(k: &ContactHamiltonian, theta: &[f64]) -> Result<Vec<f64>> {
    check_unit(theta)?;
    if theta.len() != k.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), got: theta.len() });
    }
    let mut grad = vec![0.0; theta.len()];
    let mut out = vec![0.0; theta.len()];
    let (val, _) = contact_field_raw(k, theta, &mut grad, &mut out);
    if !val.is_finite() || out.iter().any(|o| !o.is_finite()) {
        return Err(Error::Integration("contact Hamiltonian evaluated to a non-finite value".into()));
    }
    Ok(out)
}

/// Directional derivative `dF(v)` on the sphere by central differences along
/// the great circle through `theta` in direction `v`.
pub fn sphere_derivative(f: impl Fn(&[f64]) -> f64, theta: &[f64], v: &[f64], step: f64) -> f64 {
    let mut p: Vec<f64> = theta.iter().zip(v).map(|(t, d)| t + step * d).collect();
    let mut m: Vec<f64> = theta.iter().zip(v).map(|(t, d)| t - step * d).collect();
    normalize(&mut p);
    normalize(&mut m);
    (f(&p) - f(&m)) / (2.0 * step)
}

/// `{H, K} = dK(Y_H) - K dH(R)` at `theta`, differentials by central
/// differences with step `fd_step`.
pub fn lie_bracket(h: &ContactHamiltonian, k: &ContactHamiltonian, theta: &[f64], fd_step: f64) -> Result<f64> {
    if h.k() != k.k() || h.dim() != k.dim() {
        return Err(Error::InvalidParameter("bracket arguments must share n and k".into()));
    }
    let yh = contact_vector_field(h, theta)?;
    let mut r = vec![0.0; theta.len()];
    reeb_raw(theta, &mut r);
    let dk_yh = sphere_derivative(|p| k.value(p), theta, &yh, fd_step);
    let dh_r = sphere_derivative(|p| h.value(p), theta, &r, fd_step);
    Ok(dk_yh - k.value(theta) * dh_r)
}

/// The linear field `sum_{j>n-k} (-x_j d/dx_j + y_j d/dy_j)`.
pub fn model_field_yk(k: usize, z: &PhaseVector) -> Result<PhaseVector> {
    let n = z.n();
    crate::geometry::check_k(n, k)?;
    let mut out = vec![0.0; 2 * n];
    for j in n - k..n {
        out[j] = -z.coords()[j];
        out[n + j] = z.coords()[n + j];
    }
    PhaseVector::new(out)
}

/// The linear field `sum_{j<=2n-k} (x_j d/dx_j - y_j d/dy_j)`, for `n <= k < 2n`.
pub fn model_field_zk(k: usize, z: &PhaseVector) -> Result<PhaseVector> {
    let n = z.n();
    if k < n || k >= 2 * n {
        return Err(Error::IndexOutOfRange(format!("k = {k} must satisfy n <= k < 2n = {}", 2 * n)));
    }
    let mut out = vec![0.0; 2 * n];
    for j in 0..2 * n - k {
        out[j] = z.coords()[j];
        out[n + j] = -z.coords()[n + j];
    }
    PhaseVector::new(out)
}

/// Commutator `[X, Y](z) = DY(z) X(z) - DX(z) Y(z)` of two linear fields,
/// which for linear fields is `Y(X(z)) - X(Y(z))`.
pub fn linear_field_commutator(
    x: impl Fn(&PhaseVector) -> PhaseVector,
    y: impl Fn(&PhaseVector) -> PhaseVector,
    z: &PhaseVector,
) -> PhaseVector {
    let yx = y(&x(z));
    let xy = x(&y(z));
    let d: Vec<f64> = yx.coords().iter().zip(xy.coords()).map(|(a, b)| a - b).collect();
    PhaseVector::new(d).expect("commutator of finite fields")
}
