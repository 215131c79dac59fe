use serde::{Deserialize, Serialize};

/// Numerical knobs shared by the kinematics and audit routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Absolute tolerance for identities that hold exactly in theory.
    pub abs: f64,
    /// Central finite-difference step for differentials on the sphere.
    pub fd_step: f64,
    /// Fixed RK4 step (per unit of isotopy time).
    pub flow_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { abs: 1e-10, fd_step: 1e-5, flow_step: 5e-4 }
    }
}
