//! Seeded random Hamiltonians, used for conjugator pools, candidate maps and
//! property tests.

use rand::Rng;

use super::flow::ContactIsotopy;
use super::hamiltonian::{ContactHamiltonian, SupportMeta};
use crate::error::Result;

fn linear_terms<R: Rng + ?Sized>(rng: &mut R, n: usize, count: usize, scale: f64) -> (String, f64) {
    let mut text = String::new();
    let mut total = 0.0;
    for _ in 0..count {
        let c: f64 = rng.gen_range(-scale..scale);
        let var = if rng.gen_bool(0.5) { 'x' } else { 'y' };
        let idx = rng.gen_range(1..=n);
        let sign = if c < 0.0 { '-' } else { '+' };
        text.push_str(&format!(" {sign} {:?}*{var}{idx}", c.abs()));
        total += c.abs();
    }
    (text, total)
}

/// `amp * bump(rho; ra, rb) * (c0 + linear terms)` with
/// `ra < rb <= rho_max`, so supported in `{rho < rho_max}`; not necessarily
/// positive.
pub fn random_hamiltonian<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
    amplitude: f64,
    rho_max: f64,
) -> Result<ContactHamiltonian> {
    let ra = rho_max * rng.gen_range(0.3..0.6);
    let rb = rho_max * rng.gen_range(0.7..1.0);
    let c0: f64 = rng.gen_range(0.0..1.0);
    let (lin, _) = linear_terms(rng, n, 3, 0.6);
    let text = format!("{amplitude:?}*bump(rho; {ra:?}, {rb:?}) * ({c0:?}{lin})");
    ContactHamiltonian::from_expression(&text, n, k)
}

/// Unit-time flow of a [`random_hamiltonian`].
pub fn random_isotopy<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
    amplitude: f64,
    rho_max: f64,
) -> Result<ContactIsotopy> {
    Ok(ContactIsotopy::autonomous(random_hamiltonian(rng, n, k, amplitude, rho_max)?))
}

/// A positive element of the cone with exact support data:
/// `amp * bump(rho; ra, rb) * (1 + linear terms + q x1^2)`, linear
/// coefficients summing to at most 0.5 in absolute value.
pub fn random_cone_element<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, ra: f64, rb: f64) -> Result<ContactHamiltonian> {
    let amp: f64 = rng.gen_range(0.5..1.5);
    let q: f64 = rng.gen_range(0.0..0.5);
    let (lin, total) = linear_terms(rng, n, 2, 0.25);
    let text = format!("{amp:?}*bump(rho; {ra:?}, {rb:?}) * (1{lin} + {q:?}*x1^2)");
    // |x_j|, |y_j| <= 1 on the unit sphere.
    let meta = SupportMeta { max: amp * (1.0 + total + q), rho1: rb, rho0: ra, min_inner: amp * (1.0 - total) };
    ContactHamiltonian::from_expression(&text, n, k)?.with_meta(meta)
}
