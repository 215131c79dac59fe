//! Browser bindings: planar level curves, hyperboloid sandwiches and action
//! spectra, returned as JSON strings with plain numbers for plotting.

use conecap_core::capacity::capacity_interval;
use conecap_core::contact::{ContactHamiltonian, SupportMeta};
use conecap_core::domains::{audit_sandwich, IntegrableDomain, StarDomain};
use conecap_core::orbits::{scan_spectrum, Branch, PlanarSystem, ScanOptions};
use conecap_core::Result;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn thin(samples: &[[f64; 2]], points: usize) -> Vec<[f64; 2]> {
    let step = (samples.len() / points.max(2)).max(1);
    let mut out: Vec<[f64; 2]> = samples.iter().step_by(step).copied().collect();
    if let Some(last) = samples.last() {
        out.push(*last);
    }
    out
}

/// The closed orbit of `H_C` at energy `e` (upper well for `e < 0`, lower
/// well when `lower` is set), with the homoclinic figure-eight for context.
pub fn level_curve_json(a: f64, b: f64, c: f64, eps: f64, e: f64, lower: bool, points: usize) -> Result<String> {
    let d = IntegrableDomain::build(2, 1, a, b, c, eps)?;
    let sys = PlanarSystem::from_domain(&d);
    let branch = match Branch::default_for(e) {
        Branch::Upper if lower => Branch::Lower,
        br => br,
    };
    let orbit = sys.closed_orbit(e, branch)?;
    let eight = sys.homoclinic_level()?;
    Ok(json!({
        "energy": e,
        "min_energy": sys.min_energy(),
        "action": orbit.action,
        "period": orbit.period,
        "closed": orbit.closed,
        "samples": thin(&orbit.samples, points),
        "homoclinic": eight.loops.iter().map(|l| thin(&l.samples, points)).collect::<Vec<_>>(),
        "homoclinic_area": eight.loops[0].area,
        "critical_points": sys.critical_points(),
    })
    .to_string())
}

/// Sandwich certificate of `V(H)` for an expression with declared support
/// data, with a Monte-Carlo containment audit.
pub fn sandwich_json(
    expr: &str,
    max: f64,
    rho1: f64,
    rho0: f64,
    min_inner: f64,
    samples: usize,
    seed: u64,
) -> Result<String> {
    let h = ContactHamiltonian::from_expression(expr, 2, 1)?.with_meta(SupportMeta { max, rho1, rho0, min_inner })?;
    let d = StarDomain::new(h)?;
    let (w, cert) = capacity_interval(&d)?;
    let audit = audit_sandwich(&d, &cert, samples, seed)?;
    Ok(json!({
        "inner": { "a": cert.inner.a, "b": cert.inner.b },
        "outer": { "a": cert.outer.a, "b": cert.outer.b },
        "t": cert.t,
        "margins": cert.margins(),
        "capacity": { "lo": w.lo, "hi": w.hi },
        "audit": {
            "samples": audit.samples,
            "inner_tested": audit.inner_tested,
            "star_tested": audit.star_tested,
            "violations": audit.inner_violations + audit.outer_violations,
        },
    })
    .to_string())
}

/// Group (i) actions in `(0, top]`, the group-(ii) bound and a scan of
/// about `labels` torus labels for `n = 2, k = 1`.
pub fn spectrum_json(a: f64, b: f64, c: f64, eps: f64, top: f64, labels: usize) -> Result<String> {
    let d = IntegrableDomain::build(2, 1, a, b, c, eps)?;
    let spec = scan_spectrum(&d, top, ScanOptions { labels, budget: labels.max(1) * 4 })?;
    let scan = spec.scan.as_ref().expect("scan_spectrum fills the scan");
    let entries: Vec<[f64; 2]> = spec.entries.iter().map(|e| [e.label.c[1], e.action]).collect();
    Ok(json!({
        "group_i": spec.group_i,
        "bound": spec.group_ii_min_bound,
        "min_action": scan.min_action,
        "violations": scan.violations,
        "entries": entries,
    })
    .to_string())
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = levelCurve)]
pub fn level_curve(a: f64, b: f64, c: f64, eps: f64, e: f64, lower: bool) -> std::result::Result<String, JsError> {
    js(level_curve_json(a, b, c, eps, e, lower, 400))
}

#[wasm_bindgen]
pub fn sandwich(
    expr: &str,
    max: f64,
    rho1: f64,
    rho0: f64,
    min_inner: f64,
    samples: u32,
    seed: u32,
) -> std::result::Result<String, JsError> {
    js(sandwich_json(expr, max, rho1, rho0, min_inner, samples as usize, seed as u64))
}

#[wasm_bindgen]
pub fn spectrum(a: f64, b: f64, c: f64, eps: f64, top: f64, labels: u32) -> std::result::Result<String, JsError> {
    js(spectrum_json(a, b, c, eps, top, labels as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;
    use std::f64::consts::PI;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn level_curve_is_closed() {
        let v = parse(level_curve_json(1.0, 1.0, 3.0, 0.01, -4.0, false, 100).unwrap());
        assert_eq!(v["closed"], true);
        let s = v["samples"].as_array().unwrap();
        assert!(s.len() >= 100 && s.len() <= 210);
        assert_eq!(s.first(), s.last());
        assert!(v["action"].as_f64().unwrap() > 0.0);
        let lower = parse(level_curve_json(1.0, 1.0, 3.0, 0.01, -4.0, true, 100).unwrap());
        assert!((lower["action"].as_f64().unwrap() - v["action"].as_f64().unwrap()).abs() < 1e-9);
        assert!(lower["samples"][0][1].as_f64().unwrap() < 0.0);
    }

    #[test]
    fn level_curve_errors() {
        assert!(level_curve_json(1.0, 1.0, 3.0, 0.01, 0.0, false, 100).is_err());
        assert!(level_curve_json(1.0, 1.0, 3.0, 0.01, -100.0, false, 100).is_err());
    }

    #[test]
    fn worked_sandwich() {
        let expr = "0.5*bump(rho; 1, 3) + 0.5*bump(rho; 1, 3)*x1^2";
        let v = parse(sandwich_json(expr, 1.0, 3.0, 0.1, 0.5, 5000, 0).unwrap());
        assert!((v["inner"]["a"].as_f64().unwrap().powi(2) - 0.125).abs() < 1e-15);
        assert!((v["capacity"]["hi"].as_f64().unwrap() - 4.0 * PI).abs() < 1e-12);
        assert_eq!(v["audit"]["violations"], 0);
        let err = sandwich_json(expr, 1.0, 3.0, 0.1, 0.0, 10, 0).unwrap_err();
        assert!(err.to_string().contains("not in g+"));
    }

    #[test]
    fn spectrum_window() {
        let v = parse(spectrum_json(1.0, 1.0, 3.0, 0.01, 10.0, 50).unwrap());
        let g: Vec<f64> = v["group_i"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(g.len(), 3);
        assert!((g[2] - 3.0 * PI).abs() < 1e-12);
        assert_eq!(v["entries"].as_array().unwrap().len(), 50);
    }
}
