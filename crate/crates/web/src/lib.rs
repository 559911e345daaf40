//! Browser bindings: region map, noise curve and bound/violation report.
//! Each returns a JSON string; the plain `*_json` functions hold the logic so
//! they can be tested natively.

use serde_json::json;
use wasm_bindgen::prelude::*;

use steerkit::analysis::{
    critical_w, demonstrable_fraction, noise_curve, scan_region, unit_grid, violation, Threshold,
};
use steerkit::assemblages::noisy_lossy_assemblage;
use steerkit::measurements::{is_prime, max_overlap, mub_prime};
use steerkit::steering::{build_functional, exact_lhs_bound_with_guard};
use steerkit::{Error, MeasurementSet, Result};

/// Largest grid the page may request per axis.
pub const MAX_GRID: usize = 401;
/// Strategy cap for in-browser enumeration.
pub const WEB_GUARD: u64 = 2_000_000;

fn mub_set(d: usize, n: usize) -> Result<MeasurementSet> {
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    let set = mub_prime(d)?;
    if n < 2 || n > set.n() {
        return Err(Error::OutOfRange(format!(
            "n = {n} must lie in 2..={}",
            set.n()
        )));
    }
    set.truncated(n)
}

fn threshold(t: Threshold) -> serde_json::Value {
    t.value().map_or(serde_json::Value::Null, |v| json!(v))
}

/// `{d, n, cos_theta, grid, fraction, violated: [η-major flags]}`
pub fn region_json(d: usize, n: usize, grid: usize) -> Result<String> {
    if !(2..=MAX_GRID).contains(&grid) {
        return Err(Error::OutOfRange(format!(
            "grid {grid} must lie in 2..={MAX_GRID}"
        )));
    }
    let set = mub_set(d, n)?;
    let cos = max_overlap(&set)?;
    let g = unit_grid(grid);
    let rows = scan_region(d, n, cos, &g, &g)?;
    let flags: Vec<u8> = rows.iter().map(|r| r.violated as u8).collect();
    Ok(json!({
        "d": d,
        "n": n,
        "cos_theta": cos,
        "grid": grid,
        "fraction": demonstrable_fraction(&rows),
        "eta_c_at_w1": threshold(steerkit::analysis::critical_eta(n, d, cos, 1.0)?),
        "w_c_at_eta1": threshold(critical_w(n, d, cos, 1.0)?),
        "violated": flags,
    })
    .to_string())
}

/// `[{d, w_c_all_mub, w_c_two_mub}]` for primes up to `max_d`.
pub fn noise_json(eta: f64, max_d: usize) -> Result<String> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::OutOfRange(format!("eta = {eta} must lie in (0, 1]")));
    }
    let primes: Vec<usize> = (2..=max_d.min(101)).filter(|p| is_prime(*p)).collect();
    let rows = noise_curve(&primes, eta)?;
    let out: Vec<_> = rows
        .iter()
        .map(|r| {
            json!({
                "d": r.d,
                "w_c_all_mub": threshold(r.w_c_all_mub),
                "w_c_two_mub": threshold(r.w_c_two_mub),
            })
        })
        .collect();
    Ok(serde_json::Value::Array(out).to_string())
}

/// Exact and analytic bounds for the first n MUBs of prime d, and the
/// isotropic state's value at (η, w).
pub fn report_json(d: usize, n: usize, eta: f64, w: f64) -> Result<String> {
    for (name, v) in [("eta", eta), ("w", w)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange(format!("{name} = {v} not in [0, 1]")));
        }
    }
    let set = mub_set(d, n)?;
    let f = build_functional(&set, None, true)?;
    let bounds = exact_lhs_bound_with_guard(&f, WEB_GUARD)?;
    let a = noisy_lossy_assemblage(d, &set, eta, w)?;
    let v = violation(&f, &a, bounds.exact_bound)?;
    Ok(json!({
        "d": d,
        "n": n,
        "eta": eta,
        "w": w,
        "cos_theta": f.cos_theta(),
        "strategies": bounds.strategies as u64,
        "analytic_bound": bounds.analytic_bound,
        "exact_bound": bounds.exact_bound,
        "argmax_strategy": bounds.argmax_strategy.to_string(),
        "per_class_max": bounds.per_class_max,
        "beta": v.beta,
        "violated": v.violated,
        "V": v.normalized_violation,
    })
    .to_string())
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn region(d: usize, n: usize, grid: usize) -> std::result::Result<String, JsError> {
    js(region_json(d, n, grid))
}

#[wasm_bindgen]
pub fn noise(eta: f64, max_d: usize) -> std::result::Result<String, JsError> {
    js(noise_json(eta, max_d))
}

#[wasm_bindgen]
pub fn report(d: usize, n: usize, eta: f64, w: f64) -> std::result::Result<String, JsError> {
    js(report_json(d, n, eta, w))
}
