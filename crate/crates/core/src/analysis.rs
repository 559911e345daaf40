//! Violations, thresholds and the tables behind the region and noise plots.
//!
//! For the isotropic state and the MUB-style functional (click operators
//! `Π^⊺`, `α = cosθ`) the value is affine in `η` and `w`:
//!
//! `β = n[η(w + (1−w)/d) + (1−η)cosθ]`,
//!
//! and steering is demonstrated when it strictly exceeds
//! `1 + (n−1)cosθ`.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::assemblages::{noisy_lossy_assemblage, Assemblage};
use crate::error::{Error, Result};
use crate::io::sig12;
use crate::matcore::{self, identity};
use crate::measurements::{MeasurementSet, Outcome};
use crate::steering::{analytic_lhs_bound, build_functional, SteeringFunctional};

/// `violated` requires β to clear the bound by this much.
pub const VIOLATION_MARGIN: f64 = 1e-12;
/// Largest imaginary part tolerated in the trace pairing.
pub const IMAG_TOL: f64 = 1e-10;
/// Default bisection tolerance on η and w.
pub const BISECT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub beta: f64,
    /// The bound β was compared against.
    pub bound: f64,
    pub lhs_analytic: f64,
    pub lhs_exact: Option<f64>,
    pub violated: bool,
    pub normalized_violation: f64,
}

/// `β = Σ_{x,a} tr(F_{a|x} σ_{a|x})`, with the no-click member paired with
/// `α𝟙`.
pub fn beta(f: &SteeringFunctional, a: &Assemblage) -> Result<f64> {
    if f.dim() != a.dim() || f.n() != a.n() || a.outcomes() != f.dim() {
        return Err(Error::DimensionMismatch(format!(
            "functional (n={}, d={}) vs assemblage (n={}, d={}, {} outcomes)",
            f.n(),
            f.dim(),
            a.n(),
            a.dim(),
            a.outcomes()
        )));
    }
    let alpha_id = identity(f.dim()).scale(f.alpha());
    let mut total = matcore::c(0.0, 0.0);
    for x in 0..f.n() {
        for o in 0..f.dim() {
            total += matcore::trace_pairing(f.click(x, o), &a.member(x, Outcome::Click(o)));
        }
        if a.has_no_click() {
            total += matcore::trace_pairing(&alpha_id, &a.member(x, Outcome::NoClick));
        }
    }
    if total.im.abs() > IMAG_TOL {
        return Err(Error::NonRealPairing(total.im));
    }
    Ok(total.re)
}

pub fn violation(f: &SteeringFunctional, a: &Assemblage, bound: f64) -> Result<ViolationReport> {
    let b = beta(f, a)?;
    Ok(ViolationReport {
        beta: b,
        bound,
        lhs_analytic: f.analytic_bound(),
        lhs_exact: None,
        violated: b > bound + VIOLATION_MARGIN,
        normalized_violation: normalized_violation(b, bound)?,
    })
}

/// `n(η + (1−η)cosθ)`
pub fn quantum_beta(n: usize, cos_theta: f64, eta: f64) -> f64 {
    n as f64 * (eta + (1.0 - eta) * cos_theta)
}

/// `n[η(w + (1−w)/d) + (1−η)cosθ]`
pub fn noisy_quantum_beta(n: usize, d: usize, cos_theta: f64, eta: f64, w: f64) -> f64 {
    n as f64 * (eta * (w + (1.0 - w) / d as f64) + (1.0 - eta) * cos_theta)
}

/// `|β| / |β_LHS|`
pub fn normalized_violation(beta: f64, lhs: f64) -> Result<f64> {
    if lhs.is_nan() || lhs <= 0.0 {
        return Err(Error::OutOfRange(format!(
            "LHS bound {lhs} is not positive"
        )));
    }
    Ok(beta.abs() / lhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Threshold {
    Value(f64),
    Unattainable,
}

impl Threshold {
    pub fn value(self) -> Option<f64> {
        match self {
            Threshold::Value(v) => Some(v),
            Threshold::Unattainable => None,
        }
    }

    /// 12 significant digits, or "unattainable".
    pub fn render(self) -> String {
        match self {
            Threshold::Value(v) => sig12(v),
            Threshold::Unattainable => "unattainable".into(),
        }
    }
}

fn check_common(n: usize, d: usize, cos_theta: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::TooFewSettings(n));
    }
    if d < 2 {
        return Err(Error::OutOfRange(format!("dimension {d} < 2")));
    }
    if !(0.0..=1.0).contains(&cos_theta) {
        return Err(Error::OutOfRange(format!(
            "cosθ = {cos_theta} not in [0, 1]"
        )));
    }
    if cos_theta >= 1.0 {
        return Err(Error::OutOfRange(
            "cosθ = 1: the inequality is trivial and has no threshold".into(),
        ));
    }
    Ok(())
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange(format!("{name} = {v} not in [0, 1]")));
    }
    Ok(())
}

/// Snap values within rounding of the unit interval onto it.
fn in_unit(v: f64) -> Threshold {
    const SNAP: f64 = 1e-12;
    if (-SNAP..=1.0 + SNAP).contains(&v) {
        Threshold::Value(v.clamp(0.0, 1.0))
    } else {
        Threshold::Unattainable
    }
}

/// `η_c = (1/n)(1−cosθ)/((1−cosθ) − (1−w)(1−1/d))`; steering needs `η > η_c`.
pub fn critical_eta(n: usize, d: usize, cos_theta: f64, w: f64) -> Result<Threshold> {
    check_common(n, d, cos_theta)?;
    unit_interval("w", w)?;
    let gap = 1.0 - cos_theta;
    let denom = gap - (1.0 - w) * (1.0 - 1.0 / d as f64);
    if denom <= 0.0 {
        return Ok(Threshold::Unattainable);
    }
    let eta = gap / (n as f64 * denom);
    Ok(if eta > 1.0 {
        Threshold::Unattainable
    } else {
        Threshold::Value(eta)
    })
}

/// `w_c = 1 − (1 − 1/(nη))(1−cosθ)/(1 − 1/d)`; steering needs `w > w_c`.
pub fn critical_w(n: usize, d: usize, cos_theta: f64, eta: f64) -> Result<Threshold> {
    check_common(n, d, cos_theta)?;
    unit_interval("eta", eta)?;
    if eta == 0.0 {
        return Err(Error::OutOfRange(
            "eta = 0 leaves no click to steer with".into(),
        ));
    }
    let wc = 1.0 - (1.0 - 1.0 / (n as f64 * eta)) * (1.0 - cos_theta) / (1.0 - 1.0 / d as f64);
    Ok(in_unit(wc))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub n: usize,
    pub d: usize,
    pub cos_theta: f64,
    /// At the supplied w.
    pub eta_critical: Threshold,
    /// At the supplied η.
    pub w_critical: Threshold,
}

pub fn thresholds(n: usize, d: usize, cos_theta: f64, eta: f64, w: f64) -> Result<ThresholdReport> {
    Ok(ThresholdReport {
        n,
        d,
        cos_theta,
        eta_critical: critical_eta(n, d, cos_theta, w)?,
        w_critical: critical_w(n, d, cos_theta, eta)?,
    })
}

/// Smallest x in `[lo, hi]` (to `tol`) where `pred` turns true, assuming it
/// is monotone false→true. `None` when `pred(hi)` is false.
pub fn bisect(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    mut pred: impl FnMut(f64) -> Result<bool>,
) -> Result<Option<f64>> {
    if !pred(hi)? {
        return Ok(None);
    }
    if pred(lo)? {
        return Ok(Some(lo));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// η threshold found numerically: bisection on [`violation`] of the
/// transposed functional against the noisy lossy assemblage.
pub fn numeric_critical_eta(set: &MeasurementSet, w: f64, tol: f64) -> Result<Option<f64>> {
    let f = build_functional(set, None, true)?;
    let bound = f.analytic_bound();
    bisect(0.0, 1.0, tol, |eta| {
        let a = noisy_lossy_assemblage(set.dim(), set, eta, w)?;
        Ok(violation(&f, &a, bound)?.violated)
    })
}

/// w threshold found numerically, as [`numeric_critical_eta`].
pub fn numeric_critical_w(set: &MeasurementSet, eta: f64, tol: f64) -> Result<Option<f64>> {
    let f = build_functional(set, None, true)?;
    let bound = f.analytic_bound();
    bisect(0.0, 1.0, tol, |w| {
        let a = noisy_lossy_assemblage(set.dim(), set, eta, w)?;
        Ok(violation(&f, &a, bound)?.violated)
    })
}

/// V for the full MUB family (n = d+1, cosθ = 1/√d).
pub fn mub_normalized_violation(d: usize, eta: f64) -> f64 {
    let cos = 1.0 / (d as f64).sqrt();
    quantum_beta(d + 1, cos, eta) / analytic_lhs_bound(d + 1, cos)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsymptoticMode {
    /// Critical η at this w, against `1/(wd)`.
    FixedW(f64),
    /// Critical w at this η, against `1/√d + (1−η)/(ηd)`.
    FixedEta(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub d: usize,
    pub n: usize,
    pub exact: Threshold,
    pub predictor: f64,
    /// `exact − predictor`
    pub residual: f64,
    /// FixedW: `|η_c·w·d − 1|`. FixedEta: `|w_c − 1/√d|·d`.
    pub scaled: f64,
}

/// Thresholds along the MUB family against their large-d expansions.
pub fn asymptotic_checks(d_list: &[usize], mode: AsymptoticMode) -> Result<Vec<AsymptoticRow>> {
    d_list
        .iter()
        .map(|&d| {
            let n = d + 1;
            let df = d as f64;
            let cos = 1.0 / df.sqrt();
            let (exact, predictor, scaled) = match mode {
                AsymptoticMode::FixedW(w) => {
                    let t = critical_eta(n, d, cos, w)?;
                    let s = t.value().map_or(f64::NAN, |e| (e * w * df - 1.0).abs());
                    (t, 1.0 / (w * df), s)
                }
                AsymptoticMode::FixedEta(eta) => {
                    let t = critical_w(n, d, cos, eta)?;
                    let s = t.value().map_or(f64::NAN, |v| (v - cos).abs() * df);
                    (t, cos + (1.0 - eta) / (eta * df), s)
                }
            };
            Ok(AsymptoticRow {
                d,
                n,
                exact,
                predictor,
                residual: exact.value().map_or(f64::NAN, |v| v - predictor),
                scaled,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub d: usize,
    pub eta: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub eta_sqrt_d: f64,
    /// `V − η√d`
    pub slack: f64,
}

/// V(d, η) for the MUB family next to the `η√d` growth term.
pub fn violation_scaling(d_list: &[usize], eta: f64) -> Vec<ScalingRow> {
    d_list
        .iter()
        .map(|&d| {
            let v = mub_normalized_violation(d, eta);
            let g = eta * (d as f64).sqrt();
            ScalingRow {
                d,
                eta,
                v,
                eta_sqrt_d: g,
                slack: v - g,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionRow {
    pub d: usize,
    pub n: usize,
    pub eta: f64,
    pub w: f64,
    pub beta: f64,
    pub bound: f64,
    pub violated: bool,
    #[serde(rename = "V")]
    pub v: f64,
}

/// `k/(points−1)` for k = 0..points.
pub fn unit_grid(points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..points)
            .map(|k| k as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn region_row(d: usize, n: usize, cos: f64, bound: f64, eta: f64, w: f64) -> RegionRow {
    let beta = noisy_quantum_beta(n, d, cos, eta, w);
    RegionRow {
        d,
        n,
        eta,
        w,
        beta,
        bound,
        violated: beta > bound + VIOLATION_MARGIN,
        v: beta.abs() / bound,
    }
}

/// Every (η, w) grid point, η-major, with the closed-form value and flag.
pub fn scan_region(
    d: usize,
    n: usize,
    cos_theta: f64,
    eta_grid: &[f64],
    w_grid: &[f64],
) -> Result<Vec<RegionRow>> {
    check_common(n, d, cos_theta)?;
    for &v in eta_grid {
        unit_interval("eta", v)?;
    }
    for &v in w_grid {
        unit_interval("w", v)?;
    }
    let bound = analytic_lhs_bound(n, cos_theta);
    let points: Vec<(f64, f64)> = eta_grid
        .iter()
        .flat_map(|&e| w_grid.iter().map(move |&w| (e, w)))
        .collect();
    #[cfg(feature = "parallel")]
    let iter = points.par_iter();
    #[cfg(not(feature = "parallel"))]
    let iter = points.iter();
    Ok(iter
        .map(|&(e, w)| region_row(d, n, cos_theta, bound, e, w))
        .collect())
}

/// Fraction of region rows that demonstrate steering.
pub fn demonstrable_fraction(rows: &[RegionRow]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|r| r.violated).count() as f64 / rows.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseCurveRow {
    pub d: usize,
    pub eta: f64,
    /// All d+1 MUBs.
    pub w_c_all_mub: Threshold,
    /// First two MUBs only.
    pub w_c_two_mub: Threshold,
    /// Comparison curves from other constructions; not computed here.
    pub w_c_ref: Option<f64>,
}

/// Critical white noise against dimension for the MUB family, d+1 and two
/// settings.
pub fn noise_curve(primes: &[usize], eta: f64) -> Result<Vec<NoiseCurveRow>> {
    primes
        .iter()
        .map(|&d| {
            let cos = 1.0 / (d as f64).sqrt();
            Ok(NoiseCurveRow {
                d,
                eta,
                w_c_all_mub: critical_w(d + 1, d, cos, eta)?,
                w_c_two_mub: critical_w(2, d, cos, eta)?,
                w_c_ref: None,
            })
        })
        .collect()
}

pub const REGION_HEADER: &str = "d,n,eta,w,beta,bound,violated,V";
pub const NOISE_HEADER: &str = "d,eta,w_c_all_mub,w_c_two_mub,w_c_ref";

pub fn region_csv(rows: &[RegionRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(REGION_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.d,
            r.n,
            sig12(r.eta),
            sig12(r.w),
            sig12(r.beta),
            sig12(r.bound),
            r.violated,
            sig12(r.v)
        ));
    }
    out
}

pub fn noise_csv(rows: &[NoiseCurveRow]) -> String {
    let mut out = String::from(NOISE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.d,
            sig12(r.eta),
            r.w_c_all_mub.render(),
            r.w_c_two_mub.render(),
            r.w_c_ref.map_or("NA".to_string(), sig12)
        ));
    }
    out
}

/// One JSON object per row, same columns as the CSV.
pub fn to_json<T: Serialize>(rows: &[T]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize") + "\n"
}
