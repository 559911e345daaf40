//! Loss-tolerant linear steering functionals and their local-hidden-state
//! bounds.
//!
//! A functional pairs each click outcome `a` of setting `x` with a rank-1
//! projector `F_{a|x}` and every no-click outcome with `α𝟙`. For a
//! deterministic strategy `ā` the operator `G_ā = Σ_x F_{a_x|x}` collects
//! the terms it selects; the LHS bound is the largest `‖G_ā‖∞` over all
//! `(d+1)^n` strategies. [`exact_lhs_bound`] evaluates that maximum by
//! enumeration, [`analytic_lhs_bound`] is the closed-form upper bound
//! `1 + (n−1)cosθ` valid when `α = cosθ`.
//!
//! Per no-click class `H_k` (strategies with `k` no-click slots) the norm is
//! at most `kα + 1 + (n−k−1)cosθ` for `k < n`, and exactly `nα` for `k = n`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::matcore::{self, identity, ComplexMatrix};
use crate::measurements::{random_basis, MeasurementSet, Outcome, OutcomeString};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type DeterministicStrategy = OutcomeString;

/// Default cap on the number of enumerated strategies.
pub const DEFAULT_GUARD: u64 = 10_000_000;
/// Norms closer than this count as tied; the lexicographically first wins.
pub const TIE_TOL: f64 = 1e-12;
/// Tolerance for rank-1 projector checks.
pub const PROJECTOR_TOL: f64 = 1e-9;

/// Idempotent, Hermitian, unit trace.
pub fn is_rank1_projector(m: &ComplexMatrix, tol: f64) -> bool {
    if !m.is_square() || matcore::hermitian_deviation(m) > tol {
        return false;
    }
    let tr = matcore::trace(m);
    (tr.re - 1.0).abs() <= tol && tr.im.abs() <= tol && matcore::max_abs_diff(&(m * m), m) <= tol
}

/// `‖PQ‖∞ = |⟨u|v⟩|`; PQ has rank one so its Frobenius norm is exact.
fn projector_overlap(p: &ComplexMatrix, q: &ComplexMatrix) -> f64 {
    (p * q).norm().min(1.0)
}

#[derive(Debug, Clone)]
pub struct SteeringFunctional {
    dim: usize,
    click: Vec<Vec<ComplexMatrix>>,
    alpha: f64,
    cos_theta: f64,
}

impl SteeringFunctional {
    /// `click[x][a]` must be a rank-1 projector on C^d; `n ≥ 2`.
    pub fn new(click: Vec<Vec<ComplexMatrix>>, alpha: f64) -> Result<Self> {
        let n = click.len();
        if n < 2 {
            return Err(Error::TooFewSettings(n));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::OutOfRange(format!("alpha = {alpha} not in [0, 1]")));
        }
        let dim = click[0].len();
        for (x, row) in click.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "setting {} has {} outcomes, expected {dim}",
                    x + 1,
                    row.len()
                )));
            }
            for (a, f) in row.iter().enumerate() {
                if f.nrows() != dim || f.ncols() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "F[{}|{}] is {}x{}, expected {dim}x{dim}",
                        a + 1,
                        x + 1,
                        f.nrows(),
                        f.ncols()
                    )));
                }
                if !is_rank1_projector(f, PROJECTOR_TOL) {
                    return Err(Error::NotProjector(format!("F[{}|{}]", a + 1, x + 1)));
                }
            }
        }
        let mut cos_theta: f64 = 0.0;
        for x in 0..n {
            for y in (x + 1)..n {
                for p in &click[x] {
                    for q in &click[y] {
                        cos_theta = cos_theta.max(projector_overlap(p, q));
                    }
                }
            }
        }
        Ok(SteeringFunctional {
            dim,
            click,
            alpha,
            cos_theta,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.click.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Largest cross-setting overlap of the click operators.
    pub fn cos_theta(&self) -> f64 {
        self.cos_theta
    }

    pub fn click(&self, x: usize, a: usize) -> &ComplexMatrix {
        &self.click[x][a]
    }

    /// F_{o|x}; the no-click operator is α𝟙.
    pub fn operator(&self, x: usize, o: Outcome) -> ComplexMatrix {
        match o {
            Outcome::Click(a) => self.click[x][a].clone(),
            Outcome::NoClick => identity(self.dim).scale(self.alpha),
        }
    }

    /// Same click operators with a different no-click weight.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::OutOfRange(format!("alpha = {alpha} not in [0, 1]")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    /// Two settings share a direction; the inequality cannot be violated.
    pub fn is_trivial(&self) -> bool {
        self.cos_theta >= 1.0 - PROJECTOR_TOL
    }

    /// Closed-form bound `max_k class_bound(k)`; equals `1 + (n−1)cosθ`
    /// when `α = cosθ`.
    pub fn analytic_bound(&self) -> f64 {
        let n = self.n();
        (0..=n)
            .map(|k| class_bound_unchecked(k, n, self.alpha, self.cos_theta))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Functional with `F_{a|x} = Π_{a|x}` (or `Π_{a|x}^⊺` when
/// `use_transpose`), and `α` defaulting to the set's cosθ.
pub fn build_functional(
    set: &MeasurementSet,
    alpha: Option<f64>,
    use_transpose: bool,
) -> Result<SteeringFunctional> {
    if set.n() < 2 {
        return Err(Error::TooFewSettings(set.n()));
    }
    let click = (0..set.n())
        .map(|x| {
            (0..set.dim())
                .map(|a| {
                    let p = set.projector(x, a);
                    if use_transpose {
                        matcore::transpose(&p)
                    } else {
                        p
                    }
                })
                .collect()
        })
        .collect();
    let f = SteeringFunctional::new(click, alpha.unwrap_or(0.0))?;
    let f = match alpha {
        Some(_) => f,
        None => {
            let cos = f.cos_theta();
            f.with_alpha(cos)?
        }
    };
    if f.is_trivial() {
        log::warn!("trivial inequality (cosθ = 1): two settings share a direction");
    }
    Ok(f)
}

/// `1 + (n−1)cosθ`
pub fn analytic_lhs_bound(n: usize, cos_theta: f64) -> f64 {
    1.0 + (n as f64 - 1.0) * cos_theta
}

fn class_bound_unchecked(k: usize, n: usize, alpha: f64, cos_theta: f64) -> f64 {
    if k == n {
        n as f64 * alpha
    } else {
        k as f64 * alpha + 1.0 + (n - k - 1) as f64 * cos_theta
    }
}

/// Upper bound on `‖G_ā‖∞` for strategies with `k` no-click slots.
pub fn class_bound(k: usize, n: usize, alpha: f64, cos_theta: f64) -> Result<f64> {
    if k > n {
        return Err(Error::OutOfRange(format!("class k = {k} exceeds n = {n}")));
    }
    Ok(class_bound_unchecked(k, n, alpha, cos_theta))
}

/// `G_ā = Σ_x F_{a_x|x}`
pub fn strategy_operator(
    f: &SteeringFunctional,
    s: &DeterministicStrategy,
) -> Result<ComplexMatrix> {
    s.check(f.n(), f.dim())?;
    Ok(strategy_operator_unchecked(f, s))
}

fn strategy_operator_unchecked(f: &SteeringFunctional, s: &DeterministicStrategy) -> ComplexMatrix {
    let d = f.dim();
    let mut g = matcore::zeros(d);
    let mut no_clicks = 0usize;
    for (x, o) in s.slots().iter().enumerate() {
        match o {
            Outcome::Click(a) => g += &f.click[x][*a],
            Outcome::NoClick => no_clicks += 1,
        }
    }
    let shift = f.alpha * no_clicks as f64;
    for i in 0..d {
        g[(i, i)].re += shift;
    }
    g
}

#[derive(Debug, Clone)]
pub struct LhsBoundReport {
    pub analytic_bound: f64,
    pub exact_bound: f64,
    pub argmax_strategy: DeterministicStrategy,
    /// `per_class_max[k]` is the largest norm among strategies with `k`
    /// no-click slots.
    pub per_class_max: Vec<f64>,
    pub strategies: u128,
}

#[derive(Debug, Clone)]
struct Partial {
    best: f64,
    best_index: u128,
    per_class: Vec<f64>,
}

impl Partial {
    fn empty(n: usize) -> Self {
        Partial {
            best: f64::NEG_INFINITY,
            best_index: u128::MAX,
            per_class: vec![f64::NEG_INFINITY; n + 1],
        }
    }

    fn push(&mut self, index: u128, k: usize, norm: f64) {
        if prefer((norm, index), (self.best, self.best_index)) == Ordering::Less {
            self.best = norm;
            self.best_index = index;
        }
        if norm > self.per_class[k] {
            self.per_class[k] = norm;
        }
    }

    fn merge(mut self, other: Partial) -> Partial {
        if prefer((other.best, other.best_index), (self.best, self.best_index)) == Ordering::Less {
            self.best = other.best;
            self.best_index = other.best_index;
        }
        for (mine, theirs) in self.per_class.iter_mut().zip(other.per_class) {
            *mine = mine.max(theirs);
        }
        self
    }
}

/// Larger value first; values within [`TIE_TOL`] are ordered by index.
fn prefer(a: (f64, u128), b: (f64, u128)) -> Ordering {
    if a.0 > b.0 + TIE_TOL {
        Ordering::Less
    } else if b.0 > a.0 + TIE_TOL {
        Ordering::Greater
    } else {
        a.1.cmp(&b.1)
    }
}

const CHUNK: u128 = 2048;

fn evaluate_range(f: &SteeringFunctional, start: u128, end: u128) -> Result<Partial> {
    let (n, d) = (f.n(), f.dim());
    let mut part = Partial::empty(n);
    for index in start..end {
        let s = OutcomeString::from_index(index, n, d);
        let g = strategy_operator_unchecked(f, &s);
        let norm = matcore::op_norm_hermitian(&g)?;
        part.push(index, s.no_click_count(), norm);
    }
    Ok(part)
}

/// Number of deterministic strategies, `(d+1)^n`.
pub fn strategy_count(n: usize, d: usize) -> u128 {
    ((d + 1) as u128).saturating_pow(n as u32)
}

pub fn exact_lhs_bound(f: &SteeringFunctional) -> Result<LhsBoundReport> {
    exact_lhs_bound_with_guard(f, DEFAULT_GUARD)
}

/// Enumerate all strategies (fails if there are more than `guard`).
///
/// Chunks may be evaluated in parallel; the reduction keeps the largest
/// norm and, among ties, the lexicographically first strategy, so the
/// result does not depend on scheduling.
pub fn exact_lhs_bound_with_guard(f: &SteeringFunctional, guard: u64) -> Result<LhsBoundReport> {
    let (n, d) = (f.n(), f.dim());
    let total = strategy_count(n, d);
    if total > guard as u128 {
        return Err(Error::GuardExceeded {
            required: total,
            guard,
        });
    }
    let chunks: Vec<(u128, u128)> = (0..total.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(total)))
        .collect();

    #[cfg(feature = "parallel")]
    let parts: Vec<Partial> = {
        use rayon::prelude::*;
        chunks
            .par_iter()
            .map(|&(s, e)| evaluate_range(f, s, e))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Partial> = chunks
        .iter()
        .map(|&(s, e)| evaluate_range(f, s, e))
        .collect::<Result<_>>()?;

    let merged = parts.into_iter().fold(Partial::empty(n), Partial::merge);
    let exact_bound = merged
        .per_class
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(LhsBoundReport {
        analytic_bound: f.analytic_bound(),
        exact_bound,
        argmax_strategy: OutcomeString::from_index(merged.best_index, n, d),
        per_class_max: merged.per_class,
        strategies: total,
    })
}

/// Norm of a sum of rank-1 projectors and the bound `1 + (ℓ−1)cosφ`, where
/// `cosφ` is the largest pairwise `‖Π_iΠ_j‖∞`.
pub fn projector_sum_norm_check(projectors: &[ComplexMatrix]) -> Result<(f64, f64)> {
    let first = projectors
        .first()
        .ok_or_else(|| Error::OutOfRange("need at least one projector".into()))?;
    let d = first.nrows();
    for (i, p) in projectors.iter().enumerate() {
        if p.nrows() != d || !is_rank1_projector(p, PROJECTOR_TOL) {
            return Err(Error::NotProjector(format!("input {}", i + 1)));
        }
    }
    let sum = projectors.iter().fold(matcore::zeros(d), |acc, p| acc + p);
    let lhs = matcore::op_norm_hermitian(&sum)?;
    let mut cos_phi: f64 = 0.0;
    for i in 0..projectors.len() {
        for j in (i + 1)..projectors.len() {
            cos_phi = cos_phi.max(projector_overlap(&projectors[i], &projectors[j]));
        }
    }
    let bound = 1.0 + (projectors.len() as f64 - 1.0) * cos_phi;
    Ok((lhs, bound))
}

/// One seeded norm-lemma instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaTrial {
    pub seed: u64,
    pub projectors: usize,
    pub dim: usize,
    pub lhs: f64,
    pub bound: f64,
}

impl LemmaTrial {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.bound + tol
    }
}

/// ℓ ∈ 2..=6 random rank-1 projectors in d ∈ 2..=8, all drawn from `seed`.
pub fn lemma_trial(seed: u64) -> Result<LemmaTrial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = rng.random_range(2..=6);
    let d = rng.random_range(2..=8);
    let ps: Vec<ComplexMatrix> = (0..l)
        .map(|_| matcore::projector(&random_basis(d, rng.random()).vectors()[0]))
        .collect();
    let (lhs, bound) = projector_sum_norm_check(&ps)?;
    Ok(LemmaTrial {
        seed,
        projectors: l,
        dim: d,
        lhs,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{c, max_abs_diff, projector, Ket};
    use crate::measurements::{max_overlap, mub_prime, random_basis, random_set, Basis};

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn zx() -> MeasurementSet {
        mub_prime(2).unwrap().truncated(2).unwrap()
    }

    #[test]
    fn default_alpha_is_cos_theta() {
        let f = build_functional(&mub_prime(2).unwrap(), None, false).unwrap();
        assert!((f.alpha() - S).abs() < 1e-12);
        assert!((f.cos_theta() - S).abs() < 1e-12);
        assert!((f.analytic_bound() - (1.0 + 2.0 * S)).abs() < 1e-12);
    }

    #[test]
    fn transpose_of_real_bases_is_identity_map() {
        let set = MeasurementSet::new(vec![Basis::computational(3), random_real_basis()]).unwrap();
        let a = build_functional(&set, None, false).unwrap();
        let b = build_functional(&set, None, true).unwrap();
        for x in 0..2 {
            for o in 0..3 {
                assert_eq!(a.click(x, o), b.click(x, o));
            }
        }
    }

    fn random_real_basis() -> Basis {
        // rotation in the (0, 1) plane, real entries
        let (s, co) = (0.3_f64.sin(), 0.3_f64.cos());
        Basis::new(vec![
            Ket::from_vec(vec![c(co, 0.0), c(s, 0.0), c(0.0, 0.0)]),
            Ket::from_vec(vec![c(-s, 0.0), c(co, 0.0), c(0.0, 0.0)]),
            Ket::from_vec(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
        ])
        .unwrap()
    }

    #[test]
    fn alpha_override_one_is_trivial() {
        let f = build_functional(&mub_prime(3).unwrap(), Some(1.0), false).unwrap();
        assert!((f.analytic_bound() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn build_functional_errors() {
        let single = MeasurementSet::new(vec![Basis::computational(2)]).unwrap();
        assert!(matches!(
            build_functional(&single, None, false),
            Err(Error::TooFewSettings(1))
        ));
        assert!(build_functional(&zx(), Some(-0.1), false).is_err());
        assert!(build_functional(&zx(), Some(1.1), false).is_err());
    }

    #[test]
    fn functional_rejects_non_projector() {
        let mut click = vec![
            vec![
                projector(&matcore::basis_ket(2, 0)),
                projector(&matcore::basis_ket(2, 1))
            ];
            2
        ];
        click[1][0] = identity(2);
        assert!(matches!(
            SteeringFunctional::new(click, 0.5),
            Err(Error::NotProjector(_))
        ));
    }

    #[test]
    fn analytic_bound_examples() {
        assert!((analytic_lhs_bound(3, S) - (1.0 + 2.0_f64.sqrt())).abs() < 1e-12);
        assert!((analytic_lhs_bound(3, S) - 2.41421).abs() < 1e-5);
        for n in 2..8 {
            assert_eq!(analytic_lhs_bound(n, 0.0), 1.0);
        }
        assert!((analytic_lhs_bound(2, 1.0 / 3.0_f64.sqrt()) - 1.57735).abs() < 1e-5);
    }

    #[test]
    fn strategy_operator_examples() {
        let f = build_functional(&zx(), None, false).unwrap();
        let all = OutcomeString::all_no_click(2);
        let g = strategy_operator(&f, &all).unwrap();
        assert!(max_abs_diff(&g, &identity(2).scale(2.0 * S)) < 1e-15);
        let s = OutcomeString(vec![Outcome::Click(0), Outcome::NoClick]);
        let g = strategy_operator(&f, &s).unwrap();
        let expected = zx().projector(0, 0) + identity(2).scale(S);
        assert!(max_abs_diff(&g, &expected) < 1e-15);
        let bad = OutcomeString(vec![Outcome::Click(0)]);
        assert!(strategy_operator(&f, &bad).is_err());
    }

    #[test]
    fn strategy_operator_trace() {
        let set = random_set(3, 4, 8);
        let f = build_functional(&set, None, false).unwrap();
        for index in 0..strategy_count(4, 3) {
            let s = OutcomeString::from_index(index, 4, 3);
            let k = s.no_click_count();
            let g = strategy_operator(&f, &s).unwrap();
            let expected = (4 - k) as f64 + k as f64 * f.alpha() * 3.0;
            assert!((matcore::trace(&g).re - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_bound_qubit_zx() {
        let f = build_functional(&zx(), Some(S), false).unwrap();
        let r = exact_lhs_bound(&f).unwrap();
        assert_eq!(r.strategies, 9);
        assert!((r.exact_bound - (1.0 + S)).abs() < 1e-12);
        assert!((r.exact_bound - 1.70711).abs() < 1e-5);
    }

    #[test]
    fn exact_bound_qubit_three_mubs() {
        let f = build_functional(&mub_prime(2).unwrap(), Some(S), false).unwrap();
        let r = exact_lhs_bound(&f).unwrap();
        assert_eq!(r.strategies, 27);
        assert!((r.exact_bound - (1.0 + 2.0_f64.sqrt())).abs() < 1e-12);
        assert_eq!(r.argmax_strategy.no_click_count(), 1);
        assert_eq!(r.argmax_strategy.to_string(), "(1,1,∅)");
        // three Bloch vectors along +x, +y, +z: 3/2 + √3/2
        assert!((r.per_class_max[0] - (3.0 + 3.0_f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((r.per_class_max[3] - 3.0 * S).abs() < 1e-12);
        let max = r.per_class_max.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(max, r.exact_bound);
    }

    #[test]
    fn exact_bound_with_zero_alpha() {
        // no-click terms vanish; the best strategy clicks on both settings
        let f = build_functional(&zx(), Some(0.0), false).unwrap();
        let r = exact_lhs_bound(&f).unwrap();
        assert!((r.exact_bound - (1.0 + S)).abs() < 1e-12);
        assert_eq!(r.per_class_max[2], 0.0);
        assert!((r.per_class_max[1] - 1.0).abs() < 1e-12);
        assert_eq!(r.argmax_strategy.no_click_count(), 0);
    }

    #[test]
    fn guard_is_enforced() {
        let f = build_functional(&mub_prime(3).unwrap(), None, false).unwrap();
        match exact_lhs_bound_with_guard(&f, 100) {
            Err(Error::GuardExceeded { required, guard }) => {
                assert_eq!(required, 256);
                assert_eq!(guard, 100);
            }
            other => panic!("expected guard error, got {other:?}"),
        }
    }

    #[test]
    fn class_bound_cases() {
        assert_eq!(class_bound(4, 4, 0.3, 0.5).unwrap(), 1.2);
        let cos = 0.4;
        assert!((class_bound(0, 5, cos, cos).unwrap() - analytic_lhs_bound(5, cos)).abs() < 1e-15);
        for k in 0..5 {
            assert!(
                (class_bound(k, 5, cos, cos).unwrap() - analytic_lhs_bound(5, cos)).abs() < 1e-12
            );
        }
        assert!(class_bound(6, 5, 0.3, 0.3).is_err());
    }

    #[test]
    fn enumerated_norms_respect_class_bounds() {
        let mut functionals = Vec::new();
        for d in [2, 3, 5] {
            functionals.push(build_functional(&mub_prime(d).unwrap(), None, false).unwrap());
        }
        for seed in 0..50u64 {
            let d = 2 + (seed % 3) as usize;
            let n = 2 + ((seed / 3) % 3) as usize;
            let set = random_set(d, n, 1000 + seed * 17);
            let alpha = if seed % 2 == 0 { None } else { Some(0.37) };
            functionals.push(build_functional(&set, alpha, seed % 4 == 1).unwrap());
        }
        for f in &functionals {
            let (n, d) = (f.n(), f.dim());
            for index in 0..strategy_count(n, d) {
                let s = OutcomeString::from_index(index, n, d);
                let norm = matcore::op_norm_hermitian(&strategy_operator(f, &s).unwrap()).unwrap();
                let bound = class_bound(s.no_click_count(), n, f.alpha(), f.cos_theta()).unwrap();
                assert!(norm <= bound + 1e-9, "{s}: {norm} > {bound}");
            }
            let r = exact_lhs_bound(f).unwrap();
            if (f.alpha() - f.cos_theta()).abs() < 1e-15 && f.cos_theta() < 1.0 {
                assert!(r.exact_bound <= analytic_lhs_bound(n, f.cos_theta()) + 1e-9);
            }
        }
    }

    #[test]
    fn ordering_separation() {
        for seed in 0..30 {
            let set = random_set(3, 2 + seed % 4, 500 + seed as u64);
            let cos = max_overlap(&set).unwrap();
            let n = set.n() as f64;
            let bound = analytic_lhs_bound(set.n(), cos);
            let margin = 1e-12 * (1.0 - cos);
            assert!(n > bound + margin);
            assert!(bound > n * cos + margin);
        }
    }

    #[test]
    fn norm_lemma_tight_cases() {
        let p = projector(&random_basis(3, 2).vectors()[0]);
        let (lhs, bound) = projector_sum_norm_check(&vec![p; 4]).unwrap();
        assert!((lhs - 4.0).abs() < 1e-10 && (bound - 4.0).abs() < 1e-10);
        let b = random_basis(5, 3);
        let ps: Vec<_> = (0..5).map(|a| b.projector(a)).collect();
        let (lhs, bound) = projector_sum_norm_check(&ps).unwrap();
        assert!((lhs - 1.0).abs() < 1e-10 && (bound - 1.0).abs() < 1e-10);
        let (lhs, bound) = projector_sum_norm_check(&ps[..1]).unwrap();
        assert!((lhs - 1.0).abs() < 1e-12 && bound == 1.0);
    }

    #[test]
    fn norm_lemma_random() {
        for seed in 0..40u64 {
            let ps: Vec<_> = (0..3)
                .map(|i| random_basis(4, seed * 3 + i).projector(0))
                .collect();
            let (lhs, bound) = projector_sum_norm_check(&ps).unwrap();
            assert!(lhs <= bound + 1e-9);
        }
        assert!(projector_sum_norm_check(&[identity(2)]).is_err());
        assert!(projector_sum_norm_check(&[]).is_err());
    }

    #[test]
    fn lemma_trial_is_seeded() {
        let a = lemma_trial(7).unwrap();
        assert_eq!(a, lemma_trial(7).unwrap());
        assert!((2..=6).contains(&a.projectors) && (2..=8).contains(&a.dim));
        assert!(a.holds(1e-9));
    }

    #[test]
    fn lexicographic_tie_break_is_order_independent() {
        let f = build_functional(&mub_prime(2).unwrap(), None, false).unwrap();
        let whole = evaluate_range(&f, 0, 27).unwrap();
        let split = [(18, 27), (0, 9), (9, 18)]
            .iter()
            .map(|&(s, e)| evaluate_range(&f, s, e).unwrap())
            .fold(Partial::empty(3), Partial::merge);
        assert_eq!(whole.best_index, split.best_index);
        assert_eq!(whole.per_class, split.per_class);
    }
}
