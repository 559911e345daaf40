//! Bipartite states and the assemblages Alice's measurements prepare for Bob.
//!
//! `σ_{a|x} = tr_A((Π_{a|x} ⊗ 𝟙) ρ)`. Loss with efficiency `η` scales the
//! click members by `η` and adds a no-click member `(1−η)σ_R`, where `σ_R`
//! is Bob's reduced state.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io;
use crate::matcore::{self, c, identity, kron, projector, ComplexMatrix, Ket};
use crate::measurements::{MeasurementSet, Outcome, OutcomeString};
use crate::steering::{
    strategy_operator, DeterministicStrategy, LhsBoundReport, SteeringFunctional,
};

/// Tolerance for the assemblage invariants (consistency, trace, PSD).
pub const ASSEMBLAGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum BipartiteState {
    /// Unit ket on C^d ⊗ C^d.
    Pure { dim: usize, ket: Ket },
    /// Density matrix of size d².
    Mixed { dim: usize, rho: ComplexMatrix },
}

impl BipartiteState {
    /// Local dimension d.
    pub fn dim(&self) -> usize {
        match self {
            BipartiteState::Pure { dim, .. } | BipartiteState::Mixed { dim, .. } => *dim,
        }
    }

    pub fn density(&self) -> ComplexMatrix {
        match self {
            BipartiteState::Pure { ket, .. } => projector(ket),
            BipartiteState::Mixed { rho, .. } => rho.clone(),
        }
    }

    /// Bob's marginal tr_A ρ.
    pub fn reduced_b(&self) -> ComplexMatrix {
        let d = self.dim();
        matcore::partial_trace_a(&self.density(), d, d).expect("state has d² dimensions")
    }
}

/// |φ⁺⟩ = Σ_i |ii⟩/√d
pub fn max_entangled(d: usize) -> Result<BipartiteState> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("dimension {d} < 2")));
    }
    let mut ket = Ket::zeros(d * d);
    let amp = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        ket[i * d + i] = c(amp, 0.0);
    }
    Ok(BipartiteState::Pure { dim: d, ket })
}

/// ρ(w) = w|φ⁺⟩⟨φ⁺| + (1−w)𝟙/d²
pub fn isotropic(d: usize, w: f64) -> Result<BipartiteState> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::OutOfRange(format!("w = {w} not in [0, 1]")));
    }
    let phi = max_entangled(d)?.density();
    let dd = (d * d) as f64;
    let rho = phi.scale(w) + identity(d * d).scale((1.0 - w) / dd);
    Ok(BipartiteState::Mixed { dim: d, rho })
}

/// A Schmidt-rank-d pure state with its local filter `D`, so that
/// `|ψ⟩ = (D ⊗ 𝟙)|φ⁺⟩`.
#[derive(Debug, Clone)]
pub struct SchmidtState {
    pub lambdas: Vec<f64>,
    pub state: BipartiteState,
    /// D = Σ_i √(dλ_i)|i⟩⟨i|
    pub filter: ComplexMatrix,
}

fn check_schmidt_weights(lambdas: &[f64]) -> Result<()> {
    if lambdas.len() < 2 {
        return Err(Error::OutOfRange(
            "need at least two Schmidt weights".into(),
        ));
    }
    if let Some(l) = lambdas.iter().find(|l| l.is_nan() || **l <= 0.0) {
        return Err(Error::OutOfRange(format!(
            "Schmidt weight {l} is not positive (Schmidt rank must equal d)"
        )));
    }
    let sum: f64 = lambdas.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::OutOfRange(format!("Schmidt weights sum to {sum}")));
    }
    Ok(())
}

fn filter_matrix(lambdas: &[f64]) -> ComplexMatrix {
    let d = lambdas.len();
    ComplexMatrix::from_fn(d, d, |i, j| {
        if i == j {
            c((d as f64 * lambdas[i]).sqrt(), 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// |ψ⟩ = Σ_i √λ_i |ii⟩
pub fn schmidt_state(lambdas: &[f64]) -> Result<SchmidtState> {
    check_schmidt_weights(lambdas)?;
    let d = lambdas.len();
    let mut ket = Ket::zeros(d * d);
    for (i, l) in lambdas.iter().enumerate() {
        ket[i * d + i] = c(l.sqrt(), 0.0);
    }
    Ok(SchmidtState {
        lambdas: lambdas.to_vec(),
        state: BipartiteState::Pure { dim: d, ket },
        filter: filter_matrix(lambdas),
    })
}

/// Bob's unnormalized conditional states, with an optional no-click row.
#[derive(Debug, Clone)]
pub struct Assemblage {
    dim: usize,
    clicks: Vec<Vec<ComplexMatrix>>,
    no_click: Option<Vec<ComplexMatrix>>,
}

impl Assemblage {
    pub fn new(
        clicks: Vec<Vec<ComplexMatrix>>,
        no_click: Option<Vec<ComplexMatrix>>,
    ) -> Result<Self> {
        let dim = clicks
            .first()
            .and_then(|row| row.first())
            .map(|m| m.nrows())
            .ok_or_else(|| Error::DimensionMismatch("empty assemblage".into()))?;
        let outcomes = clicks[0].len();
        let shapes_ok = clicks.iter().all(|row| {
            row.len() == outcomes && row.iter().all(|m| m.nrows() == dim && m.ncols() == dim)
        });
        let nc_ok = no_click.as_ref().is_none_or(|row| {
            row.len() == clicks.len() && row.iter().all(|m| m.nrows() == dim && m.ncols() == dim)
        });
        if !shapes_ok || !nc_ok {
            return Err(Error::DimensionMismatch("ragged assemblage".into()));
        }
        Ok(Assemblage {
            dim,
            clicks,
            no_click,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.clicks.len()
    }

    /// Click outcomes per setting.
    pub fn outcomes(&self) -> usize {
        self.clicks[0].len()
    }

    pub fn has_no_click(&self) -> bool {
        self.no_click.is_some()
    }

    /// σ_{o|x}; a missing no-click row reads as zero.
    pub fn member(&self, x: usize, o: Outcome) -> ComplexMatrix {
        match o {
            Outcome::Click(a) => self.clicks[x][a].clone(),
            Outcome::NoClick => self
                .no_click
                .as_ref()
                .map(|row| row[x].clone())
                .unwrap_or_else(|| matcore::zeros(self.dim)),
        }
    }

    pub fn clicks(&self, x: usize) -> &[ComplexMatrix] {
        &self.clicks[x]
    }

    fn setting_sum(&self, x: usize) -> ComplexMatrix {
        let mut sum = self.clicks[x]
            .iter()
            .fold(matcore::zeros(self.dim), |acc, m| acc + m);
        if let Some(row) = &self.no_click {
            sum += &row[x];
        }
        sum
    }

    /// σ_R = Σ_a σ_{a|1} (all outcomes, including no-click).
    pub fn reduced_state(&self) -> ComplexMatrix {
        self.setting_sum(0)
    }

    /// P(o|x) = tr σ_{o|x}
    pub fn probability(&self, x: usize, o: Outcome) -> f64 {
        matcore::trace(&self.member(x, o)).re
    }

    /// max_x ‖Σ_a σ_{a|x} − σ_R‖∞
    pub fn consistency_residual(&self) -> f64 {
        let r = self.reduced_state();
        (0..self.n())
            .map(|x| {
                let diff = self.setting_sum(x) - &r;
                matcore::op_norm_hermitian(&diff).unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    }

    /// Consistency, unit trace of σ_R, and PSD members, all at `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let res = self.consistency_residual();
        if res > tol {
            return Err(Error::OutOfRange(format!(
                "assemblage is signalling (residual {res:e})"
            )));
        }
        let tr = matcore::trace(&self.reduced_state()).re;
        if (tr - 1.0).abs() > tol {
            return Err(Error::OutOfRange(format!("tr σ_R = {tr}")));
        }
        for row in self.clicks.iter().chain(self.no_click.iter()) {
            for m in row {
                if !matcore::is_psd(m, tol)? {
                    return Err(Error::OutOfRange("assemblage member is not PSD".into()));
                }
            }
        }
        Ok(())
    }

    /// Max entrywise difference over all members (missing no-click = 0).
    pub fn max_abs_diff(&self, other: &Assemblage) -> f64 {
        if self.n() != other.n() || self.outcomes() != other.outcomes() || self.dim != other.dim {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for x in 0..self.n() {
            for a in 0..self.outcomes() {
                worst = worst.max(matcore::max_abs_diff(
                    &self.clicks[x][a],
                    &other.clicks[x][a],
                ));
            }
            worst = worst.max(matcore::max_abs_diff(
                &self.member(x, Outcome::NoClick),
                &other.member(x, Outcome::NoClick),
            ));
        }
        worst
    }
}

/// `σ_{a|x} = tr_A((Π_{a|x} ⊗ 𝟙) ρ)` for every setting; no no-click row.
pub fn assemble(state: &BipartiteState, set: &MeasurementSet) -> Result<Assemblage> {
    let d = state.dim();
    if set.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "state has local dimension {d}, measurements act on {}",
            set.dim()
        )));
    }
    let rho = state.density();
    let id = identity(d);
    let clicks = (0..set.n())
        .map(|x| {
            (0..d)
                .map(|a| {
                    let op = kron(&set.projector(x, a), &id) * &rho;
                    matcore::partial_trace_a(&op, d, d)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Assemblage::new(clicks, None)
}

/// Clicks scaled by η, no-click member (1−η)σ_R.
pub fn apply_loss(a: &Assemblage, eta: f64) -> Result<Assemblage> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange(format!("eta = {eta} not in [0, 1]")));
    }
    if a.has_no_click() {
        return Err(Error::OutOfRange(
            "loss can only be applied to a lossless assemblage".into(),
        ));
    }
    let sigma_r = a.reduced_state();
    let clicks = a
        .clicks
        .iter()
        .map(|row| row.iter().map(|m| m.scale(eta)).collect())
        .collect();
    let no_click = vec![sigma_r.scale(1.0 - eta); a.n()];
    Assemblage::new(clicks, Some(no_click))
}

/// Closed form for lossy measurements on the isotropic state:
/// clicks `ηwΠ^⊺/d + η(1−w)𝟙/d²`, no-click `(1−η)𝟙/d`.
pub fn noisy_lossy_assemblage(
    d: usize,
    set: &MeasurementSet,
    eta: f64,
    w: f64,
) -> Result<Assemblage> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange(format!("eta = {eta} not in [0, 1]")));
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::OutOfRange(format!("w = {w} not in [0, 1]")));
    }
    if set.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "d = {d} but measurements act on {}",
            set.dim()
        )));
    }
    let df = d as f64;
    let white = identity(d).scale(eta * (1.0 - w) / (df * df));
    let clicks = (0..set.n())
        .map(|x| {
            (0..d)
                .map(|a| matcore::transpose(&set.projector(x, a)).scale(eta * w / df) + &white)
                .collect()
        })
        .collect();
    let no_click = vec![identity(d).scale((1.0 - eta) / df); set.n()];
    Assemblage::new(clicks, Some(no_click))
}

/// `σ_{a|x} = Σ_ā p_ā δ_{a,a_x} ρ_ā`
pub fn lhs_assemblage(
    weights: &[(DeterministicStrategy, f64)],
    hidden_states: &[ComplexMatrix],
) -> Result<Assemblage> {
    if weights.is_empty() || weights.len() != hidden_states.len() {
        return Err(Error::InvalidDistribution(format!(
            "{} weights for {} hidden states",
            weights.len(),
            hidden_states.len()
        )));
    }
    if weights.iter().any(|(_, p)| p.is_nan() || *p < 0.0) {
        return Err(Error::InvalidDistribution("negative weight".into()));
    }
    let total: f64 = weights.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!(
            "weights sum to {total}"
        )));
    }
    let d = hidden_states[0].nrows();
    let n = weights[0].0.len();
    for rho in hidden_states {
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch(
                "hidden states differ in size".into(),
            ));
        }
        if (matcore::trace(rho).re - 1.0).abs() > 1e-10 || !matcore::is_psd(rho, matcore::PSD_TOL)?
        {
            return Err(Error::InvalidDistribution(
                "hidden state is not a density matrix".into(),
            ));
        }
    }
    for (s, _) in weights {
        s.check(n, d)?;
    }
    let mut clicks = vec![vec![matcore::zeros(d); d]; n];
    let mut no_click = vec![matcore::zeros(d); n];
    for ((s, p), rho) in weights.iter().zip(hidden_states) {
        let term = rho.scale(*p);
        for (x, o) in s.slots().iter().enumerate() {
            match o {
                Outcome::Click(a) => clicks[x][*a] += &term,
                Outcome::NoClick => no_click[x] += &term,
            }
        }
    }
    Assemblage::new(clicks, Some(no_click))
}

/// The deterministic assemblage that attains the exact LHS bound: always
/// answer with the argmax strategy and send the top eigenvector of its `G`.
pub fn lhs_witness(f: &SteeringFunctional, report: &LhsBoundReport) -> Result<Assemblage> {
    let g = strategy_operator(f, &report.argmax_strategy)?;
    let (_, v) = matcore::top_eigenpair(&g)?;
    lhs_assemblage(&[(report.argmax_strategy.clone(), 1.0)], &[projector(&v)])
}

/// A random density matrix `A A† / tr(A A†)` with Gaussian `A` of rank `rank`.
pub fn random_density(d: usize, rank: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(d, rank.max(1), |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    });
    let w = &a * a.adjoint();
    let tr = matcore::trace(&w).re;
    w.unscale(tr)
}

/// A seeded random LHS assemblage mixing `components` random strategies,
/// each with a random hidden state of random rank.
pub fn random_lhs_assemblage(n: usize, d: usize, components: usize, seed: u64) -> Assemblage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = crate::steering::strategy_count(n, d);
    let mut raw: Vec<f64> = (0..components)
        .map(|_| rng.random::<f64>() + 1e-3)
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.iter_mut().for_each(|p| *p /= sum);
    let weights: Vec<(DeterministicStrategy, f64)> = raw
        .into_iter()
        .map(|p| {
            (
                OutcomeString::from_index(rng.random_range(0..total), n, d),
                p,
            )
        })
        .collect();
    let hidden: Vec<ComplexMatrix> = (0..components)
        .map(|_| {
            let rank = rng.random_range(1..=d);
            random_density(d, rank, &mut rng)
        })
        .collect();
    // renormalize against rounding in the weight sum
    let fix: f64 = weights.iter().map(|(_, p)| p).sum();
    let weights = weights
        .into_iter()
        .map(|(s, p)| (s, p / fix))
        .collect::<Vec<_>>();
    lhs_assemblage(&weights, &hidden).expect("constructed inputs are valid")
}

/// The functional adapted to a Schmidt state: click operators are the
/// normalized directions of `(DΠ_{a|x}D)^⊺`, and `α = cosθ′` recomputed over
/// them.
pub fn filtered_functional(set: &MeasurementSet, lambdas: &[f64]) -> Result<SteeringFunctional> {
    check_schmidt_weights(lambdas)?;
    if lambdas.len() != set.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} Schmidt weights for dimension {}",
            lambdas.len(),
            set.dim()
        )));
    }
    let dmat = filter_matrix(lambdas);
    let click = (0..set.n())
        .map(|x| {
            (0..set.dim())
                .map(|a| {
                    let m = matcore::transpose(&(&dmat * set.projector(x, a) * &dmat));
                    let p = matcore::trace(&m).re;
                    m.unscale(p)
                })
                .collect()
        })
        .collect();
    let f = SteeringFunctional::new(click, 0.0)?;
    let cos = f.cos_theta();
    f.with_alpha(cos)
}

#[derive(Deserialize)]
struct AssemblageFile {
    dim: usize,
    n: usize,
    members: Vec<Vec<io::RawMatrix>>,
}

/// Same numeric format as basis files: per setting, d+1 matrices (clicks,
/// then no-click).
pub fn assemblage_to_string(a: &Assemblage) -> String {
    let mut out = format!(
        "{{\n  \"dim\": {},\n  \"n\": {},\n  \"members\": [\n",
        a.dim(),
        a.n()
    );
    for x in 0..a.n() {
        out.push_str("    [\n");
        let outcomes: Vec<Outcome> = (0..a.outcomes())
            .map(Outcome::Click)
            .chain(std::iter::once(Outcome::NoClick))
            .collect();
        for (i, o) in outcomes.iter().enumerate() {
            out.push_str("      ");
            io::matrix(&mut out, &a.member(x, *o), "      ");
            if i + 1 < outcomes.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("    ]");
        if x + 1 < a.n() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn assemblage_from_str(text: &str) -> Result<Assemblage> {
    let file: AssemblageFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.members.len() != file.n {
        return Err(Error::Parse(format!(
            "declared n = {} but {} settings present",
            file.n,
            file.members.len()
        )));
    }
    let mut clicks = Vec::with_capacity(file.n);
    let mut no_click = Vec::with_capacity(file.n);
    for (x, row) in file.members.iter().enumerate() {
        if row.len() < 2 {
            return Err(Error::Parse(format!(
                "setting {} has too few members",
                x + 1
            )));
        }
        let mut mats = row
            .iter()
            .map(|raw| {
                io::matrix_from_raw(raw)
                    .filter(|m| m.nrows() == file.dim && m.ncols() == file.dim)
                    .ok_or_else(|| Error::Parse(format!("setting {}: bad matrix shape", x + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        no_click.push(mats.pop().expect("checked length"));
        clicks.push(mats);
    }
    Assemblage::new(clicks, Some(no_click))
}

pub fn save_assemblage(a: &Assemblage, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, assemblage_to_string(a))?;
    Ok(())
}

pub fn load_assemblage(path: impl AsRef<Path>) -> Result<Assemblage> {
    assemblage_from_str(&std::fs::read_to_string(path)?)
}
