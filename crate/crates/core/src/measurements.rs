//! Alice's measurement sets.
//!
//! A [`MeasurementSet`] is `n` orthonormal bases of C^d; outcome `a` of
//! setting `x` is the rank-1 projector onto the `a`-th vector of basis `x`.
//! Lossy measurements add a no-click outcome, always indexed last.
//!
//! The parent POVM for efficiency `1/n` keeps only the strings with exactly
//! one clicking slot, so it has `n·d` nonzero elements out of `(d+1)^n`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io;
use crate::matcore::{self, c, identity, projector, ComplexMatrix, Ket};

/// Orthonormality tolerance of [`Basis::new`].
pub const BASIS_TOL: f64 = 1e-9;
/// Orthonormality tolerance applied to bases read from disk.
pub const LOAD_TOL: f64 = 1e-8;
/// Completeness tolerance of POVMs.
pub const POVM_TOL: f64 = 1e-10;

/// An outcome label: a click on basis vector `a` (0-based), or no click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Click(usize),
    NoClick,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Click(a) => write!(f, "{}", a + 1),
            Outcome::NoClick => f.write_str("∅"),
        }
    }
}

/// A length-`n` string over `{1..d, ∅}`, one outcome per setting.
///
/// Ordering is lexicographic with `∅` after every click label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomeString(pub Vec<Outcome>);

impl OutcomeString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn slots(&self) -> &[Outcome] {
        &self.0
    }

    /// |ā|_∅, the number of no-click slots.
    pub fn no_click_count(&self) -> usize {
        self.0.iter().filter(|o| **o == Outcome::NoClick).count()
    }

    pub fn all_no_click(n: usize) -> Self {
        OutcomeString(vec![Outcome::NoClick; n])
    }

    /// The `index`-th string of length `n` in lexicographic order, reading
    /// `index` as base `d+1` digits (most significant first, digit `d` = ∅).
    pub fn from_index(mut index: u128, n: usize, d: usize) -> Self {
        let base = (d + 1) as u128;
        let mut slots = vec![Outcome::NoClick; n];
        for slot in slots.iter_mut().rev() {
            let digit = (index % base) as usize;
            index /= base;
            *slot = if digit == d {
                Outcome::NoClick
            } else {
                Outcome::Click(digit)
            };
        }
        OutcomeString(slots)
    }

    /// Inverse of [`OutcomeString::from_index`].
    pub fn index(&self, d: usize) -> u128 {
        let base = (d + 1) as u128;
        self.0.iter().fold(0, |acc, o| {
            let digit = match o {
                Outcome::Click(a) => *a as u128,
                Outcome::NoClick => d as u128,
            };
            acc * base + digit
        })
    }

    /// Validate against `n` settings with `d` click outcomes each.
    pub fn check(&self, n: usize, d: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::MalformedStrategy(format!(
                "length {} but {} settings",
                self.len(),
                n
            )));
        }
        if let Some(bad) = self
            .0
            .iter()
            .find(|o| matches!(o, Outcome::Click(a) if *a >= d))
        {
            return Err(Error::MalformedStrategy(format!(
                "outcome {bad} out of range for d = {d}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for OutcomeString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, o) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{o}")?;
        }
        f.write_str(")")
    }
}

/// An orthonormal basis of C^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    vectors: Vec<Ket>,
}

impl Basis {
    pub fn new(vectors: Vec<Ket>) -> Result<Self> {
        Self::with_tolerance(vectors, BASIS_TOL)
    }

    pub fn with_tolerance(vectors: Vec<Ket>, tol: f64) -> Result<Self> {
        let d = vectors.len();
        if d == 0 {
            return Err(Error::InvalidBasis("empty basis".into()));
        }
        if let Some((i, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != d) {
            return Err(Error::InvalidBasis(format!(
                "vector {} has length {}, expected {d}",
                i + 1,
                v.len()
            )));
        }
        for (i, v) in vectors.iter().enumerate() {
            let n2 = v.norm_squared();
            if (n2 - 1.0).abs() > tol {
                return Err(Error::InvalidBasis(format!(
                    "vector {} is not normalized (⟨v|v⟩ = {n2})",
                    i + 1
                )));
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let ov = vectors[i].dotc(&vectors[j]).norm();
                if ov > tol {
                    return Err(Error::InvalidBasis(format!(
                        "vectors {} and {} are not orthogonal (|⟨u|v⟩| = {ov:e})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Basis { vectors })
    }

    pub fn computational(d: usize) -> Self {
        Basis {
            vectors: (0..d).map(|i| matcore::basis_ket(d, i)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Ket] {
        &self.vectors
    }

    pub fn vector(&self, a: usize) -> &Ket {
        &self.vectors[a]
    }

    /// Π_a = |e_a⟩⟨e_a|
    pub fn projector(&self, a: usize) -> ComplexMatrix {
        projector(&self.vectors[a])
    }

    /// Gram matrix ⟨e_a|e_b⟩.
    pub fn gram(&self) -> ComplexMatrix {
        let d = self.dim();
        ComplexMatrix::from_fn(d, d, |a, b| self.vectors[a].dotc(&self.vectors[b]))
    }
}

/// `n` bases of a common dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    dim: usize,
    bases: Vec<Basis>,
}

impl MeasurementSet {
    pub fn new(bases: Vec<Basis>) -> Result<Self> {
        let dim = bases
            .first()
            .map(Basis::dim)
            .ok_or_else(|| Error::InvalidBasis("measurement set has no bases".into()))?;
        if let Some((x, b)) = bases.iter().enumerate().find(|(_, b)| b.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "basis {} has dimension {}, expected {dim}",
                x + 1,
                b.dim()
            )));
        }
        Ok(MeasurementSet { dim, bases })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    pub fn basis(&self, x: usize) -> &Basis {
        &self.bases[x]
    }

    pub fn projector(&self, x: usize, a: usize) -> ComplexMatrix {
        self.bases[x].projector(a)
    }

    /// The first `k` settings.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n() {
            return Err(Error::OutOfRange(format!(
                "cannot keep {k} of {} settings",
                self.n()
            )));
        }
        Ok(MeasurementSet {
            dim: self.dim,
            bases: self.bases[..k].to_vec(),
        })
    }
}

pub fn is_prime(d: usize) -> bool {
    if d < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= d {
        if d.is_multiple_of(k) {
            return false;
        }
        k += 1;
    }
    true
}

/// The d+1 mutually unbiased bases in prime dimension d.
///
/// For d = 2 these are the eigenbases of Z, X, Y (in that order). For odd
/// d: the computational basis, then for b = 0..d the basis with vectors
/// `Σ_k ω^{b k² + a k} |k⟩ / √d`, ω = e^{2πi/d}.
pub fn mub_prime(d: usize) -> Result<MeasurementSet> {
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if d == 2 {
        let ket = |a: Complex64, b: Complex64| Ket::from_vec(vec![a, b]);
        let z = Basis::computational(2);
        let x = Basis::new(vec![ket(c(s, 0.0), c(s, 0.0)), ket(c(s, 0.0), c(-s, 0.0))])?;
        let y = Basis::new(vec![ket(c(s, 0.0), c(0.0, s)), ket(c(s, 0.0), c(0.0, -s))])?;
        return MeasurementSet::new(vec![z, x, y]);
    }
    let norm = 1.0 / (d as f64).sqrt();
    let mut bases = vec![Basis::computational(d)];
    for b in 0..d {
        let vectors = (0..d)
            .map(|a| {
                Ket::from_fn(d, |k, _| {
                    // exponent reduced mod d keeps the phase argument small
                    let e = (b * k * k + a * k) % d;
                    Complex64::from_polar(norm, 2.0 * PI * e as f64 / d as f64)
                })
            })
            .collect();
        bases.push(Basis::new(vectors)?);
    }
    MeasurementSet::new(bases)
}

/// Every basis orthonormal and every cross-basis |⟨e|f⟩|² within `tol` of 1/d.
pub fn verify_mub(set: &MeasurementSet, tol: f64) -> bool {
    let d = set.dim();
    let target = 1.0 / d as f64;
    let orthonormal = set.bases().iter().all(|b| {
        let g = b.gram();
        matcore::max_abs_diff(&g, &identity(d)) <= tol.max(BASIS_TOL)
    });
    if !orthonormal {
        return false;
    }
    for x in 0..set.n() {
        for y in (x + 1)..set.n() {
            for u in set.basis(x).vectors() {
                for v in set.basis(y).vectors() {
                    if (u.dotc(v).norm_sqr() - target).abs() > tol {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// cosθ: the largest |⟨e_{a|x}|e_{a'|x'}⟩| = √tr(Π_{a|x}Π_{a'|x'}) over x ≠ x'.
pub fn max_overlap(set: &MeasurementSet) -> Result<f64> {
    if set.n() < 2 {
        return Err(Error::TooFewSettings(set.n()));
    }
    let mut best: f64 = 0.0;
    for x in 0..set.n() {
        for y in (x + 1)..set.n() {
            for u in set.basis(x).vectors() {
                for v in set.basis(y).vectors() {
                    best = best.max(u.dotc(v).norm());
                }
            }
        }
    }
    Ok(best.min(1.0))
}

/// Drop settings (later ones first) until no two kept settings share a
/// direction, i.e. until cosθ < 1 − `tol`.
pub fn drop_shared_directions(set: &MeasurementSet, tol: f64) -> MeasurementSet {
    let mut kept: Vec<Basis> = Vec::new();
    for basis in set.bases() {
        let shares = kept.iter().any(|k| {
            k.vectors().iter().any(|u| {
                basis
                    .vectors()
                    .iter()
                    .any(|v| u.dotc(v).norm() >= 1.0 - tol)
            })
        });
        if !shares {
            kept.push(basis.clone());
        }
    }
    MeasurementSet {
        dim: set.dim(),
        bases: kept,
    }
}

/// Per-setting POVMs `{η Π_{a|x}}_a ∪ {(1−η)𝟙}`.
#[derive(Debug, Clone)]
pub struct LossyPovm {
    pub eta: f64,
    pub dim: usize,
    /// `elements[x]` has d click elements followed by the no-click element.
    pub elements: Vec<Vec<ComplexMatrix>>,
}

impl LossyPovm {
    pub fn n(&self) -> usize {
        self.elements.len()
    }

    /// Largest deviation from 𝟙 of any setting's element sum.
    pub fn completeness_residual(&self) -> f64 {
        let id = identity(self.dim);
        self.elements
            .iter()
            .map(|els| {
                let sum = els.iter().fold(matcore::zeros(self.dim), |acc, e| acc + e);
                matcore::max_abs_diff(&sum, &id)
            })
            .fold(0.0, f64::max)
    }
}

pub fn lossy_povm(set: &MeasurementSet, eta: f64) -> Result<LossyPovm> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange(format!("eta = {eta} not in [0, 1]")));
    }
    let d = set.dim();
    let elements = (0..set.n())
        .map(|x| {
            let mut els: Vec<ComplexMatrix> =
                (0..d).map(|a| set.projector(x, a).scale(eta)).collect();
            els.push(identity(d).scale(1.0 - eta));
            els
        })
        .collect();
    Ok(LossyPovm {
        eta,
        dim: d,
        elements,
    })
}

/// A POVM on outcome strings `ā ∈ {1..d, ∅}^n`; only nonzero elements are
/// stored.
#[derive(Debug, Clone)]
pub struct ParentPovm {
    pub dim: usize,
    pub n: usize,
    /// Nonzero elements in lexicographic order of their strings.
    pub entries: Vec<(OutcomeString, ComplexMatrix)>,
}

impl ParentPovm {
    /// (d+1)^n
    pub fn total_outcomes(&self) -> u128 {
        ((self.dim + 1) as u128).pow(self.n as u32)
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.len()
    }

    pub fn element(&self, s: &OutcomeString) -> ComplexMatrix {
        self.entries
            .binary_search_by(|(k, _)| k.cmp(s))
            .map(|i| self.entries[i].1.clone())
            .unwrap_or_else(|_| matcore::zeros(self.dim))
    }

    pub fn completeness_residual(&self) -> f64 {
        let sum = self
            .entries
            .iter()
            .fold(matcore::zeros(self.dim), |acc, (_, m)| acc + m);
        matcore::max_abs_diff(&sum, &identity(self.dim))
    }

    pub fn all_psd(&self) -> bool {
        self.entries
            .iter()
            .all(|(_, m)| matcore::is_psd(m, matcore::PSD_TOL).unwrap_or(false))
    }
}

fn single_click_string(n: usize, x: usize, a: usize) -> OutcomeString {
    let mut s = OutcomeString::all_no_click(n);
    s.0[x] = Outcome::Click(a);
    s
}

fn sort_entries(entries: &mut [(OutcomeString, ComplexMatrix)]) {
    entries.sort_by(|l, r| l.0.cmp(&r.0));
}

/// Parent POVM of the efficiency-`1/n` measurements: `M_ā = Π_{a_x|x}/n`
/// when `ā` clicks in exactly one slot `x`, zero otherwise.
pub fn parent_povm(set: &MeasurementSet) -> ParentPovm {
    let (n, d) = (set.n(), set.dim());
    let mut entries = Vec::with_capacity(n * d);
    for x in 0..n {
        for a in 0..d {
            entries.push((
                single_click_string(n, x, a),
                set.projector(x, a).unscale(n as f64),
            ));
        }
    }
    sort_entries(&mut entries);
    ParentPovm { dim: d, n, entries }
}

/// Parent POVM for any efficiency `η ≤ 1/n`: the `1/n` parent scaled by
/// `nη`, with the remaining weight `(1 − nη)𝟙` on the all-no-click string.
pub fn parent_povm_lossy(set: &MeasurementSet, eta: f64) -> Result<ParentPovm> {
    let n = set.n();
    if !(0.0..=1.0).contains(&eta) || eta * n as f64 > 1.0 + 1e-12 {
        return Err(Error::OutOfRange(format!(
            "eta = {eta} must lie in [0, 1/{n}] for a parent POVM"
        )));
    }
    let scale = (eta * n as f64).min(1.0);
    let mut parent = parent_povm(set);
    for (_, m) in parent.entries.iter_mut() {
        *m = m.scale(scale);
    }
    let rest = 1.0 - scale;
    if rest > 0.0 {
        parent.entries.push((
            OutcomeString::all_no_click(n),
            identity(set.dim()).scale(rest),
        ));
        sort_entries(&mut parent.entries);
    }
    Ok(parent)
}

/// Coarse-grain the parent onto setting `x`: d click elements then ∅.
pub fn marginalize(parent: &ParentPovm, x: usize) -> Result<Vec<ComplexMatrix>> {
    if x >= parent.n {
        return Err(Error::OutOfRange(format!(
            "setting {x} out of range for n = {}",
            parent.n
        )));
    }
    let d = parent.dim;
    let mut out = vec![matcore::zeros(d); d + 1];
    for (s, m) in &parent.entries {
        let slot = match s.0[x] {
            Outcome::Click(a) => a,
            Outcome::NoClick => d,
        };
        out[slot] += m;
    }
    Ok(out)
}

/// Orthonormal basis from the QR decomposition of a seeded complex
/// Gaussian matrix; columns of Q are the basis vectors.
pub fn random_basis(d: usize, seed: u64) -> Basis {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ComplexMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        c(re, im)
    });
    let q = g.qr().q();
    Basis {
        vectors: (0..d).map(|j| q.column(j).into_owned()).collect(),
    }
}

/// `n` independent random bases drawn from seeds `seed, seed+1, ...`.
pub fn random_set(d: usize, n: usize, seed: u64) -> MeasurementSet {
    MeasurementSet {
        dim: d,
        bases: (0..n as u64)
            .map(|i| random_basis(d, seed.wrapping_add(i)))
            .collect(),
    }
}

#[derive(Deserialize)]
struct BasesFile {
    dim: usize,
    n: usize,
    bases: Vec<Vec<io::RawVector>>,
}

/// Serialize in the basis-set file format.
pub fn bases_to_string(set: &MeasurementSet) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{{\n  \"dim\": {},\n  \"n\": {},\n  \"bases\": [\n",
        set.dim(),
        set.n()
    ));
    for (x, basis) in set.bases().iter().enumerate() {
        out.push_str("    [\n");
        for (a, v) in basis.vectors().iter().enumerate() {
            out.push_str("      ");
            io::vector(&mut out, v);
            if a + 1 < basis.dim() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("    ]");
        if x + 1 < set.n() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn bases_from_str(text: &str) -> Result<MeasurementSet> {
    let file: BasesFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.bases.len() != file.n {
        return Err(Error::Parse(format!(
            "declared n = {} but {} bases present",
            file.n,
            file.bases.len()
        )));
    }
    let mut bases = Vec::with_capacity(file.n);
    for (x, raw) in file.bases.iter().enumerate() {
        if raw.len() != file.dim {
            return Err(Error::Parse(format!(
                "basis {} has {} vectors, expected {}",
                x + 1,
                raw.len(),
                file.dim
            )));
        }
        let vectors: Vec<Ket> = raw.iter().map(io::ket_from_raw).collect();
        let basis = Basis::with_tolerance(vectors, LOAD_TOL).map_err(|e| match e {
            Error::InvalidBasis(msg) => Error::InvalidBasis(format!("basis {}: {msg}", x + 1)),
            other => other,
        })?;
        bases.push(basis);
    }
    MeasurementSet::new(bases)
}

pub fn save_bases(set: &MeasurementSet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, bases_to_string(set))?;
    Ok(())
}

pub fn load_bases(path: impl AsRef<Path>) -> Result<MeasurementSet> {
    bases_from_str(&std::fs::read_to_string(path)?)
}
