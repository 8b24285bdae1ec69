//! Witness functions on `U(d)` and the Delsarte bound built from them.
//!
//! A witness `w` that is positive definite on the group, non-positive on the
//! scaled Hadamard set and has positive Haar mean bounds any family of pairwise
//! unbiased bases by `w(I) / ∫w`. The canonical witness is
//! `h(Z) = Σ|z_ij|⁴ - 1`, which gives the classical `d + 1`.
//!
//! Permutations are 0-based throughout: a permutation of `{0, …, 5}` stands for
//! the permutation of `{1, …, 6}` obtained by adding one to every entry.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix, Tolerance};
use crate::mub::MubSystem;

/// Dimension in which `m1`, `m2` and the per-permutation inner sums live.
pub const CONJ_DIM: usize = 6;

/// Relative tolerance for the imaginary residue of `m1`.
const REALNESS_TOL: f64 = 1e-10;

/// Slack used by the audit when comparing the sandwich and the off-diagonal signs.
pub const AUDIT_SLACK: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("witness `{name}` expects dimension {expected}, got {got}")]
    WrongDimension {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error(
        "m1 imaginary residue {imag:e} exceeds {tol:e} x {scale:e}; this is an implementation bug"
    )]
    ImaginaryResidue { imag: f64, scale: f64, tol: f64 },
    #[error("witness `{name}` produced a non-finite value")]
    NonFinite { name: String },
    #[error("Haar mean {mean} is not positive; the Delsarte hypothesis fails")]
    NonPositiveMean { mean: f64 },
    #[error("witness `{name}` has no closed-form Haar mean")]
    MissingHaarMean { name: String },
    #[error("unknown witness `{0}`")]
    UnknownWitness(String),
    #[error("invalid witness parameter: {0}")]
    BadParameter(String),
    #[error("member {index} of the system is not unitary (defect {defect:e})")]
    NotUnitary { index: usize, defect: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

type Evaluator = Arc<dyn Fn(&Matrix) -> Result<f64, WitnessError> + Send + Sync>;

/// A named real-valued function on `U(d)` with optional closed forms.
#[derive(Clone)]
pub struct WitnessFunction {
    name: String,
    dim: usize,
    evaluator: Evaluator,
    value_at_identity: Option<f64>,
    haar_mean: Option<f64>,
    star_symmetric: bool,
    caveats: Vec<String>,
}

impl fmt::Debug for WitnessFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WitnessFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("value_at_identity", &self.value_at_identity)
            .field("haar_mean", &self.haar_mean)
            .field("star_symmetric", &self.star_symmetric)
            .field("caveats", &self.caveats)
            .finish()
    }
}

impl WitnessFunction {
    /// Wraps an evaluator. The evaluator only ever sees matrices of dimension `dim`.
    pub fn new<F>(name: impl Into<String>, dim: usize, star_symmetric: bool, f: F) -> Self
    where
        F: Fn(&Matrix) -> Result<f64, WitnessError> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim,
            evaluator: Arc::new(f),
            value_at_identity: None,
            haar_mean: None,
            star_symmetric,
            caveats: Vec::new(),
        }
    }

    pub fn with_value_at_identity(mut self, value: f64) -> Self {
        self.value_at_identity = Some(value);
        self
    }

    pub fn with_haar_mean(mut self, mean: f64) -> Self {
        self.haar_mean = Some(mean);
        self
    }

    pub fn with_caveat(mut self, caveat: impl Into<String>) -> Self {
        self.caveats.push(caveat.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value_at_identity(&self) -> Option<f64> {
        self.value_at_identity
    }

    pub fn haar_mean(&self) -> Option<f64> {
        self.haar_mean
    }

    pub fn is_star_symmetric(&self) -> bool {
        self.star_symmetric
    }

    /// Warnings attached at construction, e.g. a parameter outside the range
    /// where the witness is known to satisfy the Delsarte hypotheses.
    pub fn caveats(&self) -> &[String] {
        &self.caveats
    }

    pub fn evaluate(&self, z: &Matrix) -> Result<f64, WitnessError> {
        if z.dim() != self.dim {
            return Err(WitnessError::WrongDimension {
                name: self.name.clone(),
                expected: self.dim,
                got: z.dim(),
            });
        }
        let value = (self.evaluator)(z)?;
        if !value.is_finite() {
            return Err(WitnessError::NonFinite {
                name: self.name.clone(),
            });
        }
        Ok(value)
    }

    /// `w(I)`: the closed form when known, otherwise a direct evaluation.
    pub fn identity_value(&self) -> Result<f64, WitnessError> {
        match self.value_at_identity {
            Some(v) => Ok(v),
            None => self.evaluate(&Matrix::identity(self.dim)),
        }
    }

    /// `self + weight * other`. Closed forms survive only when both sides have them.
    pub fn plus_scaled(
        &self,
        other: &WitnessFunction,
        weight: f64,
        name: impl Into<String>,
    ) -> Self {
        assert_eq!(self.dim, other.dim, "witness dimensions differ");
        let (a, b) = (self.clone(), other.clone());
        let mut out = WitnessFunction::new(
            name,
            self.dim,
            self.star_symmetric && other.star_symmetric,
            move |z| Ok(a.evaluate(z)? + weight * b.evaluate(z)?),
        );
        out.value_at_identity = self
            .value_at_identity
            .zip(other.value_at_identity)
            .map(|(x, y)| x + weight * y);
        out.haar_mean = self
            .haar_mean
            .zip(other.haar_mean)
            .map(|(x, y)| x + weight * y);
        out.caveats = self.caveats.iter().chain(&other.caveats).cloned().collect();
        out
    }
}

/// `Σ_{i,j} |z_ij|⁴`.
pub fn h0(z: &Matrix) -> f64 {
    z.entries()
        .iter()
        .map(|e| e.norm_sqr() * e.norm_sqr())
        .sum()
}

/// `h0(z) - 1`; vanishes on scaled Hadamard matrices.
pub fn h(z: &Matrix) -> f64 {
    h0(z) - 1.0
}

/// Haar mean of `h0` on `U(d)`: `2d / (d + 1)`.
pub fn h0_haar_mean(dim: usize) -> f64 {
    2.0 * dim as f64 / (dim as f64 + 1.0)
}

pub fn h0_witness(dim: usize) -> WitnessFunction {
    WitnessFunction::new("h0", dim, true, |z| Ok(h0(z)))
        .with_value_at_identity(dim as f64)
        .with_haar_mean(h0_haar_mean(dim))
}

pub fn h_witness(dim: usize) -> WitnessFunction {
    let d = dim as f64;
    // (d-1)/(d+1) directly, not 2d/(d+1) - 1: only this form makes the bound
    // come out as exactly d + 1 in floating point.
    WitnessFunction::new("h", dim, true, |z| Ok(h(z)))
        .with_value_at_identity(d - 1.0)
        .with_haar_mean((d - 1.0) / (d + 1.0))
}

/// `h0 - beta`. Values of `beta` outside `[1, 2d/(d+1)]` are allowed but flagged.
pub fn h_beta(dim: usize, beta: f64) -> WitnessFunction {
    let upper = h0_haar_mean(dim);
    let mut w = WitnessFunction::new(format!("h_beta:{beta}"), dim, true, move |z| {
        Ok(h0(z) - beta)
    })
    .with_value_at_identity(dim as f64 - beta)
    .with_haar_mean(upper - beta);
    if !(1.0..=upper).contains(&beta) {
        w = w.with_caveat(format!(
            "beta = {beta} lies outside [1, {upper}]; the Delsarte hypotheses are not guaranteed"
        ));
    }
    if beta >= upper {
        w = w.with_caveat("Haar mean is non-positive; the bound is undefined");
    }
    w
}

pub fn constant(dim: usize, value: f64) -> WitnessFunction {
    WitnessFunction::new(format!("const:{value}"), dim, true, move |_| Ok(value))
        .with_value_at_identity(value)
        .with_haar_mean(value)
}

/// A permutation of `{0, …, n-1}` given by its images.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self, WitnessError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(WitnessError::BadParameter(format!(
                    "{images:?} is not a permutation of 0..{n}"
                )));
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            images: (0..n).collect(),
        }
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// `+1` for even permutations, `-1` for odd ones.
    pub fn sign(&self) -> i32 {
        let mut visited = vec![false; self.images.len()];
        let mut transpositions = 0;
        for start in 0..self.images.len() {
            let mut len = 0;
            let mut i = start;
            while !visited[i] {
                visited[i] = true;
                i = self.images[i];
                len += 1;
            }
            if len > 0 {
                transpositions += len - 1;
            }
        }
        if transpositions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// All `n!` permutations in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut current: Vec<usize> = (0..n).collect();
        let mut out = vec![Permutation {
            images: current.clone(),
        }];
        // Standard next-permutation step.
        while let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) {
            let pivot = i - 1;
            let j = (pivot + 1..n)
                .rev()
                .find(|&j| current[j] > current[pivot])
                .expect("a larger element exists after the pivot");
            current.swap(pivot, j);
            current[pivot + 1..].reverse();
            out.push(Permutation {
                images: current.clone(),
            });
        }
        out
    }
}

fn require_conj_dim(name: &str, z: &Matrix) -> Result<(), WitnessError> {
    if z.dim() != CONJ_DIM {
        return Err(WitnessError::WrongDimension {
            name: name.to_string(),
            expected: CONJ_DIM,
            got: z.dim(),
        });
    }
    Ok(())
}

/// `Π_{k<half} z[rows[k], col] · Π_{k≥half} conj(z[rows[k], col])`.
#[inline]
fn monomial(z: &Matrix, rows: &[usize], col: usize) -> Complex64 {
    let half = rows.len() / 2;
    let mut acc = Complex64::new(1.0, 0.0);
    for &r in &rows[..half] {
        acc *= z.get(r, col);
    }
    for &r in &rows[half..] {
        acc *= z.get(r, col).conj();
    }
    acc
}

/// The per-permutation inner sum
/// `s_π(Z) = Σ_j z_{π0,j} z_{π1,j} z_{π2,j} · conj(z_{π3,j} z_{π4,j} z_{π5,j})`.
pub fn inner_sum(z: &Matrix, pi: &Permutation) -> Result<Complex64, WitnessError> {
    require_conj_dim("inner_sum", z)?;
    if pi.len() != CONJ_DIM {
        return Err(WitnessError::BadParameter(format!(
            "permutation has length {}, expected {CONJ_DIM}",
            pi.len()
        )));
    }
    Ok((0..CONJ_DIM).map(|j| monomial(z, pi.images(), j)).sum())
}

/// All 720 inner sums, indexed like [`Permutation::all`].
pub fn all_inner_sums(z: &Matrix) -> Result<Vec<Complex64>, WitnessError> {
    require_conj_dim("inner_sum", z)?;
    Ok(Permutation::all(CONJ_DIM)
        .iter()
        .map(|pi| (0..CONJ_DIM).map(|j| monomial(z, pi.images(), j)).sum())
        .collect())
}

/// The 20 three-element row subsets of `{0, …, 5}`, each followed by its complement.
fn row_splits() -> Vec<[usize; 6]> {
    let mut out = Vec::with_capacity(20);
    for a in 0..6 {
        for b in a + 1..6 {
            for c in b + 1..6 {
                let mut rows = [a, b, c, 0, 0, 0];
                let mut k = 3;
                for r in 0..6 {
                    if r != a && r != b && r != c {
                        rows[k] = r;
                        k += 1;
                    }
                }
                out.push(rows);
            }
        }
    }
    out
}

/// Complex `Σ_π s_π(Z)` and the sum of moduli of its monomials, via the
/// subset factorization: the monomial only depends on which three rows are
/// unconjugated, and each subset arises from `3!·3! = 36` permutations.
fn m1_sum(z: &Matrix) -> (Complex64, f64) {
    let mut total = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for rows in row_splits() {
        for j in 0..CONJ_DIM {
            let t = monomial(z, &rows, j);
            total += t;
            scale += t.norm();
        }
    }
    (36.0 * total, 36.0 * scale)
}

fn checked_real(total: Complex64, scale: f64) -> Result<f64, WitnessError> {
    if total.im.abs() > REALNESS_TOL * scale {
        return Err(WitnessError::ImaginaryResidue {
            imag: total.im,
            scale,
            tol: REALNESS_TOL,
        });
    }
    Ok(total.re)
}

/// `m1(Z) = Σ_{π∈S6} s_π(Z)`, which is real for every complex `Z`.
pub fn m1(z: &Matrix) -> Result<f64, WitnessError> {
    require_conj_dim("m1", z)?;
    let (total, scale) = m1_sum(z);
    checked_real(total, scale)
}

/// `m1(Z*)`.
pub fn m2(z: &Matrix) -> Result<f64, WitnessError> {
    require_conj_dim("m2", z)?;
    m1(&z.adjoint())
}

/// Brute force over all 720 permutations; the reference for [`m1`].
pub fn m1_by_permutations(z: &Matrix) -> Result<Complex64, WitnessError> {
    Ok(all_inner_sums(z)?.into_iter().sum())
}

/// `Σ_π sgn(π)·s_π(Z)`. Identically zero: swapping the first two slots flips the
/// sign without changing the monomial.
pub fn signed_permutation_sum(z: &Matrix) -> Result<Complex64, WitnessError> {
    let sums = all_inner_sums(z)?;
    Ok(Permutation::all(CONJ_DIM)
        .iter()
        .zip(sums)
        .map(|(pi, s)| s * pi.sign() as f64)
        .sum())
}

pub fn m1_witness() -> WitnessFunction {
    WitnessFunction::new("m1", CONJ_DIM, false, m1).with_value_at_identity(0.0)
}

pub fn m2_witness() -> WitnessFunction {
    WitnessFunction::new("m2", CONJ_DIM, false, m2).with_value_at_identity(0.0)
}

/// The three ways of combining `m1` and `m2` into a non-negative, `*`-symmetric
/// function vanishing at the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinationKind {
    /// `(m1 + m2)²`
    SumSq,
    /// `m1² + m2²`
    SqSum,
    /// `(m1 · m2)²`
    ProdSq,
}

impl CombinationKind {
    pub const ALL: [CombinationKind; 3] = [Self::SumSq, Self::SqSum, Self::ProdSq];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::SumSq => "sum_sq",
            Self::SqSum => "sq_sum",
            Self::ProdSq => "prod_sq",
        }
    }

    pub fn combine(&self, m1: f64, m2: f64) -> f64 {
        match self {
            Self::SumSq => (m1 + m2).powi(2),
            Self::SqSum => m1 * m1 + m2 * m2,
            Self::ProdSq => (m1 * m2).powi(2),
        }
    }
}

impl fmt::Display for CombinationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CombinationKind {
    type Err = WitnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| WitnessError::BadParameter(format!("unknown combination kind `{s}`")))
    }
}

/// `m(Z)` for the given combination. Its Haar mean has no closed form.
pub fn m_combined(kind: CombinationKind) -> WitnessFunction {
    WitnessFunction::new(format!("m:{kind}"), CONJ_DIM, true, move |z| {
        Ok(kind.combine(m1(z)?, m2(z)?))
    })
    .with_value_at_identity(0.0)
}

/// `h + eps·m` in dimension 6.
pub fn h_plus_eps_m(kind: CombinationKind, eps: f64) -> WitnessFunction {
    h_witness(CONJ_DIM).plus_scaled(&m_combined(kind), eps, format!("h_plus_eps_m:{kind}:{eps}"))
}

/// Resolves a witness by name:
/// `h0`, `h`, `h_beta:<float>`, `m1`, `m2`, `m:<kind>`, `h_plus_eps_m:<kind>:<float>`.
pub fn parse_witness(spec: &str, dim: usize) -> Result<WitnessFunction, WitnessError> {
    if dim == 0 {
        return Err(LinalgError::ZeroDimension.into());
    }
    let parse_f64 = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| WitnessError::BadParameter(format!("`{s}` is not a finite number")))
    };
    let need_six = |w: WitnessFunction| {
        if dim != CONJ_DIM {
            Err(WitnessError::WrongDimension {
                name: w.name().to_string(),
                expected: CONJ_DIM,
                got: dim,
            })
        } else {
            Ok(w)
        }
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["h0"] => Ok(h0_witness(dim)),
        ["h"] => Ok(h_witness(dim)),
        ["h_beta", beta] => Ok(h_beta(dim, parse_f64(beta)?)),
        ["m1"] => need_six(m1_witness()),
        ["m2"] => need_six(m2_witness()),
        ["m", kind] => need_six(m_combined(kind.parse()?)),
        ["h_plus_eps_m", kind, eps] => {
            let eps = parse_f64(eps)?;
            need_six(h_plus_eps_m(kind.parse()?, eps))
        }
        _ => Err(WitnessError::UnknownWitness(spec.to_string())),
    }
}

/// `w(I) / haar_mean`.
pub fn delsarte_bound(w: &WitnessFunction, haar_mean: f64) -> Result<f64, WitnessError> {
    if haar_mean.is_nan() || haar_mean <= 0.0 {
        return Err(WitnessError::NonPositiveMean { mean: haar_mean });
    }
    Ok(w.identity_value()? / haar_mean)
}

/// The bound from the witness's own closed-form Haar mean.
pub fn delsarte_bound_closed_form(w: &WitnessFunction) -> Result<f64, WitnessError> {
    let mean = w.haar_mean().ok_or_else(|| WitnessError::MissingHaarMean {
        name: w.name().to_string(),
    })?;
    delsarte_bound(w, mean)
}

/// Both sides of the Delsarte sandwich `lower ≤ S ≤ upper` for a concrete family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelsarteAudit {
    pub size: usize,
    /// `Σ_{u,v∈B} w(u* v)`
    pub s: f64,
    /// `w(I)·|B|`
    pub upper: f64,
    /// `∫w·|B|²`
    pub lower: f64,
    /// Largest `w(u* v)` over distinct members, `None` for a single member.
    pub max_off_diagonal: Option<f64>,
    pub valid: bool,
}

impl DelsarteAudit {
    /// `max(|S - upper|, |S - lower|)`.
    pub fn gap(&self) -> f64 {
        (self.s - self.upper).abs().max((self.s - self.lower).abs())
    }
}

pub fn delsarte_audit(b: &MubSystem, w: &WitnessFunction) -> Result<DelsarteAudit, WitnessError> {
    let tol = Tolerance::default();
    for (index, u) in b.bases().iter().enumerate() {
        let defect = u.unitarity_defect();
        if defect > tol.unitary_tol {
            return Err(WitnessError::NotUnitary { index, defect });
        }
    }
    let haar_mean = w.haar_mean().ok_or_else(|| WitnessError::MissingHaarMean {
        name: w.name().to_string(),
    })?;
    let bases = b.bases();
    let n = bases.len();
    let rows: Vec<Vec<f64>> = bases
        .par_iter()
        .map(|u| {
            bases
                .iter()
                .map(|v| w.evaluate(&u.adjoint_mul(v)?))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let s: f64 = rows.iter().flatten().sum();
    let max_off_diagonal = rows
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i))
        .map(|(_, &x)| x)
        .reduce(f64::max);
    let upper = w.identity_value()? * n as f64;
    let lower = haar_mean * (n * n) as f64;
    let valid = lower <= s + AUDIT_SLACK
        && s <= upper + AUDIT_SLACK
        && max_off_diagonal.is_none_or(|x| x <= AUDIT_SLACK);
    Ok(DelsarteAudit {
        size: n,
        s,
        upper,
        lower,
        max_off_diagonal,
        valid,
    })
}
