//! Numerical evidence for (and attempts to refute) positive definiteness of a
//! witness on `U(d)`.
//!
//! A function `w` is positive definite iff every Gram matrix
//! `G[r][t] = w(u_r* u_t)` is positive semidefinite. Nothing here proves
//! anything. A non-negative minimum eigenvalue over many sampled tuples is
//! evidence; a clearly negative one is a counterexample that can be replayed
//! from its seed trail.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::haar::{
    haar_unitary, integrate, sample_unitary, HaarError, IntegralEstimate, SamplerConfig,
};
use crate::linalg::{LinalgError, Matrix, Tolerance};
use crate::witness::{
    h_plus_eps_m, h_witness, m_combined, CombinationKind, WitnessError, WitnessFunction, CONJ_DIM,
};

/// `λ_min ≥ -EVIDENCE_THRESHOLD` counts as positive semidefinite evidence.
pub const EVIDENCE_THRESHOLD: f64 = 1e-8;
/// `λ_min < -REFUTATION_THRESHOLD` counts as a refutation. Larger than the
/// evidence threshold to stay clear of eigensolver noise.
pub const REFUTATION_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_PROJECTOR_DIM_CAP: usize = 8;
pub const DEFAULT_SCAN_M: usize = 8;

/// Salt separating the search streams from the plain Haar sample streams.
const SEARCH_SALT: u64 = 0x5EA2_C4ED_0000_0001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdError {
    #[error("witness `{0}` is not *-symmetric, so its Gram matrices need not be Hermitian")]
    NotStarSymmetric(String),
    #[error("element {index} has dimension {got}, expected {expected}")]
    MixedDimensions {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("element {index} is not unitary (defect {defect:e})")]
    NotUnitary { index: usize, defect: f64 },
    #[error("at least {min} group elements are required, got {got}")]
    TooFewElements { min: usize, got: usize },
    #[error("dimension {dim} exceeds the projector cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("matrix is not symmetric (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },
    #[error("invalid epsilon grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Haar(#[from] HaarError),
}

fn check_tuple(dim: usize, unitaries: &[Matrix], min: usize) -> Result<(), PdError> {
    if unitaries.len() < min {
        return Err(PdError::TooFewElements {
            min,
            got: unitaries.len(),
        });
    }
    let tol = Tolerance::default();
    for (index, u) in unitaries.iter().enumerate() {
        if u.dim() != dim {
            return Err(PdError::MixedDimensions {
                index,
                expected: dim,
                got: u.dim(),
            });
        }
        let defect = u.unitarity_defect();
        if defect > tol.unitary_tol {
            return Err(PdError::NotUnitary { index, defect });
        }
    }
    Ok(())
}

/// Row-major real Gram values; entry `(r, t)` with `r ≤ t` is `w(u_r* u_t)` and the
/// lower triangle mirrors it.
fn gram_values(w: &WitnessFunction, unitaries: &[Matrix]) -> Result<Vec<f64>, PdError> {
    let m = unitaries.len();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|r| {
            (r..m)
                .map(|t| Ok(w.evaluate(&unitaries[r].adjoint_mul(&unitaries[t])?)?))
                .collect::<Result<Vec<_>, PdError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut g = vec![0.0; m * m];
    for (r, row) in rows.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            let t = r + offset;
            g[r * m + t] = v;
            g[t * m + r] = v;
        }
    }
    Ok(g)
}

fn real_matrix(m: usize, values: &[f64]) -> Matrix {
    Matrix::from_real(m, values).expect("Gram values are finite and correctly sized")
}

fn min_eigenvalue(m: usize, values: &[f64]) -> Result<f64, PdError> {
    Ok(real_matrix(m, values).hermitian_eigenvalues()?[0])
}

/// `G[r][t] = w(u_r* u_t)` as a real symmetric matrix.
pub fn gram(w: &WitnessFunction, unitaries: &[Matrix]) -> Result<Matrix, PdError> {
    if !w.is_star_symmetric() {
        return Err(PdError::NotStarSymmetric(w.name().to_string()));
    }
    check_tuple(w.dim(), unitaries, 1)?;
    Ok(real_matrix(unitaries.len(), &gram_values(w, unitaries)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdCheck {
    pub lambda_min: f64,
    pub psd: bool,
}

/// Spectral PSD test: `psd = λ_min ≥ -threshold`.
pub fn psd_check(g: &Matrix, threshold: f64) -> Result<PsdCheck, PdError> {
    let deviation = g.hermitian_defect();
    if deviation > 1e-10 * g.max_abs().max(1.0) {
        return Err(PdError::NotSymmetric { deviation });
    }
    let lambda_min = g.hermitian_eigenvalues()?[0];
    Ok(PsdCheck {
        lambda_min,
        psd: lambda_min >= -threshold,
    })
}

/// `c* G c`.
pub fn quadratic_form(g: &Matrix, c: &[Complex64]) -> Complex64 {
    let m = g.dim();
    assert_eq!(c.len(), m, "coefficient vector length");
    (0..m)
        .map(|i| {
            let row: Complex64 = (0..m).map(|j| g.get(i, j) * c[j]).sum();
            c[i].conj() * row
        })
        .sum()
}

/// Eigenvalue diagnostics of one Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub witness_name: String,
    pub dim: usize,
    pub m: usize,
    pub lambda_min: f64,
    /// `λ_min(G - α0·J)` when a shift was requested.
    pub lambda_min_shifted: Option<f64>,
    pub alpha0: Option<f64>,
    /// Seed the tuple was drawn from, when it came from the sampler.
    pub seed: Option<u64>,
    pub threshold: f64,
    pub psd: bool,
    pub warnings: Vec<String>,
}

/// Gram test of `w - α0`, i.e. `λ_min(G - α0·J)` with `J` the all-ones matrix.
///
/// Expected to pass whenever `w` is positive definite and `α0 ≤ ∫w`. A larger
/// `α0` is allowed and only produces a warning.
pub fn shifted_check(
    w: &WitnessFunction,
    alpha0: f64,
    unitaries: &[Matrix],
    threshold: f64,
) -> Result<GramReport, PdError> {
    let g = gram(w, unitaries)?;
    let m = g.dim();
    let lambda_min = g.hermitian_eigenvalues()?[0];
    let shifted = g.sub(&Matrix::ones(m).scale(Complex64::new(alpha0, 0.0)))?;
    let lambda_min_shifted = shifted.hermitian_eigenvalues()?[0];
    let mut warnings = Vec::new();
    match w.haar_mean() {
        Some(mean) if alpha0 > mean => warnings.push(format!(
            "alpha0 = {alpha0} exceeds the Haar mean {mean}; the shifted function need not be positive definite"
        )),
        None => warnings.push("witness has no closed-form Haar mean; alpha0 is unchecked".into()),
        _ => {}
    }
    Ok(GramReport {
        witness_name: w.name().to_string(),
        dim: w.dim(),
        m,
        lambda_min,
        lambda_min_shifted: Some(lambda_min_shifted),
        alpha0: Some(alpha0),
        seed: None,
        threshold,
        psd: lambda_min_shifted >= -threshold,
        warnings,
    })
}

/// The `trial`-th tuple of `m` Haar unitaries: sample indices `trial·m .. trial·m + m`.
pub fn sampled_tuple(cfg: &SamplerConfig, m: usize, trial: usize) -> Vec<Matrix> {
    (0..m)
        .map(|i| sample_unitary(cfg, (trial * m + i) as u64))
        .collect()
}

/// Gram report for the `trial`-th sampled tuple, optionally shifted by `alpha0`.
pub fn sampled_gram_report(
    w: &WitnessFunction,
    cfg: &SamplerConfig,
    m: usize,
    trial: usize,
    alpha0: Option<f64>,
    threshold: f64,
) -> Result<GramReport, PdError> {
    let tuple = sampled_tuple(cfg, m, trial);
    let mut report = match alpha0 {
        Some(a) => shifted_check(w, a, &tuple, threshold)?,
        None => {
            let check = psd_check(&gram(w, &tuple)?, threshold)?;
            GramReport {
                witness_name: w.name().to_string(),
                dim: w.dim(),
                m,
                lambda_min: check.lambda_min,
                lambda_min_shifted: None,
                alpha0: None,
                seed: None,
                threshold,
                psd: check.psd,
                warnings: Vec::new(),
            }
        }
    };
    report.seed = Some(cfg.seed);
    Ok(report)
}

/// Gram matrix of `h0` through the projector identity
/// `|<U_t e_j, U_r e_k>|⁴ = tr(P_{U_t e_j ⊗ U_t e_j} P_{U_r e_k ⊗ U_r e_k})`:
/// with `Q_t = Σ_j P_{U_t e_j ⊗ U_t e_j}` the entry is `tr(Q_r Q_t)`.
///
/// This is a Gram matrix of the `Q_t` under the Hilbert–Schmidt inner product and
/// hence PSD by construction.
pub fn gram_h0_via_projectors(unitaries: &[Matrix], dim_cap: usize) -> Result<Matrix, PdError> {
    let dim = unitaries
        .first()
        .map(Matrix::dim)
        .ok_or(PdError::TooFewElements { min: 1, got: 0 })?;
    if dim > dim_cap {
        return Err(PdError::DimensionTooLarge { dim, cap: dim_cap });
    }
    check_tuple(dim, unitaries, 1)?;
    let big = dim * dim;
    let projector_sums: Vec<Vec<Complex64>> = unitaries
        .iter()
        .map(|u| {
            let mut q = vec![Complex64::new(0.0, 0.0); big * big];
            for j in 0..dim {
                let col = u.column(j);
                let v: Vec<Complex64> = col
                    .iter()
                    .flat_map(|&a| col.iter().map(move |&b| a * b))
                    .collect();
                for (a, va) in v.iter().enumerate() {
                    for (b, vb) in v.iter().enumerate() {
                        q[a * big + b] += va * vb.conj();
                    }
                }
            }
            q
        })
        .collect();
    let m = unitaries.len();
    let mut g = vec![0.0; m * m];
    for r in 0..m {
        for t in r..m {
            // tr(Q_r Q_t) = Σ_ab Q_r[a,b] conj(Q_t[a,b]) since Q_t is Hermitian.
            let hs: Complex64 = projector_sums[r]
                .iter()
                .zip(&projector_sums[t])
                .map(|(x, y)| x * y.conj())
                .sum();
            g[r * m + t] = hs.re;
            g[t * m + r] = hs.re;
        }
    }
    Ok(real_matrix(m, &g))
}

/// Random-restart search budget. Step sizes decay geometrically from
/// `delta_start` to `delta_end` over the steps of each restart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub restarts: usize,
    pub steps: usize,
    pub delta_start: f64,
    pub delta_end: f64,
}

impl SearchBudget {
    pub fn new(restarts: usize, steps: usize) -> Self {
        Self {
            restarts,
            steps,
            delta_start: 0.3,
            delta_end: 0.01,
        }
    }

    fn delta(&self, step: usize) -> f64 {
        if self.steps <= 1 {
            return self.delta_start;
        }
        let frac = step as f64 / (self.steps - 1) as f64;
        self.delta_start * (self.delta_end / self.delta_start).powf(frac)
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self::new(4, 200)
    }
}

/// Everything needed to rebuild the minimizing tuple bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrail {
    pub seed: u64,
    pub dim: usize,
    pub m: usize,
    pub restart: usize,
    pub budget: SearchBudget,
    pub accepted_steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub report: GramReport,
    /// `λ_min` of the Haar starting tuple of the winning restart.
    pub initial_lambda_min: f64,
    pub trail: SearchTrail,
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SEARCH_SALT);
    rng.set_stream(restart as u64);
    rng
}

/// Unit-Frobenius-norm random Hermitian matrix.
fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g = haar_gaussian(dim, rng);
    let h = g.add(&g.adjoint()).expect("same dimension");
    let norm = h.frobenius_norm();
    h.scale(Complex64::new(1.0 / norm, 0.0))
}

fn haar_gaussian(dim: usize, rng: &mut ChaCha8Rng) -> Matrix {
    use rand_distr::StandardNormal;
    Matrix::from_fn_mut(dim, || {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// One proposed move: which member, and the Hermitian direction.
struct Proposal {
    member: usize,
    direction: Matrix,
}

fn propose(dim: usize, m: usize, rng: &mut ChaCha8Rng) -> Proposal {
    let member = rng.random_range(0..m);
    let direction = random_hermitian(dim, rng);
    Proposal { member, direction }
}

fn initial_tuple(dim: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<Matrix> {
    (0..m).map(|_| haar_unitary(dim, rng)).collect()
}

/// Recomputes row and column `k` of the Gram values after member `k` changed.
fn update_gram(
    w: &WitnessFunction,
    tuple: &[Matrix],
    k: usize,
    values: &mut [f64],
) -> Result<(), PdError> {
    let m = tuple.len();
    for i in 0..m {
        let (r, t) = if i <= k { (i, k) } else { (k, i) };
        let v = w.evaluate(&tuple[r].adjoint_mul(&tuple[t])?)?;
        values[r * m + t] = v;
        values[t * m + r] = v;
    }
    Ok(())
}

struct RestartOutcome {
    lambda_min: f64,
    initial_lambda_min: f64,
    accepted: Vec<usize>,
}

fn run_restart(
    w: &WitnessFunction,
    m: usize,
    seed: u64,
    restart: usize,
    budget: &SearchBudget,
) -> Result<RestartOutcome, PdError> {
    let dim = w.dim();
    let mut rng = restart_rng(seed, restart);
    let mut tuple = initial_tuple(dim, m, &mut rng);
    let mut values = gram_values(w, &tuple)?;
    let initial = min_eigenvalue(m, &values)?;
    let mut best = initial;
    let mut accepted = Vec::new();
    for step in 0..budget.steps {
        let Proposal { member, direction } = propose(dim, m, &mut rng);
        let step_unitary = Matrix::exp_i_hermitian(&direction, budget.delta(step));
        let previous = std::mem::replace(&mut tuple[member], Matrix::identity(dim));
        tuple[member] = previous.matmul(&step_unitary)?;
        let mut candidate = values.clone();
        update_gram(w, &tuple, member, &mut candidate)?;
        let lambda = min_eigenvalue(m, &candidate)?;
        if lambda < best {
            best = lambda;
            values = candidate;
            accepted.push(step);
        } else {
            tuple[member] = previous;
        }
    }
    Ok(RestartOutcome {
        lambda_min: best,
        initial_lambda_min: initial,
        accepted,
    })
}

/// Random-restart local search for the most negative `λ_min` of a Gram matrix
/// of `w` at `m`-tuples.
///
/// Each restart starts from a Haar tuple and repeatedly proposes
/// `U_k ← U_k · exp(iδH)` for a random member `k` and random unit Hermitian `H`,
/// keeping the move when `λ_min` decreases. Restarts run in parallel and the
/// minimum is taken in restart order.
pub fn counterexample_search(
    w: &WitnessFunction,
    m: usize,
    cfg: &SamplerConfig,
    budget: &SearchBudget,
) -> Result<SearchReport, PdError> {
    if !w.is_star_symmetric() {
        return Err(PdError::NotStarSymmetric(w.name().to_string()));
    }
    if m < 2 {
        return Err(PdError::TooFewElements { min: 2, got: m });
    }
    if budget.restarts == 0 {
        return Err(PdError::TooFewElements { min: 1, got: 0 });
    }
    cfg.validate()?;
    if w.dim() != cfg.dim {
        return Err(PdError::MixedDimensions {
            index: 0,
            expected: cfg.dim,
            got: w.dim(),
        });
    }
    let outcomes: Vec<RestartOutcome> = (0..budget.restarts)
        .into_par_iter()
        .map(|r| run_restart(w, m, cfg.seed, r, budget))
        .collect::<Result<_, _>>()?;
    let (restart, best) = outcomes
        .into_iter()
        .enumerate()
        .reduce(|a, b| {
            if b.1.lambda_min < a.1.lambda_min {
                b
            } else {
                a
            }
        })
        .expect("at least one restart");
    Ok(SearchReport {
        report: GramReport {
            witness_name: w.name().to_string(),
            dim: w.dim(),
            m,
            lambda_min: best.lambda_min,
            lambda_min_shifted: None,
            alpha0: None,
            seed: Some(cfg.seed),
            threshold: REFUTATION_THRESHOLD,
            psd: best.lambda_min >= -REFUTATION_THRESHOLD,
            warnings: Vec::new(),
        },
        initial_lambda_min: best.initial_lambda_min,
        trail: SearchTrail {
            seed: cfg.seed,
            dim: w.dim(),
            m,
            restart,
            budget: *budget,
            accepted_steps: best.accepted,
        },
    })
}

/// Rebuilds the tuple described by a trail. The proposal stream is consumed
/// exactly as during the search, so the result is bit-identical.
pub fn replay_trail(trail: &SearchTrail) -> Result<Vec<Matrix>, PdError> {
    let mut rng = restart_rng(trail.seed, trail.restart);
    let mut tuple = initial_tuple(trail.dim, trail.m, &mut rng);
    let accepted: BTreeSet<usize> = trail.accepted_steps.iter().copied().collect();
    for step in 0..trail.budget.steps {
        let Proposal { member, direction } = propose(trail.dim, trail.m, &mut rng);
        if accepted.contains(&step) {
            let step_unitary = Matrix::exp_i_hermitian(&direction, trail.budget.delta(step));
            tuple[member] = tuple[member].matmul(&step_unitary)?;
        }
    }
    Ok(tuple)
}

/// `λ_min` of the Gram matrix of `w` at the tuple a trail describes.
pub fn replay_lambda_min(w: &WitnessFunction, trail: &SearchTrail) -> Result<f64, PdError> {
    let tuple = replay_trail(trail)?;
    min_eigenvalue(tuple.len(), &gram_values(w, &tuple)?)
}

/// Parses `start:stop:count` (inclusive linspace) or a comma-separated list.
pub fn parse_eps_grid(text: &str) -> Result<Vec<f64>, PdError> {
    let bad = |msg: String| PdError::BadGrid(msg);
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| bad(format!("`{s}` is not a finite number")))
    };
    let grid: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(bad(format!("`{text}` is not start:stop:count")));
        };
        let (start, stop) = (num(start)?, num(stop)?);
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| bad(format!("`{count}` is not a point count")))?;
        match count {
            0 => return Err(bad("point count must be positive".into())),
            1 => vec![start],
            _ => (0..count)
                .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
                .collect(),
        }
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    validate_grid(&grid)?;
    Ok(grid)
}

fn validate_grid(grid: &[f64]) -> Result<(), PdError> {
    if grid.is_empty() {
        return Err(PdError::BadGrid("grid is empty".into()));
    }
    if grid
        .iter()
        .any(|&e| e.is_nan() || e < 0.0 || !e.is_finite())
    {
        return Err(PdError::BadGrid(
            "grid values must be finite and non-negative".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PdError::BadGrid("grid must be strictly ascending".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsScanConfig {
    pub kind: CombinationKind,
    pub eps_grid: Vec<f64>,
    pub m: usize,
    pub trials: usize,
    pub search: Option<SearchBudget>,
    /// Haar samples for the mean of `m`, used by the conditional bounds.
    pub mean_samples: usize,
}

impl EpsScanConfig {
    pub fn new(kind: CombinationKind, eps_grid: Vec<f64>) -> Self {
        Self {
            kind,
            eps_grid,
            m: DEFAULT_SCAN_M,
            trials: 200,
            search: Some(SearchBudget::default()),
            mean_samples: 20_000,
        }
    }
}

/// The bound `5 / (5/7 + ε·∫m)` that would follow if `h + ε·m` were positive
/// definite, with the interval from `∫m ± 3·stderr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalBound {
    pub eps: f64,
    pub bound: f64,
    pub lower: f64,
    pub upper: f64,
    pub label: String,
}

pub const CONDITIONAL_LABEL: &str = "conditional on positive definiteness (not proven)";

/// `(d-1) / ((d-1)/(d+1) + ε·mean)` with `mean ± 3·stderr` propagated.
pub fn conditional_bound(dim: usize, eps: f64, m_mean: &IntegralEstimate) -> ConditionalBound {
    let d = dim as f64;
    let base = (d - 1.0) / (d + 1.0);
    let at = |mean: f64| (d - 1.0) / (base + eps * mean);
    let (lo_mean, hi_mean) = m_mean.interval(3.0);
    ConditionalBound {
        eps,
        bound: at(m_mean.mean),
        lower: at(hi_mean),
        upper: at(lo_mean),
        label: CONDITIONAL_LABEL.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsScanResult {
    pub kind: CombinationKind,
    pub dim: usize,
    pub m: usize,
    pub seed: u64,
    pub eps_grid: Vec<f64>,
    /// Per ε, the minimum of `trial_curve` and `search_curve`.
    pub lambda_min_curve: Vec<f64>,
    /// Per ε, minimum `λ_min` over the Haar trial tuples.
    pub trial_curve: Vec<f64>,
    /// Per ε, the counterexample search result (absent without a search budget).
    pub search_curve: Option<Vec<f64>>,
    pub trials_per_eps: Vec<usize>,
    /// Largest `|m|` seen in the trial Gram matrices.
    pub max_abs_m: f64,
    pub refuted_at: Option<f64>,
    pub status: String,
    pub m_mean: Option<IntegralEstimate>,
    pub conditional_bounds: Vec<ConditionalBound>,
    pub search_trails: Vec<SearchTrail>,
}

/// For each ε, the minimum `λ_min` of Gram matrices of `h + ε·m` over `trials`
/// Haar tuples plus an optional counterexample search. `refuted_at` is the first
/// ε whose curve drops below `-REFUTATION_THRESHOLD`.
///
/// Trial tuples are shared across ε: the Gram matrices of `h` and `m` are built
/// once per tuple and combined for every grid point.
pub fn eps_scan(config: &EpsScanConfig, cfg: &SamplerConfig) -> Result<EpsScanResult, PdError> {
    validate_grid(&config.eps_grid)?;
    if config.m < 2 {
        return Err(PdError::TooFewElements {
            min: 2,
            got: config.m,
        });
    }
    let cfg = SamplerConfig {
        dim: CONJ_DIM,
        ..*cfg
    };
    cfg.validate()?;
    let h = h_witness(CONJ_DIM);
    let mw = m_combined(config.kind);
    let m = config.m;
    let grid = &config.eps_grid;

    let per_trial: Vec<(Vec<f64>, f64)> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let tuple = sampled_tuple(&cfg, m, trial);
            let gh = gram_values(&h, &tuple)?;
            let gm = gram_values(&mw, &tuple)?;
            let max_m = gm.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let lambdas = grid
                .iter()
                .map(|&eps| {
                    let combined: Vec<f64> = gh.iter().zip(&gm).map(|(a, b)| a + eps * b).collect();
                    min_eigenvalue(m, &combined)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((lambdas, max_m))
        })
        .collect::<Result<_, PdError>>()?;

    let mut trial_curve = vec![f64::INFINITY; grid.len()];
    let mut max_abs_m = 0.0f64;
    for (lambdas, max_m) in &per_trial {
        for (slot, &l) in trial_curve.iter_mut().zip(lambdas) {
            *slot = slot.min(l);
        }
        max_abs_m = max_abs_m.max(*max_m);
    }

    let (search_curve, search_trails) = match &config.search {
        Some(budget) => {
            let reports = grid
                .iter()
                .map(|&eps| counterexample_search(&h_plus_eps_m(config.kind, eps), m, &cfg, budget))
                .collect::<Result<Vec<_>, _>>()?;
            (
                Some(
                    reports
                        .iter()
                        .map(|r| r.report.lambda_min)
                        .collect::<Vec<_>>(),
                ),
                reports.into_iter().map(|r| r.trail).collect(),
            )
        }
        None => (None, Vec::new()),
    };

    let lambda_min_curve: Vec<f64> = match &search_curve {
        Some(s) => trial_curve.iter().zip(s).map(|(a, b)| a.min(*b)).collect(),
        None => trial_curve.clone(),
    };
    let refuted_at = grid
        .iter()
        .zip(&lambda_min_curve)
        .find(|(_, &l)| l < -REFUTATION_THRESHOLD)
        .map(|(&eps, _)| eps);

    let m_mean = if config.mean_samples >= 2 {
        Some(integrate(&mw, &cfg, config.mean_samples)?)
    } else {
        None
    };
    let conditional_bounds = match &m_mean {
        Some(mean) => grid
            .iter()
            .copied()
            .filter(|&eps| eps > 0.0 && refuted_at.is_none_or(|r| eps < r))
            .map(|eps| conditional_bound(CONJ_DIM, eps, mean))
            .collect(),
        None => Vec::new(),
    };
    let status = match refuted_at {
        Some(eps) => format!("positive definiteness refuted at eps = {eps}"),
        None => "not refuted at grid/budget".to_string(),
    };

    Ok(EpsScanResult {
        kind: config.kind,
        dim: CONJ_DIM,
        m,
        seed: cfg.seed,
        eps_grid: grid.clone(),
        lambda_min_curve,
        trial_curve,
        search_curve,
        trials_per_eps: vec![config.trials; grid.len()],
        max_abs_m,
        refuted_at,
        status,
        m_mean,
        conditional_bounds,
        search_trails,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mub::construct_prime;
    use crate::witness::{h0_witness, m1_witness};

    #[test]
    fn single_identity_gram() {
        let g = gram(&h_witness(4), &[Matrix::identity(4)]).unwrap();
        assert_eq!(g, Matrix::from_real(1, &[3.0]).unwrap());
        assert_eq!(psd_check(&g, EVIDENCE_THRESHOLD).unwrap().lambda_min, 3.0);
    }

    #[test]
    fn complete_mub_gram_is_scaled_identity() {
        let sys = construct_prime(3).unwrap();
        let g = gram(&h_witness(3), sys.bases()).unwrap();
        let expected = Matrix::identity(4).scale(Complex64::new(2.0, 0.0));
        assert!(g.max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn psd_examples() {
        let i5 = psd_check(&Matrix::identity(5), EVIDENCE_THRESHOLD).unwrap();
        assert_eq!(
            i5,
            PsdCheck {
                lambda_min: 1.0,
                psd: true
            }
        );
        let d = Matrix::from_real(2, &[1.0, 0.0, 0.0, -0.5]).unwrap();
        let check = psd_check(&d, EVIDENCE_THRESHOLD).unwrap();
        assert_eq!(check.lambda_min, -0.5);
        assert!(!check.psd);
        let ones = psd_check(&Matrix::ones(4), EVIDENCE_THRESHOLD).unwrap();
        assert!(ones.lambda_min.abs() < 1e-12 && ones.psd);
        let asym = Matrix::from_real(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            psd_check(&asym, 1e-8),
            Err(PdError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn gram_input_errors() {
        assert!(matches!(
            gram(&m1_witness(), &[Matrix::identity(6)]),
            Err(PdError::NotStarSymmetric(_))
        ));
        assert!(matches!(
            gram(&h_witness(2), &[Matrix::identity(2), Matrix::identity(3)]),
            Err(PdError::MixedDimensions { index: 1, .. })
        ));
        let not_unitary = Matrix::identity(2).scale(Complex64::new(2.0, 0.0));
        assert!(matches!(
            gram(&h_witness(2), &[not_unitary]),
            Err(PdError::NotUnitary { index: 0, .. })
        ));
    }

    #[test]
    fn shifted_with_zero_alpha_is_plain_check() {
        let cfg = SamplerConfig::new(4, 3);
        let tuple = sampled_tuple(&cfg, 6, 0);
        let w = h0_witness(4);
        let report = shifted_check(&w, 0.0, &tuple, EVIDENCE_THRESHOLD).unwrap();
        let plain = psd_check(&gram(&w, &tuple).unwrap(), EVIDENCE_THRESHOLD).unwrap();
        assert_eq!(report.lambda_min_shifted, Some(plain.lambda_min));
        assert!(report.warnings.is_empty());
        let over = shifted_check(&w, 1.9, &tuple, EVIDENCE_THRESHOLD).unwrap();
        assert_eq!(over.warnings.len(), 1);
    }

    #[test]
    fn projector_gram_small_cases() {
        let g = gram_h0_via_projectors(&[Matrix::identity(3)], DEFAULT_PROJECTOR_DIM_CAP).unwrap();
        assert!((g.get(0, 0).re - 3.0).abs() < 1e-12);
        let pair = [Matrix::identity(6), crate::catalog6::fourier(6)];
        let g = gram_h0_via_projectors(&pair, DEFAULT_PROJECTOR_DIM_CAP).unwrap();
        assert!((g.get(0, 1).re - crate::witness::h0(&pair[1])).abs() < 1e-12);
        assert!((g.get(0, 1).re - 1.0).abs() < 1e-12);
        assert!(matches!(
            gram_h0_via_projectors(&[Matrix::identity(9)], DEFAULT_PROJECTOR_DIM_CAP),
            Err(PdError::DimensionTooLarge { dim: 9, cap: 8 })
        ));
    }

    #[test]
    fn eps_grid_parsing() {
        assert_eq!(parse_eps_grid("0:0.1:3").unwrap(), vec![0.0, 0.05, 0.1]);
        assert_eq!(parse_eps_grid("0,0.01,0.5").unwrap(), vec![0.0, 0.01, 0.5]);
        assert_eq!(parse_eps_grid("0.2:1:1").unwrap(), vec![0.2]);
        assert!(parse_eps_grid("0.1,0.05").is_err());
        assert!(parse_eps_grid("-1,0").is_err());
        assert!(parse_eps_grid("0:1").is_err());
        assert!(parse_eps_grid("0:1:0").is_err());
        assert!(parse_eps_grid("a,b").is_err());
    }

    #[test]
    fn budget_anneals_between_endpoints() {
        let b = SearchBudget::new(1, 11);
        assert_eq!(b.delta(0), 0.3);
        assert!((b.delta(10) - 0.01).abs() < 1e-15);
        assert!((1..11).all(|s| b.delta(s) < b.delta(s - 1)));
    }

    #[test]
    fn search_rejects_bad_arguments() {
        let cfg = SamplerConfig::new(3, 1);
        assert!(counterexample_search(&h_witness(3), 1, &cfg, &SearchBudget::new(1, 1)).is_err());
        assert!(counterexample_search(
            &m1_witness(),
            3,
            &SamplerConfig::new(6, 1),
            &SearchBudget::new(1, 1)
        )
        .is_err());
        assert!(counterexample_search(&h_witness(4), 3, &cfg, &SearchBudget::new(1, 1)).is_err());
    }
}
