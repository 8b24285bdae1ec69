use std::fs;
use std::path::Path;

use mubs_core::catalog6::{self, CatalogError, FAMILIES};
use mubs_core::haar::{integrate, HaarError, IntegralEstimate, SamplerConfig};
use mubs_core::linalg::{Matrix, Tolerance};
use mubs_core::mub::{construct_complete, field::is_prime, verify_mub, MubError, MubSystem};
use mubs_core::pdcert::{
    self, counterexample_search, gram, gram_h0_via_projectors, parse_eps_grid, sampled_gram_report,
    sampled_tuple, shifted_check, EpsScanConfig, GramReport, PdError, SearchBudget,
    CONDITIONAL_LABEL, DEFAULT_PROJECTOR_DIM_CAP, EVIDENCE_THRESHOLD,
};
use mubs_core::witness::{
    delsarte_audit, delsarte_bound, m_combined, parse_witness, CombinationKind, WitnessError,
    WitnessFunction, CONJ_DIM,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{Exit, Failure, Outcome, Table};

impl From<WitnessError> for Failure {
    fn from(e: WitnessError) -> Self {
        let exit = match e {
            WitnessError::UnknownWitness(_)
            | WitnessError::BadParameter(_)
            | WitnessError::WrongDimension { .. }
            | WitnessError::MissingHaarMean { .. } => Exit::Usage,
            WitnessError::Linalg(mubs_core::linalg::LinalgError::ZeroDimension) => Exit::Usage,
            WitnessError::NonPositiveMean { .. } => Exit::Hypothesis,
            _ => Exit::Violation,
        };
        Failure {
            exit,
            message: e.to_string(),
        }
    }
}

impl From<HaarError> for Failure {
    fn from(e: HaarError) -> Self {
        match e {
            HaarError::Witness(w) => w.into(),
            other => Failure::usage(other.to_string()),
        }
    }
}

impl From<PdError> for Failure {
    fn from(e: PdError) -> Self {
        match e {
            PdError::Witness(w) => w.into(),
            PdError::Haar(h) => h.into(),
            PdError::NotStarSymmetric(_)
            | PdError::MixedDimensions { .. }
            | PdError::TooFewElements { .. }
            | PdError::DimensionTooLarge { .. }
            | PdError::BadGrid(_) => Failure::usage(e.to_string()),
            other => Failure::violation(other.to_string()),
        }
    }
}

impl From<MubError> for Failure {
    fn from(e: MubError) -> Self {
        match e {
            MubError::NotOddPrime(_)
            | MubError::EvenPrimePower(_)
            | MubError::AboveCap { .. }
            | MubError::UnsupportedDimension(_) => Failure::usage(e.to_string()),
            other => Failure::violation(other.to_string()),
        }
    }
}

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::UnknownFamily(_) | CatalogError::ParameterCount { .. } => {
                Failure::usage(e.to_string())
            }
            CatalogError::Witness(w) => w.into(),
            other => Failure::violation(other.to_string()),
        }
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn sampler(dim: usize, seed: u64, chunk_size: usize) -> Result<SamplerConfig, Failure> {
    let cfg = SamplerConfig::new(dim, seed).with_chunk_size(chunk_size);
    cfg.validate()?;
    Ok(cfg)
}

fn witness(spec: &str, dim: usize) -> Result<WitnessFunction, Failure> {
    Ok(parse_witness(spec, dim)?)
}

/// `Some((kind, eps))` for `h_plus_eps_m:<kind>:<eps>`.
fn eps_witness_parts(spec: &str) -> Option<(CombinationKind, f64)> {
    let rest = spec.strip_prefix("h_plus_eps_m:")?;
    let (kind, eps) = rest.split_once(':')?;
    Some((kind.parse().ok()?, eps.parse().ok()?))
}

/// Theorem-backed positive definiteness: `h`, `h0`, and `h0 - α0` with `α0 ≤ ∫h0`.
fn theorem_backed(w: &WitnessFunction, alpha0: Option<f64>) -> bool {
    let name = w.name();
    let base = name == "h" || name == "h0";
    let shift_ok = match (alpha0, w.haar_mean()) {
        (None, _) => true,
        (Some(a), Some(mean)) => name == "h0" && a <= mean,
        (Some(_), None) => false,
    };
    base && shift_ok
}

pub fn integrate_cmd(
    spec: &str,
    dim: usize,
    samples: usize,
    seed: u64,
    chunk: usize,
) -> Result<Outcome, Failure> {
    let w = witness(spec, dim)?;
    let cfg = sampler(dim, seed, chunk)?;
    let estimate = integrate(&w, &cfg, samples)?;
    let closed = w.haar_mean();
    Ok(Outcome::ok(json!({
        "witness": w.name(),
        "dim": dim,
        "estimate": estimate,
        "closed_form_mean": closed,
        "within_3_stderr": closed.map(|c| estimate.agrees_with(c, 3.0)),
        "caveats": w.caveats(),
    })))
}

#[derive(Serialize)]
struct BoundReport {
    witness: String,
    dim: usize,
    value_at_identity: f64,
    mean_source: &'static str,
    haar_mean: f64,
    mean_estimate: Option<IntegralEstimate>,
    bound: f64,
    /// `[lower, upper]` from `mean ± 3·stderr`; `upper` is absent when the
    /// interval reaches zero.
    bound_interval: Option<(f64, Option<f64>)>,
    conditional: Option<&'static str>,
    caveats: Vec<String>,
}

pub fn bound_cmd(
    spec: &str,
    dim: usize,
    samples: Option<usize>,
    seed: u64,
    chunk: usize,
) -> Result<Outcome, Failure> {
    let w = witness(spec, dim)?;
    let top = w.identity_value()?;
    let eps_parts = eps_witness_parts(spec);
    let (mean, estimate, source) = match samples {
        Some(n) => {
            let cfg = sampler(dim, seed, chunk)?;
            match eps_parts {
                // E[h] is exact; only E[m] is estimated.
                Some((kind, eps)) => {
                    let e = integrate(&m_combined(kind), &cfg, n)?;
                    let base = (dim as f64 - 1.0) / (dim as f64 + 1.0);
                    let shifted = IntegralEstimate {
                        mean: base + eps * e.mean,
                        stderr: eps.abs() * e.stderr,
                        ..e
                    };
                    (shifted.mean, Some(shifted), "exact h mean + monte carlo m mean")
                }
                None => {
                    let e = integrate(&w, &cfg, n)?;
                    (e.mean, Some(e), "monte carlo")
                }
            }
        }
        None => match w.haar_mean() {
            Some(m) => (m, None, "closed form"),
            None => {
                return Err(Failure::usage(format!(
                    "witness `{}` has no closed-form Haar mean; pass --samples for a Monte Carlo interval",
                    w.name()
                )))
            }
        },
    };
    let bound = delsarte_bound(&w, mean)?;
    let bound_interval = estimate.map(|e| {
        let (lo, hi) = e.interval(3.0);
        (top / hi, (lo > 0.0).then(|| top / lo))
    });
    let conditional = eps_parts.is_some().then_some(CONDITIONAL_LABEL);
    Ok(Outcome::ok(BoundReport {
        witness: w.name().to_string(),
        dim,
        value_at_identity: top,
        mean_source: source,
        haar_mean: mean,
        mean_estimate: estimate,
        bound,
        bound_interval,
        conditional,
        caveats: w.caveats().to_vec(),
    }))
}

pub fn load_system(path: &Path) -> Result<MubSystem, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{} is not JSON: {e}", path.display())))?;
    let system = match value.pointer("/result/system") {
        Some(inner) => inner.clone(),
        None => value,
    };
    serde_json::from_value(system).map_err(|e| {
        Failure::usage(format!(
            "{} does not hold a MUB system: {e}",
            path.display()
        ))
    })
}

fn gram_rows(g: &Matrix) -> Vec<Vec<f64>> {
    (0..g.dim())
        .map(|i| (0..g.dim()).map(|j| g.get(i, j).re).collect())
        .collect()
}

pub struct GramOptions<'a> {
    pub spec: &'a str,
    pub dim: usize,
    pub m: usize,
    pub trial: usize,
    pub alpha0: Option<f64>,
    pub input: Option<&'a Path>,
    pub projector: bool,
    pub threshold: f64,
    pub seed: u64,
}

pub fn gram_cmd(o: &GramOptions) -> Result<Outcome, Failure> {
    let (tuple, seed) = match o.input {
        Some(path) => (load_system(path)?.bases().to_vec(), None),
        None => {
            let cfg = sampler(o.dim, o.seed, 1)?;
            (sampled_tuple(&cfg, o.m, o.trial), Some(o.seed))
        }
    };
    let dim = tuple.first().map(Matrix::dim).unwrap_or(o.dim);
    let w = witness(o.spec, dim)?;
    let g = gram(&w, &tuple)?;
    let mut report: GramReport = shifted_check(&w, o.alpha0.unwrap_or(0.0), &tuple, o.threshold)?;
    if o.alpha0.is_none() {
        report.alpha0 = None;
        report.lambda_min_shifted = None;
        report.psd = report.lambda_min >= -o.threshold;
        report.warnings.clear();
    }
    report.seed = seed;
    let projector_deviation = if o.projector {
        if w.name() != "h0" {
            return Err(Failure::usage(
                "--projector compares against h0; use --witness h0",
            ));
        }
        let pg = gram_h0_via_projectors(&tuple, DEFAULT_PROJECTOR_DIM_CAP)?;
        Some(
            pg.max_abs_diff(&g)
                .map_err(|e| Failure::violation(e.to_string()))?,
        )
    } else {
        None
    };
    let backed = theorem_backed(&w, o.alpha0);
    let outcome = Outcome::ok(json!({
        "report": report,
        "gram": gram_rows(&g),
        "projector_max_deviation": projector_deviation,
        "theorem_backed": backed,
    }));
    Ok(if backed && !report.psd {
        outcome.flag(
            Exit::Violation,
            "Gram matrix of a positive definite witness is not PSD",
        )
    } else {
        outcome
    })
}

pub struct PdScanOptions<'a> {
    pub spec: &'a str,
    pub dim: usize,
    pub m: usize,
    pub trials: usize,
    pub alpha0: Option<f64>,
    pub restarts: usize,
    pub steps: usize,
    pub threshold: f64,
    pub seed: u64,
}

pub fn pd_scan_cmd(o: &PdScanOptions) -> Result<Outcome, Failure> {
    let w = witness(o.spec, o.dim)?;
    if o.trials == 0 {
        return Err(Failure::usage("--trials must be positive"));
    }
    let cfg = sampler(o.dim, o.seed, 1)?;
    let reports = (0..o.trials)
        .map(|t| sampled_gram_report(&w, &cfg, o.m, t, o.alpha0, o.threshold))
        .collect::<Result<Vec<_>, _>>()?;
    let key = |r: &GramReport| r.lambda_min_shifted.unwrap_or(r.lambda_min);
    let (worst_trial, worst) = reports
        .iter()
        .enumerate()
        .map(|(i, r)| (i, key(r)))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let n_psd = reports.iter().filter(|r| r.psd).count();
    let search = if o.restarts > 0 {
        if o.alpha0.is_some() {
            return Err(Failure::usage(
                "the counterexample search does not take --alpha0",
            ));
        }
        Some(counterexample_search(
            &w,
            o.m,
            &cfg,
            &SearchBudget::new(o.restarts, o.steps),
        )?)
    } else {
        None
    };
    let backed = theorem_backed(&w, o.alpha0);
    let search_min = search.as_ref().map(|s| s.report.lambda_min);
    let table = Table {
        header: vec!["trial", "lambda_min", "lambda_min_shifted", "psd"],
        rows: reports
            .iter()
            .enumerate()
            .map(|(i, r)| {
                vec![
                    i.to_string(),
                    num(r.lambda_min),
                    r.lambda_min_shifted.map(num).unwrap_or_default(),
                    r.psd.to_string(),
                ]
            })
            .collect(),
    };
    let outcome = Outcome::ok(json!({
        "witness": w.name(),
        "dim": o.dim,
        "m": o.m,
        "trials": o.trials,
        "alpha0": o.alpha0,
        "threshold": o.threshold,
        "min_lambda": worst,
        "worst_trial": worst_trial,
        "n_psd": n_psd,
        "theorem_backed": backed,
        "lambda_min_per_trial": reports.iter().map(key).collect::<Vec<_>>(),
        "search": search,
        "warnings": reports.first().map(|r| r.warnings.clone()).unwrap_or_default(),
    }))
    .with_table(table);
    let search_violates = search_min.is_some_and(|l| l < -pdcert::REFUTATION_THRESHOLD);
    Ok(if backed && (n_psd < o.trials || search_violates) {
        outcome.flag(
            Exit::Violation,
            "a Gram matrix of a positive definite witness is not PSD",
        )
    } else {
        outcome
    })
}

pub struct EpsScanOptions<'a> {
    pub kind: &'a str,
    pub grid: &'a str,
    pub m: usize,
    pub trials: usize,
    pub restarts: usize,
    pub steps: usize,
    pub mean_samples: usize,
    pub seed: u64,
}

pub fn eps_scan_cmd(o: &EpsScanOptions) -> Result<Outcome, Failure> {
    let kind: CombinationKind = o.kind.parse()?;
    let grid = parse_eps_grid(o.grid)?;
    let mut config = EpsScanConfig::new(kind, grid);
    config.m = o.m;
    config.trials = o.trials;
    config.search = (o.restarts > 0).then(|| SearchBudget::new(o.restarts, o.steps));
    config.mean_samples = o.mean_samples;
    let cfg = sampler(CONJ_DIM, o.seed, mubs_core::haar::DEFAULT_CHUNK_SIZE)?;
    let result = pdcert::eps_scan(&config, &cfg)?;
    let table = Table {
        header: vec![
            "eps",
            "lambda_min",
            "trial_lambda_min",
            "search_lambda_min",
            "trials",
        ],
        rows: (0..result.eps_grid.len())
            .map(|i| {
                vec![
                    num(result.eps_grid[i]),
                    num(result.lambda_min_curve[i]),
                    num(result.trial_curve[i]),
                    result
                        .search_curve
                        .as_ref()
                        .map(|s| num(s[i]))
                        .unwrap_or_default(),
                    result.trials_per_eps[i].to_string(),
                ]
            })
            .collect(),
    };
    let zero_violation = result
        .eps_grid
        .iter()
        .zip(&result.lambda_min_curve)
        .any(|(&e, &l)| e == 0.0 && l < -EVIDENCE_THRESHOLD);
    let outcome = Outcome::ok(&result).with_table(table);
    Ok(if zero_violation {
        outcome.flag(
            Exit::Violation,
            "the eps = 0 Gram matrices (of h) are not PSD",
        )
    } else {
        outcome
    })
}

fn construction_name(dim: usize) -> &'static str {
    if dim == 2 {
        "pauli eigenbases"
    } else if is_prime(dim as u32) {
        "quadratic phases over Z_p"
    } else {
        "quadratic phases over GF(q) via the trace map"
    }
}

pub fn mub_gen_cmd(dim: usize, tol: &Tolerance) -> Result<Outcome, Failure> {
    let system = construct_complete(dim)?;
    let verification = verify_mub(&system, tol);
    let outcome = Outcome::ok(json!({
        "dim": dim,
        "n_bases": system.len(),
        "construction": construction_name(dim),
        "verification": verification,
        "system": system,
    }));
    Ok(if verification.ok {
        outcome
    } else {
        outcome.flag(Exit::Violation, "constructed system failed verification")
    })
}

pub fn mub_verify_cmd(path: &Path, tol: &Tolerance) -> Result<Outcome, Failure> {
    let system = load_system(path)?;
    let v = verify_mub(&system, tol);
    let outcome = Outcome::ok(json!({ "dim": system.dim(), "verification": v }));
    Ok(if v.ok {
        outcome
    } else {
        outcome.flag(Exit::Violation, "bases are not mutually unbiased")
    })
}

pub fn audit_cmd(path: &Path, spec: &str) -> Result<Outcome, Failure> {
    let system = load_system(path)?;
    let w = witness(spec, system.dim())?;
    let audit = delsarte_audit(&system, &w)?;
    let outcome = Outcome::ok(json!({
        "witness": w.name(),
        "dim": system.dim(),
        "audit": audit,
        "gap": audit.gap(),
    }));
    Ok(if audit.valid {
        outcome
    } else {
        outcome.flag(Exit::Violation, "Delsarte sandwich violated")
    })
}

pub fn catalog_list_cmd() -> Outcome {
    let families: Vec<Value> = FAMILIES
        .iter()
        .map(|f| {
            json!({
                "name": f.name,
                "n_params": f.n_params,
                "description": f.description,
                "citation": f.citation,
            })
        })
        .collect();
    let table = Table {
        header: vec!["name", "n_params", "description"],
        rows: FAMILIES
            .iter()
            .map(|f| {
                vec![
                    f.name.to_string(),
                    f.n_params.to_string(),
                    f.description.to_string(),
                ]
            })
            .collect(),
    };
    Outcome::ok(json!({ "families": families })).with_table(table)
}

pub fn parse_params(text: Option<&str>) -> Result<Vec<f64>, Failure> {
    match text.map(str::trim) {
        None | Some("") => Ok(Vec::new()),
        Some(t) => t
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Failure::usage(format!("`{s}` is not a finite parameter")))
            })
            .collect(),
    }
}

pub fn catalog_get_cmd(name: &str, params: &[f64], tol: &Tolerance) -> Result<Outcome, Failure> {
    let m = catalog6::family(name, params)?;
    Ok(Outcome::ok(json!({
        "family": name,
        "params": params,
        "matrix": m,
        "unitarity_defect": m.unitarity_defect(),
        "hadamard_defect": m.hadamard_defect(),
        "is_scaled_hadamard": m.is_scaled_hadamard(tol),
    })))
}

#[derive(Serialize)]
struct ConjectureRow {
    family: &'static str,
    params: Vec<f64>,
    #[serde(flatten)]
    record: catalog6::ConjectureRecord,
}

pub fn conj6_check_cmd(family: &str, points: usize, tol: f64) -> Result<Outcome, Failure> {
    if points == 0 {
        return Err(Failure::usage("--grid must be positive"));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Failure::usage("--tol must be non-negative"));
    }
    let families: Vec<_> = if family == "all" {
        FAMILIES.iter().collect()
    } else {
        vec![catalog6::lookup(family)?]
    };
    let mut rows = Vec::new();
    for f in families {
        let (params, targets): (Vec<_>, Vec<_>) = f.grid(points)?.into_iter().unzip();
        let records = catalog6::conjecture_check(&targets, tol)?;
        rows.extend(
            params
                .into_iter()
                .zip(records)
                .map(|(params, record)| ConjectureRow {
                    family: f.name,
                    params,
                    record,
                }),
        );
    }
    let failing: Vec<&ConjectureRow> = rows.iter().filter(|r| !r.record.vanishes).collect();
    let failing_families: Vec<&str> = {
        let mut names: Vec<&str> = failing.iter().map(|r| r.family).collect();
        names.dedup();
        names
    };
    let worst = rows
        .iter()
        .map(|r| {
            r.record
                .m1
                .abs()
                .max(r.record.m2.abs())
                .max(r.record.max_inner_sum)
        })
        .fold(0.0, f64::max);
    let table = Table {
        header: vec!["family", "params", "m1", "m2", "max_inner_sum", "vanishes"],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.family.to_string(),
                    r.params
                        .iter()
                        .map(|&p| num(p))
                        .collect::<Vec<_>>()
                        .join(" "),
                    num(r.record.m1),
                    num(r.record.m2),
                    num(r.record.max_inner_sum),
                    r.record.vanishes.to_string(),
                ]
            })
            .collect(),
    };
    let n_targets = rows.len();
    let n_failing = failing.len();
    let outcome = Outcome::ok(json!({
        "tol": tol,
        "grid_points": points,
        "n_targets": n_targets,
        "n_non_vanishing": n_failing,
        "non_vanishing_families": failing_families,
        "max_value": worst,
        "finding": if n_failing == 0 {
            "vanishing holds on every target"
        } else {
            "REFUTATION FINDING: the m1/m2/inner-sum vanishing fails on some targets"
        },
        "targets": rows,
    }))
    .with_table(table);
    Ok(if n_failing == 0 {
        outcome
    } else {
        outcome.flag(
            Exit::Refutation,
            format!(
                "refutation finding: {n_failing} of {n_targets} targets do not vanish (families: {})",
                failing_families.join(", ")
            ),
        )
    })
}
