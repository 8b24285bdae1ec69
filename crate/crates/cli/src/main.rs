//! `mubs`: reproducible experiments around Delsarte-type bounds for mutually
//! unbiased bases.
//!
//! Exit codes: 0 success, 1 invariant violation, 2 usage error or unknown witness,
//! 3 non-positive Haar mean (the Delsarte hypothesis fails), 4 conjecture
//! refutation finding.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mubs_core::linalg::Tolerance;
use mubs_core::pdcert::DEFAULT_SCAN_M;
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::*;
use crate::output::{emit, render, Failure, Format, Outcome};

#[derive(Debug, Parser)]
#[command(
    name = "mubs",
    version,
    about = "Delsarte bounds for MUBs, Haar integrals and the dimension-6 conjecture lab"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct GlobalArgs {
    /// RNG seed; every sampled quantity is a pure function of it.
    #[arg(long, global = true, env = "MUBS_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Shorthand for `--format json`.
    #[arg(long, global = true)]
    #[serde(skip)]
    json: bool,
    /// Write the document here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1e-10)]
    unitary_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    hadamard_tol: f64,
    /// Also the PSD threshold for Gram matrices.
    #[arg(long, global = true, default_value_t = 1e-8)]
    eig_tol: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo Haar integral of a witness.
    Integrate(IntegrateArgs),
    /// Delsarte bound `w(I) / ∫w`.
    Bound(BoundArgs),
    /// Gram matrix of a witness at one sampled tuple or at a MUB system.
    Gram(GramArgs),
    /// Minimum Gram eigenvalues over many sampled tuples.
    PdScan(PdScanArgs),
    /// Positive definiteness scan of `h + eps·m` in dimension 6.
    EpsScan(EpsScanArgs),
    /// Complete MUB systems.
    #[command(subcommand)]
    Mub(MubCommand),
    /// Both sides of the Delsarte sandwich for a MUB system.
    Audit(AuditArgs),
    /// 6x6 complex Hadamard families.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Vanishing of m1, m2 and the inner sums on 6x6 Hadamards.
    #[command(subcommand)]
    Conj6(Conj6Command),
}

#[derive(Debug, Args, Serialize)]
struct IntegrateArgs {
    /// h0, h, h_beta:<b>, m1, m2, m:<kind>, h_plus_eps_m:<kind>:<eps>
    #[arg(long)]
    witness: String,
    #[arg(long, default_value_t = 6)]
    dim: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = mubs_core::haar::DEFAULT_CHUNK_SIZE)]
    chunk_size: usize,
}

#[derive(Debug, Args, Serialize)]
struct BoundArgs {
    #[arg(long)]
    witness: String,
    #[arg(long, default_value_t = 6)]
    dim: usize,
    /// Estimate the Haar mean by Monte Carlo and report an interval.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = mubs_core::haar::DEFAULT_CHUNK_SIZE)]
    chunk_size: usize,
}

#[derive(Debug, Args, Serialize)]
struct GramArgs {
    #[arg(long)]
    witness: String,
    #[arg(long, default_value_t = 6)]
    dim: usize,
    /// Tuple size.
    #[arg(long, default_value_t = DEFAULT_SCAN_M)]
    m: usize,
    /// Which sampled tuple (indices `trial·m .. trial·m + m`).
    #[arg(long, default_value_t = 0)]
    trial: usize,
    /// Also test `G - alpha0·J`.
    #[arg(long)]
    alpha0: Option<f64>,
    /// Use the bases of a MUB system file instead of sampling.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Cross-check an h0 Gram matrix against the projector construction.
    #[arg(long)]
    projector: bool,
}

#[derive(Debug, Args, Serialize)]
struct PdScanArgs {
    #[arg(long)]
    witness: String,
    #[arg(long, default_value_t = 6)]
    dim: usize,
    #[arg(long, default_value_t = DEFAULT_SCAN_M)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long)]
    alpha0: Option<f64>,
    /// Counterexample search restarts (0 disables the search).
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[arg(long, default_value_t = 200)]
    steps: usize,
}

#[derive(Debug, Args, Serialize)]
struct EpsScanArgs {
    /// sum_sq, sq_sum or prod_sq
    #[arg(long)]
    kind: String,
    /// `start:stop:count` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "0:0.1:11")]
    grid: String,
    #[arg(long, default_value_t = DEFAULT_SCAN_M)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Counterexample search restarts per eps (0 disables the search).
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    /// Haar samples for the mean of m in the conditional bounds.
    #[arg(long, default_value_t = 20_000)]
    mean_samples: usize,
}

#[derive(Debug, Subcommand)]
enum MubCommand {
    /// Construct a complete system (d = 2, odd primes, odd prime powers up to 49).
    Gen(MubGenArgs),
    /// Check pairwise unbiasedness of a system file.
    Verify(InputArgs),
}

#[derive(Debug, Args, Serialize)]
struct MubGenArgs {
    #[arg(long)]
    dim: usize,
}

#[derive(Debug, Args, Serialize)]
struct InputArgs {
    /// A `mub gen` document or a bare system object.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct AuditArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "h")]
    witness: String,
}

#[derive(Debug, Subcommand)]
enum CatalogCommand {
    List,
    Get(CatalogGetArgs),
}

#[derive(Debug, Args, Serialize)]
struct CatalogGetArgs {
    #[arg(long)]
    family: String,
    /// Comma-separated phases in radians.
    #[arg(long)]
    params: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Conj6Command {
    Check(Conj6CheckArgs),
}

#[derive(Debug, Args, Serialize)]
struct Conj6CheckArgs {
    /// A family name or `all`.
    #[arg(long, default_value = "all")]
    family: String,
    /// Points per parameter over [0, 2π).
    #[arg(long, default_value_t = 11)]
    grid: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

fn tolerance(g: &GlobalArgs) -> Result<Tolerance, Failure> {
    Tolerance::new(g.unitary_tol, g.hadamard_tol, g.eig_tol)
        .map_err(|e| Failure::usage(e.to_string()))
}

fn run(cli: &Cli) -> Result<(String, Value, Outcome), Failure> {
    let g = &cli.global;
    let tol = tolerance(g)?;
    let seed = g.seed;
    let (name, args, outcome): (&str, Value, Outcome) = match &cli.command {
        Command::Integrate(a) => (
            "integrate",
            json!(a),
            integrate_cmd(&a.witness, a.dim, a.samples, seed, a.chunk_size)?,
        ),
        Command::Bound(a) => (
            "bound",
            json!(a),
            bound_cmd(&a.witness, a.dim, a.samples, seed, a.chunk_size)?,
        ),
        Command::Gram(a) => (
            "gram",
            json!(a),
            gram_cmd(&GramOptions {
                spec: &a.witness,
                dim: a.dim,
                m: a.m,
                trial: a.trial,
                alpha0: a.alpha0,
                input: a.input.as_deref(),
                projector: a.projector,
                threshold: tol.eig_tol,
                seed,
            })?,
        ),
        Command::PdScan(a) => (
            "pd-scan",
            json!(a),
            pd_scan_cmd(&PdScanOptions {
                spec: &a.witness,
                dim: a.dim,
                m: a.m,
                trials: a.trials,
                alpha0: a.alpha0,
                restarts: a.restarts,
                steps: a.steps,
                threshold: tol.eig_tol,
                seed,
            })?,
        ),
        Command::EpsScan(a) => (
            "eps-scan",
            json!(a),
            eps_scan_cmd(&EpsScanOptions {
                kind: &a.kind,
                grid: &a.grid,
                m: a.m,
                trials: a.trials,
                restarts: a.restarts,
                steps: a.steps,
                mean_samples: a.mean_samples,
                seed,
            })?,
        ),
        Command::Mub(MubCommand::Gen(a)) => ("mub gen", json!(a), mub_gen_cmd(a.dim, &tol)?),
        Command::Mub(MubCommand::Verify(a)) => {
            ("mub verify", json!(a), mub_verify_cmd(&a.input, &tol)?)
        }
        Command::Audit(a) => ("audit", json!(a), audit_cmd(&a.input, &a.witness)?),
        Command::Catalog(CatalogCommand::List) => ("catalog list", json!({}), catalog_list_cmd()),
        Command::Catalog(CatalogCommand::Get(a)) => {
            let params = parse_params(a.params.as_deref())?;
            (
                "catalog get",
                json!(a),
                catalog_get_cmd(&a.family, &params, &tol)?,
            )
        }
        Command::Conj6(Conj6Command::Check(a)) => (
            "conj6 check",
            json!(a),
            conj6_check_cmd(&a.family, a.grid, a.tol)?,
        ),
    };
    let config = json!({ "global": g, "args": args });
    Ok((name.to_string(), config, outcome))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = if cli.global.json {
        Format::Json
    } else {
        cli.global.format
    };
    let result = run(&cli).and_then(|(name, config, outcome)| {
        let text = render(&name, cli.global.seed, &config, &outcome, format)?;
        emit(&text, cli.global.out.as_deref())?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            if let Some(note) = &outcome.note {
                eprintln!("mubs: {note}");
            }
            outcome.exit.into()
        }
        Err(f) => {
            eprintln!("mubs: error: {}", f.message);
            f.exit.into()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::Exit;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(Exit::Success as u8, 0);
        assert_eq!(Exit::Violation as u8, 1);
        assert_eq!(Exit::Usage as u8, 2);
        assert_eq!(Exit::Hypothesis as u8, 3);
        assert_eq!(Exit::Refutation as u8, 4);
    }
}
