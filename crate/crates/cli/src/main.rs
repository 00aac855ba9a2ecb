mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Build, measure and cross-check MERA states on periodic 1D lattices.
///
/// Every command writes a JSON report to stdout (or `--out`) and a short
/// summary to stderr. Exit status: 0 success, 1 failed check, 2 usage or
/// input error. `MERA_KIT_THREADS` caps the worker threads.
#[derive(Parser, Debug)]
#[command(name = "mera-kit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a random network and write it to a file.
    Build(BuildArgs),
    /// Check the tensor constraints of a stored network.
    Validate(ValidateArgs),
    /// Reduced density matrix of a set of sites.
    Rdm(RdmArgs),
    /// Expectation value of a product of named one-site operators.
    Expect(ExpectArgs),
    /// Two-point correlators between one site and a list of others.
    Correlate(CorrelateArgs),
    /// Block entropies and their logarithmic bound.
    Entropy(EntropyArgs),
    /// Effective Hamiltonians at every coarse-graining level.
    Hflow(HflowArgs),
    /// Scaling superoperator spectrum and correlation exponent.
    Scaling(ScalingArgs),
    /// Cross-check the cone contraction against the state-vector oracle.
    Check(CheckArgs),
    /// Time the one-site density matrix over lattice sizes.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Serialize)]
struct BuildArgs {
    /// Number of lattice sites, a power of two >= 4.
    #[arg(long)]
    sites: usize,
    /// Bond dimension, or one output dimension per layer (fine to coarse).
    #[arg(long, value_delimiter = ',', default_value = "2")]
    chi: Vec<usize>,
    /// Site dimension when `--chi` lists per-layer values.
    #[arg(long)]
    site_dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// generic, translation_invariant, scale_invariant or product.
    #[arg(long, default_value = "generic")]
    mode: String,
    /// Keep the unitary parents of the isometries and the top tensor.
    #[arg(long)]
    parents: bool,
    /// Network file to write.
    #[arg(long)]
    out: PathBuf,
    /// Where to write the report (stdout by default).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Network file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Report file (stdout by default).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ValidateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct RdmArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Sites, in the subsystem order of the result.
    #[arg(long, value_delimiter = ',', required = true)]
    sites: Vec<usize>,
    /// cone or oracle.
    #[arg(long, default_value = "cone")]
    backend: String,
    /// Lift the cone size guards (wide or disjoint site sets).
    #[arg(long)]
    unguarded: bool,
}

#[derive(Args, Debug, Serialize)]
struct ExpectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    sites: Vec<usize>,
    /// One operator name per site (identity, pauli-x, pauli-y, pauli-z,
    /// projector-0); a single name is used on every site.
    #[arg(long, value_delimiter = ',', required = true)]
    op: Vec<String>,
    #[arg(long, default_value = "cone")]
    backend: String,
    #[arg(long)]
    unguarded: bool,
}

#[derive(Args, Debug, Serialize)]
struct CorrelateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, default_value = "pauli-z")]
    a: String,
    #[arg(long, default_value = "pauli-z")]
    b: String,
    #[arg(long, default_value_t = 0)]
    site: usize,
    /// Distances from `--site`.
    #[arg(long, value_delimiter = ',', required = true)]
    distances: Vec<usize>,
    /// Subtract the product of one-point functions.
    #[arg(long)]
    connected: bool,
    #[arg(long, default_value = "cone")]
    backend: String,
}

#[derive(Args, Debug, Serialize)]
struct EntropyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0)]
    start: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    lengths: Vec<usize>,
    /// cone or oracle.
    #[arg(long, default_value = "cone")]
    method: String,
}

#[derive(Args, Debug, Serialize)]
struct HflowArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// ising, heisenberg or random (nearest-neighbour bonds).
    #[arg(long, default_value = "ising")]
    model: String,
    /// Transverse field of the Ising model.
    #[arg(long, default_value_t = 1.0)]
    field: f64,
    /// Seed of the random model.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct ScalingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Named one-site operator, or `scaling` for the leading two-site
    /// scaling operator of the network.
    #[arg(long, default_value = "scaling")]
    op: String,
    /// Powers of two up to a quarter of the lattice.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    distances: Vec<usize>,
    /// Fit the full correlator of the operator as given.
    #[arg(long)]
    raw: bool,
    /// Number of eigenvalues to list.
    #[arg(long, default_value_t = 8)]
    eigenvalues: usize,
}

#[derive(Args, Debug, Serialize)]
struct CheckArgs {
    /// Network file; without it every seed builds its own network.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare against the brute-force state vector.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Lattice size of built networks.
    #[arg(long, default_value_t = 8)]
    sites: usize,
    #[arg(long, default_value_t = 2)]
    chi: usize,
    #[arg(long, default_value = "generic")]
    mode: String,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,256,1024,4096,16384")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    chi: usize,
    #[arg(long, default_value = "generic")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Calls per timed batch.
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    /// Batches per size; the fastest is kept.
    #[arg(long, default_value_t = 7)]
    batches: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("MERA_KIT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("MERA_KIT_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
