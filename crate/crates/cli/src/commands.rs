use std::path::Path;

use mera_kit::bench::{bench_rdm, BenchOptions};
use mera_kit::cone::{rdm, RdmOptions};
use mera_kit::evaluator::{BackendRegistry, ConeBackend, RdmSource};
use mera_kit::mera::{read_mera, write_mera, BondDims, BuildModeRegistry, BuildParams};
use mera_kit::operators::{random_hermitian, traceless_part, LocalOperator, NamedOperator};
use mera_kit::oracle::{full_state, oracle_correlator, oracle_expectation, oracle_rdm};
use mera_kit::renorm::{
    block_entropy, correlation_exponent, effective_hamiltonians, scaling_superoperator_of, CorrelationOptions,
    EntropyMethod, HamiltonianTerms,
};
use mera_kit::{partial_trace, tol, Mera, MeraError, Tensor, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::report::{checked, complex, matrix, RunReport};
use crate::{
    BenchArgs, BuildArgs, CheckArgs, Command, CorrelateArgs, EntropyArgs, ExpectArgs, HflowArgs, RdmArgs,
    ScalingArgs, ValidateArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Mera(#[from] MeraError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, CliError>;

/// Dispatches one subcommand; `Ok(false)` means a check failed.
pub fn run(command: Command) -> Result<bool> {
    let (report, out) = match command {
        Command::Build(a) => (build(&a)?, a.report),
        Command::Validate(a) => (validate(&a)?, a.common.out),
        Command::Rdm(a) => (rdm_cmd(&a)?, a.common.out),
        Command::Expect(a) => (expect(&a)?, a.common.out),
        Command::Correlate(a) => (correlate(&a)?, a.common.out),
        Command::Entropy(a) => (entropy(&a)?, a.common.out),
        Command::Hflow(a) => (hflow(&a)?, a.common.out),
        Command::Scaling(a) => (scaling(&a)?, a.common.out),
        Command::Check(a) => (check(&a)?, a.out),
        Command::Bench(a) => (bench(&a)?, a.out),
    };
    report.emit(out.as_deref())?;
    let verdict = match report.pass {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "done",
    };
    eprintln!("{}: {verdict}", report.command);
    Ok(report.pass.unwrap_or(true))
}

fn load(report: &mut RunReport, path: &Path) -> Result<Mera> {
    Ok(report.timed("load", || read_mera(path))?)
}

fn named(name: &str, d: usize) -> Result<Tensor> {
    let op = NamedOperator::from_name(name).ok_or_else(|| {
        let known: Vec<_> = NamedOperator::ALL.iter().map(|o| o.name()).collect();
        CliError::Usage(format!("unknown operator {name:?}; known: {}", known.join(", ")))
    })?;
    Ok(op.matrix(d)?)
}

fn source<'a>(m: &'a Mera, backend: &str, unguarded: bool) -> Result<Box<dyn RdmSource + 'a>> {
    let mut registry = BackendRegistry::default();
    if unguarded {
        registry.register(Box::new(ConeBackend {
            opts: RdmOptions::unguarded(),
        }));
    }
    Ok(registry.get(backend)?.prepare(m)?)
}

fn network_summary(m: &Mera) -> Value {
    json!({
        "n_sites": m.n_sites(),
        "site_dim": m.site_dim(),
        "n_layers": m.n_layers(),
        "chi": (0..=m.n_layers()).map(|l| m.chi_at(l)).collect::<Vec<_>>(),
        "sharing": m.sharing().name(),
        "params": m.param_count(),
    })
}

fn build(a: &BuildArgs) -> Result<RunReport> {
    let mut report = RunReport::new("build", a);
    let dims = match (a.chi.as_slice(), a.site_dim) {
        ([chi], None) => BondDims::Uniform(*chi),
        (chis, Some(site_dim)) => BondDims::PerLayer {
            site_dim,
            chi_out: chis.to_vec(),
        },
        _ => return Err(CliError::Usage("per-layer --chi needs --site-dim".into())),
    };
    let params = BuildParams::new(a.sites, dims).with_parents(a.parents);
    let m = report.timed("build", || BuildModeRegistry::default().build(&a.mode, &params, a.seed))?;
    report.timed("write", || write_mera(&m, &a.out))?;
    let v = m.validate();
    let (violation, ok) = checked(v.max_violation, tol::CONSTRAINT);
    report.tolerance("constraint", tol::CONSTRAINT);
    report.check(ok);
    report.results = json!({ "file": a.out, "network": network_summary(&m), "max_violation": violation });
    eprintln!(
        "built N={} with {} layers ({}), wrote {}",
        m.n_sites(),
        m.n_layers(),
        a.mode,
        a.out.display()
    );
    Ok(report)
}

fn validate(a: &ValidateArgs) -> Result<RunReport> {
    let mut report = RunReport::new("validate", a);
    report.tolerance("constraint", tol::CONSTRAINT);
    let m = match report.timed("load", || read_mera(&a.common.input)) {
        Ok(m) => m,
        Err(MeraError::Load { path, message }) => {
            eprintln!("rejected at {path}: {message}");
            report.results = json!({ "load_error": { "path": path, "message": message } });
            report.check(false);
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    let v = report.timed("validate", || m.validate());
    eprintln!("{} slots, max violation {:.2e}", v.slots, v.max_violation);
    report.check(v.pass);
    report.results = json!({ "network": network_summary(&m), "validation": v });
    Ok(report)
}

fn density_results(report: &mut RunReport, rho: &mera_kit::DensityMatrix) -> Value {
    report.tolerance("hermitian", tol::HERMITIAN);
    report.tolerance("trace", tol::TRACE);
    report.tolerance("psd", tol::PSD);
    let valid = rho.check();
    report.check(valid.is_ok());
    json!({
        "dims": rho.dims(),
        "matrix": matrix(rho.matrix()),
        "trace": complex(rho.trace()),
        "eigenvalues": rho.eigenvalues(),
        "hermiticity_defect": rho.hermiticity_defect(),
        "valid": valid.as_ref().map(|_| Value::Bool(true)).unwrap_or_else(|e| json!(e.to_string())),
    })
}

fn rdm_cmd(a: &RdmArgs) -> Result<RunReport> {
    let mut report = RunReport::new("rdm", a);
    let m = load(&mut report, &a.common.input)?;
    let src = source(&m, &a.backend, a.unguarded)?;
    let rho = report.timed("compute", || src.rdm(&a.sites))?;
    eprintln!("rdm of sites {:?} via {}: eigenvalues {:?}", a.sites, a.backend, rho.eigenvalues());
    report.results = json!({ "sites": a.sites, "rdm": density_results(&mut report, &rho) });
    Ok(report)
}

fn expect(a: &ExpectArgs) -> Result<RunReport> {
    let mut report = RunReport::new("expect", a);
    let names: Vec<&String> = match a.op.len() {
        1 => a.sites.iter().map(|_| &a.op[0]).collect(),
        n if n == a.sites.len() => a.op.iter().collect(),
        n => {
            return Err(CliError::Usage(format!(
                "{n} operators for {} sites",
                a.sites.len()
            )))
        }
    };
    let m = load(&mut report, &a.common.input)?;
    let mut op = Tensor::identity(1);
    for name in names {
        op = op.kron(&named(name, m.site_dim())?)?;
    }
    let src = source(&m, &a.backend, a.unguarded)?;
    let local = LocalOperator::on_sites(a.sites.clone(), op)?;
    let value = report.timed("compute", || src.expectation(&local))?;
    eprintln!("<{}> on {:?} = {:.12} {:+.3e}i", a.op.join("*"), a.sites, value.re, value.im);
    report.results = json!({ "sites": a.sites, "value": complex(value) });
    Ok(report)
}

fn correlate(a: &CorrelateArgs) -> Result<RunReport> {
    let mut report = RunReport::new("correlate", a);
    let m = load(&mut report, &a.common.input)?;
    let n = m.n_sites();
    let (op_a, op_b) = (named(&a.a, m.site_dim())?, named(&a.b, m.site_dim())?);
    let src = source(&m, &a.backend, false)?;
    let mut rows = Vec::new();
    for &r in &a.distances {
        if r == 0 || r >= n {
            return Err(CliError::Usage(format!("distance {r} outside 1..{n}")));
        }
        let (s1, s2) = (a.site % n, (a.site + r) % n);
        let value = report.timed("compute", || -> Result<C64> {
            let mut c = src.correlator(&op_a, &op_b, s1, s2)?;
            if a.connected {
                c -= src.rdm(&[s1])?.expectation(&op_a)? * src.rdm(&[s2])?.expectation(&op_b)?;
            }
            Ok(c)
        })?;
        eprintln!("r={r:>5}  C = {:.6e}", value.re);
        rows.push(json!({ "distance": r, "sites": [s1, s2], "value": complex(value) }));
    }
    report.results = json!({ "connected": a.connected, "correlators": rows });
    Ok(report)
}

fn entropy(a: &EntropyArgs) -> Result<RunReport> {
    let mut report = RunReport::new("entropy", a);
    let method = EntropyMethod::from_name(&a.method)
        .ok_or_else(|| CliError::Usage(format!("unknown method {:?}; use cone or oracle", a.method)))?;
    let m = load(&mut report, &a.common.input)?;
    let n = m.n_sites();
    let mut rows = Vec::new();
    for &l in &a.lengths {
        let block: Vec<usize> = (a.start..a.start + l).map(|s| s % n).collect();
        let e = report.timed("compute", || block_entropy(&m, &block, method))?;
        let ok = e.entropy_bits <= e.bound_bits;
        report.check(ok);
        eprintln!("l={l:>3}  S = {:.6} bits  bound {:.3}", e.entropy_bits, e.bound_bits);
        rows.push(json!({ "block": block, "entropy": e, "within_bound": ok }));
    }
    report.results = json!({ "blocks": rows });
    Ok(report)
}

fn model_terms(a: &HflowArgs, m: &Mera) -> Result<Vec<LocalOperator>> {
    let n = m.n_sites();
    let d = m.site_dim();
    let bond = |h: Tensor, s: usize| LocalOperator::on_sites(vec![s, (s + 1) % n], h);
    let pauli = |name| named(name, d);
    let kron = |x: &Tensor, y: &Tensor| x.kron(y);
    let terms = match a.model.as_str() {
        "ising" => {
            let (x, z, id) = (pauli("pauli-x")?, pauli("pauli-z")?, Tensor::identity(d));
            let field = kron(&x, &id)?.add(&kron(&id, &x)?)?.scale(C64::new(-a.field / 2.0, 0.0));
            let h = kron(&z, &z)?.scale(C64::new(-1.0, 0.0)).add(&field)?;
            (0..n).map(|s| bond(h.clone(), s)).collect::<mera_kit::Result<Vec<_>>>()?
        }
        "heisenberg" => {
            let mut h = Tensor::zeros(vec![d * d, d * d]);
            for name in ["pauli-x", "pauli-y", "pauli-z"] {
                let p = pauli(name)?;
                h = h.add(&kron(&p, &p)?)?;
            }
            (0..n).map(|s| bond(h.clone(), s)).collect::<mera_kit::Result<Vec<_>>>()?
        }
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (0..n)
                .map(|s| bond(random_hermitian(d * d, &mut rng), s))
                .collect::<mera_kit::Result<Vec<_>>>()?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown model {other:?}; use ising, heisenberg or random"
            )))
        }
    };
    Ok(terms)
}

fn hflow(a: &HflowArgs) -> Result<RunReport> {
    let mut report = RunReport::new("hflow", a);
    let m = load(&mut report, &a.common.input)?;
    let h0 = HamiltonianTerms::new(0, model_terms(a, &m)?)?;
    let n_terms = h0.terms.len() as f64;
    let flow = report.timed("ascend", || effective_hamiltonians(&m, &h0))?;
    let energies = report.timed("evaluate", || {
        flow.iter().map(|h| h.expectation(&m)).collect::<mera_kit::Result<Vec<_>>>()
    })?;
    let spread = energies.iter().map(|e| (e - energies[0]).abs()).fold(0.0, f64::max) / n_terms;
    let (spread_entry, ok) = checked(spread, 1e-9);
    report.tolerance("energy_per_term", 1e-9);
    report.check(ok);
    let levels: Vec<Value> = flow
        .iter()
        .zip(&energies)
        .map(|(h, e)| {
            eprintln!("level {:>2}: {:>3} terms, support {}, E = {:.12}", h.level, h.terms.len(), h.max_support(), e);
            json!({
                "level": h.level,
                "n_terms": h.terms.len(),
                "max_support": h.max_support(),
                "energy": e,
                "energy_per_site": e / m.n_sites() as f64,
            })
        })
        .collect();
    report.results = json!({ "levels": levels, "energy_spread_per_term": spread_entry });
    Ok(report)
}

fn scaling(a: &ScalingArgs) -> Result<RunReport> {
    let mut report = RunReport::new("scaling", a);
    let m = load(&mut report, &a.common.input)?;
    let s = report.timed("superoperator", || scaling_superoperator_of(&m))?;
    let radius = s.spectral_radius();
    let (radius_entry, radius_ok) = checked(radius - 1.0, 1e-9);
    report.tolerance("spectral_radius_excess", 1e-9);
    report.check(radius_ok);
    let op = if a.op == "scaling" {
        traceless_part(&s.leading_scaling_operator()?.1)?
    } else {
        named(&a.op, m.site_dim())?
    };
    let opts = CorrelationOptions {
        connected: !a.raw,
        project_traceless: !a.raw,
    };
    let fit = match report.timed("correlators", || correlation_exponent(&m, &op, &op, &a.distances, opts)) {
        Ok(c) => {
            let rel = (c.q_fit - c.q_eig).abs() / c.q_eig;
            report.tolerance("relative_exponent_deviation", 0.10);
            report.tolerance("min_r_squared", 0.95);
            let ok = c.flagged || rel <= 0.10;
            report.check(ok);
            eprintln!(
                "q_fit = {:.4}, q_eig = {:.4}, R^2 = {:.4}{}",
                c.q_fit,
                c.q_eig,
                c.r_squared,
                if c.flagged { " (flagged)" } else { "" }
            );
            json!({
                "exponent": c,
                "relative_deviation": { "value": rel, "tolerance": 0.10, "pass": ok },
            })
        }
        Err(MeraError::DegenerateSignal(msg)) => {
            eprintln!("no exponent: {msg}");
            report.check(false);
            json!({ "error": msg })
        }
        Err(e) => return Err(e.into()),
    };
    let eigenvalues: Vec<Value> = s.eigenvalues.iter().take(a.eigenvalues).map(|&z| complex(z)).collect();
    report.results = json!({
        "dim": s.dim(),
        "eigenvalues": eigenvalues,
        "lambda2": s.subleading().map(complex),
        "spectral_radius": radius,
        "spectral_radius_excess": radius_entry,
        "fit": fit,
    });
    Ok(report)
}

/// Deviations found for one seed of `check`.
struct SeedCheck {
    seed: u64,
    n_sites: usize,
    constraint: f64,
    consistency: f64,
    rdm: Option<f64>,
    correlator: Option<f64>,
    energy: Option<f64>,
}

const CHECK_TOL: f64 = 1e-10;
const ENERGY_TOL: f64 = 1e-9;

impl SeedCheck {
    fn pass(&self) -> bool {
        self.constraint <= tol::CONSTRAINT
            && self.consistency <= CHECK_TOL
            && self.rdm.is_none_or(|d| d <= CHECK_TOL)
            && self.correlator.is_none_or(|d| d <= CHECK_TOL)
            && self.energy.is_none_or(|d| d <= ENERGY_TOL)
    }

    fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "n_sites": self.n_sites,
            "max_constraint_violation": self.constraint,
            "max_pair_marginal_deviation": self.consistency,
            "max_rdm_deviation": self.rdm,
            "max_correlator_deviation": self.correlator,
            "energy_deviation_per_term": self.energy,
            "pass": self.pass(),
        })
    }
}

fn check_seed(m: &Mera, seed: u64, oracle: bool) -> mera_kit::Result<SeedCheck> {
    let n = m.n_sites();
    let d = m.site_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut consistency = 0.0f64;
    for s in 0..n {
        let pair = rdm(m, &[s, (s + 1) % n])?;
        pair.check()?;
        consistency = consistency.max(partial_trace(&pair, &[0])?.max_abs_diff(&rdm(m, &[s])?));
    }
    let mut out = SeedCheck {
        seed,
        n_sites: n,
        constraint: m.validate().max_violation,
        consistency,
        rdm: None,
        correlator: None,
        energy: None,
    };
    if !oracle {
        return Ok(out);
    }
    let psi = full_state(m, None)?;
    let mut dev = 0.0f64;
    for s1 in 0..n {
        dev = dev.max(rdm(m, &[s1])?.max_abs_diff(&oracle_rdm(&psi, &[s1])?));
        for s2 in 0..n {
            if s1 != s2 {
                dev = dev.max(rdm(m, &[s1, s2])?.max_abs_diff(&oracle_rdm(&psi, &[s1, s2])?));
            }
        }
    }
    out.rdm = Some(dev);

    let a = traceless_part(&random_hermitian(d, &mut rng))?;
    let b = traceless_part(&random_hermitian(d, &mut rng))?;
    let s1 = rng.random_range(0..n);
    let s2 = (s1 + rng.random_range(1..n)) % n;
    let cone = mera_kit::cone::correlator(m, &a, &b, s1, s2)?;
    out.correlator = Some((cone - oracle_correlator(&psi, &a, &b, s1, s2)?).norm());

    let terms: Vec<LocalOperator> = (0..n)
        .map(|s| LocalOperator::on_sites(vec![s, (s + 1) % n], random_hermitian(d * d, &mut rng)))
        .collect::<mera_kit::Result<_>>()?;
    let exact: f64 = terms
        .iter()
        .map(|t| oracle_expectation(&psi, t).map(|z| z.re))
        .sum::<mera_kit::Result<f64>>()?;
    let flow = effective_hamiltonians(m, &HamiltonianTerms::new(0, terms)?)?;
    let mut energy = 0.0f64;
    for h in &flow {
        energy = energy.max((h.expectation(m)? - exact).abs() / n as f64);
    }
    out.energy = Some(energy);
    Ok(out)
}

fn check(a: &CheckArgs) -> Result<RunReport> {
    let mut report = RunReport::new("check", a);
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let shared = match &a.input {
        Some(path) => Some(load(&mut report, path)?),
        None => None,
    };
    let seeds: Vec<u64> = (0..a.seeds).collect();
    let checks = report.timed("check", || {
        seeds
            .par_iter()
            .map(|&seed| match &shared {
                Some(m) => check_seed(m, seed, a.oracle),
                None => {
                    let m = mera_kit::mera::build_random(a.sites, BondDims::Uniform(a.chi), seed, &a.mode)?;
                    check_seed(&m, seed, a.oracle)
                }
            })
            .collect::<mera_kit::Result<Vec<_>>>()
    })?;
    report.tolerance("constraint", tol::CONSTRAINT);
    report.tolerance("rdm_max_abs", CHECK_TOL);
    report.tolerance("correlator", CHECK_TOL);
    report.tolerance("energy_per_term", ENERGY_TOL);
    let worst = |f: fn(&SeedCheck) -> Option<f64>| checks.iter().filter_map(f).reduce(f64::max);
    for c in &checks {
        report.check(c.pass());
    }
    let max_rdm = worst(|c| c.rdm);
    eprintln!(
        "{} seeds, max rdm deviation {}, {} failing",
        checks.len(),
        max_rdm.map_or("n/a (no oracle)".to_string(), |d| format!("{d:.2e}")),
        checks.iter().filter(|c| !c.pass()).count()
    );
    report.results = json!({
        "oracle": a.oracle,
        "seeds": checks.iter().map(SeedCheck::to_json).collect::<Vec<_>>(),
        "max_constraint_violation": worst(|c| Some(c.constraint)),
        "max_pair_marginal_deviation": worst(|c| Some(c.consistency)),
        "max_rdm_deviation": max_rdm,
        "max_correlator_deviation": worst(|c| c.correlator),
        "max_energy_deviation_per_term": worst(|c| c.energy),
    });
    Ok(report)
}

fn bench(a: &BenchArgs) -> Result<RunReport> {
    let mut report = RunReport::new("bench", a);
    let mode = BuildModeRegistry::default()
        .names()
        .find(|&name| name == a.mode)
        .ok_or_else(|| CliError::Usage(format!("unknown mode {:?}", a.mode)))?;
    let opts = BenchOptions {
        chi: a.chi,
        seed: a.seed,
        mode,
        repeats: a.repeats,
        batches: a.batches,
    };
    let r = report.timed("bench", || bench_rdm(&a.sizes, &opts))?;
    for p in &r.points {
        eprintln!("N={:>7}  t = {:.3e} s  per layer {:.3e} s", p.n_sites, p.seconds, p.mean_layer_seconds);
    }
    eprintln!(
        "t = {:.3e} + {:.3e} log2 N, max residual {:.1}%, layer time ratio {:.2}",
        r.fit.a,
        r.fit.b,
        100.0 * r.fit.max_relative_residual,
        r.layer_time_ratio
    );
    report.results = serde_json::to_value(&r).map_err(std::io::Error::other)?;
    Ok(report)
}
