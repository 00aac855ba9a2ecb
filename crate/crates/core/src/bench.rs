//! Wall-clock sweeps of the one-site density matrix over lattice sizes.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cone::{cone_from, descend_step, rdm, top_slice};
use crate::error::{MeraError, Result};
use crate::mera::{build_random, BondDims, Mera};
use crate::renorm::linear_fit;

#[derive(Clone, Copy, Debug)]
pub struct BenchOptions {
    pub chi: usize,
    pub seed: u64,
    /// Build mode of the benchmarked networks.
    pub mode: &'static str,
    /// Calls per timed batch.
    pub repeats: usize,
    /// Batches per size; the fastest batch is reported.
    pub batches: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            chi: 2,
            seed: 0,
            mode: "generic",
            repeats: 20,
            batches: 7,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchPoint {
    pub n_sites: usize,
    pub log2_n: usize,
    /// Seconds per one-site density matrix.
    pub seconds: f64,
    /// Seconds per descending step, one entry per layer from the top.
    pub layer_seconds: Vec<f64>,
    pub mean_layer_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AffineFit {
    /// `t = a + b·log2 N`.
    pub a: f64,
    pub b: f64,
    /// `|t - fit| / fit` per point.
    pub relative_residuals: Vec<f64>,
    pub max_relative_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub chi: usize,
    pub mode: String,
    pub points: Vec<BenchPoint>,
    pub fit: AffineFit,
    /// Largest over smallest mean per-layer time across sizes.
    pub layer_time_ratio: f64,
}

/// Fastest per-call time over `batches` batches of `repeats` calls.
fn time_min<T>(repeats: usize, batches: usize, mut f: impl FnMut() -> Result<T>) -> Result<f64> {
    let mut best = Duration::MAX;
    for _ in 0..batches.max(1) {
        let start = Instant::now();
        for _ in 0..repeats.max(1) {
            std::hint::black_box(f()?);
        }
        best = best.min(start.elapsed());
    }
    Ok(best.as_secs_f64() / repeats.max(1) as f64)
}

fn layer_times(m: &Mera, site: usize, opts: &BenchOptions) -> Result<Vec<f64>> {
    let cone = cone_from(m.n_sites(), 0, &[site])?;
    let mut slice = top_slice(m, cone.top_wires())?;
    let mut out = Vec::with_capacity(cone.levels.len());
    for lv in cone.levels.iter().rev() {
        let layer = m.layer(lv.layer);
        out.push(time_min(opts.repeats, opts.batches, || descend_step(&slice, layer, &lv.fine))?);
        slice = descend_step(&slice, layer, &lv.fine)?;
    }
    Ok(out)
}

/// Times the one-site density matrix at the middle site for each size.
pub fn bench_rdm(sizes: &[usize], opts: &BenchOptions) -> Result<BenchReport> {
    if sizes.len() < 2 {
        return Err(MeraError::Argument("bench needs at least two sizes".into()));
    }
    let mut points = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let m = build_random(n, BondDims::Uniform(opts.chi), opts.seed, opts.mode)?;
        let site = n / 2 + 1;
        rdm(&m, &[site])?;
        let seconds = time_min(opts.repeats, opts.batches, || rdm(&m, &[site]))?;
        let layer_seconds = layer_times(&m, site, opts)?;
        let mean_layer_seconds = layer_seconds.iter().sum::<f64>() / layer_seconds.len() as f64;
        points.push(BenchPoint {
            n_sites: n,
            log2_n: n.trailing_zeros() as usize,
            seconds,
            layer_seconds,
            mean_layer_seconds,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.log2_n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.seconds).collect();
    let (a, b, _) = linear_fit(&xs, &ys);
    let relative_residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = a + b * x;
            (y - fit).abs() / fit.abs()
        })
        .collect();
    let max_relative_residual = relative_residuals.iter().copied().fold(0.0, f64::max);
    let layer: Vec<f64> = points.iter().map(|p| p.mean_layer_seconds).collect();
    let layer_time_ratio = layer.iter().copied().fold(0.0, f64::max) / layer.iter().copied().fold(f64::MAX, f64::min);
    Ok(BenchReport {
        chi: opts.chi,
        mode: opts.mode.to_string(),
        points,
        fit: AffineFit {
            a,
            b,
            relative_residuals,
            max_relative_residual,
        },
        layer_time_ratio,
    })
}
