//! Operator flow under entanglement renormalization: ascending local
//! operators, effective Hamiltonians, the scaling superoperator of a
//! scale-invariant network, correlation exponents and block entropies.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::cone::flow::{coarse_wires, mid_wires, Plan, Wire, WireTensor};
use crate::cone::{expect_local, is_ring_contiguous, level_rdm, RdmOptions};
use crate::density::{to_nalgebra, von_neumann_entropy};
use crate::error::{MeraError, Result};
use crate::mera::{Disentangler, Isometry, Mera, MeraLayer};
use crate::operators::traceless_part;
use crate::oracle::{full_state, oracle_rdm};
use crate::tensor::{Tensor, C64, ONE, ZERO};
use crate::tol;

pub use crate::operators::LocalOperator;

fn check_support(support: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|p| p[0] == p[1]) {
        return Err(MeraError::Argument(format!("repeated wire in support {support:?}")));
    }
    if let Some(&w) = sorted.last().filter(|&&w| w >= n) {
        return Err(MeraError::Argument(format!("wire {w} outside a level of {n} wires")));
    }
    Ok(sorted)
}

/// Operator with its support sorted ascending.
fn sorted_operator(op: &LocalOperator, dim: usize) -> Result<(Vec<usize>, Tensor)> {
    let k = op.support.len();
    let total = dim.checked_pow(k as u32).unwrap_or(0);
    if op.matrix.shape() != [total, total] {
        return Err(MeraError::Shape(format!(
            "operator on {k} wires of dimension {dim} must be {total}x{total}, got {:?}",
            op.matrix.shape()
        )));
    }
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by_key(|&i| op.support[i]);
    let t = op.matrix.clone().reshape(vec![dim; 2 * k])?;
    let order: Vec<usize> = idx.iter().copied().chain(idx.iter().map(|i| i + k)).collect();
    let t = crate::tensor::permute_axes(&t, &order)?;
    Ok((idx.iter().map(|&i| op.support[i]).collect(), t))
}

fn ascend_in_layer(layer: &MeraLayer, level: usize, support: &[usize], t: Tensor) -> Result<LocalOperator> {
    let n = layer.n_wires_in();
    let coarse = coarse_wires(&mid_wires(support, n));
    let plan = Plan::descend(n, &coarse, support)?;
    let dims = vec![layer.chi_in(); support.len()];
    let x = WireTensor::new(support.iter().map(|&w| Wire::Fine(w)).collect(), dims, t);
    let y = plan.run_up(layer, x)?;
    let support: Vec<usize> = y
        .wires
        .iter()
        .map(|w| match *w {
            Wire::Coarse(c) => Ok(c),
            Wire::Fine(_) => Err(MeraError::Structure("fine wire left after ascent".into())),
        })
        .collect::<Result<_>>()?;
    let d: usize = y.dims.iter().product();
    LocalOperator::new(level + 1, support, y.tensor.reshape(vec![d, d])?)
}

/// Ascends `op` through the layer above its level. The result lives on the
/// next slice of the operator's causal cone, wires sorted ascending.
pub fn ascend_operator(m: &Mera, op: &LocalOperator) -> Result<LocalOperator> {
    if op.level >= m.n_layers() {
        return Err(MeraError::Argument(format!(
            "operator at level {} cannot ascend above the top level {}",
            op.level,
            m.n_layers()
        )));
    }
    let n = m.wires_at(op.level);
    check_support(&op.support, n)?;
    let (support, t) = sorted_operator(op, m.chi_at(op.level))?;
    ascend_in_layer(m.layer(op.level), op.level, &support, t)
}

/// Local terms of an effective Hamiltonian at one level.
#[derive(Clone, Debug)]
pub struct HamiltonianTerms {
    pub level: usize,
    pub terms: Vec<LocalOperator>,
}

impl HamiltonianTerms {
    pub fn new(level: usize, terms: Vec<LocalOperator>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if t.level != level {
                return Err(MeraError::Argument(format!(
                    "term {i} is at level {}, expected {level}",
                    t.level
                )));
            }
            let defect = t.hermiticity_defect();
            if defect > tol::HERMITIAN {
                return Err(MeraError::Validation(format!(
                    "term {i} on {:?} is not Hermitian (defect {defect:.3e})",
                    t.support
                )));
            }
        }
        Ok(HamiltonianTerms { level, terms })
    }

    /// `Σ_i tr(ρ_i h_i)` from cone density matrices at this level.
    pub fn expectation(&self, m: &Mera) -> Result<f64> {
        self.term_expectations(m).map(|v| v.iter().sum())
    }

    pub fn term_expectations(&self, m: &Mera) -> Result<Vec<f64>> {
        self.terms
            .par_iter()
            .map(|t| expect_local(m, t).map(|z| z.re))
            .collect()
    }

    pub fn max_support(&self) -> usize {
        self.terms.iter().map(|t| t.support.len()).max().unwrap_or(0)
    }
}

/// `H_0, H_1, ..., H_L`: every term ascended one level at a time, with terms
/// that land on the same support summed.
pub fn effective_hamiltonians(m: &Mera, h0: &HamiltonianTerms) -> Result<Vec<HamiltonianTerms>> {
    let h0 = HamiltonianTerms::new(h0.level, h0.terms.clone())?;
    if h0.level > m.n_layers() {
        return Err(MeraError::Argument(format!("level {} above the top", h0.level)));
    }
    let mut out = vec![h0];
    for level in out[0].level..m.n_layers() {
        let current = out.last().expect("nonempty");
        let ascended = current
            .terms
            .par_iter()
            .map(|t| ascend_operator(m, t))
            .collect::<Result<Vec<_>>>()?;
        let mut merged: BTreeMap<Vec<usize>, Tensor> = BTreeMap::new();
        for op in ascended {
            match merged.get_mut(&op.support) {
                Some(acc) => acc.add_assign(&op.matrix),
                None => {
                    merged.insert(op.support, op.matrix);
                }
            }
        }
        let terms = merged
            .into_iter()
            .map(|(support, matrix)| LocalOperator::new(level + 1, support, matrix))
            .collect::<Result<Vec<_>>>()?;
        out.push(HamiltonianTerms::new(level + 1, terms)?);
    }
    Ok(out)
}

/// Linear map on operators of a two-wire window `{2j+1, 2j+2}` (the pair
/// covered by one disentangler). One layer maps such a window onto the
/// coarse pair `{j, j+1}`, which is again a window of the same kind when
/// `j` is odd, so the map can be iterated. Matrix-unit basis: index
/// `a·χ² + b` stands for `|a><b|`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingSuperoperator {
    pub chi: usize,
    #[serde(skip)]
    pub matrix: Tensor,
    /// Sorted by decreasing magnitude.
    pub eigenvalues: Vec<C64>,
}

impl ScalingSuperoperator {
    /// Dimension of the window operator space (`χ⁴`).
    pub fn dim(&self) -> usize {
        self.matrix.shape()[0]
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.first().map(|z| z.norm()).unwrap_or(0.0)
    }

    /// Largest-magnitude eigenvalue after removing the one closest to 1.
    pub fn subleading(&self) -> Option<C64> {
        let unit = self
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - ONE).norm().total_cmp(&(b.1 - ONE).norm()))?
            .0;
        self.eigenvalues
            .iter()
            .enumerate()
            .find(|&(i, _)| i != unit)
            .map(|(_, &z)| z)
    }

    /// Eigen-operator of `lambda` on the window: the right singular vector of
    /// `S - λ` with the smallest singular value, normalized to unit
    /// Frobenius norm and fixed in phase.
    pub fn eigenoperator(&self, lambda: C64) -> Result<Tensor> {
        let n = self.dim();
        let mut a = to_nalgebra(&self.matrix);
        for i in 0..n {
            a[(i, i)] -= lambda;
        }
        let svd = a.svd(false, true);
        let v_t = svd.v_t.ok_or_else(|| MeraError::Structure("singular value decomposition failed".into()))?;
        let (k, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .expect("nonempty");
        let mut v: Vec<C64> = v_t.row(k).iter().map(|z| z.conj()).collect();
        if let Some(p) = v.iter().copied().find(|z| z.norm() > 1e-12) {
            let phase = p.conj() / p.norm();
            v.iter_mut().for_each(|z| *z *= phase);
        }
        let d = self.chi * self.chi;
        Tensor::new(vec![d, d], v)
    }

    /// Eigen-operator of the subleading eigenvalue: the slowest-decaying
    /// scaling operator on a window.
    pub fn leading_scaling_operator(&self) -> Result<(C64, Tensor)> {
        let lambda = self
            .subleading()
            .ok_or_else(|| MeraError::Structure("superoperator has a single eigenvalue".into()))?;
        Ok((lambda, self.eigenoperator(lambda)?))
    }

    /// Applies the map to an operator on the window.
    pub fn apply(&self, op: &Tensor) -> Result<Tensor> {
        let d = self.chi * self.chi;
        if op.shape() != [d, d] {
            return Err(MeraError::Shape(format!("window operator must be {d}x{d}")));
        }
        let v = op.clone().reshape(vec![d * d, 1])?;
        self.matrix.matmul(&v)?.reshape(vec![d, d])
    }
}

fn window_layer(u: &Disentangler, w: &Isometry) -> Result<MeraLayer> {
    MeraLayer::new(4, vec![Arc::new(u.clone())], vec![Arc::new(w.clone())], None)
}

/// Materializes the scaling superoperator of a shared `(u, w)` pair.
pub fn scaling_superoperator(u: &Disentangler, w: &Isometry) -> Result<ScalingSuperoperator> {
    let chi = u.chi();
    if w.chi_fine() != chi || w.chi_coarse() != chi {
        return Err(MeraError::Structure(format!(
            "scaling needs uniform dimension: u has {chi}, w maps {} -> {}",
            w.chi_fine(),
            w.chi_coarse()
        )));
    }
    let layer = window_layer(u, w)?;
    let plan = Plan::descend(4, &[0, 1], &[1, 2])?;
    let d = chi * chi;
    let big = d * d;
    let mut s = Tensor::zeros(vec![big, big]);
    for col in 0..big {
        let mut e = Tensor::zeros(vec![chi; 4]);
        e.data_mut()[col] = ONE;
        let x = WireTensor::new(vec![Wire::Fine(1), Wire::Fine(2)], vec![chi, chi], e);
        let y = plan.run_up(&layer, x)?;
        debug_assert_eq!(y.wires, vec![Wire::Coarse(0), Wire::Coarse(1)]);
        for (row, &z) in y.tensor.data().iter().enumerate() {
            s.set(&[row, col], z);
        }
    }
    let eigenvalues = general_eigenvalues(&s);
    Ok(ScalingSuperoperator {
        chi,
        matrix: s,
        eigenvalues,
    })
}

/// Scaling superoperator of a scale-invariant network.
pub fn scaling_superoperator_of(m: &Mera) -> Result<ScalingSuperoperator> {
    if !m.is_scale_invariant() {
        return Err(MeraError::Argument("network is not scale invariant".into()));
    }
    let layer = m.layer(0);
    scaling_superoperator(layer.disentangler(0), layer.isometry(0))
}

/// Eigenvalues of a general complex matrix, by decreasing magnitude.
pub(crate) fn general_eigenvalues(m: &Tensor) -> Vec<C64> {
    let a: DMatrix<C64> = to_nalgebra(m);
    let mut ev: Vec<C64> = a
        .schur()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .unwrap_or_default();
    ev.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    ev
}

#[derive(Clone, Copy, Debug)]
pub struct CorrelationOptions {
    /// Subtract `<A><B>` before fitting.
    pub connected: bool,
    /// Replace the operators by their traceless parts.
    pub project_traceless: bool,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        CorrelationOptions {
            connected: true,
            project_traceless: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationExponent {
    pub distances: Vec<usize>,
    /// `C(0, r)` per distance (connected if requested).
    pub correlators: Vec<C64>,
    /// Least-squares exponent from `log2|C|` vs `log2 r`.
    pub q_fit: f64,
    pub r_squared: f64,
    /// Exponent from the subleading eigenvalue: `-log2 z` with `z = |λ₂|²`.
    pub q_eig: f64,
    pub lambda2: C64,
    /// Fit quality below 0.95.
    pub flagged: bool,
}

/// Least-squares line; returns `(intercept, slope, r²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (intercept, slope, r2)
}

/// Sites an operator is placed on for a two-point function at distance `r`:
/// one-site operators sit on sites `0` and `r`, window operators on the
/// disentangler pairs `(N-1, 0)` and `(r-1, r)`.
fn placement(n: usize, window: bool, r: usize) -> (Vec<usize>, Vec<usize>) {
    if window {
        (vec![n - 1, 0], vec![r - 1, r])
    } else {
        (vec![0], vec![r])
    }
}

fn is_window(m: &Mera, a: &Tensor, b: &Tensor) -> Result<bool> {
    let d = m.site_dim();
    let kind = |t: &Tensor| match t.shape() {
        [x, y] if *x == d && *y == d => Ok(false),
        [x, y] if *x == d * d && *y == d * d => Ok(true),
        s => Err(MeraError::Shape(format!(
            "two-point operators must be {d}x{d} or {0}x{0}, got {s:?}",
            d * d
        ))),
    };
    let (ka, kb) = (kind(a)?, kind(b)?);
    if ka != kb {
        return Err(MeraError::Shape("both operators must act on the same number of sites".into()));
    }
    Ok(ka)
}

/// Two-point function at distance `r` (connected if requested) from cone
/// density matrices. Operators are either one-site or two-site windows (see
/// [`ScalingSuperoperator`]).
pub fn two_point(m: &Mera, a: &Tensor, b: &Tensor, r: usize, connected: bool) -> Result<C64> {
    let window = is_window(m, a, b)?;
    let n = m.n_sites();
    if r == 0 || r + usize::from(window) > n / 2 {
        return Err(MeraError::Argument(format!("distance {r} out of range for {n} sites")));
    }
    if window && r < 2 {
        return Err(MeraError::Argument("window operators need a distance of at least 2".into()));
    }
    let (sa, sb) = placement(n, window, r);
    let opts = RdmOptions {
        allow_disjoint: true,
        ..RdmOptions::default()
    };
    let sites: Vec<usize> = sa.iter().chain(&sb).copied().collect();
    let ab = level_rdm(m, 0, &sites, opts)?.expectation(&a.kron(b)?)?;
    if !connected {
        return Ok(ab);
    }
    let ea = level_rdm(m, 0, &sa, opts)?.expectation(a)?;
    let eb = level_rdm(m, 0, &sb, opts)?.expectation(b)?;
    Ok(ab - ea * eb)
}

/// Power-law exponent of the two-point function over `distances` (powers
/// of two up to `N/4`) together with the exponent predicted by the scaling
/// superoperator.
pub fn correlation_exponent(
    m: &Mera,
    a: &Tensor,
    b: &Tensor,
    distances: &[usize],
    opts: CorrelationOptions,
) -> Result<CorrelationExponent> {
    if !m.is_scale_invariant() {
        return Err(MeraError::Argument("correlation exponents need a scale-invariant network".into()));
    }
    if distances.len() < 2 {
        return Err(MeraError::Argument("at least two distances are needed for a fit".into()));
    }
    for &r in distances {
        if !r.is_power_of_two() || r > m.n_sites() / 4 {
            return Err(MeraError::Argument(format!(
                "distance {r} must be a power of two no larger than N/4 = {}",
                m.n_sites() / 4
            )));
        }
    }
    let (a, b) = if opts.project_traceless {
        (traceless_part(a)?, traceless_part(b)?)
    } else {
        (a.clone(), b.clone())
    };
    let correlators = distances
        .par_iter()
        .map(|&r| two_point(m, &a, &b, r, opts.connected))
        .collect::<Result<Vec<_>>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = distances
        .iter()
        .zip(&correlators)
        .filter(|(_, c)| c.norm() >= 1e-14)
        .map(|(&r, c)| ((r as f64).log2(), c.norm().log2()))
        .unzip();
    if xs.len() < 2 {
        return Err(MeraError::DegenerateSignal(format!(
            "{} of {} correlators are above 1e-14",
            xs.len(),
            distances.len()
        )));
    }
    let (_, slope, r_squared) = linear_fit(&xs, &ys);
    let s = scaling_superoperator_of(m)?;
    let lambda2 = s.subleading().unwrap_or(ZERO);
    Ok(CorrelationExponent {
        distances: distances.to_vec(),
        correlators,
        q_fit: -slope,
        r_squared,
        q_eig: -(lambda2.norm_sqr()).log2(),
        lambda2,
        flagged: r_squared < 0.95,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMethod {
    /// Causal-cone density matrix (blocks of at most four sites by default).
    Cone,
    /// Full state vector (small lattices only).
    Oracle,
}

impl EntropyMethod {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "cone" => Some(EntropyMethod::Cone),
            "oracle" => Some(EntropyMethod::Oracle),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockEntropy {
    pub length: usize,
    pub entropy_bits: f64,
    pub bound_bits: f64,
    /// Number of coarse-graining steps after which the block has shrunk to
    /// a few wires.
    pub tau_bar: usize,
}

/// `log2(χ)·(4 + 2·τ̄)` with `τ̄ = ⌈log2 l⌉ + 1`.
pub fn entropy_bound(chi_max: usize, length: usize) -> (f64, usize) {
    let ceil_log = usize::BITS as usize - (length.max(1) - 1).leading_zeros() as usize;
    let tau_bar = ceil_log + 1;
    ((chi_max as f64).log2() * (4.0 + 2.0 * tau_bar as f64), tau_bar)
}

/// Von Neumann entropy of a contiguous block with its logarithmic bound.
pub fn block_entropy(m: &Mera, block: &[usize], method: EntropyMethod) -> Result<BlockEntropy> {
    let sorted = check_support(block, m.n_sites())?;
    if sorted.is_empty() {
        return Err(MeraError::Argument("empty block".into()));
    }
    if !is_ring_contiguous(&sorted, m.n_sites()) {
        return Err(MeraError::Argument(format!("block {block:?} is not contiguous")));
    }
    let rho = match method {
        EntropyMethod::Cone => level_rdm(m, 0, &sorted, RdmOptions::default())?,
        EntropyMethod::Oracle => oracle_rdm(&full_state(m, None)?, &sorted)?,
    };
    let entropy_bits = von_neumann_entropy(&rho)?;
    let (bound_bits, tau_bar) = entropy_bound(m.chi_max(), sorted.len());
    Ok(BlockEntropy {
        length: sorted.len(),
        entropy_bits,
        bound_bits,
        tau_bar,
    })
}
