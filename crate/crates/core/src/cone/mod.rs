//! Causal cones and exact reduced density matrices.
//!
//! The cone of a set of lattice sites is traced bottom-up through the
//! wiring; the density matrices are then pushed top-down, starting from
//! `t t†` on the two top wires and applying one [`descend_step`] per layer.
//! Only the wires inside the cone are ever represented, so memory and time
//! per layer depend on the wire dimension alone.

pub(crate) mod flow;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::density::DensityMatrix;
use crate::error::{MeraError, Result};
use crate::mera::{Mera, MeraLayer};
use crate::operators::LocalOperator;
use crate::tensor::{Tensor, C64};
use flow::{coarse_wires, mid_wires, Plan, Wire, WireTensor};

/// Cone slices of one layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConeLevel {
    pub layer: usize,
    /// Wires entering the layer from below (level `layer`).
    pub fine: Vec<usize>,
    /// Wires between the isometries and the disentanglers.
    pub mid: Vec<usize>,
    /// Wires leaving the layer upward (level `layer + 1`).
    pub coarse: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CausalCone {
    pub n_sites: usize,
    /// Coarse-graining level of the seed wires.
    pub base_level: usize,
    /// One entry per layer from `base_level` up to the top, fine to coarse.
    pub levels: Vec<ConeLevel>,
}

impl CausalCone {
    /// Wire counts of every time slice, bottom to top.
    pub fn widths(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self
            .levels
            .iter()
            .flat_map(|l| [l.fine.len(), l.mid.len()])
            .collect();
        if let Some(last) = self.levels.last() {
            w.push(last.coarse.len());
        }
        w
    }

    pub fn max_width(&self) -> usize {
        self.widths().into_iter().max().unwrap_or(0)
    }

    /// Cone wires on the two top wires.
    pub fn top_wires(&self) -> &[usize] {
        self.levels.last().map(|l| l.coarse.as_slice()).unwrap_or(&[])
    }
}

/// Cone of `wires` at `base_level` of a network over `n_sites` sites. Pure
/// combinatorics.
pub fn cone_from(n_sites: usize, base_level: usize, wires: &[usize]) -> Result<CausalCone> {
    let k = crate::mera::exact_log2(n_sites)
        .filter(|&k| k >= 2)
        .ok_or_else(|| MeraError::Argument(format!("n_sites must be 2^k, k >= 2, got {n_sites}")))?;
    let n_layers = k - 1;
    if base_level > n_layers {
        return Err(MeraError::Argument(format!(
            "level {base_level} above the top level {n_layers}"
        )));
    }
    if wires.is_empty() {
        return Err(MeraError::Argument("empty site set".into()));
    }
    let n = n_sites >> base_level;
    if let Some(&w) = wires.iter().find(|&&w| w >= n) {
        return Err(MeraError::Argument(format!(
            "wire {w} out of range [0, {n}) at level {base_level}"
        )));
    }
    let mut fine: Vec<usize> = wires.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut levels = Vec::with_capacity(n_layers - base_level);
    for layer in base_level..n_layers {
        let n = n_sites >> layer;
        let mid = mid_wires(&fine, n);
        let coarse = coarse_wires(&mid);
        levels.push(ConeLevel {
            layer,
            fine,
            mid,
            coarse: coarse.clone(),
        });
        fine = coarse;
    }
    Ok(CausalCone {
        n_sites,
        base_level,
        levels,
    })
}

/// Cone of a set of lattice sites.
pub fn cone_of(m: &Mera, sites: &[usize]) -> Result<CausalCone> {
    cone_from(m.n_sites(), 0, sites)
}

/// Active wires of a cone at one level together with their density matrix.
#[derive(Clone, Debug)]
pub struct ConeSlice {
    /// Coarse-graining level of the wires (0 = lattice sites).
    pub level: usize,
    /// Sorted wire indices; subsystem `i` of `sigma` is `wires[i]`.
    pub wires: Vec<usize>,
    pub sigma: DensityMatrix,
}

impl ConeSlice {
    fn into_wire_tensor(self, label: fn(usize) -> Wire) -> WireTensor {
        let dims = self.sigma.dims().to_vec();
        let tensor = self.sigma.as_tensor();
        WireTensor::new(self.wires.into_iter().map(label).collect(), dims, tensor)
    }

    fn from_wire_tensor(level: usize, x: WireTensor) -> Result<ConeSlice> {
        let wires = x
            .wires
            .iter()
            .map(|w| match *w {
                Wire::Fine(i) => Ok(i),
                Wire::Coarse(_) => Err(MeraError::Structure("coarse wire left after descent".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        let sigma = DensityMatrix::from_parts(x.dims, x.tensor)?;
        Ok(ConeSlice { level, wires, sigma })
    }
}

/// Density matrix of the top wires restricted to `wires` (a subset of
/// `{0, 1}`).
pub fn top_slice(m: &Mera, wires: &[usize]) -> Result<ConeSlice> {
    let t = m.top().tensor();
    let chi = m.top().chi();
    let rho = Tensor::from_fn(vec![chi, chi, chi, chi], |ix| {
        t.get(&[ix[0], ix[1]]) * t.get(&[ix[2], ix[3]]).conj()
    });
    let mut x = WireTensor::new(vec![Wire::Fine(0), Wire::Fine(1)], vec![chi, chi], rho);
    let keep: BTreeSet<usize> = wires.iter().copied().collect();
    if keep.iter().any(|&w| w > 1) || keep.is_empty() {
        return Err(MeraError::Argument(format!("top wires {wires:?} must be a nonempty subset of {{0, 1}}")));
    }
    for w in 0..2 {
        if !keep.contains(&w) {
            x.trace_out(Wire::Fine(w))?;
        }
    }
    ConeSlice::from_wire_tensor(m.n_layers(), x)
}

/// One layer of the descending map: from the density matrix on the coarse
/// wires of `layer` to the density matrix on `target` fine wires.
///
/// `slice.wires` must contain every coarse wire that can influence `target`;
/// any others are traced out.
pub fn descend_step(slice: &ConeSlice, layer: &MeraLayer, target: &[usize]) -> Result<ConeSlice> {
    if slice.level == 0 {
        return Err(MeraError::Structure("cannot descend below the lattice".into()));
    }
    if let Some(&w) = slice.wires.iter().find(|&&w| w >= layer.n_wires_out()) {
        return Err(MeraError::Structure(format!(
            "slice wire {w} does not exist above a layer of {} wires",
            layer.n_wires_in()
        )));
    }
    let plan = Plan::descend(layer.n_wires_in(), &slice.wires, target)?;
    let x = slice.clone().into_wire_tensor(Wire::Coarse);
    let out = plan.run_down(layer, x)?;
    ConeSlice::from_wire_tensor(slice.level - 1, out)
}

/// Size guards for cone contractions.
#[derive(Clone, Copy, Debug)]
pub struct RdmOptions {
    /// Largest number of requested sites.
    pub max_k: usize,
    /// Largest number of wires in any cone slice.
    pub max_width: usize,
    /// Accept sets of more than two sites that are not contiguous.
    pub allow_disjoint: bool,
}

impl Default for RdmOptions {
    fn default() -> Self {
        RdmOptions {
            max_k: 4,
            max_width: 8,
            allow_disjoint: false,
        }
    }
}

impl RdmOptions {
    /// Guards that admit any request.
    pub fn unguarded() -> Self {
        RdmOptions {
            max_k: usize::MAX,
            max_width: usize::MAX,
            allow_disjoint: true,
        }
    }
}

pub(crate) fn is_ring_contiguous(sorted: &[usize], n: usize) -> bool {
    let k = sorted.len();
    if k <= 1 || k == n {
        return true;
    }
    // exactly one gap larger than one step around the ring
    let gaps = (0..k)
        .filter(|&i| {
            let next = sorted[(i + 1) % k];
            (next + n - sorted[i]) % n != 1
        })
        .count();
    gaps == 1
}

/// Density matrix of `wires` at coarse-graining `level`, with subsystems in
/// the order the wires are listed.
pub fn level_rdm(m: &Mera, level: usize, wires: &[usize], opts: RdmOptions) -> Result<DensityMatrix> {
    let mut sorted = wires.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|p| p[0] == p[1]) {
        return Err(MeraError::Argument(format!("repeated site in {wires:?}")));
    }
    if wires.len() > opts.max_k {
        return Err(MeraError::CostGuard(format!(
            "{} sites requested, guard allows {} (raise max_k to override)",
            wires.len(),
            opts.max_k
        )));
    }
    let cone = cone_from(m.n_sites(), level, wires)?;
    if wires.len() > 2 && !opts.allow_disjoint && !is_ring_contiguous(&sorted, m.wires_at(level)) {
        return Err(MeraError::Argument(format!(
            "sets of more than two sites must be contiguous, got {wires:?}"
        )));
    }
    if cone.max_width() > opts.max_width {
        return Err(MeraError::CostGuard(format!(
            "cone of {wires:?} reaches {} wires, guard allows {}",
            cone.max_width(),
            opts.max_width
        )));
    }
    let top_wires: Vec<usize> = match cone.levels.last() {
        Some(l) => l.coarse.clone(),
        None => sorted.clone(),
    };
    let mut slice = top_slice(m, &top_wires)?;
    for lv in cone.levels.iter().rev() {
        slice = descend_step(&slice, m.layer(lv.layer), &lv.fine)?;
    }
    debug_assert_eq!(slice.wires, sorted);
    let order: Vec<usize> = wires
        .iter()
        .map(|w| sorted.binary_search(w).expect("present"))
        .collect();
    let rho = slice.sigma.permute_subsystems(&order)?;
    rho.check()?;
    Ok(rho)
}

/// Reduced density matrix of lattice sites, subsystems in the listed order.
pub fn rdm(m: &Mera, sites: &[usize]) -> Result<DensityMatrix> {
    level_rdm(m, 0, sites, RdmOptions::default())
}

pub fn rdm_with(m: &Mera, sites: &[usize], opts: RdmOptions) -> Result<DensityMatrix> {
    level_rdm(m, 0, sites, opts)
}

/// `tr(rho · O)` over the operator's support at its level.
pub fn expect_local(m: &Mera, op: &LocalOperator) -> Result<C64> {
    expect_local_with(m, op, RdmOptions::default())
}

pub fn expect_local_with(m: &Mera, op: &LocalOperator, opts: RdmOptions) -> Result<C64> {
    let rho = level_rdm(m, op.level, &op.support, opts)?;
    rho.expectation(&op.matrix)
}

/// `<A_{s1} B_{s2}>` from the two-site density matrix.
pub fn correlator(m: &Mera, a: &Tensor, b: &Tensor, s1: usize, s2: usize) -> Result<C64> {
    if s1 == s2 {
        return Err(MeraError::Argument(
            "correlator needs two distinct sites; use expect_local with the product".into(),
        ));
    }
    let rho = rdm(m, &[s1, s2])?;
    rho.expectation(&a.kron(b)?)
}
