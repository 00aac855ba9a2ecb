//! One layer of the descending (density matrix) and ascending (operator)
//! maps, restricted to a causal cone.
//!
//! A [`Plan`] is the ordered list of gate applications and partial traces
//! that takes a density matrix on coarse wires `C` to one on fine wires `F`.
//! The ascending map runs the adjoint of each step in reverse order, so the
//! two maps are exact adjoints of each other.

use std::collections::BTreeSet;

use crate::error::{MeraError, Result};
use crate::mera::wiring::{disentangler_of, disentangler_wires, isometry_of, isometry_wires};
use crate::mera::MeraLayer;
use crate::tensor::{contract, permute_unchecked, Tensor, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Wire {
    Fine(usize),
    Coarse(usize),
}

/// A matrix on a labelled set of wires: a density matrix going down or an
/// operator going up. Axes are `(ket wires..., bra wires...)` in the order of
/// `wires`.
#[derive(Clone, Debug)]
pub(crate) struct WireTensor {
    pub wires: Vec<Wire>,
    pub dims: Vec<usize>,
    pub tensor: Tensor,
}

impl WireTensor {
    pub fn new(wires: Vec<Wire>, dims: Vec<usize>, tensor: Tensor) -> Self {
        debug_assert_eq!(tensor.rank(), 2 * wires.len());
        WireTensor { wires, dims, tensor }
    }

    fn position(&self, w: Wire) -> Result<usize> {
        self.wires
            .iter()
            .position(|&x| x == w)
            .ok_or_else(|| MeraError::Structure(format!("wire {w:?} is not in the cone slice")))
    }

    /// `X -> M X M†`, where `m` has axes `(outs..., ins...)`.
    pub fn conjugate(&mut self, m: &Tensor, ins: &[Wire], outs: &[(Wire, usize)]) -> Result<()> {
        let k = self.wires.len();
        let n_in = ins.len();
        let n_out = outs.len();
        let pos = ins
            .iter()
            .map(|&w| self.position(w))
            .collect::<Result<Vec<_>>>()?;
        let ket_pairs: Vec<(usize, usize)> = pos.iter().enumerate().map(|(i, &p)| (n_out + i, p)).collect();
        let left = contract(m, &self.tensor, &ket_pairs)?;
        // left axes: outs, ket remaining (k - n_in), bra (k)
        let rem = k - n_in;
        let bra_pairs: Vec<(usize, usize)> = pos
            .iter()
            .enumerate()
            .map(|(i, &p)| (n_out + i, n_out + rem + p))
            .collect();
        let both = contract(&m.conj(), &left, &bra_pairs)?;
        // both axes: bra outs, ket outs, ket remaining, bra remaining
        let order: Vec<usize> = (n_out..2 * n_out + rem)
            .chain(0..n_out)
            .chain(2 * n_out + rem..2 * n_out + 2 * rem)
            .collect();
        self.tensor = permute_unchecked(&both, &order);

        let keep: Vec<usize> = (0..k).filter(|i| !pos.contains(i)).collect();
        let mut wires: Vec<Wire> = outs.iter().map(|o| o.0).collect();
        let mut dims: Vec<usize> = outs.iter().map(|o| o.1).collect();
        wires.extend(keep.iter().map(|&i| self.wires[i]));
        dims.extend(keep.iter().map(|&i| self.dims[i]));
        self.wires = wires;
        self.dims = dims;
        Ok(())
    }

    pub fn trace_out(&mut self, w: Wire) -> Result<()> {
        let p = self.position(w)?;
        let k = self.wires.len();
        let d = self.dims[p];
        let order: Vec<usize> = (0..k)
            .filter(|&i| i != p)
            .chain((0..k).filter(|&i| i != p).map(|i| i + k))
            .chain([p, p + k])
            .collect();
        let t = permute_unchecked(&self.tensor, &order);
        let rest = t.len() / (d * d);
        let src = t.data();
        let data: Vec<_> = (0..rest)
            .map(|r| (0..d).fold(ZERO, |acc, x| acc + src[r * d * d + x * d + x]))
            .collect();
        self.wires.remove(p);
        self.dims.remove(p);
        let shape: Vec<usize> = self.dims.iter().chain(&self.dims).copied().collect();
        self.tensor = Tensor::new(shape, data)?;
        Ok(())
    }

    /// `X -> X ⊗ I` on a new wire.
    pub fn embed_identity(&mut self, w: Wire, dim: usize) -> Result<()> {
        let k = self.wires.len();
        let outer = contract(&self.tensor, &Tensor::identity(dim), &[])?;
        let order: Vec<usize> = (0..k)
            .chain([2 * k])
            .chain(k..2 * k)
            .chain([2 * k + 1])
            .collect();
        self.tensor = permute_unchecked(&outer, &order);
        self.wires.push(w);
        self.dims.push(dim);
        Ok(())
    }

    /// Reorders wires ascending by label.
    pub fn sort(&mut self) {
        let k = self.wires.len();
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by_key(|&i| self.wires[i]);
        if idx.iter().enumerate().all(|(i, &j)| i == j) {
            return;
        }
        let order: Vec<usize> = idx.iter().copied().chain(idx.iter().map(|i| i + k)).collect();
        self.tensor = permute_unchecked(&self.tensor, &order);
        self.wires = idx.iter().map(|&i| self.wires[i]).collect();
        self.dims = idx.iter().map(|&i| self.dims[i]).collect();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Step {
    /// Isometry `j`: coarse wire `j` becomes fine wires `2j, 2j+1`.
    Isometry(usize),
    /// Disentangler `j` on its two fine wires.
    Disentangler(usize),
    Trace(Wire),
}

/// The sublayer wiring of one layer restricted to a cone.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    pub n_fine: usize,
    pub steps: Vec<Step>,
}

/// Fine wires touched by the disentanglers that act on `fine`.
pub(crate) fn mid_wires(fine: &[usize], n: usize) -> Vec<usize> {
    let set: BTreeSet<usize> = fine
        .iter()
        .flat_map(|&w| disentangler_wires(disentangler_of(w, n), n))
        .collect();
    set.into_iter().collect()
}

/// Coarse wires whose isometries produce any of `mid`.
pub(crate) fn coarse_wires(mid: &[usize]) -> Vec<usize> {
    let set: BTreeSet<usize> = mid.iter().map(|&w| isometry_of(w)).collect();
    set.into_iter().collect()
}

impl Plan {
    /// Steps taking a density matrix on `available` coarse wires to one on
    /// `fine`. Coarse wires that cannot influence `fine` are traced first.
    pub fn descend(n_fine: usize, available: &[usize], fine: &[usize]) -> Result<Plan> {
        if let Some(&w) = fine.iter().find(|&&w| w >= n_fine) {
            return Err(MeraError::Structure(format!(
                "target wire {w} outside a layer of {n_fine} wires"
            )));
        }
        let fine_set: BTreeSet<usize> = fine.iter().copied().collect();
        let mid = mid_wires(fine, n_fine);
        let mid_set: BTreeSet<usize> = mid.iter().copied().collect();
        let coarse = coarse_wires(&mid);
        let avail: BTreeSet<usize> = available.iter().copied().collect();
        if let Some(c) = coarse.iter().find(|c| !avail.contains(c)) {
            return Err(MeraError::Structure(format!(
                "coarse wire {c} is needed for fine wires {fine:?} but missing from the slice {available:?}"
            )));
        }
        let mut steps: Vec<Step> = avail
            .iter()
            .filter(|c| coarse.binary_search(c).is_err())
            .map(|&c| Step::Trace(Wire::Coarse(c)))
            .collect();

        let mut dis: Vec<usize> = fine_set.iter().map(|&w| disentangler_of(w, n_fine)).collect();
        dis.sort_unstable();
        dis.dedup();
        let mut applied = vec![false; dis.len()];
        let mut present: BTreeSet<usize> = BTreeSet::new();
        for &j in &coarse {
            steps.push(Step::Isometry(j));
            for w in isometry_wires(j) {
                if mid_set.contains(&w) {
                    present.insert(w);
                } else {
                    steps.push(Step::Trace(Wire::Fine(w)));
                }
            }
            for (i, &d) in dis.iter().enumerate() {
                let [a, b] = disentangler_wires(d, n_fine);
                if !applied[i] && present.contains(&a) && present.contains(&b) {
                    applied[i] = true;
                    steps.push(Step::Disentangler(d));
                    for w in [a, b] {
                        if !fine_set.contains(&w) {
                            steps.push(Step::Trace(Wire::Fine(w)));
                        }
                    }
                }
            }
        }
        debug_assert!(applied.iter().all(|&a| a));
        Ok(Plan { n_fine, steps })
    }

    /// Runs the plan on a density matrix over coarse wires. The result is
    /// sorted by fine wire.
    pub fn run_down(&self, layer: &MeraLayer, mut x: WireTensor) -> Result<WireTensor> {
        let f = layer.chi_in();
        for step in &self.steps {
            match *step {
                Step::Isometry(j) => {
                    let [a, b] = isometry_wires(j);
                    x.conjugate(
                        layer.isometry(j).tensor(),
                        &[Wire::Coarse(j)],
                        &[(Wire::Fine(a), f), (Wire::Fine(b), f)],
                    )?;
                }
                Step::Disentangler(j) => {
                    let [a, b] = disentangler_wires(j, self.n_fine);
                    x.conjugate(
                        layer.disentangler(j).tensor(),
                        &[Wire::Fine(a), Wire::Fine(b)],
                        &[(Wire::Fine(a), f), (Wire::Fine(b), f)],
                    )?;
                }
                Step::Trace(w) => x.trace_out(w)?,
            }
        }
        x.sort();
        Ok(x)
    }

    /// Adjoint of [`Plan::run_down`]: takes an operator on the fine wires to
    /// one on the plan's coarse wires.
    pub fn run_up(&self, layer: &MeraLayer, mut x: WireTensor) -> Result<WireTensor> {
        let (f, c) = (layer.chi_in(), layer.chi_out());
        for step in self.steps.iter().rev() {
            match *step {
                Step::Isometry(j) => {
                    let [a, b] = isometry_wires(j);
                    let w = layer.isometry(j);
                    let wd = w.matrix().dagger()?.reshape(vec![c, f, f])?;
                    x.conjugate(&wd, &[Wire::Fine(a), Wire::Fine(b)], &[(Wire::Coarse(j), c)])?;
                }
                Step::Disentangler(j) => {
                    let [a, b] = disentangler_wires(j, self.n_fine);
                    let u = layer.disentangler(j);
                    let ud = u.matrix().dagger()?.reshape(vec![f; 4])?;
                    x.conjugate(&ud, &[Wire::Fine(a), Wire::Fine(b)], &[(Wire::Fine(a), f), (Wire::Fine(b), f)])?;
                }
                Step::Trace(w) => {
                    let d = match w {
                        Wire::Fine(_) => f,
                        Wire::Coarse(_) => c,
                    };
                    x.embed_identity(w, d)?;
                }
            }
        }
        x.sort();
        Ok(x)
    }
}
