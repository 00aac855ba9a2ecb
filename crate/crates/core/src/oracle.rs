//! Brute-force ground truth: the full state vector prepared by the network
//! read as a quantum circuit, and exact quantities derived from it.
//!
//! Site 0 is the slowest-varying index of the amplitude vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{MeraError, Result};
use crate::mera::wiring::disentangler_wires;
use crate::mera::Mera;
use crate::operators::LocalOperator;
use crate::tensor::{contract, permute_unchecked, random_isometry_with, Tensor, C64, ONE, ZERO};

/// Largest amplitude vector the oracle will materialize.
pub const MAX_AMPLITUDES: usize = 1 << 20;
/// Largest reduced density matrix side the oracle will form.
pub const MAX_RDM_SIDE: usize = 1 << 12;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub n_sites: usize,
    pub site_dim: usize,
    pub amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(MeraError::Shape("inner product of states of different size".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn as_tensor(&self) -> Tensor {
        Tensor::new(vec![self.site_dim; self.n_sites], self.amplitudes.clone()).expect("consistent")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&AmplitudeDoc {
            n_sites: self.n_sites,
            site_dim: self.site_dim,
            amplitudes: self.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: AmplitudeDoc = serde_json::from_str(text)?;
        let expected = doc.site_dim.checked_pow(doc.n_sites as u32);
        if expected != Some(doc.amplitudes.len()) {
            return Err(MeraError::load(
                "amplitudes",
                format!(
                    "{} amplitudes for {} sites of dimension {}",
                    doc.amplitudes.len(),
                    doc.n_sites,
                    doc.site_dim
                ),
            ));
        }
        Ok(StateVector {
            n_sites: doc.n_sites,
            site_dim: doc.site_dim,
            amplitudes: doc.amplitudes.iter().map(|&[r, i]| C64::new(r, i)).collect(),
        })
    }
}

/// Textual amplitude dump.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmplitudeDoc {
    pub n_sites: usize,
    pub site_dim: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

/// States fed into the incoming circuit wires: two for the top unitary and
/// one per isometry slot (the ancilla input that is `|0>` in the plain
/// network).
#[derive(Clone, Debug, PartialEq)]
pub struct SlotInputs {
    pub top: [Vec<C64>; 2],
    /// `layers[τ][j]` feeds isometry `j` of layer `τ`.
    pub layers: Vec<Vec<Vec<C64>>>,
}

fn basis0(d: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d];
    v[0] = ONE;
    v
}

impl SlotInputs {
    /// All inputs `|0>`: reproduces the plain network.
    pub fn zeros(m: &Mera) -> Self {
        let chi = m.top().chi();
        SlotInputs {
            top: [basis0(chi), basis0(chi)],
            layers: m
                .layers()
                .iter()
                .map(|l| {
                    let anc = ancilla_dim(l.chi_in(), l.chi_out());
                    vec![basis0(anc); l.n_wires_out()]
                })
                .collect(),
        }
    }

    /// Independent random unit vectors in every slot.
    pub fn random<R: Rng + ?Sized>(m: &Mera, rng: &mut R) -> Result<Self> {
        let chi = m.top().chi();
        let mut draw = |d: usize| -> Result<Vec<C64>> { Ok(random_isometry_with(d, 1, rng)?.into_data()) };
        let top = [draw(chi)?, draw(chi)?];
        let layers = m
            .layers()
            .iter()
            .map(|l| {
                let anc = ancilla_dim(l.chi_in(), l.chi_out());
                (0..l.n_wires_out()).map(|_| draw(anc)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SlotInputs { top, layers })
    }

    /// Number of incoming wires fed.
    pub fn n_slots(&self) -> usize {
        2 + self.layers.iter().map(|l| l.len()).sum::<usize>()
    }

    pub fn slots(&self) -> impl Iterator<Item = &Vec<C64>> {
        self.top.iter().chain(self.layers.iter().flatten())
    }

    pub fn slots_mut(&mut self) -> impl Iterator<Item = &mut Vec<C64>> {
        self.top.iter_mut().chain(self.layers.iter_mut().flatten())
    }

    /// `Π_r <φ_r|φ'_r>`.
    pub fn product_overlap(&self, other: &SlotInputs) -> Result<C64> {
        if self.n_slots() != other.n_slots() {
            return Err(MeraError::Argument("input families of different size".into()));
        }
        let mut acc = ONE;
        for (a, b) in self.slots().zip(other.slots()) {
            if a.len() != b.len() {
                return Err(MeraError::Shape("slot inputs of different dimension".into()));
            }
            acc *= a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>();
        }
        Ok(acc)
    }
}

fn ancilla_dim(chi_in: usize, chi_out: usize) -> usize {
    chi_in * chi_in / chi_out
}

fn check_guard(m: &Mera) -> Result<()> {
    let amps = m
        .site_dim()
        .checked_pow(m.n_sites() as u32)
        .filter(|&a| a <= MAX_AMPLITUDES);
    if amps.is_none() {
        return Err(MeraError::CostGuard(format!(
            "{}^{} amplitudes exceed the oracle limit of {MAX_AMPLITUDES}",
            m.site_dim(),
            m.n_sites()
        )));
    }
    Ok(())
}

/// Replaces `axis` of `psi` by the two output axes of `w` (axes
/// `(out1, out2, in)`), placed at `axis` and `axis + 1`.
fn split_axis(psi: &Tensor, w: &Tensor, axis: usize) -> Result<Tensor> {
    let r = psi.rank();
    let t = contract(psi, w, &[(axis, 2)])?;
    // t axes: psi without `axis` (r - 1), out1, out2
    let order: Vec<usize> = (0..axis).chain([r - 1, r]).chain(axis..r - 1).collect();
    Ok(permute_unchecked(&t, &order))
}

/// Applies a gate with axes `(out..., in...)` to the listed axes of `psi`.
fn apply_on_axes(psi: &Tensor, gate: &Tensor, axes: &[usize]) -> Result<Tensor> {
    let k = axes.len();
    let r = psi.rank();
    let pairs: Vec<(usize, usize)> = axes.iter().enumerate().map(|(i, &a)| (k + i, a)).collect();
    let t = contract(gate, psi, &pairs)?;
    // t axes: outs (k), remaining psi axes in order
    let remaining: Vec<usize> = (0..r).filter(|a| !axes.contains(a)).collect();
    let mut order = vec![0usize; r];
    for (i, &a) in axes.iter().enumerate() {
        order[a] = i;
    }
    for (i, &a) in remaining.iter().enumerate() {
        order[a] = k + i;
    }
    Ok(permute_unchecked(&t, &order))
}

fn contract_input(parent: &Tensor, input: &[C64], axes_kept: usize) -> Result<Tensor> {
    let v = Tensor::new(vec![input.len()], input.to_vec())?;
    let _ = axes_kept;
    contract(parent, &v, &[(parent.rank() - 1, 0)])
}

/// Full state vector of the network, optionally with generalized inputs.
pub fn full_state(m: &Mera, inputs: Option<&SlotInputs>) -> Result<StateVector> {
    check_guard(m)?;
    if inputs.is_some() && !m.has_parents() {
        return Err(MeraError::Capability(
            "generalized inputs need a network built with parent unitaries".into(),
        ));
    }
    if let Some(inp) = inputs {
        let expected = SlotInputs::zeros(m);
        if inp.layers.len() != expected.layers.len()
            || inp
                .slots()
                .zip(expected.slots())
                .any(|(a, b)| a.len() != b.len())
            || inp.n_slots() != expected.n_slots()
        {
            return Err(MeraError::Argument("input family does not match the network slots".into()));
        }
        for v in inp.slots() {
            let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if (n - 1.0).abs() > 1e-10 {
                return Err(MeraError::Argument(format!("slot input has norm² {n}")));
            }
        }
    }

    let mut psi = match inputs {
        None => m.top().tensor().clone(),
        Some(inp) => {
            let p = m.top_parent().expect("checked");
            let half = contract_input(p, &inp.top[1], 3)?;
            contract_input(&half, &inp.top[0], 2)?
        }
    };
    for (t, layer) in m.layers().iter().enumerate().rev() {
        let n = layer.n_wires_in();
        for j in 0..n / 2 {
            let w = match inputs {
                None => layer.isometry(j).tensor().clone(),
                Some(inp) => contract_input(layer.isometry_parent(j).expect("checked"), &inp.layers[t][j], 3)?,
            };
            psi = split_axis(&psi, &w, 2 * j)?;
        }
        for j in 0..n / 2 {
            let [a, b] = disentangler_wires(j, n);
            psi = apply_on_axes(&psi, layer.disentangler(j).tensor(), &[a, b])?;
        }
    }
    Ok(StateVector {
        n_sites: m.n_sites(),
        site_dim: m.site_dim(),
        amplitudes: psi.into_data(),
    })
}

/// Exact reduced density matrix of `sites`, subsystems in the listed order.
pub fn oracle_rdm(psi: &StateVector, sites: &[usize]) -> Result<DensityMatrix> {
    let n = psi.n_sites;
    let mut seen = vec![false; n];
    for &s in sites {
        if s >= n || seen[s] {
            return Err(MeraError::Argument(format!("invalid site list {sites:?} for {n} sites")));
        }
        seen[s] = true;
    }
    let d = psi.site_dim;
    let dk = d.checked_pow(sites.len() as u32).filter(|&x| x <= MAX_RDM_SIDE).ok_or_else(|| {
        MeraError::CostGuard(format!("{} sites exceed the oracle density-matrix limit", sites.len()))
    })?;
    let rest: Vec<usize> = (0..n).filter(|&s| !seen[s]).collect();
    let order: Vec<usize> = sites.iter().copied().chain(rest.iter().copied()).collect();
    let t = permute_unchecked(&psi.as_tensor(), &order);
    let dt = t.len() / dk;
    let a = t.data();
    let mut rho = vec![ZERO; dk * dk];
    for i in 0..dk {
        for j in i..dk {
            let mut acc = ZERO;
            let (ri, rj) = (&a[i * dt..(i + 1) * dt], &a[j * dt..(j + 1) * dt]);
            for (x, y) in ri.iter().zip(rj) {
                acc += x * y.conj();
            }
            rho[i * dk + j] = acc;
            rho[j * dk + i] = acc.conj();
        }
    }
    DensityMatrix::new(vec![d; sites.len()], Tensor::new(vec![dk, dk], rho)?)
}

/// Applies a one-site operator to site `s`.
fn apply_one_site(psi: &StateVector, op: &Tensor, s: usize) -> Result<StateVector> {
    let t = apply_on_axes(&psi.as_tensor(), op, &[s])?;
    Ok(StateVector {
        n_sites: psi.n_sites,
        site_dim: psi.site_dim,
        amplitudes: t.into_data(),
    })
}

/// `<ψ| A_{s1} B_{s2} |ψ>` by direct application to the amplitudes.
pub fn oracle_correlator(psi: &StateVector, a: &Tensor, b: &Tensor, s1: usize, s2: usize) -> Result<C64> {
    if s1 >= psi.n_sites || s2 >= psi.n_sites {
        return Err(MeraError::Argument(format!("sites ({s1}, {s2}) out of range")));
    }
    let phi = apply_one_site(&apply_one_site(psi, b, s2)?, a, s1)?;
    psi.inner(&phi)
}

/// `<ψ|O|ψ>` for an operator on lattice sites.
pub fn oracle_expectation(psi: &StateVector, op: &LocalOperator) -> Result<C64> {
    if op.level != 0 {
        return Err(MeraError::Argument("oracle expectations need a level-0 operator".into()));
    }
    let k = op.support.len();
    let gate = op.matrix.clone().reshape(vec![psi.site_dim; 2 * k])?;
    let t = apply_on_axes(&psi.as_tensor(), &gate, &op.support)?;
    let phi = StateVector {
        n_sites: psi.n_sites,
        site_dim: psi.site_dim,
        amplitudes: t.into_data(),
    };
    psi.inner(&phi)
}

fn same_tensor(a: &Tensor, b: &Tensor, tol: f64) -> bool {
    a.max_abs_diff(b) <= tol
}

/// `<Ψ_φ|Ψ_φ'>` for two input families fed to the same circuit.
pub fn overlap(m1: &Mera, inputs1: &SlotInputs, m2: &Mera, inputs2: &SlotInputs) -> Result<C64> {
    const TOL: f64 = 1e-12;
    if !m1.has_parents() || !m2.has_parents() {
        return Err(MeraError::Capability("overlap needs networks with parent unitaries".into()));
    }
    let mut same = m1.n_sites() == m2.n_sites() && m1.site_dim() == m2.site_dim();
    same &= same_tensor(m1.top_parent().unwrap(), m2.top_parent().unwrap(), TOL);
    if same {
        for (l1, l2) in m1.layers().iter().zip(m2.layers()) {
            if l1.chi_out() != l2.chi_out() {
                same = false;
                break;
            }
            for j in 0..l1.n_wires_out() {
                same &= same_tensor(l1.disentangler(j).tensor(), l2.disentangler(j).tensor(), TOL);
                same &= same_tensor(
                    l1.isometry_parent(j).unwrap(),
                    l2.isometry_parent(j).unwrap(),
                    TOL,
                );
            }
        }
    }
    if !same {
        return Err(MeraError::Argument(
            "the two networks do not share the same unitary circuit".into(),
        ));
    }
    let a = full_state(m1, Some(inputs1))?;
    let b = full_state(m2, Some(inputs2))?;
    a.inner(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mera::{build_random, BondDims, BuildModeRegistry, BuildParams};
    use crate::operators::NamedOperator;

    fn with_parents(n: usize, seed: u64) -> Mera {
        let p = BuildParams::new(n, BondDims::Uniform(2)).with_parents(true);
        BuildModeRegistry::default().build("generic", &p, seed).unwrap()
    }

    #[test]
    fn product_network_gives_basis_state() {
        let m = build_random(8, BondDims::Uniform(2), 0, "product").unwrap();
        let psi = full_state(&m, None).unwrap();
        assert_eq!(psi.amplitudes[0], ONE);
        assert!(psi.amplitudes[1..].iter().all(|z| *z == ZERO));
        let r = oracle_rdm(&psi, &[3]).unwrap();
        assert!(crate::von_neumann_entropy(&r).unwrap().abs() < 1e-12);
    }

    #[test]
    fn random_state_is_normalized() {
        let m = build_random(4, BondDims::Uniform(2), 1, "generic").unwrap();
        assert!((full_state(&m, None).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_inputs_reproduce_plain_network() {
        let m = with_parents(8, 3);
        let plain = full_state(&m, None).unwrap();
        let fed = full_state(&m, Some(&SlotInputs::zeros(&m))).unwrap();
        let diff = plain
            .amplitudes
            .iter()
            .zip(&fed.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14);
        assert_eq!(SlotInputs::zeros(&m).n_slots(), 8);
    }

    #[test]
    fn inputs_need_parents() {
        let m = build_random(8, BondDims::Uniform(2), 1, "generic").unwrap();
        let inp = SlotInputs::zeros(&m);
        assert!(matches!(full_state(&m, Some(&inp)), Err(MeraError::Capability(_))));
    }

    #[test]
    fn guard_on_large_systems() {
        let m = build_random(32, BondDims::Uniform(2), 1, "scale_invariant").unwrap();
        assert!(matches!(full_state(&m, None), Err(MeraError::CostGuard(_))));
    }

    #[test]
    fn full_keep_is_the_projector() {
        let m = build_random(4, BondDims::Uniform(2), 2, "generic").unwrap();
        let psi = full_state(&m, None).unwrap();
        let rho = oracle_rdm(&psi, &[0, 1, 2, 3]).unwrap();
        let proj = DensityMatrix::from_pure(vec![2; 4], &psi.amplitudes).unwrap();
        assert!(rho.max_abs_diff(&proj) < 1e-15);
    }

    #[test]
    fn correlator_on_basis_state() {
        let m = build_random(8, BondDims::Uniform(2), 0, "product").unwrap();
        let psi = full_state(&m, None).unwrap();
        let z = NamedOperator::PauliZ.matrix(2).unwrap();
        let p = NamedOperator::Projector0.matrix(2).unwrap();
        assert!((oracle_correlator(&psi, &z, &p, 1, 5).unwrap() - ONE).norm() < 1e-15);
        let id = Tensor::identity(2);
        let m = build_random(8, BondDims::Uniform(2), 4, "generic").unwrap();
        let psi = full_state(&m, None).unwrap();
        assert!((oracle_correlator(&psi, &id, &id, 0, 7).unwrap() - ONE).norm() < 1e-12);
    }

    #[test]
    fn identical_inputs_overlap_to_one() {
        let m = with_parents(8, 5);
        let mut rng = rand::rng();
        let inp = SlotInputs::random(&m, &mut rng).unwrap();
        assert!((overlap(&m, &inp, &m, &inp).unwrap() - ONE).norm() < 1e-12);
        let other = with_parents(8, 6);
        assert!(matches!(overlap(&m, &inp, &other, &inp), Err(MeraError::Argument(_))));
    }

    #[test]
    fn amplitude_dump_round_trip() {
        let m = build_random(4, BondDims::Uniform(2), 2, "generic").unwrap();
        let psi = full_state(&m, None).unwrap();
        let back = StateVector::from_json(&psi.to_json().unwrap()).unwrap();
        assert_eq!(back, psi);
    }
}
