mod common;

use common::{dense_layer, dense_state, max_abs_diff, random_density};
use mera_kit::cone::{correlator, descend_step, expect_local, rdm, ConeSlice};
use mera_kit::mera::{build_random, BondDims, BuildModeRegistry, BuildParams};
use mera_kit::operators::{random_hermitian, LocalOperator, NamedOperator};
use mera_kit::oracle::{full_state, oracle_correlator, oracle_expectation, oracle_rdm, overlap, SlotInputs};
use mera_kit::renorm::{ascend_operator, effective_hamiltonians, HamiltonianTerms};
use mera_kit::{partial_trace, DensityMatrix, Tensor, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn full_state_matches_dense_layer_product() {
    for (n, chi) in [(4, 2), (4, 3), (8, 2), (8, 3)] {
        for seed in 0..3 {
            let m = build_random(n, BondDims::Uniform(chi), seed, "generic").unwrap();
            let psi = full_state(&m, None).unwrap();
            let dense = dense_state(&m);
            let d = max_abs_diff(&psi.amplitudes, &dense);
            assert!(d < 1e-12, "n={n} chi={chi} seed={seed}: {d:e}");
        }
    }
}

#[test]
fn descend_step_matches_dense_layer_superoperator() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (n, layer_index) in [(8, 0), (16, 1), (32, 2)] {
        let m = build_random(n, BondDims::Uniform(2), 3, "generic").unwrap();
        let layer = m.layer(layer_index);
        let nf = layer.n_wires_in();
        let nc = layer.n_wires_out();
        let v = dense_layer(layer);
        let coarse = random_density(vec![2; nc], &mut rng);
        let fine_matrix = v
            .matmul(coarse.matrix())
            .unwrap()
            .matmul(&v.dagger().unwrap())
            .unwrap();
        let fine = DensityMatrix::new(vec![2; nf], fine_matrix).unwrap();
        let slice = ConeSlice {
            level: layer_index + 1,
            wires: (0..nc).collect(),
            sigma: coarse,
        };
        let targets: Vec<Vec<usize>> = vec![vec![3], vec![4, 5], vec![0, nf - 1], vec![2, 6], vec![1, 2, 3]];
        for target in targets {
            let got = descend_step(&slice, layer, &target).unwrap();
            let want = partial_trace(&fine, &target).unwrap();
            let d = got.sigma.max_abs_diff(&want);
            assert!(d < 1e-12, "n={n} layer={layer_index} target={target:?}: {d:e}");
        }
    }
}

#[test]
fn cone_matches_oracle_on_every_site_and_pair() {
    for n in [4, 8] {
        for seed in 0..3 {
            let m = build_random(n, BondDims::Uniform(2), seed, "generic").unwrap();
            let psi = full_state(&m, None).unwrap();
            for s1 in 0..n {
                let d = rdm(&m, &[s1]).unwrap().max_abs_diff(&oracle_rdm(&psi, &[s1]).unwrap());
                assert!(d < 1e-10);
                for s2 in 0..n {
                    if s1 == s2 {
                        continue;
                    }
                    let d = rdm(&m, &[s1, s2]).unwrap().max_abs_diff(&oracle_rdm(&psi, &[s1, s2]).unwrap());
                    assert!(d < 1e-10, "n={n} seed={seed} ({s1},{s2}): {d:e}");
                }
            }
        }
    }
}

#[test]
fn correlators_and_expectations_match_oracle() {
    let m = build_random(16, BondDims::Uniform(2), 8, "generic").unwrap();
    let psi = full_state(&m, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = mera_kit::operators::traceless_part(&random_hermitian(2, &mut rng)).unwrap();
    for r in 1..16 {
        let c = correlator(&m, &a, &a, 0, r).unwrap();
        let o = oracle_correlator(&psi, &a, &a, 0, r).unwrap();
        assert!((c - o).norm() < 1e-10, "r={r}");
    }
    let h = random_hermitian(8, &mut rng);
    let op = LocalOperator::on_sites(vec![14, 15, 0], h).unwrap();
    let c = expect_local(&m, &op).unwrap();
    let o = oracle_expectation(&psi, &op).unwrap();
    assert!((c - o).norm() < 1e-10);
    assert!(c.im.abs() < 1e-10);
}

#[test]
fn three_and_four_site_blocks_match_oracle() {
    let m = build_random(16, BondDims::Uniform(2), 2, "generic").unwrap();
    let psi = full_state(&m, None).unwrap();
    for start in [0, 5, 13] {
        for k in [3, 4] {
            let sites: Vec<usize> = (start..start + k).map(|s| s % 16).collect();
            let d = rdm(&m, &sites).unwrap().max_abs_diff(&oracle_rdm(&psi, &sites).unwrap());
            assert!(d < 1e-10, "{sites:?}");
        }
    }
}

#[test]
fn pair_rdm_reduces_to_single_site() {
    let m = build_random(32, BondDims::Uniform(3), 4, "translation_invariant").unwrap();
    for s in 0..32 {
        let pair = rdm(&m, &[s, (s + 1) % 32]).unwrap();
        let one = partial_trace(&pair, &[0]).unwrap();
        assert!(one.max_abs_diff(&rdm(&m, &[s]).unwrap()) < 1e-10);
    }
}

#[test]
fn product_network_correlators_factorize() {
    let m = build_random(16, BondDims::Uniform(2), 0, "product").unwrap();
    let z = NamedOperator::PauliZ.matrix(2).unwrap();
    let p = NamedOperator::Projector0.matrix(2).unwrap();
    let c = correlator(&m, &z, &p, 2, 9).unwrap();
    let ez = rdm(&m, &[2]).unwrap().expectation(&z).unwrap();
    let ep = rdm(&m, &[9]).unwrap().expectation(&p).unwrap();
    assert!((c - ez * ep).norm() < 1e-12);
    let op = LocalOperator::on_sites(vec![5], p).unwrap();
    assert!((expect_local(&m, &op).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn ascent_and_descent_are_adjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let m = build_random(16, BondDims::Uniform(2), 23, "generic").unwrap();
    for trial in 0..30 {
        let level = trial % 3;
        let n = m.wires_at(level);
        let start = (trial * 5) % n;
        let k = 1 + trial % 2;
        let support: Vec<usize> = (0..k).map(|i| (start + 2 * i * (trial % 3)) % n).collect();
        let mut support_sorted = support.clone();
        support_sorted.sort_unstable();
        support_sorted.dedup();
        if support_sorted.len() != k {
            continue;
        }
        let h = random_hermitian(1 << k, &mut rng);
        let op = LocalOperator::new(level, support_sorted.clone(), h.clone()).unwrap();
        let up = ascend_operator(&m, &op).unwrap();
        let sigma = random_density(vec![2; up.support.len()], &mut rng);
        let slice = ConeSlice {
            level: level + 1,
            wires: up.support.clone(),
            sigma: sigma.clone(),
        };
        let down = descend_step(&slice, m.layer(level), &support_sorted).unwrap();
        let lhs = down.sigma.expectation(&h).unwrap();
        let rhs = sigma.expectation(&up.matrix).unwrap();
        assert!((lhs - rhs).norm() < 1e-10, "trial {trial}");
        assert!(up.hermiticity_defect() < 1e-12);
    }
}

#[test]
fn hamiltonian_flow_matches_oracle_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let m = build_random(8, BondDims::Uniform(2), 31, "generic").unwrap();
    let psi = full_state(&m, None).unwrap();
    let terms: Vec<LocalOperator> = (0..8)
        .map(|s| LocalOperator::on_sites(vec![s, (s + 1) % 8], random_hermitian(4, &mut rng)).unwrap())
        .collect();
    let exact: f64 = terms.iter().map(|t| oracle_expectation(&psi, t).unwrap().re).sum();
    let flow = effective_hamiltonians(&m, &HamiltonianTerms::new(0, terms).unwrap()).unwrap();
    for h in &flow {
        assert!((h.expectation(&m).unwrap() - exact).abs() < 1e-9, "level {}", h.level);
    }
    // a single bond stays inside its causal cone
    let op = LocalOperator::on_sites(vec![0, 1], random_hermitian(4, &mut rng)).unwrap();
    let up = ascend_operator(&m, &op).unwrap();
    let cone = mera_kit::cone::cone_of(&m, &[0, 1]).unwrap();
    assert_eq!(up.support, cone.levels[0].coarse);
}

fn parents(n: usize, seed: u64) -> mera_kit::Mera {
    let p = BuildParams::new(n, BondDims::Uniform(2)).with_parents(true);
    BuildModeRegistry::default().build("generic", &p, seed).unwrap()
}

#[test]
fn generalized_inputs_obey_product_overlap() {
    let m = parents(8, 40);
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for _ in 0..5 {
        let a = SlotInputs::random(&m, &mut rng).unwrap();
        let b = SlotInputs::random(&m, &mut rng).unwrap();
        let got = overlap(&m, &a, &m, &b).unwrap();
        let want = a.product_overlap(&b).unwrap();
        assert!((got - want).norm() < 1e-10);
        let psi = full_state(&m, Some(&a)).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn orthogonal_slot_gives_zero_overlap() {
    let m = parents(8, 41);
    let a = SlotInputs::zeros(&m);
    let mut b = a.clone();
    let slot = &mut b.layers[1][0];
    slot.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
    slot[1] = C64::new(1.0, 0.0);
    assert!(overlap(&m, &a, &m, &b).unwrap().norm() < 1e-10);
    assert!(a.product_overlap(&b).unwrap().norm() < 1e-15);
}

#[test]
fn identity_correlator_is_one() {
    let m = build_random(8, BondDims::Uniform(2), 5, "scale_invariant").unwrap();
    let psi = full_state(&m, None).unwrap();
    let id = Tensor::identity(2);
    assert!((oracle_correlator(&psi, &id, &id, 1, 6).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
}
