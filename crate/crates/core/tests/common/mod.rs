//! Dense reference constructions shared by the integration tests. Nothing
//! here goes through the cone code or the tensor contraction routine.

#![allow(dead_code)]

use mera_kit::mera::MeraLayer;
use mera_kit::tensor::random_isometry_with;
use mera_kit::{DensityMatrix, Mera, Tensor, C64};
use rand_chacha::ChaCha8Rng;

/// Applies a two-wire gate `g` (rows `(o_a, o_b)`, columns `(i_a, i_b)`)
/// on wires `a`, `b` of `n` wires of dimension `d` to every column of `v`.
pub fn apply_two_wire(g: &Tensor, a: usize, b: usize, n: usize, d: usize, v: &Tensor) -> Tensor {
    let (rows, cols) = (v.shape()[0], v.shape()[1]);
    let place = |w: usize| d.pow((n - 1 - w) as u32);
    let digit = |x: usize, w: usize| (x / place(w)) % d;
    let mut out = Tensor::zeros(vec![rows, cols]);
    for row in 0..rows {
        let (ia, ib) = (digit(row, a), digit(row, b));
        let base = row - ia * place(a) - ib * place(b);
        for oa in 0..d {
            for ob in 0..d {
                let g_val = g.get(&[oa * d + ob, ia * d + ib]);
                let target = base + oa * place(a) + ob * place(b);
                for c in 0..cols {
                    let cur = out.get(&[target, c]);
                    out.set(&[target, c], cur + g_val * v.get(&[row, c]));
                }
            }
        }
    }
    out
}

/// Dense map of one layer from `χ_out^{n/2}` coarse amplitudes to
/// `χ_in^n` fine amplitudes.
pub fn dense_layer(layer: &MeraLayer) -> Tensor {
    let n = layer.n_wires_in();
    let d = layer.chi_in();
    let mut v = Tensor::identity(1);
    for j in 0..n / 2 {
        v = v.kron(&layer.isometry(j).matrix()).unwrap();
    }
    for j in 0..n / 2 {
        v = apply_two_wire(&layer.disentangler(j).matrix(), 2 * j + 1, (2 * j + 2) % n, n, d, &v);
    }
    v
}

/// State vector by multiplying dense layer maps, fine layers first.
pub fn dense_state(m: &Mera) -> Vec<C64> {
    let mut prod = dense_layer(m.layer(0));
    for layer in &m.layers()[1..] {
        prod = prod.matmul(&dense_layer(layer)).unwrap();
    }
    let chi = m.top().chi();
    let t = m.top().tensor().clone().reshape(vec![chi * chi, 1]).unwrap();
    prod.matmul(&t).unwrap().into_data()
}

pub fn random_density(dims: Vec<usize>, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let d: usize = dims.iter().product();
    let v = random_isometry_with(d * d, 1, rng).unwrap().into_data();
    let a = Tensor::new(vec![d, d], v).unwrap();
    DensityMatrix::new(dims, a.matmul(&a.dagger().unwrap()).unwrap()).unwrap()
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
