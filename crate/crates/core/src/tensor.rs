//! Dense complex tensors stored in row-major order.
//!
//! A [`Tensor`] is a flat buffer plus a shape; axis order is part of the
//! value. Constructors that build network tensors document their axis order
//! (see [`crate::mera`]).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{MeraError, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(MeraError::Shape(format!(
                "axis dimensions must be positive, got {shape:?}"
            )));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(MeraError::Shape(format!(
                "shape {shape:?} holds {len} entries but {} were given",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape,
            data: vec![ZERO; len],
        }
    }

    pub fn scalar(value: C64) -> Self {
        Tensor {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    /// `d x d` identity matrix.
    pub fn identity(d: usize) -> Self {
        let mut t = Tensor::zeros(vec![d, d]);
        for i in 0..d {
            t.data[i * d + i] = ONE;
        }
        t
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.shape)
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: C64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &d)| {
                debug_assert!(i < d);
                acc * d + i
            })
    }

    /// Same data, new shape with the same number of entries.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Tensor::new(shape, self.data)
    }

    pub fn conj(&self) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Tensor) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    fn zip_with(&self, other: &Tensor, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(MeraError::Shape(format!(
                "elementwise operation on shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Largest entrywise modulus of `self - other`; infinite if the shapes
    /// differ.
    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Rows and columns of a rank-2 tensor.
    pub fn matrix_dims(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(MeraError::Shape(format!(
                "expected a matrix, got shape {:?}",
                self.shape
            ))),
        }
    }

    /// Conjugate transpose of a matrix.
    pub fn dagger(&self) -> Result<Self> {
        let (r, c) = self.matrix_dims()?;
        let mut out = Tensor::zeros(vec![c, r]);
        for i in 0..r {
            for j in 0..c {
                out.data[j * r + i] = self.data[i * c + j].conj();
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Self> {
        let (m, k) = self.matrix_dims()?;
        let (k2, n) = other.matrix_dims()?;
        if k != k2 {
            return Err(MeraError::Shape(format!(
                "matrix product of {m}x{k} and {k2}x{n}"
            )));
        }
        Ok(Tensor {
            shape: vec![m, n],
            data: gemm(&self.data, &other.data, m, k, n),
        })
    }

    pub fn trace(&self) -> Result<C64> {
        let (r, c) = self.matrix_dims()?;
        if r != c {
            return Err(MeraError::Shape(format!("trace of a {r}x{c} matrix")));
        }
        Ok((0..r).map(|i| self.data[i * r + i]).sum())
    }

    /// Kronecker product of two matrices.
    pub fn kron(&self, other: &Tensor) -> Result<Self> {
        let (ra, ca) = self.matrix_dims()?;
        let (rb, cb) = other.matrix_dims()?;
        let (r, c) = (ra * rb, ca * cb);
        let mut out = Tensor::zeros(vec![r, c]);
        for i in 0..ra {
            for j in 0..ca {
                let a = self.data[i * ca + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..rb {
                    for l in 0..cb {
                        out.data[(i * rb + k) * c + j * cb + l] = a * other.data[k * cb + l];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `max |(M^dagger M - I)_{ij}|` for a matrix `M`: zero exactly when the
    /// columns are orthonormal.
    pub fn isometry_defect(&self) -> Result<f64> {
        let (_, c) = self.matrix_dims()?;
        let gram = self.dagger()?.matmul(self)?;
        Ok(gram.max_abs_diff(&Tensor::identity(c)))
    }
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

fn increment(idx: &mut [usize], shape: &[usize]) {
    for ax in (0..idx.len()).rev() {
        idx[ax] += 1;
        if idx[ax] < shape[ax] {
            return;
        }
        idx[ax] = 0;
    }
}

fn gemm(a: &[C64], b: &[C64], m: usize, k: usize, n: usize) -> Vec<C64> {
    let mut out = vec![ZERO; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == ZERO {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
    out
}

/// Sums over the paired axes of `a` and `b`.
///
/// The result carries the unpaired axes of `a` followed by the unpaired axes
/// of `b`, each in their original relative order.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
    let mut used_a = vec![false; a.rank()];
    let mut used_b = vec![false; b.rank()];
    for &(ia, ib) in pairs {
        if ia >= a.rank() || ib >= b.rank() {
            return Err(MeraError::Argument(format!(
                "contraction pair ({ia}, {ib}) out of range for ranks {} and {}",
                a.rank(),
                b.rank()
            )));
        }
        if used_a[ia] || used_b[ib] {
            return Err(MeraError::Argument(format!(
                "axis repeated in contraction pairs {pairs:?}"
            )));
        }
        used_a[ia] = true;
        used_b[ib] = true;
        if a.shape[ia] != b.shape[ib] {
            return Err(MeraError::Shape(format!(
                "cannot pair axis {ia} of a (dim {}) with axis {ib} of b (dim {})",
                a.shape[ia], b.shape[ib]
            )));
        }
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&i| !used_b[i]).collect();

    let order_a: Vec<usize> = free_a
        .iter()
        .copied()
        .chain(pairs.iter().map(|p| p.0))
        .collect();
    let order_b: Vec<usize> = pairs
        .iter()
        .map(|p| p.1)
        .chain(free_b.iter().copied())
        .collect();
    let pa = permute_unchecked(a, &order_a);
    let pb = permute_unchecked(b, &order_b);

    let m: usize = free_a.iter().map(|&i| a.shape[i]).product();
    let k: usize = pairs.iter().map(|p| a.shape[p.0]).product();
    let n: usize = free_b.iter().map(|&i| b.shape[i]).product();

    let shape: Vec<usize> = free_a
        .iter()
        .map(|&i| a.shape[i])
        .chain(free_b.iter().map(|&i| b.shape[i]))
        .collect();
    Ok(Tensor {
        shape,
        data: gemm(&pa.data, &pb.data, m, k, n),
    })
}

/// Reorders axes so that output axis `i` is input axis `order[i]`.
pub fn permute_axes(a: &Tensor, order: &[usize]) -> Result<Tensor> {
    check_permutation(order, a.rank())?;
    Ok(permute_unchecked(a, order))
}

pub(crate) fn check_permutation(order: &[usize], rank: usize) -> Result<()> {
    let mut seen = vec![false; rank];
    if order.len() != rank {
        return Err(MeraError::Argument(format!(
            "{order:?} is not a permutation of {rank} axes"
        )));
    }
    for &o in order {
        if o >= rank || seen[o] {
            return Err(MeraError::Argument(format!(
                "{order:?} is not a permutation of {rank} axes"
            )));
        }
        seen[o] = true;
    }
    Ok(())
}

pub(crate) fn permute_unchecked(a: &Tensor, order: &[usize]) -> Tensor {
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return a.clone();
    }
    let src_strides = a.strides();
    let shape: Vec<usize> = order.iter().map(|&o| a.shape[o]).collect();
    let strides: Vec<usize> = order.iter().map(|&o| src_strides[o]).collect();
    let mut data = Vec::with_capacity(a.data.len());
    let mut idx = vec![0usize; shape.len()];
    let mut off = 0usize;
    for _ in 0..a.data.len() {
        data.push(a.data[off]);
        for ax in (0..idx.len()).rev() {
            idx[ax] += 1;
            off += strides[ax];
            if idx[ax] < shape[ax] {
                break;
            }
            off -= strides[ax] * shape[ax];
            idx[ax] = 0;
        }
    }
    Tensor { shape, data }
}

/// Fuses each group of axes into a single axis.
///
/// `groups` must partition the axes. The tensor is first permuted so that
/// the groups appear in the listed order; when the groups are already
/// contiguous and ascending the data buffer is unchanged.
pub fn group_axes(a: &Tensor, groups: &[Vec<usize>]) -> Result<Tensor> {
    let order: Vec<usize> = groups.iter().flatten().copied().collect();
    check_permutation(&order, a.rank()).map_err(|_| {
        MeraError::Argument(format!(
            "groups {groups:?} do not partition the {} axes",
            a.rank()
        ))
    })?;
    if groups.iter().any(|g| g.is_empty()) {
        return Err(MeraError::Argument("empty axis group".into()));
    }
    let permuted = permute_unchecked(a, &order);
    let shape = groups
        .iter()
        .map(|g| g.iter().map(|&i| a.shape[i]).product())
        .collect();
    Ok(Tensor {
        shape,
        data: permuted.data,
    })
}

/// A `rows x cols` matrix with orthonormal columns, drawn by orthonormalizing
/// an i.i.d. standard complex Gaussian matrix.
pub fn random_isometry(rows: usize, cols: usize, seed: u64) -> Result<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_isometry_with(rows, cols, &mut rng)
}

pub fn random_isometry_with<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<Tensor> {
    if cols == 0 || rows < cols {
        return Err(MeraError::Argument(format!(
            "an isometry needs rows >= cols >= 1, got {rows}x{cols}"
        )));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    // column-major working copy
    let mut cols_data: Vec<Vec<C64>> = (0..cols)
        .map(|_| {
            (0..rows)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(re * scale, im * scale)
                })
                .collect()
        })
        .collect();

    for j in 0..cols {
        let (done, rest) = cols_data.split_at_mut(j);
        let v = &mut rest[0];
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in done.iter() {
                let proj: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (x, qa) in v.iter_mut().zip(q) {
                    *x -= proj * qa;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(MeraError::Validation(
                "rank-deficient Gaussian draw during orthonormalization".into(),
            ));
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        // phase convention: first nonzero entry real and positive
        if let Some(first) = v.iter().find(|z| z.norm() > 1e-14).copied() {
            let phase = first.conj() / first.norm();
            for x in v.iter_mut() {
                *x *= phase;
            }
        }
    }

    let mut out = Tensor::zeros(vec![rows, cols]);
    for (j, col) in cols_data.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            out.data[i * cols + j] = z;
        }
    }
    Ok(out)
}

/// Random `d x d` unitary.
pub fn random_unitary_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Tensor> {
    random_isometry_with(d, d, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};
    use rand::Rng;

    fn random_tensor(shape: &[usize], seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(shape.to_vec(), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn contract_identity_with_vector() {
        let v = Tensor::new(vec![2], vec![C64::new(1.0, 2.0), C64::new(-3.0, 0.5)]).unwrap();
        let out = contract(&Tensor::identity(2), &v, &[(1, 0)]).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn contract_matches_triple_loop() {
        let a = random_tensor(&[3, 4], 1);
        let b = random_tensor(&[4, 2], 2);
        let out = contract(&a, &b, &[(1, 0)]).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let mut s = ZERO;
                for k in 0..4 {
                    s += a.get(&[i, k]) * b.get(&[k, j]);
                }
                assert!((out.get(&[i, j]) - s).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn contract_keeps_free_axis_order() {
        let a = random_tensor(&[2, 3, 4], 3);
        let b = random_tensor(&[5, 3], 4);
        let out = contract(&a, &b, &[(1, 1)]).unwrap();
        assert_eq!(out.shape(), &[2, 4, 5]);
        let mut s = ZERO;
        for k in 0..3 {
            s += a.get(&[1, k, 2]) * b.get(&[4, k]);
        }
        assert!((out.get(&[1, 2, 4]) - s).norm() < 1e-14);
    }

    #[test]
    fn contract_errors() {
        let a = random_tensor(&[2, 3], 0);
        let b = random_tensor(&[2, 2], 0);
        assert!(matches!(contract(&a, &b, &[(1, 0)]), Err(MeraError::Shape(_))));
        assert!(matches!(
            contract(&a, &b, &[(0, 0), (0, 1)]),
            Err(MeraError::Argument(_))
        ));
    }

    #[test]
    fn disentangler_contracts_to_identity() {
        let u = random_isometry(4, 4, 11).unwrap().reshape(vec![2, 2, 2, 2]).unwrap();
        let gram = contract(&u.conj(), &u, &[(0, 0), (1, 1)]).unwrap();
        let gram = gram.reshape(vec![4, 4]).unwrap();
        assert!(gram.max_abs_diff(&Tensor::identity(4)) < 1e-12);
        let gram2 = contract(&u.conj(), &u, &[(2, 2), (3, 3)]).unwrap();
        let gram2 = gram2.reshape(vec![4, 4]).unwrap();
        assert!(gram2.max_abs_diff(&Tensor::identity(4)) < 1e-12);
    }

    #[test]
    fn permute_identity_and_transpose() {
        let a = random_tensor(&[2, 3], 5);
        assert_eq!(permute_axes(&a, &[0, 1]).unwrap(), a);
        let t = permute_axes(&a, &[1, 0]).unwrap();
        assert_eq!(t.shape(), &[3, 2]);
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(t.get(&[j, i]), a.get(&[i, j]));
            }
        }
        assert!(permute_axes(&a, &[0, 0]).is_err());
        assert!(permute_axes(&a, &[0]).is_err());
    }

    #[test]
    fn group_isometry_into_matrix() {
        let w = random_isometry(4, 2, 3).unwrap().reshape(vec![2, 2, 2]).unwrap();
        let m = group_axes(&w, &[vec![0, 1], vec![2]]).unwrap();
        assert_eq!(m.shape(), &[4, 2]);
        assert_eq!(m.data(), w.data());
        assert!(m.isometry_defect().unwrap() < 1e-12);

        let flat = group_axes(&w, &[vec![0, 1, 2]]).unwrap();
        assert_eq!(flat.shape(), &[8]);

        let back = flat.reshape(w.shape().to_vec()).unwrap();
        assert_eq!(back, w);
        assert!(group_axes(&w, &[vec![0], vec![2]]).is_err());
    }

    #[test]
    fn isometries_are_orthonormal_and_deterministic() {
        let w = random_isometry(4, 2, 99).unwrap();
        assert!(w.isometry_defect().unwrap() < 1e-12);
        let u = random_isometry(4, 4, 7).unwrap();
        assert!(u.isometry_defect().unwrap() < 1e-12);
        assert!(u.dagger().unwrap().isometry_defect().unwrap() < 1e-12);
        assert_eq!(random_isometry(4, 4, 7).unwrap(), u);
        assert!(random_isometry(2, 4, 0).is_err());
        // phase convention
        for j in 0..2 {
            let first = (0..4).map(|i| w.get(&[i, j])).find(|z| z.norm() > 1e-14).unwrap();
            assert!(first.im.abs() < 1e-15 && first.re > 0.0);
        }
    }

    proptest! {
        #[test]
        fn permute_round_trip(seed in any::<u64>(), perm_seed in any::<u64>()) {
            let a = random_tensor(&[2, 3, 2, 4], seed);
            let mut order: Vec<usize> = (0..4).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
            for i in (1..4).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            let mut inverse = vec![0; 4];
            for (i, &o) in order.iter().enumerate() {
                inverse[o] = i;
            }
            let back = permute_axes(&permute_axes(&a, &order).unwrap(), &inverse).unwrap();
            prop_assert_eq!(back, a);
        }

        #[test]
        fn contract_is_bilinear(seed in any::<u64>(), re in -2.0..2.0f64, im in -2.0..2.0f64) {
            let alpha = C64::new(re, im);
            let a = random_tensor(&[3, 2, 2], seed);
            let b = random_tensor(&[3, 2, 2], seed.wrapping_add(1));
            let c = random_tensor(&[2, 4, 2], seed.wrapping_add(2));
            let pairs = [(1, 0), (2, 2)];
            let lhs = contract(&a.scale(alpha).add(&b).unwrap(), &c, &pairs).unwrap();
            let rhs = contract(&a, &c, &pairs).unwrap().scale(alpha)
                .add(&contract(&b, &c, &pairs).unwrap()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn generated_isometries_meet_tolerance(seed in any::<u64>(), cols in 1usize..6, extra in 0usize..6) {
            let w = random_isometry(cols + extra, cols, seed).unwrap();
            prop_assert!(w.isometry_defect().unwrap() <= 1e-12);
        }
    }
}
