//! Density matrices on tensor products of site spaces.

use nalgebra::DMatrix;

use crate::error::{MeraError, Result};
use crate::tensor::{permute_unchecked, Tensor, C64, ZERO};
use crate::tol;

/// Hermitian, positive semidefinite, unit-trace matrix on `dims[0] ⊗ dims[1] ⊗ ...`.
///
/// The matrix is stored row-major with subsystem 0 as the slowest-varying
/// index, which makes its buffer identical to a tensor with axes
/// `(ket_0, .., ket_{k-1}, bra_0, .., bra_{k-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: Tensor,
}

impl DensityMatrix {
    /// Checks hermiticity, unit trace and positivity at the crate tolerances.
    pub fn new(dims: Vec<usize>, matrix: Tensor) -> Result<Self> {
        let rho = Self::from_parts(dims, matrix)?;
        rho.check()?;
        Ok(rho)
    }

    /// Shape checks only.
    pub(crate) fn from_parts(dims: Vec<usize>, matrix: Tensor) -> Result<Self> {
        let side: usize = dims.iter().product();
        let matrix = if matrix.rank() == 2 {
            matrix
        } else {
            matrix.reshape(vec![side, side])?
        };
        let (r, c) = matrix.matrix_dims()?;
        if r != side || c != side {
            return Err(MeraError::Shape(format!(
                "density matrix for dims {dims:?} must be {side}x{side}, got {r}x{c}"
            )));
        }
        Ok(DensityMatrix { dims, matrix })
    }

    /// `|psi><psi|`.
    pub fn from_pure(dims: Vec<usize>, amplitudes: &[C64]) -> Result<Self> {
        let side: usize = dims.iter().product();
        if amplitudes.len() != side {
            return Err(MeraError::Shape(format!(
                "state of length {} for dims {dims:?}",
                amplitudes.len()
            )));
        }
        let matrix = Tensor::from_fn(vec![side, side], |ix| amplitudes[ix[0]] * amplitudes[ix[1]].conj());
        DensityMatrix::new(dims, matrix)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let side: usize = dims.iter().product();
        let matrix = Tensor::identity(side).scale(C64::new(1.0 / side as f64, 0.0));
        DensityMatrix { dims, matrix }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    /// Side length of the matrix.
    pub fn dim(&self) -> usize {
        self.matrix.shape()[0]
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    pub fn into_matrix(self) -> Tensor {
        self.matrix
    }

    /// Tensor view with axes `(ket..., bra...)`.
    pub fn as_tensor(&self) -> Tensor {
        let shape = self.dims.iter().chain(&self.dims).copied().collect();
        Tensor::new(shape, self.matrix.data().to_vec()).expect("consistent shape")
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace().expect("square")
    }

    /// `max |rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > tol::HERMITIAN {
            return Err(MeraError::Validation(format!(
                "density matrix not Hermitian: defect {herm:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol::TRACE {
            return Err(MeraError::Validation(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < tol::PSD {
            return Err(MeraError::Validation(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// `tr(rho · op)` for an operator on the same product space.
    pub fn expectation(&self, op: &Tensor) -> Result<C64> {
        let d = self.dim();
        let op_dims = op.matrix_dims()?;
        if op_dims != (d, d) {
            return Err(MeraError::Shape(format!(
                "operator {op_dims:?} on a density matrix of side {d}"
            )));
        }
        let (r, o) = (self.matrix.data(), op.data());
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += r[i * d + j] * o[j * d + i];
            }
        }
        Ok(acc)
    }

    /// Reorders subsystems so that new subsystem `i` is old subsystem
    /// `order[i]`.
    pub fn permute_subsystems(&self, order: &[usize]) -> Result<Self> {
        let k = self.dims.len();
        crate::tensor::check_permutation(order, k)?;
        let axes: Vec<usize> = order.iter().copied().chain(order.iter().map(|o| o + k)).collect();
        let t = permute_unchecked(&self.as_tensor(), &axes);
        let dims = order.iter().map(|&o| self.dims[o]).collect();
        DensityMatrix::from_parts(dims, t)
    }

    pub fn kron(&self, other: &DensityMatrix) -> Self {
        let matrix = self.matrix.kron(&other.matrix).expect("matrices");
        let dims = self.dims.iter().chain(&other.dims).copied().collect();
        DensityMatrix { dims, matrix }
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.dims != other.dims {
            return f64::INFINITY;
        }
        self.matrix.max_abs_diff(&other.matrix)
    }
}

pub(crate) fn hermiticity_defect(m: &Tensor) -> f64 {
    let (r, c) = m.matrix_dims().expect("matrix");
    assert_eq!(r, c);
    let d = m.data();
    let mut worst: f64 = 0.0;
    for i in 0..r {
        for j in i..r {
            worst = worst.max((d[i * r + j] - d[j * r + i].conj()).norm());
        }
    }
    worst
}

pub(crate) fn to_nalgebra(m: &Tensor) -> DMatrix<C64> {
    let (r, c) = m.matrix_dims().expect("matrix");
    DMatrix::from_row_slice(r, c, m.data())
}

/// Eigenvalues of `(M + M^dagger)/2`, ascending.
pub(crate) fn hermitian_eigenvalues(m: &Tensor) -> Vec<f64> {
    let a = to_nalgebra(m);
    let h = (&a + a.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Traces out every subsystem not listed in `keep`.
///
/// Kept subsystems appear in their original order regardless of the order of
/// `keep`. An empty `keep` yields the 1x1 matrix holding the trace.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let k = rho.dims.len();
    let mut kept = vec![false; k];
    for &s in keep {
        if s >= k {
            return Err(MeraError::Argument(format!(
                "subsystem {s} out of range for {k} subsystems"
            )));
        }
        kept[s] = true;
    }
    let keep_ix: Vec<usize> = (0..k).filter(|&i| kept[i]).collect();
    let trace_ix: Vec<usize> = (0..k).filter(|&i| !kept[i]).collect();
    if trace_ix.is_empty() {
        return Ok(rho.clone());
    }
    let dk: usize = keep_ix.iter().map(|&i| rho.dims[i]).product();
    let dt: usize = trace_ix.iter().map(|&i| rho.dims[i]).product();
    let axes: Vec<usize> = keep_ix
        .iter()
        .chain(&trace_ix)
        .copied()
        .chain(keep_ix.iter().chain(&trace_ix).map(|i| i + k))
        .collect();
    let t = permute_unchecked(&rho.as_tensor(), &axes);
    let src = t.data();
    let side = dk * dt;
    let mut out = vec![ZERO; dk * dk];
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = ZERO;
            for x in 0..dt {
                acc += src[(i * dt + x) * side + j * dt + x];
            }
            out[i * dk + j] = acc;
        }
    }
    let dims = keep_ix.iter().map(|&i| rho.dims[i]).collect();
    DensityMatrix::from_parts(dims, Tensor::new(vec![dk, dk], out)?)
}

/// Von Neumann entropy in bits.
///
/// Eigenvalues are clamped to `[0, 1]` before the logarithm; an eigenvalue
/// below `-1e-10` or a non-Hermitian input is rejected.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let herm = rho.hermiticity_defect();
    if herm > tol::HERMITIAN {
        return Err(MeraError::Validation(format!(
            "entropy of a non-Hermitian matrix (defect {herm:.3e})"
        )));
    }
    let ev = rho.eigenvalues();
    if let Some(&min) = ev.first() {
        if min < tol::PSD {
            return Err(MeraError::Validation(format!(
                "entropy of a matrix with eigenvalue {min:.3e}"
            )));
        }
    }
    Ok(ev
        .iter()
        .map(|&l| l.clamp(0.0, 1.0))
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.log2())
        .sum())
}
