//! Local operators and a few named one-site matrices.

use rand::Rng;
use serde::Serialize;

use crate::density::hermiticity_defect;
use crate::error::{MeraError, Result};
use crate::tensor::{Tensor, C64, ONE, ZERO};
use crate::tol;

/// An operator on a few wires at one coarse-graining level.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    /// Coarse-graining level (0 = lattice sites).
    pub level: usize,
    /// Wire indices at that level; subsystem `i` of `matrix` acts on
    /// `support[i]`.
    pub support: Vec<usize>,
    pub matrix: Tensor,
}

impl LocalOperator {
    pub fn new(level: usize, support: Vec<usize>, matrix: Tensor) -> Result<Self> {
        let (r, c) = matrix.matrix_dims()?;
        if r != c {
            return Err(MeraError::Shape(format!("operator must be square, got {r}x{c}")));
        }
        if support.is_empty() {
            return Err(MeraError::Argument("operator with empty support".into()));
        }
        Ok(LocalOperator {
            level,
            support,
            matrix,
        })
    }

    /// Operator on lattice sites.
    pub fn on_sites(support: Vec<usize>, matrix: Tensor) -> Result<Self> {
        LocalOperator::new(0, support, matrix)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= tol::HERMITIAN
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedOperator {
    Identity,
    PauliX,
    PauliY,
    PauliZ,
    /// `|0><0|`.
    Projector0,
}

impl NamedOperator {
    pub const ALL: [NamedOperator; 5] = [
        NamedOperator::Identity,
        NamedOperator::PauliX,
        NamedOperator::PauliY,
        NamedOperator::PauliZ,
        NamedOperator::Projector0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NamedOperator::Identity => "identity",
            NamedOperator::PauliX => "pauli-x",
            NamedOperator::PauliY => "pauli-y",
            NamedOperator::PauliZ => "pauli-z",
            NamedOperator::Projector0 => "projector-0",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.name() == name)
    }

    /// Matrix on a site of dimension `d`. Pauli matrices need `d = 2`.
    pub fn matrix(self, d: usize) -> Result<Tensor> {
        let i = C64::new(0.0, 1.0);
        let pauli = |m: [C64; 4]| {
            if d != 2 {
                Err(MeraError::Argument(format!(
                    "{} is defined for site dimension 2, not {d}",
                    self.name()
                )))
            } else {
                Tensor::new(vec![2, 2], m.to_vec())
            }
        };
        match self {
            NamedOperator::Identity => Ok(Tensor::identity(d)),
            NamedOperator::PauliX => pauli([ZERO, ONE, ONE, ZERO]),
            NamedOperator::PauliY => pauli([ZERO, -i, i, ZERO]),
            NamedOperator::PauliZ => pauli([ONE, ZERO, ZERO, -ONE]),
            NamedOperator::Projector0 => {
                let mut p = Tensor::zeros(vec![d, d]);
                p.set(&[0, 0], ONE);
                Ok(p)
            }
        }
    }
}

/// Random Hermitian `d x d` matrix with entries of order one.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Tensor {
    let mut m = Tensor::zeros(vec![d, d]);
    for i in 0..d {
        m.set(&[i, i], C64::new(rng.random::<f64>() * 2.0 - 1.0, 0.0));
        for j in i + 1..d {
            let z = C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
            m.set(&[i, j], z);
            m.set(&[j, i], z.conj());
        }
    }
    m
}

/// `A - tr(A)/d · I`.
pub fn traceless_part(a: &Tensor) -> Result<Tensor> {
    let (d, _) = a.matrix_dims()?;
    let shift = a.trace()? / d as f64;
    a.sub(&Tensor::identity(d).scale(shift))
}
