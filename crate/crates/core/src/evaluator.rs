//! Reduced-density-matrix backends behind one interface, selected by name.

use std::collections::BTreeMap;

use crate::cone::{level_rdm, RdmOptions};
use crate::density::DensityMatrix;
use crate::error::{MeraError, Result};
use crate::mera::Mera;
use crate::operators::LocalOperator;
use crate::oracle::{full_state, oracle_rdm, StateVector};
use crate::tensor::{Tensor, C64};

/// A backend that turns a network into a source of lattice density
/// matrices.
pub trait RdmBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn prepare<'a>(&self, m: &'a Mera) -> Result<Box<dyn RdmSource + 'a>>;
}

pub trait RdmSource {
    /// Density matrix of `sites`, subsystems in the listed order.
    fn rdm(&self, sites: &[usize]) -> Result<DensityMatrix>;

    fn expectation(&self, op: &LocalOperator) -> Result<C64> {
        if op.level != 0 {
            return Err(MeraError::Argument("lattice backends evaluate level-0 operators".into()));
        }
        self.rdm(&op.support)?.expectation(&op.matrix)
    }

    fn correlator(&self, a: &Tensor, b: &Tensor, s1: usize, s2: usize) -> Result<C64> {
        if s1 == s2 {
            return Err(MeraError::Argument("correlator needs two distinct sites".into()));
        }
        self.rdm(&[s1, s2])?.expectation(&a.kron(b)?)
    }
}

/// Causal-cone contraction.
pub struct ConeBackend {
    pub opts: RdmOptions,
}

struct ConeSource<'a> {
    m: &'a Mera,
    opts: RdmOptions,
}

impl RdmSource for ConeSource<'_> {
    fn rdm(&self, sites: &[usize]) -> Result<DensityMatrix> {
        level_rdm(self.m, 0, sites, self.opts)
    }
}

impl RdmBackend for ConeBackend {
    fn name(&self) -> &'static str {
        "cone"
    }

    fn description(&self) -> &'static str {
        "exact causal-cone contraction, cost logarithmic in the lattice size"
    }

    fn prepare<'a>(&self, m: &'a Mera) -> Result<Box<dyn RdmSource + 'a>> {
        Ok(Box::new(ConeSource { m, opts: self.opts }))
    }
}

/// Full state vector; small lattices only.
pub struct OracleBackend;

struct OracleSource {
    psi: StateVector,
}

impl RdmSource for OracleSource {
    fn rdm(&self, sites: &[usize]) -> Result<DensityMatrix> {
        oracle_rdm(&self.psi, sites)
    }
}

impl RdmBackend for OracleBackend {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn description(&self) -> &'static str {
        "brute-force state vector (at most 2^20 amplitudes)"
    }

    fn prepare<'a>(&self, m: &'a Mera) -> Result<Box<dyn RdmSource + 'a>> {
        Ok(Box::new(OracleSource {
            psi: full_state(m, None)?,
        }))
    }
}

pub struct BackendRegistry {
    backends: BTreeMap<&'static str, Box<dyn RdmBackend>>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut r = BackendRegistry::empty();
        r.register(Box::new(ConeBackend {
            opts: RdmOptions::default(),
        }));
        r.register(Box::new(OracleBackend));
        r
    }
}

impl BackendRegistry {
    pub fn empty() -> Self {
        BackendRegistry {
            backends: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, backend: Box<dyn RdmBackend>) {
        self.backends.insert(backend.name(), backend);
    }

    pub fn get(&self, name: &str) -> Result<&dyn RdmBackend> {
        self.backends.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            MeraError::Argument(format!(
                "unknown backend {name:?}; available: {}",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.backends.keys().copied()
    }
}
