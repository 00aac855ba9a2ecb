//! Network builders, one per sharing mode, selected by name at runtime.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{exact_log2, Disentangler, Isometry, Mera, MeraLayer, Sharing, TopTensor};
use crate::error::{MeraError, Result};
use crate::tensor::{random_isometry_with, random_unitary_with, Tensor, ONE};

/// Wire dimensions of a network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BondDims {
    /// Every wire, including the lattice sites, has dimension `χ`.
    Uniform(usize),
    /// Site dimension plus the output dimension of each layer, fine to coarse.
    PerLayer { site_dim: usize, chi_out: Vec<usize> },
}

impl BondDims {
    /// `(site_dim, chi_out per layer)` for a network with `n_layers` layers.
    pub fn resolve(&self, n_layers: usize) -> Result<(usize, Vec<usize>)> {
        let (site_dim, chis) = match self {
            BondDims::Uniform(chi) => (*chi, vec![*chi; n_layers]),
            BondDims::PerLayer { site_dim, chi_out } => (*site_dim, chi_out.clone()),
        };
        if chis.len() != n_layers {
            return Err(MeraError::Argument(format!(
                "{} layer dimensions given for {n_layers} layers",
                chis.len()
            )));
        }
        if site_dim < 2 || chis.iter().any(|&c| c < 2) {
            return Err(MeraError::Argument(format!(
                "wire dimensions must be >= 2 (site {site_dim}, layers {chis:?})"
            )));
        }
        let mut fine = site_dim;
        for (t, &c) in chis.iter().enumerate() {
            if c > fine * fine {
                return Err(MeraError::Argument(format!(
                    "layer {t} cannot map dimension {fine} pairs onto {c} (needs χ_coarse <= χ_fine²)"
                )));
            }
            fine = c;
        }
        Ok((site_dim, chis))
    }

    pub fn is_uniform(&self) -> bool {
        match self {
            BondDims::Uniform(_) => true,
            BondDims::PerLayer { site_dim, chi_out } => chi_out.iter().all(|c| c == site_dim),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BuildParams {
    pub n_sites: usize,
    pub dims: BondDims,
    /// Keep the unitary behind every isometry and the top tensor, which is
    /// needed to feed the circuit with inputs other than `|0>`.
    pub keep_parents: bool,
}

impl BuildParams {
    pub fn new(n_sites: usize, dims: BondDims) -> Self {
        BuildParams {
            n_sites,
            dims,
            keep_parents: false,
        }
    }

    pub fn with_parents(mut self, keep: bool) -> Self {
        self.keep_parents = keep;
        self
    }

    pub(crate) fn n_layers(&self) -> Result<usize> {
        exact_log2(self.n_sites)
            .filter(|&k| k >= 2)
            .map(|k| k - 1)
            .ok_or_else(|| {
                MeraError::Argument(format!(
                    "n_sites must be a power of two >= 4, got {}",
                    self.n_sites
                ))
            })
    }
}

/// A way of filling a network with tensors.
pub trait BuildMode: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn build(&self, params: &BuildParams, rng: &mut ChaCha8Rng) -> Result<Mera>;
}

/// Build modes keyed by name.
pub struct BuildModeRegistry {
    modes: BTreeMap<&'static str, Box<dyn BuildMode>>,
}

impl Default for BuildModeRegistry {
    fn default() -> Self {
        let mut r = BuildModeRegistry::empty();
        r.register(Box::new(GenericMode));
        r.register(Box::new(TranslationInvariantMode));
        r.register(Box::new(ScaleInvariantMode));
        r.register(Box::new(ProductMode));
        r
    }
}

impl BuildModeRegistry {
    pub fn empty() -> Self {
        BuildModeRegistry {
            modes: BTreeMap::new(),
        }
    }

    /// Adds a mode, replacing any previous mode with the same name.
    pub fn register(&mut self, mode: Box<dyn BuildMode>) {
        self.modes.insert(mode.name(), mode);
    }

    pub fn get(&self, name: &str) -> Option<&dyn BuildMode> {
        self.modes.get(name).map(|m| m.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.modes.keys().copied()
    }

    pub fn build(&self, name: &str, params: &BuildParams, seed: u64) -> Result<Mera> {
        let mode = self.get(name).ok_or_else(|| {
            MeraError::Argument(format!(
                "unknown build mode '{name}' (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        mode.build(params, &mut rng)
    }
}

/// Builds a random network with one of the default modes.
pub fn build_random(n_sites: usize, dims: BondDims, seed: u64, mode: &str) -> Result<Mera> {
    BuildModeRegistry::default().build(mode, &BuildParams::new(n_sites, dims), seed)
}

type Drawn = (Arc<Isometry>, Option<Arc<Tensor>>);

fn draw_disentangler(chi: usize, rng: &mut ChaCha8Rng) -> Result<Arc<Disentangler>> {
    let u = random_unitary_with(chi * chi, rng)?;
    Ok(Arc::new(Disentangler::from_matrix(chi, u)?))
}

fn draw_isometry(chi_in: usize, chi_out: usize, parent: bool, rng: &mut ChaCha8Rng) -> Result<Drawn> {
    let rows = chi_in * chi_in;
    if !parent {
        let w = random_isometry_with(rows, chi_out, rng)?;
        return Ok((Arc::new(Isometry::new(w.reshape(vec![chi_in, chi_in, chi_out])?)?), None));
    }
    if !rows.is_multiple_of(chi_out) {
        return Err(MeraError::Capability(format!(
            "parent unitaries need χ_coarse ({chi_out}) to divide χ_fine² ({rows})"
        )));
    }
    let ancilla = rows / chi_out;
    let u = random_unitary_with(rows, rng)?;
    let w = Tensor::from_fn(vec![chi_in, chi_in, chi_out], |ix| {
        u.data()[(ix[0] * chi_in + ix[1]) * rows + ix[2] * ancilla]
    });
    let parent = u.reshape(vec![chi_in, chi_in, chi_out, ancilla])?;
    Ok((Arc::new(Isometry::new(w)?), Some(Arc::new(parent))))
}

fn draw_top(chi: usize, parent: bool, rng: &mut ChaCha8Rng) -> Result<(TopTensor, Option<Tensor>)> {
    if !parent {
        let t = random_isometry_with(chi * chi, 1, rng)?;
        return Ok((TopTensor::new(t.reshape(vec![chi, chi])?)?, None));
    }
    let u = random_unitary_with(chi * chi, rng)?;
    let d = chi * chi;
    let t = Tensor::from_fn(vec![chi, chi], |ix| u.data()[(ix[0] * chi + ix[1]) * d]);
    Ok((TopTensor::new(t)?, Some(u.reshape(vec![chi; 4])?)))
}

fn assemble(
    params: &BuildParams,
    sharing: Sharing,
    rng: &mut ChaCha8Rng,
) -> Result<Mera> {
    let n_layers = params.n_layers()?;
    let (site_dim, chis) = params.dims.resolve(n_layers)?;
    let mut layers = Vec::with_capacity(n_layers);
    let mut fine = site_dim;
    let mut wires = params.n_sites;
    let mut global: Option<(Arc<Disentangler>, Drawn)> = None;
    for &coarse in &chis {
        let stored = match sharing {
            Sharing::Generic => wires / 2,
            _ => 1,
        };
        let (dis, isos) = if let (Sharing::ScaleInvariant, Some((u, w))) = (sharing, &global) {
            (vec![u.clone()], vec![w.clone()])
        } else {
            let dis = (0..stored)
                .map(|_| draw_disentangler(fine, rng))
                .collect::<Result<Vec<_>>>()?;
            let isos = (0..stored)
                .map(|_| draw_isometry(fine, coarse, params.keep_parents, rng))
                .collect::<Result<Vec<_>>>()?;
            if sharing == Sharing::ScaleInvariant {
                global = Some((dis[0].clone(), isos[0].clone()));
            }
            (dis, isos)
        };
        let (ws, parents): (Vec<_>, Vec<_>) = isos.into_iter().unzip();
        let parents = params
            .keep_parents
            .then(|| parents.into_iter().map(|p| p.expect("drawn with parent")).collect());
        layers.push(MeraLayer::new(wires, dis, ws, parents)?);
        fine = coarse;
        wires /= 2;
    }
    let (top, top_parent) = draw_top(fine, params.keep_parents, rng)?;
    Mera::new(params.n_sites, layers, top, top_parent, sharing)
}

/// Every tensor drawn independently.
pub struct GenericMode;

impl BuildMode for GenericMode {
    fn name(&self) -> &'static str {
        "generic"
    }

    fn description(&self) -> &'static str {
        "independent random tensor in every slot"
    }

    fn build(&self, params: &BuildParams, rng: &mut ChaCha8Rng) -> Result<Mera> {
        assemble(params, Sharing::Generic, rng)
    }
}

/// One random disentangler and isometry per layer.
pub struct TranslationInvariantMode;

impl BuildMode for TranslationInvariantMode {
    fn name(&self) -> &'static str {
        "translation_invariant"
    }

    fn description(&self) -> &'static str {
        "one random disentangler and isometry shared within each layer"
    }

    fn build(&self, params: &BuildParams, rng: &mut ChaCha8Rng) -> Result<Mera> {
        assemble(params, Sharing::TranslationInvariant, rng)
    }
}

/// One random disentangler and isometry for every layer.
pub struct ScaleInvariantMode;

impl BuildMode for ScaleInvariantMode {
    fn name(&self) -> &'static str {
        "scale_invariant"
    }

    fn description(&self) -> &'static str {
        "one random disentangler and isometry shared by all layers"
    }

    fn build(&self, params: &BuildParams, rng: &mut ChaCha8Rng) -> Result<Mera> {
        if !params.dims.is_uniform() {
            return Err(MeraError::Argument(
                "scale-invariant networks need a uniform wire dimension".into(),
            ));
        }
        assemble(params, Sharing::ScaleInvariant, rng)
    }
}

/// Identity disentanglers and `|α> -> |α>|0>` isometries: the network
/// prepares the basis state `|0...0>`. Deterministic.
pub struct ProductMode;

impl BuildMode for ProductMode {
    fn name(&self) -> &'static str {
        "product"
    }

    fn description(&self) -> &'static str {
        "unentangled |0...0> state built from identity-like tensors"
    }

    fn build(&self, params: &BuildParams, _rng: &mut ChaCha8Rng) -> Result<Mera> {
        let n_layers = params.n_layers()?;
        let (site_dim, chis) = params.dims.resolve(n_layers)?;
        let mut layers = Vec::with_capacity(n_layers);
        let mut fine = site_dim;
        let mut wires = params.n_sites;
        for &coarse in &chis {
            if coarse > fine {
                return Err(MeraError::Argument(format!(
                    "product network cannot embed dimension {coarse} into {fine}"
                )));
            }
            let u = Disentangler::from_matrix(fine, Tensor::identity(fine * fine))?;
            let w = Tensor::from_fn(vec![fine, fine, coarse], |ix| {
                if ix[0] == ix[2] && ix[1] == 0 {
                    ONE
                } else {
                    Default::default()
                }
            });
            let parents = if params.keep_parents {
                if coarse != fine {
                    return Err(MeraError::Capability(
                        "product parents need uniform dimensions".into(),
                    ));
                }
                Some(vec![Arc::new(
                    Tensor::identity(fine * fine).reshape(vec![fine; 4])?,
                )])
            } else {
                None
            };
            layers.push(MeraLayer::new(
                wires,
                vec![Arc::new(u)],
                vec![Arc::new(Isometry::new(w)?)],
                parents,
            )?);
            fine = coarse;
            wires /= 2;
        }
        let mut t = Tensor::zeros(vec![fine, fine]);
        t.set(&[0, 0], ONE);
        let top_parent = params
            .keep_parents
            .then(|| Tensor::identity(fine * fine).reshape(vec![fine; 4]))
            .transpose()?;
        let sharing = if params.dims.is_uniform() {
            Sharing::ScaleInvariant
        } else {
            Sharing::TranslationInvariant
        };
        Mera::new(params.n_sites, layers, TopTensor::new(t)?, top_parent, sharing)
    }
}
