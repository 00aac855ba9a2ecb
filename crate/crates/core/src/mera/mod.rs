//! The layered network for 1D binary coarse-graining.
//!
//! Layer `τ` acts on `N / 2^τ` wires of dimension `chi_in` and produces half
//! as many wires of dimension `chi_out`. The last layer leaves two wires,
//! which are closed by the top tensor. Reading the network from the top down
//! reproduces the quantum circuit that prepares the lattice state; reading it
//! bottom up is one step of entanglement renormalization per layer.
//!
//! Tensor axis orders:
//!
//! | tensor         | axes                        | dims                      |
//! |----------------|-----------------------------|---------------------------|
//! | [`Disentangler`] | `(out1, out2, in1, in2)`  | `(χ, χ, χ, χ)`            |
//! | [`Isometry`]   | `(out1, out2, in)`          | `(χ_fine, χ_fine, χ_coarse)` |
//! | [`TopTensor`]  | `(out1, out2)`              | `(χ_top, χ_top)`          |
//! | isometry parent | `(out1, out2, in, ancilla)` | `(χ_fine, χ_fine, χ_coarse, χ_fine²/χ_coarse)` |
//! | top parent     | `(out1, out2, in1, in2)`    | `(χ_top, χ_top, χ_top, χ_top)` |
//!
//! "out" points toward the lattice sites.

mod builder;
mod io;
pub mod wiring;

use std::collections::HashSet;
use std::sync::Arc;

use serde::Serialize;

pub use builder::{
    build_random, BondDims, BuildMode, BuildModeRegistry, BuildParams, GenericMode, ProductMode,
    ScaleInvariantMode, TranslationInvariantMode,
};
pub use io::{read_mera, write_mera, LayerDoc, MeraDoc, TensorDoc, FORMAT_VERSION};

use crate::error::{MeraError, Result};
use crate::tensor::{Tensor, C64};
use crate::tol;

#[derive(Clone, Debug, PartialEq)]
pub struct Disentangler(Tensor);

impl Disentangler {
    pub fn new(tensor: Tensor) -> Result<Self> {
        match tensor.shape() {
            [a, b, c, d] if a == b && b == c && c == d => Ok(Disentangler(tensor)),
            s => Err(MeraError::Shape(format!("disentangler must be χ×χ×χ×χ, got {s:?}"))),
        }
    }

    pub fn from_matrix(chi: usize, matrix: Tensor) -> Result<Self> {
        Disentangler::new(matrix.reshape(vec![chi; 4])?)
    }

    pub fn chi(&self) -> usize {
        self.0.shape()[0]
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    /// `χ² x χ²` matrix, rows `(out1, out2)`, columns `(in1, in2)`.
    pub fn matrix(&self) -> Tensor {
        let d = self.chi() * self.chi();
        self.0.clone().reshape(vec![d, d]).expect("square")
    }

    /// Worst violation of `u† u = I` and `u u† = I`.
    pub fn violation(&self) -> f64 {
        let m = self.matrix();
        let a = m.isometry_defect().expect("matrix");
        let b = m.dagger().expect("matrix").isometry_defect().expect("matrix");
        a.max(b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Isometry(Tensor);

impl Isometry {
    pub fn new(tensor: Tensor) -> Result<Self> {
        match tensor.shape() {
            [a, b, c] if a == b && *c <= a * b => Ok(Isometry(tensor)),
            s => Err(MeraError::Shape(format!(
                "isometry must be χ_fine×χ_fine×χ_coarse with χ_coarse <= χ_fine², got {s:?}"
            ))),
        }
    }

    pub fn chi_fine(&self) -> usize {
        self.0.shape()[0]
    }

    pub fn chi_coarse(&self) -> usize {
        self.0.shape()[2]
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    /// `χ_fine² x χ_coarse` matrix.
    pub fn matrix(&self) -> Tensor {
        let f = self.chi_fine();
        self.0
            .clone()
            .reshape(vec![f * f, self.chi_coarse()])
            .expect("shape")
    }

    pub fn violation(&self) -> f64 {
        self.matrix().isometry_defect().expect("matrix")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopTensor(Tensor);

impl TopTensor {
    pub fn new(tensor: Tensor) -> Result<Self> {
        match tensor.shape() {
            [a, b] if a == b => Ok(TopTensor(tensor)),
            s => Err(MeraError::Shape(format!("top tensor must be χ×χ, got {s:?}"))),
        }
    }

    pub fn chi(&self) -> usize {
        self.0.shape()[0]
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    /// `|Σ |t_μν|² − 1|`.
    pub fn violation(&self) -> f64 {
        (self.0.norm_sqr() - 1.0).abs()
    }
}

/// How the stored tensors are shared between structural slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sharing {
    /// Every slot stores its own tensor.
    Generic,
    /// One disentangler and one isometry per layer.
    TranslationInvariant,
    /// One disentangler and one isometry for the whole network.
    ScaleInvariant,
}

impl Sharing {
    pub fn name(self) -> &'static str {
        match self {
            Sharing::Generic => "generic",
            Sharing::TranslationInvariant => "translation_invariant",
            Sharing::ScaleInvariant => "scale_invariant",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "generic" => Some(Sharing::Generic),
            "translation_invariant" => Some(Sharing::TranslationInvariant),
            "scale_invariant" => Some(Sharing::ScaleInvariant),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MeraLayer {
    n_wires_in: usize,
    chi_in: usize,
    chi_out: usize,
    disentanglers: Vec<Arc<Disentangler>>,
    isometries: Vec<Arc<Isometry>>,
    /// Unitaries `u` with `w = u|0>` on the ancilla input, one per stored
    /// isometry.
    isometry_parents: Option<Vec<Arc<Tensor>>>,
    shared: bool,
}

impl MeraLayer {
    pub fn new(
        n_wires_in: usize,
        disentanglers: Vec<Arc<Disentangler>>,
        isometries: Vec<Arc<Isometry>>,
        isometry_parents: Option<Vec<Arc<Tensor>>>,
    ) -> Result<Self> {
        if n_wires_in < 4 || !n_wires_in.is_multiple_of(2) {
            return Err(MeraError::Structure(format!(
                "layer needs an even wire count >= 4, got {n_wires_in}"
            )));
        }
        let half = n_wires_in / 2;
        let shared = disentanglers.len() == 1 && isometries.len() == 1 && half > 1;
        let expected = if shared { 1 } else { half };
        if disentanglers.len() != expected || isometries.len() != expected {
            return Err(MeraError::Structure(format!(
                "layer with {n_wires_in} wires needs {half} (or 1 shared) disentanglers and isometries, got {} and {}",
                disentanglers.len(),
                isometries.len()
            )));
        }
        let chi_in = disentanglers[0].chi();
        let chi_out = isometries[0].chi_coarse();
        for (j, u) in disentanglers.iter().enumerate() {
            if u.chi() != chi_in {
                return Err(MeraError::Structure(format!(
                    "disentangler {j} has dimension {}, layer uses {chi_in}",
                    u.chi()
                )));
            }
        }
        for (j, w) in isometries.iter().enumerate() {
            if w.chi_fine() != chi_in || w.chi_coarse() != chi_out {
                return Err(MeraError::Structure(format!(
                    "isometry {j} has dims ({}, {}), layer uses ({chi_in}, {chi_out})",
                    w.chi_fine(),
                    w.chi_coarse()
                )));
            }
        }
        if let Some(parents) = &isometry_parents {
            if parents.len() != isometries.len() {
                return Err(MeraError::Structure(format!(
                    "{} isometry parents for {} isometries",
                    parents.len(),
                    isometries.len()
                )));
            }
            let ancilla = chi_in * chi_in / chi_out;
            for (j, p) in parents.iter().enumerate() {
                if p.shape() != [chi_in, chi_in, chi_out, ancilla] || ancilla * chi_out != chi_in * chi_in {
                    return Err(MeraError::Structure(format!(
                        "isometry parent {j} has shape {:?}",
                        p.shape()
                    )));
                }
            }
        }
        Ok(MeraLayer {
            n_wires_in,
            chi_in,
            chi_out,
            disentanglers,
            isometries,
            isometry_parents,
            shared,
        })
    }

    pub fn n_wires_in(&self) -> usize {
        self.n_wires_in
    }

    pub fn n_wires_out(&self) -> usize {
        self.n_wires_in / 2
    }

    pub fn chi_in(&self) -> usize {
        self.chi_in
    }

    pub fn chi_out(&self) -> usize {
        self.chi_out
    }

    pub fn is_shared(&self) -> bool {
        self.shared
    }

    pub fn disentangler(&self, j: usize) -> &Disentangler {
        debug_assert!(j < self.n_wires_in / 2);
        if self.shared {
            &self.disentanglers[0]
        } else {
            &self.disentanglers[j]
        }
    }

    pub fn isometry(&self, j: usize) -> &Isometry {
        debug_assert!(j < self.n_wires_in / 2);
        if self.shared {
            &self.isometries[0]
        } else {
            &self.isometries[j]
        }
    }

    pub fn isometry_parent(&self, j: usize) -> Option<&Tensor> {
        self.isometry_parents
            .as_ref()
            .map(|p| if self.shared { &*p[0] } else { &*p[j] })
    }

    pub fn stored_disentanglers(&self) -> &[Arc<Disentangler>] {
        &self.disentanglers
    }

    pub fn stored_isometries(&self) -> &[Arc<Isometry>] {
        &self.isometries
    }

    pub fn stored_isometry_parents(&self) -> Option<&[Arc<Tensor>]> {
        self.isometry_parents.as_deref()
    }

    /// Copy of this layer with one tensor per slot.
    pub fn materialized(&self) -> MeraLayer {
        let half = self.n_wires_in / 2;
        MeraLayer {
            n_wires_in: self.n_wires_in,
            chi_in: self.chi_in,
            chi_out: self.chi_out,
            disentanglers: (0..half).map(|j| Arc::new(self.disentangler(j).clone())).collect(),
            isometries: (0..half).map(|j| Arc::new(self.isometry(j).clone())).collect(),
            isometry_parents: self
                .isometry_parents
                .as_ref()
                .map(|_| (0..half).map(|j| Arc::new(self.isometry_parent(j).unwrap().clone())).collect()),
            shared: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mera {
    n_sites: usize,
    site_dim: usize,
    layers: Vec<MeraLayer>,
    top: Arc<TopTensor>,
    top_parent: Option<Arc<Tensor>>,
    sharing: Sharing,
}

/// `log2(n)` when `n` is a power of two.
pub(crate) fn exact_log2(n: usize) -> Option<usize> {
    (n.is_power_of_two()).then(|| n.trailing_zeros() as usize)
}

impl Mera {
    pub fn new(
        n_sites: usize,
        layers: Vec<MeraLayer>,
        top: TopTensor,
        top_parent: Option<Tensor>,
        sharing: Sharing,
    ) -> Result<Self> {
        let k = exact_log2(n_sites).filter(|&k| k >= 2).ok_or_else(|| {
            MeraError::Argument(format!("n_sites must be 2^k with k >= 2, got {n_sites}"))
        })?;
        if layers.len() != k - 1 {
            return Err(MeraError::Structure(format!(
                "{n_sites} sites need {} layers, got {}",
                k - 1,
                layers.len()
            )));
        }
        let site_dim = layers[0].chi_in;
        let mut wires = n_sites;
        let mut chi = site_dim;
        for (t, layer) in layers.iter().enumerate() {
            if layer.n_wires_in != wires {
                return Err(MeraError::Structure(format!(
                    "layer {t} takes {} wires, expected {wires}",
                    layer.n_wires_in
                )));
            }
            if layer.chi_in != chi {
                return Err(MeraError::Structure(format!(
                    "layer {t} has chi_in {}, previous layer produces {chi}",
                    layer.chi_in
                )));
            }
            if sharing != Sharing::Generic && !layer.shared && layer.n_wires_in > 2 {
                return Err(MeraError::Structure(format!(
                    "layer {t} is not shared in a {} network",
                    sharing.name()
                )));
            }
            wires /= 2;
            chi = layer.chi_out;
        }
        if top.chi() != chi {
            return Err(MeraError::Structure(format!(
                "top tensor has dimension {}, last layer produces {chi}",
                top.chi()
            )));
        }
        if let Some(p) = &top_parent {
            if p.shape() != [chi; 4] {
                return Err(MeraError::Structure(format!("top parent has shape {:?}", p.shape())));
            }
        }
        let mut layers = layers;
        if sharing == Sharing::ScaleInvariant {
            let (u0, w0) = (&layers[0].disentanglers[0], &layers[0].isometries[0]);
            for (t, layer) in layers.iter().enumerate() {
                if layer.chi_in != site_dim || layer.chi_out != site_dim {
                    return Err(MeraError::Structure(format!(
                        "scale-invariant network needs uniform dimension, layer {t} maps {} -> {}",
                        layer.chi_in, layer.chi_out
                    )));
                }
                if layer.disentanglers[0] != *u0 || layer.isometries[0] != *w0 {
                    return Err(MeraError::Structure(format!(
                        "layer {t} differs from layer 0 in a scale-invariant network"
                    )));
                }
            }
            // make the sharing physical
            let (u0, w0) = (u0.clone(), w0.clone());
            let p0 = layers[0].isometry_parents.as_ref().map(|p| p[0].clone());
            for layer in layers.iter_mut() {
                layer.disentanglers[0] = u0.clone();
                layer.isometries[0] = w0.clone();
                if let (Some(parents), Some(p0)) = (layer.isometry_parents.as_mut(), p0.as_ref()) {
                    parents[0] = p0.clone();
                }
            }
        }
        Ok(Mera {
            n_sites,
            site_dim,
            layers,
            top: Arc::new(top),
            top_parent: top_parent.map(Arc::new),
            sharing,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[MeraLayer] {
        &self.layers
    }

    pub fn layer(&self, t: usize) -> &MeraLayer {
        &self.layers[t]
    }

    pub fn top(&self) -> &TopTensor {
        &self.top
    }

    pub fn top_parent(&self) -> Option<&Tensor> {
        self.top_parent.as_deref()
    }

    pub fn sharing(&self) -> Sharing {
        self.sharing
    }

    pub fn is_scale_invariant(&self) -> bool {
        self.sharing == Sharing::ScaleInvariant
    }

    pub fn has_parents(&self) -> bool {
        self.top_parent.is_some() && self.layers.iter().all(|l| l.isometry_parents.is_some())
    }

    /// Number of wires at coarse-graining level `level` (0 = lattice sites).
    pub fn wires_at(&self, level: usize) -> usize {
        self.n_sites >> level
    }

    /// Wire dimension at `level`.
    pub fn chi_at(&self, level: usize) -> usize {
        if level == 0 {
            self.site_dim
        } else {
            self.layers[level - 1].chi_out
        }
    }

    /// Largest wire dimension anywhere in the network.
    pub fn chi_max(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.chi_out)
            .chain(std::iter::once(self.site_dim))
            .max()
            .unwrap_or(self.site_dim)
    }

    /// Copy with every shared tensor expanded into its own slot.
    pub fn materialized(&self) -> Mera {
        Mera {
            n_sites: self.n_sites,
            site_dim: self.site_dim,
            layers: self.layers.iter().map(MeraLayer::materialized).collect(),
            top: Arc::new((*self.top).clone()),
            top_parent: self.top_parent.as_ref().map(|p| Arc::new((**p).clone())),
            sharing: Sharing::Generic,
        }
    }

    /// Copy with the top tensor replaced. Parents are dropped.
    pub fn with_top(&self, top: TopTensor) -> Result<Mera> {
        if top.chi() != self.top.chi() {
            return Err(MeraError::Shape(format!(
                "top tensor of dimension {} for a network ending in {}",
                top.chi(),
                self.top.chi()
            )));
        }
        let mut m = self.clone();
        m.top = Arc::new(top);
        m.top_parent = None;
        Ok(m)
    }

    /// Copy with the stored disentangler `index` of layer `layer` replaced.
    /// No constraint checks are applied.
    pub fn with_disentangler(&self, layer: usize, index: usize, u: Disentangler) -> Result<Mera> {
        let mut m = self.clone();
        let l = m
            .layers
            .get_mut(layer)
            .ok_or_else(|| MeraError::Argument(format!("no layer {layer}")))?;
        let slot = l
            .disentanglers
            .get_mut(index)
            .ok_or_else(|| MeraError::Argument(format!("no stored disentangler {index}")))?;
        if u.chi() != l.chi_in {
            return Err(MeraError::Shape("disentangler dimension mismatch".into()));
        }
        *slot = Arc::new(u);
        if m.sharing == Sharing::ScaleInvariant {
            m.sharing = Sharing::TranslationInvariant;
        }
        Ok(m)
    }

    /// Checks every stored tensor against its defining constraint.
    pub fn validate(&self) -> ValidationReport {
        let mut entries = Vec::new();
        let mut seen: HashSet<*const ()> = HashSet::new();
        let mut first = |p: *const ()| seen.insert(p);
        for (t, layer) in self.layers.iter().enumerate() {
            for (j, u) in layer.disentanglers.iter().enumerate() {
                if first(Arc::as_ptr(u) as *const ()) {
                    entries.push(SlotCheck {
                        path: format!("layers[{t}].disentanglers[{j}]"),
                        constraint: Constraint::Unitary,
                        violation: u.violation(),
                    });
                }
            }
            for (j, w) in layer.isometries.iter().enumerate() {
                if first(Arc::as_ptr(w) as *const ()) {
                    entries.push(SlotCheck {
                        path: format!("layers[{t}].isometries[{j}]"),
                        constraint: Constraint::Isometric,
                        violation: w.violation(),
                    });
                }
            }
            if let Some(parents) = &layer.isometry_parents {
                for (j, p) in parents.iter().enumerate() {
                    if first(Arc::as_ptr(p) as *const ()) {
                        entries.push(SlotCheck {
                            path: format!("layers[{t}].isometry_parents[{j}]"),
                            constraint: Constraint::Unitary,
                            violation: parent_violation(p, Some(layer.isometries[j].tensor())),
                        });
                    }
                }
            }
        }
        entries.push(SlotCheck {
            path: "top".into(),
            constraint: Constraint::UnitNorm,
            violation: self.top.violation(),
        });
        if let Some(p) = &self.top_parent {
            entries.push(SlotCheck {
                path: "top_parent".into(),
                constraint: Constraint::Unitary,
                violation: parent_violation(p, Some(self.top.tensor())),
            });
        }
        let max_violation = entries.iter().map(|e| e.violation).fold(0.0, f64::max);
        ValidationReport {
            pass: max_violation <= tol::CONSTRAINT,
            max_violation,
            tolerance: tol::CONSTRAINT,
            slots: self.param_count().slots,
            entries,
        }
    }

    pub fn param_count(&self) -> ParamCount {
        let mut seen: HashSet<*const ()> = HashSet::new();
        let mut distinct = 0;
        let mut scalars = 0;
        let mut slots = 1;
        let mut visit = |ptr: *const (), len: usize| {
            if seen.insert(ptr) {
                distinct += 1;
                scalars += len;
            }
        };
        for layer in &self.layers {
            slots += layer.n_wires_in;
            for u in &layer.disentanglers {
                visit(Arc::as_ptr(u) as *const (), u.tensor().len());
            }
            for w in &layer.isometries {
                visit(Arc::as_ptr(w) as *const (), w.tensor().len());
            }
        }
        visit(Arc::as_ptr(&self.top) as *const (), self.top.tensor().len());
        ParamCount {
            slots,
            distinct_tensors: distinct,
            stored_scalars: scalars,
        }
    }
}

/// Parent unitarity defect, and the distance between its `|0>`-ancilla
/// columns and the child tensor when one is given.
fn parent_violation(parent: &Tensor, child: Option<&Tensor>) -> f64 {
    let s = parent.shape();
    let rows = s[0] * s[1];
    let m = parent.clone().reshape(vec![rows, rows]).expect("square parent");
    let mut v = m.isometry_defect().expect("matrix");
    if let Some(child) = child {
        let cols = child.len() / rows;
        let stride = rows / cols;
        let mut worst: f64 = 0.0;
        for r in 0..rows {
            for c in 0..cols {
                let d: C64 = m.data()[r * rows + c * stride] - child.data()[r * cols + c];
                worst = worst.max(d.norm());
            }
        }
        v = v.max(worst);
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `Σ|t|² = 1`.
    UnitNorm,
    /// `w† w = I`.
    Isometric,
    /// `u† u = I` and `u u† = I`.
    Unitary,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlotCheck {
    pub path: String,
    pub constraint: Constraint,
    pub violation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    /// Structural slots covered (shared tensors are checked once).
    pub slots: usize,
    pub entries: Vec<SlotCheck>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ParamCount {
    /// Structural tensor positions, counting shared tensors once per use.
    pub slots: usize,
    pub distinct_tensors: usize,
    /// Complex entries actually stored.
    pub stored_scalars: usize,
}
