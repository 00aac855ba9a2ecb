//! JSON document format (version 1).
//!
//! ```text
//! { "version": 1, "n_sites": 8, "site_dim": 2, "mode": "generic",
//!   "layers": [ { "n_wires_in": 8, "chi_in": 2, "chi_out": 2, "shared": false,
//!                 "disentanglers": [T, ..], "isometries": [T, ..] }, .. ],
//!   "top": T }
//! T = { "shape": [..], "data": [[re, im], ..] }   (row-major)
//! ```
//!
//! Shared layers store single-element tensor arrays. Networks built with
//! parent unitaries additionally carry `isometry_parents` per layer and a
//! `top_parent`.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{exact_log2, Disentangler, Isometry, Mera, MeraLayer, Sharing, TopTensor};
use crate::error::{MeraError, Result};
use crate::tensor::{Tensor, C64};
use crate::tol;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TensorDoc {
    pub shape: Vec<usize>,
    pub data: Vec<[f64; 2]>,
}

impl From<&Tensor> for TensorDoc {
    fn from(t: &Tensor) -> Self {
        TensorDoc {
            shape: t.shape().to_vec(),
            data: t.data().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TensorDoc {
    fn to_tensor(&self, path: &str) -> Result<Tensor> {
        let data = self.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        Tensor::new(self.shape.clone(), data).map_err(|e| MeraError::load(path, e.to_string()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LayerDoc {
    pub n_wires_in: usize,
    pub chi_in: usize,
    pub chi_out: usize,
    pub shared: bool,
    pub disentanglers: Vec<TensorDoc>,
    pub isometries: Vec<TensorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isometry_parents: Option<Vec<TensorDoc>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeraDoc {
    pub version: u32,
    pub n_sites: usize,
    pub site_dim: usize,
    pub mode: String,
    pub layers: Vec<LayerDoc>,
    pub top: TensorDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_parent: Option<TensorDoc>,
}

impl Mera {
    pub fn to_doc(&self) -> MeraDoc {
        let layers = self
            .layers
            .iter()
            .map(|l| LayerDoc {
                n_wires_in: l.n_wires_in,
                chi_in: l.chi_in,
                chi_out: l.chi_out,
                shared: l.shared,
                disentanglers: l.disentanglers.iter().map(|u| u.tensor().into()).collect(),
                isometries: l.isometries.iter().map(|w| w.tensor().into()).collect(),
                isometry_parents: l
                    .isometry_parents
                    .as_ref()
                    .map(|ps| ps.iter().map(|p| (&**p).into()).collect()),
            })
            .collect();
        MeraDoc {
            version: FORMAT_VERSION,
            n_sites: self.n_sites,
            site_dim: self.site_dim,
            mode: self.sharing.name().to_string(),
            layers,
            top: self.top.tensor().into(),
            top_parent: self.top_parent.as_ref().map(|p| (&**p).into()),
        }
    }

    /// Rebuilds a network from a document, re-validating every tensor at
    /// the load tolerance.
    pub fn from_doc(doc: &MeraDoc) -> Result<Mera> {
        if doc.version != FORMAT_VERSION {
            return Err(MeraError::load(
                "version",
                format!("unsupported version {} (expected {FORMAT_VERSION})", doc.version),
            ));
        }
        let sharing = Sharing::from_name(&doc.mode)
            .ok_or_else(|| MeraError::load("mode", format!("unknown mode '{}'", doc.mode)))?;
        let k = exact_log2(doc.n_sites)
            .filter(|&k| k >= 2)
            .ok_or_else(|| MeraError::load("n_sites", format!("{} is not 2^k with k >= 2", doc.n_sites)))?;
        let n_layers = k - 1;
        if doc.layers.len() != n_layers {
            let idx = doc.layers.len().min(n_layers);
            return Err(MeraError::load(
                format!("layers[{idx}]"),
                format!(
                    "n_sites = {} requires {n_layers} layers, document has {}",
                    doc.n_sites,
                    doc.layers.len()
                ),
            ));
        }
        let mut layers = Vec::with_capacity(n_layers);
        let mut wires = doc.n_sites;
        let mut chi = doc.site_dim;
        for (t, ld) in doc.layers.iter().enumerate() {
            let here = format!("layers[{t}]");
            if ld.n_wires_in != wires {
                return Err(MeraError::load(
                    format!("{here}.n_wires_in"),
                    format!("expected {wires}, found {}", ld.n_wires_in),
                ));
            }
            if ld.chi_in != chi {
                return Err(MeraError::load(
                    format!("{here}.chi_in"),
                    format!("expected {chi}, found {}", ld.chi_in),
                ));
            }
            let expected = if ld.shared { 1 } else { wires / 2 };
            for (field, len) in [
                ("disentanglers", ld.disentanglers.len()),
                ("isometries", ld.isometries.len()),
            ] {
                if len != expected {
                    return Err(MeraError::load(
                        format!("{here}.{field}"),
                        format!("expected {expected} tensors, found {len}"),
                    ));
                }
            }
            let dis = ld
                .disentanglers
                .iter()
                .enumerate()
                .map(|(j, d)| {
                    let path = format!("{here}.disentanglers[{j}]");
                    check_shape(&path, &d.shape, &[ld.chi_in; 4])?;
                    let u = Disentangler::new(d.to_tensor(&path)?)
                        .map_err(|e| MeraError::load(&path, e.to_string()))?;
                    check_violation(&path, u.violation())?;
                    Ok(Arc::new(u))
                })
                .collect::<Result<Vec<_>>>()?;
            let isos = ld
                .isometries
                .iter()
                .enumerate()
                .map(|(j, d)| {
                    let path = format!("{here}.isometries[{j}]");
                    check_shape(&path, &d.shape, &[ld.chi_in, ld.chi_in, ld.chi_out])?;
                    let w = Isometry::new(d.to_tensor(&path)?)
                        .map_err(|e| MeraError::load(&path, e.to_string()))?;
                    check_violation(&path, w.violation())?;
                    Ok(Arc::new(w))
                })
                .collect::<Result<Vec<_>>>()?;
            let parents = match &ld.isometry_parents {
                None => None,
                Some(ps) => {
                    if ps.len() != isos.len() {
                        return Err(MeraError::load(
                            format!("{here}.isometry_parents"),
                            format!("expected {} tensors, found {}", isos.len(), ps.len()),
                        ));
                    }
                    let parents = ps
                        .iter()
                        .enumerate()
                        .map(|(j, d)| {
                            let path = format!("{here}.isometry_parents[{j}]");
                            let p = d.to_tensor(&path)?;
                            check_violation(&path, super::parent_violation(&p, Some(isos[j].tensor())))?;
                            Ok(Arc::new(p))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Some(parents)
                }
            };
            let layer = MeraLayer::new(wires, dis, isos, parents)
                .map_err(|e| MeraError::load(&here, e.to_string()))?;
            layers.push(layer);
            wires /= 2;
            chi = ld.chi_out;
        }
        check_shape("top", &doc.top.shape, &[chi, chi])?;
        let top = TopTensor::new(doc.top.to_tensor("top")?)?;
        check_violation("top", top.violation())?;
        let top_parent = match &doc.top_parent {
            None => None,
            Some(d) => {
                check_shape("top_parent", &d.shape, &[chi; 4])?;
                let p = d.to_tensor("top_parent")?;
                check_violation("top_parent", super::parent_violation(&p, Some(top.tensor())))?;
                Some(p)
            }
        };
        if sharing == Sharing::ScaleInvariant {
            for (t, ld) in doc.layers.iter().enumerate().skip(1) {
                if ld.disentanglers != doc.layers[0].disentanglers
                    || ld.isometries != doc.layers[0].isometries
                {
                    return Err(MeraError::load(
                        format!("layers[{t}]"),
                        "scale_invariant document stores tensors that differ from layers[0]",
                    ));
                }
            }
        }
        Mera::new(doc.n_sites, layers, top, top_parent, sharing)
            .map_err(|e| MeraError::load("layers", e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Mera> {
        let doc: MeraDoc =
            serde_json::from_str(text).map_err(|e| MeraError::load("$", e.to_string()))?;
        Mera::from_doc(&doc)
    }
}

fn check_shape(path: &str, found: &[usize], expected: &[usize]) -> Result<()> {
    if found != expected {
        return Err(MeraError::load(
            format!("{path}.shape"),
            format!("expected {expected:?}, found {found:?}"),
        ));
    }
    Ok(())
}

fn check_violation(path: &str, violation: f64) -> Result<()> {
    if violation.is_nan() || violation > tol::LOAD_CONSTRAINT {
        return Err(MeraError::load(
            path,
            format!(
                "constraint violated by {violation:.3e} (tolerance {:.0e})",
                tol::LOAD_CONSTRAINT
            ),
        ));
    }
    Ok(())
}

pub fn write_mera(m: &Mera, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, m.to_json()?)?;
    Ok(())
}

pub fn read_mera(path: impl AsRef<Path>) -> Result<Mera> {
    Mera::from_json(&std::fs::read_to_string(path)?)
}
