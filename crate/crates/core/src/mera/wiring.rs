//! Gate placement inside one binary layer on a periodic ring.
//!
//! With `n` fine wires, disentangler `j` acts on wires `(2j+1, 2j+2 mod n)`
//! and isometry `j` fuses wires `(2j, 2j+1)` into coarse wire `j`. In the
//! direction of the circuit (coarse to fine) the isometries act first and
//! the disentanglers second, so the disentanglers straddle the boundaries
//! between isometry pairs.

use serde::Serialize;

use crate::error::{MeraError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Disentangler,
    Isometry,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GatePlacement {
    pub layer: usize,
    pub kind: GateKind,
    pub index: usize,
    /// Fine wires the gate touches, in axis order `(out1, out2)`.
    pub fine: [usize; 2],
    /// Coarse wire produced by an isometry.
    pub coarse: Option<usize>,
}

/// Fine wires `(in1, in2)` of disentangler `j` on a ring of `n` wires.
#[inline]
pub fn disentangler_wires(j: usize, n: usize) -> [usize; 2] {
    [2 * j + 1, (2 * j + 2) % n]
}

/// Index of the disentangler touching fine wire `w`.
#[inline]
pub fn disentangler_of(w: usize, n: usize) -> usize {
    if w % 2 == 1 {
        (w - 1) / 2
    } else {
        (w / 2 + n / 2 - 1) % (n / 2)
    }
}

/// Fine wires `(out1, out2)` of isometry `j`.
#[inline]
pub fn isometry_wires(j: usize) -> [usize; 2] {
    [2 * j, 2 * j + 1]
}

#[inline]
pub fn isometry_of(w: usize) -> usize {
    w / 2
}

/// Every gate of one layer, disentanglers first.
pub fn wiring(layer_index: usize, n_wires: usize) -> Result<Vec<GatePlacement>> {
    if !n_wires.is_multiple_of(2) || n_wires < 4 {
        return Err(MeraError::Structure(format!(
            "a binary layer needs an even number of wires >= 4, got {n_wires}"
        )));
    }
    let half = n_wires / 2;
    let dis = (0..half).map(|j| GatePlacement {
        layer: layer_index,
        kind: GateKind::Disentangler,
        index: j,
        fine: disentangler_wires(j, n_wires),
        coarse: None,
    });
    let iso = (0..half).map(|j| GatePlacement {
        layer: layer_index,
        kind: GateKind::Isometry,
        index: j,
        fine: isometry_wires(j),
        coarse: Some(j),
    });
    Ok(dis.chain(iso).collect())
}
