use serde::{Deserialize, Serialize};

use super::{cartesian_to_l1, wigner_d, Irrep, IrrepsLayout, LayoutEntry, Rotation};
use crate::{Error, Result};

/// Feature vector decomposed into irrep blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteerableTensor {
    layout: IrrepsLayout,
    coefficients: Vec<f64>,
}

impl SteerableTensor {
    pub fn new(layout: IrrepsLayout, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != layout.total_dim() {
            return Err(Error::ShapeMismatch(format!(
                "layout {layout} needs {} coefficients, got {}",
                layout.total_dim(),
                coefficients.len()
            )));
        }
        Ok(Self {
            layout,
            coefficients,
        })
    }

    pub fn zeros(layout: IrrepsLayout) -> Self {
        let n = layout.total_dim();
        Self {
            layout,
            coefficients: vec![0.0; n],
        }
    }

    /// A single `1x1o` block holding a Cartesian vector.
    pub fn from_vector(v: [f64; 3]) -> Self {
        Self {
            layout: IrrepsLayout::new(vec![LayoutEntry {
                mult: 1,
                irrep: Irrep::natural(1),
            }])
            .expect("valid layout"),
            coefficients: cartesian_to_l1(v).to_vec(),
        }
    }

    pub fn layout(&self) -> &IrrepsLayout {
        &self.layout
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    pub fn max_abs_diff(&self, other: &SteerableTensor) -> f64 {
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Applies the block-diagonal Wigner-D action of `r` to `t`.
pub fn rotate_steerable(t: &SteerableTensor, r: &Rotation) -> Result<SteerableTensor> {
    let mut out = t.coefficients.clone();
    rotate_rows(&t.layout, &mut out, r)?;
    Ok(SteerableTensor {
        layout: t.layout.clone(),
        coefficients: out,
    })
}

/// Rotates every row of a row-major `rows × layout.total_dim()` buffer in place.
pub fn rotate_rows(layout: &IrrepsLayout, data: &mut [f64], r: &Rotation) -> Result<()> {
    let width = layout.total_dim();
    if width == 0 {
        return Ok(());
    }
    let mut mats = Vec::with_capacity(layout.len());
    for e in layout.entries() {
        mats.push(if e.irrep.degree == 0 {
            None
        } else {
            Some(wigner_d(e.irrep.degree, r)?)
        });
    }
    let offsets = layout.offsets();
    let mut tmp = [0.0f64; 17];
    for row in data.chunks_exact_mut(width) {
        for ((e, off), d) in layout.entries().iter().zip(&offsets).zip(&mats) {
            let Some(d) = d else { continue };
            let dim = e.irrep.dim();
            for u in 0..e.mult {
                let block = &mut row[off + u * dim..off + (u + 1) * dim];
                for (i, t) in tmp.iter_mut().enumerate().take(dim) {
                    *t = (0..dim).map(|j| d[(i, j)] * block[j]).sum();
                }
                block.copy_from_slice(&tmp[..dim]);
            }
        }
    }
    Ok(())
}
