//! Accuracy metrics for predicted velocity fields.
//!
//! - NMAE: mean row-wise error norm divided by the largest truth row norm
//!   over the whole evaluated set.
//! - approximation error ε: squared error energy over truth energy.
//! - mean cosine similarity over rows; rows where either vector is shorter
//!   than [`COSINE_EPS`] are excluded and counted.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::field::VelocityField;
use crate::geom::{dot, norm, norm2, sub};
use crate::{Error, Result};

pub const COSINE_EPS: f64 = 1e-12;

fn check_shapes(pred: &VelocityField, truth: &VelocityField) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "prediction has {} rows, truth has {}",
            pred.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::ShapeMismatch("empty velocity field".into()));
    }
    Ok(())
}

/// Per-sample NMAE with the normalizer shared across all samples.
pub fn nmae(preds: &[VelocityField], truths: &[VelocityField]) -> Result<Vec<f64>> {
    if preds.len() != truths.len() || preds.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} truths",
            preds.len(),
            truths.len()
        )));
    }
    for (p, t) in preds.iter().zip(truths) {
        check_shapes(p, t)?;
    }
    let denom = truths
        .iter()
        .flat_map(|t| t.rows.iter())
        .map(|v| norm(*v))
        .fold(0.0, f64::max);
    if denom <= 0.0 {
        return Err(Error::UndefinedNormalization(
            "every ground-truth velocity is zero".into(),
        ));
    }
    Ok(preds
        .iter()
        .zip(truths)
        .map(|(p, t)| {
            let mean = p
                .rows
                .iter()
                .zip(&t.rows)
                .map(|(a, b)| norm(sub(*b, *a)))
                .sum::<f64>()
                / t.len() as f64;
            mean / denom
        })
        .collect())
}

pub fn approximation_error(pred: &VelocityField, truth: &VelocityField) -> Result<f64> {
    check_shapes(pred, truth)?;
    let energy: f64 = truth.rows.iter().map(|v| norm2(*v)).sum();
    if energy <= 0.0 {
        return Err(Error::UndefinedNormalization("ground truth has zero energy".into()));
    }
    let err: f64 = pred
        .rows
        .iter()
        .zip(&truth.rows)
        .map(|(a, b)| norm2(sub(*b, *a)))
        .sum();
    Ok(err / energy)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineSimilarity {
    pub mean: f64,
    /// Rows skipped because one of the vectors was (near) zero.
    pub excluded: usize,
}

pub fn mean_cosine(pred: &VelocityField, truth: &VelocityField) -> Result<CosineSimilarity> {
    check_shapes(pred, truth)?;
    let mut sum = 0.0;
    let mut used = 0usize;
    for (y, v) in pred.rows.iter().zip(&truth.rows) {
        let (ny, nv) = (norm(*y), norm(*v));
        if ny < COSINE_EPS || nv < COSINE_EPS {
            continue;
        }
        sum += (dot(*y, *v) / (ny * nv)).clamp(-1.0, 1.0);
        used += 1;
    }
    if used == 0 {
        return Err(Error::UndefinedNormalization(
            "cosine similarity undefined: every row has a zero vector".into(),
        ));
    }
    Ok(CosineSimilarity {
        mean: sum / used as f64,
        excluded: truth.len() - used,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Summary { mean, std: var.sqrt() }
    }
}

/// Per-sample metrics over an evaluated split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub nmae: Vec<f64>,
    pub eps: Vec<f64>,
    pub cos: Vec<f64>,
    pub cos_excluded: Vec<usize>,
}

impl MetricReport {
    pub fn evaluate(preds: &[VelocityField], truths: &[VelocityField]) -> Result<MetricReport> {
        let nmae = nmae(preds, truths)?;
        let mut eps = Vec::with_capacity(preds.len());
        let mut cos = Vec::with_capacity(preds.len());
        let mut cos_excluded = Vec::with_capacity(preds.len());
        for (p, t) in preds.iter().zip(truths) {
            eps.push(approximation_error(p, t)?);
            let c = mean_cosine(p, t)?;
            cos.push(c.mean);
            cos_excluded.push(c.excluded);
        }
        Ok(MetricReport {
            nmae,
            eps,
            cos,
            cos_excluded,
        })
    }

    pub fn nmae_summary(&self) -> Summary {
        Summary::of(&self.nmae)
    }

    pub fn eps_summary(&self) -> Summary {
        Summary::of(&self.eps)
    }

    pub fn cos_summary(&self) -> Summary {
        Summary::of(&self.cos)
    }

    /// One line per sample: `sample,nmae,eps,cos,cos_excluded`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sample,nmae,eps,cos,cos_excluded\n");
        for i in 0..self.nmae.len() {
            let _ = writeln!(
                s,
                "{i},{},{},{},{}",
                self.nmae[i], self.eps[i], self.cos[i], self.cos_excluded[i]
            );
        }
        s
    }

    /// Human-readable table with percentage columns at one decimal.
    pub fn to_table(&self, label: &str) -> String {
        let (n, e, c) = (self.nmae_summary(), self.eps_summary(), self.cos_summary());
        let mut s = String::new();
        let _ = writeln!(s, "{:<24} {:>16} {:>16} {:>14}", "", "NMAE [%]", "ε [%]", "cos");
        let _ = writeln!(
            s,
            "{:<24} {:>16} {:>16} {:>14}",
            label,
            format!("{:.1} ± {:.1}", 100.0 * n.mean, 100.0 * n.std),
            format!("{:.1} ± {:.1}", 100.0 * e.mean, 100.0 * e.std),
            format!("{:.2} ± {:.2}", c.mean, c.std),
        );
        s
    }
}
