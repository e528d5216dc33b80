use crate::field::VelocityField;
use crate::{Error, Result};

/// Mean absolute difference over all `n × 3` components.
pub fn l1_loss(pred: &VelocityField, target: &VelocityField) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "L1 loss of {} rows against {}",
            pred.len(),
            target.len()
        )));
    }
    let sum: f64 = pred
        .rows
        .iter()
        .zip(&target.rows)
        .flat_map(|(p, t)| (0..3).map(move |c| (p[c] - t[c]).abs()))
        .sum();
    Ok(sum / (3 * pred.len()) as f64)
}
