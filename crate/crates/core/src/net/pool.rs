//! Mean pooling towards coarser levels and copy-back unpooling.

use crate::autodiff::Rows;
use crate::{Error, Result};

/// Number of sources per target; fails on targets without any source.
pub fn segment_counts(segment: &[usize], n_out: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; n_out];
    for &s in segment {
        if s >= n_out {
            return Err(Error::ShapeMismatch(format!(
                "segment id {s} out of range for {n_out} targets"
            )));
        }
        counts[s] += 1;
    }
    if let Some(t) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Precondition(format!("target {t} receives no source")));
    }
    Ok(counts)
}

/// Row `t` of the output is the mean of the rows `i` with `segment[i] == t`.
pub fn segment_mean(x: &Rows, segment: &[usize], n_out: usize) -> Result<Rows> {
    if segment.len() != x.rows {
        return Err(Error::ShapeMismatch(format!(
            "{} segment ids for {} rows",
            segment.len(),
            x.rows
        )));
    }
    let counts = segment_counts(segment, n_out)?;
    let mut out = Rows::zeros(n_out, x.cols);
    for (r, &t) in segment.iter().enumerate() {
        for (o, v) in out.row_mut(t).iter_mut().zip(x.row(r)) {
            *o += v;
        }
    }
    for (t, &c) in counts.iter().enumerate() {
        let inv = 1.0 / c as f64;
        out.row_mut(t).iter_mut().for_each(|v| *v *= inv);
    }
    Ok(out)
}

pub(crate) fn segment_mean_backward(gout: &Rows, segment: &[usize], gx: &mut Rows) -> Result<()> {
    let counts = segment_counts(segment, gout.rows)?;
    for (r, &t) in segment.iter().enumerate() {
        let inv = 1.0 / counts[t] as f64;
        for (g, o) in gx.row_mut(r).iter_mut().zip(gout.row(t)) {
            *g += o * inv;
        }
    }
    Ok(())
}

/// Output row `i` is input row `index[i]`.
pub fn gather(x: &Rows, index: &[usize]) -> Result<Rows> {
    let mut data = Vec::with_capacity(index.len() * x.cols);
    for &i in index {
        if i >= x.rows {
            return Err(Error::ShapeMismatch(format!(
                "gather index {i} out of range for {} rows",
                x.rows
            )));
        }
        data.extend_from_slice(x.row(i));
    }
    Rows::new(index.len(), x.cols, data)
}

pub(crate) fn gather_backward(gout: &Rows, index: &[usize], gx: &mut Rows) {
    for (r, &i) in index.iter().enumerate() {
        for (g, o) in gx.row_mut(i).iter_mut().zip(gout.row(r)) {
            *g += o;
        }
    }
}

/// Mean of the fine rows assigned to each coarse vertex.
pub fn pool_mean(features: &Rows, assignment: &[usize], n_coarse: usize) -> Result<Rows> {
    segment_mean(features, assignment, n_coarse)
}

/// Every fine vertex receives its coarse target's row unchanged.
pub fn unpool_copy(features: &Rows, assignment: &[usize]) -> Result<Rows> {
    gather(features, assignment)
}
