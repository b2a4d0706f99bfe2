use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

fn row_log_softmax(row: ArrayView1<'_, f64>) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row.iter().map(|v| v - max - log_sum).collect()
}

fn label_of(labels: &[Option<usize>], i: usize) -> Result<usize> {
    labels.get(i).copied().flatten().ok_or(Error::InvalidSplit {
        index: i,
        reason: "node is out of range or unlabeled",
    })
}

/// Mean cross-entropy of the rows in `idx` against their labels.
pub fn cross_entropy(
    scores: ArrayView2<'_, f64>,
    labels: &[Option<usize>],
    idx: &[usize],
    split: &'static str,
) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::EmptySplit(split));
    }
    let mut total = 0.0;
    for &i in idx {
        let y = label_of(labels, i)?;
        total -= row_log_softmax(scores.row(i))[y];
    }
    Ok(total / idx.len() as f64)
}

/// Loss together with its gradient in `scores` (zero outside `idx`).
pub fn cross_entropy_grad(
    scores: ArrayView2<'_, f64>,
    labels: &[Option<usize>],
    idx: &[usize],
    split: &'static str,
) -> Result<(f64, Array2<f64>)> {
    if idx.is_empty() {
        return Err(Error::EmptySplit(split));
    }
    let scale = 1.0 / idx.len() as f64;
    let mut grad = Array2::zeros(scores.dim());
    let mut total = 0.0;
    for &i in idx {
        let y = label_of(labels, i)?;
        let logp = row_log_softmax(scores.row(i));
        total -= logp[y];
        for (c, lp) in logp.iter().enumerate() {
            grad[[i, c]] += scale * (lp.exp() - if c == y { 1.0 } else { 0.0 });
        }
    }
    Ok((total * scale, grad))
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = c;
        }
    }
    best
}

pub fn accuracy(
    scores: ArrayView2<'_, f64>,
    labels: &[Option<usize>],
    idx: &[usize],
    split: &'static str,
) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::EmptySplit(split));
    }
    let mut correct = 0usize;
    for &i in idx {
        correct += usize::from(argmax(scores.row(i)) == label_of(labels, i)?);
    }
    Ok(correct as f64 / idx.len() as f64)
}
