use ndarray::{Array2, ArrayView2};

/// Row-wise log-softmax.
pub fn log_softmax(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.outer_iter_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|z| z - lse);
    }
    out
}

pub fn softmax(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    log_softmax(logits).mapv(f64::exp)
}

/// Mean cross-entropy `−Σ q log softmax(z)` against target distributions `q`,
/// with its gradient `(softmax(z) − q) / N`.
pub fn cross_entropy(logits: ArrayView2<'_, f64>, targets: ArrayView2<'_, f64>) -> (f64, Array2<f64>) {
    assert_eq!(logits.dim(), targets.dim(), "logits/targets shape mismatch");
    let n = logits.nrows();
    if n == 0 {
        return (0.0, Array2::zeros(logits.dim()));
    }
    let logp = log_softmax(logits);
    let loss = -(&logp * &targets).sum() / n as f64;
    let grad = (logp.mapv(f64::exp) - targets) / n as f64;
    (loss, grad)
}

pub fn one_hot(labels: &[u8]) -> Array2<f64> {
    let mut out = Array2::zeros((labels.len(), 2));
    for (i, &y) in labels.iter().enumerate() {
        out[[i, y as usize]] = 1.0;
    }
    out
}

/// Mean negative log-likelihood of the labelled class.
pub fn nll_loss(logits: ArrayView2<'_, f64>, labels: &[u8]) -> (f64, Array2<f64>) {
    cross_entropy(logits, one_hot(labels).view())
}
