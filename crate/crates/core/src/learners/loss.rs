//! Binary logistic loss on raw scores.

#[inline]
pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^s) - y s`, evaluated without overflow.
#[inline]
pub fn logistic_loss(s: f64, y: f64) -> f64 {
    let softplus = if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    };
    softplus - y * s
}

/// Gradient `p - y` and hessian `p (1 - p)` with respect to the score.
#[inline]
pub fn grad_hess(s: f64, y: f64) -> (f64, f64) {
    let p = sigmoid(s);
    (p - y, p * (1.0 - p))
}

pub fn mean_logistic_loss(scores: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| logistic_loss(s, f64::from(y)))
        .sum();
    total / scores.len() as f64
}
