/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]`.
pub const BCE_CLAMP: f64 = 1e-12;

/// Binary cross-entropy of one prediction and its derivative in `p`.
pub fn bce_loss(p: f64, y: f64) -> (f64, f64) {
    let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    let loss = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
    let grad = -y / p + (1.0 - y) / (1.0 - p);
    (loss, grad)
}
