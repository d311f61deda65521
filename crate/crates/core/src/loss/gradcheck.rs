//! Central finite-difference verification of analytic gradients.

/// Compares an analytic gradient against central finite differences and
/// returns the largest relative error over all coordinates.
///
/// Per coordinate `i` the numeric derivative is
/// `(L(x + eps * e_i) - L(x - eps * e_i)) / (2 eps)` and the relative error
/// uses `max(|analytic|, |numeric|, 1e-8)` as denominator, so near-zero
/// gradients do not blow the ratio up.
///
/// Panics when `eps` is not positive or the analytic gradient length does
/// not match the point.
pub fn finite_difference_check<L, G>(loss: L, grad: G, point: &[f64], eps: f64) -> f64
where
    L: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    assert!(eps > 0.0, "eps must be positive, got {eps}");
    let analytic = grad(point);
    assert_eq!(
        analytic.len(),
        point.len(),
        "gradient has {} entries for a {}-dimensional point",
        analytic.len(),
        point.len()
    );

    let mut work = point.to_vec();
    let mut max_rel = 0.0f64;
    for i in 0..point.len() {
        work[i] = point[i] + eps;
        let plus = loss(&work);
        work[i] = point[i] - eps;
        let minus = loss(&work);
        work[i] = point[i];
        let numeric = (plus - minus) / (2.0 * eps);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max((analytic[i] - numeric).abs() / denom);
    }
    max_rel
}
