//! Finite-difference gradient verification.

use super::Real;

/// Compare an analytic gradient against central finite differences of a
/// scalar loss closure. Returns the maximum guarded relative error
/// `|a - n| / max(|a|, |n|, 1e-3)` over all coordinates.
///
/// The closure receives the full (possibly perturbed) parameter vector and
/// must be deterministic.
pub fn grad_check<F>(mut loss: F, params: &[Real], analytic: &[Real], eps: Real) -> Real
where
    F: FnMut(&[Real]) -> Real,
{
    assert_eq!(
        params.len(),
        analytic.len(),
        "analytic gradient length mismatch"
    );
    let mut scratch = params.to_vec();
    let mut worst: Real = 0.0;
    for i in 0..params.len() {
        let orig = scratch[i];
        scratch[i] = orig + eps;
        let up = loss(&scratch);
        scratch[i] = orig - eps;
        let down = loss(&scratch);
        scratch[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic[i];
        let denom = a.abs().max(numeric.abs()).max(1e-3);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_passes() {
        let params = vec![0.3, -1.2, 2.0];
        let loss = |p: &[Real]| p.iter().map(|x| x * x).sum::<Real>();
        let analytic: Vec<Real> = params.iter().map(|x| 2.0 * x).collect();
        let err = grad_check(loss, &params, &analytic, 1e-5);
        assert!(err < 1e-8, "err {err}");
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let params = vec![0.5, 0.5];
        let loss = |p: &[Real]| p[0] * p[0] + p[1];
        let wrong = vec![2.0 * 0.5, 0.0];
        let err = grad_check(loss, &params, &wrong, 1e-5);
        assert!(err > 0.5, "err {err}");
    }
}
