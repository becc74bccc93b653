//! Central finite-difference gradient verification.

use crate::error::Result;

/// `max_i |a_i - n_i| / max(1e-8, |a_i| + |n_i|)`.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    debug_assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / f64::max(1e-8, a.abs() + n.abs()))
        .fold(0.0, f64::max)
}

/// Compare `analytic` against central differences of `f` at `theta`.
///
/// Returns the maximum relative error over all coordinates. `f` is evaluated
/// at `theta ± h e_i` for every coordinate `i`.
pub fn finite_difference_check<F>(
    mut f: F,
    theta: &[f64],
    analytic: &[f64],
    h: f64,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    debug_assert_eq!(theta.len(), analytic.len());
    let mut point = theta.to_vec();
    let mut numeric = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        point[i] = theta[i] + h;
        let plus = f(&point)?;
        point[i] = theta[i] - h;
        let minus = f(&point)?;
        point[i] = theta[i];
        numeric[i] = (plus - minus) / (2.0 * h);
    }
    Ok(max_rel_error(analytic, &numeric))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_function_at_three() {
        // f(t) = t^2, f'(3) = 6
        let err = finite_difference_check(|t| Ok(t[0] * t[0]), &[3.0], &[6.0], 1e-5).unwrap();
        assert!(err < 1e-8, "error {err}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let err = finite_difference_check(|_| Ok(4.2), &[1.0, -2.0], &[0.0, 0.0], 1e-5).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let err = finite_difference_check(|t| Ok(t[0] * t[0]), &[3.0], &[5.0], 1e-5).unwrap();
        assert!(err > 1e-2);
    }
}
