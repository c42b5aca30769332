use crate::error::{Error, Result};

/// Riemann zeta `Σ_{d≥1} d^-s` for `s > 1` with absolute error at most `tol`.
///
/// Sums the first `N - 1` terms exactly and replaces the tail by its
/// Euler-Maclaurin expansion through the third derivative term; `N` is
/// chosen so the first omitted term is below `tol`.
pub fn zeta(s: f64, tol: f64) -> Result<f64> {
    if !(s.is_finite() && s > 1.0) {
        return Err(Error::Domain(format!("zeta series diverges at s = {s}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    // first omitted Euler-Maclaurin term: s(s+1)(s+2)(s+3)(s+4) N^{-s-5} / 30240
    let c = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0;
    let mut n = 8.0f64;
    while c * n.powf(-s - 5.0) > tol * 0.1 && n < 1e7 {
        n *= 2.0;
    }
    let big_n = n as u64;
    // add the smallest terms first
    let head: f64 = (1..big_n).rev().map(|d| (d as f64).powf(-s)).sum();
    let tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    Ok(head + tail)
}

/// `ζ(ell - 1)`, the normalizer of the shortcut kernel on the plane: summing
/// `d^-ell` over the `4d` lattice points of each shell gives `4ζ(ell - 1)`.
pub fn zeta_shifted(ell: f64, tol: f64) -> Result<f64> {
    if !(ell.is_finite() && ell > 2.0) {
        return Err(Error::Domain(format!("shell sum of d^(1-ell) diverges for ell = {ell} <= 2")));
    }
    zeta(ell - 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn known_values() {
        let tol = 1e-12;
        assert!((zeta_shifted(3.0, tol).unwrap() - PI * PI / 6.0).abs() < tol);
        assert!((zeta_shifted(5.0, tol).unwrap() - PI.powi(4) / 90.0).abs() < tol);
        assert!((zeta(2.0, 1e-9).unwrap() - 1.644934066848226).abs() < 1e-9);
        assert!((zeta(4.0, 1e-9).unwrap() - 1.082323233711138).abs() < 1e-9);
    }

    #[test]
    fn decreasing_in_ell() {
        let values: Vec<f64> = (0..40).map(|i| zeta_shifted(2.05 + 0.1 * i as f64, 1e-10).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn divergent_arguments_are_domain_errors() {
        assert!(matches!(zeta_shifted(2.0, 1e-6), Err(Error::Domain(_))));
        assert!(matches!(zeta(1.0, 1e-6), Err(Error::Domain(_))));
        assert!(zeta_shifted(f64::NAN, 1e-6).is_err());
    }

    #[test]
    fn close_to_one_still_converges() {
        // ζ(1 + h) = 1/h + γ + O(h)
        let h = 0.01;
        let euler_gamma = 0.5772156649015329;
        let z = zeta(1.0 + h, 1e-10).unwrap();
        assert!((z - (1.0 / h + euler_gamma)).abs() < 1e-3, "{z}");
    }
}
