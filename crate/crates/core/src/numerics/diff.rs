use crate::error::{domain, Result};
use crate::Real;

/// Default five-point step as a fraction of the PSF width.
pub const DEFAULT_STEP_FRACTION: f64 = 1e-3;

/// Second-order central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central_diff<T: Real, F: Fn(T) -> T>(f: F, x: T, h: T) -> Result<T> {
    if !(h > T::zero()) {
        return domain("finite-difference step must be > 0");
    }
    Ok((f(x + h) - f(x - h)) / (T::lit(2.0) * h))
}

/// Fourth-order five-point stencil
/// `(-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h`.
pub fn five_point_diff<T: Real, F: Fn(T) -> T>(f: F, x: T, h: T) -> Result<T> {
    if !(h > T::zero()) {
        return domain("finite-difference step must be > 0");
    }
    let two = T::lit(2.0);
    let num = -f(x + two * h) + T::lit(8.0) * f(x + h) - T::lit(8.0) * f(x - h) + f(x - two * h);
    Ok(num / (T::lit(12.0) * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_zero_slope() {
        assert_eq!(central_diff(|_| 4.2, 1.0, 0.1).unwrap(), 0.0);
        assert!(five_point_diff(|_| 4.2f64, 1.0, 0.1).unwrap().abs() < 1e-14);
    }

    #[test]
    fn exact_for_quadratics() {
        for &h in &[1e-3, 0.1, 0.5, 2.0] {
            assert!((central_diff(|x: f64| x * x, 3.0, h).unwrap() - 6.0).abs() < 1e-9);
            assert!((five_point_diff(|x: f64| x * x, 3.0, h).unwrap() - 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn five_point_is_fourth_order() {
        let d = five_point_diff(f64::sin, 0.7, 1e-2).unwrap();
        assert!((d - 0.7f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_step() {
        assert!(central_diff(|x: f64| x, 0.0, 0.0).is_err());
        assert!(five_point_diff(|x: f64| x, 0.0, -1.0).is_err());
    }
}
