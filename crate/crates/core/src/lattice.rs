//! Lattice bookkeeping: observables take values `integer * step`.

use crate::error::{Error, Result};

/// Relative tolerance for deciding that a real is a lattice point.
pub const SNAP_TOL: f64 = 1e-9;

/// Largest denominator tried when refining a lattice to absorb a rational
/// shift.
pub const MAX_DENOMINATOR: i64 = 1_000_000;

/// Rounds `value / step` to an integer, failing if `value` is not (within
/// [`SNAP_TOL`]) a lattice point.
pub fn snap(value: f64, step: f64) -> Result<i64> {
    let r = value / step;
    let k = r.round();
    if !r.is_finite() || (r - k).abs() > SNAP_TOL * r.abs().max(1.0) {
        return Err(Error::OffLattice { value, step });
    }
    Ok(k as i64)
}

pub fn snap_all(values: &[f64], step: f64) -> Result<Vec<i64>> {
    values.iter().map(|&v| snap(v, step)).collect()
}

/// Best rational approximation `num/den` of `x` with `den <= max_den`, by
/// continued fractions. Returns `None` if none is within `tol`.
pub fn rational_approx(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = r - a as f64;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    if k1 > 0 && (x - h1 as f64 / k1 as f64).abs() <= tol {
        Some((h1, k1))
    } else {
        None
    }
}

/// Greatest common divisor of the absolute values (0 for an all-zero slice).
pub fn gcd_all(values: &[i64]) -> i64 {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    values.iter().fold(0, |g, &v| gcd(g, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping() {
        assert_eq!(snap(1.5, 0.5).unwrap(), 3);
        assert_eq!(snap(-0.3, 0.1).unwrap(), -3);
        assert!(snap(0.25, 0.5).is_err());
    }

    #[test]
    fn rationals() {
        assert_eq!(rational_approx(1.0 / 3.0, 1000, 1e-12), Some((1, 3)));
        assert_eq!(rational_approx(-0.375, 1000, 1e-12), Some((-3, 8)));
        assert_eq!(rational_approx(0.0, 10, 1e-12), Some((0, 1)));
        assert_eq!(rational_approx(std::f64::consts::PI, 100, 1e-12), None);
    }

    #[test]
    fn gcds() {
        assert_eq!(gcd_all(&[4, -6, 10]), 2);
        assert_eq!(gcd_all(&[0, 0]), 0);
    }
}
