use crate::error::{Error, Result};

/// Closed search interval for [`bisect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }
}

/// Root of `f` on `bracket` by bisection.
///
/// Stops when the bracket width falls below `tol * max(|mid|, tiny)` or an
/// exact zero is hit. The endpoints must have opposite signs (or one of them
/// must be a root).
pub fn bisect<F>(f: F, bracket: Bracket, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let Bracket { mut lo, mut hi } = bracket;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::domain(format!(
            "bisect needs lo < hi and tol > 0 (got [{lo}, {hi}], tol {tol})"
        )));
    }
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * mid.abs().max(f64::MIN_POSITIVE) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::bessel_j;

    #[test]
    fn linear_root() {
        let r = bisect(|x| x - 1.0, Bracket::new(0.0, 2.0), 1e-14).unwrap();
        assert!((r - 1.0).abs() < 1e-13);
    }

    #[test]
    fn first_zero_of_j0() {
        let r = bisect(|x| bessel_j(0, x), Bracket::new(2.0, 3.0), 1e-12).unwrap();
        assert!((r - 2.404_825_557_695_773).abs() < 1e-6);
    }

    #[test]
    fn no_sign_change_is_reported() {
        match bisect(|x| x * x + 1.0, Bracket::new(-1.0, 1.0), 1e-8) {
            Err(Error::Bracket { f_lo, f_hi, .. }) => {
                assert_eq!(f_lo, 2.0);
                assert_eq!(f_hi, 2.0);
            }
            other => panic!("expected bracket error, got {other:?}"),
        }
    }
}
