//! Bessel functions of the first kind, orders 0, 1 and 2, for x >= 0.
//!
//! Power series below x = 8, Miller's backward recurrence on [8, 25) and the
//! Hankel asymptotic expansion from 25 on. The asymptotic series alone only
//! reaches ~1e-7 at x = 8, hence the recurrence in between.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// J_n(x) for n in {0, 1, 2}.
///
/// # Panics
/// If `n > 2` or `x` is negative or NaN.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    assert!(n <= 2, "bessel_j supports orders 0, 1, 2 (got {n})");
    assert!(x >= 0.0, "bessel_j requires x >= 0 (got {x})");
    if x < SERIES_LIMIT {
        series(n, x)
    } else if x < ASYMPTOTIC_LIMIT {
        miller(x)[n as usize]
    } else {
        hankel(n, x)
    }
}

/// J_0, J_1 and J_2 at once; cheaper than three separate calls.
pub fn bessel_j012(x: f64) -> [f64; 3] {
    assert!(x >= 0.0, "bessel_j012 requires x >= 0 (got {x})");
    if x < SERIES_LIMIT {
        [series(0, x), series(1, x), series(2, x)]
    } else if x < ASYMPTOTIC_LIMIT {
        miller(x)
    } else {
        [hankel(0, x), hankel(1, x), hankel(2, x)]
    }
}

fn series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    // (x/2)^n / n!
    let mut term = match n {
        0 => 1.0,
        1 => half,
        _ => 0.5 * half * half,
    };
    let mut sum = term;
    let n = n as f64;
    for k in 1..60 {
        let k = k as f64;
        term *= q / (k * (k + n));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn miller(x: f64) -> [f64; 3] {
    let start = 2 * (((x + 40.0) as usize + 1) / 2);
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k
    let mut norm = 0.0;
    let mut out = [0.0; 3];
    for k in (1..=start).rev() {
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        if k <= 2 {
            out[k] = cur;
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            out[1] *= s;
            out[2] *= s;
        }
    }
    out[0] = cur;
    norm += cur;
    [out[0] / norm, out[1] / norm, out[2] / norm]
}

fn hankel(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..80 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * eight_x);
        if term.abs() > last || term == 0.0 {
            break;
        }
        last = term.abs();
        let signed = if (k / 2) % 2 == 0 { term } else { -term };
        if k % 2 == 1 {
            q += signed;
        } else {
            p += signed;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    // cos(x - phase) expanded so that argument reduction acts on x alone.
    let phase = n as f64 * FRAC_PI_2 + FRAC_PI_4;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}
