//! Laguerre polynomials.
//!
//! `L_m(x) = Σ_{n=0}^{m} (-1)^n x^n m! / ((n!)^2 (m-n)!)`. The finite series is
//! exact in exact arithmetic but alternates in sign for `x > 0`, so for higher
//! orders [`laguerre`] switches to the three-term recurrence
//! `(m+1) L_{m+1} = (2m+1-x) L_m - m L_{m-1}`.

use crate::error::{Error, Result};

/// Largest order accepted; `m!` overflows an `f64` beyond this.
pub const MAX_ORDER: u32 = 170;

/// Orders up to this value are evaluated with the defining series.
pub const SERIES_MAX_ORDER: u32 = 12;

fn check(m: u32, x: f64) -> Result<()> {
    if m > MAX_ORDER {
        return Err(Error::range("laguerre order", m, format!("<= {MAX_ORDER}")));
    }
    if !x.is_finite() {
        return Err(Error::range("laguerre argument", x, "finite"));
    }
    Ok(())
}

/// `L_m(x)`, by series for `m <= 12` and by recurrence above.
pub fn laguerre(m: u32, x: f64) -> Result<f64> {
    if m <= SERIES_MAX_ORDER {
        laguerre_series(m, x)
    } else {
        laguerre_recurrence(m, x)
    }
}

/// Direct evaluation of the defining finite series.
pub fn laguerre_series(m: u32, x: f64) -> Result<f64> {
    check(m, x)?;
    // term_n = C(m, n) (-x)^n / n!
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..m {
        let n = f64::from(n);
        term *= -x * (f64::from(m) - n) / ((n + 1.0) * (n + 1.0));
        sum += term;
    }
    Ok(sum)
}

/// Evaluation by the upward three-term recurrence.
pub fn laguerre_recurrence(m: u32, x: f64) -> Result<f64> {
    check(m, x)?;
    let mut prev = 1.0;
    if m == 0 {
        return Ok(prev);
    }
    let mut cur = 1.0 - x;
    for k in 1..m {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `m! L_m(-|alpha|^2)`: the squared norm of `a†^m |alpha>`.
pub fn pacs_norm_sq(m: u32, alpha_abs_sq: f64) -> Result<f64> {
    let l = laguerre(m, -alpha_abs_sq)?;
    Ok(factorial(m) * l)
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}
