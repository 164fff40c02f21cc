//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Regula falsi with the Illinois modification.
///
/// Requires `f(lo)` and `f(hi)` of opposite sign. Terminates when
/// `|f(x)| <= tol` or when the bracket has shrunk to a few ulps around `x`.
/// On hitting `max_iter` the error carries the best estimate and the final
/// bracket.
pub fn regula_falsi<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be > 0, got {tol}")));
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid("bracket", format!("non-finite endpoints [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::NoBracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }

    // Which endpoint was retained on the previous step: -1 for a, 1 for b.
    let mut side = 0i8;
    let mut best = if fa.abs() < fb.abs() { a } else { b };
    for _ in 0..max_iter {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c.is_finite() && c > a.min(b) && c < a.max(b) {
            c
        } else {
            0.5 * (a + b)
        };
        let fc = f(c);
        best = c;
        if fc.abs() <= tol || (b - a).abs() <= 4.0 * f64::EPSILON * c.abs().max(f64::MIN_POSITIVE) {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        best,
        lo: a.min(b),
        hi: a.max(b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisection(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let mut flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm == 0.0 {
                return mid;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn sqrt_two() {
        let r = regula_falsi(|x| x * x - 2.0, 1.0, 2.0, 1e-12, 200).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-11);
        assert!((r - 1.414214).abs() < 1e-6);
    }

    #[test]
    fn identity() {
        let r = regula_falsi(|x| x, -1.0, 1.0, 1e-12, 200).unwrap();
        assert!(r.abs() <= 1e-12);
    }

    #[test]
    fn same_sign_rejected() {
        let e = regula_falsi(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 200).unwrap_err();
        assert!(matches!(e, Error::NoBracket { .. }));
    }

    #[test]
    fn iteration_limit_reports_bracket() {
        let e = regula_falsi(|x: f64| x.powi(9) - 1e-3, 0.0, 10.0, 1e-300, 3).unwrap_err();
        match e {
            Error::NotConverged { iterations, lo, hi, .. } => {
                assert_eq!(iterations, 3);
                assert!(lo <= hi);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn agrees_with_bisection_on_monotone_suite() {
        let tol = 1e-12;
        let suite: Vec<(Box<dyn Fn(f64) -> f64>, f64, f64)> = vec![
            (Box::new(|x| x - 0.3), 0.0, 1.0),
            (Box::new(|x| x * x * x - 5.0), 0.0, 3.0),
            (Box::new(|x: f64| x.exp() - 3.0), 0.0, 2.0),
            (Box::new(|x: f64| x.ln() - 0.5), 1.0, 3.0),
            (Box::new(|x: f64| x.atan() - 1.0), 0.0, 5.0),
            (Box::new(|x: f64| x.tanh() - 0.9), 0.0, 3.0),
            (Box::new(|x: f64| x.powi(5) + x - 1.0), 0.0, 1.0),
            (Box::new(|x: f64| 1.0 / (1.0 + x) - 0.2), 0.0, 10.0),
            (Box::new(|x: f64| x.sqrt() - 1.7), 0.0, 4.0),
            (Box::new(|x: f64| (-x).exp() - 0.01), 0.0, 10.0),
            (Box::new(|x: f64| x.sinh() - 2.0), 0.0, 3.0),
            (Box::new(|x: f64| x.powi(11) - 0.5), 0.0, 1.0),
            (Box::new(|x: f64| 1e-3 * x - 1e-4), 0.0, 1.0),
            (Box::new(|x: f64| 0.5 - 0.5 * libm::erfc(x)), -1.0, 3.0),
            (Box::new(|x: f64| x + x.sin() / 2.0 - 1.0), 0.0, 2.0),
            (Box::new(|x: f64| 2.0 - x.exp2()), 0.0, 3.0),
            (Box::new(|x: f64| -x.powi(3) + 0.125), 0.0, 1.0),
            (Box::new(|x: f64| x.cbrt() - 0.2), 0.0, 1.0),
            (Box::new(|x: f64| (x / 10.0).ln_1p() - 0.05), 0.0, 5.0),
            (Box::new(|x: f64| 0.1 * libm::erfc(2.0 / x.sqrt()) - 0.05), 0.5, 100.0),
        ];
        assert_eq!(suite.len(), 20);
        for (i, (f, lo, hi)) in suite.iter().enumerate() {
            let rf = regula_falsi(|x| f(x), *lo, *hi, tol, 200).unwrap();
            let bi = bisection(|x| f(x), *lo, *hi);
            assert!(f(rf).abs() <= tol, "case {i}: residual {:e}", f(rf));
            // A residual of tol leaves the abscissa within tol / |f'|.
            let h = 1e-6 * bi.abs().max(1e-3);
            let slope = ((f(bi + h) - f(bi - h)) / (2.0 * h)).abs();
            let slack = 10.0 * tol / slope.min(1.0);
            assert!((rf - bi).abs() <= slack, "case {i}: {rf} vs {bi}");
        }
    }
}
