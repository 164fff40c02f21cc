//! One-dimensional search helpers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;
const MAX_GOLDEN_ITER: usize = 200;

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { b } else { a + k as f64 * h })
                .collect()
        }
    }
}

/// Points `start, start + step, ...` up to `stop` (inclusive within half a
/// step of round-off), computed by multiplication rather than accumulation.
pub fn arange_inclusive(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return vec![start];
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `tol` and returns the best point
/// evaluated, never a point outside `[a, b]`.
pub fn golden_section_max<F, E>(mut f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64), E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fd > fc { (d, fd) } else { (c, fc) };
    for _ in 0..MAX_GOLDEN_ITER {
        if b - a <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}
