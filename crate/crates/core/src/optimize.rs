//! Golden-section search for one-dimensional maximization.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f` on `[lo, hi]`, assuming it is unimodal there. Stops once the
/// bracket is narrower than `rel_tol` times its midpoint magnitude (or after
/// `max_iter` shrink steps). Returns the best point seen and its value,
/// including the two endpoints, so the result never loses to `f(lo)` or
/// `f(hi)`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, rel_tol: f64, max_iter: usize) -> (f64, f64) {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut best = (a, f(a));
    let fb = f(b);
    if fb > best.1 {
        best = (b, fb);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= rel_tol * (0.5 * (a + b)).abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-10, 200);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(fx <= 0.0 && fx > -1e-12);
    }

    #[test]
    fn keeps_endpoint_maximum() {
        let (x, _) = golden_section_max(|x| x, 2.0, 5.0, 1e-9, 200);
        assert_eq!(x, 5.0);
        let (x, _) = golden_section_max(|x| -x, 2.0, 5.0, 1e-9, 200);
        assert_eq!(x, 2.0);
    }

    #[test]
    fn reversed_bracket() {
        let (x, _) = golden_section_max(|x| -(x - 4.0).abs(), 10.0, 1.0, 1e-9, 200);
        assert!((x - 4.0).abs() < 1e-6);
    }
}
