use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Every sign change of `f` on `[lo, hi]` detected on an `n_scan`-point
/// uniform scan, refined by bisection to width `tol`.
///
/// Roots come back ascending with duplicates (within `tol`) removed. Roots
/// that touch zero without a sign change are not reported.
pub fn find_roots<T: Scalar>(
    mut f: impl FnMut(T) -> T,
    lo: T,
    hi: T,
    n_scan: usize,
    tol: T,
) -> Result<Vec<T>> {
    find_roots_fallible(|x| Ok(f(x)), lo, hi, n_scan, tol)
}

/// [`find_roots`] for functions whose evaluation can fail.
pub fn find_roots_fallible<T: Scalar>(
    mut f: impl FnMut(T) -> Result<T>,
    lo: T,
    hi: T,
    n_scan: usize,
    tol: T,
) -> Result<Vec<T>> {
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::Argument(format!("degenerate root interval [{lo}, {hi}]")));
    }
    if n_scan < 2 {
        return Err(Error::Argument("root scan needs at least 2 points".into()));
    }
    if !(tol > T::zero()) {
        return Err(Error::Argument("root tolerance must be positive".into()));
    }
    let step = (hi - lo) / T::from_usize_lossy(n_scan - 1);
    let xs: Vec<T> = (0..n_scan)
        .map(|k| if k + 1 == n_scan { hi } else { lo + step * T::from_usize_lossy(k) })
        .collect();
    let mut fs = Vec::with_capacity(n_scan);
    for &x in &xs {
        fs.push(f(x)?);
    }

    let mut roots = Vec::new();
    for k in 0..n_scan {
        if fs[k] == T::zero() {
            roots.push(xs[k]);
            continue;
        }
        if k + 1 < n_scan && fs[k + 1] != T::zero() && (fs[k] < T::zero()) != (fs[k + 1] < T::zero()) {
            roots.push(bisect(&mut f, xs[k], xs[k + 1], fs[k], tol)?);
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    roots.dedup_by(|a, b| (*a - *b).abs() <= tol);
    Ok(roots)
}

/// Bisection on a bracket with `f(a)` of sign `fa`, down to width `tol`.
pub fn bisect<T: Scalar>(
    f: &mut impl FnMut(T) -> Result<T>,
    mut a: T,
    mut b: T,
    mut fa: T,
    tol: T,
) -> Result<T> {
    let half = T::lit(0.5);
    for _ in 0..300 {
        let mid = a + (b - a) * half;
        if (b - a).abs() <= tol || mid == a || mid == b {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm < T::zero()) == (fa < T::zero()) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(a + (b - a) * half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_has_root_at_zero() {
        let r = find_roots(|x: f64| x, -1.0, 1.0, 11, 1e-14).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].abs() < 1e-14);
    }

    #[test]
    fn positive_function_has_no_roots() {
        let r = find_roots(|x: f64| x * x + 1.0, -2.0, 2.0, 101, 1e-12).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn even_scan_does_not_duplicate_exact_hits() {
        // 0 is a scan node here and also the end of two brackets.
        let r = find_roots(|x: f64| x * (x - 0.5), -1.0, 1.0, 5, 1e-13).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r[0].abs() < 1e-13 && (r[1] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn degenerate_interval_and_scan_rejected() {
        assert!(find_roots(|x: f64| x, 1.0, 1.0, 10, 1e-9).is_err());
        assert!(find_roots(|x: f64| x, 0.0, 1.0, 1, 1e-9).is_err());
    }

    proptest! {
        #[test]
        fn recovers_simple_roots_of_polynomials(
            mut roots in proptest::collection::vec(-4.0f64..4.0, 1..6)
        ) {
            roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n_scan = 2001usize;
            let step = 10.0 / (n_scan as f64 - 1.0);
            // Only root sets separated by more than a scan step are in scope.
            prop_assume!(roots.windows(2).all(|w| w[1] - w[0] > 2.0 * step));
            let f = |x: f64| roots.iter().map(|r| x - r).product::<f64>();
            let found = find_roots(f, -5.0, 5.0, n_scan, 1e-12).unwrap();
            prop_assert_eq!(found.len(), roots.len());
            for (a, b) in found.iter().zip(&roots) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
