use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Least-squares slope of `ln y` against `t` over points with `t` in
/// `[window.0, window.1]`.
pub fn fit_exp_rate<T: Scalar>(series: &[(T, T)], window: (T, T)) -> Result<T> {
    let (t0, t1) = window;
    let pts: Vec<(T, T)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t0 && t <= t1)
        .collect();
    let bad: Vec<String> = pts
        .iter()
        .filter(|&&(_, y)| !(y > T::zero()) || !y.is_finite())
        .map(|&(t, _)| format!("{t}"))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Argument(format!(
            "non-positive values in fit window at t = [{}]",
            bad.join(", ")
        )));
    }
    if pts.len() < 3 {
        return Err(Error::Argument(format!(
            "exponential fit needs at least 3 points in window, found {}",
            pts.len()
        )));
    }
    let n = T::from_usize_lossy(pts.len());
    let mean_t = pts.iter().map(|p| p.0).sum::<T>() / n;
    let mean_l = pts.iter().map(|p| p.1.ln()).sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for &(t, y) in &pts {
        let dt = t - mean_t;
        sxx = sxx + dt * dt;
        sxy = sxy + dt * (y.ln() - mean_l);
    }
    if sxx == T::zero() {
        return Err(Error::Argument("all fit points share one time".into()));
    }
    Ok(sxy / sxx)
}

/// Time range from the first sample with `y ≥ lo` to the first later
/// sample with `y ≥ hi`; `None` if either level is never reached.
pub fn value_window<T: Scalar>(series: &[(T, T)], lo: T, hi: T) -> Option<(T, T)> {
    let start = series.iter().position(|&(_, y)| y >= lo)?;
    let end = series[start..].iter().position(|&(_, y)| y >= hi)? + start;
    Some((series[start].0, series[end].0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> Vec<(f64, f64)> {
        (0..=n)
            .map(|k| {
                let t = t_end * k as f64 / n as f64;
                (t, f(t))
            })
            .collect()
    }

    #[test]
    fn pure_exponential_rate() {
        let s = series(|t| 3.0 * (2.0 * t).exp(), 4.0, 40);
        let r = fit_exp_rate(&s, (0.5, 3.0)).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_zero_rate() {
        let s = series(|_| 7.5, 1.0, 10);
        assert!(fit_exp_rate(&s, (0.0, 1.0)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn modulated_exponential_within_one_percent() {
        let s = series(|t| (0.5 * t).exp() * (1.0 + 0.01 * t.sin()), 10.0, 1000);
        let r = fit_exp_rate(&s, (0.0, 10.0)).unwrap();
        assert!((r - 0.5).abs() < 0.01, "rate {r}");
    }

    #[test]
    fn too_few_points_and_non_positive_values_rejected() {
        let s = vec![(0.0, 1.0), (1.0, 2.0)];
        assert!(fit_exp_rate(&s, (0.0, 1.0)).is_err());
        let s = vec![(0.0, 1.0), (1.0, -2.0), (2.0, 3.0), (3.0, 0.0)];
        let msg = fit_exp_rate(&s, (0.0, 3.0)).unwrap_err().to_string();
        assert!(msg.contains('1') && msg.contains('3'), "{msg}");
    }

    #[test]
    fn window_by_value() {
        let s: Vec<(f64, f64)> = (0..100).map(|i| (i as f64 * 0.1, (0.5 * i as f64 * 0.1).exp())).collect();
        let (a, b) = value_window(&s, 2.0, 10.0).unwrap();
        assert!((a - 1.4).abs() < 1e-12 && (b - 4.7).abs() < 1e-12);
        assert!(value_window(&s, 2.0, 1e9).is_none());
        assert!((fit_exp_rate(&s, (a, b)).unwrap() - 0.5).abs() < 1e-12);
    }
}
