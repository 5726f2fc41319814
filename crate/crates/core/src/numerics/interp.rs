use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
///
/// Used for cumulative distribution functions, so it also supports
/// inversion.
#[derive(Debug, Clone)]
pub struct MonotoneCubic<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Scalar> MonotoneCubic<T> {
    /// `xs` strictly increasing, `ys` non-decreasing.
    pub fn new(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::Argument("monotone cubic needs at least two matching knots".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Argument("knots must be strictly increasing".into()));
        }
        if ys.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Argument("values must be non-decreasing".into()));
        }
        let secants: Vec<T> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut slopes = vec![T::zero(); n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            slopes[i] = if a * b <= T::zero() {
                T::zero()
            } else {
                // Weighted harmonic mean keeps the interpolant monotone.
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = T::lit(2.0) * h1 + h0;
                let w2 = h1 + T::lit(2.0) * h0;
                (w1 + w2) / (w1 / a + w2 / b)
            };
        }
        Ok(Self { xs, ys, slopes })
    }

    pub fn knots(&self) -> &[T] {
        &self.xs
    }

    pub fn values(&self) -> &[T] {
        &self.ys
    }

    fn segment(&self, x: T) -> usize {
        match self.xs.binary_search_by(|k| k.partial_cmp(&x).expect("finite knot")) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.xs.len() - 2),
        }
    }

    fn eval_in(&self, i: usize, x: T) -> T {
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = -two * t3 + three * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }

    /// Value at `x`, clamped to the end values outside the knot range.
    pub fn eval(&self, x: T) -> T {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        self.eval_in(self.segment(x), x)
    }

    /// Smallest-bracket preimage of `y` (bisection inside the bracketing
    /// segment).
    pub fn invert(&self, y: T) -> T {
        let n = self.ys.len();
        if y <= self.ys[0] {
            return self.xs[0];
        }
        if y >= self.ys[n - 1] {
            return self.xs[n - 1];
        }
        // First knot with value >= y.
        let hi = self.ys.partition_point(|&v| v < y).clamp(1, n - 1);
        let i = hi - 1;
        let (mut a, mut b) = (self.xs[i], self.xs[i + 1]);
        for _ in 0..200 {
            let mid = a + (b - a) * T::lit(0.5);
            if mid == a || mid == b {
                break;
            }
            if self.eval_in(i, mid) < y {
                a = mid;
            } else {
                b = mid;
            }
        }
        a + (b - a) * T::lit(0.5)
    }
}

/// Function tabulated on a uniform grid, linearly interpolated and held
/// constant outside the grid.
#[derive(Debug, Clone)]
pub struct Tabulated<T> {
    x0: T,
    dx: T,
    values: Vec<T>,
}

impl<T: Scalar> Tabulated<T> {
    pub fn new(lower: T, upper: T, n: usize, f: impl Fn(T) -> T) -> Self {
        assert!(n >= 2 && upper > lower, "tabulation needs two points on a proper interval");
        let dx = (upper - lower) / T::from_usize_lossy(n - 1);
        let values = (0..n).map(|k| f(lower + dx * T::from_usize_lossy(k))).collect();
        Self { x0: lower, dx, values }
    }

    #[inline]
    pub fn eval(&self, x: T) -> T {
        let n = self.values.len();
        let s = (x - self.x0) / self.dx;
        if !(s > T::zero()) {
            return self.values[0];
        }
        let k = s.floor();
        let i = k.to_usize().unwrap_or(usize::MAX);
        if i >= n - 1 {
            return self.values[n - 1];
        }
        let frac = s - k;
        self.values[i] + (self.values[i + 1] - self.values[i]) * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knots_and_inverts() {
        let xs: Vec<f64> = (0..=20).map(|k| -2.0 + 0.2 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 1.0 / (1.0 + (-2.0 * x).exp())).collect();
        let m = MonotoneCubic::new(xs.clone(), ys.clone()).unwrap();
        for (&x, &y) in xs.iter().zip(&ys) {
            assert!((m.eval(x) - y).abs() < 1e-15);
        }
        for k in 1..100 {
            let y = ys[0] + (ys[20] - ys[0]) * k as f64 / 100.0;
            let x = m.invert(y);
            assert!((m.eval(x) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn stays_monotone_on_flat_steps() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.0, 0.5, 0.5, 1.0];
        let m = MonotoneCubic::new(xs, ys).unwrap();
        let mut prev = -1.0;
        for k in 0..=400 {
            let v = m.eval(k as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn tabulated_linear_is_exact_for_lines() {
        let t = Tabulated::new(-1.0, 1.0, 11, |x: f64| 2.0 * x + 1.0);
        assert!((t.eval(0.33) - 1.66).abs() < 1e-12);
        assert_eq!(t.eval(-5.0), -1.0);
        assert_eq!(t.eval(5.0), 3.0);
    }
}
