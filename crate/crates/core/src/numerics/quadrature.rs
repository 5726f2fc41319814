//! Composite Gauss–Legendre quadrature on a truncation interval.
//!
//! Every expectation `μ(f)` in the crate is evaluated against one of these
//! rules: the measure's density is tabulated at the nodes and folded into the
//! weights by the caller.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Nodes and weights of the `order`-point Gauss–Legendre rule on [-1, 1],
/// ascending.
pub fn gauss_legendre<T: Scalar>(order: usize) -> (Vec<T>, Vec<T>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let n = order;
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let eps = T::epsilon() * T::lit(4.0);
    let pi = T::PI();
    let half = T::lit(0.5);
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, refined by Newton on P_n.
        let mut x = (pi * (T::from_usize_lossy(i) + T::lit(0.75)) / (T::from_usize_lossy(n) + half)).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= eps {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from_usize_lossy(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Composite Gauss–Legendre rule: `panels` equal panels on `[lower, upper]`,
/// `order` nodes per panel.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    lower: T,
    upper: T,
    panels: usize,
    order: usize,
    /// `partial[i][k] = ∫_{-1}^{t_i} ℓ_k(t) dt` on the reference panel.
    partial: Vec<Vec<T>>,
}

impl<T: Scalar> QuadratureRule<T> {
    /// Rule on the symmetric truncation interval `[-half_width, half_width]`.
    pub fn symmetric(half_width: T, panels: usize, order: usize) -> Result<Self> {
        Self::composite(-half_width, half_width, panels, order)
    }

    pub fn composite(lower: T, upper: T, panels: usize, order: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || upper <= lower {
            return Err(Error::Argument(format!(
                "degenerate quadrature interval [{lower}, {upper}]"
            )));
        }
        if panels == 0 || order == 0 {
            return Err(Error::Argument("quadrature needs at least one panel and one node".into()));
        }
        let (ref_nodes, ref_weights) = gauss_legendre::<T>(order);
        let h = (upper - lower) / T::from_usize_lossy(panels);
        let half_h = h * T::lit(0.5);
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let centre = lower + h * (T::from_usize_lossy(p) + T::lit(0.5));
            for (&t, &w) in ref_nodes.iter().zip(&ref_weights) {
                nodes.push(centre + half_h * t);
                weights.push(half_h * w);
            }
        }
        let partial = partial_integration_matrix(&ref_nodes, &ref_weights);
        Ok(Self {
            nodes,
            weights,
            lower,
            upper,
            panels,
            order,
            partial,
        })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lower(&self) -> T {
        self.lower
    }

    pub fn upper(&self) -> T {
        self.upper
    }

    pub fn half_width(&self) -> T {
        (self.upper - self.lower) * T::lit(0.5)
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Same interval, `factor` times as many panels.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::composite(self.lower, self.upper, self.panels * factor.max(1), self.order)
    }

    /// `Σ wᵢ f(xᵢ)`; fails on the first non-finite value.
    pub fn integrate(&self, f: impl Fn(T) -> T) -> Result<T> {
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    node: x.as_f64(),
                    value: v.as_f64(),
                });
            }
            acc = acc + w * v;
        }
        Ok(acc)
    }

    /// `Σ wᵢ vᵢ` for values already tabulated at the nodes.
    pub fn integrate_values(&self, values: &[T]) -> T {
        debug_assert_eq!(values.len(), self.len());
        self.weights
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (&w, &v)| acc + w * v)
    }

    /// Running integral `∫_{lower}^{xᵢ} f` at every node, using the panel-wise
    /// polynomial interpolant of the tabulated values.
    pub fn cumulative(&self, values: &[T]) -> Vec<T> {
        assert_eq!(values.len(), self.len(), "cumulative: value count mismatch");
        let q = self.order;
        let half_h = (self.upper - self.lower) / T::from_usize_lossy(self.panels) * T::lit(0.5);
        let mut out = Vec::with_capacity(values.len());
        let mut base = T::zero();
        for p in 0..self.panels {
            let f = &values[p * q..(p + 1) * q];
            for row in &self.partial {
                let s = row.iter().zip(f).fold(T::zero(), |acc, (&c, &v)| acc + c * v);
                out.push(base + half_h * s);
            }
            let w = &self.weights[p * q..(p + 1) * q];
            base = base + w.iter().zip(f).fold(T::zero(), |acc, (&wi, &v)| acc + wi * v);
        }
        out
    }
}

/// Free-function form of [`QuadratureRule::integrate`].
pub fn integrate<T: Scalar>(f: impl Fn(T) -> T, rule: &QuadratureRule<T>) -> Result<T> {
    rule.integrate(f)
}

fn partial_integration_matrix<T: Scalar>(nodes: &[T], weights: &[T]) -> Vec<Vec<T>> {
    let q = nodes.len();
    let lagrange = |k: usize, t: T| -> T {
        let mut v = T::one();
        for (j, &xj) in nodes.iter().enumerate() {
            if j != k {
                v = v * (t - xj) / (nodes[k] - xj);
            }
        }
        v
    };
    let mut out = vec![vec![T::zero(); q]; q];
    for (i, &ti) in nodes.iter().enumerate() {
        let scale = (ti + T::one()) * T::lit(0.5);
        for (k, slot) in out[i].iter_mut().enumerate() {
            let mut acc = T::zero();
            for (&s, &w) in nodes.iter().zip(weights) {
                let tau = -T::one() + scale * (s + T::one());
                acc = acc + w * lagrange(k, tau);
            }
            *slot = scale * acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_pdf(x: f64, mean: f64) -> f64 {
        (-(x - mean) * (x - mean) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn reference_rule_is_exact_to_designed_degree() {
        for order in [1usize, 2, 5, 16] {
            let (x, w) = gauss_legendre::<f64>(order);
            for deg in 0..(2 * order) {
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                let got: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(deg as i32)).sum();
                assert!((got - exact).abs() < 1e-13, "order {order} degree {deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn nodes_ascending_weights_positive() {
        let rule = QuadratureRule::<f64>::symmetric(6.0, 40, 16).unwrap();
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(rule.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn gaussian_normalisation_and_moments() {
        let rule = QuadratureRule::<f64>::symmetric(12.0, 64, 16).unwrap();
        let one = rule.integrate(|x| gaussian_pdf(x, 0.0)).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
        let m2 = rule.integrate(|x| x * x * gaussian_pdf(x, 0.0)).unwrap();
        assert!((m2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_against_shifted_gaussian() {
        // E cos(X), X ~ N(mu, 1)  =  e^{-1/2} cos(mu)
        let rule = QuadratureRule::<f64>::symmetric(14.0, 80, 16).unwrap();
        for mu in [0.0, 0.3, -1.1, 2.0] {
            let got = integrate(|x: f64| x.cos() * gaussian_pdf(x, mu), &rule).unwrap();
            let want = (-0.5f64).exp() * mu.cos();
            assert!((got - want).abs() < 1e-13, "mu={mu}: {got} vs {want}");
        }
    }

    #[test]
    fn non_finite_value_names_the_node() {
        let rule = QuadratureRule::<f64>::symmetric(1.0, 2, 4).unwrap();
        let err = rule.integrate(|x| if x > 0.5 { f64::NAN } else { x }).unwrap_err();
        match err {
            Error::Evaluation { node, .. } => assert!(node > 0.5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn degenerate_interval_rejected() {
        assert!(QuadratureRule::<f64>::composite(1.0, 1.0, 4, 4).is_err());
    }

    #[test]
    fn cumulative_matches_closed_form() {
        let rule = QuadratureRule::<f64>::composite(-3.0, 3.0, 24, 16).unwrap();
        let vals: Vec<f64> = rule.nodes().iter().map(|&x| x.cos()).collect();
        let cum = rule.cumulative(&vals);
        for (&x, &c) in rule.nodes().iter().zip(&cum) {
            let want = x.sin() - (-3.0f64).sin();
            assert!((c - want).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn works_in_single_precision() {
        let rule = QuadratureRule::<f32>::symmetric(10.0, 40, 8).unwrap();
        let one = rule
            .integrate(|x| (-x * x / 2.0).exp() / (2.0 * std::f32::consts::PI).sqrt())
            .unwrap();
        assert!((one - 1.0).abs() < 1e-5);
    }
}
