//! Scalar-coupled drift families `b(x, m) = a(x) + β c(x) m`, `m = μ(g)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Built-in model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// `dX = -(X³ - X) dt - β (X - E X) dt + σ dB`.
    Dawson,
    /// `dX = -X dt + β E cos(X) dt + σ dB`.
    Cosine,
    /// Dawson's model pulled back through `u₀(x) = x / (1 + x²)^{1/3}`.
    RescaledDoubleWell,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Dawson, ModelKind::Cosine, ModelKind::RescaledDoubleWell];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dawson => "dawson",
            ModelKind::Cosine => "cosine",
            ModelKind::RescaledDoubleWell => "rescaled_double_well",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Argument(format!(
                    "unknown model '{s}' (expected one of dawson, cosine, rescaled_double_well)"
                ))
            })
    }
}

/// One member of a built-in family, fixed by `(β, σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMeanFieldModel<T> {
    kind: ModelKind,
    beta: T,
    sigma: T,
}

impl<T: Scalar> ScalarMeanFieldModel<T> {
    pub fn new(kind: ModelKind, beta: T, sigma: T) -> Result<Self> {
        if !beta.is_finite() || beta < T::zero() {
            return Err(Error::Argument(format!("beta must be finite and non-negative, got {beta}")));
        }
        if !sigma.is_finite() || sigma <= T::zero() {
            return Err(Error::Argument(format!("sigma must be finite and positive, got {sigma}")));
        }
        Ok(Self { kind, beta, sigma })
    }

    pub fn dawson(beta: T, sigma: T) -> Result<Self> {
        Self::new(ModelKind::Dawson, beta, sigma)
    }

    /// The cosine model with its natural noise `σ = √2` (unit-variance
    /// Gaussian Gibbs measures).
    pub fn cosine(beta: T) -> Result<Self> {
        Self::new(ModelKind::Cosine, beta, T::SQRT_2())
    }

    pub fn rescaled_double_well(beta: T, sigma: T) -> Result<Self> {
        Self::new(ModelKind::RescaledDoubleWell, beta, sigma)
    }

    /// Looks the family up by name; `sigma = None` means the family default
    /// (`√2` for cosine, required otherwise).
    pub fn from_name(name: &str, beta: T, sigma: Option<T>) -> Result<Self> {
        let kind: ModelKind = name.parse()?;
        let sigma = match (kind, sigma) {
            (_, Some(s)) => s,
            (ModelKind::Cosine, None) => T::SQRT_2(),
            (_, None) => return Err(Error::Argument(format!("model '{name}' needs an explicit sigma"))),
        };
        Self::new(kind, beta, sigma)
    }

    pub fn with_sigma(&self, sigma: T) -> Result<Self> {
        Self::new(self.kind, self.beta, sigma)
    }

    pub fn with_beta(&self, beta: T) -> Result<Self> {
        Self::new(self.kind, beta, self.sigma)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// `σ²/2`.
    pub fn diffusivity(&self) -> T {
        self.sigma * self.sigma * T::lit(0.5)
    }

    /// `a` odd, `c` even and `g` odd, so that `ψ` is odd and `m = 0` is
    /// always a stationary point.
    pub fn symmetric(&self) -> bool {
        matches!(self.kind, ModelKind::Dawson | ModelKind::RescaledDoubleWell)
    }

    /// Base drift `a(x)`.
    pub fn a(&self, x: T) -> T {
        let one = T::one();
        match self.kind {
            ModelKind::Dawson => -x * x * x + (one - self.beta) * x,
            ModelKind::Cosine => -x,
            ModelKind::RescaledDoubleWell => {
                let u = u0(x);
                let x2 = x * x;
                let ito = self.sigma * self.sigma * x * (one + x2 / T::lit(9.0))
                    / ((one + x2 / T::lit(3.0)) * (one + x2));
                u0_prime(x) * (-u * u * u + (one - self.beta) * u) - ito
            }
        }
    }

    /// Coupling shape `c(x)`.
    pub fn c(&self, x: T) -> T {
        match self.kind {
            ModelKind::Dawson | ModelKind::Cosine => T::one(),
            ModelKind::RescaledDoubleWell => u0_prime(x),
        }
    }

    /// Coupling statistic `g(y)`; the mean field is `m = μ(g)`.
    pub fn g(&self, y: T) -> T {
        match self.kind {
            ModelKind::Dawson => y,
            ModelKind::Cosine => y.cos(),
            ModelKind::RescaledDoubleWell => u0(y),
        }
    }

    /// Antiderivative `v` of `c` with `v(0) = 0`; the coupling pairs an
    /// observable `f` through `∫ v′ f′ dμ`.
    pub fn v(&self, x: T) -> T {
        match self.kind {
            ModelKind::Dawson | ModelKind::Cosine => x,
            ModelKind::RescaledDoubleWell => u0(x),
        }
    }

    /// Coordinate `ξ(x)` in which the spectral basis is polynomial.
    pub fn basis_coordinate(&self, x: T) -> T {
        match self.kind {
            ModelKind::Dawson | ModelKind::Cosine => x,
            ModelKind::RescaledDoubleWell => u0(x),
        }
    }

    /// `ξ′(x)`.
    pub fn basis_coordinate_derivative(&self, x: T) -> T {
        match self.kind {
            ModelKind::Dawson | ModelKind::Cosine => T::one(),
            ModelKind::RescaledDoubleWell => u0_prime(x),
        }
    }

    pub fn drift(&self, x: T, m: T) -> T {
        self.a(x) + self.beta * self.c(x) * m
    }

    /// `1 / max|∂ₓ b(·, m)|` sampled on `[-half_width, half_width]`.
    pub fn relaxation_time(&self, m: T, half_width: T) -> T {
        let n = 800;
        let h = half_width * T::lit(1e-4);
        let steep = (0..=n)
            .map(|i| {
                let x = half_width * (T::lit(2.0) * T::from_usize_lossy(i) / T::from_usize_lossy(n) - T::one());
                ((self.drift(x + h, m) - self.drift(x - h, m)) / (h + h)).abs()
            })
            .fold(T::zero(), T::max);
        T::one() / steep.max(T::lit(1e-12))
    }

    /// `β c(x) (g(z) - m)`.
    pub fn linear_functional_derivative(&self, x: T, z: T, m: T) -> T {
        self.beta * self.c(x) * (self.g(z) - m)
    }

    /// Unnormalised log-density of the stationary law of the frozen SDE
    /// `dX = b(X, m) dt + σ dB`.
    pub fn log_gibbs(&self, x: T, m: T) -> T {
        let s2 = self.sigma * self.sigma;
        let half = T::lit(0.5);
        match self.kind {
            ModelKind::Dawson => {
                let x2 = x * x;
                let d = x - m;
                -(T::lit(2.0) / s2) * (x2 * x2 * T::lit(0.25) - x2 * half + self.beta * half * d * d)
            }
            ModelKind::Cosine => {
                let d = x - self.beta * m;
                -d * d / s2
            }
            ModelKind::RescaledDoubleWell => {
                let u = u0(x);
                let w = u * u - T::one();
                let d = u - m;
                -w * w / (T::lit(2.0) * s2) - self.beta / s2 * d * d + u0_prime(x).ln()
            }
        }
    }

    /// `∂ₓ log_gibbs`, equal to `2 b(x, m) / σ²`.
    pub fn log_gibbs_slope(&self, x: T, m: T) -> T {
        self.drift(x, m) / self.diffusivity()
    }
}

/// `u₀(x) = x / (1 + x²)^{1/3}`.
pub fn u0<T: Scalar>(x: T) -> T {
    x / (T::one() + x * x).cbrt()
}

/// `u₀′(x) = (1 + x²/3) / (1 + x²)^{4/3}`.
pub fn u0_prime<T: Scalar>(x: T) -> T {
    let x2 = x * x;
    (T::one() + x2 / T::lit(3.0)) / (T::one() + x2).powf(T::lit(4.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn models() -> Vec<ScalarMeanFieldModel<f64>> {
        vec![
            ScalarMeanFieldModel::dawson(1.0, 0.7).unwrap(),
            ScalarMeanFieldModel::dawson(2.5, 1.3).unwrap(),
            ScalarMeanFieldModel::cosine(2.0).unwrap(),
            ScalarMeanFieldModel::new(ModelKind::Cosine, 0.7, 0.9).unwrap(),
            ScalarMeanFieldModel::rescaled_double_well(1.0, 0.6).unwrap(),
            ScalarMeanFieldModel::rescaled_double_well(0.4, 1.1).unwrap(),
        ]
    }

    #[test]
    fn drift_examples() {
        let d = ScalarMeanFieldModel::<f64>::dawson(1.0, 0.5).unwrap();
        assert_eq!(d.drift(0.0, 0.0), 0.0);
        assert_eq!(d.drift(1.0, 0.0), -1.0);
        let c = ScalarMeanFieldModel::<f64>::cosine(2.0).unwrap();
        assert!((c.drift(0.0, 0.3) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn dawson_matches_interaction_form() {
        // -(x³ - x) - β (x - m)
        let d = ScalarMeanFieldModel::<f64>::dawson(1.7, 0.5).unwrap();
        for &(x, m) in &[(0.3, -0.2), (-1.4, 0.8), (2.0, 0.0)] {
            let want = -(x * x * x - x) - 1.7 * (x - m);
            assert!((d.drift(x, m) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn rescaled_drift_matches_original_expression() {
        let beta = 0.8;
        let sigma = 0.9;
        let r = ScalarMeanFieldModel::rescaled_double_well(beta, sigma).unwrap();
        for &(x, m) in &[(0.0, 0.1), (0.7, -0.3), (-2.5, 0.4), (6.0, 0.0)] {
            let x2: f64 = x * x;
            let front = (1.0 + x2 / 3.0) / (1.0 + x2).powf(4.0 / 3.0);
            let inner = -x * x2 / (1.0 + x2) + (1.0 - beta) * x / (1.0 + x2).cbrt() + beta * m;
            let corr = sigma * sigma * x * (1.0 + x2 / 9.0) / ((1.0 + x2 / 3.0) * (1.0 + x2));
            let want = front * inner - corr;
            assert!((r.drift(x, m) - want).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn frozen_drift_consistency() {
        for model in models() {
            for &m in &[-0.4, 0.0, 0.3] {
                for k in 0..=80 {
                    let x = -4.0 + 0.1 * k as f64;
                    let h = 1e-5;
                    let d = (model.log_gibbs(x + h, m) - model.log_gibbs(x - h, m)) / (2.0 * h);
                    let lhs = model.diffusivity() * d;
                    let rhs = model.drift(x, m);
                    assert!((lhs - rhs).abs() < 1e-6 * (1.0 + rhs.abs()), "{} x={x} m={m}", model.name());
                }
            }
        }
    }

    #[test]
    fn symmetric_models_have_odd_drift() {
        for model in models().into_iter().filter(|m| m.symmetric()) {
            for &(x, m) in &[(0.3, 0.1), (1.7, -0.6), (4.0, 0.9)] {
                assert_eq!(model.drift(-x, -m), -model.drift(x, m));
            }
        }
    }

    #[test]
    fn linear_functional_derivative_examples() {
        let d = ScalarMeanFieldModel::<f64>::dawson(1.3, 0.7).unwrap();
        assert!((d.linear_functional_derivative(0.4, 0.9, 0.0) - 1.3 * 0.9).abs() < 1e-15);
        let r = ScalarMeanFieldModel::<f64>::rescaled_double_well(1.3, 0.7).unwrap();
        let (x, z) = (0.6, -1.2);
        let want = 1.3 * u0_prime(x) * u0(z);
        assert!((r.linear_functional_derivative(x, z, 0.0) - want).abs() < 1e-15);
        for model in models() {
            let z = 0.8;
            assert_eq!(model.linear_functional_derivative(1.1, z, model.g(z)), 0.0);
        }
    }

    #[test]
    fn log_gibbs_examples() {
        let c = ScalarMeanFieldModel::<f64>::cosine(1.5).unwrap();
        for &(x, m) in &[(0.0, 0.2), (1.3, -0.5)] {
            let want = -(x - 1.5 * m) * (x - 1.5 * m) / 2.0;
            assert!((c.log_gibbs(x, m) - want).abs() < 1e-15);
        }
        let d = ScalarMeanFieldModel::dawson(1.0, 0.6).unwrap();
        for k in 0..20 {
            let x = 0.17 * k as f64;
            assert_eq!(d.log_gibbs(x, 0.0), d.log_gibbs(-x, 0.0));
        }
        let sigma: f64 = 0.8;
        let r = ScalarMeanFieldModel::rescaled_double_well(1.0, sigma).unwrap();
        assert!((r.log_gibbs(0.0, 0.0) + 1.0 / (2.0 * sigma * sigma)).abs() < 1e-15);
    }

    #[test]
    fn coupling_antiderivative() {
        for model in models() {
            for k in 0..40 {
                let x = -3.0 + 0.15 * k as f64;
                let h = 1e-5;
                let d = (model.v(x + h) - model.v(x - h)) / (2.0 * h);
                assert!((d - model.c(x)).abs() < 1e-8);
                let dxi = (model.basis_coordinate(x + h) - model.basis_coordinate(x - h)) / (2.0 * h);
                assert!((dxi - model.basis_coordinate_derivative(x)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("granular".parse::<ModelKind>().is_err());
        let c = ScalarMeanFieldModel::<f64>::from_name("cosine", 1.0, None).unwrap();
        assert_eq!(c.sigma(), 2f64.sqrt());
        assert!(ScalarMeanFieldModel::<f64>::from_name("dawson", 1.0, None).is_err());
        assert!(ScalarMeanFieldModel::<f64>::dawson(1.0, 0.0).is_err());
    }
}
