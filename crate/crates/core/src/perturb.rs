//! Perturbed initial laws `(1 + δ g_M) μ∞` and sampling from tabulated laws.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::QuadratureRule;
use crate::rng::{open_unit, CounterRng};
use crate::scalar::Scalar;
use crate::spectrum::SpectralAnalysis;
use crate::stationary::{monotone_cdf, GibbsMeasure, GridLaw};

/// Which perturbation direction to use.
#[derive(Debug, Clone, PartialEq)]
pub enum Direction<T> {
    /// Real part of the left dominant eigenvector.
    AdjointRe,
    /// Imaginary part of the left dominant eigenvector.
    AdjointIm,
    /// Values at the quadrature nodes.
    Custom(Vec<T>),
}

impl<T> Direction<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Direction::AdjointRe => "adjoint-re",
            Direction::AdjointIm => "adjoint-im",
            Direction::Custom(_) => "custom-file",
        }
    }
}

/// Density ratio `h` (w.r.t. `μ∞`) of the requested direction at the nodes.
///
/// `None` when the direction vanishes, as the imaginary part does for a
/// real dominant eigenvalue.
pub fn direction_values<T: Scalar>(analysis: &SpectralAnalysis<T>, direction: &Direction<T>) -> Result<Option<Vec<T>>> {
    let coeffs = match direction {
        Direction::AdjointRe => analysis.mode.adjoint_re(),
        Direction::AdjointIm => analysis.mode.adjoint_im(),
        Direction::Custom(values) => {
            if values.len() != analysis.gibbs.nodes().len() {
                return Err(Error::Argument(format!(
                    "custom direction has {} values, grid has {} nodes",
                    values.len(),
                    analysis.gibbs.nodes().len()
                )));
            }
            return Ok(Some(values.clone()));
        }
    };
    let norm = coeffs.iter().fold(T::zero(), |acc, &c| acc + c * c).sqrt();
    if !(norm > T::lit(1e-12)) {
        return Ok(None);
    }
    Ok(Some(analysis.eigen_series_at_nodes(&coeffs)))
}

/// `h` at arbitrary points: the eigen series for the adjoint directions,
/// linear interpolation of the node values (constant outside) for a custom
/// one.
pub fn direction_at<T: Scalar>(
    analysis: &SpectralAnalysis<T>,
    direction: &Direction<T>,
    xs: &[T],
) -> Result<Option<Vec<T>>> {
    let coeffs = match direction {
        Direction::AdjointRe => analysis.mode.adjoint_re(),
        Direction::AdjointIm => analysis.mode.adjoint_im(),
        Direction::Custom(values) => {
            let nodes = analysis.gibbs.nodes();
            if values.len() != nodes.len() {
                return Err(Error::Argument(format!(
                    "custom direction has {} values, grid has {} nodes",
                    values.len(),
                    nodes.len()
                )));
            }
            let at = |x: T| -> T {
                let k = nodes.partition_point(|&n| n <= x);
                if k == 0 {
                    values[0]
                } else if k == nodes.len() {
                    values[k - 1]
                } else {
                    let w = (x - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
                    values[k - 1] + w * (values[k] - values[k - 1])
                }
            };
            return Ok(Some(xs.iter().map(|&x| at(x)).collect()));
        }
    };
    let norm = coeffs.iter().fold(T::zero(), |acc, &c| acc + c * c).sqrt();
    if !(norm > T::lit(1e-12)) {
        return Ok(None);
    }
    let poly = analysis.spectrum.to_polynomial(&coeffs);
    Ok(Some(xs.iter().map(|&x| analysis.basis.eval_series(&poly, x)).collect()))
}

/// Clamped and centred direction with its truncation error.
#[derive(Debug, Clone)]
pub struct TruncatedDirection<T> {
    pub values: Vec<T>,
    pub level: T,
    /// `‖g_M − (h − μ∞ h)‖` in `L²(μ∞)`.
    pub gamma: T,
}

impl<T: Scalar> TruncatedDirection<T> {
    /// `1 / max|g_M|`: amplitudes below this keep the density positive.
    pub fn delta_bound(&self) -> T {
        T::one() / self.sup_norm()
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }
}

pub fn truncate_center<T: Scalar>(gibbs: &GibbsMeasure<T>, h: &[T], level: T) -> Result<TruncatedDirection<T>> {
    if !(level > T::zero()) {
        return Err(Error::Argument(format!("truncation level must be positive, got {level}")));
    }
    if h.len() != gibbs.nodes().len() {
        return Err(Error::Argument("direction length differs from node count".into()));
    }
    let clamped: Vec<T> = h.iter().map(|&v| v.max(-level).min(level)).collect();
    let shift = gibbs.expect_values(&clamped);
    let values: Vec<T> = clamped.iter().map(|&v| v - shift).collect();
    let mh = gibbs.expect_values(h);
    let sq: Vec<T> = values
        .iter()
        .zip(h)
        .map(|(&g, &v)| {
            let d = g - (v - mh);
            d * d
        })
        .collect();
    let gamma = gibbs.expect_values(&sq).max(T::zero()).sqrt();
    Ok(TruncatedDirection { values, level, gamma })
}

/// `L²(μ∞)` norm of `h`.
pub fn l2_norm<T: Scalar>(gibbs: &GibbsMeasure<T>, h: &[T]) -> T {
    let sq: Vec<T> = h.iter().map(|&v| v * v).collect();
    gibbs.expect_values(&sq).sqrt()
}

/// Default level: start at `8‖h‖` and double until `γ < 0.01‖h‖`.
pub fn default_truncation<T: Scalar>(gibbs: &GibbsMeasure<T>, h: &[T]) -> Result<TruncatedDirection<T>> {
    let norm = l2_norm(gibbs, h);
    if !(norm > T::zero()) {
        return Err(Error::Argument("direction has zero L2 norm".into()));
    }
    let sup = h.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
    let mut level = T::lit(8.0) * norm;
    loop {
        let t = truncate_center(gibbs, h, level)?;
        if t.gamma < T::lit(0.01) * norm || level >= sup {
            return Ok(t);
        }
        level = level * T::lit(2.0);
    }
}

/// Everything that defines one perturbed initial law.
#[derive(Debug, Clone)]
pub struct PerturbationSpec<T> {
    pub direction: TruncatedDirection<T>,
    pub delta: T,
}

impl<T: Scalar> PerturbationSpec<T> {
    pub fn gamma(&self) -> T {
        self.direction.gamma
    }

    pub fn level(&self) -> T {
        self.direction.level
    }
}

/// `(1 + δ g_M) μ∞` on the base grid.
#[derive(Debug, Clone)]
pub struct PerturbedMeasure<T> {
    base: GibbsMeasure<T>,
    delta: T,
    ratio: Vec<T>,
    density: Vec<T>,
    masses: Vec<T>,
    cdf: Vec<T>,
}

impl<T: Scalar> PerturbedMeasure<T> {
    pub fn base(&self) -> &GibbsMeasure<T> {
        &self.base
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// `1 + δ g_M` at the nodes.
    pub fn ratio(&self) -> &[T] {
        &self.ratio
    }

    /// `Σ masses`, one up to rounding.
    pub fn total_mass(&self) -> T {
        crate::scalar::pairwise_sum(&self.masses)
    }
}

impl<T: Scalar> GridLaw<T> for PerturbedMeasure<T> {
    fn rule(&self) -> &QuadratureRule<T> {
        self.base.rule()
    }

    fn density(&self) -> &[T] {
        &self.density
    }

    fn masses(&self) -> &[T] {
        &self.masses
    }

    fn cdf(&self) -> &[T] {
        &self.cdf
    }
}

pub fn perturbed_measure<T: Scalar>(gibbs: &GibbsMeasure<T>, g: &[T], delta: T) -> Result<PerturbedMeasure<T>> {
    if g.len() != gibbs.nodes().len() {
        return Err(Error::Argument("direction length differs from node count".into()));
    }
    if delta < T::zero() {
        return Err(Error::Argument(format!("delta must be non-negative, got {delta}")));
    }
    let sup = g.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
    if delta * sup >= T::one() {
        return Err(Error::Precondition(format!(
            "delta = {delta} is not below the positivity bound 1/max|g_M| = {}",
            T::one() / sup
        )));
    }
    let ratio: Vec<T> = g.iter().map(|&v| T::one() + delta * v).collect();
    let density: Vec<T> = gibbs.density().iter().zip(&ratio).map(|(&d, &r)| d * r).collect();
    let masses: Vec<T> = gibbs.masses().iter().zip(&ratio).map(|(&w, &r)| w * r).collect();
    let cdf = monotone_cdf(gibbs.rule(), &density);
    Ok(PerturbedMeasure {
        base: gibbs.clone(),
        delta,
        ratio,
        density,
        masses,
        cdf,
    })
}

/// Stream index reserved for initial sampling; particle streams use their
/// own index as `stream` and the step number as `step`.
pub const SAMPLING_STEP: u64 = u64::MAX;

/// `n` inverse-cdf draws; draw `i` uses the counter stream `(seed, i)`.
pub fn sample_measure<T: Scalar, L: GridLaw<T> + Sync>(law: &L, n: usize, seed: u64) -> Vec<T> {
    if n == 0 {
        return Vec::new();
    }
    let cdf = law.cdf_interpolant();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = CounterRng::new(seed, i as u64, SAMPLING_STEP);
            cdf.invert(T::lit(open_unit(&mut rng)))
        })
        .collect()
}
