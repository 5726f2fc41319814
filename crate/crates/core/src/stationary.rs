//! Gibbs measures of the frozen dynamics, the self-consistency map
//! `ψ(m) = μ_m(g) - m`, its roots and the critical noise level.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ScalarMeanFieldModel;
use crate::numerics::interp::MonotoneCubic;
use crate::numerics::quadrature::QuadratureRule;
use crate::numerics::roots::bisect;
use crate::scalar::Scalar;

/// Tail mass the automatic half-width aims for.
pub const TAIL_TARGET: f64 = 1e-14;
/// Largest tolerated tail mass outside the truncation interval.
pub const TAIL_LIMIT: f64 = 1e-10;
/// Width to which roots of `ψ` are bisected.
pub const ROOT_TOL: f64 = 1e-13;
/// `|ψ(m)|` accepted as self-consistent.
pub const SELF_CONSISTENCY_TOL: f64 = 1e-8;

/// [`SELF_CONSISTENCY_TOL`], widened to the rounding floor of `T`.
pub fn self_consistency_tol<T: Scalar>() -> T {
    T::lit(SELF_CONSISTENCY_TOL).max(T::epsilon() * T::lit(1e3))
}

/// How to discretise a Gibbs measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    /// Truncation half-width `L`; `None` picks it from the tail decay.
    pub half_width: Option<T>,
    /// Number of Gauss–Legendre panels; `None` scales with `L`.
    pub panels: Option<usize>,
    /// Nodes per panel.
    pub order: usize,
    /// Multiplies the panel count.
    pub refinement: usize,
}

impl<T: Scalar> Default for GridSpec<T> {
    fn default() -> Self {
        Self {
            half_width: None,
            panels: None,
            order: 16,
            refinement: 1,
        }
    }
}

impl<T: Scalar> GridSpec<T> {
    pub fn with_half_width(mut self, l: T) -> Self {
        self.half_width = Some(l);
        self
    }

    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = Some(panels);
        self
    }

    /// Same spec with `factor` times as many panels.
    pub fn refined(mut self, factor: usize) -> Self {
        self.refinement *= factor.max(1);
        self
    }

    /// Panels used for a given half-width.
    pub fn panel_count(&self, half_width: T) -> usize {
        let base = self.panels.unwrap_or_else(|| {
            let auto = (half_width * T::lit(20.0)).ceil().to_usize().unwrap_or(usize::MAX);
            auto.max(128)
        });
        base * self.refinement.max(1)
    }
}

/// Density at `x` in the right tail decays like `exp(-(2|b|/σ²) x)`, so the
/// mass beyond `x` is about `ρ(x) σ² / (2|b(x)|)`.
fn tail_estimate<T: Scalar>(model: &ScalarMeanFieldModel<T>, m: T, x: T, log_z: T) -> T {
    let b = model.drift(x, m);
    let inward = if x > T::zero() { b < T::zero() } else { b > T::zero() };
    if !inward {
        return T::infinity();
    }
    (model.log_gibbs(x, m) - log_z).exp() * model.diffusivity() / b.abs()
}

/// Smallest half-width (on a 0.05 lattice) whose two tails both carry less
/// than [`TAIL_TARGET`] mass.
pub fn auto_half_width<T: Scalar>(model: &ScalarMeanFieldModel<T>, m: T) -> Result<T> {
    let target = T::lit(TAIL_TARGET);
    let h = T::lit(0.05);
    let mut reach = T::lit(4.0);
    loop {
        let k = (reach / h).ceil().to_usize().unwrap_or(usize::MAX);
        let xs: Vec<T> = (0..=2 * k).map(|i| h * (T::from_usize_lossy(i) - T::from_usize_lossy(k))).collect();
        let lr: Vec<T> = xs.iter().map(|&x| model.log_gibbs(x, m)).collect();
        let peak = lr.iter().copied().fold(T::neg_infinity(), T::max);
        let sum = lr.iter().map(|&l| (l - peak).exp()).sum::<T>();
        let log_z = peak + (sum * h).ln();
        let ok = |x: T| tail_estimate(model, m, x, log_z) <= target && tail_estimate(model, m, -x, log_z) <= target;
        if ok(h * T::from_usize_lossy(k)) {
            let mut j = k;
            while j > 1 && ok(h * T::from_usize_lossy(j - 1)) {
                j -= 1;
            }
            return Ok(h * T::from_usize_lossy(j));
        }
        reach = reach * T::lit(1.5);
        if reach > T::lit(1e4) {
            return Err(Error::Truncation {
                half_width: reach.as_f64(),
                tail_mass: f64::NAN,
                limit: TAIL_LIMIT,
            });
        }
    }
}

/// A probability law tabulated on the nodes of a quadrature rule.
pub trait GridLaw<T: Scalar> {
    fn rule(&self) -> &QuadratureRule<T>;
    /// Density values at the nodes.
    fn density(&self) -> &[T];
    /// Quadrature weight times density; sums to one.
    fn masses(&self) -> &[T];
    /// Distribution function at the nodes.
    fn cdf(&self) -> &[T];

    fn nodes(&self) -> &[T] {
        self.rule().nodes()
    }

    /// `Σ massᵢ vᵢ` for values tabulated at the nodes.
    fn expect_values(&self, values: &[T]) -> T {
        debug_assert_eq!(values.len(), self.masses().len());
        self.masses()
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (&w, &v)| acc + w * v)
    }

    /// `∫ f dμ`; non-finite `f` at a node is an evaluation error.
    fn expect(&self, f: impl Fn(T) -> T) -> Result<T> {
        let mut acc = T::zero();
        for (&x, &w) in self.nodes().iter().zip(self.masses()) {
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

    /// Monotone interpolant of the cdf on `[lower, upper]`, pinned to 0 and 1
    /// at the ends.
    fn cdf_interpolant(&self) -> MonotoneCubic<T> {
        let rule = self.rule();
        let mut xs = Vec::with_capacity(rule.len() + 2);
        let mut ys = Vec::with_capacity(rule.len() + 2);
        xs.push(rule.lower());
        ys.push(T::zero());
        for (&x, &y) in rule.nodes().iter().zip(self.cdf()) {
            xs.push(x);
            ys.push(y.max(*ys.last().expect("non-empty")));
        }
        xs.push(rule.upper());
        ys.push(T::one().max(*ys.last().expect("non-empty")));
        MonotoneCubic::new(xs, ys).expect("cdf knots are increasing")
    }
}

/// Normalised running integral of a non-negative density, forced monotone.
pub(crate) fn monotone_cdf<T: Scalar>(rule: &QuadratureRule<T>, density: &[T]) -> Vec<T> {
    let mut cdf = rule.cumulative(density);
    let mut prev = T::zero();
    for c in &mut cdf {
        *c = c.max(prev).min(T::one());
        prev = *c;
    }
    cdf
}

/// Normalised Gibbs measure `μ_m ∝ exp(log_gibbs(·, m))` on `[-L, L]`.
#[derive(Debug, Clone)]
pub struct GibbsMeasure<T> {
    model: ScalarMeanFieldModel<T>,
    m: T,
    rule: QuadratureRule<T>,
    log_z: T,
    density: Vec<T>,
    masses: Vec<T>,
    cdf: Vec<T>,
    tail_mass: T,
}

pub fn build_gibbs<T: Scalar>(model: &ScalarMeanFieldModel<T>, m: T, grid: &GridSpec<T>) -> Result<GibbsMeasure<T>> {
    GibbsMeasure::new(model, m, grid)
}

impl<T: Scalar> GibbsMeasure<T> {
    pub fn new(model: &ScalarMeanFieldModel<T>, m: T, grid: &GridSpec<T>) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::Argument(format!("coupling value must be finite, got {m}")));
        }
        let l = match grid.half_width {
            Some(l) if l > T::zero() && l.is_finite() => l,
            Some(l) => return Err(Error::Argument(format!("half-width must be positive, got {l}"))),
            None => auto_half_width(model, m)?,
        };
        let panels = grid.panel_count(l);
        if panels * grid.order < 256 {
            return Err(Error::Argument(format!(
                "Gibbs grid needs at least 256 nodes, got {}",
                panels * grid.order
            )));
        }
        let rule = QuadratureRule::symmetric(l, panels, grid.order)?;
        Self::on_rule(model, m, rule)
    }

    /// Gibbs measure on a caller-supplied rule.
    pub fn on_rule(model: &ScalarMeanFieldModel<T>, m: T, rule: QuadratureRule<T>) -> Result<Self> {
        let lr: Vec<T> = rule.nodes().iter().map(|&x| model.log_gibbs(x, m)).collect();
        if let Some((i, &v)) = lr.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Evaluation {
                node: rule.nodes()[i].as_f64(),
                value: v.as_f64(),
            });
        }
        let peak = lr.iter().copied().fold(T::neg_infinity(), T::max);
        let scaled: Vec<T> = lr.iter().map(|&l| (l - peak).exp()).collect();
        let log_z = peak + rule.integrate_values(&scaled).ln();
        let density: Vec<T> = lr.iter().map(|&l| (l - log_z).exp()).collect();
        let masses: Vec<T> = density.iter().zip(rule.weights()).map(|(&d, &w)| d * w).collect();
        let tail_mass = tail_estimate(model, m, rule.upper(), log_z) + tail_estimate(model, m, rule.lower(), log_z);
        if !(tail_mass <= T::lit(TAIL_LIMIT)) {
            return Err(Error::Truncation {
                half_width: rule.half_width().as_f64(),
                tail_mass: tail_mass.as_f64(),
                limit: TAIL_LIMIT,
            });
        }
        let cdf = monotone_cdf(&rule, &density);
        Ok(Self {
            model: *model,
            m,
            rule,
            log_z,
            density,
            masses,
            cdf,
            tail_mass,
        })
    }

    pub fn model(&self) -> &ScalarMeanFieldModel<T> {
        &self.model
    }

    /// The frozen coupling value.
    pub fn m(&self) -> T {
        self.m
    }

    pub fn log_z(&self) -> T {
        self.log_z
    }

    /// Estimated mass outside the truncation interval.
    pub fn tail_mass(&self) -> T {
        self.tail_mass
    }

    /// Density at an arbitrary point (zero outside the truncation interval).
    pub fn density_at(&self, x: T) -> T {
        if x < self.rule.lower() || x > self.rule.upper() {
            return T::zero();
        }
        (self.model.log_gibbs(x, self.m) - self.log_z).exp()
    }

    /// `μ_m(f)`.
    pub fn moment(&self, f: impl Fn(T) -> T) -> Result<T> {
        self.expect(f)
    }

    /// `μ_m(g)`, the coupling statistic this measure produces.
    pub fn coupling_mean(&self) -> T {
        let g: Vec<T> = self.nodes().iter().map(|&x| self.model.g(x)).collect();
        self.expect_values(&g)
    }

    /// `μ(fh) - μ(f)μ(h)` for tabulated values.
    pub fn covariance_values(&self, f: &[T], h: &[T]) -> T {
        let mf = self.expect_values(f);
        let mh = self.expect_values(h);
        let centred: Vec<T> = f.iter().zip(h).map(|(&a, &b)| (a - mf) * (b - mh)).collect();
        self.expect_values(&centred)
    }
}

impl<T: Scalar> GridLaw<T> for GibbsMeasure<T> {
    fn rule(&self) -> &QuadratureRule<T> {
        &self.rule
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

/// `μ(f)` for any tabulated law.
pub fn moment<T: Scalar, L: GridLaw<T>>(law: &L, f: impl Fn(T) -> T) -> Result<T> {
    law.expect(f)
}

/// Self-consistency residual `ψ(m) = μ_m(g) - m`.
pub fn psi<T: Scalar>(model: &ScalarMeanFieldModel<T>, m: T, grid: &GridSpec<T>) -> Result<T> {
    Ok(GibbsMeasure::new(model, m, grid)?.coupling_mean() - m)
}

/// `S₀ = (2β/σ²) Cov_μ(v, g)` without checking self-consistency of `m`.
pub fn indicator_at<T: Scalar>(model: &ScalarMeanFieldModel<T>, m: T, grid: &GridSpec<T>) -> Result<T> {
    let gibbs = GibbsMeasure::new(model, m, grid)?;
    Ok(indicator_of(&gibbs))
}

fn indicator_of<T: Scalar>(gibbs: &GibbsMeasure<T>) -> T {
    let model = gibbs.model();
    let v: Vec<T> = gibbs.nodes().iter().map(|&x| model.v(x)).collect();
    let g: Vec<T> = gibbs.nodes().iter().map(|&x| model.g(x)).collect();
    T::lit(2.0) * model.beta() / (model.sigma() * model.sigma()) * gibbs.covariance_values(&v, &g)
}

/// Stability indicator at a stationary point; equals `1 + ψ′(m)`, and
/// `S₀ > 1` signals an unstable branch.
pub fn stability_indicator<T: Scalar>(model: &ScalarMeanFieldModel<T>, m_root: T, grid: &GridSpec<T>) -> Result<T> {
    let gibbs = GibbsMeasure::new(model, m_root, grid)?;
    let residual = gibbs.coupling_mean() - m_root;
    if !(residual.abs() <= self_consistency_tol::<T>()) {
        return Err(Error::Precondition(format!(
            "m = {m_root} is not self-consistent: psi(m) = {}", residual.as_f64()
        )));
    }
    Ok(indicator_of(&gibbs))
}

/// A stationary branch `μ_m` with `ψ(m) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryRoot<T> {
    pub m: T,
    pub s0: T,
    /// Double root (`ψ′ ≈ 0`), typically the pitchfork at `σ_c`.
    pub fold: bool,
}

#[derive(Debug, Clone)]
pub struct SelfConsistencyReport<T> {
    /// Ascending in `m`.
    pub roots: Vec<StationaryRoot<T>>,
    pub psi_scan: Vec<(T, T)>,
    pub branch_count: usize,
}

impl<T: Scalar> SelfConsistencyReport<T> {
    pub fn root_values(&self) -> Vec<T> {
        self.roots.iter().map(|r| r.m).collect()
    }
}

/// Default scan interval for the coupling value.
pub fn default_scan_range<T: Scalar>(model: &ScalarMeanFieldModel<T>) -> (T, T) {
    match model.kind() {
        crate::model::ModelKind::Dawson => (T::lit(-3.0), T::lit(3.0)),
        _ => (-T::one(), T::one()),
    }
}

pub const DEFAULT_ROOT_SCAN: usize = 2001;

/// All sign-change roots of `ψ` on `scan`, plus touching zeros flagged as
/// folds.
pub fn self_consistent_roots<T: Scalar>(
    model: &ScalarMeanFieldModel<T>,
    scan: (T, T),
    n_scan: usize,
    grid: &GridSpec<T>,
) -> Result<SelfConsistencyReport<T>> {
    let (lo, hi) = scan;
    if !(hi > lo) || n_scan < 2 {
        return Err(Error::Argument(format!("invalid root scan [{lo}, {hi}] with {n_scan} points")));
    }
    let step = (hi - lo) / T::from_usize_lossy(n_scan - 1);
    let ms: Vec<T> = (0..n_scan)
        .map(|k| if k + 1 == n_scan { hi } else { lo + step * T::from_usize_lossy(k) })
        .collect();
    let values: Vec<T> = ms
        .par_iter()
        .map(|&m| psi(model, m, grid))
        .collect::<Result<Vec<T>>>()?;

    let mut f = |m: T| psi(model, m, grid);
    let tol = T::lit(ROOT_TOL);
    let zero_tol = T::lit(1e-9);
    let mut found: Vec<(T, bool)> = Vec::new();
    for k in 0..n_scan {
        let (a, fa) = (ms[k], values[k]);
        if fa == T::zero() {
            found.push((a, false));
            continue;
        }
        if k + 1 < n_scan {
            let fb = values[k + 1];
            if fb != T::zero() && (fa < T::zero()) != (fb < T::zero()) {
                found.push((bisect(&mut f, a, ms[k + 1], fa, tol)?, false));
                continue;
            }
        }
        // Touching zero without a sign change.
        if k > 0 && k + 1 < n_scan {
            let (fp, fnx) = (values[k - 1], values[k + 1]);
            let same_sign = (fp < T::zero()) == (fa < T::zero()) && (fnx < T::zero()) == (fa < T::zero());
            if same_sign && fa.abs() < zero_tol && fa.abs() <= fp.abs() && fa.abs() <= fnx.abs() {
                found.push((a, true));
            }
        }
    }
    if model.symmetric() {
        for (r, _) in &mut found {
            if r.abs() <= T::lit(1e-9) {
                *r = T::zero();
            }
        }
    }
    found.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite roots"));
    found.dedup_by(|a, b| (a.0 - b.0).abs() <= T::lit(1e-9));

    let mut roots = Vec::with_capacity(found.len());
    for (m, touching) in found {
        let s0 = indicator_at(model, m, grid)?;
        let fold = touching || (s0 - T::one()).abs() < T::lit(1e-6);
        roots.push(StationaryRoot { m, s0, fold });
    }
    let branch_count = roots.len();
    Ok(SelfConsistencyReport {
        roots,
        psi_scan: ms.into_iter().zip(values).collect(),
        branch_count,
    })
}

#[derive(Debug, Clone)]
pub struct CriticalSigma<T> {
    pub sigma_c: Option<T>,
    /// Final bisection bracket `(σ with S₀ > 1, σ with S₀ < 1)`.
    pub bracket: Option<(T, T)>,
    /// `(σ, S₀(σ))` on the scan grid.
    pub indicator_curve: Vec<(T, T)>,
}

/// First crossing of `S₀(σ) = 1` at `m = 0` on `sigma_range`, refined by
/// bisection.
///
/// `m = 0` is a stationary point only for symmetric models; for the others
/// the curve is still reported but rarely crosses.
pub fn critical_sigma<T: Scalar>(
    model: &ScalarMeanFieldModel<T>,
    sigma_range: (T, T),
    n_scan: usize,
    grid: &GridSpec<T>,
) -> Result<CriticalSigma<T>> {
    let (lo, hi) = sigma_range;
    if !(lo > T::zero()) || !(hi > lo) || n_scan < 2 {
        return Err(Error::Argument(format!("invalid sigma range [{lo}, {hi}] with {n_scan} points")));
    }
    let step = (hi - lo) / T::from_usize_lossy(n_scan - 1);
    let sigmas: Vec<T> = (0..n_scan)
        .map(|k| if k + 1 == n_scan { hi } else { lo + step * T::from_usize_lossy(k) })
        .collect();
    let excess = |s: T| -> Result<T> { Ok(indicator_at(&model.with_sigma(s)?, T::zero(), grid)? - T::one()) };
    let values: Vec<T> = sigmas.par_iter().map(|&s| excess(s)).collect::<Result<Vec<T>>>()?;
    let indicator_curve = sigmas.iter().zip(&values).map(|(&s, &v)| (s, v + T::one())).collect();

    let crossing = (0..n_scan - 1).find(|&k| (values[k] < T::zero()) != (values[k + 1] < T::zero()));
    let Some(k) = crossing else {
        return Ok(CriticalSigma {
            sigma_c: None,
            bracket: None,
            indicator_curve,
        });
    };
    let (mut a, mut b) = (sigmas[k], sigmas[k + 1]);
    let fa = values[k];
    let tol = T::lit(1e-12) * b;
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let mid = a + (b - a) * T::lit(0.5);
        let fm = excess(mid)?;
        if (fm < T::zero()) == (fa < T::zero()) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(CriticalSigma {
        sigma_c: Some(a + (b - a) * T::lit(0.5)),
        bracket: Some((a, b)),
        indicator_curve,
    })
}
