//! Finite-volume solver for the nonlinear Fokker–Planck equation
//!
//! ```text
//! ∂ₜρ = (σ²/2) ∂ₓ²ρ − ∂ₓ(b(x, mₜ) ρ),     mₜ = ∫ g ρ,
//! ```
//!
//! with Chang–Cooper (exponentially fitted) fluxes, zero-flux walls and
//! implicit steps in which the coupling `m` is held at its value at the
//! start of the step.

use crate::error::{Error, Result};
use crate::metrics::TimeSeries;
use crate::model::ScalarMeanFieldModel;
use crate::numerics::roots::bisect;
use crate::numerics::solve_tridiagonal;
use crate::scalar::{pairwise_sum, Scalar};
use crate::stationary::auto_half_width;

/// Uniform cells on `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FpGrid<T> {
    half_width: T,
    dx: T,
    centers: Vec<T>,
}

impl<T: Scalar> FpGrid<T> {
    pub fn new(half_width: T, n_cells: usize) -> Result<Self> {
        if !(half_width > T::zero()) || n_cells < 3 {
            return Err(Error::Argument(format!(
                "grid needs L > 0 and at least 3 cells, got L = {half_width}, n = {n_cells}"
            )));
        }
        let dx = (half_width + half_width) / T::from_usize_lossy(n_cells);
        let centers = (0..n_cells)
            .map(|i| -half_width + dx * (T::from_usize_lossy(i) + T::lit(0.5)))
            .collect();
        Ok(Self { half_width, dx, centers })
    }

    /// Stationary support plus a `6σ` buffer.
    pub fn for_model(model: &ScalarMeanFieldModel<T>, m: T, n_cells: usize) -> Result<Self> {
        let l = auto_half_width(model, m)? + T::lit(6.0) * model.sigma();
        Self::new(l, n_cells)
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[T] {
        &self.centers
    }

    /// Cell edges, `n + 1` of them.
    pub fn edges(&self) -> Vec<T> {
        (0..=self.len())
            .map(|i| -self.half_width + self.dx * T::from_usize_lossy(i))
            .collect()
    }

    /// Midpoint rule `Σ f ρ Δx`.
    pub fn integrate(&self, f: &[T], rho: &[T]) -> T {
        let terms: Vec<T> = f.iter().zip(rho).map(|(&a, &b)| a * b).collect();
        pairwise_sum(&terms) * self.dx
    }

    /// `f` at the cell centres.
    pub fn tabulate(&self, f: impl Fn(T) -> T) -> Vec<T> {
        self.centers.iter().map(|&x| f(x)).collect()
    }

    /// Running mass at the cell edges, starting from 0.
    pub fn cdf(&self, rho: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(rho.len() + 1);
        let mut acc = T::zero();
        out.push(acc);
        for &r in rho {
            acc = acc + r * self.dx;
            out.push(acc);
        }
        out
    }
}

/// Cell averages of the density at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FpState<T> {
    pub rho: Vec<T>,
    pub t: T,
    pub m: T,
}

impl<T: Scalar> FpState<T> {
    /// Normalises non-negative `values` at the centres to unit mass.
    pub fn from_values(grid: &FpGrid<T>, model: &ScalarMeanFieldModel<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument("density length differs from the cell count".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(Error::Argument(format!("initial density has an invalid value {v}")));
        }
        let ones = vec![T::one(); values.len()];
        let mass = grid.integrate(&ones, &values);
        if !(mass > T::zero()) {
            return Err(Error::Argument("initial density has no mass".into()));
        }
        let rho: Vec<T> = values.into_iter().map(|v| v / mass).collect();
        let m = coupling(grid, model, &rho);
        Ok(Self { rho, t: T::zero(), m })
    }

    /// Gibbs density `exp(log_gibbs(·, m))` sampled at the centres.
    pub fn gibbs(grid: &FpGrid<T>, model: &ScalarMeanFieldModel<T>, m: T) -> Result<Self> {
        let lr = grid.tabulate(|x| model.log_gibbs(x, m));
        let peak = lr.iter().copied().fold(T::neg_infinity(), T::max);
        Self::from_values(grid, model, lr.iter().map(|&l| (l - peak).exp()).collect())
    }

    /// Exact null vector of the discrete operator at coupling `m`:
    /// `ρ_{i+1}/ρ_i = e^{wᵢ}` with `wᵢ = b(x_{i+1/2}, m) Δx / D`.
    pub fn discrete_gibbs(grid: &FpGrid<T>, model: &ScalarMeanFieldModel<T>, m: T) -> Result<Self> {
        let d = model.diffusivity();
        let dx = grid.dx();
        let mut lr = Vec::with_capacity(grid.len());
        lr.push(T::zero());
        for i in 0..grid.len() - 1 {
            let face = grid.centers[i] + dx * T::lit(0.5);
            lr.push(lr[i] + model.drift(face, m) * dx / d);
        }
        let peak = lr.iter().copied().fold(T::neg_infinity(), T::max);
        Self::from_values(grid, model, lr.iter().map(|&l| (l - peak).exp()).collect())
    }

    /// Self-consistent discrete steady state nearest `m_guess`.
    pub fn stationary(grid: &FpGrid<T>, model: &ScalarMeanFieldModel<T>, m_guess: T) -> Result<Self> {
        let mut resid = |m: T| -> Result<T> { Ok(Self::discrete_gibbs(grid, model, m)?.m - m) };
        let f0 = resid(m_guess)?;
        if f0 == T::zero() {
            return Self::discrete_gibbs(grid, model, m_guess);
        }
        let mut h = T::lit(1e-4);
        for _ in 0..40 {
            for b in [m_guess - h, m_guess + h] {
                let fb = resid(b)?;
                if (fb < T::zero()) != (f0 < T::zero()) {
                    let m = bisect(&mut resid, m_guess, b, f0, T::lit(1e-15))?;
                    return Self::discrete_gibbs(grid, model, m);
                }
            }
            h = h * T::lit(2.0);
        }
        Err(Error::Numerical(format!("no discrete stationary state near m = {m_guess}")))
    }

    /// `(1 + δ g) ρ` with `g = clamp(h, ±level)` re-centred under `base`;
    /// `h` is tabulated at the centres.
    pub fn perturbed(
        grid: &FpGrid<T>,
        model: &ScalarMeanFieldModel<T>,
        base: &Self,
        h: &[T],
        level: T,
        delta: T,
    ) -> Result<Self> {
        if h.len() != grid.len() || base.rho.len() != grid.len() {
            return Err(Error::Argument("perturbation must be tabulated on the grid".into()));
        }
        let clamped: Vec<T> = h.iter().map(|&v| v.max(-level).min(level)).collect();
        let shift = grid.integrate(&clamped, &base.rho) / base.mass(grid);
        let g: Vec<T> = clamped.iter().map(|&v| v - shift).collect();
        let sup = g.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
        if delta.abs() * sup >= T::one() {
            return Err(Error::Precondition(format!(
                "delta = {delta} is not below the positivity bound {}",
                T::one() / sup
            )));
        }
        let values = base.rho.iter().zip(&g).map(|(&r, &v)| r * (T::one() + delta * v)).collect();
        Self::from_values(grid, model, values)
    }

    pub fn mass(&self, grid: &FpGrid<T>) -> T {
        pairwise_sum(&self.rho) * grid.dx()
    }
}

fn coupling<T: Scalar>(grid: &FpGrid<T>, model: &ScalarMeanFieldModel<T>, rho: &[T]) -> T {
    let g = grid.tabulate(|x| model.g(x));
    grid.integrate(&g, rho)
}

/// `z / (eᶻ − 1)`.
fn bernoulli<T: Scalar>(z: T) -> T {
    if z.abs() < T::lit(1e-8) {
        T::one() - z * T::lit(0.5)
    } else {
        z / z.exp_m1()
    }
}

/// Face coefficients `(α, γ)` with `J_{i+1/2} = α_i ρ_i − γ_i ρ_{i+1}`.
fn face_coefficients<T: Scalar>(grid: &FpGrid<T>, model: &ScalarMeanFieldModel<T>, m: T) -> (Vec<T>, Vec<T>) {
    let d = model.diffusivity();
    let dx = grid.dx();
    let scale = d / dx;
    let n = grid.len();
    let mut alpha = Vec::with_capacity(n - 1);
    let mut gamma = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let face = grid.centers[i] + dx * T::lit(0.5);
        let w = model.drift(face, m) * dx / d;
        alpha.push(scale * bernoulli(-w));
        gamma.push(scale * bernoulli(w));
    }
    (alpha, gamma)
}

/// Tridiagonal bands of the flux divergence `A` with `dρ/dt = A ρ`.
fn operator_bands<T: Scalar>(grid: &FpGrid<T>, model: &ScalarMeanFieldModel<T>, m: T) -> (Vec<T>, Vec<T>, Vec<T>) {
    let (alpha, gamma) = face_coefficients(grid, model, m);
    let n = grid.len();
    let inv = T::one() / grid.dx();
    let mut lower = vec![T::zero(); n];
    let mut diag = vec![T::zero(); n];
    let mut upper = vec![T::zero(); n];
    for i in 0..n {
        if i + 1 < n {
            diag[i] = diag[i] - alpha[i] * inv;
            upper[i] = gamma[i] * inv;
        }
        if i > 0 {
            diag[i] = diag[i] - gamma[i - 1] * inv;
            lower[i] = alpha[i - 1] * inv;
        }
    }
    (lower, diag, upper)
}

fn band_matvec<T: Scalar>(lower: &[T], diag: &[T], upper: &[T], x: &[T]) -> Vec<T> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut v = diag[i] * x[i];
            if i > 0 {
                v = v + lower[i] * x[i - 1];
            }
            if i + 1 < n {
                v = v + upper[i] * x[i + 1];
            }
            v
        })
        .collect()
}

/// Negative values below this abort the step.
pub const NEGATIVITY_TOL: f64 = 1e-14;

/// One backward-Euler step with `m` frozen at the start of the step.
pub fn fp_step<T: Scalar>(
    state: &FpState<T>,
    model: &ScalarMeanFieldModel<T>,
    grid: &FpGrid<T>,
    dt: T,
) -> Result<FpState<T>> {
    if !(dt > T::zero()) {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    let (lower, diag, upper) = operator_bands(grid, model, state.m);
    let lower: Vec<T> = lower.iter().map(|&v| -dt * v).collect();
    let upper: Vec<T> = upper.iter().map(|&v| -dt * v).collect();
    let diag: Vec<T> = diag.iter().map(|&v| T::one() - dt * v).collect();
    let rho = solve_tridiagonal(&lower, &diag, &upper, &state.rho)?;
    if let Some((i, &v)) = rho.iter().enumerate().find(|(_, v)| !(**v >= -T::lit(NEGATIVITY_TOL))) {
        return Err(Error::Scheme(format!(
            "density {v} at cell {i} after step to t = {}",
            state.t + dt
        )));
    }
    let m = coupling(grid, model, &rho);
    Ok(FpState { rho, t: state.t + dt, m })
}

/// Stepping and output options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpRun<T> {
    pub t_end: T,
    pub dt: T,
    /// Record every `stride`-th step (and the last one).
    pub stride: usize,
    /// Keep the density at every recorded time.
    pub keep_frames: bool,
}

impl<T: Scalar> FpRun<T> {
    /// `dt = 0.1 / max|∂ₓ b|` over the stationary bulk, capped at 0.01.
    pub fn default_dt(model: &ScalarMeanFieldModel<T>, m: T) -> Result<T> {
        let bulk = auto_half_width(model, m)?;
        Ok((T::lit(0.1) * model.relaxation_time(m, bulk)).min(T::lit(0.01)))
    }
}

/// Output of [`fp_evolve`].
#[derive(Debug, Clone)]
pub struct FpTrajectory<T> {
    /// Channels `m`, `mass`, then the observers.
    pub series: TimeSeries<T>,
    pub frames: Vec<(T, Vec<T>)>,
    pub last: FpState<T>,
    /// The stop predicate fired before `t_end`.
    pub stopped: bool,
}

/// Evolves to `t_end`, recording `m`, mass and `∫ fₖ ρ` for each observer
/// tabulated at the centres. `stop(t, m, observer values)` ends the run early.
pub fn fp_evolve<T: Scalar>(
    state: &FpState<T>,
    model: &ScalarMeanFieldModel<T>,
    grid: &FpGrid<T>,
    run: &FpRun<T>,
    observers: &[(String, Vec<T>)],
    stop: Option<&dyn Fn(T, T, &[T]) -> bool>,
) -> Result<FpTrajectory<T>> {
    if !(run.dt > T::zero()) || !(run.t_end >= T::zero()) || run.stride == 0 {
        return Err(Error::Argument("fp run needs dt > 0, t_end >= 0 and stride >= 1".into()));
    }
    if let Some((name, _)) = observers.iter().find(|(_, f)| f.len() != grid.len()) {
        return Err(Error::Argument(format!("observer {name} is not tabulated on the grid")));
    }
    let mut names = vec!["m".to_string(), "mass".to_string()];
    names.extend(observers.iter().map(|(n, _)| n.clone()));
    let mut series = TimeSeries::new(names);
    let mut frames = Vec::new();
    let t0 = state.t;
    let record = |s: &FpState<T>, series: &mut TimeSeries<T>, frames: &mut Vec<(T, Vec<T>)>| -> Result<Vec<T>> {
        let obs: Vec<T> = observers.iter().map(|(_, f)| grid.integrate(f, &s.rho)).collect();
        let mut row = vec![s.m, s.mass(grid)];
        row.extend_from_slice(&obs);
        series.push(s.t, &row)?;
        if run.keep_frames {
            frames.push((s.t, s.rho.clone()));
        }
        Ok(obs)
    };
    let mut cur = state.clone();
    let obs = record(&cur, &mut series, &mut frames)?;
    if let Some(stop) = stop {
        if stop(cur.t, cur.m, &obs) {
            return Ok(FpTrajectory {
                series,
                frames,
                last: cur,
                stopped: true,
            });
        }
    }
    let steps = (run.t_end / run.dt).ceil().to_usize().unwrap_or(0);
    let mut stopped = false;
    for k in 1..=steps {
        let target = (t0 + run.dt * T::from_usize_lossy(k)).min(t0 + run.t_end);
        let mut next = fp_step(&cur, model, grid, target - cur.t)?;
        next.t = target;
        cur = next;
        let due = k % run.stride == 0 || k == steps;
        let obs: Vec<T> = if due || stop.is_some() {
            observers.iter().map(|(_, f)| grid.integrate(f, &cur.rho)).collect()
        } else {
            Vec::new()
        };
        let halt = stop.is_some_and(|s| s(cur.t, cur.m, &obs));
        if due || halt {
            record(&cur, &mut series, &mut frames)?;
        }
        if halt {
            stopped = true;
            break;
        }
    }
    Ok(FpTrajectory {
        series,
        frames,
        last: cur,
        stopped,
    })
}

/// `(t, ∫ f ρₜ)` for each stored frame.
pub fn observable_series<T: Scalar>(frames: &[(T, Vec<T>)], grid: &FpGrid<T>, f: &[T]) -> Vec<(T, T)> {
    frames.iter().map(|(t, rho)| (*t, grid.integrate(f, rho))).collect()
}

/// Linear equation for a signed perturbation `u` of a stationary density
/// `ρ_S` at coupling `m_S`, coefficients frozen:
///
/// ```text
/// ∂ₜu = (σ²/2) ∂ₓ²u − ∂ₓ(b(x, m_S) u) − β ∂ₓ(c ρ_S) ∫ g u.
/// ```
///
/// Crank–Nicolson in time; the rank-one coupling is implicit too.
pub fn fp_linear_evolve<T: Scalar>(
    grid: &FpGrid<T>,
    model: &ScalarMeanFieldModel<T>,
    m_s: T,
    rho_s: &[T],
    u0: &[T],
    t_end: T,
    dt: T,
) -> Result<Vec<T>> {
    if rho_s.len() != grid.len() || u0.len() != grid.len() {
        return Err(Error::Argument("linear fp inputs must be tabulated on the grid".into()));
    }
    let (lower, diag, upper) = operator_bands(grid, model, m_s);
    let n = grid.len();
    let dx = grid.dx();
    let half = T::lit(0.5);
    // −β ∂ₓ(c ρ_S) in conservative form.
    let crho: Vec<T> = grid.centers().iter().zip(rho_s).map(|(&x, &r)| model.c(x) * r).collect();
    let face = |i: usize| -> T {
        if i == 0 || i == n {
            T::zero()
        } else {
            (crho[i - 1] + crho[i]) * half
        }
    };
    let q: Vec<T> = (0..n).map(|i| -model.beta() * (face(i + 1) - face(i)) / dx).collect();
    let g = grid.tabulate(|x| model.g(x));

    let steps = (t_end / dt).ceil().to_usize().unwrap_or(0).max(1);
    let h = t_end / T::from_usize_lossy(steps);
    let lo_i: Vec<T> = lower.iter().map(|&v| -h * half * v).collect();
    let up_i: Vec<T> = upper.iter().map(|&v| -h * half * v).collect();
    let dg_i: Vec<T> = diag.iter().map(|&v| T::one() - h * half * v).collect();
    let coef = h * half;
    let z = solve_tridiagonal(&lo_i, &dg_i, &up_i, &q.iter().map(|&v| coef * v).collect::<Vec<_>>())?;
    let gz = grid.integrate(&g, &z);
    let mut u = u0.to_vec();
    for _ in 0..steps {
        let au = band_matvec(&lower, &diag, &upper, &u);
        let gu = grid.integrate(&g, &u);
        let rhs: Vec<T> = (0..n).map(|i| u[i] + coef * (au[i] + q[i] * gu)).collect();
        let y = solve_tridiagonal(&lo_i, &dg_i, &up_i, &rhs)?;
        // Sherman–Morrison for the rank-one term.
        let s = grid.integrate(&g, &y) / (T::one() - gz);
        u = y.iter().zip(&z).map(|(&a, &b)| a + b * s).collect();
    }
    Ok(u)
}
