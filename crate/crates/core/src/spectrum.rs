//! Galerkin spectrum of the linearised operator `L_μ + Ā` at a stationary
//! law `μ`.
//!
//! `L_μ` is discretised in `L²(μ)` with `μ`-orthonormal polynomials in the
//! model's basis coordinate; its Dirichlet form gives a symmetric matrix
//! whose eigenpairs `(λⱼ, eⱼ)` diagonalise it. The law-dependence of the
//! drift adds the rank-one term `Āf = β φ · ∫ v′ f′ dμ`, so in the
//! eigenbasis the full generator is `diag(-λ) + β φ̂ ℓᵀ` and its positive
//! eigenvalue solves the secular equation `S(λ) = 1`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::ScalarMeanFieldModel;
use crate::numerics::dense::{dense_eigenvalues, eigenvector_for, normalise_phase};
use crate::numerics::expm::expm;
use crate::numerics::matrix::DMat;
use crate::numerics::roots::find_roots;
use crate::numerics::symeig::sym_eig;
use crate::numerics::EIGEN_CLUSTER_TOL;
use crate::scalar::Scalar;
use crate::stationary::{auto_half_width, GibbsMeasure, GridLaw, GridSpec, self_consistency_tol};

/// Real part of the dominant eigenvalue above which a stationary law is
/// declared unstable.
pub const TOL_SPEC: f64 = 1e-7;
pub const DEFAULT_DEGREE: usize = 120;

/// Orthonormal polynomials `p₀ … p_n` in `ξ(x)` with respect to `μ`.
#[derive(Debug, Clone)]
pub struct SpectralBasis<T> {
    model: ScalarMeanFieldModel<T>,
    /// Recurrence `b_{k+1} p_{k+1} = (ξ - α_k) p_k - b_k p_{k-1}`.
    alpha: Vec<T>,
    b: Vec<T>,
    /// `values[(k, q)] = p_k(x_q)`.
    values: DMat<T>,
    /// `derivatives[(k, q)] = d/dx p_k(ξ(x_q))`.
    derivatives: DMat<T>,
}

impl<T: Scalar> SpectralBasis<T> {
    pub fn degree(&self) -> usize {
        self.alpha.len() - 1
    }

    /// Number of basis functions, `degree + 1`.
    pub fn size(&self) -> usize {
        self.alpha.len()
    }

    pub fn recurrence(&self) -> (&[T], &[T]) {
        (&self.alpha, &self.b)
    }

    pub fn values(&self) -> &DMat<T> {
        &self.values
    }

    pub fn derivatives(&self) -> &DMat<T> {
        &self.derivatives
    }

    /// `p_k(x)` for every k at an arbitrary point.
    pub fn eval(&self, x: T) -> Vec<T> {
        let xi = self.model.basis_coordinate(x);
        let n = self.size();
        let mut p = vec![T::zero(); n];
        p[0] = T::one();
        if n > 1 {
            p[1] = (xi - self.alpha[0]) / self.b[1];
        }
        for k in 1..n - 1 {
            p[k + 1] = ((xi - self.alpha[k]) * p[k] - self.b[k] * p[k - 1]) / self.b[k + 1];
        }
        p
    }

    /// `Σ_k c_k p_k(x)`.
    pub fn eval_series(&self, coeffs: &[T], x: T) -> T {
        self.eval(x).iter().zip(coeffs).fold(T::zero(), |acc, (&p, &c)| acc + p * c)
    }

    /// `Σ_k c_k p_k` at every quadrature node.
    pub fn series_at_nodes(&self, coeffs: &[T]) -> Vec<T> {
        let nq = self.values.cols();
        let mut out = vec![T::zero(); nq];
        for (k, &c) in coeffs.iter().enumerate().take(self.size()) {
            if c == T::zero() {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.values.row(k)) {
                *o = *o + c * p;
            }
        }
        out
    }

    /// `⟨f, p_k⟩_μ` for values tabulated at the nodes.
    pub fn project_values(&self, gibbs: &GibbsMeasure<T>, f: &[T]) -> Vec<T> {
        let weighted: Vec<T> = gibbs.masses().iter().zip(f).map(|(&w, &v)| w * v).collect();
        (0..self.size())
            .map(|k| {
                self.values
                    .row(k)
                    .iter()
                    .zip(&weighted)
                    .fold(T::zero(), |acc, (&p, &w)| acc + p * w)
            })
            .collect()
    }
}

/// Smallest half-width (growing from the tail-mass rule in 5% steps) at
/// which every basis polynomial up to degree `n` carries negligible weight at
/// the ends: `ρ(±L) · maxₖ pₖ(±L)² < 1e-16`.
pub fn spectral_half_width<T: Scalar>(model: &ScalarMeanFieldModel<T>, m: T, degree: usize) -> Result<T> {
    let mut l = auto_half_width(model, m)?;
    let cut = T::lit(1e-16);
    for _ in 0..100 {
        let gibbs = GibbsMeasure::new(model, m, &GridSpec::default().with_half_width(l))?;
        let basis = build_basis(&gibbs, degree)?;
        let edge = |x: T| {
            let peak = basis.eval(x).iter().fold(T::zero(), |acc, &p| acc.max(p * p));
            gibbs.density_at(x) * peak
        };
        if edge(l) < cut && edge(-l) < cut {
            return Ok(l);
        }
        l = l * T::lit(1.05);
    }
    Err(Error::Range(format!("no half-width resolves degree {degree}")))
}

/// `grid` with its half-width filled from [`spectral_half_width`] when unset.
pub fn spectral_grid<T: Scalar>(
    model: &ScalarMeanFieldModel<T>,
    m: T,
    grid: &GridSpec<T>,
    degree: usize,
) -> Result<GridSpec<T>> {
    match grid.half_width {
        Some(_) => Ok(*grid),
        None => Ok(grid.with_half_width(spectral_half_width(model, m, degree)?)),
    }
}

/// Stieltjes procedure on the discrete measure carried by the quadrature
/// nodes of `gibbs`.
pub fn build_basis<T: Scalar>(gibbs: &GibbsMeasure<T>, n: usize) -> Result<SpectralBasis<T>> {
    let nodes = gibbs.nodes();
    let nq = nodes.len();
    if 2 * n + 2 > nq {
        return Err(Error::Resolution {
            degree: n,
            deviation: f64::NAN,
        });
    }
    let model = *gibbs.model();
    let w = gibbs.masses();
    let xi: Vec<T> = nodes.iter().map(|&x| model.basis_coordinate(x)).collect();
    let dxi: Vec<T> = nodes.iter().map(|&x| model.basis_coordinate_derivative(x)).collect();

    let size = n + 1;
    let mut values = DMat::zeros(size, nq);
    let mut dvals = DMat::zeros(size, nq); // d/dξ
    let mut alpha = vec![T::zero(); size];
    let mut b = vec![T::zero(); size];
    for q in 0..nq {
        values[(0, q)] = T::one();
    }
    let inner = |f: &[T], g: &[T]| -> T {
        w.iter()
            .zip(f.iter().zip(g))
            .fold(T::zero(), |acc, (&wq, (&a, &c))| acc + wq * a * c)
    };
    for k in 0..size {
        let pk = values.row(k).to_vec();
        let xpk: Vec<T> = pk.iter().zip(&xi).map(|(&p, &x)| p * x).collect();
        alpha[k] = inner(&xpk, &pk);
        if k + 1 == size {
            break;
        }
        let mut q: Vec<T> = (0..nq).map(|i| (xi[i] - alpha[k]) * pk[i]).collect();
        if k > 0 {
            for i in 0..nq {
                q[i] = q[i] - b[k] * values[(k - 1, i)];
            }
        }
        let norm = inner(&q, &q).sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::Resolution {
                degree: k + 1,
                deviation: f64::NAN,
            });
        }
        b[k + 1] = norm;
        for i in 0..nq {
            values[(k + 1, i)] = q[i] / norm;
            let prev = if k > 0 { dvals[(k - 1, i)] } else { T::zero() };
            dvals[(k + 1, i)] = ((xi[i] - alpha[k]) * dvals[(k, i)] + pk[i] - b[k] * prev) / norm;
        }
    }

    let mut derivatives = dvals;
    for k in 0..size {
        for q in 0..nq {
            derivatives[(k, q)] = derivatives[(k, q)] * dxi[q];
        }
    }
    let basis = SpectralBasis {
        model,
        alpha,
        b,
        values,
        derivatives,
    };
    // 1e-8 in double precision; the same margin over rounding otherwise.
    let limit = T::lit(1e-8).max(T::epsilon() * T::lit(5e7));
    let deviation = gram_deviation(gibbs, &basis);
    if !(deviation <= limit) {
        return Err(Error::Resolution {
            degree: n,
            deviation: deviation.as_f64(),
        });
    }
    Ok(basis)
}

/// `max |⟨p_i, p_j⟩ - δ_ij|`.
pub fn gram_deviation<T: Scalar>(gibbs: &GibbsMeasure<T>, basis: &SpectralBasis<T>) -> T {
    let w = gibbs.masses();
    let size = basis.size();
    let mut worst = T::zero();
    for i in 0..size {
        let wi: Vec<T> = basis.values.row(i).iter().zip(w).map(|(&p, &wq)| p * wq).collect();
        for j in 0..=i {
            let g = wi.iter().zip(basis.values.row(j)).fold(T::zero(), |acc, (&a, &p)| acc + a * p);
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

/// `K_ij = (σ²/2) μ(p_i′ p_j′)`, the Dirichlet form of `-L_μ` on the basis.
pub fn dirichlet_matrix<T: Scalar>(gibbs: &GibbsMeasure<T>, basis: &SpectralBasis<T>) -> Result<DMat<T>> {
    let size = basis.size();
    let d = gibbs.model().diffusivity();
    let w = gibbs.masses();
    let dp = basis.derivatives();
    let mut k = DMat::zeros(size, size);
    for i in 1..size {
        let wi: Vec<T> = dp.row(i).iter().zip(w).map(|(&p, &wq)| p * wq).collect();
        for j in 1..=i {
            let v = d * wi.iter().zip(dp.row(j)).fold(T::zero(), |acc, (&a, &p)| acc + a * p);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    if !k.all_finite() {
        return Err(Error::Numerical("Dirichlet matrix has non-finite entries".into()));
    }
    Ok(k)
}

/// Eigenpairs of `-L_μ` in the polynomial basis.
#[derive(Debug, Clone)]
pub struct GeneratorSpectrum<T> {
    /// Ascending, `values[0] = 0`.
    pub values: Vec<T>,
    /// `vectors[j][k]`: coefficient of `p_k` in `eⱼ`.
    pub vectors: Vec<Vec<T>>,
}

impl<T: Scalar> GeneratorSpectrum<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Smallest nonzero eigenvalue.
    pub fn gap(&self) -> Option<T> {
        self.values.get(1).copied()
    }

    /// Polynomial coefficients of `Σⱼ cⱼ eⱼ`.
    pub fn to_polynomial(&self, eigen_coeffs: &[T]) -> Vec<T> {
        let n = self.values.len();
        let mut out = vec![T::zero(); n];
        for (vec, &c) in self.vectors.iter().zip(eigen_coeffs) {
            for (o, &e) in out.iter_mut().zip(vec) {
                *o = *o + c * e;
            }
        }
        out
    }

    /// Eigen-coefficients `⟨f, eⱼ⟩` from polynomial coefficients `⟨f, p_k⟩`.
    pub fn from_polynomial(&self, poly_coeffs: &[T]) -> Vec<T> {
        self.vectors
            .iter()
            .map(|e| e.iter().zip(poly_coeffs).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }
}

pub fn base_spectrum<T: Scalar>(k: &DMat<T>) -> Result<GeneratorSpectrum<T>> {
    let sys = sym_eig(k)?;
    let scale = sys.values.last().map_or(T::one(), |v| v.abs().max(T::one()));
    let values = sys
        .values
        .iter()
        .map(|&v| if v.abs() <= T::lit(1e-12) * scale { T::zero() } else { v })
        .collect();
    Ok(GeneratorSpectrum {
        values,
        vectors: sys.vectors,
    })
}

/// The rank-one coupling `Āf = β φ ∫ v′ f′ dμ` in eigen-coordinates.
#[derive(Debug, Clone)]
pub struct RankOneCoupling<T> {
    /// `⟨φ, eⱼ⟩` with `φ = g - m`.
    pub phi_hat: Vec<T>,
    /// `⟨v, eⱼ⟩`.
    pub v_hat: Vec<T>,
    /// `ℓⱼ = ∫ v′ eⱼ′ dμ = (2/σ²) λⱼ v̂ⱼ`.
    pub ell: Vec<T>,
    pub beta: T,
    pub sigma: T,
    /// `μ(φ)`, zero at a self-consistent root.
    pub phi_mean: T,
}

pub fn coupling_vectors<T: Scalar>(
    gibbs: &GibbsMeasure<T>,
    basis: &SpectralBasis<T>,
    spectrum: &GeneratorSpectrum<T>,
    model: &ScalarMeanFieldModel<T>,
) -> Result<RankOneCoupling<T>> {
    let m = gibbs.m();
    let phi: Vec<T> = gibbs.nodes().iter().map(|&x| model.g(x) - m).collect();
    let phi_mean = gibbs.expect_values(&phi);
    if !(phi_mean.abs() <= self_consistency_tol::<T>()) {
        return Err(Error::Precondition(format!(
            "coupling needs a self-consistent root; mu(g) - m = {}",
            phi_mean.as_f64()
        )));
    }
    let v: Vec<T> = gibbs.nodes().iter().map(|&x| model.v(x)).collect();
    let phi_hat = spectrum.from_polynomial(&basis.project_values(gibbs, &phi));
    let v_hat = spectrum.from_polynomial(&basis.project_values(gibbs, &v));
    let scale = T::lit(2.0) / (model.sigma() * model.sigma());
    let ell = spectrum
        .values
        .iter()
        .zip(&v_hat)
        .map(|(&l, &vh)| scale * l * vh)
        .collect();
    Ok(RankOneCoupling {
        phi_hat,
        v_hat,
        ell,
        beta: model.beta(),
        sigma: model.sigma(),
        phi_mean,
    })
}

/// `S(λ) = β Σ_{j≥1} ℓⱼ φ̂ⱼ / (λⱼ + λ)`.
pub fn secular_function<T: Scalar>(spectrum: &GeneratorSpectrum<T>, coupling: &RankOneCoupling<T>, lambda: T) -> T {
    let mut acc = T::zero();
    for j in 1..spectrum.values.len() {
        let denom = spectrum.values[j] + lambda;
        if denom > T::zero() {
            acc = acc + coupling.ell[j] * coupling.phi_hat[j] / denom;
        }
    }
    coupling.beta * acc
}

/// Upper bound for any positive root: `S(λ) ≤ β Σ |ℓⱼ φ̂ⱼ| / λ`.
fn secular_bound<T: Scalar>(coupling: &RankOneCoupling<T>) -> T {
    coupling.beta
        * coupling
            .ell
            .iter()
            .zip(&coupling.phi_hat)
            .fold(T::zero(), |acc, (&l, &p)| acc + (l * p).abs())
}

/// Largest root of `S(λ) = 1` on `(0, λ_max]`; `λ_max = None` uses the a
/// priori bound.
pub fn solve_secular<T: Scalar>(
    spectrum: &GeneratorSpectrum<T>,
    coupling: &RankOneCoupling<T>,
    lambda_max: Option<T>,
) -> Option<T> {
    let bound = secular_bound(coupling);
    let hi = lambda_max.unwrap_or(bound * T::lit(1.01) + T::lit(1e-9));
    if !(hi > T::zero()) {
        return None;
    }
    let lo = hi * T::lit(1e-13);
    let f = |l: T| secular_function(spectrum, coupling, l) - T::one();
    let tol = T::lit(1e-15) * hi.max(T::one());
    let roots = find_roots(f, lo, hi, 4000, tol).ok()?;
    roots.into_iter().filter(|&r| r > lo).last()
}

/// `M = diag(-λ) + β φ̂ ℓᵀ`, the Galerkin matrix of `L_μ + Ā` acting on
/// eigen-coefficients of observables.
pub fn full_generator_matrix<T: Scalar>(spectrum: &GeneratorSpectrum<T>, coupling: &RankOneCoupling<T>) -> Result<DMat<T>> {
    let n = spectrum.values.len();
    if coupling.phi_hat.len() != n || coupling.ell.len() != n {
        return Err(Error::Argument(format!(
            "spectrum has {n} modes but coupling has {} / {}",
            coupling.phi_hat.len(),
            coupling.ell.len()
        )));
    }
    Ok(DMat::from_fn(n, n, |i, j| {
        let d = if i == j { -spectrum.values[i] } else { T::zero() };
        d + coupling.beta * coupling.phi_hat[i] * coupling.ell[j]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Dominant eigenvalue in the open right half-plane.
    Unstable,
    /// No eigenvalue above the tolerance; necessary, not sufficient, for
    /// stability.
    StableIndicator,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Unstable => "unstable",
            Verdict::StableIndicator => "stable-indicator",
        }
    }
}

#[derive(Debug, Clone)]
pub struct UnstableMode<T> {
    /// Positive root of the secular equation.
    pub lambda_star: Option<T>,
    /// Dominant eigenvalue of `M` off the constant mode.
    pub lambda0: Complex<T>,
    /// Number of eigenvalues within the clustering tolerance of `lambda0`.
    pub k0: usize,
    /// `k0 > 1`: the dominant eigenvalue may be defective.
    pub multiplicity_warning: bool,
    /// Eigen-coefficients of `f*` when `lambda_star` exists.
    pub f_star: Option<Vec<T>>,
    /// Right eigenvector of `M` at `lambda0`.
    pub right_vec: Vec<Complex<T>>,
    /// Left eigenvector of `M` at `lambda0` (the measure direction that
    /// grows fastest), unit norm, paired positively with `right_vec`.
    pub adjoint_vec: Vec<Complex<T>>,
    pub verdict: Verdict,
}

impl<T: Scalar> UnstableMode<T> {
    pub fn adjoint_re(&self) -> Vec<T> {
        self.adjoint_vec.iter().map(|z| z.re).collect()
    }

    pub fn adjoint_im(&self) -> Vec<T> {
        self.adjoint_vec.iter().map(|z| z.im).collect()
    }
}

pub fn unstable_mode<T: Scalar>(spectrum: &GeneratorSpectrum<T>, coupling: &RankOneCoupling<T>) -> Result<UnstableMode<T>> {
    let full = full_generator_matrix(spectrum, coupling)?;
    let n = full.rows();
    if n < 2 {
        return Err(Error::Argument("unstable_mode needs at least one non-constant mode".into()));
    }
    // Constants are invariant and carry eigenvalue 0; drop that mode.
    let reduced = DMat::from_fn(n - 1, n - 1, |i, j| full[(i + 1, j + 1)]);
    let eigs = dense_eigenvalues(&reduced)?;
    let lambda0 = eigs[0];
    let k0 = eigs
        .iter()
        .filter(|z| (**z - lambda0).norm() <= T::lit(EIGEN_CLUSTER_TOL))
        .count();
    let lambda_star = solve_secular(spectrum, coupling, None);

    let pad = |v: Vec<Complex<T>>| -> Vec<Complex<T>> {
        let mut out = Vec::with_capacity(n);
        out.push(Complex::new(T::zero(), T::zero()));
        out.extend(v);
        out
    };
    let f_star = lambda_star.map(|ls| {
        (0..n)
            .map(|j| {
                if j == 0 {
                    T::zero()
                } else {
                    coupling.beta * coupling.phi_hat[j] / (spectrum.values[j] + ls)
                }
            })
            .collect::<Vec<T>>()
    });

    let real_star = lambda_star.filter(|&ls| lambda0.im == T::zero() && (lambda0.re - ls).abs() <= T::lit(1e-6) * ls.max(T::one()));
    let (right_vec, adjoint_vec) = match (real_star, &f_star) {
        (Some(ls), Some(fs)) => {
            // Closed forms: M f* = λ* f*, wᵀ M = λ* wᵀ with wⱼ ∝ ℓⱼ / (λⱼ + λ*).
            let right = normalise_phase(fs.iter().map(|&v| Complex::new(v, T::zero())).collect());
            let mut left: Vec<T> = (0..n)
                .map(|j| if j == 0 { T::zero() } else { coupling.ell[j] / (spectrum.values[j] + ls) })
                .collect();
            let norm = left.iter().map(|&v| v * v).sum::<T>().sqrt();
            let pairing = left.iter().zip(fs).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
            let sign = if pairing < T::zero() { -T::one() } else { T::one() };
            left.iter_mut().for_each(|v| *v = *v * sign / norm);
            (right, left.into_iter().map(|v| Complex::new(v, T::zero())).collect())
        }
        _ => {
            let right = normalise_phase(pad(eigenvector_for(&reduced, lambda0)?));
            let mut left = normalise_phase(pad(eigenvector_for(&reduced.transpose(), lambda0)?));
            let pairing = left.iter().zip(&right).fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b);
            if pairing.norm() > T::zero() {
                let phase = pairing.conj() / Complex::new(pairing.norm(), T::zero());
                left.iter_mut().for_each(|z| *z = *z * phase);
            }
            (right, left)
        }
    };

    let verdict = if lambda0.re > T::lit(TOL_SPEC) {
        Verdict::Unstable
    } else {
        Verdict::StableIndicator
    };
    Ok(UnstableMode {
        lambda_star,
        lambda0,
        k0,
        multiplicity_warning: k0 > 1,
        f_star,
        right_vec,
        adjoint_vec,
        verdict,
    })
}

/// Coefficients of `Q_t f = exp(tM) f` on the truncation.
pub fn linearized_propagate<T: Scalar>(m: &DMat<T>, coeffs: &[T], t: T) -> Result<Vec<T>> {
    if coeffs.len() != m.cols() {
        return Err(Error::Argument(format!(
            "coefficient vector has length {} but the generator is {}x{}",
            coeffs.len(),
            m.rows(),
            m.cols()
        )));
    }
    if t == T::zero() {
        return Ok(coeffs.to_vec());
    }
    let e = expm(m, t).map_err(|err| match err {
        Error::Range(msg) => Error::Range(format!("{msg} (t = {t})")),
        other => other,
    })?;
    let out = e.matvec(coeffs);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Range(format!("propagated coefficients overflow at t = {t}")));
    }
    Ok(out)
}

/// Everything the stability verdict at one stationary point is built from.
#[derive(Debug, Clone)]
pub struct SpectralAnalysis<T> {
    pub gibbs: GibbsMeasure<T>,
    pub basis: SpectralBasis<T>,
    pub spectrum: GeneratorSpectrum<T>,
    pub coupling: RankOneCoupling<T>,
    pub generator: DMat<T>,
    pub mode: UnstableMode<T>,
    pub s0: T,
}

impl<T: Scalar> SpectralAnalysis<T> {
    pub fn run(model: &ScalarMeanFieldModel<T>, m: T, grid: &GridSpec<T>, degree: usize) -> Result<Self> {
        let grid = spectral_grid(model, m, grid, degree)?;
        let gibbs = GibbsMeasure::new(model, m, &grid)?;
        let basis = build_basis(&gibbs, degree)?;
        let k = dirichlet_matrix(&gibbs, &basis)?;
        let spectrum = base_spectrum(&k)?;
        let coupling = coupling_vectors(&gibbs, &basis, &spectrum, model)?;
        let generator = full_generator_matrix(&spectrum, &coupling)?;
        let mode = unstable_mode(&spectrum, &coupling)?;
        let s0 = secular_function(&spectrum, &coupling, T::zero());
        Ok(Self {
            gibbs,
            basis,
            spectrum,
            coupling,
            generator,
            mode,
            s0,
        })
    }

    /// `Σⱼ cⱼ eⱼ` at the quadrature nodes.
    pub fn eigen_series_at_nodes(&self, eigen_coeffs: &[T]) -> Vec<T> {
        self.basis.series_at_nodes(&self.spectrum.to_polynomial(eigen_coeffs))
    }

    /// `Σⱼ cⱼ eⱼ(x)`.
    pub fn eigen_series_at(&self, eigen_coeffs: &[T], x: T) -> T {
        self.basis.eval_series(&self.spectrum.to_polynomial(eigen_coeffs), x)
    }

    pub fn lambda_star(&self) -> Option<T> {
        self.mode.lambda_star
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::{indicator_at, self_consistent_roots};

    fn ou(degree: usize) -> (GibbsMeasure<f64>, SpectralBasis<f64>, GeneratorSpectrum<f64>) {
        let model = ScalarMeanFieldModel::<f64>::cosine(0.0).unwrap();
        let grid = spectral_grid(&model, 0.0, &GridSpec::default(), degree).unwrap();
        let gibbs = GibbsMeasure::new(&model, 0.0, &grid).unwrap();
        let basis = build_basis(&gibbs, degree).unwrap();
        let k = dirichlet_matrix(&gibbs, &basis).unwrap();
        let spec = base_spectrum(&k).unwrap();
        (gibbs, basis, spec)
    }

    /// Normalised probabilists' Hermite polynomials by their own recurrence.
    fn hermite(n: usize, x: f64) -> Vec<f64> {
        let mut h = vec![1.0, x];
        for k in 1..n {
            let next = x * h[k] - k as f64 * h[k - 1];
            h.push(next);
        }
        let mut fact = 1.0;
        h.iter()
            .enumerate()
            .map(|(k, &v)| {
                if k > 0 {
                    fact *= k as f64;
                }
                v / fact.sqrt()
            })
            .collect()
    }

    #[test]
    fn gaussian_basis_is_hermite() {
        let (_, basis, _) = ou(30);
        for &x in &[-2.3, -0.4, 0.0, 1.1, 3.0] {
            let got = basis.eval(x);
            let want = hermite(30, x);
            for k in 0..=30 {
                assert!((got[k] - want[k]).abs() < 1e-10 * want[k].abs().max(1.0), "k={k} x={x}");
            }
        }
        let (a, b) = basis.recurrence();
        assert!(a.iter().all(|v| v.abs() < 1e-10));
        for (k, bk) in b.iter().enumerate().take(31).skip(1) {
            assert!((bk - (k as f64).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn ou_dirichlet_matrix_is_diagonal() {
        let (gibbs, basis, spec) = ou(40);
        let k = dirichlet_matrix(&gibbs, &basis).unwrap();
        for i in 0..=40 {
            for j in 0..=40 {
                let want = if i == j { i as f64 } else { 0.0 };
                assert!((k[(i, j)] - want).abs() < 1e-8, "({i},{j})");
            }
        }
        for k in 0..=10 {
            assert!((spec.values[k] - k as f64).abs() < 1e-8);
        }
        assert_eq!(spec.values[0], 0.0);
        assert!((spec.vectors[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_matrix_is_psd_with_zero_first_row() {
        let model = ScalarMeanFieldModel::<f64>::dawson(1.0, 0.7).unwrap();
        let gibbs = GibbsMeasure::new(&model, 0.0, &GridSpec::default()).unwrap();
        let basis = build_basis(&gibbs, 60).unwrap();
        let k = dirichlet_matrix(&gibbs, &basis).unwrap();
        assert!(k.row(0).iter().all(|&v| v == 0.0));
        let spec = base_spectrum(&k).unwrap();
        assert!(spec.values[0] == 0.0 && spec.values[1] > 0.0);
        assert!(gram_deviation(&gibbs, &basis) < 1e-10);
    }

    #[test]
    fn resolution_limit_is_reported() {
        let model = ScalarMeanFieldModel::<f64>::dawson(1.0, 0.7).unwrap();
        let gibbs = GibbsMeasure::new(&model, 0.0, &GridSpec::default().with_panels(16)).unwrap();
        assert!(matches!(build_basis(&gibbs, 200), Err(Error::Resolution { .. })));
    }

    /// First (β, m) on a β ladder with cos(βm) = √e m and β sin(βm) < -√e.
    fn cosine_root() -> (f64, f64) {
        let e = 0.5f64.exp();
        for i in 0..200 {
            let beta = 1.0 + 0.25 * i as f64;
            let f = |m: f64| (beta * m).cos() - e * m;
            let roots = find_roots(f, -1.0, 1.0, 4001, 1e-15).unwrap();
            if let Some(&m) = roots.iter().find(|&&m| beta * (beta * m).sin() < -e - 1e-3) {
                return (beta, m);
            }
        }
        panic!("no unstable cosine root");
    }

    #[test]
    fn cosine_closed_forms() {
        let (beta, m) = cosine_root();
        assert!(beta * (beta * m).sin() < -0.5f64.exp());
        let model = ScalarMeanFieldModel::<f64>::cosine(beta).unwrap();
        let an = SpectralAnalysis::run(&model, m, &GridSpec::default(), 40).unwrap();
        let e_half = (-0.5f64).exp();
        // ⟨e₁, e_∞⟩ with e₁ = x - βm the first eigenfunction.
        let pair = an.gibbs.moment(|x| (x - beta * m) * (x.cos() - m)).unwrap();
        assert!((pair + e_half * (beta * m).sin()).abs() < 1e-8);
        let want = -1.0 - e_half * beta * (beta * m).sin();
        assert!((an.mode.lambda_star.unwrap() - want).abs() < 1e-6);
        assert!((an.mode.lambda0.re - want).abs() < 1e-8);
        for &l in &[0.0, 0.5, 3.0] {
            let s = secular_function(&an.spectrum, &an.coupling, l);
            assert!((s + beta * e_half * (beta * m).sin() / (1.0 + l)).abs() < 1e-8);
        }
        // v = x lies in the first eigenspace, so only ℓ₁ is nonzero.
        let big = an.coupling.ell.iter().filter(|v| v.abs() > 1e-8).count();
        assert_eq!(big, 1);
        assert!(an.coupling.ell[1].abs() > 1e-3);
        assert_eq!(an.mode.verdict, Verdict::Unstable);
    }

    #[test]
    fn dawson_unstable_root() {
        let model = ScalarMeanFieldModel::<f64>::dawson(1.0, 0.7).unwrap();
        let grid = GridSpec::default();
        let an = SpectralAnalysis::run(&model, 0.0, &grid, 80).unwrap();
        let s0 = indicator_at(&model, 0.0, &grid).unwrap();
        assert!((an.s0 - s0).abs() < 1e-6, "{} vs {s0}", an.s0);
        let ls = an.mode.lambda_star.unwrap();
        assert!(ls > 0.0);
        assert!((an.mode.lambda0.re - ls).abs() < 1e-9 && an.mode.lambda0.im == 0.0);
        assert_eq!(an.mode.k0, 1);
        assert!(secular_function(&an.spectrum, &an.coupling, 1e6) < 1e-4 * an.s0);

        // Pairing ℓ·f* = 1 and M f* = λ* f*.
        let fs = an.mode.f_star.as_ref().unwrap();
        let pairing: f64 = an.coupling.ell.iter().zip(fs).map(|(a, b)| a * b).sum();
        assert!((pairing - 1.0).abs() < 1e-8);
        let mf = an.generator.matvec(fs);
        let res: f64 = mf.iter().zip(fs).map(|(a, b)| (a - ls * b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = fs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-8 * norm);

        // Secular terms are non-negative squares when v = φ.
        for j in 1..an.spectrum.len() {
            assert!(an.coupling.ell[j] * an.coupling.phi_hat[j] >= -1e-14);
        }
        // Parseval.
        let lhs: f64 = an.coupling.phi_hat.iter().zip(&an.coupling.v_hat).skip(1).map(|(a, b)| a * b).sum();
        let var = an.gibbs.moment(|x| x * x).unwrap();
        assert!((lhs - var).abs() < 1e-8);

        // Outer branches are stable.
        let rep = self_consistent_roots(&model, (0.1, 2.0), 60, &grid).unwrap();
        let outer = SpectralAnalysis::run(&model, rep.roots[0].m, &grid, 80).unwrap();
        assert_eq!(outer.mode.verdict, Verdict::StableIndicator);
        assert!(outer.mode.lambda_star.is_none());
    }

    #[test]
    fn ell_two_routes() {
        let model = ScalarMeanFieldModel::<f64>::rescaled_double_well(1.0, 0.7).unwrap();
        let an = SpectralAnalysis::run(&model, 0.0, &GridSpec::default(), 60).unwrap();
        let c: Vec<f64> = an.gibbs.nodes().iter().map(|&x| model.c(x)).collect();
        for j in 0..12 {
            let poly = an.spectrum.to_polynomial(&{
                let mut e = vec![0.0; an.spectrum.len()];
                e[j] = 1.0;
                e
            });
            // d/dx eⱼ at the nodes.
            let mut de = vec![0.0; c.len()];
            for (k, &pk) in poly.iter().enumerate() {
                for (d, &v) in de.iter_mut().zip(an.basis.derivatives().row(k)) {
                    *d += pk * v;
                }
            }
            let direct: f64 = an.gibbs.masses().iter().zip(c.iter().zip(&de)).map(|(w, (a, b))| w * a * b).sum();
            assert!((direct - an.coupling.ell[j]).abs() < 1e-8, "j={j}: {direct} vs {}", an.coupling.ell[j]);
        }
        assert!(an.coupling.phi_hat[0].abs() < 1e-12 && an.coupling.ell[0] == 0.0);
    }

    #[test]
    fn uncoupled_generator() {
        let model = ScalarMeanFieldModel::<f64>::dawson(0.0, 0.8).unwrap();
        let an = SpectralAnalysis::run(&model, 0.0, &GridSpec::default(), 40).unwrap();
        assert!(an.mode.lambda_star.is_none());
        assert_eq!(an.mode.verdict, Verdict::StableIndicator);
        assert!((an.mode.lambda0.re + an.spectrum.values[1]).abs() < 1e-9);
        let mut e0 = vec![0.0; an.spectrum.len()];
        e0[0] = 1.0;
        assert!(an.generator.matvec(&e0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn propagator_follows_eigenvector() {
        let model = ScalarMeanFieldModel::<f64>::dawson(1.0, 0.7).unwrap();
        let an = SpectralAnalysis::run(&model, 0.0, &GridSpec::default(), 60).unwrap();
        let ls = an.mode.lambda_star.unwrap();
        let fs = an.mode.f_star.clone().unwrap();
        let norm: f64 = fs.iter().map(|v| v * v).sum::<f64>().sqrt();
        for &t in &[0.5, 1.0, 2.0] {
            let out = linearized_propagate(&an.generator, &fs, t).unwrap();
            let err: f64 = out.iter().zip(&fs).map(|(a, b)| (a - (ls * t).exp() * b).powi(2)).sum::<f64>().sqrt();
            assert!(err <= 1e-8 * (ls * t).exp() * norm, "t={t}: {err}");
        }
        let mut e0 = vec![0.0; an.spectrum.len()];
        e0[0] = 1.0;
        assert_eq!(linearized_propagate(&an.generator, &e0, 3.0).unwrap(), e0);
        assert_eq!(linearized_propagate(&an.generator, &fs, 0.0).unwrap(), fs);
    }
}
