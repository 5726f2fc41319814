//! Spectrum of a general real square matrix.
//!
//! Eigenvalues come from Householder reduction to upper Hessenberg form and
//! the Francis double-shift QR iteration (EISPACK `orthes`/`hqr`); right and
//! left eigenvectors are then obtained by complex inverse iteration on `M`
//! and `Mᵀ`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::matrix::DMat;
use crate::scalar::Scalar;

/// Eigen-decomposition of a general real matrix.
///
/// Left vectors use the unconjugated convention `uᵀM = λuᵀ`, normalised so
/// that `uᵀv = 1` for simple eigenvalues.
#[derive(Debug, Clone)]
pub struct DenseSpectrum<T> {
    /// Sorted by descending real part, then descending imaginary part.
    pub values: Vec<Complex<T>>,
    pub right_vectors: Vec<Vec<Complex<T>>>,
    pub left_vectors: Vec<Vec<Complex<T>>>,
    /// `max Re λ`.
    pub abscissa: T,
}

impl<T: Scalar> DenseSpectrum<T> {
    /// Index of the eigenvalue attaining the abscissa.
    pub fn dominant(&self) -> Option<usize> {
        if self.values.is_empty() {
            None
        } else {
            Some(0)
        }
    }
}

/// Eigenvalues only, sorted like [`DenseSpectrum::values`].
pub fn dense_eigenvalues<T: Scalar>(m: &DMat<T>) -> Result<Vec<Complex<T>>> {
    check_input(m)?;
    let mut h = m.clone();
    orthes(&mut h);
    let (re, im) = hqr(&mut h)?;
    let mut values: Vec<Complex<T>> = re.into_iter().zip(im).map(|(r, i)| Complex::new(r, i)).collect();
    sort_spectrum(&mut values);
    Ok(values)
}

pub fn dense_spectrum<T: Scalar>(m: &DMat<T>) -> Result<DenseSpectrum<T>> {
    let values = dense_eigenvalues(m)?;
    let mt = m.transpose();
    let mut right_vectors = Vec::with_capacity(values.len());
    let mut left_vectors = Vec::with_capacity(values.len());
    for &lambda in &values {
        let v = inverse_iteration(m, lambda)?;
        let mut u = inverse_iteration(&mt, lambda)?;
        let pairing = u.iter().zip(&v).fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b);
        if pairing.norm() > T::lit(1e-8) {
            let inv = Complex::new(T::one(), T::zero()) / pairing;
            u.iter_mut().for_each(|x| *x = *x * inv);
        }
        right_vectors.push(v);
        left_vectors.push(u);
    }
    let abscissa = values.first().map_or(T::neg_infinity(), |z| z.re);
    Ok(DenseSpectrum {
        values,
        right_vectors,
        left_vectors,
        abscissa,
    })
}

/// Right eigenvector of `m` for a known eigenvalue `lambda`, unit 2-norm,
/// largest component real and positive.
pub fn eigenvector_for<T: Scalar>(m: &DMat<T>, lambda: Complex<T>) -> Result<Vec<Complex<T>>> {
    check_input(m)?;
    inverse_iteration(m, lambda)
}

fn check_input<T: Scalar>(m: &DMat<T>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Argument(format!(
            "dense_spectrum needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.all_finite() {
        return Err(Error::Argument("dense_spectrum input has non-finite entries".into()));
    }
    Ok(())
}

fn sort_spectrum<T: Scalar>(values: &mut [Complex<T>]) {
    values.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .expect("finite eigenvalues")
            .then(b.im.partial_cmp(&a.im).expect("finite eigenvalues"))
    });
}

/// Householder reduction to upper Hessenberg form, in place.
fn orthes<T: Scalar>(h: &mut DMat<T>) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let low = 0;
    let high = n - 1;
    let mut ort = vec![T::zero(); n];
    for m in (low + 1)..high {
        let mut scale = T::zero();
        for i in m..=high {
            scale = scale + h[(i, m - 1)].abs();
        }
        if scale == T::zero() {
            continue;
        }
        let mut hsum = T::zero();
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hsum = hsum + ort[i] * ort[i];
        }
        let mut g = hsum.sqrt();
        if ort[m] > T::zero() {
            g = -g;
        }
        hsum = hsum - ort[m] * g;
        ort[m] = ort[m] - g;
        for j in m..n {
            let mut f = T::zero();
            for i in (m..=high).rev() {
                f = f + ort[i] * h[(i, j)];
            }
            f = f / hsum;
            for i in m..=high {
                h[(i, j)] = h[(i, j)] - f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = T::zero();
            for j in (m..=high).rev() {
                f = f + ort[j] * h[(i, j)];
            }
            f = f / hsum;
            for j in m..=high {
                h[(i, j)] = h[(i, j)] - f * ort[j];
            }
        }
        ort[m] = scale * ort[m];
        h[(m, m - 1)] = scale * g;
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; returns the real
/// and imaginary parts of the eigenvalues.
#[allow(unused_assignments)]
fn hqr<T: Scalar>(h: &mut DMat<T>) -> Result<(Vec<T>, Vec<T>)> {
    let nn = h.rows();
    let mut d = vec![T::zero(); nn];
    let mut e = vec![T::zero(); nn];
    if nn == 0 {
        return Ok((d, e));
    }
    let low = 0isize;
    let eps = T::epsilon();
    let mut exshift = T::zero();
    let (mut p, mut q, mut r, mut s, mut z) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    let (mut x, mut y, mut w);

    let mut norm = T::zero();
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm = norm + h[(i, j)].abs();
        }
    }

    let mut n = nn as isize - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let max_per_root = 60usize;
    let idx = |a: isize| a as usize;

    while n >= low {
        // Look for a single small sub-diagonal element.
        let mut l = n;
        while l > low {
            s = h[(idx(l - 1), idx(l - 1))].abs() + h[(idx(l), idx(l))].abs();
            if s == T::zero() {
                s = norm;
            }
            if h[(idx(l), idx(l - 1))].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            h[(idx(n), idx(n))] = h[(idx(n), idx(n))] + exshift;
            d[idx(n)] = h[(idx(n), idx(n))];
            e[idx(n)] = T::zero();
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found.
            w = h[(idx(n), idx(n - 1))] * h[(idx(n - 1), idx(n))];
            p = (h[(idx(n - 1), idx(n - 1))] - h[(idx(n), idx(n))]) * T::lit(0.5);
            q = p * p + w;
            z = q.abs().sqrt();
            h[(idx(n), idx(n))] = h[(idx(n), idx(n))] + exshift;
            h[(idx(n - 1), idx(n - 1))] = h[(idx(n - 1), idx(n - 1))] + exshift;
            x = h[(idx(n), idx(n))];
            if q >= T::zero() {
                z = if p >= T::zero() { p + z } else { p - z };
                d[idx(n - 1)] = x + z;
                d[idx(n)] = d[idx(n - 1)];
                if z != T::zero() {
                    d[idx(n)] = x - w / z;
                }
                e[idx(n - 1)] = T::zero();
                e[idx(n)] = T::zero();
            } else {
                d[idx(n - 1)] = x + p;
                d[idx(n)] = x + p;
                e[idx(n - 1)] = z;
                e[idx(n)] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet: form the shift.
            x = h[(idx(n), idx(n))];
            y = T::zero();
            w = T::zero();
            if l < n {
                y = h[(idx(n - 1), idx(n - 1))];
                w = h[(idx(n), idx(n - 1))] * h[(idx(n - 1), idx(n))];
            }
            if iter == 10 {
                // Wilkinson's exceptional shift.
                exshift = exshift + x;
                for i in low..=n {
                    h[(idx(i), idx(i))] = h[(idx(i), idx(i))] - x;
                }
                s = h[(idx(n), idx(n - 1))].abs() + h[(idx(n - 1), idx(n - 2))].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            if iter == 30 {
                s = (y - x) * T::lit(0.5);
                s = s * s + w;
                if s > T::zero() {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) * T::lit(0.5) + s);
                    for i in low..=n {
                        h[(idx(i), idx(i))] = h[(idx(i), idx(i))] - s;
                    }
                    exshift = exshift + s;
                    x = T::lit(0.964);
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total += 1;
            if iter > max_per_root {
                return Err(Error::NoConvergence { iterations: total });
            }

            // Look for two consecutive small sub-diagonal elements.
            let mut m = n - 2;
            while m >= l {
                z = h[(idx(m), idx(m))];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(idx(m + 1), idx(m))] + h[(idx(m), idx(m + 1))];
                q = h[(idx(m + 1), idx(m + 1))] - z - r - s;
                r = h[(idx(m + 2), idx(m + 1))];
                s = p.abs() + q.abs() + r.abs();
                p = p / s;
                q = q / s;
                r = r / s;
                if m == l {
                    break;
                }
                if h[(idx(m), idx(m - 1))].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h[(idx(m - 1), idx(m - 1))].abs() + z.abs() + h[(idx(m + 1), idx(m + 1))].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=n {
                h[(idx(i), idx(i - 2))] = T::zero();
                if i > m + 2 {
                    h[(idx(i), idx(i - 3))] = T::zero();
                }
            }

            // Double QR step on rows l..=n and columns m..=n.
            let mut k = m;
            while k < n {
                let notlast = k != n - 1;
                if k != m {
                    p = h[(idx(k), idx(k - 1))];
                    q = h[(idx(k + 1), idx(k - 1))];
                    r = if notlast { h[(idx(k + 2), idx(k - 1))] } else { T::zero() };
                    x = p.abs() + q.abs() + r.abs();
                    if x == T::zero() {
                        k += 1;
                        continue;
                    }
                    p = p / x;
                    q = q / x;
                    r = r / x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < T::zero() {
                    s = -s;
                }
                if s != T::zero() {
                    if k != m {
                        h[(idx(k), idx(k - 1))] = -s * x;
                    } else if l != m {
                        h[(idx(k), idx(k - 1))] = -h[(idx(k), idx(k - 1))];
                    }
                    p = p + s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q = q / p;
                    r = r / p;
                    for j in idx(k)..nn {
                        p = h[(idx(k), j)] + q * h[(idx(k + 1), j)];
                        if notlast {
                            p = p + r * h[(idx(k + 2), j)];
                            h[(idx(k + 2), j)] = h[(idx(k + 2), j)] - p * z;
                        }
                        h[(idx(k), j)] = h[(idx(k), j)] - p * x;
                        h[(idx(k + 1), j)] = h[(idx(k + 1), j)] - p * y;
                    }
                    let top = (n).min(k + 3);
                    for i in 0..=idx(top) {
                        p = x * h[(i, idx(k))] + y * h[(i, idx(k + 1))];
                        if notlast {
                            p = p + z * h[(i, idx(k + 2))];
                            h[(i, idx(k + 2))] = h[(i, idx(k + 2))] - p * r;
                        }
                        h[(i, idx(k))] = h[(i, idx(k))] - p;
                        h[(i, idx(k + 1))] = h[(i, idx(k + 1))] - p * q;
                    }
                }
                k += 1;
            }
        }
    }
    Ok((d, e))
}

/// A few steps of shifted inverse iteration in complex arithmetic.
fn inverse_iteration<T: Scalar>(m: &DMat<T>, lambda: Complex<T>) -> Result<Vec<Complex<T>>> {
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let zero = Complex::new(T::zero(), T::zero());
    let scale = m.norm_inf().max(lambda.norm()).max(T::one());
    let tiny = T::epsilon() * scale;
    let mut a: Vec<Complex<T>> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let mut v = Complex::new(m[(i, j)], T::zero());
            if i == j {
                v = v - lambda;
            }
            v
        })
        .collect();

    // LU with partial pivoting; exactly singular pivots are nudged.
    let mut piv: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut best = col;
        let mut best_abs = a[col * n + col].norm();
        for row in (col + 1)..n {
            let v = a[row * n + col].norm();
            if v > best_abs {
                best = row;
                best_abs = v;
            }
        }
        if best != col {
            for j in 0..n {
                a.swap(col * n + j, best * n + j);
            }
            piv.swap(col, best);
        }
        if a[col * n + col].norm() < tiny {
            a[col * n + col] = Complex::new(tiny, T::zero());
        }
        let pivot = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / pivot;
            a[row * n + col] = factor;
            if factor != zero {
                for j in (col + 1)..n {
                    let upd = factor * a[col * n + j];
                    a[row * n + j] = a[row * n + j] - upd;
                }
            }
        }
    }

    let solve = |rhs: &[Complex<T>]| -> Vec<Complex<T>> {
        let mut x: Vec<Complex<T>> = piv.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let upd = a[i * n + j] * x[j];
                x[i] = x[i] - upd;
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let upd = a[i * n + j] * x[j];
                x[i] = x[i] - upd;
            }
            x[i] = x[i] / a[i * n + i];
        }
        x
    };

    // Deterministic, generic start vector.
    let mut x: Vec<Complex<T>> = (0..n)
        .map(|i| Complex::new(T::one() + T::lit(0.1) * T::from_usize_lossy(i % 7), T::zero()))
        .collect();
    for _ in 0..4 {
        x = solve(&x);
        let big = x.iter().fold(T::zero(), |acc, z| acc.max(z.norm()));
        if !(big.is_finite()) || big == T::zero() {
            return Err(Error::Numerical("inverse iteration produced a degenerate vector".into()));
        }
        x.iter_mut().for_each(|z| *z = *z / Complex::new(big, T::zero()));
    }
    Ok(normalise_phase(x))
}

/// Unit 2-norm, largest component real and positive.
pub fn normalise_phase<T: Scalar>(mut x: Vec<Complex<T>>) -> Vec<Complex<T>> {
    let norm = x.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
    let (mut best, mut best_abs) = (0, T::zero());
    for (i, z) in x.iter().enumerate() {
        // Ties resolved towards the lower index.
        if z.norm() > best_abs * (T::one() + T::lit(1e-9)) {
            best = i;
            best_abs = z.norm();
        }
    }
    let phase = x[best] / Complex::new(x[best].norm(), T::zero());
    let factor = phase.conj() / Complex::new(norm, T::zero());
    x.iter_mut().for_each(|z| *z = *z * factor);
    x
}
