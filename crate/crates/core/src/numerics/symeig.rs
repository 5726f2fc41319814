//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by the implicit QL iteration (the EISPACK `tred2`/`tql2` pair).

use crate::error::{Error, Result};
use crate::numerics::matrix::DMat;
use crate::scalar::Scalar;

/// Full eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigenSystem<T> {
    /// Ascending eigenvalues.
    pub values: Vec<T>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`; the component of
    /// largest magnitude is made positive.
    pub vectors: Vec<Vec<T>>,
}

impl<T: Scalar> EigenSystem<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn sym_eig<T: Scalar>(k: &DMat<T>) -> Result<EigenSystem<T>> {
    if !k.is_square() {
        return Err(Error::Argument(format!(
            "sym_eig needs a square matrix, got {}x{}",
            k.rows(),
            k.cols()
        )));
    }
    let n = k.rows();
    if n == 0 {
        return Ok(EigenSystem {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    if !k.all_finite() {
        return Err(Error::Argument("sym_eig input has non-finite entries".into()));
    }
    let scale = k.max_abs();
    let tol = T::lit(1e-12) * scale.max(T::min_positive_value());
    for i in 0..n {
        for j in 0..i {
            if (k[(i, j)] - k[(j, i)]).abs() > tol {
                return Err(Error::Argument(format!(
                    "matrix not symmetric at ({i}, {j}): {} vs {}",
                    k[(i, j)],
                    k[(j, i)]
                )));
            }
        }
    }

    let mut v = DMat::from_fn(n, n, |i, j| (k[(i, j)] + k[(j, i)]) * T::lit(0.5));
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            let mut col = v.column(j);
            let pivot = col
                .iter()
                .copied()
                .fold(T::zero(), |best, x| if x.abs() > best.abs() { x } else { best });
            if pivot < T::zero() {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            col
        })
        .collect();
    Ok(EigenSystem { values, vectors })
}

fn tred2<T: Scalar>(v: &mut DMat<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for dk in d.iter().take(i) {
            scale = scale + dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
                v[(j, i)] = T::zero();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk = *dk / scale;
                h = h + *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for kk in (j + 1)..i {
                    g = g + v[(kk, j)] * d[kk];
                    e[kk] = e[kk] + v[(kk, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for kk in j..i {
                    v[(kk, j)] = v[(kk, j)] - (f * e[kk] + g * d[kk]);
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    // Accumulate transformations.
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for kk in 0..=i {
                d[kk] = v[(kk, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for kk in 0..=i {
                    g = g + v[(kk, i + 1)] * v[(kk, j)];
                }
                for kk in 0..=i {
                    v[(kk, j)] = v[(kk, j)] - g * d[kk];
                }
            }
        }
        for kk in 0..=i {
            v[(kk, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = T::zero();
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

fn tql2<T: Scalar>(v: &mut DMat<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    let mut total_iter = 0usize;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                total_iter += 1;
                if iter > 60 {
                    return Err(Error::NoConvergence { iterations: total_iter });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (T::lit(2.0) * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for kk in 0..n {
                        h = v[(kk, i + 1)];
                        v[(kk, i + 1)] = s * v[(kk, i)] + c * h;
                        v[(kk, i)] = c * v[(kk, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = T::zero();
    }
    Ok(())
}
