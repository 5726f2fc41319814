use crate::error::{Error, Result};
use crate::numerics::matrix::DMat;
use crate::scalar::Scalar;

/// `exp(t·M)` by scaling and squaring with a degree-`TAYLOR_DEGREE` Taylor
/// polynomial on the scaled matrix (`‖tM‖∞ / 2^s ≤ 1/2`).
pub fn expm<T: Scalar>(m: &DMat<T>, t: T) -> Result<DMat<T>> {
    const TAYLOR_DEGREE: usize = 20;
    if !m.is_square() {
        return Err(Error::Argument("expm needs a square matrix".into()));
    }
    if !(t >= T::zero()) {
        return Err(Error::Argument(format!("expm time must be non-negative, got {t}")));
    }
    let n = m.rows();
    let a = m.scaled(t);
    let norm = a.norm_inf();
    let mut squarings = 0usize;
    let mut scale = T::one();
    while norm / scale > T::lit(0.5) {
        scale = scale * T::lit(2.0);
        squarings += 1;
        if squarings > 200 {
            return Err(Error::Range("matrix norm too large for scaling and squaring".into()));
        }
    }
    let a = a.scaled(T::one() / scale);
    // Horner: I + A(I + A/2(I + A/3(...)))
    let mut acc = DMat::identity(n);
    for k in (1..=TAYLOR_DEGREE).rev() {
        acc = DMat::identity(n).add(&a.matmul(&acc).scaled(T::one() / T::from_usize_lossy(k)));
    }
    for _ in 0..squarings {
        acc = acc.matmul(&acc);
    }
    if !acc.all_finite() {
        return Err(Error::Range("matrix exponential overflowed".into()));
    }
    Ok(acc)
}
