use crate::scalar::Scalar;

/// Solves `H x = b` for a symmetric positive (semi)definite `H` stored
/// row-major, adding diagonal jitter until the Cholesky factorization
/// succeeds. Returns `None` if no amount of jitter helps (non-finite input).
pub(crate) fn solve_spd<T: Scalar>(h: &[T], b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    let scale = (0..n)
        .map(|i| h[i * n + i].abs())
        .fold(T::zero(), T::max)
        .max(T::min_positive_value());
    let mut jitter = T::zero();
    for _ in 0..12 {
        if let Some(l) = cholesky(h, n, jitter) {
            return Some(cholesky_solve(&l, n, b));
        }
        jitter = if jitter == T::zero() {
            scale * T::epsilon() * T::lit(100.0)
        } else {
            jitter * T::lit(100.0)
        };
    }
    None
}

fn cholesky<T: Scalar>(h: &[T], n: usize, jitter: T) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = h[i * n + j];
            if i == j {
                s = s + jitter;
            }
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve<T: Scalar>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] = z[i] - l[i * n + k] * z[k];
        }
        z[i] = z[i] / l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] = z[i] - l[k * n + i] * z[k];
        }
        z[i] = z[i] / l[i * n + i];
    }
    z
}
