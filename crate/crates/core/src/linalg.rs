//! Small dense kernels on row-major slices and a Householder least-squares solver.

use crate::scalar::Scalar;

/// `out = a * b` for `a: r×k`, `b: k×c`.
pub fn matmul<S: Scalar>(a: &[S], b: &[S], r: usize, k: usize, c: usize, out: &mut [S]) {
    debug_assert_eq!(a.len(), r * k);
    debug_assert_eq!(b.len(), k * c);
    for i in 0..r {
        for j in 0..c {
            let mut acc = S::zero();
            for l in 0..k {
                acc = acc + a[i * k + l] * b[l * c + j];
            }
            out[i * c + j] = acc;
        }
    }
}

/// `out = a * v` for `a: r×c`.
pub fn matvec<S: Scalar>(a: &[S], v: &[S], r: usize, c: usize, out: &mut [S]) {
    for i in 0..r {
        let mut acc = S::zero();
        for j in 0..c {
            acc = acc + a[i * c + j] * v[j];
        }
        out[i] = acc;
    }
}

/// `out = aᵀ * v` for `a: r×c`.
pub fn matvec_t<S: Scalar>(a: &[S], v: &[S], r: usize, c: usize, out: &mut [S]) {
    for j in 0..c {
        let mut acc = S::zero();
        for i in 0..r {
            acc = acc + a[i * c + j] * v[i];
        }
        out[j] = acc;
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn identity<S: Scalar>(n: usize) -> Vec<S> {
    let mut m = vec![S::zero(); n * n];
    for i in 0..n {
        m[i * n + i] = S::one();
    }
    m
}

/// Frobenius norm of `a - I` for a square `n×n` matrix.
pub fn distance_from_identity<S: Scalar>(a: &[S], n: usize) -> S {
    let mut acc = S::zero();
    for i in 0..n {
        for j in 0..n {
            let d = a[i * n + j] - if i == j { S::one() } else { S::zero() };
            acc = acc + d * d;
        }
    }
    acc.sqrt()
}

/// Householder QR factorization of a tall `rows×cols` design matrix, kept in
/// compact form so several right-hand sides can be solved against it.
pub struct LeastSquares<S> {
    rows: usize,
    cols: usize,
    qr: Vec<S>,
    tau: Vec<S>,
    diag: Vec<S>,
}

impl<S: Scalar> LeastSquares<S> {
    /// Factors the column-major design matrix. Returns `None` when a column is
    /// numerically dependent on the previous ones (relative pivot below `rcond`).
    pub fn factor(mut qr: Vec<S>, rows: usize, cols: usize, rcond: S) -> Option<Self> {
        debug_assert_eq!(qr.len(), rows * cols);
        if rows < cols {
            return None;
        }
        let col_norms: Vec<S> = (0..cols)
            .map(|j| qr[j * rows..(j + 1) * rows].iter().map(|&v| v * v).sum::<S>().sqrt())
            .collect();
        let mut tau = vec![S::zero(); cols];
        let mut diag = vec![S::zero(); cols];
        for j in 0..cols {
            let col = &mut qr[j * rows..(j + 1) * rows];
            let norm = col[j..].iter().map(|&v| v * v).sum::<S>().sqrt();
            if norm <= rcond * col_norms[j].max(S::min_positive_value()) {
                return None;
            }
            let alpha = if col[j] > S::zero() { -norm } else { norm };
            let v0 = col[j] - alpha;
            // v = (v0, col[j+1..]); normalize so v[0] = 1
            for v in col[j + 1..].iter_mut() {
                *v = *v / v0;
            }
            let vnorm2 = S::one() + col[j + 1..].iter().map(|&v| v * v).sum::<S>();
            tau[j] = S::lit(2.0) / vnorm2;
            diag[j] = alpha;
            col[j] = alpha;
            // apply the reflector to the remaining columns
            let v_tail: Vec<S> = col[j + 1..].to_vec();
            for c in j + 1..cols {
                let other = &mut qr[c * rows..(c + 1) * rows];
                let mut s = other[j];
                for (i, &v) in v_tail.iter().enumerate() {
                    s = s + v * other[j + 1 + i];
                }
                s = s * tau[j];
                other[j] = other[j] - s;
                for (i, &v) in v_tail.iter().enumerate() {
                    other[j + 1 + i] = other[j + 1 + i] - s * v;
                }
            }
        }
        Some(Self {
            rows,
            cols,
            qr,
            tau,
            diag,
        })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Least-squares coefficients for one right-hand side of length `rows`.
    pub fn solve(&self, rhs: &[S]) -> Vec<S> {
        let (rows, cols) = (self.rows, self.cols);
        let mut y = rhs.to_vec();
        for j in 0..cols {
            let v_tail = &self.qr[j * rows + j + 1..(j + 1) * rows];
            let mut s = y[j];
            for (i, &v) in v_tail.iter().enumerate() {
                s = s + v * y[j + 1 + i];
            }
            s = s * self.tau[j];
            y[j] = y[j] - s;
            for (i, &v) in v_tail.iter().enumerate() {
                y[j + 1 + i] = y[j + 1 + i] - s * v;
            }
        }
        let mut x = vec![S::zero(); cols];
        for j in (0..cols).rev() {
            let mut acc = y[j];
            for c in j + 1..cols {
                acc = acc - self.qr[c * rows + j] * x[c];
            }
            x[j] = acc / self.diag[j];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        // y = 2 + 3 t at t = 0..5
        let rows = 6;
        let mut a = vec![1.0f64; rows];
        a.extend((0..rows).map(|i| i as f64));
        let ls = LeastSquares::factor(a, rows, 2, 1e-12).unwrap();
        let y: Vec<f64> = (0..rows).map(|i| 2.0 + 3.0 * i as f64).collect();
        let c = ls.solve(&y);
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_target_gives_zero_coefficients() {
        let rows = 5;
        let mut a = vec![1.0f64; rows];
        a.extend([0.3, -1.2, 2.0, 0.7, 1.1]);
        let ls = LeastSquares::factor(a, rows, 2, 1e-12).unwrap();
        assert_eq!(ls.solve(&[0.0; 5]), vec![0.0, 0.0]);
    }

    #[test]
    fn dependent_columns_rejected() {
        let rows = 4;
        let mut a = vec![1.0f64; rows];
        a.extend([2.0; 4]);
        assert!(LeastSquares::factor(a, rows, 2, 1e-10).is_none());
    }

    #[test]
    fn matches_normal_equations() {
        let t = [0.0f64, 0.5, 1.0, 1.5, 2.0, 3.0];
        let y = [1.0, 0.8, 2.1, 2.9, 4.2, 5.5];
        let mut a = vec![1.0; 6];
        a.extend(t);
        let c = LeastSquares::factor(a, 6, 2, 1e-12).unwrap().solve(&y);
        let n = 6.0;
        let st: f64 = t.iter().sum();
        let stt: f64 = t.iter().map(|v| v * v).sum();
        let sy: f64 = y.iter().sum();
        let sty: f64 = t.iter().zip(&y).map(|(a, b)| a * b).sum();
        let slope = (n * sty - st * sy) / (n * stt - st * st);
        let icpt = (sy - slope * st) / n;
        assert!((c[1] - slope).abs() < 1e-12 && (c[0] - icpt).abs() < 1e-12);
    }
}
