//! One-sided Jacobi singular value decomposition and a symmetric Jacobi
//! eigenvalue solver.
//!
//! Jacobi methods are slower than bidiagonalization for very large matrices
//! but deliver near-machine relative accuracy, are simple to make
//! deterministic, and accept a warm-start rotation — which the solver exploits
//! heavily, since its line search projects a slowly-varying matrix many times
//! per iteration.

use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

use super::Mat;

/// Thin singular value decomposition `A = U diag(sigma) V^T` with
/// `k = min(rows, cols)` retained triplets and `sigma` sorted nonincreasing.
///
/// Columns of `U` (and rows of `V`) associated with exactly-zero singular
/// values are zero vectors, not an arbitrary orthonormal completion.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// m×k left factor with orthonormal columns (where sigma > 0).
    pub u: Mat<T>,
    /// Singular values, nonincreasing, length k.
    pub sigma: Vec<T>,
    /// q×k right factor with orthonormal columns (where sigma > 0).
    pub v: Mat<T>,
}

const MAX_SWEEPS: usize = 64;

/// Thin SVD of a dense matrix.
pub fn svd<T: Scalar>(a: &Mat<T>) -> Result<Svd<T>> {
    svd_with_guess(a, None)
}

/// Thin SVD, optionally warm-started from a previous decomposition of a
/// nearby matrix of the same shape. A valid guess only changes the number of
/// sweeps needed, never the result accuracy; a mismatched guess is ignored.
pub fn svd_with_guess<T: Scalar>(a: &Mat<T>, guess: Option<&Svd<T>>) -> Result<Svd<T>> {
    let (m, q) = a.shape();
    if m == 0 || q == 0 {
        return Err(Error::Dimension("svd of an empty matrix".into()));
    }
    if m >= q {
        // Right-rotation basis is the square q×q factor V.
        let rot = guess.and_then(|g| square_factor(&g.v, q));
        let (u, sigma, v) = one_sided_jacobi(a, rot)?;
        Ok(Svd { u, sigma, v })
    } else {
        // Decompose A^T = U' S V'^T, so A = V' S U'^T; the square factor is
        // the previous U (m×m).
        let rot = guess.and_then(|g| square_factor(&g.u, m));
        let (u1, sigma, v1) = one_sided_jacobi(&a.transpose(), rot)?;
        Ok(Svd { u: v1, sigma, v: u1 })
    }
}

fn square_factor<T: Scalar>(f: &Mat<T>, n: usize) -> Option<Mat<T>> {
    (f.shape() == (n, n)).then(|| f.clone())
}

/// Column-major working storage so Jacobi rotations touch contiguous memory.
struct Cols<T> {
    m: usize,
    d: Vec<T>,
}

impl<T: Scalar> Cols<T> {
    fn from_row_major(a: &Mat<T>) -> Self {
        let (m, k) = a.shape();
        let mut d = vec![T::zero(); m * k];
        for i in 0..m {
            for j in 0..k {
                d[j * m + i] = a.get(i, j);
            }
        }
        Self { m, d }
    }

    fn identity(n: usize) -> Self {
        let mut c = Self { m: n, d: vec![T::zero(); n * n] };
        for j in 0..n {
            c.d[j * n + j] = T::one();
        }
        c
    }

    #[inline]
    fn col(&self, j: usize) -> &[T] {
        &self.d[j * self.m..(j + 1) * self.m]
    }

    /// Mutable views of two distinct columns p < q.
    #[inline]
    fn col_pair_mut(&mut self, p: usize, q: usize) -> (&mut [T], &mut [T]) {
        debug_assert!(p < q);
        let (left, right) = self.d.split_at_mut(q * self.m);
        (&mut left[p * self.m..(p + 1) * self.m], &mut right[..self.m])
    }
}

/// One-sided Jacobi on a matrix with `rows >= cols`: post-multiplies by plane
/// rotations until all column pairs are orthogonal, accumulating the
/// rotations into `V`. Then `sigma_j = ||b_j||` and `u_j = b_j / sigma_j`.
fn one_sided_jacobi<T: Scalar>(
    a: &Mat<T>,
    rot0: Option<Mat<T>>,
) -> Result<(Mat<T>, Vec<T>, Mat<T>)> {
    let (m, k) = a.shape();
    debug_assert!(m >= k);
    let (mut b, mut v) = match rot0 {
        Some(r) => (Cols::from_row_major(&a.matmul(&r)), Cols::from_row_major(&r)),
        None => (Cols::from_row_major(a), Cols::identity(k)),
    };

    let tol = T::epsilon() * T::from_f64_lossy(m as f64).sqrt();
    // Columns whose norm falls to machine noise relative to the input are
    // frozen; rotating them re-mixes rounding error forever and stops the
    // sweep loop from terminating on rank-deficient inputs.
    let a_norm = {
        let mut s = T::zero();
        for j in 0..k {
            s += norm_sq(b.col(j));
        }
        s.sqrt()
    };
    let deflate = (T::epsilon() * a_norm) * (T::epsilon() * a_norm);
    let mut converged = k < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..k - 1 {
            for q in p + 1..k {
                let (alpha, beta, gamma) = {
                    let cp = b.col(p);
                    let cq = b.col(q);
                    (norm_sq(cp), norm_sq(cq), super::dot(cp, cq))
                };
                if alpha <= deflate || beta <= deflate {
                    continue;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = if zeta >= T::zero() {
                    T::one() / (zeta + (T::one() + zeta * zeta).sqrt())
                } else {
                    -T::one() / (-zeta + (T::one() + zeta * zeta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut b, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "svd did not converge within {MAX_SWEEPS} Jacobi sweeps"
        )));
    }

    // Singular values are the column norms; sort nonincreasing.
    let mut order: Vec<usize> = (0..k).collect();
    let norms: Vec<T> = (0..k).map(|j| norm_sq(b.col(j)).sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite singular values"));

    let mut u = Mat::zeros(m, k);
    let mut vt = Mat::zeros(k, k);
    let mut sigma = Vec::with_capacity(k);
    for (out_j, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > T::zero() {
            let inv = T::one() / s;
            for i in 0..m {
                u.set(i, out_j, b.col(j)[i] * inv);
            }
        }
        for i in 0..v.m {
            vt.set(i, out_j, v.col(j)[i]);
        }
    }
    Ok((u, sigma, vt))
}

#[inline]
fn rotate<T: Scalar>(mat: &mut Cols<T>, p: usize, q: usize, c: T, s: T) {
    let (cp, cq) = mat.col_pair_mut(p, q);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = c * *x - s * *y;
        let yq = s * *x + c * *y;
        *x = xp;
        *y = yq;
    }
}

#[inline]
fn norm_sq<T: Scalar>(x: &[T]) -> T {
    super::dot(x, x)
}

/// Eigenvalues of a symmetric matrix via cyclic two-sided Jacobi, returned in
/// nondecreasing order. Only values are computed, not vectors.
pub fn sym_eigenvalues<T: Scalar>(a: &Mat<T>) -> Result<Vec<T>> {
    let (n, n2) = a.shape();
    if n != n2 {
        return Err(Error::Dimension(format!("sym_eigenvalues needs a square matrix, got {n}x{n2}")));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut w = a.clone();
    let scale = w.frob_norm();
    if scale == T::zero() {
        return Ok(vec![T::zero(); n]);
    }
    let tol = T::epsilon() * scale;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += w.get(p, q) * w.get(p, q);
            }
        }
        if off.sqrt() <= tol {
            let mut eig: Vec<T> = (0..n).map(|i| w.get(i, i)).collect();
            eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
            return Ok(eig);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w.get(p, q);
                if apq.abs() <= tol * T::from_f64_lossy(1e-3) {
                    continue;
                }
                let theta = (w.get(q, q) - w.get(p, p)) / (apq + apq);
                let t = if theta >= T::zero() {
                    T::one() / (theta + (T::one() + theta * theta).sqrt())
                } else {
                    -T::one() / (-theta + (T::one() + theta * theta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                // W <- J^T W J on rows/columns p, q
                for i in 0..n {
                    let wip = w.get(i, p);
                    let wiq = w.get(i, q);
                    w.set(i, p, c * wip - s * wiq);
                    w.set(i, q, s * wip + c * wiq);
                }
                for j in 0..n {
                    let wpj = w.get(p, j);
                    let wqj = w.get(q, j);
                    w.set(p, j, c * wpj - s * wqj);
                    w.set(q, j, s * wpj + c * wqj);
                }
            }
        }
    }
    Err(Error::Numeric(format!(
        "symmetric eigensolver did not converge within {MAX_SWEEPS} sweeps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_reconstructs_diagonal() {
        let a = Mat::<f64>::diag(&[3.0, 2.0, 1.0]);
        let d = svd(&a).unwrap();
        assert_eq!(d.sigma.len(), 3);
        assert!((d.sigma[0] - 3.0).abs() < 1e-14);
        assert!((d.sigma[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_zero_matrix() {
        let a = Mat::<f64>::zeros(3, 2);
        let d = svd(&a).unwrap();
        assert!(d.sigma.iter().all(|&s| s == 0.0));
        assert!(d.u.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn svd_wide_matrix_orientation() {
        // 2x4 wide matrix: U is 2x2, V is 4x2
        let a = Mat::new(2, 4, vec![1.0f64, 0.0, 2.0, 0.0, 0.0, 3.0, 0.0, 4.0]).unwrap();
        let d = svd(&a).unwrap();
        assert_eq!(d.u.shape(), (2, 2));
        assert_eq!(d.v.shape(), (4, 2));
        // reconstruct
        let rec = super::super::reconstruct_truncated(&d.u, &d.sigma, &d.v, 2);
        for (x, y) in rec.as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_matches_singular_values_of_known_matrix() {
        // A = [[1, 0], [0, 1], [1, 1]] has singular values sqrt(3), 1.
        let a = Mat::new(3, 2, vec![1.0f64, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let d = svd(&a).unwrap();
        assert!((d.sigma[0] - 3.0f64.sqrt()).abs() < 1e-12);
        assert!((d.sigma[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let a = Mat::from_fn(6, 4, |i, j| ((3 * i + 5 * j + 1) as f64 * 0.37).sin());
        let cold = svd(&a).unwrap();
        let mut b = a.clone();
        b.axpy(1e-3, &Mat::from_fn(6, 4, |i, j| ((i + 7 * j) as f64 * 0.11).cos()));
        let warm = svd_with_guess(&b, Some(&cold)).unwrap();
        let fresh = svd(&b).unwrap();
        for (x, y) in warm.sigma.iter().zip(&fresh.sigma) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn sym_eigenvalues_of_diagonal() {
        let a = Mat::<f64>::diag(&[4.0, -1.0, 2.5]);
        let e = sym_eigenvalues(&a).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-13);
        assert!((e[1] - 2.5).abs() < 1e-13);
        assert!((e[2] - 4.0).abs() < 1e-13);
    }

    #[test]
    fn sym_eigenvalues_known_2x2() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let a = Mat::new(2, 2, vec![2.0f64, 1.0, 1.0, 2.0]).unwrap();
        let e = sym_eigenvalues(&a).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-13);
        assert!((e[1] - 3.0).abs() < 1e-13);
    }
}
