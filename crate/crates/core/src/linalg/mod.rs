//! Dense-matrix primitives: trace inner product, truncated-SVD rank
//! projection, parameter-space distance, and fixed-rank tangent-space
//! projectors.
//!
//! Matrices are stored dense and row-major; the problem sizes this crate
//! targets (at most a few hundred rows/columns) never justify sparse or
//! structured storage.

mod svd;

pub use svd::{svd, svd_with_guess, sym_eigenvalues, Svd};

use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

/// Dense matrix with row-major storage.
///
/// Entries are validated to be finite by the checked constructor
/// [`Mat::new`]; arithmetic helpers assume shapes were already validated by
/// the caller and panic on mismatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    /// Checked constructor: `data` is row-major, must have length
    /// `rows * cols`, and every entry must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("matrix entry is not finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    /// Internal constructor that skips the finiteness scan.
    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    /// Build from an entry function; the function must return finite values.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(entries: &[T]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * n + i] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a contiguous slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * other`; panics on inner-dimension mismatch.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul inner dimensions");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let row_out = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == T::zero() {
                    continue;
                }
                let row_b = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in row_out.iter_mut().zip(row_b) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * other^T`; panics on dimension mismatch.
    pub fn matmul_transpose(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "matmul_transpose inner dimensions");
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let row_a = self.row(i);
            for j in 0..other.rows {
                let row_b = other.row(j);
                out.data[i * other.rows + j] = dot(row_a, row_b);
            }
        }
        out
    }

    /// `self * x` for a length-`cols` vector.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "matvec length");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `self^T * w` for a length-`rows` vector.
    pub fn matvec_transpose(&self, w: &[T]) -> Vec<T> {
        assert_eq!(w.len(), self.rows, "matvec_transpose length");
        let mut out = vec![T::zero(); self.cols];
        for (i, &wi) in w.iter().enumerate() {
            if wi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += wi * a;
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// `self + s * other`; panics on shape mismatch.
    pub fn axpy(&mut self, s: T, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "axpy shapes");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "add shapes");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "sub shapes");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn frob_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn l1_norm(&self) -> T {
        self.data.iter().map(|&x| x.abs()).sum()
    }

    /// Column `j` copied out (row-major storage makes columns strided).
    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    // Four independent accumulators so the loop vectorizes.
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = i * 4;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in chunks * 4..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Coefficient pair `(C, γ)`: the estimand and the solver iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients<T> {
    pub c: Mat<T>,
    pub gamma: Vec<T>,
}

impl<T: Scalar> Coefficients<T> {
    pub fn new(c: Mat<T>, gamma: Vec<T>) -> Self {
        Self { c, gamma }
    }

    pub fn zeros(m: usize, q: usize, p: usize) -> Self {
        Self { c: Mat::zeros(m, q), gamma: vec![T::zero(); p] }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.c.shape() == other.c.shape() && self.gamma.len() == other.gamma.len()
    }
}

/// Leading-`r` SVD factors of a reference matrix, used as the tangent-space
/// anchor of the fixed-rank manifold.
#[derive(Debug, Clone)]
pub struct TangentFrame<T> {
    u: Mat<T>,
    v: Mat<T>,
    sigma: Vec<T>,
}

impl<T: Scalar> TangentFrame<T> {
    /// Orthonormality tolerance for the frame invariants.
    const ORTHO_TOL: f64 = 1e-10;

    /// Checked constructor: `u` (m×r) and `v` (q×r) must have orthonormal
    /// columns to 1e-10 and `sigma` must be nonincreasing and positive.
    pub fn new(u: Mat<T>, v: Mat<T>, sigma: Vec<T>) -> Result<Self> {
        let r = sigma.len();
        if u.cols() != r || v.cols() != r {
            return Err(Error::Dimension(format!(
                "frame ranks disagree: u has {} columns, v has {} columns, sigma has length {r}",
                u.cols(),
                v.cols()
            )));
        }
        if sigma.is_empty() || sigma[r - 1] <= T::zero() {
            return Err(Error::RankDeficient("frame needs positive singular values".into()));
        }
        if sigma.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Argument("frame singular values must be nonincreasing".into()));
        }
        let tol = T::from_f64_lossy(Self::ORTHO_TOL);
        for (name, f) in [("u", &u), ("v", &v)] {
            let gram = f.transpose().matmul(f); // f^T f, r×r
            for i in 0..r {
                for j in 0..r {
                    let want = if i == j { T::one() } else { T::zero() };
                    if (gram.get(i, j) - want).abs() > tol {
                        return Err(Error::Argument(format!(
                            "frame factor {name} is not orthonormal to {:.0e}",
                            Self::ORTHO_TOL
                        )));
                    }
                }
            }
        }
        Ok(Self { u, v, sigma })
    }

    pub fn u(&self) -> &Mat<T> {
        &self.u
    }

    pub fn v(&self) -> &Mat<T> {
        &self.v
    }

    pub fn sigma(&self) -> &[T] {
        &self.sigma
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Smallest retained singular value; the curvature scale of the manifold
    /// at this anchor is `2 / sigma_r`.
    pub fn sigma_r(&self) -> T {
        self.sigma[self.sigma.len() - 1]
    }

    /// Reconstruct `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> Mat<T> {
        reconstruct_truncated(&self.u, &self.sigma, &self.v, self.sigma.len())
    }
}

/// Trace inner product `⟨A, B⟩ = trace(B^T A) = Σ_ij A_ij B_ij`.
pub fn frob_inner<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Result<T> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "frob_inner shapes {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(dot(a.as_slice(), b.as_slice()))
}

/// Projection to the nearest matrix of rank `r` in Frobenius norm, via the
/// singular value decomposition (all but the `r` largest singular values are
/// zeroed).
pub fn project_rank<T: Scalar>(a: &Mat<T>, r: usize) -> Result<Mat<T>> {
    let k = a.rows().min(a.cols());
    if r < 1 || r > k {
        return Err(Error::Argument(format!(
            "rank {r} out of range 1..={k} for a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let dec = svd(a)?;
    Ok(reconstruct_truncated(&dec.u, &dec.sigma, &dec.v, r))
}

pub(crate) fn reconstruct_truncated<T: Scalar>(
    u: &Mat<T>,
    sigma: &[T],
    v: &Mat<T>,
    r: usize,
) -> Mat<T> {
    let (m, q) = (u.rows(), v.rows());
    let mut out = Mat::zeros(m, q);
    for j in 0..r.min(sigma.len()) {
        let s = sigma[j];
        if s == T::zero() {
            break; // singular values are sorted; the rest contribute nothing
        }
        for i in 0..m {
            let coef = s * u.get(i, j);
            let row = &mut out.as_mut_slice()[i * q..(i + 1) * q];
            for (c, vi) in row.iter_mut().zip(0..q) {
                *c += coef * v.get(vi, j);
            }
        }
    }
    out
}

/// Parameter-space distance `√(‖C_a − C_b‖_F² + ‖γ_a − γ_b‖²)`.
pub fn param_distance<T: Scalar>(a: &Coefficients<T>, b: &Coefficients<T>) -> Result<T> {
    if !a.same_shape(b) {
        return Err(Error::Dimension("coefficient shapes disagree".into()));
    }
    let dc = a
        .c
        .as_slice()
        .iter()
        .zip(b.c.as_slice())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>();
    let dg = a
        .gamma
        .iter()
        .zip(&b.gamma)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>();
    Ok((dc + dg).sqrt())
}

/// Relative threshold below which a trailing singular value is treated as a
/// rank deficiency (double-precision SVD noise floor).
pub const RANK_TOL: f64 = 1e-12;

/// Leading-`r` SVD frame of `c_star`.
///
/// Fails with a rank-deficiency error when `σ_r < 1e-12 σ_1`, i.e. when the
/// numerical rank of the input is below `r`.
pub fn tangent_frame<T: Scalar>(c_star: &Mat<T>, r: usize) -> Result<TangentFrame<T>> {
    let k = c_star.rows().min(c_star.cols());
    if r < 1 || r > k {
        return Err(Error::Argument(format!(
            "rank {r} out of range 1..={k} for a {}x{} matrix",
            c_star.rows(),
            c_star.cols()
        )));
    }
    let dec = svd(c_star)?;
    let s1 = dec.sigma[0];
    let sr = dec.sigma[r - 1];
    if sr <= s1 * T::from_f64_lossy(RANK_TOL) || sr == T::zero() {
        return Err(Error::RankDeficient(format!(
            "sigma_{r} = {sr} is below {RANK_TOL:e} * sigma_1 = {}",
            s1 * T::from_f64_lossy(RANK_TOL)
        )));
    }
    let (m, q) = c_star.shape();
    let u = Mat::from_fn(m, r, |i, j| dec.u.get(i, j));
    let v = Mat::from_fn(q, r, |i, j| dec.v.get(i, j));
    TangentFrame::new(u, v, dec.sigma[..r].to_vec())
}

/// Project `(D, y)` onto the tangent space of the fixed-rank manifold at the
/// frame anchor, or onto its orthogonal complement.
///
/// The orthogonal part is `((I − UU^T) D (I − VV^T), 0)`; the tangent part is
/// the complement `(D − (I − UU^T) D (I − VV^T), y)`. The two parts always sum
/// to `(D, y)`.
pub fn tangent_project<T: Scalar>(
    frame: &TangentFrame<T>,
    d: &Mat<T>,
    y: &[T],
    orthogonal: bool,
) -> Result<(Mat<T>, Vec<T>)> {
    let (m, q) = (frame.u.rows(), frame.v.rows());
    if d.shape() != (m, q) {
        return Err(Error::Dimension(format!(
            "tangent_project expects a {m}x{q} matrix, got {:?}",
            d.shape()
        )));
    }
    // (I - UU^T) D (I - VV^T) = D - U(U^T D) - (D V)V^T + U(U^T D V)V^T
    let ut_d = frame.u.transpose().matmul(d); // r x q
    let d_v = d.matmul(&frame.v); // m x r
    let ut_d_v = ut_d.matmul(&frame.v); // r x r
    let mut w = d.clone();
    w.axpy(-T::one(), &frame.u.matmul(&ut_d));
    w.axpy(-T::one(), &d_v.matmul(&frame.v.transpose()));
    w.axpy(T::one(), &frame.u.matmul(&ut_d_v).matmul(&frame.v.transpose()));
    if orthogonal {
        Ok((w, vec![T::zero(); y.len()]))
    } else {
        let mut t = d.clone();
        t.axpy(-T::one(), &w);
        Ok((t, y.to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Mat<f64> {
        Mat::new(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn frob_inner_identity_is_trace() {
        let i2 = Mat::<f64>::identity(2);
        assert_eq!(frob_inner(&i2, &i2).unwrap(), 2.0);
    }

    #[test]
    fn frob_inner_zero() {
        let a = mat(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let z = Mat::zeros(2, 2);
        assert_eq!(frob_inner(&a, &z).unwrap(), 0.0);
    }

    #[test]
    fn frob_inner_hand_computed() {
        // elementwise multiply-sum: 1*5 + 2*6 + 3*7 + 4*8 = 70
        let a = mat(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = mat(2, 2, &[5.0, 6.0, 7.0, 8.0]);
        assert_eq!(frob_inner(&a, &b).unwrap(), 70.0);
    }

    #[test]
    fn frob_inner_shape_mismatch() {
        let a = mat(2, 2, &[1.0; 4]);
        let b = mat(2, 3, &[1.0; 6]);
        assert!(matches!(frob_inner(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn mat_new_rejects_non_finite() {
        assert!(Mat::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Mat::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(Mat::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn project_rank_diagonal() {
        let a = Mat::<f64>::diag(&[3.0, 2.0, 1.0]);
        let p = project_rank(&a, 2).unwrap();
        let want = Mat::<f64>::diag(&[3.0, 2.0, 0.0]);
        for (x, y) in p.as_slice().iter().zip(want.as_slice()) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn project_rank_idempotent_on_rank_r_input() {
        // rank-1 matrix: outer product
        let u: [f64; 3] = [1.0, -2.0, 0.5];
        let v: [f64; 2] = [2.0, 1.0];
        let a = Mat::from_fn(3, 2, |i, j| u[i] * v[j]);
        let p = project_rank(&a, 1).unwrap();
        for (x, y) in p.as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn project_rank_range_errors() {
        let a = Mat::<f64>::zeros(3, 2);
        assert!(matches!(project_rank(&a, 0), Err(Error::Argument(_))));
        assert!(matches!(project_rank(&a, 3), Err(Error::Argument(_))));
    }

    #[test]
    fn param_distance_examples() {
        let x = Coefficients::new(mat(2, 2, &[1.0, 0.0, 0.0, 1.0]), vec![1.0]);
        assert_eq!(param_distance(&x, &x).unwrap(), 0.0);
        let zero = Coefficients::zeros(2, 2, 1);
        // ||I_2||_F^2 = 2, ||(1)||^2 = 1
        assert!((param_distance(&zero, &x).unwrap() - 3.0f64.sqrt()).abs() < 1e-15);
        let bad = Coefficients::zeros(2, 3, 1);
        assert!(param_distance(&zero, &bad).is_err());
    }

    #[test]
    fn tangent_frame_diagonal() {
        let a = Mat::<f64>::diag(&[3.0, 2.0, 1.0]);
        let f = tangent_frame(&a, 3).unwrap();
        assert_eq!(f.sigma(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn tangent_frame_rank_one() {
        let u: [f64; 2] = [0.6, 0.8];
        let v: [f64; 3] = [0.0, 1.0, 0.0];
        let a = Mat::from_fn(2, 3, |i, j| 5.0 * u[i] * v[j]);
        let f = tangent_frame(&a, 1).unwrap();
        assert!((f.sigma()[0] - 5.0).abs() < 1e-12);
        // U proportional to u, V proportional to v, up to a common sign
        let su = f.u().get(0, 0).signum() * u[0].signum();
        for i in 0..2 {
            assert!((f.u().get(i, 0) - su * u[i]).abs() < 1e-12);
        }
        for j in 0..3 {
            assert!((f.v().get(j, 0) - su * v[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_frame_rank_deficiency() {
        let a = Mat::<f64>::diag(&[1.0, 0.0]);
        assert!(matches!(tangent_frame(&a, 2), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn tangent_parts_sum_to_input() {
        let a = Mat::<f64>::diag(&[3.0, 2.0, 1.0]);
        let f = tangent_frame(&a, 2).unwrap();
        let d = mat(3, 3, &[1.0, -2.0, 3.0, 0.5, 4.0, -1.0, 2.0, 2.0, 0.0]);
        let y = vec![1.0, -1.0];
        let (t, ty) = tangent_project(&f, &d, &y, false).unwrap();
        let (o, oy) = tangent_project(&f, &d, &y, true).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((t.get(i, j) + o.get(i, j) - d.get(i, j)).abs() < 1e-12);
            }
        }
        for k in 0..2 {
            assert!((ty[k] + oy[k] - y[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn tangent_project_kills_in_span_part() {
        // D = U A V^T has no orthogonal component
        let c = Mat::<f64>::diag(&[3.0, 2.0, 1.0]);
        let f = tangent_frame(&c, 2).unwrap();
        let a = mat(2, 2, &[1.0, 2.0, -1.0, 0.5]);
        let d = f.u().matmul(&a).matmul(&f.v().transpose());
        let (o, _) = tangent_project(&f, &d, &[], true).unwrap();
        assert!(o.frob_norm() < 1e-12);
    }
}
