//! Loss functions, the penalized objective, analytic gradients, and the
//! curvature-weighted Gram (Hessian) matrix.
//!
//! The objective being minimized is
//!
//! ```text
//! F(C, γ) = Σ_{i=1}^n l(y_i, ⟨X_i, C⟩ + z_iᵀγ) + λ ‖C‖_1
//! ```
//!
//! in sum (not mean) form. Gradients are the true derivatives of this
//! objective, so accepted descent steps provably decrease `F`; any constant
//! rescaling of the gradient is absorbed by the backtracking line search. The
//! ℓ1 subgradient uses the minimum-norm element (0 at zero entries), which
//! keeps zero entries stationary. The penalty applies to `C` only; `γ` is
//! unpenalized.

use serde::Serialize;

use crate::error::Error;
use crate::linalg::{Coefficients, Mat};
use crate::scalar::Scalar;
use crate::Result;

/// Loss family: squared error, Huber with threshold `alpha`, or logistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LossModel<T> {
    /// Squared error `(y - f)^2`.
    Ordinary,
    /// Huber loss `ρ_α(|y - f|)`: quadratic for residuals up to `alpha`,
    /// linear beyond, bounding outlier influence.
    Robust { alpha: T },
    /// Logit loss `log(1 + e^f) - y f` for binary responses.
    Logistic,
}

impl<T: Scalar> LossModel<T> {
    pub fn validate(&self) -> Result<()> {
        if let LossModel::Robust { alpha } = self {
            if !(*alpha > T::zero()) || !alpha.is_finite() {
                return Err(Error::Argument(format!("Huber threshold must be positive, got {alpha}")));
            }
        }
        Ok(())
    }

    pub fn is_logistic(&self) -> bool {
        matches!(self, LossModel::Logistic)
    }

    /// Same loss family, ignoring parameter values.
    pub fn same_kind(&self, other: &Self) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }

    /// Loss value `l(y, f)`.
    pub fn value(&self, y: T, f: T) -> Result<T> {
        self.check_response(y)?;
        Ok(self.value_raw(y, f))
    }

    /// First derivative `d/df l(y, f)`.
    pub fn deriv(&self, y: T, f: T) -> Result<T> {
        self.check_response(y)?;
        Ok(self.deriv_raw(y, f))
    }

    /// Curvature weight `w_2 = d²/df² l(y, f)` (the Huber case uses the
    /// indicator of the quadratic zone).
    pub fn curvature_weight(&self, y: T, f: T) -> Result<T> {
        self.check_response(y)?;
        Ok(self.curvature_raw(y, f))
    }

    fn check_response(&self, y: T) -> Result<()> {
        if self.is_logistic() && y != T::zero() && y != T::one() {
            return Err(Error::Argument(format!(
                "logistic loss needs responses in {{0, 1}}, got {y}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn value_raw(&self, y: T, f: T) -> T {
        match *self {
            LossModel::Ordinary => {
                let r = y - f;
                r * r
            }
            LossModel::Robust { alpha } => {
                let t = (y - f).abs();
                if t <= alpha {
                    T::from_f64_lossy(0.5) * t * t
                } else {
                    alpha * (t - T::from_f64_lossy(0.5) * alpha)
                }
            }
            // log(1 + e^f) - y f, with the exponential taken on the
            // non-positive side so line-search probes with |f| in the
            // hundreds stay finite.
            LossModel::Logistic => {
                if f > T::zero() {
                    f - y * f + (-f).exp().ln_1p()
                } else {
                    f.exp().ln_1p() - y * f
                }
            }
        }
    }

    #[inline]
    pub(crate) fn deriv_raw(&self, y: T, f: T) -> T {
        match *self {
            LossModel::Ordinary => {
                let two = T::one() + T::one();
                -two * (y - f)
            }
            LossModel::Robust { alpha } => {
                // -ρ'_α(y - f) with ρ' extended as an odd function
                let t = y - f;
                if t.abs() <= alpha {
                    -t
                } else if t > T::zero() {
                    -alpha
                } else {
                    alpha
                }
            }
            LossModel::Logistic => sigmoid(f) - y,
        }
    }

    #[inline]
    pub(crate) fn curvature_raw(&self, y: T, f: T) -> T {
        match *self {
            LossModel::Ordinary => T::one() + T::one(),
            LossModel::Robust { alpha } => {
                if (y - f).abs() < alpha {
                    T::one()
                } else {
                    T::zero()
                }
            }
            LossModel::Logistic => {
                let s = sigmoid(f);
                s * (T::one() - s)
            }
        }
    }
}

#[inline]
fn sigmoid<T: Scalar>(f: T) -> T {
    if f >= T::zero() {
        T::one() / (T::one() + (-f).exp())
    } else {
        let e = f.exp();
        e / (T::one() + e)
    }
}

/// `n` samples of (matrix predictor, vector predictor, response) plus the
/// loss family they were generated for.
///
/// The matrix predictors are stored flattened: row `i` of `x` is the
/// row-major vectorization of `X_i`, which makes the per-sample inner
/// products `⟨X_i, C⟩` contiguous dot products.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    m: usize,
    q: usize,
    x: Mat<T>,
    z: Mat<T>,
    y: Vec<T>,
    model: LossModel<T>,
}

impl<T: Scalar> Dataset<T> {
    /// Build from per-sample predictor matrices. All `X_i` must share one
    /// shape; `z` is n×p; logistic responses must lie in {0, 1}.
    pub fn new(xs: &[Mat<T>], z: Mat<T>, y: Vec<T>, model: LossModel<T>) -> Result<Self> {
        let Some(first) = xs.first() else {
            return Err(Error::Argument(
                "cannot infer predictor shape from zero samples; use Dataset::empty".into(),
            ));
        };
        let (m, q) = first.shape();
        let mut flat = Vec::with_capacity(xs.len() * m * q);
        for (i, xi) in xs.iter().enumerate() {
            if xi.shape() != (m, q) {
                return Err(Error::Dimension(format!(
                    "predictor {i} has shape {:?}, expected {:?}",
                    xi.shape(),
                    (m, q)
                )));
            }
            flat.extend_from_slice(xi.as_slice());
        }
        let x = Mat::new(xs.len(), m * q, flat)?;
        Self::from_flat(m, q, x, z, y, model)
    }

    /// Build from the flattened predictor matrix (n rows of length m·q).
    pub fn from_flat(
        m: usize,
        q: usize,
        x: Mat<T>,
        z: Mat<T>,
        y: Vec<T>,
        model: LossModel<T>,
    ) -> Result<Self> {
        model.validate()?;
        let n = x.rows();
        if x.cols() != m * q {
            return Err(Error::Dimension(format!(
                "flat predictors have {} columns, expected m*q = {}",
                x.cols(),
                m * q
            )));
        }
        if z.rows() != n || y.len() != n {
            return Err(Error::Dimension(format!(
                "sample counts disagree: {} predictors, {} vector predictors, {} responses",
                n,
                z.rows(),
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("response is not finite".into()));
        }
        if model.is_logistic() {
            if let Some(bad) = y.iter().find(|&&v| v != T::zero() && v != T::one()) {
                return Err(Error::Argument(format!(
                    "logistic responses must be 0 or 1, got {bad}"
                )));
            }
        }
        Ok(Self { m, q, x, z, y, model })
    }

    /// Dataset with zero samples (penalty-only objectives).
    pub fn empty(m: usize, q: usize, p: usize, model: LossModel<T>) -> Self {
        Self {
            m,
            q,
            x: Mat::zeros(0, m * q),
            z: Mat::zeros(0, p),
            y: Vec::new(),
            model,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn p(&self) -> usize {
        self.z.cols()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn z(&self) -> &Mat<T> {
        &self.z
    }

    /// Flattened predictors, n × (m·q).
    pub fn x_flat(&self) -> &Mat<T> {
        &self.x
    }

    /// Row-major vectorization of `X_i`.
    pub fn x_row(&self, i: usize) -> &[T] {
        self.x.row(i)
    }

    /// `X_i` copied out as a matrix.
    pub fn x_mat(&self, i: usize) -> Mat<T> {
        let row = self.x_row(i);
        Mat::from_fn(self.m, self.q, |a, b| row[a * self.q + b])
    }

    pub fn model(&self) -> &LossModel<T> {
        &self.model
    }

    /// Same samples under a different loss family (for robust-vs-ordinary
    /// comparisons on identical draws).
    pub fn with_model(&self, model: LossModel<T>) -> Result<Self> {
        let mut out = self.clone();
        model.validate()?;
        if model.is_logistic() && self.y.iter().any(|&v| v != T::zero() && v != T::one()) {
            return Err(Error::Argument("responses are not binary".into()));
        }
        out.model = model;
        Ok(out)
    }

    /// Subset of samples by index (for cross-validation folds).
    pub fn subset(&self, idx: &[usize]) -> Self {
        let d = self.m * self.q;
        let mut x = Vec::with_capacity(idx.len() * d);
        let mut z = Vec::with_capacity(idx.len() * self.p());
        let mut y = Vec::with_capacity(idx.len());
        for &i in idx {
            x.extend_from_slice(self.x.row(i));
            z.extend_from_slice(self.z.row(i));
            y.push(self.y[i]);
        }
        Self {
            m: self.m,
            q: self.q,
            x: Mat::new(idx.len(), d, x).expect("rows were validated at construction"),
            z: Mat::new(idx.len(), self.p(), z).expect("rows were validated at construction"),
            y,
            model: self.model,
        }
    }
}

/// The penalized objective `F(C, γ) = Σ l(y_i, f_i) + λ‖C‖_1` over a dataset.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a, T> {
    data: &'a Dataset<T>,
    lambda: T,
}

impl<'a, T: Scalar> Objective<'a, T> {
    pub fn new(data: &'a Dataset<T>, lambda: T) -> Result<Self> {
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::Argument(format!("lambda must be nonnegative, got {lambda}")));
        }
        Ok(Self { data, lambda })
    }

    pub fn data(&self) -> &'a Dataset<T> {
        self.data
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    fn check_shapes(&self, coeff: &Coefficients<T>) -> Result<()> {
        if coeff.c.shape() != (self.data.m, self.data.q) || coeff.gamma.len() != self.data.p() {
            return Err(Error::Dimension(format!(
                "coefficients {:?}/{} do not match dataset {:?}/{}",
                coeff.c.shape(),
                coeff.gamma.len(),
                (self.data.m, self.data.q),
                self.data.p()
            )));
        }
        Ok(())
    }

    /// Linear predictors `f_i = ⟨X_i, C⟩ + z_iᵀγ`.
    pub fn predictions(&self, coeff: &Coefficients<T>) -> Result<Vec<T>> {
        self.check_shapes(coeff)?;
        let mut f = self.data.x.matvec(coeff.c.as_slice());
        let zg = self.data.z.matvec(&coeff.gamma);
        for (a, b) in f.iter_mut().zip(zg) {
            *a += b;
        }
        Ok(f)
    }

    /// Objective value; errors if any intermediate is non-finite.
    pub fn value(&self, coeff: &Coefficients<T>) -> Result<T> {
        let f = self.predictions(coeff)?;
        self.value_at_predictions(&f, &coeff.c)
    }

    pub(crate) fn value_at_predictions(&self, f: &[T], c: &Mat<T>) -> Result<T> {
        let model = &self.data.model;
        let mut total = T::zero();
        for (&yi, &fi) in self.data.y.iter().zip(f) {
            total += model.value_raw(yi, fi);
        }
        total += self.lambda * c.l1_norm();
        if !total.is_finite() {
            return Err(Error::Numeric("objective value is not finite".into()));
        }
        Ok(total)
    }

    /// Analytic gradient `(∂F/∂C, ∂F/∂γ)`; errors on non-finite entries.
    pub fn gradient(&self, coeff: &Coefficients<T>) -> Result<(Mat<T>, Vec<T>)> {
        let f = self.predictions(coeff)?;
        let w = self.loss_derivs(&f);
        let gc = self.gradient_c_from(&w, &coeff.c);
        let gg = self.gradient_gamma_from(&w);
        if gc.as_slice().iter().chain(&gg).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("gradient is not finite".into()));
        }
        Ok((gc, gg))
    }

    /// Per-sample loss derivatives at given predictions.
    pub(crate) fn loss_derivs(&self, f: &[T]) -> Vec<T> {
        let model = &self.data.model;
        self.data
            .y
            .iter()
            .zip(f)
            .map(|(&yi, &fi)| model.deriv_raw(yi, fi))
            .collect()
    }

    /// `∂F/∂C = Σ_i X_i w_i + λ sign(C)` from per-sample derivatives `w`.
    pub(crate) fn gradient_c_from(&self, w: &[T], c: &Mat<T>) -> Mat<T> {
        let flat = self.data.x.matvec_transpose(w);
        let mut g = Mat::from_vec_unchecked(self.data.m, self.data.q, flat);
        if self.lambda > T::zero() {
            for (gi, &ci) in g.as_mut_slice().iter_mut().zip(c.as_slice()) {
                *gi += self.lambda * l1_subgradient(ci);
            }
        }
        g
    }

    /// `∂F/∂γ = Σ_i z_i w_i` from per-sample derivatives `w`.
    pub(crate) fn gradient_gamma_from(&self, w: &[T]) -> Vec<T> {
        self.data.z.matvec_transpose(w)
    }

    /// Curvature-weighted Gram matrix
    /// `H(C, γ) = Σ_i w_{2,i} vec(X_i, z_i) vec(X_i, z_i)ᵀ`
    /// of size (mq+p)×(mq+p), where `vec(X_i, z_i)` stacks the row-major
    /// entries of `X_i` followed by `z_i`. Symmetric positive semidefinite.
    pub fn hessian(&self, coeff: &Coefficients<T>) -> Result<Mat<T>> {
        let d = self.data.m * self.data.q + self.data.p();
        if d > HESSIAN_DIM_CAP {
            return Err(Error::Capacity(format!(
                "dense Hessian needs mq+p <= {HESSIAN_DIM_CAP}, got {d}"
            )));
        }
        let f = self.predictions(coeff)?;
        let model = &self.data.model;
        let mq = self.data.m * self.data.q;
        let mut h = Mat::zeros(d, d);
        let mut vi = vec![T::zero(); d];
        for i in 0..self.data.n() {
            let w2 = model.curvature_raw(self.data.y[i], f[i]);
            if w2 == T::zero() {
                continue;
            }
            vi[..mq].copy_from_slice(self.data.x.row(i));
            vi[mq..].copy_from_slice(self.data.z.row(i));
            for a in 0..d {
                let s = w2 * vi[a];
                if s == T::zero() {
                    continue;
                }
                let row = &mut h.as_mut_slice()[a * d..(a + 1) * d];
                for (hab, &vb) in row.iter_mut().zip(&vi) {
                    *hab += s * vb;
                }
            }
        }
        Ok(h)
    }
}

/// Dense feasibility guard for the exact Hessian.
pub const HESSIAN_DIM_CAP: usize = 4096;

#[inline]
fn l1_subgradient<T: Scalar>(x: T) -> T {
    // signum(±0.0) is ±1.0, so the zero case needs its own branch
    if x == T::zero() {
        T::zero()
    } else {
        x.signum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn loss_values() {
        let ord = LossModel::<f64>::Ordinary;
        assert_eq!(ord.value(1.0, 0.0).unwrap(), 1.0);
        let rob = LossModel::Robust { alpha: 1.0 };
        // quadratic branch
        assert_eq!(rob.value(0.5, 0.0).unwrap(), 0.125);
        // linear branch: alpha * (|t| - alpha/2) = 1 * (3 - 0.5)
        assert_eq!(rob.value(3.0, 0.0).unwrap(), 2.5);
        let log = LossModel::<f64>::Logistic;
        assert!((log.value(1.0, 0.0).unwrap() - LN2).abs() < 1e-15);
    }

    #[test]
    fn loss_derivs() {
        assert_eq!(LossModel::<f64>::Ordinary.deriv(1.0, 0.0).unwrap(), -2.0);
        assert_eq!(LossModel::<f64>::Logistic.deriv(0.0, 0.0).unwrap(), 0.5);
        // Huber derivative saturates at alpha
        assert_eq!(LossModel::Robust { alpha: 1.0 }.deriv(3.0, 0.0).unwrap(), -1.0);
    }

    #[test]
    fn curvature_weights() {
        assert_eq!(LossModel::<f64>::Ordinary.curvature_weight(7.0, -3.0).unwrap(), 2.0);
        assert_eq!(LossModel::Robust { alpha: 1.0 }.curvature_weight(2.0, 0.0).unwrap(), 0.0);
        assert_eq!(LossModel::<f64>::Logistic.curvature_weight(0.0, 0.0).unwrap(), 0.25);
    }

    #[test]
    fn logistic_rejects_non_binary() {
        let log = LossModel::<f64>::Logistic;
        assert!(matches!(log.value(0.5, 0.0), Err(Error::Argument(_))));
        assert!(matches!(log.deriv(2.0, 0.0), Err(Error::Argument(_))));
    }

    #[test]
    fn logistic_is_overflow_safe() {
        let log = LossModel::<f64>::Logistic;
        for &f in &[800.0, -800.0, 1e6, -1e6] {
            assert!(log.value(1.0, f).unwrap().is_finite());
            assert!(log.deriv(0.0, f).unwrap().is_finite());
            assert!(log.curvature_weight(1.0, f).unwrap().is_finite());
        }
        // log(1 + e^800) ~ 800
        assert!((log.value(0.0, 800.0).unwrap() - 800.0).abs() < 1e-9);
    }

    #[test]
    fn penalty_only_objective() {
        let data = Dataset::empty(2, 2, 1, LossModel::<f64>::Ordinary);
        let obj = Objective::new(&data, 1.0).unwrap();
        let coeff = Coefficients::new(Mat::identity(2), vec![0.0]);
        assert_eq!(obj.value(&coeff).unwrap(), 2.0);
    }

    #[test]
    fn penalty_only_gradient_is_sign() {
        let data = Dataset::empty(1, 2, 1, LossModel::<f64>::Ordinary);
        let obj = Objective::new(&data, 1.0).unwrap();
        let coeff = Coefficients::new(Mat::new(1, 2, vec![2.0, -3.0]).unwrap(), vec![4.0]);
        let (gc, gg) = obj.gradient(&coeff).unwrap();
        assert_eq!(gc.as_slice(), &[1.0, -1.0]);
        // gamma is unpenalized
        assert_eq!(gg, vec![0.0]);
    }

    #[test]
    fn subgradient_zero_at_zero() {
        let data = Dataset::empty(1, 2, 0, LossModel::<f64>::Ordinary);
        let obj = Objective::new(&data, 5.0).unwrap();
        let coeff = Coefficients::new(Mat::new(1, 2, vec![0.0, -0.0]).unwrap(), vec![]);
        let (gc, _) = obj.gradient(&coeff).unwrap();
        assert_eq!(gc.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn hessian_single_basis_sample() {
        // one sample with vec(X, z) = e_1 under the ordinary model: H = 2 e_1 e_1^T
        let x = Mat::new(1, 2, vec![1.0, 0.0]).unwrap();
        let z = Mat::zeros(1, 1);
        let data = Dataset::from_flat(1, 2, x, z, vec![0.0], LossModel::Ordinary).unwrap();
        let obj = Objective::new(&data, 0.0).unwrap();
        let h = obj.hessian(&Coefficients::zeros(1, 2, 1)).unwrap();
        assert_eq!(h.shape(), (3, 3));
        assert_eq!(h.get(0, 0), 2.0);
        for (i, j) in [(0, 1), (1, 0), (1, 1), (2, 2), (0, 2)] {
            assert_eq!(h.get(i, j), 0.0);
        }
    }

    #[test]
    fn hessian_robust_all_saturated_is_zero() {
        let x = Mat::new(2, 1, vec![1.0, -2.0]).unwrap();
        let z = Mat::zeros(2, 0);
        // residuals are 5 and -7, both beyond alpha = 1
        let data =
            Dataset::from_flat(1, 1, x, z, vec![5.0, -7.0], LossModel::Robust { alpha: 1.0 })
                .unwrap();
        let obj = Objective::new(&data, 0.0).unwrap();
        let h = obj.hessian(&Coefficients::zeros(1, 1, 0)).unwrap();
        assert!(h.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hessian_capacity_guard() {
        let data = Dataset::empty(65, 64, 5, LossModel::<f64>::Ordinary);
        let obj = Objective::new(&data, 0.0).unwrap();
        let coeff = Coefficients::zeros(65, 64, 5);
        assert!(matches!(obj.hessian(&coeff), Err(Error::Capacity(_))));
    }

    #[test]
    fn dataset_validation() {
        let xs = vec![Mat::<f64>::zeros(2, 2), Mat::zeros(2, 3)];
        let z = Mat::zeros(2, 1);
        assert!(Dataset::new(&xs, z.clone(), vec![0.0, 1.0], LossModel::Ordinary).is_err());
        let xs = vec![Mat::zeros(2, 2), Mat::zeros(2, 2)];
        assert!(
            Dataset::new(&xs, z.clone(), vec![0.5, 1.0], LossModel::Logistic).is_err(),
            "non-binary logistic response must be rejected"
        );
        assert!(Dataset::new(&xs, z, vec![0.0, 1.0], LossModel::Robust { alpha: -1.0 }).is_err());
    }
}
