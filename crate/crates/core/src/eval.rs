//! Metrics and model selection: coefficient RMSEs, prediction error, k-fold
//! cross-validation for the penalty weight λ, and the nested-CV protocol.
//!
//! RMSE conventions: the matrix error is per entry, `‖Ĉ − C*‖_F / √(mq)`, and
//! the vector error per coordinate, `‖γ̂ − γ*‖ / √p`. Prediction error is the
//! response RMSE for the regression losses and the misclassification rate
//! (probability threshold ½, ties classified as 0) for the logistic loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Error;
use crate::linalg::Coefficients;
use crate::model::{Dataset, LossModel};
use crate::scalar::Scalar;
use crate::solver::{fit, SolverConfig, Termination};
use crate::Result;

/// Evaluation metrics for one fitted model against a known truth.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Metrics<T> {
    pub rmse_c: T,
    pub rmse_gamma: T,
    pub prediction_error: T,
}

/// Fold layout for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Folds {
    /// k-fold with shuffled assignment; fold sizes differ by at most one.
    K(usize),
    /// Leave-one-out: each sample is its own fold, in natural order.
    LeaveOneOut,
}

/// Cross-validation plan: outer fold layout, λ grid, inner fold count for
/// tuning, and the shuffle seed.
#[derive(Debug, Clone, Serialize)]
pub struct CvPlan<T> {
    pub folds: Folds,
    pub lambda_grid: Vec<T>,
    pub inner_folds: usize,
    pub seed: u64,
}

impl<T: Scalar> CvPlan<T> {
    pub fn new(folds: Folds, lambda_grid: Vec<T>) -> Self {
        Self { folds, lambda_grid, inner_folds: 5, seed: 0 }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Folds::K(k) = self.folds {
            if k < 2 || k > n {
                return Err(Error::Argument(format!("fold count {k} out of range 2..={n}")));
            }
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::Argument("lambda grid is empty".into()));
        }
        if self.lambda_grid.iter().any(|l| !(*l >= T::zero()) || !l.is_finite()) {
            return Err(Error::Argument("lambda grid entries must be nonnegative".into()));
        }
        if self.inner_folds < 2 || self.inner_folds > n {
            return Err(Error::Argument(format!(
                "inner fold count {} out of range 2..={n}",
                self.inner_folds
            )));
        }
        Ok(())
    }
}

/// Default λ grid: 20 points, logarithmically spaced over `[1e-4, 1e2] · n`,
/// spanning the penalty-free to penalty-dominant regimes at these problem
/// sizes.
pub fn default_lambda_grid<T: Scalar>(n: usize) -> Vec<T> {
    let n = n as f64;
    (0..20)
        .map(|j| T::from_f64_lossy(n * 10f64.powf(-4.0 + 6.0 * j as f64 / 19.0)))
        .collect()
}

/// Per-entry RMSE of the matrix part and per-coordinate RMSE of the vector
/// part: `(‖Ĉ − C*‖_F / √(mq), ‖γ̂ − γ*‖ / √p)`.
pub fn coefficient_rmse<T: Scalar>(
    est: &Coefficients<T>,
    truth: &Coefficients<T>,
) -> Result<(T, T)> {
    if !est.same_shape(truth) {
        return Err(Error::Dimension("coefficient shapes disagree".into()));
    }
    let (m, q) = est.c.shape();
    let p = est.gamma.len();
    let dc = est.c.sub(&truth.c).frob_norm() / T::from_f64_lossy((m * q) as f64).sqrt();
    let dg = if p == 0 {
        T::zero()
    } else {
        est.gamma
            .iter()
            .zip(&truth.gamma)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
            / T::from_f64_lossy(p as f64).sqrt()
    };
    Ok((dc, dg))
}

/// Prediction error of `coeff` on a held-out dataset: response RMSE for the
/// regression losses, misclassification rate for the logistic loss.
pub fn prediction_error<T: Scalar>(
    model: &LossModel<T>,
    coeff: &Coefficients<T>,
    test: &Dataset<T>,
) -> Result<T> {
    if !model.same_kind(test.model()) {
        return Err(Error::Argument("loss kinds of model and test data disagree".into()));
    }
    if test.n() == 0 {
        return Err(Error::Argument("empty test set".into()));
    }
    if coeff.c.shape() != (test.m(), test.q()) || coeff.gamma.len() != test.p() {
        return Err(Error::Dimension("coefficients do not match test data".into()));
    }
    let mut preds = test.x_flat().matvec(coeff.c.as_slice());
    let zg = test.z().matvec(&coeff.gamma);
    for (a, b) in preds.iter_mut().zip(zg) {
        *a += b;
    }
    let n = T::from_f64_lossy(test.n() as f64);
    if model.is_logistic() {
        // σ(θ) > ½ iff θ > 0; θ = 0 classifies as 0
        let wrong = preds
            .iter()
            .zip(test.y())
            .filter(|(&theta, &y)| {
                let label = if theta > T::zero() { T::one() } else { T::zero() };
                label != y
            })
            .count();
        Ok(T::from_f64_lossy(wrong as f64) / n)
    } else {
        let sse = preds.iter().zip(test.y()).map(|(&f, &y)| (y - f) * (y - f)).sum::<T>();
        Ok((sse / n).sqrt())
    }
}

/// Partition `0..n` into folds. K-fold shuffles with the seed and splits into
/// chunks whose sizes differ by at most one; leave-one-out keeps natural
/// order.
pub fn make_folds(n: usize, folds: Folds, seed: u64) -> Vec<Vec<usize>> {
    match folds {
        Folds::LeaveOneOut => (0..n).map(|i| vec![i]).collect(),
        Folds::K(k) => {
            let mut idx: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            idx.shuffle(&mut rng);
            let base = n / k;
            let extra = n % k;
            let mut out = Vec::with_capacity(k);
            let mut at = 0;
            for f in 0..k {
                let len = base + usize::from(f < extra);
                out.push(idx[at..at + len].to_vec());
                at += len;
            }
            out
        }
    }
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut keep = vec![true; n];
    for &i in fold {
        keep[i] = false;
    }
    (0..n).filter(|&i| keep[i]).collect()
}

/// One row of the λ-tuning table.
#[derive(Debug, Clone, Serialize)]
pub struct CvEntry<T> {
    pub lambda: T,
    /// Mean held-out prediction error over folds; `None` when no fold
    /// produced an estimate.
    pub mean_error: Option<T>,
    pub fold_errors: Vec<Option<T>>,
    /// Number of folds whose fit ended in a line-search stall.
    pub stalls: usize,
    /// False when every fold stalled (such a λ is excluded from selection).
    pub valid: bool,
}

/// Tune λ by `inner_folds`-fold cross-validation over the grid.
///
/// Returns the λ minimizing the mean held-out prediction error (ties go to
/// the smallest λ) together with the full table. The grid is deduplicated and
/// the result does not depend on its order. Stalled fits still contribute
/// their best iterate; a λ whose fits all stall is marked invalid.
pub fn tune_lambda<T: Scalar>(
    data: &Dataset<T>,
    base: &SolverConfig<T>,
    plan: &CvPlan<T>,
) -> Result<(T, Vec<CvEntry<T>>)> {
    plan.validate(data.n())?;
    let mut grid = plan.lambda_grid.clone();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite lambda"));
    grid.dedup();

    let folds = make_folds(data.n(), Folds::K(plan.inner_folds), plan.seed);
    let splits: Vec<(Dataset<T>, Dataset<T>)> = folds
        .iter()
        .map(|fold| {
            let train = data.subset(&complement(data.n(), fold));
            let test = data.subset(fold);
            (train, test)
        })
        .collect();

    let table: Vec<CvEntry<T>> = grid
        .par_iter()
        .map(|&lambda| {
            let config = SolverConfig { lambda, ..*base };
            let mut fold_errors = Vec::with_capacity(splits.len());
            let mut stalls = 0;
            for (train, test) in &splits {
                match fit(train, &config, None) {
                    Ok(res) => {
                        if res.termination == Termination::LineSearchStall {
                            stalls += 1;
                        }
                        fold_errors
                            .push(prediction_error(data.model(), &res.coefficients, test).ok());
                    }
                    Err(_) => fold_errors.push(None),
                }
            }
            let usable: Vec<T> = fold_errors.iter().flatten().copied().collect();
            let valid = !usable.is_empty() && stalls < splits.len();
            let mean_error = if usable.is_empty() {
                None
            } else {
                Some(usable.iter().copied().sum::<T>() / T::from_f64_lossy(usable.len() as f64))
            };
            CvEntry { lambda, mean_error, fold_errors, stalls, valid }
        })
        .collect();

    let best = table
        .iter()
        .filter(|e| e.valid)
        .filter_map(|e| e.mean_error.map(|m| (e.lambda, m)))
        .min_by(|a, b| {
            // strict comparison on error, then smallest lambda on ties;
            // the ascending grid makes the first minimum the smallest λ
            a.1.partial_cmp(&b.1)
                .expect("finite errors")
                .then(a.0.partial_cmp(&b.0).expect("finite lambda"))
        })
        .map(|(l, _)| l)
        .ok_or_else(|| Error::Numeric("no lambda in the grid produced a usable fit".into()))?;

    Ok((best, table))
}

/// Nested cross-validation report.
#[derive(Debug, Clone, Serialize)]
pub struct NestedCvReport<T> {
    /// Mean held-out prediction error over outer folds.
    pub mean_error: T,
    /// Standard deviation across outer folds; defined as 0 for leave-one-out,
    /// whose partition (and hence whole run) is deterministic.
    pub std_error: T,
    pub fold_errors: Vec<T>,
    /// λ selected by the inner CV of each outer fold.
    pub fold_lambdas: Vec<T>,
    /// Mean per-entry RMSE of C over outer folds, when a truth was supplied.
    pub mean_rmse_c: Option<T>,
    /// Mean per-coordinate RMSE of γ over outer folds, when a truth was
    /// supplied.
    pub mean_rmse_gamma: Option<T>,
}

/// Outer k-fold loop: per fold, tune λ by inner CV on the training part, fit
/// on the full training part, and evaluate on the held-out fold.
pub fn nested_cv_experiment<T: Scalar>(
    data: &Dataset<T>,
    base: &SolverConfig<T>,
    plan: &CvPlan<T>,
    truth: Option<&Coefficients<T>>,
) -> Result<NestedCvReport<T>> {
    plan.validate(data.n())?;
    let outer = make_folds(data.n(), plan.folds, plan.seed);

    let per_fold: Vec<Result<(T, T, Option<(T, T)>)>> = outer
        .par_iter()
        .enumerate()
        .map(|(fi, fold)| {
            let train = data.subset(&complement(data.n(), fold));
            let test = data.subset(fold);
            let inner_plan = CvPlan {
                folds: Folds::K(plan.inner_folds),
                lambda_grid: plan.lambda_grid.clone(),
                inner_folds: plan.inner_folds,
                seed: derived_fold_seed(plan.seed, fi),
            };
            let (lambda, _) = tune_lambda(&train, base, &inner_plan)?;
            let config = SolverConfig { lambda, ..*base };
            let res = fit(&train, &config, None)?;
            let err = prediction_error(data.model(), &res.coefficients, &test)?;
            let rmse = match truth {
                Some(t) => Some(coefficient_rmse(&res.coefficients, t)?),
                None => None,
            };
            Ok((lambda, err, rmse))
        })
        .collect();

    let mut fold_errors = Vec::with_capacity(outer.len());
    let mut fold_lambdas = Vec::with_capacity(outer.len());
    let mut rmse_c = Vec::new();
    let mut rmse_g = Vec::new();
    for r in per_fold {
        let (lambda, err, rmse) = r?;
        fold_lambdas.push(lambda);
        fold_errors.push(err);
        if let Some((rc, rg)) = rmse {
            rmse_c.push(rc);
            rmse_g.push(rg);
        }
    }

    let (mean_error, spread) = mean_std(&fold_errors);
    let std_error = match plan.folds {
        Folds::LeaveOneOut => T::zero(),
        Folds::K(_) => spread,
    };
    let agg = |v: &[T]| (!v.is_empty()).then(|| mean_std(v).0);
    Ok(NestedCvReport {
        mean_error,
        std_error,
        fold_errors,
        fold_lambdas,
        mean_rmse_c: agg(&rmse_c),
        mean_rmse_gamma: agg(&rmse_g),
    })
}

fn derived_fold_seed(seed: u64, fold: usize) -> u64 {
    // odd multiplier, so distinct folds map to distinct seeds
    seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(fold as u64 + 1)
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std<T: Scalar>(values: &[T]) -> (T, T) {
    if values.is_empty() {
        return (T::zero(), T::zero());
    }
    let n = T::from_f64_lossy(values.len() as f64);
    let mean = values.iter().copied().sum::<T>() / n;
    if values.len() < 2 {
        return (mean, T::zero());
    }
    let ss = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
    (mean, (ss / (n - T::one())).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;

    #[test]
    fn rmse_examples() {
        let truth = Coefficients::new(Mat::<f64>::zeros(2, 2), vec![1.0, 2.0]);
        assert_eq!(coefficient_rmse(&truth, &truth).unwrap(), (0.0, 0.0));
        // est - truth = all-ones 2x2 -> per-entry RMSE 1; gamma exact
        let est = Coefficients::new(Mat::from_fn(2, 2, |_, _| 1.0), vec![1.0, 2.0]);
        let (rc, rg) = coefficient_rmse(&est, &truth).unwrap();
        assert!((rc - 1.0).abs() < 1e-15);
        assert_eq!(rg, 0.0);
    }

    #[test]
    fn rmse_shape_mismatch() {
        let a = Coefficients::<f64>::zeros(2, 2, 1);
        let b = Coefficients::<f64>::zeros(2, 3, 1);
        assert!(coefficient_rmse(&a, &b).is_err());
    }

    #[test]
    fn logistic_zero_coefficients_predict_class_zero() {
        // σ(0) = ½ is not > ½, so everything classifies as 0 and the error is
        // the fraction of ones.
        let x = Mat::new(4, 1, vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        let z = Mat::zeros(4, 0);
        let data =
            Dataset::from_flat(1, 1, x, z, vec![1.0, 0.0, 1.0, 1.0], LossModel::Logistic).unwrap();
        let coeff = Coefficients::zeros(1, 1, 0);
        let err = prediction_error(&LossModel::<f64>::Logistic, &coeff, &data).unwrap();
        assert!((err - 0.75).abs() < 1e-15);
    }

    #[test]
    fn prediction_error_kind_mismatch() {
        let x = Mat::new(1, 1, vec![1.0]).unwrap();
        let data =
            Dataset::from_flat(1, 1, x, Mat::zeros(1, 0), vec![1.0], LossModel::Ordinary).unwrap();
        let coeff = Coefficients::zeros(1, 1, 0);
        assert!(prediction_error(&LossModel::Logistic, &coeff, &data).is_err());
    }

    #[test]
    fn folds_partition_with_balanced_sizes() {
        for (n, k) in [(10, 5), (11, 3), (7, 7), (23, 4)] {
            let folds = make_folds(n, Folds::K(k), 99);
            assert_eq!(folds.len(), k);
            let mut seen = vec![false; n];
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for fold in &folds {
                for &i in fold {
                    assert!(!seen[i], "index {i} appears twice");
                    seen[i] = true;
                }
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn loo_folds_are_singletons_in_order() {
        let folds = make_folds(4, Folds::LeaveOneOut, 3);
        assert_eq!(folds, vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn mean_std_basics() {
        let (m, s) = mean_std(&[2.0f64]);
        assert_eq!((m, s), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0f64, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn default_grid_spans_and_is_sorted() {
        let g: Vec<f64> = default_lambda_grid(500);
        assert_eq!(g.len(), 20);
        assert!((g[0] - 500.0 * 1e-4).abs() < 1e-9);
        assert!((g[19] - 500.0 * 1e2).abs() < 1e-6);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
