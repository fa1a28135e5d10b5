//! Executable spot checks of the theory at desk scale: spectral constants of
//! the design, the manifold curvature bound, the descent lower bound on
//! sampled points, and the error-rate scaling experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::datagen::{derived_seed, sample_dataset, NoiseSpec};
use crate::error::Error;
use crate::linalg::{
    param_distance, project_rank, sym_eigenvalues, tangent_frame, tangent_project, Coefficients,
    Mat, TangentFrame,
};
use crate::model::{Dataset, LossModel, Objective, HESSIAN_DIM_CAP};
use crate::scalar::Scalar;
use crate::solver::{fit, SolverConfig};
use crate::Result;

/// Empirical spectral constants of a design around a reference point.
///
/// `c1_hat` estimates `(1/n)‖Σ vec(X_i,z_i) vec(X_i,z_i)ᵀ‖`; `c2_hat` and
/// `c3_hat` are the extreme eigenvalues of `H/n` over the probe points (the
/// reference itself plus points sampled uniformly on the radius-`c0` sphere
/// around it).
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport<T> {
    pub c1_hat: T,
    pub c2_hat: T,
    pub c3_hat: T,
    pub c0: T,
    pub n_probe: usize,
    /// Design Gram norm is finite and positive.
    pub a1_pass: bool,
    /// Curvature Gram is positive definite over the probed neighborhood.
    pub a2_pass: bool,
    /// Curvature Gram norm is bounded over the probed neighborhood.
    pub a4_pass: bool,
}

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITERS: usize = 50_000;

/// Largest eigenvalue of `(1/n) Σ vec_i vec_iᵀ` by power iteration, applied
/// matrix-free against the dataset rows.
fn design_gram_norm<T: Scalar>(data: &Dataset<T>, rng: &mut ChaCha8Rng) -> Result<T> {
    let mq = data.m() * data.q();
    let d = mq + data.p();
    let inv_n = T::one() / T::from_f64_lossy(data.n() as f64);
    let mut v: Vec<T> = (0..d)
        .map(|_| T::from_f64_lossy(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    normalize(&mut v);
    let tol = T::from_f64_lossy(POWER_TOL);
    let mut lambda = T::zero();
    for _ in 0..POWER_MAX_ITERS {
        // u = (1/n) Σ vec_i (vec_iᵀ v)
        let mut s = data.x_flat().matvec(&v[..mq]);
        let sz = data.z().matvec(&v[mq..]);
        for (a, b) in s.iter_mut().zip(sz) {
            *a += b;
        }
        let mut u = data.x_flat().matvec_transpose(&s);
        u.extend(data.z().matvec_transpose(&s));
        for x in u.iter_mut() {
            *x *= inv_n;
        }
        let norm = u.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm == T::zero() {
            return Ok(T::zero());
        }
        let new_lambda = norm; // Rayleigh quotient of a PSD operator
        let done = (new_lambda - lambda).abs() <= tol * new_lambda.max(T::one());
        lambda = new_lambda;
        v = u;
        for x in v.iter_mut() {
            *x /= norm;
        }
        if done {
            return Ok(lambda);
        }
    }
    Err(Error::Numeric(format!(
        "power iteration did not converge within {POWER_MAX_ITERS} iterations"
    )))
}

fn normalize<T: Scalar>(v: &mut [T]) {
    let n = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if n > T::zero() {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Probe the spectral assumptions around `truth`: the design Gram norm and
/// the extreme eigenvalues of `H/n` at `n_probe` points on the radius-`c0`
/// sphere (plus `truth` itself).
pub fn check_assumptions<T: Scalar>(
    data: &Dataset<T>,
    truth: &Coefficients<T>,
    c0: T,
    n_probe: usize,
    seed: u64,
) -> Result<AssumptionReport<T>> {
    let d = data.m() * data.q() + data.p();
    if d > HESSIAN_DIM_CAP {
        return Err(Error::Capacity(format!("assumption checks need mq+p <= {HESSIAN_DIM_CAP}, got {d}")));
    }
    if n_probe == 0 {
        return Err(Error::Argument("need at least one probe point".into()));
    }
    if !(c0 > T::zero()) {
        return Err(Error::Argument("probe radius must be positive".into()));
    }
    let obj = Objective::new(data, T::zero())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c1_hat = design_gram_norm(data, &mut rng)?;

    let inv_n = T::one() / T::from_f64_lossy(data.n() as f64);
    let mut c2_hat = T::infinity();
    let mut c3_hat = T::neg_infinity();
    let mq = data.m() * data.q();
    for probe in 0..=n_probe {
        let point = if probe == 0 {
            truth.clone()
        } else {
            let mut dir: Vec<T> = (0..d)
                .map(|_| T::from_f64_lossy(rng.sample::<f64, _>(StandardNormal)))
                .collect();
            normalize(&mut dir);
            let mut c = truth.c.clone();
            for (idx, x) in c.as_mut_slice().iter_mut().enumerate() {
                *x += c0 * dir[idx];
            }
            let gamma: Vec<T> = truth
                .gamma
                .iter()
                .enumerate()
                .map(|(k, &g)| g + c0 * dir[mq + k])
                .collect();
            Coefficients::new(c, gamma)
        };
        let h = obj.hessian(&point)?;
        let eig = sym_eigenvalues(&h)?;
        let lo = eig[0] * inv_n;
        let hi = eig[eig.len() - 1] * inv_n;
        c2_hat = c2_hat.min(lo);
        c3_hat = c3_hat.max(hi);
    }

    let a2_tol = T::from_f64_lossy(1e-10) * c3_hat.max(T::one());
    Ok(AssumptionReport {
        c1_hat,
        c2_hat,
        c3_hat,
        c0,
        n_probe,
        a1_pass: c1_hat.is_finite() && c1_hat > T::zero(),
        a2_pass: c2_hat > a2_tol,
        a4_pass: c3_hat.is_finite(),
    })
}

/// Monte-Carlo check of the curvature bound of the fixed-rank manifold.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport<T> {
    /// Largest observed `‖Π_⊥Δ‖ / ‖Π_T Δ‖²`.
    pub max_ratio: T,
    /// The bound `2/σ_r(C*)`.
    pub bound: T,
    pub trials: usize,
    pub pass: bool,
}

const CURVATURE_SLACK: f64 = 1e-9;
const DEGENERATE_TANGENT: f64 = 1e-12;

/// Sample a random rank-`r` point within distance `limit` of the anchor:
/// tangent perturbation of magnitude at most `limit/2`, then rank projection
/// (which at most doubles the displacement).
fn sample_manifold_point<T: Scalar>(
    frame: &TangentFrame<T>,
    c_star: &Mat<T>,
    gamma_star: &[T],
    r: usize,
    limit: T,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Coefficients<T>>> {
    let (m, q) = c_star.shape();
    let d_raw = Mat::from_fn(m, q, |_, _| T::from_f64_lossy(rng.sample::<f64, _>(StandardNormal)));
    let y_raw: Vec<T> = (0..gamma_star.len())
        .map(|_| T::from_f64_lossy(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let (t_mat, t_vec) = tangent_project(frame, &d_raw, &y_raw, false)?;
    let t_norm = pair_norm(&t_mat, &t_vec);
    if t_norm < T::from_f64_lossy(DEGENERATE_TANGENT) {
        return Ok(None);
    }
    let magnitude = T::from_f64_lossy(rng.gen::<f64>().max(1e-3)) * limit * T::from_f64_lossy(0.5);
    let scale = magnitude / t_norm;
    let mut c_pert = c_star.clone();
    c_pert.axpy(scale, &t_mat);
    let c_new = project_rank(&c_pert, r)?;
    let gamma: Vec<T> =
        gamma_star.iter().zip(&t_vec).map(|(&g, &t)| g + scale * t).collect();
    Ok(Some(Coefficients::new(c_new, gamma)))
}

fn pair_norm<T: Scalar>(mat: &Mat<T>, vec: &[T]) -> T {
    let a = mat.as_slice().iter().map(|&x| x * x).sum::<T>();
    let b = vec.iter().map(|&x| x * x).sum::<T>();
    (a + b).sqrt()
}

/// Verify `‖Π_⊥Δ‖ ≤ (2/σ_r(C*)) ‖Π_T Δ‖²` over random rank-`r` displacements
/// `Δ` of magnitude at most `σ_r(C*)/2`.
pub fn check_curvature<T: Scalar>(
    c_star: &Mat<T>,
    gamma_star: &[T],
    r: usize,
    trials: usize,
    seed: u64,
) -> Result<CurvatureReport<T>> {
    if trials == 0 {
        return Err(Error::Argument("need at least one trial".into()));
    }
    let frame = tangent_frame(c_star, r)?;
    let sigma_r = frame.sigma_r();
    let bound = (T::one() + T::one()) / sigma_r;
    let truth = Coefficients::new(c_star.clone(), gamma_star.to_vec());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut max_ratio = T::zero();
    let mut pass = true;
    let mut done = 0;
    let mut attempts = 0usize;
    while done < trials {
        attempts += 1;
        if attempts > trials * 10 {
            return Err(Error::Numeric("too many degenerate perturbations".into()));
        }
        let Some(point) = sample_manifold_point(&frame, c_star, gamma_star, r, sigma_r, &mut rng)?
        else {
            continue;
        };
        let delta_c = point.c.sub(&truth.c);
        let delta_g: Vec<T> =
            point.gamma.iter().zip(&truth.gamma).map(|(&a, &b)| a - b).collect();
        let (t_mat, t_vec) = tangent_project(&frame, &delta_c, &delta_g, false)?;
        let (o_mat, _) = tangent_project(&frame, &delta_c, &delta_g, true)?;
        let t_norm = pair_norm(&t_mat, &t_vec);
        if t_norm < T::from_f64_lossy(DEGENERATE_TANGENT) {
            continue;
        }
        let o_norm = o_mat.frob_norm();
        let ratio = o_norm / (t_norm * t_norm);
        max_ratio = max_ratio.max(ratio);
        if o_norm > bound * t_norm * t_norm + T::from_f64_lossy(CURVATURE_SLACK) {
            pass = false;
        }
        done += 1;
    }
    Ok(CurvatureReport { max_ratio, bound, trials, pass })
}

/// Monte-Carlo check of the descent lower bound around the truth.
#[derive(Debug, Clone, Serialize)]
pub struct DescentReport<T> {
    /// Minimum of `f(x) − f(x*) − (½b²C_H1 − b‖Π_T∇f‖ − C_T b²‖Π_⊥∇f‖)`
    /// over the sampled points.
    pub worst_slack: T,
    /// Pass tolerance `1e-6 · |f(x*)|` the slack is allowed to dip below zero by.
    pub tolerance: T,
    /// Empirical curvature constant `C_H1 = n · c2_hat`.
    pub c_h1: T,
    pub c0: T,
    pub trials: usize,
    pub pass: bool,
}

const DESCENT_REL_TOL: f64 = 1e-6;
const DESCENT_PROBES: usize = 20;

/// Check `f(x) − f(x*) ≥ ½b²C_H1 − b‖Π_T∇f(x*)‖ − C_T b²‖Π_⊥∇f(x*)‖` on
/// random rank-`r` points with `b = dist(x, x*) ≤ c0`, for the unpenalized
/// objective. `C_H1` comes from the empirical minimum eigenvalue reported by
/// [`check_assumptions`], so the inequality is self-contained and falsifiable.
pub fn check_descent_lemma<T: Scalar>(
    data: &Dataset<T>,
    truth: &Coefficients<T>,
    c0: T,
    trials: usize,
    seed: u64,
) -> Result<DescentReport<T>> {
    if trials == 0 {
        return Err(Error::Argument("need at least one trial".into()));
    }
    let rank = numerical_rank(&truth.c)?;
    let frame = tangent_frame(&truth.c, rank)?;
    let sigma_r = frame.sigma_r();
    // the curvature bound only holds within σ_r/2 of the anchor
    let c0 = c0.min(sigma_r / (T::one() + T::one()));
    let c_t = (T::one() + T::one()) / sigma_r;

    let report = check_assumptions(data, truth, c0, DESCENT_PROBES, derived_seed(seed, 1))?;
    let c_h1 = report.c2_hat * T::from_f64_lossy(data.n() as f64);

    let obj = Objective::new(data, T::zero())?;
    let f_star = obj.value(truth)?;
    let (gc, gg) = obj.gradient(truth)?;
    let (tg_mat, tg_vec) = tangent_project(&frame, &gc, &gg, false)?;
    let (og_mat, _) = tangent_project(&frame, &gc, &gg, true)?;
    let grad_t = pair_norm(&tg_mat, &tg_vec);
    let grad_o = og_mat.frob_norm();

    let tolerance = T::from_f64_lossy(DESCENT_REL_TOL) * f_star.abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::infinity();
    let mut done = 0;
    let mut attempts = 0usize;
    while done < trials {
        attempts += 1;
        if attempts > trials * 10 {
            return Err(Error::Numeric("too many degenerate perturbations".into()));
        }
        let Some(point) =
            sample_manifold_point(&frame, &truth.c, &truth.gamma, rank, c0 + c0, &mut rng)?
        else {
            continue;
        };
        let b = param_distance(&point, truth)?;
        if b > c0 || b < T::from_f64_lossy(DEGENERATE_TANGENT) {
            continue;
        }
        let f_x = obj.value(&point)?;
        let rhs = T::from_f64_lossy(0.5) * b * b * c_h1 - b * grad_t - c_t * b * b * grad_o;
        let slack = (f_x - f_star) - rhs;
        worst = worst.min(slack);
        done += 1;
    }
    Ok(DescentReport {
        worst_slack: worst,
        tolerance,
        c_h1,
        c0,
        trials,
        pass: worst >= -tolerance,
    })
}

fn numerical_rank<T: Scalar>(c: &Mat<T>) -> Result<usize> {
    let dec = crate::linalg::svd(c)?;
    let s1 = dec.sigma[0];
    if s1 == T::zero() {
        return Err(Error::RankDeficient("zero matrix has no tangent frame".into()));
    }
    let tol = s1 * T::from_f64_lossy(crate::linalg::RANK_TOL);
    Ok(dec.sigma.iter().take_while(|&&s| s > tol).count())
}

/// Mean errors below this are treated as numerically zero (noiseless runs
/// bottom out at the solver's precision floor, far above machine epsilon).
pub const DEGENERATE_ERROR: f64 = 1e-6;

/// Error-vs-sample-size scaling experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit<T> {
    pub n_list: Vec<usize>,
    /// Mean parameter distance to the truth at each sample size.
    pub mean_errors: Vec<T>,
    /// Least-squares slope of log mean error against log n; absent when the
    /// fit is degenerate.
    pub slope: Option<T>,
    pub intercept: Option<T>,
    /// Set when some mean error is (numerically) zero, e.g. noiseless runs.
    pub degenerate: bool,
}

/// Configuration of the rate experiment: sample sizes, replications per size,
/// the generating noise and loss, the solver settings, and the base seed.
#[derive(Debug, Clone)]
pub struct RateConfig<T> {
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub noise: NoiseSpec<T>,
    pub model: LossModel<T>,
    pub solver: SolverConfig<T>,
    pub seed: u64,
}

/// For each sample size, generate `reps` datasets from `(C*, γ*)`, fit, and
/// record the mean parameter distance to the truth; then fit a least-squares
/// line to (log n, log mean error).
pub fn rate_experiment<T: Scalar>(
    c_star: &Mat<T>,
    gamma_star: &[T],
    cfg: &RateConfig<T>,
) -> Result<RateFit<T>> {
    if cfg.n_list.len() < 3 {
        return Err(Error::Argument("need at least three sample sizes".into()));
    }
    if cfg.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("sample sizes must be strictly increasing".into()));
    }
    if cfg.reps < 3 {
        return Err(Error::Argument("need at least three replications".into()));
    }
    let truth = Coefficients::new(c_star.clone(), gamma_star.to_vec());

    let mut mean_errors = Vec::with_capacity(cfg.n_list.len());
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let errs: Vec<Result<T>> = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let rep_seed =
                    derived_seed(cfg.seed, (ni * cfg.reps + rep) as u64);
                let data = sample_dataset(
                    c_star,
                    gamma_star,
                    n,
                    Some(cfg.noise),
                    cfg.model,
                    rep_seed,
                )?;
                let res = fit(&data, &cfg.solver, None)?;
                param_distance(&res.coefficients, &truth)
            })
            .collect();
        let mut total = T::zero();
        for e in errs {
            total += e?;
        }
        mean_errors.push(total / T::from_f64_lossy(cfg.reps as f64));
    }

    let degenerate = mean_errors.iter().any(|&e| e < T::from_f64_lossy(DEGENERATE_ERROR));
    let (slope, intercept) = if degenerate {
        (None, None)
    } else {
        let xs: Vec<T> = cfg.n_list.iter().map(|&n| T::from_f64_lossy(n as f64).ln()).collect();
        let ys: Vec<T> = mean_errors.iter().map(|&e| e.ln()).collect();
        let (s, i) = least_squares_line(&xs, &ys);
        (Some(s), Some(i))
    };
    Ok(RateFit { n_list: cfg.n_list.clone(), mean_errors, slope, intercept, degenerate })
}

fn least_squares_line<T: Scalar>(xs: &[T], ys: &[T]) -> (T, T) {
    let n = T::from_f64_lossy(xs.len() as f64);
    let xbar = xs.iter().copied().sum::<T>() / n;
    let ybar = ys.iter().copied().sum::<T>() / n;
    let mut num = T::zero();
    let mut den = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - xbar) * (y - ybar);
        den += (x - xbar) * (x - xbar);
    }
    let slope = num / den;
    (slope, ybar - slope * xbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frob_inner;

    fn basis_dataset() -> Dataset<f64> {
        // single sample, vec(X, z) = e_1, ordinary loss
        let x = Mat::new(1, 2, vec![1.0, 0.0]).unwrap();
        let z = Mat::zeros(1, 1);
        Dataset::from_flat(1, 2, x, z, vec![0.0], LossModel::Ordinary).unwrap()
    }

    #[test]
    fn single_basis_sample_constants() {
        let data = basis_dataset();
        let truth = Coefficients::zeros(1, 2, 1);
        let rep = check_assumptions(&data, &truth, 0.5, 4, 9).unwrap();
        // Gram = e1 e1^T: norm 1; H = 2 e1 e1^T has min eigenvalue 0
        assert!((rep.c1_hat - 1.0).abs() < 1e-6);
        assert!(rep.c2_hat.abs() < 1e-10);
        assert!((rep.c3_hat - 2.0).abs() < 1e-10);
        assert!(rep.c2_hat <= rep.c3_hat);
        assert!(!rep.a2_pass);
    }

    #[test]
    fn robust_saturated_curvature_vanishes_at_truth() {
        // all residuals beyond alpha at the truth -> H(truth) = 0
        let x = Mat::new(2, 1, vec![1.0, 1.0]).unwrap();
        let z = Mat::zeros(2, 0);
        let data =
            Dataset::from_flat(1, 1, x, z, vec![10.0, -10.0], LossModel::Robust { alpha: 0.5 })
                .unwrap();
        let truth = Coefficients::zeros(1, 1, 0);
        let obj = Objective::new(&data, 0.0).unwrap();
        let h = obj.hessian(&truth).unwrap();
        assert!(h.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_rank_design_has_positive_c2() {
        // n = 20 (mq + p) i.i.d. normal rows: Gram almost surely positive definite
        let c: Mat<f64> = Mat::diag(&[1.0, 0.5]);
        let truth = Coefficients::new(c.clone(), vec![0.3]);
        let data = sample_dataset(&c, &[0.3], 100, None, LossModel::Ordinary, 5).unwrap();
        let rep = check_assumptions(&data, &truth, 0.25, 6, 17).unwrap();
        assert!(rep.a1_pass && rep.a2_pass && rep.a4_pass);
        assert!(rep.c2_hat > 0.0);
        assert!(rep.c2_hat <= rep.c3_hat);
    }

    #[test]
    fn tangent_family_has_zero_orthogonal_part() {
        // C = C* + U* A V*^T stays rank-r for small A and Δ is pure tangent
        let c = Mat::<f64>::diag(&[3.0, 2.0, 1.0]);
        let frame = tangent_frame(&c, 3).unwrap();
        let a = Mat::from_fn(3, 3, |i, j| 0.01 * ((i + 2 * j) as f64).sin());
        let delta = frame.u().matmul(&a).matmul(&frame.v().transpose());
        let (o, _) = tangent_project(&frame, &delta, &[], true).unwrap();
        assert!(o.frob_norm() < 1e-14);
        assert!(frob_inner(&o, &delta).unwrap().abs() < 1e-14);
    }

    #[test]
    fn degenerate_rate_fit_is_flagged() {
        let c: Mat<f64> = Mat::diag(&[1.0, 1.0]);
        let cfg = RateConfig {
            n_list: vec![20, 30, 40],
            reps: 3,
            noise: NoiseSpec::Gaussian { sigma: 1e-12 },
            model: LossModel::Ordinary,
            solver: SolverConfig { eps: 1e-22, ..SolverConfig::new(2) },
            seed: 123,
        };
        let fit = rate_experiment(&c, &[1.0], &cfg).unwrap();
        assert!(fit.degenerate, "mean errors: {:?}", fit.mean_errors);
        assert!(fit.slope.is_none());
    }

    #[test]
    fn rate_experiment_validates_inputs() {
        let c: Mat<f64> = Mat::diag(&[1.0]);
        let mut cfg = RateConfig {
            n_list: vec![10, 20],
            reps: 3,
            noise: NoiseSpec::standard(),
            model: LossModel::Ordinary,
            solver: SolverConfig::new(1),
            seed: 0,
        };
        assert!(rate_experiment(&c, &[], &cfg).is_err());
        cfg.n_list = vec![10, 20, 20];
        assert!(rate_experiment(&c, &[], &cfg).is_err());
    }
}
