//! Alternating projected gradient descent with backtracking line search.
//!
//! One iteration performs, in order:
//!
//! 1. a C-step `C ← P_r(C − α₁ ∂F/∂C)` with `α₁` from a backtracking line
//!    search (start at `alpha_init`, shrink by `beta` until the objective is
//!    not larger than the current one);
//! 2. a γ-step `γ ← γ − α₂ ∂F/∂γ` with `α₂` from the same search, the
//!    gradient being taken at the freshly updated `C`;
//! 3. a re-projection `C ← P_r(C)`, numerically a no-op since the γ-step does
//!    not touch `C`;
//!
//! and stops when `|F_k − F_{k−1}| ≤ eps` or the iteration cap is reached.
//! Accepted objective values never increase, which is the property the
//! convergence analysis rests on; when neither step can find any decrease
//! (floating point makes exact nonincrease unachievable near stationary
//! points), the run terminates gracefully with [`Termination::LineSearchStall`]
//! and returns the best (= current) iterate.

use serde::Serialize;

use crate::error::Error;
use crate::linalg::{reconstruct_truncated, svd_with_guess, Coefficients, Mat, Svd};
use crate::model::{Dataset, Objective};
use crate::scalar::Scalar;
use crate::Result;

/// Solver knobs. `alpha_init` is reset at every iteration rather than warm
/// started across iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig<T> {
    /// Hard rank constraint on `C`.
    pub rank: usize,
    /// ℓ1 penalty weight on the entries of `C`.
    pub lambda: T,
    /// Line-search shrinkage factor in (0, 1).
    pub beta: T,
    /// Stopping tolerance on successive objective values.
    pub eps: T,
    /// Iteration cap.
    pub max_iters: usize,
    /// Initial step size for each line search.
    pub alpha_init: T,
    /// Backtracking cap per line search before declaring a stall.
    pub max_backtracks: usize,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            lambda: T::zero(),
            beta: T::from_f64_lossy(0.5),
            eps: T::from_f64_lossy(1e-6),
            max_iters: 500,
            alpha_init: T::one(),
            max_backtracks: 60,
        }
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self, m: usize, q: usize) -> Result<()> {
        if self.rank < 1 || self.rank > m.min(q) {
            return Err(Error::Argument(format!(
                "rank {} out of range 1..={} for {m}x{q} coefficients",
                self.rank,
                m.min(q)
            )));
        }
        if !(self.beta > T::zero() && self.beta < T::one()) {
            return Err(Error::Argument(format!("beta must lie in (0,1), got {}", self.beta)));
        }
        if !(self.eps > T::zero()) {
            return Err(Error::Argument(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.alpha_init > T::zero()) {
            return Err(Error::Argument(format!(
                "alpha_init must be positive, got {}",
                self.alpha_init
            )));
        }
        if self.max_iters == 0 || self.max_backtracks == 0 {
            return Err(Error::Argument("iteration and backtrack caps must be positive".into()));
        }
        Ok(())
    }
}

/// Why the solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// Successive objective values within `eps`.
    Tolerance,
    /// Iteration cap reached.
    IterationCap,
    /// Neither line search found a nonincreasing step.
    LineSearchStall,
}

/// Fit output: final iterate, objective trace (entry 0 is the initial
/// objective), completed iteration count, and the stop reason.
#[derive(Debug, Clone)]
pub struct FitResult<T> {
    pub coefficients: Coefficients<T>,
    pub objective_trace: Vec<T>,
    pub iterations: usize,
    pub termination: Termination,
}

/// Which block a line search moves.
#[derive(Debug, Clone, Copy)]
pub enum StepDirection<'g, T> {
    /// Move `C` along `−grad`, then project to rank `r`.
    CStep(&'g Mat<T>),
    /// Move `γ` along `−grad` with `C` fixed.
    GammaStep(&'g [T]),
}

/// Accepted line-search step.
#[derive(Debug, Clone)]
pub struct LineSearchOutcome<T> {
    /// Accepted step size; 0 when stalled.
    pub step: T,
    /// Trial point (equals the input point when stalled).
    pub candidate: Coefficients<T>,
    /// Objective at the candidate.
    pub objective: T,
    /// True when `max_backtracks` trials all failed to avoid an increase.
    pub stalled: bool,
}

/// Backtracking line search for one block, per the nonincrease acceptance
/// rule: starting from `alpha_init`, shrink by `beta` until the trial
/// objective is `<=` the current one.
pub fn line_search<T: Scalar>(
    obj: &Objective<'_, T>,
    current: &Coefficients<T>,
    direction: StepDirection<'_, T>,
    config: &SolverConfig<T>,
) -> Result<LineSearchOutcome<T>> {
    let data = obj.data();
    let f_cur = obj.value(current)?;
    match direction {
        StepDirection::CStep(grad) => {
            let zg = data.z().matvec(&current.gamma);
            let mut guess = None;
            let out = c_step(obj, current, grad, config, &zg, f_cur, &mut guess)?;
            Ok(LineSearchOutcome {
                step: out.step,
                candidate: Coefficients::new(out.c, current.gamma.clone()),
                objective: out.objective,
                stalled: out.stalled,
            })
        }
        StepDirection::GammaStep(grad) => {
            let xc = data.x_flat().matvec(current.c.as_slice());
            let out = gamma_step(obj, current, grad, config, &xc, f_cur)?;
            Ok(LineSearchOutcome {
                step: out.step,
                candidate: Coefficients::new(current.c.clone(), out.gamma),
                objective: out.objective,
                stalled: out.stalled,
            })
        }
    }
}

struct CStepOutcome<T> {
    step: T,
    c: Mat<T>,
    /// `X · vec(C)` at the accepted point, reused by the γ-step.
    xc: Vec<T>,
    objective: T,
    stalled: bool,
}

fn c_step<T: Scalar>(
    obj: &Objective<'_, T>,
    current: &Coefficients<T>,
    grad: &Mat<T>,
    config: &SolverConfig<T>,
    zg: &[T],
    f_cur: T,
    svd_guess: &mut Option<Svd<T>>,
) -> Result<CStepOutcome<T>> {
    let data = obj.data();
    let mut alpha = config.alpha_init;
    for _ in 0..config.max_backtracks {
        let mut trial = current.c.clone();
        trial.axpy(-alpha, grad);
        match svd_with_guess(&trial, svd_guess.as_ref()) {
            Ok(dec) => {
                let c_trial = reconstruct_truncated(&dec.u, &dec.sigma, &dec.v, config.rank);
                *svd_guess = Some(dec);
                let xc = data.x_flat().matvec(c_trial.as_slice());
                let f: Vec<T> = xc.iter().zip(zg).map(|(&a, &b)| a + b).collect();
                if let Ok(value) = obj.value_at_predictions(&f, &c_trial) {
                    if value <= f_cur {
                        return Ok(CStepOutcome {
                            step: alpha,
                            c: c_trial,
                            xc,
                            objective: value,
                            stalled: false,
                        });
                    }
                }
            }
            // Non-finite or non-convergent trials are rejections, not errors;
            // a smaller step repairs them.
            Err(_) => {}
        }
        alpha *= config.beta;
    }
    Ok(CStepOutcome {
        step: T::zero(),
        c: current.c.clone(),
        xc: data.x_flat().matvec(current.c.as_slice()),
        objective: f_cur,
        stalled: true,
    })
}

struct GammaStepOutcome<T> {
    step: T,
    gamma: Vec<T>,
    objective: T,
    stalled: bool,
}

fn gamma_step<T: Scalar>(
    obj: &Objective<'_, T>,
    current: &Coefficients<T>,
    grad: &[T],
    config: &SolverConfig<T>,
    xc: &[T],
    f_cur: T,
) -> Result<GammaStepOutcome<T>> {
    let data = obj.data();
    let mut alpha = config.alpha_init;
    for _ in 0..config.max_backtracks {
        let gamma_trial: Vec<T> =
            current.gamma.iter().zip(grad).map(|(&g, &d)| g - alpha * d).collect();
        let zg = data.z().matvec(&gamma_trial);
        let f: Vec<T> = xc.iter().zip(&zg).map(|(&a, &b)| a + b).collect();
        if let Ok(value) = obj.value_at_predictions(&f, &current.c) {
            if value <= f_cur {
                return Ok(GammaStepOutcome { step: alpha, gamma: gamma_trial, objective: value, stalled: false });
            }
        }
        alpha *= config.beta;
    }
    Ok(GammaStepOutcome {
        step: T::zero(),
        gamma: current.gamma.clone(),
        objective: f_cur,
        stalled: true,
    })
}

/// Fit `(C, γ)` by alternating projected gradient descent.
///
/// `init` defaults to the all-zero pair. The returned trace starts with the
/// objective at the initial point and has one entry per completed iteration;
/// accepted values never increase.
pub fn fit<T: Scalar>(
    data: &Dataset<T>,
    config: &SolverConfig<T>,
    init: Option<Coefficients<T>>,
) -> Result<FitResult<T>> {
    if data.n() == 0 {
        return Err(Error::Argument("cannot fit an empty dataset".into()));
    }
    config.validate(data.m(), data.q())?;
    let obj = Objective::new(data, config.lambda)?;

    let mut coeff = match init {
        Some(c) => {
            if c.c.shape() != (data.m(), data.q()) || c.gamma.len() != data.p() {
                return Err(Error::Dimension("initial coefficients do not match dataset".into()));
            }
            c
        }
        None => Coefficients::zeros(data.m(), data.q(), data.p()),
    };

    let mut xc = data.x_flat().matvec(coeff.c.as_slice());
    let mut zg = data.z().matvec(&coeff.gamma);
    let f0: Vec<T> = xc.iter().zip(&zg).map(|(&a, &b)| a + b).collect();
    let mut f_cur = obj.value_at_predictions(&f0, &coeff.c)?;

    let mut trace = vec![f_cur];
    let mut svd_guess: Option<Svd<T>> = None;
    let mut termination = Termination::IterationCap;
    let mut iterations = config.max_iters;

    for k in 1..=config.max_iters {
        // C-step, gradient at (C^(k), γ^(k))
        let f: Vec<T> = xc.iter().zip(&zg).map(|(&a, &b)| a + b).collect();
        let w = obj.loss_derivs(&f);
        let gc = obj.gradient_c_from(&w, &coeff.c);
        if gc.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("C gradient is not finite".into()));
        }
        let cres = c_step(&obj, &coeff, &gc, config, &zg, f_cur, &mut svd_guess)?;

        // γ-step, gradient at (C^(k+1), γ^(k))
        let f_after_c: Vec<T> = cres.xc.iter().zip(&zg).map(|(&a, &b)| a + b).collect();
        let w = obj.loss_derivs(&f_after_c);
        let gg = obj.gradient_gamma_from(&w);
        if gg.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("gamma gradient is not finite".into()));
        }
        let with_c = Coefficients::new(cres.c, coeff.gamma);
        let gres = gamma_step(&obj, &with_c, &gg, config, &cres.xc, cres.objective)?;

        // Re-projection of C (a numerical no-op: the γ-step left C at its
        // already-projected value). The accepted objective is carried as the
        // trace entry so the recorded chain is nonincreasing by construction.
        let stalled = cres.stalled && gres.stalled;
        let c_next = if stalled {
            with_c.c
        } else {
            let dec = svd_with_guess(&with_c.c, svd_guess.as_ref())?;
            let c = reconstruct_truncated(&dec.u, &dec.sigma, &dec.v, config.rank);
            svd_guess = Some(dec);
            c
        };
        coeff = Coefficients::new(c_next, gres.gamma);
        xc = data.x_flat().matvec(coeff.c.as_slice());
        zg = data.z().matvec(&coeff.gamma);

        let f_new = gres.objective;
        trace.push(f_new);
        if stalled {
            termination = Termination::LineSearchStall;
            iterations = k;
            break;
        }
        if (f_new - f_cur).abs() <= config.eps {
            termination = Termination::Tolerance;
            iterations = k;
            break;
        }
        f_cur = f_new;
    }

    Ok(FitResult { coefficients: coeff, objective_trace: trace, iterations, termination })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LossModel;

    fn tiny_dataset() -> Dataset<f64> {
        // 1x1 "matrices": y = 2*x + noiseless, p = 0
        let x = Mat::new(4, 1, vec![1.0, -1.0, 2.0, 0.5]).unwrap();
        let z = Mat::zeros(4, 0);
        let y = vec![2.0, -2.0, 4.0, 1.0];
        Dataset::from_flat(1, 1, x, z, y, LossModel::Ordinary).unwrap()
    }

    #[test]
    fn zero_responses_terminate_in_one_iteration() {
        let x = Mat::new(3, 2, vec![1.0, 0.5, -1.0, 2.0, 0.0, 1.0]).unwrap();
        let z = Mat::new(3, 1, vec![1.0, -1.0, 0.5]).unwrap();
        let data = Dataset::from_flat(1, 2, x, z, vec![0.0; 3], LossModel::Ordinary).unwrap();
        let config = SolverConfig::new(1);
        let fit = fit(&data, &config, None).unwrap();
        assert_eq!(fit.iterations, 1);
        assert_eq!(fit.termination, Termination::Tolerance);
        assert!(fit.coefficients.c.as_slice().iter().all(|&v| v == 0.0));
        assert!(fit.coefficients.gamma.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_dimensional_quadratic_recovers() {
        let data = tiny_dataset();
        let config = SolverConfig::new(1);
        let result = fit(&data, &config, None).unwrap();
        assert!((result.coefficients.c.get(0, 0) - 2.0).abs() < 1e-3);
        assert!(result.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn zero_gradient_line_search_accepts_initial_step() {
        let data = tiny_dataset();
        let obj = Objective::new(&data, 0.0).unwrap();
        let config = SolverConfig::new(1);
        let current = Coefficients::zeros(1, 1, 0);
        let zero_grad = Mat::zeros(1, 1);
        let out = line_search(&obj, &current, StepDirection::CStep(&zero_grad), &config).unwrap();
        assert!(!out.stalled);
        assert_eq!(out.step, config.alpha_init);
        assert_eq!(out.candidate.c.get(0, 0), 0.0);
    }

    #[test]
    fn line_search_descends_on_quadratic() {
        let data = tiny_dataset();
        let obj = Objective::new(&data, 0.0).unwrap();
        let config = SolverConfig::new(1);
        let current = Coefficients::zeros(1, 1, 0);
        let (gc, _) = obj.gradient(&current).unwrap();
        let out = line_search(&obj, &current, StepDirection::CStep(&gc), &config).unwrap();
        assert!(!out.stalled);
        assert!(out.objective < obj.value(&current).unwrap());
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let data = Dataset::empty(2, 2, 1, LossModel::<f64>::Ordinary);
        assert!(matches!(
            fit(&data, &SolverConfig::new(1), None),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn bad_config_is_rejected() {
        let data = tiny_dataset();
        let mut config = SolverConfig::new(5); // rank > min(m, q)
        assert!(fit(&data, &config, None).is_err());
        config.rank = 1;
        config.beta = 1.0;
        assert!(fit(&data, &config, None).is_err());
    }

    #[test]
    fn determinism_bit_identical_traces() {
        let data = tiny_dataset();
        let config = SolverConfig::new(1);
        let a = fit(&data, &config, None).unwrap();
        let b = fit(&data, &config, None).unwrap();
        assert_eq!(a.objective_trace, b.objective_trace);
        assert_eq!(a.coefficients.c.as_slice(), b.coefficients.c.as_slice());
    }
}
