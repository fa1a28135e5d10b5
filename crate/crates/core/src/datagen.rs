//! Reproducible generators for simulation inputs: 2D shape signals, low-rank
//! sparse signals, and the noise/response regimes.
//!
//! All generators are pure functions of their arguments and a 64-bit seed;
//! the pseudo-random stream is ChaCha8, so a given seed reproduces a dataset
//! bit-for-bit within one build. Replications derive independent seeds as
//! `seed ^ replicate_index` (see [`derived_seed`]).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::Error;
use crate::linalg::Mat;
use crate::model::{Dataset, LossModel};
use crate::scalar::Scalar;
use crate::Result;

/// Binary 2D signal geometry on a g×g grid.
///
/// The square follows the published recipe (ones exactly where the 1-based
/// indices satisfy `⌈g/3⌉ ≤ i, j ≤ ⌊2g/3⌋`, e.g. `10 ≤ i, j ≤ 20` at g = 30);
/// the other geometries are fixed by this crate so results stay reproducible:
///
/// - `T`: full-width bar of height `⌈g/6⌉` starting at row `⌊g/8⌋`, plus a
///   centered stem of the same width running down to row `⌊7g/8⌋`;
/// - `Cross`: centered horizontal and vertical bands of width `⌈g/6⌉`;
/// - `Triangle`: filled isoceles triangle, apex at `(⌊g/8⌋, g/2)`, base on row
///   `⌊7g/8⌋` spanning columns `g/8 .. 7g/8`;
/// - `Circle`: ones where `(i − g/2)² + (j − g/2)² ≤ (g/4)²` (1-based);
/// - `Butterfly`: bowtie `|i − g/2| ≤ |j − g/2| ≤ g/4` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ShapeKind {
    Square,
    T,
    Cross,
    Triangle,
    Circle,
    Butterfly,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 6] = [
        ShapeKind::Square,
        ShapeKind::T,
        ShapeKind::Cross,
        ShapeKind::Triangle,
        ShapeKind::Circle,
        ShapeKind::Butterfly,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Square => "square",
            ShapeKind::T => "t",
            ShapeKind::Cross => "cross",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Circle => "circle",
            ShapeKind::Butterfly => "butterfly",
        }
    }
}

impl std::str::FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square" => Ok(ShapeKind::Square),
            "t" => Ok(ShapeKind::T),
            "cross" => Ok(ShapeKind::Cross),
            "triangle" => Ok(ShapeKind::Triangle),
            "circle" => Ok(ShapeKind::Circle),
            "butterfly" => Ok(ShapeKind::Butterfly),
            other => Err(Error::Argument(format!("unknown shape '{other}'"))),
        }
    }
}

/// Default signal grid size.
pub const DEFAULT_GRID: usize = 64;

/// Binary g×g signal matrix for a shape; `g` must be at least 8.
pub fn make_shape<T: Scalar>(kind: ShapeKind, g: usize) -> Mat<T> {
    assert!(g >= 8, "shape grid must be at least 8, got {g}");
    let band = g.div_ceil(6);
    let gf = g as f64;
    let on = |cond: bool| if cond { T::one() } else { T::zero() };
    match kind {
        ShapeKind::Square => {
            // 1-based: ceil(g/3) <= i, j <= floor(2g/3)
            let lo = g.div_ceil(3);
            let hi = (2 * g) / 3;
            Mat::from_fn(g, g, |i, j| {
                let (i, j) = (i + 1, j + 1);
                on(lo <= i && i <= hi && lo <= j && j <= hi)
            })
        }
        ShapeKind::T => {
            let top = g / 8;
            let bar = top..(top + band).min(g);
            let stem_rows = top..(7 * g) / 8;
            let c0 = (g - band) / 2;
            let stem_cols = c0..c0 + band;
            Mat::from_fn(g, g, |i, j| {
                on(bar.contains(&i) || (stem_rows.contains(&i) && stem_cols.contains(&j)))
            })
        }
        ShapeKind::Cross => {
            let c0 = (g - band) / 2;
            let mid = c0..c0 + band;
            Mat::from_fn(g, g, |i, j| on(mid.contains(&i) || mid.contains(&j)))
        }
        ShapeKind::Triangle => {
            let apex_row = gf / 8.0;
            let base_row = 7.0 * gf / 8.0;
            let center = gf / 2.0;
            let base_half = 3.0 * gf / 8.0;
            Mat::from_fn(g, g, |i, j| {
                let (fi, fj) = ((i + 1) as f64, (j + 1) as f64);
                if fi < apex_row || fi > base_row {
                    return T::zero();
                }
                let half = (fi - apex_row) / (base_row - apex_row) * base_half;
                on((fj - center).abs() <= half)
            })
        }
        ShapeKind::Circle => {
            let center = gf / 2.0;
            let r2 = (gf / 4.0) * (gf / 4.0);
            Mat::from_fn(g, g, |i, j| {
                let (fi, fj) = ((i + 1) as f64, (j + 1) as f64);
                let d2 = (fi - center) * (fi - center) + (fj - center) * (fj - center);
                on(d2 <= r2)
            })
        }
        ShapeKind::Butterfly => {
            let center = gf / 2.0;
            let wing = gf / 4.0;
            Mat::from_fn(g, g, |i, j| {
                let (fi, fj) = ((i + 1) as f64, (j + 1) as f64);
                let (di, dj) = ((fi - center).abs(), (fj - center).abs());
                on(di <= dj && dj <= wing)
            })
        }
    }
}

/// Noise law for the regression responses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NoiseSpec<T> {
    /// `ε ~ N(0, sigma²)`.
    Gaussian { sigma: T },
    /// With probability `p` draw `ε ~ N(0, sigma_out²)`, otherwise
    /// `ε ~ N(0, sigma²)` — a contamination mixture, not a weighted sum.
    Contaminated { p: T, sigma: T, sigma_out: T },
    /// Standard Cauchy via the inverse CDF `tan(π(u − ½))`.
    Cauchy,
}

impl<T: Scalar> NoiseSpec<T> {
    /// Unit-variance Gaussian noise, the baseline regime.
    pub fn standard() -> Self {
        NoiseSpec::Gaussian { sigma: T::one() }
    }

    /// Contamination with the default scales: inliers `N(0,1)`, outliers
    /// `N(0, 100²)`.
    pub fn contaminated(p: T) -> Self {
        NoiseSpec::Contaminated { p, sigma: T::one(), sigma_out: T::from_f64_lossy(100.0) }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::Gaussian { sigma } => {
                if !(sigma > T::zero()) {
                    return Err(Error::Argument(format!("sigma must be positive, got {sigma}")));
                }
            }
            NoiseSpec::Contaminated { p, sigma, sigma_out } => {
                if !(sigma > T::zero()) || !(sigma_out > T::zero()) {
                    return Err(Error::Argument("noise scales must be positive".into()));
                }
                if !(p >= T::zero() && p <= T::from_f64_lossy(0.5)) {
                    return Err(Error::Argument(format!(
                        "contamination probability must lie in [0, 0.5], got {p}"
                    )));
                }
            }
            NoiseSpec::Cauchy => {}
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sigma } => {
                let n: f64 = rng.sample(StandardNormal);
                sigma.to_f64().expect("scalar to f64") * n
            }
            NoiseSpec::Contaminated { p, sigma, sigma_out } => {
                let u: f64 = rng.gen();
                let n: f64 = rng.sample(StandardNormal);
                let scale = if u < p.to_f64().expect("scalar to f64") { sigma_out } else { sigma };
                scale.to_f64().expect("scalar to f64") * n
            }
            NoiseSpec::Cauchy => {
                let u: f64 = rng.gen();
                (std::f64::consts::PI * (u - 0.5)).tan()
            }
        }
    }
}

/// Low-rank sparse signal synthesis controls. `r` bounds the rank of the
/// signal and `s` its expected fraction of nonzero entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticSpec<T> {
    pub m: usize,
    pub q: usize,
    pub p_dim: usize,
    pub r: usize,
    pub s: T,
    pub gamma_star: Vec<T>,
}

impl<T: Scalar> SyntheticSpec<T> {
    /// Spec with the default vector coefficient `γ* = 1₅`.
    pub fn new(m: usize, q: usize, r: usize, s: T) -> Self {
        Self { m, q, p_dim: 5, r, s, gamma_star: vec![T::one(); 5] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 1 || self.r > self.m.min(self.q) {
            return Err(Error::Argument(format!(
                "rank {} out of range 1..={}",
                self.r,
                self.m.min(self.q)
            )));
        }
        if !(self.s > T::zero() && self.s < T::one()) {
            return Err(Error::Argument(format!("sparsity must lie in (0,1), got {}", self.s)));
        }
        if self.gamma_star.len() != self.p_dim {
            return Err(Error::Dimension("gamma_star length differs from p_dim".into()));
        }
        Ok(())
    }

    /// Per-entry Bernoulli probability `√(1 − (1 − s)^{1/r})` of the factors.
    pub fn factor_probability(&self) -> T {
        let s = self.s.to_f64().expect("scalar to f64");
        let r = self.r as f64;
        T::from_f64_lossy((1.0 - (1.0 - s).powf(1.0 / r)).sqrt())
    }
}

/// Draw `C* = C₁ C₂ᵀ` with binary factors `C₁ ∈ {0,1}^{m×r}`,
/// `C₂ ∈ {0,1}^{q×r}`, each entry 1 with probability `√(1 − (1−s)^{1/r})`.
/// The result has rank at most `r`.
pub fn make_lowrank_sparse<T: Scalar>(spec: &SyntheticSpec<T>, seed: u64) -> Result<Mat<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prob = spec.factor_probability().to_f64().expect("scalar to f64");
    let mut bernoulli = |rows: usize| {
        Mat::from_fn(rows, spec.r, |_, _| {
            if rng.gen::<f64>() < prob {
                T::one()
            } else {
                T::zero()
            }
        })
    };
    let c1 = bernoulli(spec.m);
    let c2 = bernoulli(spec.q);
    Ok(c1.matmul(&c2.transpose()))
}

/// Derived seed for replicate `index`, `seed ⊕ index`.
pub fn derived_seed(seed: u64, index: u64) -> u64 {
    seed ^ index
}

/// Sample a dataset from the signal `(C*, γ*)`.
///
/// Every entry of the matrix and vector predictors is an independent standard
/// normal. Regression responses are `y = ⟨X, C*⟩ + γ*ᵀz + ε` with `ε` drawn
/// per `noise` (`None` means unit Gaussian); classification responses are
/// `y ~ Bernoulli(σ(⟨X, C*⟩ + γ*ᵀz))` and any supplied noise spec is ignored
/// with a warning. Per-sample draw order is: the m·q entries of `X_i`
/// (row-major), the p entries of `z_i`, then the response draw(s).
pub fn sample_dataset<T: Scalar>(
    c_star: &Mat<T>,
    gamma_star: &[T],
    n: usize,
    noise: Option<NoiseSpec<T>>,
    model: LossModel<T>,
    seed: u64,
) -> Result<Dataset<T>> {
    if n == 0 {
        return Err(Error::Argument("need at least one sample".into()));
    }
    model.validate()?;
    if let Some(sp) = &noise {
        sp.validate()?;
        if model.is_logistic() {
            log::warn!("noise specification is ignored under the logistic model");
        }
    }
    let noise = noise.unwrap_or_else(NoiseSpec::standard);

    let (m, q) = c_star.shape();
    let p = gamma_star.len();
    let d = m * q;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut x_flat = Vec::with_capacity(n * d);
    let mut z_flat = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);

    for _ in 0..n {
        let x_start = x_flat.len();
        for _ in 0..d {
            let v: f64 = rng.sample(StandardNormal);
            x_flat.push(T::from_f64_lossy(v));
        }
        let z_start = z_flat.len();
        for _ in 0..p {
            let v: f64 = rng.sample(StandardNormal);
            z_flat.push(T::from_f64_lossy(v));
        }
        let xc = crate::linalg::dot(&x_flat[x_start..], c_star.as_slice());
        let zg = crate::linalg::dot(&z_flat[z_start..], gamma_star);
        let theta = xc + zg;
        let yi = if model.is_logistic() {
            let prob = logistic_cdf(theta.to_f64().expect("scalar to f64"));
            let u: f64 = rng.gen();
            if u < prob {
                T::one()
            } else {
                T::zero()
            }
        } else {
            theta + T::from_f64_lossy(noise.sample(&mut rng))
        };
        y.push(yi);
    }

    let x = Mat::new(n, d, x_flat)?;
    let z = Mat::new(n, p, z_flat)?;
    Dataset::from_flat(m, q, x, z, y, model)
}

fn logistic_cdf(theta: f64) -> f64 {
    if theta >= 0.0 {
        1.0 / (1.0 + (-theta).exp())
    } else {
        let e = theta.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;

    #[test]
    fn square_matches_published_recipe_at_g30() {
        let c: Mat<f64> = make_shape(ShapeKind::Square, 30);
        for i in 1..=30usize {
            for j in 1..=30usize {
                let want = (10..=20).contains(&i) && (10..=20).contains(&j);
                assert_eq!(c.get(i - 1, j - 1) == 1.0, want, "at ({i},{j})");
            }
        }
    }

    #[test]
    fn square_has_rank_one() {
        for g in [8, 30, 64, 65] {
            let c: Mat<f64> = make_shape(ShapeKind::Square, g);
            let dec = svd(&c).unwrap();
            assert!(dec.sigma[0] > 0.0);
            assert!(dec.sigma[1] < 1e-10 * dec.sigma[0], "g={g}");
        }
    }

    #[test]
    fn shapes_are_binary() {
        for kind in ShapeKind::ALL {
            let c: Mat<f64> = make_shape(kind, 32);
            assert!(c.as_slice().iter().all(|&v| v == 0.0 || v == 1.0), "{kind:?}");
            assert!(c.as_slice().iter().any(|&v| v == 1.0), "{kind:?} must be nonempty");
        }
    }

    #[test]
    fn t_and_cross_have_rank_at_most_two() {
        for kind in [ShapeKind::T, ShapeKind::Cross] {
            let c: Mat<f64> = make_shape(kind, 32);
            let dec = svd(&c).unwrap();
            assert!(dec.sigma[2] < 1e-10 * dec.sigma[0], "{kind:?}");
        }
    }

    #[test]
    fn factor_probability_formula() {
        // s = 0.01, r = 1: sqrt(1 - 0.99) = 0.1
        let spec = SyntheticSpec::<f64>::new(64, 64, 1, 0.01);
        assert!((spec.factor_probability() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn lowrank_sparse_rank_bound() {
        let spec = SyntheticSpec::<f64>::new(20, 15, 3, 0.2);
        let c = make_lowrank_sparse(&spec, 7).unwrap();
        let dec = svd(&c).unwrap();
        assert!(dec.sigma[3] < 1e-10 * (dec.sigma[0] + 1e-300));
    }

    #[test]
    fn same_seed_same_dataset() {
        let c: Mat<f64> = make_shape(ShapeKind::Square, 8);
        let g = vec![1.0; 3];
        let a = sample_dataset(&c, &g, 5, None, LossModel::Ordinary, 42).unwrap();
        let b = sample_dataset(&c, &g, 5, None, LossModel::Ordinary, 42).unwrap();
        assert_eq!(a.y(), b.y());
        assert_eq!(a.x_flat().as_slice(), b.x_flat().as_slice());
        let c2 = sample_dataset(&c, &g, 5, None, LossModel::Ordinary, 43).unwrap();
        assert_ne!(a.y(), c2.y());
    }

    #[test]
    fn noiseless_limit_reproduces_linear_responses() {
        let c: Mat<f64> = make_shape(ShapeKind::Square, 8);
        let g = vec![1.0, -0.5];
        let tiny = NoiseSpec::Gaussian { sigma: 1e-12 };
        let data = sample_dataset(&c, &g, 20, Some(tiny), LossModel::Ordinary, 3).unwrap();
        for i in 0..data.n() {
            let pred = crate::linalg::dot(data.x_row(i), c.as_slice())
                + crate::linalg::dot(data.z().row(i), &g);
            assert!((data.y()[i] - pred).abs() < 1e-9);
        }
    }

    #[test]
    fn logistic_responses_are_binary() {
        let c: Mat<f64> = make_shape(ShapeKind::Square, 8);
        let data = sample_dataset(&c, &[1.0], 50, None, LossModel::Logistic, 11).unwrap();
        assert!(data.y().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let c = Mat::<f64>::zeros(4, 4);
        assert!(sample_dataset(&c, &[], 0, None, LossModel::Ordinary, 0).is_err());
        let bad = NoiseSpec::Gaussian { sigma: 0.0 };
        assert!(sample_dataset(&c, &[], 3, Some(bad), LossModel::Ordinary, 0).is_err());
        let bad = NoiseSpec::Contaminated { p: 0.7, sigma: 1.0, sigma_out: 100.0 };
        assert!(sample_dataset(&c, &[], 3, Some(bad), LossModel::Ordinary, 0).is_err());
        assert!(SyntheticSpec::<f64>::new(4, 4, 5, 0.1).validate().is_err());
        assert!(SyntheticSpec::<f64>::new(4, 4, 1, 1.0).validate().is_err());
    }
}
