use std::time::Instant;
use matreg::datagen::{make_lowrank_sparse, make_shape, sample_dataset, NoiseSpec, ShapeKind, SyntheticSpec};
use matreg::linalg::{param_distance, Coefficients, Mat};
use matreg::solver::{fit, SolverConfig};
use matreg::model::LossModel;
use matreg::eval::{coefficient_rmse, prediction_error};

fn main() {
    // penalized fit on square 64x64
    let c_star: Mat<f64> = make_shape(ShapeKind::Square, 64);
    let gamma_star = vec![1.0; 5];
    let truth = Coefficients::new(c_star.clone(), gamma_star.clone());
    let data = sample_dataset(&c_star, &gamma_star, 500, Some(NoiseSpec::standard()), LossModel::Ordinary, 7).unwrap();
    for lambda in [10.0, 50.0, 200.0] {
        let config = SolverConfig { eps: 1e-4, lambda, ..SolverConfig::new(1) };
        let t0 = Instant::now();
        let res = fit(&data, &config, None).unwrap();
        let (rc, rg) = coefficient_rmse(&res.coefficients, &truth).unwrap();
        println!("sq lam={lambda}: {:.2}s iters={} term={:?} rmse_C={rc:.5} rmse_g={rg:.5}",
            t0.elapsed().as_secs_f64(), res.iterations, res.termination);
    }

    // logistic: synthetic r=1 s=0.01 m=q=64, n=500
    let spec = SyntheticSpec::<f64>::new(64, 64, 1, 0.01);
    let c_log = make_lowrank_sparse(&spec, 3).unwrap();
    let train = sample_dataset(&c_log, &spec.gamma_star, 500, None, LossModel::Logistic, 11).unwrap();
    let test = sample_dataset(&c_log, &spec.gamma_star, 500, None, LossModel::Logistic, 1011).unwrap();
    for lambda in [0.0, 5.0, 20.0] {
        let config = SolverConfig { eps: 1e-4, lambda, ..SolverConfig::new(1) };
        let t0 = Instant::now();
        let res = fit(&train, &config, None).unwrap();
        let mis = prediction_error(&LossModel::Logistic, &res.coefficients, &test).unwrap();
        println!("logit lam={lambda}: {:.2}s iters={} term={:?} misclass={mis:.4}",
            t0.elapsed().as_secs_f64(), res.iterations, res.termination);
    }

    // robust vs ordinary under contamination: square 30x30, n=1000, p=0.1
    let c30: Mat<f64> = make_shape(ShapeKind::Square, 30);
    let gs = vec![1.0; 5];
    let t30 = Coefficients::new(c30.clone(), gs.clone());
    let data = sample_dataset(&c30, &gs, 1000, Some(NoiseSpec::contaminated(0.1)), LossModel::Robust { alpha: 1.345 }, 5).unwrap();
    let t0 = Instant::now();
    let rob = fit(&data, &SolverConfig { eps: 1e-4, ..SolverConfig::new(1) }, None).unwrap();
    let (rc_rob, _) = coefficient_rmse(&rob.coefficients, &t30).unwrap();
    let ord_data = data.with_model(LossModel::Ordinary).unwrap();
    let ord = fit(&ord_data, &SolverConfig { eps: 1e-4, ..SolverConfig::new(1) }, None).unwrap();
    let (rc_ord, _) = coefficient_rmse(&ord.coefficients, &t30).unwrap();
    println!("contam: {:.2}s rob_iters={} rmse_rob={rc_rob:.4} ord_iters={} rmse_ord={rc_ord:.4} ratio={:.3}",
        t0.elapsed().as_secs_f64(), rob.iterations, ord.iterations, rc_rob / rc_ord);

    // cauchy noise
    let data = sample_dataset(&c30, &gs, 1000, Some(NoiseSpec::Cauchy), LossModel::Robust { alpha: 1.345 }, 6).unwrap();
    let t0 = Instant::now();
    let rob = fit(&data, &SolverConfig { eps: 1e-4, ..SolverConfig::new(1) }, None).unwrap();
    let (rc_rob, _) = coefficient_rmse(&rob.coefficients, &t30).unwrap();
    let ord = fit(&data.with_model(LossModel::Ordinary).unwrap(), &SolverConfig { eps: 1e-4, ..SolverConfig::new(1) }, None).unwrap();
    let (rc_ord, _) = coefficient_rmse(&ord.coefficients, &t30).unwrap();
    println!("cauchy: {:.2}s rmse_rob={rc_rob:.4} rmse_ord={rc_ord:.4}", t0.elapsed().as_secs_f64());

    // rate point: 32x32, n=2000
    let c32: Mat<f64> = make_shape(ShapeKind::Square, 32);
    let t32 = Coefficients::new(c32.clone(), gs.clone());
    for n in [250usize, 2000] {
        let data = sample_dataset(&c32, &gs, n, Some(NoiseSpec::standard()), LossModel::Ordinary, 9).unwrap();
        let t0 = Instant::now();
        let res = fit(&data, &SolverConfig { eps: 1e-4, ..SolverConfig::new(1) }, None).unwrap();
        println!("rate n={n}: {:.2}s iters={} dist={:.4}",
            t0.elapsed().as_secs_f64(), res.iterations, param_distance(&res.coefficients, &t32).unwrap());
    }
}
