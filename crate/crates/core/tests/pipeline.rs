use proptest::prelude::*;
use splitsde::direct::{ab_split_step, em_step_linear, exact_linear_step, milstein_step_full, LinearKernel};
use splitsde::harness::{run_experiment, ExperimentConfig};
use splitsde::iterative::iter_vectorial_step;
use splitsde::linalg::DenseMatrix;
use splitsde::metrics::{estimate_order, strong_error, ErrorSample};
use splitsde::problems::{build_vectorial_2x2, LinearSdeProblem};
use splitsde::wiener::WienerPath;
use splitsde::IterConfig;

fn diagonal_problem() -> LinearSdeProblem {
    LinearSdeProblem::new(
        DenseMatrix::from_diag(&[-1.0, -0.5]).unwrap(),
        vec![DenseMatrix::from_diag(&[0.3, 0.1]).unwrap(), DenseMatrix::from_diag(&[0.2, -0.4]).unwrap()],
        vec![1.0, 2.0],
        1.0,
    )
    .unwrap()
}

fn run(path: &WienerPath, y0: &[f64], mut step: impl FnMut(&[f64], usize) -> Vec<f64>) -> Vec<f64> {
    let mut y = y0.to_vec();
    for k in 0..path.n_steps() {
        y = step(&y, k);
    }
    y
}

#[test]
fn exact_map_is_consistent_under_coarsening_when_operators_commute() {
    let p = diagonal_problem();
    let fine = WienerPath::generate(2, 64, 1.0 / 64.0, 5).unwrap();
    let coarse = fine.coarsen(8).unwrap();
    let kf = LinearKernel::new(&p, fine.dt()).unwrap();
    let kc = LinearKernel::new(&p, coarse.dt()).unwrap();
    let a = run(&fine, &p.y0, |y, k| kf.exact(y, &fine.context(k).unwrap()).unwrap());
    let b = run(&coarse, &p.y0, |y, k| kc.exact(y, &coarse.context(k).unwrap()).unwrap());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-13 * x.abs(), "{a:?} vs {b:?}");
    }
}

#[test]
fn euler_strong_error_shrinks_with_the_step() {
    let p = diagonal_problem();
    let mut points = Vec::new();
    for factor in [16usize, 8, 4, 2] {
        let mut samples = Vec::new();
        for i in 0..200u64 {
            let fine = WienerPath::generate(2, 256, 1.0 / 256.0, 1000 + i).unwrap();
            let coarse = fine.coarsen(factor).unwrap();
            let kc = LinearKernel::new(&p, coarse.dt()).unwrap();
            let y = run(&coarse, &p.y0, |y, k| kc.em(y, &coarse.context(k).unwrap()).unwrap());
            let r = run(&coarse, &p.y0, |y, k| kc.exact(y, &coarse.context(k).unwrap()).unwrap());
            samples.push(ErrorSample::new("em", coarse.dt(), i, &y, &r).unwrap());
        }
        points.push((factor as f64 / 256.0, strong_error(&samples).unwrap()));
    }
    let fit = estimate_order(&points).unwrap();
    assert!(fit.slope > 0.3 && fit.slope < 1.3, "{fit:?}");
    assert!(points.windows(2).all(|w| w[1].1 < w[0].1), "{points:?}");
}

#[test]
fn harness_matches_hand_loop() {
    let cfg = ExperimentConfig::from_text("problem=vec2x2:weak01\nschemes=milstein_full\ndt_list=0.1\npaths=5\nseed=4\ntiming=off").unwrap();
    let res = run_experiment(&cfg).unwrap();
    let p = build_vectorial_2x2(1.0, 0.1).unwrap();
    let mut samples = Vec::new();
    for i in 0..5u64 {
        let path = splitsde::harness::fine_path(&cfg, i).unwrap();
        let y = run(&path, &p.y0, |y, k| milstein_step_full(y, &p, &path.context(k).unwrap()).unwrap());
        let r = run(&path, &p.y0, |y, k| exact_linear_step(y, &p, &path.context(k).unwrap()).unwrap());
        samples.push(ErrorSample::new("milstein_full", 0.1, i, &y, &r).unwrap());
    }
    assert_eq!(res.samples, samples);
    assert_eq!(res.reports[0].strong_error, strong_error(&samples).unwrap());
}

#[test]
fn single_noise_split_is_exact_for_scalars() {
    let p = LinearSdeProblem::new(
        DenseMatrix::from_diag(&[-0.7]).unwrap(),
        vec![DenseMatrix::from_diag(&[0.4]).unwrap()],
        vec![1.5],
        1.0,
    )
    .unwrap();
    let path = WienerPath::generate(1, 50, 0.02, 8).unwrap();
    let a = run(&path, &p.y0, |y, k| ab_split_step(y, &p, &path.context(k).unwrap()).unwrap());
    let b = run(&path, &p.y0, |y, k| exact_linear_step(y, &p, &path.context(k).unwrap()).unwrap());
    assert!((a[0] - b[0]).abs() < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zero_noise_schemes_agree_with_the_drift_flow(seed in any::<u64>(), n in 1usize..20) {
        let p = build_vectorial_2x2(1.0, 1.0).unwrap();
        let dt = 1.0 / n as f64;
        let path = WienerPath::quiet(2, n, dt, seed).unwrap();
        let flow = p.a.scale(1.0).exp().unwrap().mul_vec(&p.y0).unwrap();
        let exact = run(&path, &p.y0, |y, k| exact_linear_step(y, &p, &path.context(k).unwrap()).unwrap());
        let iter = run(&path, &p.y0, |y, k| iter_vectorial_step(y, &p, &path.context(k).unwrap(), &IterConfig::with_iterations(2)).unwrap());
        let em = run(&path, &p.y0, |y, k| em_step_linear(y, &p, &path.context(k).unwrap()).unwrap());
        for i in 0..2 {
            prop_assert!((exact[i] - flow[i]).abs() < 1e-13);
            prop_assert!((iter[i] - flow[i]).abs() < 1e-13);
            prop_assert!((em[i] - flow[i]).abs() < 0.2 * dt + 1e-12);
        }
    }

    #[test]
    fn coarsening_preserves_totals(seed in any::<u64>(), factor in 1usize..6, blocks in 1usize..8) {
        let fine = WienerPath::generate(3, factor * blocks, 0.01, seed).unwrap();
        let coarse = fine.coarsen(factor).unwrap();
        prop_assert_eq!(coarse.n_steps(), blocks);
        for d in 0..3 {
            prop_assert!((fine.total(d) - coarse.total(d)).abs() < 1e-12);
        }
    }
}
