use ltsf::baselines::*;
use ltsf::dynsys::TrajectorySet;
use ltsf::numkit::{ridge_objective, Matrix, Rng, Vector};
use ltsf::task::{evaluate, gather_windows, ForecastTask, Forecaster};
use proptest::prelude::*;

fn noise_set(rng: &mut Rng, shape: (usize, usize, usize)) -> TrajectorySet {
    let n = shape.0 * shape.1 * shape.2;
    TrajectorySet::new(shape, (0..n).map(|_| rng.normal()).collect(), None).unwrap()
}

#[test]
fn persistence_on_white_noise_has_mse_two() {
    let mut rng = Rng::new(17);
    let set = noise_set(&mut rng, (400, 301, 1));
    let task = ForecastTask::new("noise", 1, 301).unwrap();
    let m = evaluate(&Persistence::new(1, 1).unwrap(), &set, &task).unwrap();
    // 400 * 300 = 1.2e5 squared errors.
    assert!((1.9..=2.1).contains(&m.mse), "mse {}", m.mse);
}

#[test]
fn zero_weight_nlinear_is_persistence() {
    let mut rng = Rng::new(2);
    let set = noise_set(&mut rng, (20, 30, 3));
    let task = ForecastTask::new("n", 6, 30).unwrap();
    let p = evaluate(&Persistence::new(6, 3).unwrap(), &set, &task).unwrap();
    for variant in [NLinearVariant::A, NLinearVariant::B] {
        let z = NLinear::zeros(6, 24, 3, variant).unwrap();
        assert_eq!(evaluate(&z, &set, &task).unwrap(), p);
    }
}

#[test]
fn reference_parameter_counts() {
    assert_eq!(nlinear_param_count(96, 904, 17), 25_095_944);
    assert_eq!(nlinear_param_count(96, 1904, 3), 1_650_768);
    assert_eq!(nlinear_param_count(96, 1344, 1), 130_368);
}

#[test]
fn fitted_weights_minimize_ridge_objective() {
    let mut rng = Rng::new(8);
    let set = noise_set(&mut rng, (60, 10, 2));
    let (l, t, lambda) = (4, 6, 0.1);
    let model = NLinear::fit(&set, l, t, NLinearVariant::B, lambda, FitWindows::First).unwrap();
    let idx: Vec<usize> = (0..60).collect();
    let (x, y) = gather_windows(&set, &idx, l, t);
    let d = 2;
    // Variant B design: raw window plus intercept; target is Y minus the last state.
    let xm = Matrix::from_fn(60, l * d + 1, |i, j| if j < l * d { x[i * l * d + j] } else { 1.0 });
    let ym = Matrix::from_fn(60, t * d, |i, j| y[i * t * d + j] - x[i * l * d + (l - 1) * d + j % d]);
    let mut w = Matrix::zeros(l * d + 1, t * d);
    w.view_mut((0, 0), (l * d, t * d)).copy_from(&model.weights().transpose());
    w.row_mut(l * d).copy_from(&model.bias().transpose());
    // The intercept is unpenalized; compare objectives with the same penalty split.
    let objective = |w: &Matrix| {
        ridge_objective(&xm, &ym, w, 0.0) + lambda * w.view((0, 0), (l * d, t * d)).norm_squared()
    };
    let base = objective(&w);
    for _ in 0..50 {
        let mut p = w.clone();
        let (i, j) = (rng.below(l * d + 1), rng.below(t * d));
        p[(i, j)] += rng.uniform(-1e-3, 1e-3).unwrap();
        assert!(objective(&p) >= base - 1e-12 * base.abs());
    }
}

#[test]
fn latent_identity_collapses_to_nlinear_b() {
    let mut rng = Rng::new(4);
    let (l, t, d) = (3, 5, 2);
    let w = Matrix::from_fn(t * d, l * d, |_, _| rng.normal());
    let b = Vector::from_fn(t * d, |_, _| rng.normal());
    let nl = NLinear::new(l, t, d, NLinearVariant::B, w.clone(), b.clone()).unwrap();
    let lat = LatentNLinear::from_parts(l, t, ltsf::linode::Mlp::identity(d), w, b, ltsf::linode::Mlp::identity(d)).unwrap();
    let windows: Vec<f64> = (0..7 * l * d).map(|_| rng.normal()).collect();
    assert_eq!(nl.forecast(&windows, 7, t).unwrap(), lat.forecast(&windows, 7, t).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn variant_a_is_shift_equivariant(seed in any::<u64>(), c0 in -50.0f64..50.0, c1 in -50.0f64..50.0) {
        let mut rng = Rng::new(seed);
        let (l, t, d) = (4, 3, 2);
        let w = Matrix::from_fn(t * d, l * d, |_, _| rng.normal());
        let b = Vector::from_fn(t * d, |_, _| rng.normal());
        let m = NLinear::new(l, t, d, NLinearVariant::A, w, b).unwrap();
        let x: Vec<f64> = (0..l * d).map(|_| rng.normal()).collect();
        let shift = [c0, c1];
        let xs: Vec<f64> = x.iter().enumerate().map(|(k, v)| v + shift[k % d]).collect();
        let y = m.forecast(&x, 1, t).unwrap();
        let ys = m.forecast(&xs, 1, t).unwrap();
        for (k, (a, b)) in y.iter().zip(&ys).enumerate() {
            prop_assert!((b - a - shift[k % d]).abs() < 1e-9 * (1.0 + a.abs() + shift[k % d].abs()));
        }
    }

    #[test]
    fn persistence_repeats_last_state(seed in any::<u64>(), l in 1usize..6, t in 1usize..6) {
        let mut rng = Rng::new(seed);
        let x: Vec<f64> = (0..2 * l * 3).map(|_| rng.normal()).collect();
        let y = Persistence::new(l, 3).unwrap().forecast(&x, 2, t).unwrap();
        for b in 0..2 {
            let last = &x[(b * l + l - 1) * 3..(b * l + l) * 3];
            for j in 0..t {
                prop_assert_eq!(&y[(b * t + j) * 3..(b * t + j + 1) * 3], last);
            }
        }
    }
}
