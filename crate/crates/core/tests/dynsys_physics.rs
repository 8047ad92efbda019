use ltsf::dynsys::*;
use proptest::prelude::*;

fn small_spec(system: System, n_train: usize, n_test: usize, len: usize) -> GeneratorSpec {
    GeneratorSpec::new(system).with_counts(n_train, n_test).with_traj_len(len).with_seed(11)
}

/// Global error at t = 1 on x' = x for `steps` steps of `stepper`.
fn exp_error(steps: usize, rk4: bool) -> f64 {
    let dt = 1.0 / steps as f64;
    let mut x = vec![1.0f64];
    for _ in 0..steps {
        x = if rk4 {
            rk4_step(|s: &[f64]| s.to_vec(), &x, dt)
        } else {
            euler_step(|s: &[f64]| s.to_vec(), &x, dt)
        };
    }
    (x[0] - 1f64.exp()).abs()
}

fn ladder_slope(rk4: bool, base: usize) -> f64 {
    let errs: Vec<f64> = (0..5).map(|k| exp_error(base << k, rk4)).collect();
    let slopes: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    slopes.iter().sum::<f64>() / slopes.len() as f64
}

#[test]
fn euler_is_first_order() {
    let s = ladder_slope(false, 64);
    assert!((s - 1.0).abs() < 0.1, "slope {s}");
}

#[test]
fn rk4_is_fourth_order() {
    let s = ladder_slope(true, 4);
    assert!((s - 4.0).abs() < 0.2, "slope {s}");
}

#[test]
fn shapes_follow_default_dims() {
    for system in System::ALL {
        let len = if system.state_dim() > 10 { 3 } else { 40 };
        let spec = small_spec(system, 2, 1, len);
        let (set, _) = generate(&spec, 2).unwrap();
        assert_eq!(set.shape(), (3, len, system.state_dim()), "{}", system.name());
    }
}

#[test]
fn generation_is_identical_across_worker_counts() {
    for system in System::ALL {
        let len = if system.state_dim() > 10 { 4 } else { 60 };
        let spec = small_spec(system, 5, 2, len);
        let (one, _) = generate(&spec, 1).unwrap();
        let (four, _) = generate(&spec, 4).unwrap();
        let a: Vec<u64> = one.data().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = four.data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b, "{}", system.name());
    }
}

#[test]
fn different_seeds_differ() {
    let a = generate(&small_spec(System::Lorenz, 2, 0, 10), 1).unwrap().0;
    let b = generate(&small_spec(System::Lorenz, 2, 0, 10).with_seed(12), 1).unwrap().0;
    assert_ne!(a.data(), b.data());
}

#[test]
fn lorenz_stays_bounded_for_many_seeds() {
    let spec = GeneratorSpec::new(System::Lorenz).with_counts(100, 0).with_traj_len(2000).with_seed(5);
    let (set, _) = generate(&spec, 0).unwrap();
    let max = set.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(max < 100.0, "max |coord| {max}");
}

#[test]
fn lorenz_origin_is_fixed() {
    let out = lorenz_rollout(&LorenzParams::default(), [0.0; 3], 50);
    assert!(out.iter().all(|&v| v == 0.0));
}

#[test]
fn mackey_glass_equilibrium_is_fixed() {
    let p = MackeyGlassParams::default();
    let out = mackey_glass_rollout(&p, &vec![1.0; p.history_len()], 500);
    assert!(out.iter().all(|&v| (v - 1.0).abs() < 1e-15));
}

#[test]
fn mackey_glass_stays_positive_and_bounded() {
    let (set, _) = generate(&small_spec(System::MackeyGlass, 3, 0, 2000), 0).unwrap();
    assert!(set.data().iter().all(|&v| v > 0.0 && v < 2.0));
}

#[test]
fn lotka_volterra_fixed_point_is_stationary() {
    let p = LotkaVolterraParams::default();
    assert_eq!(p.fixed_point(), (25.0, 10.0));
    let out = lv_rollout(&p, (25.0, 10.0), 1000, None).unwrap().unwrap();
    for s in out.chunks(2) {
        assert!((s[0] - 25.0).abs() < 1e-12 && (s[1] - 10.0).abs() < 1e-12);
    }
}

fn lv_invariant(p: &LotkaVolterraParams, x: f64, y: f64) -> f64 {
    p.delta * x - p.gamma * x.ln() + p.beta * y - y.ln()
}

#[test]
fn lotka_volterra_invariant_drift_is_small() {
    let p = LotkaVolterraParams {
        dt: 1e-3,
        ..LotkaVolterraParams::default()
    };
    // 20 time units spans more than one cycle from this start.
    let out = lv_rollout(&p, (100.0, 20.0), 20_001, None).unwrap().unwrap();
    let v0 = lv_invariant(&p, out[0], out[1]);
    let drift = out
        .chunks(2)
        .map(|s| (lv_invariant(&p, s[0], s[1]) - v0).abs())
        .fold(0.0, f64::max);
    assert!(drift / v0.abs() < 0.01, "relative drift {}", drift / v0.abs());
}

#[test]
fn lotka_volterra_generated_populations_are_positive() {
    let (set, _) = generate(&small_spec(System::LotkaVolterra, 8, 0, 2000), 0).unwrap();
    assert!(set.data().iter().all(|&v| v > 0.0));
}

#[test]
fn ks_zero_state_stays_zero() {
    let p = KsParams::default();
    let out = ks_rollout(&p, &vec![0.0; p.solver_points()], 20).unwrap();
    assert!(out.iter().all(|&v| v == 0.0));
}

#[test]
fn ks_spatial_mean_does_not_increase() {
    let p = KsParams::default();
    let mut rng = ltsf::numkit::Rng::new(3);
    let mut w = [0.0; 8];
    for v in &mut w {
        *v = rng.uniform(-1.0, 1.0).unwrap();
    }
    let ic = p.initial_condition(&w);
    let out = ks_rollout(&p, &ic, 1000).unwrap();
    let mean = |f: &[f64]| f.iter().sum::<f64>() / f.len() as f64;
    let m0 = mean(&out[..p.points]);
    let mt = mean(&out[out.len() - p.points..]);
    assert!(mt <= m0 + 1e-3, "mean {m0} -> {mt}");
    let saved: Vec<f64> = ic.iter().step_by(p.oversample).copied().collect();
    assert_eq!(&out[..p.points], saved.as_slice());
    let dx = p.length / p.points as f64;
    let slope = (0..p.points - 1).map(|j| (out[out.len() - p.points + j + 1] - out[out.len() - p.points + j]).abs() / dx);
    assert!(slope.fold(0.0, f64::max) < 10.0);
}

#[test]
fn cahn_hilliard_conserves_mean_and_stays_bounded() {
    let p = CahnHilliardParams::default();
    let mut solver = CahnHilliardSolver::new(&p).unwrap();
    let mut rng = ltsf::numkit::Rng::new(9);
    let field: Vec<f64> = (0..p.grid * p.grid).map(|_| rng.uniform(-0.05, 0.05).unwrap()).collect();
    solver.set_field(&field);
    let m0 = solver.mean();
    for _ in 0..500 {
        solver.step();
        assert!((solver.mean() - m0).abs() < 1e-12);
    }
    assert!(solver.field().iter().all(|v| v.abs() <= 1.5));
}

#[test]
fn cahn_hilliard_constant_field_is_stationary() {
    let p = CahnHilliardParams::default();
    let mut solver = CahnHilliardSolver::new(&p).unwrap();
    solver.set_field(&vec![0.3; p.grid * p.grid]);
    for _ in 0..50 {
        solver.step();
    }
    assert!(solver.field().iter().all(|v| (v - 0.3).abs() < 1e-12));
}

#[test]
fn unknown_override_is_rejected() {
    let spec = small_spec(System::Lorenz, 1, 0, 5).with_override("nonsense", 1.0);
    assert!(generate(&spec, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sinewave_stays_within_amplitude(seed in any::<u64>()) {
        let spec = GeneratorSpec::new(System::Sinewave).with_counts(3, 0).with_traj_len(200).with_seed(seed);
        let (set, _) = generate(&spec, 1).unwrap();
        prop_assert!(set.data().iter().all(|v| v.abs() <= 2.0));
    }

    #[test]
    fn lorenz_one_step_is_euler(x in -20.0f64..20.0, y in -20.0f64..20.0, z in 0.0f64..40.0) {
        let p = LorenzParams::default();
        let out = lorenz_rollout(&p, [x, y, z], 2);
        let f = p.field(&[x, y, z]);
        for k in 0..3 {
            prop_assert_eq!(out[3 + k], [x, y, z][k] + p.dt * f[k]);
        }
    }

    #[test]
    fn generation_is_reproducible(seed in any::<u64>(), workers in 1usize..5) {
        let spec = GeneratorSpec::new(System::MackeyGlass).with_counts(3, 1).with_traj_len(50).with_seed(seed);
        let (a, _) = generate(&spec, workers).unwrap();
        let (b, _) = generate(&spec, 1).unwrap();
        prop_assert_eq!(a.data(), b.data());
    }
}

#[test]
fn default_lookbacks_leave_a_horizon() {
    for system in System::ALL {
        for &l in system.default_lookbacks() {
            assert!(l >= 1 && l < system.default_traj_len(), "{} L={l}", system.name());
        }
    }
}
