use std::f64::consts::PI;

use ltsf::matexp::{
    delayed_expm, delayed_expm_grad, expm, expm_frechet, expm_frechet_adjoint, GeneratorClass,
    SkewDiagGenerator,
};
use ltsf::numkit::{Matrix, Rng, Vector};

fn norm1(a: &Matrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Independent reference: Taylor series (200 terms) on `A / 2^s` with
/// `||A / 2^s||_1 <= 1/2`, followed by `s` squarings.
fn series_expm(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let s = (norm1(a) / 0.5).log2().ceil().max(0.0) as i32;
    let scaled = a * 2f64.powi(-s);
    let mut term = Matrix::identity(n, n);
    let mut sum = Matrix::identity(n, n);
    for k in 1..200 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.amax() == 0.0 {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

fn random_matrix(rng: &mut Rng, n: usize, norm: f64) -> Matrix {
    let m = Matrix::from_fn(n, n, |_, _| rng.normal());
    let scale = norm / norm1(&m);
    m * scale
}

fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn expm_matches_series_oracle() {
    let mut rng = Rng::new(101);
    for n in [1, 2, 3, 5, 8, 16] {
        for &norm in &[1e-3, 0.5, 3.0, 10.0, 25.0, 50.0] {
            let a = random_matrix(&mut rng, n, norm);
            let err = rel_err(&expm(&a).unwrap(), &series_expm(&a));
            assert!(err <= 1e-12, "n = {n}, norm = {norm}, rel err = {err:e}");
        }
    }
}

#[test]
fn frechet_matches_central_differences() {
    let mut rng = Rng::new(102);
    let h = 1e-6;
    for _ in 0..5 {
        let a = random_matrix(&mut rng, 5, 2.0);
        let e = random_matrix(&mut rng, 5, 1.0);
        let (exp_a, l) = expm_frechet(&a, &e).unwrap();
        assert!(rel_err(&exp_a, &expm(&a).unwrap()) < 1e-13);
        let fd = (expm(&(&a + h * &e)).unwrap() - expm(&(&a - h * &e)).unwrap()) / (2.0 * h);
        let err = rel_err(&l, &fd);
        assert!(err < 1e-6, "rel err = {err:e}");
    }
}

#[test]
fn frechet_adjoint_is_transpose_pairing() {
    let mut rng = Rng::new(103);
    let a = random_matrix(&mut rng, 6, 3.0);
    let e = random_matrix(&mut rng, 6, 1.0);
    let g = random_matrix(&mut rng, 6, 1.0);
    let forward = g.dot(&expm_frechet(&a, &e).unwrap().1);
    let backward = expm_frechet_adjoint(&a, &g).unwrap().dot(&e);
    assert!((forward - backward).abs() < 1e-12 * forward.abs().max(1.0));
}

#[test]
fn skew_generator_preserves_norm() {
    let mut rng = Rng::new(104);
    for n in [2, 5, 9] {
        let k: Vec<f64> = (0..GeneratorClass::SkewOnly.num_params(n)).map(|_| rng.normal()).collect();
        let a = SkewDiagGenerator::new(n, GeneratorClass::SkewOnly, k).unwrap().materialize();
        let z = Vector::from_fn(n, |_, _| rng.normal());
        for i in 0..=20 {
            let t = 5.0 * i as f64;
            let h = expm(&(&a * t)).unwrap() * &z;
            assert!((h.norm() - z.norm()).abs() < 1e-10, "n = {n}, t = {t}");
        }
    }
}

#[test]
fn semigroup_property() {
    let mut rng = Rng::new(105);
    for _ in 0..10 {
        let a = random_matrix(&mut rng, 4, 1.0);
        let (s, t) = (rng.uniform(0.0, 3.0).unwrap(), rng.uniform(0.0, 3.0).unwrap());
        let lhs = expm(&(&a * s)).unwrap() * expm(&(&a * t)).unwrap();
        let rhs = expm(&(&a * (s + t))).unwrap();
        assert!((lhs - rhs).amax() < 1e-10);
    }
}

#[test]
fn diagonal_generator_scales_coordinates() {
    let mut rng = Rng::new(106);
    let d: Vec<f64> = (0..7).map(|_| rng.uniform(-3.0, 3.0).unwrap()).collect();
    let a = SkewDiagGenerator::new(7, GeneratorClass::DiagOnly, d.clone()).unwrap().materialize();
    let z = Vector::from_fn(7, |_, _| rng.normal());
    let h = expm(&a).unwrap() * &z;
    for i in 0..7 {
        let expected = d[i].exp() * z[i];
        assert!((h[i] - expected).abs() <= 1e-13 * expected.abs().max(1.0));
    }
}

#[test]
fn rotation_by_pi_is_minus_identity() {
    let a = Matrix::from_row_slice(2, 2, &[0.0, -PI, PI, 0.0]);
    assert!((expm(&a).unwrap() + Matrix::identity(2, 2)).amax() < 1e-12);
}

/// Explicit Euler on `H'(t) = A H(t - d)`, `H = I` on `[-d, 0]`.
fn euler_dde(a: &Matrix, d: f64, t_end: f64, dt: f64) -> Vec<(f64, Matrix)> {
    let n = a.nrows();
    let lag = (d / dt).round() as usize;
    let steps = (t_end / dt).round() as usize;
    let mut path: Vec<Matrix> = vec![Matrix::identity(n, n); lag + 1];
    for _ in 0..steps {
        let current = path.last().unwrap();
        let delayed = &path[path.len() - 1 - lag];
        let next = current + dt * (a * delayed);
        path.push(next);
    }
    path.into_iter()
        .skip(lag)
        .enumerate()
        .map(|(i, m)| (i as f64 * dt, m))
        .collect()
}

#[test]
fn delayed_expm_matches_euler_oracle() {
    let mut rng = Rng::new(107);
    let dt = 1e-4;
    for &d in &[0.5, 1.0] {
        let a = Matrix::from_fn(3, 3, |_, _| rng.normal());
        let a = &a * (rng.uniform(0.3, 1.0).unwrap() / a.norm());
        let path = euler_dde(&a, d, 5.0 * d, dt);
        let mut worst: f64 = 0.0;
        for (t, m) in path.iter().step_by(97) {
            let exact = delayed_expm(&a, d, *t).unwrap();
            worst = worst.max((exact - m).amax());
        }
        assert!(worst < 1e-3, "d = {d}, worst = {worst:e}");
    }
}

#[test]
fn delayed_grad_matches_central_differences() {
    let mut rng = Rng::new(108);
    let h = 1e-6;
    for &(d, t) in &[(1.0, 0.3), (1.0, 2.7), (0.4, 3.3), (2.0, 9.1)] {
        let a = Matrix::from_fn(4, 4, |_, _| 0.3 * rng.normal());
        let u = Matrix::from_fn(4, 4, |_, _| rng.normal());
        let g = delayed_expm_grad(&a, d, t, &u).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut ap = a.clone();
                ap[(i, j)] += h;
                let mut am = a.clone();
                am[(i, j)] -= h;
                let fd = (delayed_expm(&ap, d, t).unwrap().dot(&u)
                    - delayed_expm(&am, d, t).unwrap().dot(&u))
                    / (2.0 * h);
                let err = (fd - g[(i, j)]).abs() / g.amax();
                assert!(err < 1e-6, "d = {d}, t = {t}, ({i},{j}): {err:e}");
            }
        }
    }
}

#[test]
fn delayed_expm_is_continuous_across_segments() {
    let mut rng = Rng::new(109);
    let a = Matrix::from_fn(3, 3, |_, _| rng.normal());
    for &d in &[0.3, 1.0, 2.5] {
        for n in 1..8 {
            let t = n as f64 * d;
            let jump = delayed_expm(&a, d, t.next_down()).unwrap() - delayed_expm(&a, d, t).unwrap();
            assert!(jump.amax() < 1e-10);
        }
    }
}
