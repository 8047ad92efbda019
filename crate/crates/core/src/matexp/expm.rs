use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// Padé(13,13) numerator coefficients for exp.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the degree-13 approximant is accurate to unit
/// roundoff.
const THETA13: f64 = 5.371920351148152;

fn check_square(a: &Matrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn norm1(a: &Matrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(a: &Matrix) -> Result<Matrix> {
    check_square(a, "expm argument")?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let norm = norm1(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a * 2f64.powi(-squarings);
    let mut r = pade13(&scaled)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

fn pade13(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let b = &PADE13;
    let ident = Matrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (b[13] * &a6 + b[11] * &a4 + b[9] * &a2)
        + b[7] * &a6
        + b[5] * &a4
        + b[3] * &a2
        + b[1] * &ident;
    let u = a * u_inner;
    let v = &a6 * (b[12] * &a6 + b[10] * &a4 + b[8] * &a2)
        + b[6] * &a6
        + b[4] * &a4
        + b[2] * &a2
        + b[0] * &ident;

    let p = &v + &u;
    let q = &v - &u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::Numerical("Padé denominator is singular".into()))
}

/// `(exp(A), L(A, E))` where `L` is the Fréchet derivative of the matrix
/// exponential at `A` in direction `E`.
///
/// Uses `exp([[A, E], [0, A]]) = [[exp(A), L(A, E)], [0, exp(A)]]`. `E` is
/// rescaled to the norm of `A` first so that it does not inflate the number
/// of squarings; `L` is linear in `E`, so the scale is undone afterwards.
pub fn expm_frechet(a: &Matrix, e: &Matrix) -> Result<(Matrix, Matrix)> {
    check_square(a, "expm_frechet base point")?;
    check_square(e, "expm_frechet direction")?;
    let n = a.nrows();
    if e.nrows() != n {
        return Err(Error::Shape(format!(
            "direction is {}x{} but base point is {n}x{n}",
            e.nrows(),
            e.ncols()
        )));
    }
    let e_norm = norm1(e);
    if e_norm == 0.0 {
        return Ok((expm(a)?, Matrix::zeros(n, n)));
    }
    let scale = norm1(a).max(1.0) / e_norm;
    let mut block = Matrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(a);
    block.view_mut((n, n), (n, n)).copy_from(a);
    block.view_mut((0, n), (n, n)).copy_from(&(e * scale));
    let big = expm(&block)?;
    let exp_a = big.view((0, 0), (n, n)).into_owned();
    let l = big.view((0, n), (n, n)).into_owned() / scale;
    Ok((exp_a, l))
}

/// Adjoint of the Fréchet derivative: the matrix `G_A` with
/// `<G_A, E> = <G, L(A, E)>` for all `E` (Frobenius pairing).
///
/// Equals `L(A^T, G)`.
pub fn expm_frechet_adjoint(a: &Matrix, g: &Matrix) -> Result<Matrix> {
    Ok(expm_frechet(&a.transpose(), g)?.1)
}
