//! Continuous algebraic Riccati equations.
//!
//! Regulator: `S A + A^T S - S B H^-1 B^T S + E = 0`, `K = -H^-1 B^T S`.
//! Filter:    `A P + P A^T - P C^T R^-1 C P + Q = 0`, `L = P C^T R^-1`.
//!
//! The stable invariant subspace of the Hamiltonian
//! `[[A, -G], [-E, -A^T]]` (`G = B H^-1 B^T`) is extracted with the
//! scaled Newton iteration for the matrix sign function. The resulting
//! solution is polished by Newton-Kleinman steps, each a Lyapunov solve.

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{Error, Result};

/// Total iteration budget shared by the sign iteration and the refinement.
pub const MAX_ITERATIONS: usize = 100;
/// Accepted relative residual `||res||_F / (1 + ||X||_F)`.
pub const RESIDUAL_TOL: f64 = 1e-9;

const SIGN_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct CareSolution {
    pub s: DMatrix<f64>,
    /// `K = -H^-1 B^T S`
    pub gain: DMatrix<f64>,
    pub relative_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct FareSolution {
    pub p: DMatrix<f64>,
    /// `L = P C^T R^-1`
    pub gain: DMatrix<f64>,
    pub relative_residual: f64,
    pub iterations: usize,
}

fn ensure_square(m: &DMatrix<f64>, n: usize, name: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension(format!(
            "{name} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn ensure_symmetric(m: &DMatrix<f64>, name: &'static str) -> Result<()> {
    let scale = 1.0 + m.amax();
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::NotPositiveDefinite(name));
    }
    Ok(())
}

fn inverse_pd(m: &DMatrix<f64>, name: &'static str) -> Result<DMatrix<f64>> {
    ensure_symmetric(m, name)?;
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::NotPositiveDefinite(name))
}

fn ensure_psd(m: &DMatrix<f64>, name: &'static str) -> Result<()> {
    ensure_symmetric(m, name)?;
    let min = m.clone().symmetric_eigenvalues().min();
    if min < -1e-12 * (1.0 + m.amax()) {
        return Err(Error::NotPositiveDefinite(name));
    }
    Ok(())
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

const SCHUR_MAX_SWEEPS: usize = 20_000;

/// Diagonal similarity `D^-1 M D` with power-of-two entries that evens
/// out row and column norms (Parlett-Reinsch).
fn balance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut b = m.clone();
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&j| j != i).map(|j| b[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| b[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let (mut cs, rs) = (c, r);
            while cs < rs / 2.0 {
                cs *= 2.0;
                f *= 2.0;
            }
            while cs > rs * 2.0 {
                cs /= 2.0;
                f /= 2.0;
            }
            if (cs + rs / f) < 0.95 * (c + r) {
                changed = true;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
        if !changed {
            break;
        }
    }
    b
}

/// Eigenvalues of a real square matrix. The unshifted-deflation QR in
/// nalgebra can stall on badly scaled input, so the sweep count is
/// capped and a balanced copy is tried before giving up.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    for candidate in [balance(m), m.clone()] {
        if let Some(schur) = Schur::try_new(candidate, f64::EPSILON, SCHUR_MAX_SWEEPS) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::NonConvergence {
        iterations: SCHUR_MAX_SWEEPS,
        residual: f64::NAN,
    })
}

/// Largest real part among the eigenvalues of `m`.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// True iff every eigenvalue of `m` has negative real part.
///
/// Lyapunov inertia test: `M^T P + P M = -I` has a positive definite
/// solution exactly when `M` is Hurwitz. Needs no eigenvalues, so it
/// cannot stall the way the QR iteration can.
pub fn is_hurwitz(m: &DMatrix<f64>) -> Result<bool> {
    let n = m.nrows();
    ensure_square(m, n, "M")?;
    let p = match solve_lyapunov(m, &DMatrix::identity(n, n)) {
        Ok(p) => p,
        Err(_) => return Ok(false),
    };
    Ok(p.iter().all(|v| v.is_finite()) && symmetrize(&p).cholesky().is_some())
}

/// Error text for a matrix that failed [`is_hurwitz`].
pub fn unstable_detail(m: &DMatrix<f64>) -> String {
    match spectral_abscissa(m) {
        Ok(a) => format!("spectral abscissa {a:e}"),
        Err(_) => "not Hurwitz".into(),
    }
}

/// Solves `A^T X + X A + C = 0` by vectorization.
pub fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    ensure_square(a, n, "A")?;
    ensure_square(c, n, "C")?;
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    // Column-major vec: vec(A^T X) = (I (x) A^T) vec X, vec(X A) = (A^T (x) I) vec X.
    let op = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, c.iter().map(|v| -v));
    let x = op.lu().solve(&rhs).ok_or_else(|| {
        Error::NotStabilizable("Lyapunov operator is singular (eigenvalues symmetric about the imaginary axis)".into())
    })?;
    Ok(DMatrix::from_column_slice(n, n, x.as_slice()))
}

fn care_residual(a: &DMatrix<f64>, g: &DMatrix<f64>, e: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    x * a + a.transpose() * x - x * g * x + e
}

fn relative(res: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    res.norm() / (1.0 + x.norm())
}

fn log_abs_det(m: &DMatrix<f64>) -> Option<f64> {
    let lu = m.clone().lu();
    let u = lu.u();
    let mut acc = 0.0;
    for i in 0..u.nrows() {
        let d = u[(i, i)].abs();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        acc += d.ln();
    }
    Some(acc)
}

/// Matrix sign function by the determinant-scaled Newton iteration.
fn matrix_sign(z: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize)> {
    let n = z.nrows() as f64;
    let mut w = z.clone();
    let mut scaling = true;
    for it in 1..=MAX_ITERATIONS {
        let inv = w.clone().try_inverse().ok_or_else(|| {
            Error::NotStabilizable("Hamiltonian has an eigenvalue at the origin".into())
        })?;
        let c = if scaling {
            let log_det = log_abs_det(&w).ok_or_else(|| {
                Error::NotStabilizable("Hamiltonian has an eigenvalue at the origin".into())
            })?;
            (-log_det / n).exp()
        } else {
            1.0
        };
        let next = (&w * c + inv / c) * 0.5;
        let change = (&next - &w).norm() / next.norm();
        w = next;
        if !change.is_finite() {
            break;
        }
        if change < 1e-2 {
            scaling = false;
        }
        if change <= SIGN_TOL {
            return Ok((w, it));
        }
    }
    let residual = (&w * &w - DMatrix::<f64>::identity(w.nrows(), w.nrows())).norm();
    if residual.is_finite() && residual < 1e-8 * w.norm() {
        Ok((w, MAX_ITERATIONS))
    } else {
        Err(Error::NonConvergence {
            iterations: MAX_ITERATIONS,
            residual,
        })
    }
}

/// Stabilizing solution of `X A + A^T X - X G X + E = 0`.
fn solve_hamiltonian(
    a: &DMatrix<f64>,
    g: &DMatrix<f64>,
    e: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, f64, usize)> {
    let n = a.nrows();
    let mut z = DMatrix::zeros(2 * n, 2 * n);
    z.view_mut((0, 0), (n, n)).copy_from(a);
    z.view_mut((0, n), (n, n)).copy_from(&(-g));
    z.view_mut((n, 0), (n, n)).copy_from(&(-e));
    z.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    // The scaled Newton iteration converges for any matrix without
    // imaginary-axis eigenvalues, so a stall means the Hamiltonian has some.
    let (w, mut iterations) = matrix_sign(&z).map_err(|e| match e {
        Error::NonConvergence { residual, .. } => Error::NotStabilizable(format!(
            "Hamiltonian sign iteration stalled (|W^2 - I| = {residual:e}); eigenvalues on the imaginary axis"
        )),
        other => other,
    })?;
    // sign(Z) has trace (#right - #left); a split other than n/n means
    // eigenvalues sat on the imaginary axis.
    let split = w.trace();
    if !(split.abs() < 0.5) {
        return Err(Error::NotStabilizable(format!(
            "Hamiltonian spectrum does not split evenly across the imaginary axis (trace of sign {split:.3})"
        )));
    }
    // (W + I) annihilates the stable subspace spanned by [I; X].
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(w.view((n, n), (n, n)) + DMatrix::<f64>::identity(n, n)));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(w.view((0, 0), (n, n)) + DMatrix::<f64>::identity(n, n))));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w.view((n, 0), (n, n))));
    let x = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::NotStabilizable(e.to_string()))?;
    let mut x = symmetrize(&x);
    let mut rel = relative(&care_residual(a, g, e, &x), &x);

    // Newton-Kleinman refinement; stop once the residual stops improving.
    while iterations < MAX_ITERATIONS {
        if rel <= f64::EPSILON {
            break;
        }
        iterations += 1;
        let closed = a - g * &x;
        let rhs = e + &x * g * &x;
        let next = match solve_lyapunov(&closed, &rhs) {
            Ok(next) => symmetrize(&next),
            Err(_) => break,
        };
        let next_rel = relative(&care_residual(a, g, e, &next), &next);
        if !(next_rel < 0.5 * rel) {
            if next_rel < rel {
                x = next;
                rel = next_rel;
            }
            break;
        }
        x = next;
        rel = next_rel;
    }

    if !(rel <= RESIDUAL_TOL) {
        return Err(Error::NonConvergence {
            iterations,
            residual: rel,
        });
    }
    Ok((x, rel, iterations))
}

/// Regulator Riccati equation and LQ gain.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    e: &DMatrix<f64>,
    h: &DMatrix<f64>,
) -> Result<CareSolution> {
    let n = a.nrows();
    ensure_square(a, n, "A")?;
    ensure_square(e, n, "E")?;
    if b.nrows() != n {
        return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.nrows())));
    }
    let m = b.ncols();
    ensure_square(h, m, "H")?;
    ensure_psd(e, "E")?;
    let h_inv = inverse_pd(h, "H")?;

    let g = symmetrize(&(b * &h_inv * b.transpose()));
    let (s, relative_residual, iterations) = solve_hamiltonian(a, &g, e)?;
    let gain = -(&h_inv * b.transpose() * &s);
    let closed = a + b * &gain;
    if !is_hurwitz(&closed)? {
        return Err(Error::NotStabilizable(format!(
            "closed loop A + B K: {}",
            unstable_detail(&closed)
        )));
    }
    Ok(CareSolution {
        s,
        gain,
        relative_residual,
        iterations,
    })
}

/// Filter Riccati equation and Kalman gain, via duality with the regulator
/// problem for `(A^T, C^T, Q, R)`.
pub fn solve_fare(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<FareSolution> {
    let n = a.nrows();
    if c.ncols() != n {
        return Err(Error::Dimension(format!("C has {} columns, expected {n}", c.ncols())));
    }
    let dual = solve_care(&a.transpose(), &c.transpose(), q, r)?;
    let r_inv = inverse_pd(r, "R")?;
    let gain = &dual.s * c.transpose() * r_inv;
    Ok(FareSolution {
        p: dual.s,
        gain,
        relative_residual: dual.relative_residual,
        iterations: dual.iterations,
    })
}

/// Relative residual of the regulator equation for a candidate `S`.
pub fn care_relative_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    e: &DMatrix<f64>,
    h: &DMatrix<f64>,
    s: &DMatrix<f64>,
) -> f64 {
    let h_inv = h.clone().try_inverse().expect("H invertible");
    let g = b * h_inv * b.transpose();
    relative(&care_residual(a, &g, e, s), s)
}

/// Relative residual of the filter equation for a candidate `P`.
pub fn fare_relative_residual(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> f64 {
    let r_inv = r.clone().try_inverse().expect("R invertible");
    let res = a * p + p * a.transpose() - p * c.transpose() * r_inv * c * p + q;
    relative(&res, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_integrator() {
        // -S^2 + 1 = 0
        let sol = solve_care(&scalar(0.0), &scalar(1.0), &scalar(1.0), &scalar(1.0)).unwrap();
        assert!((sol.s[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((sol.gain[(0, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_stable_zero_cost() {
        let sol = solve_care(&scalar(-1.0), &scalar(1.0), &scalar(0.0), &scalar(1.0)).unwrap();
        assert!(sol.s[(0, 0)].abs() < 1e-12);
        assert!(sol.gain[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn scalar_unstable() {
        // 2S - S^2 + 1 = 0, positive root 1 + sqrt(2)
        let sol = solve_care(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(1.0)).unwrap();
        let root = 1.0 + 2f64.sqrt();
        assert!((sol.s[(0, 0)] - root).abs() < 1e-12);
        assert!((sol.gain[(0, 0)] + root).abs() < 1e-12);
    }

    #[test]
    fn scalar_filter() {
        let sol = solve_fare(&scalar(0.0), &scalar(1.0), &scalar(1.0), &scalar(1.0)).unwrap();
        assert!((sol.p[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((sol.gain[(0, 0)] - 1.0).abs() < 1e-12);

        let sol = solve_fare(&scalar(-1.0), &scalar(1.0), &scalar(0.0), &scalar(1.0)).unwrap();
        assert!(sol.p[(0, 0)].abs() < 1e-12);
        assert!(sol.gain[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn imaginary_axis_is_rejected() {
        // Undamped, uncontrollable oscillator with zero state cost.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 0.0]);
        let e = DMatrix::zeros(2, 2);
        let h = scalar(1.0);
        let r = solve_care(&a, &b, &e, &h);
        assert!(matches!(r, Err(Error::NotStabilizable(_))), "{r:?}");
    }

    #[test]
    fn hurwitz_test_matches_eigenvalues() {
        let stable = DMatrix::from_row_slice(2, 2, &[-1.0, 5.0, 0.0, -0.01]);
        let unstable = DMatrix::from_row_slice(2, 2, &[-1.0, 5.0, 0.0, 0.01]);
        let oscillator = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let damped = DMatrix::from_row_slice(2, 2, &[-0.1, 3.0, -3.0, -0.1]);
        assert!(is_hurwitz(&stable).unwrap());
        assert!(!is_hurwitz(&unstable).unwrap());
        assert!(!is_hurwitz(&oscillator).unwrap());
        assert!(is_hurwitz(&damped).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
            let abscissa = spectral_abscissa(&m).unwrap();
            if abscissa.abs() > 1e-6 {
                assert_eq!(is_hurwitz(&m).unwrap(), abscissa < 0.0, "abscissa {abscissa}");
            }
        }
    }

    #[test]
    fn unstabilizable_mode() {
        // The unstable mode at +1 cannot be reached by the input.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let e = DMatrix::identity(2, 2);
        assert!(matches!(
            solve_care(&a, &b, &e, &scalar(1.0)),
            Err(Error::NotStabilizable(_))
        ));
    }

    #[test]
    fn input_validation() {
        let a = DMatrix::identity(2, 2);
        let b = DMatrix::from_element(2, 1, 1.0);
        let e = DMatrix::identity(2, 2);
        assert!(matches!(
            solve_care(&a, &b, &e, &scalar(-1.0)),
            Err(Error::NotPositiveDefinite("H"))
        ));
        assert!(matches!(
            solve_care(&a, &b, &(-e.clone()), &scalar(1.0)),
            Err(Error::NotPositiveDefinite("E"))
        ));
        assert!(matches!(
            solve_care(&a, &DMatrix::zeros(3, 1), &e, &scalar(1.0)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn lyapunov_solution() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 4.0]);
        let x = solve_lyapunov(&a, &c).unwrap();
        let res = a.transpose() * &x + &x * &a + &c;
        assert!(res.amax() < 1e-13);
    }

    #[test]
    fn duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 5;
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let c = DMatrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0));
        let q = DMatrix::identity(n, n);
        let r = DMatrix::identity(2, 2) * 0.5;
        let fare = solve_fare(&a, &c, &q, &r).unwrap();
        let care = solve_care(&a.transpose(), &c.transpose(), &q, &r).unwrap();
        assert!((&fare.p - &care.s).amax() < 1e-12);
        assert!((&fare.gain + care.gain.transpose()).amax() < 1e-10);
        assert!(fare_relative_residual(&a, &c, &q, &r, &fare.p) < RESIDUAL_TOL);
        assert!(spectral_abscissa(&(&a - &fare.gain * &c)).unwrap() < 0.0);
    }

    #[test]
    fn random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 12;
            let m = 4;
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
            let f = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let e = &f * f.transpose() + DMatrix::identity(n, n) * 0.1;
            let h = DMatrix::identity(m, m);
            let sol = solve_care(&a, &b, &e, &h).unwrap();
            assert!(care_relative_residual(&a, &b, &e, &h, &sol.s) <= RESIDUAL_TOL);
            assert!((&sol.s - sol.s.transpose()).amax() <= 1e-10 * sol.s.amax());
            assert!(sol.s.clone().symmetric_eigenvalues().min() > -1e-9);
        }
    }
}
