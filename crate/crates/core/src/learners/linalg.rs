//! Dense symmetric solves for the small normal-equation systems used by the
//! learners (at most a few dozen unknowns).

use super::LearnError;

/// Cholesky factorization of a symmetric positive-definite matrix stored
/// row-major. Returns the lower factor or `None` when a pivot degenerates,
/// which is how rank deficiency is detected.
pub fn cholesky(a: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                // Relative pivot test against the diagonal scale.
                if s <= 1e-12 * a[i * p + i].abs().max(1e-300) {
                    return None;
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    Some(l)
}

/// Solve `L L^T x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &[f64], b: &[f64], p: usize) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in 0..p {
        for k in 0..i {
            x[i] -= l[i * p + k] * x[k];
        }
        x[i] /= l[i * p + i];
    }
    for i in (0..p).rev() {
        for k in i + 1..p {
            x[i] -= l[k * p + i] * x[k];
        }
        x[i] /= l[i * p + i];
    }
    x
}

/// Solve the symmetric system `a x = b`; on rank deficiency retry with a
/// trace-scaled ridge `lambda * mean(diag) * I`. Returns `(x, ridged)`.
pub fn solve_spd_with_ridge(
    a: &[f64],
    b: &[f64],
    p: usize,
    lambda: f64,
) -> Result<(Vec<f64>, bool), LearnError> {
    if let Some(l) = cholesky(a, p) {
        return Ok((cholesky_solve(&l, b, p), false));
    }
    let trace: f64 = (0..p).map(|i| a[i * p + i]).sum();
    let ridge = lambda * (trace / p as f64).max(1e-300);
    let mut ar = a.to_vec();
    for i in 0..p {
        ar[i * p + i] += ridge;
    }
    let l = cholesky(&ar, p).ok_or(LearnError::Singular)?;
    Ok((cholesky_solve(&l, b, p), true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // a = [[4,2],[2,3]], b = [10, 9] -> x = [1.5, 2]
        let a = [4.0, 2.0, 2.0, 3.0];
        let b = [10.0, 9.0];
        let (x, ridged) = solve_spd_with_ridge(&a, &b, 2, 1e-8).unwrap();
        assert!(!ridged);
        assert!((x[0] - 1.5).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_falls_back_to_ridge() {
        let a = [1.0, 1.0, 1.0, 1.0];
        let b = [2.0, 2.0];
        let (x, ridged) = solve_spd_with_ridge(&a, &b, 2, 1e-8).unwrap();
        assert!(ridged);
        // Ridge solution splits the coefficient evenly, up to the
        // conditioning the tiny ridge leaves behind.
        assert!((x[0] - x[1]).abs() < 1e-6);
        assert!((x[0] + x[1] - 2.0).abs() < 1e-6);
    }
}
