//! Clever covariates, fluctuation solves, and influence-function values.

use crate::numeric::Kahan;

use super::EstimateError;

/// Clever covariates from truncated propensities:
/// `H2 = (A - πA) / (πA (1 - πA))` and `H1 = H2 / πR`.
pub fn clever_covariates(a: &[u8], pi_a: &[f64], pi_r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h2: Vec<f64> = a
        .iter()
        .zip(pi_a)
        .map(|(&ai, &p)| (ai as f64 - p) / (p * (1.0 - p)))
        .collect();
    let h1: Vec<f64> = h2.iter().zip(pi_r).map(|(&h, &p)| h / p).collect();
    (h1, h2)
}

/// One-dimensional least-squares fluctuation
/// `argmin_d Σ (residual - d * clever)^2 = Σ clever·residual / Σ clever²`.
pub fn solve_fluctuation(residuals: &[f64], clever: &[f64]) -> Result<f64, EstimateError> {
    let mut num = Kahan::new();
    let mut den = Kahan::new();
    for (&r, &h) in residuals.iter().zip(clever) {
        num.add(h * r);
        den.add(h * h);
    }
    if den.value() <= 0.0 {
        return Err(EstimateError::DegenerateClever);
    }
    Ok(num.value() / den.value())
}

/// Per-row pieces of the influence function at the evaluation sample.
pub struct EifParts<'a> {
    pub h1: &'a [f64],
    pub h2: &'a [f64],
    pub r: &'a [u8],
    /// Outcome; ignored (term contributes 0) where `r = 0`.
    pub y: &'a [f64],
    /// Updated mean-imputation predictions at the observed rows.
    pub q1: &'a [f64],
    /// Updated meta-regression predictions at the observed arm.
    pub q2_obs: &'a [f64],
    /// Updated arm contrast `Q2*(W,1) - Q2*(W,0)` per row.
    pub dq2: &'a [f64],
}

/// `D_i = H1 R (Y - Q1) + H2 (Q1 - Q2) + ΔQ2 - ψ`.
pub fn eif_values(parts: &EifParts, psi: f64) -> Vec<f64> {
    (0..parts.h1.len())
        .map(|i| {
            let sel = if parts.r[i] == 1 {
                parts.h1[i] * (parts.y[i] - parts.q1[i])
            } else {
                0.0
            };
            sel + parts.h2[i] * (parts.q1[i] - parts.q2_obs[i]) + parts.dq2[i] - psi
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clever_covariate_arithmetic() {
        let (h1, h2) = clever_covariates(&[1], &[0.5], &[1.0]);
        assert_eq!(h2[0], 2.0);
        assert_eq!(h1[0], 2.0);

        let (_, h2) = clever_covariates(&[0], &[0.5], &[1.0]);
        assert_eq!(h2[0], -2.0);

        let (h1, h2) = clever_covariates(&[1], &[0.2], &[0.5]);
        assert!((h2[0] - 5.0).abs() < 1e-12);
        assert!((h1[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn fluctuation_solves_least_squares() {
        assert_eq!(
            solve_fluctuation(&[0.0, 0.0, 0.0], &[1.0, 2.0, -1.0]).unwrap(),
            0.0
        );

        let clever = [0.4, -1.2, 2.0];
        let resid: Vec<f64> = clever.iter().map(|h| 3.25 * h).collect();
        assert!((solve_fluctuation(&resid, &clever).unwrap() - 3.25).abs() < 1e-14);

        assert!(matches!(
            solve_fluctuation(&[1.0], &[0.0]),
            Err(EstimateError::DegenerateClever)
        ));
    }

    #[test]
    fn fluctuation_matches_quadratic_vertex() {
        // Independent route: the objective f(d) = Σ (r - d h)^2 is quadratic,
        // so its vertex is (f(-1) - f(1)) / (2 (f(1) + f(-1) - 2 f(0))).
        let mut stream = crate::rng::Stream::new(77);
        let clever: Vec<f64> = (0..100).map(|_| stream.normal()).collect();
        let resid: Vec<f64> = (0..100).map(|_| stream.normal()).collect();
        let f = |d: f64| -> f64 {
            resid
                .iter()
                .zip(&clever)
                .map(|(r, h)| (r - d * h) * (r - d * h))
                .sum()
        };
        let vertex = (f(-1.0) - f(1.0)) / (2.0 * (f(1.0) + f(-1.0) - 2.0 * f(0.0)));
        let solved = solve_fluctuation(&resid, &clever).unwrap();
        assert!((solved - vertex).abs() < 1e-10, "{solved} vs {vertex}");
    }

    #[test]
    fn eif_zero_when_all_residuals_vanish() {
        let parts = EifParts {
            h1: &[2.0, -2.0],
            h2: &[2.0, -2.0],
            r: &[1, 1],
            y: &[1.0, 0.0],
            q1: &[1.0, 0.0],
            q2_obs: &[1.0, 0.0],
            dq2: &[0.5, 0.5],
        };
        let d = eif_values(&parts, 0.5);
        assert!(d.iter().all(|v| v.abs() < 1e-15));
    }
}
