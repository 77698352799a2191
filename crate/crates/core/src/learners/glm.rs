//! Mean, linear, and logistic fits.

use super::linalg::solve_spd_with_ridge;
use super::{sigmoid, DesignMatrix, LearnError, Model};

const LINEAR_RIDGE: f64 = 1e-8;
const LOGISTIC_RIDGE: f64 = 1e-6;
const IRLS_MAX_ITER: usize = 100;
const IRLS_SCORE_TOL: f64 = 1e-8;

pub fn fit_mean(d: &DesignMatrix) -> Result<Model, LearnError> {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..d.n() {
        let w = d.weight(i);
        num += w * d.y()[i];
        den += w;
    }
    Ok(Model::Mean {
        value: num / den,
        n_features: d.p(),
    })
}

/// Weighted cross-product accumulation for the intercept-augmented design:
/// returns (X'WX, X'Wy) with p+1 unknowns.
fn normal_equations(d: &DesignMatrix, weights: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
    let p = d.p() + 1;
    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    let mut row = vec![0.0; p];
    for i in 0..d.n() {
        row[0] = 1.0;
        for (j, c) in d.cols().iter().enumerate() {
            row[j + 1] = c[i];
        }
        let w = weights.map_or_else(|| d.weight(i), |w| w[i]);
        for a in 0..p {
            let wa = w * row[a];
            xty[a] += wa * d.y()[i];
            for b in 0..=a {
                xtx[a * p + b] += wa * row[b];
            }
        }
    }
    for a in 0..p {
        for b in a + 1..p {
            xtx[a * p + b] = xtx[b * p + a];
        }
    }
    (xtx, xty)
}

/// Weighted least squares with intercept. Rank deficiency triggers a
/// trace-scaled ridge fallback flagged on the model.
pub fn fit_linear(d: &DesignMatrix) -> Result<Model, LearnError> {
    let (xtx, xty) = normal_equations(d, None);
    let (coefs, ridged) = solve_spd_with_ridge(&xtx, &xty, d.p() + 1, LINEAR_RIDGE)?;
    Ok(Model::Linear { coefs, ridged })
}

/// Bernoulli GLM via iteratively reweighted least squares. Convergence when
/// the largest score component drops below 1e-8, capped at 100 iterations.
/// Suspected separation (diverging coefficients or vanishing IRLS weights)
/// restarts the fit with a ridge penalty.
pub fn fit_logistic(d: &DesignMatrix) -> Result<Model, LearnError> {
    if !d.response_is_binary() {
        return Err(LearnError::NonBinaryResponse);
    }
    match irls(d, 0.0) {
        Ok((coefs, iters)) => Ok(Model::Logistic {
            coefs,
            ridged: false,
            iterations: iters,
        }),
        Err(IrlsFailure::Separation) => {
            let (coefs, iters) = irls(d, LOGISTIC_RIDGE).map_err(|e| match e {
                IrlsFailure::Singular => LearnError::Singular,
                IrlsFailure::Separation => LearnError::Singular,
            })?;
            Ok(Model::Logistic {
                coefs,
                ridged: true,
                iterations: iters,
            })
        }
        Err(IrlsFailure::Singular) => {
            // Collinear design: ridge handles it the same way.
            let (coefs, iters) =
                irls(d, LOGISTIC_RIDGE).map_err(|_| LearnError::Singular)?;
            Ok(Model::Logistic {
                coefs,
                ridged: true,
                iterations: iters,
            })
        }
    }
}

enum IrlsFailure {
    Separation,
    Singular,
}

fn irls(d: &DesignMatrix, ridge: f64) -> Result<(Vec<f64>, usize), IrlsFailure> {
    let p = d.p() + 1;
    let n = d.n();
    let mut beta = vec![0.0; p];
    let mut row = vec![0.0; p];
    for iter in 1..=IRLS_MAX_ITER {
        let mut xtwx = vec![0.0; p * p];
        let mut score = vec![0.0; p];
        let mut max_score: f64 = 0.0;
        let mut max_abs_eta: f64 = 0.0;
        for i in 0..n {
            row[0] = 1.0;
            for (j, c) in d.cols().iter().enumerate() {
                row[j + 1] = c[i];
            }
            let eta: f64 = beta.iter().zip(&row).map(|(b, x)| b * x).sum();
            max_abs_eta = max_abs_eta.max(eta.abs());
            let mu = sigmoid(eta);
            let wi = d.weight(i) * mu * (1.0 - mu);
            let resid = d.weight(i) * (d.y()[i] - mu);
            for a in 0..p {
                score[a] += resid * row[a];
                let wa = wi * row[a];
                for b in 0..=a {
                    xtwx[a * p + b] += wa * row[b];
                }
            }
        }
        for a in 0..p {
            for b in a + 1..p {
                xtwx[a * p + b] = xtwx[b * p + a];
            }
            score[a] -= ridge * beta[a];
            xtwx[a * p + a] += ridge;
            max_score = max_score.max(score[a].abs());
        }
        if max_score < IRLS_SCORE_TOL {
            // Fitted log-odds this extreme mean the likelihood peaks at a
            // boundary (separation), not at an interior optimum.
            if ridge == 0.0 && max_abs_eta > 15.0 {
                return Err(IrlsFailure::Separation);
            }
            return Ok((beta, iter));
        }
        let (step, ridged) =
            solve_spd_with_ridge(&xtwx, &score, p, 1e-10).map_err(|_| IrlsFailure::Singular)?;
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
        }
        if ridge == 0.0 {
            let diverging = beta.iter().any(|b| !b.is_finite() || b.abs() > 30.0);
            if diverging || (ridged && iter > 2) {
                return Err(IrlsFailure::Separation);
            }
        } else if beta.iter().any(|b| !b.is_finite()) {
            return Err(IrlsFailure::Singular);
        }
    }
    // Ran out of iterations without the score blowing up: accept the fit
    // in the penalized case, flag separation otherwise.
    if ridge > 0.0 {
        Ok((beta, IRLS_MAX_ITER))
    } else {
        Err(IrlsFailure::Separation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(cols: Vec<Vec<f64>>, y: Vec<f64>) -> DesignMatrix {
        let names = (0..cols.len()).map(|i| format!("x{i}")).collect();
        DesignMatrix::new(names, cols, y).unwrap()
    }

    #[test]
    fn mean_examples() {
        let d = design(vec![], vec![1.0, 2.0, 3.0]);
        assert_eq!(fit_mean(&d).unwrap().predict(&[]), 2.0);

        let d = design(vec![], vec![5.0]);
        assert_eq!(fit_mean(&d).unwrap().predict(&[]), 5.0);

        let d = design(vec![], vec![7.0, 1.0, 1.0])
            .with_weights(vec![1.0, 0.0, 0.0])
            .unwrap();
        assert_eq!(fit_mean(&d).unwrap().predict(&[]), 7.0);
    }

    #[test]
    fn linear_recovers_exact_line() {
        let x: Vec<f64> = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let m = fit_linear(&design(vec![x], y)).unwrap();
        match &m {
            Model::Linear { coefs, ridged } => {
                assert!(!ridged);
                assert!((coefs[0] - 1.0).abs() < 1e-10);
                assert!((coefs[1] - 2.0).abs() < 1e-10);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn duplicated_column_triggers_ridge_and_matches_projection() {
        let x: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let m = fit_linear(&design(vec![x.clone(), x.clone()], y.clone())).unwrap();
        assert!(m.ridged());
        // Predictions still match the OLS projection onto span{1, x}.
        for (xi, yi) in x.iter().zip(&y) {
            assert!((m.predict(&[*xi, *xi]) - yi).abs() < 1e-5);
        }
    }

    #[test]
    fn linear_normal_equations_hold() {
        // Residuals orthogonal to every column and to the intercept.
        let cols = vec![
            vec![0.3, -1.2, 0.7, 2.2, -0.4, 1.1],
            vec![1.0, 0.2, -0.5, 0.9, 1.4, -2.0],
        ];
        let y = vec![0.1, -0.2, 1.3, 2.0, -0.7, 0.4];
        let d = design(cols.clone(), y.clone());
        let m = fit_linear(&d).unwrap();
        let resid: Vec<f64> = (0..d.n())
            .map(|i| y[i] - m.predict(&d.row(i)))
            .collect();
        assert!(resid.iter().sum::<f64>().abs() < 1e-8);
        for c in &cols {
            let dot: f64 = c.iter().zip(&resid).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-8);
        }
    }

    #[test]
    fn logistic_balanced_intercept_only() {
        let d = design(vec![], vec![0.0, 1.0, 0.0, 1.0]);
        let m = fit_logistic(&d).unwrap();
        assert!((m.predict(&[]) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn logistic_separation_stays_finite() {
        let x: Vec<f64> = vec![-2.0, -1.0, 1.0, 2.0];
        let y: Vec<f64> = vec![0.0, 0.0, 1.0, 1.0];
        let m = fit_logistic(&design(vec![x.clone()], y)).unwrap();
        assert!(m.ridged());
        for xi in x {
            let p = m.predict(&[xi]);
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn logistic_rejects_non_binary() {
        let d = design(vec![], vec![0.0, 0.5, 1.0]);
        assert!(matches!(
            fit_logistic(&d),
            Err(LearnError::NonBinaryResponse)
        ));
    }
}
