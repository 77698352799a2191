//! Cross-validated convex-weight stacking.
//!
//! Fold assignment is deterministic: indices are shuffled with the spec seed
//! and dealt round-robin. Each base learner produces out-of-fold
//! predictions; ensemble weights minimize the cross-validated loss over the
//! probability simplex by projected gradient descent with backtracking,
//! started at the best single learner so the stacked loss can never exceed
//! the best member's. Base learners are refit on the full data afterwards.

use super::{fit, DesignMatrix, Learner, LearnError, Loss, Model, SuperLearnerSpec};
use crate::rng::Stream;

const PGD_MAX_ITER: usize = 500;
const PGD_TOL: f64 = 1e-10;
const PROB_CLAMP: f64 = 1e-6;

pub fn fit_super_learner(
    d: &DesignMatrix,
    spec: &SuperLearnerSpec,
) -> Result<Model, LearnError> {
    spec.validate(d.n())?;

    let folds = fold_assignment(d.n(), spec.folds, spec.seed);
    let mut cv_preds: Vec<Vec<f64>> = Vec::new();
    let mut kept: Vec<Learner> = Vec::new();
    let mut dropped: Vec<(Learner, String)> = Vec::new();

    'learner: for &learner in &spec.battery {
        let mut preds = vec![0.0; d.n()];
        for k in 0..spec.folds {
            let train: Vec<usize> = (0..d.n()).filter(|&i| folds[i] != k).collect();
            let test: Vec<usize> = (0..d.n()).filter(|&i| folds[i] == k).collect();
            if train.is_empty() || test.is_empty() {
                dropped.push((learner, format!("fold {k} is empty")));
                continue 'learner;
            }
            let sub = match d.subset(&train).and_then(|s| fit(learner, &s)) {
                Ok(m) => m,
                Err(e) => {
                    dropped.push((learner, format!("fold {k}: {e}")));
                    continue 'learner;
                }
            };
            for &i in &test {
                preds[i] = sub.predict(&d.row(i));
            }
        }
        cv_preds.push(preds);
        kept.push(learner);
    }

    if kept.is_empty() {
        let reasons = dropped
            .iter()
            .map(|(l, e)| format!("{}: {e}", l.label()))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(LearnError::AllLearnersFailed(reasons));
    }

    let weights = simplex_weights(&cv_preds, d.y(), spec.loss);

    let mut members = Vec::with_capacity(kept.len());
    for &learner in &kept {
        members.push((learner, fit(learner, d)?));
    }
    Ok(Model::Ensemble {
        members,
        weights,
        dropped,
    })
}

/// Deterministic round-robin fold labels after a seeded shuffle.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    Stream::new(seed).shuffle(&mut order);
    let mut assignment = vec![0; n];
    for (pos, &idx) in order.iter().enumerate() {
        assignment[idx] = pos % folds;
    }
    assignment
}

fn loss_value(loss: Loss, preds: &[f64], y: &[f64]) -> f64 {
    let n = preds.len() as f64;
    match loss {
        Loss::SquaredError => {
            preds
                .iter()
                .zip(y)
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>()
                / n
        }
        Loss::LogLoss => {
            preds
                .iter()
                .zip(y)
                .map(|(p, t)| {
                    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
                })
                .sum::<f64>()
                / n
        }
    }
}

/// Minimize the CV loss of `sum_m w_m pred_m` over the probability simplex.
fn simplex_weights(cv_preds: &[Vec<f64>], y: &[f64], loss: Loss) -> Vec<f64> {
    let m = cv_preds.len();
    if m == 1 {
        return vec![1.0];
    }
    let n = y.len();

    let member_loss = |w: &[f64]| {
        let mixed: Vec<f64> = (0..n)
            .map(|i| cv_preds.iter().zip(w).map(|(p, wi)| p[i] * wi).sum())
            .collect();
        loss_value(loss, &mixed, y)
    };

    // Start at the best single learner's vertex.
    let mut w = vec![0.0; m];
    let best = (0..m)
        .min_by(|&a, &b| {
            let la = loss_value(loss, &cv_preds[a], y);
            let lb = loss_value(loss, &cv_preds[b], y);
            la.total_cmp(&lb)
        })
        .expect("nonempty battery");
    w[best] = 1.0;
    let mut f = member_loss(&w);

    // Lipschitz bound from the Gram trace gives the initial step.
    let trace: f64 = cv_preds
        .iter()
        .map(|p| p.iter().map(|v| v * v).sum::<f64>())
        .sum();
    let mut step = if trace > 0.0 {
        (n as f64) / (2.0 * trace)
    } else {
        1.0
    };

    for _ in 0..PGD_MAX_ITER {
        let grad = gradient(loss, cv_preds, y, &w);
        // Backtracking: shrink until the projected step does not increase
        // the loss (monotone descent keeps the vertex-start guarantee).
        let mut accepted = false;
        let mut local = step;
        for _ in 0..40 {
            let trial: Vec<f64> = w.iter().zip(&grad).map(|(wi, g)| wi - local * g).collect();
            let trial = project_simplex(&trial);
            let ft = member_loss(&trial);
            if ft <= f {
                let delta: f64 = trial
                    .iter()
                    .zip(&w)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                w = trial;
                let improved = f - ft;
                f = ft;
                accepted = true;
                if delta < PGD_TOL || improved < PGD_TOL * f.abs().max(1.0) {
                    return w;
                }
                break;
            }
            local *= 0.5;
        }
        if !accepted {
            break;
        }
        step = local * 2.0;
    }
    w
}

fn gradient(loss: Loss, cv_preds: &[Vec<f64>], y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mixed: Vec<f64> = (0..n)
        .map(|i| cv_preds.iter().zip(w).map(|(p, wi)| p[i] * wi).sum())
        .collect();
    match loss {
        Loss::SquaredError => cv_preds
            .iter()
            .map(|p| {
                2.0 / n as f64
                    * p.iter()
                        .zip(&mixed)
                        .zip(y)
                        .map(|((pi, mi), yi)| pi * (mi - yi))
                        .sum::<f64>()
            })
            .collect(),
        Loss::LogLoss => cv_preds
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&mixed)
                    .zip(y)
                    .map(|((pi, mi), yi)| {
                        let m = mi.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                        pi * (m - yi) / (m * (1.0 - m))
                    })
                    .sum::<f64>()
                    / n as f64
            })
            .collect(),
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut rho = 0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            rho = i;
            theta = t;
        }
    }
    let _ = rho;
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}
