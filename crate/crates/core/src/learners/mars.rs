//! Greedy forward hinge-spline regression.
//!
//! Candidate basis functions are the plain feature columns and hinge pairs
//! `max(0, x - t)` / `max(0, t - x)` with knots at the training deciles
//! {0.1, ..., 0.9}. Forward selection refits by least squares at every step,
//! stops when the training-MSE improvement falls below 1e-6 or the term
//! budget is reached. No backward pruning. With `interactions` enabled,
//! products of an accepted term with each base candidate join the pool.

use super::linalg::solve_spd_with_ridge;
use super::{DesignMatrix, LearnError, Model};

const MSE_IMPROVEMENT_TOL: f64 = 1e-6;
const KNOT_QUANTILES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub enum BasisTerm {
    /// The raw feature column.
    Linear(usize),
    /// `max(0, x[f] - knot)`.
    HingePos { feature: usize, knot: f64 },
    /// `max(0, knot - x[f])`.
    HingeNeg { feature: usize, knot: f64 },
    Product(Box<BasisTerm>, Box<BasisTerm>),
}

impl BasisTerm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            BasisTerm::Linear(f) => x[*f],
            BasisTerm::HingePos { feature, knot } => (x[*feature] - knot).max(0.0),
            BasisTerm::HingeNeg { feature, knot } => (knot - x[*feature]).max(0.0),
            BasisTerm::Product(a, b) => a.eval(x) * b.eval(x),
        }
    }

    pub fn max_feature_index(&self) -> usize {
        match self {
            BasisTerm::Linear(f) => *f,
            BasisTerm::HingePos { feature, .. } | BasisTerm::HingeNeg { feature, .. } => *feature,
            BasisTerm::Product(a, b) => a.max_feature_index().max(b.max_feature_index()),
        }
    }
}

/// Candidate unit: either a single term or a hinge pair added together.
#[derive(Debug, Clone)]
enum Candidate {
    Single(BasisTerm),
    Pair(BasisTerm, BasisTerm),
}

impl Candidate {
    fn terms(&self) -> Vec<BasisTerm> {
        match self {
            Candidate::Single(t) => vec![t.clone()],
            Candidate::Pair(a, b) => vec![a.clone(), b.clone()],
        }
    }
}

pub fn fit_mars_lite(
    d: &DesignMatrix,
    max_terms: usize,
    interactions: bool,
) -> Result<Model, LearnError> {
    let n = d.n();
    let mut candidates = base_candidates(d);

    // Materialize candidate term columns once; the greedy refits then work
    // off a cached Gram matrix instead of touching the data again.
    let mut pool = TermPool::new(n, d);
    for c in &candidates {
        pool.add_candidate(c);
    }

    let mut selected: Vec<BasisTerm> = Vec::new();
    let mut selected_cols: Vec<usize> = Vec::new(); // indices into pool
    let mut best_mse = mean_square(d);
    let mut coefs = vec![weighted_mean(d)];

    while selected.len() < max_terms {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for ci in 0..candidates.len() {
            let cols = pool.candidate_cols(ci);
            if cols.iter().any(|&c| selected_cols.contains(&c)) {
                continue;
            }
            if selected.len() + cols.len() > max_terms {
                continue;
            }
            let trial: Vec<usize> = selected_cols.iter().chain(cols.iter()).copied().collect();
            if let Some((mse, beta)) = pool.refit(&trial) {
                if best.as_ref().is_none_or(|(_, m, _)| mse < *m) {
                    best = Some((ci, mse, beta));
                }
            }
        }
        let Some((ci, mse, beta)) = best else { break };
        if best_mse - mse < MSE_IMPROVEMENT_TOL {
            break;
        }
        best_mse = mse;
        coefs = beta;
        selected_cols.extend(pool.candidate_cols(ci));
        selected.extend(candidates[ci].terms());

        if interactions {
            // Grow the pool with products of the just-accepted terms and the
            // base candidates (classic parent-child expansion).
            let parents = candidates[ci].terms();
            for parent in parents {
                for base in base_candidates(d) {
                    let prod = match base {
                        Candidate::Single(t) => Candidate::Single(BasisTerm::Product(
                            Box::new(parent.clone()),
                            Box::new(t),
                        )),
                        Candidate::Pair(a, b) => Candidate::Pair(
                            BasisTerm::Product(Box::new(parent.clone()), Box::new(a)),
                            BasisTerm::Product(Box::new(parent.clone()), Box::new(b)),
                        ),
                    };
                    pool.add_candidate(&prod);
                    candidates.push(prod);
                }
            }
        }
    }

    Ok(Model::Mars {
        terms: selected,
        coefs,
    })
}

fn base_candidates(d: &DesignMatrix) -> Vec<Candidate> {
    let mut out = Vec::new();
    for f in 0..d.p() {
        out.push(Candidate::Single(BasisTerm::Linear(f)));
        let mut sorted = d.cols()[f].clone();
        sorted.sort_by(f64::total_cmp);
        let mut used = Vec::new();
        for q in KNOT_QUANTILES {
            let knot = crate::numeric::quantile_sorted(&sorted, q);
            if used.iter().any(|&u: &f64| (u - knot).abs() < 1e-12) {
                continue;
            }
            used.push(knot);
            out.push(Candidate::Pair(
                BasisTerm::HingePos { feature: f, knot },
                BasisTerm::HingeNeg { feature: f, knot },
            ));
        }
    }
    out
}

fn weighted_mean(d: &DesignMatrix) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..d.n() {
        num += d.weight(i) * d.y()[i];
        den += d.weight(i);
    }
    num / den
}

fn mean_square(d: &DesignMatrix) -> f64 {
    let m = weighted_mean(d);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..d.n() {
        num += d.weight(i) * (d.y()[i] - m) * (d.y()[i] - m);
        den += d.weight(i);
    }
    num / den
}

/// Cache of candidate columns with their weighted Gram matrix, so each
/// subset refit is an O(k^3) solve instead of an O(n k^2) pass.
struct TermPool {
    n: usize,
    total_weight: f64,
    /// Raw feature rows for term evaluation.
    rows: Vec<Vec<f64>>,
    /// Column 0 is the intercept.
    cols: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
    xty: Vec<f64>,
    yty: f64,
    /// Column indices per candidate.
    cand_cols: Vec<Vec<usize>>,
    weights: Option<Vec<f64>>,
    y: Vec<f64>,
}

impl TermPool {
    fn new(n: usize, d: &DesignMatrix) -> Self {
        let weights = d.weights().map(<[f64]>::to_vec);
        let y = d.y().to_vec();
        let total_weight = match &weights {
            Some(w) => w.iter().sum(),
            None => n as f64,
        };
        let mut pool = Self {
            n,
            total_weight,
            rows: (0..n).map(|i| d.row(i)).collect(),
            cols: Vec::new(),
            gram: Vec::new(),
            xty: Vec::new(),
            yty: 0.0,
            cand_cols: Vec::new(),
            weights,
            y,
        };
        pool.yty = (0..n).map(|i| pool.w(i) * pool.y[i] * pool.y[i]).sum();
        pool.push_col(vec![1.0; n]);
        pool
    }

    fn w(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    fn push_col(&mut self, col: Vec<f64>) -> usize {
        let idx = self.cols.len();
        let mut g_row = Vec::with_capacity(idx + 1);
        for existing in &self.cols {
            g_row.push(
                (0..self.n)
                    .map(|i| self.w(i) * col[i] * existing[i])
                    .sum(),
            );
        }
        g_row.push((0..self.n).map(|i| self.w(i) * col[i] * col[i]).sum());
        self.xty
            .push((0..self.n).map(|i| self.w(i) * col[i] * self.y[i]).sum());
        self.cols.push(col);
        self.gram.push(g_row);
        idx
    }

    fn add_candidate(&mut self, cand: &Candidate) {
        let mut ids = Vec::new();
        for term in cand.terms() {
            let col: Vec<f64> = (0..self.n).map(|i| term.eval(&self.rows[i])).collect();
            ids.push(self.push_col(col));
        }
        self.cand_cols.push(ids);
    }

    fn candidate_cols(&self, ci: usize) -> &[usize] {
        &self.cand_cols[ci]
    }

    #[inline]
    fn gram_at(&self, a: usize, b: usize) -> f64 {
        if a >= b {
            self.gram[a][b]
        } else {
            self.gram[b][a]
        }
    }

    /// Weighted least squares on intercept + given columns; returns the
    /// training MSE and coefficients (intercept first).
    fn refit(&self, cols: &[usize]) -> Option<(f64, Vec<f64>)> {
        let sel: Vec<usize> = std::iter::once(0).chain(cols.iter().copied()).collect();
        let p = sel.len();
        let mut a = vec![0.0; p * p];
        let mut b = vec![0.0; p];
        for (r, &i) in sel.iter().enumerate() {
            b[r] = self.xty[i];
            for (c, &j) in sel.iter().enumerate() {
                a[r * p + c] = self.gram_at(i, j);
            }
        }
        let (beta, _) = solve_spd_with_ridge(&a, &b, p, 1e-10).ok()?;
        // MSE via the quadratic form: (y'y - 2 b'beta + beta'A beta) / sum w.
        let mut quad = 0.0;
        for r in 0..p {
            quad += beta[r] * b[r];
        }
        let mut bab = 0.0;
        for r in 0..p {
            for c in 0..p {
                bab += beta[r] * a[r * p + c] * beta[c];
            }
        }
        let sse = self.yty - 2.0 * quad + bab;
        Some((sse.max(0.0) / self.total_weight, beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::fit_linear;

    fn design(cols: Vec<Vec<f64>>, y: Vec<f64>) -> DesignMatrix {
        let names = (0..cols.len()).map(|i| format!("x{i}")).collect();
        DesignMatrix::new(names, cols, y).unwrap()
    }

    #[test]
    fn hinge_pair_captures_absolute_value() {
        let x: Vec<f64> = (-20..=20).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let d = design(vec![x.clone()], y.clone());
        let m = fit_mars_lite(&d, 4, false).unwrap();
        let var = crate::numeric::sample_variance(&y);
        let mse = x
            .iter()
            .zip(&y)
            .map(|(xi, yi)| (m.predict(&[*xi]) - yi).powi(2))
            .sum::<f64>()
            / x.len() as f64;
        assert!(mse < 0.01 * var, "mse {mse} vs var {var}");
    }

    #[test]
    fn constant_response_keeps_zero_terms() {
        let x: Vec<f64> = (0..30).map(f64::from).collect();
        let y = vec![3.5; 30];
        let m = fit_mars_lite(&design(vec![x], y), 6, false).unwrap();
        match &m {
            Model::Mars { terms, coefs } => {
                assert!(terms.is_empty());
                assert!((coefs[0] - 3.5).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn nests_the_linear_fit_on_linear_data() {
        let x: Vec<f64> = (-10..=10).map(|i| i as f64 / 3.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.3 * v - 0.4).collect();
        let d = design(vec![x.clone()], y.clone());
        let mars = fit_mars_lite(&d, 6, false).unwrap();
        let lin = fit_linear(&d).unwrap();
        let mse = |m: &Model| {
            x.iter()
                .zip(&y)
                .map(|(xi, yi)| (m.predict(&[*xi]) - yi).powi(2))
                .sum::<f64>()
                / x.len() as f64
        };
        assert!(mse(&mars) <= mse(&lin) + 1e-6);
    }
}
