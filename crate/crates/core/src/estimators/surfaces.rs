//! Nuisance surfaces: how each of `π_A(W)`, `π_R(W,A,Z)`, `Q1(W,A,Z)`, and
//! `Q2(W,A)` is fit and evaluated.
//!
//! Natural feature layouts bind the pair's sorted W names, the exposure,
//! and the sorted Z names. A surface may be backed by the super-learner, by
//! an ordinary least-squares fit on derived columns (the misspecification
//! scenarios), or by an exact value-keyed lookup table (oracle injection in
//! tests).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::learners::{
    fit, fit_super_learner, DesignMatrix, Learner, Model, SuperLearnerSpec,
};
use crate::mgraph::AdmissiblePair;
use crate::rng::derive_seed;

use super::{Dataset, EstimateError, PairBinding};

/// How to fit one nuisance surface.
#[derive(Clone)]
pub enum SurfaceRecipe {
    /// Super-learner on the natural features; for binary targets the GLM
    /// battery member runs as logistic regression.
    Sl(SuperLearnerSpec),
    /// Least squares (linear probability for binary targets) on derived
    /// columns; `Arm` resolves to the exposure value, which makes this a
    /// single-model surface across arms.
    LinearDerived(Vec<ColumnExpr>),
    /// Exact lookup keyed by the bit patterns of the natural feature vector.
    Oracle(Arc<BTreeMap<Vec<u64>, f64>>),
    /// Fixed function of the natural feature vector (no fitting at all);
    /// oracle injection for continuous data.
    Func(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for SurfaceRecipe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SurfaceRecipe::Sl(spec) => f.debug_tuple("Sl").field(spec).finish(),
            SurfaceRecipe::LinearDerived(cols) => {
                f.debug_tuple("LinearDerived").field(cols).finish()
            }
            SurfaceRecipe::Oracle(t) => write!(f, "Oracle({} entries)", t.len()),
            SurfaceRecipe::Func(_) => write!(f, "Func"),
        }
    }
}

/// Derived regressor, resolved against dataset columns by name.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnExpr {
    Raw(String),
    Square(String),
    /// `(x - c)^2`
    CenteredSquare(String, f64),
    /// `|x - c|`
    AbsCentered(String, f64),
    /// The exposure value (or its override during arm evaluation).
    Arm,
    /// `A * x`
    ArmTimes(String),
}

impl ColumnExpr {
    fn eval(&self, ds: &Dataset, i: usize, arm: f64) -> Result<f64, EstimateError> {
        let col = |name: &str| {
            ds.covariate(name)
                .ok_or_else(|| EstimateError::MissingColumn(name.to_string()))
        };
        Ok(match self {
            ColumnExpr::Raw(n) => col(n)?[i],
            ColumnExpr::Square(n) => col(n)?[i] * col(n)?[i],
            ColumnExpr::CenteredSquare(n, c) => {
                let v = col(n)?[i] - c;
                v * v
            }
            ColumnExpr::AbsCentered(n, c) => (col(n)?[i] - c).abs(),
            ColumnExpr::Arm => arm,
            ColumnExpr::ArmTimes(n) => arm * col(n)?[i],
        })
    }

    fn label(&self) -> String {
        match self {
            ColumnExpr::Raw(n) => n.clone(),
            ColumnExpr::Square(n) => format!("{n}^2"),
            ColumnExpr::CenteredSquare(n, c) => format!("({n}-{c})^2"),
            ColumnExpr::AbsCentered(n, c) => format!("|{n}-{c}|"),
            ColumnExpr::Arm => "A".into(),
            ColumnExpr::ArmTimes(n) => format!("A*{n}"),
        }
    }
}

/// Which natural feature vector a surface consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `[W...]`
    W,
    /// `[W..., A, Z...]`
    Waz,
    /// `[W..., A]`
    WArm,
}

/// Shared evaluation context: the dataset with the pair's W/Z columns
/// resolved.
pub(super) struct Ctx<'a> {
    pub ds: &'a Dataset,
    w: Vec<&'a [f64]>,
    z: Vec<&'a [f64]>,
}

impl<'a> Ctx<'a> {
    pub fn new(ds: &'a Dataset, binding: &PairBinding) -> Self {
        Self {
            w: binding.w_cols(ds),
            z: binding.z_cols(ds),
            ds,
        }
    }

    pub fn row(
        &self,
        layout: Layout,
        i: usize,
        arm: Option<u8>,
        z_override: Option<&[f64]>,
    ) -> Vec<f64> {
        let arm_val = arm.map_or_else(|| self.ds.a()[i] as f64, f64::from);
        let mut out: Vec<f64> = self.w.iter().map(|c| c[i]).collect();
        match layout {
            Layout::W => {}
            Layout::WArm => out.push(arm_val),
            Layout::Waz => {
                out.push(arm_val);
                match z_override {
                    Some(z) => out.extend_from_slice(z),
                    None => out.extend(self.z.iter().map(|c| c[i])),
                }
            }
        }
        out
    }
}

/// A fitted nuisance surface.
#[derive(Clone)]
pub enum Surface {
    Single { model: Model, layout: Layout },
    /// Per-arm models over the W features (the T-learner form of `Q2`).
    PerArm { models: Box<[Model; 2]> },
    Derived { model: Model, cols: Vec<ColumnExpr> },
    Lookup {
        table: Arc<BTreeMap<Vec<u64>, f64>>,
        layout: Layout,
    },
    Func {
        f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        layout: Layout,
    },
}

impl Surface {
    /// Evaluate at row `i`, optionally overriding the exposure arm and the
    /// separator values.
    pub(super) fn value(
        &self,
        ctx: &Ctx,
        i: usize,
        arm: Option<u8>,
        z_override: Option<&[f64]>,
    ) -> Result<f64, EstimateError> {
        match self {
            Surface::Single { model, layout } => {
                Ok(model.predict(&ctx.row(*layout, i, arm, z_override)))
            }
            Surface::PerArm { models } => {
                let a = arm.map_or(ctx.ds.a()[i], |v| v);
                Ok(models[a as usize].predict(&ctx.row(Layout::W, i, None, None)))
            }
            Surface::Derived { model, cols } => {
                let arm_val = arm.map_or_else(|| ctx.ds.a()[i] as f64, f64::from);
                let feats = cols
                    .iter()
                    .map(|c| c.eval(ctx.ds, i, arm_val))
                    .collect::<Result<Vec<f64>, _>>()?;
                Ok(model.predict(&feats))
            }
            Surface::Lookup { table, layout } => {
                let key: Vec<u64> = ctx
                    .row(*layout, i, arm, z_override)
                    .iter()
                    .map(|v| v.to_bits())
                    .collect();
                table.get(&key).copied().ok_or(EstimateError::OracleMiss)
            }
            Surface::Func { f, layout } => Ok(f(&ctx.row(*layout, i, arm, z_override))),
        }
    }
}

impl std::fmt::Debug for Surface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Surface::Single { model, layout } => f
                .debug_struct("Single")
                .field("model", model)
                .field("layout", layout)
                .finish(),
            Surface::PerArm { models } => {
                f.debug_struct("PerArm").field("models", models).finish()
            }
            Surface::Derived { model, cols } => f
                .debug_struct("Derived")
                .field("model", model)
                .field("cols", cols)
                .finish(),
            Surface::Lookup { table, layout } => write!(
                f,
                "Lookup {{ entries: {}, layout: {layout:?} }}",
                table.len()
            ),
            Surface::Func { layout, .. } => write!(f, "Func {{ layout: {layout:?} }}"),
        }
    }
}

/// Per-surface recipes for the four nuisances.
#[derive(Debug, Clone)]
pub struct NuisancePlan {
    pub pi_a: SurfaceRecipe,
    pub pi_r: SurfaceRecipe,
    pub q1: SurfaceRecipe,
    pub q2: SurfaceRecipe,
}

impl NuisancePlan {
    pub fn super_learner(spec: &SuperLearnerSpec) -> Self {
        Self {
            pi_a: SurfaceRecipe::Sl(spec.clone()),
            pi_r: SurfaceRecipe::Sl(spec.clone()),
            q1: SurfaceRecipe::Sl(spec.clone()),
            q2: SurfaceRecipe::Sl(spec.clone()),
        }
    }
}

/// Swap the GLM member to its logistic form for binary targets.
fn binary_battery(spec: &SuperLearnerSpec) -> SuperLearnerSpec {
    let mut spec = spec.clone();
    for learner in &mut spec.battery {
        if *learner == Learner::Linear {
            *learner = Learner::Logistic;
        }
    }
    spec
}

/// Fit one surface on the given rows. `targets` aligns with `rows`.
/// Degenerate binary targets (all one class) fall back to the mean learner
/// with a warning instead of failing.
pub(super) fn fit_surface(
    recipe: &SurfaceRecipe,
    ctx: &Ctx,
    layout: Layout,
    rows: &[usize],
    targets: &[f64],
    binary: bool,
    seed_tag: &str,
    warnings: &mut Vec<String>,
) -> Result<Surface, EstimateError> {
    match recipe {
        SurfaceRecipe::Oracle(table) => Ok(Surface::Lookup {
            table: table.clone(),
            layout,
        }),
        SurfaceRecipe::Func(f) => Ok(Surface::Func {
            f: f.clone(),
            layout,
        }),
        SurfaceRecipe::LinearDerived(cols) => {
            let mut feature_cols: Vec<Vec<f64>> = vec![Vec::with_capacity(rows.len()); cols.len()];
            for &i in rows {
                let arm = ctx.ds.a()[i] as f64;
                for (slot, c) in feature_cols.iter_mut().zip(cols) {
                    slot.push(c.eval(ctx.ds, i, arm)?);
                }
            }
            let names = cols.iter().map(ColumnExpr::label).collect();
            let d = DesignMatrix::new(names, feature_cols, targets.to_vec())?;
            let model = crate::learners::fit_linear(&d)?;
            Ok(Surface::Derived {
                model,
                cols: cols.clone(),
            })
        }
        SurfaceRecipe::Sl(spec) => {
            if binary && targets.iter().all(|&t| t == targets[0]) {
                warnings.push(format!(
                    "{seed_tag}: constant binary target, mean fallback"
                ));
                let d = DesignMatrix::new(vec![], vec![], targets.to_vec())?;
                return Ok(Surface::Single {
                    model: fit(Learner::Mean, &d)?,
                    layout,
                });
            }
            let spec = if binary {
                binary_battery(spec)
            } else {
                spec.clone()
            };
            let spec = spec.with_seed(derive_seed(spec.seed, seed_tag, 0));
            let d = design_for(ctx, layout, rows, targets)?;
            let model = match fit_super_learner(&d, &spec) {
                Ok(m) => m,
                Err(e) => {
                    // Tiny or degenerate strata: fall back to the mean.
                    warnings.push(format!("{seed_tag}: {e}; mean fallback"));
                    fit(Learner::Mean, &d)?
                }
            };
            if let Model::Ensemble { dropped, .. } = &model {
                for (l, reason) in dropped {
                    warnings.push(format!("{seed_tag}: dropped {}: {reason}", l.label()));
                }
            }
            Ok(Surface::Single { model, layout })
        }
    }
}

fn design_for(
    ctx: &Ctx,
    layout: Layout,
    rows: &[usize],
    targets: &[f64],
) -> Result<DesignMatrix, EstimateError> {
    let sample_row = ctx.row(layout, 0, None, None);
    let p = sample_row.len();
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(rows.len()); p];
    for &i in rows {
        let row = ctx.row(layout, i, None, None);
        for (slot, v) in cols.iter_mut().zip(row) {
            slot.push(v);
        }
    }
    let names = (0..p).map(|j| format!("f{j}")).collect();
    Ok(DesignMatrix::new(names, cols, targets.to_vec())?)
}

/// Fit the `Q2` meta-regression of arm-specific pseudo-outcomes on W. The
/// super-learner recipe runs as a T-learner (one fit per arm); derived and
/// oracle recipes are single arm-aware surfaces.
pub(super) fn fit_q2(
    recipe: &SurfaceRecipe,
    ctx: &Ctx,
    rows: &[usize],
    pseudo: &[f64],
    seed_tag: &str,
    warnings: &mut Vec<String>,
) -> Result<Surface, EstimateError> {
    match recipe {
        SurfaceRecipe::Oracle(table) => Ok(Surface::Lookup {
            table: table.clone(),
            layout: Layout::WArm,
        }),
        SurfaceRecipe::Func(f) => Ok(Surface::Func {
            f: f.clone(),
            layout: Layout::WArm,
        }),
        SurfaceRecipe::LinearDerived(_) => fit_surface(
            recipe, ctx, Layout::WArm, rows, pseudo, false, seed_tag, warnings,
        ),
        SurfaceRecipe::Sl(_) => {
            let mut models: Vec<Model> = Vec::with_capacity(2);
            for arm in 0..2u8 {
                let (arm_rows, arm_targets): (Vec<usize>, Vec<f64>) = rows
                    .iter()
                    .zip(pseudo)
                    .filter(|(&i, _)| ctx.ds.a()[i] == arm)
                    .map(|(&i, &t)| (i, t))
                    .unzip();
                if arm_rows.is_empty() {
                    return Err(EstimateError::SingleArm);
                }
                let tag = format!("{seed_tag}.arm{arm}");
                let s = fit_surface(
                    recipe,
                    ctx,
                    Layout::W,
                    &arm_rows,
                    &arm_targets,
                    false,
                    &tag,
                    warnings,
                )?;
                match s {
                    Surface::Single { model, .. } => models.push(model),
                    _ => unreachable!("Sl recipe yields a learned model"),
                }
            }
            Ok(Surface::PerArm {
                models: Box::new([models.remove(0), models.remove(0)]),
            })
        }
    }
}

/// Clip a propensity into `[eps, 1 - eps]`, counting clips.
pub(super) fn truncate(p: f64, eps: f64, count: &mut usize) -> f64 {
    if p < eps {
        *count += 1;
        eps
    } else if p > 1.0 - eps {
        *count += 1;
        1.0 - eps
    } else {
        p
    }
}

/// Fitted nuisance set: exposure and selection propensities plus the
/// mean-imputation surface (and optionally the meta-regression surface).
/// Propensity accessors truncate to `[eps_trunc, 1 - eps_trunc]`.
#[derive(Debug)]
pub struct NuisanceSet {
    pub(super) binding: PairBinding,
    pub pi_a: Surface,
    pub pi_r: Surface,
    pub q1: Surface,
    pub q2: Option<Surface>,
    pub eps_trunc: f64,
    pub n_selected: usize,
    pub warnings: Vec<String>,
}

impl NuisanceSet {
    pub fn pi_a_at(&self, ds: &Dataset, i: usize) -> Result<f64, EstimateError> {
        let ctx = Ctx::new(ds, &self.binding);
        let mut scratch = 0;
        Ok(truncate(
            self.pi_a.value(&ctx, i, None, None)?,
            self.eps_trunc,
            &mut scratch,
        ))
    }

    pub fn pi_r_at(&self, ds: &Dataset, i: usize) -> Result<f64, EstimateError> {
        let ctx = Ctx::new(ds, &self.binding);
        let mut scratch = 0;
        Ok(truncate(
            self.pi_r.value(&ctx, i, None, None)?,
            self.eps_trunc,
            &mut scratch,
        ))
    }

    pub fn q1_at(&self, ds: &Dataset, i: usize) -> Result<f64, EstimateError> {
        let ctx = Ctx::new(ds, &self.binding);
        self.q1.value(&ctx, i, None, None)
    }
}

/// Fit the nuisance set with the default super-learner plan: `Q1` on the
/// selected rows against `(W, A, Z)`, the exposure propensity on all rows
/// against `W`, the selection propensity on all rows against `(W, A, Z)`.
pub fn fit_nuisance(
    data: &Dataset,
    pair: &AdmissiblePair,
    spec: &SuperLearnerSpec,
    eps_trunc: f64,
) -> Result<NuisanceSet, EstimateError> {
    fit_nuisance_with(data, pair, &NuisancePlan::super_learner(spec), eps_trunc)
}

/// As [`fit_nuisance`] with explicit per-surface recipes.
pub fn fit_nuisance_with(
    data: &Dataset,
    pair: &AdmissiblePair,
    plan: &NuisancePlan,
    eps_trunc: f64,
) -> Result<NuisanceSet, EstimateError> {
    if !data.both_arms_present() {
        return Err(EstimateError::SingleArm);
    }
    let binding = data.bind_pair(pair)?;
    let ctx = Ctx::new(data, &binding);
    let all: Vec<usize> = (0..data.n()).collect();
    let selected: Vec<usize> = all.iter().copied().filter(|&i| data.r()[i] == 1).collect();
    if selected.is_empty() {
        return Err(EstimateError::EmptySelected);
    }
    let mut warnings = Vec::new();

    let a_targets: Vec<f64> = data.a().iter().map(|&a| a as f64).collect();
    let r_targets: Vec<f64> = data.r().iter().map(|&r| r as f64).collect();
    let y_targets: Vec<f64> = selected
        .iter()
        .map(|&i| data.y()[i].expect("selected rows carry outcomes"))
        .collect();

    let pi_a = fit_surface(
        &plan.pi_a,
        &ctx,
        Layout::W,
        &all,
        &a_targets,
        true,
        "pi_a",
        &mut warnings,
    )?;
    let pi_r = fit_surface(
        &plan.pi_r,
        &ctx,
        Layout::Waz,
        &all,
        &r_targets,
        true,
        "pi_r",
        &mut warnings,
    )?;
    let q1 = fit_surface(
        &plan.q1,
        &ctx,
        Layout::Waz,
        &selected,
        &y_targets,
        false,
        "q1",
        &mut warnings,
    )?;

    Ok(NuisanceSet {
        binding,
        pi_a,
        pi_r,
        q1,
        q2: None,
        eps_trunc,
        n_selected: selected.len(),
        warnings,
    })
}
