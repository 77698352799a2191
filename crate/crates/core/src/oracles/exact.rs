//! Exact observed-data distributions over the configurations of
//! `(covariates, A, R, Y)` with the outcome collapsed when unselected, and
//! the exact functionals computed from them: the s-formula, the influence
//! function and its moment, robust estimating-equation residuals, and
//! linearity residuals.

use std::collections::BTreeMap;

use crate::estimators::Dataset;
use crate::mgraph::AdmissiblePair;
use crate::numeric::Kahan;

use super::scm::{DiscreteScm, ScmRole};
use super::OracleError;

/// Sentinel state index for a masked outcome (selection = 0).
pub const Y_MISSING: u8 = u8::MAX;

#[derive(Debug, Clone)]
pub struct ObsVar {
    pub name: String,
    pub role: ScmRole,
    pub states: Vec<f64>,
}

/// Joint pmf over observed configurations. Configurations are state-index
/// vectors aligned with `vars`; the outcome slot holds [`Y_MISSING`] when
/// the selection indicator is 0.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    vars: Vec<ObsVar>,
    a_idx: usize,
    r_idx: usize,
    y_idx: usize,
    pmf: BTreeMap<Vec<u8>, f64>,
}

impl ExactDistribution {
    /// Marginalize the latent variables of an SCM onto the observed space.
    pub fn from_scm(scm: &DiscreteScm) -> Self {
        let observed: Vec<usize> = (0..scm.vars().len())
            .filter(|&i| scm.vars()[i].role != ScmRole::Latent)
            .collect();
        let vars: Vec<ObsVar> = observed
            .iter()
            .map(|&i| ObsVar {
                name: scm.vars()[i].name.clone(),
                role: scm.vars()[i].role,
                states: scm.vars()[i].states.clone(),
            })
            .collect();
        let find = |role: ScmRole| {
            vars.iter()
                .position(|v| v.role == role)
                .expect("validated SCM")
        };
        let (a_idx, r_idx, y_idx) = (
            find(ScmRole::Exposure),
            find(ScmRole::Selection),
            find(ScmRole::Outcome),
        );
        let mut acc: BTreeMap<Vec<u8>, Kahan> = BTreeMap::new();
        for config in scm.configs() {
            let p = scm.joint_prob(&config);
            if p == 0.0 {
                continue;
            }
            let mut key: Vec<u8> = observed.iter().map(|&i| config[i]).collect();
            if key[r_idx] == 0 {
                key[y_idx] = Y_MISSING;
            }
            acc.entry(key).or_default().add(p);
        }
        let pmf = acc.into_iter().map(|(k, v)| (k, v.value())).collect();
        Self {
            vars,
            a_idx,
            r_idx,
            y_idx,
            pmf,
        }
    }

    pub fn vars(&self) -> &[ObsVar] {
        &self.vars
    }

    pub fn a_index(&self) -> usize {
        self.a_idx
    }

    pub fn r_index(&self) -> usize {
        self.r_idx
    }

    pub fn y_index(&self) -> usize {
        self.y_idx
    }

    pub fn pmf(&self) -> &BTreeMap<Vec<u8>, f64> {
        &self.pmf
    }

    pub fn total_mass(&self) -> f64 {
        let mut k = Kahan::new();
        for &p in self.pmf.values() {
            k.add(p);
        }
        k.value()
    }

    pub fn var_index(&self, name: &str) -> Result<usize, OracleError> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| OracleError::UnknownVariable(name.to_string()))
    }

    fn resolve_pair(&self, pair: &AdmissiblePair) -> Result<(Vec<usize>, Vec<usize>), OracleError> {
        let ids = |names: Vec<String>| -> Result<Vec<usize>, OracleError> {
            names.iter().map(|n| self.var_index(n)).collect()
        };
        Ok((ids(pair.w.names())?, ids(pair.z.names())?))
    }

    /// Outcome value of a configuration, when selected.
    pub fn y_value(&self, config: &[u8]) -> Option<f64> {
        let s = config[self.y_idx];
        (s != Y_MISSING).then(|| self.vars[self.y_idx].states[s as usize])
    }

    /// Point-mass contamination `(1 - eps) P + eps delta_config`.
    pub fn contaminate(&self, config: &[u8], eps: f64) -> Self {
        let mut out = self.clone();
        for p in out.pmf.values_mut() {
            *p *= 1.0 - eps;
        }
        *out.pmf.entry(config.to_vec()).or_insert(0.0) += eps;
        out
    }

    /// Expand into a dataset reproducing the pmf exactly; every mass must be
    /// an integer multiple of `1/n`.
    pub fn population_dataset(&self, n: usize) -> Result<Dataset, OracleError> {
        let cov_ids: Vec<usize> = (0..self.vars.len())
            .filter(|&i| self.vars[i].role == ScmRole::Covariate)
            .collect();
        let mut cols: Vec<(String, Vec<f64>)> = cov_ids
            .iter()
            .map(|&i| (self.vars[i].name.clone(), Vec::new()))
            .collect();
        let mut a = Vec::new();
        let mut r = Vec::new();
        let mut y = Vec::new();
        for (config, &p) in &self.pmf {
            let count_f = p * n as f64;
            let count = count_f.round();
            if (count_f - count).abs() > 1e-6 {
                return Err(OracleError::NotPopulation { mass: p, n });
            }
            for _ in 0..count as usize {
                for (slot, &i) in cols.iter_mut().zip(&cov_ids) {
                    slot.1.push(self.vars[i].states[config[i] as usize]);
                }
                a.push(config[self.a_idx]);
                r.push(config[self.r_idx]);
                y.push(self.y_value(config));
            }
        }
        Dataset::new(cols, a, r, y)
            .map_err(|e| OracleError::Json(format!("population dataset: {e}")))
    }
}

type WKey = Vec<u8>;
type WaKey = (Vec<u8>, u8);
type WazKey = (Vec<u8>, u8, Vec<u8>);

/// Exact nuisance surfaces and the s-formula value for one adjustment pair.
#[derive(Debug, Clone)]
pub struct ExactSurfaces {
    w_ids: Vec<usize>,
    z_ids: Vec<usize>,
    a_idx: usize,
    r_idx: usize,
    pub p_w: BTreeMap<WKey, f64>,
    pub p_wa: BTreeMap<WaKey, f64>,
    pub p_waz: BTreeMap<WazKey, f64>,
    pub pi_a: BTreeMap<WKey, f64>,
    pub pi_r: BTreeMap<WazKey, f64>,
    pub q1: BTreeMap<WazKey, f64>,
    pub q2: BTreeMap<WaKey, f64>,
    psi: f64,
}

impl ExactSurfaces {
    pub fn new(p: &ExactDistribution, pair: &AdmissiblePair) -> Result<Self, OracleError> {
        let (w_ids, z_ids) = p.resolve_pair(pair)?;
        let key = |config: &[u8], ids: &[usize]| -> Vec<u8> {
            ids.iter().map(|&i| config[i]).collect()
        };

        let mut p_w: BTreeMap<WKey, Kahan> = BTreeMap::new();
        let mut p_wa: BTreeMap<WaKey, Kahan> = BTreeMap::new();
        let mut p_waz: BTreeMap<WazKey, Kahan> = BTreeMap::new();
        let mut r1_mass: BTreeMap<WazKey, Kahan> = BTreeMap::new();
        let mut r1_ysum: BTreeMap<WazKey, Kahan> = BTreeMap::new();

        for (config, &mass) in &p.pmf {
            let w = key(config, &w_ids);
            let a = config[p.a_idx];
            let z = key(config, &z_ids);
            p_w.entry(w.clone()).or_default().add(mass);
            p_wa.entry((w.clone(), a)).or_default().add(mass);
            p_waz
                .entry((w.clone(), a, z.clone()))
                .or_default()
                .add(mass);
            if config[p.r_idx] == 1 {
                let y = p.y_value(config).expect("selected rows carry outcomes");
                r1_mass.entry((w.clone(), a, z.clone())).or_default().add(mass);
                r1_ysum.entry((w, a, z)).or_default().add(mass * y);
            }
        }

        let p_w: BTreeMap<WKey, f64> = p_w.into_iter().map(|(k, v)| (k, v.value())).collect();
        let p_wa: BTreeMap<WaKey, f64> = p_wa.into_iter().map(|(k, v)| (k, v.value())).collect();
        let p_waz: BTreeMap<WazKey, f64> =
            p_waz.into_iter().map(|(k, v)| (k, v.value())).collect();

        let mut pi_a = BTreeMap::new();
        for (w, &pw) in &p_w {
            let p1 = p_wa.get(&(w.clone(), 1)).copied().unwrap_or(0.0);
            let p0 = p_wa.get(&(w.clone(), 0)).copied().unwrap_or(0.0);
            if p1 <= 0.0 || p0 <= 0.0 {
                return Err(OracleError::Positivity(format!(
                    "exposure propensity degenerate at W-stratum {w:?}"
                )));
            }
            pi_a.insert(w.clone(), p1 / pw);
        }

        let mut pi_r = BTreeMap::new();
        let mut q1 = BTreeMap::new();
        for (kwaz, &mass) in &p_waz {
            let r1 = r1_mass.get(kwaz).map(Kahan::value).unwrap_or(0.0);
            if r1 <= 0.0 {
                return Err(OracleError::Positivity(format!(
                    "selection propensity zero at stratum {kwaz:?}"
                )));
            }
            pi_r.insert(kwaz.clone(), r1 / mass);
            let ysum = r1_ysum.get(kwaz).map(Kahan::value).unwrap_or(0.0);
            q1.insert(kwaz.clone(), ysum / r1);
        }

        let mut q2 = BTreeMap::new();
        for (w, _) in &p_w {
            for a in 0..2u8 {
                let pwa = p_wa[&(w.clone(), a)];
                let mut acc = Kahan::new();
                for ((kw, ka, kz), &mass) in
                    p_waz.range((w.clone(), a, Vec::new())..=(w.clone(), a, vec![u8::MAX; 8]))
                {
                    debug_assert!(kw == w && *ka == a);
                    acc.add(mass / pwa * q1[&(kw.clone(), *ka, kz.clone())]);
                }
                q2.insert((w.clone(), a), acc.value());
            }
        }

        let mut psi = Kahan::new();
        for (w, &pw) in &p_w {
            psi.add(pw * (q2[&(w.clone(), 1)] - q2[&(w.clone(), 0)]));
        }

        Ok(Self {
            w_ids,
            z_ids,
            a_idx: p.a_idx,
            r_idx: p.r_idx,
            psi: psi.value(),
            p_w,
            p_wa,
            p_waz,
            pi_a,
            pi_r,
            q1,
            q2,
        })
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn w_key(&self, config: &[u8]) -> Vec<u8> {
        self.w_ids.iter().map(|&i| config[i]).collect()
    }

    pub fn z_key(&self, config: &[u8]) -> Vec<u8> {
        self.z_ids.iter().map(|&i| config[i]).collect()
    }

    pub fn dq2(&self, w: &[u8]) -> f64 {
        self.q2[&(w.to_vec(), 1)] - self.q2[&(w.to_vec(), 0)]
    }

    /// Influence function at one observed configuration.
    pub fn eif(&self, p: &ExactDistribution, config: &[u8]) -> f64 {
        self.eif_with(p, config, &PutativeSurfaces::default(), self.psi)
    }

    /// Influence-function expression with selected surfaces replaced and the
    /// centering value supplied explicitly.
    pub fn eif_with(
        &self,
        p: &ExactDistribution,
        config: &[u8],
        putative: &PutativeSurfaces,
        psi: f64,
    ) -> f64 {
        let w = self.w_key(config);
        let z = self.z_key(config);
        let a = config[self.a_idx];
        let a_f = a as f64;
        let waz = (w.clone(), a, z);
        let wa = (w.clone(), a);

        let pia = putative
            .pi_a
            .as_ref()
            .map_or_else(|| self.pi_a[&w], |m| m[&w]);
        let pir = putative
            .pi_r
            .as_ref()
            .map_or_else(|| self.pi_r[&waz], |m| m[&waz]);
        let q1 = putative
            .q1
            .as_ref()
            .map_or_else(|| self.q1[&waz], |m| m[&waz]);
        let q2_at = |key: &WaKey| -> f64 {
            putative
                .q2
                .as_ref()
                .map_or_else(|| self.q2[key], |m| m[key])
        };

        let h2 = (a_f - pia) / (pia * (1.0 - pia));
        let term1 = match (config[self.r_idx], p.y_value(config)) {
            (1, Some(y)) => h2 / pir * (y - q1),
            _ => 0.0,
        };
        let term2 = h2 * (q1 - q2_at(&wa));
        let dq2 = q2_at(&(w.clone(), 1)) - q2_at(&(w, 0));
        term1 + term2 + dq2 - psi
    }

    /// Moment `E_P D(O)` of the influence-function expression under `P`.
    pub fn moment(&self, p: &ExactDistribution, putative: &PutativeSurfaces, psi: f64) -> f64 {
        let mut acc = Kahan::new();
        for (config, &mass) in &p.pmf {
            acc.add(mass * self.eif_with(p, config, putative, psi));
        }
        acc.value()
    }

    /// s-formula value with an alternative mean-imputation surface.
    pub fn psi_with_q1(&self, q1: &BTreeMap<WazKey, f64>) -> f64 {
        let mut psi = Kahan::new();
        for (w, &pw) in &self.p_w {
            let mut arms = [0.0, 0.0];
            for a in 0..2u8 {
                let pwa = self.p_wa[&(w.clone(), a)];
                let mut acc = Kahan::new();
                for (kwaz, &mass) in self
                    .p_waz
                    .range((w.clone(), a, Vec::new())..=(w.clone(), a, vec![u8::MAX; 8]))
                {
                    acc.add(mass / pwa * q1[kwaz]);
                }
                arms[a as usize] = acc.value();
            }
            psi.add(pw * (arms[1] - arms[0]));
        }
        psi.value()
    }

    /// s-formula value with an alternative separator conditional and the
    /// true mean-imputation surface.
    pub fn psi_with_zdist(&self, zdist: &ZConditional) -> f64 {
        let mut psi = Kahan::new();
        for (w, &pw) in &self.p_w {
            let mut arms = [0.0, 0.0];
            for a in 0..2u8 {
                let table = &zdist[&(w.clone(), a)];
                let mut acc = Kahan::new();
                for (z, &pz) in table {
                    acc.add(pz * self.q1[&(w.clone(), a, z.clone())]);
                }
                arms[a as usize] = acc.value();
            }
            psi.add(pw * (arms[1] - arms[0]));
        }
        psi.value()
    }

    /// True separator conditional `P(Z | W, A)` as an explicit table.
    pub fn z_conditional(&self) -> ZConditional {
        let mut out: ZConditional = BTreeMap::new();
        for ((w, a, z), &mass) in &self.p_waz {
            let pwa = self.p_wa[&(w.clone(), *a)];
            out.entry((w.clone(), *a))
                .or_default()
                .insert(z.clone(), mass / pwa);
        }
        out
    }

    /// Value-keyed lookup closures, for injecting oracle nuisances into the
    /// sampling estimators. Keys follow the estimator feature layouts:
    /// `[W...]` for the exposure propensity, `[W..., A, Z...]` for the
    /// selection propensity and the mean-imputation surface, `[W..., A]`
    /// for the meta-regression surface.
    pub fn value_tables(&self, p: &ExactDistribution) -> OracleTables {
        let val = |ids: &[usize], key: &[u8]| -> Vec<u64> {
            ids.iter()
                .zip(key)
                .map(|(&i, &s)| p.vars[i].states[s as usize].to_bits())
                .collect()
        };
        let mut pi_a = BTreeMap::new();
        for (w, &v) in &self.pi_a {
            pi_a.insert(val(&self.w_ids, w), v);
        }
        let mut pi_r = BTreeMap::new();
        let mut q1 = BTreeMap::new();
        for ((w, a, z), &v) in &self.pi_r {
            let mut k = val(&self.w_ids, w);
            k.push((*a as f64).to_bits());
            k.extend(val(&self.z_ids, z));
            pi_r.insert(k.clone(), v);
            q1.insert(k, self.q1[&(w.clone(), *a, z.clone())]);
        }
        let mut q2 = BTreeMap::new();
        for ((w, a), &v) in &self.q2 {
            let mut k = val(&self.w_ids, w);
            k.push((*a as f64).to_bits());
            q2.insert(k, v);
        }
        OracleTables {
            pi_a,
            pi_r,
            q1,
            q2,
        }
    }

    /// Additively shifted copy of the mean-imputation surface.
    pub fn perturbed_q1(&self, stream: &mut crate::rng::Stream, scale: f64) -> BTreeMap<WazKey, f64> {
        self.q1
            .iter()
            .map(|(k, &v)| (k.clone(), v + scale * stream.normal()))
            .collect()
    }

    /// Additively shifted copy of the meta-regression surface.
    pub fn perturbed_q2(&self, stream: &mut crate::rng::Stream, scale: f64) -> BTreeMap<WaKey, f64> {
        self.q2
            .iter()
            .map(|(k, &v)| (k.clone(), v + scale * stream.normal()))
            .collect()
    }

    /// Logit-shifted copy of the exposure propensity, truncated to
    /// `[trunc, 1 - trunc]`.
    pub fn perturbed_pi_a(
        &self,
        stream: &mut crate::rng::Stream,
        scale: f64,
        trunc: f64,
    ) -> BTreeMap<WKey, f64> {
        self.pi_a
            .iter()
            .map(|(k, &v)| (k.clone(), logit_shift(v, scale * stream.normal(), trunc)))
            .collect()
    }

    /// Logit-shifted copy of the selection propensity.
    pub fn perturbed_pi_r(
        &self,
        stream: &mut crate::rng::Stream,
        scale: f64,
        trunc: f64,
    ) -> BTreeMap<WazKey, f64> {
        self.pi_r
            .iter()
            .map(|(k, &v)| (k.clone(), logit_shift(v, scale * stream.normal(), trunc)))
            .collect()
    }

    /// Random mean-zero surface over the same support as the
    /// mean-imputation surface.
    pub fn random_q1_like(&self, stream: &mut crate::rng::Stream, scale: f64) -> BTreeMap<WazKey, f64> {
        self.q1
            .iter()
            .map(|(k, _)| (k.clone(), scale * stream.normal()))
            .collect()
    }

    /// Random strictly positive conditional over the observed separator
    /// support per `(W, A)` stratum.
    pub fn random_zdist_like(&self, stream: &mut crate::rng::Stream) -> ZConditional {
        let mut out: ZConditional = BTreeMap::new();
        for ((w, a, z), _) in &self.p_waz {
            out.entry((w.clone(), *a))
                .or_default()
                .insert(z.clone(), 0.2 + stream.uniform());
        }
        for table in out.values_mut() {
            let total: f64 = table.values().sum();
            for v in table.values_mut() {
                *v /= total;
            }
        }
        out
    }
}

fn logit_shift(p: f64, shift: f64, trunc: f64) -> f64 {
    let logit = (p / (1.0 - p)).ln() + shift;
    let v = 1.0 / (1.0 + (-logit).exp());
    v.clamp(trunc, 1.0 - trunc)
}

/// Conditional pmf of the separator configuration per `(W, A)` stratum.
pub type ZConditional = BTreeMap<WaKey, BTreeMap<Vec<u8>, f64>>;

/// Value-keyed oracle surfaces for estimator injection.
#[derive(Debug, Clone)]
pub struct OracleTables {
    pub pi_a: BTreeMap<Vec<u64>, f64>,
    pub pi_r: BTreeMap<Vec<u64>, f64>,
    pub q1: BTreeMap<Vec<u64>, f64>,
    pub q2: BTreeMap<Vec<u64>, f64>,
}

/// Selected surface replacements for the robust-estimating-equation checks;
/// `None` means use the true surface.
#[derive(Debug, Clone, Default)]
pub struct PutativeSurfaces {
    pub q1: Option<BTreeMap<WazKey, f64>>,
    pub q2: Option<BTreeMap<WaKey, f64>>,
    pub pi_a: Option<BTreeMap<WKey, f64>>,
    pub pi_r: Option<BTreeMap<WazKey, f64>>,
}

/// Exact s-formula `E_W Δ_a E_{Z|W,A=a} E[Y | W, A=a, Z, R=1]`. The empty-Z
/// branch reduces to `E_W Δ_a E[Y | W, A=a, R=1]` through the same sums.
pub fn exact_s_formula(p: &ExactDistribution, pair: &AdmissiblePair) -> Result<f64, OracleError> {
    Ok(ExactSurfaces::new(p, pair)?.psi())
}

/// Exact influence-function value at one observed configuration.
pub fn exact_eif(
    p: &ExactDistribution,
    pair: &AdmissiblePair,
    config: &[u8],
) -> Result<f64, OracleError> {
    Ok(ExactSurfaces::new(p, pair)?.eif(p, config))
}

/// Exact mean of the estimating-equation expression with the given putative
/// surfaces and the true psi.
pub fn robustness_residual(
    p: &ExactDistribution,
    pair: &AdmissiblePair,
    putative: &PutativeSurfaces,
    psi_true: f64,
) -> Result<f64, OracleError> {
    Ok(ExactSurfaces::new(p, pair)?.moment(p, putative, psi_true))
}

/// `Ψ` at a convex mixture of two mean-imputation surfaces minus the mixture
/// of `Ψ` values. Zero up to rounding: the functional is linear in the
/// surface under shared `P_W` and `P_{Z|W,A}`.
pub fn linearity_residual_q1(
    p: &ExactDistribution,
    pair: &AdmissiblePair,
    q1_a: &BTreeMap<WazKey, f64>,
    q1_b: &BTreeMap<WazKey, f64>,
    alpha: f64,
) -> Result<f64, OracleError> {
    let s = ExactSurfaces::new(p, pair)?;
    let mix: BTreeMap<WazKey, f64> = q1_a
        .iter()
        .map(|(k, &va)| (k.clone(), alpha * va + (1.0 - alpha) * q1_b[k]))
        .collect();
    Ok(s.psi_with_q1(&mix) - (alpha * s.psi_with_q1(q1_a) + (1.0 - alpha) * s.psi_with_q1(q1_b)))
}

/// The separator-conditional analogue: `Ψ` is linear in `P(Z|W,A)` given the
/// mean-imputation surface.
pub fn linearity_residual_q2(
    p: &ExactDistribution,
    pair: &AdmissiblePair,
    zd_a: &ZConditional,
    zd_b: &ZConditional,
    alpha: f64,
) -> Result<f64, OracleError> {
    let s = ExactSurfaces::new(p, pair)?;
    let mut mix: ZConditional = BTreeMap::new();
    for (k, table_a) in zd_a {
        let table_b = &zd_b[k];
        let mixed = table_a
            .iter()
            .map(|(z, &va)| (z.clone(), alpha * va + (1.0 - alpha) * table_b[z]))
            .collect();
        mix.insert(k.clone(), mixed);
    }
    Ok(s.psi_with_zdist(&mix)
        - (alpha * s.psi_with_zdist(zd_a) + (1.0 - alpha) * s.psi_with_zdist(zd_b)))
}
