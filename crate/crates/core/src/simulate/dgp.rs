//! Benchmark data-generating processes.
//!
//! Setup one: a confounder `W1`, a probit exposure, two mediators `Z1`,
//! `Z2`, a noisy outcome, and a probit selection mechanism driven by the
//! mediators, with an intercept `theta` controlling the missingness rate
//! (-1.90 for about 50%, -0.90 for 25%, -0.30 for 15%).
//!
//! Setup two: a confounder `B1`, a latent `U1` entering the outcome and the
//! post-exposure proxy `C2`, plus an exposure-driven selection mechanism.
//! The structural equations declare noise laws for `C1`, `C2`, and `Y`
//! without placing them in the equations; each declared noise enters its
//! equation additively here, otherwise `C1` and `C2` would be degenerate
//! given their parents and positivity would fail.

use crate::estimators::Dataset;
use crate::mgraph::MGraph;
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Setup {
    One,
    Two,
}

impl Setup {
    pub fn label(self) -> &'static str {
        match self {
            Setup::One => "1",
            Setup::Two => "2",
        }
    }
}

/// `sign` with `sign(0) = 0`.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn indicator(x: f64) -> u8 {
    u8::from(x > 0.0)
}

#[derive(Debug, Clone, Copy)]
pub struct Setup1Params {
    pub theta: f64,
    /// Scales every exposure coefficient; 0 gives a null effect.
    pub effect_scale: f64,
}

impl Default for Setup1Params {
    fn default() -> Self {
        Self {
            theta: -1.90,
            effect_scale: 1.0,
        }
    }
}

struct Row1 {
    w1: f64,
    a: u8,
    z1: f64,
    z2: f64,
    y: f64,
    r: u8,
}

/// One draw from setup one; `a_do` forces the exposure (interventional
/// sampling shares all noises).
fn setup1_row(stream: &mut Stream, p: &Setup1Params, a_do: Option<u8>) -> Row1 {
    let s = p.effect_scale;
    let w1 = stream.normal();
    let u_a = stream.normal();
    let u_z1 = stream.normal();
    let u_z2 = stream.normal();
    let u_y = stream.normal_sd(7.0);
    let u_r = stream.normal();
    let a = a_do
        .unwrap_or_else(|| indicator(0.90 * w1 - 0.09 * sign(w1) * w1 * w1 + u_a));
    let d = s * (2.0 * a as f64 - 1.0);
    let z1 = -0.50 + s * a as f64 + u_z1;
    let base = 4.0 + 0.05 * d + 0.50 * z1 + 0.05 * d * z1 + u_z2;
    let z2 = 0.20 * base * base;
    let y = 3.00 * w1 + 1.50 * w1.abs().sqrt() - 0.25 * d + 0.50 * d * w1
        + 1.25 * z1
        + 0.25 * d * z1
        + z2
        + 0.50 * d * z2
        + u_y;
    let r = indicator(p.theta + 0.29 * z1 + 0.54 * z2 + u_r);
    Row1 {
        w1,
        a,
        z1,
        z2,
        y,
        r,
    }
}

/// i.i.d. sample from setup one with the outcome masked where unselected.
pub fn gen_setup1(n: usize, theta: f64, seed: u64) -> (Dataset, MGraph) {
    gen_setup1_with(
        n,
        &Setup1Params {
            theta,
            effect_scale: 1.0,
        },
        seed,
    )
}

pub fn gen_setup1_with(n: usize, params: &Setup1Params, seed: u64) -> (Dataset, MGraph) {
    let mut stream = Stream::new(derive_seed(seed, "setup1", 0));
    let mut w1 = Vec::with_capacity(n);
    let mut z1 = Vec::with_capacity(n);
    let mut z2 = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row = setup1_row(&mut stream, params, None);
        w1.push(row.w1);
        z1.push(row.z1);
        z2.push(row.z2);
        a.push(row.a);
        r.push(row.r);
        y.push((row.r == 1).then_some(row.y));
    }
    let ds = Dataset::new(
        vec![
            ("W1".into(), w1),
            ("Z1".into(), z1),
            ("Z2".into(), z2),
        ],
        a,
        r,
        y,
    )
    .expect("generated data is consistent");
    (ds, crate::fixtures::graph("mediator_attrition"))
}

#[derive(Debug, Clone, Copy)]
pub struct Setup2Params {
    pub effect_scale: f64,
}

impl Default for Setup2Params {
    fn default() -> Self {
        Self { effect_scale: 1.0 }
    }
}

struct Row2 {
    b1: f64,
    a: u8,
    c1: f64,
    c2: f64,
    y: f64,
    r: u8,
}

fn setup2_row(stream: &mut Stream, p: &Setup2Params, a_do: Option<u8>) -> Row2 {
    let s = p.effect_scale;
    let u1 = stream.normal();
    let b1 = stream.normal();
    let u_a = stream.normal();
    let u_c1 = stream.normal();
    let u_c2 = stream.normal_sd(2.5);
    let u_y = stream.normal_sd(7.0);
    let u_r = stream.normal_sd(0.7);
    let a = a_do
        .unwrap_or_else(|| indicator(0.90 * b1 - 0.10 * sign(b1) * b1 * b1 + u_a));
    let d = s * (2.0 * a as f64 - 1.0);
    let c1 = 0.20 * b1 * b1 + 0.50 * d + 0.20 * d * b1 + u_c1;
    let c2 = 0.10 * u1 + 0.10 * c1 + 0.10 * u1 * c1 + u_c2;
    let y = 2.00 * b1 + sign(b1) * b1 * b1 - 1.20 * d + 0.50 * d * b1 + 2.00 * u1
        + 1.20 * d * u1
        + u_y;
    let r = indicator(0.2 + 0.2 * d + 0.1 * c2 - 0.1 * d * c2 + u_r);
    Row2 {
        b1,
        a,
        c1,
        c2,
        y,
        r,
    }
}

/// i.i.d. sample from setup two; the latent `U1` is drawn but not exported.
pub fn gen_setup2(n: usize, seed: u64) -> (Dataset, MGraph) {
    gen_setup2_with(n, &Setup2Params::default(), seed)
}

pub fn gen_setup2_with(n: usize, params: &Setup2Params, seed: u64) -> (Dataset, MGraph) {
    let mut stream = Stream::new(derive_seed(seed, "setup2", 0));
    let mut b1 = Vec::with_capacity(n);
    let mut c1 = Vec::with_capacity(n);
    let mut c2 = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row = setup2_row(&mut stream, params, None);
        b1.push(row.b1);
        c1.push(row.c1);
        c2.push(row.c2);
        a.push(row.a);
        r.push(row.r);
        y.push((row.r == 1).then_some(row.y));
    }
    let ds = Dataset::new(
        vec![
            ("B1".into(), b1),
            ("C1".into(), c1),
            ("C2".into(), c2),
        ],
        a,
        r,
        y,
    )
    .expect("generated data is consistent");
    (ds, crate::fixtures::graph("latent_proxy"))
}

/// Interventional Monte Carlo oracle: simulate both arms with shared noises
/// and report the mean contrast with its Monte Carlo standard error.
pub fn mc_true_ate(setup: Setup, effect_scale: f64, n: usize, seed: u64) -> (f64, f64) {
    let stream = Stream::new(derive_seed(seed, "truth", 0));
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for k in 0..n {
        // Both arms replay the same per-draw noise substream.
        let base = stream.substream("arm", k as u64);
        let diff = match setup {
            Setup::One => {
                let p = Setup1Params {
                    theta: -1.90,
                    effect_scale,
                };
                let (mut sa, mut sb) = (base.clone(), base);
                setup1_row(&mut sa, &p, Some(1)).y - setup1_row(&mut sb, &p, Some(0)).y
            }
            Setup::Two => {
                let p = Setup2Params { effect_scale };
                let (mut sa, mut sb) = (base.clone(), base);
                setup2_row(&mut sa, &p, Some(1)).y - setup2_row(&mut sb, &p, Some(0)).y
            }
        };
        sum += diff;
        sumsq += diff * diff;
    }
    let mean = sum / n as f64;
    let var = (sumsq / n as f64 - mean * mean).max(0.0);
    (mean, (var / n as f64).sqrt())
}

/// Frozen truth constants from the interventional oracle at N = 10^7
/// (seed 20240801), with the recorded Monte Carlo standard errors.
pub fn reference_true_ate(setup: Setup) -> (f64, f64) {
    match setup {
        Setup::One => (TRUE_ATE_SETUP1, TRUE_ATE_SETUP1_SE),
        Setup::Two => (TRUE_ATE_SETUP2, TRUE_ATE_SETUP2_SE),
    }
}

pub const TRUTH_ORACLE_N: usize = 10_000_000;
pub const TRUTH_ORACLE_SEED: u64 = 20_240_801;
pub const TRUE_ATE_SETUP1: f64 = 5.244553;
pub const TRUE_ATE_SETUP1_SE: f64 = 0.000843;
pub const TRUE_ATE_SETUP2: f64 = -2.401415;
pub const TRUE_ATE_SETUP2_SE: f64 = 0.000823;

/// Outcome standard deviation of a 10^6-row reference draw, used for the
/// standardized (Cohen's d) reporting scale. Deterministic per setup.
pub fn reference_sd_y(setup: Setup) -> f64 {
    let n = 1_000_000usize;
    let mut stream = Stream::new(0xC0FFEE ^ setup.label().as_bytes()[0] as u64);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..n {
        let y = match setup {
            Setup::One => setup1_row(&mut stream, &Setup1Params::default(), None).y,
            Setup::Two => setup2_row(&mut stream, &Setup2Params::default(), None).y,
        };
        let delta = y - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (y - mean);
    }
    (m2 / (n - 1) as f64).sqrt()
}
