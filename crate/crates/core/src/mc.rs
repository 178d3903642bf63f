//! Monte Carlo hitting experiments for tori too large to enumerate.
//!
//! Each trial owns a ChaCha8 stream: the master seed fixes the key and the
//! trial index selects the stream, so results do not depend on how trials
//! are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{zero_temp_map, ModelParams, StepSampler};
use crate::lattice::{Pattern, SpinConfig, Torus};

/// A set of configurations with a cheap membership test.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    States(Vec<SpinConfig>),
    Traps,
    MagnetizationAtLeast(i64),
}

impl Target {
    pub fn named(torus: Torus, patterns: &[Pattern]) -> Self {
        Target::States(patterns.iter().map(|&p| SpinConfig::named(torus, p)).collect())
    }

    pub fn contains(&self, c: &SpinConfig) -> bool {
        match self {
            Target::States(v) => v.iter().any(|s| s.words() == c.words()),
            Target::Traps => {
                let t = zero_temp_map(c);
                t == *c || zero_temp_map(&t) == *c
            }
            Target::MagnetizationAtLeast(m) => c.magnetization() >= *m,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Start {
    Config(SpinConfig),
    /// Uniform over all configurations, drawn from the trial stream.
    Uniform(Torus),
}

impl Start {
    pub fn torus(&self) -> Torus {
        match self {
            Start::Config(c) => c.torus(),
            Start::Uniform(t) => *t,
        }
    }

    fn kind(&self) -> String {
        match self {
            Start::Config(c) => c.to_hex(),
            Start::Uniform(_) => "uniform".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub seed: u64,
    pub beta: f64,
    pub start: String,
    /// First time `t >= 1` in some target; `None` when capped.
    pub hit_time: Option<u64>,
    /// Index of the first target hit (lowest index on ties).
    pub target: Option<usize>,
    pub capped: bool,
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Default step cap `100 exp(beta (gamma + 1))`.
pub fn default_step_cap(beta: f64, gamma: f64) -> u64 {
    let c = 100.0 * (beta * (gamma + 1.0)).exp();
    if c >= u64::MAX as f64 {
        u64::MAX
    } else {
        c.ceil() as u64
    }
}

fn run_one(
    sampler: &StepSampler,
    params: &ModelParams,
    start: &Start,
    targets: &[Target],
    step_cap: u64,
    seed: u64,
    trial: u64,
) -> TrialResult {
    let mut rng = trial_rng(seed, trial);
    let torus = start.torus();
    let mut cur = match start {
        Start::Config(c) => c.clone(),
        Start::Uniform(t) => {
            let mut c = SpinConfig::minus(*t);
            for i in 0..t.sites() {
                if rng.random::<bool>() {
                    c.set(i, 1);
                }
            }
            c
        }
    };
    let mut next = SpinConfig::minus(torus);
    let mut result = TrialResult {
        trial,
        seed,
        beta: params.beta,
        start: start.kind(),
        hit_time: None,
        target: None,
        capped: true,
    };
    for t in 1..=step_cap {
        sampler.step_into(&cur, &mut next, &mut rng);
        std::mem::swap(&mut cur, &mut next);
        if let Some(k) = targets.iter().position(|tg| tg.contains(&cur)) {
            result.hit_time = Some(t);
            result.target = Some(k);
            result.capped = false;
            break;
        }
    }
    result
}

/// Independent trials, returned in trial order.
pub fn run_hitting_trials(
    params: &ModelParams,
    start: &Start,
    targets: &[Target],
    trials: u64,
    step_cap: u64,
    seed: u64,
) -> Result<Vec<TrialResult>> {
    if targets.is_empty() {
        return Err(Error::Param("at least one target is required".into()));
    }
    let sampler = StepSampler::new(params, start.torus());
    Ok((0..trials)
        .into_par_iter()
        .map(|k| run_one(&sampler, params, start, targets, step_cap, seed, k))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub uncapped: u64,
    pub capped: u64,
}

/// Mean and standard error over uncapped trials.
pub fn mean_hit_time(results: &[TrialResult]) -> Result<MeanEstimate> {
    let times: Vec<f64> = results.iter().filter_map(|r| r.hit_time.map(|t| t as f64)).collect();
    let capped = results.len() as u64 - times.len() as u64;
    if times.len() < 2 {
        return Err(Error::Param("fewer than two uncapped trials".into()));
    }
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MeanEstimate {
        mean,
        std_err: (var / n).sqrt(),
        uncapped: times.len() as u64,
        capped,
    })
}

pub fn median_hit_time(results: &[TrialResult]) -> Option<f64> {
    let mut t: Vec<u64> = results.iter().filter_map(|r| r.hit_time).collect();
    if t.is_empty() {
        return None;
    }
    t.sort_unstable();
    let m = t.len() / 2;
    Some(if t.len() % 2 == 1 {
        t[m] as f64
    } else {
        (t[m - 1] + t[m]) as f64 / 2.0
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub std_err: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

/// Wilson score interval at normal quantile `z`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> Proportion {
    let n = trials as f64;
    if trials == 0 {
        return Proportion {
            successes,
            trials,
            estimate: f64::NAN,
            std_err: f64::NAN,
            wilson_lo: 0.0,
            wilson_hi: 1.0,
        };
    }
    let p = successes as f64 / n;
    let z2 = z * z;
    let den = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / den;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / den;
    Proportion {
        successes,
        trials,
        estimate: p,
        std_err: (p * (1.0 - p) / n).sqrt(),
        wilson_lo: (centre - half).max(0.0),
        wilson_hi: (centre + half).min(1.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisitEstimate {
    /// `P(tau_A < tau_B)` over trials that hit either set.
    pub a_first: Proportion,
    pub b_first: u64,
    pub capped: u64,
}

/// Estimate of `P(tau_A < tau_B)` from `start`.
pub fn visit_before(
    params: &ModelParams,
    start: &Start,
    a: &Target,
    b: &Target,
    trials: u64,
    step_cap: u64,
    seed: u64,
) -> Result<VisitEstimate> {
    let res = run_hitting_trials(params, start, &[a.clone(), b.clone()], trials, step_cap, seed)?;
    let a_hits = res.iter().filter(|r| r.target == Some(0)).count() as u64;
    let b_hits = res.iter().filter(|r| r.target == Some(1)).count() as u64;
    let capped = res.iter().filter(|r| r.capped).count() as u64;
    Ok(VisitEstimate {
        a_first: wilson(a_hits, a_hits + b_hits, 1.96),
        b_first: b_hits,
        capped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrheniusFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares of `log(mean tau)` against `beta`.
pub fn arrhenius_fit(points: &[(f64, f64)]) -> Result<ArrheniusFit> {
    if points.len() < 3 {
        return Err(Error::Param(format!(
            "need at least three uncapped beta values, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(_, t)| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Param("mean times must be positive and finite".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Param("beta values must differ".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(ArrheniusFit {
        slope,
        intercept,
        r2,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exceedance {
    pub threshold_steps: f64,
    pub exceeded: Proportion,
    pub median_hit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub beta: f64,
    pub epsilon: f64,
    /// Hitting `{+1, c_e, c_o, -1}` within `exp(beta (V* + eps))` steps.
    pub trap_set: Exceedance,
    /// Hitting `+1` within `exp(beta (gamma + eps))` steps, when requested.
    pub ground: Option<Exceedance>,
}

fn threshold_cap(x: f64) -> u64 {
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x.floor() as u64
    }
}

fn exceedance(
    params: &ModelParams,
    torus: Torus,
    target: Target,
    threshold: f64,
    trials: u64,
    seed: u64,
) -> Result<Exceedance> {
    let res = run_hitting_trials(params, &Start::Uniform(torus), &[target], trials, threshold_cap(threshold), seed)?;
    let over = res.iter().filter(|r| r.capped).count() as u64;
    Ok(Exceedance {
        threshold_steps: threshold,
        exceeded: wilson(over, trials, 1.96),
        median_hit: median_hit_time(&res),
    })
}

/// Fraction of uniform starts that take longer than the thresholds.
pub fn recurrence_check(
    params: &ModelParams,
    torus: Torus,
    v_star: f64,
    gamma: Option<f64>,
    epsilon: f64,
    trials: u64,
    seed: u64,
) -> Result<RecurrenceReport> {
    if !(epsilon > 0.0) {
        return Err(Error::Param("epsilon must be positive".into()));
    }
    let b = params.beta;
    let traps = Target::named(
        torus,
        &[Pattern::Plus, Pattern::ChessEven, Pattern::ChessOdd, Pattern::Minus],
    );
    let trap_set = exceedance(params, torus, traps, (b * (v_star + epsilon)).exp(), trials, seed)?;
    let ground = match gamma {
        Some(g) => Some(exceedance(
            params,
            torus,
            Target::named(torus, &[Pattern::Plus]),
            (b * (g + epsilon)).exp(),
            trials,
            seed ^ 0x9e37_79b9_7f4a_7c15,
        )?),
        None => None,
    };
    Ok(RecurrenceReport {
        beta: b,
        epsilon,
        trap_set,
        ground,
    })
}
