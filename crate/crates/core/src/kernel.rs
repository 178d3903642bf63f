//! The parallel-update transition law, its zero-temperature map and traps.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SpinConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub h: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(h: f64, beta: f64) -> Result<Self> {
        check_field(h)?;
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Param(format!("beta must be finite and positive, got {beta}")));
        }
        Ok(ModelParams { h, beta })
    }

    /// True when `2/h` is (numerically) an integer, where the critical
    /// length is ambiguous.
    pub fn field_is_degenerate(&self) -> bool {
        field_is_degenerate(self.h)
    }
}

pub fn check_field(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Param(format!("field h must lie in (0,1), got {h}")));
    }
    Ok(())
}

pub fn field_is_degenerate(h: f64) -> bool {
    let r = 2.0 / h;
    (r - r.round()).abs() < 1e-9
}

/// Sum of the four neighbour spins (double counted on a side of length 2).
#[inline]
pub fn local_field(config: &SpinConfig, i: usize) -> i32 {
    config
        .torus()
        .neighbors(i)
        .iter()
        .map(|&j| config.spin(j) as i32)
        .sum()
}

/// `log(1 / (1 + exp(-z)))` without overflow.
#[inline]
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log p(a)` for a site with local field `s`.
#[inline]
pub fn log_local_prob_field(params: &ModelParams, s: i32, a: i8) -> f64 {
    log_sigmoid(2.0 * params.beta * a as f64 * (s as f64 + params.h))
}

pub fn local_prob(params: &ModelParams, config: &SpinConfig, i: usize, a: i8) -> f64 {
    sigmoid(2.0 * params.beta * a as f64 * (local_field(config, i) as f64 + params.h))
}

/// Per-site update law for a source configuration.
#[derive(Clone, Debug)]
pub struct KernelRow {
    /// `(log p(-1), log p(+1))` per site.
    pub log_probs: Vec<(f64, f64)>,
}

impl KernelRow {
    pub fn new(params: &ModelParams, config: &SpinConfig) -> Self {
        let log_probs = (0..config.sites())
            .map(|i| {
                let s = local_field(config, i);
                (
                    log_local_prob_field(params, s, -1),
                    log_local_prob_field(params, s, 1),
                )
            })
            .collect();
        KernelRow { log_probs }
    }

    /// `(p(-1), p(+1))` at site `i`; the smaller one is computed directly and
    /// the larger as its complement.
    pub fn probs(&self, i: usize) -> (f64, f64) {
        let (lm, lp) = self.log_probs[i];
        if lm < lp {
            let m = lm.exp();
            (m, 1.0 - m)
        } else {
            let p = lp.exp();
            (1.0 - p, p)
        }
    }

    pub fn log_prob_to(&self, dst: &SpinConfig) -> f64 {
        self.log_probs
            .iter()
            .enumerate()
            .map(|(i, &(lm, lp))| if dst.is_plus(i) { lp } else { lm })
            .sum()
    }
}

/// `log p(src, dst)`, the sum of per-site log probabilities.
pub fn log_step_prob(params: &ModelParams, src: &SpinConfig, dst: &SpinConfig) -> Result<f64> {
    src.same_torus(dst)?;
    Ok((0..src.sites())
        .map(|i| log_local_prob_field(params, local_field(src, i), dst.spin(i)))
        .sum())
}

/// The zero-temperature map: every spin takes the sign of `S + h`.
/// Since `S` is even and `0 < h < 1` this is `+1` iff `S >= 0`.
pub fn zero_temp_map(config: &SpinConfig) -> SpinConfig {
    let mut out = SpinConfig::minus(config.torus());
    for i in 0..config.sites() {
        if local_field(config, i) >= 0 {
            out.set(i, 1);
        }
    }
    out
}

/// `T` everywhere except at `j`, which keeps its current spin.
pub fn pinned_map_fix(config: &SpinConfig, j: usize) -> SpinConfig {
    let mut out = zero_temp_map(config);
    out.set(j, config.spin(j));
    out
}

/// `T` everywhere except at `j`, which takes the opposite of its current spin.
pub fn pinned_map_flip(config: &SpinConfig, j: usize) -> SpinConfig {
    let mut out = zero_temp_map(config);
    out.set(j, -config.spin(j));
    out
}

pub fn is_stable_config(config: &SpinConfig) -> bool {
    zero_temp_map(config) == *config
}

pub fn is_stable_pair(config: &SpinConfig) -> bool {
    let t = zero_temp_map(config);
    t != *config && zero_temp_map(&t) == *config
}

pub fn is_trap(config: &SpinConfig) -> bool {
    let t = zero_temp_map(config);
    t == *config || zero_temp_map(&t) == *config
}

/// One-step sampler. Each site draws one `u64` in row-major order and
/// becomes `+1` when the draw is below `p(+1) * 2^64`.
#[derive(Clone, Debug)]
pub struct StepSampler {
    /// Indexed by `(S + 4) / 2`.
    thresholds: [u64; 5],
    neighbors: Vec<[usize; 4]>,
}

impl StepSampler {
    pub fn new(params: &ModelParams, torus: crate::lattice::Torus) -> Self {
        let mut thresholds = [0u64; 5];
        for (k, t) in thresholds.iter_mut().enumerate() {
            let s = 2 * k as i32 - 4;
            let p = sigmoid(2.0 * params.beta * (s as f64 + params.h));
            *t = prob_to_threshold(p);
        }
        StepSampler {
            thresholds,
            neighbors: torus.neighbor_table(),
        }
    }

    pub fn threshold(&self, s: i32) -> u64 {
        self.thresholds[((s + 4) / 2) as usize]
    }

    /// Writes one parallel update of `src` into `dst`.
    pub fn step_into<R: RngCore>(&self, src: &SpinConfig, dst: &mut SpinConfig, rng: &mut R) {
        debug_assert_eq!(src.torus(), dst.torus());
        let w = src.words();
        let bit = |j: usize| ((w[j >> 6] >> (j & 63)) & 1) as usize;
        for (i, nb) in self.neighbors.iter().enumerate() {
            let ups = bit(nb[0]) + bit(nb[1]) + bit(nb[2]) + bit(nb[3]);
            let u = rng.next_u64();
            dst.set(i, if u < self.thresholds[ups] { 1 } else { -1 });
        }
    }

    pub fn step<R: RngCore>(&self, src: &SpinConfig, rng: &mut R) -> SpinConfig {
        let mut dst = SpinConfig::minus(src.torus());
        self.step_into(src, &mut dst, rng);
        dst
    }
}

fn prob_to_threshold(p: f64) -> u64 {
    if p >= 1.0 {
        u64::MAX
    } else if p <= 0.0 {
        0
    } else {
        let t = p * 18446744073709551616.0;
        if t >= 18446744073709551615.0 {
            u64::MAX
        } else {
            t as u64
        }
    }
}

/// Convenience wrapper over [`StepSampler`].
pub fn sample_step<R: RngCore>(params: &ModelParams, config: &SpinConfig, rng: &mut R) -> SpinConfig {
    StepSampler::new(params, config.torus()).step(config, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Pattern, Torus};

    #[test]
    fn log_sigmoid_extremes() {
        assert_eq!(log_sigmoid(800.0), -0.0);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-12);
        assert!((log_sigmoid(0.0) + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn up_count_indexes_field() {
        // S = 2*ups - 4, so the threshold table indexed by ups matches (S+4)/2.
        let p = ModelParams::new(0.5, 1.0).unwrap();
        let t = Torus::new(4, 4).unwrap();
        let s = StepSampler::new(&p, t);
        assert!(s.threshold(-4) < s.threshold(4));
        let plus = SpinConfig::named(t, Pattern::Plus);
        assert_eq!(local_field(&plus, 3), 4);
    }
}
