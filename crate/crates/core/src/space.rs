//! Enumerated state space for small tori: per-state local fields, exact
//! energies, zero-temperature images and fast per-row cost tables.

use crate::energy::{virtual_energy_level, Level};
use crate::error::{Error, Result};
use crate::kernel::{local_field, log_sigmoid, zero_temp_map, ModelParams};
use crate::lattice::{SpinConfig, Torus};

/// States are indexed by their bit pattern, so state `x` has spin `+1` at
/// site `i` iff bit `i` of `x` is set.
#[derive(Clone, Debug)]
pub struct StateSpace {
    torus: Torus,
    n: usize,
    fields: Vec<i8>,
    levels: Vec<Level>,
    t_map: Vec<u32>,
}

impl StateSpace {
    pub const DEFAULT_CAP: usize = 13;
    pub const HARD_CAP: usize = 16;

    pub fn new(torus: Torus, cap: usize) -> Result<Self> {
        let n = torus.sites();
        let cap = cap.min(Self::HARD_CAP);
        if n > cap {
            return Err(Error::TooLarge { sites: n, cap });
        }
        let count = 1usize << n;
        let mut fields = vec![0i8; count * n];
        let mut levels = Vec::with_capacity(count);
        let mut t_map = Vec::with_capacity(count);
        for x in 0..count {
            let c = SpinConfig::from_state_id(torus, x as u64)?;
            for i in 0..n {
                fields[x * n + i] = local_field(&c, i) as i8;
            }
            levels.push(virtual_energy_level(&c));
            t_map.push(zero_temp_map(&c).state_id().unwrap() as u32);
        }
        Ok(StateSpace {
            torus,
            n,
            fields,
            levels,
            t_map,
        })
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn config(&self, x: usize) -> SpinConfig {
        SpinConfig::from_state_id(self.torus, x as u64).unwrap()
    }

    pub fn id_of(&self, c: &SpinConfig) -> Result<usize> {
        if c.torus() != self.torus {
            return Err(Error::GeometryMismatch(
                c.torus().to_string(),
                self.torus.to_string(),
            ));
        }
        Ok(c.state_id().unwrap() as usize)
    }

    #[inline]
    pub fn fields(&self, x: usize) -> &[i8] {
        &self.fields[x * self.n..(x + 1) * self.n]
    }

    #[inline]
    pub fn level(&self, x: usize) -> Level {
        self.levels[x]
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    #[inline]
    pub fn energy(&self, x: usize, h: f64) -> f64 {
        self.levels[x].value(h)
    }

    #[inline]
    pub fn t(&self, x: usize) -> usize {
        self.t_map[x] as usize
    }

    pub fn is_trap(&self, x: usize) -> bool {
        self.t(self.t(x)) == x
    }

    /// Per-site costs of disagreeing with `T(x)`.
    pub fn site_costs(&self, x: usize) -> Vec<Level> {
        self.fields(x)
            .iter()
            .map(|&s| Level::site_cost(s as i32))
            .collect()
    }

    /// `out[y] = Delta(x, y)` for every state `y`, via a subset-sum over the
    /// disagreement mask `y ^ T(x)`.
    pub fn delta_row(&self, x: usize, out: &mut [Level]) {
        debug_assert_eq!(out.len(), self.len());
        let w = self.site_costs(x);
        let t = self.t(x);
        out[t] = Level::ZERO;
        for d in 1..self.len() {
            let low = d & (d - 1);
            out[t ^ d] = out[t ^ low] + w[d.trailing_zeros() as usize];
        }
    }

    pub fn delta(&self, x: usize, y: usize) -> Level {
        let mut mask = y ^ self.t(x);
        let f = self.fields(x);
        let mut d = Level::ZERO;
        while mask != 0 {
            let i = mask.trailing_zeros() as usize;
            d += Level::site_cost(f[i] as i32);
            mask &= mask - 1;
        }
        d
    }

    #[inline]
    pub fn transition_level(&self, x: usize, y: usize) -> Level {
        self.levels[x] + self.delta(x, y)
    }

    #[inline]
    pub fn transition(&self, x: usize, y: usize, h: f64) -> f64 {
        self.transition_level(x, y).value(h)
    }

    /// `out[y] = H(x, y)` as canonical floats.
    pub fn transition_row(&self, x: usize, h: f64, scratch: &mut [Level], out: &mut [f64]) {
        self.delta_row(x, scratch);
        let hx = self.levels[x];
        for (o, d) in out.iter_mut().zip(scratch.iter()) {
            *o = (hx + *d).value(h);
        }
    }

    /// `log p(x, T(x))`; every row satisfies `log p(x, y) = this - beta * Delta(x, y)`.
    pub fn log_row_norm(&self, x: usize, params: &ModelParams) -> f64 {
        self.fields(x)
            .iter()
            .map(|&s| log_sigmoid(2.0 * params.beta * (s as f64 + params.h).abs()))
            .sum()
    }

    /// `log p(x, y)` from the factorised form.
    pub fn log_prob(&self, x: usize, y: usize, params: &ModelParams) -> f64 {
        self.log_row_norm(x, params) - params.beta * self.delta(x, y).value(params.h)
    }

    /// Normalised log Gibbs weights `log mu(x)` with `mu ~ exp(-beta G)`.
    pub fn log_gibbs(&self, params: &ModelParams) -> Vec<f64> {
        // -beta G = -beta H - log p(x, T x) - n ln 2; the constant drops out.
        let raw: Vec<f64> = (0..self.len())
            .map(|x| -params.beta * self.energy(x, params.h) - self.log_row_norm(x, params))
            .collect();
        let lz = log_sum_exp(&raw);
        raw.into_iter().map(|v| v - lz).collect()
    }
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::delta_level;

    #[test]
    fn delta_row_matches_direct() {
        let t = Torus::new(2, 4).unwrap();
        let sp = StateSpace::new(t, 13).unwrap();
        let mut row = vec![Level::ZERO; sp.len()];
        for x in [0usize, 3, 77, 255] {
            sp.delta_row(x, &mut row);
            for y in 0..sp.len() {
                let direct = delta_level(&sp.config(x), &sp.config(y)).unwrap();
                assert_eq!(row[y], direct);
                assert_eq!(sp.delta(x, y), direct);
            }
        }
    }
}
