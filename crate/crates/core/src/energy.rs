//! Virtual energy, finite-temperature Hamiltonian and transition costs.
//!
//! Every local field is even and `0 < h < 1`, so each energy is exactly
//! `c + k*h` for integers `c`, `k`. [`Level`] keeps that pair; converting to
//! `f64` through [`Level::value`] is deterministic, so energies that agree as
//! pairs agree bit for bit as floats.

use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernel::{local_field, ModelParams};
use crate::lattice::SpinConfig;

/// Tolerance used when comparing derived real energies.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Level {
    pub c: i64,
    pub k: i64,
}

impl Level {
    pub const ZERO: Level = Level { c: 0, k: 0 };

    pub fn new(c: i64, k: i64) -> Self {
        Level { c, k }
    }

    #[inline]
    pub fn value(self, h: f64) -> f64 {
        self.c as f64 + self.k as f64 * h
    }

    /// Cost `2|S+h|` of setting a site against the sign of `S + h`.
    #[inline]
    pub fn site_cost(s: i32) -> Level {
        if s >= 0 {
            Level::new(2 * s as i64, 2)
        } else {
            Level::new(-2 * s as i64, -2)
        }
    }
}

impl Add for Level {
    type Output = Level;
    #[inline]
    fn add(self, o: Level) -> Level {
        Level::new(self.c + o.c, self.k + o.k)
    }
}

impl AddAssign for Level {
    #[inline]
    fn add_assign(&mut self, o: Level) {
        self.c += o.c;
        self.k += o.k;
    }
}

impl Sub for Level {
    type Output = Level;
    #[inline]
    fn sub(self, o: Level) -> Level {
        Level::new(self.c - o.c, self.k - o.k)
    }
}

/// `H = -h sum(sigma) - sum |S + h|` as an exact pair.
pub fn virtual_energy_level(config: &SpinConfig) -> Level {
    let mut e = Level::new(0, -config.magnetization());
    for i in 0..config.sites() {
        let s = local_field(config, i);
        // -|S + h| is -S - h when S >= 0 and S + h otherwise.
        if s >= 0 {
            e += Level::new(-(s as i64), -1);
        } else {
            e += Level::new(s as i64, 1);
        }
    }
    e
}

pub fn virtual_energy(h: f64, config: &SpinConfig) -> f64 {
    virtual_energy_level(config).value(h)
}

/// Finite-temperature Hamiltonian `-h sum(sigma) - (1/beta) sum log cosh(beta (S + h))`.
///
/// `G - n ln 2 / beta` tends to `H` as `beta` grows; the difference is
/// `-(1/beta) sum ln(1 + exp(-2 beta |S+h|))`.
pub fn hamiltonian_g(params: &ModelParams, config: &SpinConfig) -> f64 {
    let b = params.beta;
    let mut g = -params.h * config.magnetization() as f64;
    for i in 0..config.sites() {
        let x = (local_field(config, i) as f64 + params.h).abs();
        let log_cosh = b * x + (-2.0 * b * x).exp().ln_1p() - std::f64::consts::LN_2;
        g -= log_cosh / b;
    }
    g
}

/// `Delta(src, dst)`: total cost of the sites where `dst` disagrees with `T(src)`.
pub fn delta_level(src: &SpinConfig, dst: &SpinConfig) -> Result<Level> {
    src.same_torus(dst)?;
    let mut d = Level::ZERO;
    for i in 0..src.sites() {
        let s = local_field(src, i);
        let t_plus = s >= 0;
        if t_plus != dst.is_plus(i) {
            d += Level::site_cost(s);
        }
    }
    Ok(d)
}

pub fn delta_cost(h: f64, src: &SpinConfig, dst: &SpinConfig) -> Result<f64> {
    Ok(delta_level(src, dst)?.value(h))
}

pub fn transition_level(src: &SpinConfig, dst: &SpinConfig) -> Result<Level> {
    Ok(virtual_energy_level(src) + delta_level(src, dst)?)
}

/// `H(src, dst) = H(src) + Delta(src, dst)`.
pub fn transition_energy(h: f64, src: &SpinConfig, dst: &SpinConfig) -> Result<f64> {
    Ok(transition_level(src, dst)?.value(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Pattern, Torus};

    #[test]
    fn site_cost_matches_abs() {
        for s in [-4, -2, 0, 2, 4] {
            let h = 0.37;
            assert!((Level::site_cost(s).value(h) - 2.0 * (s as f64 + h).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn chess_energy() {
        let t = Torus::new(4, 4).unwrap();
        let c = SpinConfig::named(t, Pattern::ChessEven);
        assert_eq!(virtual_energy_level(&c), Level::new(-64, 0));
    }
}
