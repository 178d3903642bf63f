//! Gibbs measure, Dirichlet forms, capacities, equilibrium potentials and
//! mean hitting times on an enumerated state space.
//!
//! All solves go through [`Gth`]. A [`ReducedChain`] eliminates every state
//! outside a pool once per `beta`; queries whose sets and starts lie in the
//! pool then run on the small trace chain, and back substitution through
//! the stored elimination extends any solution to the whole space.

use std::collections::HashMap;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gth::Gth;
use crate::kernel::ModelParams;
use crate::lattice::{Pattern, SpinConfig};
use crate::energy::Level;
use crate::space::{log_sum_exp, StateSpace};

/// Largest space for which a dense kernel is assembled (2^13 states).
pub const DENSE_CAP_SITES: usize = 13;

#[derive(Clone, Debug)]
pub struct GibbsMeasure {
    log_weight: Vec<f64>,
    log_z: f64,
}

impl GibbsMeasure {
    /// Weights `exp(-beta G(x))`, kept as logs.
    pub fn new(space: &StateSpace, params: &ModelParams) -> Self {
        let n = space.sites() as f64;
        let log_weight: Vec<f64> = (0..space.len())
            .map(|x| {
                -params.beta * space.energy(x, params.h)
                    - space.log_row_norm(x, params)
                    - n * std::f64::consts::LN_2
            })
            .collect();
        let log_z = log_sum_exp(&log_weight);
        GibbsMeasure { log_weight, log_z }
    }

    pub fn len(&self) -> usize {
        self.log_weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weight.is_empty()
    }

    pub fn log_weight(&self, x: usize) -> f64 {
        self.log_weight[x]
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn log_mu(&self, x: usize) -> f64 {
        self.log_weight[x] - self.log_z
    }

    pub fn mu(&self, x: usize) -> f64 {
        self.log_mu(x).exp()
    }

    pub fn mu_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|x| self.mu(x)).collect()
    }

    pub fn mass(&self, set: &[usize]) -> f64 {
        let v: Vec<f64> = set.iter().map(|&x| self.log_mu(x)).collect();
        log_sum_exp(&v).exp()
    }
}

/// Dense kernel of an enumerated chain together with its Gibbs measure.
pub struct ExactChain<'a> {
    space: &'a StateSpace,
    params: ModelParams,
    gibbs: GibbsMeasure,
    p: Vec<f64>,
}

impl<'a> ExactChain<'a> {
    pub fn new(space: &'a StateSpace, params: ModelParams) -> Result<Self> {
        if space.sites() > DENSE_CAP_SITES {
            return Err(Error::TooLarge {
                sites: space.sites(),
                cap: DENSE_CAP_SITES,
            });
        }
        let n = space.len();
        let mut p = vec![0.0; n * n];
        let mut scratch = vec![Level::ZERO; n];
        for x in 0..n {
            space.delta_row(x, &mut scratch);
            let norm = space.log_row_norm(x, &params);
            let row = &mut p[x * n..(x + 1) * n];
            for (o, d) in row.iter_mut().zip(&scratch) {
                *o = (norm - params.beta * d.value(params.h)).exp();
            }
        }
        Ok(ExactChain {
            space,
            params,
            gibbs: GibbsMeasure::new(space, &params),
            p,
        })
    }

    pub fn space(&self) -> &StateSpace {
        self.space
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn gibbs(&self) -> &GibbsMeasure {
        &self.gibbs
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let n = self.len();
        &self.p[x * n..(x + 1) * n]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.len() + y]
    }

    /// `max_y |sum_x mu(x) p(x,y) - mu(y)|`.
    pub fn stationarity_residual(&self) -> f64 {
        let n = self.len();
        let mu = self.gibbs.mu_vec();
        let mut acc = vec![0.0; n];
        for x in 0..n {
            let m = mu[x];
            for (a, &v) in acc.iter_mut().zip(self.row(x)) {
                *a += m * v;
            }
        }
        acc.iter()
            .zip(&mu)
            .map(|(a, m)| (a - m).abs())
            .fold(0.0, f64::max)
    }

    /// `max |mu(x) p(x,y) - mu(y) p(y,x)|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let n = self.len();
        let mu = self.gibbs.mu_vec();
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in x + 1..n {
                let d = (mu[x] * self.prob(x, y) - mu[y] * self.prob(y, x)).abs();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.len())
            .map(|x| (self.row(x).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `1/2 sum_{x,y} mu(x) p(x,y) (f(x) - f(y))^2`.
    pub fn dirichlet_form(&self, f: &[f64]) -> f64 {
        let mut total = 0.0;
        for x in 0..self.len() {
            let fx = f[x];
            let s: f64 = self
                .row(x)
                .iter()
                .zip(f)
                .map(|(&p, &fy)| p * (fx - fy) * (fx - fy))
                .sum();
            total += self.gibbs.mu(x) * s;
        }
        0.5 * total
    }

    /// Symmetric bilinear Dirichlet form of several functions at once:
    /// `out[a][b] = 1/2 sum mu(x) p(x,y) (f_a(x)-f_a(y)) (f_b(x)-f_b(y))`.
    pub fn dirichlet_gram(&self, fs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let k = fs.len();
        let mut out = vec![vec![0.0; k]; k];
        let mut d = vec![0.0; k];
        for x in 0..self.len() {
            let m = self.gibbs.mu(x);
            let mut local = vec![vec![0.0; k]; k];
            for (y, &p) in self.row(x).iter().enumerate() {
                if p == 0.0 || y == x {
                    continue;
                }
                for a in 0..k {
                    d[a] = fs[a][x] - fs[a][y];
                }
                for a in 0..k {
                    for b in a..k {
                        local[a][b] += p * d[a] * d[b];
                    }
                }
            }
            for a in 0..k {
                for b in a..k {
                    out[a][b] += 0.5 * m * local[a][b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                out[a][b] = out[b][a];
            }
        }
        out
    }

    /// Elimination of every state except `keep`, ordered so that `keep`
    /// comes last in the given order.
    pub fn eliminate_except(&self, keep: &[usize]) -> Result<Gth> {
        let n = self.len();
        let mut kept = vec![false; n];
        for &k in keep {
            if k >= n {
                return Err(Error::Param(format!("state {k} out of range")));
            }
            kept[k] = true;
        }
        let mut order: Vec<usize> = (0..n).filter(|&x| !kept[x]).collect();
        let n_elim = order.len();
        let mut seen = vec![false; n];
        for &k in keep {
            if !seen[k] {
                seen[k] = true;
                order.push(k);
            }
        }
        Gth::new(order, n_elim, None, |x, out| out.copy_from_slice(self.row(x)))
    }

    /// Reduction onto a pool of states.
    pub fn reduce(&self, pool: &[usize]) -> Result<ReducedChain<'_, 'a>> {
        ReducedChain::new(self, pool)
    }

    /// Residual of the harmonic equation on the interior.
    pub fn harmonic_residual(&self, h: &[f64], boundary: &[bool]) -> f64 {
        (0..self.len())
            .filter(|&x| !boundary[x])
            .map(|x| {
                let ph: f64 = self.row(x).iter().zip(h).map(|(p, v)| p * v).sum();
                (h[x] - ph).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Harmonic function pinned to 1 on `y` and 0 on `z`, on the whole space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarmonicSolve {
    pub y: Vec<usize>,
    pub z: Vec<usize>,
    pub values: Vec<f64>,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingProb {
    /// `P_x(tau_Y < tau_Z)`.
    pub prob: f64,
    /// `cap(x, Y) / cap(x, Z)`.
    pub capacity_bound: f64,
}

/// Trace chain on a pool of states together with the elimination that
/// produced it.
pub struct ReducedChain<'c, 'a> {
    chain: &'c ExactChain<'a>,
    big: Gth,
    ids: Vec<usize>,
    local: HashMap<usize, usize>,
    w: Vec<f64>,
    time: Vec<f64>,
}

fn check_disjoint(a: &[usize], b: &[usize]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Param("target sets must be nonempty".into()));
    }
    if a.iter().any(|x| b.contains(x)) {
        return Err(Error::Param("target sets must be disjoint".into()));
    }
    Ok(())
}

impl<'c, 'a> ReducedChain<'c, 'a> {
    pub fn new(chain: &'c ExactChain<'a>, pool: &[usize]) -> Result<Self> {
        let mut ids: Vec<usize> = pool.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() < 2 {
            return Err(Error::Param("pool needs at least two states".into()));
        }
        let big = chain.eliminate_except(&ids)?;
        let k = ids.len();
        let mut w = vec![0.0; k * k];
        for (a, &x) in ids.iter().enumerate() {
            for (b, &y) in ids.iter().enumerate() {
                if a != b {
                    w[a * k + b] = big.kept_prob(x, y);
                }
            }
        }
        let time = ids.iter().map(|&x| big.kept_time(x)).collect();
        let local = ids.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        Ok(ReducedChain {
            chain,
            big,
            ids,
            local,
            w,
            time,
        })
    }

    pub fn chain(&self) -> &ExactChain<'a> {
        self.chain
    }

    pub fn pool(&self) -> &[usize] {
        &self.ids
    }

    fn loc(&self, x: usize) -> Result<usize> {
        self.local
            .get(&x)
            .copied()
            .ok_or_else(|| Error::Param(format!("state {x} is not in the pool")))
    }

    fn locs(&self, xs: &[usize]) -> Result<Vec<usize>> {
        xs.iter().map(|&x| self.loc(x)).collect()
    }

    /// Trace-chain probability between two pool states.
    pub fn trace_prob(&self, x: usize, y: usize) -> Result<f64> {
        let (a, b) = (self.loc(x)?, self.loc(y)?);
        Ok(if a == b { 0.0 } else { self.w[a * self.ids.len() + b] })
    }

    /// Small elimination keeping `boundary` (local indices) last.
    fn keep_only(&self, boundary: &[usize]) -> Result<Gth> {
        let k = self.ids.len();
        let mut is_b = vec![false; k];
        for &b in boundary {
            is_b[b] = true;
        }
        let mut order: Vec<usize> = (0..k).filter(|&i| !is_b[i]).collect();
        let n_elim = order.len();
        order.extend(boundary.iter().copied());
        Gth::new(order, n_elim, Some(&self.time), |i, out| {
            out.copy_from_slice(&self.w[i * k..(i + 1) * k])
        })
    }

    /// `P_x(tau_Y < tau_Z)` on the pool (local index order).
    fn potential_on_pool(&self, y: &[usize], z: &[usize]) -> Result<Vec<f64>> {
        check_disjoint(y, z)?;
        let (ly, lz) = (self.locs(y)?, self.locs(z)?);
        let mut boundary = lz.clone();
        boundary.extend(&ly);
        let g = self.keep_only(&boundary)?;
        Ok(g.extend(|i| if ly.contains(&i) { 1.0 } else { 0.0 }, false))
    }

    /// Equilibrium potential on the whole space.
    pub fn equilibrium_potential(&self, y: &[usize], z: &[usize]) -> Result<HarmonicSolve> {
        let on_pool = self.potential_on_pool(y, z)?;
        let values = self.big.extend(|x| on_pool[self.local[&x]], false);
        let mut boundary = vec![false; self.chain.len()];
        for &v in y.iter().chain(z) {
            boundary[v] = true;
        }
        let residual = self.chain.harmonic_residual(&values, &boundary);
        Ok(HarmonicSolve {
            y: y.to_vec(),
            z: z.to_vec(),
            values,
            residual,
        })
    }

    /// `P_x(tau_Y < tau_Z)` for a pool state `x`.
    pub fn absorption_prob(&self, x: usize, y: &[usize], z: &[usize]) -> Result<f64> {
        if y.contains(&x) {
            return Ok(1.0);
        }
        if z.contains(&x) {
            return Ok(0.0);
        }
        let lx = self.loc(x)?;
        Ok(self.potential_on_pool(y, z)?[lx])
    }

    /// `P_y(tau_Z < tau_y)` for each `y` in `Y`, with return times `t > 0`.
    pub fn escape_probs(&self, y: &[usize], z: &[usize]) -> Result<Vec<f64>> {
        check_disjoint(y, z)?;
        let (ly, lz) = (self.locs(y)?, self.locs(z)?);
        let mut boundary = lz.clone();
        boundary.extend(&ly);
        let g = self.keep_only(&boundary)?;
        Ok(ly
            .iter()
            .map(|&a| lz.iter().map(|&b| g.kept_prob(a, b)).sum())
            .collect())
    }

    /// `cap(Y, Z) = sum_y mu(y) P_y(tau_Z < tau_Y)`.
    pub fn capacity_escape(&self, y: &[usize], z: &[usize]) -> Result<f64> {
        let esc = self.escape_probs(y, z)?;
        Ok(y.iter()
            .zip(esc)
            .map(|(&s, e)| self.chain.gibbs.mu(s) * e)
            .sum())
    }

    /// `cap(Y, Z) = D[h_{Y,Z}]` over the whole space.
    ///
    /// Values of `h` near a constant carry absolute rounding of order
    /// `1e-16`, so the result has an absolute floor of about the largest
    /// off-diagonal conductance times `1e-32`. Use [`Self::capacity_trace`]
    /// when the capacity is below that.
    pub fn capacity_dirichlet(&self, y: &[usize], z: &[usize]) -> Result<f64> {
        let h = self.equilibrium_potential(y, z)?;
        Ok(self.chain.dirichlet_form(&h.values))
    }

    /// `cap(Y, Z)` as the Dirichlet form of the equilibrium potential of
    /// the trace chain on the pool, which has the same capacities between
    /// pool sets. Conductances `mu(a) w(a,b)` are symmetrised, so scaling
    /// errors of size `e` in them move the result by at most `e`
    /// relatively, and the potential is solved by subtraction-free
    /// elimination in 256-bit arithmetic, since differences of the
    /// potential inside a deep well fall far below `f64` resolution of
    /// its values. Cost is cubic in the pool size; keep the pool small.
    pub fn capacity_trace(&self, y: &[usize], z: &[usize]) -> Result<f64> {
        check_disjoint(y, z)?;
        let (ly, lz) = (self.locs(y)?, self.locs(z)?);
        let k = self.ids.len();
        let mu: Vec<f64> = self.ids.iter().map(|&x| self.chain.gibbs.mu(x)).collect();
        let mut c = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    c[a * k + b] = 0.5 * (mu[a] * self.w[a * k + b] + mu[b] * self.w[b * k + a]);
                }
            }
        }
        let mut fixed = vec![None; k];
        for &a in &ly {
            fixed[a] = Some(1.0);
        }
        for &a in &lz {
            fixed[a] = Some(0.0);
        }
        let h = harmonic_mp(k, &c, &fixed)?;
        let mut total = 0.0;
        for a in 0..k {
            for b in 0..k {
                let d = (&h[a] - &h[b]).to_f64().value();
                total += c[a * k + b] * d * d;
            }
        }
        Ok(0.5 * total)
    }

    /// `P_x(tau_Y < tau_Z)` and the bound `cap(x,Y)/cap(x,Z)`.
    pub fn hitting_prob(&self, x: usize, y: &[usize], z: &[usize]) -> Result<HittingProb> {
        check_disjoint(y, z)?;
        if y.contains(&x) || z.contains(&x) {
            return Err(Error::Param("start must lie outside both sets".into()));
        }
        let prob = self.absorption_prob(x, y, z)?;
        let cy = self.capacity_escape(&[x], y)?;
        let cz = self.capacity_escape(&[x], z)?;
        Ok(HittingProb {
            prob,
            capacity_bound: cy / cz,
        })
    }

    /// `E_x[tau_A]` for a pool state `x`; a return time when `x` is in `A`.
    pub fn mean_hitting(&self, x: usize, a: &[usize]) -> Result<f64> {
        if a.is_empty() {
            return Err(Error::Param("target set must be nonempty".into()));
        }
        let la = self.locs(a)?;
        let g = self.keep_only(&la)?;
        let lx = self.loc(x)?;
        if la.contains(&lx) {
            return Ok(g.kept_time(lx));
        }
        Ok(g.extend(|_| 0.0, true)[lx])
    }

    /// `E_x[tau_A]` for every state outside `A` (zero on `A`).
    pub fn mean_hitting_all(&self, a: &[usize]) -> Result<Vec<f64>> {
        let la = self.locs(a)?;
        let g = self.keep_only(&la)?;
        let on_pool = g.extend(|_| 0.0, true);
        Ok(self.big.extend(|x| on_pool[self.local[&x]], true))
    }

    /// `E_X[tau_A]` with the start drawn from `mu` restricted to `X`.
    pub fn mean_hitting_from_set(&self, xs: &[usize], a: &[usize]) -> Result<f64> {
        let mass = self.chain.gibbs.mass(xs);
        let mut total = 0.0;
        for &x in xs {
            total += self.chain.gibbs.mu(x) / mass * self.mean_hitting(x, a)?;
        }
        Ok(total)
    }

    /// Distribution of `X_{tau_B}` from `x` outside `B`, in the order of `b`.
    pub fn hitting_distribution(&self, x: usize, b: &[usize]) -> Result<Vec<f64>> {
        if b.contains(&x) {
            return Err(Error::Param("start must lie outside the target".into()));
        }
        let lb = self.locs(b)?;
        let g = self.keep_only(&lb)?;
        let lx = self.loc(x)?;
        Ok(lb
            .iter()
            .map(|&t| g.extend(|i| if i == t { 1.0 } else { 0.0 }, false)[lx])
            .collect())
    }

    /// `mu(X) / cap(X, A)`.
    pub fn mu_over_cap(&self, xs: &[usize], a: &[usize]) -> Result<f64> {
        Ok(self.chain.gibbs.mass(xs) / self.capacity_escape(xs, a)?)
    }

    /// p.t.a. ratio of `m`; the maximum over states outside `m` runs over
    /// the pool.
    pub fn pta_ratio(&self, m: &[usize]) -> Result<f64> {
        if m.len() < 2 {
            return Err(Error::Param("metastable candidate needs two states".into()));
        }
        let mut num = 0.0f64;
        for &x in &self.ids {
            if !m.contains(&x) {
                num = num.max(self.mu_over_cap(&[x], m)?);
            }
        }
        let mut den = f64::INFINITY;
        for &x in m {
            let rest: Vec<usize> = m.iter().copied().filter(|&y| y != x).collect();
            den = den.min(self.mu_over_cap(&[x], &rest)?);
        }
        Ok(num / den)
    }

    /// Finite-beta estimate `exp(-beta gamma) mu(X)/cap(X, A)`.
    pub fn prefactor_capacity(&self, xs: &[usize], a: &[usize], gamma: f64) -> Result<f64> {
        Ok((-self.chain.params.beta * gamma).exp() * self.mu_over_cap(xs, a)?)
    }

    /// Finite-beta estimate `exp(-beta gamma) E_X[tau_A]`.
    pub fn prefactor_mean_time(&self, xs: &[usize], a: &[usize], gamma: f64) -> Result<f64> {
        Ok((-self.chain.params.beta * gamma).exp() * self.mean_hitting_from_set(xs, a)?)
    }
}

/// Binary floating point with [`MP_BITS`] of mantissa.
type Mp = FBig<HalfEven, 2>;
const MP_BITS: usize = 256;

fn mp(x: f64) -> Mp {
    Mp::try_from(x).expect("finite").with_precision(MP_BITS).value()
}

/// Harmonic function of a conductance network with the given boundary
/// values, by subtraction-free elimination in [`MP_BITS`]-bit arithmetic.
fn harmonic_mp(k: usize, c: &[f64], fixed: &[Option<f64>]) -> Result<Vec<Mp>> {
    let order: Vec<usize> = (0..k)
        .filter(|&a| fixed[a].is_none())
        .chain((0..k).filter(|&a| fixed[a].is_some()))
        .collect();
    let m = order.iter().take_while(|&&a| fixed[a].is_none()).count();
    let zero = mp(0.0);
    let mut w: Vec<Mp> = Vec::with_capacity(k * k);
    for &a in &order {
        for &b in &order {
            w.push(if a == b { zero.clone() } else { mp(c[a * k + b]) });
        }
    }
    let mut s = Vec::with_capacity(m);
    for p in 0..m {
        let sp = w[p * k + p + 1..(p + 1) * k].iter().fold(zero.clone(), |acc, v| acc + v);
        if sp == zero {
            return Err(Error::Internal(format!("state {} is isolated", order[p])));
        }
        for i in p + 1..k {
            if w[i * k + p] == zero {
                continue;
            }
            let f = &w[i * k + p] / &sp;
            for j in p + 1..k {
                if i != j && w[p * k + j] != zero {
                    let add = &f * &w[p * k + j];
                    w[i * k + j] += add;
                }
            }
        }
        s.push(sp);
    }
    let mut x: Vec<Mp> = order.iter().map(|&a| mp(fixed[a].unwrap_or(0.0))).collect();
    for p in (0..m).rev() {
        let mut acc = zero.clone();
        for j in p + 1..k {
            acc += &w[p * k + j] * &x[j];
        }
        x[p] = acc / &s[p];
    }
    let mut out = vec![zero; k];
    for (p, &a) in order.iter().enumerate() {
        out[a] = x[p].clone();
    }
    Ok(out)
}

/// Named configurations, all traps, and `extra` uniformly drawn states.
pub fn standard_pool(space: &StateSpace, extra: usize, seed: u64) -> Vec<usize> {
    let torus = space.torus();
    let mut pool: Vec<usize> = [Pattern::Plus, Pattern::Minus, Pattern::ChessEven, Pattern::ChessOdd]
        .iter()
        .map(|&p| space.id_of(&SpinConfig::named(torus, p)).unwrap())
        .collect();
    pool.extend((0..space.len()).filter(|&x| space.is_trap(x)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..extra {
        pool.push(rng.random_range(0..space.len()));
    }
    pool.sort_unstable();
    pool.dedup();
    pool
}

/// Matrix-free Gauss-Seidel solve of the equilibrium potential, for spaces
/// too large for the dense kernel.
pub fn harmonic_iterative(
    space: &StateSpace,
    params: &ModelParams,
    y: &[usize],
    z: &[usize],
    tol: f64,
    max_iter: usize,
) -> Result<HarmonicSolve> {
    check_disjoint(y, z)?;
    let n = space.len();
    let mut h = vec![0.0; n];
    let mut boundary = vec![false; n];
    for &v in y {
        h[v] = 1.0;
        boundary[v] = true;
    }
    for &v in z {
        boundary[v] = true;
    }
    let mut scratch = vec![Level::ZERO; n];
    let mut row = vec![0.0; n];
    let fill = |x: usize, scratch: &mut [Level], row: &mut [f64]| {
        space.delta_row(x, scratch);
        let norm = space.log_row_norm(x, params);
        for (o, d) in row.iter_mut().zip(scratch.iter()) {
            *o = (norm - params.beta * d.value(params.h)).exp();
        }
    };
    for _ in 0..max_iter {
        let mut change = 0.0f64;
        for x in 0..n {
            if boundary[x] {
                continue;
            }
            fill(x, &mut scratch, &mut row);
            let mut acc = 0.0;
            let mut out = 0.0;
            for (yy, &p) in row.iter().enumerate() {
                if yy != x {
                    acc += p * h[yy];
                    out += p;
                }
            }
            let v = acc / out;
            change = change.max((v - h[x]).abs());
            h[x] = v;
        }
        if change < tol {
            let mut residual = 0.0f64;
            for x in 0..n {
                if !boundary[x] {
                    fill(x, &mut scratch, &mut row);
                    let ph: f64 = row.iter().zip(&h).map(|(p, v)| p * v).sum();
                    residual = residual.max((h[x] - ph).abs());
                }
            }
            return Ok(HarmonicSolve {
                y: y.to_vec(),
                z: z.to_vec(),
                values: h,
                residual,
            });
        }
    }
    Err(Error::NoConvergence(format!(
        "Gauss-Seidel did not reach {tol} in {max_iter} sweeps"
    )))
}
