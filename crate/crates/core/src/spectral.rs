//! Dense transition matrices, spectral gap, total-variation mixing time
//! and the self-loop rate of a stable state.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{local_field, log_sigmoid, ModelParams};
use crate::lattice::SpinConfig;
use crate::potential::{ExactChain, DENSE_CAP_SITES};
use crate::space::StateSpace;

/// Row-stochastic matrix with its stationary measure.
#[derive(Clone, Debug)]
pub struct DenseKernel {
    pub p: DMatrix<f64>,
    pub mu: DVector<f64>,
}

pub fn assemble_dense(space: &StateSpace, params: ModelParams) -> Result<DenseKernel> {
    if space.sites() > DENSE_CAP_SITES {
        return Err(Error::TooLarge {
            sites: space.sites(),
            cap: DENSE_CAP_SITES,
        });
    }
    let chain = ExactChain::new(space, params)?;
    Ok(DenseKernel::from_chain(&chain))
}

impl DenseKernel {
    pub fn from_chain(chain: &ExactChain) -> Self {
        let n = chain.len();
        let p = DMatrix::from_fn(n, n, |x, y| chain.prob(x, y));
        let mu = DVector::from_iterator(n, chain.gibbs().mu_vec());
        DenseKernel { p, mu }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.p
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max |mu(x) p(x,y) - mu(y) p(y,x)|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in x + 1..n {
                let d = self.mu[x] * self.p[(x, y)] - self.mu[y] * self.p[(y, x)];
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// `D^{1/2} P D^{-1/2}` with `D = diag(mu)`, symmetric for a reversible kernel.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let s = self.mu.map(f64::sqrt);
        let n = self.len();
        let mut m = DMatrix::from_fn(n, n, |x, y| s[x] * self.p[(x, y)] / s[y]);
        // Average out rounding asymmetry.
        let t = m.transpose();
        m += t;
        m *= 0.5;
        m
    }

    /// `max_x ||M(x, .) - mu||_TV`.
    pub fn tv_distance(&self, m: &DMatrix<f64>) -> f64 {
        m.row_iter()
            .map(|r| {
                0.5 * r
                    .iter()
                    .zip(self.mu.iter())
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseSpectrum {
    /// Eigenvalues of the symmetrized kernel, descending.
    pub eigenvalues: Vec<f64>,
    pub rho: f64,
    pub a2: f64,
    /// `||S sqrt(mu) - sqrt(mu)||_inf`.
    pub top_residual: f64,
}

/// Full symmetric eigensolve; for small spaces and moderate `beta` only,
/// since `1 - a2` is formed by subtraction.
pub fn dense_spectrum(k: &DenseKernel) -> DenseSpectrum {
    let s = k.symmetrized();
    let sq = k.mu.map(f64::sqrt);
    let top_residual = (&s * &sq - &sq).amax();
    let eig = SymmetricEigen::new(s);
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let a2 = ev.get(1).copied().unwrap_or(0.0);
    DenseSpectrum {
        eigenvalues: ev,
        rho: 1.0 - a2,
        a2,
        top_residual,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub rho: f64,
    pub a2: f64,
    /// Smallest Ritz values of `I - P` on the mean-zero subspace, ascending.
    pub ritz: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct GapOptions {
    pub block: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions {
            block: 4,
            tol: 1e-12,
            max_iter: 500,
            seed: 0x5eed,
        }
    }
}

fn center(v: &mut [f64], mu: &[f64]) {
    let m: f64 = v.iter().zip(mu).map(|(a, b)| a * b).sum();
    for x in v.iter_mut() {
        *x -= m;
    }
}

fn mu_dot(a: &[f64], b: &[f64], mu: &[f64]) -> f64 {
    a.iter().zip(b).zip(mu).map(|((x, y), m)| x * y * m).sum()
}

fn orthonormalize(vs: &mut [Vec<f64>], mu: &[f64]) -> Result<()> {
    for i in 0..vs.len() {
        for _ in 0..2 {
            for j in 0..i {
                let c = mu_dot(&vs[i], &vs[j], mu);
                let (lo, hi) = vs.split_at_mut(i);
                for (a, b) in hi[0].iter_mut().zip(&lo[j]) {
                    *a -= c * b;
                }
            }
        }
        let nrm = mu_dot(&vs[i], &vs[i], mu).sqrt();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::Internal("subspace collapsed".into()));
        }
        for a in vs[i].iter_mut() {
            *a /= nrm;
        }
    }
    Ok(())
}

/// Spectral gap by inverse subspace iteration on `I - P`.
///
/// Solves use a subtraction-free elimination grounded at the most likely
/// state, and Ritz values come from the Dirichlet form, a sum of positive
/// terms, so `rho` keeps its relative accuracy even when it is far below
/// machine epsilon.
pub fn spectral_gap(chain: &ExactChain, opts: GapOptions) -> Result<SpectralGap> {
    let n = chain.len();
    let mu = chain.gibbs().mu_vec();
    let ground = (0..n)
        .max_by(|&a, &b| mu[a].partial_cmp(&mu[b]).unwrap())
        .unwrap();
    let g = chain.eliminate_except(&[ground])?;
    let k = opts.block.min(n - 1).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut vs: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            center(&mut v, &mu);
            v
        })
        .collect();
    orthonormalize(&mut vs, &mu)?;
    let mut prev = f64::NAN;
    for it in 1..=opts.max_iter {
        for v in vs.iter_mut() {
            let mut w = g.solve_grounded(v)?;
            center(&mut w, &mu);
            *v = w;
        }
        orthonormalize(&mut vs, &mu)?;
        let a = chain.dirichlet_gram(&vs);
        let am = DMatrix::from_fn(k, k, |i, j| a[i][j]);
        let eig = SymmetricEigen::new(am);
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
        let ritz: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        // Rotate onto the Ritz vectors.
        let rotated: Vec<Vec<f64>> = idx
            .iter()
            .map(|&c| {
                let mut out = vec![0.0; n];
                for (j, v) in vs.iter().enumerate() {
                    let q = eig.eigenvectors[(j, c)];
                    for (o, x) in out.iter_mut().zip(v) {
                        *o += q * x;
                    }
                }
                out
            })
            .collect();
        vs = rotated;
        let rho = ritz[0];
        if (rho - prev).abs() <= opts.tol * rho.abs() {
            return Ok(SpectralGap {
                rho,
                a2: 1.0 - rho,
                ritz,
                iterations: it,
            });
        }
        prev = rho;
    }
    Err(Error::NoConvergence(format!(
        "subspace iteration did not settle in {} iterations",
        opts.max_iter
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingTime {
    pub steps: u64,
    /// True when the cap was reached and `steps` is only a lower bound.
    pub lower_bound: bool,
}

pub const MIXING_CAP_LOG2: u32 = 40;

fn renormalize_rows(m: &mut DMatrix<f64>) {
    for mut r in m.row_iter_mut() {
        let s = r.sum();
        r /= s;
    }
}

/// Smallest `n` with `max_x ||P^n(x,.) - mu||_TV <= eps`, by repeated
/// squaring followed by a binary descent over the stored powers.
pub fn tv_mixing_time(k: &DenseKernel, eps: f64) -> Result<MixingTime> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Param(format!("epsilon must lie in (0,1), got {eps}")));
    }
    let n = k.len();
    let id = DMatrix::<f64>::identity(n, n);
    if k.tv_distance(&id) <= eps {
        return Ok(MixingTime {
            steps: 0,
            lower_bound: false,
        });
    }
    let mut powers = vec![k.p.clone()];
    while k.tv_distance(powers.last().unwrap()) > eps {
        if powers.len() > MIXING_CAP_LOG2 as usize {
            return Ok(MixingTime {
                steps: 1u64 << MIXING_CAP_LOG2,
                lower_bound: true,
            });
        }
        let last = powers.last().unwrap();
        let mut sq = last * last;
        renormalize_rows(&mut sq);
        powers.push(sq);
    }
    let top = powers.len() - 1;
    let mut m = id;
    let mut steps = 0u64;
    for j in (0..top).rev() {
        let mut c = &m * &powers[j];
        renormalize_rows(&mut c);
        if k.tv_distance(&c) > eps {
            m = c;
            steps += 1u64 << j;
        }
    }
    Ok(MixingTime {
        steps: steps + 1,
        lower_bound: false,
    })
}

/// `-(1/beta) log p(s, s)` for a configuration `s`.
pub fn self_loop_rate(params: &ModelParams, s: &SpinConfig) -> f64 {
    let lp: f64 = (0..s.sites())
        .map(|i| {
            let f = local_field(s, i) as f64 + params.h;
            log_sigmoid(2.0 * params.beta * s.spin(i) as f64 * f)
        })
        .sum();
    -lp / params.beta
}

/// `(beta, -(1/beta) log p(s,s))` over a ladder.
pub fn assumption_p0_check(h: f64, betas: &[f64], s: &SpinConfig) -> Result<Vec<(f64, f64)>> {
    betas
        .iter()
        .map(|&b| Ok((b, self_loop_rate(&ModelParams::new(h, b)?, s))))
        .collect()
}
