//! Subtraction-free (GTH) elimination of states from a stochastic matrix.
//!
//! Eliminating state `k` replaces every remaining transition `i -> j` by
//! `w(i,j) + w(i,k) w(k,j) / s(k)`, where `s(k)` is the sum of the
//! remaining off-diagonal entries of row `k`. Diagonals are never used,
//! so no step subtracts and small rates keep their relative accuracy.
//! The eliminated rows and the multipliers are kept, which makes the
//! result an LU factorisation of `I - P` usable for solves.

use crate::error::{Error, Result};

const BLOCK: usize = 64;

#[derive(Clone, Debug)]
pub struct Gth {
    n: usize,
    n_elim: usize,
    labels: Vec<usize>,
    pos: Vec<usize>,
    /// `n x (n+1)` row-major; column `n` holds the expected real time per step.
    w: Vec<f64>,
    s: Vec<f64>,
}

impl Gth {
    /// `order` is a permutation of `0..n` listing the states to eliminate
    /// first; the last `n - n_elim` are kept. `row(i, out)` writes row `i`
    /// of the transition matrix in source order. `time[i]` defaults to 1.
    pub fn new(
        order: Vec<usize>,
        n_elim: usize,
        time: Option<&[f64]>,
        mut row: impl FnMut(usize, &mut [f64]),
    ) -> Result<Self> {
        let n = order.len();
        if n_elim > n {
            return Err(Error::Param(format!("cannot eliminate {n_elim} of {n} states")));
        }
        let mut pos = vec![usize::MAX; n];
        for (p, &l) in order.iter().enumerate() {
            if l >= n || pos[l] != usize::MAX {
                return Err(Error::Param("order is not a permutation".into()));
            }
            pos[l] = p;
        }
        let ld = n + 1;
        let mut w = vec![0.0; n * ld];
        let mut src = vec![0.0; n];
        for (p, &l) in order.iter().enumerate() {
            row(l, &mut src);
            let dst = &mut w[p * ld..(p + 1) * ld];
            for (j, &v) in src.iter().enumerate() {
                dst[pos[j]] = v;
            }
            dst[p] = 0.0;
            dst[n] = time.map_or(1.0, |t| t[l]);
        }
        let mut g = Gth {
            n,
            n_elim,
            labels: order,
            pos,
            w,
            s: vec![0.0; n_elim],
        };
        g.eliminate()?;
        Ok(g)
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, ld) = (self.n, self.n + 1);
        let mut k0 = 0;
        while k0 < self.n_elim {
            let k1 = (k0 + BLOCK).min(self.n_elim);
            // Panel rows, pivot by pivot.
            for p in k0..k1 {
                let s: f64 = self.w[p * ld + p + 1..p * ld + n].iter().sum();
                if !(s > 0.0) {
                    return Err(Error::Internal(format!(
                        "state {} has no exit to remaining states",
                        self.labels[p]
                    )));
                }
                self.s[p] = s;
                let (head, tail) = self.w.split_at_mut((p + 1) * ld);
                let prow = &head[p * ld + p + 1..p * ld + ld];
                for i in p + 1..k1 {
                    let r = &mut tail[(i - p - 1) * ld..(i - p) * ld];
                    let f = r[p] / s;
                    r[p] = f;
                    if f != 0.0 {
                        for (a, &b) in r[p + 1..].iter_mut().zip(prow) {
                            *a += f * b;
                        }
                    }
                }
            }
            if k1 == n {
                break;
            }
            // Multipliers of the rows below the panel.
            let (head, tail) = self.w.split_at_mut(k1 * ld);
            for r in tail.chunks_mut(ld) {
                for p in k0..k1 {
                    let f = r[p] / self.s[p];
                    r[p] = f;
                    if f != 0.0 {
                        let prow = &head[p * ld..p * ld + k1];
                        for q in p + 1..k1 {
                            r[q] += f * prow[q];
                        }
                    }
                }
            }
            // Trailing update: W[k1.., k1..] += F * U.
            let m = n - k1;
            let kk = k1 - k0;
            let cols = ld - k1;
            unsafe {
                let base = self.w.as_mut_ptr();
                matrixmultiply::dgemm(
                    m,
                    kk,
                    cols,
                    1.0,
                    base.add(k1 * ld + k0),
                    ld as isize,
                    1,
                    base.add(k0 * ld + k1),
                    ld as isize,
                    1,
                    1.0,
                    base.add(k1 * ld + k1),
                    ld as isize,
                    1,
                );
            }
            k0 = k1;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn eliminated(&self) -> usize {
        self.n_elim
    }

    pub fn position(&self, label: usize) -> usize {
        self.pos[label]
    }

    pub fn label(&self, p: usize) -> usize {
        self.labels[p]
    }

    /// Labels of the kept states, in kept order.
    pub fn kept(&self) -> &[usize] {
        &self.labels[self.n_elim..]
    }

    /// Trace-chain transition probability between two kept labels.
    pub fn kept_prob(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (self.pos[a], self.pos[b]);
        debug_assert!(pa >= self.n_elim && pb >= self.n_elim);
        if pa == pb {
            return 0.0;
        }
        self.w[pa * (self.n + 1) + pb]
    }

    /// Expected real time of one trace-chain step from a kept label.
    pub fn kept_time(&self, a: usize) -> f64 {
        self.w[self.pos[a] * (self.n + 1) + self.n]
    }

    /// Exit rate of an eliminated label when it was removed.
    pub fn exit_rate(&self, a: usize) -> f64 {
        self.s[self.pos[a]]
    }

    /// Solves `x(k) = (b(k) + sum_{j>k} w(k,j) x(j)) / s(k)` downward for
    /// every eliminated position, with kept values preset in `x`
    /// (position order). `b` is the forward-eliminated right-hand side;
    /// `with_time` uses the time column.
    fn back_substitute(&self, x: &mut [f64], b: Option<&[f64]>, with_time: bool) {
        let (n, ld) = (self.n, self.n + 1);
        for p in (0..self.n_elim).rev() {
            let r = &self.w[p * ld..p * ld + ld];
            let mut acc: f64 = r[p + 1..n].iter().zip(&x[p + 1..n]).map(|(a, b)| a * b).sum();
            if with_time {
                acc += r[n];
            }
            if let Some(b) = b {
                acc += b[p];
            }
            x[p] = acc / self.s[p];
        }
    }

    /// Extends values given on the kept states to every state by back
    /// substitution: harmonic extension when `with_time` is false,
    /// mean hitting times of the kept set when true. Label order in and out.
    pub fn extend(&self, kept_value: impl Fn(usize) -> f64, with_time: bool) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for p in self.n_elim..self.n {
            x[p] = kept_value(self.labels[p]);
        }
        self.back_substitute(&mut x, None, with_time);
        self.to_labels(&x)
    }

    /// Solves `(I - P) x = b` with `x = 0` on the single kept state, which
    /// is exact whenever `b` is orthogonal to the stationary measure.
    pub fn solve_grounded(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.n_elim + 1 != self.n {
            return Err(Error::Param("grounded solve needs exactly one kept state".into()));
        }
        let ld = self.n + 1;
        let mut bp = vec![0.0; self.n];
        for (l, &v) in b.iter().enumerate() {
            bp[self.pos[l]] = v;
        }
        for p in 0..self.n_elim {
            let bk = bp[p];
            if bk != 0.0 {
                for i in p + 1..self.n {
                    bp[i] += self.w[i * ld + p] * bk;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        self.back_substitute(&mut x, Some(&bp), false);
        Ok(self.to_labels(&x))
    }

    fn to_labels(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (p, &v) in x.iter().enumerate() {
            out[self.labels[p]] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> Vec<f64> {
        vec![0.5, 0.3, 0.2, 0.1, 0.6, 0.3, 0.4, 0.4, 0.2]
    }

    #[test]
    fn absorption_three_states() {
        // Absorb in {1, 2} from 0: P(hit 1 first) = 0.3 / 0.5.
        let p = chain3();
        let g = Gth::new(vec![0, 2, 1], 1, None, |i, out| out.copy_from_slice(&p[i * 3..i * 3 + 3])).unwrap();
        let h = g.extend(|l| if l == 1 { 1.0 } else { 0.0 }, false);
        assert!((h[0] - 0.6).abs() < 1e-15);
        // Mean time to {1,2} from 0 is 1 / 0.5.
        let t = g.extend(|_| 0.0, true);
        assert!((t[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn blocked_matches_direct_solve() {
        // Random positive chain larger than one block.
        let n = 150;
        let mut p = vec![0.0; n * n];
        let mut seed = 7u64;
        for i in 0..n {
            let mut tot = 0.0;
            for j in 0..n {
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = ((seed >> 11) as f64 / (1u64 << 53) as f64) + 1e-3;
                p[i * n + j] = v;
                tot += v;
            }
            for j in 0..n {
                p[i * n + j] /= tot;
            }
        }
        let order: Vec<usize> = (0..n).collect();
        let g = Gth::new(order, n - 1, None, |i, out| out.copy_from_slice(&p[i * n..(i + 1) * n])).unwrap();
        let t = g.extend(|_| 0.0, true);
        // Residual of u = 1 + P u on the eliminated states.
        for i in 0..n - 1 {
            let pu: f64 = (0..n).map(|j| p[i * n + j] * t[j]).sum();
            assert!((t[i] - 1.0 - pu).abs() < 1e-9 * t[i]);
        }
    }
}
