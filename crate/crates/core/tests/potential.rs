use nalgebra::{DMatrix, DVector};
use pcascape::energy::hamiltonian_g;
use pcascape::kernel::{log_step_prob, ModelParams};
use pcascape::lattice::{Pattern, SpinConfig, Torus};
use pcascape::potential::*;
use pcascape::space::StateSpace;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space(r: usize, c: usize) -> StateSpace {
    StateSpace::new(Torus::new(r, c).unwrap(), 13).unwrap()
}

fn named(sp: &StateSpace, p: Pattern) -> usize {
    sp.id_of(&SpinConfig::named(sp.torus(), p)).unwrap()
}

/// Dense LU solve of `(I - P) u = b` on the complement of `a`, with
/// `u = fixed` on `a`.
fn dense_solve(ch: &ExactChain, a: &[usize], fixed: impl Fn(usize) -> f64, b: f64) -> Vec<f64> {
    let n = ch.len();
    let inner: Vec<usize> = (0..n).filter(|x| !a.contains(x)).collect();
    let m = inner.len();
    let mut mat = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::from_element(m, b);
    for (i, &x) in inner.iter().enumerate() {
        for (j, &y) in inner.iter().enumerate() {
            mat[(i, j)] = if i == j { 1.0 } else { 0.0 } - ch.prob(x, y);
        }
        for &t in a {
            rhs[i] += ch.prob(x, t) * fixed(t);
        }
    }
    let sol = mat.lu().solve(&rhs).unwrap();
    let mut out: Vec<f64> = (0..n).map(&fixed).collect();
    for (i, &x) in inner.iter().enumerate() {
        out[x] = sol[i];
    }
    out
}

#[test]
fn gibbs_matches_hamiltonian_g_on_2x2() {
    let sp = space(2, 2);
    let params = ModelParams::new(0.5, 1.3).unwrap();
    let g = GibbsMeasure::new(&sp, &params);
    let raw: Vec<f64> = (0..sp.len())
        .map(|x| (-params.beta * hamiltonian_g(&params, &sp.config(x))).exp())
        .collect();
    let z: f64 = raw.iter().sum();
    for x in 0..sp.len() {
        assert!((g.mu(x) - raw[x] / z).abs() < 1e-14);
        assert!((g.log_weight(x) - raw[x].ln()).abs() < 1e-10);
    }
}

#[test]
fn dirichlet_form_matches_brute_force_on_2x2() {
    let sp = space(2, 2);
    let params = ModelParams::new(0.5, 0.7).unwrap();
    let ch = ExactChain::new(&sp, params).unwrap();
    let n = sp.len();
    let w: Vec<f64> = (0..n)
        .map(|x| (-params.beta * hamiltonian_g(&params, &sp.config(x))).exp())
        .collect();
    let z: f64 = w.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..20 {
        let f: Vec<f64> = if trial < 16 {
            (0..n).map(|x| if x == trial { 1.0 } else { 0.0 }).collect()
        } else {
            (0..n).map(|_| rng.random::<f64>()).collect()
        };
        let mut direct = 0.0;
        for x in 0..n {
            for y in 0..n {
                let p = log_step_prob(&params, &sp.config(x), &sp.config(y)).unwrap().exp();
                direct += 0.5 * w[x] / z * p * (f[x] - f[y]).powi(2);
            }
        }
        let d = ch.dirichlet_form(&f);
        assert!((d - direct).abs() <= 1e-13 * direct.max(1e-300), "{d} vs {direct}");
        assert!(d >= 0.0);
    }
    assert_eq!(ch.dirichlet_form(&vec![3.5; n]), 0.0);
}

#[test]
fn stationarity_and_detailed_balance() {
    for (r, c) in [(4, 2), (6, 2)] {
        let sp = space(r, c);
        for beta in [1.0, 2.0, 3.0] {
            let ch = ExactChain::new(&sp, ModelParams::new(0.5, beta).unwrap()).unwrap();
            assert!(ch.stationarity_residual() <= 1e-10);
            assert!(ch.detailed_balance_residual() <= 1e-12);
            assert!(ch.max_row_sum_error() <= 1e-12);
        }
    }
}

#[test]
fn pooled_queries_match_dense_lu_on_4x2() {
    let sp = space(4, 2);
    let ch = ExactChain::new(&sp, ModelParams::new(0.5, 1.0).unwrap()).unwrap();
    let pool = standard_pool(&sp, 20, 3);
    let red = ch.reduce(&pool).unwrap();
    let plus = named(&sp, Pattern::Plus);
    let minus = named(&sp, Pattern::Minus);
    let ce = named(&sp, Pattern::ChessEven);
    // Equilibrium potential on the whole space.
    let hs = red.equilibrium_potential(&[plus], &[minus, ce]).unwrap();
    let oracle = dense_solve(&ch, &[plus, minus, ce], |x| if x == plus { 1.0 } else { 0.0 }, 0.0);
    for x in 0..sp.len() {
        assert!((hs.values[x] - oracle[x]).abs() < 1e-10);
        assert!((-1e-15..=1.0 + 1e-15).contains(&hs.values[x]));
    }
    assert!(hs.residual < 1e-12);
    // Mean hitting times of {plus}.
    let u = red.mean_hitting_all(&[plus]).unwrap();
    let oracle = dense_solve(&ch, &[plus], |_| 0.0, 1.0);
    for x in 0..sp.len() {
        assert!((u[x] - oracle[x]).abs() < 1e-9 * oracle[x].max(1.0));
    }
    assert!((red.mean_hitting(minus, &[plus]).unwrap() - oracle[minus]).abs() < 1e-9 * oracle[minus]);
}

#[test]
fn capacity_routes_and_symmetry() {
    let sp = space(4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for beta in [0.5, 1.0, 3.0] {
        let ch = ExactChain::new(&sp, ModelParams::new(0.5, beta).unwrap()).unwrap();
        let pool = standard_pool(&sp, 30, 4);
        let red = ch.reduce(&pool).unwrap();
        for _ in 0..10 {
            let mut s: Vec<usize> = pool.choose_multiple(&mut rng, 5).copied().collect();
            let y: Vec<usize> = s.drain(..2).collect();
            let z = s;
            let c1 = red.capacity_dirichlet(&y, &z).unwrap();
            let c2 = red.capacity_escape(&y, &z).unwrap();
            let c3 = red.capacity_escape(&z, &y).unwrap();
            let c4 = red.capacity_trace(&y, &z).unwrap();
            assert!((c1 - c2).abs() <= 1e-8 * c2, "{c1} {c2}");
            assert!((c2 - c3).abs() <= 1e-9 * c2);
            assert!((c4 - c2).abs() <= 1e-8 * c2);
        }
    }
}

#[test]
fn one_step_escape_capacity() {
    let sp = space(4, 2);
    let ch = ExactChain::new(&sp, ModelParams::new(0.5, 1.5).unwrap()).unwrap();
    let all: Vec<usize> = (0..sp.len()).collect();
    let red = ch.reduce(&all).unwrap();
    for z in [0usize, 17, 100, 255] {
        let rest: Vec<usize> = all.iter().copied().filter(|&x| x != z).collect();
        let cap = red.capacity_escape(&[z], &rest).unwrap();
        let mu = ch.gibbs().mu(z);
        let out: f64 = (0..sp.len()).filter(|&y| y != z).map(|y| ch.prob(z, y)).sum();
        assert!((cap - mu * out).abs() <= 1e-12 * mu * out);
        assert!((cap - mu * (1.0 - ch.prob(z, z))).abs() <= 1e-12 * mu);
        // Whole-space target: one step always lands.
        assert!((red.mean_hitting(z, &all).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn addition_identity_and_hitting_bounds_on_4x2() {
    let sp = space(4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for beta in [0.5, 1.0, 2.0] {
        let ch = ExactChain::new(&sp, ModelParams::new(0.5, beta).unwrap()).unwrap();
        let pool = standard_pool(&sp, 30, 6);
        let red = ch.reduce(&pool).unwrap();
        for _ in 0..20 {
            let s: Vec<usize> = pool.choose_multiple(&mut rng, 4).copied().collect();
            let (y, z, w) = (s[0], s[1], vec![s[2], s[3]]);
            let lhs = red.mean_hitting(y, &[z]).unwrap();
            let mut b = w.clone();
            b.push(z);
            let first = red.mean_hitting(y, &b).unwrap();
            let dist = red.hitting_distribution(y, &b).unwrap();
            let mix: f64 = w
                .iter()
                .zip(&dist)
                .map(|(&wi, &p)| p * red.mean_hitting(wi, &[z]).unwrap())
                .sum();
            assert!((lhs - first - mix).abs() <= 1e-8 * lhs);
            assert!(lhs >= 1.0);
            // Hitting probability, complement and the capacity bound.
            let hp = red.hitting_prob(y, &w, &[z]).unwrap();
            let hq = red.hitting_prob(y, &[z], &w).unwrap();
            assert!((hp.prob + hq.prob - 1.0).abs() < 1e-10);
            assert!(hp.prob <= hp.capacity_bound * (1.0 + 1e-9));
        }
    }
}

#[test]
fn pta_ratio_trend_and_negative_control() {
    let sp = space(4, 2);
    let plus = named(&sp, Pattern::Plus);
    let minus = named(&sp, Pattern::Minus);
    let ce = named(&sp, Pattern::ChessEven);
    let pool = standard_pool(&sp, 20, 8);
    // Two states with one spin flipped from plus: not traps.
    let a = plus ^ 1;
    let b = plus ^ 2;
    let ratio = |beta: f64, m: &[usize]| {
        let ch = ExactChain::new(&sp, ModelParams::new(0.5, beta).unwrap()).unwrap();
        let mut p = pool.clone();
        p.extend(m);
        ch.reduce(&p).unwrap().pta_ratio(m).unwrap()
    };
    let r1 = ratio(1.0, &[plus, ce, minus]);
    let r2 = ratio(2.0, &[plus, ce, minus]);
    assert!(r2 < r1, "{r1} {r2}");
    let n1 = ratio(1.0, &[a, b]);
    let n3 = ratio(3.0, &[a, b]);
    assert!(n3 >= n1 || n3 > 1.0, "{n1} {n3}");
}

#[test]
fn iterative_solver_agrees_with_elimination() {
    let sp = space(4, 2);
    let params = ModelParams::new(0.5, 0.5).unwrap();
    let ch = ExactChain::new(&sp, params).unwrap();
    let plus = named(&sp, Pattern::Plus);
    let minus = named(&sp, Pattern::Minus);
    let red = ch.reduce(&[plus, minus]).unwrap();
    let exact = red.equilibrium_potential(&[plus], &[minus]).unwrap();
    let it = harmonic_iterative(&sp, &params, &[plus], &[minus], 1e-13, 100_000).unwrap();
    for x in 0..sp.len() {
        assert!((exact.values[x] - it.values[x]).abs() < 1e-10);
    }
}

#[test]
fn rejects_bad_sets() {
    let sp = space(2, 2);
    let ch = ExactChain::new(&sp, ModelParams::new(0.5, 1.0).unwrap()).unwrap();
    let red = ch.reduce(&[0, 1, 2, 3]).unwrap();
    assert!(red.capacity_escape(&[0, 1], &[1, 2]).is_err());
    assert!(red.capacity_escape(&[], &[1]).is_err());
    assert!(red.mean_hitting(5, &[1]).is_err());
}
