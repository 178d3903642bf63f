use nalgebra::DMatrix;
use pcascape::kernel::ModelParams;
use pcascape::lattice::{Pattern, SpinConfig, Torus};
use pcascape::potential::ExactChain;
use pcascape::space::StateSpace;
use pcascape::spectral::*;

fn space(r: usize, c: usize) -> StateSpace {
    StateSpace::new(Torus::new(r, c).unwrap(), 13).unwrap()
}

#[test]
fn kernel_is_positive_and_near_uniform_at_tiny_beta() {
    let sp = space(2, 2);
    let k = assemble_dense(&sp, ModelParams::new(0.5, 1.0).unwrap()).unwrap();
    assert!(k.p.iter().all(|&v| v > 0.0));
    assert!(k.max_row_sum_error() <= 1e-12);
    let hot = assemble_dense(&sp, ModelParams::new(0.5, 1e-12).unwrap()).unwrap();
    let u = 1.0 / 16.0;
    assert!(hot.p.iter().all(|&v| (v - u).abs() < 1e-9));
    let s = dense_spectrum(&hot);
    assert!(s.a2.abs() < 1e-9 && (s.rho - 1.0).abs() < 1e-9);
    assert_eq!(tv_mixing_time(&hot, 0.1).unwrap().steps, 1);
}

#[test]
fn detailed_balance_and_symmetrized_spectrum_on_4x2() {
    let sp = space(4, 2);
    let k = assemble_dense(&sp, ModelParams::new(0.9, 1.0).unwrap()).unwrap();
    assert!(k.detailed_balance_residual() <= 1e-12);
    let s = dense_spectrum(&k);
    assert!(s.top_residual <= 1e-10);
    assert!((s.eigenvalues[0] - 1.0).abs() < 1e-10);
    assert!(s.eigenvalues.iter().all(|&e| (-1.0 - 1e-12..=1.0 + 1e-12).contains(&e)));
}

#[test]
fn subspace_iteration_matches_dense_eigensolve() {
    let sp = space(4, 2);
    for h in [0.5, 0.9] {
        let ch = ExactChain::new(&sp, ModelParams::new(h, 1.0).unwrap()).unwrap();
        let dense = dense_spectrum(&DenseKernel::from_chain(&ch));
        let gap = spectral_gap(&ch, GapOptions::default()).unwrap();
        assert!((gap.rho - dense.rho).abs() <= 1e-8 * dense.rho, "{} {}", gap.rho, dense.rho);
    }
}

#[test]
fn tv_distance_is_nonincreasing_and_mixing_time_monotone_in_eps() {
    let sp = space(4, 2);
    let k = assemble_dense(&sp, ModelParams::new(0.9, 1.0).unwrap()).unwrap();
    let mut m = DMatrix::<f64>::identity(k.len(), k.len());
    let mut prev = f64::INFINITY;
    for _ in 0..60 {
        m = &m * &k.p;
        let d = k.tv_distance(&m);
        assert!(d <= prev + 1e-12);
        prev = d;
    }
    let mut last = u64::MAX;
    for eps in [0.05, 0.1, 0.25, 0.5, 0.9] {
        let t = tv_mixing_time(&k, eps).unwrap();
        assert!(!t.lower_bound);
        assert!(t.steps <= last);
        last = t.steps;
    }
}

#[test]
fn mixing_time_is_minimal() {
    let sp = space(2, 2);
    let k = assemble_dense(&sp, ModelParams::new(0.9, 1.5).unwrap()).unwrap();
    let t = tv_mixing_time(&k, 0.25).unwrap().steps as usize;
    let mut m = DMatrix::<f64>::identity(k.len(), k.len());
    for n in 1..=t {
        m = &m * &k.p;
        let d = k.tv_distance(&m);
        if n < t {
            assert!(d > 0.25);
        } else {
            assert!(d <= 0.25);
        }
    }
}

#[test]
fn assumption_p0() {
    let t = Torus::new(4, 4).unwrap();
    let plus = SpinConfig::named(t, Pattern::Plus);
    let rows = assumption_p0_check(0.5, &[1.0, 2.0, 5.0, 10.0], &plus).unwrap();
    assert!(rows.windows(2).all(|w| w[1].1 < w[0].1));
    assert!(rows[3].1 <= 1e-30);
    assert!(rows[3].1 > 0.0);
}

#[test]
fn oversized_dense_is_refused() {
    let sp = StateSpace::new(Torus::new(4, 4).unwrap(), 16).unwrap();
    assert!(matches!(
        assemble_dense(&sp, ModelParams::new(0.5, 1.0).unwrap()),
        Err(pcascape::Error::TooLarge { .. })
    ));
}
