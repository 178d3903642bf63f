use pcascape::kernel::ModelParams;
use pcascape::lattice::{Pattern, SpinConfig, Torus};
use pcascape::mc::*;
use pcascape::potential::{standard_pool, ExactChain};
use pcascape::space::StateSpace;

#[test]
fn return_time_to_start_is_at_least_one() {
    let t = Torus::new(4, 4).unwrap();
    let s = SpinConfig::named(t, Pattern::Plus);
    let p = ModelParams::new(0.5, 0.3).unwrap();
    let r = run_hitting_trials(&p, &Start::Config(s.clone()), &[Target::States(vec![s])], 50, 1_000_000, 1).unwrap();
    assert!(r.iter().all(|x| x.hit_time.unwrap() >= 1 && x.target == Some(0)));
}

#[test]
fn fair_coins_hit_nonnegative_magnetization_quickly() {
    let t = Torus::new(6, 6).unwrap();
    let p = ModelParams::new(0.5, 1e-12).unwrap();
    let r = run_hitting_trials(
        &p,
        &Start::Config(SpinConfig::minus(t)),
        &[Target::MagnetizationAtLeast(0)],
        2000,
        1000,
        2,
    )
    .unwrap();
    assert!(mean_hit_time(&r).unwrap().mean <= 3.0);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let t = Torus::new(6, 6).unwrap();
    let p = ModelParams::new(0.9, 0.8).unwrap();
    let start = Start::Config(SpinConfig::minus(t));
    let tg = [Target::named(t, &[Pattern::Plus])];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_hitting_trials(&p, &start, &tg, 64, 1_000_000, 77).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert_eq!(a, run_hitting_trials(&p, &start, &tg, 64, 1_000_000, 77).unwrap());
    assert_ne!(a, run_hitting_trials(&p, &start, &tg, 64, 1_000_000, 78).unwrap());
}

#[test]
fn caps_are_reported() {
    let t = Torus::new(6, 6).unwrap();
    let p = ModelParams::new(0.5, 3.0).unwrap();
    let r = run_hitting_trials(&p, &Start::Config(SpinConfig::minus(t)), &[Target::named(t, &[Pattern::Plus])], 5, 10, 1).unwrap();
    assert!(r.iter().all(|x| x.capped && x.hit_time.is_none()));
    assert!(mean_hit_time(&r).is_err());
}

#[test]
fn arrhenius_fit_of_exact_line() {
    let pts: Vec<(f64, f64)> = [1.0, 1.2, 1.4].iter().map(|&b| (b, (11.4 * b + 0.3f64).exp())).collect();
    let f = arrhenius_fit(&pts).unwrap();
    assert!((f.slope - 11.4).abs() < 1e-9);
    assert!((f.intercept - 0.3).abs() < 1e-9);
    assert!((f.r2 - 1.0).abs() < 1e-12);
    assert!(arrhenius_fit(&pts[..2]).is_err());
}

#[test]
fn wilson_interval_contains_estimate() {
    let w = wilson(30, 100, 1.96);
    assert!(w.wilson_lo < 0.3 && 0.3 < w.wilson_hi);
    let z = wilson(0, 1000, 1.96);
    assert_eq!(z.wilson_lo, 0.0);
    assert!(z.wilson_hi < 0.004);
}

#[test]
fn visit_before_complements() {
    let t = Torus::new(6, 6).unwrap();
    let p = ModelParams::new(0.9, 0.7).unwrap();
    let start = Start::Config(SpinConfig::minus(t));
    let a = Target::named(t, &[Pattern::ChessEven, Pattern::ChessOdd]);
    let b = Target::named(t, &[Pattern::Plus]);
    let ab = visit_before(&p, &start, &a, &b, 300, u64::MAX, 4).unwrap();
    let ba = visit_before(&p, &start, &b, &a, 300, u64::MAX, 4).unwrap();
    assert_eq!(ab.capped, 0);
    assert!((ab.a_first.estimate + ba.a_first.estimate - 1.0).abs() < 1e-12);
}

#[test]
fn recurrence_with_large_margin() {
    let t = Torus::new(12, 12).unwrap();
    let p = ModelParams::new(0.9, 1.2).unwrap();
    let r = recurrence_check(&p, t, 2.2, None, 5.0, 1000, 3).unwrap();
    assert_eq!(r.trap_set.exceeded.successes, 0);
    let r = recurrence_check(&p, t, 2.2, None, 0.5, 1000, 4).unwrap();
    assert!(r.trap_set.exceeded.estimate <= 0.01);
    assert!(r.trap_set.median_hit.is_some());
}

#[test]
fn mean_hitting_agrees_with_exact_on_4x2() {
    let torus = Torus::new(4, 2).unwrap();
    let sp = StateSpace::new(torus, 13).unwrap();
    let p = ModelParams::new(0.5, 1.0).unwrap();
    let ch = ExactChain::new(&sp, p).unwrap();
    let plus = SpinConfig::named(torus, Pattern::Plus);
    let minus = SpinConfig::minus(torus);
    let pool = standard_pool(&sp, 0, 0);
    let red = ch.reduce(&pool).unwrap();
    let exact = red
        .mean_hitting(sp.id_of(&minus).unwrap(), &[sp.id_of(&plus).unwrap()])
        .unwrap();
    let r = run_hitting_trials(&p, &Start::Config(minus), &[Target::States(vec![plus])], 4000, u64::MAX, 11).unwrap();
    let m = mean_hit_time(&r).unwrap();
    assert!((m.mean - exact).abs() <= 3.0 * m.std_err, "{} +- {} vs {exact}", m.mean, m.std_err);
}
