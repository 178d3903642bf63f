use pcascape::energy::ENERGY_TOL;
use pcascape::landscape::{trap_waypoint_gamma, Landscape, ThresholdOracle};
use pcascape::lattice::{Pattern, SpinConfig, Torus};
use pcascape::space::StateSpace;

fn space(r: usize, c: usize) -> StateSpace {
    StateSpace::new(Torus::new(r, c).unwrap(), StateSpace::DEFAULT_CAP).unwrap()
}

fn named(sp: &StateSpace, p: Pattern) -> usize {
    sp.id_of(&SpinConfig::named(sp.torus(), p)).unwrap()
}

#[test]
fn stability_levels_agree_with_threshold_oracle_6x2() {
    let sp = space(6, 2);
    let land = Landscape::new(&sp, 0.5).unwrap();
    let oracle = ThresholdOracle::new(&sp, 0.5);
    for x in 0..sp.len() {
        let a = land.stability_level(x);
        let b = oracle.stability_level(x);
        assert!(a == b || (a - b).abs() < ENERGY_TOL, "state {x}: {a} vs {b}");
    }
}

#[test]
fn non_traps_have_zero_stability() {
    let sp = space(4, 2);
    let land = Landscape::new(&sp, 0.3).unwrap();
    for x in 0..sp.len() {
        if !land.is_trap(x) {
            assert_eq!(land.stability_level(x), 0.0);
        }
    }
    let plus = named(&sp, Pattern::Plus);
    assert!(land.stability_level(plus).is_infinite());
}

#[test]
fn metastable_sets_on_small_tori() {
    for (r, c, h, gamma) in [(4, 2, 0.5, 9.0), (6, 2, 0.5, 9.0), (6, 2, 0.9, 6.6), (4, 2, 0.3, 10.2)] {
        let sp = space(r, c);
        let land = Landscape::new(&sp, h).unwrap();
        let m = land.metastable();
        assert!((m.gamma_m - gamma).abs() < 1e-9, "{r}x{c} h={h}: {}", m.gamma_m);
        assert_eq!(m.ground, vec![named(&sp, Pattern::Plus)]);
        let mut want = vec![
            named(&sp, Pattern::Minus),
            named(&sp, Pattern::ChessEven),
            named(&sp, Pattern::ChessOdd),
        ];
        want.sort();
        assert_eq!(m.metastable, want);
    }
}

#[test]
fn search_and_sweep_stability_agree() {
    let sp = space(4, 2);
    let land = Landscape::new(&sp, 0.5).unwrap();
    for x in land.traps() {
        let a = land.stability_level(x);
        let b = land.stability_by_search(x);
        assert!(a == b || (a - b).abs() < ENERGY_TOL);
    }
}

#[test]
fn comm_height_named_pairs() {
    let sp = space(4, 2);
    let land = Landscape::new(&sp, 0.5).unwrap();
    let ce = named(&sp, Pattern::ChessEven);
    let co = named(&sp, Pattern::ChessOdd);
    assert_eq!(land.comm_height(ce, co), land.energy(ce));
    assert_eq!(land.comm_height(ce, ce), land.energy(ce));
    let m = named(&sp, Pattern::Minus);
    let p = named(&sp, Pattern::Plus);
    assert_eq!(land.comm_height(m, p), land.comm_height(p, m));
}

#[test]
fn filtration_depth_matches_gamma_m() {
    for h in [0.5, 0.9] {
        let sp = space(6, 2);
        let land = Landscape::new(&sp, h).unwrap();
        let f = land.filtration();
        let g = land.metastable().gamma_m;
        assert!((f.max_depth_without_ground - g).abs() < 1e-9);
        let minus = named(&sp, Pattern::Minus);
        assert!((f.depth_at_join[minus] - land.stability_level(minus)).abs() < 1e-9);
    }
}

#[test]
fn non_trap_singletons_have_zero_depth() {
    let sp = space(4, 2);
    let land = Landscape::new(&sp, 0.5).unwrap();
    let f = land.filtration();
    let mut seen = 0;
    for e in &f.events {
        for ((&id, &d), &size) in e.components.iter().zip(&e.depths).zip(&e.sizes) {
            if size == 1 && !land.is_trap(id) {
                assert_eq!(d, 0.0);
                seen += 1;
            }
        }
    }
    assert!(seen > 0);
}

#[test]
fn trap_waypoints_reproduce_gamma_m_on_6x2() {
    for h in [0.5, 0.9] {
        let sp = space(6, 2);
        let land = Landscape::new(&sp, h).unwrap();
        let g = land.metastable().gamma_m;
        assert!((trap_waypoint_gamma(&land) - g).abs() < 1e-9);
    }
}
