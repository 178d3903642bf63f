use pcascape::energy::{transition_energy, virtual_energy, Level};
use pcascape::lattice::Torus;
use pcascape::paths::*;

fn params(case: CaseId, rows: usize, l: usize, m: usize) -> CaseParams {
    CaseParams {
        case,
        torus: Torus::new(rows, rows).unwrap(),
        l,
        m,
        inner: None,
    }
}

#[test]
fn a1_small_example() {
    let p = params(CaseId::A1, 10, 3, 4);
    let path = build_reference_path(0.5, &p).unwrap();
    let r = verify_case_ceiling(0.5, &path).unwrap();
    assert_eq!(r.ceiling, 2.0);
    assert_eq!(r.drop, 1.0);
    assert!(r.matches_quoted);
    assert!(r.passes());
}

#[test]
fn a2_small_example() {
    let p = params(CaseId::A2, 12, 6, 6);
    let path = build_reference_path(0.5, &p).unwrap();
    let r = verify_case_ceiling(0.5, &path).unwrap();
    assert_eq!(r.ceiling, 3.0);
    assert_eq!(r.drop, 2.0);
    assert!(r.matches_quoted);
}

#[test]
fn a3_peaks_last_a4_peaks_first() {
    let a3 = build_reference_path(0.5, &params(CaseId::A3, 12, 3, 4)).unwrap();
    let r3 = verify_case_ceiling(0.5, &a3).unwrap();
    let pinned = a3.moves.iter().rposition(|m| *m != Move::T).unwrap();
    assert_eq!(r3.argmax_step, pinned);
    let a4 = build_reference_path(0.5, &params(CaseId::A4, 12, 6, 6)).unwrap();
    let r4 = verify_case_ceiling(0.5, &a4).unwrap();
    assert_eq!(r4.argmax_step, 0);
}

#[test]
fn e1_ceiling_is_2h() {
    let p = CaseParams::standard(CaseId::E1, 0.5).unwrap();
    let path = build_reference_path(0.5, &p).unwrap();
    assert_eq!(verify_case_ceiling(0.5, &path).unwrap().ceiling, 1.0);
}

#[test]
fn growth_below_critical_length_is_rejected() {
    let p = params(CaseId::A2, 12, 4, 5);
    assert!(matches!(
        build_reference_path(0.5, &p),
        Err(pcascape::Error::Constraint(_))
    ));
}

#[test]
fn default_suite_stays_below_v_star() {
    for h in [0.5, 0.9, 0.3, 0.45] {
        let suite = default_suite(h).unwrap();
        assert_eq!(suite.len(), 21);
        for (path, r) in &suite {
            assert!(r.passes(), "{} at h={h}: {r:?}", r.case);
            assert!(r.ceiling <= v_star(h).unwrap());
            // Every step energy is recomputed from the configurations.
            let s = &path.trace.states;
            let h0 = virtual_energy(h, &s[0]);
            let direct = s
                .windows(2)
                .map(|w| transition_energy(h, &w[0], &w[1]).unwrap() - h0)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((direct - r.ceiling).abs() < 1e-9);
            if r.case != CaseId::E2 {
                assert!(r.matches_quoted, "{} at h={h}: {} vs {}", r.case, r.ceiling, r.quoted_ceiling);
            }
        }
    }
}

#[test]
fn e2_single_flip_costs_2h() {
    for h in [0.3, 0.5, 0.9] {
        let p = CaseParams::standard(CaseId::E2, h).unwrap();
        let r = verify_case_ceiling(h, &build_reference_path(h, &p).unwrap()).unwrap();
        assert_eq!(r.ceiling_level, Level::new(0, 2));
        assert!(!r.matches_quoted);
    }
}

#[test]
fn a_case_terminals_have_expected_shape() {
    for h in [0.5, 0.9] {
        for c in [CaseId::A1, CaseId::A2, CaseId::A3, CaseId::A4, CaseId::A5, CaseId::A6] {
            let path = build_reference_path(h, &CaseParams::standard(c, h).unwrap()).unwrap();
            assert_eq!(path.terminal_matches, Some(true), "{c} at h={h}");
        }
    }
}

#[test]
fn trace_json_round_trip() {
    let path = build_reference_path(0.5, &CaseParams::standard(CaseId::A3, 0.5).unwrap()).unwrap();
    let text = path.trace.to_json();
    let back = PathTrace::from_json(&text).unwrap();
    assert_eq!(back, path.trace);
    let tampered = text.replacen("\"height\": ", "\"height\": 1", 1);
    assert!(PathTrace::from_json(&tampered).is_err());
    assert!(path.trace.storyboard().contains("frame 1"));
}
