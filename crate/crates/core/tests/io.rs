use pcascape::io::*;
use pcascape::landscape::Landscape;
use pcascape::lattice::Torus;
use pcascape::space::StateSpace;

#[test]
fn landscape_csv_round_trip_on_4x2() {
    let sp = StateSpace::new(Torus::new(4, 2).unwrap(), 13).unwrap();
    let land = Landscape::new(&sp, 0.5).unwrap();
    let rows = landscape_rows(&land);
    let text = landscape_table(&rows).to_csv();
    assert!(text.starts_with("# pcascape:landscape v1\n"));
    let back = parse_landscape_csv(&text, 0.5).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.config, b.config);
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        assert_eq!(a.trap, b.trap);
        assert!(a.stability == b.stability);
    }
}

#[test]
fn landscape_csv_rejects_tampering() {
    let sp = StateSpace::new(Torus::new(2, 2).unwrap(), 13).unwrap();
    let land = Landscape::new(&sp, 0.5).unwrap();
    let text = landscape_table(&landscape_rows(&land)).to_csv();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut f: Vec<String> = lines[3].split(',').map(String::from).collect();
    f[2] = "123.5".into();
    lines[3] = f.join(",");
    assert!(parse_landscape_csv(&lines.join("\n"), 0.5).is_err());
    assert!(parse_landscape_csv(&text.replace("v1", "v2"), 0.5).is_err());
    assert!(parse_landscape_csv(&text.replace("landscape v1", "other v1"), 0.5).is_err());
}

#[test]
fn config_file_with_comments() {
    let c = ExperimentConfig::parse(
        "# ladder\ncommand = mc\ngeometry = 12x12\nh = 0.9\nbeta = 1.0, 1.2, 1.4\nseed = 7\ntrials = 100\n",
    )
    .unwrap();
    c.validate().unwrap();
    assert_eq!(c.command, Command::Mc);
    assert_eq!(c.betas, vec![1.0, 1.2, 1.4]);
    assert_eq!(c.geometry, Torus::new(12, 12).unwrap());
    assert_eq!(ExperimentConfig::parse(&c.to_manifest()).unwrap(), c);
    assert!(ExperimentConfig::parse("command = mc\ngeometry = 5x4").is_err());
    let mut bad = c.clone();
    bad.epsilons = vec![1.5];
    assert!(bad.validate().is_err());
}
