use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pcascape::io::{landscape_rows, landscape_table, CsvTable, ExperimentConfig};
use pcascape::kernel::ModelParams;
use pcascape::landscape::{trap_waypoint_gamma, Landscape};
use pcascape::lattice::{Pattern, SpinConfig};
use pcascape::mc::{
    arrhenius_fit, default_step_cap, mean_hit_time, median_hit_time, recurrence_check,
    run_hitting_trials, visit_before, Start, Target,
};
use pcascape::paths::{build_reference_path, gamma_pca, v_star, verify_case_ceiling, CaseParams};
use pcascape::potential::{standard_pool, ExactChain};
use pcascape::space::StateSpace;
use pcascape::spectral::{spectral_gap, tv_mixing_time, DenseKernel, GapOptions};
use serde_json::json;

use crate::Failure;

/// Largest site count handled without `--expensive`.
const CHEAP_SITES: usize = 12;
/// Largest site count for dense mixing times without `--expensive`.
const CHEAP_MIX_SITES: usize = 8;
/// Refuse Monte Carlo runs with `trials * exp(beta Gamma)` above this
/// unless `--expensive` is given.
const CHEAP_MC_WORK: f64 = 1e10;

fn space(cfg: &ExperimentConfig) -> Result<StateSpace, Failure> {
    let sites = cfg.geometry.sites();
    if sites > CHEAP_SITES && !cfg.expensive {
        return Err(Failure::Usage(format!(
            "{} has {sites} sites; enumeration above {CHEAP_SITES} sites needs --expensive",
            cfg.geometry
        )));
    }
    Ok(StateSpace::new(cfg.geometry, cfg.cap_sites)?)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    if let Some(p) = dir.join(name).parent() {
        fs::create_dir_all(p)?;
    }
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn f(x: f64) -> String {
    x.to_string()
}

fn seed(cfg: &ExperimentConfig) -> u64 {
    cfg.seed.expect("seed is resolved before dispatch")
}

/// Seed for the `k`-th beta of a ladder.
fn ladder_seed(cfg: &ExperimentConfig, k: usize) -> u64 {
    seed(cfg).wrapping_add((k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn hexes(sp: &StateSpace, xs: &[usize]) -> Vec<String> {
    xs.iter().map(|&x| sp.config(x).to_hex()).collect()
}

/// Lines printed to stdout and reused by `report`.
pub type Summary = Vec<String>;

fn emit(lines: &Summary) {
    for l in lines {
        println!("{l}");
    }
}

pub fn landscape(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let s = landscape_summary(cfg)?;
    emit(&s);
    Ok(())
}

fn landscape_summary(cfg: &ExperimentConfig) -> Result<Summary, Failure> {
    let sp = space(cfg)?;
    let land = Landscape::new(&sp, cfg.h)?;
    write(&cfg.out, "landscape.csv", &landscape_table(&landscape_rows(&land)).to_csv())?;
    let ms = land.metastable();
    let filt = land.filtration();
    let traps = land.traps();
    let waypoint = trap_waypoint_gamma(&land);
    let summary = json!({
        "geometry": cfg.geometry.to_string(),
        "h": cfg.h,
        "states": sp.len(),
        "traps": traps.len(),
        "ground": hexes(&sp, &ms.ground),
        "gamma_m": ms.gamma_m,
        "metastable": hexes(&sp, &ms.metastable),
        "max_cycle_depth_without_ground": filt.max_depth_without_ground,
        "trap_waypoint_gamma": waypoint,
        "merge_events": filt.events.len(),
    });
    write(&cfg.out, "landscape.json", &serde_json::to_string_pretty(&summary).unwrap())?;
    Ok(vec![
        format!("geometry {}  h {}  states {}  traps {}", cfg.geometry, cfg.h, sp.len(), traps.len()),
        format!("ground {}", hexes(&sp, &ms.ground).join(" ")),
        format!("Gamma_m {}  (filtration {}, trap waypoints {})", ms.gamma_m, filt.max_depth_without_ground, waypoint),
        format!("metastable {}", hexes(&sp, &ms.metastable).join(" ")),
    ])
}

pub fn paths(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let (s, failed) = paths_summary(cfg)?;
    emit(&s);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("cases {}", failed.join(", "))))
    }
}

fn paths_summary(cfg: &ExperimentConfig) -> Result<(Summary, Vec<String>), Failure> {
    let h = cfg.h;
    let mut t = CsvTable::new(
        "paths",
        &[
            "case", "l", "m", "steps", "argmax_step", "ceiling", "ceiling_c", "ceiling_h", "quoted_ceiling",
            "matches_quoted", "drop", "v_star", "gamma_pca", "passes", "error",
        ],
    );
    let mut lines = vec![format!("h {h}  V* {}  Gamma_PCA {}", v_star(h)?, gamma_pca(h)?)];
    let mut failed = Vec::new();
    for &case in &cfg.cases {
        let built = CaseParams::standard(case, h)
            .and_then(|p| build_reference_path(h, &p))
            .and_then(|path| verify_case_ceiling(h, &path).map(|r| (path, r)));
        match built {
            Ok((path, r)) => {
                let ok = r.passes();
                if !ok {
                    failed.push(case.to_string());
                }
                t.push(vec![
                    case.to_string(),
                    r.l.to_string(),
                    r.m.to_string(),
                    r.steps.to_string(),
                    r.argmax_step.to_string(),
                    f(r.ceiling),
                    r.ceiling_level.c.to_string(),
                    r.ceiling_level.k.to_string(),
                    f(r.quoted_ceiling),
                    r.matches_quoted.to_string(),
                    f(r.drop),
                    f(r.v_star),
                    f(r.gamma_pca),
                    ok.to_string(),
                    String::new(),
                ]);
                write(&cfg.out, &format!("traces/{case}.json"), &path.trace.to_json())?;
                let mut line = format!(
                    "{case}  l {}  ceiling {} (quoted {}{})  drop {}  {}",
                    r.l,
                    r.ceiling,
                    r.quoted_ceiling,
                    if r.matches_quoted { "" } else { ", differs" },
                    r.drop,
                    if ok { "ok" } else { "FAIL" }
                );
                if cfg.storyboard {
                    let sb = path.trace.storyboard();
                    write(&cfg.out, &format!("storyboards/{case}.txt"), &sb)?;
                    line.push('\n');
                    line.push_str(&sb);
                }
                lines.push(line);
            }
            Err(e) => {
                failed.push(case.to_string());
                let mut row = vec![case.to_string()];
                row.extend(std::iter::repeat(String::new()).take(12));
                row.push("false".into());
                row.push(e.to_string());
                t.push(row);
                lines.push(format!("{case}  FAIL  {e}"));
            }
        }
    }
    write(&cfg.out, "paths.csv", &t.to_csv())?;
    Ok((lines, failed))
}

pub fn exact(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let s = exact_summary(cfg)?;
    emit(&s);
    Ok(())
}

fn exact_summary(cfg: &ExperimentConfig) -> Result<Summary, Failure> {
    let sp = space(cfg)?;
    let land = Landscape::new(&sp, cfg.h)?;
    let ms = land.metastable();
    let mut pool = standard_pool(&sp, 0, seed(cfg));
    pool.extend(ms.ground.iter().chain(&ms.metastable));
    pool.sort_unstable();
    pool.dedup();
    let dense_mix = sp.sites() <= CHEAP_MIX_SITES || cfg.expensive;
    let mut t = CsvTable::new(
        "exact",
        &[
            "beta", "stationarity", "detailed_balance", "rho", "rate_rho", "capacity", "rate_capacity",
            "mean_hit", "rate_mean_hit", "pta_ratio", "gamma_m",
        ],
    );
    let mut mix = CsvTable::new("mixing", &["beta", "epsilon", "steps", "lower_bound", "rate"]);
    let mut lines = vec![format!(
        "geometry {}  h {}  Gamma_m {}  |X^m| {}",
        cfg.geometry,
        cfg.h,
        ms.gamma_m,
        ms.metastable.len()
    )];
    for (k, &beta) in cfg.betas.iter().enumerate() {
        let params = ModelParams::new(cfg.h, beta)?;
        let ch = ExactChain::new(&sp, params)?;
        let red = ch.reduce(&pool)?;
        let gap = spectral_gap(
            &ch,
            GapOptions {
                seed: ladder_seed(cfg, k),
                ..GapOptions::default()
            },
        )?;
        let has_meta = !ms.metastable.is_empty() && !ms.ground.is_empty();
        let (cap, mean) = if has_meta {
            (
                red.capacity_escape(&ms.metastable, &ms.ground)?,
                red.mean_hitting_from_set(&ms.metastable, &ms.ground)?,
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        let pta = red.pta_ratio(&[ms.ground.clone(), ms.metastable.clone()].concat())?;
        t.push(vec![
            f(beta),
            f(ch.stationarity_residual()),
            f(ch.detailed_balance_residual()),
            f(gap.rho),
            f(-gap.rho.ln() / beta),
            f(cap),
            f(-cap.ln() / beta),
            f(mean),
            f(mean.ln() / beta),
            f(pta),
            f(ms.gamma_m),
        ]);
        lines.push(format!(
            "beta {beta}  rho {:.6e}  -log(rho)/beta {:.4}  cap {:.6e}  log(E tau)/beta {:.4}",
            gap.rho,
            -gap.rho.ln() / beta,
            cap,
            mean.ln() / beta
        ));
        if dense_mix {
            let dk = DenseKernel::from_chain(&ch);
            for &eps in &cfg.epsilons {
                let m = tv_mixing_time(&dk, eps)?;
                let rate = (m.steps as f64).ln() / beta;
                mix.push(vec![f(beta), f(eps), m.steps.to_string(), m.lower_bound.to_string(), f(rate)]);
                lines.push(format!(
                    "  t_mix({eps}) {}{}  log(t_mix)/beta {rate:.4}",
                    if m.lower_bound { ">= " } else { "" },
                    m.steps
                ));
            }
        }
    }
    write(&cfg.out, "exact.csv", &t.to_csv())?;
    if dense_mix {
        write(&cfg.out, "mixing.csv", &mix.to_csv())?;
    }
    Ok(lines)
}

pub fn mc(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let torus = cfg.geometry;
    let h = cfg.h;
    let gamma = gamma_pca(h)?;
    let vs = v_star(h)?;
    for &beta in &cfg.betas {
        let work = cfg.trials as f64 * (beta * gamma).exp();
        if work > CHEAP_MC_WORK && !cfg.expensive {
            return Err(Failure::Usage(format!(
                "beta {beta} with {} trials needs about {work:.1e} steps; pass --expensive",
                cfg.trials
            )));
        }
    }
    let minus = Start::Config(SpinConfig::minus(torus));
    let plus = Target::named(torus, &[Pattern::Plus]);
    let chess = Target::named(torus, &[Pattern::ChessEven, Pattern::ChessOdd]);
    let mut trials_t = CsvTable::new("mc_trials", &["beta", "trial", "seed", "hit_time", "capped"]);
    let mut summary_t = CsvTable::new(
        "mc_summary",
        &["beta", "trials", "uncapped", "capped", "mean", "std_err", "median", "rate", "step_cap"],
    );
    let mut visit_t = CsvTable::new("visit", &["beta", "chess_first", "hit_either", "estimate", "wilson_lo", "wilson_hi", "capped"]);
    let mut rec_t = CsvTable::new("recurrence", &["beta", "epsilon", "threshold", "exceeded", "trials", "wilson_hi", "median"]);
    let mut points = Vec::new();
    println!("geometry {torus}  h {h}  Gamma_PCA {gamma}  V* {vs}");
    for (k, &beta) in cfg.betas.iter().enumerate() {
        let params = ModelParams::new(h, beta)?;
        let cap = cfg.step_cap.unwrap_or_else(|| default_step_cap(beta, gamma));
        let s = ladder_seed(cfg, k);
        let res = run_hitting_trials(&params, &minus, &[plus.clone()], cfg.trials, cap, s)?;
        for r in &res {
            trials_t.push(vec![
                f(beta),
                r.trial.to_string(),
                r.seed.to_string(),
                r.hit_time.map_or(String::new(), |t| t.to_string()),
                r.capped.to_string(),
            ]);
        }
        let med = median_hit_time(&res);
        match mean_hit_time(&res) {
            Ok(m) => {
                points.push((beta, m.mean));
                summary_t.push(vec![
                    f(beta),
                    cfg.trials.to_string(),
                    m.uncapped.to_string(),
                    m.capped.to_string(),
                    f(m.mean),
                    f(m.std_err),
                    med.map_or(String::new(), f),
                    f(m.mean.ln() / beta),
                    cap.to_string(),
                ]);
                println!(
                    "beta {beta}  mean tau {:.4e} +- {:.2e}  capped {}  log(mean)/beta {:.4}",
                    m.mean,
                    m.std_err,
                    m.capped,
                    m.mean.ln() / beta
                );
            }
            Err(_) => {
                let capped = res.iter().filter(|r| r.capped).count();
                summary_t.push(vec![
                    f(beta),
                    cfg.trials.to_string(),
                    (res.len() - capped).to_string(),
                    capped.to_string(),
                    String::new(),
                    String::new(),
                    med.map_or(String::new(), f),
                    String::new(),
                    cap.to_string(),
                ]);
                println!("beta {beta}  too few uncapped trials ({capped} capped)");
            }
        }
        let v = visit_before(&params, &minus, &chess, &plus, cfg.trials, cap, s ^ 0x5151)?;
        visit_t.push(vec![
            f(beta),
            v.a_first.successes.to_string(),
            v.a_first.trials.to_string(),
            f(v.a_first.estimate),
            f(v.a_first.wilson_lo),
            f(v.a_first.wilson_hi),
            v.capped.to_string(),
        ]);
        println!(
            "  chess before plus {:.3} [{:.3}, {:.3}]",
            v.a_first.estimate, v.a_first.wilson_lo, v.a_first.wilson_hi
        );
        for &eps in &cfg.epsilons {
            let r = recurrence_check(&params, torus, vs, None, eps, cfg.trials, s ^ 0xec0)?;
            let e = &r.trap_set;
            rec_t.push(vec![
                f(beta),
                f(eps),
                f(e.threshold_steps),
                e.exceeded.successes.to_string(),
                e.exceeded.trials.to_string(),
                f(e.exceeded.wilson_hi),
                e.median_hit.map_or(String::new(), f),
            ]);
            println!(
                "  recurrence eps {eps}: {} of {} exceed exp(beta (V* + eps))",
                e.exceeded.successes, e.exceeded.trials
            );
        }
    }
    write(&cfg.out, "mc_trials.csv", &trials_t.to_csv())?;
    write(&cfg.out, "mc_summary.csv", &summary_t.to_csv())?;
    write(&cfg.out, "visit.csv", &visit_t.to_csv())?;
    write(&cfg.out, "recurrence.csv", &rec_t.to_csv())?;
    if points.len() >= 3 {
        let fit = arrhenius_fit(&points)?;
        let rel = (fit.slope - gamma).abs() / gamma;
        let j = json!({"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2, "gamma_pca": gamma, "relative_error": rel});
        write(&cfg.out, "arrhenius.json", &serde_json::to_string_pretty(&j).unwrap())?;
        println!("Arrhenius slope {:.4}  (Gamma_PCA {gamma}, relative difference {rel:.3})", fit.slope);
    }
    Ok(())
}

pub fn report(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let mut md = String::new();
    let _ = writeln!(md, "# pcascape report\n\n```\n{}```\n", cfg.to_manifest());
    let land = landscape_summary(cfg)?;
    let _ = writeln!(md, "## Landscape\n\n```\n{}\n```\n", land.join("\n"));
    let (paths, failed) = paths_summary(cfg)?;
    let _ = writeln!(md, "## Reference paths\n\n```\n{}\n```\n", paths.join("\n"));
    let exact = exact_summary(cfg)?;
    let _ = writeln!(md, "## Exact chain\n\n```\n{}\n```", exact.join("\n"));
    write(&cfg.out, "report.md", &md)?;
    print!("{md}");
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("cases {}", failed.join(", "))))
    }
}
