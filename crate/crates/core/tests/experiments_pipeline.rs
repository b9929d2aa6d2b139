use std::collections::HashSet;
use std::fs;

use lcu_core::experiments::cli::{bundled_config, run_cli, CASE1_CFG, CASE2_CFG, EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_PARTIAL};
use lcu_core::experiments::config::{CaseKind, EnergyRule, GroundTarget, OffsetRule};
use lcu_core::experiments::csv_io::{manifest_path, read_manifest, write_rows, HEADER};
use lcu_core::experiments::{derive_seed, plan_cells, run_sweep, ExperimentConfig};
use lcu_core::quadrature::Method;
use lcu_core::shots::ShotMode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_config(csv: &str) -> String {
    format!(
        r#"
case = "ground_state"

[model]
n_sites = 2
coupling = 1.0

[ground_state]
observable = "Z0 Z1"
tau = 1.0
t_cutoff = 12.0

[sweep]
methods = ["mc", "qmc", "trapezoid", "simpson"]
k_list = [2, 16, 64]
shots = [1, 10, "exact"]
trials = 3
master_seed = 5

[output]
csv = "{csv}"
"#
    )
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(std::iter::once("lcu-lab").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn strip_wall_time(csv: &str) -> String {
    csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>().join("\n")
}

#[test]
fn bundled_case_configs_echo_their_parameters() {
    let c1 = ExperimentConfig::from_toml_str(CASE1_CFG).unwrap();
    assert_eq!(c1.case, CaseKind::GroundState);
    let m = c1.model.as_ref().unwrap();
    assert_eq!((m.n_sites, m.coupling), (6, 1.0));
    assert!(matches!(m.offset, OffsetRule::Keyword(_)));
    let g = c1.ground_state.as_ref().unwrap();
    assert_eq!((g.tau, g.t_cutoff, g.target), (8.0, 100.0, GroundTarget::Numerator));
    assert_eq!(c1.shot_modes(), vec![ShotMode::Shots(1), ShotMode::Shots(1000), ShotMode::Exact]);
    assert_eq!(c1.sweep.trials, 100);

    let c2 = ExperimentConfig::from_toml_str(CASE2_CFG).unwrap();
    assert_eq!(c2.case, CaseKind::Greens);
    let g = c2.greens.as_ref().unwrap();
    assert_eq!((g.site_k, g.site_l, g.eta, g.y_cutoff, g.z_cutoff), (0, 0, 0.01, 8.0, 8.0));
    assert_eq!(g.omega, EnergyRule::ground());
    assert_eq!(c2.shot_modes(), vec![ShotMode::Shots(1), ShotMode::Shots(100), ShotMode::Exact]);
    let default_k: Vec<usize> = (2..=17).map(|e| 1usize << e).collect();
    assert_eq!(c1.k_values(), default_k);
    assert_eq!(c2.k_values(), default_k);
    for name in ["case1", "case2", "microcanonical", "linear_solver"] {
        let cfg = bundled_config(name).unwrap();
        lcu_core::experiments::build_case(&cfg).unwrap();
    }
}

#[test]
fn invalid_configs_are_rejected_with_itemized_errors() {
    let base = small_config("x.csv");
    let zero = base.replace("trials = 3", "trials = 0");
    assert!(ExperimentConfig::from_toml_str(&zero).is_err());
    let unknown = base.replace("trials = 3", "trials = 3\nrepeats = 2");
    assert!(ExperimentConfig::from_toml_str(&unknown).is_err());
    let descending = base.replace("[2, 16, 64]", "[64, 16]");
    assert!(ExperimentConfig::from_toml_str(&descending).is_err());
    let big = base.replace("n_sites = 2", "n_sites = 11");
    assert!(ExperimentConfig::from_toml_str(&big).is_err());
    let two = base.replace("trials = 3", "trials = 0").replace("tau = 1.0", "tau = -1.0");
    let msg = ExperimentConfig::from_toml_str(&two).unwrap_err().to_string();
    assert!(msg.contains("trials") && msg.contains("tau"), "{msg}");
}

#[test]
fn derived_seeds_separate_trials_and_masters() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut seen = HashSet::new();
    for _ in 0..10_000 {
        let s: u64 = rng.random();
        let a = derive_seed(s, Method::Mc, 16, ShotMode::Shots(1), 0);
        let b = derive_seed(s, Method::Mc, 16, ShotMode::Shots(1), 1);
        assert_ne!(a, b);
        assert_ne!(a, derive_seed(s ^ 1, Method::Mc, 16, ShotMode::Shots(1), 0));
        assert!(seen.insert(a) && seen.insert(b));
    }
    let cfg = ExperimentConfig::from_toml_str(&small_config("x.csv")).unwrap();
    let seeds: HashSet<u64> = plan_cells(&cfg).iter().map(|c| c.seed).collect();
    assert_eq!(seeds.len(), plan_cells(&cfg).len());
}

#[test]
fn row_count_matches_configuration_product() {
    let cfg = ExperimentConfig::from_toml_str(&small_config("x.csv")).unwrap();
    let res = run_sweep(&cfg).unwrap();
    // Noiseless QMC and grid cells run once.
    let expected = 4 * 3 * 3 * 3 - 3 * 3 * 2;
    assert_eq!(res.rows.len(), expected);
    let collapsed = res.rows.iter().filter(|r| r.flag.contains("deterministic")).count();
    assert_eq!(collapsed, 3 * 3);
    let fails: Vec<_> = res.rows.iter().filter(|r| r.failed()).collect();
    // Two nodes in two dimensions round to one per axis, too few for either grid rule.
    assert!(fails.iter().all(|r| r.method.grid_rule().is_some() && r.k_requested == 2));
    assert!(!fails.is_empty());
    assert!(fails.iter().all(|r| r.estimate.is_nan() && r.flag.contains("failed")));
    let keys: Vec<_> = res.rows.iter().map(|r| (r.method, r.k_requested, r.shots, r.trial)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn node_cap_aborts_cells() {
    let text = small_config("x.csv").replace("master_seed = 5", "master_seed = 5\nnode_cap = 20");
    let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    let res = run_sweep(&cfg).unwrap();
    for r in &res.rows {
        assert_eq!(r.flag.contains("aborted"), r.k_actual > 20, "{r:?}");
    }
}

#[test]
fn ratio_target_reports_quotient_of_independent_runs() {
    let text = small_config("x.csv").replace("t_cutoff = 12.0", "t_cutoff = 12.0\ntarget = \"ratio\"");
    let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    let res = run_sweep(&cfg).unwrap();
    let ok: Vec<_> = res.rows.iter().filter(|r| !r.failed()).collect();
    assert!((ok[0].exact + 1.0).abs() < 1e-6);
    let grid = ok
        .iter()
        .find(|r| r.method == Method::Trapezoid && r.k_requested == 64 && r.shots == ShotMode::Exact)
        .unwrap();
    assert!(grid.estimate.is_finite());
}

#[test]
fn cli_run_replay_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("small.cfg");
    fs::write(&cfg_path, small_config("nested/small.csv")).unwrap();
    let out_dir = dir.path().join("out");
    let (code, _, _) = run(&["run", "--config", cfg_path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    // The grid cells at K=2 fail, which is a partial failure.
    assert_eq!(code, EXIT_PARTIAL);
    let csv = out_dir.join("small.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
    assert!(text.lines().any(|l| l.split(',').nth(4) == Some("exact")));
    let manifest = read_manifest(&csv).unwrap();
    assert_eq!(manifest.config_digest, manifest.config.digest());
    assert!(manifest_path(&csv).exists());

    let n_rows = text.lines().count() - 1;
    for row in 1..=n_rows {
        let line = text.lines().nth(row).unwrap();
        let (code, out, _) = run(&["replay", "--csv", csv.to_str().unwrap(), "--row", &row.to_string()]);
        if line.contains("failed") {
            assert_ne!(code, EXIT_OK);
        } else {
            assert_eq!(code, EXIT_OK, "row {row}: {out}");
        }
    }
    let (code, _, _) = run(&["replay", "--csv", csv.to_str().unwrap(), "--row", "100000"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.cfg");
    fs::write(&good, small_config("a.csv").replace("[2, 16, 64]", "[16, 64]")).unwrap();
    let out = dir.path().join("o");
    let (code, _, err) = run(&["run", "--config", good.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9", "--threads", "1"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let m = read_manifest(&out.join("a.csv")).unwrap();
    assert_eq!(m.config.sweep.master_seed, 9);

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, small_config("a.csv").replace("trials = 3", "trials = 0")).unwrap();
    assert_eq!(run(&["run", "--config", bad.to_str().unwrap()]).0, EXIT_CONFIG);
    assert_eq!(run(&["run", "--config", dir.path().join("missing.cfg").to_str().unwrap()]).0, EXIT_IO);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let (code, _, _) = run(&["run", "--config", good.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code, EXIT_IO);
    assert_eq!(run(&["frobnicate"]).0, EXIT_CONFIG);
    assert_eq!(run(&["replay", "--csv", dir.path().join("none.csv").to_str().unwrap(), "--row", "1"]).0, EXIT_IO);
}

#[test]
fn cli_discrepancy_and_bounds() {
    let (code, out, _) = run(&["discrepancy", "--case", "case1", "--kmax", "256", "--probes", "500"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "dims,K,d_star,scaled,exact");
    assert_eq!(lines.len(), 1 + 8);
    assert!(lines[1..].iter().all(|l| l.starts_with("2,") && l.ends_with(",false")));

    let (code, out, _) = run(&["discrepancy", "--case", "microcanonical", "--kmax", "100"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.lines().last().unwrap().starts_with("1,100,") && out.ends_with("true\n"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("two.cfg");
    fs::write(&cfg, small_config("a.csv")).unwrap();
    let (code, out, err) = run(&["bounds", "--case", "ground_state", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("reference_k = 401") && out.contains("c_mc_ht = "));
    // Six sites at the default reference grid cannot resolve the oscillation.
    let (code, _, err) = run(&["bounds", "--case", "case1"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("too coarse"), "{err}");
    assert_eq!(run(&["bounds", "--case", "case2", "--config", cfg.to_str().unwrap()]).0, EXIT_CONFIG);
}

#[test]
fn csv_writer_is_stable() {
    let cfg = ExperimentConfig::from_toml_str(&small_config("x.csv")).unwrap();
    let res = run_sweep(&cfg).unwrap();
    let mut a = Vec::new();
    write_rows(&mut a, &res.rows).unwrap();
    let res2 = run_sweep(&cfg).unwrap();
    let mut b = Vec::new();
    write_rows(&mut b, &res2.rows).unwrap();
    assert_eq!(strip_wall_time(&String::from_utf8(a).unwrap()), strip_wall_time(&String::from_utf8(b).unwrap()));
}
