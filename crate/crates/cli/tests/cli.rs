use std::path::Path;
use std::process::{Command, Output};

fn jcphase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jcphase")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

struct Csv {
    meta: serde_json::Value,
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Csv {
    fn parse(text: &str) -> Csv {
        let mut lines = text.lines();
        let meta = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
        let header = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
        Csv { meta, header, rows }
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let i = self.header.iter().position(|h| h == name).unwrap();
        self.rows.iter().map(|r| r[i]).collect()
    }
}

#[test]
fn rabi_population_follows_closed_form() {
    let o = jcphase(&["run", "--scenario", "rabi", "--t-end", "20", "--sample-step", "0.1"]);
    assert!(o.status.success());
    let csv = Csv::parse(&stdout(&o));
    for (t, p2) in csv.col("t").iter().zip(csv.col("P2")) {
        assert!((p2 - (0.5 * t).sin().powi(2)).abs() < 1e-12, "t={t}");
    }
}

#[test]
fn metadata_records_parameters() {
    let o = jcphase(&["run", "--eta", "1.5,0.5", "--detuning", "-0.3", "--cavity-omega", "4", "--n-max", "25", "--t-end", "1"]);
    assert!(o.status.success());
    let csv = Csv::parse(&stdout(&o));
    assert_eq!(csv.meta["detuning"], -0.3);
    assert_eq!(csv.meta["atom_omega"], 3.7);
    assert_eq!(csv.meta["n_max"], 25);
    assert_eq!(csv.meta["pipeline"], "qo_closed");
    assert_eq!(csv.meta["initial"]["eta"], serde_json::json!([1.5, 0.5]));
    assert_eq!(csv.header.len(), 10);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for p in &paths {
        let o = jcphase(&["run", "--eta", "2", "--pipeline", "canonical_ode", "--n-max", "32", "--t-end", "2", "--dt", "0.01", "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
}

#[test]
fn collapse_revival_peak_position() {
    let o = jcphase(&["run", "--scenario", "collapse_revival", "--t-end", "100", "--sample-step", "0.02"]);
    assert!(o.status.success());
    let csv = Csv::parse(&stdout(&o));
    let expected = 4.0 * std::f64::consts::PI * 5.0;
    let (mut num, mut den) = (0.0, 0.0);
    for (t, p2) in csv.col("t").iter().zip(csv.col("P2")) {
        if *t > 0.5 * expected && *t < 1.5 * expected {
            let w = (p2 - 0.5).powi(2);
            num += t * w;
            den += w;
        }
    }
    let centre = num / den;
    assert!((centre - expected).abs() < 0.1 * expected, "centre {centre}");
}

#[test]
fn divergence_demo_grows_past_threshold() {
    let o = jcphase(&["run", "--scenario", "divergence_demo", "--sample-step", "0.25"]);
    assert!(o.status.success());
    let csv = Csv::parse(&stdout(&o));
    assert_eq!(csv.header, ["t", "max_abs_phi1", "max_abs_phi2", "max_abs_phi"]);
    assert_eq!(csv.meta["exp_weight_omitted"], true);
    let phi = csv.col("max_abs_phi");
    assert!(phi.windows(2).all(|w| w[1] > w[0]));
    assert!(*phi.last().unwrap() > 1e3);
}

#[test]
fn analytic_pipelines_agree() {
    for pair in [["stenholm", "qo_closed"], ["qo_matrix", "qo_closed"]] {
        let o = jcphase(&["compare", "--pipeline-a", pair[0], "--pipeline-b", pair[1], "--eta", "2", "--t-end", "20", "--format", "json"]);
        assert!(o.status.success(), "{pair:?}: {}", String::from_utf8_lossy(&o.stderr));
        let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(report["passed"], true);
    }
}

#[test]
fn coarse_ode_fails_comparison() {
    let o = jcphase(&["compare", "--pipeline-a", "canonical_ode", "--pipeline-b", "stenholm", "--eta", "2", "--n-max", "32", "--t-end", "5", "--dt", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let report = stdout(&o);
    assert!(report.contains("\"passed\":false"), "{report}");
}

#[test]
fn exit_codes() {
    assert_eq!(jcphase(&["run", "--scenario", "rabi", "--pipeline", "standard_fpe"]).status.code(), Some(3));
    assert_eq!(jcphase(&["run", "--eta", "1", "--fock-m", "2"]).status.code(), Some(3));
    assert_eq!(jcphase(&["run", "--scenario", "custom"]).status.code(), Some(3));
    assert_eq!(jcphase(&["run", "--no-such-flag"]).status.code(), Some(3));
    assert_eq!(jcphase(&["run", "--fock-m", "2", "--dt", "0"]).status.code(), Some(3));
    assert_eq!(jcphase(&["run", "--fock-m", "3", "--n-max", "3", "--pipeline", "canonical_ode"]).status.code(), Some(4));
    assert_eq!(jcphase(&["compare", "--pipeline-a", "standard_fpe", "--pipeline-b", "stenholm", "--fock-m", "1"]).status.code(), Some(3));
    assert_eq!(jcphase(&["--help"]).status.code(), Some(0));
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(&cfg, r#"{"scenario": "custom", "fock_m": 2, "atom": "upper", "omega_rabi": 2.0, "t_end": 1.0, "format": "json"}"#);
    let o = jcphase(&["run", "--config", cfg.to_str().unwrap(), "--omega-rabi", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["metadata"]["omega_rabi"], 0.5);
    assert_eq!(doc["metadata"]["t_end"], 1.0);
    assert_eq!(doc["metadata"]["initial"]["level"], "upper");
    assert_eq!(doc["rows"][0][3], 1.0);

    write(&cfg, r#"{"fock_m": 2, "unknown_key": 1}"#);
    assert_eq!(jcphase(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn custom_amplitudes_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    write(
        &cfg,
        &format!(r#"{{"scenario": "custom", "initial": {{"kind": "custom", "lower": [[0, 0], [{h}, 0]], "upper": [[0, {h}]]}}, "t_end": 3.0}}"#),
    );
    let o = jcphase(&["run", "--config", cfg.to_str().unwrap(), "--pipeline", "stenholm", "--n-max", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = Csv::parse(&stdout(&o));
    assert!((csv.col("P2")[0] - 0.5).abs() < 1e-15);
    for (p1, p2) in csv.col("P1").iter().zip(csv.col("P2")) {
        assert!((p1 + p2 - 1.0).abs() < 1e-12);
    }
}
