use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_trialkit"));
    c.env_remove("TRIALKIT_OUTPUT_DIR");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn trialkit")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn bounds_examples() {
    let o = run(&["bounds", "--rj", "0.435", "--rk", "0.465"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("upper              0.900"), "{out}");
    assert!(out.contains("lower              0.000"), "{out}");

    let o = run(&["bounds", "--rj", "0.5", "--rk", "0.5", "--alpha", "0", "--format", "json"]);
    let j: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = j["sections"][0]["rows"].as_array().unwrap();
    let get = |k: &str| rows.iter().find(|r| r[0] == k).unwrap()[1].as_f64().unwrap();
    assert_eq!(get("upper"), 0.5);
    assert_eq!(get("lower"), 0.5);
}

#[test]
fn exit_codes() {
    // validation
    let o = run(&["bounds", "--rj", "96", "--rk", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("r_j"), "{}", stderr(&o));
    let o = run(&["oracle", "--n", "20", "--rj", "0.435", "--rk", "0.465"]);
    assert_eq!(o.status.code(), Some(2));
    // infeasible
    let o = run(&["bounds", "--rj", "0.7", "--rk", "0.7", "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("alpha"));
    let o = run(&["oracle", "--n", "10", "--rj", "0.4", "--rk", "0.6", "--alpha", "0.1"]);
    assert_eq!(o.status.code(), Some(3));
    // clap usage errors
    assert_eq!(run(&["bounds", "--rj", "0.4"]).status.code(), Some(2));
}

#[test]
fn simulation_scale_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // members far below the cutoff: nobody lands above it
    let cfg = write_config(
        dir.path(),
        "empty.toml",
        r#"
schema = 1
command = "rdd-sim"
[params]
n_pop = 2000
[params.scenario]
cutoff = 100.0
delta = 0.5
latent = { family = "uniform", lo = 0.0, hi = 1.0 }
noise = { family = "uniform", half_width = 0.1 }
baseline = { default = 0.5 }
effect = { default = 0.0 }
"#,
    );
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    let cfg = write_config(
        dir.path(),
        "big.toml",
        r#"
schema = 1
command = "td-sim"
[params]
draws = 10
[params.cohort]
window = { t_s = 0.0, t_e = 1.0 }
p = 0.5
members = [
  { family = "uniform", lo = 0.0, hi = 1.0 }, { family = "uniform", lo = 0.0, hi = 1.0 },
  { family = "uniform", lo = 0.0, hi = 1.0 }, { family = "uniform", lo = 0.0, hi = 1.0 },
  { family = "uniform", lo = 0.0, hi = 1.0 }, { family = "uniform", lo = 0.0, hi = 1.0 },
  { family = "uniform", lo = 0.0, hi = 1.0 }, { family = "uniform", lo = 0.0, hi = 1.0 },
  { family = "uniform", lo = 0.0, hi = 1.0 }, { family = "uniform", lo = 0.0, hi = 1.0 },
  { family = "uniform", lo = 0.0, hi = 1.0 }, { family = "uniform", lo = 0.0, hi = 1.0 },
  { family = "uniform", lo = 0.0, hi = 1.0 }, { family = "uniform", lo = 0.0, hi = 1.0 },
  { family = "uniform", lo = 0.0, hi = 1.0 }, { family = "uniform", lo = 0.0, hi = 1.0 },
]
"#,
    );
    // too many subsets to tally: falls back to inclusion deviation
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("max-inclusion-deviation"));
}

#[test]
fn misspelled_keys_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("seeed = 1\n[params]\nrj = 0.4\nrk = 0.6\n", "seeed"),
        ("[params]\nrj = 0.4\nrkk = 0.6\n", "rkk"),
        ("output = \"x\"\n[params]\nrj = 0.4\nrk = 0.6\n", "output"),
    ];
    for (i, (body, key)) in cases.iter().enumerate() {
        let cfg = write_config(
            dir.path(),
            &format!("c{i}.toml"),
            &format!("schema = 1\ncommand = \"bounds\"\n{body}"),
        );
        let o = run(&["run", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{key}");
        assert!(stderr(&o).contains(key), "{key}: {}", stderr(&o));
    }
    let cfg = write_config(
        dir.path(),
        "rdd.toml",
        r#"
schema = 1
command = "rdd-sim"
[params]
n_pop = 10
[params.adversarial]
cutoff = 0.0
latent_window = [-1.0, 1.0]
noise = { family = "gaussian", sigma = 1.0 }
"#,
    );
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));
}

#[test]
fn subcommand_rejects_other_command_config() {
    let o = run(&["td-sim", "--config", configs().join("crohns-bounds.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("command"));
}

/// Parse CSV blocks into cells; all values as strings.
fn csv_sections(text: &str) -> Vec<(Vec<String>, Vec<Vec<String>>)> {
    text.split("\n\n")
        .map(|block| {
            let mut r = csv::Reader::from_reader(block.as_bytes());
            let header = r.headers().unwrap().iter().map(String::from).collect();
            let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
            (header, rows)
        })
        .collect()
}

fn same_value(csv_cell: &str, json: &serde_json::Value) -> bool {
    match json {
        serde_json::Value::String(s) => s == csv_cell,
        serde_json::Value::Bool(b) => b.to_string() == csv_cell,
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                csv_cell.parse::<i64>().map(|c| c == i).unwrap_or(false)
                    || csv_cell.parse::<f64>().map(|c| c == i as f64).unwrap_or(false)
            } else {
                csv_cell.parse::<f64>().map(|c| c == n.as_f64().unwrap()).unwrap_or(false)
            }
        }
        _ => false,
    }
}

#[test]
fn csv_and_json_agree() {
    let runs: Vec<Vec<String>> = vec![
        vec!["bounds".into(), "--rj".into(), "0.435".into(), "--rk".into(), "0.465".into()],
        vec![
            "oracle".into(),
            "--n".into(),
            "10".into(),
            "--rj".into(),
            "0.4".into(),
            "--rk".into(),
            "0.6".into(),
        ],
        vec![
            "transport".into(),
            "--n".into(),
            "100".into(),
            "--p".into(),
            "0.5".into(),
            "--q".into(),
            "0.3".into(),
        ],
        vec![
            "td-sim".into(),
            "--config".into(),
            configs().join("iid-td.toml").display().to_string(),
            "--draws".into(),
            "20000".into(),
        ],
        vec![
            "k-sweep".into(),
            "--config".into(),
            configs().join("quartile-means-td.toml").display().to_string(),
            "--draws".into(),
            "5000".into(),
        ],
        vec![
            "rdd-sim".into(),
            "--config".into(),
            configs().join("figure1-adversarial.toml").display().to_string(),
            "--n-pop".into(),
            "200000".into(),
        ],
        vec![
            "confounding".into(),
            "--config".into(),
            configs().join("tableA-confounding.toml").display().to_string(),
        ],
    ];
    for args in runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let mut csv_args = args.clone();
        csv_args.extend(["--format", "csv"]);
        let mut json_args = args.clone();
        json_args.extend(["--format", "json"]);
        let c = run(&csv_args);
        let j = run(&json_args);
        assert!(c.status.success() && j.status.success(), "{args:?}");
        let sections = csv_sections(&stdout(&c));
        let doc: serde_json::Value = serde_json::from_str(&stdout(&j)).unwrap();
        let js = doc["sections"].as_array().unwrap();
        assert_eq!(sections.len(), js.len(), "{args:?}");
        for ((header, rows), js) in sections.iter().zip(js) {
            let cols: Vec<String> =
                js["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap().into()).collect();
            assert_eq!(header, &cols);
            let jrows = js["rows"].as_array().unwrap();
            assert_eq!(rows.len(), jrows.len());
            for (r, jr) in rows.iter().zip(jrows) {
                for (cell, jv) in r.iter().zip(jr.as_array().unwrap()) {
                    assert!(same_value(cell, jv), "{args:?}: {cell} vs {jv}");
                }
            }
        }
    }
}

#[test]
fn output_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/bounds.csv");
    let o =
        run(&["bounds", "--rj", "0.4", "--rk", "0.6", "--format", "csv", "--output", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("quantity,value\n"));

    let o = bin()
        .args(["transport", "--n", "10", "--p", "0.5", "--format", "json"])
        .env("TRIALKIT_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let j: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("transport.json")).unwrap()).unwrap();
    assert_eq!(j["command"], "transport");
}

#[test]
fn density_grid_is_normalised() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("density.csv");
    let o = run(&[
        "rdd-sim",
        "--config",
        configs().join("figure1-adversarial.toml").to_str().unwrap(),
        "--n-pop",
        "20000",
        "--emit-density",
        grid.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(&grid).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["u", "density"]);
    let pts: Vec<(f64, f64)> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].parse().unwrap(), rec[1].parse().unwrap())
        })
        .collect();
    assert_eq!(pts.len(), 2001);
    let mass: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    assert!((mass - 1.0).abs() < 1e-9, "{mass}");
}

#[test]
fn seed_changes_simulation() {
    let cfg = configs().join("iid-td.toml");
    let a = run(&["td-sim", "--config", cfg.to_str().unwrap(), "--draws", "5000", "--seed", "1"]);
    let b = run(&["td-sim", "--config", cfg.to_str().unwrap(), "--draws", "5000", "--seed", "1"]);
    let c = run(&["td-sim", "--config", cfg.to_str().unwrap(), "--draws", "5000", "--seed", "2"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}
