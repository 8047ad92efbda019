use std::path::Path;
use std::process::{Command, Output};

use ltsf::bench::{fit_model, prepare, ForecastTask, ModelKind, ModelSpec};
use ltsf::cli::{dispatch, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use ltsf::dataio::load;

fn ltsf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltsf"))
        .args(args)
        .env_remove("LTSF_WORKERS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path) -> std::path::PathBuf {
    let data = dir.join("sine.ltsf");
    let o = ltsf(&[
        "generate", "--system", "sinewave", "--n-train", "40", "--n-test", "10", "--traj-len", "120", "--seed", "2",
        "--out", p(&data),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    data
}

#[test]
fn generate_inspect_train_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());

    let o = ltsf(&["inspect", p(&data)]);
    let text = stdout(&o);
    assert!(text.contains("train: (40, 120, 1)") && text.contains("test: (10, 120, 1)"), "{text}");
    assert!(text.contains("dim 0: mean"));

    let ckpt = dir.path().join("m.ckpt");
    let o = ltsf(&[
        "train", "--data", p(&data), "--lookback", "24", "--model", "nlinear", "--save", p(&ckpt),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("params: 2400"), "{text}");
    let mse_line = text.lines().find(|l| l.starts_with("test MSE:")).unwrap().to_string();

    let o = ltsf(&["evaluate", "--data", p(&data), "--lookback", "24", "--checkpoint", p(&ckpt)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains(&mse_line));

    let csv = dir.path().join("sine.csv");
    assert!(ltsf(&["export-csv", "--data", p(&data), "--out", p(&csv)]).status.success());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1 + 50 * 120);
}

#[test]
fn cli_matches_library_fit() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());
    let c = load(&data).unwrap();
    let prepared = prepare(&c, None, None).unwrap();
    let task = ForecastTask::new("sine", 24, 120).unwrap();
    let spec = ModelSpec::new(ModelKind::Persistence);
    let fit = fit_model(&spec, &prepared, &task).unwrap();
    let o = ltsf(&["train", "--data", p(&data), "--lookback", "24", "--model", "persistence"]);
    assert!(stdout(&o).contains(&format!("test MSE: {:.6e}", fit.metrics.mse)));
}

#[test]
fn import_then_inspect_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let mut text = String::from("date,load\n");
    for r in 0..50 {
        text += &format!("2021-02-{:02}T{:02},{}\n", 1 + r / 24, r % 24, (r as f64 * 0.2).sin());
    }
    std::fs::write(&csv, text).unwrap();
    let out = dir.path().join("s.ltsf");
    let o = ltsf(&[
        "import", "--csv", p(&csv), "--traj-len", "10", "--time-column", "date", "--split", "0.6", "--out", p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = ltsf(&["inspect", "--header-only", p(&out)]);
    let text = stdout(&o);
    assert!(text.contains("train: (21, 10, 1)") && text.contains("test: (11, 10, 1)"), "{text}");
    assert!(!text.contains("dim 0"));
}

#[test]
fn benchmark_writes_table_and_chart() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    std::fs::write(
        &cfg,
        r#"
[[dataset]]
system = "sinewave"
n_train = 30
n_test = 10
traj_len = 60
lookbacks = [12]

[[model]]
kind = "nlinear"

[[model]]
kind = "persistence"
"#,
    )
    .unwrap();
    let (csv, svg, chart) = (dir.path().join("t.csv"), dir.path().join("t.svg"), dir.path().join("p.svg"));
    let o = ltsf(&["benchmark", "--config", p(&cfg), "--csv", p(&csv), "--svg", p(&svg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert!(table.contains("nlinear") && table.contains("persistence"), "{table}");
    assert!(table.contains("**"));
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("dataset,lookback,model,mse,mae,params,best_mse,best_mae"));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let o = ltsf(&["plot", "--report", p(&csv), "--group", "synthetic=sinewave", "--out", p(&chart)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let chart_text = std::fs::read_to_string(&chart).unwrap();
    assert!(chart_text.contains("synthetic") && chart_text.contains("<title>nlinear"));
}

#[test]
fn exit_codes() {
    assert_eq!(dispatch(["ltsf", "--help"]), EXIT_OK);
    assert_eq!(dispatch(["ltsf"]), EXIT_USAGE);
    assert_eq!(dispatch(["ltsf", "inspect", "x", "--bogus"]), EXIT_USAGE);
    assert_eq!(dispatch(["ltsf", "inspect", "/nonexistent/file.ltsf"]), EXIT_DATA);

    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.ltsf");
    std::fs::write(&junk, b"not a dataset").unwrap();
    assert_eq!(dispatch(["ltsf", "inspect", p(&junk)]), EXIT_DATA);

    let data = generate(dir.path());
    let args = ["ltsf", "train", "--data", p(&data), "--lookback", "500", "--model", "nlinear"];
    assert_eq!(dispatch(args), EXIT_USAGE);
}

#[test]
fn worker_count_from_environment_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ltsf");
    let b = dir.path().join("b.ltsf");
    let args = |out: &Path| {
        vec![
            "generate".to_string(), "--system".into(), "lorenz".into(), "--n-train".into(), "6".into(),
            "--n-test".into(), "2".into(), "--traj-len".into(), "50".into(), "--out".into(), p(out).to_string(),
        ]
    };
    let one = Command::new(env!("CARGO_BIN_EXE_ltsf")).args(args(&a)).env("LTSF_WORKERS", "1").output().unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_ltsf")).args(args(&b)).env("LTSF_WORKERS", "4").output().unwrap();
    assert!(one.status.success() && four.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

fn shipped_config(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn shipped_configs_parse() {
    for name in ["synthetic.toml", "scarce.toml", "smoke.toml"] {
        let cfg = ltsf::bench::BenchConfig::from_file(&shipped_config(name)).unwrap();
        assert!(!cfg.datasets.is_empty() && !cfg.models.is_empty(), "{name}");
    }
}

#[test]
fn smoke_benchmark_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shipped_config("smoke.toml");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = ltsf(&["benchmark", "--config", p(&cfg), "--format", "csv", "--out", p(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    // 4 (dataset, lookback) cells times 6 models.
    assert_eq!(text.lines().count(), 1 + 4 * 6);
    assert!(!text.contains("N/A"), "{text}");
}

#[test]
fn generate_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.ltsf"), dir.path().join("b.ltsf"));
    for out in [&a, &b] {
        let o = ltsf(&["generate", "--system", "sinewave", "--seed", "7", "--n-train", "5", "--n-test", "2", "--out", p(out)]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn inspect_reports_large_header_shape() {
    use ltsf::dataio::{encode_block_header, encode_header};
    use std::io::{Seek, SeekFrom, Write};
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cheetah.ltsf");
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(&encode_header(&[("name".into(), "cheetah".into())])).unwrap();
    f.write_all(&encode_block_header([18000, 1000, 17], None)).unwrap();
    f.seek(SeekFrom::Current(18000 * 1000 * 17 * 4)).unwrap();
    f.write_all(&encode_block_header([2000, 1000, 17], None)).unwrap();
    let end = f.stream_position().unwrap() + 2000 * 1000 * 17 * 4;
    f.set_len(end).unwrap();
    drop(f);
    let o = ltsf(&["inspect", "--header-only", p(&path)]);
    assert!(stdout(&o).contains("train: (18000, 1000, 17)"), "{}", stdout(&o));
}

#[test]
fn train_nlinear_on_sinewave_reaches_reference_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sine.ltsf");
    let o = ltsf(&["generate", "--system", "sinewave", "--n-train", "1000", "--n-test", "200", "--out", p(&data)]);
    assert!(o.status.success());
    let o = ltsf(&["train", "--data", p(&data), "--model", "nlinear", "--lookback", "96"]);
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("test MSE x100:")).unwrap();
    let value: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(value < 0.05, "{text}");
}
