use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
[simulation]
customers = 30
horizon = 480

[features]
train_len = 384

[training.fnn]
hidden = [6]
optimizer = { steps = 40 }

[training.rnn]
hidden = 4
optimizer = { steps = 10 }

[training.lstm]
hidden = 4
optimizer = { steps = 10 }

[benchmark]
orders = [0, 1, 2]
violin_order = 2
"#;

fn drmodel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drmodel"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn setup() -> (tempfile::TempDir, std::path::PathBuf, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let data = dir.path().join("data.csv");
    let o = drmodel(&["simulate", "--config", p(&cfg), "--out", p(&data)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (dir, cfg, data)
}

#[test]
fn simulate_is_reproducible() {
    let (dir, cfg, data) = setup();
    let text = std::fs::read_to_string(&data).unwrap();
    assert!(text.starts_with("t,hour,price_usd_per_mwh,consumption_mwh\n"));
    assert_eq!(text.lines().count(), 481);
    let again = dir.path().join("again.csv");
    let o = drmodel(&[
        "simulate",
        "--config",
        p(&cfg),
        "--out",
        p(&again),
        "--sequential",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        std::fs::read(&data).unwrap(),
        std::fs::read(&again).unwrap()
    );
    let summary = String::from_utf8_lossy(&o.stdout);
    assert!(
        summary.contains("horizon") && summary.contains("mean consumption"),
        "{summary}"
    );
}

#[test]
fn train_then_eval() {
    let (dir, cfg, data) = setup();
    let model = dir.path().join("fnn.json");
    let o = drmodel(&[
        "train",
        "--config",
        p(&cfg),
        "--data",
        p(&data),
        "--model",
        "fnn",
        "--order",
        "2",
        "--out",
        p(&model),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(&model).unwrap();
    let o = drmodel(&[
        "train",
        "--config",
        p(&cfg),
        "--data",
        p(&data),
        "--model",
        "fnn",
        "--order",
        "2",
        "--out",
        p(&model),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(first, std::fs::read(&model).unwrap());

    let report = dir.path().join("report.json");
    let o = drmodel(&[
        "eval",
        "--config",
        p(&cfg),
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--split",
        "test",
        "--out",
        p(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = std::fs::read_to_string(&report).unwrap();
    assert!(
        doc.contains("\"sdape_denominator\": \"population\""),
        "{doc}"
    );
    assert_eq!(doc.matches("\"mape_pct\"").count(), 1);

    let o = drmodel(&[
        "eval",
        "--config",
        p(&cfg),
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--order",
        "3",
        "--out",
        p(&report),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("layout"));
}

#[test]
fn benchmark_writes_everything() {
    let (dir, cfg, _) = setup();
    let out = dir.path().join("bench");
    let o = drmodel(&["benchmark", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "report.json",
        "violin.csv",
        "table_linear.txt",
        "table_fnn.txt",
        "table_recurrent.txt",
        "config.toml",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let violin = std::fs::read_to_string(out.join("violin.csv")).unwrap();
    assert!(violin.starts_with("model,ape_pct\n"));
}

#[test]
fn exit_codes() {
    let (dir, cfg, data) = setup();
    let out = dir.path().join("m.json");
    // usage
    assert_eq!(code(&drmodel(&["train", "--model", "gru"])), 1);
    assert_eq!(code(&drmodel(&["frobnicate"])), 1);
    // config
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[simulation]\nhorizon = 100\n").unwrap();
    let o = drmodel(&["simulate", "--config", p(&bad), "--out", p(&out)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("simulation.horizon"));
    assert_eq!(
        code(&drmodel(&[
            "simulate",
            "--config",
            "/nonexistent.toml",
            "--out",
            p(&out)
        ])),
        1
    );
    // invalid kind/order combination
    let o = drmodel(&[
        "train",
        "--config",
        p(&cfg),
        "--data",
        p(&data),
        "--model",
        "lstm",
        "--order",
        "3",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 1);
    // data
    let missing = dir.path().join("missing.csv");
    let o = drmodel(&[
        "train",
        "--config",
        p(&cfg),
        "--data",
        p(&missing),
        "--model",
        "linear",
        "--order",
        "1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 2);
    // numerical
    let hot = dir.path().join("hot.toml");
    std::fs::write(
        &hot,
        TINY.replace(
            "optimizer = { steps = 40 }",
            "optimizer = { steps = 40, learning_rate = 1e300 }",
        ),
    )
    .unwrap();
    let o = drmodel(&[
        "train",
        "--config",
        p(&hot),
        "--data",
        p(&data),
        "--model",
        "fnn",
        "--order",
        "1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}
