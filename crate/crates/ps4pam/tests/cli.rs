use std::path::Path;
use std::process::{Command, Output};

fn ps4pam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ps4pam"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn help_exits_zero() {
    for sub in [
        &["--help"][..],
        &["fer", "--help"],
        &["eval", "--help"],
        &["ccdm", "--help"],
    ] {
        let o = ps4pam(sub);
        assert!(o.status.success());
        assert!(String::from_utf8_lossy(&o.stdout).contains("Usage"));
    }
}

#[test]
fn rates_csv_has_provenance_header() {
    let out = stdout(&ps4pam(&[
        "rates",
        "--dist",
        "fixed",
        "--metric",
        "bmd",
        "--psnr-grid",
        "5:7:1",
        "--seed",
        "9",
    ]));
    let mut lines = out.lines();
    let head = lines.next().unwrap();
    assert!(
        head.starts_with("# ps4pam ") && head.contains("config=") && head.ends_with("seed=9"),
        "{head}"
    );
    assert_eq!(lines.next(), Some("psnr_db,rate_smd,rate_bmd,p0"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"version":1,"dist":"uniform","psnr_grid":"0:2:1","seed":3}"#,
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = stdout(&ps4pam(&["rates", "--config", c]));
    assert_eq!(from_file.lines().count(), 5);
    let overridden = stdout(&ps4pam(&["rates", "--config", c, "--psnr-grid", "0:1:1"]));
    assert_eq!(overridden.lines().count(), 4);
    assert!(overridden.lines().next().unwrap().ends_with("seed=3"));
}

#[test]
fn stochastic_commands_rerun_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = ps4pam(&[
            "fer",
            "--system",
            "uniform",
            "--blocklength",
            "600",
            "--psnr-grid",
            "9:11:1",
            "--max-frames",
            "40",
            "--seed",
            "17",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().nth(1) == Some("psnr_db,fer,frames,errors,ci_lo,ci_hi"));

    let sim = |name: &str| {
        let out = dir.path().join(name);
        let o = ps4pam(&[
            "simulate",
            "--psnr",
            "12",
            "--samples",
            "5000",
            "--seed",
            "4",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(sim("r1.csv"), sim("r2.csv"));
}

fn eval_roundtrip(binary: bool) {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join(if binary { "rec.bin" } else { "rec.csv" });
    let hist = dir.path().join("hist.csv");
    let mut args = vec![
        "simulate",
        "--psnr",
        "14",
        "--samples",
        "20000",
        "--seed",
        "2",
        "--baudrate",
        "56GBd",
    ];
    if binary {
        args.push("--binary");
    }
    args.extend(["--output", rec.to_str().unwrap()]);
    assert!(ps4pam(&args).status.success());
    assert!(Path::new(&format!("{}.json", rec.display())).exists());
    let report = stdout(&ps4pam(&[
        "eval",
        "--input",
        rec.to_str().unwrap(),
        "--hist-output",
        hist.to_str().unwrap(),
    ]));
    assert!(report.contains("baudrate,56GBd"));
    assert!(report.contains("distribution,fixed"));
    assert!(report.contains("source,simulated linear AWGN psnr=14 seed=2"));
    let smd: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("rate_smd_hat,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(smd > 1.0 && smd < 1.9, "{smd}");
    let h = std::fs::read_to_string(hist).unwrap();
    assert_eq!(h.lines().nth(1), Some("bin_lo,bin_hi,x0,x1,x2,x3"));
    let counted: usize = h
        .lines()
        .skip(2)
        .map(|l| {
            l.split(',')
                .skip(2)
                .map(|c| c.parse::<usize>().unwrap())
                .sum::<usize>()
        })
        .sum();
    assert_eq!(counted, 20000);
}

#[test]
fn eval_reads_csv_record_and_sidecar() {
    eval_roundtrip(false);
}

#[test]
fn eval_reads_binary_record_and_sidecar() {
    eval_roundtrip(true);
}

#[test]
fn ccdm_roundtrip_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let bits = dir.path().join("bits.txt");
    let seq = dir.path().join("seq.txt");
    let back = dir.path().join("back.txt");
    std::fs::write(&bits, "1011001\n0110111\n").unwrap();
    let enc = [
        "ccdm",
        "encode",
        "--counts",
        "6,4",
        "--input",
        bits.to_str().unwrap(),
        "--output",
        seq.to_str().unwrap(),
    ];
    assert!(ps4pam(&enc).status.success());
    let dec = [
        "ccdm",
        "decode",
        "--counts",
        "6,4",
        "--input",
        seq.to_str().unwrap(),
        "--output",
        back.to_str().unwrap(),
    ];
    assert!(ps4pam(&dec).status.success());
    // C(10,4) = 210, so 7 input bits per block.
    let s = std::fs::read_to_string(&seq).unwrap();
    assert!(s
        .lines()
        .all(|l| l.len() == 10 && l.matches('1').count() == 4));
    assert_eq!(std::fs::read_to_string(back).unwrap(), "1011001\n0110111\n");
    std::fs::write(&bits, "10110\n").unwrap();
    let o = ps4pam(&[
        "ccdm",
        "encode",
        "--counts",
        "6,4",
        "--input",
        bits.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(6));
}

#[test]
fn ldpc_matrix_feeds_fer() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("h.txt");
    let o = ps4pam(&[
        "ldpc",
        "--blocklength",
        "600",
        "--code-rate",
        "0.5",
        "--output",
        m.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&m).unwrap();
    assert!(text.starts_with("# ps4pam-ldpc 1"));
    let out = stdout(&ps4pam(&[
        "fer",
        "--system",
        "uniform",
        "--matrix",
        m.to_str().unwrap(),
        "--psnr-grid",
        "20:20:1",
        "--max-frames",
        "5",
    ]));
    assert!(
        out.lines()
            .last()
            .unwrap()
            .starts_with("20.000000,0.000000e0,5,0,"),
        "{out}"
    );
}

fn error_code(args: &[&str]) -> (i32, String) {
    let o = ps4pam(args);
    let err = String::from_utf8(o.stderr).unwrap();
    let line = err.lines().last().unwrap_or_default().to_owned();
    (o.status.code().unwrap(), line)
}

#[test]
fn failures_map_to_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.json");
    std::fs::write(&bad_cfg, r#"{"version":7}"#).unwrap();
    let cases: Vec<(Vec<&str>, i32, &str)> = vec![
        (
            vec!["rates", "--dist", "gaussian", "--psnr-grid", "0:1:1"],
            3,
            "config",
        ),
        (
            vec!["rates", "--dist", "uniform", "--psnr-grid", "0:1"],
            4,
            "parse",
        ),
        (vec!["eval", "--input", "/nonexistent/rec.csv"], 5, "io"),
        (
            vec!["rates", "--config", bad_cfg.to_str().unwrap()],
            3,
            "config",
        ),
    ];
    for (args, code, kind) in cases {
        let (got, line) = error_code(&args);
        assert_eq!(got, code, "{args:?}: {line}");
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"], kind);
        assert_eq!(v["code"], code);
    }
    // clap's own usage errors.
    assert_eq!(error_code(&["rates", "--no-such-flag"]).0, 2);
}
