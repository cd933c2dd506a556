use std::path::Path;
use std::process::{Command, Output};

fn cscim(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cscim"))
        .args(args)
        .env("CSCIM_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = cscim(args, "1");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn count_and_unrank_examples() {
    assert_eq!(stdout(&["count", "--M", "10", "--L", "3", "--delta", "2"]), "10\n");
    assert_eq!(stdout(&["unrank", "--n", "1", "--M", "10", "--L", "3", "--delta", "2"]), "0,4,7\n");
    assert_eq!(stdout(&["rank", "--indices", "7,8,9", "--M", "10", "--L", "3"]), "120\n");
    assert_eq!(stdout(&["delta-no-loss", "--M", "64", "--L", "2"]), "15\n");
    assert!(stdout(&["gcp-check"]).starts_with("is_gcp=true"));
    assert!(stdout(&["gcp-check", "--D", "24"]).starts_with("is_gcp=false"));
}

const SMALL: &str = r#"
seed = 9
[pmepr]
schemes = ["csc-lin-l2", "dfts-l2"]
frames = 300
[bler]
schemes = ["csc-lin-l2-is"]
points_db = [-6.0]
max_trials = 3000
batch = 700
[radar]
schemes = ["csc-lin-l2"]
scenario = "two"
snr_db = [30.0]
trials = 20
"#;

fn run_to(dir: &Path, cmd: &str, threads: &str, tag: &str) -> Vec<u8> {
    let cfg = dir.join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.join(format!("{cmd}-{tag}.csv"));
    let o = cscim(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], threads);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read(out).unwrap()
}

#[test]
fn same_seed_gives_identical_csv_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["pmepr", "bler", "radar-rmse", "crlb"] {
        let a = run_to(dir.path(), cmd, "1", "a");
        let b = run_to(dir.path(), cmd, "3", "b");
        assert_eq!(a, b, "{cmd}");
        let text = String::from_utf8(a).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("# config_hash=") && first.ends_with(&format!("seed=9 experiment={cmd}")), "{first}");
        assert!(text.lines().count() > 2);
    }
}

#[test]
fn seed_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let a = stdout(&["pmepr", "--config", cfg.to_str().unwrap(), "--seed", "4"]);
    let b = stdout(&["pmepr", "--config", cfg.to_str().unwrap(), "--seed", "5"]);
    assert!(a.lines().next().unwrap().contains("seed=4"));
    assert_ne!(a.lines().skip(1).collect::<Vec<_>>(), b.lines().skip(1).collect::<Vec<_>>());
}

#[test]
fn invalid_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[radar]\nschemes = [\"nope\"]\n").unwrap();
    let o = cscim(&["crlb", "--config", cfg.to_str().unwrap()], "1");
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
    std::fs::write(&cfg, "[radar]\nunknown_key = 1\n").unwrap();
    assert!(!cscim(&["crlb", "--config", cfg.to_str().unwrap()], "1").status.success());
    assert!(!cscim(&["unrank", "--n", "11", "--M", "10", "--L", "3", "--delta", "2"], "1").status.success());
    assert!(!cscim(&["crlb", "--preset", "moon"], "1").status.success());
    assert!(!cscim(&["pmepr"], "zero").status.success());
}
