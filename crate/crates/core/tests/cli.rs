use std::fs;
use std::path::Path;

use scenaware::cli::run;

fn cli(args: &[&str]) -> i32 {
    let mut full = vec!["scenaware"];
    full.extend_from_slice(args);
    run(full)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn tiny_corpus(out: &Path, seed: &str) {
    let code = cli(&["gen-corpus", "--scenarios", "2", "--utts", "2", "--duration", "1.5", "--seed", seed, "--out", p(out)]);
    assert_eq!(code, 0);
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(cli(&["--help"]), 0);
    assert_eq!(cli(&["frobnicate"]), 1);
    assert_eq!(cli(&["gen-corpus", "--utts", "2"]), 1, "missing --out");
    assert_eq!(cli(&["gen-corpus", "--scenarios", "1", "--out", "/tmp/never"]), 1);
}

#[test]
fn bad_inputs_leave_no_output_behind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("nope.tsv");
    assert_eq!(cli(&["train", "--manifest", p(&missing), "--out", p(&out)]), 1);
    assert!(!out.exists());

    let corpus = dir.path().join("corpus");
    tiny_corpus(&corpus, "1");
    let manifest = corpus.join("manifest.tsv");
    let ckpt = dir.path().join("bad.scne");
    fs::write(&ckpt, b"SCNE garbage").unwrap();
    assert_eq!(cli(&["eval", "--manifest", p(&manifest), "--ckpt", p(&ckpt), "--out", p(&out)]), 1);
    assert!(!out.exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# corpus\nseed=3\nscenarios=2\nutts=2\nduration=1.5\n").unwrap();
    let from_cfg = dir.path().join("a");
    let overridden = dir.path().join("b");
    let by_flag = dir.path().join("c");
    assert_eq!(cli(&["gen-corpus", "--config", p(&cfg), "--out", p(&from_cfg)]), 0);
    assert_eq!(cli(&["gen-corpus", "--config", p(&cfg), "--seed", "5", "--out", p(&overridden)]), 0);
    tiny_corpus(&by_flag, "5");
    let wav = "wav/harmonic_hum_00000.wav";
    let read = |d: &Path| fs::read(d.join(wav)).unwrap();
    assert_eq!(read(&overridden), read(&by_flag));
    assert_ne!(read(&overridden), read(&from_cfg));

    fs::write(&cfg, "seed=3\nstepz=4\n").unwrap();
    assert_eq!(cli(&["gen-corpus", "--config", p(&cfg), "--out", p(&dir.path().join("d"))]), 1);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    tiny_corpus(&corpus, "9");
    let manifest = corpus.join("manifest.tsv");
    let train = |out: &Path| {
        let args = ["train", "--manifest", p(&manifest), "--steps", "20", "--batch-clips", "4", "--dim", "8", "--out", p(out)];
        assert_eq!(cli(&args), 0);
        fs::read(out.join("model.scne")).unwrap()
    };
    let a = train(&dir.path().join("m1"));
    let b = train(&dir.path().join("m2"));
    assert_eq!(a, b);
}

#[test]
fn diverging_training_exits_two_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    tiny_corpus(&corpus, "4");
    let out = dir.path().join("model");
    let code = cli(&[
        "train", "--manifest", p(&corpus.join("manifest.tsv")), "--steps", "50", "--batch-clips", "4", "--dim", "8",
        "--lr", "1e300", "--out", p(&out),
    ]);
    assert_eq!(code, 2);
    assert!(out.join("diagnostic.txt").is_file());
}
