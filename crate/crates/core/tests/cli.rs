mod common;

use std::fs;

use common::golden::{self, run};
use learnkit::cli::{EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn args(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn fx(name: &str) -> String {
    golden::fixture_dir().join(name).to_string_lossy().into_owned()
}

/// Set `LEARNKIT_BLESS=1` to rewrite the golden files from the current
/// output.
#[test]
fn every_subcommand_matches_its_golden_file() {
    let first = golden::run_all();
    let second = golden::run_all();
    let bless = std::env::var_os("LEARNKIT_BLESS").is_some();
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(a.status, EXIT_OK, "{} failed", a.name);
        assert_eq!(a.render(), b.render(), "{} differs between runs", a.name);
        let path = a.golden_path();
        if bless {
            fs::write(&path, a.render()).unwrap();
            continue;
        }
        let want = fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(
            String::from_utf8_lossy(&a.render()),
            String::from_utf8_lossy(&want),
            "{} does not match {}",
            a.name,
            path.display()
        );
    }
}

#[test]
fn eval_prints_percent_row() {
    let (status, out, _) = run(&args(&[
        "eval",
        "--predictions",
        &fx("predictions.tsv"),
        "--column",
        "1",
        "--truth",
        &fx("truth.txt"),
    ]));
    assert_eq!(status, EXIT_OK);
    assert!(String::from_utf8(out).unwrap().contains("accuracy: 76.0%\n"));
}

#[test]
fn eval_against_csv_truth_with_signed_labels() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("verdicts.tsv");
    // Transduction-style verdict column with one abstention.
    fs::write(&preds, "i\tv\n0\tWHITE\n1\tBLACK\n2\tNONE\n3\tBLACK\n4\tBLACK\n").unwrap();
    let (status, out, _) = run(&args(&[
        "eval",
        "--predictions",
        &preds.to_string_lossy(),
        "--column",
        "1",
        "--header",
        "--truth",
        &fx("probes.csv"),
        "--label",
        "Class",
        "--signed",
    ]));
    assert_eq!(status, EXIT_OK);
    let text = String::from_utf8(out).unwrap();
    assert!(text.contains("answered: 4\n"), "{text}");
    assert!(text.contains("coverage: 0.800000\n"), "{text}");
    assert!(text.contains("accuracy: 75.0%\n"), "{text}");
}

#[test]
fn usage_errors_exit_1() {
    for argv in [
        vec!["frobnicate"],
        vec!["svm", "train", "--label", "Class"],
        vec!["bbn", "query"],
        vec!["aa", "run", "--stream", "x", "--loss", "squared"],
        vec![],
    ] {
        let (status, out, err) = run(&args(&argv));
        assert_eq!(status, EXIT_USAGE, "{argv:?}");
        assert!(out.is_empty());
        assert!(!err.is_empty());
    }
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let cases = vec![
        args(&["data", "summary", "--data", &missing.to_string_lossy(), "--label", "Class"]),
        args(&["data", "summary", "--data", &fx("points.csv"), "--label", "Diagnosis"]),
        args(&["data", "summary", "--data", &fx("points.csv"), "--label", "Class", "--binary"]),
        // Three classes without --positive.
        args(&["svm", "train", "--data", &fx("clinic.csv"), "--label", "Diagnosis", "--binary", "--out", "m"]),
        args(&["svm", "train", "--data", &fx("points.csv"), "--label", "Class", "--kernel", "rbf", "--gamma=-1", "--out", "m"]),
        args(&["bbn", "query", "--net", &fx("chain.bbn"), "--evidence", "C=1"]),
        args(&["bbn", "validate", "--net", &fx("clinic.csv")]),
        args(&["aa", "run", "--stream", &fx("experts.tsv"), "--eta", "0"]),
        args(&["eval", "--predictions", &fx("predictions.tsv"), "--truth", &fx("experts.tsv")]),
        args(&["data", "split", "--data", &fx("points.csv"), "--label", "Class", "--fraction", "1.5",
               "--seed", "1", "--out-first", "a", "--out-second", "b"]),
    ];
    for argv in cases {
        let (status, out, err) = run(&argv);
        assert_eq!(status, EXIT_DATA, "{argv:?}: {}", String::from_utf8_lossy(&err));
        assert!(String::from_utf8(err).unwrap().starts_with("error: "));
        assert!(out.is_empty(), "{argv:?}");
    }
}

#[test]
fn help_lists_every_flag() {
    let expectations: &[(&[&str], &[&str])] = &[
        (&["data", "summary"], &["--data", "--label", "--binary"]),
        (&["data", "split"], &["--fraction", "--seed", "--out-first", "--out-second"]),
        (&["svm", "train"], &["--kernel", "--degree", "--gamma", "--c", "--tol", "--sv-tol", "--positive", "--out"]),
        (&["svm", "predict"], &["--model", "--data", "--label"]),
        (&["transduce"], &["--train", "--test", "--label", "--kernel", "--c"]),
        (&["gt", "learn"], &["--min-leaf", "--max-depth", "--level", "--out"]),
        (&["gt", "predict"], &["--rules", "--data", "--label"]),
        (&["nb", "train"], &["--smoothing", "--out"]),
        (&["nb", "predict"], &["--model"]),
        (&["bbn", "query"], &["--net", "--evidence"]),
        (&["bbn", "validate"], &["--net"]),
        (&["aa", "run"], &["--stream", "--eta", "--loss", "--prior"]),
        (&["eval"], &["--predictions", "--column", "--header", "--truth", "--label", "--signed"]),
    ];
    for (cmd, flags) in expectations {
        let mut argv = args(cmd);
        argv.push("--help".into());
        let (status, out, _) = run(&argv);
        assert_eq!(status, EXIT_OK, "{cmd:?}");
        let text = String::from_utf8(out).unwrap();
        for flag in *flags {
            assert!(text.contains(flag), "{cmd:?} help lacks {flag}");
        }
    }
}

#[test]
fn version_flag() {
    let (status, out, _) = run(&args(&["--version"]));
    assert_eq!(status, EXIT_OK);
    assert_eq!(String::from_utf8(out).unwrap(), format!("learnkit {}\n", env!("CARGO_PKG_VERSION")));
}

#[test]
fn binary_entry_point_uses_the_same_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_learnkit");
    let ok = std::process::Command::new(bin)
        .args(["bbn", "validate", "--net", &fx("chain.bbn")])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8(ok.stdout).unwrap(), "ok\tnodes 2\troots 1\n");
    let usage = std::process::Command::new(bin).arg("nope").output().unwrap();
    assert_eq!(usage.status.code(), Some(EXIT_USAGE));
    let data = std::process::Command::new(bin)
        .args(["bbn", "validate", "--net", "/nonexistent/net.bbn"])
        .output()
        .unwrap();
    assert_eq!(data.status.code(), Some(EXIT_DATA));
    assert!(data.stdout.is_empty());
}
