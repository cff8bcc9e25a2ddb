//! Fixture-driven CLI runs shared by the golden-file and acceptance tests.

use std::fs;
use std::path::{Path, PathBuf};

use learnkit::cli::dispatch;

pub struct Case {
    pub name: &'static str,
    pub args: &'static [&'static str],
    /// Files the command writes into the scratch directory.
    pub writes: &'static [&'static str],
}

/// Run in order: later cases read files written by earlier ones.
pub const CASES: &[Case] = &[
    Case {
        name: "data_summary",
        args: &["data", "summary", "--data", "{fx}/clinic.csv", "--label", "Diagnosis", "--binary"],
        writes: &[],
    },
    Case {
        name: "data_split",
        args: &[
            "data", "split", "--data", "{fx}/points.csv", "--label", "Class", "--fraction", "0.75",
            "--seed", "7", "--out-first", "{tmp}/first.csv", "--out-second", "{tmp}/second.csv",
        ],
        writes: &["first.csv", "second.csv"],
    },
    Case {
        name: "svm_train",
        args: &[
            "svm", "train", "--data", "{fx}/points.csv", "--label", "Class", "--kernel", "rbf",
            "--gamma", "1.0", "--c", "1000", "--out", "{tmp}/model.svm",
        ],
        writes: &["model.svm"],
    },
    Case {
        name: "svm_predict",
        args: &["svm", "predict", "--model", "{tmp}/model.svm", "--data", "{fx}/probes.csv", "--label", "Class"],
        writes: &[],
    },
    Case {
        name: "transduce",
        args: &[
            "transduce", "--train", "{fx}/points.csv", "--test", "{fx}/probes.csv", "--label", "Class",
            "--kernel", "linear", "--c", "1000",
        ],
        writes: &[],
    },
    Case {
        name: "gt_learn",
        args: &["gt", "learn", "--data", "{fx}/clinic.csv", "--label", "Diagnosis", "--out", "{tmp}/clinic.rules"],
        writes: &["clinic.rules"],
    },
    Case {
        name: "gt_predict",
        args: &["gt", "predict", "--rules", "{tmp}/clinic.rules", "--data", "{fx}/clinic.csv", "--label", "Diagnosis"],
        writes: &[],
    },
    Case {
        name: "nb_train",
        args: &["nb", "train", "--data", "{fx}/clinic.csv", "--label", "Diagnosis", "--out", "{tmp}/clinic.nb"],
        writes: &["clinic.nb"],
    },
    Case {
        name: "nb_predict",
        args: &["nb", "predict", "--model", "{tmp}/clinic.nb", "--data", "{fx}/clinic.csv", "--label", "Diagnosis"],
        writes: &[],
    },
    Case {
        name: "bbn_query",
        args: &["bbn", "query", "--net", "{fx}/chain.bbn", "--evidence", "B=1"],
        writes: &[],
    },
    Case {
        name: "bbn_validate",
        args: &["bbn", "validate", "--net", "{fx}/chain.bbn"],
        writes: &[],
    },
    Case {
        name: "aa_run",
        args: &["aa", "run", "--stream", "{fx}/experts.tsv", "--eta", "1.0"],
        writes: &[],
    },
    Case {
        name: "eval",
        args: &["eval", "--predictions", "{fx}/predictions.tsv", "--column", "1", "--truth", "{fx}/truth.txt"],
        writes: &[],
    },
];

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Runs `argv` in-process; returns (status, stdout, stderr).
pub fn run(argv: &[String]) -> (i32, Vec<u8>, Vec<u8>) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["learnkit".to_string()];
    full.extend_from_slice(argv);
    let status = dispatch(full, &mut out, &mut err);
    (status, out, err)
}

/// One output blob per case: stdout followed by every written file.
pub struct Transcript {
    pub name: &'static str,
    pub status: i32,
    pub stdout: Vec<u8>,
    pub files: Vec<(String, Vec<u8>)>,
}

/// Runs every case in a fresh scratch directory.
pub fn run_all() -> Vec<Transcript> {
    let scratch = tempfile::tempdir().expect("scratch directory");
    let fx = fixture_dir();
    let mut transcripts = Vec::new();
    for case in CASES {
        let argv: Vec<String> = case
            .args
            .iter()
            .map(|a| {
                a.replace("{fx}", &fx.to_string_lossy())
                    .replace("{tmp}", &scratch.path().to_string_lossy())
            })
            .collect();
        let (status, stdout, _) = run(&argv);
        let files = case
            .writes
            .iter()
            .map(|f| (f.to_string(), fs::read(scratch.path().join(f)).unwrap_or_default()))
            .collect();
        transcripts.push(Transcript {
            name: case.name,
            status,
            stdout,
            files,
        });
    }
    transcripts
}

impl Transcript {
    pub fn golden_path(&self) -> PathBuf {
        golden_dir().join(format!("{}.out", self.name))
    }

    /// Stdout, then each written file under a `==> name <==` banner.
    pub fn render(&self) -> Vec<u8> {
        let mut blob = self.stdout.clone();
        for (name, bytes) in &self.files {
            blob.extend_from_slice(format!("==> {name} <==\n").as_bytes());
            blob.extend_from_slice(bytes);
        }
        blob
    }
}
