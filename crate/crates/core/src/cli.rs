//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on a usage error, 2 on a data or numeric
//! error. Results go to `out`, diagnostics to `err`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bbn::{self, Evidence};
use crate::dataset::{Dataset, ValueMode};
use crate::eval;
use crate::hedge::{self, ExpertPool, LossKind};
use crate::svm::{self, Kernel, SvmModel, TrainParams};
use crate::tabular::{self, GtParams, NbModel};
use crate::transduce::{self, Transducer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "learnkit", version, about = "Kernel SVMs, transductive confidence, rule induction, simple Bayes, tree belief propagation and expert aggregation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Summarize or split a dataset
    #[command(subcommand)]
    Data(DataCommand),
    /// Train or apply a kernel support vector machine
    #[command(subcommand)]
    Svm(SvmCommand),
    /// Label test points with confidence by retraining under both labels
    Transduce(TransduceArgs),
    /// Chi-square rule induction
    #[command(subcommand)]
    Gt(GtCommand),
    /// Simple Bayes classifier
    #[command(subcommand)]
    Nb(NbCommand),
    /// Tree-structured Bayesian belief networks
    #[command(subcommand)]
    Bbn(BbnCommand),
    /// Aggregating Algorithm over a stream of expert predictions
    #[command(subcommand)]
    Aa(AaCommand),
    /// Accuracy report for a list of predictions
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV file with a header row
    #[arg(long)]
    data: PathBuf,
    /// Name of the class column
    #[arg(long)]
    label: String,
    /// Parse attribute cells as Y/N/1/0
    #[arg(long)]
    binary: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        load(&self.data, &self.label, self.binary)
    }
}

fn load(path: &Path, label: &str, binary: bool) -> Result<Dataset> {
    let mode = if binary { ValueMode::Binary } else { ValueMode::Numeric };
    Dataset::load_csv(path, label, mode).with_context(|| format!("loading {}", path.display()))
}

#[derive(Debug, Subcommand)]
enum DataCommand {
    /// Example, attribute and per-class counts
    Summary(DataArgs),
    /// Seeded split into two CSV files
    Split {
        #[command(flatten)]
        input: DataArgs,
        /// Fraction of examples in the first part, in (0, 1)
        #[arg(long)]
        fraction: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_first: PathBuf,
        #[arg(long)]
        out_second: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
}

#[derive(Debug, Args)]
struct KernelArgs {
    #[arg(long, value_enum, default_value = "linear")]
    kernel: KernelKind,
    /// Polynomial degree
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// RBF width
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Box constraint on the multipliers
    #[arg(long = "c", default_value_t = svm::DEFAULT_BOX_C)]
    box_c: f64,
    /// Stopping threshold on the KKT violation
    #[arg(long, default_value_t = svm::DEFAULT_TOL)]
    tol: f64,
    /// Multipliers above this count as support vectors
    #[arg(long, default_value_t = svm::DEFAULT_SV_TOLERANCE)]
    sv_tol: f64,
    /// Class treated as +1; all others become -1. Without it labels must be +1/-1
    #[arg(long)]
    positive: Option<String>,
}

impl KernelArgs {
    fn kernel(&self) -> Result<Kernel> {
        Ok(match self.kernel {
            KernelKind::Linear => Kernel::Linear,
            KernelKind::Polynomial => Kernel::polynomial(self.degree)?,
            KernelKind::Rbf => Kernel::rbf(self.gamma)?,
        })
    }

    fn params(&self) -> TrainParams {
        TrainParams::default()
            .with_box_c(self.box_c)
            .with_tol(self.tol)
            .with_sv_tolerance(self.sv_tol)
    }

    fn relabel(&self, ds: Dataset) -> Dataset {
        match &self.positive {
            Some(p) => ds.one_vs_rest(p),
            None => ds,
        }
    }
}

#[derive(Debug, Subcommand)]
enum SvmCommand {
    /// Train and write a model file
    Train {
        #[command(flatten)]
        input: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decision values and labels for every row of a dataset
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: DataArgs,
    },
}

#[derive(Debug, Args)]
struct TransduceArgs {
    #[arg(long)]
    train: PathBuf,
    /// Points to label; their class column is ignored
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    label: String,
    #[arg(long)]
    binary: bool,
    #[command(flatten)]
    kernel: KernelArgs,
}

#[derive(Debug, Subcommand)]
enum GtCommand {
    /// Learn one rule set per class
    Learn {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        label: String,
        /// Minimum examples on each side of a split
        #[arg(long, default_value_t = 1)]
        min_leaf: usize,
        /// Maximum condition length (default: attribute count)
        #[arg(long)]
        max_depth: Option<usize>,
        /// Confidence level of the leaf intervals
        #[arg(long, default_value_t = tabular::DEFAULT_LEVEL)]
        level: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Most probable class for every row of a dataset
    Predict {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        label: String,
    },
}

#[derive(Debug, Subcommand)]
enum NbCommand {
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        label: String,
        /// Additive smoothing
        #[arg(long, default_value_t = 1.0)]
        smoothing: f64,
        #[arg(long)]
        out: PathBuf,
    },
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        label: String,
    },
}

#[derive(Debug, Subcommand)]
enum BbnCommand {
    /// Initial and revised beliefs for every node
    Query {
        #[arg(long)]
        net: PathBuf,
        /// Observations as NODE=STATE,NODE=STATE
        #[arg(long, default_value = "")]
        evidence: String,
    },
    /// Parse and check a network file
    Validate {
        #[arg(long)]
        net: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LossArg {
    Log,
    ZeroOne,
}

#[derive(Debug, Subcommand)]
enum AaCommand {
    /// Weight trace over a TSV stream (K prediction columns, then the outcome)
    Run {
        #[arg(long)]
        stream: PathBuf,
        /// Learning rate
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, value_enum, default_value = "log")]
        loss: LossArg,
        /// Prior weights as w1,w2,... (default uniform)
        #[arg(long)]
        prior: Option<String>,
    },
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Predictions, one row per case; NONE marks an abstention
    #[arg(long)]
    predictions: PathBuf,
    /// Tab-separated column of the prediction file holding the label
    #[arg(long, default_value_t = 0)]
    column: usize,
    /// Skip the first line of the prediction file
    #[arg(long)]
    header: bool,
    /// Truth labels: a CSV dataset when --label is given, else one label per line
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    label: Option<String>,
    /// Treat BLACK/+1/1 and WHITE/-1 as the same binary labels
    #[arg(long)]
    signed: bool,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit status.
pub fn dispatch<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match run(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_DATA
        }
    }
}

fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Data(c) => data(c, out),
        Command::Svm(c) => svm_cmd(c, out),
        Command::Transduce(a) => transduce_cmd(a, out),
        Command::Gt(c) => gt(c, out),
        Command::Nb(c) => nb(c, out),
        Command::Bbn(c) => bbn_cmd(c, out),
        Command::Aa(c) => aa(c, out),
        Command::Eval(a) => eval_cmd(a, out),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn data(c: DataCommand, out: &mut dyn Write) -> Result<()> {
    match c {
        DataCommand::Summary(input) => {
            let s = input.load()?.summarize();
            writeln!(out, "examples\t{}", s.examples)?;
            writeln!(out, "attributes\t{}", s.attributes)?;
            for (class, n) in &s.class_counts {
                writeln!(out, "class\t{class}\t{n}")?;
            }
        }
        DataCommand::Split {
            input,
            fraction,
            seed,
            out_first,
            out_second,
        } => {
            let (a, b) = input.load()?.split(fraction, seed)?;
            a.write_csv(&out_first)?;
            b.write_csv(&out_second)?;
            writeln!(out, "first\t{}\nsecond\t{}", a.len(), b.len())?;
        }
    }
    Ok(())
}

fn svm_cmd(c: SvmCommand, out: &mut dyn Write) -> Result<()> {
    match c {
        SvmCommand::Train { input, kernel, out: path } => {
            let ds = kernel.relabel(input.load()?);
            let model = svm::train(&ds, kernel.kernel()?, &kernel.params())?;
            write_file(&path, &model.to_text())?;
            writeln!(out, "examples\t{}", model.len())?;
            writeln!(out, "support_vectors\t{}", model.sv_count())?;
            writeln!(out, "loo_bound\t{:.6}", model.loo_bound())?;
            writeln!(out, "bias\t{:.6}", model.bias())?;
        }
        SvmCommand::Predict { model, input } => {
            let model = SvmModel::from_text(&read(&model)?)
                .with_context(|| format!("parsing {}", model.display()))?;
            let ds = input.load()?;
            writeln!(out, "index\tdecision\tprediction")?;
            for (i, ex) in ds.examples().iter().enumerate() {
                let f = model.decision_value(&ex.features)?;
                let label = model.predict(&ex.features)?;
                writeln!(out, "{i}\t{f:.6}\t{}", svm::format_label(label))?;
            }
        }
    }
    Ok(())
}

fn transduce_cmd(a: TransduceArgs, out: &mut dyn Write) -> Result<()> {
    let train = a.kernel.relabel(load(&a.train, &a.label, a.binary)?);
    let test = load(&a.test, &a.label, a.binary)?;
    let t = Transducer::new(&train, a.kernel.kernel()?, a.kernel.params())?;
    let queries: Vec<Vec<f64>> = test.examples().iter().map(|e| e.features.clone()).collect();
    let verdicts = t.classify_all(&queries)?;
    writeln!(out, "{}", transduce::TSV_HEADER)?;
    for (i, v) in verdicts.iter().enumerate() {
        writeln!(out, "{}", transduce::format_row(i, v))?;
    }
    Ok(())
}

fn gt(c: GtCommand, out: &mut dyn Write) -> Result<()> {
    match c {
        GtCommand::Learn {
            data,
            label,
            min_leaf,
            max_depth,
            level,
            out: path,
        } => {
            let ds = load(&data, &label, true)?;
            let params = GtParams {
                min_leaf,
                max_depth,
                level,
            };
            let sets = tabular::gt_learn_all(&ds, &params)?;
            let text = tabular::rules_to_text(&sets, ds.attribute_names());
            write_file(&path, &text)?;
            writeln!(out, "class\tleaves")?;
            for rs in &sets {
                writeln!(out, "{}\t{}", rs.class_id, rs.leaves.len())?;
            }
        }
        GtCommand::Predict { rules, data, label } => {
            let (sets, names) = tabular::rules_from_text(&read(&rules)?)
                .with_context(|| format!("parsing {}", rules.display()))?;
            let ds = load(&data, &label, true)?;
            if names != ds.attribute_names() {
                bail!("dataset attributes do not match the rule file");
            }
            writeln!(out, "index\tclass\tp\tci_low\tci_high")?;
            for (i, ex) in ds.examples().iter().enumerate() {
                let p = tabular::gt_predict(&sets, &ex.features)?;
                writeln!(
                    out,
                    "{i}\t{}\t{:.6}\t{:.6}\t{:.6}",
                    p.class_id, p.p, p.ci_low, p.ci_high
                )?;
            }
        }
    }
    Ok(())
}

fn nb(c: NbCommand, out: &mut dyn Write) -> Result<()> {
    match c {
        NbCommand::Train {
            data,
            label,
            smoothing,
            out: path,
        } => {
            let ds = load(&data, &label, true)?;
            let model = tabular::nb_train(&ds, smoothing)?;
            write_file(&path, &model.to_text())?;
            writeln!(out, "class\tprior")?;
            for (c, p) in model.classes.iter().zip(&model.priors) {
                writeln!(out, "{c}\t{p:.6}")?;
            }
        }
        NbCommand::Predict { model, data, label } => {
            let model = NbModel::from_text(&read(&model)?)
                .with_context(|| format!("parsing {}", model.display()))?;
            let ds = load(&data, &label, true)?;
            write!(out, "index\tclass")?;
            for c in &model.classes {
                write!(out, "\tP({c})")?;
            }
            writeln!(out)?;
            for (i, ex) in ds.examples().iter().enumerate() {
                let (class, post) = model.predict_class(&ex.features)?;
                write!(out, "{i}\t{class}")?;
                for p in post {
                    write!(out, "\t{p:.6}")?;
                }
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

fn bbn_cmd(c: BbnCommand, out: &mut dyn Write) -> Result<()> {
    match c {
        BbnCommand::Query { net, evidence } => {
            let network = bbn::parse_network(&read(&net)?)
                .with_context(|| format!("parsing {}", net.display()))?;
            let ev = Evidence::parse(&evidence)?;
            let initial = bbn::propagate(&network, &Evidence::new())?;
            let revised = bbn::propagate(&network, &ev)?;
            writeln!(out, "node\tstate\tinitial\trevised")?;
            for node in network.nodes() {
                let (a, b) = (&initial.beliefs[&node.name], &revised.beliefs[&node.name]);
                for (s, state) in node.states.iter().enumerate() {
                    writeln!(out, "{}\t{state}\t{:.6}\t{:.6}", node.name, a[s], b[s])?;
                }
            }
        }
        BbnCommand::Validate { net } => {
            let network = bbn::parse_network(&read(&net)?)
                .with_context(|| format!("parsing {}", net.display()))?;
            let roots = network.nodes().iter().filter(|n| n.parent.is_none()).count();
            writeln!(out, "ok\tnodes {}\troots {}", network.len(), roots)?;
        }
    }
    Ok(())
}

fn aa(c: AaCommand, out: &mut dyn Write) -> Result<()> {
    let AaCommand::Run {
        stream,
        eta,
        loss,
        prior,
    } = c;
    let rounds = hedge::parse_stream(&read(&stream)?)
        .with_context(|| format!("parsing {}", stream.display()))?;
    let Some(first) = rounds.first() else {
        bail!("stream {} has no rounds", stream.display());
    };
    let k = first.predictions.len();
    let prior = prior
        .map(|p| {
            p.split(',')
                .map(|w| w.trim().parse::<f64>().with_context(|| format!("bad prior weight {w:?}")))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let kind = match loss {
        LossArg::Log => LossKind::Log,
        LossArg::ZeroOne => LossKind::ZeroOne,
    };
    let pool = ExpertPool::new(k, prior.as_deref(), eta, kind)?;
    let (trace, _) = hedge::run_stream(&pool, &rounds)?;
    out.write_all(hedge::format_trace(&trace, k).as_bytes())?;
    Ok(())
}

fn signed_token(label: &str) -> String {
    match label {
        "BLACK" | "+1" | "1" => "+1".into(),
        "WHITE" | "-1" => "-1".into(),
        other => other.into(),
    }
}

fn eval_cmd(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let text = read(&a.predictions)?;
    let mut predictions = Vec::new();
    for (n, line) in text.lines().enumerate().skip(a.header as usize) {
        if line.trim().is_empty() {
            continue;
        }
        let field = line
            .split('\t')
            .nth(a.column)
            .with_context(|| format!("prediction line {}: no column {}", n + 1, a.column))?
            .trim();
        predictions.push((field != "NONE").then(|| field.to_string()));
    }
    let truth: Vec<String> = match &a.label {
        Some(label) => load(&a.truth, label, false)
            .or_else(|_| load(&a.truth, label, true))?
            .examples()
            .iter()
            .map(|e| e.label.clone())
            .collect(),
        None => read(&a.truth)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect(),
    };
    let (predictions, truth) = if a.signed {
        (
            predictions.into_iter().map(|p| p.map(|s| signed_token(&s))).collect(),
            truth.iter().map(|t| signed_token(t)).collect(),
        )
    } else {
        (predictions, truth)
    };
    let report = eval::evaluate(&predictions, &truth)?;
    out.write_all(report.render().as_bytes())?;
    Ok(())
}
