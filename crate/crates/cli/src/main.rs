use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use radio_topo::codec::{parse_label_file, write_label_file};
use radio_topo::generators::{generate, Family, GenSpec};
use radio_topo::harness::batch::{run_experiment_with, Config, Exec};
use radio_topo::harness::bounds::pigeonhole_certificate;
use radio_topo::harness::{
    check_mod3, check_phase_windows, check_run, check_tr_delivery, dispatch, label_tree, parse_outputs, protocol_of,
    run_labels, write_outputs, Labeling, MainContext, Protocol,
};
use radio_topo::radio::{Round, Transcript};
use radio_topo::scheme::MainLabel;
use radio_topo::tree::Tree;

#[derive(Parser)]
#[command(name = "radio-topo", version, about = "Topology recognition in radio tree networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Auto,
    Main,
    D3,
    Star,
    Line,
}

impl ProtocolArg {
    fn resolve(self, tree: &Tree) -> Protocol {
        match self {
            ProtocolArg::Auto => dispatch(tree),
            ProtocolArg::Main => Protocol::Main,
            ProtocolArg::D3 => Protocol::D3,
            ProtocolArg::Star => Protocol::Star,
            ProtocolArg::Line => Protocol::Line,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate trees from a family and write one file per tree.
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 3)]
        delta: usize,
        #[arg(long, default_value_t = 4)]
        diameter: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label a tree and write the label file.
    Label {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth slot and class sidecar (general scheme only).
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "auto")]
        protocol: ProtocolArg,
        /// Degree bound of the class, for stars and diameter-3 trees.
        #[arg(long)]
        class_delta: Option<u64>,
    },
    /// Simulate a protocol on a tree and verify every node's output.
    Run {
        #[arg(long)]
        tree: PathBuf,
        /// Use these labels instead of labeling the tree.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "auto")]
        protocol: ProtocolArg,
        #[arg(long)]
        class_delta: Option<u64>,
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Write each node's output as `<node> <canonical form>`.
        #[arg(long)]
        outputs: Option<PathBuf>,
        #[arg(long)]
        max_rounds: Option<Round>,
    },
    /// Run a config sweep and write sorted CSV rows.
    Batch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run jobs one after another instead of on the worker pool.
        #[arg(long)]
        sequential: bool,
    },
    /// Check recorded outputs and transcript against a tree and its labels.
    Verify {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        outputs: PathBuf,
    },
    /// Pigeonhole certificate for labels of a given length.
    Bounds {
        #[arg(long)]
        delta: u64,
        #[arg(long)]
        label_bits: u32,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_tree(path: &Path) -> Result<Tree> {
    read(path)?.parse::<Tree>().with_context(|| format!("parsing {}", path.display()))
}

/// `Ok(true)` on pass, `Ok(false)` on a verification failure.
fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Gen { family, delta, diameter, seed, count, out } => {
            let family: Family = family.parse()?;
            let trees = generate(&GenSpec { family, delta, diameter, seed, count })?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (i, t) in trees.iter().enumerate() {
                let name = format!("{family}-delta{delta}-diam{diameter}-seed{seed}-{i}.tree");
                write(&out.join(name), &t.to_string())?;
            }
            println!("wrote {} trees to {}", trees.len(), out.display());
            Ok(true)
        }
        Command::Label { tree, out, truth, protocol, class_delta } => {
            let t = read_tree(&tree)?;
            let labeling = label_tree(&t, protocol.resolve(&t), class_delta)?;
            write(&out, &write_label_file(&labeling.structured()))?;
            if let Some(path) = truth {
                let Labeling::Main(s) = &labeling else { bail!("--truth needs the general scheme") };
                write(&path, &s.truth.to_sidecar())?;
            }
            Ok(true)
        }
        Command::Run { tree, labels, protocol, class_delta, transcript, outputs, max_rounds } => {
            let t = read_tree(&tree)?;
            let labels = match labels {
                Some(path) => parse_label_file(&read(&path)?)?,
                None => label_tree(&t, protocol.resolve(&t), class_delta)?.structured(),
            };
            let run = run_labels(&t, &labels, max_rounds)?;
            if let Some(path) = transcript {
                write(&path, &run.outcome.transcript.to_string())?;
            }
            if let Some(path) = outputs {
                write(&path, &write_outputs(&run.outcome.outputs))?;
            }
            let r = &run.report;
            let invalid: Vec<usize> = (0..r.n).filter(|&v| !r.valid[v]).collect();
            println!(
                "protocol={} n={} rounds={} max_label_bits={} invalid={:?}",
                r.protocol, r.n, r.completion_round, r.max_label_bits, invalid
            );
            for v in
                r.tr_violations.iter().chain(&r.mod3_violations).chain(&r.phase_violations).chain(&r.program_violations)
            {
                println!("violation: {v}");
            }
            println!("{}", if r.pass() { "PASS" } else { "FAIL" });
            Ok(r.pass())
        }
        Command::Batch { config, out, sequential } => {
            let cfg: Config = read(&config)?.parse()?;
            let exec = if sequential { Exec::Sequential } else { Exec::Parallel };
            let result = run_experiment_with(&cfg, exec);
            write(&out, &result.to_csv())?;
            for s in &result.skipped {
                eprintln!("skipped: {s}");
            }
            for f in &result.failures {
                eprintln!("failed: {f}");
            }
            let failed = result.rows.iter().filter(|r| !r.valid).count();
            println!("{} rows, {} failed, {} skipped", result.rows.len(), failed, result.skipped.len());
            Ok(result.pass())
        }
        Command::Verify { tree, labels, transcript, outputs } => {
            let t = read_tree(&tree)?;
            let labels = parse_label_file(&read(&labels)?)?;
            let transcript = Transcript::parse(&read(&transcript)?)?;
            let outs = parse_outputs(&read(&outputs)?, t.n())?;
            let mut problems = Vec::new();
            match check_run(&t, &outs) {
                Ok(valid) => problems.extend((0..t.n()).filter(|&v| !valid[v]).map(|v| format!("node {v} misplaced"))),
                Err(e) => problems.push(e.to_string()),
            }
            match protocol_of(&labels)? {
                Protocol::Main => {
                    let typed = labels.iter().map(MainLabel::from_structured).collect::<Result<Vec<_>, _>>()?;
                    let ctx = MainContext::new(&t, &typed)?;
                    problems.extend(check_tr_delivery(&transcript, &ctx));
                    problems.extend(check_phase_windows(&transcript, &ctx));
                }
                Protocol::Line => problems.extend(check_mod3(&transcript, &t)),
                Protocol::D3 | Protocol::Star => {}
            }
            for p in &problems {
                println!("{p}");
            }
            println!("{}", if problems.is_empty() { "PASS" } else { "FAIL" });
            Ok(problems.is_empty())
        }
        Command::Bounds { delta, label_bits } => {
            if delta < 4 {
                bail!("--delta must be at least 4");
            }
            let c = pigeonhole_certificate(delta, label_bits);
            println!("delta={} label_bits={}", c.delta, c.label_bits);
            println!("views_log2={}", c.views_log2);
            if let Some(b) = &c.views_upper_bound {
                println!("views_upper_bound={b}");
            }
            println!("family_size={}", c.family_size);
            println!("separable={}", c.separable);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
