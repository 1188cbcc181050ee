//! End-to-end runs: pick a protocol, label, simulate, verify.

pub mod batch;
pub mod bounds;
pub mod checks;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::codec::{encode, scheme_length, CodecError, LabelKind, StructuredLabel};
use crate::generators::GenError;
use crate::protocol::general::{Learned, MainProgram};
use crate::protocol::line::{label_line_tree, LineLabel, LineProgram, LineScheme};
use crate::protocol::small::{
    label_d3_in_class, label_star_tree, D3Label, D3Program, D3Scheme, StarLabel, StarProgram, StarScheme,
};
use crate::radio::{default_max_rounds, simulate, NodeOutput, NodeProgram, Round, SimError, SimOutcome};
use crate::scheme::{label_main, MainLabel, MainScheme, SchemeError};
use crate::tree::{ahu, root_at, CanonicalForm, NodeId, Tree, TreeError};

pub use checks::{check_mod3, check_phase_windows, check_run, check_tr_delivery, MainContext, PhaseWindows};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("labels belong to more than one protocol")]
    MixedLabels,
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("nodes without output: {0:?}")]
    MissingOutputs(Vec<NodeId>),
    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("outputs line {line}: {msg}")]
    Outputs { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Main,
    D3,
    Star,
    Line,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Main => "main",
            Protocol::D3 => "d3",
            Protocol::Star => "star",
            Protocol::Line => "line",
        }
    }

    fn of_kind(kind: LabelKind) -> Self {
        match kind {
            LabelKind::MainScheme => Protocol::Main,
            LabelKind::RootD3 | LabelKind::HubD3 | LabelKind::LeafD3 | LabelKind::LeafD3Null => Protocol::D3,
            LabelKind::StarCenter | LabelKind::StarLeaf | LabelKind::StarLeafNull => Protocol::Star,
            LabelKind::Line | LabelKind::LineTiny => Protocol::Line,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Protocol::Main, Protocol::D3, Protocol::Star, Protocol::Line]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| HarnessError::UnknownProtocol(s.to_string()))
    }
}

/// Lines (Δ ≤ 2, which includes one- and two-node trees) first, then stars,
/// diameter 3, and the general scheme for everything else.
pub fn dispatch(tree: &Tree) -> Protocol {
    if tree.max_degree() <= 2 {
        return Protocol::Line;
    }
    match tree.diameter() {
        2 => Protocol::Star,
        3 => Protocol::D3,
        _ => Protocol::Main,
    }
}

// one per run; boxing the main scheme buys nothing
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
pub enum Labeling {
    Main(MainScheme),
    D3(D3Scheme),
    Star(StarScheme),
    Line(LineScheme),
}

impl Labeling {
    pub fn protocol(&self) -> Protocol {
        match self {
            Labeling::Main(_) => Protocol::Main,
            Labeling::D3(_) => Protocol::D3,
            Labeling::Star(_) => Protocol::Star,
            Labeling::Line(_) => Protocol::Line,
        }
    }

    pub fn structured(&self) -> Vec<StructuredLabel> {
        match self {
            Labeling::Main(s) => s.labels.iter().map(MainLabel::to_structured).collect(),
            Labeling::D3(s) => s.labels.iter().map(D3Label::to_structured).collect(),
            Labeling::Star(s) => s.labels.iter().map(StarLabel::to_structured).collect(),
            Labeling::Line(s) => s.labels.iter().map(LineLabel::to_structured).collect(),
        }
    }
}

/// Labels `tree` for `protocol`. `class_delta` is the degree bound of the
/// class for the small protocols; it defaults to the tree's maximum degree.
pub fn label_tree(tree: &Tree, protocol: Protocol, class_delta: Option<u64>) -> Result<Labeling, HarnessError> {
    let delta = class_delta.unwrap_or(tree.max_degree() as u64);
    Ok(match protocol {
        Protocol::Main => Labeling::Main(label_main(tree)?),
        Protocol::D3 => Labeling::D3(label_d3_in_class(tree, delta)?),
        Protocol::Star => Labeling::Star(label_star_tree(tree, delta)?),
        Protocol::Line => Labeling::Line(label_line_tree(tree)?),
    })
}

/// The protocol all labels belong to.
pub fn protocol_of(labels: &[StructuredLabel]) -> Result<Protocol, HarnessError> {
    let mut kinds = labels.iter().map(|l| Protocol::of_kind(l.kind));
    let first = kinds.next().ok_or(CodecError::EmptySet)?;
    if kinds.any(|p| p != first) {
        return Err(HarnessError::MixedLabels);
    }
    Ok(first)
}

/// Main-protocol progress per node, kept for inspection after a run.
pub type MainTrace = Vec<Learned>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub protocol: Protocol,
    pub n: usize,
    pub completion_round: Round,
    pub max_label_bits: usize,
    pub valid: Vec<bool>,
    pub tr_violations: Vec<String>,
    pub mod3_violations: Vec<String>,
    pub phase_violations: Vec<String>,
    /// Inconsistencies the node programs noticed themselves.
    pub program_violations: Vec<String>,
}

impl RunReport {
    pub fn all_valid(&self) -> bool {
        self.valid.iter().all(|&v| v)
    }

    pub fn pass(&self) -> bool {
        self.all_valid()
            && self.tr_violations.is_empty()
            && self.mod3_violations.is_empty()
            && self.phase_violations.is_empty()
            && self.program_violations.is_empty()
    }
}

pub struct Run {
    pub outcome: SimOutcome,
    pub report: RunReport,
    pub main_trace: Option<MainTrace>,
}

fn drive<P: NodeProgram>(
    tree: &Tree,
    mut progs: Vec<P>,
    max_rounds: Round,
    violations: impl Fn(&P) -> &[String],
) -> Result<(SimOutcome, Vec<P>, Vec<String>), HarnessError> {
    let outcome = simulate(tree, &mut progs, max_rounds)?;
    let found = progs
        .iter()
        .enumerate()
        .flat_map(|(v, p)| violations(p).iter().map(move |s| format!("node {v}: {s}")))
        .collect();
    Ok((outcome, progs, found))
}

fn decode_all<T>(
    labels: &[StructuredLabel],
    f: impl Fn(&StructuredLabel) -> Result<T, SchemeError>,
) -> Result<Vec<T>, HarnessError> {
    labels.iter().map(|l| f(l).map_err(HarnessError::from)).collect()
}

/// Simulates the protocol the labels belong to and runs every applicable check.
pub fn run_labels(tree: &Tree, labels: &[StructuredLabel], max_rounds: Option<Round>) -> Result<Run, HarnessError> {
    if labels.len() != tree.n() {
        return Err(HarnessError::LabelCount { expected: tree.n(), got: labels.len() });
    }
    let protocol = protocol_of(labels)?;
    let encoded: Vec<_> = labels.iter().map(encode).collect();
    let max_label_bits = scheme_length(&encoded)?;
    let limit = max_rounds.unwrap_or_else(|| default_max_rounds(tree.max_degree() as u64, tree.diameter() as u64));
    let (outcome, program_violations, main_trace, main_ctx) = match protocol {
        Protocol::Main => {
            let typed = decode_all(labels, MainLabel::from_structured)?;
            let ctx = MainContext::new(tree, &typed)?;
            let progs = typed.into_iter().map(MainProgram::new).collect();
            let (o, progs, v) = drive(tree, progs, limit, MainProgram::violations)?;
            (o, v, Some(progs.iter().map(|p| p.learned().clone()).collect()), Some(ctx))
        }
        Protocol::D3 => {
            let progs = decode_all(labels, D3Label::from_structured)?.into_iter().map(D3Program::new).collect();
            let (o, _, v) = drive(tree, progs, limit, D3Program::violations)?;
            (o, v, None, None)
        }
        Protocol::Star => {
            let progs = decode_all(labels, StarLabel::from_structured)?.into_iter().map(StarProgram::new).collect();
            let (o, _, v) = drive(tree, progs, limit, StarProgram::violations)?;
            (o, v, None, None)
        }
        Protocol::Line => {
            let progs = decode_all(labels, LineLabel::from_structured)?.into_iter().map(LineProgram::new).collect();
            let (o, _, v) = drive(tree, progs, limit, LineProgram::violations)?;
            (o, v, None, None)
        }
    };
    let outputs: Vec<Option<NodeOutput>> = outcome.outputs.iter().cloned().map(Some).collect();
    let valid = check_run(tree, &outputs)?;
    let (tr_violations, phase_violations) = match &main_ctx {
        Some(ctx) => (check_tr_delivery(&outcome.transcript, ctx), check_phase_windows(&outcome.transcript, ctx)),
        None => (Vec::new(), Vec::new()),
    };
    let mod3_violations = if protocol == Protocol::Line { check_mod3(&outcome.transcript, tree) } else { Vec::new() };
    let report = RunReport {
        protocol,
        n: tree.n(),
        completion_round: outcome.metrics.completion_round,
        max_label_bits,
        valid,
        tr_violations,
        mod3_violations,
        phase_violations,
        program_violations,
    };
    Ok(Run { outcome, report, main_trace })
}

/// Dispatches (unless `protocol` is given), labels and runs.
pub fn run_tree(
    tree: &Tree,
    protocol: Option<Protocol>,
    class_delta: Option<u64>,
    max_rounds: Option<Round>,
) -> Result<(Labeling, Run), HarnessError> {
    let labeling = label_tree(tree, protocol.unwrap_or_else(|| dispatch(tree)), class_delta)?;
    let run = run_labels(tree, &labeling.structured(), max_rounds)?;
    Ok((labeling, run))
}

/// One `<node> <form>` line per node, where `<form>` is the output tree's
/// canonical form rooted at the claimed node.
pub fn write_outputs(outputs: &[NodeOutput]) -> String {
    let mut cache: HashMap<(*const Tree, NodeId), CanonicalForm> = HashMap::new();
    let mut text = String::new();
    for (v, o) in outputs.iter().enumerate() {
        let form = cache.entry((Arc::as_ptr(&o.tree), o.node)).or_insert_with(|| {
            let rt = root_at(&o.tree, o.node).expect("output node lies in its tree");
            ahu(&rt, o.node).expect("output node lies in its tree")
        });
        text.push_str(&format!("{v} {form}\n"));
    }
    text
}

/// Reads an outputs file for `n` nodes. Each claimed tree is rebuilt with the
/// claimed node as node 0; nodes without a line map to `None`.
pub fn parse_outputs(text: &str, n: usize) -> Result<Vec<Option<NodeOutput>>, HarnessError> {
    let mut out: Vec<Option<NodeOutput>> = vec![None; n];
    let mut trees: HashMap<String, Arc<Tree>> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| HarnessError::Outputs { line: i + 1, msg };
        let (node, form) =
            line.split_once(char::is_whitespace).ok_or_else(|| err("expected `<node> <form>`".into()))?;
        let v: NodeId = node.parse().map_err(|e| err(format!("bad node `{node}`: {e}")))?;
        if v >= n {
            return Err(err(format!("node {v} out of range")));
        }
        let form = form.trim();
        let tree = match trees.get(form) {
            Some(t) => t.clone(),
            None => {
                let t = Arc::new(CanonicalForm::parse(form).map_err(|e| err(e.to_string()))?.to_tree()?);
                trees.insert(form.to_string(), t.clone());
                t
            }
        };
        if out[v].replace(NodeOutput { tree, node: 0 }).is_some() {
            return Err(err(format!("node {v} listed twice")));
        }
    }
    Ok(out)
}
