//! Verdicts on finished runs: output placements and transcript invariants.

use std::ops::RangeInclusive;

use crate::radio::{NodeOutput, Round, Transcript};
use crate::scheme::{derive_params, unchunk, MainLabel, MainScheme, SchemeError};
use crate::tree::{placements_valid, root_at, NodeId, RootedTree, Tree};

use super::HarnessError;

/// Round windows of the main protocol for a given `m`, height and epoch length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseWindows {
    pub m2: Round,
    pub h: Round,
    pub epoch_len: Round,
}

impl PhaseWindows {
    pub fn new(m: usize, h: usize, epoch_len: u64) -> Self {
        PhaseWindows { m2: (m * m) as Round, h: h as Round, epoch_len }
    }

    /// Last round of parameter learning.
    pub fn param_end(&self) -> Round {
        self.m2 + 3 * self.h
    }

    pub fn slot_gossip(&self) -> RangeInclusive<Round> {
        self.param_end() + 1..=self.param_end() + self.m2
    }

    pub fn class_gossip(&self) -> RangeInclusive<Round> {
        self.param_end() + self.m2 + 1..=self.param_end() + 2 * self.m2
    }

    /// Subtree reports, epoch by epoch from the deepest level up.
    pub fn reports(&self) -> RangeInclusive<Round> {
        let t1 = self.param_end() + 2 * self.m2;
        t1 + 1..=t1 + 2 * self.h * self.epoch_len
    }

    pub fn final_start(&self) -> Round {
        self.reports().end() + 1
    }

    /// `3m² + 4h + 2hE + 1`: every node has output by then.
    pub fn round_bound(&self) -> Round {
        3 * self.m2 + 4 * self.h + 2 * self.h * self.epoch_len + 1
    }
}

/// What the transcript checks need to know about a main-protocol run, all of
/// it recoverable from the tree and the labels.
#[derive(Clone, Debug)]
pub struct MainContext {
    pub rooted: RootedTree,
    pub windows: PhaseWindows,
    pub labels: Vec<MainLabel>,
}

impl MainContext {
    pub fn new(tree: &Tree, labels: &[MainLabel]) -> Result<Self, HarnessError> {
        let mut roots = (0..labels.len()).filter(|&v| labels[v].marker(0));
        let (Some(root), None) = (roots.next(), roots.next()) else {
            return Err(SchemeError::BadLabel("need exactly one root marker").into());
        };
        let core = labels.iter().filter(|l| l.marker(2)).filter_map(|l| l.l0.as_ref()).map(|(i, c)| (*i, c));
        let delta = unchunk(core)?.to_u64().ok_or(SchemeError::BadLabel("Δ does not fit 64 bits"))?;
        let params = derive_params(delta)?;
        let rooted = root_at(tree, root)?;
        let windows = PhaseWindows::new(labels[root].m(), rooted.height(), params.epoch_len);
        Ok(MainContext { rooted, windows, labels: labels.to_vec() })
    }

    pub fn from_scheme(s: &MainScheme) -> Self {
        MainContext {
            rooted: s.rooted.clone(),
            windows: PhaseWindows::new(s.params.m, s.truth.height, s.params.epoch_len),
            labels: s.labels.clone(),
        }
    }
}

/// Placement verdict for every node; fails if any node has no output.
pub fn check_run(tree: &Tree, outputs: &[Option<NodeOutput>]) -> Result<Vec<bool>, HarnessError> {
    let missing: Vec<NodeId> = (0..tree.n()).filter(|&v| outputs.get(v).is_none_or(Option::is_none)).collect();
    if !missing.is_empty() {
        return Err(HarnessError::MissingOutputs(missing));
    }
    let claims: Vec<(&Tree, NodeId)> =
        outputs[..tree.n()].iter().map(|o| o.as_ref().map(|o| (&*o.tree, o.node)).expect("checked above")).collect();
    Ok(placements_valid(tree, &claims))
}

fn rounds_in(transcript: &Transcript, range: RangeInclusive<Round>) -> impl Iterator<Item = (Round, &[NodeId])> {
    range.take_while(move |&r| r <= transcript.len()).filter_map(move |r| {
        let rec = transcript.round(r)?;
        (!rec.transmitters.is_empty()).then_some((r, rec.transmitters.as_slice()))
    })
}

/// Every report-phase transmission must reach the sender's parent.
pub fn check_tr_delivery(transcript: &Transcript, ctx: &MainContext) -> Vec<String> {
    let mut found = Vec::new();
    for (r, tx) in rounds_in(transcript, ctx.windows.reports()) {
        for &v in tx {
            match ctx.rooted.parent(v) {
                None => found.push(format!("round {r}: root transmitted during reports")),
                Some(p) if !transcript.delivered(r, p, v) => {
                    found.push(format!("round {r}: report of {v} did not reach parent {p}"))
                }
                _ => {}
            }
        }
    }
    found
}

/// Transmitters in each phase must be the nodes the phase belongs to.
pub fn check_phase_windows(transcript: &Transcript, ctx: &MainContext) -> Vec<String> {
    let w = &ctx.windows;
    let mut found = Vec::new();
    let mut flag = |r: Round, v: NodeId, what: &str| found.push(format!("round {r}: node {v} {what}"));
    for (r, tx) in rounds_in(transcript, 1..=transcript.len()) {
        for &v in tx {
            let l = &ctx.labels[v];
            if r <= w.m2 && !(l.marker(2) && l.l0.is_some()) {
                flag(r, v, "joined the parameter gossip outside the root core");
            } else if w.slot_gossip().contains(&r) && l.l1.is_none() {
                flag(r, v, "joined the slot gossip without a slot chunk");
            } else if w.class_gossip().contains(&r) && l.l3.is_none() {
                flag(r, v, "joined the class gossip without a class chunk");
            } else if r >= w.final_start() && ctx.rooted.is_leaf(v) {
                flag(r, v, "forwarded the topology from a leaf");
            }
            if r > w.round_bound() {
                flag(r, v, "transmitted after the round bound");
            }
        }
    }
    found
}

/// On a line, all transmitters of a round sit at positions of one residue mod 3.
pub fn check_mod3(transcript: &Transcript, tree: &Tree) -> Vec<String> {
    let Some(end) = (0..tree.n()).find(|&v| tree.degree(v) <= 1) else { return Vec::new() };
    let pos = tree.distances_from(end);
    let mut found = Vec::new();
    for (r, tx) in rounds_in(transcript, 1..=transcript.len()) {
        let residue = pos[tx[0]] % 3;
        if let Some(&v) = tx.iter().find(|&&v| pos[v] % 3 != residue) {
            found.push(format!("round {r}: node {v} is off the round's residue"));
        }
    }
    found
}
