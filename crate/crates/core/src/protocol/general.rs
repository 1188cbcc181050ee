//! Topology recognition for trees with `Δ ≥ 3` and diameter at least 4.
//!
//! Round layout, with `m` the core size, `h` the height and `E` the epoch
//! length:
//!
//! | rounds                         | activity                                   |
//! |--------------------------------|--------------------------------------------|
//! | `1 ..= m²`                     | root core gossips chunks of `Δ`            |
//! | `m²+1 ..= t₀ = m²+3h`          | `Δ` flood down, height up and back down    |
//! | `t₀+1 ..= t₀+m²`               | cores of all-light-children nodes gossip t |
//! | `t₀+m²+1 ..= t₁ = t₀+2m²`      | light subtrees gossip `z` and topology     |
//! | `t₁+1 ..= t₁+2hE`              | `h` epochs, deepest level first            |
//! | `t₁+2hE+1 ..`                  | root's tree and placement chain flood down |

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use super::round_robin::{RoundRobin, RrMsg};
use crate::radio::{Action, NodeOutput, NodeProgram, Round};
use crate::scheme::{derive_params, unchunk, MainLabel, MainScheme, SchemeParams};
use crate::tree::{CanonicalForm, NodeId, PlaceError, ShapeIndex, Tree};

/// Payload of a subtree report sent to the parent during an epoch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubtreeReport {
    pub label: MainLabel,
    pub tree: CanonicalForm,
    /// Sender's slot for heavy senders, 0 for light ones.
    pub slot: u64,
}

#[derive(Clone, Debug)]
pub struct Placement {
    pub index: Arc<ShapeIndex>,
    pub tree: Arc<Tree>,
    /// Subtree forms from the root down to the sender.
    pub chain: Vec<CanonicalForm>,
}

#[derive(Clone, Debug)]
pub enum MainMsg {
    Gossip(RrMsg),
    Down { delta: u64 },
    Up { h: usize, level: usize },
    Height { h: usize },
    Report(SubtreeReport),
    Final(Placement),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AggregateError {
    #[error("light class {class} is missing size chunk: {source}")]
    MissingChunk {
        class: CanonicalForm,
        #[source]
        source: crate::scheme::SchemeError,
    },
    #[error("light class {0} reports a zero group size")]
    ZeroGroup(CanonicalForm),
}

/// Rebuilds `T_v` from the reports of `v`'s children: `a` copies of every
/// light class (with `a` reassembled from the carriers' chunks) plus every
/// heavy child's tree as sent.
pub fn aggregate_children(received: &[SubtreeReport]) -> Result<CanonicalForm, AggregateError> {
    let mut kids: Vec<CanonicalForm> = Vec::new();
    let mut light: BTreeMap<&CanonicalForm, Vec<(usize, &crate::codec::BitString)>> = BTreeMap::new();
    for r in received {
        if r.label.marker(3) {
            kids.push(r.tree.clone());
        } else if let Some((i, c)) = &r.label.l4 {
            light.entry(&r.tree).or_default().push((*i, c));
        }
    }
    for (form, chunks) in light {
        let bits = unchunk(chunks).map_err(|source| AggregateError::MissingChunk { class: form.clone(), source })?;
        let a = bits.to_u64().unwrap_or(0);
        if a == 0 {
            return Err(AggregateError::ZeroGroup(form.clone()));
        }
        kids.extend(std::iter::repeat_n(form.clone(), a as usize));
    }
    Ok(CanonicalForm::from_children(&kids))
}

/// Walks down from the root of `index` following `chain`.
pub fn place_self(index: &ShapeIndex, chain: &[CanonicalForm]) -> Result<NodeId, PlaceError> {
    index.place(chain)
}

/// Values a node learned, each with the round it became known.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Learned {
    pub delta: Option<(u64, Round)>,
    pub level: Option<(usize, Round)>,
    pub height: Option<(usize, Round)>,
    pub slot: Option<u64>,
    pub z: Option<usize>,
    /// Own subtree and the round it was computed.
    pub subtree: Option<(CanonicalForm, Round)>,
}

pub struct MainProgram {
    label: MainLabel,
    m: usize,
    rr: Option<RoundRobin>,
    learned: Learned,
    params: Option<SchemeParams>,
    /// Queued one-shot transmission.
    pending: Option<(Round, MainMsg)>,
    up_done: bool,
    reports: Vec<SubtreeReport>,
    placement: Option<Placement>,
    out: Option<NodeOutput>,
    violations: Vec<String>,
}

impl MainProgram {
    pub fn new(label: MainLabel) -> Self {
        let m = label.m();
        let rr = label.l0.as_ref().filter(|_| label.marker(2)).map(|(i, c)| RoundRobin::new(*i, c.clone(), m, 1));
        let mut learned = Learned::default();
        if label.leaf && label.marker(3) {
            learned.subtree = Some((CanonicalForm::leaf(), 0));
        }
        MainProgram {
            label,
            m,
            rr,
            learned,
            params: None,
            pending: None,
            up_done: false,
            reports: Vec::new(),
            placement: None,
            out: None,
            violations: Vec::new(),
        }
    }

    pub fn for_scheme(scheme: &MainScheme) -> Vec<MainProgram> {
        scheme.labels.iter().cloned().map(MainProgram::new).collect()
    }

    pub fn learned(&self) -> &Learned {
        &self.learned
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    fn is_root(&self) -> bool {
        self.label.marker(0)
    }

    fn m2(&self) -> Round {
        (self.m * self.m) as Round
    }

    fn t0(&self) -> Option<Round> {
        self.learned.height.map(|(h, _)| self.m2() + 3 * h as Round)
    }

    fn t1(&self) -> Option<Round> {
        self.t0().map(|t| t + 2 * self.m2())
    }

    fn epoch_len(&self) -> Option<Round> {
        self.params.as_ref().map(|p| p.epoch_len)
    }

    /// First round of epoch `i` (1-based), in which level `h−i+1` reports.
    fn epoch_start(&self, i: usize) -> Option<Round> {
        Some(self.t1()? + (i as Round - 1) * 2 * self.epoch_len()? + 1)
    }

    fn final_start(&self) -> Option<Round> {
        let (h, _) = self.learned.height?;
        Some(self.t1()? + 2 * h as Round * self.epoch_len()? + 1)
    }

    fn level(&self) -> Option<usize> {
        self.learned.level.map(|(l, _)| l)
    }

    fn height(&self) -> Option<usize> {
        self.learned.height.map(|(h, _)| h)
    }

    fn set_delta(&mut self, delta: u64, round: Round) {
        if self.learned.delta.is_some() {
            return;
        }
        self.learned.delta = Some((delta, round));
        match derive_params(delta) {
            Ok(p) => self.params = Some(p),
            Err(e) => self.violations.push(format!("round {round}: {e}")),
        }
    }

    fn set_subtree(&mut self, form: CanonicalForm, round: Round) {
        if self.learned.subtree.is_none() {
            self.learned.subtree = Some((form, round));
        }
    }

    /// Round in which this node reports to its parent, if it reports at all.
    fn report_round(&self) -> Option<Round> {
        let l = self.level().filter(|&l| l >= 1)?;
        let h = self.height()?;
        let start = self.epoch_start(h - l + 1)?;
        if self.label.marker(3) {
            Some(start + self.learned.slot? - 1)
        } else {
            let (c, _) = self.label.l4.as_ref()?;
            let z = self.learned.z?;
            Some(start + self.epoch_len()? + ((z - 1) * self.m + c - 1) as Round)
        }
    }

    /// Round-robin windows after parameter learning.
    fn start_slot_gossip(&mut self, round: Round) {
        let Some(t0) = self.t0() else { return };
        let m2 = self.m2();
        if round == t0 + 1 {
            self.rr = self.label.l1.as_ref().map(|(i, c)| RoundRobin::new(*i, c.clone(), self.m, t0 + 1));
        } else if round == t0 + m2 + 1 {
            self.rr = self.label.l3.as_ref().map(|(i, c)| RoundRobin::new(*i, c.clone(), self.m, t0 + m2 + 1));
        }
    }

    fn finish_gossip(&mut self, round: Round) {
        let Some(rr) = self.rr.as_ref().filter(|rr| rr.end() == round) else { return };
        let chunks = || rr.known().iter().map(|(&i, c)| (i, c));
        let t0 = self.t0();
        if round == self.m2() {
            if self.is_root() {
                match unchunk(chunks()).map(|b| b.to_u64()) {
                    Ok(Some(d)) => self.set_delta(d, round),
                    _ => self.violations.push("root could not reassemble Δ".into()),
                }
            }
        } else if Some(round) == t0.map(|t| t + self.m2()) {
            if self.label.marker(3) && self.learned.slot.is_none() {
                match unchunk(chunks()).map(|b| b.to_u64()) {
                    Ok(Some(t)) => self.learned.slot = Some(t),
                    _ => self.violations.push("could not reassemble own slot".into()),
                }
            }
        } else if Some(round) == t0.map(|t| t + 2 * self.m2()) {
            let own = rr.id();
            let topo = rr.topology();
            if own == 1 && self.label.marker(4) && self.label.marker(6) {
                match unchunk(chunks()).map(|b| b.to_u64()) {
                    Ok(Some(z)) => self.learned.z = Some(z as usize),
                    _ => self.violations.push("could not reassemble own class index".into()),
                }
            }
            match topo {
                Some(rt) => {
                    let form = crate::tree::ahu(&rt, own - 1).expect("own id is in the group");
                    self.set_subtree(form, round);
                }
                None => self.violations.push("light subtree gossip gave no tree".into()),
            }
        }
        self.rr = None;
    }

    /// End of the children's epoch: compute own subtree and slot.
    fn aggregate(&mut self, round: Round) {
        if !self.label.marker(3) || self.learned.subtree.is_some() {
            return;
        }
        if self.learned.slot.is_none() && !self.is_root() {
            if let Some(r) = self.reports.iter().find(|r| r.label.l2) {
                self.learned.slot = Some(r.slot);
            }
        }
        let reports = std::mem::take(&mut self.reports);
        match aggregate_children(&reports) {
            Ok(form) => self.set_subtree(form, round),
            Err(e) => self.violations.push(format!("round {round}: {e}")),
        }
    }

    fn children_epoch_end(&self) -> Option<Round> {
        let l = self.level()?;
        let h = self.height()?;
        if l >= h {
            return None;
        }
        Some(self.epoch_start(h - l)? + 2 * self.epoch_len()? - 1)
    }

    fn report_message(&self) -> Option<MainMsg> {
        let tree = if self.label.marker(3) {
            self.learned.subtree.as_ref()?.0.clone()
        } else {
            self.params.as_ref()?.seq.get(self.learned.z?)?.clone()
        };
        let slot = if self.label.marker(3) { self.learned.slot? } else { 0 };
        Some(MainMsg::Report(SubtreeReport { label: self.label.clone(), tree, slot }))
    }

    fn settle(&mut self, placement: Placement, round: Round) {
        let Some((own, _)) = self.learned.subtree.clone() else {
            self.violations.push(format!("round {round}: own subtree unknown at placement"));
            return;
        };
        let mut chain = placement.chain.clone();
        if !self.is_root() {
            chain.push(own);
        }
        match place_self(&placement.index, &chain) {
            Ok(v) => {
                self.out = Some(NodeOutput { tree: placement.tree.clone(), node: v });
                self.placement = Some(Placement { chain, ..placement });
            }
            Err(e) => self.violations.push(format!("round {round}: {e}")),
        }
    }
}

impl NodeProgram for MainProgram {
    type Msg = MainMsg;

    fn decide(&mut self, round: Round) -> Action<MainMsg> {
        self.start_slot_gossip(round);
        if let Some(msg) = self.rr.as_ref().and_then(|rr| rr.decide(round)) {
            self.finish_gossip(round);
            return Action::Transmit(MainMsg::Gossip(msg));
        }
        if self.is_root() && round == self.m2() + 1 {
            if let Some((d, _)) = self.learned.delta {
                self.learned.level = Some((0, round));
                return Action::Transmit(MainMsg::Down { delta: d });
            }
        }
        if self.pending.as_ref().is_some_and(|(r, _)| *r == round) {
            return Action::Transmit(self.pending.take().unwrap().1);
        }
        if self.report_round() == Some(round) {
            if let Some(msg) = self.report_message() {
                return Action::Transmit(msg);
            }
            self.violations.push(format!("round {round}: report due but subtree or class unknown"));
        }
        if self.is_root() && self.final_start() == Some(round) {
            if let Some((form, _)) = self.learned.subtree.clone() {
                match ShapeIndex::from_form(&form) {
                    Ok(index) => {
                        let tree = Arc::new(index.tree().clone());
                        let p = Placement { index: Arc::new(index), tree, chain: vec![form] };
                        self.settle(p.clone(), round);
                        self.placement = None;
                        return Action::Transmit(MainMsg::Final(p));
                    }
                    Err(e) => self.violations.push(format!("round {round}: {e}")),
                }
            }
        }
        if let Some(p) = self.placement.take() {
            // forward once, in the round after placing
            if !self.label.leaf {
                return Action::Transmit(MainMsg::Final(p));
            }
        }
        Action::Listen
    }

    fn receive(&mut self, round: Round, msg: Option<&MainMsg>) {
        match msg {
            Some(MainMsg::Gossip(g)) => {
                if let Some(rr) = self.rr.as_mut() {
                    rr.receive(round, g);
                }
            }
            Some(MainMsg::Down { delta }) if self.learned.level.is_none() && !self.is_root() => {
                let level = (round - self.m2()) as usize;
                self.learned.level = Some((level, round));
                self.set_delta(*delta, round);
                if !self.label.leaf {
                    self.pending = Some((round + 1, MainMsg::Down { delta: *delta }));
                }
                if self.label.marker(1) {
                    self.learned.height = Some((level, round));
                    self.pending = Some((round + 1, MainMsg::Up { h: level, level }));
                    self.up_done = true;
                }
            }
            Some(MainMsg::Up { h, level }) if !self.up_done && self.level().is_some_and(|l| l + 1 == *level) => {
                self.up_done = true;
                if self.is_root() {
                    self.learned.height = Some((*h, round));
                    self.pending = Some((round + 1, MainMsg::Height { h: *h }));
                } else {
                    self.pending = Some((round + 1, MainMsg::Up { h: *h, level: *level - 1 }));
                }
            }
            Some(MainMsg::Height { h }) if self.learned.height.is_none() => {
                self.learned.height = Some((*h, round));
                if self.level().is_some_and(|l| l < *h) {
                    self.pending = Some((round + 1, MainMsg::Height { h: *h }));
                }
            }
            Some(MainMsg::Report(r)) => {
                let in_children_epoch = self
                    .children_epoch_end()
                    .is_some_and(|end| round + 2 * self.epoch_len().unwrap_or(0) > end && round <= end);
                if in_children_epoch {
                    self.reports.push(r.clone());
                }
            }
            Some(MainMsg::Final(p)) if self.out.is_none() && self.final_start().is_some_and(|s| round >= s) => {
                self.settle(p.clone(), round);
            }
            _ => {}
        }
        self.finish_gossip(round);
        if self.children_epoch_end() == Some(round) {
            self.aggregate(round);
        }
    }

    fn output(&self) -> Option<&NodeOutput> {
        self.out.as_ref()
    }

    fn next_wake(&self, after: Round) -> Round {
        // stay fully awake through gossip and parameter learning
        if self.rr.is_some() || self.t0().is_none() || self.placement.is_some() {
            return after;
        }
        let t0 = self.t0().unwrap();
        let m2 = self.m2();
        let root_final = self.final_start().filter(|_| self.is_root());
        [
            Some(t0 + 1),
            Some(t0 + m2 + 1),
            self.pending.as_ref().map(|(r, _)| *r),
            self.report_round(),
            self.children_epoch_end(),
            root_final,
        ]
        .into_iter()
        .flatten()
        .filter(|&r| r >= after)
        .min()
        .unwrap_or(Round::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::simulate;
    use crate::scheme::label_main;
    use crate::tree::placement_valid;

    fn run(tree: &Tree) -> (MainScheme, Vec<MainProgram>, crate::radio::SimOutcome) {
        let scheme = label_main(tree).unwrap();
        let mut progs = MainProgram::for_scheme(&scheme);
        let out = simulate(tree, &mut progs, 100_000).unwrap_or_else(|e| {
            let v: Vec<_> = progs.iter().flat_map(|p| p.violations().to_vec()).collect();
            panic!("{e}; violations: {v:?}")
        });
        (scheme, progs, out)
    }

    #[test]
    fn complete_binary_tree() {
        let t = Tree::new(7, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]).unwrap();
        let (scheme, progs, out) = run(&t);
        assert_eq!((scheme.params.m, scheme.params.q, scheme.params.epoch_len), (1, 0, 6));
        for (v, o) in out.outputs.iter().enumerate() {
            assert!(placement_valid(&t, v, &o.tree, o.node), "node {v}");
        }
        assert!(out.metrics.completion_round <= 36);
        assert!(progs.iter().all(|p| p.violations().is_empty()));
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_children(&[]).unwrap(), CanonicalForm::leaf());
        let light = |i: usize, c: &str| SubtreeReport {
            label: MainLabel { l4: Some((i, c.into())), ..Default::default() },
            tree: CanonicalForm::leaf(),
            slot: 0,
        };
        let star3 = aggregate_children(&[light(1, "11")]).unwrap();
        assert_eq!(star3.as_str(), "00101011");
        let mut heavy_label = MainLabel::default();
        heavy_label.markers[3] = true;
        let path5 = CanonicalForm::parse("0000011111").unwrap();
        let r = SubtreeReport { label: heavy_label, tree: path5, slot: 1 };
        assert_eq!(aggregate_children(&[r]).unwrap().as_str(), "000000111111");
        assert!(matches!(aggregate_children(&[light(2, "1")]), Err(AggregateError::MissingChunk { .. })));
    }
}
