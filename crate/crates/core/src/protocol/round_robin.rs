//! Gossip within a small connected group over `m` segments of `m` rounds.
//!
//! Member `i` transmits in the `i`-th round of every segment, so at most one
//! member transmits per round and a reception in slot `j` proves adjacency to
//! member `j`. Each segment spreads knowledge one more hop, and a group of at
//! most `m` nodes has diameter below `m`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::codec::BitString;
use crate::radio::{Action, NodeOutput, NodeProgram, Round};
use crate::tree::{NodeId, RootedTree, Tree};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RrMsg {
    pub sender: usize,
    pub known: Vec<(usize, BitString)>,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct RoundRobin {
    id: usize,
    m: usize,
    /// First round of the `m²`-round window.
    start: Round,
    known: BTreeMap<usize, BitString>,
    edges: BTreeSet<(usize, usize)>,
}

impl RoundRobin {
    /// `id` is 1-based and at most `m`.
    pub fn new(id: usize, payload: BitString, m: usize, start: Round) -> Self {
        assert!(id >= 1 && id <= m, "member id {id} outside 1..={m}");
        RoundRobin { id, m, start, known: BTreeMap::from([(id, payload)]), edges: BTreeSet::new() }
    }

    pub fn window_len(&self) -> Round {
        (self.m * self.m) as Round
    }

    /// Last round of the window.
    pub fn end(&self) -> Round {
        self.start + self.window_len() - 1
    }

    pub fn in_window(&self, round: Round) -> bool {
        round >= self.start && round <= self.end()
    }

    pub fn decide(&self, round: Round) -> Option<RrMsg> {
        if !self.in_window(round) || (round - self.start) % self.m as Round != (self.id - 1) as Round {
            return None;
        }
        Some(RrMsg {
            sender: self.id,
            known: self.known.iter().map(|(&i, p)| (i, p.clone())).collect(),
            edges: self.edges.iter().copied().collect(),
        })
    }

    pub fn receive(&mut self, round: Round, msg: &RrMsg) {
        if !self.in_window(round) || msg.sender == self.id {
            return;
        }
        let slot = (round - self.start) % self.m as Round + 1;
        if slot as usize != msg.sender {
            return;
        }
        self.edges.insert((self.id.min(msg.sender), self.id.max(msg.sender)));
        for (i, p) in &msg.known {
            self.known.entry(*i).or_insert_with(|| p.clone());
        }
        self.edges.extend(msg.edges.iter().copied());
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn known(&self) -> &BTreeMap<usize, BitString> {
        &self.known
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    /// The learned group as a tree over node ids `0..p` (member id − 1),
    /// rooted at member 1. `None` if the learned edges do not form a tree
    /// over ids `1..=p`.
    pub fn topology(&self) -> Option<RootedTree> {
        let p = self.known.len();
        if self.known.keys().copied().ne(1..=p) {
            return None;
        }
        let edges = self.edges.iter().map(|&(a, b)| (a - 1, b - 1));
        let tree = Tree::new(p, edges).ok()?;
        RootedTree::new(tree, 0).ok()
    }
}

/// Standalone program: members run the gossip in rounds `1..=m²`,
/// non-members stay silent. Everyone outputs a placeholder once the window
/// closes so the engine terminates.
pub struct RoundRobinProgram {
    pub rr: Option<RoundRobin>,
    me: NodeId,
    end: Round,
    out: Option<NodeOutput>,
    placeholder: Arc<Tree>,
}

impl RoundRobinProgram {
    /// `ids[v]` is `Some(member id)` for members.
    pub fn build(tree: &Tree, ids: &[Option<usize>], m: usize) -> Vec<RoundRobinProgram> {
        let placeholder = Arc::new(tree.clone());
        ids.iter()
            .enumerate()
            .map(|(v, id)| RoundRobinProgram {
                rr: id.map(|i| RoundRobin::new(i, BitString::binary(i as u64), m, 1)),
                me: v,
                end: (m * m) as Round,
                out: None,
                placeholder: placeholder.clone(),
            })
            .collect()
    }
}

impl NodeProgram for RoundRobinProgram {
    type Msg = RrMsg;

    fn decide(&mut self, round: Round) -> Action<RrMsg> {
        let act = match self.rr.as_ref().and_then(|rr| rr.decide(round)) {
            Some(msg) => Action::Transmit(msg),
            None => Action::Listen,
        };
        if round >= self.end {
            self.out = Some(NodeOutput { tree: self.placeholder.clone(), node: self.me });
        }
        act
    }

    fn receive(&mut self, round: Round, msg: Option<&RrMsg>) {
        if let (Some(rr), Some(msg)) = (self.rr.as_mut(), msg) {
            rr.receive(round, msg);
        }
    }

    fn output(&self) -> Option<&NodeOutput> {
        self.out.as_ref()
    }
}
