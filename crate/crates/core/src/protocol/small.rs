//! Diameter-3 trees and stars. A few leaves spell out a child count in short
//! chunks, one chunk per round, and the node that decodes it broadcasts the
//! whole topology.

use std::sync::Arc;

use crate::codec::{BitString, LabelKind, StructuredLabel};
use crate::radio::{Action, NodeOutput, NodeProgram, Round};
use crate::scheme::{chunk, unchunk, SchemeError};
use crate::tree::{floor_log2, Center, NodeId, Tree};

/// `max(1, ⌊log log Δ⌋)`.
pub fn chunk_len(delta: u64) -> usize {
    if delta < 4 {
        return 1;
    }
    (floor_log2(u64::from(floor_log2(delta))) as usize).max(1)
}

/// Number of chunks needed for `binary(x)`.
pub fn carrier_count(x: u64, c: usize) -> usize {
    (floor_log2(x) as usize + 1).div_ceil(c)
}

fn bad(what: &'static str) -> SchemeError {
    SchemeError::BadLabel(what)
}

fn read_count(b: &BitString) -> Result<usize, SchemeError> {
    match b.to_u64() {
        Some(x) if x > 0 && b.bits().first() == Some(&true) => Ok(x as usize),
        _ => Err(bad("expected a positive binary integer")),
    }
}

fn flag(b: bool) -> BitString {
    BitString::from_bits(vec![b])
}

fn read_flag(b: &BitString) -> Result<bool, SchemeError> {
    match b.bits() {
        [x] => Ok(*x),
        _ => Err(bad("flag must be one bit")),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum D3Label {
    Root,
    /// `p` is the number of carriers on the root's side.
    Hub {
        p: usize,
    },
    Leaf {
        last: bool,
        index: usize,
        chunk: BitString,
    },
    LeafNull,
}

impl D3Label {
    pub fn to_structured(&self) -> StructuredLabel {
        match self {
            D3Label::Root => StructuredLabel::new(LabelKind::RootD3, vec![]),
            D3Label::Hub { p } => StructuredLabel::new(LabelKind::HubD3, vec![BitString::binary(*p as u64)]),
            D3Label::Leaf { last, index, chunk } => StructuredLabel::new(
                LabelKind::LeafD3,
                vec![flag(*last), BitString::binary(*index as u64), chunk.clone()],
            ),
            D3Label::LeafNull => StructuredLabel::new(LabelKind::LeafD3Null, vec![]),
        }
    }

    pub fn from_structured(l: &StructuredLabel) -> Result<Self, SchemeError> {
        Ok(match (l.kind, l.fields.as_slice()) {
            (LabelKind::RootD3, []) => D3Label::Root,
            (LabelKind::HubD3, [p]) => D3Label::Hub { p: read_count(p)? },
            (LabelKind::LeafD3, [last, i, c]) => {
                if c.is_empty() {
                    return Err(bad("empty chunk"));
                }
                D3Label::Leaf { last: read_flag(last)?, index: read_count(i)?, chunk: c.clone() }
            }
            (LabelKind::LeafD3Null, []) => D3Label::LeafNull,
            _ => return Err(bad("not a diameter-3 label")),
        })
    }
}

#[derive(Clone, Debug)]
pub struct D3Scheme {
    pub root: NodeId,
    pub hub: NodeId,
    pub chunk_len: usize,
    pub root_leaves: usize,
    pub hub_leaves: usize,
    /// Carrier counts on the root's and the hub's side.
    pub p: usize,
    pub q: usize,
    pub labels: Vec<D3Label>,
}

fn assign_carriers(labels: &mut [D3Label], leaves: &[NodeId], c: usize) -> Result<usize, SchemeError> {
    let chunks = chunk(&BitString::binary(leaves.len() as u64), c)?;
    let count = chunks.len();
    for (&u, (index, part)) in leaves.iter().zip(chunks) {
        labels[u] = D3Label::Leaf { last: index == count, index, chunk: part };
    }
    Ok(count)
}

/// Labels a tree of diameter 3. The root is the smaller endpoint of the
/// central edge and the hub is the other one.
pub fn label_d3(tree: &Tree) -> Result<D3Scheme, SchemeError> {
    label_d3_in_class(tree, tree.max_degree() as u64)
}

/// As `label_d3`, with chunk length taken from a class bound `delta` at least
/// the tree's maximum degree.
pub fn label_d3_in_class(tree: &Tree, delta: u64) -> Result<D3Scheme, SchemeError> {
    if (tree.max_degree() as u64) > delta {
        return Err(SchemeError::TooManyLeaves { leaves: tree.max_degree(), delta });
    }
    let diameter = tree.diameter();
    let Center::Edge(x, y) = tree.center() else {
        return Err(SchemeError::WrongShape { expected: "diameter 3", delta, diameter });
    };
    if diameter != 3 {
        return Err(SchemeError::WrongShape { expected: "diameter 3", delta, diameter });
    }
    if delta < 3 {
        return Err(SchemeError::DeltaTooSmall(delta));
    }
    let (root, hub) = (x.min(y), x.max(y));
    let c = chunk_len(delta);
    let side = |v: NodeId, other: NodeId| -> Vec<NodeId> {
        let mut s: Vec<NodeId> = tree.neighbors(v).iter().copied().filter(|&u| u != other).collect();
        s.sort_unstable();
        s
    };
    let (root_side, hub_side) = (side(root, hub), side(hub, root));
    let mut labels = vec![D3Label::LeafNull; tree.n()];
    let p = assign_carriers(&mut labels, &root_side, c)?;
    let q = assign_carriers(&mut labels, &hub_side, c)?;
    labels[root] = D3Label::Root;
    labels[hub] = D3Label::Hub { p };
    Ok(D3Scheme { root, hub, chunk_len: c, root_leaves: root_side.len(), hub_leaves: hub_side.len(), p, q, labels })
}

/// Node 0 is the root, node 1 the hub, then the hub's `y1` leaves, then the
/// root's `y2` leaves.
pub fn d3_tree(y1: usize, y2: usize) -> Tree {
    let hub_leaves = (2..2 + y1).map(|v| (1, v));
    let root_leaves = (2 + y1..2 + y1 + y2).map(|v| (0, v));
    Tree::new(2 + y1 + y2, std::iter::once((0, 1)).chain(hub_leaves).chain(root_leaves)).expect("two joined stars")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum D3Msg {
    Carrier { last: bool, index: usize, chunk: BitString },
    Report { p: usize, y1: u64 },
    Topology { tree: Arc<Tree>, from_hub: bool },
}

/// Collects carrier chunks until the one flagged last arrives.
#[derive(Clone, Debug, Default)]
struct Collector {
    chunks: Vec<(usize, BitString)>,
    done: Option<(u64, Round)>,
}

impl Collector {
    fn take(&mut self, round: Round, index: usize, part: &BitString, last: bool) -> Result<(), SchemeError> {
        if self.done.is_some() {
            return Ok(());
        }
        self.chunks.push((index, part.clone()));
        if last {
            let s = unchunk(self.chunks.iter().map(|(i, c)| (*i, c)))?;
            let value = s.to_u64().ok_or(bad("count too large"))?;
            self.done = Some((value, round));
        }
        Ok(())
    }
}

pub struct D3Program {
    label: D3Label,
    collected: Collector,
    /// Root only: the hub's report.
    hub_count: Option<u64>,
    topology: Option<Arc<Tree>>,
    sent_topology: bool,
    out: Option<NodeOutput>,
    violations: Vec<String>,
}

impl D3Program {
    pub fn new(label: D3Label) -> Self {
        D3Program {
            label,
            collected: Collector::default(),
            hub_count: None,
            topology: None,
            sent_topology: false,
            out: None,
            violations: Vec::new(),
        }
    }

    pub fn for_scheme(s: &D3Scheme) -> Vec<Self> {
        s.labels.iter().cloned().map(D3Program::new).collect()
    }

    /// Root only: the leaf count the hub reported.
    pub fn hub_count(&self) -> Option<u64> {
        self.hub_count
    }

    /// Value decoded from this node's carriers and the round of the last one.
    pub fn decoded(&self) -> Option<(u64, Round)> {
        self.collected.done
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    fn place(&mut self, tree: Arc<Tree>, node: NodeId) {
        if self.out.is_none() {
            self.out = Some(NodeOutput { tree, node });
        }
    }
}

impl NodeProgram for D3Program {
    type Msg = D3Msg;

    fn decide(&mut self, round: Round) -> Action<D3Msg> {
        match &self.label {
            D3Label::Leaf { last, index, chunk } if round == *index as Round => {
                Action::Transmit(D3Msg::Carrier { last: *last, index: *index, chunk: chunk.clone() })
            }
            D3Label::Hub { p } => {
                if let (Some(tree), false) = (&self.topology, self.sent_topology) {
                    self.sent_topology = true;
                    return Action::Transmit(D3Msg::Topology { tree: tree.clone(), from_hub: true });
                }
                match self.collected.done {
                    Some((y1, x)) if round == (*p as Round).max(x) + 1 => Action::Transmit(D3Msg::Report { p: *p, y1 }),
                    _ => Action::Listen,
                }
            }
            D3Label::Root => match (&self.topology, self.sent_topology) {
                (Some(tree), false) => {
                    self.sent_topology = true;
                    Action::Transmit(D3Msg::Topology { tree: tree.clone(), from_hub: false })
                }
                _ => Action::Listen,
            },
            _ => Action::Listen,
        }
    }

    fn receive(&mut self, round: Round, msg: Option<&D3Msg>) {
        let Some(msg) = msg else { return };
        let is_center = matches!(self.label, D3Label::Root | D3Label::Hub { .. });
        match msg {
            D3Msg::Carrier { last, index, chunk } if is_center => {
                if let Err(e) = self.collected.take(round, *index, chunk, *last) {
                    self.violations.push(format!("round {round}: {e}"));
                }
            }
            D3Msg::Report { y1, .. } if self.label == D3Label::Root && self.topology.is_none() => {
                self.hub_count = Some(*y1);
                match self.collected.done {
                    Some((y2, _)) => {
                        let tree = Arc::new(d3_tree(*y1 as usize, y2 as usize));
                        self.topology = Some(tree.clone());
                        self.place(tree, 0);
                    }
                    None => self.violations.push(format!("round {round}: hub report before own count")),
                }
            }
            D3Msg::Topology { tree, from_hub } => match self.label {
                D3Label::Hub { .. } if self.topology.is_none() => {
                    self.topology = Some(tree.clone());
                    self.place(tree.clone(), 1);
                }
                D3Label::Leaf { .. } | D3Label::LeafNull => {
                    // first leaf of whichever center we heard
                    let node = if *from_hub { 2 } else { 1 + tree.degree(1) };
                    self.place(tree.clone(), node);
                }
                _ => {}
            },
            _ => {}
        }
    }

    fn output(&self) -> Option<&NodeOutput> {
        self.out.as_ref()
    }

    fn next_wake(&self, after: Round) -> Round {
        match &self.label {
            D3Label::Leaf { index, .. } if after <= *index as Round => *index as Round,
            D3Label::Leaf { .. } | D3Label::LeafNull => Round::MAX,
            _ => after,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StarLabel {
    /// `p` is the number of carriers.
    Center {
        p: usize,
    },
    Leaf {
        index: usize,
        chunk: BitString,
    },
    LeafNull,
}

impl StarLabel {
    pub fn to_structured(&self) -> StructuredLabel {
        match self {
            StarLabel::Center { p } => StructuredLabel::new(LabelKind::StarCenter, vec![BitString::binary(*p as u64)]),
            StarLabel::Leaf { index, chunk } => {
                StructuredLabel::new(LabelKind::StarLeaf, vec![BitString::binary(*index as u64), chunk.clone()])
            }
            StarLabel::LeafNull => StructuredLabel::new(LabelKind::StarLeafNull, vec![]),
        }
    }

    pub fn from_structured(l: &StructuredLabel) -> Result<Self, SchemeError> {
        Ok(match (l.kind, l.fields.as_slice()) {
            (LabelKind::StarCenter, [p]) => StarLabel::Center { p: read_count(p)? },
            (LabelKind::StarLeaf, [i, c]) if !c.is_empty() => {
                StarLabel::Leaf { index: read_count(i)?, chunk: c.clone() }
            }
            (LabelKind::StarLeafNull, []) => StarLabel::LeafNull,
            _ => return Err(bad("not a star label")),
        })
    }
}

/// Labels for `Tree::star(k)` (center 0) in the class of stars of maximum
/// degree at most `delta`.
pub fn label_star(delta: u64, k: usize) -> Result<Vec<StarLabel>, SchemeError> {
    if k == 0 {
        return Err(SchemeError::WrongShape { expected: "a star with at least one leaf", delta, diameter: 0 });
    }
    if k as u64 > delta {
        return Err(SchemeError::TooManyLeaves { leaves: k, delta });
    }
    let chunks = chunk(&BitString::binary(k as u64), chunk_len(delta))?;
    let mut labels = vec![StarLabel::Center { p: chunks.len() }];
    labels.extend(chunks.into_iter().map(|(index, chunk)| StarLabel::Leaf { index, chunk }));
    labels.resize(k + 1, StarLabel::LeafNull);
    Ok(labels)
}

#[derive(Clone, Debug)]
pub struct StarScheme {
    pub center: NodeId,
    pub delta: u64,
    pub p: usize,
    pub labels: Vec<StarLabel>,
}

/// Labels an arbitrary star; leaves are taken in ascending id order.
pub fn label_star_tree(tree: &Tree, delta: u64) -> Result<StarScheme, SchemeError> {
    let diameter = tree.diameter();
    let center = match tree.center() {
        Center::Node(c) if diameter == 2 => c,
        Center::Edge(a, b) if diameter == 1 => a.min(b),
        _ => {
            let d = tree.max_degree() as u64;
            return Err(SchemeError::WrongShape { expected: "a star", delta: d, diameter });
        }
    };
    let star_labels = label_star(delta, tree.n() - 1)?;
    let mut leaves: Vec<NodeId> = tree.neighbors(center).to_vec();
    leaves.sort_unstable();
    let mut labels = vec![StarLabel::LeafNull; tree.n()];
    labels[center] = star_labels[0].clone();
    for (u, l) in leaves.into_iter().zip(star_labels.into_iter().skip(1)) {
        labels[u] = l;
    }
    let p = match labels[center] {
        StarLabel::Center { p } => p,
        _ => unreachable!("center label"),
    };
    Ok(StarScheme { center, delta, p, labels })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StarMsg {
    Carrier { index: usize, chunk: BitString },
    Count { tree: Arc<Tree> },
}

pub struct StarProgram {
    label: StarLabel,
    chunks: Vec<(usize, BitString)>,
    topology: Option<Arc<Tree>>,
    sent: bool,
    out: Option<NodeOutput>,
    violations: Vec<String>,
}

impl StarProgram {
    pub fn new(label: StarLabel) -> Self {
        StarProgram { label, chunks: Vec::new(), topology: None, sent: false, out: None, violations: Vec::new() }
    }

    pub fn for_scheme(s: &StarScheme) -> Vec<Self> {
        s.labels.iter().cloned().map(StarProgram::new).collect()
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }
}

impl NodeProgram for StarProgram {
    type Msg = StarMsg;

    fn decide(&mut self, round: Round) -> Action<StarMsg> {
        match &self.label {
            StarLabel::Leaf { index, chunk } if round == *index as Round => {
                Action::Transmit(StarMsg::Carrier { index: *index, chunk: chunk.clone() })
            }
            StarLabel::Center { .. } => match (&self.topology, self.sent) {
                (Some(tree), false) => {
                    self.sent = true;
                    Action::Transmit(StarMsg::Count { tree: tree.clone() })
                }
                _ => Action::Listen,
            },
            _ => Action::Listen,
        }
    }

    fn receive(&mut self, round: Round, msg: Option<&StarMsg>) {
        match (&self.label, msg) {
            (StarLabel::Center { p }, Some(StarMsg::Carrier { index, chunk })) if self.topology.is_none() => {
                self.chunks.push((*index, chunk.clone()));
                if self.chunks.len() == *p {
                    match unchunk(self.chunks.iter().map(|(i, c)| (*i, c))).map(|s| s.to_u64()) {
                        Ok(Some(k)) => {
                            let tree = Arc::new(Tree::star(k as usize));
                            self.topology = Some(tree.clone());
                            self.out = Some(NodeOutput { tree, node: 0 });
                        }
                        Ok(None) => self.violations.push(format!("round {round}: count too large")),
                        Err(e) => self.violations.push(format!("round {round}: {e}")),
                    }
                }
            }
            (StarLabel::Leaf { .. } | StarLabel::LeafNull, Some(StarMsg::Count { tree })) if self.out.is_none() => {
                self.out = Some(NodeOutput { tree: tree.clone(), node: 1 });
            }
            _ => {}
        }
    }

    fn output(&self) -> Option<&NodeOutput> {
        self.out.as_ref()
    }

    fn next_wake(&self, after: Round) -> Round {
        match &self.label {
            StarLabel::Leaf { index, .. } if after <= *index as Round => *index as Round,
            StarLabel::Leaf { .. } | StarLabel::LeafNull => Round::MAX,
            StarLabel::Center { .. } => after,
        }
    }
}
