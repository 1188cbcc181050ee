//! Constant-length labels for lines. The line is cut into segments whose
//! payload nodes spell out the line length and the segment number, one bit
//! per node. A forward wave collects the bits, the segment's last node decodes
//! them and a backward wave tells everyone. Each node transmits only in rounds
//! congruent to its position mod 3, so transmitters are never within distance 2.

use std::sync::Arc;

use crate::codec::{BitString, LabelKind, StructuredLabel};
use crate::radio::{Action, NodeOutput, NodeProgram, Round};
use crate::scheme::SchemeError;
use crate::tree::{floor_log2, NodeId, Tree};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineMode {
    /// `k ≤ 3`: the label holds `k` and the position outright.
    Tiny,
    /// One segment started at the first endpoint, closed by the other one.
    Single,
    /// Several complete segments, then a tail.
    Multi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LineParams {
    pub k: usize,
    pub seg_len: usize,
    pub n_seg: usize,
    pub mode: LineMode,
}

impl LineParams {
    pub fn new(k: usize) -> Self {
        if k <= 3 {
            return LineParams { k, seg_len: 0, n_seg: 0, mode: LineMode::Tiny };
        }
        let seg_len = segment_len(k);
        let n_seg = k / seg_len;
        let mode = if n_seg >= 2 { LineMode::Multi } else { LineMode::Single };
        LineParams { k, seg_len, n_seg, mode }
    }

    /// Payload nodes per segment; `binary(k)` has exactly this many bits.
    pub fn payload_len(&self) -> usize {
        self.seg_len - 2
    }
}

/// `3 + ⌊log k⌋`.
pub fn segment_len(k: usize) -> usize {
    3 + floor_log2(k as u64) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineType {
    /// Closes a segment (or the whole line) and decodes it.
    End = 0,
    /// Starts a segment.
    Start = 1,
    /// Carries one bit of `k` and one bit of the segment number.
    Payload = 2,
    Relay = 3,
}

impl LineType {
    fn from_bits(x: u64) -> Option<Self> {
        [LineType::End, LineType::Start, LineType::Payload, LineType::Relay].get(x as usize).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineLabel {
    Quad {
        kind: LineType,
        k_bit: bool,
        j_bit: bool,
        residue: u8,
    },
    /// `position` is 1-based.
    Tiny {
        k: u8,
        position: u8,
    },
}

impl LineLabel {
    pub fn to_structured(&self) -> StructuredLabel {
        let bit = |b: bool| BitString::from_bits(vec![b]);
        match *self {
            LineLabel::Quad { kind, k_bit, j_bit, residue } => StructuredLabel::new(
                LabelKind::Line,
                vec![
                    BitString::with_width(kind as u64, 2),
                    bit(k_bit),
                    bit(j_bit),
                    BitString::with_width(u64::from(residue), 2),
                ],
            ),
            LineLabel::Tiny { k, position } => StructuredLabel::new(
                LabelKind::LineTiny,
                vec![BitString::with_width(u64::from(k), 2), BitString::with_width(u64::from(position) - 1, 2)],
            ),
        }
    }

    pub fn from_structured(l: &StructuredLabel) -> Result<Self, SchemeError> {
        let bad = || SchemeError::BadLabel("not a line label");
        let fixed = |b: &BitString, w: usize| if b.len() == w { b.to_u64().ok_or_else(bad) } else { Err(bad()) };
        match (l.kind, l.fields.as_slice()) {
            (LabelKind::Line, [a, b, g, d]) => {
                let residue = fixed(d, 2)? as u8;
                if residue > 2 {
                    return Err(bad());
                }
                Ok(LineLabel::Quad {
                    kind: LineType::from_bits(fixed(a, 2)?).ok_or_else(bad)?,
                    k_bit: fixed(b, 1)? == 1,
                    j_bit: fixed(g, 1)? == 1,
                    residue,
                })
            }
            (LabelKind::LineTiny, [k, p]) => {
                let (k, p) = (fixed(k, 2)? as u8, fixed(p, 2)? as u8 + 1);
                if p > k + 1 {
                    return Err(bad());
                }
                Ok(LineLabel::Tiny { k, position: p })
            }
            _ => Err(bad()),
        }
    }

    pub fn residue(&self) -> Option<u8> {
        match *self {
            LineLabel::Quad { residue, .. } => Some(residue),
            LineLabel::Tiny { .. } => None,
        }
    }
}

/// Labels for positions `1..=k+1` of a line with `k` edges.
pub fn label_line(k: usize) -> Vec<LineLabel> {
    let p = LineParams::new(k);
    if p.mode == LineMode::Tiny {
        return (1..=k + 1).map(|i| LineLabel::Tiny { k: k as u8, position: i as u8 }).collect();
    }
    let l = p.seg_len;
    // number of segments that have a start node
    let starts = if p.mode == LineMode::Multi { p.n_seg - 1 } else { 1 };
    let mut kinds = vec![(LineType::Relay, false, false); k + 2];
    let k_bits = BitString::binary(k as u64);
    for j in 0..starts {
        let j_bits = BitString::with_width(j as u64, p.payload_len());
        for i in 1..=p.payload_len() {
            kinds[j * l + 1 + i] = (LineType::Payload, k_bits.bits()[i - 1], j_bits.bits()[i - 1]);
        }
        kinds[j * l + 1] = (LineType::Start, false, false);
    }
    if p.mode == LineMode::Multi {
        for j in 1..p.n_seg {
            kinds[j * l] = (LineType::End, false, false);
        }
    }
    kinds[k + 1] = (LineType::End, false, false);
    (1..=k + 1)
        .map(|i| {
            let (kind, k_bit, j_bit) = kinds[i];
            LineLabel::Quad { kind, k_bit, j_bit, residue: (i % 3) as u8 }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct LineScheme {
    pub params: LineParams,
    /// `order[i]` is the node at position `i + 1`.
    pub order: Vec<NodeId>,
    pub labels: Vec<LineLabel>,
}

impl LineScheme {
    /// 1-based position of every node.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (i, &v) in self.order.iter().enumerate() {
            pos[v] = i + 1;
        }
        pos
    }
}

/// Labels a line, counting positions from the endpoint with the smaller id.
pub fn label_line_tree(tree: &Tree) -> Result<LineScheme, SchemeError> {
    let delta = tree.max_degree() as u64;
    if delta > 2 {
        return Err(SchemeError::WrongShape { expected: "a line", delta, diameter: tree.diameter() });
    }
    let order = match (0..tree.n()).find(|&v| tree.degree(v) <= 1) {
        Some(first) if tree.n() > 1 => {
            let last = (0..tree.n()).rev().find(|&v| tree.degree(v) == 1).expect("a line has two ends");
            tree.path_between(first, last)
        }
        _ => vec![0],
    };
    let k = order.len() - 1;
    let by_pos = label_line(k);
    let mut labels = by_pos.clone();
    for (i, &v) in order.iter().enumerate() {
        labels[v] = by_pos[i];
    }
    Ok(LineScheme { params: LineParams::new(k), order, labels })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LineMsg {
    /// Bits of `k` and of the segment number gathered so far.
    Forward { k_bits: BitString, j_bits: BitString },
    /// Decoded line length and segment number, with the sender's residue.
    Back { k: usize, j: usize, residue: u8 },
    /// Past the last complete segment: the sender's position.
    Tail { k: usize, position: usize },
}

/// Smallest round `≥ after` (and `≥ 1`) congruent to `residue` mod 3.
pub fn next_dedicated(after: Round, residue: u8) -> Round {
    let after = after.max(1);
    after + (u64::from(residue) + 3 - after % 3) % 3
}

pub struct LineProgram {
    label: LineLabel,
    first_forward: Option<Round>,
    pending: Option<(Round, LineMsg)>,
    out: Option<NodeOutput>,
    violations: Vec<String>,
}

impl LineProgram {
    pub fn new(label: LineLabel) -> Self {
        let mut p = LineProgram { label, first_forward: None, pending: None, out: None, violations: Vec::new() };
        match label {
            LineLabel::Tiny { k, position } => p.place(k as usize, position as usize),
            LineLabel::Quad { kind: LineType::Start, residue, .. } => {
                p.pending = Some((
                    next_dedicated(1, residue),
                    LineMsg::Forward { k_bits: BitString::new(), j_bits: BitString::new() },
                ))
            }
            LineLabel::Quad { .. } => {}
        }
        p
    }

    pub fn for_scheme(s: &LineScheme) -> Vec<Self> {
        s.labels.iter().copied().map(LineProgram::new).collect()
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    fn place(&mut self, k: usize, position: usize) {
        if self.out.is_none() {
            self.out = Some(NodeOutput { tree: Arc::new(Tree::path(k + 1)), node: position - 1 });
        }
    }

    /// Position of a node that first heard the forward wave at `heard`.
    fn segment_position(k: usize, j: usize, heard: Round) -> usize {
        let l = segment_len(k);
        let start = next_dedicated(1, ((j * l + 1) % 3) as u8);
        j * l + (heard - start) as usize + 2
    }
}

impl NodeProgram for LineProgram {
    type Msg = LineMsg;

    fn decide(&mut self, round: Round) -> Action<LineMsg> {
        match self.pending.take() {
            Some((r, msg)) if r == round => Action::Transmit(msg),
            other => {
                self.pending = other;
                Action::Listen
            }
        }
    }

    fn receive(&mut self, round: Round, msg: Option<&LineMsg>) {
        let (Some(msg), LineLabel::Quad { kind, k_bit, j_bit, residue }) = (msg, self.label) else { return };
        let after = next_dedicated(round + 1, residue);
        let from_right = |e: u8| e == (residue + 1) % 3;
        match (kind, msg) {
            (LineType::Payload | LineType::Relay, LineMsg::Forward { k_bits, j_bits })
                if self.first_forward.is_none() =>
            {
                self.first_forward = Some(round);
                let (mut k_bits, mut j_bits) = (k_bits.clone(), j_bits.clone());
                if kind == LineType::Payload {
                    k_bits.push(k_bit);
                    j_bits.push(j_bit);
                }
                self.pending = Some((after, LineMsg::Forward { k_bits, j_bits }));
            }
            (LineType::End, LineMsg::Forward { k_bits, j_bits })
                if self.first_forward.is_none() && !k_bits.is_empty() =>
            {
                self.first_forward = Some(round);
                match (k_bits.to_u64(), j_bits.to_u64()) {
                    (Some(k), Some(j)) if k >= 1 => {
                        let (k, j) = (k as usize, j as usize);
                        self.place(k, Self::segment_position(k, j, round));
                        self.pending = Some((after, LineMsg::Back { k, j, residue }));
                    }
                    _ => self.violations.push(format!("round {round}: undecodable segment bits")),
                }
            }
            (LineType::Payload | LineType::Relay, &LineMsg::Back { k, j, residue: e }) if self.out.is_none() => {
                match self.first_forward {
                    Some(heard) if from_right(e) => {
                        self.place(k, Self::segment_position(k, j, heard));
                        self.pending = Some((after, LineMsg::Back { k, j, residue }));
                    }
                    None if kind == LineType::Relay && !from_right(e) => {
                        // first node past the last complete segment
                        let position = (j + 1) * segment_len(k) + 1;
                        self.place(k, position);
                        self.pending = Some((after, LineMsg::Tail { k, position }));
                    }
                    _ => {}
                }
            }
            (LineType::Start, &LineMsg::Back { k, j, residue: e }) if from_right(e) => {
                self.place(k, j * segment_len(k) + 1);
            }
            (LineType::Relay | LineType::End, &LineMsg::Tail { k, position })
                if self.out.is_none() && self.first_forward.is_none() =>
            {
                self.place(k, position + 1);
                if kind == LineType::Relay {
                    self.pending = Some((after, LineMsg::Tail { k, position: position + 1 }));
                }
            }
            _ => {}
        }
    }

    fn output(&self) -> Option<&NodeOutput> {
        self.out.as_ref()
    }

    fn next_wake(&self, _after: Round) -> Round {
        self.pending.as_ref().map_or(Round::MAX, |(r, _)| *r)
    }
}
