//! Synchronous radio rounds without collision detection.
//!
//! Each round runs in two phases: every node decides to transmit or listen,
//! then every listener with exactly one transmitting neighbor receives that
//! neighbor's payload. Transmitters never receive.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use thiserror::Error;

use crate::tree::{floor_log2, NodeId, Tree};

pub type Round = u64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action<M> {
    Transmit(M),
    Listen,
}

/// What a node finally claims: a copy of the network and its own place in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeOutput {
    pub tree: Arc<Tree>,
    pub node: NodeId,
}

/// Per-node state machine. `decide` for a round is always called before any
/// delivery of that round, and `receive` only for rounds in which the node
/// listened. Once `output` returns `Some` it must never change.
///
/// Nodes that have output keep being driven, so a node may output and still
/// forward a message afterwards.
pub trait NodeProgram {
    type Msg;

    fn decide(&mut self, round: Round) -> Action<Self::Msg>;
    fn receive(&mut self, round: Round, msg: Option<&Self::Msg>);
    fn output(&self) -> Option<&NodeOutput>;

    /// Earliest round `≥ after` in which this node may transmit or needs a
    /// `receive` call without a message. Until then the engine skips both
    /// hooks unless a message is delivered to the node. `Round::MAX` means
    /// "only wake me for messages".
    fn next_wake(&self, after: Round) -> Round {
        after
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundRecord {
    /// Ascending.
    pub transmitters: Vec<NodeId>,
    /// `(receiver, transmitter)`, ascending by receiver.
    pub deliveries: Vec<(NodeId, NodeId)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    /// `rounds[i]` describes round `i + 1`.
    pub rounds: Vec<RoundRecord>,
    pub output_round: Vec<Option<Round>>,
}

impl Transcript {
    pub fn round(&self, r: Round) -> Option<&RoundRecord> {
        r.checked_sub(1).and_then(|i| self.rounds.get(i as usize))
    }

    pub fn len(&self) -> Round {
        self.rounds.len() as Round
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Rounds (1-based) in which `v` transmitted.
    pub fn transmit_rounds(&self, v: NodeId) -> impl Iterator<Item = Round> + '_ {
        self.rounds
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.transmitters.binary_search(&v).is_ok())
            .map(|(i, _)| i as Round + 1)
    }

    pub fn delivered(&self, r: Round, rx: NodeId, tx: NodeId) -> bool {
        self.round(r).is_some_and(|rec| rec.deliveries.binary_search(&(rx, tx)).is_ok())
    }

    pub fn parse(text: &str) -> Result<Transcript, TranscriptParseError> {
        let mut t = Transcript::default();
        let mut outs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| TranscriptParseError { line: i + 1, msg: msg.to_string() };
            if let Some(rest) = line.strip_prefix("OUT ") {
                let mut it = rest.split_whitespace();
                let (Some(v), Some(r), None) = (it.next(), it.next(), it.next()) else {
                    return Err(err("expected `OUT <node> <round>`"));
                };
                let v: NodeId = v.parse().map_err(|_| err("bad node id"))?;
                let r: Round = r.parse().map_err(|_| err("bad round"))?;
                outs.push((v, r));
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(r), Some(tx), Some(dl), None) = (it.next(), it.next(), it.next(), it.next()) else {
                return Err(err("expected `R<round> T:<ids> D:<pairs>`"));
            };
            let r: Round = r.strip_prefix('R').and_then(|x| x.parse().ok()).ok_or_else(|| err("bad round tag"))?;
            if r != t.len() + 1 {
                return Err(err("rounds must be consecutive from 1"));
            }
            let tx = tx.strip_prefix("T:").ok_or_else(|| err("missing T:"))?;
            let dl = dl.strip_prefix("D:").ok_or_else(|| err("missing D:"))?;
            let mut rec = RoundRecord::default();
            for id in tx.split(',').filter(|s| !s.is_empty()) {
                rec.transmitters.push(id.parse().map_err(|_| err("bad transmitter id"))?);
            }
            for pair in dl.split(',').filter(|s| !s.is_empty()) {
                let (a, b) = pair.split_once("<-").ok_or_else(|| err("bad delivery pair"))?;
                let a = a.parse().map_err(|_| err("bad receiver id"))?;
                let b = b.parse().map_err(|_| err("bad sender id"))?;
                rec.deliveries.push((a, b));
            }
            rec.transmitters.sort_unstable();
            rec.deliveries.sort_unstable();
            t.rounds.push(rec);
        }
        let n = outs.iter().map(|&(v, _)| v + 1).max().unwrap_or(0);
        t.output_round = vec![None; n];
        for (v, r) in outs {
            t.output_round[v] = Some(r);
        }
        Ok(t)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("transcript line {line}: {msg}")]
pub struct TranscriptParseError {
    pub line: usize,
    pub msg: String,
}

/// `R<round> T:<id,...> D:<rx<-tx,...>` per round, then `OUT <node> <round>`.
impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut line = String::new();
        for (i, rec) in self.rounds.iter().enumerate() {
            line.clear();
            write!(line, "R{} T:", i + 1)?;
            for (j, v) in rec.transmitters.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                write!(line, "{v}")?;
            }
            line.push_str(" D:");
            for (j, (a, b)) in rec.deliveries.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                write!(line, "{a}<-{b}")?;
            }
            writeln!(f, "{line}")?;
        }
        for (v, r) in self.output_round.iter().enumerate() {
            if let Some(r) = r {
                writeln!(f, "OUT {v} {r}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Metrics {
    /// Latest round at which some node set its output.
    pub completion_round: Round,
    pub transmissions: u64,
    pub rounds_simulated: Round,
}

#[derive(Debug)]
pub struct SimOutcome {
    pub outputs: Vec<NodeOutput>,
    pub transcript: Transcript,
    pub metrics: Metrics,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("expected {expected} programs, got {got}")]
    ProgramCount { expected: usize, got: usize },
    #[error("max_rounds must be at least 1")]
    ZeroRounds,
    #[error("round limit {limit} reached; nodes without output: {missing:?}")]
    RoundLimitExceeded { limit: Round, missing: Vec<NodeId>, transcript: Box<Transcript> },
    #[error("node {node} changed its output in round {round}")]
    OutputChanged { node: NodeId, round: Round },
}

/// Generous livelock guard: `16·(D·Δ + (⌊log Δ⌋+1)² + D + 64)`.
pub fn default_max_rounds(delta: u64, diameter: u64) -> Round {
    let lg = u64::from(floor_log2(delta.max(1))) + 1;
    16 * (diameter * delta + lg * lg + diameter + 64)
}

pub fn simulate<P: NodeProgram>(tree: &Tree, programs: &mut [P], max_rounds: Round) -> Result<SimOutcome, SimError> {
    let n = tree.n();
    if programs.len() != n {
        return Err(SimError::ProgramCount { expected: n, got: programs.len() });
    }
    if max_rounds == 0 {
        return Err(SimError::ZeroRounds);
    }
    let mut transcript = Transcript { rounds: Vec::new(), output_round: vec![None; n] };
    let mut metrics = Metrics::default();
    let mut payloads: Vec<Option<P::Msg>> = (0..n).map(|_| None).collect();
    // Per-listener count of transmitting neighbors and the last one seen.
    let mut hits = vec![0u32; n];
    let mut heard_from = vec![0; n];
    let mut touched = Vec::new();
    let mut pending = programs.iter().filter(|p| p.output().is_none()).count();
    let mut snapshot: Vec<Option<NodeOutput>> = programs.iter().map(|p| p.output().cloned()).collect();
    let mut wake: Vec<Round> = programs.iter().map(|p| p.next_wake(1)).collect();
    let mut queue: BinaryHeap<Reverse<(Round, NodeId)>> = (0..n).map(|v| Reverse((wake[v], v))).collect();
    let mut awake = vec![false; n];
    let mut called: Vec<NodeId> = Vec::new();

    let mut round = 0;
    while pending > 0 {
        // Drop stale heap entries, then jump over rounds in which nobody acts.
        while queue.peek().is_some_and(|Reverse((r, v))| wake[*v] != *r) {
            queue.pop();
        }
        let Some(&Reverse((next, _))) = queue.peek() else { break };
        round = next.max(round + 1);
        if round > max_rounds {
            break;
        }
        transcript.rounds.resize((round - 1) as usize, RoundRecord::default());
        while queue.peek().is_some_and(|Reverse((r, _))| *r <= round) {
            let Reverse((r, v)) = queue.pop().unwrap();
            if wake[v] == r && !awake[v] {
                awake[v] = true;
                called.push(v);
            }
        }

        let mut rec = RoundRecord::default();
        for &v in &called {
            if let Action::Transmit(msg) = programs[v].decide(round) {
                payloads[v] = Some(msg);
                rec.transmitters.push(v);
            }
        }
        rec.transmitters.sort_unstable();
        for &w in &rec.transmitters {
            for &u in tree.neighbors(w) {
                if hits[u] == 0 {
                    touched.push(u);
                }
                hits[u] += 1;
                heard_from[u] = w;
            }
        }
        for &u in &touched {
            if hits[u] == 1 && payloads[u].is_none() {
                rec.deliveries.push((u, heard_from[u]));
                if !awake[u] {
                    awake[u] = true;
                    called.push(u);
                }
            }
        }
        rec.deliveries.sort_unstable();
        for &v in &called {
            if payloads[v].is_some() {
                continue;
            }
            let msg = (hits[v] == 1).then(|| payloads[heard_from[v]].as_ref()).flatten();
            programs[v].receive(round, msg);
        }
        metrics.transmissions += rec.transmitters.len() as u64;
        for &u in &touched {
            hits[u] = 0;
        }
        touched.clear();
        for &w in &rec.transmitters {
            payloads[w] = None;
        }
        transcript.rounds.push(rec);
        metrics.rounds_simulated = round;

        for &v in &called {
            awake[v] = false;
            match (&snapshot[v], programs[v].output()) {
                (Some(prev), cur) if cur != Some(prev) => return Err(SimError::OutputChanged { node: v, round }),
                (None, Some(out)) => {
                    snapshot[v] = Some(out.clone());
                    transcript.output_round[v] = Some(round);
                    metrics.completion_round = round;
                    pending -= 1;
                }
                _ => {}
            }
            wake[v] = programs[v].next_wake(round + 1).max(round + 1);
            if wake[v] != Round::MAX {
                queue.push(Reverse((wake[v], v)));
            }
        }
        called.clear();
    }

    if pending > 0 {
        let missing = (0..n).filter(|&v| snapshot[v].is_none()).collect();
        return Err(SimError::RoundLimitExceeded { limit: max_rounds, missing, transcript: Box::new(transcript) });
    }
    let outputs = snapshot.into_iter().map(|o| o.expect("all nodes output")).collect();
    Ok(SimOutcome { outputs, transcript, metrics })
}

/// Nodes whose information can have reached `r` by round `tau`: those with a
/// path `u = u_0 … u_k = r` and rounds `t_0 < … < t_{k-1} ≤ tau` such that
/// `u_{i+1}` received from `u_i` in round `t_i`.
pub fn history_of(transcript: &Transcript, tree: &Tree, r: NodeId, tau: Round) -> Vec<NodeId> {
    let n = tree.n();
    // latest[v]: largest round in which v's transmission still reaches r in time.
    let mut latest: Vec<Option<Round>> = vec![None; n];
    latest[r] = Some(tau.saturating_add(1));
    let mut stack = vec![r];
    while let Some(w) = stack.pop() {
        let deadline = latest[w].unwrap();
        for &u in tree.neighbors(w) {
            let best = (1..deadline.min(transcript.len() + 1)).rev().find(|&t| transcript.delivered(t, w, u));
            if let Some(t) = best {
                if latest[u].is_none_or(|old| t > old) {
                    latest[u] = Some(t);
                    stack.push(u);
                }
            }
        }
    }
    (0..n).filter(|&v| latest[v].is_some()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Transmits a fixed payload in a fixed set of rounds, records receptions,
    /// outputs once `done_at` is reached.
    struct Scripted {
        id: NodeId,
        tx: Vec<Round>,
        heard: Vec<(Round, u32)>,
        done_at: Round,
        out: Option<NodeOutput>,
        tree: Arc<Tree>,
    }

    impl NodeProgram for Scripted {
        type Msg = u32;
        fn decide(&mut self, round: Round) -> Action<u32> {
            if self.tx.contains(&round) {
                Action::Transmit(100 + self.id as u32)
            } else {
                Action::Listen
            }
        }
        fn receive(&mut self, round: Round, msg: Option<&u32>) {
            if let Some(m) = msg {
                self.heard.push((round, *m));
            }
            if round >= self.done_at {
                self.out = Some(NodeOutput { tree: self.tree.clone(), node: self.id });
            }
        }
        fn output(&self) -> Option<&NodeOutput> {
            self.out.as_ref()
        }
    }

    fn scripted(tree: &Tree, tx: &[&[Round]], done_at: Round) -> Vec<Scripted> {
        let shared = Arc::new(tree.clone());
        tx.iter()
            .enumerate()
            .map(|(id, r)| Scripted { id, tx: r.to_vec(), heard: vec![], done_at, out: None, tree: shared.clone() })
            .collect()
    }

    #[test]
    fn single_transmitter_is_heard() {
        let t = Tree::path(2);
        let mut p = scripted(&t, &[&[1], &[]], 1);
        let out = simulate(&t, &mut p, 5).unwrap();
        assert_eq!(p[1].heard, vec![(1, 100)]);
        assert_eq!(out.transcript.output_round, vec![Some(2), Some(1)]);
    }

    #[test]
    fn collision_at_star_center() {
        let t = Tree::star(2);
        let mut p = scripted(&t, &[&[], &[1], &[1]], 1);
        let _ = simulate(&t, &mut p, 2);
        assert!(p[0].heard.is_empty());
        let mut p = scripted(&t, &[&[], &[1], &[]], 5);
        let err = simulate(&t, &mut p, 2).unwrap_err();
        assert!(matches!(err, SimError::RoundLimitExceeded { ref missing, .. } if missing == &vec![0, 1, 2]));
    }

    #[test]
    fn transmitters_never_receive() {
        let t = Tree::path(2);
        let mut p = scripted(&t, &[&[1], &[1]], 2);
        let out = simulate(&t, &mut p, 3).unwrap();
        assert!(p.iter().all(|s| s.heard.is_empty()));
        assert!(out.transcript.rounds[0].deliveries.is_empty());
        assert_eq!(out.metrics.completion_round, 2);
        assert_eq!(out.metrics.transmissions, 2);
    }

    #[test]
    fn transcript_text_round_trips() {
        let t = Tree::path(3);
        let mut p = scripted(&t, &[&[1], &[2], &[]], 3);
        let out = simulate(&t, &mut p, 5).unwrap();
        let text = out.transcript.to_string();
        assert!(text.starts_with("R1 T:0 D:1<-0\nR2 T:1 D:0<-1,2<-1\n"));
        assert_eq!(Transcript::parse(&text).unwrap(), out.transcript);
        assert!(Transcript::parse("R2 T: D:").is_err());
    }

    #[test]
    fn history_follows_increasing_rounds() {
        let t = Tree::path(3);
        // 2 -> 1 in round 1, then 1 -> 0 in round 2: node 2 reaches 0 by round 2.
        let mut p = scripted(&t, &[&[], &[2], &[1]], 2);
        let out = simulate(&t, &mut p, 5).unwrap();
        assert_eq!(history_of(&out.transcript, &t, 0, 0), vec![0]);
        assert_eq!(history_of(&out.transcript, &t, 0, 1), vec![0]);
        assert_eq!(history_of(&out.transcript, &t, 0, 2), vec![0, 1, 2]);
        // wrong order: 1 -> 0 first, 2 -> 1 later
        let mut p = scripted(&t, &[&[], &[1], &[2]], 2);
        let out = simulate(&t, &mut p, 5).unwrap();
        assert_eq!(history_of(&out.transcript, &t, 0, 5), vec![0, 1]);
    }

    #[test]
    fn max_rounds_formula() {
        // Δ=8, D=4: 16·(32 + 16 + 4 + 64)
        assert_eq!(default_max_rounds(8, 4), 16 * 116);
    }
}
