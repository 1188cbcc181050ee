//! Centralized labeler for trees with `Δ ≥ 3` and diameter at least 4.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::codec::{BitString, LabelKind, StructuredLabel};
use crate::tree::{
    classify_heavy, core_subtree, enumerate_rooted_trees, floor_log2, index_in_sequence, Center, NodeId, RootedTree,
    RootedTreeSequence, Tree,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemeError {
    #[error("unsupported shape: Δ={delta}, D={diameter} (need Δ ≥ 3 and D ≥ 4)")]
    UnsupportedShape { delta: u64, diameter: usize },
    #[error("Δ={0} is below 3")]
    DeltaTooSmall(u64),
    #[error("cannot chunk an empty bit string")]
    EmptyString,
    #[error("chunk length must be positive")]
    ZeroChunk,
    #[error("chunk {0} is missing")]
    MissingChunk(usize),
    #[error("chunk index {0} appears twice")]
    DuplicateChunk(usize),
    #[error("subtree at node {0} is not in the small-tree sequence")]
    IndexNotFound(NodeId),
    #[error("malformed main label: {0}")]
    BadLabel(&'static str),
    #[error("truth file line {line}: {msg}")]
    TruthFormat { line: usize, msg: String },
    #[error("expected {expected}, got a tree with Δ={delta}, D={diameter}")]
    WrongShape { expected: &'static str, delta: u64, diameter: usize },
    #[error("{leaves} leaves exceed Δ={delta}")]
    TooManyLeaves { leaves: usize, delta: u64 },
}

/// Greedy split into 1-based `(index, chunk)` pairs; every chunk but the last
/// has exactly `c` bits.
pub fn chunk(s: &BitString, c: usize) -> Result<Vec<(usize, BitString)>, SchemeError> {
    if c == 0 {
        return Err(SchemeError::ZeroChunk);
    }
    if s.is_empty() {
        return Err(SchemeError::EmptyString);
    }
    Ok(s.bits().chunks(c).enumerate().map(|(i, part)| (i + 1, BitString::from_bits(part.to_vec()))).collect())
}

/// Concatenates chunks in index order; indices must be exactly `1..=k`.
pub fn unchunk<'a, I>(chunks: I) -> Result<BitString, SchemeError>
where
    I: IntoIterator<Item = (usize, &'a BitString)>,
{
    let mut by_index: BTreeMap<usize, &BitString> = BTreeMap::new();
    for (i, c) in chunks {
        if by_index.insert(i, c).is_some() {
            return Err(SchemeError::DuplicateChunk(i));
        }
    }
    let mut out = BitString::new();
    for (expect, (&i, c)) in (1..).zip(&by_index) {
        if i != expect {
            return Err(SchemeError::MissingChunk(expect));
        }
        out.extend_from(c);
    }
    if out.is_empty() {
        return Err(SchemeError::MissingChunk(1));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SchemeParams {
    pub delta: u64,
    /// Core size `⌈(⌊log Δ⌋+1)/4⌉`.
    pub m: usize,
    /// Rooted trees with `1..m` nodes.
    pub seq: Arc<RootedTreeSequence>,
    pub q: usize,
    /// Epoch length `max(2Δ, Δ + q·m + 1)`.
    pub epoch_len: u64,
}

impl SchemeParams {
    /// Bits used to write `Δ` and every `t_v`.
    pub fn value_width(&self) -> usize {
        floor_log2(self.delta) as usize + 1
    }
}

pub fn core_size(delta: u64) -> usize {
    (floor_log2(delta) as usize + 1).div_ceil(4)
}

pub fn derive_params(delta: u64) -> Result<SchemeParams, SchemeError> {
    if delta < 3 {
        return Err(SchemeError::DeltaTooSmall(delta));
    }
    let m = core_size(delta);
    let seq = enumerate_rooted_trees(m - 1);
    let q = seq.len();
    let epoch_len = (2 * delta).max(delta + (q * m) as u64 + 1);
    Ok(SchemeParams { delta, m, seq: Arc::new(seq), q, epoch_len })
}

/// `(1-based id, chunk)`.
pub type IdChunk = (usize, BitString);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MainLabel {
    pub markers: [bool; 7],
    /// Chunk of `Δ` on the root's core.
    pub l0: Option<IdChunk>,
    /// Chunk of `t_v` on the core of a heavy node whose children are all light.
    pub l1: Option<IdChunk>,
    /// Set on a heavy node whose parent shares its slot.
    pub l2: bool,
    /// 2-bit chunk of `z_v` on a light subtree hanging off a heavy node.
    pub l3: Option<IdChunk>,
    /// Chunk of a light sibling group's size, on the group's first members.
    pub l4: Option<IdChunk>,
    /// `binary(m)`.
    pub l5: BitString,
    /// The node has no children.
    pub leaf: bool,
}

fn flag(b: bool) -> BitString {
    if b {
        BitString::from("1")
    } else {
        BitString::new()
    }
}

fn id_chunk_fields(x: &Option<IdChunk>) -> [BitString; 2] {
    match x {
        Some((i, c)) => [BitString::binary(*i as u64), c.clone()],
        None => [BitString::new(), BitString::new()],
    }
}

fn parse_id_chunk(id: &BitString, c: &BitString) -> Result<Option<IdChunk>, SchemeError> {
    if id.is_empty() {
        if !c.is_empty() {
            return Err(SchemeError::BadLabel("chunk without id"));
        }
        return Ok(None);
    }
    match id.to_u64() {
        Some(i) if i >= 1 => Ok(Some((i as usize, c.clone()))),
        _ => Err(SchemeError::BadLabel("id must be positive")),
    }
}

fn parse_flag(b: &BitString) -> Result<bool, SchemeError> {
    match b.to_string().as_str() {
        "" => Ok(false),
        "1" => Ok(true),
        _ => Err(SchemeError::BadLabel("flag field must be empty or 1")),
    }
}

impl MainLabel {
    pub fn marker(&self, i: usize) -> bool {
        self.markers[i]
    }

    pub fn to_structured(&self) -> StructuredLabel {
        let m = BitString::from_bits(self.markers.to_vec());
        let [a0, b0] = id_chunk_fields(&self.l0);
        let [a1, b1] = id_chunk_fields(&self.l1);
        let [a3, b3] = id_chunk_fields(&self.l3);
        let [a4, b4] = id_chunk_fields(&self.l4);
        StructuredLabel::new(
            LabelKind::MainScheme,
            vec![m, a0, b0, a1, b1, flag(self.l2), a3, b3, a4, b4, self.l5.clone(), flag(self.leaf)],
        )
    }

    pub fn from_structured(s: &StructuredLabel) -> Result<Self, SchemeError> {
        if s.kind != LabelKind::MainScheme || s.fields.len() != 12 {
            return Err(SchemeError::BadLabel("not a main-scheme label"));
        }
        let f = &s.fields;
        if f[0].len() != 7 {
            return Err(SchemeError::BadLabel("marker string must have 7 bits"));
        }
        let mut markers = [false; 7];
        markers.copy_from_slice(f[0].bits());
        if f[10].to_u64().is_none_or(|m| m == 0) {
            return Err(SchemeError::BadLabel("L5 must hold a positive core size"));
        }
        Ok(MainLabel {
            markers,
            l0: parse_id_chunk(&f[1], &f[2])?,
            l1: parse_id_chunk(&f[3], &f[4])?,
            l2: parse_flag(&f[5])?,
            l3: parse_id_chunk(&f[6], &f[7])?,
            l4: parse_id_chunk(&f[8], &f[9])?,
            l5: f[10].clone(),
            leaf: parse_flag(&f[11])?,
        })
    }

    /// Core size read from L5.
    pub fn m(&self) -> usize {
        self.l5.to_u64().unwrap_or(1) as usize
    }
}

/// Labeler-side values that nodes must rediscover. Used by verification only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    pub root: NodeId,
    pub height: usize,
    pub marker1_leaf: NodeId,
    pub heavy: Vec<bool>,
    pub t: Vec<Option<u64>>,
    pub z: Vec<Option<usize>>,
    /// Core node lists (position = id − 1): the root's core and each L1 core.
    pub cores: Vec<(NodeId, Vec<NodeId>)>,
}

impl GroundTruth {
    /// Sidecar text: `t <node> <val>` and `z <node> <val>` lines.
    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        for (v, t) in self.t.iter().enumerate() {
            if let Some(t) = t {
                let _ = writeln!(out, "t {v} {t}");
            }
        }
        for (v, z) in self.z.iter().enumerate() {
            if let Some(z) = z {
                let _ = writeln!(out, "z {v} {z}");
            }
        }
        out
    }

    /// `(t, z)` entries parsed from sidecar text.
    #[allow(clippy::type_complexity)]
    pub fn parse_sidecar(text: &str) -> Result<(Vec<(NodeId, u64)>, Vec<(NodeId, usize)>), SchemeError> {
        let mut t = Vec::new();
        let mut z = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| SchemeError::TruthFormat { line: i + 1, msg: msg.into() };
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [tag, v, val] = parts[..] else {
                return Err(err("expected `<t|z> <node> <value>`"));
            };
            let v: NodeId = v.parse().map_err(|_| err("bad node id"))?;
            match tag {
                "t" => t.push((v, val.parse().map_err(|_| err("bad value"))?)),
                "z" => z.push((v, val.parse().map_err(|_| err("bad value"))?)),
                _ => return Err(err("unknown tag")),
            }
        }
        Ok((t, z))
    }
}

#[derive(Clone, Debug)]
pub struct MainScheme {
    pub rooted: RootedTree,
    pub labels: Vec<MainLabel>,
    pub params: SchemeParams,
    pub truth: GroundTruth,
}

/// The root used by the main scheme: the central node, or for a central edge
/// the endpoint on the larger side (smaller id on a tie).
pub fn choose_root(tree: &Tree) -> NodeId {
    match tree.center() {
        Center::Node(c) => c,
        Center::Edge(a, b) => {
            let rt = RootedTree::new(tree.clone(), a).expect("center is a node");
            let side_b = rt.subtree_size(b);
            let side_a = tree.n() - side_b;
            if side_b > side_a {
                b
            } else {
                a
            }
        }
    }
}

/// Markers 0..6 per node.
pub fn assign_markers(rt: &RootedTree, heavy: &[bool], m: usize) -> Vec<[bool; 7]> {
    let n = rt.n();
    let mut mk = vec![[false; 7]; n];
    let r = rt.root();
    mk[r][0] = true;
    let h = rt.height();
    let first_deep = *rt.bfs_order().iter().find(|&&v| rt.level(v) == h).expect("some node at max depth");
    mk[first_deep][1] = true;
    for v in core_subtree(rt, r, m).expect("root subtree holds the whole tree") {
        mk[v][2] = true;
    }
    for v in 0..n {
        mk[v][3] = heavy[v];
        mk[v][4] = !heavy[v];
        let kids = rt.children(v);
        if heavy[v] && !kids.is_empty() && kids.iter().all(|&c| !heavy[c]) {
            for u in core_subtree(rt, v, m).expect("heavy subtrees hold a core") {
                mk[u][5] = true;
            }
        }
        if !heavy[v] && rt.parent(v).is_some_and(|p| heavy[p]) {
            for u in rt.subtree_bfs(v) {
                mk[u][6] = true;
            }
        }
    }
    mk
}

/// Slot values for heavy non-root nodes.
pub fn assign_t(rt: &RootedTree, heavy: &[bool]) -> Vec<Option<u64>> {
    let mut t = vec![None; rt.n()];
    for &v in rt.bfs_order() {
        if !heavy[v] {
            continue;
        }
        let hk: Vec<NodeId> = rt.children(v).iter().copied().filter(|&c| heavy[c]).collect();
        if hk.is_empty() {
            continue;
        }
        match t[v] {
            None => {
                for (i, &u) in hk.iter().enumerate() {
                    t[u] = Some(i as u64 + 1);
                }
            }
            Some(tv) => {
                t[hk[0]] = Some(tv);
                let y = hk.len() as u64;
                let mut free = (1..=y).filter(|&x| x != tv);
                for &u in &hk[1..] {
                    t[u] = free.next();
                }
            }
        }
    }
    t
}

/// Sequence index for every light node with a heavy parent.
pub fn assign_z(rt: &RootedTree, heavy: &[bool], seq: &RootedTreeSequence) -> Result<Vec<Option<usize>>, SchemeError> {
    let mut z = vec![None; rt.n()];
    for v in 0..rt.n() {
        if !heavy[v] && rt.parent(v).is_some_and(|p| heavy[p]) {
            z[v] = Some(index_in_sequence(seq, rt, v).map_err(|_| SchemeError::IndexNotFound(v))?);
        }
    }
    Ok(z)
}

/// `z` padded with leading zeros to the shortest even length.
pub fn z_bits(z: usize) -> BitString {
    let b = BitString::binary(z as u64);
    let even = b.len() + b.len() % 2;
    BitString::with_width(z as u64, even)
}

pub fn label_main(tree: &Tree) -> Result<MainScheme, SchemeError> {
    let delta = tree.max_degree() as u64;
    let diameter = tree.diameter();
    if delta < 3 || diameter < 4 {
        return Err(SchemeError::UnsupportedShape { delta, diameter });
    }
    let params = derive_params(delta)?;
    let m = params.m;
    let width = params.value_width();
    let root = choose_root(tree);
    let rt = RootedTree::new(tree.clone(), root).expect("root is a node");
    let n = rt.n();
    let heavy = classify_heavy(&rt, delta);
    let markers = assign_markers(&rt, &heavy, m);
    let t = assign_t(&rt, &heavy);
    let z = assign_z(&rt, &heavy, &params.seq)?;

    let l5 = BitString::binary(m as u64);
    let mut labels: Vec<MainLabel> = (0..n)
        .map(|v| MainLabel { markers: markers[v], l5: l5.clone(), leaf: rt.is_leaf(v), ..Default::default() })
        .collect();
    let mut cores = Vec::new();

    let root_core = core_subtree(&rt, root, m).expect("tree is larger than its core");
    for (u, (i, c)) in root_core.iter().zip(chunk(&BitString::with_width(delta, width), 4)?) {
        labels[*u].l0 = Some((i, c));
    }
    cores.push((root, root_core));

    for v in 0..n {
        if v == root || !heavy[v] || rt.children(v).iter().any(|&c| heavy[c]) {
            continue;
        }
        let tv = t[v].expect("heavy non-root nodes have a slot");
        let core = core_subtree(&rt, v, m).expect("heavy subtrees hold a core");
        for (u, (i, c)) in core.iter().zip(chunk(&BitString::with_width(tv, width), 4)?) {
            labels[*u].l1 = Some((i, c));
        }
        cores.push((v, core));
    }

    for v in 0..n {
        if let (Some(p), Some(tv)) = (rt.parent(v), t[v]) {
            labels[v].l2 = t[p] == Some(tv);
        }
    }

    for (v, zv) in z.iter().enumerate() {
        let Some(zv) = *zv else { continue };
        let chunks = chunk(&z_bits(zv), 2)?;
        for (pos, u) in rt.subtree_bfs(v).into_iter().enumerate() {
            let c = chunks.get(pos).map(|(_, c)| c.clone()).unwrap_or_default();
            labels[u].l3 = Some((pos + 1, c));
        }
    }

    for p in (0..n).filter(|&p| heavy[p]) {
        let mut groups: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
        for &c in rt.children(p) {
            if let Some(zc) = z[c] {
                groups.entry(zc).or_default().push(c);
            }
        }
        for members in groups.values() {
            let a = members.len() as u64;
            for (u, (i, c)) in members.iter().zip(chunk(&BitString::binary(a), 4)?) {
                labels[*u].l4 = Some((i, c));
            }
        }
    }

    let height = rt.height();
    let marker1_leaf = (0..n).find(|&v| markers[v][1]).expect("one marked leaf");
    let truth = GroundTruth { root, height, marker1_leaf, heavy, t, z, cores };
    Ok(MainScheme { rooted: rt, labels, params, truth })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_examples() {
        let c = chunk(&"10000".into(), 4).unwrap();
        assert_eq!(c, vec![(1, "1000".into()), (2, "0".into())]);
        assert_eq!(chunk(&"1".into(), 4).unwrap(), vec![(1, "1".into())]);
        assert_eq!(chunk(&BitString::new(), 4), Err(SchemeError::EmptyString));
        assert_eq!(chunk(&"1".into(), 0), Err(SchemeError::ZeroChunk));
    }

    #[test]
    fn unchunk_errors() {
        let a: BitString = "10".into();
        let b: BitString = "1".into();
        assert_eq!(unchunk([(2, &b), (1, &a)]).unwrap().to_string(), "101");
        assert_eq!(unchunk([(2, &b)]), Err(SchemeError::MissingChunk(1)));
        assert_eq!(unchunk([(1, &a), (1, &b)]), Err(SchemeError::DuplicateChunk(1)));
    }

    #[test]
    fn params_examples() {
        let p = derive_params(16).unwrap();
        assert_eq!((p.m, p.q, p.epoch_len), (2, 1, 32));
        let p = derive_params(1 << 8).unwrap();
        assert_eq!((p.m, p.q, p.epoch_len), (3, 2, 512));
        let p = derive_params(1 << 16).unwrap();
        assert_eq!((p.m, p.q), (5, 8));
        let p = derive_params(3).unwrap();
        assert_eq!((p.m, p.q, p.epoch_len), (1, 0, 6));
        assert!(derive_params(2).is_err());
    }

    #[test]
    fn t_assignment_rules() {
        // root 0 with heavy children; node 1 has three children
        let t = Tree::new(8, [(0, 1), (0, 2), (1, 5), (1, 3), (1, 4), (2, 6), (2, 7)]).unwrap();
        let rt = RootedTree::new(t, 0).unwrap();
        let heavy = vec![true; 8];
        let ts = assign_t(&rt, &heavy);
        assert_eq!(ts[1], Some(1));
        assert_eq!(ts[2], Some(2));
        assert_eq!((ts[3], ts[4], ts[5]), (Some(1), Some(2), Some(3)));
        assert_eq!((ts[6], ts[7]), (Some(2), Some(1)));
        assert_eq!(ts[0], None);
    }

    #[test]
    fn z_padding() {
        assert_eq!(z_bits(1).to_string(), "01");
        assert_eq!(z_bits(2).to_string(), "10");
        assert_eq!(z_bits(5).to_string(), "0101");
    }

    #[test]
    fn odd_diameter_root_picks_larger_side() {
        // path 0-1-2-3 with an extra leaf on 2: central edge (1,2), side of 2 is larger
        let t = Tree::new(5, [(0, 1), (1, 2), (2, 3), (2, 4)]).unwrap();
        assert_eq!(choose_root(&t), 2);
        assert_eq!(choose_root(&Tree::path(4)), 1);
    }

    #[test]
    fn label_structured_round_trip() {
        let l = MainLabel {
            markers: [true, false, true, true, false, false, false],
            l0: Some((2, "0".into())),
            l2: true,
            l3: Some((3, BitString::new())),
            l5: "10".into(),
            ..Default::default()
        };
        assert_eq!(MainLabel::from_structured(&l.to_structured()).unwrap(), l);
    }

    #[test]
    fn rejects_small_shapes() {
        assert!(matches!(label_main(&Tree::star(5)), Err(SchemeError::UnsupportedShape { .. })));
        assert!(matches!(label_main(&Tree::path(8)), Err(SchemeError::UnsupportedShape { .. })));
    }
}
