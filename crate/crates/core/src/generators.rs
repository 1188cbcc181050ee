//! Seeded test trees and the lower-bound families.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use thiserror::Error;

use crate::tree::{NodeId, Tree};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("parameters outside the supported range: {0}")]
    OutOfRange(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Random,
    Feas,
    DiamLb,
    DegLb,
    Sticks,
    Lines,
    Stars,
}

impl Family {
    pub const ALL: [Family; 7] =
        [Family::Random, Family::Feas, Family::DiamLb, Family::DegLb, Family::Sticks, Family::Lines, Family::Stars];

    pub fn name(self) -> &'static str {
        match self {
            Family::Random => "random",
            Family::Feas => "feas",
            Family::DiamLb => "diamLB",
            Family::DegLb => "degLB",
            Family::Sticks => "sticks",
            Family::Lines => "lines",
            Family::Stars => "stars",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| GenError::UnknownFamily(s.into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub family: Family,
    pub delta: usize,
    pub diameter: usize,
    pub seed: u64,
    pub count: usize,
}

/// Trees for a spec. Seeded families produce `count` samples with seeds
/// `seed, seed+1, …`; enumerated families ignore `seed` and `count`.
pub fn generate(spec: &GenSpec) -> Result<Vec<Tree>, GenError> {
    let seeds = spec.seed..spec.seed + spec.count as u64;
    match spec.family {
        Family::Random => seeds.map(|s| random_tree(spec.delta, spec.diameter, s)).collect(),
        Family::Sticks => family_sticks(spec.delta, spec.diameter, spec.seed, spec.count),
        Family::DiamLb => seeds.map(|s| diam_lb_sample(spec.diameter, spec.delta, s)).collect(),
        Family::DegLb => seeds.map(|s| deg_lb_sample(spec.delta, spec.diameter, s)).collect(),
        Family::Feas => family_feasibility(spec.delta),
        Family::Lines => family_lines(spec.diameter),
        Family::Stars => family_stars(spec.delta),
    }
}

/// Incremental edge list with degree tracking.
struct Builder {
    edges: Vec<(NodeId, NodeId)>,
    degree: Vec<usize>,
}

impl Builder {
    fn new() -> Self {
        Builder { edges: Vec::new(), degree: vec![0] }
    }

    fn add_child(&mut self, parent: NodeId) -> NodeId {
        let v = self.degree.len();
        self.degree.push(1);
        self.degree[parent] += 1;
        self.edges.push((parent, v));
        v
    }

    fn add_path(&mut self, from: NodeId, len: usize) -> Vec<NodeId> {
        let mut out = vec![from];
        for _ in 0..len {
            let v = self.add_child(*out.last().unwrap());
            out.push(v);
        }
        out
    }

    fn finish(self) -> Tree {
        let n = self.degree.len();
        Tree::new(n, self.edges).expect("builder only adds pendant nodes")
    }
}

/// A tree with diameter exactly `diameter` and maximum degree exactly `delta`.
///
/// A `diameter`-edge spine is laid down first; every spine node `i` may grow
/// a pendant subtree of depth at most `min(i, D − i)`, which keeps the spine
/// a longest path. The middle spine node is filled up to degree `Δ`, then a
/// seeded number of extra nodes (between `Δ` and `Δ·D/2`) is hung on random
/// nodes that still have degree and depth budget.
pub fn random_tree(delta: usize, diameter: usize, seed: u64) -> Result<Tree, GenError> {
    if delta < 2 || diameter < 2 {
        return Err(GenError::Infeasible(format!("Δ={delta}, D={diameter}: need Δ ≥ 2 and D ≥ 2")));
    }
    let mut b = Builder::new();
    let spine = b.add_path(0, diameter);
    if delta == 2 {
        return Ok(b.finish());
    }
    let mut budget: Vec<usize> = (0..=diameter).map(|i| i.min(diameter - i)).collect();
    let mid = spine[diameter / 2];
    while b.degree[mid] < delta {
        b.add_child(mid);
        budget.push(budget[mid] - 1);
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let extras = rng.random_range(delta..=(delta * diameter / 2).max(delta));
    let mut open: Vec<NodeId> = (0..b.degree.len()).filter(|&v| b.degree[v] < delta && budget[v] > 0).collect();
    for _ in 0..extras {
        if open.is_empty() {
            break;
        }
        let i = rng.random_range(0..open.len());
        let p = open[i];
        let c = b.add_child(p);
        budget.push(budget[p] - 1);
        if b.degree[p] >= delta {
            open.swap_remove(i);
        }
        if budget[c] > 0 {
            open.push(c);
        }
    }
    Ok(b.finish())
}

/// Node `r` of degree `Δ` (Δ−1 leaves and a neighbor `a`) with `i` leaves
/// hung on `a`, for `⌊Δ/2⌋ ≤ i ≤ Δ−1`. Node 0 is `r`, node 1 is `a`.
pub fn family_feasibility(delta: usize) -> Result<Vec<Tree>, GenError> {
    if delta < 3 {
        return Err(GenError::OutOfRange(format!("feasibility family needs Δ ≥ 3, got {delta}")));
    }
    Ok((delta / 2..delta)
        .map(|i| {
            let mut b = Builder::new();
            let a = b.add_child(0);
            for _ in 0..delta - 1 {
                b.add_child(0);
            }
            for _ in 0..i {
                b.add_child(a);
            }
            b.finish()
        })
        .collect())
}

/// Lines with `⌊D/2⌋+1 ..= D` edges.
pub fn family_lines(diameter: usize) -> Result<Vec<Tree>, GenError> {
    if diameter < 1 {
        return Err(GenError::OutOfRange("lines family needs D ≥ 1".into()));
    }
    Ok((diameter / 2 + 1..=diameter).map(|k| Tree::path(k + 1)).collect())
}

/// Stars with `⌊Δ/2⌋+1 ..= Δ` leaves.
pub fn family_stars(delta: usize) -> Result<Vec<Tree>, GenError> {
    if delta < 1 {
        return Err(GenError::OutOfRange("stars family needs Δ ≥ 1".into()));
    }
    Ok((delta / 2 + 1..=delta).map(Tree::star).collect())
}

/// Full rooted tree of the given height whose root has `Δ−1` children and
/// whose other internal nodes have degree `Δ`. Returns the leaves in order.
fn skeleton(b: &mut Builder, root: NodeId, delta: usize, height: usize) -> Vec<NodeId> {
    let mut layer = vec![root];
    for _ in 0..height {
        let mut next = Vec::with_capacity(layer.len() * (delta - 1));
        for &v in &layer {
            for _ in 0..delta - 1 {
                next.push(b.add_child(v));
            }
        }
        layer = next;
    }
    layer
}

/// One sample of the growing-diameter family: a line `r … s₁` of `h₁−1`
/// edges joined to a full skeleton of height `D/2 − 1`, two far-apart
/// skeleton leaves extended by one node, and `x_i ∈ [0, Δ−1]` leaves on every
/// other skeleton leaf. Odd `D` adds one pendant to an extended leaf.
pub fn diam_lb_sample(diameter: usize, delta: usize, seed: u64) -> Result<Tree, GenError> {
    if delta < 3 || diameter < 6 {
        return Err(GenError::OutOfRange(format!("diamLB needs Δ ≥ 3 and D ≥ 6, got Δ={delta}, D={diameter}")));
    }
    let even = diameter - diameter % 2;
    let h2 = even / 2;
    let h1 = ((even + 2) / 8).max(2);
    if h1 >= h2 {
        return Err(GenError::OutOfRange(format!("diamLB: D={diameter} too small for the line part")));
    }
    if (delta as f64 - 1.0).powi(h2 as i32 - 1) > 50_000.0 {
        return Err(GenError::OutOfRange(format!("diamLB: Δ={delta}, D={diameter} is beyond desk scale")));
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut b = Builder::new();
    let line = b.add_path(0, h1 - 1);
    let s2 = b.add_child(*line.last().unwrap());
    let leaves = skeleton(&mut b, s2, delta, h2 - 1);
    let (first, last) = (leaves[0], *leaves.last().unwrap());
    let far = b.add_child(first);
    b.add_child(last);
    for &v in &leaves[1..leaves.len() - 1] {
        for _ in 0..rng.random_range(0..delta) {
            b.add_child(v);
        }
    }
    if diameter % 2 == 1 {
        b.add_child(far);
    }
    Ok(b.finish())
}

/// One sample of the growing-degree family: a hub `s` with `Δ−1` neighbors
/// `v_i`, each carrying `x_i ∈ [⌊Δ/2⌋, Δ−1]` leaves, and a tail of `D−2`
/// edges from `s`.
pub fn deg_lb_sample(delta: usize, diameter: usize, seed: u64) -> Result<Tree, GenError> {
    if delta < 3 || diameter < 4 {
        return Err(GenError::OutOfRange(format!("degLB needs Δ ≥ 3 and D ≥ 4, got Δ={delta}, D={diameter}")));
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut b = Builder::new();
    b.add_path(0, diameter - 2);
    for _ in 0..delta - 1 {
        let v = b.add_child(0);
        for _ in 0..rng.random_range(delta / 2..delta) {
            b.add_child(v);
        }
    }
    Ok(b.finish())
}

/// Skeleton of height `⌊D/6⌋` with a seeded stick glued to every leaf. A
/// stick is a line of `g = D/2 − h` edges whose first `g` nodes carry
/// `x_i ∈ [0, Δ−2]` leaves. Odd `D` adds one pendant at a stick end.
pub fn family_sticks(delta: usize, diameter: usize, seed: u64, count: usize) -> Result<Vec<Tree>, GenError> {
    if !(3..=8).contains(&delta) || !(6..=18).contains(&diameter) {
        return Err(GenError::OutOfRange(format!(
            "sticks family supports 3 ≤ Δ ≤ 8 and 6 ≤ D ≤ 18, got Δ={delta}, D={diameter}"
        )));
    }
    let even = diameter - diameter % 2;
    let h = even / 6;
    let g = even / 2 - h;
    Ok((0..count as u64)
        .map(|i| {
            let mut rng = SplitMix64::seed_from_u64(seed.wrapping_add(i));
            let mut b = Builder::new();
            let leaves = skeleton(&mut b, 0, delta, h);
            let mut ends = Vec::with_capacity(leaves.len());
            for &w in &leaves {
                let stick = b.add_path(w, g);
                for &v in &stick[..g] {
                    for _ in 0..rng.random_range(0..delta - 1) {
                        b.add_child(v);
                    }
                }
                ends.push(stick[g]);
            }
            if b.degree.iter().all(|&d| d < delta) {
                // the root has Δ−1 children; top up the first glue node
                while b.degree[leaves[0]] < delta {
                    b.add_child(leaves[0]);
                }
            }
            if diameter % 2 == 1 {
                b.add_child(ends[0]);
            }
            b.finish()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_tree_shape() {
        assert_eq!(random_tree(2, 5, 7).unwrap().edges(), Tree::path(6).edges());
        for seed in 0..20 {
            let t = random_tree(3, 4, seed).unwrap();
            assert_eq!((t.diameter(), t.max_degree()), (4, 3));
        }
        assert_eq!(random_tree(3, 4, 1).unwrap().edges(), random_tree(3, 4, 1).unwrap().edges());
        assert!(random_tree(1, 4, 0).is_err());
    }

    #[test]
    fn feasibility_family() {
        let f = family_feasibility(6).unwrap();
        assert_eq!(f.len(), 3);
        for (t, i) in f.iter().zip(3..) {
            assert_eq!((t.degree(0), t.degree(1), t.diameter()), (6, i + 1, 3));
        }
    }

    #[test]
    fn enumerated_families() {
        let lines: Vec<usize> = family_lines(10).unwrap().iter().map(|t| t.n() - 1).collect();
        assert_eq!(lines, vec![6, 7, 8, 9, 10]);
        let stars: Vec<usize> = family_stars(8).unwrap().iter().map(|t| t.max_degree()).collect();
        assert_eq!(stars, vec![5, 6, 7, 8]);
    }

    #[test]
    fn deg_lb_leaf_counts() {
        let t = deg_lb_sample(6, 4, 3).unwrap();
        assert_eq!((t.max_degree(), t.diameter()), (6, 4));
        for &v in t.neighbors(0).iter().filter(|&&v| v != 1) {
            assert!((4..=6).contains(&t.degree(v)), "v_i has 3..=5 leaves");
        }
    }

    #[test]
    fn sticks_shape() {
        let ts = family_sticks(3, 6, 11, 4).unwrap();
        for t in &ts {
            assert_eq!((t.diameter(), t.max_degree()), (6, 3));
        }
        assert_eq!(ts[0].edges(), family_sticks(3, 6, 11, 1).unwrap()[0].edges());
        let odd = family_sticks(4, 9, 1, 1).unwrap();
        assert_eq!(odd[0].diameter(), 9);
        assert!(family_sticks(9, 6, 0, 1).is_err());
    }

    #[test]
    fn diam_lb_shape() {
        for d in [6, 8, 9, 10] {
            let t = diam_lb_sample(d, 3, 5).unwrap();
            assert_eq!((t.diameter(), t.max_degree()), (d, 3), "D={d}");
        }
    }
}
