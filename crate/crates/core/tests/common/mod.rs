//! Brute-force oracles shared by the integration suites. Everything here is
//! deliberately naive so it can be trusted independently of the library.
#![allow(dead_code)]

use std::collections::BTreeSet;

use itertools::Itertools;
use radio_topo::radio::{RoundRecord, Transcript};
use radio_topo::tree::{NodeId, Tree};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Every tree on `n` labeled nodes in which each node `i > 0` hangs off a
/// smaller node. Covers every unlabeled shape, rooted at node 0 or anywhere.
pub fn recursive_trees(n: usize) -> Vec<Tree> {
    match n {
        0 => return Vec::new(),
        1 => return vec![Tree::path(1)],
        _ => {}
    }
    (1..n)
        .map(|i| 0..i)
        .multi_cartesian_product()
        .map(|parents| Tree::new(n, parents.into_iter().enumerate().map(|(i, p)| (p, i + 1))).unwrap())
        .collect()
}

fn edge_set(t: &Tree) -> BTreeSet<(NodeId, NodeId)> {
    t.edges().iter().map(|&(a, b)| (a.min(b), a.max(b))).collect()
}

/// Whether some bijection maps `a` onto `b` edge for edge and sends `va` to `vb`.
pub fn brute_isomorphic_at(a: &Tree, va: NodeId, b: &Tree, vb: NodeId) -> bool {
    if a.n() != b.n() {
        return false;
    }
    let eb = edge_set(b);
    let others_a: Vec<NodeId> = (0..a.n()).filter(|&v| v != va).collect();
    let others_b: Vec<NodeId> = (0..b.n()).filter(|&v| v != vb).collect();
    others_b.iter().copied().permutations(others_b.len()).any(|img| {
        let mut f = vec![0; a.n()];
        f[va] = vb;
        for (&u, &w) in others_a.iter().zip(&img) {
            f[u] = w;
        }
        a.edges().iter().all(|&(x, y)| eb.contains(&(f[x].min(f[y]), f[x].max(f[y]))))
    })
}

/// Transcript of random transmitter sets obeying the collision rule: a
/// listener receives iff exactly one neighbor transmits.
pub fn random_transcript(tree: &Tree, rounds: usize, seed: u64) -> Transcript {
    let mut r = rng(seed);
    let n = tree.n();
    let records = (0..rounds)
        .map(|_| {
            let tx: Vec<bool> = (0..n).map(|_| r.random_bool(0.35)).collect();
            let transmitters: Vec<NodeId> = (0..n).filter(|&v| tx[v]).collect();
            let deliveries = (0..n)
                .filter(|&v| !tx[v])
                .filter_map(|v| {
                    let heard: Vec<NodeId> = tree.neighbors(v).iter().copied().filter(|&u| tx[u]).collect();
                    (heard.len() == 1).then(|| (v, heard[0]))
                })
                .collect();
            RoundRecord { transmitters, deliveries }
        })
        .collect();
    Transcript { rounds: records, output_round: vec![None; n] }
}

/// History by enumerating every simple path into `r` and every strictly
/// increasing round sequence along it.
pub fn brute_history(t: &Transcript, tree: &Tree, r: NodeId, tau: u64) -> Vec<NodeId> {
    fn reaches(t: &Transcript, path: &[NodeId], i: usize, after: u64, tau: u64) -> bool {
        if i + 1 == path.len() {
            return true;
        }
        (after + 1..=tau.min(t.len()))
            .any(|round| t.delivered(round, path[i + 1], path[i]) && reaches(t, path, i + 1, round, tau))
    }
    (0..tree.n()).filter(|&u| reaches(t, &tree.path_between(u, r), 0, 0, tau)).collect()
}

/// All pairs of endpoints of longest paths.
pub fn longest_paths(tree: &Tree) -> Vec<Vec<NodeId>> {
    let d = tree.diameter();
    let mut out: Vec<Vec<NodeId>> = (0..tree.n())
        .flat_map(|a| {
            let dist = tree.distances_from(a);
            (a + 1..tree.n()).filter(move |&b| dist[b] == d).map(move |b| (a, b))
        })
        .map(|(a, b)| tree.path_between(a, b))
        .collect();
    if out.is_empty() {
        out.push(vec![0]);
    }
    out
}

/// A uniformly random labeled tree (random attachment) with `n` nodes.
pub fn random_attachment_tree(n: usize, seed: u64) -> Tree {
    let mut r = rng(seed);
    let mut perm: Vec<NodeId> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, r.random_range(0..=i));
    }
    let edges: Vec<(NodeId, NodeId)> = (1..n).map(|i| (perm[r.random_range(0..i)], perm[i])).collect();
    Tree::new(n, edges).unwrap()
}
