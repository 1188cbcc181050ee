use super::{floor_log2, NodeId, RootedTree};

use thiserror::Error;

/// `⌊log₂ Δ⌋ + 1`, the quantity a heavy subtree must reach four times over.
pub fn heavy_threshold(delta: u64) -> u64 {
    u64::from(floor_log2(delta)) + 1
}

/// `|T_v| ≥ ¼(⌊log Δ⌋+1)`, compared as `4·size ≥ ⌊log Δ⌋+1`.
pub fn is_heavy(subtree_size: usize, delta: u64) -> bool {
    4 * subtree_size as u64 >= heavy_threshold(delta)
}

/// Heavy flag per node id. The root is always heavy for `Δ ≥ 3`.
pub fn classify_heavy(rt: &RootedTree, delta: u64) -> Vec<bool> {
    (0..rt.n()).map(|v| is_heavy(rt.subtree_size(v), delta)).collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("subtree at node {node} has {size} nodes, fewer than the {wanted} requested")]
pub struct SubtreeTooSmall {
    pub node: NodeId,
    pub size: usize,
    pub wanted: usize,
}

/// The first `m` nodes of `T_v` in breadth-first order. Position `i` in the
/// result is the node's 1-based core id minus one, so `v` always gets id 1.
pub fn core_subtree(rt: &RootedTree, v: NodeId, m: usize) -> Result<Vec<NodeId>, SubtreeTooSmall> {
    let size = rt.subtree_size(v);
    if size < m {
        return Err(SubtreeTooSmall { node: v, size, wanted: m });
    }
    let mut out = Vec::with_capacity(m);
    out.push(v);
    let mut i = 0;
    while out.len() < m {
        for &c in rt.children(out[i]) {
            if out.len() == m {
                break;
            }
            out.push(c);
        }
        i += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{root_at, Tree};

    #[test]
    fn thresholds() {
        // Δ=16: 4·size ≥ 5
        assert!(!is_heavy(1, 16));
        assert!(is_heavy(2, 16));
        // Δ=8: 4·size ≥ 4, so everything is heavy
        assert!(is_heavy(1, 8));
        assert!(is_heavy(1, 3));
    }

    #[test]
    fn root_is_heavy() {
        let rt = root_at(&Tree::star(20), 0).unwrap();
        let heavy = classify_heavy(&rt, 20);
        assert!(heavy[0]);
        assert!(heavy[1..].iter().all(|h| !h));
    }

    #[test]
    fn core_prefix() {
        let t = Tree::new(5, [(0, 3), (0, 1), (0, 2), (1, 4)]).unwrap();
        let rt = root_at(&t, 0).unwrap();
        assert_eq!(core_subtree(&rt, 0, 1).unwrap(), vec![0]);
        assert_eq!(core_subtree(&rt, 0, 3).unwrap(), vec![0, 1, 2]);
        assert_eq!(core_subtree(&rt, 0, 5).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(core_subtree(&rt, 1, 3).is_err());
    }
}
