//! Undirected trees, rooting, centers, and the line-oriented tree file format.

mod canon;
mod enumerate;
mod heavy;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use canon::{
    ahu, ahu_all, isomorphic, placement_valid, placements_valid, CanonicalForm, PlaceError, ShapeIndex, ShapeInterner,
};
pub use enumerate::{enumerate_rooted_trees, index_in_sequence, NotInSequence, RootedTreeSequence};
pub use heavy::{classify_heavy, core_subtree, heavy_threshold, is_heavy, SubtreeTooSmall};

pub type NodeId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("a tree needs at least one node")]
    Empty,
    #[error("expected {expected} edges for {n} nodes, got {got}")]
    EdgeCount { n: usize, expected: usize, got: usize },
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(NodeId, NodeId, usize),
    #[error("self loop at node {0}")]
    SelfLoop(NodeId),
    #[error("edge set contains a cycle or duplicate edge at ({0}, {1})")]
    Cycle(NodeId, NodeId),
    #[error("graph is not connected")]
    Disconnected,
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("tree file: {0}")]
    Parse(String),
}

/// An undirected tree over the contiguous ids `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Tree {
    adj: Vec<Vec<NodeId>>,
    edges: Vec<(NodeId, NodeId)>,
}

/// Result of [`Tree::center`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Center {
    Node(NodeId),
    /// Endpoints in ascending id order.
    Edge(NodeId, NodeId),
}

impl Tree {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self, TreeError> {
        if n == 0 {
            return Err(TreeError::Empty);
        }
        let edges: Vec<(NodeId, NodeId)> = edges.into_iter().collect();
        if edges.len() != n - 1 {
            return Err(TreeError::EdgeCount { n, expected: n - 1, got: edges.len() });
        }
        // union-find rejects cycles and duplicates in one pass
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        let mut adj = vec![Vec::new(); n];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(TreeError::NodeOutOfRange(u, v, n));
            }
            if u == v {
                return Err(TreeError::SelfLoop(u));
            }
            let (ru, rv) = (find(&mut uf, u), find(&mut uf, v));
            if ru == rv {
                return Err(TreeError::Cycle(u, v));
            }
            uf[ru] = rv;
            adj[u].push(v);
            adj[v].push(u);
            normalized.push((u.min(v), u.max(v)));
        }
        // n-1 acyclic edges over n nodes is always connected, but keep the check explicit
        let root = find(&mut uf, 0);
        if (0..n).any(|v| find(&mut uf, v) != root) {
            return Err(TreeError::Disconnected);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        normalized.sort_unstable();
        Ok(Tree { adj, edges: normalized })
    }

    /// The line `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        Tree::new(n, (1..n).map(|v| (v - 1, v))).expect("path is a tree")
    }

    /// A star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        Tree::new(leaves + 1, (1..=leaves).map(|v| (0, v))).expect("star is a tree")
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Edges as `(min, max)` pairs in ascending order.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v < self.n()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn distances_from(&self, src: NodeId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    fn farthest(&self, src: NodeId) -> (NodeId, Vec<usize>) {
        let dist = self.distances_from(src);
        // smallest id among the farthest nodes
        let far = (0..self.n()).max_by_key(|&v| (dist[v], std::cmp::Reverse(v))).unwrap();
        (far, dist)
    }

    pub fn diameter(&self) -> usize {
        let (a, _) = self.farthest(0);
        let (b, dist) = self.farthest(a);
        dist[b]
    }

    /// The path between two nodes, inclusive of both endpoints.
    pub fn path_between(&self, from: NodeId, to: NodeId) -> Vec<NodeId> {
        let rooted = RootedTree::new(self.clone(), to).expect("node in tree");
        let mut path = vec![from];
        let mut cur = from;
        while let Some(p) = rooted.parent(cur) {
            path.push(p);
            cur = p;
        }
        path
    }

    /// Middle node (even diameter) or middle edge (odd diameter) of every longest path.
    pub fn center(&self) -> Center {
        let (a, _) = self.farthest(0);
        let (b, dist) = self.farthest(a);
        let d = dist[b];
        let path = self.path_between(b, a);
        debug_assert_eq!(path.len(), d + 1);
        if d % 2 == 0 {
            Center::Node(path[d / 2])
        } else {
            let (u, v) = (path[d / 2], path[d / 2 + 1]);
            Center::Edge(u.min(v), u.max(v))
        }
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tree").field("n", &self.n()).field("edges", &self.edges).finish()
    }
}

/// Writes the `tree <n>` header followed by one `u v` line per edge.
impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tree {}", self.n())?;
        for (u, v) in &self.edges {
            writeln!(f, "{u} {v}")?;
        }
        Ok(())
    }
}

impl FromStr for Tree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| TreeError::Parse("missing header".into()))?;
        let n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["tree", n] => n.parse::<usize>().map_err(|e| TreeError::Parse(format!("bad node count: {e}")))?,
            _ => return Err(TreeError::Parse(format!("expected `tree <n>`, got `{header}`"))),
        };
        let mut edges = Vec::new();
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [u, v] = parts.as_slice() else {
                return Err(TreeError::Parse(format!("expected `<u> <v>`, got `{line}`")));
            };
            let parse = |t: &str| t.parse::<usize>().map_err(|e| TreeError::Parse(format!("bad node id `{t}`: {e}")));
            edges.push((parse(u)?, parse(v)?));
        }
        Tree::new(n, edges)
    }
}

/// A tree rooted at a chosen node, with children in ascending id order.
#[derive(Clone, Debug)]
pub struct RootedTree {
    base: Tree,
    root: NodeId,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    level: Vec<usize>,
    subtree_size: Vec<usize>,
    bfs: Vec<NodeId>,
    height: usize,
}

impl RootedTree {
    pub fn new(base: Tree, root: NodeId) -> Result<Self, TreeError> {
        if !base.contains(root) {
            return Err(TreeError::UnknownNode(root));
        }
        let n = base.n();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut level = vec![0; n];
        let mut seen = vec![false; n];
        let mut bfs = Vec::with_capacity(n);
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            bfs.push(u);
            for &w in base.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    level[w] = level[u] + 1;
                    children[u].push(w);
                    queue.push_back(w);
                }
            }
        }
        let mut subtree_size = vec![1; n];
        for &u in bfs.iter().rev() {
            if let Some(p) = parent[u] {
                subtree_size[p] += subtree_size[u];
            }
        }
        let height = level.iter().copied().max().unwrap_or(0);
        Ok(RootedTree { base, root, parent, children, level, subtree_size, bfs, height })
    }

    pub fn base(&self) -> &Tree {
        &self.base
    }
    pub fn n(&self) -> usize {
        self.base.n()
    }
    pub fn root(&self) -> NodeId {
        self.root
    }
    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }
    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }
    pub fn level(&self, v: NodeId) -> usize {
        self.level[v]
    }
    pub fn subtree_size(&self, v: NodeId) -> usize {
        self.subtree_size[v]
    }
    pub fn height(&self) -> usize {
        self.height
    }
    /// Breadth-first order from the root, children visited in ascending id order.
    pub fn bfs_order(&self) -> &[NodeId] {
        &self.bfs
    }
    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children[v].is_empty()
    }

    /// Nodes of `T_v` in breadth-first order starting at `v`.
    pub fn subtree_bfs(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = vec![v];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.children[out[i]]);
            i += 1;
        }
        out
    }
}

pub fn root_at(tree: &Tree, r: NodeId) -> Result<RootedTree, TreeError> {
    RootedTree::new(tree.clone(), r)
}

/// `⌊log₂ x⌋` for `x ≥ 1`.
pub fn floor_log2(x: u64) -> u32 {
    assert!(x > 0, "log of zero");
    63 - x.leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_input() {
        assert_eq!(Tree::new(0, []), Err(TreeError::Empty));
        assert!(matches!(Tree::new(3, [(0, 1)]), Err(TreeError::EdgeCount { .. })));
        assert!(matches!(Tree::new(3, [(0, 1), (1, 0)]), Err(TreeError::Cycle(..))));
        assert!(matches!(Tree::new(3, [(0, 1), (1, 3)]), Err(TreeError::NodeOutOfRange(..))));
        assert!(matches!(Tree::new(2, [(1, 1)]), Err(TreeError::SelfLoop(1))));
        assert!(Tree::new(1, []).is_ok());
    }

    #[test]
    fn parser_rejects_cycles_and_disconnection() {
        assert!("tree 4\n0 1\n1 2\n2 0\n".parse::<Tree>().is_err());
        assert!("tree 4\n0 1\n2 3\n".parse::<Tree>().is_err());
        assert!("graph 2\n0 1\n".parse::<Tree>().is_err());
        let t: Tree = "tree 3\n0 1\n# comment\n1 2\n".parse().unwrap();
        assert_eq!(t.to_string().parse::<Tree>().unwrap(), t);
    }

    #[test]
    fn centers() {
        assert_eq!(Tree::path(5).center(), Center::Node(2));
        assert_eq!(Tree::path(4).center(), Center::Edge(1, 2));
        assert_eq!(Tree::star(4).center(), Center::Node(0));
        assert_eq!(Tree::path(1).center(), Center::Node(0));
        assert_eq!(Tree::path(2).center(), Center::Edge(0, 1));
    }

    #[test]
    fn rooting() {
        let rt = root_at(&Tree::path(3), 1).unwrap();
        assert_eq!(rt.children(1), &[0, 2]);
        assert_eq!(rt.height(), 1);

        let single = root_at(&Tree::path(1), 0).unwrap();
        assert_eq!(single.height(), 0);
        assert_eq!(single.subtree_size(0), 1);

        let rt = root_at(&Tree::path(3), 0).unwrap();
        assert_eq!((0..3).map(|v| rt.level(v)).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(rt.height(), 2);
        assert_eq!(rt.subtree_size(0), 3);
        assert!(root_at(&Tree::path(3), 7).is_err());
    }

    #[test]
    fn diameter_and_degree() {
        let t = Tree::new(6, [(0, 1), (1, 2), (2, 3), (1, 4), (4, 5)]).unwrap();
        assert_eq!(t.diameter(), 4);
        assert_eq!(t.max_degree(), 3);
        assert_eq!(floor_log2(1), 0);
        assert_eq!(floor_log2(16), 4);
        assert_eq!(floor_log2(17), 4);
    }
}
