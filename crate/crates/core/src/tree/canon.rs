//! AHU canonical forms for rooted trees.
//!
//! A leaf is `01`; an internal node is `0`, then its children's forms in
//! ascending lexicographic order, then `1`. Two rooted trees have equal forms
//! iff they are rooted-isomorphic, and a `k`-node tree has a `2k`-bit form.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::{NodeId, RootedTree, Tree, TreeError};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm(Arc<str>);

impl CanonicalForm {
    pub fn leaf() -> Self {
        CanonicalForm(Arc::from("01"))
    }

    /// Form of a node whose children have the given forms (in any order).
    pub fn from_children<'a, I>(children: I) -> Self
    where
        I: IntoIterator<Item = &'a CanonicalForm>,
    {
        let mut kids: Vec<&str> = children.into_iter().map(|c| c.as_str()).collect();
        kids.sort_unstable();
        let len = 2 + kids.iter().map(|k| k.len()).sum::<usize>();
        let mut s = String::with_capacity(len);
        s.push('0');
        for k in kids {
            s.push_str(k);
        }
        s.push('1');
        CanonicalForm(Arc::from(s))
    }

    /// Parses a bit string, checking that it is a well-formed form.
    pub fn parse(s: &str) -> Result<Self, TreeError> {
        let form = CanonicalForm(Arc::from(s));
        form.to_tree()?;
        Ok(form)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Bit length, always twice the node count.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.0.len() / 2
    }

    /// Builds a tree with ids in preorder (root is 0).
    pub fn to_tree(&self) -> Result<Tree, TreeError> {
        let bad = || TreeError::Parse(format!("malformed canonical form `{}`", self.0));
        let bytes = self.0.as_bytes();
        if bytes.len() < 2 || bytes[0] != b'0' {
            return Err(bad());
        }
        let mut stack: Vec<NodeId> = Vec::new();
        let mut edges = Vec::new();
        let mut next = 0;
        for (i, &b) in bytes.iter().enumerate() {
            match b {
                b'0' => {
                    if stack.is_empty() && i != 0 {
                        return Err(bad());
                    }
                    if let Some(&p) = stack.last() {
                        edges.push((p, next));
                    }
                    stack.push(next);
                    next += 1;
                }
                b'1' => {
                    stack.pop().ok_or_else(bad)?;
                }
                _ => return Err(bad()),
            }
        }
        if !stack.is_empty() {
            return Err(bad());
        }
        Tree::new(next, edges)
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalForm({})", self.0)
    }
}

/// Forms of every rooted subtree, indexed by node id.
pub fn ahu_all(rt: &RootedTree) -> Vec<CanonicalForm> {
    let mut forms: Vec<Option<CanonicalForm>> = vec![None; rt.n()];
    for &v in rt.bfs_order().iter().rev() {
        let f = CanonicalForm::from_children(rt.children(v).iter().map(|c| forms[*c].as_ref().unwrap()));
        forms[v] = Some(f);
    }
    forms.into_iter().map(Option::unwrap).collect()
}

/// Form of the subtree `T_v` of `rt`.
pub fn ahu(rt: &RootedTree, v: NodeId) -> Result<CanonicalForm, TreeError> {
    if v >= rt.n() {
        return Err(TreeError::UnknownNode(v));
    }
    let order = rt.subtree_bfs(v);
    let mut forms: HashMap<NodeId, CanonicalForm> = Default::default();
    for &u in order.iter().rev() {
        let f = CanonicalForm::from_children(rt.children(u).iter().map(|c| &forms[c]));
        forms.insert(u, f);
    }
    Ok(forms.remove(&v).unwrap())
}

/// True iff some isomorphism `T → T_out` maps `v` to `v_out`.
pub fn placement_valid(tree: &Tree, v: NodeId, tree_out: &Tree, v_out: NodeId) -> bool {
    if !tree.contains(v) || !tree_out.contains(v_out) || tree.n() != tree_out.n() {
        return false;
    }
    let a = RootedTree::new(tree.clone(), v).unwrap();
    let b = RootedTree::new(tree_out.clone(), v_out).unwrap();
    ahu(&a, v).unwrap() == ahu(&b, v_out).unwrap()
}

/// Integer ids for rooted shapes. Trees classified through the same
/// interner get comparable ids: equal id iff rooted-isomorphic.
#[derive(Debug, Default)]
pub struct ShapeInterner {
    ids: HashMap<Vec<u32>, u32>,
}

impl ShapeInterner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Id of a node whose children have the given ids (any order).
    pub fn class(&mut self, mut kids: Vec<u32>) -> u32 {
        kids.sort_unstable();
        let next = self.ids.len() as u32;
        *self.ids.entry(kids).or_insert(next)
    }

    /// Id of `tree` rooted at each of its nodes, by rerooting.
    pub fn all_roots(&mut self, tree: &Tree) -> Vec<u32> {
        let rt = RootedTree::new(tree.clone(), 0).expect("node 0 exists");
        let n = tree.n();
        let mut down = vec![0u32; n];
        for &v in rt.bfs_order().iter().rev() {
            down[v] = self.class(rt.children(v).iter().map(|&c| down[c]).collect());
        }
        let mut up: Vec<Option<u32>> = vec![None; n];
        let mut full = vec![0u32; n];
        for &v in rt.bfs_order() {
            let mut around: Vec<u32> = rt.children(v).iter().map(|&c| down[c]).collect();
            around.extend(up[v]);
            around.sort_unstable();
            full[v] = self.class(around.clone());
            // children with equal subtree ids see the same rest of the tree
            let mut memo: HashMap<u32, u32> = HashMap::new();
            for &c in rt.children(v) {
                let id = *memo.entry(down[c]).or_insert_with(|| {
                    let mut rest = around.clone();
                    let pos = rest.binary_search(&down[c]).expect("child id is present");
                    rest.remove(pos);
                    self.class(rest)
                });
                up[c] = Some(id);
            }
        }
        full
    }
}

/// Unrooted isomorphism: some rooting of `a` matches a rooting of `b`.
pub fn isomorphic(a: &Tree, b: &Tree) -> bool {
    if a.n() != b.n() {
        return false;
    }
    let mut interner = ShapeInterner::new();
    let from_a = interner.all_roots(a)[0];
    interner.all_roots(b).contains(&from_a)
}

type EdgeKey<'a> = (usize, &'a [(NodeId, NodeId)]);

/// `placement_valid` for every node at once; `outputs[v]` is node `v`'s
/// claimed `(tree, node)`. Each distinct output tree is classified once, so
/// nodes that build equal copies independently stay cheap.
pub fn placements_valid(tree: &Tree, outputs: &[(&Tree, NodeId)]) -> Vec<bool> {
    let mut interner = ShapeInterner::new();
    let own = interner.all_roots(tree);
    let mut by_ptr: HashMap<*const Tree, usize> = HashMap::new();
    let mut by_edges: HashMap<EdgeKey, usize> = HashMap::new();
    let mut classes: Vec<Vec<u32>> = Vec::new();
    outputs
        .iter()
        .enumerate()
        .map(|(v, &(out, v_out))| {
            if out.n() != tree.n() || !out.contains(v_out) || v >= tree.n() {
                return false;
            }
            let slot = *by_ptr.entry(out as *const Tree).or_insert_with(|| {
                *by_edges.entry((out.n(), out.edges())).or_insert_with(|| {
                    classes.push(interner.all_roots(out));
                    classes.len() - 1
                })
            });
            classes[slot][v_out] == own[v]
        })
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlaceError {
    #[error("placement chain is empty")]
    EmptyChain,
    #[error("chain head does not match the tree's root form")]
    RootMismatch,
    #[error("no child matches the chain at depth {0}")]
    NoMatch(usize),
}

/// A rooted tree with precomputed subtree forms, shared by every node that
/// places itself in the same recognized topology.
#[derive(Debug)]
pub struct ShapeIndex {
    rooted: RootedTree,
    forms: Vec<CanonicalForm>,
}

impl ShapeIndex {
    pub fn new(rooted: RootedTree) -> Self {
        let forms = ahu_all(&rooted);
        ShapeIndex { rooted, forms }
    }

    pub fn from_form(form: &CanonicalForm) -> Result<Self, TreeError> {
        Ok(Self::new(RootedTree::new(form.to_tree()?, 0)?))
    }

    pub fn tree(&self) -> &Tree {
        self.rooted.base()
    }

    pub fn rooted(&self) -> &RootedTree {
        &self.rooted
    }

    pub fn form(&self, v: NodeId) -> &CanonicalForm {
        &self.forms[v]
    }

    /// Walks down from the root following the chain of subtree forms
    /// (root first, own subtree last), taking the smallest matching child id
    /// at each step.
    pub fn place(&self, chain: &[CanonicalForm]) -> Result<NodeId, PlaceError> {
        let (head, rest) = chain.split_first().ok_or(PlaceError::EmptyChain)?;
        let mut cur = self.rooted.root();
        if head != &self.forms[cur] {
            return Err(PlaceError::RootMismatch);
        }
        for (depth, want) in rest.iter().enumerate() {
            cur = *self
                .rooted
                .children(cur)
                .iter()
                .find(|&&c| &self.forms[c] == want)
                .ok_or(PlaceError::NoMatch(depth + 1))?;
        }
        Ok(cur)
    }
}
