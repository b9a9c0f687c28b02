//! Feasible binary parse trees: enumeration, morphing and random baselines.
//!
//! A tree is *feasible* when the best symbol assignment scores exactly −1
//! without the root bonus. Binary children are slot-tagged: the first child
//! is left, the second right, and a lone child is always left.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::anneal::{accept, CoolingSchedule, DEFAULT_T0, DEFAULT_T_FINAL};
use crate::grammar::{
    harmony, max_harmony_dp_with, Assignment, ChildSlot, GrammarError, GrammarSpec, RootBonus,
    TreeTopology,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("node {0} does not exist")]
    NoSuchNode(usize),
    #[error("node {0} already has two children")]
    Full(usize),
    #[error("node {0} is not a leaf")]
    NotALeaf(usize),
    #[error("the root cannot be deleted")]
    DeleteRoot,
    #[error("no binary tree with {leaves} leaves fits in depth {depth}")]
    Infeasible { leaves: usize, depth: usize },
    #[error("invalid morph config: {0}")]
    Config(String),
    #[error("tree syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("inconsistent tree: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct BNode {
    parent: Option<usize>,
    children: Vec<usize>,
    alive: bool,
}

/// Arena binary tree. Deleted nodes leave tombstones so ids stay stable.
#[derive(Debug, Clone)]
pub struct BinaryTree {
    nodes: Vec<BNode>,
    root: usize,
    leaf_count: usize,
    depth: usize,
}

impl PartialEq for BinaryTree {
    fn eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }
}

impl Eq for BinaryTree {}

impl Default for BinaryTree {
    fn default() -> Self {
        Self::single()
    }
}

impl BinaryTree {
    pub fn single() -> Self {
        Self {
            nodes: vec![BNode {
                parent: None,
                children: Vec::new(),
                alive: true,
            }],
            root: 0,
            leaf_count: 1,
            depth: 0,
        }
    }

    /// Builds from per-node ordered child lists with node 0 as the root.
    pub fn from_children(children: &[Vec<usize>]) -> Result<Self, TreeError> {
        if children.is_empty() {
            return Err(TreeError::Inconsistent("no nodes".into()));
        }
        let mut nodes: Vec<BNode> = children
            .iter()
            .map(|c| BNode {
                parent: None,
                children: c.clone(),
                alive: true,
            })
            .collect();
        for (p, kids) in children.iter().enumerate() {
            if kids.len() > 2 {
                return Err(TreeError::Inconsistent(format!("node {p} has >2 children")));
            }
            for &c in kids {
                if c >= nodes.len() || c == 0 || nodes[c].parent.is_some() {
                    return Err(TreeError::Inconsistent(format!("bad child link {p}->{c}")));
                }
                nodes[c].parent = Some(p);
            }
        }
        let mut t = Self {
            nodes,
            root: 0,
            leaf_count: 0,
            depth: 0,
        };
        t.refresh();
        t.validate()?;
        Ok(t)
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    /// Longest root-to-leaf edge count.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.nodes.get(id).is_some_and(|n| n.alive)
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.nodes[id].parent
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.nodes[id].children.is_empty()
    }

    /// Live node ids in preorder.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.nodes[v].children.iter().rev());
        }
        out
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.preorder()
            .into_iter()
            .filter(|&v| self.is_leaf(v))
            .collect()
    }

    pub fn node_depth(&self, mut id: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[id].parent {
            d += 1;
            id = p;
        }
        d
    }

    fn refresh(&mut self) {
        let mut leaves = 0;
        let mut depth = 0;
        let mut stack = vec![(self.root, 0usize)];
        while let Some((v, d)) = stack.pop() {
            depth = depth.max(d);
            if self.nodes[v].children.is_empty() {
                leaves += 1;
            }
            stack.extend(self.nodes[v].children.iter().map(|&c| (c, d + 1)));
        }
        self.leaf_count = leaves;
        self.depth = depth;
    }

    fn check_live(&self, id: usize) -> Result<(), TreeError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(TreeError::NoSuchNode(id))
        }
    }

    fn push_node(&mut self, parent: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(BNode {
            parent: Some(parent),
            children: Vec::new(),
            alive: true,
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Leaf creation: attaches a new leaf under `parent`.
    pub fn add_leaf(&mut self, parent: usize) -> Result<usize, TreeError> {
        self.check_live(parent)?;
        if self.nodes[parent].children.len() >= 2 {
            return Err(TreeError::Full(parent));
        }
        let id = self.push_node(parent);
        self.refresh();
        Ok(id)
    }

    /// Leaf forking: gives a leaf two new leaf children.
    pub fn fork_leaf(&mut self, leaf: usize) -> Result<[usize; 2], TreeError> {
        self.check_live(leaf)?;
        if !self.is_leaf(leaf) {
            return Err(TreeError::NotALeaf(leaf));
        }
        let a = self.push_node(leaf);
        let b = self.push_node(leaf);
        self.refresh();
        Ok([a, b])
    }

    /// Leaf deletion; a surviving sibling moves into the left slot.
    pub fn delete_leaf(&mut self, leaf: usize) -> Result<usize, TreeError> {
        self.check_live(leaf)?;
        if !self.is_leaf(leaf) {
            return Err(TreeError::NotALeaf(leaf));
        }
        let parent = self.nodes[leaf].parent.ok_or(TreeError::DeleteRoot)?;
        self.nodes[parent].children.retain(|&c| c != leaf);
        self.nodes[leaf].alive = false;
        self.nodes[leaf].parent = None;
        self.refresh();
        Ok(parent)
    }

    /// Checks links, acyclicity, arity and the cached counters.
    pub fn validate(&self) -> Result<(), TreeError> {
        let bad = |m: String| Err(TreeError::Inconsistent(m));
        if !self.contains(self.root) || self.nodes[self.root].parent.is_some() {
            return bad("root missing or has a parent".into());
        }
        let mut seen = HashSet::new();
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                return bad(format!("node {v} reached twice"));
            }
            let n = &self.nodes[v];
            if n.children.len() > 2 {
                return bad(format!("node {v} has {} children", n.children.len()));
            }
            for &c in &n.children {
                if !self.contains(c) || self.nodes[c].parent != Some(v) {
                    return bad(format!("broken link {v}->{c}"));
                }
                stack.push(c);
            }
        }
        if seen.len() != self.node_count() {
            return bad("disconnected live nodes".into());
        }
        let mut fresh = self.clone();
        fresh.refresh();
        if fresh.leaf_count != self.leaf_count || fresh.depth != self.depth {
            return bad("stale leaf count or depth".into());
        }
        Ok(())
    }

    /// Compact topology plus the arena id of each topology node.
    pub fn to_topology(&self) -> (TreeTopology, Vec<usize>) {
        let order = self.preorder();
        let mut index = HashMap::with_capacity(order.len());
        for (i, &v) in order.iter().enumerate() {
            index.insert(v, i);
        }
        let children: Vec<Vec<usize>> = order
            .iter()
            .map(|&v| self.nodes[v].children.iter().map(|c| index[c]).collect())
            .collect();
        let topo = TreeTopology::from_children(&children, 0).expect("arena tree is valid");
        (topo, order)
    }

    /// Copy of the subtree rooted at `id`.
    pub fn subtree(&self, id: usize) -> Result<BinaryTree, TreeError> {
        self.check_live(id)?;
        let mut out = BinaryTree::single();
        let mut stack = vec![(id, 0usize)];
        while let Some((src, dst)) = stack.pop() {
            for &c in &self.nodes[src].children {
                let n = out.push_node(dst);
                stack.push((c, n));
            }
        }
        out.refresh();
        Ok(out)
    }

    /// Unlabeled bracket form, e.g. `*[*[* *]]`.
    pub fn shape(&self) -> String {
        let mut s = String::new();
        self.write_bracket(self.root, &mut s, &|_| "*".to_string());
        s
    }

    fn write_bracket(&self, v: usize, out: &mut String, label: &dyn Fn(usize) -> String) {
        out.push_str(&label(v));
        let kids = &self.nodes[v].children;
        if !kids.is_empty() {
            out.push('[');
            for (i, &c) in kids.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                self.write_bracket(c, out, label);
            }
            out.push(']');
        }
    }

    /// Bracket form labeled by `a` (indexed like [`to_topology`](Self::to_topology)).
    pub fn to_bracket(&self, g: &GrammarSpec, a: &Assignment) -> String {
        let (_, order) = self.to_topology();
        let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut s = String::new();
        self.write_bracket(self.root, &mut s, &|v| {
            g.symbol_name(a.0[pos[&v]]).unwrap_or("?").to_string()
        });
        s
    }
}

/// Immutable symbol-labeled tree with shared subtrees.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledTree(Arc<LabeledNode>);

#[derive(Debug, PartialEq, Eq, Hash)]
struct LabeledNode {
    symbol: u8,
    children: Vec<LabeledTree>,
    leaves: usize,
    depth: usize,
}

impl LabeledTree {
    pub fn leaf(symbol: u8) -> Self {
        Self(Arc::new(LabeledNode {
            symbol,
            children: Vec::new(),
            leaves: 1,
            depth: 0,
        }))
    }

    pub fn node(symbol: u8, children: Vec<LabeledTree>) -> Self {
        if children.is_empty() {
            return Self::leaf(symbol);
        }
        let leaves = children.iter().map(|c| c.0.leaves).sum();
        let depth = 1 + children.iter().map(|c| c.0.depth).max().unwrap_or(0);
        Self(Arc::new(LabeledNode {
            symbol,
            children,
            leaves,
            depth,
        }))
    }

    pub fn symbol(&self) -> u8 {
        self.0.symbol
    }

    pub fn children(&self) -> &[LabeledTree] {
        &self.0.children
    }

    pub fn leaf_count(&self) -> usize {
        self.0.leaves
    }

    pub fn depth(&self) -> usize {
        self.0.depth
    }

    /// Arena tree and preorder assignment.
    pub fn to_tree(&self) -> (BinaryTree, Assignment) {
        let mut tree = BinaryTree::single();
        let mut labels = vec![(0usize, self.symbol())];
        let mut stack = vec![(self.clone(), 0usize)];
        while let Some((src, dst)) = stack.pop() {
            for c in src.children() {
                let id = tree.push_node(dst);
                labels.push((id, c.symbol()));
                stack.push((c.clone(), id));
            }
        }
        tree.refresh();
        let (_, order) = tree.to_topology();
        let by_id: HashMap<usize, u8> = labels.into_iter().collect();
        let a = Assignment(order.iter().map(|v| by_id[v]).collect());
        (tree, a)
    }

    pub fn to_bracket(&self, g: &GrammarSpec) -> String {
        let mut s = String::new();
        self.write(g, &mut s);
        s
    }

    fn write(&self, g: &GrammarSpec, out: &mut String) {
        out.push_str(g.symbol_name(self.symbol()).unwrap_or("?"));
        if !self.children().is_empty() {
            out.push('[');
            for (i, c) in self.children().iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                c.write(g, out);
            }
            out.push(']');
        }
    }

    /// Parses the bracket form, e.g. `S[C[S[B[( )]] S[B[( )]]]]`.
    pub fn parse(text: &str, g: &GrammarSpec) -> Result<Self, TreeError> {
        let raw = parse_bracket(text)?;
        raw.to_labeled(g)
    }
}

/// Parsed bracket expression before symbol lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTree {
    pub label: String,
    pub children: Vec<RawTree>,
}

impl RawTree {
    fn to_labeled(&self, g: &GrammarSpec) -> Result<LabeledTree, TreeError> {
        let sym = g
            .symbol_index(&self.label)
            .ok_or_else(|| GrammarError::UnknownSymbol(self.label.clone()))?;
        let kids = self
            .children
            .iter()
            .map(|c| c.to_labeled(g))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LabeledTree::node(sym, kids))
    }

    /// Shape only; labels are ignored.
    pub fn to_tree(&self) -> BinaryTree {
        let mut tree = BinaryTree::single();
        let mut stack = vec![(self, 0usize)];
        while let Some((src, dst)) = stack.pop() {
            for c in &src.children {
                let id = tree.push_node(dst);
                stack.push((c, id));
            }
        }
        tree.refresh();
        tree
    }
}

/// Parses `label[child child]` with whitespace-separated children.
pub fn parse_bracket(text: &str) -> Result<RawTree, TreeError> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let tree = parse_node(text, bytes, &mut pos)?;
    skip_ws(bytes, &mut pos);
    if pos != bytes.len() {
        return Err(TreeError::Syntax {
            pos,
            msg: "trailing input".into(),
        });
    }
    Ok(tree)
}

fn skip_ws(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
}

fn parse_node(text: &str, bytes: &[u8], pos: &mut usize) -> Result<RawTree, TreeError> {
    skip_ws(bytes, pos);
    let start = *pos;
    while *pos < bytes.len()
        && !bytes[*pos].is_ascii_whitespace()
        && bytes[*pos] != b'['
        && bytes[*pos] != b']'
    {
        *pos += 1;
    }
    if *pos == start {
        return Err(TreeError::Syntax {
            pos: start,
            msg: "expected a label".into(),
        });
    }
    let label = text[start..*pos].to_string();
    let mut children = Vec::new();
    if *pos < bytes.len() && bytes[*pos] == b'[' {
        *pos += 1;
        loop {
            skip_ws(bytes, pos);
            match bytes.get(*pos) {
                Some(b']') => {
                    *pos += 1;
                    break;
                }
                None => {
                    return Err(TreeError::Syntax {
                        pos: *pos,
                        msg: "unclosed '['".into(),
                    })
                }
                _ => children.push(parse_node(text, bytes, pos)?),
            }
        }
        if children.is_empty() || children.len() > 2 {
            return Err(TreeError::Syntax {
                pos: *pos,
                msg: format!("{} children, expected 1 or 2", children.len()),
            });
        }
    }
    Ok(RawTree { label, children })
}

impl fmt::Display for BinaryTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.shape())
    }
}

type EnumCell = OnceLock<Arc<Vec<LabeledTree>>>;

/// Memo table for [`enum_subtrees`], keyed by `(L, D)`. Each key is
/// computed once; concurrent requesters of the same key block on it.
#[derive(Debug, Default)]
pub struct EnumCache {
    cells: Mutex<HashMap<(usize, usize), Arc<EnumCell>>>,
}

impl EnumCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cells.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cell(&self, key: (usize, usize)) -> Arc<OnceLock<Arc<Vec<LabeledTree>>>> {
        self.cells
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_default()
            .clone()
    }
}

/// Subtree Harmony of a labeled candidate whose children each score −1.
fn candidate_harmony(g: &GrammarSpec, root: u8, kids: &[&LabeledTree]) -> f64 {
    let mut h = g.unary(root);
    for (i, c) in kids.iter().enumerate() {
        let slot = if i == 0 {
            ChildSlot::Left
        } else {
            ChildSlot::Right
        };
        h += g.bonus(slot, root, c.symbol()) - 1.0;
    }
    h
}

/// All labeled trees with `leaves` leaves, every leaf at depth exactly
/// `depth`, and subtree Harmony exactly −1.
///
/// At depth 0 the answer is the single nodes scoring −1. Deeper trees put
/// any symbol over one child from `(L, D−1)` or over two children from
/// every split `(l, D−1)`, `(L−l, D−1)`, keeping candidates that score −1.
pub fn enum_subtrees(
    leaves: usize,
    depth: usize,
    g: &GrammarSpec,
    cache: &EnumCache,
) -> Arc<Vec<LabeledTree>> {
    if leaves == 0 {
        return Arc::new(Vec::new());
    }
    let cell = cache.cell((leaves, depth));
    cell.get_or_init(|| Arc::new(compute_subtrees(leaves, depth, g, cache)))
        .clone()
}

fn compute_subtrees(leaves: usize, depth: usize, g: &GrammarSpec, cache: &EnumCache) -> Vec<LabeledTree> {
    let k = g.symbol_count() as u8;
    let mut out = Vec::new();
    if depth == 0 {
        if leaves == 1 {
            for s in 1..=k {
                if g.unary(s) == -1.0 {
                    out.push(LabeledTree::leaf(s));
                }
            }
        }
        return out;
    }
    let below = enum_subtrees(leaves, depth - 1, g, cache);
    for t in below.iter() {
        for s in 1..=k {
            if candidate_harmony(g, s, &[t]) == -1.0 {
                out.push(LabeledTree::node(s, vec![t.clone()]));
            }
        }
    }
    for l in 1..leaves {
        let left = enum_subtrees(l, depth - 1, g, cache);
        if left.is_empty() {
            continue;
        }
        let right = enum_subtrees(leaves - l, depth - 1, g, cache);
        for t1 in left.iter() {
            for t2 in right.iter() {
                for s in 1..=k {
                    if candidate_harmony(g, s, &[t1, t2]) == -1.0 {
                        out.push(LabeledTree::node(s, vec![t1.clone(), t2.clone()]));
                    }
                }
            }
        }
    }
    out
}

/// Result of the feasibility oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Best subtree Harmony (no root bonus).
    pub max_harmony: f64,
    /// Attaining assignment in [`BinaryTree::to_topology`] order.
    pub assignment: Assignment,
}

/// Exact feasibility: the subtree maximum without root bonus equals −1.
pub fn is_feasible(t: &BinaryTree, g: &GrammarSpec) -> Feasibility {
    let (topo, _) = t.to_topology();
    let (h, a) = max_harmony_dp_with(g, &topo, RootBonus::Exclude);
    Feasibility {
        feasible: h == -1.0,
        max_harmony: h,
        assignment: a,
    }
}

/// Full-tree variant: grammatical iff the maximum with root bonus is 0.
pub fn is_grammatical(t: &BinaryTree, g: &GrammarSpec) -> (bool, Assignment) {
    let (topo, _) = t.to_topology();
    let (h, a) = max_harmony_dp_with(g, &topo, RootBonus::Include);
    (h == 0.0, a)
}

/// Harmony of a labeled tree under `g`, with or without the root bonus.
pub fn labeled_harmony(t: &LabeledTree, g: &GrammarSpec, root: RootBonus) -> f64 {
    let (tree, a) = t.to_tree();
    let (topo, _) = tree.to_topology();
    let h = harmony(g, &topo, &a).expect("labels come from the grammar");
    match root {
        RootBonus::Include => h,
        RootBonus::Exclude => h - g.root_bonus(t.symbol()),
    }
}

pub const DEFAULT_TABU_WINDOW: usize = 3;
pub const DEFAULT_MORPH_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct MorphConfig {
    pub leaves: usize,
    pub max_depth: usize,
    /// Proposals per temperature step.
    pub max_up: usize,
    pub schedule: CoolingSchedule,
    /// A move accepted at proposal `i` cannot be reversed by proposals
    /// `i+1 ..= i+tabu_window`.
    pub tabu_window: usize,
    pub seed: u64,
}

impl MorphConfig {
    /// Default budget: 100 temperature steps of `10 L` proposals, geometric
    /// cooling 2.0 → 0.05, tabu window 3.
    pub fn new(leaves: usize, max_depth: usize, seed: u64) -> Self {
        Self {
            leaves,
            max_depth,
            max_up: 10 * leaves.max(1),
            schedule: CoolingSchedule::geometric_to(DEFAULT_T0, DEFAULT_T_FINAL, DEFAULT_MORPH_STEPS)
                .expect("default schedule is valid"),
            tabu_window: DEFAULT_TABU_WINDOW,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), TreeError> {
        if self.leaves == 0 {
            return Err(TreeError::Config("leaf count must be at least 1".into()));
        }
        if (self.max_depth as f64) <= (self.leaves as f64).log2() {
            return Err(TreeError::Config(format!(
                "depth {} must exceed log2({})",
                self.max_depth, self.leaves
            )));
        }
        if self.max_up == 0 {
            return Err(TreeError::Config("max_up must be at least 1".into()));
        }
        self.schedule
            .validate()
            .map_err(|e| TreeError::Config(e.to_string()))
    }

    pub fn budget(&self) -> u64 {
        (self.schedule.steps() * self.max_up) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Fork,
    AddChild,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    Accepted,
    /// Would exceed the depth limit.
    TooDeep,
    /// Lost the Metropolis draw.
    Rejected,
    /// Every candidate was tabu or none existed.
    NoCandidate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoveRecord {
    pub kind: Option<MoveKind>,
    /// Leaf forked, parent given a child, or parent of the deleted leaf.
    pub site: Option<usize>,
    pub created: Vec<usize>,
    pub deleted: Option<usize>,
    pub outcome: MoveOutcome,
    pub harmony: f64,
}

#[derive(Debug, Clone)]
pub struct MorphResult {
    pub tree: BinaryTree,
    pub assignment: Assignment,
    pub harmony: f64,
    /// Proposals made, including rejected ones.
    pub move_count: u64,
    pub converged: bool,
    pub trace: Vec<MoveRecord>,
}

#[derive(Default)]
struct Tabu {
    window: u64,
    /// Per accepted move: proposal index, site that lost a leaf, leaves created.
    recent: VecDeque<(u64, Option<usize>, Vec<usize>)>,
}

impl Tabu {
    fn expire(&mut self, now: u64) {
        while self
            .recent
            .front()
            .is_some_and(|(at, _, _)| now - at > self.window)
        {
            self.recent.pop_front();
        }
    }

    fn site_blocked(&self, site: usize) -> bool {
        self.recent.iter().any(|(_, s, _)| *s == Some(site))
    }

    fn leaf_blocked(&self, leaf: usize) -> bool {
        self.recent.iter().any(|(_, _, c)| c.contains(&leaf))
    }

    fn push(&mut self, at: u64, deleted_site: Option<usize>, created: Vec<usize>) {
        if self.window > 0 {
            self.recent.push_back((at, deleted_site, created));
        }
    }
}

/// Annealed morphing towards a feasible tree.
///
/// Below `L` leaves each proposal is additive (fork a leaf, or give a
/// one-child node a second child, the kind chosen uniformly among those
/// with candidates); otherwise it deletes a leaf. Proposals deeper than
/// `D` are rejected. The score is the DP maximum without root bonus, and
/// the walk stops at the first feasible tree. If the budget runs out the
/// best tree seen is returned with `converged == false`.
pub fn morph_tree(t0: &BinaryTree, cfg: &MorphConfig, g: &GrammarSpec) -> Result<MorphResult, TreeError> {
    cfg.validate()?;
    t0.validate()?;
    if t0.depth() > cfg.max_depth {
        return Err(TreeError::Config(format!(
            "initial depth {} exceeds {}",
            t0.depth(),
            cfg.max_depth
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tree = t0.clone();
    let first = is_feasible(&tree, g);
    let mut h = first.max_harmony;
    let mut best = (tree.clone(), first.assignment.clone(), h);
    let mut trace = Vec::new();
    if first.feasible {
        return Ok(MorphResult {
            tree,
            assignment: first.assignment,
            harmony: h,
            move_count: 0,
            converged: true,
            trace,
        });
    }
    let mut tabu = Tabu {
        window: cfg.tabu_window as u64,
        ..Tabu::default()
    };
    let mut moves = 0u64;
    for temp in cfg.schedule.temperatures() {
        let beta = 1.0 / temp;
        for _ in 0..cfg.max_up {
            moves += 1;
            tabu.expire(moves);
            let Some((kind, site)) = pick_move(&tree, cfg.leaves, &tabu, &mut rng) else {
                trace.push(MoveRecord {
                    kind: None,
                    site: None,
                    created: Vec::new(),
                    deleted: None,
                    outcome: MoveOutcome::NoCandidate,
                    harmony: h,
                });
                continue;
            };
            let mut next = tree.clone();
            let (created, deleted, site_after) = match kind {
                MoveKind::Fork => (next.fork_leaf(site)?.to_vec(), None, site),
                MoveKind::AddChild => (vec![next.add_leaf(site)?], None, site),
                MoveKind::Delete => {
                    let parent = next.delete_leaf(site)?;
                    (Vec::new(), Some(site), parent)
                }
            };
            let mut record = MoveRecord {
                kind: Some(kind),
                site: Some(site_after),
                created: created.clone(),
                deleted,
                outcome: MoveOutcome::TooDeep,
                harmony: h,
            };
            if next.depth() > cfg.max_depth {
                trace.push(record);
                continue;
            }
            let f = is_feasible(&next, g);
            if accept(f.max_harmony - h, beta, &mut rng) {
                tree = next;
                h = f.max_harmony;
                record.outcome = MoveOutcome::Accepted;
                record.harmony = h;
                trace.push(record);
                tabu.push(moves, deleted.map(|_| site_after), created);
                if h > best.2 {
                    best = (tree.clone(), f.assignment.clone(), h);
                }
                if f.feasible {
                    return Ok(MorphResult {
                        tree,
                        assignment: f.assignment,
                        harmony: h,
                        move_count: moves,
                        converged: true,
                        trace,
                    });
                }
            } else {
                record.outcome = MoveOutcome::Rejected;
                trace.push(record);
            }
        }
    }
    Ok(MorphResult {
        tree: best.0,
        assignment: best.1,
        harmony: best.2,
        move_count: moves,
        converged: false,
        trace,
    })
}

fn pick_move<R: Rng + ?Sized>(
    tree: &BinaryTree,
    target_leaves: usize,
    tabu: &Tabu,
    rng: &mut R,
) -> Option<(MoveKind, usize)> {
    let order = tree.preorder();
    if tree.leaf_count() < target_leaves {
        let forks: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&v| tree.is_leaf(v) && !tabu.site_blocked(v))
            .collect();
        let adds: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&v| tree.children(v).len() == 1 && !tabu.site_blocked(v))
            .collect();
        let kinds: Vec<(MoveKind, &Vec<usize>)> = [(MoveKind::Fork, &forks), (MoveKind::AddChild, &adds)]
            .into_iter()
            .filter(|(_, c)| !c.is_empty())
            .collect();
        if kinds.is_empty() {
            return None;
        }
        let (kind, cands) = kinds[rng.random_range(0..kinds.len())];
        Some((kind, cands[rng.random_range(0..cands.len())]))
    } else {
        let dels: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&v| v != tree.root() && tree.is_leaf(v) && !tabu.leaf_blocked(v))
            .collect();
        if dels.is_empty() {
            return None;
        }
        Some((MoveKind::Delete, dels[rng.random_range(0..dels.len())]))
    }
}

/// Smallest depth that can hold `leaves` leaves.
pub fn min_depth(leaves: usize) -> usize {
    let mut d = 0;
    while (1usize << d) < leaves {
        d += 1;
    }
    d
}

/// Number of distinct shapes with exactly `l` leaves and depth at most
/// `d`, for all `l <= leaves`, `d <= depth`, as `table[l][d]`.
///
/// Counts grow very fast with depth, so they are kept as `f64`; only
/// their ratios are used.
pub fn shape_counts(leaves: usize, depth: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![0.0f64; depth + 1]; leaves + 1];
    for d in 0..=depth {
        for l in 1..=leaves {
            let mut n = if l == 1 { 1.0 } else { 0.0 };
            if d > 0 {
                n += c[l][d - 1];
                for a in 1..l {
                    n += c[a][d - 1] * c[l - a][d - 1];
                }
            }
            c[l][d] = n;
        }
    }
    c
}

/// Uniform sample over all shapes with exactly `leaves` leaves and depth
/// at most `max_depth`.
pub fn random_binary_tree_with<R: Rng + ?Sized>(
    leaves: usize,
    max_depth: usize,
    rng: &mut R,
) -> Result<BinaryTree, TreeError> {
    if leaves == 0 || max_depth < min_depth(leaves) {
        return Err(TreeError::Infeasible {
            leaves,
            depth: max_depth,
        });
    }
    let counts = shape_counts(leaves, max_depth);
    let mut t = BinaryTree::single();
    let mut stack = vec![(t.root, leaves, max_depth)];
    while let Some((node, l, d)) = stack.pop() {
        let mut r = rng.random::<f64>() * counts[l][d];
        if l == 1 {
            if r < 1.0 || d == 0 {
                continue;
            }
            r -= 1.0;
        }
        let unary = counts[l][d - 1];
        if r < unary || l == 1 {
            let c = t.push_node(node);
            stack.push((c, l, d - 1));
            continue;
        }
        r -= unary;
        let mut split = 0;
        for a in 1..l {
            let w = counts[a][d - 1] * counts[l - a][d - 1];
            if w > 0.0 {
                split = a;
                if r < w {
                    break;
                }
                r -= w;
            }
        }
        let left = t.push_node(node);
        let right = t.push_node(node);
        stack.push((right, l - split, d - 1));
        stack.push((left, split, d - 1));
    }
    t.refresh();
    Ok(t)
}

pub fn random_binary_tree(leaves: usize, max_depth: usize, seed: u64) -> Result<BinaryTree, TreeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_binary_tree_with(leaves, max_depth, &mut rng)
}

/// Fraction of `samples` random trees that are feasible.
pub fn feasibility_rate(
    leaves: usize,
    max_depth: usize,
    samples: usize,
    seed: u64,
    g: &GrammarSpec,
) -> Result<f64, TreeError> {
    if samples == 0 {
        return Err(TreeError::Config("samples must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let t = random_binary_tree_with(leaves, max_depth, &mut rng)?;
        if is_feasible(&t, g).feasible {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}
