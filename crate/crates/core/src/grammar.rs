//! Classical Harmony functions over tree topologies.
//!
//! A [`GrammarSpec`] assigns every symbol a unary Harmony and rewards
//! parent/child pairs that match a generative rule. Rules are keyed by the
//! child's slot (left, center or right) so the same evaluator covers the
//! ternary herring-bone trees of the `A^n . B^n` grammar and the binary
//! parse trees of the balanced-parentheses grammar.
//!
//! Symbol index `0` is the empty filler: it scores `empty_penalty` and
//! matches no rule.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrammarError {
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("symbol index {index} not in grammar ({symbols} symbols)")]
    SymbolOutOfRange { index: usize, symbols: usize },
    #[error("assignment has {got} entries, topology has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("node {node} out of range ({nodes} nodes)")]
    NodeOutOfRange { node: usize, nodes: usize },
    #[error("non-finite harmony value {0}")]
    NonFinite(f64),
    #[error("duplicate symbol {0:?}")]
    DuplicateSymbol(String),
    #[error("grammar has no symbols")]
    NoSymbols,
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("herring-bone depth must be at least 1")]
    ZeroDepth,
    #[error("grammar file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Position of a node under its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChildSlot {
    Root,
    Left,
    Center,
    Right,
}

impl ChildSlot {
    fn rule_index(self) -> Option<usize> {
        match self {
            ChildSlot::Root => None,
            ChildSlot::Left => Some(0),
            ChildSlot::Center => Some(1),
            ChildSlot::Right => Some(2),
        }
    }

    fn section(self) -> &'static str {
        match self {
            ChildSlot::Left => "LEFT_RULES",
            ChildSlot::Center => "CENTER_RULES",
            ChildSlot::Right => "RIGHT_RULES",
            ChildSlot::Root => "ROOT_BONUS",
        }
    }
}

const RULE_SLOTS: [ChildSlot; 3] = [ChildSlot::Left, ChildSlot::Center, ChildSlot::Right];

/// Unary harmonies, slot-keyed rule bonuses and root bonuses.
#[derive(Debug, Clone, PartialEq)]
pub struct GrammarSpec {
    symbols: Vec<String>,
    unary: Vec<f64>,
    /// `rules[slot][parent * width + child]`, width = symbols + 1.
    rules: [Vec<f64>; 3],
    root_bonus: Vec<f64>,
    empty_penalty: f64,
}

impl GrammarSpec {
    /// Declares symbols with their unary harmonies; all bonuses start at 0.
    pub fn new<S: AsRef<str>>(symbols: &[(S, f64)]) -> Result<Self, GrammarError> {
        if symbols.is_empty() {
            return Err(GrammarError::NoSymbols);
        }
        let mut names: Vec<String> = Vec::with_capacity(symbols.len());
        let mut unary = vec![0.0];
        for (name, h) in symbols {
            let name = name.as_ref().to_string();
            if names.contains(&name) || name == crate::fock::EMPTY_FILLER {
                return Err(GrammarError::DuplicateSymbol(name));
            }
            check_finite(*h)?;
            names.push(name);
            unary.push(*h);
        }
        let width = names.len() + 1;
        Ok(Self {
            symbols: names,
            unary,
            rules: [
                vec![0.0; width * width],
                vec![0.0; width * width],
                vec![0.0; width * width],
            ],
            root_bonus: vec![0.0; width],
            empty_penalty: 0.0,
        })
    }

    pub fn with_rule(
        mut self,
        slot: ChildSlot,
        parent: &str,
        child: &str,
        bonus: f64,
    ) -> Result<Self, GrammarError> {
        self.set_rule(slot, parent, child, bonus)?;
        Ok(self)
    }

    pub fn set_rule(
        &mut self,
        slot: ChildSlot,
        parent: &str,
        child: &str,
        bonus: f64,
    ) -> Result<(), GrammarError> {
        check_finite(bonus)?;
        let p = self.require(parent)?;
        let c = self.require(child)?;
        let width = self.width();
        let table = slot
            .rule_index()
            .ok_or_else(|| GrammarError::InvalidTopology("root is not a rule slot".into()))?;
        self.rules[table][p * width + c] = bonus;
        Ok(())
    }

    pub fn with_root_bonus(mut self, symbol: &str, bonus: f64) -> Result<Self, GrammarError> {
        check_finite(bonus)?;
        let s = self.require(symbol)?;
        self.root_bonus[s] = bonus;
        Ok(self)
    }

    pub fn with_empty_penalty(mut self, penalty: f64) -> Result<Self, GrammarError> {
        check_finite(penalty)?;
        self.empty_penalty = penalty;
        Ok(self)
    }

    /// Number of declared (non-empty) symbols.
    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Index of `name`; symbols are numbered from 1.
    pub fn symbol_index(&self, name: &str) -> Option<u8> {
        self.symbols
            .iter()
            .position(|s| s == name)
            .map(|i| (i + 1) as u8)
    }

    /// Name for a symbol index, `"0"` for the empty filler.
    pub fn symbol_name(&self, index: u8) -> Option<&str> {
        if index == 0 {
            Some(crate::fock::EMPTY_FILLER)
        } else {
            self.symbols.get(index as usize - 1).map(String::as_str)
        }
    }

    pub fn unary(&self, symbol: u8) -> f64 {
        if symbol == 0 {
            self.empty_penalty
        } else {
            self.unary[symbol as usize]
        }
    }

    #[inline]
    pub fn bonus(&self, slot: ChildSlot, parent: u8, child: u8) -> f64 {
        match slot.rule_index() {
            Some(t) => self.rules[t][parent as usize * self.width() + child as usize],
            None => 0.0,
        }
    }

    pub fn root_bonus(&self, symbol: u8) -> f64 {
        self.root_bonus[symbol as usize]
    }

    pub fn empty_penalty(&self) -> f64 {
        self.empty_penalty
    }

    /// All non-zero rules as `(slot, parent, child, bonus)`.
    pub fn rules(&self) -> Vec<(ChildSlot, u8, u8, f64)> {
        let width = self.width();
        let mut out = Vec::new();
        for slot in RULE_SLOTS {
            let t = slot.rule_index().unwrap();
            for p in 1..width {
                for c in 1..width {
                    let b = self.rules[t][p * width + c];
                    if b != 0.0 {
                        out.push((slot, p as u8, c as u8, b));
                    }
                }
            }
        }
        out
    }

    fn width(&self) -> usize {
        self.symbols.len() + 1
    }

    fn require(&self, name: &str) -> Result<usize, GrammarError> {
        self.symbol_index(name)
            .map(usize::from)
            .ok_or_else(|| GrammarError::UnknownSymbol(name.to_string()))
    }

    fn check_symbol(&self, symbol: u8) -> Result<(), GrammarError> {
        if symbol as usize > self.symbols.len() {
            return Err(GrammarError::SymbolOutOfRange {
                index: symbol as usize,
                symbols: self.symbols.len(),
            });
        }
        Ok(())
    }

    /// Parses the whitespace-delimited grammar file format.
    ///
    /// ```text
    /// SYMBOLS
    /// S -2
    /// LEFT_RULES
    /// S B 2
    /// ROOT_BONUS
    /// S 1
    /// ```
    ///
    /// Sections: `SYMBOLS`, `LEFT_RULES`, `CENTER_RULES`, `RIGHT_RULES`,
    /// `ROOT_BONUS`, `EMPTY_PENALTY`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let mut section: Option<String> = None;
        let mut symbols: Vec<(String, f64)> = Vec::new();
        let mut pending: Vec<(usize, String, Vec<String>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() == 1
                && matches!(
                    fields[0],
                    "SYMBOLS"
                        | "LEFT_RULES"
                        | "CENTER_RULES"
                        | "RIGHT_RULES"
                        | "ROOT_BONUS"
                        | "EMPTY_PENALTY"
                )
            {
                section = Some(fields[0].to_string());
                continue;
            }
            let sec = section.clone().ok_or_else(|| GrammarError::Parse {
                line,
                msg: "entry before any section header".into(),
            })?;
            if sec == "SYMBOLS" {
                if fields.len() != 2 {
                    return Err(GrammarError::Parse {
                        line,
                        msg: "expected `name harmony`".into(),
                    });
                }
                symbols.push((fields[0].to_string(), parse_number(fields[1], line)?));
            } else {
                pending.push((line, sec, fields.iter().map(|s| s.to_string()).collect()));
            }
        }
        let mut g = GrammarSpec::new(&symbols)?;
        for (line, sec, fields) in pending {
            let wrap = |e: GrammarError| GrammarError::Parse {
                line,
                msg: e.to_string(),
            };
            match sec.as_str() {
                "LEFT_RULES" | "CENTER_RULES" | "RIGHT_RULES" => {
                    if fields.len() != 3 {
                        return Err(GrammarError::Parse {
                            line,
                            msg: "expected `parent child bonus`".into(),
                        });
                    }
                    let slot = match sec.as_str() {
                        "LEFT_RULES" => ChildSlot::Left,
                        "CENTER_RULES" => ChildSlot::Center,
                        _ => ChildSlot::Right,
                    };
                    let bonus = parse_number(&fields[2], line)?;
                    g.set_rule(slot, &fields[0], &fields[1], bonus)
                        .map_err(wrap)?;
                }
                "ROOT_BONUS" => {
                    if fields.len() != 2 {
                        return Err(GrammarError::Parse {
                            line,
                            msg: "expected `symbol bonus`".into(),
                        });
                    }
                    let bonus = parse_number(&fields[1], line)?;
                    g = g.with_root_bonus(&fields[0], bonus).map_err(wrap)?;
                }
                "EMPTY_PENALTY" => {
                    if fields.len() != 1 {
                        return Err(GrammarError::Parse {
                            line,
                            msg: "expected a single value".into(),
                        });
                    }
                    let p = parse_number(&fields[0], line)?;
                    g = g.with_empty_penalty(p).map_err(wrap)?;
                }
                _ => unreachable!(),
            }
        }
        Ok(g)
    }

    /// Serializes to the text format read by [`parse`](Self::parse).
    pub fn to_text(&self) -> String {
        let mut out = String::from("SYMBOLS\n");
        for (i, name) in self.symbols.iter().enumerate() {
            let _ = writeln!(out, "{name} {}", self.unary[i + 1]);
        }
        let rules = self.rules();
        for slot in RULE_SLOTS {
            let mine: Vec<_> = rules.iter().filter(|r| r.0 == slot).collect();
            if mine.is_empty() {
                continue;
            }
            let _ = writeln!(out, "{}", slot.section());
            for (_, p, c, b) in mine {
                let _ = writeln!(
                    out,
                    "{} {} {b}",
                    self.symbol_name(*p).unwrap(),
                    self.symbol_name(*c).unwrap()
                );
            }
        }
        let roots: Vec<_> = (1..=self.symbols.len())
            .filter(|&s| self.root_bonus[s] != 0.0)
            .collect();
        if !roots.is_empty() {
            out.push_str("ROOT_BONUS\n");
            for s in roots {
                let _ = writeln!(out, "{} {}", self.symbols[s - 1], self.root_bonus[s]);
            }
        }
        if self.empty_penalty != 0.0 {
            let _ = writeln!(out, "EMPTY_PENALTY\n{}", self.empty_penalty);
        }
        out
    }
}

fn check_finite(x: f64) -> Result<(), GrammarError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(GrammarError::NonFinite(x))
    }
}

fn parse_number(s: &str, line: usize) -> Result<f64, GrammarError> {
    let v: f64 = s.parse().map_err(|_| GrammarError::Parse {
        line,
        msg: format!("not a number: {s:?}"),
    })?;
    check_finite(v).map_err(|e| GrammarError::Parse {
        line,
        msg: e.to_string(),
    })?;
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopoNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub slot: ChildSlot,
}

/// Arena-backed rooted tree whose edges carry the child's slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeTopology {
    nodes: Vec<TopoNode>,
    root: usize,
    /// Nodes ordered so every parent precedes its children.
    preorder: Vec<usize>,
}

impl TreeTopology {
    /// Builds a topology from `(parent, slot)` per node; exactly one node
    /// must have no parent. Children are ordered by slot.
    pub fn from_parents(spec: &[(Option<usize>, ChildSlot)]) -> Result<Self, GrammarError> {
        let n = spec.len();
        if n == 0 {
            return Err(GrammarError::InvalidTopology("no nodes".into()));
        }
        let mut nodes: Vec<TopoNode> = spec
            .iter()
            .map(|&(parent, slot)| TopoNode {
                parent,
                children: Vec::new(),
                slot: if parent.is_none() {
                    ChildSlot::Root
                } else {
                    slot
                },
            })
            .collect();
        let mut root = None;
        for (i, &(parent, slot)) in spec.iter().enumerate() {
            match parent {
                None => {
                    if root.replace(i).is_some() {
                        return Err(GrammarError::InvalidTopology("multiple roots".into()));
                    }
                }
                Some(p) => {
                    if p >= n || p == i {
                        return Err(GrammarError::InvalidTopology(format!(
                            "node {i} has invalid parent {p}"
                        )));
                    }
                    if slot == ChildSlot::Root {
                        return Err(GrammarError::InvalidTopology(format!(
                            "non-root node {i} tagged as root"
                        )));
                    }
                    nodes[p].children.push(i);
                }
            }
        }
        let root = root.ok_or_else(|| GrammarError::InvalidTopology("no root".into()))?;
        for i in 0..n {
            let mut kids = std::mem::take(&mut nodes[i].children);
            kids.sort_by_key(|&c| (nodes[c].slot, c));
            if kids.len() > 3 {
                return Err(GrammarError::InvalidTopology(format!(
                    "node {i} has {} children",
                    kids.len()
                )));
            }
            if kids.windows(2).any(|w| nodes[w[0]].slot == nodes[w[1]].slot) {
                return Err(GrammarError::InvalidTopology(format!(
                    "node {i} has two children in the same slot"
                )));
            }
            nodes[i].children = kids;
        }
        let mut preorder = Vec::with_capacity(n);
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            preorder.push(v);
            if preorder.len() > n {
                return Err(GrammarError::InvalidTopology("cycle".into()));
            }
            stack.extend(nodes[v].children.iter().rev());
        }
        if preorder.len() != n {
            return Err(GrammarError::InvalidTopology(
                "tree is not connected".into(),
            ));
        }
        Ok(Self {
            nodes,
            root,
            preorder,
        })
    }

    /// Binary tree from ordered child lists: first child left, second right.
    pub fn from_children(children: &[Vec<usize>], root: usize) -> Result<Self, GrammarError> {
        let mut spec = vec![(None, ChildSlot::Root); children.len()];
        for (p, kids) in children.iter().enumerate() {
            if kids.len() > 2 {
                return Err(GrammarError::InvalidTopology(format!(
                    "binary node {p} has {} children",
                    kids.len()
                )));
            }
            for (k, &c) in kids.iter().enumerate() {
                if c >= children.len() {
                    return Err(GrammarError::NodeOutOfRange {
                        node: c,
                        nodes: children.len(),
                    });
                }
                if spec[c].0.is_some() {
                    return Err(GrammarError::InvalidTopology(format!(
                        "node {c} has two parents"
                    )));
                }
                let slot = if k == 0 {
                    ChildSlot::Left
                } else {
                    ChildSlot::Right
                };
                spec[c] = (Some(p), slot);
            }
        }
        if root >= children.len() || spec[root].0.is_some() {
            return Err(GrammarError::InvalidTopology("bad root".into()));
        }
        Self::from_parents(&spec)
    }

    /// Herring bone of depth `n` (`3n+1` nodes) with role names
    /// `c_0, l_1, c_1, r_1, ..., l_n, c_n, r_n` in node order.
    pub fn herring_bone(n: usize) -> Result<(Self, Vec<String>), GrammarError> {
        if n == 0 {
            return Err(GrammarError::ZeroDepth);
        }
        let mut spec = vec![(None, ChildSlot::Root)];
        let mut names = vec!["c_0".to_string()];
        let mut center = 0;
        for d in 1..=n {
            let base = spec.len();
            spec.push((Some(center), ChildSlot::Left));
            spec.push((Some(center), ChildSlot::Center));
            spec.push((Some(center), ChildSlot::Right));
            names.push(format!("l_{d}"));
            names.push(format!("c_{d}"));
            names.push(format!("r_{d}"));
            center = base + 1;
        }
        Ok((Self::from_parents(&spec)?, names))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, i: usize) -> &TopoNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[TopoNode] {
        &self.nodes
    }

    /// Parents before children.
    pub fn preorder(&self) -> &[usize] {
        &self.preorder
    }

    pub fn max_children(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).max().unwrap_or(0)
    }
}

/// Symbol per node (`0` = empty).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(pub Vec<u8>);

impl Assignment {
    pub fn filled(len: usize, symbol: u8) -> Self {
        Self(vec![symbol; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn from_names(g: &GrammarSpec, names: &[&str]) -> Result<Self, GrammarError> {
        names
            .iter()
            .map(|n| {
                if *n == crate::fock::EMPTY_FILLER {
                    Ok(0)
                } else {
                    g.symbol_index(n)
                        .ok_or_else(|| GrammarError::UnknownSymbol(n.to_string()))
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

fn validate(g: &GrammarSpec, t: &TreeTopology, a: &Assignment) -> Result<(), GrammarError> {
    if a.len() != t.len() {
        return Err(GrammarError::LengthMismatch {
            expected: t.len(),
            got: a.len(),
        });
    }
    for &s in &a.0 {
        g.check_symbol(s)?;
    }
    Ok(())
}

/// Total Harmony: unary terms, matched rule bonuses on every edge, and the
/// root bonus.
pub fn harmony(g: &GrammarSpec, t: &TreeTopology, a: &Assignment) -> Result<f64, GrammarError> {
    validate(g, t, a)?;
    Ok(harmony_unchecked(g, t, &a.0))
}

/// [`harmony`] minus the root bonus: the Harmony of a (sub)tree viewed as
/// a constituent of a larger tree.
pub fn subtree_harmony(
    g: &GrammarSpec,
    t: &TreeTopology,
    a: &Assignment,
) -> Result<f64, GrammarError> {
    validate(g, t, a)?;
    Ok(harmony_unchecked(g, t, &a.0) - g.root_bonus(a.0[t.root()]))
}

pub(crate) fn harmony_unchecked(g: &GrammarSpec, t: &TreeTopology, a: &[u8]) -> f64 {
    let mut h = g.root_bonus(a[t.root]);
    for (i, node) in t.nodes.iter().enumerate() {
        let s = a[i];
        h += g.unary(s);
        if s == 0 {
            continue;
        }
        for &c in &node.children {
            if a[c] != 0 {
                h += g.bonus(t.nodes[c].slot, s, a[c]);
            }
        }
    }
    h
}

#[inline]
fn edge(g: &GrammarSpec, slot: ChildSlot, parent: u8, child: u8) -> f64 {
    if parent == 0 || child == 0 {
        0.0
    } else {
        g.bonus(slot, parent, child)
    }
}

/// Change in Harmony when `node` is relabelled to `new_symbol`, touching
/// only the node, its parent edge and its child edges.
pub fn delta_harmony(
    g: &GrammarSpec,
    t: &TreeTopology,
    a: &Assignment,
    node: usize,
    new_symbol: u8,
) -> Result<f64, GrammarError> {
    validate(g, t, a)?;
    if node >= t.len() {
        return Err(GrammarError::NodeOutOfRange {
            node,
            nodes: t.len(),
        });
    }
    g.check_symbol(new_symbol)?;
    Ok(delta_unchecked(g, t, &a.0, node, new_symbol))
}

#[inline]
pub(crate) fn delta_unchecked(
    g: &GrammarSpec,
    t: &TreeTopology,
    a: &[u8],
    node: usize,
    new: u8,
) -> f64 {
    let old = a[node];
    if old == new {
        return 0.0;
    }
    let info = &t.nodes[node];
    let mut d = g.unary(new) - g.unary(old);
    match info.parent {
        None => d += g.root_bonus(new) - g.root_bonus(old),
        Some(p) => {
            let ps = a[p];
            d += edge(g, info.slot, ps, new) - edge(g, info.slot, ps, old);
        }
    }
    for &c in &info.children {
        let slot = t.nodes[c].slot;
        d += edge(g, slot, new, a[c]) - edge(g, slot, old, a[c]);
    }
    d
}

/// Whether the root bonus enters the maximization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootBonus {
    Include,
    Exclude,
}

/// Exact maximum of [`harmony`] over all assignments of declared symbols,
/// with an attaining assignment. Ties go to the lowest symbol index.
pub fn max_harmony_dp(g: &GrammarSpec, t: &TreeTopology) -> (f64, Assignment) {
    max_harmony_dp_with(g, t, RootBonus::Include)
}

pub fn max_harmony_dp_with(g: &GrammarSpec, t: &TreeTopology, root: RootBonus) -> (f64, Assignment) {
    let k = g.symbol_count();
    let n = t.len();
    // best[v*k + s-1]: max harmony of subtree at v given v holds symbol s
    let mut best = vec![0.0f64; n * k];
    // choice[c*k + s-1]: best symbol for child c when its parent holds s
    let mut choice = vec![0u8; n * k];
    for &v in t.preorder.iter().rev() {
        for s in 1..=k as u8 {
            let mut h = g.unary(s);
            for &c in &t.nodes[v].children {
                let slot = t.nodes[c].slot;
                let mut top = f64::NEG_INFINITY;
                let mut arg = 1u8;
                for sc in 1..=k as u8 {
                    let cand = best[c * k + sc as usize - 1] + g.bonus(slot, s, sc);
                    if cand > top {
                        top = cand;
                        arg = sc;
                    }
                }
                h += top;
                choice[c * k + s as usize - 1] = arg;
            }
            best[v * k + s as usize - 1] = h;
        }
    }
    let r = t.root;
    let mut top = f64::NEG_INFINITY;
    let mut arg = 1u8;
    for s in 1..=k as u8 {
        let mut cand = best[r * k + s as usize - 1];
        if root == RootBonus::Include {
            cand += g.root_bonus(s);
        }
        if cand > top {
            top = cand;
            arg = s;
        }
    }
    let mut a = vec![0u8; n];
    a[r] = arg;
    for &v in &t.preorder {
        for &c in &t.nodes[v].children {
            a[c] = choice[c * k + a[v] as usize - 1];
        }
    }
    (top, Assignment(a))
}

/// `A^n . B^n` grammar over its depth-`n` herring bone.
///
/// S costs -4 everywhere with a +1 root bonus, A/B/'.' cost -1, and an S
/// center node earns +2 for each of A on its left, S or '.' in its center
/// and B on its right. The unique zero-Harmony assignment is S down the
/// spine, '.' at `c_n`, A on every left leaf and B on every right leaf.
pub fn anbn_grammar(n: usize) -> Result<(GrammarSpec, TreeTopology), GrammarError> {
    let (topo, _) = TreeTopology::herring_bone(n)?;
    Ok((anbn_spec(), topo))
}

pub fn anbn_spec() -> GrammarSpec {
    GrammarSpec::new(&[("S", -4.0), ("A", -1.0), ("B", -1.0), (".", -1.0)])
        .and_then(|g| g.with_root_bonus("S", 1.0))
        .and_then(|g| g.with_rule(ChildSlot::Left, "S", "A", 2.0))
        .and_then(|g| g.with_rule(ChildSlot::Center, "S", "S", 2.0))
        .and_then(|g| g.with_rule(ChildSlot::Center, "S", ".", 2.0))
        .and_then(|g| g.with_rule(ChildSlot::Right, "S", "B", 2.0))
        .expect("built-in grammar is well formed")
}

/// The unique grammatical assignment of the depth-`n` herring bone.
pub fn anbn_optimum(n: usize) -> Assignment {
    let g = anbn_spec();
    let s = g.symbol_index("S").unwrap();
    let a = g.symbol_index("A").unwrap();
    let b = g.symbol_index("B").unwrap();
    let dot = g.symbol_index(".").unwrap();
    let mut out = vec![s];
    for d in 1..=n {
        out.push(a);
        out.push(if d == n { dot } else { s });
        out.push(b);
    }
    Assignment(out)
}

/// Balanced-parentheses grammar.
pub fn parens_grammar() -> GrammarSpec {
    let mut g = GrammarSpec::new(&[
        ("S", -2.0),
        ("A", -3.0),
        ("B", -3.0),
        ("C", -3.0),
        ("(", -1.0),
        (")", -1.0),
    ])
    .and_then(|g| g.with_root_bonus("S", 1.0))
    .expect("built-in grammar is well formed");
    for (p, c) in [("S", "B"), ("S", "C"), ("B", "("), ("A", "S"), ("C", "S")] {
        g.set_rule(ChildSlot::Left, p, c, 2.0).unwrap();
    }
    for (p, c) in [("B", "A"), ("B", ")"), ("A", ")"), ("C", "S")] {
        g.set_rule(ChildSlot::Right, p, c, 2.0).unwrap();
    }
    g
}

/// Histogram of symbol counts, handy for reports.
pub fn symbol_histogram(g: &GrammarSpec, a: &Assignment) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for &s in &a.0 {
        let name = g.symbol_name(s).unwrap_or("?").to_string();
        *out.entry(name).or_insert(0) += 1;
    }
    out
}
