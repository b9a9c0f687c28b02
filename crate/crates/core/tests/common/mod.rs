#![allow(dead_code)]

use std::collections::BTreeMap;

use harmonia_core::grammar::{ChildSlot, GrammarSpec, TreeTopology};

pub type ParentSpec = Vec<(Option<usize>, ChildSlot)>;

/// Recursive shape: child slots with their subtrees.
#[derive(Clone, Debug)]
pub struct Shape(pub Vec<(ChildSlot, Shape)>);

impl Shape {
    pub fn size(&self) -> usize {
        1 + self.0.iter().map(|(_, c)| c.size()).sum::<usize>()
    }

    pub fn leaves(&self) -> usize {
        if self.0.is_empty() {
            1
        } else {
            self.0.iter().map(|(_, c)| c.leaves()).sum()
        }
    }

    pub fn to_spec(&self) -> ParentSpec {
        let mut out = vec![(None, ChildSlot::Root)];
        fn rec(s: &Shape, me: usize, out: &mut ParentSpec) {
            for (slot, c) in &s.0 {
                let id = out.len();
                out.push((Some(me), *slot));
                rec(c, id, out);
            }
        }
        rec(self, 0, &mut out);
        out
    }

    pub fn to_topology(&self) -> TreeTopology {
        TreeTopology::from_parents(&self.to_spec()).unwrap()
    }

    pub fn bracket(&self) -> String {
        if self.0.is_empty() {
            return "*".into();
        }
        let kids: Vec<String> = self.0.iter().map(|(_, c)| c.bracket()).collect();
        format!("*[{}]", kids.join(" "))
    }
}

/// Splits `total` into `parts` positive integers, all orderings.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn shapes_with_slots(n: usize, slot_sets: &[Vec<ChildSlot>]) -> Vec<Shape> {
    if n == 0 {
        return vec![];
    }
    let mut out = Vec::new();
    for slots in slot_sets {
        if slots.is_empty() {
            if n == 1 {
                out.push(Shape(vec![]));
            }
            continue;
        }
        for sizes in compositions(n - 1, slots.len()) {
            let mut partial: Vec<Vec<(ChildSlot, Shape)>> = vec![vec![]];
            for (slot, &sz) in slots.iter().zip(&sizes) {
                let subs = shapes_with_slots(sz, slot_sets);
                let mut next = Vec::new();
                for p in &partial {
                    for s in &subs {
                        let mut q = p.clone();
                        q.push((*slot, s.clone()));
                        next.push(q);
                    }
                }
                partial = next;
            }
            out.extend(partial.into_iter().map(Shape));
        }
    }
    out
}

/// Ordered binary trees with `n` nodes; a lone child is left.
pub fn binary_shapes(n: usize) -> Vec<Shape> {
    use ChildSlot::*;
    shapes_with_slots(n, &[vec![], vec![Left], vec![Left, Right]])
}

/// Trees with `n` nodes whose children occupy any subset of {left, center, right}.
pub fn ternary_shapes(n: usize) -> Vec<Shape> {
    use ChildSlot::*;
    let sets = vec![
        vec![],
        vec![Left],
        vec![Center],
        vec![Right],
        vec![Left, Center],
        vec![Left, Right],
        vec![Center, Right],
        vec![Left, Center, Right],
    ];
    shapes_with_slots(n, &sets)
}

/// Binary shapes with exactly `leaves` leaves, all at depth exactly `depth`.
pub fn levelled_binary_shapes(leaves: usize, depth: usize) -> Vec<Shape> {
    use ChildSlot::*;
    if depth == 0 {
        return if leaves == 1 { vec![Shape(vec![])] } else { vec![] };
    }
    let mut out = Vec::new();
    for c in levelled_binary_shapes(leaves, depth - 1) {
        out.push(Shape(vec![(Left, c)]));
    }
    for l in 1..leaves {
        for a in levelled_binary_shapes(l, depth - 1) {
            for b in levelled_binary_shapes(leaves - l, depth - 1) {
                out.push(Shape(vec![(Left, a.clone()), (Right, b)]));
            }
        }
    }
    out
}

/// Binary shapes with exactly `leaves` leaves and depth at most `depth`.
pub fn bounded_binary_shapes(leaves: usize, depth: usize) -> Vec<Shape> {
    use ChildSlot::*;
    let mut out = Vec::new();
    if leaves == 1 {
        out.push(Shape(vec![]));
    }
    if depth == 0 {
        return out;
    }
    for c in bounded_binary_shapes(leaves, depth - 1) {
        out.push(Shape(vec![(Left, c)]));
    }
    for l in 1..leaves {
        for a in bounded_binary_shapes(l, depth - 1) {
            for b in bounded_binary_shapes(leaves - l, depth - 1) {
                out.push(Shape(vec![(Left, a.clone()), (Right, b)]));
            }
        }
    }
    out
}

/// Harmony straight from the tables: unary terms, one bonus per edge keyed
/// by the child's slot, and the root bonus.
pub fn table_harmony(g: &GrammarSpec, spec: &ParentSpec, a: &[u8], root_bonus: bool) -> f64 {
    let mut h = 0.0;
    for (i, &(p, slot)) in spec.iter().enumerate() {
        h += g.unary(a[i]);
        match p {
            None => {
                if root_bonus {
                    h += g.root_bonus(a[i]);
                }
            }
            Some(p) => {
                if a[p] != 0 && a[i] != 0 {
                    h += g.bonus(slot, a[p], a[i]);
                }
            }
        }
    }
    h
}

/// Exhaustive maximum over all non-empty labelings. `spec` must list
/// parents before children.
pub fn exhaustive_max(g: &GrammarSpec, spec: &ParentSpec, root_bonus: bool) -> f64 {
    let k = g.symbol_count() as u8;
    let n = spec.len();
    let mut a = vec![0u8; n];
    let mut best = f64::NEG_INFINITY;
    fn rec(
        g: &GrammarSpec,
        spec: &ParentSpec,
        k: u8,
        i: usize,
        acc: f64,
        a: &mut Vec<u8>,
        best: &mut f64,
        root_bonus: bool,
    ) {
        if i == spec.len() {
            if acc > *best {
                *best = acc;
            }
            return;
        }
        for s in 1..=k {
            let mut h = acc + g.unary(s);
            match spec[i].0 {
                None => {
                    if root_bonus {
                        h += g.root_bonus(s);
                    }
                }
                Some(p) => h += g.bonus(spec[i].1, a[p], s),
            }
            a[i] = s;
            rec(g, spec, k, i + 1, h, a, best, root_bonus);
        }
    }
    rec(g, spec, k, 0, 0.0, &mut a, &mut best, root_bonus);
    debug_assert!(n > 0);
    best
}

/// Number of labelings with each integer subtree Harmony (no root bonus).
pub fn harmony_histogram(g: &GrammarSpec, shape: &Shape) -> BTreeMap<i64, u128> {
    let per_symbol = symbol_histograms(g, shape);
    let mut out = BTreeMap::new();
    for h in per_symbol {
        for (k, v) in h {
            *out.entry(k).or_insert(0) += v;
        }
    }
    out
}

fn symbol_histograms(g: &GrammarSpec, shape: &Shape) -> Vec<BTreeMap<i64, u128>> {
    let k = g.symbol_count() as u8;
    let kids: Vec<(ChildSlot, Vec<BTreeMap<i64, u128>>)> = shape
        .0
        .iter()
        .map(|(slot, c)| (*slot, symbol_histograms(g, c)))
        .collect();
    (1..=k)
        .map(|s| {
            let mut acc: BTreeMap<i64, u128> = BTreeMap::from([(g.unary(s) as i64, 1)]);
            for (slot, hist) in &kids {
                let mut child: BTreeMap<i64, u128> = BTreeMap::new();
                for (ci, h) in hist.iter().enumerate() {
                    let b = g.bonus(*slot, s, ci as u8 + 1) as i64;
                    for (&v, &c) in h {
                        *child.entry(v + b).or_insert(0) += c;
                    }
                }
                let mut next = BTreeMap::new();
                for (&x, &cx) in &acc {
                    for (&y, &cy) in &child {
                        *next.entry(x + y).or_insert(0) += cx * cy;
                    }
                }
                acc = next;
            }
            acc
        })
        .collect()
}

/// Raw count of labelings scoring exactly `target` (no root bonus).
pub fn raw_count(g: &GrammarSpec, shape: &Shape, target: f64) -> u64 {
    let spec = shape.to_spec();
    let k = g.symbol_count() as u8;
    let n = spec.len();
    let mut a = vec![1u8; n];
    let mut count = 0;
    loop {
        if table_harmony(g, &spec, &a, false) == target {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == n {
                return count;
            }
            if a[i] < k {
                a[i] += 1;
                break;
            }
            a[i] = 1;
            i += 1;
        }
    }
}
