mod common;

use std::collections::HashSet;

use common::*;
use harmonia_core::grammar::*;
use harmonia_core::trees::*;
use proptest::prelude::*;

#[test]
fn enumeration_matches_brute_force() {
    let g = parens_grammar();
    let cache = EnumCache::new();
    for l in 1..=4 {
        for d in 0..=4 {
            let found = enum_subtrees(l, d, &g, &cache);
            let mut expected: u128 = 0;
            for shape in levelled_binary_shapes(l, d) {
                let hist = harmony_histogram(&g, &shape);
                let n = hist.get(&-1).copied().unwrap_or(0);
                if shape.size() <= 8 {
                    assert_eq!(raw_count(&g, &shape, -1.0) as u128, n, "{}", shape.bracket());
                }
                expected += n;
            }
            assert_eq!(found.len() as u128, expected, "L={l} D={d}");
            let distinct: HashSet<String> = found.iter().map(|t| t.to_bracket(&g)).collect();
            assert_eq!(distinct.len(), found.len(), "duplicates at L={l} D={d}");
        }
    }
}

#[test]
fn full_trees_score_zero_and_subtrees_minus_one() {
    let g = parens_grammar();
    let cache = EnumCache::new();
    let s = g.symbol_index("S").unwrap();
    let mut full = 0;
    for l in 1..=6 {
        for d in 0..=6 {
            for t in enum_subtrees(l, d, &g, &cache).iter() {
                assert_eq!(t.leaf_count(), l);
                assert_eq!(t.depth(), d);
                assert_eq!(labeled_harmony(t, &g, RootBonus::Exclude), -1.0);
                let (tree, _) = t.to_tree();
                let f = is_feasible(&tree, &g);
                assert!(f.feasible);
                // every subtree is itself a -1 subtree
                for v in tree.preorder() {
                    let sub = tree.subtree(v).unwrap();
                    assert_eq!(is_feasible(&sub, &g).max_harmony, -1.0);
                }
                if t.symbol() == s {
                    full += 1;
                    assert_eq!(labeled_harmony(t, &g, RootBonus::Include), 0.0);
                    assert!(is_grammatical(&tree, &g).0);
                }
            }
        }
    }
    assert!(full > 0);
}

#[test]
fn warm_and_cold_cache_agree() {
    let g = parens_grammar();
    let warm = EnumCache::new();
    for l in 1..=6 {
        for d in 0..=6 {
            enum_subtrees(l, d, &g, &warm);
        }
    }
    assert!(!warm.is_empty());
    for l in 1..=6 {
        for d in 0..=6 {
            let cold = EnumCache::new();
            let a: Vec<String> = enum_subtrees(l, d, &g, &cold).iter().map(|t| t.to_bracket(&g)).collect();
            let b: Vec<String> = enum_subtrees(l, d, &g, &warm).iter().map(|t| t.to_bracket(&g)).collect();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn cache_shared_across_threads() {
    let g = parens_grammar();
    let cache = EnumCache::new();
    let counts: Vec<usize> = std::thread::scope(|s| {
        let hs: Vec<_> = (0..4)
            .map(|_| s.spawn(|| enum_subtrees(6, 6, &g, &cache).len()))
            .collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(counts.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn feasibility_agrees_with_exhaustive_labeling() {
    let g = parens_grammar();
    for l in 1..=3 {
        for shape in bounded_binary_shapes(l, 3) {
            if shape.size() > 7 {
                continue;
            }
            let tree = parse_bracket(&shape.bracket()).unwrap().to_tree();
            let f = is_feasible(&tree, &g);
            let brute = exhaustive_max(&g, &shape.to_spec(), false);
            assert_eq!(f.max_harmony, brute);
        }
    }
}

fn replay(trace: &[MoveRecord], window: u64) {
    // (proposal index, created leaves, site that lost a leaf)
    let mut accepted: Vec<(u64, &MoveRecord)> = Vec::new();
    for (i, m) in trace.iter().enumerate() {
        let at = i as u64 + 1;
        if m.outcome != MoveOutcome::Accepted {
            continue;
        }
        for (prev_at, prev) in &accepted {
            if at - prev_at > window {
                continue;
            }
            if let Some(del) = m.deleted {
                assert!(!prev.created.contains(&del), "deleted recent leaf {del}");
            }
            if m.kind != Some(MoveKind::Delete) && prev.kind == Some(MoveKind::Delete) {
                assert_ne!(m.site, prev.site, "added at recently cleared site");
            }
        }
        accepted.push((at, m));
    }
}

#[test]
fn morph_small_cases_converge_and_respect_tabu() {
    let g = parens_grammar();
    for seed in 0..20 {
        let t0 = random_binary_tree(4, 4, seed).unwrap();
        let cfg = MorphConfig::new(4, 4, seed);
        let r = morph_tree(&t0, &cfg, &g).unwrap();
        r.tree.validate().unwrap();
        assert!(r.tree.depth() <= 4);
        if r.converged {
            assert!(is_feasible(&r.tree, &g).feasible);
            assert!(r.tree.leaf_count() == 4 || r.tree.leaf_count() == 3);
        }
        assert_eq!(r.trace.len() as u64, r.move_count);
        replay(&r.trace, cfg.tabu_window as u64);
    }
}

#[test]
fn morph_is_deterministic() {
    let g = parens_grammar();
    let t0 = random_binary_tree(6, 7, 5).unwrap();
    let cfg = MorphConfig::new(6, 7, 5);
    let a = morph_tree(&t0, &cfg, &g).unwrap();
    let b = morph_tree(&t0, &cfg, &g).unwrap();
    assert_eq!(a.move_count, b.move_count);
    assert_eq!(a.tree.shape(), b.tree.shape());
    assert_eq!(a.trace, b.trace);
}

#[test]
fn morph_budget_exhaustion_is_reported() {
    let g = parens_grammar();
    let t0 = random_binary_tree(6, 7, 1).unwrap();
    let mut cfg = MorphConfig::new(6, 7, 1);
    cfg.max_up = 1;
    cfg.schedule = harmonia_core::anneal::CoolingSchedule::Table(vec![1e-6; 2]);
    let r = morph_tree(&t0, &cfg, &g).unwrap();
    if !is_feasible(&t0, &g).feasible {
        assert!(!r.converged || r.move_count <= 2);
        assert!(r.move_count <= 2);
    }
}

fn arb_raw_tree() -> impl Strategy<Value = RawTree> {
    let labels = prop::sample::select(vec!["S", "A", "B", "C", "(", ")"]);
    let leaf = labels.clone().prop_map(|l| RawTree {
        label: l.to_string(),
        children: vec![],
    });
    leaf.prop_recursive(5, 24, 2, move |inner| {
        (labels.clone(), prop::collection::vec(inner, 1..=2)).prop_map(|(l, children)| RawTree {
            label: l.to_string(),
            children,
        })
    })
}

proptest! {
    #[test]
    fn bracket_roundtrip(raw in arb_raw_tree()) {
        let g = parens_grammar();
        let t = LabeledTree::parse(&render(&raw), &g).unwrap();
        let text = t.to_bracket(&g);
        prop_assert_eq!(&text, &render(&raw));
        let (tree, a) = t.to_tree();
        prop_assert_eq!(tree.to_bracket(&g, &a), text);
        prop_assert_eq!(tree.leaf_count(), t.leaf_count());
        prop_assert_eq!(tree.depth(), t.depth());
    }

    #[test]
    fn elementary_moves_keep_tree_valid(ops in prop::collection::vec((0u8..3, any::<prop::sample::Index>()), 1..40)) {
        let mut t = BinaryTree::single();
        for (op, idx) in ops {
            let nodes = t.preorder();
            let v = nodes[idx.index(nodes.len())];
            let before = t.leaf_count();
            match op {
                0 => if t.is_leaf(v) {
                    t.fork_leaf(v).unwrap();
                    prop_assert_eq!(t.leaf_count(), before + 1);
                },
                1 => if t.children(v).len() < 2 {
                    let was_leaf = t.is_leaf(v);
                    t.add_leaf(v).unwrap();
                    prop_assert_eq!(t.leaf_count(), if was_leaf { before } else { before + 1 });
                },
                _ => if t.is_leaf(v) && v != t.root() {
                    let p = t.parent(v).unwrap();
                    let siblings = t.children(p).len();
                    t.delete_leaf(v).unwrap();
                    prop_assert_eq!(t.leaf_count(), if siblings == 2 { before - 1 } else { before });
                },
            }
            t.validate().unwrap();
        }
    }

    #[test]
    fn random_trees_respect_bounds(l in 1usize..8, extra in 0usize..4, seed in any::<u64>()) {
        let d = min_depth(l) + extra;
        let t = random_binary_tree(l, d, seed).unwrap();
        prop_assert_eq!(t.leaf_count(), l);
        prop_assert!(t.depth() <= d);
        t.validate().unwrap();
    }
}

fn render(t: &RawTree) -> String {
    if t.children.is_empty() {
        return t.label.clone();
    }
    let kids: Vec<String> = t.children.iter().map(render).collect();
    format!("{}[{}]", t.label, kids.join(" "))
}

#[test]
fn random_tree_distribution_is_uniform_over_shapes() {
    // 2 leaves within depth 2: *[* *], *[*[* *]], *[*[*] *], *[* *[*]], *[*[*] *[*]]
    let counts = shape_counts(2, 2);
    assert_eq!(counts[2][2], 5.0);
    let mut seen = std::collections::HashMap::new();
    let n = 5000;
    for s in 0..n {
        *seen.entry(random_binary_tree(2, 2, s).unwrap().shape()).or_insert(0usize) += 1;
    }
    assert_eq!(seen.len(), 5);
    for (shape, c) in seen {
        let p = c as f64 / n as f64;
        assert!((p - 0.2).abs() < 0.03, "{shape}: {p}");
    }
    let bounded: usize = bounded_binary_shapes(4, 4).len();
    assert_eq!(shape_counts(4, 4)[4][4], bounded as f64);
}
