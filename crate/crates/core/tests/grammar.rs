mod common;

use common::*;
use harmonia_core::grammar::*;
use proptest::prelude::*;

fn small_int() -> impl Strategy<Value = f64> {
    (-4i32..=4).prop_map(f64::from)
}

/// Random grammar with integer harmonies over `k` symbols.
fn arb_grammar() -> impl Strategy<Value = GrammarSpec> {
    (1usize..=4)
        .prop_flat_map(|k| {
            (
                Just(k),
                prop::collection::vec(small_int(), k),
                prop::collection::vec((0..3usize, 0..k, 0..k, small_int()), 0..12),
                prop::collection::vec(small_int(), k),
                small_int(),
            )
        })
        .prop_map(|(k, unary, rules, roots, empty)| {
            let names: Vec<(String, f64)> =
                (0..k).map(|i| (format!("X{i}"), unary[i])).collect();
            let mut g = GrammarSpec::new(&names).unwrap();
            for (slot, p, c, b) in rules {
                let slot = [ChildSlot::Left, ChildSlot::Center, ChildSlot::Right][slot];
                g.set_rule(slot, &names[p].0, &names[c].0, b).unwrap();
            }
            for (i, b) in roots.into_iter().enumerate() {
                g = g.with_root_bonus(&names[i].0, b).unwrap();
            }
            g.with_empty_penalty(empty).unwrap()
        })
}

/// Random slot-tagged tree of up to `max` nodes, parents before children.
fn arb_spec(max: usize) -> impl Strategy<Value = ParentSpec> {
    prop::collection::vec((any::<prop::sample::Index>(), 0..3usize), 0..max).prop_map(|picks| {
        let slots = [ChildSlot::Left, ChildSlot::Center, ChildSlot::Right];
        let mut spec: ParentSpec = vec![(None, ChildSlot::Root)];
        let mut used: Vec<Vec<ChildSlot>> = vec![vec![]];
        for (idx, s) in picks {
            let p = idx.index(spec.len());
            // first free slot at or after the drawn one
            let free = (0..3)
                .map(|o| slots[(s + o) % 3])
                .find(|sl| !used[p].contains(sl));
            if let Some(slot) = free {
                used[p].push(slot);
                spec.push((Some(p), slot));
                used.push(vec![]);
            }
        }
        spec
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn delta_matches_full_reevaluation(
        g in arb_grammar(),
        spec in arb_spec(12),
        seed in any::<u64>(),
    ) {
        let t = TreeTopology::from_parents(&spec).unwrap();
        let k = g.symbol_count() as u64 + 1;
        let mut x = seed;
        let mut next = || { x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (x >> 33) % k };
        let a = Assignment((0..t.len()).map(|_| next() as u8).collect());
        let node = (next() as usize * 7919) % t.len();
        let new = next() as u8;
        let mut b = a.clone();
        b.0[node] = new;
        let before = harmony(&g, &t, &a).unwrap();
        let after = harmony(&g, &t, &b).unwrap();
        prop_assert_eq!(after, before + delta_harmony(&g, &t, &a, node, new).unwrap());
        prop_assert_eq!(before, table_harmony(&g, &spec, &a.0, true));
    }

    #[test]
    fn dp_matches_exhaustive_on_random_grammars(g in arb_grammar(), spec in arb_spec(6)) {
        let t = TreeTopology::from_parents(&spec).unwrap();
        for (mode, rb) in [(RootBonus::Include, true), (RootBonus::Exclude, false)] {
            let (h, a) = max_harmony_dp_with(&g, &t, mode);
            prop_assert_eq!(h, exhaustive_max(&g, &spec, rb));
            prop_assert_eq!(table_harmony(&g, &spec, &a.0, rb), h);
            prop_assert!(a.0.iter().all(|&s| s >= 1));
        }
    }

    #[test]
    fn grammar_text_roundtrip(g in arb_grammar()) {
        let back = GrammarSpec::parse(&g.to_text()).unwrap();
        prop_assert_eq!(back, g);
    }
}

#[test]
fn dp_matches_exhaustive_small_topologies() {
    let parens = parens_grammar();
    for n in 1..=7 {
        for shape in binary_shapes(n) {
            let spec = shape.to_spec();
            let t = shape.to_topology();
            assert_eq!(
                max_harmony_dp(&parens, &t).0,
                exhaustive_max(&parens, &spec, true),
                "{}",
                shape.bracket()
            );
        }
    }
    let anbn = anbn_spec();
    for n in 1..=6 {
        for shape in ternary_shapes(n) {
            let spec = shape.to_spec();
            let t = shape.to_topology();
            assert_eq!(max_harmony_dp(&anbn, &t).0, exhaustive_max(&anbn, &spec, true));
        }
    }
}

#[test]
fn topology_counts() {
    // Motzkin numbers for ordered trees of arity at most two
    let counts: Vec<usize> = (1..=8).map(|n| binary_shapes(n).len()).collect();
    assert_eq!(counts, [1, 1, 2, 4, 9, 21, 51, 127]);
    let tern: Vec<usize> = (1..=4).map(|n| ternary_shapes(n).len()).collect();
    assert_eq!(tern, [1, 3, 12, 55]);
}

#[test]
fn parens_subtree_upper_bound() {
    let g = parens_grammar();
    for n in 1..=10 {
        for shape in binary_shapes(n) {
            let (h, _) = max_harmony_dp_with(&g, &shape.to_topology(), RootBonus::Exclude);
            assert!(h <= -1.0, "{} scored {h}", shape.bracket());
        }
    }
}

#[test]
fn anbn_unique_optimum_by_exhaustion() {
    let (g, t) = anbn_grammar(2).unwrap();
    let n = t.len();
    let mut zero = Vec::new();
    let mut a = vec![1u8; n];
    'outer: loop {
        if harmony(&g, &t, &Assignment(a.clone())).unwrap() == 0.0 {
            zero.push(a.clone());
        }
        for i in 0..n {
            if a[i] < 4 {
                a[i] += 1;
                continue 'outer;
            }
            a[i] = 1;
        }
        break;
    }
    assert_eq!(zero, vec![anbn_optimum(2).0]);
}

#[test]
fn builtin_grammar_files_parse() {
    let text = "\
# balanced parentheses
SYMBOLS
S -2
A -3
B -3
C -3
( -1
) -1
LEFT_RULES
S B 2
S C 2
B ( 2
A S 2
C S 2
RIGHT_RULES
B A 2
B ) 2
A ) 2
C S 2
ROOT_BONUS
S 1
";
    assert_eq!(GrammarSpec::parse(text).unwrap(), parens_grammar());
}
