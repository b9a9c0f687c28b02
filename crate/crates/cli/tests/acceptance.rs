//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{binary_shapes, harmony_histogram, levelled_binary_shapes, raw_count, ternary_shapes, ParentSpec};
use harmonia_core::anneal::log_log_slope;
use harmonia_core::grammar::{
    anbn_spec, harmony, max_harmony_dp, max_harmony_dp_with, parens_grammar, Assignment, ChildSlot,
    GrammarSpec, RootBonus,
};
use harmonia_core::trees::{enum_subtrees, feasibility_rate, is_feasible, is_grammatical, labeled_harmony, EnumCache};
use harmonia_quantum::circuit::{named_gate, s_grid, spectral_row, CausalDiamond};
use harmonia_quantum::linalg::*;
use harmonia_quantum::operator::{anbn_operator, assignment_index, is_classical};
use harmonia_quantum::qbm::*;
use harmonia_quantum::toric::toric_harmony;
use harmonia_quantum::zeno::{diamond_family, diamond_schedule, zeno_bound};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_harmonia")
}

/// Runs the CLI and returns (exit code, stdout).
fn harmonia(args: &[&str]) -> (i32, String) {
    let out = Command::new(bin()).args(args).output().expect("run harmonia");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Data rows of a CSV written by the CLI, split on commas.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).expect("csv written");
    assert!(text.starts_with("# schema=1\n"));
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn f(x: &str) -> f64 {
    x.parse().expect("numeric field")
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn anbn_annealing(dir: &Path) -> Outcome {
    let start = Instant::now();
    let out = dir.join("anneal.csv");
    let (code, _) = harmonia(&["anneal-anbn", "--paper-defaults", "--out", out.to_str().unwrap()]);
    let took = start.elapsed();
    let rows = csv_rows(&out);
    let mut ns = Vec::new();
    let mut meds = Vec::new();
    let mut parts = Vec::new();
    for r in &rows {
        let n = f(&r[0]);
        let med = f(&r[4]);
        ensure(f(&r[3]) == 1.0, format!("n={n}: success rate {}", r[3]))?;
        ensure(
            (100.0 * n..=2000.0 * n).contains(&med),
            format!("n={n}: median {med} outside [100n, 2000n]"),
        )?;
        parts.push(format!("n={n} {:.0}n", med / n));
        ns.push(n);
        meds.push(med);
    }
    ensure(ns == [4.0, 16.0, 64.0, 256.0], format!("depths {ns:?}"))?;
    ensure(code == 0, format!("exit code {code}"))?;
    let slope = log_log_slope(&ns, &meds);
    ensure((slope - 1.0).abs() <= 0.25, format!("slope {slope:.3}"))?;
    ensure(took <= Duration::from_secs(60), format!("took {took:?}"))?;
    Ok(format!("success 1.0, medians {}, slope {slope:.3}", parts.join(" ")))
}

/// Integer tables for the brute-force maximum.
struct Tables {
    k: u8,
    unary: Vec<i64>,
    root: Vec<i64>,
    /// `bonus[slot][parent][child]`, slots left/center/right.
    bonus: Vec<Vec<Vec<i64>>>,
}

impl Tables {
    fn new(g: &GrammarSpec) -> Self {
        let k = g.symbol_count() as u8;
        let int = |x: f64| {
            assert_eq!(x.fract(), 0.0, "grammar weights are integers");
            x as i64
        };
        let syms = 0..=k;
        Self {
            k,
            unary: syms.clone().map(|s| int(g.unary(s))).collect(),
            root: syms.clone().map(|s| int(g.root_bonus(s))).collect(),
            bonus: [ChildSlot::Left, ChildSlot::Center, ChildSlot::Right]
                .iter()
                .map(|&slot| {
                    syms.clone()
                        .map(|p| syms.clone().map(|c| int(g.bonus(slot, p, c))).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

fn slot_index(s: ChildSlot) -> usize {
    match s {
        ChildSlot::Left => 0,
        ChildSlot::Center => 1,
        ChildSlot::Right => 2,
        ChildSlot::Root => unreachable!(),
    }
}

/// Maxima over every labeling with non-empty symbols, with and without the
/// root bonus.
fn brute_max(t: &Tables, spec: &ParentSpec) -> (i64, i64) {
    struct Walk<'a> {
        t: &'a Tables,
        spec: &'a ParentSpec,
        a: Vec<u8>,
        /// Best sum per root symbol, root bonus excluded.
        best: Vec<i64>,
    }
    impl Walk<'_> {
        fn gain(&self, i: usize, s: u8) -> i64 {
            let u = self.t.unary[s as usize];
            match self.spec[i] {
                (None, _) => u,
                (Some(p), slot) => u + self.t.bonus[slot_index(slot)][self.a[p] as usize][s as usize],
            }
        }
        fn rec(&mut self, i: usize, acc: i64) {
            let last = self.spec.len() - 1;
            if i == last {
                let top = (1..=self.t.k).map(|s| acc + self.gain(i, s)).max().unwrap();
                let r = self.a[0] as usize;
                self.best[r] = self.best[r].max(top);
                return;
            }
            for s in 1..=self.t.k {
                let h = acc + self.gain(i, s);
                self.a[i] = s;
                self.rec(i + 1, h);
            }
        }
    }
    let n = spec.len();
    let mut w = Walk { t, spec, a: vec![0; n], best: vec![i64::MIN; t.k as usize + 1] };
    if n == 1 {
        for s in 1..=t.k {
            w.best[s as usize] = t.unary[s as usize];
        }
    } else {
        w.rec(0, 0);
    }
    let without = *w.best.iter().max().unwrap();
    let with = (1..=t.k as usize).map(|s| w.best[s] + t.root[s]).max().unwrap();
    (with, without)
}

fn dp_equals_exhaustive() -> Outcome {
    let start = Instant::now();
    let mut checked = 0usize;
    let cases: [(&str, GrammarSpec, fn(usize) -> Vec<common::Shape>); 2] =
        [("parens", parens_grammar(), binary_shapes), ("anbn", anbn_spec(), ternary_shapes)];
    for (name, g, shapes) in cases {
        let tables = Tables::new(&g);
        for n in 1..=8 {
            for shape in shapes(n) {
                let spec = shape.to_spec();
                let topo = shape.to_topology();
                let dp = max_harmony_dp(&g, &topo).0;
                let (brute, brute_sub) = brute_max(&tables, &spec);
                ensure(dp == brute as f64, format!("{name} {}: dp {dp} vs {brute}", shape.bracket()))?;
                let dp_sub = max_harmony_dp_with(&g, &topo, RootBonus::Exclude).0;
                ensure(dp_sub == brute_sub as f64, format!("{name} {}: subtree dp {dp_sub} vs {brute_sub}", shape.bracket()))?;
                checked += 1;
            }
        }
    }
    let took = start.elapsed();
    ensure(took <= Duration::from_secs(30), format!("took {took:?}"))?;
    Ok(format!("{checked} topologies with <= 8 nodes, both grammars, exact"))
}

fn enumeration() -> Outcome {
    let g = parens_grammar();
    let cache = EnumCache::new();
    let s = g.symbol_index("S").unwrap();
    let mut total = 0u128;
    let mut full = 0;
    for l in 1..=4 {
        for d in 0..=4 {
            let found = enum_subtrees(l, d, &g, &cache);
            let mut expected = 0u128;
            for shape in levelled_binary_shapes(l, d) {
                let n = harmony_histogram(&g, &shape).get(&-1).copied().unwrap_or(0);
                if shape.size() <= 8 {
                    let raw = raw_count(&g, &shape, -1.0) as u128;
                    ensure(raw == n, format!("{}: labelings {raw} vs histogram {n}", shape.bracket()))?;
                }
                expected += n;
            }
            ensure(found.len() as u128 == expected, format!("L={l} D={d}: {} vs {expected}", found.len()))?;
            let distinct: HashSet<String> = found.iter().map(|t| t.to_bracket(&g)).collect();
            ensure(distinct.len() == found.len(), format!("duplicates at L={l} D={d}"))?;
            for t in found.iter() {
                let (tree, _) = t.to_tree();
                ensure(labeled_harmony(t, &g, RootBonus::Exclude) == -1.0, "tree does not score -1")?;
                ensure(is_feasible(&tree, &g).max_harmony == -1.0, "DP maximum is not -1")?;
                for v in tree.preorder() {
                    let sub = tree.subtree(v).unwrap();
                    ensure(is_feasible(&sub, &g).max_harmony == -1.0, "subtree maximum is not -1")?;
                }
                if t.symbol() == s {
                    full += 1;
                    ensure(labeled_harmony(t, &g, RootBonus::Include) == 0.0, "full tree does not score 0")?;
                    ensure(is_grammatical(&tree, &g).0, "full tree is not grammatical")?;
                }
            }
            total += expected;
        }
    }
    ensure(full > 0, "no full trees in range")?;
    Ok(format!("{total} trees over L<=4, D<=4 match; {full} full trees score 0"))
}

fn morphing(dir: &Path) -> Outcome {
    let mut parts = Vec::new();
    for (d, l, lo, hi, reference) in [(4, 4, 10.0, 500.0, 55), (6, 5, 50.0, 5000.0, 450), (7, 6, 300.0, 20000.0, 2100)] {
        let out = dir.join(format!("morph_{l}_{d}.csv"));
        let (code, _) = harmonia(&[
            "morph-tree",
            "--paper-defaults",
            "--leaves",
            &l.to_string(),
            "--depth",
            &d.to_string(),
            "--out",
            out.to_str().unwrap(),
        ]);
        ensure(code == 0, format!("exit code {code}"))?;
        let rows = csv_rows(&out);
        ensure(rows.len() == 50, format!("{} trials", rows.len()))?;
        let moves: Vec<f64> = rows
            .iter()
            .map(|r| if r[3] == "true" { f(&r[2]) } else { f64::INFINITY })
            .collect();
        let stuck = moves.iter().filter(|m| m.is_infinite()).count();
        let med = median(moves);
        ensure((lo..=hi).contains(&med), format!("D={d} L={l}: median {med} outside [{lo}, {hi}]"))?;
        parts.push(format!("D={d} L={l} median {med} (ref {reference}, {stuck} stuck)"));
    }
    let g = parens_grammar();
    let r44 = feasibility_rate(4, 4, 10_000, 11, &g).map_err(|e| e.to_string())?;
    let r67 = feasibility_rate(6, 7, 10_000, 12, &g).map_err(|e| e.to_string())?;
    ensure(r44 < 0.01, format!("feasible rate {r44} at L=4 D=4"))?;
    ensure(r67 < 0.001, format!("feasible rate {r67} at L=6 D=7"))?;
    parts.push(format!("random feasible rates {r44} and {r67}"));
    Ok(parts.join("; "))
}

fn supervised_gradient_check() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_basis = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..20u64 {
        let visible = 1 + (seed % 2) as usize;
        let hidden = (seed / 2 % 2) as usize;
        let terms = 1 + (seed % 4) as usize;
        let (m, _) = random_model(visible, hidden, terms, 500 + seed).map_err(|e| e.to_string())?;
        let d = random_dataset(visible, hidden, 1 + (seed % 3) as usize, 600 + seed).map_err(|e| e.to_string())?;
        let exact = supervised_gradient(&m, &d).map_err(|e| e.to_string())?;
        let fd = finite_difference(|w| finite_lambda_objective(&m.with_weights(w), &d, 1e4), &m.weights, 1e-4)
            .map_err(|e| e.to_string())?;
        for (a, b) in exact.iter().zip(&fd) {
            worst = worst.max((a - b).abs());
        }
        let u = random_unitary(1 << hidden, &mut rng);
        let w = kron(&u, &CMatrix::identity(2, 2));
        let gw = supervised_gradient_in_basis(&m, &d, Some(&w)).map_err(|e| e.to_string())?;
        for (a, b) in exact.iter().zip(&gw) {
            worst_basis = worst_basis.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-3, format!("max finite-difference error {worst:.3e}"))?;
    ensure(worst_basis <= 1e-9, format!("basis change moved the gradient by {worst_basis:.3e}"))?;
    let took = start.elapsed();
    ensure(took <= Duration::from_secs(60), format!("took {took:?}"))?;
    Ok(format!("20 models, max error {worst:.2e}, basis change {worst_basis:.2e}"))
}

fn relent_gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut worst = 0.0f64;
    let mut worst_zero = 0.0f64;
    for qubits in [1usize, 2] {
        for trial in 0..5u64 {
            let terms = if qubits == 1 { 1 } else { 1 + trial as usize % 3 };
            let (m, _) = random_model(qubits - 1, 0, terms, trial).map_err(|e| e.to_string())?;
            let m = m.with_weights(&(0..terms).map(|_| rng.random_range(-1.5..1.5)).collect::<Vec<_>>());
            let rho = random_density(m.dim(), &mut rng);
            let g = relent_gradient(&m, &rho).map_err(|e| e.to_string())?;
            let fd = finite_difference(|w| relent_objective(&m.with_weights(w), &rho), &m.weights, 1e-5)
                .map_err(|e| e.to_string())?;
            for (a, b) in g.iter().zip(&fd) {
                worst = worst.max((a - b).abs());
            }
            let sigma = gibbs(&m).map_err(|e| e.to_string())?;
            for x in relent_gradient(&m, &sigma).map_err(|e| e.to_string())? {
                worst_zero = worst_zero.max(x.abs());
            }
        }
    }
    ensure(worst <= 1e-6, format!("max finite-difference error {worst:.3e}"))?;
    ensure(worst_zero <= 1e-9, format!("gradient at rho = sigma {worst_zero:.3e}"))?;
    Ok(format!("max error {worst:.2e}, at sigma {worst_zero:.2e}"))
}

fn sampling_scaling() -> Outcome {
    let (m, _) = random_model(1, 1, 3, 21).map_err(|e| e.to_string())?;
    let d = random_dataset(1, 1, 2, 22).map_err(|e| e.to_string())?;
    let exact = supervised_gradient(&m, &d).map_err(|e| e.to_string())?;
    let mut ratios = Vec::new();
    for i in 0..m.term_count() {
        let med = |n: u64| median((0..50).map(|s| sampled_gradient(&m, &d, n, s).unwrap().stderr[i]).collect());
        let ratio = med(4000) / med(1000);
        ensure((ratio - 0.5).abs() <= 0.1, format!("component {i}: stderr ratio {ratio:.3}"))?;
        ratios.push(format!("{ratio:.3}"));
    }
    let runs = 1000;
    let mut mean = vec![0.0; exact.len()];
    let mut var = vec![0.0; exact.len()];
    for s in 0..runs {
        let g = sampled_gradient(&m, &d, 200, s).map_err(|e| e.to_string())?;
        for i in 0..exact.len() {
            mean[i] += g.estimate[i] / runs as f64;
            var[i] += g.stderr[i].powi(2) / runs as f64;
        }
    }
    let mut zs = Vec::new();
    for i in 0..exact.len() {
        let se = (var[i] / runs as f64).sqrt();
        let z = (mean[i] - exact[i]).abs() / se;
        ensure(z <= 4.0, format!("component {i}: bias {z:.2} standard errors"))?;
        zs.push(format!("{z:.2}"));
    }
    Ok(format!("stderr ratios [{}], bias in standard errors [{}]", ratios.join(", "), zs.join(", ")))
}

fn operator_properties() -> Outcome {
    let (h, g, t) = anbn_operator(1).map_err(|e| e.to_string())?;
    let space = h.space().unwrap();
    ensure(h.is_diagonal(0.0), "AnBn operator is not diagonal")?;
    ensure(is_classical(&h, space, &space.modes()).map_err(|e| e.to_string())?, "AnBn operator is not classical")?;
    let k = g.symbol_count();
    let diag = h.diagonal();
    for idx in 0..h.dim() {
        let mut a = vec![0u8; t.len()];
        let mut rest = idx;
        for slot in a.iter_mut().rev() {
            *slot = (rest % (k + 1)) as u8;
            rest /= k + 1;
        }
        ensure(assignment_index(&a, k) == idx, "index round trip")?;
        let want = harmony(&g, &t, &Assignment(a.clone())).map_err(|e| e.to_string())?;
        ensure((diag[idx] - want).abs() < 1e-12, format!("{a:?}: {} vs {want}", diag[idx]))?;
    }
    let tc = toric_harmony(2, 2, true).map_err(|e| e.to_string())?;
    let res = hermitian_residual(tc.operator.matrix());
    ensure(res <= 1e-12, format!("toric residual {res:.3e}"))?;
    ensure(
        !is_classical(&tc.operator, tc.space(), &tc.space().modes()).map_err(|e| e.to_string())?,
        "toric operator is classical",
    )?;
    let mut worst_top = 0.0f64;
    let mut min_margin = f64::INFINITY;
    for name in ["identity", "cnot", "cz", "swap", "hadamard"] {
        let d = CausalDiamond::single(named_gate(name).unwrap()).map_err(|e| e.to_string())?;
        for s in s_grid(11) {
            let row = spectral_row(&d, s).map_err(|e| e.to_string())?;
            ensure(row.lambda_max.abs() <= 1e-8, format!("{name} s={s}: lambda_max {:e}", row.lambda_max))?;
            ensure(row.gap >= row.bound, format!("{name} s={s}: gap {} < {}", row.gap, row.bound))?;
            worst_top = worst_top.max(row.lambda_max.abs());
            min_margin = min_margin.min(row.gap / row.bound);
        }
    }
    Ok(format!(
        "AnBn diagonal over {} states, toric residual {res:.1e}, |lambda_max| <= {worst_top:.1e}, gap/bound >= {min_margin:.2}",
        h.dim()
    ))
}

fn zeno_sweep() -> Outcome {
    let d = CausalDiamond::single(named_gate("cnot").unwrap()).map_err(|e| e.to_string())?;
    let runs = 200;
    let rate = |r: usize| -> Result<f64, String> {
        let s = diamond_schedule(&d, r).map_err(|e| e.to_string())?;
        Ok(s.successes(runs, 17) as f64 / runs as f64)
    };
    let (p4, p64) = (rate(4)?, rate(64)?);
    let sd = (p4 * (1.0 - p4) / runs as f64 + p64 * (1.0 - p64) / runs as f64).sqrt();
    ensure(p64 - p4 > 2.0 * sd, format!("p4={p4} p64={p64} sd={sd:.3}"))?;
    let bound = zeno_bound(diamond_family(&d), 50, 1e-6).map_err(|e| e.to_string())?;
    for (r, p) in [(4, p4), (64, p64)] {
        ensure(1.0 - p <= bound.failure_bound(r), format!("r={r}: failure {} above bound", 1.0 - p))?;
    }
    Ok(format!(
        "success {p4} -> {p64} (2 sd = {:.3}); bound at r=64 is {:.2e}",
        2.0 * sd,
        bound.failure_bound(64)
    ))
}

fn determinism(dir: &Path) -> Outcome {
    let commands: Vec<Vec<&str>> = vec![
        vec!["anneal-anbn", "--n", "2..12", "--trials", "5", "--seed", "3"],
        vec!["enum-trees", "--leaves", "3", "--depth", "3"],
        vec!["morph-tree", "--leaves", "4", "--depth", "4", "--trials", "10", "--seed", "5"],
        vec!["grad-check", "--visible", "1", "--hidden", "1", "--terms", "4", "--seed", "3"],
        vec!["relent-check", "--qubits", "2", "--terms", "3", "--seed", "4"],
        vec!["toric", "--rows", "1", "--cols", "2", "--open"],
        vec!["circuit-harmony", "--gates", "cnot,hadamard", "--s-grid", "5"],
        vec!["zeno", "--r", "4,16", "--runs", "40", "--seed", "8"],
        vec!["train", "--iterations", "5", "--samples", "100", "--seed", "2"],
    ];
    for (i, args) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = dir.join(format!("det_{i}_{run}.csv"));
            let mut full = args.clone();
            full.extend(["--out", path.to_str().unwrap()]);
            let (code, stdout) = harmonia(&full);
            ensure(code == 0, format!("{}: exit code {code}", args[0]))?;
            outputs.push((std::fs::read(&path).map_err(|e| e.to_string())?, stdout));
        }
        ensure(outputs[0] == outputs[1], format!("{} differs between runs", args[0]))?;
    }
    Ok(format!("{} commands rerun byte-identically", commands.len()))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let d = dir.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("AnBn annealing reproduction", Box::new(|| anbn_annealing(d))),
        ("DP equals exhaustive search", Box::new(dp_equals_exhaustive)),
        ("enumeration correctness", Box::new(enumeration)),
        ("tree morphing reproduction", Box::new(|| morphing(d))),
        ("supervised gradient", Box::new(supervised_gradient_check)),
        ("relative-entropy gradient", Box::new(relent_gradient_check)),
        ("sampling estimator scaling", Box::new(sampling_scaling)),
        ("quantum operator properties", Box::new(operator_properties)),
        ("Zeno sweep", Box::new(zeno_sweep)),
        ("CLI determinism", Box::new(|| determinism(d))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
