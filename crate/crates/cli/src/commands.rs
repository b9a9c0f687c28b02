use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use harmonia_core::anneal::{
    anbn_trial, log_log_slope, median, trial_seed, AnbnRecord, AnnealConfig, CoolingSchedule,
    Restart,
};
use harmonia_core::grammar::{max_harmony_dp_with, parens_grammar, GrammarSpec, RootBonus};
use harmonia_core::trees::{
    self, enum_subtrees, random_binary_tree, EnumCache, MorphConfig, TreeError,
};
use harmonia_quantum::circuit::{named_gate, s_grid, spectral_row, CausalDiamond};
use harmonia_quantum::linalg::{hermitian_residual, kron};
use harmonia_quantum::operator::{is_classical, write_operator};
use harmonia_quantum::qbm::{
    finite_difference, finite_lambda_objective, random_dataset, random_density, random_model,
    random_unitary, relent_gradient, relent_objective, supervised_gradient,
    supervised_gradient_in_basis, train_model, GradientSource, HarmonyModel, LabeledDataset, Pauli,
    PauliString, TrainConfig, TrainStatus,
};
use harmonia_quantum::toric::{top_degeneracy, toric_harmony};
use harmonia_quantum::zeno::{diamond_family, diamond_schedule, run_seed, zeno_bound};
use harmonia_quantum::CMatrix;

use crate::report::{num, sci, usage, Report, Result};
use crate::{
    AnnealArgs, CircuitArgs, EnumArgs, GradArgs, MorphArgs, RelentArgs, RestartKind, ScheduleKind,
    ToricArgs, TrainArgs, ZenoArgs,
};

const PAPER_ANBN_N: [usize; 4] = [4, 16, 64, 256];
const PAPER_ANBN_TRIALS: usize = 20;
const PAPER_MORPH_TRIALS: usize = 50;
const PAPER_ZENO_R: [usize; 2] = [4, 64];
const PAPER_ZENO_RUNS: usize = 200;
const PAPER_GRAD_MODELS: usize = 20;
const PAPER_S_GRID: usize = 11;
const ALL_GATES: [&str; 5] = ["identity", "cnot", "cz", "swap", "hadamard"];

fn pick<T>(given: Option<T>, paper: bool, calibrated: T, quick: T) -> T {
    given.unwrap_or(if paper { calibrated } else { quick })
}

fn load_grammar(path: Option<&Path>) -> Result<GrammarSpec> {
    match path {
        Some(p) => Ok(GrammarSpec::parse(&std::fs::read_to_string(p)?)?),
        None => Ok(parens_grammar()),
    }
}

fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    Ok(LabeledDataset::parse(&std::fs::read_to_string(path)?)?)
}

#[derive(Debug)]
struct AnnealParams {
    n: Vec<usize>,
    reps: usize,
    sweeps: usize,
    trials: usize,
    seed: u64,
    schedule: ScheduleKind,
    restart: RestartKind,
    t0: f64,
    t_final: f64,
}

pub fn anneal_anbn(a: &AnnealArgs, paper: bool) -> Result<Report> {
    let p = AnnealParams {
        n: pick(a.n.clone().map(|l| l.0), paper, PAPER_ANBN_N.to_vec(), vec![4, 16]),
        reps: a.reps,
        sweeps: a.sweeps,
        trials: pick(a.trials, paper, PAPER_ANBN_TRIALS, 5),
        seed: a.seed.unwrap_or(7),
        schedule: a.schedule,
        restart: a.restart,
        t0: a.t0,
        t_final: a.t_final,
    };
    if p.n.contains(&0) {
        return Err(usage("--n values must be at least 1"));
    }
    if p.reps == 0 || p.sweeps == 0 || p.trials == 0 {
        return Err(usage("--reps, --sweeps and --trials must be at least 1"));
    }
    let restart = match p.restart {
        RestartKind::Staged => Restart::Staged,
        RestartKind::Fresh => Restart::Fresh,
    };
    let steps = match restart {
        Restart::Staged => p.reps * p.sweeps,
        Restart::Fresh => p.sweeps,
    };
    let sched = match p.schedule {
        ScheduleKind::Geometric => CoolingSchedule::geometric_to(p.t0, p.t_final, steps),
        ScheduleKind::Linear => {
            let s = CoolingSchedule::Linear { t0: p.t0, t_final: p.t_final, steps };
            s.validate().map(|_| s)
        }
    }
    .map_err(|e| usage(e.to_string()))?;
    let cfg = AnnealConfig { restart, ..AnnealConfig::sweeps(1, p.reps, p.seed) };

    let jobs: Vec<(usize, usize)> = p
        .n
        .iter()
        .flat_map(|&n| (0..p.trials).map(move |t| (n, t)))
        .collect();
    let stats = jobs
        .par_iter()
        .map(|&(n, t)| anbn_trial(n, t, &cfg, &sched))
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let mut rep = Report::new(
        "anneal-anbn",
        &p,
        "n,trials,successes,success_rate,median_evaluations,median_evaluations_per_n",
    );
    let mut medians = Vec::new();
    for (i, &n) in p.n.iter().enumerate() {
        let rec = AnbnRecord::from_trials(n, &stats[i * p.trials..(i + 1) * p.trials]);
        rep.row(&[
            n.to_string(),
            rec.trials.to_string(),
            rec.successes.to_string(),
            num(rec.success_rate),
            num(rec.median_evaluations),
            num(rec.median_evaluations / n as f64),
        ]);
        rep.check(
            rec.successes == rec.trials,
            format!("n={n}: {}/{} trials reached Harmony 0", rec.successes, rec.trials),
        );
        medians.push(rec.median_evaluations);
    }
    if p.n.len() > 1 {
        let xs: Vec<f64> = p.n.iter().map(|&n| n as f64).collect();
        rep.note(format!("log-log slope of median evaluations: {:.3}", log_log_slope(&xs, &medians)));
    }
    Ok(rep)
}

// Some fields are only read through Debug, for the digest.
#[allow(dead_code)]
#[derive(Debug)]
struct EnumParams<'a> {
    leaves: usize,
    depth: usize,
    grammar: &'a GrammarSpec,
}

pub fn enum_trees(a: &EnumArgs) -> Result<Report> {
    let g = load_grammar(a.grammar.as_deref())?;
    if a.leaves == 0 {
        return Err(usage("--leaves must be at least 1"));
    }
    let cache = EnumCache::new();
    let trees = enum_subtrees(a.leaves, a.depth, &g, &cache);
    let p = EnumParams { leaves: a.leaves, depth: a.depth, grammar: &g };
    let mut rep = Report::new("enum-trees", &p, "index,tree");
    let mut all_minus_one = true;
    for (i, t) in trees.iter().enumerate() {
        let (tree, _) = t.to_tree();
        let (topo, _) = tree.to_topology();
        all_minus_one &= max_harmony_dp_with(&g, &topo, RootBonus::Exclude).0 == -1.0;
        rep.row(&[i.to_string(), t.to_bracket(&g)]);
    }
    rep.note(format!("count {}", trees.len()));
    rep.check(all_minus_one, "every listed tree has subtree Harmony -1");
    Ok(rep)
}

// Some fields are only read through Debug, for the digest.
#[allow(dead_code)]
#[derive(Debug)]
struct MorphParams<'a> {
    leaves: usize,
    depth: usize,
    trials: usize,
    seed: u64,
    budget: u64,
    tabu: usize,
    grammar: &'a GrammarSpec,
}

pub fn morph_tree(a: &MorphArgs, paper: bool) -> Result<Report> {
    let g = load_grammar(a.grammar.as_deref())?;
    let mut base = MorphConfig::new(a.leaves, a.depth, 0);
    base.tabu_window = a.tabu;
    if let Some(b) = a.budget {
        if b == 0 {
            return Err(usage("--budget must be at least 1"));
        }
        let steps = b.div_ceil(base.max_up as u64) as usize;
        base.schedule = CoolingSchedule::default_for(steps).map_err(|e| usage(e.to_string()))?;
    }
    base.validate().map_err(|e| match e {
        TreeError::Config(m) => usage(m),
        other => other.into(),
    })?;
    let p = MorphParams {
        leaves: a.leaves,
        depth: a.depth,
        trials: pick(a.trials, paper, PAPER_MORPH_TRIALS, 10),
        seed: a.seed.unwrap_or(1),
        budget: base.budget(),
        tabu: a.tabu,
        grammar: &g,
    };
    if p.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let results = (0..p.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(p.seed, p.leaves, t);
            let t0 = random_binary_tree(p.leaves, p.depth, seed ^ 0x5EED)?;
            let cfg = MorphConfig { seed, ..base.clone() };
            Ok((seed, trees::morph_tree(&t0, &cfg, &g)?))
        })
        .collect::<std::result::Result<Vec<_>, TreeError>>()?;

    let mut rep = Report::new("morph-tree", &p, "trial,seed,moves,converged,harmony");
    let mut moves = Vec::new();
    let mut stuck = 0;
    for (t, (seed, r)) in results.iter().enumerate() {
        rep.row(&[
            t.to_string(),
            seed.to_string(),
            r.move_count.to_string(),
            r.converged.to_string(),
            num(r.harmony),
        ]);
        if r.converged {
            moves.push(r.move_count as f64);
        } else {
            stuck += 1;
            moves.push(f64::INFINITY);
        }
    }
    rep.note(format!("median moves {}", num(median(&mut moves))));
    if stuck > 0 {
        rep.note(format!("warning: {stuck} of {} trials did not converge within the budget", p.trials));
    }
    Ok(rep)
}

// Some fields are only read through Debug, for the digest.
#[allow(dead_code)]
#[derive(Debug)]
struct GradParams {
    visible: usize,
    hidden: usize,
    terms: usize,
    examples: usize,
    models: usize,
    seed: u64,
    lambda: f64,
    step: f64,
    tol: f64,
    data: Option<String>,
}

/// Largest deviation of the gradient under a random hidden-basis rotation.
fn basis_shift(
    model: &HarmonyModel,
    data: &LabeledDataset,
    g: &[f64],
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_unitary(1 << model.hidden(), &mut rng);
    let w = kron(&u, &CMatrix::identity(2, 2));
    let gw = supervised_gradient_in_basis(model, data, Some(&w))?;
    Ok(g.iter().zip(&gw).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

pub fn grad_check(a: &GradArgs, paper: bool) -> Result<Report> {
    let fixed = a.data.as_deref().map(load_dataset).transpose()?;
    let (visible, hidden) = match &fixed {
        Some(d) => (d.visible(), d.hidden()),
        None => (a.visible, a.hidden),
    };
    let p = GradParams {
        visible,
        hidden,
        terms: a.terms,
        examples: a.examples,
        models: pick(a.models, paper, PAPER_GRAD_MODELS, 1),
        seed: a.seed,
        lambda: a.lambda,
        step: a.step,
        tol: a.tol,
        data: fixed.as_ref().map(LabeledDataset::to_text),
    };
    if p.models == 0 || p.terms == 0 || p.examples == 0 {
        return Err(usage("--models, --terms and --examples must be at least 1"));
    }
    if !(p.lambda > 0.0 && p.step > 0.0 && p.tol > 0.0) {
        return Err(usage("--lambda, --step and --tol must be positive"));
    }
    let rows = (0..p.models)
        .into_par_iter()
        .map(|m| {
            let seed = run_seed(p.seed, m as u64);
            let (model, strings) = random_model(p.visible, p.hidden, p.terms, seed)
                .map_err(|e| usage(e.to_string()))?;
            let data = match &fixed {
                Some(d) => d.clone(),
                None => random_dataset(p.visible, p.hidden, p.examples, seed ^ 1)?,
            };
            let exact = supervised_gradient(&model, &data)?;
            let fd = finite_difference(
                |w| finite_lambda_objective(&model.with_weights(w), &data, p.lambda),
                &model.weights,
                p.step,
            )?;
            let shift = basis_shift(&model, &data, &exact, seed ^ 2)?;
            Ok((strings, exact, fd, shift))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rep = Report::new("grad-check", &p, "model,component,term,exact,finite_difference,abs_error");
    let mut worst = 0.0f64;
    let mut worst_at = (0, 0);
    let mut worst_shift = 0.0f64;
    for (m, (strings, exact, fd, shift)) in rows.iter().enumerate() {
        for i in 0..exact.len() {
            let err = (exact[i] - fd[i]).abs();
            if err > worst {
                worst = err;
                worst_at = (m, i);
            }
            rep.row(&[m.to_string(), i.to_string(), strings[i].to_string(), sci(exact[i]), sci(fd[i]), sci(err)]);
        }
        worst_shift = worst_shift.max(*shift);
    }
    rep.check(
        worst <= p.tol,
        format!(
            "gradient vs finite differences: max error {worst:.3e} (model {}, component {}) <= {:e}",
            worst_at.0, worst_at.1, p.tol
        ),
    );
    rep.check(worst_shift <= 1e-9, format!("hidden-basis invariance: max change {worst_shift:.3e} <= 1e-9"));
    Ok(rep)
}

#[derive(Debug)]
struct RelentParams {
    qubits: usize,
    terms: usize,
    seed: u64,
    step: f64,
    tol: f64,
}

pub fn relent_check(a: &RelentArgs) -> Result<Report> {
    let p = RelentParams { qubits: a.qubits, terms: a.terms, seed: a.seed, step: a.step, tol: a.tol };
    if p.qubits == 0 || p.terms == 0 {
        return Err(usage("--qubits and --terms must be at least 1"));
    }
    if !(p.step > 0.0 && p.tol > 0.0) {
        return Err(usage("--step and --tol must be positive"));
    }
    let (model, strings) =
        random_model(p.qubits - 1, 0, p.terms, p.seed).map_err(|e| usage(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ 1);
    let rho = random_density(model.dim(), &mut rng);
    let g = relent_gradient(&model, &rho)?;
    let fd = finite_difference(|w| relent_objective(&model.with_weights(w), &rho), &model.weights, p.step)?;
    let sigma = harmonia_quantum::qbm::gibbs(&model)?;
    let at_gibbs = relent_gradient(&model, &sigma)?;

    let mut rep = Report::new("relent-check", &p, "component,term,analytic,finite_difference,abs_error,at_gibbs");
    let mut worst = 0.0f64;
    let mut worst_zero = 0.0f64;
    for i in 0..g.len() {
        let err = (g[i] - fd[i]).abs();
        worst = worst.max(err);
        worst_zero = worst_zero.max(at_gibbs[i].abs());
        rep.row(&[i.to_string(), strings[i].to_string(), sci(g[i]), sci(fd[i]), sci(err), sci(at_gibbs[i])]);
    }
    rep.check(worst <= p.tol, format!("gradient vs finite differences: max error {worst:.3e} <= {:e}", p.tol));
    rep.check(worst_zero <= 1e-9, format!("gradient at rho = sigma: max {worst_zero:.3e} <= 1e-9"));
    Ok(rep)
}

#[derive(Debug)]
struct ToricParams {
    rows: usize,
    cols: usize,
    open: bool,
}

pub fn toric(a: &ToricArgs) -> Result<Report> {
    let p = ToricParams { rows: a.rows, cols: a.cols, open: a.open };
    let tc = toric_harmony(p.rows, p.cols, !p.open).map_err(|e| match e {
        harmonia_quantum::QuantumError::Argument(m) => usage(m),
        other => other.into(),
    })?;
    let spec = tc.operator.eigh()?;
    let mut rep = Report::new("toric", &p, "index,eigenvalue");
    for (i, v) in spec.values.iter().enumerate() {
        rep.row(&[i.to_string(), sci(*v)]);
    }
    let (top, deg) = top_degeneracy(&spec, 1e-9);
    rep.note(format!("edges {} dim {}", tc.edges.len(), tc.operator.dim()));
    rep.note(format!("top eigenvalue {} degeneracy {deg}", num(top)));
    let res = hermitian_residual(tc.operator.matrix());
    rep.check(res <= 1e-12, format!("Hermitian: residual {res:.3e} <= 1e-12"));
    let space = tc.space();
    let classical = is_classical(&tc.operator, space, &space.modes())?;
    rep.check(!classical, "operator is not classical");
    if let Some(path) = &a.dump {
        let fillers = vec!["1".to_string()];
        std::fs::write(path, write_operator(&tc.operator, &tc.role_names(), &fillers))?;
    }
    Ok(rep)
}

#[derive(Debug)]
struct CircuitParams {
    gates: Vec<String>,
    s_grid: usize,
}

pub fn circuit_harmony(a: &CircuitArgs, paper: bool) -> Result<Report> {
    let all: Vec<String> = ALL_GATES.iter().map(|s| s.to_string()).collect();
    let p = CircuitParams {
        gates: pick(a.gates.clone(), paper, all.clone(), all),
        s_grid: pick(a.s_grid, paper, PAPER_S_GRID, PAPER_S_GRID),
    };
    if p.s_grid < 2 {
        return Err(usage("--s-grid needs at least 2 points"));
    }
    let mut diamonds = Vec::new();
    for name in &p.gates {
        let u = named_gate(name).ok_or_else(|| usage(format!("unknown gate `{name}`")))?;
        diamonds.push((name, CausalDiamond::single(u)?));
    }
    let mut rep = Report::new("circuit-harmony", &p, "gate,s,lambda_max,gap,bound,degeneracy,pass");
    for (name, d) in &diamonds {
        let mut ok = true;
        for s in s_grid(p.s_grid) {
            let row = spectral_row(d, s)?;
            let pass = row.passes();
            ok &= pass;
            rep.row(&[
                name.to_string(),
                num(s),
                sci(row.lambda_max),
                sci(row.gap),
                sci(row.bound),
                row.degeneracy.to_string(),
                pass.to_string(),
            ]);
        }
        rep.check(ok, format!("{name}: lambda_max ~ 0 and gap >= bound at {} points", p.s_grid));
    }
    Ok(rep)
}

#[derive(Debug)]
struct ZenoParams {
    gate: String,
    r: Vec<usize>,
    runs: usize,
    seed: u64,
    bound_grid: usize,
}

pub fn zeno(a: &ZenoArgs, paper: bool) -> Result<Report> {
    let p = ZenoParams {
        gate: a.gate.clone(),
        r: pick(a.r.clone().map(|l| l.0), paper, PAPER_ZENO_R.to_vec(), PAPER_ZENO_R.to_vec()),
        runs: pick(a.runs, paper, PAPER_ZENO_RUNS, 50),
        seed: a.seed.unwrap_or(17),
        bound_grid: a.bound_grid,
    };
    if p.r.contains(&0) || p.runs == 0 || p.bound_grid == 0 {
        return Err(usage("--r values, --runs and --bound-grid must be at least 1"));
    }
    let u = named_gate(&p.gate).ok_or_else(|| usage(format!("unknown gate `{}`", p.gate)))?;
    let d = CausalDiamond::single(u)?;
    let bound = zeno_bound(diamond_family(&d), p.bound_grid, 1e-6)?;
    let mut rep = Report::new("zeno", &p, "r,runs,successes,success_rate,failure_rate,failure_bound");
    let mut rates = Vec::new();
    for &r in &p.r {
        let sched = diamond_schedule(&d, r)?;
        let hits = (0..p.runs)
            .into_par_iter()
            .filter(|&i| sched.run(run_seed(p.seed, i as u64)).success)
            .count();
        let rate = hits as f64 / p.runs as f64;
        let fail = (p.runs - hits) as f64 / p.runs as f64;
        let fb = bound.failure_bound(r);
        rep.row(&[r.to_string(), p.runs.to_string(), hits.to_string(), num(rate), num(fail), sci(fb)]);
        rep.check(fail <= fb, format!("r={r}: failure rate {} <= bound {fb:.3e}", num(fail)));
        rates.push((r, rate));
    }
    if let (Some(first), Some(last)) = (rates.first(), rates.last()) {
        if rates.len() > 1 {
            rep.check(
                last.1 >= first.1,
                format!("success(r={}) = {} >= success(r={}) = {}", last.0, num(last.1), first.0, num(first.1)),
            );
        }
    }
    Ok(rep)
}

// Some fields are only read through Debug, for the digest.
#[allow(dead_code)]
#[derive(Debug)]
struct TrainParams {
    visible: usize,
    hidden: usize,
    terms: usize,
    examples: usize,
    seed: u64,
    lipschitz: f64,
    iterations: usize,
    samples: u64,
    tolerance: f64,
    data: Option<String>,
}

pub fn train(a: &TrainArgs) -> Result<Report> {
    let fixed = a.data.as_deref().map(load_dataset).transpose()?;
    let (visible, hidden) = match &fixed {
        Some(d) => (d.visible(), d.hidden()),
        None => (a.visible, a.hidden),
    };
    let p = TrainParams {
        visible,
        hidden,
        terms: a.terms,
        examples: a.examples,
        seed: a.seed,
        lipschitz: a.lipschitz,
        iterations: a.iterations,
        samples: a.samples,
        tolerance: a.tolerance,
        data: fixed.as_ref().map(LabeledDataset::to_text),
    };
    let (model, strings) =
        random_model(p.visible, p.hidden, p.terms, p.seed).map_err(|e| usage(e.to_string()))?;
    // without a term on the label the objective is flat at 1/2
    let model = if strings.iter().any(|s| s.0.last() != Some(&Pauli::I)) {
        model
    } else {
        let n = p.visible + p.hidden + 1;
        let mut all = vec![PauliString::z_on(n, &[n - 1])];
        all.extend(strings);
        let mut w = vec![0.0];
        w.extend(&model.weights);
        HarmonyModel::from_paulis(p.visible, p.hidden, &all, w)?
    };
    let data = match fixed {
        Some(d) => d,
        None => random_dataset(p.visible, p.hidden, p.examples.max(1), p.seed ^ 1)?,
    };
    let cfg = TrainConfig { tolerance: p.tolerance, seed: p.seed, ..TrainConfig::new(p.lipschitz, p.iterations) };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let source = if p.samples == 0 {
        GradientSource::Exact
    } else {
        GradientSource::Sampled { samples: p.samples }
    };
    let result = train_model(&model, &data, &cfg, source)?;
    let mut rep = Report::new("train", &p, "iteration,objective,gradient_norm,samples");
    for r in &result.trace {
        rep.row(&[r.iteration.to_string(), sci(r.objective), sci(r.gradient_norm), r.samples.to_string()]);
    }
    let first = result.trace.first().map_or(f64::NAN, |r| r.objective);
    let last = result.trace.last().map_or(f64::NAN, |r| r.objective);
    rep.note(format!("objective {} -> {} ({:?})", num(first), num(last), result.status));
    rep.check(result.status != TrainStatus::NonFinite, "objective and gradient stayed finite");
    Ok(rep)
}
