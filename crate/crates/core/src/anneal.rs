//! Potts-model simulated annealing over symbol assignments.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grammar::{
    anbn_grammar, delta_unchecked, harmony, Assignment, GrammarError, GrammarSpec, TreeTopology,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnealError {
    #[error("grammar has no symbols to anneal over")]
    NoSymbols,
    #[error("invalid cooling schedule: {0}")]
    Schedule(String),
    #[error("invalid annealing config: {0}")]
    Config(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// Temperatures `t(1), ..., t(N)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoolingSchedule {
    /// `t(i) = t0 * alpha^i`.
    Geometric { t0: f64, alpha: f64, steps: usize },
    /// Straight line from `t0` at `i = 1` to `t_final` at `i = N`.
    Linear { t0: f64, t_final: f64, steps: usize },
    Table(Vec<f64>),
}

pub const DEFAULT_T0: f64 = 2.0;
pub const DEFAULT_T_FINAL: f64 = 0.05;
pub const DEFAULT_REPETITIONS: usize = 10;
pub const DEFAULT_SWEEPS: usize = 20;

impl CoolingSchedule {
    /// Geometric schedule from `t0` whose last step lands on `t_final`.
    pub fn geometric_to(t0: f64, t_final: f64, steps: usize) -> Result<Self, AnnealError> {
        if steps == 0 {
            return Err(AnnealError::Schedule("zero steps".into()));
        }
        if !(t0 > 0.0 && t_final > 0.0 && t_final <= t0) {
            return Err(AnnealError::Schedule(format!(
                "need 0 < t_final <= t0, got t0={t0} t_final={t_final}"
            )));
        }
        let alpha = (t_final / t0).powf(1.0 / steps as f64);
        let s = Self::Geometric { t0, alpha, steps };
        s.validate()?;
        Ok(s)
    }

    /// Default schedule for `steps` sweeps: geometric from 2.0 down to 0.05.
    pub fn default_for(steps: usize) -> Result<Self, AnnealError> {
        Self::geometric_to(DEFAULT_T0, DEFAULT_T_FINAL, steps)
    }

    /// Default schedule spread over `repetitions` stages of `sweeps` steps,
    /// for use with [`Restart::Staged`].
    pub fn staged_default(repetitions: usize, sweeps: usize) -> Result<Self, AnnealError> {
        Self::default_for(repetitions * sweeps)
    }

    pub fn steps(&self) -> usize {
        match self {
            Self::Geometric { steps, .. } | Self::Linear { steps, .. } => *steps,
            Self::Table(t) => t.len(),
        }
    }

    pub fn temperatures(&self) -> Vec<f64> {
        match self {
            Self::Geometric { t0, alpha, steps } => {
                (1..=*steps).map(|i| t0 * alpha.powi(i as i32)).collect()
            }
            Self::Linear { t0, t_final, steps } => {
                if *steps == 1 {
                    return vec![*t0];
                }
                let span = (*steps - 1) as f64;
                (0..*steps)
                    .map(|i| t0 + (t_final - t0) * i as f64 / span)
                    .collect()
            }
            Self::Table(t) => t.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), AnnealError> {
        if self.steps() == 0 {
            return Err(AnnealError::Schedule("zero steps".into()));
        }
        if let Self::Geometric { alpha, .. } = self {
            if !(alpha.is_finite() && *alpha > 0.0 && *alpha <= 1.0) {
                return Err(AnnealError::Schedule(format!("alpha {alpha} not in (0, 1]")));
            }
        }
        let temps = self.temperatures();
        if temps.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(AnnealError::Schedule("temperatures must be positive".into()));
        }
        if temps.windows(2).any(|w| w[1] > w[0]) {
            return Err(AnnealError::Schedule("temperatures must not increase".into()));
        }
        Ok(())
    }
}

/// How repetitions relate to each other and to the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Restart {
    /// Each repetition runs the whole schedule from a fresh uniform
    /// assignment drawn from its own stream.
    Fresh,
    /// The schedule is cut into `repetitions` consecutive stages; each stage
    /// resumes from the state the previous one ended in.
    #[default]
    Staged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealConfig {
    /// Proposals per temperature step.
    pub max_up: usize,
    pub repetitions: usize,
    /// Stop as soon as this Harmony is reached.
    pub target_harmony: Option<f64>,
    pub seed: u64,
    pub restart: Restart,
}

impl AnnealConfig {
    /// One sweep (`nodes` proposals) per temperature step.
    pub fn sweeps(nodes: usize, repetitions: usize, seed: u64) -> Self {
        Self {
            max_up: nodes,
            repetitions,
            target_harmony: Some(0.0),
            seed,
            restart: Restart::default(),
        }
    }

    fn validate(&self) -> Result<(), AnnealError> {
        if self.max_up == 0 {
            return Err(AnnealError::Config("max_up must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(AnnealError::Config("repetitions must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealStats {
    pub harmony_evaluations: u64,
    pub accepted_moves: u64,
    pub best_harmony: f64,
    /// Evaluation count at which the target was first reached.
    pub steps_to_target: Option<u64>,
    pub repetitions_run: usize,
    pub wall_time: f64,
}

/// Independent stream for one repetition.
pub fn repetition_rng(seed: u64, repetition: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repetition as u64);
    rng
}

/// Uniform assignment over the declared (non-empty) symbols.
pub fn random_assignment<R: Rng + ?Sized>(g: &GrammarSpec, nodes: usize, rng: &mut R) -> Assignment {
    let k = g.symbol_count() as u8;
    Assignment((0..nodes).map(|_| rng.random_range(1..=k)).collect())
}

/// Metropolis rule with strict `<`: `h' >= h`, or `u < exp(beta (h' - h))`.
#[inline]
pub fn accept<R: Rng + ?Sized>(delta: f64, beta: f64, rng: &mut R) -> bool {
    delta >= 0.0 || rng.random::<f64>() < (beta * delta).exp()
}

/// Simulated annealing from `a0`.
///
/// Repetition 0 starts from `a0`; see [`Restart`] for the others. Every
/// repetition costs one initial evaluation plus one per proposal. Returns
/// the first assignment that reaches the target, or the best one seen.
pub fn anneal(
    g: &GrammarSpec,
    t: &TreeTopology,
    a0: &Assignment,
    cfg: &AnnealConfig,
    sched: &CoolingSchedule,
) -> Result<(Assignment, AnnealStats), AnnealError> {
    let k = g.symbol_count();
    if k == 0 {
        return Err(AnnealError::NoSymbols);
    }
    cfg.validate()?;
    sched.validate()?;
    let h0 = harmony(g, t, a0)?;
    let betas: Vec<f64> = sched.temperatures().iter().map(|t| 1.0 / t).collect();
    let start = Instant::now();
    let nodes = t.len();
    let reached = |h: f64| cfg.target_harmony.is_some_and(|target| h >= target);

    let mut stats = AnnealStats {
        harmony_evaluations: 0,
        accepted_moves: 0,
        best_harmony: f64::NEG_INFINITY,
        steps_to_target: None,
        repetitions_run: 0,
        wall_time: 0.0,
    };
    let mut best = a0.clone();
    let mut cur = a0.clone();
    let mut h = h0;

    let stages = betas.len().min(cfg.repetitions);

    'reps: for rep in 0..cfg.repetitions {
        let mut rng = repetition_rng(cfg.seed, rep);
        let steps = match cfg.restart {
            Restart::Fresh => &betas[..],
            Restart::Staged if rep < stages => {
                &betas[rep * betas.len() / stages..(rep + 1) * betas.len() / stages]
            }
            Restart::Staged => break,
        };
        if rep > 0 {
            if cfg.restart == Restart::Fresh {
                cur = random_assignment(g, nodes, &mut rng);
            }
            h = harmony(g, t, &cur)?;
        }
        stats.harmony_evaluations += 1;
        stats.repetitions_run += 1;
        if h > stats.best_harmony {
            stats.best_harmony = h;
            best.clone_from(&cur);
        }
        if reached(h) {
            stats.steps_to_target = Some(stats.harmony_evaluations);
            break;
        }
        for &beta in steps {
            for _ in 0..cfg.max_up {
                let node = rng.random_range(0..nodes);
                let old = cur.0[node];
                // uniform over the k-1 symbols other than the current one
                let mut new = rng.random_range(1..k as u8);
                if new >= old {
                    new += 1;
                }
                let d = delta_unchecked(g, t, &cur.0, node, new);
                stats.harmony_evaluations += 1;
                if accept(d, beta, &mut rng) {
                    cur.0[node] = new;
                    h += d;
                    stats.accepted_moves += 1;
                    if h > stats.best_harmony {
                        stats.best_harmony = h;
                        best.clone_from(&cur);
                    }
                    if reached(h) {
                        stats.steps_to_target = Some(stats.harmony_evaluations);
                        break 'reps;
                    }
                }
            }
        }
    }
    stats.wall_time = start.elapsed().as_secs_f64();
    Ok((best, stats))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnbnRecord {
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub median_evaluations: f64,
    /// Per-trial evaluation counts in trial order.
    pub evaluations: Vec<u64>,
}

/// Seed for trial `trial` of depth `n`, mixed from the base seed.
pub fn trial_seed(base: u64, n: usize, trial: usize) -> u64 {
    let mut z = base
        ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One seeded anneal of the depth-`n` herring bone from a random initial
/// assignment.
///
/// `cfg.max_up` is replaced by the node count (one sweep per temperature
/// step) and the target is Harmony 0; `cfg.seed` is the base seed.
pub fn anbn_trial(
    n: usize,
    trial: usize,
    cfg: &AnnealConfig,
    sched: &CoolingSchedule,
) -> Result<AnnealStats, AnnealError> {
    let (g, t) = anbn_grammar(n)?;
    let seed = trial_seed(cfg.seed, n, trial);
    let mut init_rng = repetition_rng(seed, usize::MAX);
    let a0 = random_assignment(&g, t.len(), &mut init_rng);
    let run = AnnealConfig {
        max_up: t.len(),
        target_harmony: Some(0.0),
        seed,
        ..cfg.clone()
    };
    Ok(anneal(&g, &t, &a0, &run, sched)?.1)
}

impl AnbnRecord {
    /// Summarizes per-trial stats given in trial order.
    pub fn from_trials(n: usize, stats: &[AnnealStats]) -> Self {
        let evaluations: Vec<u64> = stats.iter().map(|s| s.harmony_evaluations).collect();
        let successes = stats.iter().filter(|s| s.steps_to_target.is_some()).count();
        Self {
            n,
            trials: stats.len(),
            successes,
            success_rate: successes as f64 / stats.len() as f64,
            median_evaluations: median_u64(&evaluations),
            evaluations,
        }
    }
}

/// Runs `trials` seeded anneals per depth; see [`anbn_trial`].
pub fn run_anbn_experiment(
    n_values: &[usize],
    trials: usize,
    cfg: &AnnealConfig,
    sched: &CoolingSchedule,
) -> Result<Vec<AnbnRecord>, AnnealError> {
    if trials == 0 {
        return Err(AnnealError::Config("trials must be at least 1".into()));
    }
    n_values
        .iter()
        .map(|&n| {
            let stats = (0..trials)
                .map(|trial| anbn_trial(n, trial, cfg, sched))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(AnbnRecord::from_trials(n, &stats))
        })
        .collect()
}

pub fn median_u64(xs: &[u64]) -> f64 {
    let mut v: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
    median(&mut v)
}

/// Median with the two-middle average; NaN for an empty slice.
pub fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
