//! Zeno-effect emulation of an adiabatic sweep: repeated projective
//! measurements in the eigenbasis of `F(j/r)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{circuit_to_harmony, CausalDiamond, SPECTRAL_TOL};
use crate::linalg::{basis_vector, eigh, spectral_norm, CMatrix, CVector, Spectrum};
use crate::{QuantumError, Result};

/// Precomputed spectra of `F(1/r), …, F(1)` and the start state.
#[derive(Debug, Clone)]
pub struct ZenoSchedule {
    start: CVector,
    steps: Vec<Spectrum>,
    tol: f64,
}

#[derive(Debug, Clone)]
pub struct ZenoOutcome {
    pub success: bool,
    pub final_state: CVector,
}

impl ZenoSchedule {
    /// Starts in the (non-degenerate) top eigenvector of `family(0)`.
    pub fn new(family: impl Fn(f64) -> Result<CMatrix>, r: usize) -> Result<Self> {
        let s0 = eigh(&family(0.0)?)?;
        let top = s0.top_eigenspace(SPECTRAL_TOL);
        if top.len() != 1 {
            return Err(QuantumError::Argument(format!(
                "top eigenspace of F(0) has dimension {}",
                top.len()
            )));
        }
        Self::with_start(family, r, s0.vector(top.start))
    }

    pub fn with_start(family: impl Fn(f64) -> Result<CMatrix>, r: usize, start: CVector) -> Result<Self> {
        if r == 0 {
            return Err(QuantumError::Argument("zeno sweep needs r >= 1".into()));
        }
        let steps = (1..=r)
            .map(|j| eigh(&family(j as f64 / r as f64)?))
            .collect::<Result<Vec<_>>>()?;
        if steps[0].dim() != start.len() {
            return Err(QuantumError::DimensionMismatch { expected: steps[0].dim(), got: start.len() });
        }
        Ok(Self { start: start.normalize(), steps, tol: SPECTRAL_TOL })
    }

    pub fn steps(&self) -> usize {
        self.steps.len()
    }

    /// One seeded run. Each measurement samples an eigenspace with Born
    /// probability and collapses onto it; success means the last outcome is
    /// the top eigenspace of `F(1)`.
    pub fn run(&self, seed: u64) -> ZenoOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut psi = self.start.clone();
        let mut top = false;
        for spec in &self.steps {
            let spaces = spec.eigenspaces(self.tol);
            let projected: Vec<CVector> = spaces.iter().map(|sp| spec.projector(sp.clone()) * &psi).collect();
            let weights: Vec<f64> = projected.iter().map(|p| p.norm_squared()).collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut pick = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            while weights[pick] == 0.0 && pick > 0 {
                pick -= 1;
            }
            psi = projected[pick].unscale(weights[pick].sqrt());
            top = pick == spaces.len() - 1;
        }
        ZenoOutcome { success: top, final_state: psi }
    }

    /// Successes over `runs` runs with seeds derived from `seed`.
    pub fn successes(&self, runs: usize, seed: u64) -> usize {
        (0..runs)
            .filter(|&i| self.run(run_seed(seed, i as u64)).success)
            .count()
    }
}

pub fn run_seed(seed: u64, run: u64) -> u64 {
    let mut z = seed ^ run.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `F(s)` of the diamond restricted to its one-particle-per-wire sector.
pub fn diamond_family(d: &CausalDiamond) -> impl Fn(f64) -> Result<CMatrix> + '_ {
    move |s| Ok(circuit_to_harmony(d, s)?.sector_matrix())
}

pub fn diamond_schedule(d: &CausalDiamond, r: usize) -> Result<ZenoSchedule> {
    let start = basis_vector(d.sector()?.len(), d.input_state()?);
    ZenoSchedule::with_start(diamond_family(d), r, start)
}

/// Single sweep on the diamond's circuit family.
pub fn zeno_sweep(d: &CausalDiamond, r: usize, seed: u64) -> Result<ZenoOutcome> {
    Ok(diamond_schedule(d, r)?.run(seed))
}

/// `max_s (‖Ḟ(s)‖/γ(s))²` on a grid, with `‖Ḟ‖` by finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct ZenoBound {
    pub max_ratio_sq: f64,
    pub argmax_s: f64,
}

impl ZenoBound {
    /// `(1/r) max_s (‖Ḟ‖/γ)²`.
    pub fn failure_bound(&self, r: usize) -> f64 {
        self.max_ratio_sq / r as f64
    }
}

/// Evaluates the ratio at `grid + 1` evenly spaced points. Derivatives are
/// centered with step `h`, one-sided at the ends of `[0, 1]`.
pub fn zeno_bound(family: impl Fn(f64) -> Result<CMatrix>, grid: usize, h: f64) -> Result<ZenoBound> {
    if grid == 0 || h <= 0.0 {
        return Err(QuantumError::Argument("grid and step must be positive".into()));
    }
    let mut best = ZenoBound { max_ratio_sq: 0.0, argmax_s: 0.0 };
    for i in 0..=grid {
        let s = i as f64 / grid as f64;
        let (lo, hi) = ((s - h).max(0.0), (s + h).min(1.0));
        let deriv = (family(hi)? - family(lo)?) / crate::linalg::c(hi - lo);
        let norm = spectral_norm(&deriv)?;
        let gap = eigh(&family(s)?)?.gap(SPECTRAL_TOL).unwrap_or(f64::INFINITY);
        let ratio = (norm / gap).powi(2);
        if ratio > best.max_ratio_sq {
            best = ZenoBound { max_ratio_sq: ratio, argmax_s: s };
        }
    }
    Ok(best)
}
