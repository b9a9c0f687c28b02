//! Circuit-to-Harmony family `F(s)` on a causal diamond of two-qubit gates.
//!
//! Roles are space-time points `(w, t)` (wire `w`, time `t`, both from 1)
//! on gate boundaries; fillers `1` and `2` stand for bit values 0 and 1.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::linalg::{c, eigh, CMatrix};
use crate::operator::{build_operator, Factor, HermitianOperator, ModeSpace, OperatorTerm, TermList};
use crate::{QuantumError, Result};

pub type Gate = Matrix4<Complex64>;

pub const UNITARY_TOL: f64 = 1e-12;

/// Space-time coordinate `(wire, time)`.
pub type Point = (usize, usize);

fn filler(bit: usize) -> usize {
    bit + 1
}

pub fn is_unitary(u: &Gate, tol: f64) -> bool {
    (u.adjoint() * u - Gate::identity()).iter().all(|z| z.norm() <= tol)
}

/// Built-in gates by name: `identity`, `cnot`, `cz`, `swap`, `hadamard`
/// (Hadamard on the first qubit).
pub fn named_gate(name: &str) -> Option<Gate> {
    let r = |v: [f64; 16]| Gate::from_row_slice(&v.map(c));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Some(match name {
        "identity" => Gate::identity(),
        "cnot" => r([1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.]),
        "cz" => r([1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., -1.]),
        "swap" => r([1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.]),
        "hadamard" => r([h, 0., h, 0., 0., h, 0., h, h, 0., -h, 0., 0., h, 0., -h]),
        _ => return None,
    })
}

/// One gate acting on wires `w, w+1` between times `t` and `t+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GatePlacement {
    pub wire: usize,
    pub time: usize,
    pub unitary: Gate,
}

impl GatePlacement {
    /// `[(w,t), (w+1,t), (w,t+1), (w+1,t+1)]`.
    pub fn corners(&self) -> [Point; 4] {
        let (w, t) = (self.wire, self.time);
        [(w, t), (w + 1, t), (w, t + 1), (w + 1, t + 1)]
    }
}

/// Gates on `2k` wires laid out in a causal diamond: one gate on the middle
/// pair at the first and last timesteps, widening by one gate per step
/// towards timestep `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalDiamond {
    k: usize,
    gates: Vec<GatePlacement>,
}

impl CausalDiamond {
    /// `(wire, time)` slots of the diamond, in time order.
    pub fn placements(k: usize) -> Vec<Point> {
        let mut out = Vec::new();
        for t in 1..2 * k {
            let m = t.min(2 * k - t);
            let mut w = k + 1 - m;
            for _ in 0..m {
                out.push((w, t));
                w += 2;
            }
        }
        out
    }

    /// Fills the `k²` diamond slots with `unitaries` in time order.
    pub fn new(k: usize, unitaries: Vec<Gate>) -> Result<Self> {
        if k == 0 {
            return Err(QuantumError::Argument("diamond needs k >= 1".into()));
        }
        let slots = Self::placements(k);
        if unitaries.len() != slots.len() {
            return Err(QuantumError::Argument(format!(
                "diamond with k={k} holds {} gates, got {}",
                slots.len(),
                unitaries.len()
            )));
        }
        let mut gates = Vec::new();
        for (i, ((wire, time), u)) in slots.into_iter().zip(unitaries).enumerate() {
            if !is_unitary(&u, UNITARY_TOL) {
                return Err(QuantumError::Argument(format!("gate {i} is not unitary")));
            }
            gates.push(GatePlacement { wire, time, unitary: u });
        }
        Ok(Self { k, gates })
    }

    /// The smallest diamond: one gate on two wires.
    pub fn single(u: Gate) -> Result<Self> {
        Self::new(1, vec![u])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn wires(&self) -> usize {
        2 * self.k
    }

    pub fn gates(&self) -> &[GatePlacement] {
        &self.gates
    }

    /// Gate-boundary points sorted by `(time, wire)`.
    pub fn roles(&self) -> Vec<Point> {
        let set: BTreeSet<(usize, usize)> = self
            .gates
            .iter()
            .flat_map(|g| g.corners())
            .map(|(w, t)| (t, w))
            .collect();
        set.into_iter().map(|(t, w)| (w, t)).collect()
    }

    pub fn space(&self) -> ModeSpace {
        ModeSpace::new(self.roles().len(), 2)
    }

    /// Role indices on wire `w`, earliest first.
    pub fn wire_roles(&self, w: usize) -> Vec<usize> {
        let roles = self.roles();
        let mut on: Vec<(usize, usize)> = roles
            .iter()
            .enumerate()
            .filter(|(_, p)| p.0 == w)
            .map(|(i, p)| (p.1, i))
            .collect();
        on.sort();
        on.into_iter().map(|(_, i)| i).collect()
    }

    /// Basis states with exactly one occupied role per wire. `F(s)`
    /// preserves this sector.
    pub fn sector(&self) -> Result<Vec<usize>> {
        let space = self.space();
        let wires: Vec<Vec<usize>> = (1..=self.wires()).map(|w| self.wire_roles(w)).collect();
        Ok((0..space.dim()?)
            .filter(|&i| {
                let s = space.state(i);
                let occ = s.occupation();
                wires.iter().all(|rs| rs.iter().filter(|&&r| occ[r] != 0).count() == 1)
            })
            .collect())
    }

    /// Sector index of the all-zero input: every wire's particle at its
    /// earliest role holding bit 0.
    pub fn input_state(&self) -> Result<usize> {
        let space = self.space();
        let mut occ = vec![0u16; space.roles];
        for w in 1..=self.wires() {
            occ[self.wire_roles(w)[0]] = filler(0) as u16;
        }
        let idx = crate::operator::assignment_index(
            &occ.iter().map(|&f| f as u8).collect::<Vec<_>>(),
            space.fillers,
        );
        self.sector()?
            .iter()
            .position(|&i| i == idx)
            .ok_or_else(|| QuantumError::Argument("input state outside sector".into()))
    }
}

/// `F(s)` with its construction report.
#[derive(Debug, Clone)]
pub struct CircuitHarmony {
    pub s: f64,
    pub operator: HermitianOperator,
    pub roles: Vec<Point>,
    pub sector: Vec<usize>,
    pub max_arity: usize,
    /// Index conventions chosen where the term definitions leave room.
    pub report: Vec<String>,
}

impl CircuitHarmony {
    /// `F(s)` restricted to the one-particle-per-wire sector.
    pub fn sector_matrix(&self) -> CMatrix {
        self.operator.restrict(&self.sector)
    }

    pub fn role_names(&self) -> Vec<String> {
        self.roles.iter().map(|(w, t)| format!("({w},{t})")).collect()
    }
}

fn occupancy(role: usize) -> [Factor; 2] {
    [Factor::number(role, filler(0)), Factor::number(role, filler(1))]
}

/// `coef · n_x n_y` with `n_r = n_{r,0} + n_{r,1}`.
fn pair_terms(coef: f64, x: usize, y: usize, out: &mut Vec<OperatorTerm>) {
    for fx in occupancy(x) {
        for fy in occupancy(y) {
            out.push(OperatorTerm::new(coef, vec![fx, fy]));
        }
    }
}

fn single_terms(coef: f64, x: usize, out: &mut Vec<OperatorTerm>) {
    for f in occupancy(x) {
        out.push(OperatorTerm::new(coef, vec![f]));
    }
}

/// Term lists of `F(s)` and the report of conventions used.
pub fn circuit_terms(d: &CausalDiamond, s: f64) -> Result<(Vec<TermList>, Vec<String>)> {
    if !(0.0..=1.0).contains(&s) || s.is_nan() {
        return Err(QuantumError::Argument(format!("s = {s} outside [0, 1]")));
    }
    let roles = d.roles();
    let id = |p: Point| roles.iter().position(|&q| q == p);
    let mut report = Vec::new();
    let mut diag = Vec::new();
    let mut prop = Vec::new();

    for g in d.gates() {
        let [a, b, cc, dd] = g.corners().map(|p| id(p).expect("corner is a role"));
        pair_terms(-1.0, a, b, &mut diag);
        pair_terms(-1.0, cc, dd, &mut diag);
        for alpha in 0..2 {
            for gamma in 0..2 {
                for beta in 0..2 {
                    for delta in 0..2 {
                        let u = g.unitary[(2 * beta + delta, 2 * alpha + gamma)];
                        if u == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        prop.push(OperatorTerm::complex(
                            -s * u,
                            vec![
                                Factor::create(cc, filler(beta)),
                                Factor::annihilate(a, filler(alpha)),
                                Factor::create(dd, filler(delta)),
                                Factor::annihilate(b, filler(gamma)),
                            ],
                        ));
                    }
                }
            }
        }
    }
    report.push(
        "propagation moves wire w from (w,t) to (w,t+1) and wire w+1 from (w+1,t) to (w+1,t+1) \
         with amplitude <beta delta|U|alpha gamma>"
            .into(),
    );

    let init = (1.0 - s * s).max(0.0).sqrt() / 2.0;
    for w in 1..=d.wires() {
        let on = d.wire_roles(w);
        if init != 0.0 {
            single_terms(init, on[0], &mut diag);
            single_terms(-init, on[on.len() - 1], &mut diag);
        }
    }
    report.push(
        "initialization term is (1/2) sum over wires of n(first role) - n(last role), \
         so the top eigenvalue stays 0 along the whole family"
            .into(),
    );

    let t_max = roles.iter().map(|p| p.1).max().unwrap_or(0);
    for w in 1..d.wires() {
        for t in 0..=t_max {
            let x: Vec<usize> = [(w, t), (w, t + 1)].into_iter().filter_map(id).collect();
            let y: Vec<usize> = [(w + 1, t), (w + 1, t + 1)].into_iter().filter_map(id).collect();
            if x.is_empty() || y.is_empty() {
                continue;
            }
            for &r in x.iter().chain(&y) {
                single_terms(-1.0, r, &mut diag);
            }
            for &rx in &x {
                for &ry in &y {
                    pair_terms(2.0, rx, ry, &mut diag);
                }
            }
        }
    }
    report.push(
        "string terms sit at every (w,t) with t from 0 to the last time whose wire-w and \
         wire-(w+1) role pairs are both non-empty; points outside the diamond are dropped"
            .into(),
    );

    for (i, &(_, t)) in roles.iter().enumerate() {
        if t <= d.k() {
            diag.push(OperatorTerm::new(-1.0, vec![Factor::number(i, filler(1))]));
        }
    }
    report.push(format!("input penalty on bit 1 at every role with t <= {}", d.k()));

    Ok((vec![TermList::new(diag), TermList::with_hc(prop)], report))
}

/// `F(s) = Σ_p H_gate^p(s) + √(1−s²) H_init + Σ_v H_string^v + H_input`.
pub fn circuit_to_harmony(d: &CausalDiamond, s: f64) -> Result<CircuitHarmony> {
    let (lists, report) = circuit_terms(d, s)?;
    let max_arity = lists.iter().map(TermList::max_arity).max().unwrap_or(0);
    let operator = build_operator(&lists, d.space())?;
    Ok(CircuitHarmony {
        s,
        operator,
        roles: d.roles(),
        sector: d.sector()?,
        max_arity,
        report,
    })
}

/// `(1/(4n+3)) (1 − s cos(π/(2n)))`.
pub fn gap_lower_bound(n: usize, s: f64) -> f64 {
    let n = n as f64;
    (1.0 - s * (PI / (2.0 * n)).cos()) / (4.0 * n + 3.0)
}

/// Spectral facts of `F(s)` in the one-particle-per-wire sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRow {
    pub s: f64,
    pub lambda_max: f64,
    pub gap: f64,
    pub bound: f64,
    pub degeneracy: usize,
}

impl SpectralRow {
    pub fn passes(&self) -> bool {
        self.lambda_max.abs() <= 1e-8 && self.gap >= self.bound
    }
}

pub const SPECTRAL_TOL: f64 = 1e-9;

pub fn spectral_row(d: &CausalDiamond, s: f64) -> Result<SpectralRow> {
    let f = circuit_to_harmony(d, s)?;
    let spec = eigh(&f.sector_matrix())?;
    let top = spec.top_eigenspace(SPECTRAL_TOL);
    Ok(SpectralRow {
        s,
        lambda_max: spec.max(),
        gap: spec.gap(SPECTRAL_TOL).unwrap_or(f64::INFINITY),
        bound: gap_lower_bound(d.k(), s),
        degeneracy: top.len(),
    })
}

/// `points` evenly spaced values of `s` from 0 to 1.
pub fn s_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|i| i as f64 / (points - 1) as f64).collect(),
    }
}
