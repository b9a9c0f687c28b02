//! Quantum Boltzmann machine training for Harmony models.
//!
//! Qubits are ordered visible, hidden, label; qubit 0 is the most
//! significant bit of a basis index, so the label is the least significant.

use std::fmt::{self, Write as _};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::linalg::{
    c, check_density, commutator_norm, gibbs_state, max_abs, relative_entropy, trace,
    CMatrix, CVector,
};
use crate::{QuantumError, Result};

pub const COMMUTE_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMatrix {
        let z = c(0.0);
        let o = c(1.0);
        let i = Complex64::new(0.0, 1.0);
        let m = match self {
            Pauli::I => [o, z, z, o],
            Pauli::X => [z, o, o, z],
            Pauli::Y => [z, -i, i, z],
            Pauli::Z => [o, z, z, -o],
        };
        CMatrix::from_row_slice(2, 2, &m)
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of Paulis, one per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString(pub Vec<Pauli>);

impl PauliString {
    pub fn identity(qubits: usize) -> Self {
        Self(vec![Pauli::I; qubits])
    }

    /// `Z` on the listed qubits.
    pub fn z_on(qubits: usize, on: &[usize]) -> Self {
        let mut p = Self::identity(qubits);
        for &q in on {
            p.0[q] = Pauli::Z;
        }
        p
    }

    pub fn matrix(&self) -> CMatrix {
        self.0
            .iter()
            .fold(CMatrix::identity(1, 1), |acc, p| acc.kronecker(&p.matrix()))
    }

    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|ch| match ch {
                'I' => Some(Pauli::I),
                'X' => Some(Pauli::X),
                'Y' => Some(Pauli::Y),
                'Z' => Some(Pauli::Z),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|p| write!(f, "{}", p.symbol()))
    }
}

/// Expands `Π_q n_q` with `n = (I − Z)/2` into signed `Z` strings.
pub fn number_product_paulis(qubits: usize, on: &[usize]) -> Vec<(f64, PauliString)> {
    let scale = 0.5f64.powi(on.len() as i32);
    (0..1u32 << on.len())
        .map(|mask| {
            let chosen: Vec<usize> = on
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &q)| q)
                .collect();
            let sign = if chosen.len().is_multiple_of(2) { 1.0 } else { -1.0 };
            (scale * sign, PauliString::z_on(qubits, &chosen))
        })
        .collect()
}

/// `H(ω) = Σ ωᵢ ℋᵢ` over `visible + hidden + 1` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonyModel {
    visible: usize,
    hidden: usize,
    terms: Vec<CMatrix>,
    pub weights: Vec<f64>,
}

impl HarmonyModel {
    /// Checks every term is Hermitian and squares to the identity.
    pub fn new(visible: usize, hidden: usize, terms: Vec<CMatrix>, weights: Vec<f64>) -> Result<Self> {
        let dim = 1usize << (visible + hidden + 1);
        if terms.len() != weights.len() {
            return Err(QuantumError::DimensionMismatch { expected: terms.len(), got: weights.len() });
        }
        for (i, t) in terms.iter().enumerate() {
            if t.nrows() != dim || t.ncols() != dim {
                return Err(QuantumError::DimensionMismatch { expected: dim, got: t.nrows() });
            }
            let res = crate::linalg::hermitian_residual(t);
            if res > UNITARY_TOL {
                return Err(QuantumError::NotHermitian(res));
            }
            if max_abs(&(t * t - CMatrix::identity(dim, dim))) > UNITARY_TOL {
                return Err(QuantumError::Argument(format!("term {i} does not square to the identity")));
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(QuantumError::NonFinite("weights"));
        }
        Ok(Self { visible, hidden, terms, weights })
    }

    pub fn from_paulis(visible: usize, hidden: usize, terms: &[PauliString], weights: Vec<f64>) -> Result<Self> {
        let n = visible + hidden + 1;
        if let Some(bad) = terms.iter().find(|p| p.0.len() != n) {
            return Err(QuantumError::Argument(format!("pauli string {bad} is not on {n} qubits")));
        }
        Self::new(visible, hidden, terms.iter().map(PauliString::matrix).collect(), weights)
    }

    pub fn visible(&self) -> usize {
        self.visible
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn dim(&self) -> usize {
        1 << (self.visible + self.hidden + 1)
    }

    pub fn visible_dim(&self) -> usize {
        1 << self.visible
    }

    /// Hidden ⊗ label dimension.
    pub fn rest_dim(&self) -> usize {
        1 << (self.hidden + 1)
    }

    pub fn terms(&self) -> &[CMatrix] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn with_weights(&self, weights: &[f64]) -> Self {
        Self { weights: weights.to_vec(), ..self.clone() }
    }

    pub fn hamiltonian(&self) -> CMatrix {
        weighted_sum(&self.terms, &self.weights, self.dim())
    }
}

fn weighted_sum(terms: &[CMatrix], w: &[f64], dim: usize) -> CMatrix {
    let mut h = CMatrix::zeros(dim, dim);
    for (t, &wi) in terms.iter().zip(w) {
        h += t * c(wi);
    }
    h
}

/// Labelled visible vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    visible: usize,
    hidden: usize,
    examples: Vec<(CVector, u8)>,
}

impl LabeledDataset {
    pub fn new(visible: usize, hidden: usize, examples: Vec<(CVector, u8)>) -> Result<Self> {
        if examples.is_empty() {
            return Err(QuantumError::Argument("dataset needs at least one example".into()));
        }
        for (k, (v, l)) in examples.iter().enumerate() {
            if v.len() != 1 << visible {
                return Err(QuantumError::DimensionMismatch { expected: 1 << visible, got: v.len() });
            }
            if (v.norm() - 1.0).abs() > 1e-10 {
                return Err(QuantumError::Argument(format!("example {k} is not a unit vector")));
            }
            if *l > 1 {
                return Err(QuantumError::Argument(format!("example {k} has label {l}")));
            }
        }
        Ok(Self { visible, hidden, examples })
    }

    pub fn visible(&self) -> usize {
        self.visible
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[(CVector, u8)] {
        &self.examples
    }

    /// Header `n h K`, then per example `2ⁿ` `re,im` amplitudes and the
    /// label bit.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.visible, self.hidden, self.examples.len());
        for (v, l) in &self.examples {
            for z in v.iter() {
                let _ = write!(out, "{:e},{:e} ", z.re, z.im);
            }
            let _ = writeln!(out, "{l}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| QuantumError::Parse { line, msg: msg.to_string() };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hn, header) = lines.next().ok_or_else(|| err(0, "missing header"))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(hn, "header must be `n h K`"))?;
        let [n, h, k] = nums[..] else {
            return Err(err(hn, "header must be `n h K`"));
        };
        let mut examples = Vec::new();
        for (ln, l) in lines {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != (1 << n) + 1 {
                return Err(err(ln, "wrong number of amplitudes"));
            }
            let amps = toks[..toks.len() - 1]
                .iter()
                .map(|t| {
                    let (re, im) = t.split_once(',')?;
                    Some(Complex64::new(re.parse().ok()?, im.parse().ok()?))
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| err(ln, "bad amplitude"))?;
            let label: u8 = toks[toks.len() - 1].parse().map_err(|_| err(ln, "bad label"))?;
            examples.push((CVector::from_vec(amps), label));
        }
        if examples.len() != k {
            return Err(err(0, "example count differs from header"));
        }
        Self::new(n, h, examples)
    }
}

fn check_pair(model: &HarmonyModel, data: &LabeledDataset) -> Result<()> {
    if model.visible != data.visible || model.hidden != data.hidden {
        return Err(QuantumError::Argument(format!(
            "model has {}+{} qubits, dataset {}+{}",
            model.visible, model.hidden, data.visible, data.hidden
        )));
    }
    Ok(())
}

/// `[H′]_{x,y} = ⟨v, σ_x| M |v, σ_y⟩` in the computational hidden⊗label basis.
pub fn conditional(m: &CMatrix, v: &CVector, rest: usize) -> CMatrix {
    let nv = v.len();
    CMatrix::from_fn(rest, rest, |x, y| {
        let mut acc = c(0.0);
        for i in 0..nv {
            if v[i] == c(0.0) {
                continue;
            }
            for j in 0..nv {
                acc += v[i].conj() * v[j] * m[(i * rest + x, j * rest + y)];
            }
        }
        acc
    })
}

/// Conditional Harmony operator `H′` for the clamped visible vector `v`.
pub fn conditional_harmony(model: &HarmonyModel, v: &CVector) -> Result<CMatrix> {
    if v.len() != model.visible_dim() {
        return Err(QuantumError::DimensionMismatch { expected: model.visible_dim(), got: v.len() });
    }
    if (v.norm() - 1.0).abs() > 1e-10 {
        return Err(QuantumError::Argument("visible vector is not a unit vector".into()));
    }
    Ok(conditional(&model.hamiltonian(), v, model.rest_dim()))
}

/// `I_hidden ⊗ |ℓ⟩⟨ℓ|`.
pub fn label_projector(rest: usize, label: u8) -> CMatrix {
    CMatrix::from_fn(rest, rest, |i, j| if i == j && i % 2 == label as usize { c(1.0) } else { c(0.0) })
}

/// `P_ℓ` on the full register.
pub fn full_label_projector(dim: usize, label: u8) -> CMatrix {
    label_projector(dim, label)
}

/// Constrained expectations of one example, in an optional change of
/// hidden⊗label basis (columns of `basis` are the `σ_j`).
struct ExampleStats {
    p: f64,
    h: Vec<f64>,
    ph: Vec<f64>,
}

fn example_stats(model: &HarmonyModel, v: &CVector, label: u8, basis: Option<&CMatrix>) -> Result<ExampleStats> {
    let rest = model.rest_dim();
    let rot = |m: CMatrix| match basis {
        Some(w) => w.adjoint() * m * w,
        None => m,
    };
    let hp = rot(conditional(&model.hamiltonian(), v, rest));
    let proj = rot(label_projector(rest, label));
    let rho = gibbs_state(&hp)?;
    let p = trace(&(&proj * &rho)).re;
    let mut h = Vec::new();
    let mut ph = Vec::new();
    for t in &model.terms {
        let ti = rot(conditional(t, v, rest));
        h.push(trace(&(&ti * &rho)).re);
        ph.push(trace(&(&proj * &ti * &rho)).re);
    }
    Ok(ExampleStats { p, h, ph })
}

/// `(1/K) Σ_k Tr(P_{ℓ_k} |v_k⟩⟨v_k| ⊗ e^{H′_k}/Tr e^{H′_k})`.
pub fn supervised_objective(model: &HarmonyModel, data: &LabeledDataset) -> Result<f64> {
    check_pair(model, data)?;
    let rest = model.rest_dim();
    let h = model.hamiltonian();
    let mut total = 0.0;
    for (v, l) in &data.examples {
        let rho = gibbs_state(&conditional(&h, v, rest))?;
        total += trace(&(label_projector(rest, *l) * rho)).re;
    }
    Ok(total / data.len() as f64)
}

/// Same objective through the explicit clamp `H_k = λ|v_k⟩⟨v_k| ⊗ I + H`.
pub fn finite_lambda_objective(model: &HarmonyModel, data: &LabeledDataset, lambda: f64) -> Result<f64> {
    check_pair(model, data)?;
    let dim = model.dim();
    let rest = model.rest_dim();
    let h = model.hamiltonian();
    let mut total = 0.0;
    for (v, l) in &data.examples {
        let clamp = (v * v.adjoint()).kronecker(&CMatrix::identity(rest, rest));
        let rho = gibbs_state(&(clamp * c(lambda) + &h))?;
        total += trace(&(full_label_projector(dim, *l) * rho)).re;
    }
    Ok(total / data.len() as f64)
}

/// Pairs `(term, example)` whose term fails to commute with the example's
/// label projector.
pub fn check_commutation(model: &HarmonyModel, data: &LabeledDataset) -> Vec<(usize, usize)> {
    let dim = model.dim();
    let proj = [full_label_projector(dim, 0), full_label_projector(dim, 1)];
    let ok: Vec<[bool; 2]> = model
        .terms
        .iter()
        .map(|t| [0, 1].map(|l| commutator_norm(&proj[l], t) <= COMMUTE_TOL))
        .collect();
    let mut out = Vec::new();
    for (k, (_, l)) in data.examples.iter().enumerate() {
        for (i, o) in ok.iter().enumerate() {
            if !o[*l as usize] {
                out.push((i, k));
            }
        }
    }
    out.sort();
    out
}

fn require_commuting(model: &HarmonyModel, data: &LabeledDataset) -> Result<()> {
    match check_commutation(model, data).first() {
        Some(&(term, example)) => Err(QuantumError::Commutation { term, example }),
        None => Ok(()),
    }
}

/// `E_k[⟨P_{ℓ_k} ℋᵢ⟩_k − ⟨P_{ℓ_k}⟩_k ⟨ℋᵢ⟩_k]`.
pub fn supervised_gradient(model: &HarmonyModel, data: &LabeledDataset) -> Result<Vec<f64>> {
    supervised_gradient_in_basis(model, data, None)
}

/// [`supervised_gradient`] with `H′_k` expressed in the hidden⊗label basis
/// given by the columns of `basis`.
pub fn supervised_gradient_in_basis(
    model: &HarmonyModel,
    data: &LabeledDataset,
    basis: Option<&CMatrix>,
) -> Result<Vec<f64>> {
    check_pair(model, data)?;
    require_commuting(model, data)?;
    let mut g = vec![0.0; model.term_count()];
    for (v, l) in &data.examples {
        let st = example_stats(model, v, *l, basis)?;
        for i in 0..g.len() {
            g[i] += st.ph[i] - st.p * st.h[i];
        }
    }
    let k = data.len() as f64;
    Ok(g.into_iter().map(|x| x / k).collect())
}

/// Gibbs state `σ(ω)` of the full model.
pub fn gibbs(model: &HarmonyModel) -> Result<CMatrix> {
    gibbs_state(&model.hamiltonian())
}

/// `S(ρ ‖ σ(ω))`.
pub fn relent_objective(model: &HarmonyModel, rho: &CMatrix) -> Result<f64> {
    relative_entropy(rho, &gibbs(model)?)
}

/// `∂S(ρ‖σ(ω))/∂ωᵢ = Tr(σ ℋᵢ) − Tr(ρ ℋᵢ)`.
pub fn relent_gradient(model: &HarmonyModel, rho: &CMatrix) -> Result<Vec<f64>> {
    if rho.nrows() != model.dim() || rho.ncols() != model.dim() {
        return Err(QuantumError::DimensionMismatch { expected: model.dim(), got: rho.nrows() });
    }
    check_density(rho, 1e-10)?;
    let sigma = gibbs(model)?;
    Ok(model
        .terms
        .iter()
        .map(|t| trace(&(&sigma * t)).re - trace(&(rho * t)).re)
        .collect())
}

/// Sampled gradient with per-component standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGradient {
    pub estimate: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Hadamard-test shots spent.
    pub samples: u64,
}

/// Hadamard-test means for one example and term: the marked-label test
/// (mean `1 − ⟨P⟩`), the `ℋᵢ` test (mean `(1 + ⟨ℋᵢ⟩)/2`) and the
/// `(I − 2P)ℋᵢ` test (mean `1/2 + ⟨ℋᵢ⟩/2 − ⟨Pℋᵢ⟩`).
pub fn hadamard_means(p: f64, h: f64, ph: f64) -> [f64; 3] {
    let clamp = |x: f64| x.clamp(0.0, 1.0);
    [clamp(1.0 - p), clamp((1.0 + h) / 2.0), clamp(0.5 + h / 2.0 - ph)]
}

fn draw(rng: &mut ChaCha8Rng, n: u64, p: f64) -> f64 {
    let hits = Binomial::new(n, p).expect("probability in [0,1]").sample(rng);
    hits as f64 / n as f64
}

/// Simulates `samples` shots of each Hadamard test per example and term,
/// combining them as `(m₂ − m₃) − (1 − m₁)(2m₂ − 1)`. Errors follow the delta
/// method with plug-in Bernoulli variances.
pub fn sampled_gradient(
    model: &HarmonyModel,
    data: &LabeledDataset,
    samples: u64,
    seed: u64,
) -> Result<SampledGradient> {
    if samples < 1 {
        return Err(QuantumError::Argument("need at least one sample".into()));
    }
    check_pair(model, data)?;
    require_commuting(model, data)?;
    let d = model.term_count();
    let kf = data.len() as f64;
    let n = samples as f64;
    let mut est = vec![0.0; d];
    let mut var = vec![0.0; d];
    let mut shots = 0;
    for (k, (v, l)) in data.examples.iter().enumerate() {
        let st = example_stats(model, v, *l, None)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let m1 = draw(&mut rng, samples, 1.0 - st.p.clamp(0.0, 1.0));
        shots += samples;
        for i in 0..d {
            let [_, q2, q3] = hadamard_means(st.p, st.h[i], st.ph[i]);
            let m2 = draw(&mut rng, samples, q2);
            let m3 = draw(&mut rng, samples, q3);
            shots += 2 * samples;
            let b = 1.0 - m1;
            let cc = 2.0 * m2 - 1.0;
            est[i] += (m2 - m3) - b * cc;
            let v1 = m1 * (1.0 - m1) / n;
            let v2 = m2 * (1.0 - m2) / n;
            let v3 = m3 * (1.0 - m3) / n;
            var[i] += cc * cc * v1 + (1.0 - 2.0 * b).powi(2) * v2 + v3;
        }
    }
    Ok(SampledGradient {
        estimate: est.into_iter().map(|x| x / kf).collect(),
        stderr: var.into_iter().map(|x| x.sqrt() / kf).collect(),
        samples: shots,
    })
}

/// Where gradients come from during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientSource {
    Exact,
    Sampled { samples: u64 },
}

/// Something to maximize by gradient ascent.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> Result<f64>;
    /// Gradient and the number of samples it cost.
    fn gradient(&self, w: &[f64], source: GradientSource, seed: u64) -> Result<(Vec<f64>, u64)>;
}

/// Supervised accuracy objective of a model on a dataset.
pub struct Supervised<'a> {
    pub model: &'a HarmonyModel,
    pub data: &'a LabeledDataset,
}

impl Objective for Supervised<'_> {
    fn dim(&self) -> usize {
        self.model.term_count()
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        supervised_objective(&self.model.with_weights(w), self.data)
    }

    fn gradient(&self, w: &[f64], source: GradientSource, seed: u64) -> Result<(Vec<f64>, u64)> {
        let m = self.model.with_weights(w);
        match source {
            GradientSource::Exact => Ok((supervised_gradient(&m, self.data)?, 0)),
            GradientSource::Sampled { samples } => {
                let s = sampled_gradient(&m, self.data, samples, seed)?;
                Ok((s.estimate, s.samples))
            }
        }
    }
}

/// `f(ω) = −(c/2)‖ω − ω*‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub center: Vec<f64>,
    pub curvature: f64,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        let d2: f64 = w.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum();
        Ok(-0.5 * self.curvature * d2)
    }

    fn gradient(&self, w: &[f64], _: GradientSource, _: u64) -> Result<(Vec<f64>, u64)> {
        Ok((w.iter().zip(&self.center).map(|(a, b)| -self.curvature * (a - b)).collect(), 0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// `L`; the step is `1/L`.
    pub lipschitz: f64,
    /// `μ`.
    pub strong_convexity: f64,
    /// `𝓛`, Lipschitz constant of the gradient.
    pub gradient_lipschitz: f64,
    pub iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(lipschitz: f64, iterations: usize) -> Self {
        Self {
            lipschitz,
            strong_convexity: lipschitz,
            gradient_lipschitz: lipschitz,
            iterations,
            tolerance: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lipschitz.is_finite()
            && self.strong_convexity > 0.0
            && self.lipschitz >= self.strong_convexity
            && self.gradient_lipschitz > 0.0
            && self.tolerance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(QuantumError::Argument("need L >= mu > 0, positive gradient Lipschitz constant".into()))
        }
    }

    /// Iterations, per-step gradient accuracy and total samples that
    /// guarantee `‖ω − ω*‖ ≤ ε` from distance `radius` (up to constants).
    pub fn sample_budget(&self, dims: usize, eps: f64, radius: f64) -> Budget {
        let (l, mu, gl) = (self.lipschitz, self.strong_convexity, self.gradient_lipschitz);
        let contraction = (l / (l - mu)).ln();
        let growth = (1.0 + gl / l).ln();
        let iterations = if contraction.is_finite() {
            ((2.0 * radius / eps).ln() / contraction).ceil().max(1.0)
        } else {
            1.0
        };
        let exponent = if contraction.is_finite() { growth / contraction } else { 0.0 };
        let delta = eps * gl / 2.0 / (1.0 + gl / l) * (eps / (2.0 * radius)).powf(exponent);
        let samples = iterations * (dims * dims) as f64 / (delta * delta);
        Budget { iterations: iterations as usize, delta, samples }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub iterations: usize,
    pub delta: f64,
    pub samples: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    Converged,
    Exhausted,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub weights: Vec<f64>,
    /// Row `t` is measured at the weights after `t` steps.
    pub trace: Vec<TraceRow>,
    pub status: TrainStatus,
}

/// Gradient ascent `ω ← ω + ∇f/L` for `cfg.iterations` steps or until
/// `‖∇f‖ ≤ ε`.
pub fn train<O: Objective>(obj: &O, w0: &[f64], cfg: &TrainConfig, source: GradientSource) -> Result<TrainResult> {
    cfg.validate()?;
    if w0.len() != obj.dim() {
        return Err(QuantumError::DimensionMismatch { expected: obj.dim(), got: w0.len() });
    }
    let mut w = w0.to_vec();
    let mut trace = Vec::new();
    for it in 0..=cfg.iterations {
        let f = obj.value(&w)?;
        let (g, samples) = obj.gradient(&w, source, crate::zeno::run_seed(cfg.seed, it as u64))?;
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        trace.push(TraceRow { iteration: it, objective: f, gradient_norm: norm, samples });
        if !f.is_finite() || !norm.is_finite() {
            return Ok(TrainResult { weights: w, trace, status: TrainStatus::NonFinite });
        }
        if norm <= cfg.tolerance {
            return Ok(TrainResult { weights: w, trace, status: TrainStatus::Converged });
        }
        if it == cfg.iterations {
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi += gi / cfg.lipschitz;
        }
    }
    Ok(TrainResult { weights: w, trace, status: TrainStatus::Exhausted })
}

/// Convenience wrapper: trains the supervised objective from the model's
/// current weights.
pub fn train_model(
    model: &HarmonyModel,
    data: &LabeledDataset,
    cfg: &TrainConfig,
    source: GradientSource,
) -> Result<TrainResult> {
    train(&Supervised { model, data }, &model.weights, cfg, source)
}

/// `# schema=1` CSV of a training trace.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("# schema=1\niteration,objective,gradient_norm,samples\n");
    for r in trace {
        let _ = writeln!(out, "{},{:e},{:e},{}", r.iteration, r.objective, r.gradient_norm, r.samples);
    }
    out
}

/// Largest `‖∇f(a) − ∇f(b)‖ / ‖a − b‖` over random probe pairs in a box of
/// half-width `radius` around `center`.
pub fn estimate_lipschitz<O: Objective>(obj: &O, center: &[f64], radius: f64, probes: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..probes {
        let a: Vec<f64> = center.iter().map(|x| x + rng.random_range(-radius..=radius)).collect();
        let b: Vec<f64> = center.iter().map(|x| x + rng.random_range(-radius..=radius)).collect();
        let (ga, _) = obj.gradient(&a, GradientSource::Exact, 0)?;
        let (gb, _) = obj.gradient(&b, GradientSource::Exact, 0)?;
        let num: f64 = ga.iter().zip(&gb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    Ok(best)
}

/// Centered finite-difference gradient of `f`.
pub fn finite_difference(f: impl Fn(&[f64]) -> Result<f64>, w: &[f64], step: f64) -> Result<Vec<f64>> {
    (0..w.len())
        .map(|i| {
            let mut up = w.to_vec();
            let mut dn = w.to_vec();
            up[i] += step;
            dn[i] -= step;
            Ok((f(&up)? - f(&dn)?) / (2.0 * step))
        })
        .collect()
}

/// Random model whose terms are Pauli strings with `I` or `Z` on the label
/// (so they commute with every label projector), weights in `[-1, 1]`.
pub fn random_model(visible: usize, hidden: usize, terms: usize, seed: u64) -> Result<(HarmonyModel, Vec<PauliString>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = visible + hidden + 1;
    let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let available = 2 * 4usize.pow((n - 1) as u32) - 1;
    if terms > available {
        return Err(QuantumError::Argument(format!("only {available} label-diagonal Pauli strings on {n} qubits")));
    }
    let mut strings = Vec::new();
    while strings.len() < terms {
        let mut p: Vec<Pauli> = (0..n - 1).map(|_| all[rng.random_range(0..4)]).collect();
        p.push(if rng.random_bool(0.5) { Pauli::Z } else { Pauli::I });
        let p = PauliString(p);
        if p.0.iter().any(|&x| x != Pauli::I) && !strings.contains(&p) {
            strings.push(p);
        }
    }
    let weights = (0..strings.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Ok((HarmonyModel::from_paulis(visible, hidden, &strings, weights)?, strings))
}

/// Haar-ish random unit vector from complex Gaussians.
pub fn random_unit_vector(dim: usize, rng: &mut impl Rng) -> CVector {
    let v = DVector::from_fn(dim, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    v.normalize()
}

/// Random unitary from the QR decomposition of a complex Gaussian matrix.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    g.qr().q()
}

pub fn random_dataset(visible: usize, hidden: usize, examples: usize, seed: u64) -> Result<LabeledDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ex = (0..examples)
        .map(|_| (random_unit_vector(1 << visible, &mut rng), rng.random_range(0..2u8)))
        .collect();
    LabeledDataset::new(visible, hidden, ex)
}

/// Random density matrix `A A† / Tr(A A†)`.
pub fn random_density(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let m = &a * a.adjoint();
    let tr = trace(&m);
    m / tr
}
