//! Harmony operators assembled from binding-operator terms.

use std::fmt::Write as _;

use harmonia_core::fock::{bind, fock_dimension, unbind, FockBasisState};
use harmonia_core::grammar::{GrammarSpec, TreeTopology};
use num_complex::Complex64;

use crate::linalg::{c, eigh, hermitian_residual, max_abs, CMatrix, CVector, Spectrum};
use crate::{QuantumError, Result};

pub const DEFAULT_DENSE_LIMIT: usize = 1 << 14;
/// Absolute Hermiticity tolerance for constructed operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const CLASSICAL_TOL: f64 = 1e-10;

/// `R` roles with `N` fillers each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeSpace {
    pub roles: usize,
    pub fillers: usize,
}

impl ModeSpace {
    pub fn new(roles: usize, fillers: usize) -> Self {
        Self { roles, fillers }
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(fock_dimension(self.roles, self.fillers)?)
    }

    /// Every `(role, filler)` mode, fillers numbered from 1.
    pub fn modes(&self) -> Vec<(usize, usize)> {
        (0..self.roles)
            .flat_map(|r| (1..=self.fillers).map(move |f| (r, f)))
            .collect()
    }

    pub fn state(&self, index: usize) -> FockBasisState {
        FockBasisState::from_basis_index(index, self.roles, self.fillers)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorKind {
    /// `a†_{f,r}`
    Create,
    /// `a_{f,r}`
    Annihilate,
    /// `n_{f,r}`
    Number,
    /// `1 − 2 n_{f,r}`
    IdentityMinusTwoN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Factor {
    pub kind: FactorKind,
    pub role: usize,
    pub filler: usize,
}

impl Factor {
    pub fn create(role: usize, filler: usize) -> Self {
        Self { kind: FactorKind::Create, role, filler }
    }

    pub fn annihilate(role: usize, filler: usize) -> Self {
        Self { kind: FactorKind::Annihilate, role, filler }
    }

    pub fn number(role: usize, filler: usize) -> Self {
        Self { kind: FactorKind::Number, role, filler }
    }

    pub fn parity(role: usize, filler: usize) -> Self {
        Self { kind: FactorKind::IdentityMinusTwoN, role, filler }
    }

    fn adjoint(self) -> Self {
        let kind = match self.kind {
            FactorKind::Create => FactorKind::Annihilate,
            FactorKind::Annihilate => FactorKind::Create,
            k => k,
        };
        Self { kind, ..self }
    }

    /// Acts on a basis state; `None` is the zero vector.
    fn apply(&self, s: FockBasisState, n: usize) -> Result<Option<(FockBasisState, f64)>> {
        let out = match self.kind {
            FactorKind::Create => bind(&s, self.role, self.filler, n)?,
            FactorKind::Annihilate => unbind(&s, self.role, self.filler, n)?,
            FactorKind::Number => {
                let held = s.filler_at(self.role) == Some(self.filler as u16);
                return Ok(held.then_some((s, 1.0)));
            }
            FactorKind::IdentityMinusTwoN => {
                let held = s.filler_at(self.role) == Some(self.filler as u16);
                return Ok(Some((s, if held { -1.0 } else { 1.0 })));
            }
        };
        Ok((!out.is_annihilated()).then_some((out, 1.0)))
    }
}

/// `coefficient · f_1 f_2 … f_m`; the rightmost factor acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTerm {
    pub coefficient: Complex64,
    pub factors: Vec<Factor>,
}

impl OperatorTerm {
    pub fn new(coefficient: f64, factors: Vec<Factor>) -> Self {
        Self { coefficient: c(coefficient), factors }
    }

    pub fn complex(coefficient: Complex64, factors: Vec<Factor>) -> Self {
        Self { coefficient, factors }
    }

    /// Multiple of the identity.
    pub fn constant(coefficient: f64) -> Self {
        Self::new(coefficient, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            coefficient: self.coefficient.conj(),
            factors: self.factors.iter().rev().map(|f| f.adjoint()).collect(),
        }
    }
}

/// A sum of terms, optionally followed by "+ h.c.".
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TermList {
    pub terms: Vec<OperatorTerm>,
    pub plus_hc: bool,
}

impl TermList {
    pub fn new(terms: Vec<OperatorTerm>) -> Self {
        Self { terms, plus_hc: false }
    }

    pub fn with_hc(terms: Vec<OperatorTerm>) -> Self {
        Self { terms, plus_hc: true }
    }

    pub fn max_arity(&self) -> usize {
        self.terms.iter().map(OperatorTerm::arity).max().unwrap_or(0)
    }
}

/// Dense Hermitian matrix, optionally tagged with its mode space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
    space: Option<ModeSpace>,
}

impl HermitianOperator {
    /// Validates Hermiticity within [`HERMITIAN_TOL`] (relative to the
    /// largest entry when that exceeds one), then symmetrizes exactly.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(QuantumError::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let res = hermitian_residual(&m);
        if res > HERMITIAN_TOL * max_abs(&m).max(1.0) {
            return Err(QuantumError::NotHermitian(res));
        }
        Ok(Self {
            matrix: crate::linalg::symmetrize(&m),
            space: None,
        })
    }

    pub fn with_space(mut self, space: ModeSpace) -> Result<Self> {
        let dim = space.dim()?;
        if dim != self.dim() {
            return Err(QuantumError::DimensionMismatch { expected: dim, got: self.dim() });
        }
        self.space = Some(space);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn space(&self) -> Option<ModeSpace> {
        self.space
    }

    pub fn eigh(&self) -> Result<Spectrum> {
        eigh(&self.matrix)
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)].norm() <= tol))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// Restriction to the span of the listed basis states.
    pub fn restrict(&self, basis: &[usize]) -> CMatrix {
        CMatrix::from_fn(basis.len(), basis.len(), |i, j| self.matrix[(basis[i], basis[j])])
    }
}

/// [`build_operator_with_limit`] at the default dense limit.
pub fn build_operator(lists: &[TermList], space: ModeSpace) -> Result<HermitianOperator> {
    build_operator_with_limit(lists, space, DEFAULT_DENSE_LIMIT)
}

/// Materializes every term over the `(N+1)^R` Fock basis and sums.
pub fn build_operator_with_limit(
    lists: &[TermList],
    space: ModeSpace,
    limit: usize,
) -> Result<HermitianOperator> {
    let dim = space.dim()?;
    if dim > limit {
        return Err(QuantumError::TooLarge { dim, limit });
    }
    for t in lists.iter().flat_map(|l| &l.terms) {
        for f in &t.factors {
            if f.role >= space.roles || f.filler == 0 || f.filler > space.fillers {
                return Err(QuantumError::Argument(format!(
                    "factor {f:?} outside {} roles x {} fillers",
                    space.roles, space.fillers
                )));
            }
        }
    }
    let mut m = CMatrix::zeros(dim, dim);
    for list in lists {
        let mut part = CMatrix::zeros(dim, dim);
        for term in &list.terms {
            accumulate(&mut part, term, space, dim)?;
        }
        if list.plus_hc {
            part += part.adjoint();
        }
        m += part;
    }
    HermitianOperator::from_matrix(m)?.with_space(space)
}

fn accumulate(m: &mut CMatrix, term: &OperatorTerm, space: ModeSpace, dim: usize) -> Result<()> {
    'col: for j in 0..dim {
        let mut s = space.state(j);
        let mut amp = 1.0;
        for f in term.factors.iter().rev() {
            match f.apply(s, space.fillers)? {
                Some((next, a)) => {
                    s = next;
                    amp *= a;
                }
                None => continue 'col,
            }
        }
        m[(s.basis_index(space.fillers), j)] += term.coefficient * amp;
    }
    Ok(())
}

/// Diagonal of `n_{f,r}` in the basis of `space`.
pub fn number_diagonal(space: ModeSpace, role: usize, filler: usize) -> Result<Vec<f64>> {
    let dim = space.dim()?;
    Ok((0..dim)
        .map(|i| f64::from(space.state(i).filler_at(role) == Some(filler as u16)))
        .collect())
}

/// Whether `H` commutes with every listed number operator.
///
/// `n` is diagonal, so `[n, H]_{ij} = (n_i − n_j) H_{ij}`.
pub fn is_classical(h: &HermitianOperator, space: ModeSpace, modes: &[(usize, usize)]) -> Result<bool> {
    let dim = space.dim()?;
    if dim != h.dim() {
        return Err(QuantumError::DimensionMismatch { expected: dim, got: h.dim() });
    }
    for &(r, f) in modes {
        let d = number_diagonal(space, r, f)?;
        for i in 0..dim {
            for j in 0..dim {
                if ((d[i] - d[j]) * h.matrix[(i, j)]).norm() > CLASSICAL_TOL {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn check_unit(h: &HermitianOperator, v: &CVector) -> Result<()> {
    if v.len() != h.dim() {
        return Err(QuantumError::DimensionMismatch { expected: h.dim(), got: v.len() });
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(QuantumError::Argument(format!("vector norm {norm} is not 1")));
    }
    Ok(())
}

/// `⟨v|H|v⟩`.
pub fn harmony_expectation(h: &HermitianOperator, v: &CVector) -> Result<f64> {
    check_unit(h, v)?;
    let e = v.dotc(&(&h.matrix * v));
    if e.im.abs() > 1e-10 {
        return Err(QuantumError::NotHermitian(e.im.abs()));
    }
    Ok(e.re)
}

/// Outcome of thresholded classification.
#[derive(Debug, Clone)]
pub struct Classification {
    pub eigenvalue: f64,
    /// Normalized projection of the test vector onto the chosen eigenspace.
    pub eigenvector: CVector,
    /// `|⟨σ|v⟩|²` for the chosen eigenvector.
    pub overlap: f64,
    /// Total probability of landing in the eigenspaces at or above `κ`.
    pub success_probability: f64,
}

/// Among eigenspaces with eigenvalue `≥ κ`, the one with largest overlap
/// with `v`. `None` when no eigenvalue reaches `κ`.
pub fn classify_by_harmony(
    h: &HermitianOperator,
    v: &CVector,
    kappa: f64,
) -> Result<Option<Classification>> {
    check_unit(h, v)?;
    let s = h.eigh()?;
    let tol = 1e-9 * s.values.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let mut best: Option<Classification> = None;
    let mut total = 0.0;
    for space in s.eigenspaces(tol) {
        let lambda = s.values[space.end - 1];
        if lambda < kappa {
            continue;
        }
        let p = s.projector(space.clone()) * v;
        let w = p.norm_squared();
        total += w;
        if best.as_ref().is_none_or(|b| w > b.overlap) {
            let eigenvector = if w > 0.0 { p.unscale(w.sqrt()) } else { s.vector(space.end - 1) };
            let eigenvalue = space.clone().map(|i| s.values[i]).sum::<f64>() / space.len() as f64;
            best = Some(Classification { eigenvalue, eigenvector, overlap: w, success_probability: 0.0 });
        }
    }
    Ok(best.map(|b| Classification { success_probability: total, ..b }))
}

/// Term list of a classical grammar on a tree: each node is a role and each
/// symbol a filler.
///
/// Unary harmonies become `h_f n_{f,r}`, an empty role contributes
/// `e (1 − Σ_f n_{f,r})`, each edge rule `b n_{p,r_p} n_{c,r_c}`, and the root
/// bonus `n_{f,root}`.
pub fn grammar_terms(g: &GrammarSpec, t: &TreeTopology) -> TermList {
    let k = g.symbol_count();
    let mut terms = Vec::new();
    let e = g.empty_penalty();
    for r in 0..t.len() {
        if e != 0.0 {
            terms.push(OperatorTerm::constant(e));
        }
        for f in 1..=k {
            let h = g.unary(f as u8) - e;
            if h != 0.0 {
                terms.push(OperatorTerm::new(h, vec![Factor::number(r, f)]));
            }
        }
    }
    for f in 1..=k {
        let b = g.root_bonus(f as u8);
        if b != 0.0 {
            terms.push(OperatorTerm::new(b, vec![Factor::number(t.root(), f)]));
        }
    }
    for (c, node) in t.nodes().iter().enumerate() {
        let Some(p) = node.parent else { continue };
        for (slot, ps, cs, b) in g.rules() {
            if slot == node.slot {
                terms.push(OperatorTerm::new(
                    b,
                    vec![Factor::number(p, ps as usize), Factor::number(c, cs as usize)],
                ));
            }
        }
    }
    TermList::new(terms)
}

pub fn grammar_operator(g: &GrammarSpec, t: &TreeTopology) -> Result<HermitianOperator> {
    let space = ModeSpace::new(t.len(), g.symbol_count());
    build_operator(&[grammar_terms(g, t)], space)
}

/// The `AⁿBⁿ` grammar as used on Fock space: an empty role costs `-1`, so
/// the vacuum cannot tie the grammatical tree.
pub fn anbn_operator_grammar() -> GrammarSpec {
    harmonia_core::grammar::anbn_spec()
        .with_empty_penalty(-1.0)
        .expect("finite penalty")
}

/// `AⁿBⁿ` Harmony operator on the depth-`n` herring bone.
pub fn anbn_operator(n: usize) -> Result<(HermitianOperator, GrammarSpec, TreeTopology)> {
    let g = anbn_operator_grammar();
    let (t, _) = TreeTopology::herring_bone(n)?;
    let h = grammar_operator(&g, &t)?;
    Ok((h, g, t))
}

/// Basis index of an assignment (symbol per role, `0` empty).
pub fn assignment_index(symbols: &[u8], fillers: usize) -> usize {
    symbols
        .iter()
        .fold(0usize, |acc, &s| acc * (fillers + 1) + s as usize)
}

/// Text dump: header, role and filler tables, then row-major entries as
/// `re,im` pairs in shortest round-trip scientific notation.
pub fn write_operator(h: &HermitianOperator, roles: &[String], fillers: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# harmony operator");
    let _ = writeln!(out, "dim {}", h.dim());
    let _ = writeln!(out, "roles {}", roles.len());
    for (i, r) in roles.iter().enumerate() {
        let _ = writeln!(out, "role {i} {r}");
    }
    let _ = writeln!(out, "fillers {}", fillers.len());
    for (i, f) in fillers.iter().enumerate() {
        let _ = writeln!(out, "filler {} {f}", i + 1);
    }
    let _ = writeln!(out, "entries");
    for i in 0..h.dim() {
        let row: Vec<String> = (0..h.dim())
            .map(|j| {
                let z = h.matrix[(i, j)];
                format!("{:e},{:e}", z.re, z.im)
            })
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// Parsed operator dump.
#[derive(Debug, Clone)]
pub struct OperatorDump {
    pub operator: HermitianOperator,
    pub roles: Vec<String>,
    pub fillers: Vec<String>,
}

pub fn read_operator(text: &str) -> Result<OperatorDump> {
    let err = |line: usize, msg: &str| QuantumError::Parse { line, msg: msg.to_string() };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut header = |key: &str| -> Result<usize> {
        let (n, l) = lines.next().ok_or_else(|| err(0, "truncated header"))?;
        l.strip_prefix(key)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| err(n, &format!("expected `{key} <count>`")))
    };
    let dim = header("dim")?;
    let nroles = header("roles")?;
    let mut roles = Vec::new();
    let mut fillers = Vec::new();
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let mut nfillers = None;
    let mut in_entries = false;
    for (n, l) in lines {
        if in_entries {
            let row = l
                .split_whitespace()
                .map(|tok| {
                    let (re, im) = tok.split_once(',')?;
                    Some(Complex64::new(re.parse().ok()?, im.parse().ok()?))
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| err(n, "bad entry"))?;
            if row.len() != dim {
                return Err(err(n, "row length differs from dim"));
            }
            rows.push(row);
        } else if let Some(rest) = l.strip_prefix("role ") {
            let (_, name) = rest.split_once(' ').ok_or_else(|| err(n, "bad role line"))?;
            roles.push(name.to_string());
        } else if let Some(rest) = l.strip_prefix("fillers ") {
            nfillers = Some(rest.trim().parse::<usize>().map_err(|_| err(n, "bad filler count"))?);
        } else if let Some(rest) = l.strip_prefix("filler ") {
            let (_, name) = rest.split_once(' ').ok_or_else(|| err(n, "bad filler line"))?;
            fillers.push(name.to_string());
        } else if l == "entries" {
            in_entries = true;
        } else {
            return Err(err(n, "unexpected line"));
        }
    }
    if roles.len() != nroles || Some(fillers.len()) != nfillers || rows.len() != dim {
        return Err(err(0, "counts do not match the header"));
    }
    let m = CMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    let mut operator = HermitianOperator::from_matrix(m)?;
    if nroles > 0 {
        let space = ModeSpace::new(nroles, fillers.len());
        if space.dim().ok() == Some(dim) {
            operator = operator.with_space(space)?;
        }
    }
    Ok(OperatorDump { operator, roles, fillers })
}

/// `# schema=1` CSV of `(index, eigenvalue)`.
pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("# schema=1\nindex,eigenvalue\n");
    for (i, v) in s.values.iter().enumerate() {
        let _ = writeln!(out, "{i},{v:e}");
    }
    out
}
