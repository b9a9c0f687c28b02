//! Toric-code Harmony operator with one filler per edge role.

use crate::linalg::Spectrum;
use crate::operator::{build_operator, Factor, HermitianOperator, ModeSpace, OperatorTerm, TermList};
use crate::{QuantumError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edge {
    Horizontal { row: usize, col: usize },
    Vertical { row: usize, col: usize },
}

/// Lattice layout plus its Harmony operator.
#[derive(Debug, Clone)]
pub struct ToricCode {
    pub rows: usize,
    pub cols: usize,
    pub periodic: bool,
    /// Role `i` is `edges[i]`.
    pub edges: Vec<Edge>,
    /// Edge roles around each face.
    pub plaquettes: Vec<Vec<usize>>,
    /// Edge roles meeting at each vertex.
    pub vertices: Vec<Vec<usize>>,
    pub operator: HermitianOperator,
}

impl ToricCode {
    pub fn space(&self) -> ModeSpace {
        ModeSpace::new(self.edges.len(), 1)
    }

    pub fn role_names(&self) -> Vec<String> {
        self.edges
            .iter()
            .map(|e| match e {
                Edge::Horizontal { row, col } => format!("h{row}_{col}"),
                Edge::Vertical { row, col } => format!("v{row}_{col}"),
            })
            .collect()
    }
}

/// Maximum eigenvalue and the dimension of its eigenspace.
pub fn top_degeneracy(s: &Spectrum, tol: f64) -> (f64, usize) {
    let top = s.top_eigenspace(tol);
    (s.max(), top.len())
}

/// Edge sets of a `rows × cols` lattice.
///
/// Periodic: `rows·cols` vertices and faces on a torus, two edges per
/// vertex. Open: `rows × cols` faces, `(rows+1)(cols+1)` vertices, and
/// boundary vertices keep only the edges that exist.
pub fn lattice(rows: usize, cols: usize, periodic: bool) -> Result<(Vec<Edge>, Vec<Vec<usize>>, Vec<Vec<usize>>)> {
    if rows == 0 || cols == 0 || (periodic && (rows < 2 || cols < 2)) {
        return Err(QuantumError::Argument(format!(
            "{rows}x{cols} lattice is too small{}",
            if periodic { " for periodic boundaries" } else { "" }
        )));
    }
    let mut edges = Vec::new();
    let (hr, hc, vr, vc) = if periodic {
        (rows, cols, rows, cols)
    } else {
        (rows + 1, cols, rows, cols + 1)
    };
    for row in 0..hr {
        for col in 0..hc {
            edges.push(Edge::Horizontal { row, col });
        }
    }
    for row in 0..vr {
        for col in 0..vc {
            edges.push(Edge::Vertical { row, col });
        }
    }
    let id = |e: Edge| edges.iter().position(|&x| x == e);
    let mut plaquettes = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let (r1, c1) = if periodic { ((r + 1) % rows, (c + 1) % cols) } else { (r + 1, c + 1) };
            let face = [
                Edge::Horizontal { row: r, col: c },
                Edge::Horizontal { row: r1, col: c },
                Edge::Vertical { row: r, col: c },
                Edge::Vertical { row: r, col: c1 },
            ];
            plaquettes.push(face.iter().map(|&e| id(e).expect("face edge")).collect());
        }
    }
    let mut vertices = Vec::new();
    let (nr, nc) = if periodic { (rows, cols) } else { (rows + 1, cols + 1) };
    for r in 0..nr {
        for c in 0..nc {
            let mut star = Vec::new();
            if periodic {
                star.push(Edge::Horizontal { row: r, col: c });
                star.push(Edge::Horizontal { row: r, col: (c + cols - 1) % cols });
                star.push(Edge::Vertical { row: r, col: c });
                star.push(Edge::Vertical { row: (r + rows - 1) % rows, col: c });
            } else {
                star.push(Edge::Horizontal { row: r, col: c });
                if c > 0 {
                    star.push(Edge::Horizontal { row: r, col: c - 1 });
                }
                star.push(Edge::Vertical { row: r, col: c });
                if r > 0 {
                    star.push(Edge::Vertical { row: r - 1, col: c });
                }
            }
            vertices.push(star.into_iter().filter_map(id).collect());
        }
    }
    Ok((edges, plaquettes, vertices))
}

/// `−Σ_p ⊗(1 − 2n_r) − Σ_v ⊗(a†_r + a_r)`, the vertex products expanded
/// into create/annihilate terms.
pub fn toric_terms(plaquettes: &[Vec<usize>], vertices: &[Vec<usize>]) -> TermList {
    let mut terms = Vec::new();
    for p in plaquettes {
        terms.push(OperatorTerm::new(-1.0, p.iter().map(|&r| Factor::parity(r, 1)).collect()));
    }
    for v in vertices {
        for mask in 0..1u32 << v.len() {
            let factors = v
                .iter()
                .enumerate()
                .map(|(i, &r)| {
                    if mask >> i & 1 == 1 {
                        Factor::create(r, 1)
                    } else {
                        Factor::annihilate(r, 1)
                    }
                })
                .collect();
            terms.push(OperatorTerm::new(-1.0, factors));
        }
    }
    TermList::new(terms)
}

pub fn toric_harmony(rows: usize, cols: usize, periodic: bool) -> Result<ToricCode> {
    let (edges, plaquettes, vertices) = lattice(rows, cols, periodic)?;
    let space = ModeSpace::new(edges.len(), 1);
    let operator = build_operator(&[toric_terms(&plaquettes, &vertices)], space)?;
    Ok(ToricCode { rows, cols, periodic, edges, plaquettes, vertices, operator })
}
