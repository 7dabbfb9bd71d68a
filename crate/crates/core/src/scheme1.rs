//! Nullspace-based designs with rate `min(K, L⌈K/(L+M-1)⌉)`.
//!
//! A server assigned `M_n` can send `v · D · f` exactly when `v` annihilates
//! the columns it did not compute, i.e. `v · D_{M_n^c} = 0`. Stacking those
//! left nullspaces over all servers gives the nullspace matrix; if it has
//! rank `L`, any `L` independent rows `Ñ` yield `A = Ñ·D` and `C = Ñ^{-1}`.
//!
//! When `K` is too large for a single block, columns are split into chunks
//! of width at most `L+M-1` and each chunk is solved on its own servers.

use crate::error::{Error, Result};
use crate::gf::FieldSpec;
use crate::matfq::MatrixFq;
use crate::model::{uncoded_solution, CodingSolution, DemandMatrix, TaskAssignment};

/// Rows are candidate transmission vectors in function space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NullspaceMatrix {
    pub n: MatrixFq,
    pub row_server: Vec<usize>,
}

/// Stacks the canonical left nullspace of `D_{M_n^c}` for every server.
///
/// A server whose complement is empty contributes the identity.
pub fn nullspace_matrix(d: &MatrixFq, assignment: &TaskAssignment) -> NullspaceMatrix {
    let l = d.rows();
    let mut data = Vec::new();
    let mut row_server = Vec::new();
    for s in 0..assignment.servers() {
        let comp = assignment.complement(s, d.cols());
        let sub = d.select_columns(&comp).expect("complement indices are in range");
        let basis = sub.left_nullspace_basis();
        for r in 0..basis.rows() {
            data.extend_from_slice(basis.row(r));
            row_server.push(s);
        }
    }
    NullspaceMatrix {
        n: MatrixFq::new(d.field(), row_server.len(), l, data).expect("basis rows have length L"),
        row_server,
    }
}

pub fn feasible(d: &MatrixFq, assignment: &TaskAssignment) -> bool {
    nullspace_matrix(d, assignment).n.rank() == d.rows()
}

/// Groups the first `L` independent columns into runs of `gamma` and gives
/// each run together with all remaining columns to one server.
pub(crate) fn grouped_assignment(d: &MatrixFq, gamma: usize) -> Result<TaskAssignment> {
    let (l, k) = (d.rows(), d.cols());
    let chosen = d.first_independent_columns(l)?;
    let rest: Vec<usize> = (0..k).filter(|j| !chosen.contains(j)).collect();
    let sets = chosen
        .chunks(gamma)
        .map(|g| g.iter().chain(&rest).copied().collect())
        .collect();
    TaskAssignment::new(sets)
}

/// Assignment `{i_l} ∪ ([K] \ L)` for `K <= L+M-1`.
pub fn assign_case1(d: &DemandMatrix, m: usize) -> Result<TaskAssignment> {
    let (l, k) = (d.l(), d.k());
    if k > l + m - 1 {
        return Err(Error::WrongRegime(format!(
            "single-block assignment needs K <= L+M-1, got K={k}, L={l}, M={m}"
        )));
    }
    grouped_assignment(d.matrix(), 1)
}

/// Transmissions from the first `L` independent rows of the nullspace matrix.
pub fn build_case1(d: &MatrixFq, assignment: &TaskAssignment) -> Result<CodingSolution> {
    let l = d.rows();
    let nm = nullspace_matrix(d, assignment);
    let rows = nm.n.first_independent_rows();
    if rows.len() < l {
        return Err(Error::Infeasible {
            rank: rows.len(),
            needed: l,
        });
    }
    let rows = &rows[..l];
    let nt = nm.n.select_rows(rows)?;
    Ok(CodingSolution {
        assignment: assignment.clone(),
        a: nt.mul(d)?,
        server_of_row: rows.iter().map(|&r| nm.row_server[r]).collect(),
        c: nt.invert()?,
    })
}

/// Extends the independent rows of `d` with unit vectors to `L` independent
/// rows. Returns `(d_ext, lift)` with `lift · d_ext = d`.
fn complete_to_full_rank(d: &MatrixFq) -> Result<(MatrixFq, MatrixFq)> {
    let (l, w, f) = (d.rows(), d.cols(), d.field());
    let keep = d.first_independent_rows();
    if keep.len() == l {
        return Ok((d.clone(), MatrixFq::identity(f, l)));
    }
    let mut ext = d.select_rows(&keep)?;
    let mut lift = MatrixFq::zeros(f, l, l);
    if !keep.is_empty() {
        let rec = MatrixFq::solve_row_combination(&ext, d)?;
        for r in 0..l {
            for c in 0..keep.len() {
                lift.set(r, c, rec.get(r, c));
            }
        }
    }
    let mut rank = keep.len();
    for j in 0..w {
        if rank == l {
            break;
        }
        let mut e = MatrixFq::zeros(f, 1, w);
        e.set(0, j, 1);
        let cand = MatrixFq::stack_rows(&ext, &e)?;
        if cand.rank() > rank {
            ext = cand;
            rank += 1;
        }
    }
    if rank < l {
        return Err(Error::InsufficientRank {
            needed: l,
            found: rank,
        });
    }
    Ok((ext, lift))
}

/// One column block with `ceil(L/gamma)` servers and `L` transmissions.
///
/// Requires `width <= L+M-gamma`. Rank-deficient blocks are completed to
/// full rank first, so the transmission count is always `L`. Blocks narrower
/// than `L` are sent uncoded.
pub(crate) fn gamma_block(d: &MatrixFq, m: usize, gamma: usize) -> Result<CodingSolution> {
    let (l, w) = (d.rows(), d.cols());
    if w <= l {
        return uncoded_solution(d, m.min(w));
    }
    if w > l + m - gamma {
        return Err(Error::WrongRegime(format!(
            "block width {w} exceeds L+M-gamma = {}",
            l + m - gamma
        )));
    }
    let (ext, lift) = complete_to_full_rank(d)?;
    let assignment = grouped_assignment(&ext, gamma)?;
    let sol = build_case1(&ext, &assignment)?;
    Ok(CodingSolution {
        c: lift.mul(&sol.c)?,
        ..sol
    })
}

/// Splits `0..k` into `ceil(k/width)` contiguous chunks whose sizes differ by
/// at most one, larger chunks first.
pub fn balanced_chunks(k: usize, width: usize) -> Vec<Vec<usize>> {
    split_even(k, k.div_ceil(width))
}

/// `c` contiguous chunks of `0..k` with sizes differing by at most one.
pub fn split_even(k: usize, c: usize) -> Vec<Vec<usize>> {
    assert!(c >= 1 && c <= k.max(1), "need 1 <= c <= k");
    let (base, extra) = (k / c, k % c);
    let mut out = Vec::with_capacity(c);
    let mut start = 0;
    for i in 0..c {
        let len = base + usize::from(i < extra);
        out.push((start..start + len).collect());
        start += len;
    }
    out
}

/// `min(K, L⌈K/(L+M-γ)⌉)`.
pub fn gamma_rate(k: usize, l: usize, m: usize, gamma: usize) -> usize {
    k.min(l * k.div_ceil(l + m - gamma))
}

pub fn rate_formula(k: usize, l: usize, m: usize) -> usize {
    gamma_rate(k, l, m, 1)
}

/// Column-chunked construction shared by this module and the trade-off
/// family.
///
/// `d` need not have full rank.
pub(crate) fn chunked(d: &MatrixFq, m: usize, gamma: usize) -> Result<CodingSolution> {
    let (l, k, f) = (d.rows(), d.cols(), d.field());
    if gamma == 0 || gamma > l {
        return Err(Error::Precondition(format!("need 1 <= gamma <= L, got {gamma}")));
    }
    if m == 0 || m > k {
        return Err(Error::Precondition(format!("need 1 <= M <= K, got M={m}")));
    }
    let width = l + m - gamma;
    if l * k.div_ceil(width) >= k {
        return uncoded_solution(d, m);
    }
    blocks_over(f, d, balanced_chunks(k, width), |sub| {
        gamma_block(sub, m, gamma)
    })
}

/// Solves each column chunk with `build` and composes the results.
pub(crate) fn blocks_over<F>(
    f: FieldSpec,
    d: &MatrixFq,
    chunks: Vec<Vec<usize>>,
    build: F,
) -> Result<CodingSolution>
where
    F: Fn(&MatrixFq) -> Result<CodingSolution>,
{
    let mut blocks = Vec::with_capacity(chunks.len());
    for cols in chunks {
        let sub = d.select_columns(&cols)?;
        blocks.push((cols, build(&sub)?));
    }
    CodingSolution::compose_column_blocks(f, d.cols(), blocks)
}

/// Rate `min(K, L⌈K/(L+M-1)⌉)` with `L⌈K/(L+M-1)⌉` servers in the coded
/// regime and `⌈K/M⌉` servers when sending uncoded.
pub fn scheme1(d: &DemandMatrix, m: usize) -> Result<CodingSolution> {
    chunked(d.matrix(), m, 1)
}
