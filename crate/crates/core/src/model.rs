//! Problem instances, task assignments, coding solutions and the verifier.
//!
//! All indices are 0-based in memory. File formats in [`crate::io`] use
//! 1-based indices.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::FieldSpec;
use crate::matfq::MatrixFq;

/// Parameters `(K, L, M)` over `F_q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub field: FieldSpec,
}

impl ProblemInstance {
    pub fn new(k: usize, l: usize, m: usize, field: FieldSpec) -> Result<Self> {
        if !(1..=k).contains(&l) {
            return Err(Error::Precondition(format!("need 1 <= L <= K, got L={l}, K={k}")));
        }
        if !(1..=k).contains(&m) {
            return Err(Error::Precondition(format!("need 1 <= M <= K, got M={m}, K={k}")));
        }
        Ok(ProblemInstance { k, l, m, field })
    }
}

impl fmt::Display for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(K={}, L={}, M={}) over {}", self.k, self.l, self.m, self.field)
    }
}

/// An `L x K` demand matrix of full row rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandMatrix(MatrixFq);

impl DemandMatrix {
    pub fn new(d: MatrixFq) -> Result<Self> {
        if d.rows() == 0 || d.cols() == 0 {
            return Err(Error::Dimension("demand matrix must be nonempty".into()));
        }
        let rank = d.rank();
        if rank != d.rows() {
            return Err(Error::RankDeficient {
                rank,
                rows: d.rows(),
            });
        }
        Ok(DemandMatrix(d))
    }

    pub fn matrix(&self) -> &MatrixFq {
        &self.0
    }

    pub fn into_matrix(self) -> MatrixFq {
        self.0
    }

    pub fn l(&self) -> usize {
        self.0.rows()
    }

    pub fn k(&self) -> usize {
        self.0.cols()
    }

    pub fn field(&self) -> FieldSpec {
        self.0.field()
    }

    /// Uniformly random full-rank `l x k` demand, by rejection.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, field: FieldSpec, l: usize, k: usize) -> Self {
        assert!(l >= 1 && l <= k, "need 1 <= l <= k");
        loop {
            let data = (0..l * k).map(|_| rng.gen_range(0..field.modulus())).collect();
            let m = MatrixFq::new(field, l, k, data).expect("residues in range");
            if let Ok(d) = DemandMatrix::new(m) {
                return d;
            }
        }
    }
}

/// Drops dependent rows, keeping the first maximal independent set.
///
/// Returns `(d_full, recovery)` with `recovery · d_full = d_raw`.
pub fn normalize_demand(d_raw: &MatrixFq) -> Result<(DemandMatrix, MatrixFq)> {
    if d_raw.is_zero() {
        return Err(Error::Precondition("demand matrix is zero".into()));
    }
    let keep = d_raw.first_independent_rows();
    let full = d_raw.select_rows(&keep)?;
    let recovery = MatrixFq::solve_row_combination(&full, d_raw)?;
    Ok((DemandMatrix(full), recovery))
}

/// One subset of `[K]` per server.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskAssignment {
    sets: Vec<Vec<usize>>,
}

impl TaskAssignment {
    /// Sets are sorted and deduplicated; empty sets are rejected.
    pub fn new(sets: Vec<Vec<usize>>) -> Result<Self> {
        let mut out = Vec::with_capacity(sets.len());
        for (n, mut s) in sets.into_iter().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return Err(Error::Precondition(format!("server {} has an empty set", n + 1)));
            }
            out.push(s);
        }
        Ok(TaskAssignment { sets: out })
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn servers(&self) -> usize {
        self.sets.len()
    }

    pub fn max_size(&self) -> usize {
        self.sets.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn contains(&self, server: usize, j: usize) -> bool {
        self.sets[server].binary_search(&j).is_ok()
    }

    /// Complement of server `n`'s set within `[k]`.
    pub fn complement(&self, n: usize, k: usize) -> Vec<usize> {
        (0..k).filter(|j| !self.contains(n, *j)).collect()
    }

    /// The sets as an order-independent collection, for comparisons.
    pub fn as_sorted_multiset(&self) -> Vec<Vec<usize>> {
        let mut s = self.sets.clone();
        s.sort();
        s
    }
}

/// A complete design: who computes what, what they send, how to decode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodingSolution {
    pub assignment: TaskAssignment,
    /// `R x K` encoding matrix.
    pub a: MatrixFq,
    /// Server sending each row of `a`.
    pub server_of_row: Vec<usize>,
    /// `L x R` decoding matrix.
    pub c: MatrixFq,
}

impl CodingSolution {
    pub fn rate(&self) -> usize {
        self.a.rows()
    }

    pub fn servers(&self) -> usize {
        self.assignment.servers()
    }

    /// Places independent column-block solutions side by side.
    ///
    /// Block `b` covers the global columns `blocks[b].0`; its solution uses
    /// local indices `0..width`. Servers get fresh indices per block.
    pub fn compose_column_blocks(
        field: FieldSpec,
        k: usize,
        blocks: Vec<(Vec<usize>, CodingSolution)>,
    ) -> Result<CodingSolution> {
        let l = blocks
            .first()
            .map(|(_, s)| s.c.rows())
            .ok_or_else(|| Error::Precondition("no blocks to compose".into()))?;
        let rate: usize = blocks.iter().map(|(_, s)| s.rate()).sum();
        let mut sets = Vec::new();
        let mut server_of_row = Vec::with_capacity(rate);
        let mut a = MatrixFq::zeros(field, rate, k);
        let mut row = 0;
        for (cols, sol) in &blocks {
            if sol.a.cols() != cols.len() || sol.c.rows() != l {
                return Err(Error::Dimension("block shape does not match its columns".into()));
            }
            let off = sets.len();
            sets.extend(
                sol.assignment
                    .sets()
                    .iter()
                    .map(|s| s.iter().map(|&j| cols[j]).collect::<Vec<_>>()),
            );
            for r in 0..sol.rate() {
                for (j, &g) in cols.iter().enumerate() {
                    a.set(row, g, sol.a.get(r, j));
                }
                server_of_row.push(off + sol.server_of_row[r]);
                row += 1;
            }
        }
        let cs: Vec<&MatrixFq> = blocks.iter().map(|(_, s)| &s.c).collect();
        let c = MatrixFq::hstack(field, l, &cs)?;
        Ok(CodingSolution {
            assignment: TaskAssignment::new(sets)?,
            a,
            server_of_row,
            c,
        })
    }
}

/// Outcome of [`verify_solution`], one flag per invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub factorization: bool,
    pub support: bool,
    pub sparsity: bool,
    pub rate_accounting: bool,
    pub rate: usize,
    pub servers: usize,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Checks `D = C·A`, supports, the per-row budget and rate accounting.
///
/// `d` may be any demand with `inst.l` rows; full rank is not required.
pub fn verify_solution(
    inst: &ProblemInstance,
    d: &MatrixFq,
    sol: &CodingSolution,
) -> Result<VerificationReport> {
    let f = inst.field;
    if d.field() != f || sol.a.field() != f || sol.c.field() != f {
        return Err(Error::Dimension("matrices are not over the instance field".into()));
    }
    if d.rows() != inst.l || d.cols() != inst.k {
        return Err(Error::Dimension(format!(
            "demand is {}x{}, instance expects {}x{}",
            d.rows(),
            d.cols(),
            inst.l,
            inst.k
        )));
    }
    if sol.a.cols() != inst.k || sol.c.rows() != inst.l || sol.c.cols() != sol.a.rows() {
        return Err(Error::Dimension(format!(
            "A is {}x{}, C is {}x{}",
            sol.a.rows(),
            sol.a.cols(),
            sol.c.rows(),
            sol.c.cols()
        )));
    }
    let mut failures = Vec::new();

    let factorization = sol.c.mul(&sol.a)? == *d;
    if !factorization {
        failures.push("C*A differs from D".to_string());
    }

    let n = sol.servers();
    let mut rate_accounting = sol.server_of_row.len() == sol.a.rows();
    if !rate_accounting {
        failures.push(format!(
            "{} rows tagged for {} rows of A",
            sol.server_of_row.len(),
            sol.a.rows()
        ));
    }
    if let Some(&bad) = sol.server_of_row.iter().find(|&&s| s >= n) {
        rate_accounting = false;
        failures.push(format!("row tagged with server {} of {n}", bad + 1));
    }
    let per_server: usize = (0..n)
        .map(|s| sol.server_of_row.iter().filter(|&&t| t == s).count())
        .sum();
    if per_server != sol.rate() {
        rate_accounting = false;
        failures.push(format!("sum of r_n is {per_server}, rate is {}", sol.rate()));
    }

    let mut support = true;
    let mut sparsity = true;
    for (s, set) in sol.assignment.sets().iter().enumerate() {
        if set.len() > inst.m {
            sparsity = false;
            failures.push(format!("server {} assigned {} > M datasets", s + 1, set.len()));
        }
        if set.iter().any(|&j| j >= inst.k) {
            support = false;
            failures.push(format!("server {} assigned an index outside [K]", s + 1));
        }
    }
    if rate_accounting {
        for r in 0..sol.rate() {
            let s = sol.server_of_row[r];
            let supp = sol.a.row_support(r);
            if supp.len() > inst.m {
                sparsity = false;
                failures.push(format!("row {} has {} > M nonzeros", r + 1, supp.len()));
            }
            if let Some(j) = supp.iter().find(|&&j| !sol.assignment.contains(s, j)) {
                support = false;
                failures.push(format!(
                    "row {} uses dataset {} not assigned to server {}",
                    r + 1,
                    j + 1,
                    s + 1
                ));
            }
        }
    }

    let passed = factorization && support && sparsity && rate_accounting;
    Ok(VerificationReport {
        factorization,
        support,
        sparsity,
        rate_accounting,
        rate: sol.rate(),
        servers: n,
        passed,
        failures,
    })
}

/// Uncoded design: `A = I_K`, rows packed `M` per server, `C = D`.
pub fn uncoded_solution(d: &MatrixFq, m: usize) -> Result<CodingSolution> {
    let k = d.cols();
    if m == 0 {
        return Err(Error::Precondition("M must be positive".into()));
    }
    let sets: Vec<Vec<usize>> = (0..k)
        .collect::<Vec<_>>()
        .chunks(m)
        .map(<[usize]>::to_vec)
        .collect();
    Ok(CodingSolution {
        assignment: TaskAssignment::new(sets)?,
        a: MatrixFq::identity(d.field(), k),
        server_of_row: (0..k).map(|j| j / m).collect(),
        c: d.clone(),
    })
}
