//! Text and JSON formats. Indices in files are 1-based.
//!
//! Demand files: first line `q K L`, then `L` lines of `K` integers.
//! Solution files: JSON with `q, K, L, M, rate, servers, assignment, A, C`.

use serde::{Deserialize, Serialize};

use crate::bounds::{is_multilevel_covering, CoveringDesign};
use crate::error::{Error, Result};
use crate::gf::FieldSpec;
use crate::matfq::MatrixFq;
use crate::model::{CodingSolution, ProblemInstance, TaskAssignment, VerificationReport};

/// Parses a demand file. Entries may be any integers; they are reduced mod q.
pub fn parse_demand(text: &str) -> Result<MatrixFq> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty demand file".into()))?;
    let nums = parse_ints(header)?;
    let [q, k, l] = nums[..] else {
        return Err(Error::Parse(format!("header must be `q K L`, got {header:?}")));
    };
    if q < 2 || k < 1 || l < 1 {
        return Err(Error::Parse(format!("bad header values {header:?}")));
    }
    let field = FieldSpec::new(q as u64)?;
    let (k, l) = (k as usize, l as usize);
    let mut rows = Vec::with_capacity(l);
    for (i, line) in lines.enumerate() {
        let r = parse_ints(line)?;
        if r.len() != k {
            return Err(Error::Parse(format!(
                "row {} has {} entries, expected K = {k}",
                i + 1,
                r.len()
            )));
        }
        rows.push(r);
    }
    if rows.len() != l {
        return Err(Error::Parse(format!("found {} rows, expected L = {l}", rows.len())));
    }
    Ok(MatrixFq::from_rows(field, &rows))
}

fn parse_ints(line: &str) -> Result<Vec<i64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| Error::Parse(format!("not an integer: {t:?}")))
        })
        .collect()
}

pub fn format_demand(d: &MatrixFq) -> String {
    let mut s = format!("{} {} {}\n", d.field().modulus(), d.cols(), d.rows());
    for r in 0..d.rows() {
        let row: Vec<String> = d.row(r).iter().map(u32::to_string).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedRow {
    pub server: usize,
    pub coeffs: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SolutionFile {
    pub q: u32,
    pub K: usize,
    pub L: usize,
    pub M: usize,
    pub rate: usize,
    pub servers: usize,
    pub assignment: Vec<Vec<usize>>,
    pub A: Vec<EncodedRow>,
    pub C: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
}

impl SolutionFile {
    pub fn new(
        inst: &ProblemInstance,
        sol: &CodingSolution,
        scheme: Option<String>,
        verification: Option<VerificationReport>,
    ) -> Self {
        SolutionFile {
            q: inst.field.modulus(),
            K: inst.k,
            L: inst.l,
            M: inst.m,
            rate: sol.rate(),
            servers: sol.servers(),
            assignment: sol
                .assignment
                .sets()
                .iter()
                .map(|s| s.iter().map(|j| j + 1).collect())
                .collect(),
            A: (0..sol.rate())
                .map(|r| EncodedRow {
                    server: sol.server_of_row[r] + 1,
                    coeffs: sol.a.row(r).to_vec(),
                })
                .collect(),
            C: sol.c.row_vecs(),
            scheme,
            verification,
        }
    }

    /// Rebuilds the in-memory solution, checking shapes and index ranges.
    pub fn to_solution(&self) -> Result<(ProblemInstance, CodingSolution)> {
        let field = FieldSpec::new(self.q as u64)?;
        let inst = ProblemInstance::new(self.K, self.L, self.M, field)?;
        let sets = self
            .assignment
            .iter()
            .map(|s| {
                s.iter()
                    .map(|&j| {
                        if j == 0 || j > self.K {
                            Err(Error::Parse(format!("dataset index {j} outside 1..={}", self.K)))
                        } else {
                            Ok(j - 1)
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let assignment = TaskAssignment::new(sets)?;
        let mut data = Vec::with_capacity(self.A.len() * self.K);
        let mut server_of_row = Vec::with_capacity(self.A.len());
        for (r, row) in self.A.iter().enumerate() {
            if row.coeffs.len() != self.K {
                return Err(Error::Parse(format!("A row {} has {} entries", r + 1, row.coeffs.len())));
            }
            if row.server == 0 || row.server > assignment.servers() {
                return Err(Error::Parse(format!("A row {} names server {}", r + 1, row.server)));
            }
            data.extend_from_slice(&row.coeffs);
            server_of_row.push(row.server - 1);
        }
        let a = MatrixFq::new(field, self.A.len(), self.K, data)?;
        if self.C.len() != self.L || self.C.iter().any(|r| r.len() != self.A.len()) {
            return Err(Error::Parse("C must be L rows of length rate".into()));
        }
        let c = MatrixFq::new(field, self.L, self.A.len(), self.C.concat())?;
        if self.rate != self.A.len() || self.servers != assignment.servers() {
            return Err(Error::Parse("rate or servers field disagrees with A / assignment".into()));
        }
        Ok((
            inst,
            CodingSolution {
                assignment,
                a,
                server_of_row,
                c,
            },
        ))
    }
}

/// Covering design certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringCertificate {
    pub v: usize,
    pub k: usize,
    pub m: usize,
    pub omega: usize,
    pub blocks: Vec<Vec<usize>>,
}

impl CoveringCertificate {
    pub fn new(design: &CoveringDesign, k: usize, m: usize) -> Self {
        CoveringCertificate {
            v: design.v,
            k,
            m,
            omega: design.blocks.len(),
            blocks: design
                .blocks
                .iter()
                .map(|b| b.iter().map(|j| j + 1).collect())
                .collect(),
        }
    }

    /// Re-checks the certificate from scratch.
    pub fn verify(&self) -> bool {
        if self.v == 0 || self.v > 63 || self.omega != self.blocks.len() {
            return false;
        }
        if self.blocks.iter().flatten().any(|&j| j == 0 || j > self.v) {
            return false;
        }
        let design = CoveringDesign {
            v: self.v,
            blocks: self
                .blocks
                .iter()
                .map(|b| {
                    let mut b: Vec<usize> = b.iter().map(|j| j - 1).collect();
                    b.sort_unstable();
                    b.dedup();
                    b
                })
                .collect(),
        };
        is_multilevel_covering(&design, self.k, self.m)
    }
}
