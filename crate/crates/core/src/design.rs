//! Scheme selection, including the column-split hybrid that runs the
//! `M >= K/2` construction on each chunk.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matfq::MatrixFq;
use crate::model::{normalize_demand, CodingSolution};
use crate::scheme1::{blocks_over, chunked, rate_formula as s1_rate, split_even};
use crate::scheme2::{build_scheme2, rate_formula as s2_rate};

/// What the caller asked for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeChoice {
    Auto,
    S1,
    S2,
    Gamma(usize),
    Hybrid,
}

impl FromStr for SchemeChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(SchemeChoice::Auto),
            "s1" => Ok(SchemeChoice::S1),
            "s2" => Ok(SchemeChoice::S2),
            "hybrid" => Ok(SchemeChoice::Hybrid),
            _ => match s.strip_prefix("gamma:").map(str::parse) {
                Some(Ok(g)) if g >= 1 => Ok(SchemeChoice::Gamma(g)),
                _ => Err(Error::Parse(format!(
                    "unknown scheme {s:?} (expected auto, s1, s2, gamma:<g> or hybrid)"
                ))),
            },
        }
    }
}

/// A concrete construction with its formula rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Plan {
    S1,
    S2,
    Gamma(usize),
    /// Column split into this many balanced chunks, scheme 2 on each.
    Hybrid(usize),
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Plan::S1 => write!(f, "s1"),
            Plan::S2 => write!(f, "s2"),
            Plan::Gamma(g) => write!(f, "gamma:{g}"),
            Plan::Hybrid(c) => write!(f, "hybrid:{c}"),
        }
    }
}

/// Rate of scheme 2 on a `w`-column chunk with budget `m`.
fn chunk_rate(w: usize, l: usize, m: usize) -> Option<usize> {
    s2_rate(w, l, m.min(w))
}

/// Best column split for the hybrid, as `(chunks, rate)`.
///
/// Only splits into at least two chunks are considered; a single chunk is
/// plain scheme 2. Ties go to fewer chunks.
pub fn hybrid_plan(k: usize, l: usize, m: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for c in 2..=k {
        let (small, extra) = (k / c, k % c);
        if small < l {
            break;
        }
        let big = small + usize::from(extra > 0);
        let (Some(rb), Some(rs)) = (chunk_rate(big, l, m), chunk_rate(small, l, m)) else {
            continue;
        };
        let rate = extra * rb + (c - extra) * rs;
        if best.is_none_or(|(_, r)| rate < r) {
            best = Some((c, rate));
        }
    }
    best
}

/// Formula rate of a plan.
pub fn plan_rate(plan: Plan, k: usize, l: usize, m: usize) -> Option<usize> {
    match plan {
        Plan::S1 => Some(s1_rate(k, l, m)),
        Plan::S2 => s2_rate(k, l, m),
        Plan::Gamma(g) => (g >= 1 && g <= l).then(|| crate::scheme1::gamma_rate(k, l, m, g)),
        Plan::Hybrid(c) => {
            let chunks = split_even(k, c);
            chunks.iter().map(|ch| chunk_rate(ch.len(), l, m)).sum()
        }
    }
}

/// Minimum formula rate among scheme 1, scheme 2 and the hybrid, ties
/// resolved in that order.
pub fn auto_plan(k: usize, l: usize, m: usize) -> (Plan, usize) {
    let mut best = (Plan::S1, s1_rate(k, l, m));
    if let Some(r) = s2_rate(k, l, m) {
        if r < best.1 {
            best = (Plan::S2, r);
        }
    }
    if let Some((c, r)) = hybrid_plan(k, l, m) {
        if r < best.1 {
            best = (Plan::Hybrid(c), r);
        }
    }
    best
}

/// Resolves a choice to a plan for the given parameters.
pub fn resolve(choice: SchemeChoice, k: usize, l: usize, m: usize) -> Result<Plan> {
    match choice {
        SchemeChoice::Auto => Ok(auto_plan(k, l, m).0),
        SchemeChoice::S1 => Ok(Plan::S1),
        SchemeChoice::S2 => {
            if s2_rate(k, l, m).is_none() {
                return Err(Error::WrongRegime(format!("s2 needs M >= K/2, got K={k}, M={m}")));
            }
            Ok(Plan::S2)
        }
        SchemeChoice::Gamma(g) => {
            if g == 0 || g > l {
                return Err(Error::WrongRegime(format!("gamma must be in 1..=L, got {g}")));
            }
            Ok(Plan::Gamma(g))
        }
        SchemeChoice::Hybrid => hybrid_plan(k, l, m)
            .map(|(c, _)| Plan::Hybrid(c))
            .ok_or_else(|| Error::WrongRegime(format!("no chunk split with M >= width/2 for K={k}, M={m}"))),
    }
}

/// Builds a plan on a demand of full row rank.
fn build_full_rank(plan: Plan, d: &MatrixFq, m: usize) -> Result<CodingSolution> {
    match plan {
        Plan::S1 => chunked(d, m, 1),
        Plan::Gamma(g) => chunked(d, m, g),
        Plan::S2 => build_scheme2(d, m),
        Plan::Hybrid(c) => blocks_over(d.field(), d, split_even(d.cols(), c), |sub| {
            build_scheme2(sub, m.min(sub.cols()))
        }),
    }
}

/// Builds a plan for any nonzero demand. Dependent rows are dropped before
/// the construction and recovered in the decoder.
pub fn build(plan: Plan, d: &MatrixFq, m: usize) -> Result<CodingSolution> {
    let (full, recovery) = normalize_demand(d)?;
    let sol = build_full_rank(plan, full.matrix(), m)?;
    if full.l() == d.rows() {
        return Ok(sol);
    }
    Ok(CodingSolution {
        c: recovery.mul(&sol.c)?,
        ..sol
    })
}
