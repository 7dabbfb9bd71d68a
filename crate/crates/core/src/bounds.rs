//! Lower bounds on the rate: the entropy bound, gap certificates, and
//! multi-level covering numbers with an exact search for small instances.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::par::Exec;
use crate::scheme1::{balanced_chunks, rate_formula};

/// Natural log of `binom(n, r)` as a sum of logs.
fn ln_binom(n: usize, r: usize) -> f64 {
    let r = r.min(n - r);
    (1..=r).map(|i| ((n - r + i) as f64).ln() - (i as f64).ln()).sum()
}

/// `max(L, LK / (L + M + log_q binom(K, M)))`.
///
/// The log term is rounded up and the quotient nudged down, so the returned
/// value never exceeds the exact bound.
pub fn entropy_lower_bound(k: usize, l: usize, m: usize, q: u64) -> f64 {
    assert!(q >= 2 && m <= k && l >= 1, "invalid parameters");
    let x = ln_binom(k, m) / (q as f64).ln();
    let x_up = if x == 0.0 { 0.0 } else { x + 1e-9 * (1.0 + x) };
    let frac = (l * k) as f64 / ((l + m) as f64 + x_up) * (1.0 - 1e-12);
    frac.max(l as f64)
}

/// Ratio of the achievable rate to the entropy bound, with the limit the
/// theory promises for these parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapCertificate {
    pub ratio: f64,
    /// 2 when `(L+M-1) | K`, 3 otherwise; absent when `q < eK/M`.
    pub claimed: Option<f64>,
    pub divisible: bool,
    pub holds: bool,
}

pub fn gap_certificate(k: usize, l: usize, m: usize, q: u64) -> GapCertificate {
    let ratio = rate_formula(k, l, m) as f64 / entropy_lower_bound(k, l, m, q);
    let divisible = k.is_multiple_of(l + m - 1);
    let large_field = q as f64 >= std::f64::consts::E * k as f64 / m as f64;
    let claimed = large_field.then_some(if divisible { 2.0 } else { 3.0 });
    GapCertificate {
        ratio,
        claimed,
        divisible,
        holds: claimed.is_none_or(|c| ratio <= c),
    }
}

/// `2K/(M+1)`, a lower bound on `C(K, M, 2)`.
pub fn covering_lower_bound_l2(k: usize, m: usize) -> Ratio<u64> {
    Ratio::new(2 * k as u64, m as u64 + 1)
}

/// Blocks over `0..v`; repeats allowed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringDesign {
    pub v: usize,
    pub blocks: Vec<Vec<usize>>,
}

fn mask_of(block: &[usize]) -> u64 {
    block.iter().fold(0, |acc, &j| acc | 1 << j)
}

/// Calls `f` on every `size`-subset of `0..v` as a bitmask.
fn for_each_subset(v: usize, size: usize, mut f: impl FnMut(u64) -> bool) -> bool {
    if size == 0 || size > v {
        return true;
    }
    let limit = 1u64 << v;
    let mut x = (1u64 << size) - 1;
    while x < limit {
        if !f(x) {
            return false;
        }
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    true
}

/// Every `m'`-subset with `m' <= m` meets at least `m'` blocks, counted with
/// multiplicity. Blocks larger than `k`, empty, or out of range fail.
///
/// Supports `v <= 63`.
pub fn is_multilevel_covering(design: &CoveringDesign, k: usize, m: usize) -> bool {
    let v = design.v;
    assert!(v <= 63, "v must be at most 63");
    if design
        .blocks
        .iter()
        .any(|b| b.is_empty() || b.len() > k || b.iter().any(|&j| j >= v))
    {
        return false;
    }
    let masks: Vec<u64> = design.blocks.iter().map(|b| mask_of(b)).collect();
    (1..=m.min(v)).all(|size| {
        for_each_subset(v, size, |t| {
            masks.iter().filter(|&&b| b & t != 0).count() >= size
        })
    })
}

/// `max(⌈v/k⌉, min(m,v), ⌈2v/(k+1)⌉ if m >= 2)`.
pub fn covering_lower_bound(v: usize, k: usize, m: usize) -> usize {
    let me = m.min(v);
    let mut lb = v.div_ceil(k).max(me);
    if me >= 2 {
        lb = lb.max(covering_lower_bound_l2(v, k).ceil().to_integer() as usize);
    }
    lb
}

/// Explicit design with `min(v, m⌈v/(m+k-1)⌉)` blocks (or `m` copies of
/// `[v]` when `k >= v`).
pub fn covering_upper_design(v: usize, k: usize, m: usize) -> CoveringDesign {
    let me = m.min(v);
    let blocks = if k >= v {
        vec![(0..v).collect(); me]
    } else if me * v.div_ceil(me + k - 1) < v {
        balanced_chunks(v, me + k - 1)
            .into_iter()
            .flat_map(|ch| {
                let (head, rest) = ch.split_at(me);
                head.iter()
                    .map(|&i| std::iter::once(i).chain(rest.iter().copied()).collect())
                    .collect::<Vec<Vec<usize>>>()
            })
            .collect()
    } else {
        (0..v).map(|j| vec![j]).collect()
    };
    CoveringDesign { v, blocks }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchLimits {
    pub budget: Duration,
    pub max_omega: Option<usize>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            budget: Duration::from_secs(10),
            max_omega: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CoveringOutcome {
    Exact {
        omega: usize,
        design: CoveringDesign,
    },
    /// Every design with fewer than `lower` blocks was ruled out.
    Unknown {
        lower: usize,
        upper: usize,
        best: CoveringDesign,
    },
}

impl CoveringOutcome {
    pub fn exact(&self) -> Option<usize> {
        match self {
            CoveringOutcome::Exact { omega, .. } => Some(*omega),
            CoveringOutcome::Unknown { .. } => None,
        }
    }

    /// A value no larger than the covering number.
    pub fn lower(&self) -> usize {
        match self {
            CoveringOutcome::Exact { omega, .. } => *omega,
            CoveringOutcome::Unknown { lower, .. } => *lower,
        }
    }
}

/// Search tables shared by all branches.
struct Space {
    v: usize,
    size: usize,
    blocks: Vec<u64>,
    min_elem: Vec<usize>,
    /// Subsets hit by each block.
    hits: Vec<Vec<u32>>,
    need: Vec<i32>,
    max_elem: Vec<usize>,
    singleton: Vec<bool>,
}

impl Space {
    fn new(v: usize, k: usize, m: usize) -> Space {
        let size = k.min(v);
        let mut blocks = Vec::new();
        // lex order on sorted element lists
        fn rec(start: usize, v: usize, left: usize, cur: u64, out: &mut Vec<u64>) {
            if left == 0 {
                out.push(cur);
                return;
            }
            for j in start..=v - left {
                rec(j + 1, v, left - 1, cur | 1 << j, out);
            }
        }
        rec(0, v, size, 0, &mut blocks);
        let mut subsets = Vec::new();
        for s in 1..=m.min(v) {
            for_each_subset(v, s, |t| {
                subsets.push(t);
                true
            });
        }
        let hits = blocks
            .iter()
            .map(|&b| {
                (0..subsets.len() as u32)
                    .filter(|&i| subsets[i as usize] & b != 0)
                    .collect()
            })
            .collect();
        Space {
            v,
            size,
            min_elem: blocks.iter().map(|b| b.trailing_zeros() as usize).collect(),
            blocks,
            hits,
            need: subsets.iter().map(|t| t.count_ones() as i32).collect(),
            max_elem: subsets.iter().map(|t| 63 - t.leading_zeros() as usize).collect(),
            singleton: subsets.iter().map(|t| t.count_ones() == 1).collect(),
        }
    }

    fn apply(&self, def: &mut [i32], b: usize, delta: i32) {
        for &t in &self.hits[b] {
            def[t as usize] -= delta;
        }
    }

    fn design(&self, chosen: &[usize], omega: usize) -> CoveringDesign {
        let mut blocks: Vec<Vec<usize>> = chosen
            .iter()
            .map(|&b| (0..self.v).filter(|j| self.blocks[b] >> j & 1 == 1).collect())
            .collect();
        while blocks.len() < omega {
            blocks.push(blocks.last().cloned().expect("at least one block"));
        }
        CoveringDesign { v: self.v, blocks }
    }
}

enum Dfs {
    Found(Vec<usize>),
    Exhausted,
    Timeout,
}

struct Ctx<'a> {
    space: &'a Space,
    deadline: Instant,
    stop: &'a AtomicBool,
    nodes: &'a AtomicU64,
}

impl Ctx<'_> {
    fn dfs(&self, def: &mut [i32], chosen: &mut Vec<usize>, start: usize, remaining: usize) -> Dfs {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed);
        if n.is_multiple_of(4096) && Instant::now() > self.deadline {
            self.stop.store(true, Ordering::Relaxed);
        }
        if self.stop.load(Ordering::Relaxed) {
            return Dfs::Timeout;
        }
        let sp = self.space;
        let mut max_def = 0;
        let mut uncovered = 0;
        let mut limit = usize::MAX;
        for (t, &d) in def.iter().enumerate() {
            if d > 0 {
                max_def = max_def.max(d);
                uncovered += usize::from(sp.singleton[t]);
                limit = limit.min(sp.max_elem[t]);
            }
        }
        if max_def == 0 {
            return Dfs::Found(chosen.clone());
        }
        if max_def as usize > remaining || uncovered.div_ceil(sp.size) > remaining {
            return Dfs::Exhausted;
        }
        // later blocks have nondecreasing minimum element, so one that starts
        // past `limit` can never meet the subset that set it
        for b in start..sp.blocks.len() {
            if sp.min_elem[b] > limit {
                break;
            }
            sp.apply(def, b, 1);
            chosen.push(b);
            let r = self.dfs(def, chosen, b, remaining - 1);
            chosen.pop();
            sp.apply(def, b, -1);
            match r {
                Dfs::Exhausted => {}
                other => return other,
            }
        }
        Dfs::Exhausted
    }
}

/// Tries to find a design with exactly `omega` blocks.
fn search_omega(sp: &Space, omega: usize, deadline: Instant, exec: Exec) -> Dfs {
    let stop = AtomicBool::new(false);
    let nodes = AtomicU64::new(0);
    let ctx = Ctx {
        space: sp,
        deadline,
        stop: &stop,
        nodes: &nodes,
    };
    // the first block is {0..size-1} up to relabeling
    let mut def = sp.need.clone();
    sp.apply(&mut def, 0, 1);
    if def.iter().all(|&d| d <= 0) {
        return Dfs::Found(vec![0]);
    }
    if omega == 1 {
        return Dfs::Exhausted;
    }
    let limit = (0..def.len())
        .filter(|&t| def[t] > 0)
        .map(|t| sp.max_elem[t])
        .min()
        .unwrap_or(usize::MAX);
    let branches: Vec<usize> = (0..sp.blocks.len())
        .filter(|&b| sp.min_elem[b] <= limit)
        .collect();
    let out = exec.find_map_first(branches, |b| {
        let mut def = def.clone();
        sp.apply(&mut def, b, 1);
        let mut chosen = vec![0, b];
        match ctx.dfs(&mut def, &mut chosen, b, omega - 2) {
            Dfs::Exhausted => None,
            other => Some(other),
        }
    });
    out.unwrap_or(Dfs::Exhausted)
}

/// Exact `C(v, k, m)` by iterative deepening, or a bracket if the budget
/// runs out. Intended for `v <= 10`.
pub fn covering_number(v: usize, k: usize, m: usize, limits: SearchLimits, exec: Exec) -> CoveringOutcome {
    assert!((1..=63).contains(&v) && k >= 1 && m >= 1, "need 1 <= v <= 63, k >= 1, m >= 1");
    let deadline = Instant::now() + limits.budget;
    let lower = covering_lower_bound(v, k, m);
    let best = covering_upper_design(v, k, m);
    debug_assert!(is_multilevel_covering(&best, k, m));
    let upper = best.blocks.len();
    if lower >= upper {
        return CoveringOutcome::Exact { omega: upper, design: best };
    }
    let sp = Space::new(v, k, m);
    for omega in lower..upper {
        if limits.max_omega.is_some_and(|cap| omega > cap) || Instant::now() > deadline {
            return CoveringOutcome::Unknown { lower: omega, upper, best };
        }
        match search_omega(&sp, omega, deadline, exec) {
            Dfs::Found(chosen) => {
                let design = sp.design(&chosen, omega);
                debug_assert!(is_multilevel_covering(&design, k, m));
                return CoveringOutcome::Exact { omega, design };
            }
            Dfs::Exhausted => {}
            Dfs::Timeout => return CoveringOutcome::Unknown { lower: omega, upper, best },
        }
    }
    CoveringOutcome::Exact { omega: upper, design: best }
}

/// Both sides of the rate for one instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub q: u64,
    pub lower_entropy: f64,
    /// `C(K, M, L)` when the search resolved it.
    pub lower_covering: Option<usize>,
    /// Best proven lower bound from the covering search.
    pub covering_bracket: (usize, usize),
    pub achievable_scheme1: usize,
    pub gap: GapCertificate,
}

pub fn bound_report(k: usize, l: usize, m: usize, q: u64, limits: SearchLimits, exec: Exec) -> BoundReport {
    let cov = if k <= 63 {
        Some(covering_number(k, m, l, limits, exec))
    } else {
        None
    };
    let upper = covering_upper_design(k.min(63), m, l).blocks.len();
    BoundReport {
        k,
        l,
        m,
        q,
        lower_entropy: entropy_lower_bound(k, l, m, q),
        lower_covering: cov.as_ref().and_then(CoveringOutcome::exact),
        covering_bracket: match &cov {
            Some(CoveringOutcome::Exact { omega, .. }) => (*omega, *omega),
            Some(CoveringOutcome::Unknown { lower, upper, .. }) => (*lower, *upper),
            None => (covering_lower_bound(k, m, l), upper),
        },
        achievable_scheme1: rate_formula(k, l, m),
        gap: gap_certificate(k, l, m, q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quick() -> SearchLimits {
        SearchLimits {
            budget: Duration::from_secs(20),
            max_omega: None,
        }
    }

    /// Direct double loop over all subsets as 0/1 vectors.
    fn naive_covering(design: &CoveringDesign, k: usize, m: usize) -> bool {
        if design.blocks.iter().any(|b| b.is_empty() || b.len() > k) {
            return false;
        }
        let v = design.v;
        for t in 1u32..(1 << v) {
            let members: Vec<usize> = (0..v).filter(|j| t >> j & 1 == 1).collect();
            if members.len() > m {
                continue;
            }
            let mut met = 0;
            for b in &design.blocks {
                if b.iter().any(|j| members.contains(j)) {
                    met += 1;
                }
            }
            if met < members.len() {
                return false;
            }
        }
        true
    }

    fn design(v: usize, blocks: &[&[usize]]) -> CoveringDesign {
        CoveringDesign {
            v,
            blocks: blocks.iter().map(|b| b.iter().map(|j| j - 1).collect()).collect(),
        }
    }

    #[test]
    fn entropy_examples() {
        for (k, l) in [(5, 1), (7, 3), (10, 10)] {
            assert_eq!(entropy_lower_bound(k, l, k, 101), l as f64);
        }
        let log = 56f64.log10() / 11f64.log10();
        assert!((log - 1.6787020).abs() < 1e-6);
        let b = entropy_lower_bound(8, 2, 3, 11);
        assert!((b - 16.0 / (5.0 + log)).abs() < 1e-8, "{b}");
        assert!((b - 2.3957).abs() < 1e-3);
        assert!(b <= 16.0 / (5.0 + log));
        let big = entropy_lower_bound(200, 5, 20, 2_147_483_647);
        // log_q binom(200, 20) = 2.91555905 for q = 2^31 - 1
        assert!((big - 1000.0 / (25.0 + 2.915_559_05)).abs() < 1e-6, "{big}");
    }

    #[test]
    fn gap_example() {
        let g = gap_certificate(12, 3, 4, 13);
        assert!(g.divisible);
        assert_eq!(g.claimed, Some(2.0));
        // R1 = 3*2 = 6; bound = 36 / (7 + log_13 495)
        let lb = 36.0 / (7.0 + 495f64.ln() / 13f64.ln());
        assert!((g.ratio - 6.0 / lb).abs() < 1e-6);
        assert!(g.ratio > 1.0 && g.ratio <= 2.0 && g.holds);
    }

    #[test]
    fn l2_bound() {
        assert_eq!(covering_lower_bound_l2(6, 2), Ratio::from_integer(4));
        assert_eq!(covering_lower_bound_l2(8, 3), Ratio::from_integer(4));
        let r = covering_lower_bound_l2(7, 2);
        assert_eq!(r, Ratio::new(14, 3));
        assert_eq!(r.ceil().to_integer(), 5);
        assert_eq!(covering_number(7, 2, 2, quick(), Exec::Sequential).exact(), Some(5));
    }

    #[test]
    fn checker_examples() {
        let d = design(4, &[&[1, 2], &[3, 4]]);
        assert!(is_multilevel_covering(&d, 2, 1));
        // {1,2} meets only the first block
        assert!(!is_multilevel_covering(&d, 2, 2));
        assert!(naive_covering(&design(4, &[&[1, 2], &[3, 4]]), 2, 1));
        assert!(is_multilevel_covering(&design(5, &[&[1, 2, 3, 4, 5]]), 5, 1));
        assert!(!is_multilevel_covering(&design(5, &[&[1, 2, 3, 4, 5]]), 4, 1));
    }

    #[test]
    fn closed_forms_small() {
        for v in 1..=6 {
            for m in 1..=3 {
                assert_eq!(covering_number(v, 1, m, quick(), Exec::Sequential).exact(), Some(v));
            }
            for k in 1..=4 {
                assert_eq!(
                    covering_number(v, k, 1, quick(), Exec::Sequential).exact(),
                    Some(v.div_ceil(k))
                );
            }
        }
        assert_eq!(covering_number(6, 2, 2, quick(), Exec::Sequential).exact(), Some(4));
        assert_eq!(covering_number(8, 3, 2, quick(), Exec::Sequential).exact(), Some(4));
    }

    #[test]
    fn search_agrees_with_brute_force() {
        // brute force: smallest omega such that some multiset of blocks of size <= k works
        fn brute(v: usize, k: usize, m: usize) -> usize {
            let mut blocks = Vec::new();
            for mask in 1u32..(1 << v) {
                if mask.count_ones() as usize <= k {
                    blocks.push((0..v).filter(|j| mask >> j & 1 == 1).collect::<Vec<_>>());
                }
            }
            for omega in 1.. {
                let mut idx = vec![0usize; omega];
                loop {
                    let d = CoveringDesign {
                        v,
                        blocks: idx.iter().map(|&i| blocks[i].clone()).collect(),
                    };
                    if naive_covering(&d, k, m) {
                        return omega;
                    }
                    // next nondecreasing index tuple
                    let mut p = omega;
                    while p > 0 && idx[p - 1] == blocks.len() - 1 {
                        p -= 1;
                    }
                    if p == 0 {
                        break;
                    }
                    idx[p - 1] += 1;
                    for i in p..omega {
                        idx[i] = idx[p - 1];
                    }
                }
            }
            unreachable!()
        }
        for v in 1..=6 {
            for k in 1..=3 {
                for m in 1..=3 {
                    let got = covering_number(v, k, m, quick(), Exec::Sequential).exact();
                    assert_eq!(got, Some(brute(v, k, m)), "v={v} k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn parallel_and_sequential_agree() {
        for (v, k, m) in [(7, 2, 3), (8, 3, 3), (9, 2, 2), (9, 3, 3)] {
            let a = covering_number(v, k, m, quick(), Exec::Sequential);
            let b = covering_number(v, k, m, quick(), Exec::Parallel);
            assert_eq!(a, b, "v={v} k={k} m={m}");
        }
    }

    #[test]
    fn timeout_gives_bracket() {
        let limits = SearchLimits {
            budget: Duration::from_millis(0),
            max_omega: None,
        };
        match covering_number(10, 3, 3, limits, Exec::Sequential) {
            CoveringOutcome::Unknown { lower, upper, best } => {
                assert!(lower <= upper);
                assert!(is_multilevel_covering(&best, 3, 3));
            }
            CoveringOutcome::Exact { .. } => {}
        }
    }

    #[test]
    fn l2_closed_form_when_divisible() {
        for v in 1..=10usize {
            for k in 1..v {
                if v % (k + 1) == 0 {
                    let want = 2 * v / (k + 1);
                    assert_eq!(covering_number(v, k, 2, quick(), Exec::Parallel).exact(), Some(want));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn checker_matches_naive(v in 1usize..=8, k in 1usize..=4, m in 1usize..=4,
                                 raw in proptest::collection::vec(proptest::collection::vec(0usize..8, 1..5), 1..7)) {
            let blocks: Vec<Vec<usize>> = raw
                .into_iter()
                .map(|b| {
                    let mut b: Vec<usize> = b.into_iter().map(|j| j % v).collect();
                    b.sort_unstable();
                    b.dedup();
                    b
                })
                .collect();
            let d = CoveringDesign { v, blocks };
            prop_assert_eq!(is_multilevel_covering(&d, k, m), naive_covering(&d, k, m));
        }

        #[test]
        fn upper_design_is_valid(v in 1usize..=20, k in 1usize..=6, m in 1usize..=5) {
            let d = covering_upper_design(v, k, m);
            prop_assert!(is_multilevel_covering(&d, k, m));
            prop_assert!(d.blocks.len() >= covering_lower_bound(v, k, m));
        }
    }
}
