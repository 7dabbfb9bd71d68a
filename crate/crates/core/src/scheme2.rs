//! Demand-independent assignments for `M >= K/2`.
//!
//! `[K]` is cut into parts of size `K-M` and server `n` computes everything
//! outside part `n`. One extra row `d̃` is appended to the demand so that a
//! fixed target matrix `T` has row `n` in the left nullspace of the
//! augmented demand restricted to part `n`. Then `A = T·D̃` is a valid
//! transmission matrix and the first `L` rows of `T^{-1}` decode `D`.

use crate::error::{Error, Result};
use crate::gf::FieldSpec;
use crate::matfq::MatrixFq;
use crate::model::{CodingSolution, TaskAssignment};

/// Disjoint parts covering `[K]`, each of size at least `K-M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionP {
    parts: Vec<Vec<usize>>,
    k: usize,
    m: usize,
}

fn check_regime(k: usize, m: usize) -> Result<()> {
    if m == 0 || m > k || 2 * m < k {
        return Err(Error::WrongRegime(format!("need K/2 <= M <= K, got K={k}, M={m}")));
    }
    if m == k {
        return Err(Error::WrongRegime("M = K has no parts (centralized case)".into()));
    }
    Ok(())
}

impl PartitionP {
    /// Consecutive runs of `K-M` indices; the last part absorbs the remainder.
    pub fn canonical(k: usize, m: usize) -> Result<Self> {
        check_regime(k, m)?;
        let s = k - m;
        let tau = k / s;
        let parts = (0..tau)
            .map(|t| {
                let end = if t + 1 == tau { k } else { (t + 1) * s };
                (t * s..end).collect()
            })
            .collect();
        Ok(PartitionP { parts, k, m })
    }

    /// Any ordered partition with parts of size at least `K-M`.
    pub fn custom(k: usize, m: usize, parts: Vec<Vec<usize>>) -> Result<Self> {
        check_regime(k, m)?;
        let mut seen = vec![false; k];
        for p in &parts {
            if p.len() < k - m {
                return Err(Error::Precondition(format!(
                    "part of size {} is smaller than K-M = {}",
                    p.len(),
                    k - m
                )));
            }
            for &j in p {
                if j >= k || std::mem::replace(&mut seen[j], true) {
                    return Err(Error::Precondition(format!(
                        "index {} repeated or out of range",
                        j + 1
                    )));
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Precondition("parts do not cover [K]".into()));
        }
        let parts = parts
            .into_iter()
            .map(|mut p| {
                p.sort_unstable();
                p
            })
            .collect();
        Ok(PartitionP { parts, k, m })
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    pub fn tau(&self) -> usize {
        self.parts.len()
    }

    /// Complements of all parts, in part order.
    pub fn assignment(&self) -> TaskAssignment {
        let sets = self
            .parts
            .iter()
            .map(|p| (0..self.k).filter(|j| !p.contains(j)).collect())
            .collect();
        TaskAssignment::new(sets).expect("complements are nonempty when M >= 1")
    }
}

/// `{P_1^c, …, P_τ^c}` for the canonical partition.
pub fn assign_scheme2(k: usize, m: usize) -> Result<TaskAssignment> {
    Ok(PartitionP::canonical(k, m)?.assignment())
}

/// Square, full rank, with an all-nonzero last column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetMatrix(MatrixFq);

impl TargetMatrix {
    pub fn new(t: MatrixFq) -> Result<Self> {
        let n = t.rows();
        if n == 0 || t.cols() != n {
            return Err(Error::Dimension("target matrix must be square and nonempty".into()));
        }
        if (0..n).any(|r| t.get(r, n - 1) == 0) {
            return Err(Error::Precondition("target matrix has a zero in its last column".into()));
        }
        if t.rank() != n {
            return Err(Error::Singular);
        }
        Ok(TargetMatrix(t))
    }

    /// `[[I, -1], [0, 1]]`; its inverse is `[[I, 1], [0, 1]]`, so each
    /// function is one transmission plus the last.
    pub fn standard(field: FieldSpec, n: usize) -> Self {
        Self::with_last_column(field, n, -1)
    }

    /// `[[I, 1], [0, 1]]`.
    pub fn plus_ones(field: FieldSpec, n: usize) -> Self {
        Self::with_last_column(field, n, 1)
    }

    fn with_last_column(field: FieldSpec, n: usize, v: i64) -> Self {
        let mut t = MatrixFq::identity(field, n);
        for r in 0..n - 1 {
            t.set(r, n - 1, field.reduce(v));
        }
        TargetMatrix(t)
    }

    pub fn matrix(&self) -> &MatrixFq {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.rows()
    }
}

/// Appends `d̃` so that row `n` of `T` annihilates `D̃` on part `n`.
///
/// Uses the first `N = T.size()` parts; columns outside them get zeros.
pub fn augment_demand(d: &MatrixFq, parts: &PartitionP, t: &TargetMatrix) -> Result<MatrixFq> {
    let (l, n) = (d.rows(), t.size());
    if n != l + 1 {
        return Err(Error::Dimension(format!("target has size {n}, need L+1 = {}", l + 1)));
    }
    if n > parts.tau() {
        return Err(Error::WrongRegime(format!(
            "L = {l} needs L < tau = {}",
            parts.tau()
        )));
    }
    let f = d.field();
    let tm = t.matrix();
    let mut dt = MatrixFq::zeros(f, 1, d.cols());
    for (p, part) in parts.parts().iter().take(n).enumerate() {
        let scale = f.neg(f.inv(tm.get(p, n - 1))?);
        for &j in part {
            let mut acc = 0;
            for i in 0..l {
                acc = f.add(acc, f.mul(tm.get(p, i), d.get(i, j)));
            }
            dt.set(0, j, f.mul(scale, acc));
        }
    }
    MatrixFq::stack_rows(d, &dt)
}

/// Rate `L+1` on `L+1` servers; needs `L < ⌊K/(K-M)⌋`.
pub fn build_scheme2_small(d: &MatrixFq, m: usize) -> Result<CodingSolution> {
    let parts = PartitionP::canonical(d.cols(), m)?;
    let t = TargetMatrix::standard(d.field(), d.rows() + 1);
    build_scheme2_small_with(d, &parts, &t)
}

/// Small-regime construction for a given partition and target.
pub fn build_scheme2_small_with(
    d: &MatrixFq,
    parts: &PartitionP,
    t: &TargetMatrix,
) -> Result<CodingSolution> {
    let l = d.rows();
    let dt = augment_demand(d, parts, t)?;
    let tinv = t.matrix().invert()?;
    let sets = parts.assignment().sets()[..l + 1].to_vec();
    Ok(CodingSolution {
        assignment: TaskAssignment::new(sets)?,
        a: t.matrix().mul(&dt)?,
        server_of_row: (0..=l).collect(),
        c: tinv.select_rows(&(0..l).collect::<Vec<_>>())?,
    })
}

/// `⌊M/(K-M)⌋`, the number of functions one row block can carry.
pub fn block_rows(k: usize, m: usize) -> usize {
    m / (k - m)
}

/// `L + ⌈L/⌊M/(K-M)⌋⌉`, or `L` when `M = K`; `None` below `M = K/2`.
pub fn rate_formula(k: usize, l: usize, m: usize) -> Option<usize> {
    if m > k || 2 * m < k {
        return None;
    }
    if m == k {
        return Some(l);
    }
    Some(l + l.div_ceil(block_rows(k, m)))
}

/// Row-partitioned construction for any `L`, on `⌊K/(K-M)⌋` servers.
///
/// `M = K` is the centralized case: one server sends `D` itself.
pub fn build_scheme2(d: &MatrixFq, m: usize) -> Result<CodingSolution> {
    let (l, k, f) = (d.rows(), d.cols(), d.field());
    if m == k {
        return Ok(CodingSolution {
            assignment: TaskAssignment::new(vec![(0..k).collect()])?,
            a: d.clone(),
            server_of_row: vec![0; l],
            c: MatrixFq::identity(f, l),
        });
    }
    let parts = PartitionP::canonical(k, m)?;
    let tau = parts.tau();
    if l < tau {
        return build_scheme2_small_with(d, &parts, &TargetMatrix::standard(f, l + 1));
    }
    let lp = block_rows(k, m);
    let row_blocks: Vec<Vec<usize>> = (0..l)
        .collect::<Vec<_>>()
        .chunks(lp)
        .map(<[usize]>::to_vec)
        .collect();
    let rate = l + row_blocks.len();
    let mut a = MatrixFq::zeros(f, rate, k);
    let mut c = MatrixFq::zeros(f, l, rate);
    let mut server_of_row = Vec::with_capacity(rate);
    let mut off = 0;
    for rows in &row_blocks {
        let sub = d.select_rows(rows)?;
        let t = TargetMatrix::standard(f, rows.len() + 1);
        let blk = build_scheme2_small_with(&sub, &parts, &t)?;
        for r in 0..blk.rate() {
            for j in 0..k {
                a.set(off + r, j, blk.a.get(r, j));
            }
            for (i, &gi) in rows.iter().enumerate() {
                c.set(gi, off + r, blk.c.get(i, r));
            }
        }
        server_of_row.extend_from_slice(&blk.server_of_row);
        off += blk.rate();
    }
    Ok(CodingSolution {
        assignment: parts.assignment(),
        a,
        server_of_row,
        c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{verify_solution, DemandMatrix, ProblemInstance};
    use crate::scheme1::nullspace_matrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f(q: u64) -> FieldSpec {
        FieldSpec::new(q).unwrap()
    }

    fn example4() -> MatrixFq {
        MatrixFq::from_rows(f(101), &[[1, 1, 1, 1, 1, 1], [0, 1, 2, 3, 4, 5]])
    }

    fn one_based(v: &[&[usize]]) -> Vec<Vec<usize>> {
        v.iter().map(|s| s.iter().map(|j| j - 1).collect()).collect()
    }

    fn check(d: &MatrixFq, m: usize, sol: &CodingSolution) {
        let inst = ProblemInstance::new(d.cols(), d.rows(), m, d.field()).unwrap();
        let rep = verify_solution(&inst, d, sol).unwrap();
        assert!(rep.passed, "{:?}", rep.failures);
    }

    #[test]
    fn assignment_examples() {
        let a = assign_scheme2(6, 4).unwrap();
        assert_eq!(a.sets(), one_based(&[&[3, 4, 5, 6], &[1, 2, 5, 6], &[1, 2, 3, 4]]));
        let a = assign_scheme2(4, 2).unwrap();
        assert_eq!(a.sets(), one_based(&[&[3, 4], &[1, 2]]));
        let a = assign_scheme2(9, 6).unwrap();
        assert_eq!(a.servers(), 3);
        assert!(a.sets().iter().all(|s| s.len() == 6));
        let mut hits = [0; 9];
        for s in a.sets() {
            for &j in s {
                hits[j] += 1;
            }
        }
        assert!(hits.iter().all(|&h| h == 2));
    }

    #[test]
    fn regime_is_enforced() {
        assert!(matches!(assign_scheme2(7, 3), Err(Error::WrongRegime(_))));
        assert!(matches!(assign_scheme2(5, 5), Err(Error::WrongRegime(_))));
    }

    #[test]
    fn example4_augmented_row_with_reversed_parts() {
        let parts = PartitionP::custom(6, 4, one_based(&[&[5, 6], &[3, 4], &[1, 2]])).unwrap();
        let t = TargetMatrix::standard(f(101), 3);
        assert_eq!(
            t.matrix(),
            &MatrixFq::from_rows(f(101), &[[1, 0, -1], [0, 1, -1], [0, 0, 1]])
        );
        let dt = augment_demand(&example4(), &parts, &t).unwrap();
        assert_eq!(
            dt,
            MatrixFq::from_rows(
                f(101),
                &[[1, 1, 1, 1, 1, 1], [0, 1, 2, 3, 4, 5], [0, 0, 2, 3, 1, 1]]
            )
        );
        let sol = build_scheme2_small_with(&example4(), &parts, &t).unwrap();
        // transmissions listed in the worked example
        assert_eq!(
            sol.a,
            MatrixFq::from_rows(
                f(101),
                &[[1, 1, -1, -2, 0, 0], [0, 1, 0, 0, 3, 4], [0, 0, 2, 3, 1, 1]]
            )
        );
        check(&example4(), 4, &sol);
    }

    #[test]
    fn example4_decodes_as_sums() {
        let sol = build_scheme2_small(&example4(), 4).unwrap();
        assert_eq!(sol.rate(), 3);
        assert_eq!(
            sol.c,
            MatrixFq::from_rows(f(101), &[[1, 0, 1], [0, 1, 1]])
        );
        check(&example4(), 4, &sol);
    }

    #[test]
    fn plus_one_target_also_works() {
        let parts = PartitionP::canonical(6, 4).unwrap();
        let t = TargetMatrix::plus_ones(f(101), 3);
        let dt = augment_demand(&example4(), &parts, &t).unwrap();
        // row n of T plus the last row vanish on part n
        for (n, p) in parts.parts().iter().enumerate().take(2) {
            let sub = dt.select_columns(p).unwrap();
            for j in 0..p.len() {
                assert_eq!(f(101).add(sub.get(n, j), sub.get(2, j)), 0);
            }
        }
        let sol = build_scheme2_small_with(&example4(), &parts, &t).unwrap();
        check(&example4(), 4, &sol);
    }

    #[test]
    fn zero_row_on_its_part_gives_zero_extension() {
        let d = MatrixFq::from_rows(f(7), &[[0, 0, 1, 1, 1, 1], [1, 2, 3, 4, 5, 6]]);
        let parts = PartitionP::canonical(6, 4).unwrap();
        let dt = augment_demand(&d, &parts, &TargetMatrix::standard(f(7), 3)).unwrap();
        assert_eq!(&dt.row(2)[..2], &[0, 0]);
    }

    #[test]
    fn target_validation() {
        let bad = MatrixFq::from_rows(f(7), &[[1, 0], [0, 1]]);
        assert!(TargetMatrix::new(bad).is_err());
        let sing = MatrixFq::from_rows(f(7), &[[1, 1], [1, 1]]);
        assert!(matches!(TargetMatrix::new(sing), Err(Error::Singular)));
        let ok = MatrixFq::from_rows(f(7), &[[2, 3], [1, 1]]);
        assert!(TargetMatrix::new(ok).is_ok());
    }

    #[test]
    fn single_function_rate_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (k, m) in [(4, 2), (6, 3), (7, 5)] {
            let d = DemandMatrix::random(&mut rng, f(11), 1, k);
            let sol = build_scheme2(d.matrix(), m).unwrap();
            assert_eq!(sol.rate(), 2);
            check(d.matrix(), m, &sol);
        }
    }

    #[test]
    fn k9_m6_l2_rate_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = DemandMatrix::random(&mut rng, f(101), 2, 9);
        let sol = build_scheme2(d.matrix(), 6).unwrap();
        assert_eq!(sol.rate(), 3);
        check(d.matrix(), 6, &sol);
    }

    #[test]
    fn row_blocks_k6_m4_l3() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = DemandMatrix::random(&mut rng, f(101), 3, 6);
        let sol = build_scheme2(d.matrix(), 4).unwrap();
        assert_eq!(block_rows(6, 4), 2);
        assert_eq!(sol.rate(), 5);
        assert_eq!(sol.servers(), 3);
        check(d.matrix(), 4, &sol);
    }

    #[test]
    fn centralized_when_m_equals_k() {
        let d = example4();
        let sol = build_scheme2(&d, 6).unwrap();
        assert_eq!((sol.rate(), sol.servers()), (2, 1));
        check(&d, 6, &sol);
    }

    #[test]
    fn single_row_block_rate() {
        // L = L' gives exactly one block
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = DemandMatrix::random(&mut rng, f(5), 2, 6);
        assert_eq!(block_rows(6, 4), 2);
        let sol = build_scheme2(d.matrix(), 4).unwrap();
        assert_eq!(sol.rate(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn augmented_nullspace_has_full_rank(
            seed: u64, qi in 0usize..2, k in 2usize..=12, mi: usize, li: usize,
        ) {
            let m = k.div_ceil(2) + mi % (k - k.div_ceil(2));
            let tau = k / (k - m);
            prop_assume!(tau >= 2);
            let l = 1 + li % (tau - 1);
            let field = f([5u64, 101][qi]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = DemandMatrix::random(&mut rng, field, l, k);
            let parts = PartitionP::canonical(k, m).unwrap();
            let t = TargetMatrix::standard(field, l + 1);
            let dt = augment_demand(d.matrix(), &parts, &t).unwrap();
            let asg = TaskAssignment::new(parts.assignment().sets()[..=l].to_vec()).unwrap();
            prop_assert_eq!(nullspace_matrix(&dt, &asg).n.rank(), l + 1);
        }

        #[test]
        fn scheme2_meets_formula(
            seed: u64, qi in 0usize..2, k in 2usize..=12, mi: usize, li: usize,
        ) {
            let m = k.div_ceil(2) + mi % (k - k.div_ceil(2));
            let l = 1 + li % (k - m);
            let field = f([5u64, 101][qi]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = DemandMatrix::random(&mut rng, field, l, k);
            let sol = build_scheme2(d.matrix(), m).unwrap();
            prop_assert_eq!(Some(sol.rate()), rate_formula(k, l, m));
            let full = assign_scheme2(k, m).unwrap();
            prop_assert_eq!(sol.assignment.sets(), &full.sets()[..sol.servers()]);
            let inst = ProblemInstance::new(k, l, m, field).unwrap();
            prop_assert!(verify_solution(&inst, d.matrix(), &sol).unwrap().passed);
        }
    }
}
