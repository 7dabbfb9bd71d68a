//! Trading rate for fewer servers.
//!
//! Giving each server `γ` of the chosen independent columns instead of one
//! shrinks the usable block width to `L+M-γ` but cuts the servers per block
//! to `⌈L/γ⌉`. `γ = 1` is the plain nullspace scheme and `γ = L` is a
//! disjoint placement.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matfq::MatrixFq;
use crate::model::{CodingSolution, DemandMatrix, TaskAssignment};
use crate::scheme1::{chunked, gamma_rate, grouped_assignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TradeoffPoint {
    pub gamma: usize,
    pub rate: usize,
    pub servers: usize,
}

impl TradeoffPoint {
    /// Formula values `R^(γ)` and `N^(γ) = ⌈L/γ⌉⌈K/(L+M-γ)⌉`.
    pub fn new(k: usize, l: usize, m: usize, gamma: usize) -> Self {
        assert!(gamma >= 1 && gamma <= l, "need 1 <= gamma <= L");
        TradeoffPoint {
            gamma,
            rate: gamma_rate(k, l, m, gamma),
            servers: l.div_ceil(gamma) * k.div_ceil(l + m - gamma),
        }
    }
}

/// All points for `γ = 1..=L`.
pub fn tradeoff_curve(k: usize, l: usize, m: usize) -> Vec<TradeoffPoint> {
    (1..=l).map(|g| TradeoffPoint::new(k, l, m, g)).collect()
}

/// Single-block assignment: runs of `γ` chosen columns plus the rest.
pub fn assign_gamma(d: &DemandMatrix, m: usize, gamma: usize) -> Result<TaskAssignment> {
    let (l, k) = (d.l(), d.k());
    if gamma == 0 || gamma > l {
        return Err(Error::WrongRegime(format!("need 1 <= gamma <= L, got {gamma}")));
    }
    if k > l + m - gamma {
        return Err(Error::WrongRegime(format!(
            "single-block assignment needs K <= L+M-gamma, got K={k}, L={l}, M={m}, gamma={gamma}"
        )));
    }
    grouped_assignment(d.matrix(), gamma)
}

/// Rate `R^(γ)` on `N^(γ)` servers, or uncoded when that is cheaper.
pub fn scheme_gamma(d: &DemandMatrix, m: usize, gamma: usize) -> Result<CodingSolution> {
    chunked(d.matrix(), m, gamma)
}

/// `γ_1` on the first `left` columns and `γ_2` on the rest.
///
/// Each side's width must be a multiple of its block width `L+M-γ`.
pub fn scheme_mixed(
    d: &DemandMatrix,
    m: usize,
    gamma1: usize,
    gamma2: usize,
    left: usize,
) -> Result<CodingSolution> {
    let (l, k, f) = (d.l(), d.k(), d.field());
    let right = k
        .checked_sub(left)
        .ok_or_else(|| Error::Precondition(format!("split {left} exceeds K = {k}")))?;
    let mut failed = Vec::new();
    for (name, g, width) in [("gamma1", gamma1, left), ("gamma2", gamma2, right)] {
        if g == 0 || g > l || l % g != 0 {
            failed.push(format!("{name} = {g} does not divide L = {l}"));
        } else if width % (l + m - g) != 0 {
            failed.push(format!(
                "L+M-{name} = {} does not divide {width}",
                l + m - g
            ));
        }
    }
    if !failed.is_empty() {
        return Err(Error::Precondition(failed.join("; ")));
    }
    let mut blocks = Vec::new();
    for (cols, g) in [((0..left).collect::<Vec<_>>(), gamma1), ((left..k).collect(), gamma2)] {
        if cols.is_empty() {
            continue;
        }
        let sub: MatrixFq = d.matrix().select_columns(&cols)?;
        blocks.push((cols, chunked(&sub, m, g)?));
    }
    CodingSolution::compose_column_blocks(f, k, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldSpec;
    use crate::model::{verify_solution, ProblemInstance};
    use crate::scheme1::{assign_case1, feasible, scheme1};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f(q: u64) -> FieldSpec {
        FieldSpec::new(q).unwrap()
    }

    fn passes(d: &DemandMatrix, m: usize, sol: &CodingSolution) -> bool {
        let inst = ProblemInstance::new(d.k(), d.l(), m, d.field()).unwrap();
        verify_solution(&inst, d.matrix(), sol).unwrap().passed
    }

    #[test]
    fn k460_points() {
        let expect = [(1, 240, 240), (2, 126, 252), (3, 88, 264), (4, 69, 276), (6, 52, 312), (12, 39, 460)];
        for (g, n, r) in expect {
            // direct arithmetic: ceil(12/g) * ceil(460/(24-g)), min(460, 12*ceil(460/(24-g)))
            let c = (460 + (24 - g) - 1) / (24 - g);
            assert_eq!(((12 + g - 1) / g * c, (12 * c).min(460)), (n, r));
            let p = TradeoffPoint::new(460, 12, 12, g);
            assert_eq!((p.servers, p.rate), (n, r));
        }
    }

    #[test]
    fn gamma_one_matches_case1() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = DemandMatrix::random(&mut rng, f(11), 3, 5);
        assert_eq!(assign_gamma(&d, 3, 1).unwrap(), assign_case1(&d, 3).unwrap());
        let d = DemandMatrix::random(&mut rng, f(11), 3, 10);
        assert_eq!(scheme_gamma(&d, 3, 1).unwrap(), scheme1(&d, 3).unwrap());
    }

    #[test]
    fn gamma_two_assignment() {
        let d = DemandMatrix::new(MatrixFq::from_rows(
            f(11),
            &[[1, 0, 0, 0, 1, 2], [0, 1, 0, 0, 3, 1], [0, 0, 1, 0, 4, 4], [0, 0, 0, 1, 5, 9]],
        ))
        .unwrap();
        let asg = assign_gamma(&d, 4, 2).unwrap();
        assert_eq!(asg.sets(), &[vec![0, 1, 4, 5], vec![2, 3, 4, 5]]);
        assert!(feasible(d.matrix(), &asg));
    }

    #[test]
    fn gamma_l_is_centralized_when_k_equals_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = DemandMatrix::random(&mut rng, f(7), 3, 5);
        let asg = assign_gamma(&d, 5, 3).unwrap();
        assert_eq!(asg.sets(), &[vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn fallback_k8_l4_m4_gamma2() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = DemandMatrix::random(&mut rng, f(11), 4, 8);
        assert_eq!(gamma_rate(8, 4, 4, 2), 8);
        let sol = scheme_gamma(&d, 4, 2).unwrap();
        assert_eq!(sol.rate(), 8);
        assert!(passes(&d, 4, &sol));
    }

    #[test]
    fn example3_disjoint_vs_nullspace() {
        let d = DemandMatrix::new(MatrixFq::from_rows(
            f(7),
            &[[1, 1, 1, 1, 1, 1], [0, 1, 2, 3, 4, 5]],
        ))
        .unwrap();
        let disjoint = scheme_gamma(&d, 2, 2).unwrap();
        assert_eq!((disjoint.rate(), disjoint.servers()), (6, 3));
        assert_eq!(scheme1(&d, 2).unwrap().rate(), 4);
    }

    #[test]
    fn mixed_k90() {
        // 23*2 + 22*2 = 90
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = DemandMatrix::random(&mut rng, f(97), 12, 90);
        let sol = scheme_mixed(&d, 12, 1, 2, 46).unwrap();
        let expect_rate = 12 * (46 / 23) + 12 * (44 / 22);
        let expect_servers = 12 * (46 / 23) + 6 * (44 / 22);
        assert_eq!((sol.rate(), sol.servers()), (expect_rate, expect_servers));
        assert_eq!((expect_rate, expect_servers), (48, 36));
        assert!(passes(&d, 12, &sol));
    }

    #[test]
    fn mixed_k460_has_only_trivial_splits() {
        let splits: Vec<(usize, usize)> = (0..=20)
            .filter_map(|a| {
                let rest = 460 - 23 * a;
                (rest % 22 == 0).then_some((a, rest / 22))
            })
            .collect();
        assert_eq!(splits, vec![(20, 0)]);
    }

    #[test]
    fn mixed_degenerate_splits_match_single_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = DemandMatrix::random(&mut rng, f(31), 2, 12);
        // L+M-1 = 4 and L+M-2 = 3 both divide 12
        assert_eq!(scheme_mixed(&d, 3, 1, 2, 12).unwrap(), scheme_gamma(&d, 3, 1).unwrap());
        assert_eq!(scheme_mixed(&d, 3, 1, 2, 0).unwrap(), scheme_gamma(&d, 3, 2).unwrap());
    }

    #[test]
    fn mixed_reports_failed_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = DemandMatrix::random(&mut rng, f(31), 4, 20);
        let err = scheme_mixed(&d, 4, 3, 2, 7).unwrap_err().to_string();
        assert!(err.contains("gamma1 = 3 does not divide L"), "{err}");
        assert!(err.contains("does not divide 13"), "{err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(150))]

        #[test]
        fn scheme_gamma_meets_formula(
            seed: u64, k in 1usize..=14, l in 1usize..=8, m in 1usize..=14, g in 1usize..=8,
        ) {
            prop_assume!(l <= k && m <= k && g <= l);
            let field = f(13);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = DemandMatrix::random(&mut rng, field, l, k);
            let sol = scheme_gamma(&d, m, g).unwrap();
            let p = TradeoffPoint::new(k, l, m, g);
            prop_assert_eq!(sol.rate(), p.rate);
            if p.rate < k {
                // narrow chunks fall back to uncoded and may use fewer servers
                prop_assert!(sol.servers() <= p.servers);
            }
            prop_assert!(passes(&d, m, &sol));
        }

        #[test]
        fn monotone_in_gamma(k in 1usize..=100, l in 1usize..=12, m in 1usize..=100) {
            prop_assume!(l <= k && m <= k);
            let (first, last) = (TradeoffPoint::new(k, l, m, 1), TradeoffPoint::new(k, l, m, l));
            prop_assert!(last.servers <= first.servers);
            for g1 in 1..=l {
                for g2 in g1 + 1..=l {
                    let (a, b) = (TradeoffPoint::new(k, l, m, g1), TradeoffPoint::new(k, l, m, g2));
                    prop_assert!(a.rate <= b.rate);
                }
            }
        }
    }

    #[test]
    fn disjoint_gap_at_most_three() {
        for k in 1..=100usize {
            for l in 1..=k {
                for m in 1..=k {
                    let r1 = gamma_rate(k, l, m, 1);
                    let rl = gamma_rate(k, l, m, l);
                    assert!(rl <= 3 * r1, "K={k} L={l} M={m}: {rl} vs {r1}");
                }
            }
        }
    }
}
