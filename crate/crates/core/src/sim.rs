//! End-to-end execution of a design on synthetic data.
//!
//! Subfunctions are black boxes: output `j` is a keyed pseudorandom function
//! of `(seed, j, W_j)`. Servers only see the outputs of their own datasets;
//! asking for any other output is a protocol violation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gf::FieldSpec;
use crate::matfq::MatrixFq;
use crate::model::{verify_solution, CodingSolution, DemandMatrix, ProblemInstance};
use crate::par::Exec;
use crate::scheme1::{rate_formula as s1_rate, scheme1};
use crate::scheme2::{build_scheme2, rate_formula as s2_rate};
use crate::tradeoff::{scheme_gamma, TradeoffPoint};

pub const DEFAULT_B: usize = 4;
pub const DEFAULT_TLEN: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Workload {
    pub field: FieldSpec,
    pub b: usize,
    pub tlen: usize,
    pub seed: u64,
    pub datasets: Vec<Vec<u32>>,
    pub outputs: Vec<Vec<u32>>,
}

fn prf(field: FieldSpec, seed: u64, j: usize, w: &[u32], tlen: usize) -> Vec<u32> {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((j as u64).to_le_bytes());
    for x in w {
        h.update(x.to_le_bytes());
    }
    let key: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(key);
    (0..tlen).map(|_| rng.gen_range(0..field.modulus())).collect()
}

impl Workload {
    /// Random datasets of length `b` and their `tlen`-symbol outputs.
    pub fn generate(field: FieldSpec, k: usize, b: usize, tlen: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let datasets: Vec<Vec<u32>> = (0..k)
            .map(|_| (0..b).map(|_| rng.gen_range(0..field.modulus())).collect())
            .collect();
        let outputs = datasets
            .iter()
            .enumerate()
            .map(|(j, w)| prf(field, seed, j, w, tlen))
            .collect();
        Workload {
            field,
            b,
            tlen,
            seed,
            datasets,
            outputs,
        }
    }

    /// Workload with given outputs and no datasets, for exhaustive checks.
    pub fn from_outputs(field: FieldSpec, outputs: Vec<Vec<u32>>) -> Self {
        let tlen = outputs.first().map_or(0, Vec::len);
        assert!(outputs.iter().all(|y| y.len() == tlen), "ragged outputs");
        Workload {
            field,
            b: 0,
            tlen,
            seed: 0,
            datasets: Vec::new(),
            outputs,
        }
    }

    pub fn k(&self) -> usize {
        self.outputs.len()
    }
}

/// What one server may read.
struct ServerView<'a> {
    server: usize,
    allowed: &'a [usize],
    outputs: &'a [Vec<u32>],
}

impl ServerView<'_> {
    fn output(&self, j: usize) -> Result<&[u32]> {
        if self.allowed.binary_search(&j).is_err() {
            return Err(Error::ProtocolViolation {
                server: self.server + 1,
                dataset: j + 1,
            });
        }
        Ok(&self.outputs[j])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    /// `(server, x_{n,r})` in row order of `A`.
    pub messages: Vec<(usize, Vec<u32>)>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimulationReport {
    pub exact: Vec<bool>,
    pub all_exact: bool,
    pub messages: usize,
    pub symbols: usize,
    #[serde(skip)]
    pub decoded: Vec<Vec<u32>>,
    #[serde(skip)]
    pub truth: Vec<Vec<u32>>,
}

fn combine(f: FieldSpec, coeffs: &[u32], vecs: &[&[u32]], len: usize) -> Vec<u32> {
    let mut out = vec![0u32; len];
    for (&c, v) in coeffs.iter().zip(vecs) {
        if c != 0 {
            for (o, &x) in out.iter_mut().zip(v.iter()) {
                *o = f.add(*o, f.mul(c, x));
            }
        }
    }
    out
}

/// Every server sends its rows of `A` applied to the outputs it computed.
pub fn transmit(sol: &CodingSolution, w: &Workload) -> Result<Transcript> {
    let f = w.field;
    let mut messages = Vec::with_capacity(sol.rate());
    for r in 0..sol.rate() {
        let server = sol.server_of_row[r];
        let view = ServerView {
            server,
            allowed: &sol.assignment.sets()[server],
            outputs: &w.outputs,
        };
        let mut x = vec![0u32; w.tlen];
        for j in sol.a.row_support(r) {
            let c = sol.a.get(r, j);
            for (o, &y) in x.iter_mut().zip(view.output(j)?) {
                *o = f.add(*o, f.mul(c, y));
            }
        }
        messages.push((server, x));
    }
    Ok(Transcript { messages })
}

/// Runs the protocol and compares the user's decode against `D·y`.
pub fn run(
    inst: &ProblemInstance,
    d: &MatrixFq,
    sol: &CodingSolution,
    w: &Workload,
) -> Result<SimulationReport> {
    if w.field != inst.field || w.k() != inst.k || d.rows() != inst.l || d.cols() != inst.k {
        return Err(Error::Dimension("workload does not match the instance".into()));
    }
    if sol.a.cols() != inst.k || sol.c.rows() != inst.l || sol.c.cols() != sol.rate() {
        return Err(Error::Dimension("solution does not match the instance".into()));
    }
    if sol.server_of_row.len() != sol.rate()
        || sol.server_of_row.iter().any(|&s| s >= sol.servers())
    {
        return Err(Error::Dimension("rows tagged with unknown servers".into()));
    }
    let f = inst.field;
    let t = transmit(sol, w)?;
    let xs: Vec<&[u32]> = t.messages.iter().map(|(_, x)| x.as_slice()).collect();
    let ys: Vec<&[u32]> = w.outputs.iter().map(Vec::as_slice).collect();
    let decoded: Vec<Vec<u32>> = (0..inst.l)
        .map(|l| combine(f, sol.c.row(l), &xs, w.tlen))
        .collect();
    let truth: Vec<Vec<u32>> = (0..inst.l)
        .map(|l| combine(f, d.row(l), &ys, w.tlen))
        .collect();
    let exact: Vec<bool> = decoded.iter().zip(&truth).map(|(a, b)| a == b).collect();
    Ok(SimulationReport {
        all_exact: exact.iter().all(|&e| e),
        exact,
        messages: t.len(),
        symbols: t.len() * w.tlen,
        decoded,
        truth,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GridPoint {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub q: u32,
}

/// Every `(K, L, M, q)` with `1 <= L <= K <= k_max`, `1 <= M <= K`.
pub fn full_grid(k_max: usize, qs: &[u32]) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for k in 1..=k_max {
        for l in 1..=k {
            for m in 1..=k {
                for &q in qs {
                    out.push(GridPoint { k, l, m, q });
                }
            }
        }
    }
    out
}

/// One trial of one scheme.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FuzzRecord {
    #[serde(flatten)]
    pub point: GridPoint,
    pub scheme: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<usize>,
    pub rate: usize,
    pub pass: bool,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A candidate produced by a builder: name, `γ`, expected rate, solution.
pub struct Candidate {
    pub scheme: &'static str,
    pub gamma: Option<usize>,
    pub expected_rate: Option<usize>,
    pub solution: Result<CodingSolution>,
}

/// Scheme 1, scheme 2 when `M >= K/2`, and every `γ` in `2..=L`.
pub fn default_candidates(d: &DemandMatrix, m: usize) -> Vec<Candidate> {
    let (k, l) = (d.k(), d.l());
    let mut out = vec![Candidate {
        scheme: "s1",
        gamma: None,
        expected_rate: Some(s1_rate(k, l, m)),
        solution: scheme1(d, m),
    }];
    if let Some(r) = s2_rate(k, l, m) {
        out.push(Candidate {
            scheme: "s2",
            gamma: None,
            expected_rate: Some(r),
            solution: build_scheme2(d.matrix(), m),
        });
    }
    for g in 2..=l {
        out.push(Candidate {
            scheme: "gamma",
            gamma: Some(g),
            expected_rate: Some(TradeoffPoint::new(k, l, m, g).rate),
            solution: scheme_gamma(d, m, g),
        });
    }
    out
}

/// Seed for trial `t` at grid index `i`, independent of scheduling.
pub fn trial_seed(seed: u64, i: usize, t: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((i as u64).to_le_bytes());
    h.update((t as u64).to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
}

fn run_trial<B>(p: GridPoint, s: u64, builder: &B) -> Vec<FuzzRecord>
where
    B: Fn(&DemandMatrix, usize) -> Vec<Candidate>,
{
    let field = FieldSpec::new(p.q as u64).expect("grid uses prime moduli");
    let inst = ProblemInstance::new(p.k, p.l, p.m, field).expect("grid point is valid");
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let d = DemandMatrix::random(&mut rng, field, p.l, p.k);
    let w = Workload::generate(field, p.k, DEFAULT_B, DEFAULT_TLEN, s);
    builder(&d, p.m)
        .into_iter()
        .map(|cand| {
            let (rate, pass, error) = match cand.solution {
                Err(e) => (0, false, Some(e.to_string())),
                Ok(sol) => {
                    let checked = verify_solution(&inst, d.matrix(), &sol)
                        .and_then(|rep| Ok((rep, run(&inst, d.matrix(), &sol, &w)?)));
                    match checked {
                        Err(e) => (sol.rate(), false, Some(e.to_string())),
                        Ok((rep, sim)) => {
                            let rate_ok = cand.expected_rate.is_none_or(|r| r == sol.rate());
                            let ok = rep.passed && sim.all_exact && rate_ok;
                            let why = (!ok).then(|| {
                                let mut v = rep.failures.clone();
                                if !sim.all_exact {
                                    v.push("decode mismatch".into());
                                }
                                if !rate_ok {
                                    v.push(format!("rate {} differs from formula", sol.rate()));
                                }
                                v.join("; ")
                            });
                            (sol.rate(), ok, why)
                        }
                    }
                }
            };
            FuzzRecord {
                point: p,
                scheme: cand.scheme.to_string(),
                gamma: cand.gamma,
                rate,
                pass,
                seed: s,
                error,
            }
        })
        .collect()
}

/// Runs `trials` random demands per grid point through `builder`.
///
/// Records come back sorted by grid index, then trial, then candidate.
pub fn fuzz_with<B>(
    grid: &[GridPoint],
    trials: usize,
    seed: u64,
    exec: Exec,
    builder: B,
) -> Vec<FuzzRecord>
where
    B: Fn(&DemandMatrix, usize) -> Vec<Candidate> + Sync + Send,
{
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|i| (0..trials).map(move |t| (i, t)))
        .collect();
    exec.map(jobs, |(i, t)| run_trial(grid[i], trial_seed(seed, i, t), &builder))
        .into_iter()
        .flatten()
        .collect()
}

pub fn fuzz(grid: &[GridPoint], trials: usize, seed: u64, exec: Exec) -> Vec<FuzzRecord> {
    fuzz_with(grid, trials, seed, exec, default_candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build, Plan};
    use crate::scheme1::{assign_case1, build_case1};

    fn f(q: u64) -> FieldSpec {
        FieldSpec::new(q).unwrap()
    }

    fn example1() -> (ProblemInstance, DemandMatrix, CodingSolution) {
        let field = f(101);
        let d = DemandMatrix::new(MatrixFq::from_rows(
            field,
            &[[1, 1, 1, 1], [1, 2, 3, 2], [1, 4, 1, 2]],
        ))
        .unwrap();
        let asg = assign_case1(&d, 2).unwrap();
        let sol = build_case1(d.matrix(), &asg).unwrap();
        (ProblemInstance::new(4, 3, 2, field).unwrap(), d, sol)
    }

    #[test]
    fn example1_decodes() {
        let (inst, d, sol) = example1();
        for seed in 0..20 {
            let w = Workload::generate(inst.field, 4, DEFAULT_B, DEFAULT_TLEN, seed);
            let rep = run(&inst, d.matrix(), &sol, &w).unwrap();
            assert!(rep.all_exact);
            assert_eq!(rep.messages, 3);
            assert_eq!(rep.symbols, 3 * DEFAULT_TLEN);
        }
    }

    #[test]
    fn zero_workload() {
        let (inst, d, sol) = example1();
        let w = Workload::from_outputs(inst.field, vec![vec![0; 3]; 4]);
        let t = transmit(&sol, &w).unwrap();
        assert!(t.messages.iter().all(|(_, x)| x.iter().all(|&v| v == 0)));
        let rep = run(&inst, d.matrix(), &sol, &w).unwrap();
        assert!(rep.all_exact);
        assert!(rep.decoded.iter().flatten().all(|&v| v == 0));
    }

    #[test]
    fn protocol_violation_is_detected() {
        let (inst, d, mut sol) = example1();
        // server 1 holds {1,4}; tag its row to server 2, which lacks dataset 1
        sol.server_of_row[0] = 1;
        let w = Workload::generate(inst.field, 4, 2, 2, 1);
        assert!(matches!(
            run(&inst, d.matrix(), &sol, &w),
            Err(Error::ProtocolViolation { server: 2, dataset: 1 })
        ));
    }

    #[test]
    fn outputs_are_deterministic() {
        let a = Workload::generate(f(11), 5, 3, 2, 99);
        let b = Workload::generate(f(11), 5, 3, 2, 99);
        assert_eq!(a, b);
        let c = Workload::generate(f(11), 5, 3, 2, 100);
        assert_ne!(a.outputs, c.outputs);
    }

    #[test]
    fn exhaustive_q2_small() {
        let field = f(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for k in 1..=4usize {
            for l in 1..=k {
                for m in 1..=k {
                    let d = DemandMatrix::random(&mut rng, field, l, k);
                    let inst = ProblemInstance::new(k, l, m, field).unwrap();
                    for plan in [Plan::S1, Plan::S2, Plan::Gamma(l)] {
                        let Ok(sol) = build(plan, d.matrix(), m) else { continue };
                        assert!(verify_solution(&inst, d.matrix(), &sol).unwrap().passed);
                        for y in 0u32..(1 << k) {
                            let outs = (0..k).map(|j| vec![y >> j & 1]).collect();
                            let w = Workload::from_outputs(field, outs);
                            assert!(run(&inst, d.matrix(), &sol, &w).unwrap().all_exact);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn fuzz_small_grid_passes() {
        let grid = full_grid(5, &[2, 3, 5, 101]);
        let recs = fuzz(&grid, 3, 7, Exec::Parallel);
        assert!(!recs.is_empty());
        let bad: Vec<_> = recs.iter().filter(|r| !r.pass).collect();
        assert!(bad.is_empty(), "{bad:?}");
    }

    #[test]
    fn fuzz_zero_trials_is_empty() {
        assert!(fuzz(&full_grid(4, &[5]), 0, 1, Exec::Sequential).is_empty());
    }

    #[test]
    fn fuzz_is_reproducible_across_exec_modes() {
        let grid = full_grid(4, &[3, 7]);
        assert_eq!(
            fuzz(&grid, 2, 11, Exec::Parallel),
            fuzz(&grid, 2, 11, Exec::Sequential)
        );
    }

    #[test]
    fn corrupted_solutions_are_reported() {
        let grid = [GridPoint { k: 4, l: 2, m: 2, q: 7 }];
        let recs = fuzz_with(&grid, 3, 5, Exec::Sequential, |d, m| {
            let mut sol = scheme1(d, m).unwrap();
            let v = sol.a.get(0, sol.a.row_support(0)[0]);
            let j = sol.a.row_support(0)[0];
            sol.a.set(0, j, (v + 1) % 7);
            vec![Candidate {
                scheme: "corrupt",
                gamma: None,
                expected_rate: None,
                solution: Ok(sol),
            }]
        });
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(|r| !r.pass && r.error.is_some()));
        let seeds: Vec<u64> = recs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, (0..3).map(|t| trial_seed(5, 0, t)).collect::<Vec<_>>());
    }

    #[test]
    fn records_serialize_with_expected_keys() {
        let grid = [GridPoint { k: 3, l: 2, m: 2, q: 5 }];
        let recs = fuzz(&grid, 1, 1, Exec::Sequential);
        let v: serde_json::Value = serde_json::to_value(recs.last().unwrap()).unwrap();
        for key in ["K", "L", "M", "q", "scheme", "gamma", "rate", "pass", "seed"] {
            assert!(v.get(key).is_some(), "missing {key} in {v}");
        }
    }
}
