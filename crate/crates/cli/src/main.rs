use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lsfc_core::bounds::{bound_report, covering_number, CoveringOutcome, SearchLimits};
use lsfc_core::curves::{r_vs_l, r_vs_m, r_vs_n, tradeoff_csv};
use lsfc_core::design::{build, plan_rate, resolve, SchemeChoice};
use lsfc_core::gf::next_prime_above;
use lsfc_core::io::{format_demand, parse_demand, CoveringCertificate, SolutionFile};
use lsfc_core::sim::{full_grid, fuzz, run, Workload, DEFAULT_B, DEFAULT_TLEN};
use lsfc_core::model::verify_solution;
use lsfc_core::{DemandMatrix, Exec, FieldSpec, MatrixFq, ProblemInstance};

/// Coded task assignment for distributed linearly separable computation.
#[derive(Parser, Debug)]
#[command(name = "lsfc", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a scheme and write its solution JSON.
    Design(DesignArgs),
    /// Emit a rate sweep as CSV.
    Curve(CurveArgs),
    /// Lower bounds and gap certificate for one instance (JSON).
    Bound(BoundArgs),
    /// Compute a multi-level covering number with a certificate.
    Cover(CoverArgs),
    /// Check a solution file against a demand file.
    Verify(VerifyArgs),
    /// Randomized conformance run over a parameter grid (JSON lines).
    Fuzz(FuzzArgs),
}

#[derive(Args, Debug)]
struct DesignArgs {
    #[arg(short = 'K')]
    k: Option<usize>,
    #[arg(short = 'L')]
    l: Option<usize>,
    #[arg(short = 'M')]
    m: usize,
    /// Prime modulus; defaults to the smallest prime above K.
    #[arg(short = 'q')]
    q: Option<u64>,
    /// auto, s1, s2, hybrid, gamma:<g>, or gamma together with --gamma.
    #[arg(long, default_value = "auto")]
    scheme: String,
    #[arg(long)]
    gamma: Option<usize>,
    /// Demand file (`q K L` header, then L rows). Random when absent.
    #[arg(long)]
    demand: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the demand used, for later `verify`.
    #[arg(long)]
    demand_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CurveMode {
    #[value(name = "R-vs-M")]
    RvsM,
    #[value(name = "R-vs-L")]
    RvsL,
    #[value(name = "R-vs-N")]
    RvsN,
}

#[derive(Args, Debug)]
struct CurveArgs {
    mode: CurveMode,
    #[arg(short = 'K')]
    k: usize,
    #[arg(short = 'L')]
    l: Option<usize>,
    #[arg(short = 'M')]
    m: Option<usize>,
    /// Field sizes for the lower-bound columns.
    #[arg(short = 'q', value_delimiter = ',', default_value = "211,2003,1000003")]
    q: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(short = 'K')]
    k: usize,
    #[arg(short = 'L')]
    l: usize,
    #[arg(short = 'M')]
    m: usize,
    #[arg(short = 'q')]
    q: Option<u64>,
    /// Time budget for the covering search.
    #[arg(long, default_value_t = 5000)]
    budget_ms: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CoverArgs {
    #[arg(short = 'v', required_unless_present = "check")]
    v: Option<usize>,
    #[arg(short = 'k', required_unless_present = "check")]
    k: Option<usize>,
    #[arg(short = 'm', required_unless_present = "check")]
    m: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    budget_ms: u64,
    /// Verify an existing certificate instead of searching.
    #[arg(long)]
    check: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    solution: PathBuf,
    demand: PathBuf,
    /// Seed for the simulated decode.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct FuzzArgs {
    /// Largest K in the grid.
    #[arg(short = 'K', default_value_t = 12)]
    k: usize,
    #[arg(short = 'q', value_delimiter = ',', default_value = "2,3,5,101")]
    q: Vec<u32>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Design(a) => cmd_design(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Cover(a) => cmd_cover(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Fuzz(a) => cmd_fuzz(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn field_or_default(q: Option<u64>, k: usize) -> Result<FieldSpec> {
    let q = q.unwrap_or_else(|| next_prime_above(k as u64));
    Ok(FieldSpec::new(q)?)
}

fn read_demand(path: &Path) -> Result<MatrixFq> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_demand(&text)?)
}

fn scheme_choice(scheme: &str, gamma: Option<usize>) -> Result<SchemeChoice> {
    match (scheme, gamma) {
        ("gamma", Some(g)) => Ok(SchemeChoice::Gamma(g)),
        ("gamma", None) => bail!("--scheme gamma needs --gamma <g>"),
        ("auto", Some(g)) => Ok(SchemeChoice::Gamma(g)),
        (s, None) => Ok(s.parse()?),
        (s, Some(_)) => bail!("--gamma cannot be combined with --scheme {s}"),
    }
}

fn cmd_design(a: DesignArgs) -> Result<ExitCode> {
    let choice = scheme_choice(&a.scheme, a.gamma)?;
    let d = match &a.demand {
        Some(p) => {
            let d = read_demand(p)?;
            let checks = [("K", a.k, d.cols()), ("L", a.l, d.rows())];
            for (name, flag, actual) in checks {
                if flag.is_some_and(|v| v != actual) {
                    bail!("-{name} {} disagrees with the demand file ({actual})", flag.unwrap());
                }
            }
            if a.q.is_some_and(|q| q != d.field().modulus() as u64) {
                bail!("-q disagrees with the demand file ({})", d.field().modulus());
            }
            d
        }
        None => {
            let (Some(k), Some(l)) = (a.k, a.l) else {
                bail!("-K and -L are required without --demand");
            };
            if l == 0 || l > k {
                bail!("need 1 <= L <= K, got K={k}, L={l}");
            }
            let field = field_or_default(a.q, k)?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            DemandMatrix::random(&mut rng, field, l, k).into_matrix()
        }
    };
    let (k, l) = (d.cols(), d.rows());
    let inst = ProblemInstance::new(k, l, a.m, d.field())?;
    let plan = resolve(choice, k, l, a.m)?;
    let sol = build(plan, &d, a.m)?;
    let report = verify_solution(&inst, &d, &sol)?;
    let passed = report.passed;
    if let Some(p) = &a.demand_out {
        fs::write(p, format_demand(&d)).with_context(|| format!("writing {}", p.display()))?;
    }
    let file = SolutionFile::new(&inst, &sol, Some(plan.to_string()), Some(report));
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&file)? + "\n"))?;
    eprintln!(
        "scheme {plan}: rate {} (formula {}), {} servers, {}",
        sol.rate(),
        plan_rate(plan, k, l, a.m).map_or("n/a".into(), |r| r.to_string()),
        sol.servers(),
        if passed { "verified" } else { "VERIFICATION FAILED" }
    );
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_curve(a: CurveArgs) -> Result<ExitCode> {
    for &q in &a.q {
        FieldSpec::new(q)?;
    }
    let need = |name: &str, v: Option<usize>| v.with_context(|| format!("this mode needs -{name}"));
    let csv = match a.mode {
        CurveMode::RvsM => {
            let l = need("L", a.l)?;
            check_range("L", l, a.k)?;
            r_vs_m(a.k, l, &a.q, Exec::Parallel).to_csv()
        }
        CurveMode::RvsL => {
            let m = need("M", a.m)?;
            check_range("M", m, a.k)?;
            r_vs_l(a.k, m, &a.q, Exec::Parallel).to_csv()
        }
        CurveMode::RvsN => {
            let (l, m) = (need("L", a.l)?, need("M", a.m)?);
            check_range("L", l, a.k)?;
            check_range("M", m, a.k)?;
            tradeoff_csv(&r_vs_n(a.k, l, m))
        }
    };
    emit(a.out.as_deref(), &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn check_range(name: &str, v: usize, k: usize) -> Result<()> {
    if v == 0 || v > k {
        bail!("need 1 <= {name} <= K, got {name}={v}, K={k}");
    }
    Ok(())
}

fn cmd_bound(a: BoundArgs) -> Result<ExitCode> {
    let field = field_or_default(a.q, a.k)?;
    ProblemInstance::new(a.k, a.l, a.m, field)?;
    let limits = SearchLimits {
        budget: Duration::from_millis(a.budget_ms),
        max_omega: None,
    };
    let rep = bound_report(a.k, a.l, a.m, field.modulus() as u64, limits, Exec::Parallel);
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&rep)? + "\n"))?;
    match rep.gap.claimed {
        Some(c) => eprintln!(
            "gap {:.4} (limit {c}, {})",
            rep.gap.ratio,
            if rep.gap.holds { "holds" } else { "violated" }
        ),
        None => eprintln!("gap {:.4} (no limit claimed: q < eK/M)", rep.gap.ratio),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_cover(a: CoverArgs) -> Result<ExitCode> {
    if let Some(p) = &a.check {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let cert: CoveringCertificate = serde_json::from_str(&text)?;
        let ok = cert.verify();
        println!("{}", if ok { "valid" } else { "invalid" });
        return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    let (v, k, m) = (a.v.unwrap(), a.k.unwrap(), a.m.unwrap());
    if v == 0 || v > 63 || k == 0 || m == 0 {
        bail!("need 1 <= v <= 63 and k, m >= 1");
    }
    let limits = SearchLimits {
        budget: Duration::from_millis(a.budget_ms),
        max_omega: None,
    };
    let exec = if a.sequential { Exec::Sequential } else { Exec::Parallel };
    let outcome = covering_number(v, k, m, limits, exec);
    let (design, status) = match &outcome {
        CoveringOutcome::Exact { omega, design } => (design, format!("omega = {omega}")),
        CoveringOutcome::Unknown { lower, upper, best } => {
            (best, format!("unknown: {lower} <= omega <= {upper}"))
        }
    };
    let cert = CoveringCertificate::new(design, k, m);
    let verified = cert.verify();
    let json = serde_json::json!({
        "status": if outcome.exact().is_some() { "exact" } else { "unknown" },
        "lower": outcome.lower(),
        "upper": design.blocks.len(),
        "certificate": cert,
        "verified": verified,
    });
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&json)? + "\n"))?;
    eprintln!("{status}; certificate {}", if verified { "re-verified" } else { "INVALID" });
    Ok(if verified { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode> {
    let d = read_demand(&a.demand)?;
    let text = fs::read_to_string(&a.solution)
        .with_context(|| format!("reading {}", a.solution.display()))?;
    let file: SolutionFile = serde_json::from_str(&text).context("parsing solution JSON")?;
    let (inst, sol) = match file.to_solution() {
        Ok(x) => x,
        Err(e) => {
            println!("FAIL: malformed solution: {e}");
            return Ok(ExitCode::from(1));
        }
    };
    if d.field() != inst.field || d.cols() != inst.k || d.rows() != inst.l {
        println!("FAIL: solution was built for a different instance");
        return Ok(ExitCode::from(1));
    }
    let report = verify_solution(&inst, &d, &sol)?;
    let w = Workload::generate(inst.field, inst.k, DEFAULT_B, DEFAULT_TLEN, a.seed);
    let decoded = run(&inst, &d, &sol, &w).map(|r| r.all_exact).unwrap_or(false);
    println!("{}", serde_json::to_string_pretty(&report)?);
    let ok = report.passed && decoded;
    println!(
        "{}: rate {}, {} servers, decode {}",
        if ok { "PASS" } else { "FAIL" },
        sol.rate(),
        sol.servers(),
        if decoded { "exact" } else { "wrong" }
    );
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_fuzz(a: FuzzArgs) -> Result<ExitCode> {
    for &q in &a.q {
        FieldSpec::new(q as u64)?;
    }
    if a.k == 0 {
        bail!("-K must be at least 1");
    }
    let exec = if a.sequential { Exec::Sequential } else { Exec::Parallel };
    let records = fuzz(&full_grid(a.k, &a.q), a.trials, a.seed, exec);
    let mut out = String::new();
    for r in &records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    emit(a.out.as_deref(), &out)?;
    let failed = records.iter().filter(|r| !r.pass).count();
    eprintln!("{} records, {failed} failed", records.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
