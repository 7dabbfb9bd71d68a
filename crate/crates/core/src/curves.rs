//! Rate sweeps as CSV.

use std::fmt::Write as _;

use crate::bounds::entropy_lower_bound;
use crate::par::Exec;
use crate::scheme1::rate_formula as s1_rate;
use crate::scheme2::rate_formula as s2_rate;
use crate::tradeoff::{tradeoff_curve, TradeoffPoint};

#[derive(Clone, Debug, PartialEq)]
pub struct RatePoint {
    pub x: usize,
    pub r_scheme1: usize,
    pub r_scheme2: Option<usize>,
    /// Entropy bound, one entry per field size.
    pub lower: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateCurve {
    pub sweep: &'static str,
    pub qs: Vec<u64>,
    pub points: Vec<RatePoint>,
}

impl RateCurve {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},R_scheme1,R_scheme2", self.sweep);
        for q in &self.qs {
            write!(s, ",LB_q{q}").unwrap();
        }
        s.push('\n');
        for p in &self.points {
            write!(s, "{},{},", p.x, p.r_scheme1).unwrap();
            if let Some(r) = p.r_scheme2 {
                write!(s, "{r}").unwrap();
            }
            for lb in &p.lower {
                write!(s, ",{lb:.6}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

fn point(x: usize, k: usize, l: usize, m: usize, qs: &[u64]) -> RatePoint {
    RatePoint {
        x,
        r_scheme1: s1_rate(k, l, m),
        r_scheme2: s2_rate(k, l, m),
        lower: qs.iter().map(|&q| entropy_lower_bound(k, l, m, q)).collect(),
    }
}

/// `M = 1..=K` with `K, L` fixed.
pub fn r_vs_m(k: usize, l: usize, qs: &[u64], exec: Exec) -> RateCurve {
    RateCurve {
        sweep: "M",
        qs: qs.to_vec(),
        points: exec.map((1..=k).collect(), |m| point(m, k, l, m, qs)),
    }
}

/// `L = 1..=K` with `K, M` fixed.
pub fn r_vs_l(k: usize, m: usize, qs: &[u64], exec: Exec) -> RateCurve {
    RateCurve {
        sweep: "L",
        qs: qs.to_vec(),
        points: exec.map((1..=k).collect(), |l| point(l, k, l, m, qs)),
    }
}

/// The `(N, R)` trade-off points for `γ = 1..=L`.
pub fn r_vs_n(k: usize, l: usize, m: usize) -> Vec<TradeoffPoint> {
    tradeoff_curve(k, l, m)
}

pub fn tradeoff_csv(points: &[TradeoffPoint]) -> String {
    let mut s = String::from("gamma,N,R\n");
    for p in points {
        writeln!(s, "{},{},{}", p.gamma, p.servers, p.rate).unwrap();
    }
    s
}
