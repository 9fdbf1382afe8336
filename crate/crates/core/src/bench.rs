//! Benchmark comparing the two randomized algorithms on the ball.
//!
//! One `n x (sum of m)` matrix of uniform `[-1, 1]` entries is drawn from the
//! seed; consecutive column blocks form the instances for `m = m_lo, m_lo+1,
//! ...`. For each instance the harness records the relaxation value, an
//! oracle value, and `runs` outcomes of each algorithm together with its
//! guaranteed lower bound.

use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::approx::{self, RademacherRounding};
use crate::instance::{DispersionInstance, Geometry};
use crate::rng::{seeded, stream};
use crate::{oracle, relax, Error, Result};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n: usize,
    pub m: RangeInclusive<usize>,
    pub runs: usize,
    pub rho: f64,
    pub seed: u64,
    pub oracle_budget: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n: 5,
            m: 6..=30,
            runs: 10,
            rho: 0.9999,
            seed: 0,
            oracle_budget: oracle::DEFAULT_BUDGET,
        }
    }
}

/// One row of the comparison table. Only the named columns go to CSV.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub m: usize,
    pub v_oracle: f64,
    pub v_cr: f64,
    pub gen_vmax: f64,
    pub gen_vmin: f64,
    pub gen_vave: f64,
    pub gen_lb: f64,
    pub new_vmax: f64,
    pub new_vmin: f64,
    pub new_vave: f64,
    pub new_lb: f64,
    #[serde(skip)]
    pub gap: f64,
    #[serde(skip)]
    pub gen_values: Vec<f64>,
    #[serde(skip)]
    pub new_values: Vec<f64>,
}

pub const CSV_HEADER: &str =
    "m,v_oracle,v_cr,gen_vmax,gen_vmin,gen_vave,gen_lb,new_vmax,new_vmin,new_vave,new_lb";

const SLACK: f64 = 1e-9;

impl BenchRecord {
    /// Violated row invariants, empty when the row is consistent.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let upper = self.v_cr + self.gap;
        if self.v_oracle > upper + SLACK {
            out.push(format!("oracle {} above relaxation bound {upper}", self.v_oracle));
        }
        if !(self.new_lb > 0.0) {
            out.push(format!("new lower bound {} is not positive", self.new_lb));
        }
        for v in self.gen_values.iter().chain(&self.new_values) {
            if *v > upper + SLACK {
                out.push(format!("run value {v} above relaxation bound {upper}"));
            }
        }
        for v in &self.new_values {
            if !(*v > self.new_lb - SLACK) {
                out.push(format!("new algorithm value {v} not above its bound {}", self.new_lb));
            }
        }
        out
    }
}

fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min, values.iter().sum::<f64>() / values.len() as f64)
}

/// The instances of a run, in order of `m`.
pub fn bench_instances(config: &BenchConfig) -> Result<Vec<DispersionInstance>> {
    let n = config.n;
    if n < 2 {
        return Err(Error::InvalidArgument("bench needs n >= 2".into()));
    }
    if config.m.is_empty() || *config.m.start() == 0 {
        return Err(Error::InvalidArgument("m range must be nonempty and positive".into()));
    }
    let mut rng = seeded(config.seed);
    config
        .m
        .clone()
        .map(|m| DispersionInstance::generate_random(n, m, Geometry::Ball, &mut rng))
        .collect()
}

pub fn bench(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if config.runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let instances = bench_instances(config)?;
    instances.par_iter().map(|inst| bench_one(config, inst)).collect()
}

fn bench_one(config: &BenchConfig, inst: &DispersionInstance) -> Result<BenchRecord> {
    let m = inst.len();
    let base = m as u64 * 1_000_000;
    let cr = relax::solve_cr_ball(inst, relax::default_tolerance(inst))?;
    let z = relax::lift_ball(&cr, inst)?;
    let oracle = oracle::solve_global(inst, config.oracle_budget, &mut stream(config.seed, base));

    let general = RademacherRounding::from_lift(inst, config.rho, &z)?;
    let gen_values = (0..config.runs)
        .map(|r| {
            let mut rng = stream(config.seed, base + 1 + r as u64);
            general.run(inst, approx::DEFAULT_BUDGET, &mut rng).map(|a| a.f_value)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ratio = 0.0;
    let new_values = (0..config.runs)
        .map(|r| {
            let mut rng = stream(config.seed, base + 500_000 + r as u64);
            let a = approx::approx_ball(inst, config.rho, &mut rng)?;
            ratio = a.bound_r;
            Ok(a.f_value)
        })
        .collect::<Result<Vec<_>>>()?;

    let (gen_vmax, gen_vmin, gen_vave) = summarize(&gen_values);
    let (new_vmax, new_vmin, new_vave) = summarize(&new_values);
    Ok(BenchRecord {
        m,
        v_oracle: oracle.value,
        v_cr: cr.zeta_star,
        gen_vmax,
        gen_vmin,
        gen_vave,
        gen_lb: general.bound * cr.zeta_star,
        new_vmax,
        new_vmin,
        new_vave,
        new_lb: ratio * cr.zeta_star,
        gap: cr.gap,
        gen_values,
        new_values,
    })
}

pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv(records: &[BenchRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Markdown table with two decimals, grouped like the usual comparison
/// layout: oracle and relaxation values, then each algorithm's
/// max/min/average and lower bound.
pub fn to_markdown(records: &[BenchRecord]) -> String {
    let mut s = String::new();
    s.push_str("| m | v_oracle | v_cr | HA13 v_max | HA13 v_min | HA13 v_ave | HA13 l.b. | new v_max | new v_min | new v_ave | new l.b. |\n");
    s.push_str("|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for r in records {
        s.push_str(&format!(
            "| {} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} |\n",
            r.m,
            r.v_oracle,
            r.v_cr,
            r.gen_vmax,
            r.gen_vmin,
            r.gen_vave,
            r.gen_lb,
            r.new_vmax,
            r.new_vmin,
            r.new_vave,
            r.new_lb
        ));
    }
    s
}
