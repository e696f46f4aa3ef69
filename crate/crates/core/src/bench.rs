//! Benchmark grid: variants by instances by radius, with solved/affected/total
//! counts and shifted geometric means of time, dual gap and primal bounds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::Variant;
use crate::instances::{radius_for, InstanceSet, RadiusPolicy};
use crate::pipeline::{prepare, solve_prepared, subdivided_node_count};
use crate::solver::{backend, SolveOptions, Status};

/// `(prod (v_i + shift))^(1/M) - shift`, evaluated through logarithms.
pub fn sgm(values: &[f64], shift: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("shifted geometric mean of nothing".into()));
    }
    if shift < 0.0 || values.iter().any(|&v| v.is_nan() || v < 0.0) {
        return Err(Error::InvalidArgument("shifted geometric mean needs nonnegative inputs".into()));
    }
    if values.iter().any(|&v| v + shift == 0.0) {
        return Ok(0.0);
    }
    let mean_log = values.iter().map(|&v| (v + shift).ln()).sum::<f64>() / values.len() as f64;
    Ok(mean_log.exp() - shift)
}

pub const TIME_SHIFT: f64 = 1.0;
pub const RATIO_SHIFT: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: String,
    pub variant: Variant,
    pub radius: RadiusPolicy,
    pub delta: f64,
    /// Solve time in seconds, preprocessing excluded; the time limit when unaffected.
    pub t: f64,
    pub status: Status,
    pub incumbent: Option<f64>,
    pub bound: Option<f64>,
    /// Node count of the network subdivided to edges no longer than `delta`.
    pub n_sd: usize,
    /// Relative dual gap `(incumbent - bound) / incumbent`; 1 when unaffected.
    pub sigma: f64,
    /// `incumbent / n_sd`; 1 when unaffected.
    pub v_r: f64,
    /// `incumbent / SFD incumbent` on the same instance and radius.
    pub v_r_prime: Option<f64>,
    pub verified: bool,
    pub error: Option<String>,
}

impl BenchRecord {
    /// A feasible incumbent that passed verification.
    pub fn affected(&self) -> bool {
        self.incumbent.is_some() && self.verified
    }

    pub fn solved(&self) -> bool {
        self.affected() && self.status == Status::Optimal
    }

    fn unaffected(mut self, time_limit: f64) -> Self {
        self.t = time_limit;
        self.sigma = 1.0;
        self.v_r = 1.0;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub time_limit: f64,
    pub abs_gap: f64,
    pub workers: usize,
    pub backend: String,
    /// Radii to run; empty means the set's own policy.
    pub radii: Vec<RadiusPolicy>,
    pub seed: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            time_limit: 1800.0,
            abs_gap: 1.0,
            workers: 3,
            backend: crate::solver::default_backend_name().to_string(),
            radii: Vec::new(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub benchmark: String,
    pub radius: RadiusPolicy,
    pub variant: Variant,
    pub sgm_t: f64,
    pub sgm_sigma: f64,
    pub sgm_v_r: f64,
    pub sgm_v_r_prime: Option<f64>,
    pub solved: usize,
    pub affected: usize,
    pub total: usize,
}

impl SummaryRow {
    pub fn sat(&self) -> String {
        format!("{}/{}/{}", self.solved, self.affected, self.total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub benchmark: String,
    pub config: GridConfig,
    pub records: Vec<BenchRecord>,
    pub summary: Vec<SummaryRow>,
}

struct Job {
    instance: usize,
    radius: RadiusPolicy,
    variant: Variant,
}

fn run_job(set: &InstanceSet, job: &Job, config: &GridConfig) -> BenchRecord {
    let id = set.instances[job.instance].id.clone();
    let mut record = BenchRecord {
        instance: id,
        variant: job.variant,
        radius: job.radius,
        delta: f64::NAN,
        t: config.time_limit,
        status: Status::Unread,
        incumbent: None,
        bound: None,
        n_sd: 0,
        sigma: 1.0,
        v_r: 1.0,
        v_r_prime: None,
        verified: false,
        error: None,
    };
    let attempt = || -> Result<BenchRecord> {
        let net = set.network(job.instance)?;
        let delta = radius_for(&net, job.radius);
        let mut r = record.clone();
        r.delta = delta;
        r.n_sd = subdivided_node_count(&net, delta)?;
        let prepared = prepare(&net, delta, job.variant)?;
        let options =
            SolveOptions { time_limit: config.time_limit, abs_gap: config.abs_gap, threads: 1, seed: config.seed };
        let solver = backend(&config.backend)?;
        let outcome = solve_prepared(&prepared, &net, solver.as_ref(), &options)?;
        r.status = outcome.status;
        r.t = outcome.solve_time;
        r.bound = outcome.bound;
        r.verified = outcome.verified();
        if let Some(v) = outcome.incumbent.filter(|_| r.verified) {
            r.incumbent = Some(v);
            r.sigma = r.bound.map_or(1.0, |b| ((v - b) / v).clamp(0.0, 1.0));
            r.v_r = v / r.n_sd as f64;
        } else if outcome.incumbent.is_some() {
            log::warn!("{} {} {}: incumbent failed verification", r.instance, r.variant, r.radius.label());
        }
        Ok(r)
    };
    match attempt() {
        Ok(r) if r.affected() => r,
        Ok(r) => r.unaffected(config.time_limit),
        Err(e) => {
            log::warn!("{} {} {}: {e}", record.instance, record.variant, record.radius.label());
            record.error = Some(e.to_string());
            record.unaffected(config.time_limit)
        }
    }
}

/// Runs every (instance, radius, variant) job on `config.workers` threads.
pub fn run_grid(set: &InstanceSet, variants: &[Variant], config: &GridConfig) -> Result<BenchReport> {
    backend(&config.backend)?;
    let radii = if config.radii.is_empty() { vec![set.radius_policy] } else { config.radii.clone() };
    let mut jobs = Vec::new();
    for instance in 0..set.instances.len() {
        for &radius in &radii {
            for &variant in variants {
                jobs.push(Job { instance, radius, variant });
            }
        }
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<BenchRecord>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..config.workers.max(1).min(jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let record = run_job(set, job, config);
                log::info!(
                    "{} {} {}: {} {:?} in {:.2}s",
                    record.instance,
                    record.radius.label(),
                    record.variant,
                    record.status,
                    record.incumbent,
                    record.t
                );
                *slots[i].lock().expect("result slot") = Some(record);
            });
        }
    });
    let mut records: Vec<BenchRecord> =
        slots.into_iter().map(|s| s.into_inner().expect("result slot").expect("every job ran")).collect();
    fill_reference_ratios(&mut records);
    let summary = summarize(&set.name, &records)?;
    Ok(BenchReport { benchmark: set.name.clone(), config: config.clone(), records, summary })
}

/// Sets `v_r_prime` wherever an affected SFD record exists for the same instance and radius.
pub fn fill_reference_ratios(records: &mut [BenchRecord]) {
    let reference: BTreeMap<(String, RadiusPolicy), f64> = records
        .iter()
        .filter(|r| r.variant == Variant::SFD && r.affected())
        .filter_map(|r| Some(((r.instance.clone(), r.radius), r.incumbent?)))
        .collect();
    for r in records.iter_mut() {
        r.v_r_prime = match (r.incumbent, reference.get(&(r.instance.clone(), r.radius))) {
            (Some(v), Some(&d)) if r.affected() => Some(v / d),
            (_, Some(_)) => Some(1.0),
            _ => None,
        };
    }
}

/// One row per (radius, variant), in first-seen order.
pub fn summarize(benchmark: &str, records: &[BenchRecord]) -> Result<Vec<SummaryRow>> {
    let mut keys: Vec<(RadiusPolicy, Variant)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.radius, r.variant)) {
            keys.push((r.radius, r.variant));
        }
    }
    keys.sort();
    let mut rows = Vec::new();
    for (radius, variant) in keys {
        let group: Vec<&BenchRecord> = records.iter().filter(|r| r.radius == radius && r.variant == variant).collect();
        let column = |f: fn(&BenchRecord) -> f64| group.iter().map(|r| f(r)).collect::<Vec<_>>();
        let primes: Vec<f64> = group.iter().filter_map(|r| r.v_r_prime).collect();
        rows.push(SummaryRow {
            benchmark: benchmark.to_string(),
            radius,
            variant,
            sgm_t: sgm(&column(|r| r.t), TIME_SHIFT)?,
            sgm_sigma: sgm(&column(|r| r.sigma), RATIO_SHIFT)?,
            sgm_v_r: sgm(&column(|r| r.v_r), RATIO_SHIFT)?,
            sgm_v_r_prime: if primes.is_empty() { None } else { Some(sgm(&primes, RATIO_SHIFT)?) },
            solved: group.iter().filter(|r| r.solved()).count(),
            affected: group.iter().filter(|r| r.affected()).count(),
            total: group.len(),
        });
    }
    Ok(rows)
}

/// Aligned text table, one line per summary row.
pub fn render_summary(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:<6} {:<4} {:>9} {:>8} {:>8} {:>8} {:>10}",
        "benchmark", "radius", "var", "t", "sigma", "v_r", "v'_r", "S/A/T"
    );
    for r in rows {
        let prime = r.sgm_v_r_prime.map_or("-".to_string(), |p| format!("{:.1}%", 100.0 * p));
        let _ = writeln!(
            out,
            "{:<12} {:<6} {:<4} {:>9.1} {:>7.1}% {:>7.1}% {:>8} {:>10}",
            r.benchmark,
            r.radius.label(),
            r.variant.label(),
            r.sgm_t,
            100.0 * r.sgm_sigma,
            100.0 * r.sgm_v_r,
            prime,
            r.sat()
        );
    }
    out
}

#[derive(Serialize)]
struct CsvRow<'a> {
    instance: &'a str,
    variant: &'a str,
    radius: &'a str,
    delta: f64,
    t: f64,
    status: &'a str,
    incumbent: Option<f64>,
    bound: Option<f64>,
    n_sd: usize,
    sigma: f64,
    v_r: f64,
    v_r_prime: Option<f64>,
    verified: bool,
    error: Option<&'a str>,
}

/// Writes `results.csv`, `summary.txt` and `manifest.json` into `dir`.
pub fn write_outputs(report: &BenchReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csv = csv::Writer::from_path(dir.join("results.csv"))?;
    for r in &report.records {
        csv.serialize(CsvRow {
            instance: &r.instance,
            variant: r.variant.label(),
            radius: r.radius.label(),
            delta: r.delta,
            t: r.t,
            status: r.status.label(),
            incumbent: r.incumbent,
            bound: r.bound,
            n_sd: r.n_sd,
            sigma: r.sigma,
            v_r: r.v_r,
            v_r_prime: r.v_r_prime,
            verified: r.verified,
            error: r.error.as_deref(),
        })?;
    }
    csv.flush()?;
    std::fs::write(dir.join("summary.txt"), render_summary(&report.summary))?;
    let manifest = serde_json::json!({
        "benchmark": report.benchmark,
        "config": report.config,
        "records": report.records.len(),
        "summary": report.summary,
        "netcover_version": env!("CARGO_PKG_VERSION"),
        "outputs": ["results.csv", "summary.txt", "manifest.json"],
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}
