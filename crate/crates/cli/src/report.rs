//! Report files and run manifests.
//!
//! `results.csv` holds only deterministic columns so that reruns compare
//! byte for byte; wall times go to `timings.csv`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::args::{CircularArgs, Format, LowrankArgs};
use crate::batch::{cumulative_summary, CircularRow, LowrankRow, SolverSnapshot, StepCounts};

/// Seconds rounded to four significant digits.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (3 - mag).max(0) as usize;
    let scale = 10f64.powi(3 - mag);
    let rounded = (x * scale).round() / scale;
    format!("{rounded:.decimals$}")
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "flags", rename_all = "lowercase")]
pub enum BatchSpec {
    Circular(CircularArgs),
    Lowrank(LowrankArgs),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub id: String,
    pub status: String,
    pub residual: f64,
    pub iterations: usize,
    pub wall_time: f64,
    pub steps: StepCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub jobs: usize,
    pub threads_env: Option<String>,
}

impl Environment {
    pub fn current(jobs: usize) -> Self {
        Environment {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            jobs,
            threads_env: std::env::var("CONEWTON_THREADS").ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub spec: BatchSpec,
    pub format: Format,
    pub seeds: Vec<u64>,
    pub config: SolverSnapshot,
    pub results: Vec<InstanceResult>,
    pub environment: Environment,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn save(&self, dir: &Path) -> Result<(), String> {
        let text = serde_json::to_string_pretty(self).map_err(|e| e.to_string())?;
        fs::write(dir.join("manifest.json"), text + "\n").map_err(|e| e.to_string())
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| e.to_string())?;
    for r in rows {
        w.write_record(&r).map_err(|e| e.to_string())?;
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), String> {
    fs::write(dir.join(name), text).map_err(|e| format!("{}: {e}", dir.join(name).display()))
}

#[derive(Serialize)]
struct CircularJson<'a> {
    seed: u64,
    omega: &'a str,
    start: &'a str,
    status: &'a str,
    residual: f64,
    iters: usize,
}

#[derive(Serialize)]
struct LowrankJson<'a> {
    p: f64,
    rank: usize,
    seed: u64,
    status: &'a str,
    residual: f64,
    iters: usize,
    strategy: &'a str,
    attempts: usize,
    objective: f64,
    recovery_error: f64,
}

/// Residuals or seconds with one row per seed and one column per angle.
fn angle_table(rows: &[CircularRow], cell: impl Fn(&CircularRow) -> String) -> Result<String, String> {
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !labels.contains(&r.omega_label.as_str()) {
            labels.push(&r.omega_label);
        }
    }
    let mut seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let mut header = vec!["seed"];
    header.extend(labels.iter().copied());
    let body = seeds.iter().map(|&s| {
        let mut line = vec![s.to_string()];
        for l in &labels {
            let c = rows.iter().find(|r| r.seed == s && r.omega_label == *l).map(&cell).unwrap_or_default();
            line.push(c);
        }
        line
    });
    csv_string(&header, body)
}

pub fn write_circular(dir: &Path, args: &CircularArgs, format: Format, rows: &[CircularRow], jobs: usize) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    match format {
        Format::Csv => {
            let text = csv_string(
                &["seed", "omega", "start", "status", "residual", "iters"],
                rows.iter().map(|r| {
                    vec![
                        r.seed.to_string(),
                        r.omega_label.clone(),
                        r.start.clone(),
                        r.status.clone(),
                        num(r.residual),
                        r.iters.to_string(),
                    ]
                }),
            )?;
            write_file(dir, "results.csv", &text)?;
        }
        Format::Json => {
            let items: Vec<CircularJson> = rows
                .iter()
                .map(|r| CircularJson {
                    seed: r.seed,
                    omega: &r.omega_label,
                    start: &r.start,
                    status: &r.status,
                    residual: r.residual,
                    iters: r.iters,
                })
                .collect();
            write_file(dir, "results.json", &(serde_json::to_string_pretty(&items).map_err(|e| e.to_string())? + "\n"))?;
        }
    }
    let timings = csv_string(
        &["seed", "omega", "start", "status", "seconds"],
        rows.iter().map(|r| vec![r.seed.to_string(), r.omega_label.clone(), r.start.clone(), r.status.clone(), sig4(r.seconds)]),
    )?;
    write_file(dir, "timings.csv", &timings)?;
    write_file(dir, "residual_table.csv", &angle_table(rows, |r| format!("{:.4e}", r.residual))?)?;
    write_file(dir, "time_table.csv", &angle_table(rows, |r| sig4(r.seconds))?)?;

    let cfg = crate::batch::circular_config(&args.solver);
    let mut seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    Manifest {
        spec: BatchSpec::Circular(args.clone()),
        format,
        seeds,
        config: SolverSnapshot::from(&cfg),
        results: rows
            .iter()
            .map(|r| InstanceResult {
                id: format!("omega={} seed={}", r.omega_label, r.seed),
                status: r.status.clone(),
                residual: r.residual,
                iterations: r.iters,
                wall_time: r.seconds,
                steps: r.steps,
            })
            .collect(),
        environment: Environment::current(jobs),
    }
    .save(dir)
}

pub fn write_lowrank(dir: &Path, args: &LowrankArgs, format: Format, rows: &[LowrankRow], jobs: usize) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    match format {
        Format::Csv => {
            let text = csv_string(
                &["p", "rank", "seed", "status", "residual", "iters", "strategy", "attempts", "objective", "recovery_error"],
                rows.iter().map(|r| {
                    vec![
                        r.p.to_string(),
                        r.rank.to_string(),
                        r.seed.to_string(),
                        r.status.clone(),
                        num(r.residual),
                        r.total_iters.to_string(),
                        r.strategy.clone(),
                        r.attempts.to_string(),
                        num(r.objective),
                        num(r.recovery_error),
                    ]
                }),
            )?;
            write_file(dir, "results.csv", &text)?;
        }
        Format::Json => {
            let items: Vec<LowrankJson> = rows
                .iter()
                .map(|r| LowrankJson {
                    p: r.p,
                    rank: r.rank,
                    seed: r.seed,
                    status: &r.status,
                    residual: r.residual,
                    iters: r.total_iters,
                    strategy: &r.strategy,
                    attempts: r.attempts,
                    objective: r.objective,
                    recovery_error: r.recovery_error,
                })
                .collect();
            write_file(dir, "results.json", &(serde_json::to_string_pretty(&items).map_err(|e| e.to_string())? + "\n"))?;
        }
    }
    let timings = csv_string(
        &["p", "rank", "seed", "status", "seconds"],
        rows.iter().map(|r| vec![r.p.to_string(), r.rank.to_string(), r.seed.to_string(), r.status.clone(), sig4(r.seconds)]),
    )?;
    write_file(dir, "timings.csv", &timings)?;
    let thresholds: Vec<f64> = crate::args::parse_list(&args.thresholds, "threshold")?;
    let summary = csv_string(
        &["rank", "p", "threshold_seconds", "solved", "total", "percent"],
        cumulative_summary(rows, &thresholds).into_iter().map(|t| {
            vec![
                t.rank.to_string(),
                t.p.to_string(),
                t.threshold.to_string(),
                t.solved.to_string(),
                t.total.to_string(),
                format!("{:.1}", t.percent),
            ]
        }),
    )?;
    write_file(dir, "summary.csv", &summary)?;

    let cfg = crate::batch::lowrank_config(&args.solver);
    let mut seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    Manifest {
        spec: BatchSpec::Lowrank(args.clone()),
        format,
        seeds,
        config: SolverSnapshot::from(&cfg),
        results: rows
            .iter()
            .map(|r| InstanceResult {
                id: format!("p={} rank={} seed={}", r.p, r.rank, r.seed),
                status: r.status.clone(),
                residual: r.residual,
                iterations: r.total_iters,
                wall_time: r.seconds,
                steps: r.steps,
            })
            .collect(),
        environment: Environment::current(jobs),
    }
    .save(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_significant_digits() {
        assert_eq!(sig4(0.123456), "0.1235");
        assert_eq!(sig4(12.3456), "12.35");
        assert_eq!(sig4(1234.56), "1235");
        assert_eq!(sig4(123456.0), "123500");
        assert_eq!(sig4(0.0), "0");
    }
}
