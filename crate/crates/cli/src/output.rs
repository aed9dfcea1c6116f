//! Report emission. Every scenario directory holds `report.json`,
//! `size_hist.csv`, `attr_hist.csv` and `topology.csv`.

use std::fs;
use std::path::Path;

use digeco_core::experiment::{ExperimentReport, PropertyReport, TOOL_VERSION};
use digeco_core::sim::{Measurement, RunResult};
use digeco_core::users::pmf;
use digeco_core::{run_experiment, ExperimentConfig, Network, RunConfig, Scenario, Simulation};
use serde::Serialize;

use crate::CliError;

#[derive(Serialize)]
struct RunReport<'a> {
    tool_version: &'a str,
    config: &'a RunConfig,
    result: &'a RunResult,
}

#[derive(Serialize)]
struct TopologyReport<'a> {
    tool_version: &'a str,
    config: &'a RunConfig,
    step: u64,
    connections: usize,
    mean_p: Option<f64>,
    measurement: &'a Measurement,
}

fn run_error(e: digeco_core::Error) -> CliError {
    match e {
        digeco_core::Error::InvalidConfig(v) => CliError::Config(v.join("; ")),
        other => CliError::Run(other.to_string()),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn simulate(config: &RunConfig) -> Result<(RunResult, Network), CliError> {
    let mut sim = Simulation::new(config.clone()).map_err(run_error)?;
    let (result, network) = sim.run_keep().map_err(run_error)?;
    Ok((result, network.clone()))
}

/// `run`: one simulation, histograms of its final measurement.
pub fn run(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let (result, network) = simulate(config)?;
    let dir = out.join("run");
    let report = RunReport {
        tool_version: TOOL_VERSION,
        config,
        result: &result,
    };
    write(&dir, "report.json", &to_json(&report))?;
    if let Some(m) = result.measurements.last() {
        write(
            &dir,
            "size_hist.csv",
            &m.size_histogram.to_csv(&pmf(&config.users.length_dist)),
        )?;
        write(
            &dir,
            "attr_hist.csv",
            &m.attr_histogram.to_csv(&pmf(&config.users.modularity_dist)),
        )?;
    }
    write(&dir, "topology.csv", &network.topology_csv())?;
    println!(
        "{}: {} requests served, report in {}",
        config.seed,
        result.counters.requests_served,
        dir.display()
    );
    Ok(())
}

/// `topology-report`: one simulation, its final network.
pub fn topology(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let (result, network) = simulate(config)?;
    let dir = out.join("topology");
    let m = result
        .measurements
        .last()
        .ok_or_else(|| CliError::Run("no measurement taken".into()))?;
    let ps: Vec<f64> = network
        .habitats
        .iter()
        .flat_map(|h| h.out.values().map(|c| c.p))
        .collect();
    let report = TopologyReport {
        tool_version: TOOL_VERSION,
        config,
        step: m.step,
        connections: ps.len(),
        mean_p: (!ps.is_empty()).then(|| ps.iter().sum::<f64>() / ps.len() as f64),
        measurement: m,
    };
    write(&dir, "report.json", &to_json(&report))?;
    write(&dir, "topology.csv", &network.topology_csv())?;
    println!(
        "clustering {:?} (random {:?}), path length {:?}, {} edges; report in {}",
        m.topology.clustering_coefficient,
        m.baseline_clustering,
        m.topology.characteristic_path_length,
        m.topology.edge_count,
        dir.display()
    );
    Ok(())
}

/// `experiment`: writes `<out>/<name>/`. The histograms are those of the last
/// measurement step; earlier steps get `size_hist_<step>.csv` and
/// `attr_hist_<step>.csv`. `topology.csv` is the final network of the run
/// that uses the base seed.
pub fn experiment(
    config: &ExperimentConfig,
    parallelism: usize,
    out: &Path,
) -> Result<ExperimentReport, CliError> {
    let report = run_experiment(config, parallelism).map_err(run_error)?;
    let dir = out.join(&config.name);
    write(&dir, "report.json", &report.to_json())?;
    let last = report.checkpoints.len().saturating_sub(1);
    for (i, c) in report.checkpoints.iter().enumerate() {
        let suffix = if i == last {
            String::new()
        } else {
            format!("_{}", c.step)
        };
        write(&dir, &format!("size_hist{suffix}.csv"), &c.size.csv())?;
        write(&dir, &format!("attr_hist{suffix}.csv"), &c.attributes.csv())?;
    }
    let (_, network) = simulate(&config.base)?;
    write(&dir, "topology.csv", &network.topology_csv())?;

    if !report.failed_runs.is_empty() {
        let seeds: Vec<String> = report
            .failed_runs
            .iter()
            .map(|f| f.seed.to_string())
            .collect();
        return Err(CliError::Run(format!(
            "{} of {} runs failed (seeds {}); report covers the completed runs",
            report.failed_runs.len(),
            config.n_runs,
            seeds.join(", ")
        )));
    }
    Ok(report)
}

struct SummaryRow {
    scenario: &'static str,
    property: &'static str,
    report: PropertyReport,
}

/// `paper-suite`: the six scenarios, then `<out>/summary.csv`.
pub fn paper_suite(
    base: &RunConfig,
    runs: usize,
    parallelism: usize,
    out: &Path,
) -> Result<(), CliError> {
    let mut base = base.clone();
    if base.measurement.steps.is_empty() {
        let s = base.steps;
        base.measurement.steps = vec![(s / 4).max(1), (s / 2).max(1), s];
    }
    let mut rows = Vec::new();
    let mut failure = None;
    for sc in Scenario::ALL {
        let report = match experiment(&sc.experiment(&base, runs), parallelism, out) {
            Ok(r) => r,
            Err(CliError::Run(msg)) => {
                failure.get_or_insert(CliError::Run(format!("{}: {msg}", sc.name())));
                continue;
            }
            Err(e) => return Err(e),
        };
        let Some(last) = report.final_checkpoint() else {
            continue;
        };
        rows.push(SummaryRow {
            scenario: sc.name(),
            property: match sc.property() {
                digeco_core::Property::Size => "size",
                digeco_core::Property::Attributes => "attributes",
            },
            report: last.property(sc.property()).clone(),
        });
    }
    let csv = summary_csv(&rows);
    write(out, "summary.csv", &csv)?;
    print!("{}", summary_table(&rows));
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(
        "scenario,property,dof,chi_squared,critical_0_05,fits_5pct,critical_0_95,fits_strict,chi_squared_merged,observed_mean,expected_mean\n",
    );
    for r in rows {
        let c = r.report.chi_squared.as_ref();
        let m = r.report.chi_squared_merged.as_ref();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.property,
            c.map_or(String::new(), |c| c.dof.to_string()),
            c.map_or(String::new(), |c| c.statistic.to_string()),
            c.map_or(String::new(), |c| c.critical_upper_0_05.to_string()),
            c.map_or(String::new(), |c| c.pass_standard.to_string()),
            c.map_or(String::new(), |c| c.critical_lower_0_95.to_string()),
            c.map_or(String::new(), |c| c.pass_paper_convention.to_string()),
            m.map_or(String::new(), |m| m.statistic.to_string()),
            r.report
                .observed_mean
                .map_or(String::new(), |v| v.to_string()),
            r.report.expected_mean,
        ));
    }
    s
}

fn summary_table(rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:<22} {:<10} {:>4} {:>12} {:>8} {:>8}\n",
        "scenario", "property", "dof", "chi2", "5% fit", "strict"
    );
    for r in rows {
        let (dof, chi, std, strict) = match &r.report.chi_squared {
            Some(c) => (
                c.dof.to_string(),
                format!("{:.3}", c.statistic),
                yes_no(c.pass_standard),
                yes_no(c.pass_paper_convention),
            ),
            None => ("-".into(), "-".into(), "-", "-"),
        };
        s.push_str(&format!(
            "{:<22} {:<10} {:>4} {:>12} {:>8} {:>8}\n",
            r.scenario, r.property, dof, chi, std, strict
        ));
    }
    s
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialises")
}
