use std::collections::BTreeSet;

use digeco_core::experiment::{run_all, summarize};
use digeco_core::model::Provenance;
use digeco_core::{
    run_experiment, run_simulation, ExperimentConfig, RunConfig, Scenario, Simulation,
};

fn small(seed: u64, steps: u64) -> RunConfig {
    let mut c = RunConfig {
        seed,
        steps,
        ..Default::default()
    };
    c.users.n_users = 20;
    c.users.catalog_size = 15;
    c
}

#[test]
fn single_step_single_user() {
    let mut c = RunConfig {
        steps: 1,
        ..Default::default()
    };
    c.users.n_users = 1;
    c.users.n_communities = 1;
    let mut sim = Simulation::new(c).unwrap();
    let (result, network) = sim.run_keep().unwrap();
    assert_eq!(result.counters.requests_served, 1);
    assert_eq!(network.habitats[0].deployed.len(), 1);
    assert_eq!(result.measurements.len(), 1);
    assert_eq!(result.measurements[0].size_histogram.total(), 1);
}

#[test]
fn same_seed_same_result() {
    let a = serde_json::to_string(&run_simulation(small(3, 150)).unwrap()).unwrap();
    let b = serde_json::to_string(&run_simulation(small(3, 150)).unwrap()).unwrap();
    let c = serde_json::to_string(&run_simulation(small(4, 150)).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn ten_requests_per_user() {
    let result = run_simulation(RunConfig::default()).unwrap();
    let mut per_user = vec![0u32; 100];
    for s in &result.trace {
        per_user[s.habitat.index()] += 1;
    }
    let mean = per_user.iter().sum::<u32>() as f64 / 100.0;
    assert!((mean - 10.0).abs() <= 1.0, "mean {mean}");
    let var = per_user
        .iter()
        .map(|&n| (n as f64 - mean).powi(2))
        .sum::<f64>()
        / 99.0;
    // uniform user choice: binomial(1000, 1/100) has variance 9.9
    assert!((5.0..=15.0).contains(&var), "variance {var}");
}

#[test]
fn agents_come_from_known_sources_only() {
    let mut sim = Simulation::new(small(11, 400)).unwrap();
    let (result, network) = sim.run_keep().unwrap();
    let mut ids = BTreeSet::new();
    let mut created = 0;
    for h in &network.habitats {
        for (id, entry) in &h.pool {
            let a = &entry.agent;
            assert_eq!(*id, a.id);
            assert!(ids.insert(a.id), "agent id {} appears twice", a.id);
            match a.provenance {
                Provenance::Catalog => {
                    assert_eq!(a.created_step, 0);
                    assert_eq!(a.origin_habitat, h.id);
                }
                Provenance::Created => {
                    created += 1;
                    assert!(a.created_step >= 1);
                    assert_eq!(a.origin_habitat, h.id);
                }
                Provenance::Migrated { parent } => {
                    assert!(parent < a.id);
                    assert_ne!(a.origin_habitat, h.id);
                    assert!(a.created_step >= 1);
                }
            }
        }
    }
    assert!(created as u64 <= result.counters.agents_created);
    assert_eq!(result.counters.catalog_agents, 20 * 15);
    assert!(result.counters.migrations > 0);
}

#[test]
fn histograms_match_deployments() {
    let mut sim = Simulation::new(small(8, 300)).unwrap();
    let (result, network) = sim.run_keep().unwrap();
    let m = result.measurements.last().unwrap();
    let deployed: usize = network.habitats.iter().map(|h| h.deployed.len()).sum();
    let agents: usize = network
        .habitats
        .iter()
        .flat_map(|h| h.deployed.iter())
        .map(|d| d.aggregation.len())
        .sum();
    assert_eq!(m.size_histogram.total(), deployed as u64);
    assert_eq!(m.attr_histogram.total(), agents as u64);
    assert!(deployed as u64 <= result.counters.requests_served);
}

#[test]
fn best_fitness_trace_never_exceeds_optimum() {
    let result = run_simulation(small(2, 200)).unwrap();
    for s in &result.trace {
        assert!(s.best_fitness <= s.max_fitness + 1e-9);
        assert!(s.best_len >= 1);
    }
}

#[test]
fn single_run_experiment_reports_that_run() {
    let base = small(21, 120);
    let exp = ExperimentConfig {
        name: "one".into(),
        base: base.clone(),
        n_runs: 1,
    };
    let report = run_experiment(&exp, 1).unwrap();
    let run = run_simulation(base).unwrap();
    let (c, m) = (
        report.final_checkpoint().unwrap(),
        run.measurements.last().unwrap(),
    );
    assert_eq!(c.size.histogram, m.size_histogram);
    assert_eq!(c.attributes.histogram, m.attr_histogram);
    assert_eq!(report.completed_runs, 1);
}

#[test]
fn two_run_totals_add_up() {
    let exp = ExperimentConfig {
        name: "two".into(),
        base: small(30, 100),
        n_runs: 2,
    };
    let runs = run_all(&exp, 1);
    let totals: Vec<(u64, u64)> = runs
        .iter()
        .map(|(_, r)| {
            let m = r.as_ref().unwrap().measurements.last().unwrap();
            (m.size_histogram.total(), m.attr_histogram.total())
        })
        .collect();
    assert_eq!(runs[0].0, 30);
    assert_eq!(runs[1].0, 31);
    let report = summarize(&exp, runs);
    let c = report.final_checkpoint().unwrap();
    assert_eq!(c.size.histogram.total(), totals[0].0 + totals[1].0);
    assert_eq!(c.attributes.histogram.total(), totals[0].1 + totals[1].1);
    assert_eq!(report.requests_served, 200);
}

#[test]
fn default_scenario_reports_both_dof() {
    let report = run_experiment(&Scenario::LengthUniform.experiment(&small(0, 80), 2), 1).unwrap();
    let c = report.final_checkpoint().unwrap();
    assert_eq!(c.size.chi_squared.as_ref().unwrap().dof, 16);
    assert_eq!(c.attributes.chi_squared.as_ref().unwrap().dof, 10);
}

#[test]
fn invalid_config_is_rejected_with_its_key() {
    let mut c = RunConfig::default();
    c.evolution.pop_size = 1;
    let err = run_simulation(c).unwrap_err().to_string();
    assert!(err.contains("pop_size"), "{err}");
}

#[test]
fn checkpoints_follow_measurement_steps() {
    let mut c = small(1, 90);
    c.measurement.steps = vec![60, 30, 90];
    let r = run_simulation(c).unwrap();
    let steps: Vec<u64> = r.measurements.iter().map(|m| m.step).collect();
    assert_eq!(steps, [30, 60, 90]);
    assert!(r
        .measurements
        .windows(2)
        .all(|w| w[0].requests_served < w[1].requests_served));
}
