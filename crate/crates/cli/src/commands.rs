//! Subcommand implementations.

use std::path::PathBuf;

use anyhow::{bail, Context};
use symbiosis_core::engine::monte_carlo::monte_carlo_with_truths;
use symbiosis_core::theory::io::{parse_clusters, parse_edge_list};
use symbiosis_core::theory::verify::verify_random_instances;
use symbiosis_core::theory::{
    bias_closed_form, brute_force_bias, cluster_cut_quality, compute_tte, design_bias_gap,
};
use symbiosis_core::{
    BiasReport, DesignKind, RecommenderKind, Summary, TheoryInstance, TruthTable,
};

use crate::config::RunConfig;
use crate::output::{fmt_f64, metadata, Emitter, Table};

/// Subcommands of the driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// First listed design with the first listed algorithm pair.
    Simulate,
    /// Every design and pair over the `gamma_pref` and `p` sweep axes.
    Sweep,
    /// Closed-form and enumerated biases of a graph from files.
    Theory,
    /// Closed forms against enumeration on random instances.
    Verify,
    /// True take-up of every recommender.
    Counterfactual,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Theory => "theory",
            Command::Verify => "verify",
            Command::Counterfactual => "counterfactual",
        }
    }
}

/// Result of a completed command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// False when a verification tolerance was violated.
    pub passed: bool,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
}

pub const REPLICATION_COLUMNS: [&str; 9] = [
    "replication",
    "design",
    "algo_t",
    "algo_c",
    "p",
    "gamma_pref",
    "take_up_t",
    "take_up_c",
    "tte_hat",
];

pub const SUMMARY_COLUMNS: [&str; 25] = [
    "design",
    "algo_t",
    "algo_c",
    "p",
    "gamma_pref",
    "replications",
    "take_up_t",
    "take_up_t_se",
    "take_up_c",
    "take_up_c_se",
    "tte_hat",
    "tte_hat_se",
    "true_take_up_t",
    "true_take_up_t_se",
    "true_take_up_c",
    "true_take_up_c_se",
    "bias_t",
    "bias_t_se",
    "bias_c",
    "bias_c_se",
    "bias_tte",
    "bias_tte_se",
    "mean_abs_bias",
    "cross_arm_records",
    "leaked_training_entries",
];

pub const THEORY_COLUMNS: [&str; 4] = ["design", "closed_form", "brute_force", "abs_diff"];

/// Runs `command`, writing its outputs into `config.out`.
pub fn run_command(command: Command, config: &RunConfig) -> anyhow::Result<Outcome> {
    config.validate()?;
    let mut emitter = Emitter::new(&config.out)
        .with_context(|| format!("cannot create output directory {}", config.out.display()))?;
    let (passed, summary) = match command {
        Command::Simulate => simulate(config, &mut emitter)?,
        Command::Sweep => sweep(config, &mut emitter)?,
        Command::Theory => theory(config, &mut emitter)?,
        Command::Verify => verify(config, &mut emitter)?,
        Command::Counterfactual => counterfactual(config, &mut emitter)?,
    };
    emitter
        .write("metadata.txt", &metadata(command.name(), &config.resolved()))
        .context("cannot write metadata")?;
    Ok(Outcome {
        files: emitter.commit(),
        passed,
        summary,
    })
}

fn summary_row(report: &BiasReport) -> Vec<String> {
    let ms = |s: &Summary| [fmt_f64(s.mean), fmt_f64(s.se)];
    let mut row = vec![
        report.design.name().to_string(),
        report.algorithms.treatment.to_string(),
        report.algorithms.control.to_string(),
        fmt_f64(report.params.p),
        fmt_f64(report.params.gamma_pref),
        report.replications().to_string(),
    ];
    for s in [
        &report.take_up_t,
        &report.take_up_c,
        &report.tte,
        &report.truth_t,
        &report.truth_c,
        &report.bias_t,
        &report.bias_c,
        &report.bias_tte,
    ] {
        row.extend(ms(s));
    }
    row.push(fmt_f64(report.mean_abs_bias()));
    row.push(report.audit.cross_arm_records.to_string());
    row.push(report.audit.leaked_training_entries.to_string());
    row
}

fn push_replications(table: &mut Table, report: &BiasReport) {
    for r in &report.rows {
        table.push(vec![
            r.replication.to_string(),
            report.design.name().to_string(),
            report.algorithms.treatment.to_string(),
            report.algorithms.control.to_string(),
            fmt_f64(report.params.p),
            fmt_f64(report.params.gamma_pref),
            fmt_f64(r.take_up_t),
            fmt_f64(r.take_up_c),
            fmt_f64(r.tte_hat),
        ]);
    }
}

fn describe(report: &BiasReport) -> String {
    format!(
        "{} {} gamma_pref={} p={}: tte {:.4} (true {:.4}), bias t {:+.4} c {:+.4} tte {:+.4}",
        report.design,
        report.algorithms,
        report.params.gamma_pref,
        report.params.p,
        report.tte.mean,
        report.true_tte().mean,
        report.bias_t.mean,
        report.bias_c.mean,
        report.bias_tte.mean,
    )
}

/// Runs every design and pair at each grid point and writes both tables.
fn run_grid(
    config: &RunConfig,
    designs: &[DesignKind],
    emitter: &mut Emitter,
) -> anyhow::Result<(bool, Vec<String>)> {
    let mut replications = Table::new(&REPLICATION_COLUMNS);
    let mut summaries = Table::new(&SUMMARY_COLUMNS);
    let mut lines = Vec::new();
    let algorithms: Vec<RecommenderKind> = config
        .pairs
        .iter()
        .flat_map(|pair| [pair.treatment, pair.control])
        .collect();
    for params in config.grid() {
        log::info!(
            "true counterfactuals at gamma_pref={} p={}",
            params.gamma_pref,
            params.p
        );
        let truths = TruthTable::compute(
            &params,
            algorithms.iter().copied(),
            config.replications,
            params.seed,
        )?;
        for &design in designs {
            for &pair in &config.pairs {
                log::info!("{design} {pair} gamma_pref={} p={}", params.gamma_pref, params.p);
                let report =
                    monte_carlo_with_truths(&params, design, pair, config.replications, &truths)?;
                if !report.audit.is_clean() {
                    bail!("data-scope audit failed for {design} {pair}: {:?}", report.audit);
                }
                push_replications(&mut replications, &report);
                summaries.push(summary_row(&report));
                lines.push(describe(&report));
            }
        }
    }
    emitter.write_table("replications.csv", &replications)?;
    emitter.write_table("summary.csv", &summaries)?;
    Ok((true, lines))
}

fn simulate(config: &RunConfig, emitter: &mut Emitter) -> anyhow::Result<(bool, Vec<String>)> {
    if config.designs.len() > 1 || config.pairs.len() > 1 {
        log::info!("simulate runs the first listed design and pair; use sweep for all of them");
    }
    let single = RunConfig {
        pairs: config.pairs[..1].to_vec(),
        sweep_gamma_pref: Vec::new(),
        sweep_p: Vec::new(),
        ..config.clone()
    };
    run_grid(&single, &config.designs[..1], emitter)
}

fn sweep(config: &RunConfig, emitter: &mut Emitter) -> anyhow::Result<(bool, Vec<String>)> {
    run_grid(config, &config.designs, emitter)
}

fn counterfactual(config: &RunConfig, emitter: &mut Emitter) -> anyhow::Result<(bool, Vec<String>)> {
    let mut table = Table::new(&[
        "algorithm",
        "p",
        "gamma_pref",
        "replications",
        "true_take_up",
        "true_take_up_se",
    ]);
    let mut lines = Vec::new();
    for params in config.grid() {
        let truths = TruthTable::compute(
            &params,
            RecommenderKind::ALL,
            config.replications,
            params.seed,
        )?;
        for truth in truths.iter() {
            table.push(vec![
                truth.algorithm.to_string(),
                fmt_f64(params.p),
                fmt_f64(params.gamma_pref),
                truth.take_up.n.to_string(),
                fmt_f64(truth.take_up.mean),
                fmt_f64(truth.take_up.se),
            ]);
            lines.push(format!(
                "{} gamma_pref={} p={}: true take-up {:.4} (se {:.4})",
                truth.algorithm, params.gamma_pref, params.p, truth.take_up.mean, truth.take_up.se
            ));
        }
    }
    emitter.write_table("counterfactual.csv", &table)?;
    Ok((true, lines))
}

fn load_instance(config: &RunConfig) -> anyhow::Result<TheoryInstance> {
    let th = &config.theory;
    let graph_path = th
        .graph
        .as_ref()
        .context("the theory command needs `graph = PATH` (an `i j w` edge list)")?;
    let text = std::fs::read_to_string(graph_path)
        .with_context(|| format!("cannot read graph {}", graph_path.display()))?;
    let weights = parse_edge_list(&text, None)?;
    let clusters = match &th.clusters {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read clusters {}", path.display()))?;
            Some(parse_clusters(&text, weights.len())?)
        }
        None => None,
    };
    let inst = TheoryInstance {
        weights,
        gamma: th.gamma,
        beta: th.beta,
        delta: th.delta,
        corpus_size: th.corpus_size,
        clusters,
        p: config.params.p,
    };
    inst.validate()?;
    Ok(inst)
}

fn theory(config: &RunConfig, emitter: &mut Emitter) -> anyhow::Result<(bool, Vec<String>)> {
    let inst = load_instance(config)?;
    let mut table = Table::new(&THEORY_COLUMNS);
    let mut lines = Vec::new();
    for design in DesignKind::ALL {
        if design == DesignKind::ClusterRandomized && inst.clusters.is_none() {
            log::warn!("no clusters given; skipping the clustered design");
            continue;
        }
        let closed = bias_closed_form(&inst, design)?;
        let brute = brute_force_bias(&inst, design)?;
        table.push(vec![
            design.name().to_string(),
            fmt_f64(closed),
            fmt_f64(brute),
            fmt_f64((closed - brute).abs()),
        ]);
        lines.push(format!("{design}: closed form {closed:.6}, enumeration {brute:.6}"));
    }
    let mut quantities = Table::new(&["quantity", "value"]);
    let tte = compute_tte(&inst);
    quantities.push(vec!["tte".into(), fmt_f64(tte)]);
    lines.push(format!("tte: {tte:.6}"));
    if let Some(labels) = &inst.clusters {
        let gap = design_bias_gap(&inst)?;
        let cut = cluster_cut_quality(&inst.weights, labels)?;
        quantities.push(vec!["design_bias_gap".into(), fmt_f64(gap)]);
        quantities.push(vec!["cluster_cut_quality".into(), fmt_f64(cut)]);
        lines.push(format!("data-diverted minus clustered bias: {gap:.6}"));
        lines.push(format!("cut quality: {cut:.6}"));
    }
    emitter.write_table("theory.csv", &table)?;
    emitter.write_table("theory_quantities.csv", &quantities)?;
    Ok((true, lines))
}

fn verify(config: &RunConfig, emitter: &mut Emitter) -> anyhow::Result<(bool, Vec<String>)> {
    let th = &config.theory;
    let report = verify_random_instances(th.verify_instances, config.params.seed, th.verify_tolerance)?;
    let mut table = Table::new(&["instance", "design", "closed_form", "brute_force", "abs_diff"]);
    for check in &report.checks {
        table.push(vec![
            check.instance.to_string(),
            check.design.name().to_string(),
            fmt_f64(check.closed_form),
            fmt_f64(check.brute_force),
            fmt_f64(check.abs_diff()),
        ]);
    }
    emitter.write_table("verify.csv", &table)?;
    let mut lines = vec![
        format!(
            "{} instances, {} checks, max |closed form - enumeration| = {:.3e} (tolerance {:.1e})",
            th.verify_instances,
            report.checks.len(),
            report.max_oracle_error(),
            report.tolerance
        ),
        format!("max gap identity error {:.3e}", report.max_gap_error),
        format!("max linearity error {:.3e}", report.max_linearity_error),
    ];
    for v in report.violations() {
        lines.push(format!(
            "violation: instance {} {}: {} vs {}",
            v.instance, v.design, v.closed_form, v.brute_force
        ));
    }
    Ok((report.passed(), lines))
}
