//! Replicated experiments and their bias against the true counterfactual.
//!
//! The true take-up of an algorithm is measured by a naive experiment that
//! runs it in both arms. Those runs use seeds derived from
//! `base_seed ^ COUNTERFACTUAL_SALT` so they are independent of the
//! comparison runs. Replication `r` of a comparison uses the population
//! seeded by `base_seed ^ r`, shared by every design and algorithm pair
//! (common random numbers).

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::stats::Summary;
use super::{run_replication, Audit, RunResult};
use crate::designs::{AlgorithmPair, DesignKind};
use crate::error::{Error, Result};
use crate::params::SimParams;
use crate::recommenders::RecommenderKind;
use crate::rng::{replication_seed, COUNTERFACTUAL_SALT};

/// Runs replications `0..replications` in parallel, returned in index order.
pub fn replicate<F>(replications: usize, f: F) -> Result<Vec<RunResult>>
where
    F: Fn(u64) -> Result<RunResult> + Sync + Send,
{
    (0..replications as u64).into_par_iter().map(f).collect()
}

/// Pooled take-up of an algorithm when every user receives it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthEstimate {
    pub algorithm: RecommenderKind,
    pub take_up: Summary,
}

/// Measures the true take-up of `algorithm` with `replications` naive
/// experiments that run it in both arms.
pub fn true_counterfactual(
    params: &SimParams,
    algorithm: RecommenderKind,
    replications: usize,
    base_seed: u64,
) -> Result<TruthEstimate> {
    if replications == 0 {
        return Err(Error::param("replications", "at least one replication is needed"));
    }
    let base = base_seed ^ COUNTERFACTUAL_SALT;
    let runs = replicate(replications, |r| {
        run_replication(
            params,
            DesignKind::Naive,
            AlgorithmPair::same(algorithm),
            replication_seed(base, r),
        )
    })?;
    let pooled: Vec<f64> = runs.iter().map(RunResult::pooled_take_up).collect();
    Ok(TruthEstimate {
        algorithm,
        take_up: Summary::of(&pooled),
    })
}

/// True counterfactuals keyed by algorithm.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TruthTable {
    entries: BTreeMap<RecommenderKind, TruthEstimate>,
}

impl TruthTable {
    pub fn compute(
        params: &SimParams,
        algorithms: impl IntoIterator<Item = RecommenderKind>,
        replications: usize,
        base_seed: u64,
    ) -> Result<Self> {
        let mut table = Self::default();
        for algorithm in algorithms {
            if let std::collections::btree_map::Entry::Vacant(slot) = table.entries.entry(algorithm) {
                slot.insert(true_counterfactual(params, algorithm, replications, base_seed)?);
            }
        }
        Ok(table)
    }

    pub fn get(&self, algorithm: RecommenderKind) -> Option<&TruthEstimate> {
        self.entries.get(&algorithm)
    }

    pub fn insert(&mut self, truth: TruthEstimate) {
        self.entries.insert(truth.algorithm, truth);
    }

    pub fn iter(&self) -> impl Iterator<Item = &TruthEstimate> {
        self.entries.values()
    }
}

/// Per-replication outcome of a comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationRow {
    pub replication: u64,
    pub seed: u64,
    pub take_up_t: f64,
    pub take_up_c: f64,
    pub tte_hat: f64,
}

/// Monte Carlo summary of one design and algorithm pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    pub design: DesignKind,
    pub algorithms: AlgorithmPair,
    pub params: SimParams,
    pub rows: Vec<ReplicationRow>,
    pub truth_t: Summary,
    pub truth_c: Summary,
    pub take_up_t: Summary,
    pub take_up_c: Summary,
    pub tte: Summary,
    /// Treated-arm take-up minus the treatment algorithm's truth.
    pub bias_t: Summary,
    /// Control-arm take-up minus the control algorithm's truth.
    pub bias_c: Summary,
    /// Estimated TTE minus the true TTE.
    pub bias_tte: Summary,
    pub audit: Audit,
}

impl BiasReport {
    pub fn replications(&self) -> usize {
        self.rows.len()
    }

    /// Mean of the absolute arm-level and TTE biases.
    pub fn mean_abs_bias(&self) -> f64 {
        (self.bias_t.mean.abs() + self.bias_c.mean.abs() + self.bias_tte.mean.abs()) / 3.0
    }

    pub fn true_tte(&self) -> Summary {
        self.truth_t.minus(&self.truth_c)
    }
}

/// Replicates `design` with `algorithms` and measures bias against freshly
/// computed true counterfactuals (same replication count, independent seeds).
pub fn monte_carlo(
    params: &SimParams,
    design: DesignKind,
    algorithms: AlgorithmPair,
    replications: usize,
) -> Result<BiasReport> {
    let truths = TruthTable::compute(
        params,
        [algorithms.treatment, algorithms.control],
        replications,
        params.seed,
    )?;
    monte_carlo_with_truths(params, design, algorithms, replications, &truths)
}

/// As [`monte_carlo`], reusing precomputed truths.
pub fn monte_carlo_with_truths(
    params: &SimParams,
    design: DesignKind,
    algorithms: AlgorithmPair,
    replications: usize,
    truths: &TruthTable,
) -> Result<BiasReport> {
    if replications < 2 {
        return Err(Error::param("replications", "need at least 2 for a standard error"));
    }
    let truth = |kind: RecommenderKind| {
        truths
            .get(kind)
            .map(|t| t.take_up)
            .ok_or_else(|| Error::Configuration(format!("no true counterfactual for {kind}")))
    };
    let truth_t = truth(algorithms.treatment)?;
    let truth_c = truth(algorithms.control)?;

    let runs = replicate(replications, |r| {
        run_replication(params, design, algorithms, replication_seed(params.seed, r))
    })?;
    Ok(summarize(design, algorithms, params, &runs, truth_t, truth_c))
}

/// Aggregates finished runs (in replication order) into a report.
pub fn summarize(
    design: DesignKind,
    algorithms: AlgorithmPair,
    params: &SimParams,
    runs: &[RunResult],
    truth_t: Summary,
    truth_c: Summary,
) -> BiasReport {
    let rows: Vec<ReplicationRow> = runs
        .iter()
        .enumerate()
        .map(|(r, run)| ReplicationRow {
            replication: r as u64,
            seed: run.seed(),
            take_up_t: run.arm_means.0,
            take_up_c: run.arm_means.1,
            tte_hat: run.tte_hat,
        })
        .collect();
    let column = |f: fn(&ReplicationRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let take_up_t = Summary::of(&column(|r| r.take_up_t));
    let take_up_c = Summary::of(&column(|r| r.take_up_c));
    let tte = Summary::of(&column(|r| r.tte_hat));
    let mut audit = Audit::default();
    for run in runs {
        audit.merge(&run.audit);
    }
    BiasReport {
        design,
        algorithms,
        params: params.clone(),
        bias_t: take_up_t.minus(&truth_t),
        bias_c: take_up_c.minus(&truth_c),
        bias_tte: tte.minus(&truth_t.minus(&truth_c)),
        rows,
        truth_t,
        truth_c,
        take_up_t,
        take_up_c,
        tte,
        audit,
    }
}
