//! The period loop, outcome computation and Monte Carlo aggregation.

pub mod log;
pub mod monte_carlo;
pub mod stats;

use crate::designs::{
    is_visible, make_assignment, AlgorithmPair, Arm, DesignKind, ExperimentPlan,
};
use crate::error::{Error, Result};
use crate::params::SimParams;
use crate::population::{perceived_utility, rank_discount, PopulationModel};
use crate::recommenders::{
    build_training_matrix, score_into, Ranking, RecommenderKind, ScoreScratch, TrainingMatrix,
};
use crate::rng::{stream, Phase, SimRng};

use self::log::{InteractionLog, Record};

/// Picks the item a user consumes from a full ranking, if any.
///
/// Perceived utility is `util * rank^-d`; the best item is taken when it
/// beats the user's reserve, ties going to the better rank.
pub fn consume_step(
    user: usize,
    ranked: &[usize],
    population: &PopulationModel,
    d: f64,
) -> Option<usize> {
    let reserve = population.reserve(user);
    let mut best: Option<(f64, usize)> = None;
    for (idx, &item) in ranked.iter().enumerate() {
        let perceived = perceived_utility(population.utility(user, item), idx + 1, d)
            .expect("ranks are 1-based and d was validated");
        if perceived > best.map_or(f64::NEG_INFINITY, |b| b.0) {
            best = Some((perceived, item));
        }
    }
    best.filter(|b| b.0 > reserve).map(|b| b.1)
}

/// Same decision as [`consume_step`], reading the ranking lazily.
///
/// Stops once `max_utility * rank^-d` cannot beat the best perceived
/// utility so far (or the reserve), which is exact because true utilities
/// are bounded by the user's maximum.
fn consume_lazily(
    user: usize,
    ranking: impl Iterator<Item = usize>,
    population: &PopulationModel,
    discounts: &[f64],
) -> Option<usize> {
    let ceiling = population.max_utility(user);
    let mut threshold = population.reserve(user);
    let mut best = None;
    for (item, &discount) in ranking.zip(discounts.iter()) {
        if ceiling * discount <= threshold {
            break;
        }
        let perceived = population.utility(user, item) * discount;
        if perceived > threshold {
            threshold = perceived;
            best = Some(item);
        }
    }
    best
}

/// Fraction of `periods` in which each user consumed something.
pub fn take_up_rates(log: &InteractionLog, periods: usize) -> Vec<f64> {
    take_up_between(log, 1, periods)
}

/// Take-up over the periods `first..=last`.
pub fn take_up_between(log: &InteractionLog, first: usize, last: usize) -> Vec<f64> {
    let mut counts = vec![0usize; log.n_users()];
    for r in log.records() {
        if (first..=last).contains(&r.period) {
            counts[r.user] += 1;
        }
    }
    let span = (last + 1).saturating_sub(first).max(1) as f64;
    counts.into_iter().map(|c| c as f64 / span).collect()
}

/// Difference between the treated and control means of `outcomes`.
pub fn estimate_tte(outcomes: &[f64], arms: &[Arm]) -> Result<f64> {
    let (t, c) = arm_means(outcomes, arms)?;
    Ok(t - c)
}

/// Treated and control means of `outcomes`.
pub fn arm_means(outcomes: &[f64], arms: &[Arm]) -> Result<(f64, f64)> {
    if outcomes.len() != arms.len() {
        return Err(Error::Estimation(format!(
            "{} outcomes for {} arm labels",
            outcomes.len(),
            arms.len()
        )));
    }
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for (&y, &arm) in outcomes.iter().zip(arms.iter()) {
        let k = usize::from(!arm.is_treated());
        sums[k] += y;
        counts[k] += 1;
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::Estimation(format!(
            "empty arm ({} treated, {} control)",
            counts[0], counts[1]
        )));
    }
    Ok((sums[0] / counts[0] as f64, sums[1] / counts[1] as f64))
}

/// Data-scope audit of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Audit {
    /// Post-randomization records where user arm and item arm differ (co-diversion only).
    pub cross_arm_records: usize,
    /// Entries in a diverted training matrix that came from another arm's
    /// post-randomization consumption.
    pub leaked_training_entries: usize,
    /// Diverted training matrices inspected.
    pub matrices_checked: usize,
}

impl Audit {
    pub fn is_clean(&self) -> bool {
        self.cross_arm_records == 0 && self.leaked_training_entries == 0
    }

    pub fn merge(&mut self, other: &Audit) {
        self.cross_arm_records += other.cross_arm_records;
        self.leaked_training_entries += other.leaked_training_entries;
        self.matrices_checked += other.matrices_checked;
    }
}

/// Outcome of one simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub take_up: Vec<f64>,
    pub user_arm: Vec<Arm>,
    pub tte_hat: f64,
    /// (treated mean, control mean) of take-up.
    pub arm_means: (f64, f64),
    pub design: DesignKind,
    pub algorithms: AlgorithmPair,
    /// Parameters of the run, `seed` being the replication seed.
    pub params: SimParams,
    pub consumptions: usize,
    pub audit: Audit,
}

impl RunResult {
    pub fn seed(&self) -> u64 {
        self.params.seed
    }

    /// Mean take-up over all users.
    pub fn pooled_take_up(&self) -> f64 {
        self.take_up.iter().sum::<f64>() / self.take_up.len() as f64
    }
}

fn check_compatible(params: &SimParams, plan: &ExperimentPlan, pop: &PopulationModel) -> Result<()> {
    params.validate()?;
    if plan.n_users() != pop.n_users() || plan.n_items() != pop.n_items() {
        return Err(Error::Configuration(format!(
            "plan covers {}x{} but population is {}x{}",
            plan.n_users(),
            plan.n_items(),
            pop.n_users(),
            pop.n_items()
        )));
    }
    if pop.n_users() != params.n_users || pop.n_items() != params.n_items {
        return Err(Error::Configuration(
            "population size differs from the parameters".into(),
        ));
    }
    if plan.randomized_at != params.t_init {
        return Err(Error::Configuration(format!(
            "plan randomizes after period {} but t_init = {}",
            plan.randomized_at, params.t_init
        )));
    }
    if (0..pop.n_items()).any(|i| pop.release_period(i) > params.periods) {
        return Err(Error::Configuration("items released after the last period".into()));
    }
    Ok(())
}

/// Training matrices in force for each arm.
struct ArmModels {
    treatment: TrainingMatrix,
    control: Option<TrainingMatrix>,
}

impl ArmModels {
    fn for_arm(&self, arm: Arm) -> &TrainingMatrix {
        match (arm, &self.control) {
            (Arm::Control, Some(m)) => m,
            _ => &self.treatment,
        }
    }
}

/// Runs the period loop of one experiment.
///
/// Each period releases its items, retrains (first post-randomization
/// period, then every `f` periods), and lets every user in turn rank their
/// visible unconsumed items and consume at most one. Rankings are random
/// through `t_init`; afterwards each user gets their arm's recommender, with
/// cold-start items interleaved at random positions.
pub fn run_experiment(
    params: &SimParams,
    plan: &ExperimentPlan,
    population: &PopulationModel,
    rng: &mut SimRng,
) -> Result<RunResult> {
    run_experiment_logged(params, plan, population, rng).map(|(result, _)| result)
}

/// As [`run_experiment`], also returning the interaction log.
pub fn run_experiment_logged(
    params: &SimParams,
    plan: &ExperimentPlan,
    population: &PopulationModel,
    rng: &mut SimRng,
) -> Result<(RunResult, InteractionLog)> {
    check_compatible(params, plan, population)?;
    let n_users = population.n_users();
    let n_items = population.n_items();
    let diverted = plan.design.diverts_data();
    let discounts: Vec<f64> = (1..=n_items).map(|r| rank_discount(r, params.d)).collect();

    let mut log = InteractionLog::new(n_users, n_items);
    let mut consumed_at = vec![0usize; n_users * n_items];
    let mut available: Vec<usize> = Vec::with_capacity(n_items);
    let mut models: Option<ArmModels> = None;
    let mut audit = Audit::default();
    let mut scratch = ScoreScratch::default();
    let mut candidates = Vec::with_capacity(n_items);
    let mut scores = Vec::with_capacity(n_items);

    for t in 1..=params.periods {
        available.extend_from_slice(population.released_in(t));

        let randomized = t > params.t_init;
        if randomized && (t - params.t_init - 1).is_multiple_of(params.f) {
            let treatment = build_training_matrix(&log, plan, Arm::Treatment, t)?;
            let control = if diverted {
                Some(build_training_matrix(&log, plan, Arm::Control, t)?)
            } else {
                None
            };
            if diverted {
                for m in [Some(&treatment), control.as_ref()].into_iter().flatten() {
                    audit.leaked_training_entries += audit_matrix(m, plan, &consumed_at, n_items);
                    audit.matrices_checked += 1;
                }
            }
            models = Some(ArmModels { treatment, control });
        }

        for user in 0..n_users {
            candidates.clear();
            candidates.extend(available.iter().copied().filter(|&item| {
                !log.has_consumed(user, item) && is_visible(plan, user, item, t)
            }));
            if candidates.is_empty() {
                continue;
            }
            let arm = plan.arm_of(user);
            let (kind, matrix) = match (&models, randomized) {
                (Some(models), true) => (plan.algorithm_for(arm), Some(models.for_arm(arm))),
                _ => (RecommenderKind::Random, None),
            };
            match matrix {
                // an all-unknown ranking is a uniform permutation drawn lazily,
                // the same distribution as sorting i.i.d. uniform scores
                _ if kind == RecommenderKind::Random => {
                    scores.clear();
                    scores.resize(candidates.len(), None);
                }
                Some(matrix) => score_into(
                    kind,
                    matrix,
                    population,
                    user,
                    &candidates,
                    rng,
                    &mut scratch,
                    &mut scores,
                ),
                None => unreachable!("rankings before training are random"),
            }
            let ranking = Ranking::new(&candidates, &scores, rng);
            if let Some(item) = consume_lazily(user, ranking, population, &discounts) {
                log.push(Record {
                    user,
                    item,
                    period: t,
                    arm: randomized.then_some(arm),
                })?;
                consumed_at[user * n_items + item] = t;
            }
        }
    }

    audit.cross_arm_records = audit_cross_arm(&log, plan);
    let take_up = if params.post_randomization_only {
        take_up_between(&log, params.t_init + 1, params.periods)
    } else {
        take_up_rates(&log, params.periods)
    };
    let arm_means = arm_means(&take_up, &plan.user_arm)?;
    let result = RunResult {
        tte_hat: arm_means.0 - arm_means.1,
        arm_means,
        user_arm: plan.user_arm.clone(),
        take_up,
        design: plan.design,
        algorithms: plan.algorithms,
        params: params.clone(),
        consumptions: log.len(),
        audit,
    };
    Ok((result, log))
}

/// Entries of `matrix` from users of the other arm consumed after randomization.
fn audit_matrix(
    matrix: &TrainingMatrix,
    plan: &ExperimentPlan,
    consumed_at: &[usize],
    n_items: usize,
) -> usize {
    let arm = matrix.scope();
    let mut leaks = 0;
    for user in 0..matrix.n_users() {
        if plan.arm_of(user) == arm {
            continue;
        }
        leaks += matrix
            .row(user)
            .iter()
            .filter(|&&item| consumed_at[user * n_items + item] > plan.randomized_at)
            .count();
    }
    leaks
}

fn audit_cross_arm(log: &InteractionLog, plan: &ExperimentPlan) -> usize {
    let Some(item_arm) = &plan.item_arm else {
        return 0;
    };
    log.records()
        .iter()
        .filter(|r| r.period > plan.randomized_at && plan.user_arm[r.user] != item_arm[r.item])
        .count()
}

/// Randomizes `population` under `design` and runs it with seed `run_seed`.
pub fn run_on_population(
    params: &SimParams,
    population: &PopulationModel,
    design: DesignKind,
    algorithms: AlgorithmPair,
    run_seed: u64,
) -> Result<RunResult> {
    let mut assignment_rng = stream(run_seed, Phase::Assignment);
    let plan = make_assignment(
        design,
        population,
        params.p,
        algorithms,
        params.t_init,
        &mut assignment_rng,
    )?;
    let mut runtime_rng = stream(run_seed, Phase::Runtime);
    let run_params = SimParams {
        seed: run_seed,
        ..params.clone()
    };
    run_experiment(&run_params, &plan, population, &mut runtime_rng)
}

/// Generates a population from `seed` and runs one experiment on it.
pub fn run_replication(
    params: &SimParams,
    design: DesignKind,
    algorithms: AlgorithmPair,
    seed: u64,
) -> Result<RunResult> {
    let population = PopulationModel::generate(params, seed)?;
    run_on_population(params, &population, design, algorithms, seed)
}
