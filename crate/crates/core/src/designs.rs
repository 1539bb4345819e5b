//! Experiment designs: who is treated, what they can see, and which
//! interaction records each arm's recommender may learn from.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::engine::log::Record;
use crate::error::{Error, Result};
use crate::population::PopulationModel;
use crate::recommenders::RecommenderKind;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    Treatment,
    Control,
}

impl Arm {
    pub fn is_treated(self) -> bool {
        self == Arm::Treatment
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::Treatment => Arm::Control,
            Arm::Control => Arm::Treatment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignKind {
    /// User-level randomization, one shared training pool.
    Naive,
    /// Whole user clusters randomized, one shared training pool.
    ClusterRandomized,
    /// User-level randomization, each arm trains on its own users' data.
    DataDiverted,
    /// Users and items randomized; users only see same-arm items.
    UserCorpusCoDiverted,
}

impl DesignKind {
    pub const ALL: [DesignKind; 4] = [
        DesignKind::Naive,
        DesignKind::ClusterRandomized,
        DesignKind::DataDiverted,
        DesignKind::UserCorpusCoDiverted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DesignKind::Naive => "naive",
            DesignKind::ClusterRandomized => "clustered",
            DesignKind::DataDiverted => "data_diverted",
            DesignKind::UserCorpusCoDiverted => "co_diverted",
        }
    }

    /// Whether each arm trains only on its own post-randomization data.
    pub fn diverts_data(self) -> bool {
        matches!(
            self,
            DesignKind::DataDiverted | DesignKind::UserCorpusCoDiverted
        )
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" | "independent" => Ok(DesignKind::Naive),
            "clustered" | "cluster" | "cluster_randomized" => Ok(DesignKind::ClusterRandomized),
            "data_diverted" | "diverted" | "div" => Ok(DesignKind::DataDiverted),
            "co_diverted" | "codiverted" | "user_corpus_co_diverted" | "codiv" => {
                Ok(DesignKind::UserCorpusCoDiverted)
            }
            other => Err(Error::param("design", format!("unknown design `{other}`"))),
        }
    }
}

/// Treatment and control recommenders of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AlgorithmPair {
    pub treatment: RecommenderKind,
    pub control: RecommenderKind,
}

impl AlgorithmPair {
    pub fn new(treatment: RecommenderKind, control: RecommenderKind) -> Self {
        Self { treatment, control }
    }

    /// Both arms run `kind`.
    pub fn same(kind: RecommenderKind) -> Self {
        Self::new(kind, kind)
    }

    pub fn for_arm(&self, arm: Arm) -> RecommenderKind {
        match arm {
            Arm::Treatment => self.treatment,
            Arm::Control => self.control,
        }
    }
}

impl fmt::Display for AlgorithmPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.treatment, self.control)
    }
}

impl FromStr for AlgorithmPair {
    type Err = Error;

    /// Parses `treatment/control`, e.g. `UserCF/Random`.
    fn from_str(s: &str) -> Result<Self> {
        let (t, c) = s
            .split_once('/')
            .ok_or_else(|| Error::param("pair", format!("`{s}` is not `treatment/control`")))?;
        Ok(Self::new(t.parse()?, c.parse()?))
    }
}

/// Arm assignments and algorithm pair of one experiment. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub design: DesignKind,
    pub user_arm: Vec<Arm>,
    /// Present only for co-diverted designs.
    pub item_arm: Option<Vec<Arm>>,
    /// Present only for cluster-randomized designs.
    pub cluster_of: Option<Vec<usize>>,
    pub p: f64,
    pub algorithms: AlgorithmPair,
    /// Last pre-randomization period; designs take effect from the next one.
    pub randomized_at: usize,
    n_items: usize,
}

impl ExperimentPlan {
    pub fn n_users(&self) -> usize {
        self.user_arm.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn arm_of(&self, user: usize) -> Arm {
        self.user_arm[user]
    }

    pub fn algorithm_for(&self, arm: Arm) -> RecommenderKind {
        self.algorithms.for_arm(arm)
    }

    pub fn count(&self, arm: Arm) -> usize {
        self.user_arm.iter().filter(|&&a| a == arm).count()
    }

    /// Builds a plan from explicit assignments, checking their shapes.
    #[allow(clippy::too_many_arguments)]
    pub fn from_assignments(
        design: DesignKind,
        user_arm: Vec<Arm>,
        item_arm: Option<Vec<Arm>>,
        cluster_of: Option<Vec<usize>>,
        p: f64,
        algorithms: AlgorithmPair,
        randomized_at: usize,
        n_items: usize,
    ) -> Result<Self> {
        if (design == DesignKind::UserCorpusCoDiverted) != item_arm.is_some() {
            return Err(Error::Configuration(
                "item arms must be given exactly for co-diverted designs".into(),
            ));
        }
        if let Some(items) = &item_arm {
            if items.len() != n_items {
                return Err(Error::Configuration(format!(
                    "{} item arms for {n_items} items",
                    items.len()
                )));
            }
        }
        if let Some(clusters) = &cluster_of {
            if clusters.len() != user_arm.len() {
                return Err(Error::Configuration("cluster labels do not cover every user".into()));
            }
        }
        Ok(Self {
            design,
            user_arm,
            item_arm,
            cluster_of,
            p,
            algorithms,
            randomized_at,
            n_items,
        })
    }
}

/// Completely randomized assignment of `floor(p * n)` of `n` units to treatment.
fn complete_randomization(n: usize, p: f64, rng: &mut SimRng) -> Vec<Arm> {
    let treated = (p * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut arms = vec![Arm::Control; n];
    for &unit in &order[..treated] {
        arms[unit] = Arm::Treatment;
    }
    arms
}

fn check_nonempty(what: &str, arms: &[Arm]) -> Result<()> {
    let treated = arms.iter().filter(|a| a.is_treated()).count();
    if treated == 0 || treated == arms.len() {
        return Err(Error::Configuration(format!(
            "split leaves one arm without {what} ({treated} of {} treated)",
            arms.len()
        )));
    }
    Ok(())
}

/// Randomizes users (and items, or clusters) for `design`.
///
/// Counts are fixed: `floor(p * n_users)` treated users, `floor(p * K)`
/// treated clusters of the ground-truth user labels, and for co-diversion
/// `floor(p * n_items)` treated items.
pub fn make_assignment(
    design: DesignKind,
    population: &PopulationModel,
    p: f64,
    algorithms: AlgorithmPair,
    randomized_at: usize,
    rng: &mut SimRng,
) -> Result<ExperimentPlan> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", format!("{p} not in (0, 1)")));
    }
    let n_users = population.n_users();
    let n_items = population.n_items();
    let (user_arm, item_arm, cluster_of) = match design {
        DesignKind::Naive | DesignKind::DataDiverted => {
            let arms = complete_randomization(n_users, p, rng);
            check_nonempty("users", &arms)?;
            (arms, None, None)
        }
        DesignKind::ClusterRandomized => {
            let k = population.n_user_clusters();
            if k < 2 {
                return Err(Error::Configuration(format!(
                    "cluster randomization needs at least 2 clusters, got {k}"
                )));
            }
            let exact = p * k as f64;
            if exact.fract() != 0.0 {
                log::warn!("p * K = {exact} is not integral; treating floor({exact}) clusters");
            }
            let cluster_arms = complete_randomization(k, p, rng);
            check_nonempty("clusters", &cluster_arms)?;
            let labels: Vec<usize> = (0..n_users).map(|u| population.user_cluster(u)).collect();
            let arms: Vec<Arm> = labels.iter().map(|&c| cluster_arms[c]).collect();
            check_nonempty("users", &arms)?;
            (arms, None, Some(labels))
        }
        DesignKind::UserCorpusCoDiverted => {
            let users = complete_randomization(n_users, p, rng);
            check_nonempty("users", &users)?;
            let items = complete_randomization(n_items, p, rng);
            check_nonempty("items", &items)?;
            (users, Some(items), None)
        }
    };
    ExperimentPlan::from_assignments(
        design,
        user_arm,
        item_arm,
        cluster_of,
        p,
        algorithms,
        randomized_at,
        n_items,
    )
}

/// Whether `user` may see `item` in `period`.
#[inline]
pub fn is_visible(plan: &ExperimentPlan, user: usize, item: usize, period: usize) -> bool {
    match &plan.item_arm {
        Some(items) if period > plan.randomized_at => items[item] == plan.user_arm[user],
        _ => true,
    }
}

/// Items of `available` that `user` can see in `period`.
pub fn visible_items(
    plan: &ExperimentPlan,
    user: usize,
    available: &[usize],
    period: usize,
) -> Vec<usize> {
    available
        .iter()
        .copied()
        .filter(|&item| is_visible(plan, user, item, period))
        .collect()
}

/// Which interaction records an arm's recommender may train on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataScope {
    arm: Arm,
    diverted: bool,
    randomized_at: usize,
}

impl DataScope {
    pub fn arm(&self) -> Arm {
        self.arm
    }

    /// Whether the scope sees every record (shared training pool).
    pub fn is_shared(&self) -> bool {
        !self.diverted
    }

    #[inline]
    pub fn accepts(&self, record: &Record, plan: &ExperimentPlan) -> bool {
        !self.diverted
            || record.period <= self.randomized_at
            || plan.user_arm[record.user] == self.arm
    }
}

/// Training-data scope of `arm` under `plan`.
///
/// Shared-pool designs accept everything. Diverted designs accept
/// pre-randomization records plus records of the arm's own users.
pub fn data_scope(plan: &ExperimentPlan, arm: Arm) -> DataScope {
    DataScope {
        arm,
        diverted: plan.design.diverts_data(),
        randomized_at: plan.randomized_at,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SimParams;
    use crate::rng::{stream, Phase};

    fn population(n_users: usize, n_items: usize) -> PopulationModel {
        let params = SimParams {
            n_users,
            n_items,
            ..Default::default()
        };
        PopulationModel::generate(&params, 3).unwrap()
    }

    fn plan_for(design: DesignKind, pop: &PopulationModel, p: f64, seed: u64) -> ExperimentPlan {
        let mut rng = stream(seed, Phase::Assignment);
        make_assignment(
            design,
            pop,
            p,
            AlgorithmPair::same(RecommenderKind::Random),
            10,
            &mut rng,
        )
        .unwrap()
    }

    #[test]
    fn arm_counts_are_fixed() {
        let pop = population(100, 1000);
        for seed in 0..5 {
            let naive = plan_for(DesignKind::Naive, &pop, 0.5, seed);
            assert_eq!(naive.count(Arm::Treatment), 50);
            let codiv = plan_for(DesignKind::UserCorpusCoDiverted, &pop, 0.9, seed);
            assert_eq!(codiv.count(Arm::Treatment), 90);
            let items = codiv.item_arm.as_ref().unwrap();
            assert_eq!(items.iter().filter(|a| a.is_treated()).count(), 900);
            let dd = plan_for(DesignKind::DataDiverted, &pop, 0.3, seed);
            assert_eq!(dd.count(Arm::Treatment), 30);
        }
    }

    #[test]
    fn clusters_share_arms() {
        let pop = population(100, 1000);
        for seed in 0..5 {
            let plan = plan_for(DesignKind::ClusterRandomized, &pop, 0.5, seed);
            let labels = plan.cluster_of.as_ref().unwrap();
            let mut cluster_arm: [Option<Arm>; 10] = [None; 10];
            for (u, &c) in labels.iter().enumerate() {
                match cluster_arm[c] {
                    None => cluster_arm[c] = Some(plan.arm_of(u)),
                    Some(a) => assert_eq!(a, plan.arm_of(u)),
                }
            }
            // 5 of the 10 labels are treated; occupied ones show that
            let treated_labels: Vec<usize> = (0..10)
                .filter(|&c| cluster_arm[c] == Some(Arm::Treatment))
                .collect();
            assert!(treated_labels.len() <= 5);
        }
    }

    #[test]
    fn cluster_design_needs_two_clusters() {
        let params = SimParams {
            n_users: 20,
            n_items: 100,
            n_user_clusters: 1,
            ..Default::default()
        };
        let pop = PopulationModel::generate(&params, 1).unwrap();
        let mut rng = stream(0, Phase::Assignment);
        let err = make_assignment(
            DesignKind::ClusterRandomized,
            &pop,
            0.5,
            AlgorithmPair::same(RecommenderKind::Random),
            10,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
    }

    #[test]
    fn visibility_rules() {
        let pop = population(10, 100);
        let naive = plan_for(DesignKind::Naive, &pop, 0.5, 1);
        let all: Vec<usize> = (0..100).collect();
        assert_eq!(visible_items(&naive, 0, &all, 50), all);

        let codiv = plan_for(DesignKind::UserCorpusCoDiverted, &pop, 0.5, 1);
        let items = codiv.item_arm.clone().unwrap();
        let treated_item = items.iter().position(|a| a.is_treated()).unwrap();
        let control_item = items.iter().position(|a| !a.is_treated()).unwrap();
        let treated_user = codiv.user_arm.iter().position(|a| a.is_treated()).unwrap();
        let available = vec![treated_item, control_item];
        assert_eq!(visible_items(&codiv, treated_user, &available, 11), vec![treated_item]);
        assert_eq!(visible_items(&codiv, treated_user, &available, 10), available);
    }

    #[test]
    fn scope_rules() {
        let pop = population(10, 100);
        let dd = plan_for(DesignKind::DataDiverted, &pop, 0.5, 2);
        let control_user = dd.user_arm.iter().position(|a| !a.is_treated()).unwrap();
        let late = Record {
            user: control_user,
            item: 0,
            period: 50,
            arm: Some(Arm::Control),
        };
        let early = Record {
            user: control_user,
            item: 1,
            period: 5,
            arm: None,
        };
        let t_scope = data_scope(&dd, Arm::Treatment);
        let c_scope = data_scope(&dd, Arm::Control);
        assert!(!t_scope.accepts(&late, &dd));
        assert!(c_scope.accepts(&late, &dd));
        assert!(t_scope.accepts(&early, &dd));
        assert!(c_scope.accepts(&early, &dd));

        let naive = plan_for(DesignKind::Naive, &pop, 0.5, 2);
        for arm in [Arm::Treatment, Arm::Control] {
            let scope = data_scope(&naive, arm);
            assert!(scope.accepts(&late, &naive) && scope.accepts(&early, &naive));
        }
    }

    #[test]
    fn names_round_trip() {
        for design in DesignKind::ALL {
            assert_eq!(design.name().parse::<DesignKind>().unwrap(), design);
        }
        let pair: AlgorithmPair = "UserCF/Random".parse().unwrap();
        assert_eq!(pair.treatment, RecommenderKind::UserCf);
        assert_eq!(pair.to_string(), "UserCF/Random");
        assert!("UserCF".parse::<AlgorithmPair>().is_err());
        assert!("bogus".parse::<DesignKind>().is_err());
    }
}
