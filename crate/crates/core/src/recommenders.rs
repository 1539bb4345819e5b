//! Ranking algorithms and the arm-scoped training data they learn from.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::designs::{data_scope, Arm, ExperimentPlan};
use crate::engine::log::InteractionLog;
use crate::error::{Error, Result};
use crate::population::PopulationModel;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecommenderKind {
    /// Ranks by expected true utility.
    Oracle,
    /// Ranks by i.i.d. uniform scores.
    Random,
    /// Item-based collaborative filter (cosine over item columns).
    ItemCf,
    /// User-based collaborative filter (cosine over user rows).
    UserCf,
}

impl RecommenderKind {
    pub const ALL: [RecommenderKind; 4] = [
        RecommenderKind::Oracle,
        RecommenderKind::Random,
        RecommenderKind::ItemCf,
        RecommenderKind::UserCf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RecommenderKind::Oracle => "Oracle",
            RecommenderKind::Random => "Random",
            RecommenderKind::ItemCf => "ItemCF",
            RecommenderKind::UserCf => "UserCF",
        }
    }

    /// Whether rankings depend on training data.
    pub fn learns(self) -> bool {
        matches!(self, RecommenderKind::ItemCf | RecommenderKind::UserCf)
    }
}

impl fmt::Display for RecommenderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RecommenderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "oracle" => Ok(RecommenderKind::Oracle),
            "random" => Ok(RecommenderKind::Random),
            "itemcf" | "item_cf" | "item" => Ok(RecommenderKind::ItemCf),
            "usercf" | "user_cf" | "user" => Ok(RecommenderKind::UserCf),
            other => Err(Error::param("algorithm", format!("unknown recommender `{other}`"))),
        }
    }
}

/// Binary user x item incidence visible to one arm's recommender.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMatrix {
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
    as_of: usize,
    scope: Arm,
}

impl TrainingMatrix {
    /// Matrix with the given `(user, item)` entries; duplicates are ignored.
    pub fn from_entries(
        n_users: usize,
        n_items: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
        as_of: usize,
        scope: Arm,
    ) -> Self {
        let mut rows = vec![Vec::new(); n_users];
        let mut cols = vec![Vec::new(); n_items];
        for (u, i) in entries {
            if !rows[u].contains(&i) {
                rows[u].push(i);
                cols[i].push(u);
            }
        }
        for col in cols.iter_mut() {
            col.sort_unstable();
        }
        Self {
            rows,
            cols,
            as_of,
            scope,
        }
    }

    pub fn n_users(&self) -> usize {
        self.rows.len()
    }

    pub fn n_items(&self) -> usize {
        self.cols.len()
    }

    /// Items consumed by `user`, in consumption order.
    pub fn row(&self, user: usize) -> &[usize] {
        &self.rows[user]
    }

    /// Users who consumed `item`, ascending.
    pub fn col(&self, item: usize) -> &[usize] {
        &self.cols[item]
    }

    pub fn contains(&self, user: usize, item: usize) -> bool {
        self.rows[user].contains(&item)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn as_of(&self) -> usize {
        self.as_of
    }

    pub fn scope(&self) -> Arm {
        self.scope
    }
}

/// Training data for `arm` made of records strictly before `as_of` that
/// pass the arm's data scope.
pub fn build_training_matrix(
    log: &InteractionLog,
    plan: &ExperimentPlan,
    arm: Arm,
    as_of: usize,
) -> Result<TrainingMatrix> {
    if log.n_users() != plan.n_users() || log.n_items() != plan.n_items() {
        return Err(Error::Configuration(format!(
            "log is {}x{} but plan is {}x{}",
            log.n_users(),
            log.n_items(),
            plan.n_users(),
            plan.n_items()
        )));
    }
    let scope = data_scope(plan, arm);
    let entries = log
        .records()
        .iter()
        .filter(|r| r.period < as_of && scope.accepts(r, plan))
        .map(|r| (r.user, r.item));
    let mut rows = vec![Vec::new(); log.n_users()];
    let mut cols = vec![Vec::new(); log.n_items()];
    // the log already guarantees unique (user, item) pairs
    for (u, i) in entries {
        rows[u].push(i);
        cols[i].push(u);
    }
    for col in cols.iter_mut() {
        col.sort_unstable();
    }
    Ok(TrainingMatrix {
        rows,
        cols,
        as_of,
        scope: arm,
    })
}

/// Reusable buffers for collaborative-filtering scores.
#[derive(Debug, Default)]
pub(crate) struct ScoreScratch {
    acc: Vec<f64>,
    mark: Vec<bool>,
    inv_sqrt_deg: Vec<f64>,
}

/// Scores `candidates` for `user`; `None` marks an item the recommender
/// knows nothing about (cold start).
///
/// * Oracle: `rho_u . v_i`, never unknown.
/// * Random: i.i.d. uniform on `[0, 1)`, never unknown.
/// * ItemCF: `sum_{j in consumed(u)} cos(col_i, col_j)`.
/// * UserCF: `sum_v cos(row_u, row_v) * R[v, i]`.
///
/// For both filters an item with an all-zero column is unknown, as is every
/// item when the user has no training history.
pub fn score_items(
    kind: RecommenderKind,
    matrix: &TrainingMatrix,
    population: &PopulationModel,
    user: usize,
    candidates: &[usize],
    rng: &mut SimRng,
) -> Vec<Option<f64>> {
    let mut scratch = ScoreScratch::default();
    let mut out = Vec::with_capacity(candidates.len());
    score_into(kind, matrix, population, user, candidates, rng, &mut scratch, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn score_into(
    kind: RecommenderKind,
    matrix: &TrainingMatrix,
    population: &PopulationModel,
    user: usize,
    candidates: &[usize],
    rng: &mut SimRng,
    scratch: &mut ScoreScratch,
    out: &mut Vec<Option<f64>>,
) {
    out.clear();
    match kind {
        RecommenderKind::Oracle => {
            out.extend(
                candidates
                    .iter()
                    .map(|&i| Some(population.mean_utility(user, i))),
            );
        }
        RecommenderKind::Random => {
            out.extend(candidates.iter().map(|_| Some(rng.random::<f64>())));
        }
        RecommenderKind::ItemCf => item_cf(matrix, user, candidates, scratch, out),
        RecommenderKind::UserCf => user_cf(matrix, user, candidates, scratch, out),
    }
}

fn reset(scratch: &mut ScoreScratch, n_items: usize) {
    scratch.acc.clear();
    scratch.acc.resize(n_items, 0.0);
    scratch.mark.clear();
    scratch.mark.resize(n_items, false);
}

/// `score_i = sum_v sim(u, v) R[v, i]` with `sim(u, v) = |R_u & R_v| / sqrt(|R_u| |R_v|)`.
fn user_cf(
    matrix: &TrainingMatrix,
    user: usize,
    candidates: &[usize],
    scratch: &mut ScoreScratch,
    out: &mut Vec<Option<f64>>,
) {
    let own = matrix.row(user);
    if own.is_empty() {
        out.extend(candidates.iter().map(|_| None));
        return;
    }
    reset(scratch, matrix.n_items());
    for &i in own {
        scratch.mark[i] = true;
    }
    let own_norm = (own.len() as f64).sqrt();
    for v in 0..matrix.n_users() {
        let row = matrix.row(v);
        let overlap = row.iter().filter(|&&i| scratch.mark[i]).count();
        if overlap == 0 {
            continue;
        }
        let sim = overlap as f64 / (own_norm * (row.len() as f64).sqrt());
        for &i in row {
            scratch.acc[i] += sim;
        }
    }
    out.extend(candidates.iter().map(|&i| {
        if matrix.col(i).is_empty() {
            None
        } else {
            Some(scratch.acc[i])
        }
    }));
}

/// `score_i = sum_{j in R_u} |C_i & C_j| / sqrt(|C_i| |C_j|)`, accumulated
/// through the users `v` that co-consumed: `score_i = |C_i|^-1/2 sum_{v in C_i} a_v`
/// with `a_v = sum_{j in R_u & R_v} |C_j|^-1/2`.
fn item_cf(
    matrix: &TrainingMatrix,
    user: usize,
    candidates: &[usize],
    scratch: &mut ScoreScratch,
    out: &mut Vec<Option<f64>>,
) {
    let own = matrix.row(user);
    if own.is_empty() {
        out.extend(candidates.iter().map(|_| None));
        return;
    }
    reset(scratch, matrix.n_items());
    scratch.inv_sqrt_deg.clear();
    scratch.inv_sqrt_deg.resize(matrix.n_items(), 0.0);
    for &j in own {
        scratch.mark[j] = true;
        scratch.inv_sqrt_deg[j] = 1.0 / (matrix.col(j).len() as f64).sqrt();
    }
    for v in 0..matrix.n_users() {
        let row = matrix.row(v);
        let weight: f64 = row
            .iter()
            .filter(|&&j| scratch.mark[j])
            .map(|&j| scratch.inv_sqrt_deg[j])
            .sum();
        if weight == 0.0 {
            continue;
        }
        for &i in row {
            scratch.acc[i] += weight;
        }
    }
    out.extend(candidates.iter().map(|&i| {
        let deg = matrix.col(i).len();
        if deg == 0 {
            None
        } else {
            Some(scratch.acc[i] / (deg as f64).sqrt())
        }
    }));
}

#[derive(Debug, Clone, Copy)]
struct Known {
    score: f64,
    item: usize,
}

impl PartialEq for Known {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Known {}

impl PartialOrd for Known {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Known {
    // max-heap order: higher score first, then lower item id
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.item.cmp(&self.item))
    }
}

/// Lazily produced ranking: known items by descending score (ties by
/// ascending id) with unknown items interleaved at uniformly random positions.
///
/// Each step emits an unknown item with probability `b / (a + b)` for `a`
/// known and `b` unknown items left, choosing which unknown uniformly. This
/// yields every interleaving and every order of the unknown items with equal
/// probability, the same distribution as inserting the unknown items one at a
/// time at a uniform position of the growing list.
pub struct Ranking<'a> {
    known: BinaryHeap<Known>,
    unknown: Vec<usize>,
    rng: &'a mut SimRng,
}

impl<'a> Ranking<'a> {
    pub fn new(
        candidates: &[usize],
        scores: &[Option<f64>],
        rng: &'a mut SimRng,
    ) -> Ranking<'a> {
        debug_assert_eq!(candidates.len(), scores.len());
        let mut known = Vec::with_capacity(candidates.len());
        let mut unknown = Vec::new();
        for (&item, score) in candidates.iter().zip(scores.iter()) {
            match score {
                Some(score) => known.push(Known {
                    score: *score,
                    item,
                }),
                None => unknown.push(item),
            }
        }
        Ranking {
            known: BinaryHeap::from(known),
            unknown,
            rng,
        }
    }

    fn take_unknown(&mut self) -> Option<usize> {
        let b = self.unknown.len();
        if b == 0 {
            return None;
        }
        let j = self.rng.random_range(0..b);
        Some(self.unknown.swap_remove(j))
    }
}

impl Iterator for Ranking<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let a = self.known.len();
        let b = self.unknown.len();
        if b == 0 {
            return self.known.pop().map(|k| k.item);
        }
        if a == 0 || self.rng.random_range(0..a + b) < b {
            return self.take_unknown();
        }
        self.known.pop().map(|k| k.item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.known.len() + self.unknown.len();
        (n, Some(n))
    }
}

/// Full ranking of `scored` items; see [`Ranking`].
pub fn rank_with_interleave(scored: &[(usize, Option<f64>)], rng: &mut SimRng) -> Vec<usize> {
    let items: Vec<usize> = scored.iter().map(|(i, _)| *i).collect();
    let scores: Vec<Option<f64>> = scored.iter().map(|(_, s)| *s).collect();
    Ranking::new(&items, &scores, rng).collect()
}
