//! Synthetic users and items.
//!
//! Users and items are points on the 10-simplex drawn from a symmetric
//! Dirichlet in which one of the first `n_clusters` coordinates has its
//! concentration multiplied by a boost factor. True utilities are Beta
//! draws centred on the preference/attribute inner product and are frozen
//! for the lifetime of a [`PopulationModel`].

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::error::{Error, Result};
use crate::params::{SimParams, DIM, UTILITY_CLAMP};
use crate::rng::{stream, Phase, SimRng};

/// A point on the simplex together with the cluster coordinate it was boosted on.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceVector {
    pub weights: [f64; DIM],
    pub cluster: usize,
}

impl PreferenceVector {
    pub fn dot(&self, other: &PreferenceVector) -> f64 {
        self.weights
            .iter()
            .zip(other.weights.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Unit vector on coordinate `k`.
    pub fn one_hot(k: usize) -> Self {
        let mut weights = [0.0; DIM];
        weights[k] = 1.0;
        Self { weights, cluster: k }
    }
}

/// Draws a preference vector from the cluster-boosted Dirichlet.
///
/// The label is uniform over `0..n_clusters`; the labelled coordinate gets
/// concentration `boost * concentration`, every other coordinate gets
/// `concentration`.
pub fn sample_preference_vector(
    concentration: f64,
    boost: f64,
    n_clusters: usize,
    rng: &mut SimRng,
) -> Result<PreferenceVector> {
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::param("concentration", format!("{concentration} must be > 0")));
    }
    if !(boost > 0.0 && boost.is_finite()) {
        return Err(Error::param("boost", format!("{boost} must be > 0")));
    }
    if n_clusters == 0 || n_clusters > DIM {
        return Err(Error::param("n_clusters", format!("{n_clusters} not in [1, {DIM}]")));
    }
    let cluster = rng.random_range(0..n_clusters);
    let mut alphas = [concentration; DIM];
    alphas[cluster] *= boost;
    Ok(PreferenceVector {
        weights: dirichlet(&alphas, rng),
        cluster,
    })
}

/// Dirichlet draw computed from log-gamma variates.
///
/// Small concentrations (0.01 for items) push gamma variates below the
/// smallest positive double, so shapes below one use
/// `ln G(a) = ln G(a + 1) + ln(U) / a` and the result is normalised with a
/// shifted exponent.
fn dirichlet(alphas: &[f64; DIM], rng: &mut SimRng) -> [f64; DIM] {
    let mut logs = [0.0; DIM];
    for (slot, &alpha) in logs.iter_mut().zip(alphas.iter()) {
        *slot = if alpha >= 1.0 {
            log_gamma_variate(alpha, rng)
        } else {
            let u: f64 = 1.0 - rng.random::<f64>();
            log_gamma_variate(alpha + 1.0, rng) + u.ln() / alpha
        };
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights = [0.0; DIM];
    let mut total = 0.0;
    for (w, l) in weights.iter_mut().zip(logs.iter()) {
        *w = (l - max).exp();
        total += *w;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    weights
}

fn log_gamma_variate(shape: f64, rng: &mut SimRng) -> f64 {
    let gamma = Gamma::new(shape, 1.0).expect("shape >= 1 is a valid gamma shape");
    gamma.sample(rng).ln()
}

/// Draws the true utility of an item with attribute `v` for a user with preference `rho`.
///
/// The Beta distribution is moment matched to mean `clamp(rho . v)` and
/// standard deviation `sigma`; when `sigma^2 >= mu (1 - mu)` no Beta
/// distribution has those moments and the mean is returned.
pub fn true_utility(
    rho: &PreferenceVector,
    v: &PreferenceVector,
    sigma: f64,
    rng: &mut SimRng,
) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("{sigma} must be > 0")));
    }
    Ok(beta_with_moments(rho.dot(v), sigma, rng))
}

fn beta_with_moments(raw_mean: f64, sigma: f64, rng: &mut SimRng) -> f64 {
    let mu = raw_mean.clamp(UTILITY_CLAMP, 1.0 - UTILITY_CLAMP);
    let var = sigma * sigma;
    let bound = mu * (1.0 - mu);
    if var >= bound {
        return mu;
    }
    let nu = bound / var - 1.0;
    match Beta::new(mu * nu, (1.0 - mu) * nu) {
        Ok(beta) => beta.sample(rng),
        Err(_) => mu,
    }
}

/// Utility a user perceives for an item shown at 1-based `rank`: `util * rank^-d`.
pub fn perceived_utility(util: f64, rank: usize, d: f64) -> Result<f64> {
    if rank == 0 {
        return Err(Error::param("rank", "ranks are 1-based"));
    }
    if d.is_nan() || d < 0.0 {
        return Err(Error::param("d", format!("{d} must be >= 0")));
    }
    Ok(util * rank_discount(rank, d))
}

#[inline]
pub(crate) fn rank_discount(rank: usize, d: f64) -> f64 {
    (rank as f64).powf(-d)
}

/// Median of `utilities`; the mean of the two middle values for even lengths.
pub fn reserve_utility(utilities: &[f64]) -> Result<f64> {
    if utilities.is_empty() {
        return Err(Error::param("utilities", "median of an empty list"));
    }
    let mut sorted = utilities.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

/// Users, items, frozen utilities, reserves and the release schedule of one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationModel {
    pub users: Vec<PreferenceVector>,
    pub items: Vec<PreferenceVector>,
    n_user_clusters: usize,
    /// Row-major `n_users x n_items` true utilities.
    utilities: Vec<f64>,
    /// Row-major `n_users x n_items` inner products `rho . v` (unclamped).
    mean_utilities: Vec<f64>,
    reserves: Vec<f64>,
    max_utility: Vec<f64>,
    /// 1-based period in which each item becomes available.
    release_period: Vec<usize>,
    /// `releases[t - 1]` lists the items released in period `t`, ascending.
    releases: Vec<Vec<usize>>,
}

impl PopulationModel {
    /// Builds the population for `params` from `seed`.
    pub fn generate(params: &SimParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = stream(seed, Phase::Population);
        let users = (0..params.n_users)
            .map(|_| {
                sample_preference_vector(
                    params.alpha_u,
                    params.gamma_pref,
                    params.n_user_clusters,
                    &mut rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let items = (0..params.n_items)
            .map(|_| {
                sample_preference_vector(
                    params.alpha_i,
                    params.gamma_item,
                    params.n_item_clusters,
                    &mut rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        let mut order: Vec<usize> = (0..params.n_items).collect();
        order.shuffle(&mut rng);
        let batch = params.release_batch();
        let mut release_period = vec![0; params.n_items];
        for (pos, &item) in order.iter().enumerate() {
            release_period[item] = pos / batch + 1;
        }

        Self::from_parts(
            users,
            items,
            params.n_user_clusters,
            params.sigma_util,
            release_period,
            &mut rng,
        )
    }

    /// Assembles a population from explicit vectors and release periods.
    ///
    /// Utilities are drawn from `rng`; `release_period` entries are 1-based.
    pub fn from_parts(
        users: Vec<PreferenceVector>,
        items: Vec<PreferenceVector>,
        n_user_clusters: usize,
        sigma: f64,
        release_period: Vec<usize>,
        rng: &mut SimRng,
    ) -> Result<Self> {
        if release_period.len() != items.len() {
            return Err(Error::Configuration(format!(
                "{} release periods for {} items",
                release_period.len(),
                items.len()
            )));
        }
        if release_period.contains(&0) {
            return Err(Error::param("release_period", "periods are 1-based"));
        }
        let n_items = items.len();
        let mut utilities = Vec::with_capacity(users.len() * n_items);
        let mut mean_utilities = Vec::with_capacity(users.len() * n_items);
        for rho in &users {
            for v in &items {
                let mu = rho.dot(v);
                mean_utilities.push(mu);
                utilities.push(true_utility(rho, v, sigma, rng)?);
            }
        }
        let mut reserves = Vec::with_capacity(users.len());
        let mut max_utility = Vec::with_capacity(users.len());
        for row in utilities.chunks(n_items.max(1)).take(users.len()) {
            reserves.push(if n_items == 0 { 0.0 } else { reserve_utility(row)? });
            max_utility.push(row.iter().copied().fold(0.0, f64::max));
        }
        let last = release_period.iter().copied().max().unwrap_or(0);
        let mut releases = vec![Vec::new(); last];
        for (item, &t) in release_period.iter().enumerate() {
            releases[t - 1].push(item);
        }
        Ok(Self {
            users,
            items,
            n_user_clusters,
            utilities,
            mean_utilities,
            reserves,
            max_utility,
            release_period,
            releases,
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    /// Number of possible user cluster labels (not all need be occupied).
    pub fn n_user_clusters(&self) -> usize {
        self.n_user_clusters
    }

    #[inline]
    pub fn utility(&self, user: usize, item: usize) -> f64 {
        self.utilities[user * self.items.len() + item]
    }

    #[inline]
    pub fn mean_utility(&self, user: usize, item: usize) -> f64 {
        self.mean_utilities[user * self.items.len() + item]
    }

    pub fn utility_row(&self, user: usize) -> &[f64] {
        let n = self.items.len();
        &self.utilities[user * n..(user + 1) * n]
    }

    pub fn reserve(&self, user: usize) -> f64 {
        self.reserves[user]
    }

    /// Largest true utility any item offers `user`.
    pub fn max_utility(&self, user: usize) -> f64 {
        self.max_utility[user]
    }

    pub fn release_period(&self, item: usize) -> usize {
        self.release_period[item]
    }

    /// Items first available in period `t` (1-based).
    pub fn released_in(&self, t: usize) -> &[usize] {
        t.checked_sub(1)
            .and_then(|i| self.releases.get(i))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn user_cluster(&self, user: usize) -> usize {
        self.users[user].cluster
    }
}
