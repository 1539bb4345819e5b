use crate::error::{Error, Result};

/// Dimensionality of user preference and item attribute vectors.
pub const DIM: usize = 10;

/// Floor and ceiling applied to the mean of the utility distribution.
pub const UTILITY_CLAMP: f64 = 1e-6;

/// Parameters of one simulated environment.
///
/// Field names follow the symbols of the simulation model; defaults are the
/// reference configuration (100 users, 1,000 items, 100 periods).
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub n_users: usize,
    pub n_items: usize,
    /// Number of periods `T`.
    pub periods: usize,
    /// Warm-up periods with random recommendations; randomization happens after these.
    pub t_init: usize,
    /// Rank-decay exponent of perceived utility.
    pub d: f64,
    /// Retraining interval in periods.
    pub f: usize,
    /// Treatment split probability.
    pub p: f64,
    pub alpha_u: f64,
    pub alpha_i: f64,
    pub n_user_clusters: usize,
    pub n_item_clusters: usize,
    pub gamma_pref: f64,
    pub gamma_item: f64,
    pub sigma_util: f64,
    pub seed: u64,
    /// Measure take-up only over post-randomization periods.
    pub post_randomization_only: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            n_users: 100,
            n_items: 1000,
            periods: 100,
            t_init: 10,
            d: 0.8,
            f: 1,
            p: 0.5,
            alpha_u: 1.0,
            alpha_i: 0.01,
            n_user_clusters: 10,
            n_item_clusters: 4,
            gamma_pref: 1.0,
            gamma_item: 1.0,
            sigma_util: 1e-5,
            seed: 0,
            post_randomization_only: false,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::param("p", format!("{} not in (0, 1)", self.p)));
        }
        if self.n_users == 0 {
            return Err(Error::param("n_users", "must be positive"));
        }
        if self.periods == 0 {
            return Err(Error::param("T", "must be positive"));
        }
        if self.t_init >= self.periods {
            return Err(Error::param(
                "t_init",
                format!("{} must be below T = {}", self.t_init, self.periods),
            ));
        }
        if self.n_items == 0 || !self.n_items.is_multiple_of(self.periods) {
            return Err(Error::param(
                "n_items",
                format!("{} is not a positive multiple of T = {}", self.n_items, self.periods),
            ));
        }
        if self.f == 0 {
            return Err(Error::param("f", "retraining interval must be at least 1"));
        }
        if self.d.is_nan() || self.d < 0.0 || !self.d.is_finite() {
            return Err(Error::param("d", format!("{} must be finite and >= 0", self.d)));
        }
        for (name, n) in [("N_Cu", self.n_user_clusters), ("N_Ci", self.n_item_clusters)] {
            if n == 0 || n > DIM {
                return Err(Error::param(name, format!("{n} not in [1, {DIM}]")));
            }
        }
        for (name, v) in [
            ("alpha_u", self.alpha_u),
            ("alpha_i", self.alpha_i),
            ("gamma_pref", self.gamma_pref),
            ("gamma_item", self.gamma_item),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("{v} must be finite and > 0")));
            }
        }
        let floor = UTILITY_CLAMP * (1.0 - UTILITY_CLAMP);
        if self.sigma_util.is_nan() || self.sigma_util <= 0.0 || self.sigma_util * self.sigma_util >= floor {
            return Err(Error::param(
                "sigma",
                format!(
                    "{} must be positive with sigma^2 below the clamped-mean variance bound {floor:e}",
                    self.sigma_util
                ),
            ));
        }
        Ok(())
    }

    /// Items released per period.
    pub fn release_batch(&self) -> usize {
        self.n_items / self.periods
    }
}
