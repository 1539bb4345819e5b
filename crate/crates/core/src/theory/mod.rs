//! Equilibrium potential-outcome model of symbiosis bias.
//!
//! Unit `i`'s outcome under assignment `z` is
//!
//! ```text
//! Y_i(z) = beta[z_i] + delta[z_i] * M + sum_j w_ij * gamma[z_i][z_j]
//! ```
//!
//! where `W` is the learning graph (diagonal included), `M` the corpus size
//! and `gamma[a][b]` the indirect effect on an `a`-unit of a `b`-neighbour.
//! This module evaluates the total treatment effect, the bias of the
//! difference-in-means estimator under each design in closed form, and an
//! exhaustive enumeration that recomputes the same biases from the model.

mod brute_force;
mod closed_form;
mod extended;
mod graph;
pub mod io;
pub mod verify;

pub use brute_force::{brute_force_bias, sample_mean_bias, MAX_ENUMERATION_UNITS};
pub use closed_form::{bias_closed_form, bias_vector, design_bias_gap, BiasVector};
pub use extended::{extended_cluster_bias, ExtendedInstance};
pub use graph::{cluster_cut_quality, fold_bipartite_graph, rmse_inflation, RmseInflation};

use crate::error::{Error, Result};

/// Dense square matrix of nonnegative learning weights, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::param("W", format!("row of length {} in a {n}x{n} matrix", row.len())));
            }
            data.extend_from_slice(row);
        }
        let m = Self { n, data };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(bad) = self.data.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::param("W", format!("weight {bad} is not finite and >= 0")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, w: f64) {
        self.data[i * self.n + j] = w;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|w| w * c).collect(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Sum of off-diagonal weights.
    pub fn off_diagonal_total(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    total += self.get(i, j);
                }
            }
        }
        total
    }
}

/// Parameters of the equilibrium model for one population of units.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryInstance {
    pub weights: WeightMatrix,
    /// `gamma[z_i][z_j]`.
    pub gamma: [[f64; 2]; 2],
    /// `beta[z]`, base effect of algorithm `z`.
    pub beta: [f64; 2],
    /// `delta[z]`, per-item corpus effect of algorithm `z`.
    pub delta: [f64; 2],
    pub corpus_size: u64,
    /// Cluster label of each unit, if a clustering is given.
    pub clusters: Option<Vec<usize>>,
    pub p: f64,
}

impl TheoryInstance {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.n() == 0 {
            return Err(Error::param("N", "at least one unit is needed"));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::param("p", format!("{} not in (0, 1)", self.p)));
        }
        let params = self.gamma.iter().flatten().chain(&self.beta).chain(&self.delta);
        if let Some(bad) = params.into_iter().find(|x| !x.is_finite()) {
            return Err(Error::param("gamma/beta/delta", format!("{bad} is not finite")));
        }
        if let Some(labels) = &self.clusters {
            if labels.len() != self.n() {
                return Err(Error::Configuration(format!(
                    "{} cluster labels for {} units",
                    labels.len(),
                    self.n()
                )));
            }
        }
        Ok(())
    }

    /// Cluster labels, or a configuration error when none are set.
    pub fn require_clusters(&self) -> Result<&[usize]> {
        self.clusters
            .as_deref()
            .ok_or_else(|| Error::Configuration("design needs a clustering".into()))
    }

    /// Same instance with `W` scaled by `c`.
    pub fn with_scaled_weights(&self, c: f64) -> Self {
        Self {
            weights: self.weights.scaled(c),
            ..self.clone()
        }
    }

    /// Outcome of unit `i` under the full interference model.
    pub(crate) fn outcome(&self, i: usize, z: &[usize]) -> f64 {
        let zi = z[i];
        let mut indirect = 0.0;
        for (j, &zj) in z.iter().enumerate() {
            indirect += self.weights.get(i, j) * self.gamma[zi][zj];
        }
        self.beta[zi] + self.delta[zi] * self.corpus_size as f64 + indirect
    }
}

/// Total treatment effect:
/// `(beta1 - beta0) + M (delta1 - delta0) + (1/N) sum_ij w_ij (gamma11 - gamma00)`.
pub fn compute_tte(inst: &TheoryInstance) -> f64 {
    let n = inst.n() as f64;
    let mut total = 0.0;
    for i in 0..inst.n() {
        total += inst.weights.row(i).iter().sum::<f64>();
    }
    (inst.beta[1] - inst.beta[0])
        + inst.corpus_size as f64 * (inst.delta[1] - inst.delta[0])
        + total / n * (inst.gamma[1][1] - inst.gamma[0][0])
}
