use super::WeightMatrix;
use crate::error::{Error, Result};

/// Heterogeneous-effects model with per-unit coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedInstance {
    pub weights: WeightMatrix,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
    pub clusters: Vec<usize>,
    pub p: f64,
    /// Number of clusters the design randomizes over.
    pub n_clusters: usize,
}

impl ExtendedInstance {
    /// Builds `w_ij = sum_k v_ik v_jk` from bipartite factors.
    pub fn weights_from_factors(factors: &[Vec<f64>]) -> Result<WeightMatrix> {
        super::fold_bipartite_graph(factors)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        let n = self.n();
        for (name, v) in [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("gamma", &self.gamma),
            ("delta", &self.delta),
        ] {
            if v.len() != n {
                return Err(Error::param(name, format!("{} values for {n} units", v.len())));
            }
        }
        if self.clusters.len() != n {
            return Err(Error::Configuration(format!(
                "{} cluster labels for {n} units",
                self.clusters.len()
            )));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::param("p", format!("{} not in (0, 1]", self.p)));
        }
        if let Some(bad) = self.clusters.iter().find(|c| **c >= self.n_clusters) {
            return Err(Error::Configuration(format!(
                "cluster label {bad} with only {} clusters",
                self.n_clusters
            )));
        }
        Ok(())
    }
}

/// `TTE - E[estimate] = sum_i sum_j w_ij (gamma_i + delta_i (1 - p)) 1{C_i != C_j}`,
/// divided by `N` when `normalize` is set.
pub fn extended_cluster_bias(inst: &ExtendedInstance, normalize: bool) -> Result<f64> {
    if inst.n_clusters < 2 {
        return Err(Error::Configuration(format!(
            "cluster bias needs at least 2 clusters, got {}",
            inst.n_clusters
        )));
    }
    inst.validate()?;
    let treated = inst.p * inst.n_clusters as f64;
    if treated.fract() != 0.0 {
        log::warn!(
            "p * K = {treated} is not an integer; the cluster split is not exact"
        );
    }
    let n = inst.n();
    let mut total = 0.0;
    for i in 0..n {
        let reweight = inst.gamma[i] + inst.delta[i] * (1.0 - inst.p);
        for j in 0..n {
            if inst.clusters[i] != inst.clusters[j] {
                total += inst.weights.get(i, j) * reweight;
            }
        }
    }
    Ok(if normalize { total / n as f64 } else { total })
}
