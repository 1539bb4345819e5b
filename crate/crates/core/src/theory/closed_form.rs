use super::TheoryInstance;
use crate::designs::DesignKind;
use crate::error::{Error, Result};

/// Sum of `w_ij` over ordered pairs `i != j` accepted by `keep`, divided by `N`.
fn pair_mean(inst: &TheoryInstance, keep: impl Fn(usize, usize) -> bool) -> f64 {
    let n = inst.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && keep(i, j) {
                total += inst.weights.get(i, j);
            }
        }
    }
    total / n as f64
}

/// `(1/2)(-g11 + g10 - g01 + g00)`, the per-edge bias of shared-pool designs.
fn shared_pool_contrast(g: &[[f64; 2]; 2]) -> f64 {
    0.5 * (-g[1][1] + g[1][0] - g[0][1] + g[0][0])
}

/// Bias of the difference-in-means estimator under `design` with a 1/2 split.
///
/// * Naive: `(1/N) sum_{i != j} w_ij (1/2)(-g11 + g10 - g01 + g00)`
/// * ClusterRandomized: same sum over cross-cluster pairs only
/// * DataDiverted: `(1/N) sum_{i != j} w_ij (g00 - g11) / 2`
/// * UserCorpusCoDiverted: data-diverted bias plus `M (delta0 - delta1) / 2`
///
/// The formulas are stated for `p = 1/2`; other splits are rejected.
pub fn bias_closed_form(inst: &TheoryInstance, design: DesignKind) -> Result<f64> {
    inst.validate()?;
    if inst.p != 0.5 {
        return Err(Error::param(
            "p",
            format!("closed forms are available at p = 0.5 only, got {}", inst.p),
        ));
    }
    let g = &inst.gamma;
    Ok(match design {
        DesignKind::Naive => pair_mean(inst, |_, _| true) * shared_pool_contrast(g),
        DesignKind::ClusterRandomized => {
            let labels = inst.require_clusters()?;
            pair_mean(inst, |i, j| labels[i] != labels[j]) * shared_pool_contrast(g)
        }
        DesignKind::DataDiverted => diverted(inst),
        DesignKind::UserCorpusCoDiverted => {
            diverted(inst) + inst.corpus_size as f64 * (inst.delta[0] - inst.delta[1]) / 2.0
        }
    })
}

fn diverted(inst: &TheoryInstance) -> f64 {
    pair_mean(inst, |_, _| true) * (inst.gamma[0][0] - inst.gamma[1][1]) / 2.0
}

/// Data-diverted bias minus clustered bias:
///
/// ```text
/// (1/2N) sum_{i != j} w_ij (g00 - g11) 1{C(i) = C(j)}
///   - (1/2N) sum_{i != j} w_ij (g10 - g01) 1{C(i) != C(j)}
/// ```
pub fn design_bias_gap(inst: &TheoryInstance) -> Result<f64> {
    inst.validate()?;
    let labels = inst.require_clusters()?;
    let g = &inst.gamma;
    let within = pair_mean(inst, |i, j| labels[i] == labels[j]);
    let across = pair_mean(inst, |i, j| labels[i] != labels[j]);
    Ok(within * (g[0][0] - g[1][1]) / 2.0 - across * (g[1][0] - g[0][1]) / 2.0)
}

/// Closed-form biases of every design and the total treatment effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasVector {
    pub independent: f64,
    /// `None` when the instance has no clustering.
    pub clustered: Option<f64>,
    pub data_diverted: f64,
    pub co_diverted: f64,
    pub tte: f64,
}

impl BiasVector {
    pub fn get(&self, design: DesignKind) -> Option<f64> {
        match design {
            DesignKind::Naive => Some(self.independent),
            DesignKind::ClusterRandomized => self.clustered,
            DesignKind::DataDiverted => Some(self.data_diverted),
            DesignKind::UserCorpusCoDiverted => Some(self.co_diverted),
        }
    }
}

pub fn bias_vector(inst: &TheoryInstance) -> Result<BiasVector> {
    Ok(BiasVector {
        independent: bias_closed_form(inst, DesignKind::Naive)?,
        clustered: match inst.clusters {
            Some(_) => Some(bias_closed_form(inst, DesignKind::ClusterRandomized)?),
            None => None,
        },
        data_diverted: bias_closed_form(inst, DesignKind::DataDiverted)?,
        co_diverted: bias_closed_form(inst, DesignKind::UserCorpusCoDiverted)?,
        tte: super::compute_tte(inst),
    })
}
