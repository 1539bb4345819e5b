//! Agreement suite between the closed forms and exhaustive enumeration on
//! random instances.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{bias_closed_form, brute_force_bias, design_bias_gap, TheoryInstance, WeightMatrix};
use crate::designs::DesignKind;
use crate::error::Result;
use crate::rng::{stream, Phase, SimRng};

/// Tolerance of the algebraic identities checked alongside the oracle.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Random instance: 4 to 10 units, `W` uniform on `[0, 1]` with diagonal,
/// `gamma` uniform on `[-1, 1]`, `beta` and `delta` uniform on `[0, 1]`,
/// `M` in `0..=20`, 2 or 3 balanced clusters, `p = 1/2`.
pub fn random_instance(rng: &mut SimRng) -> TheoryInstance {
    let n = rng.random_range(4..=10usize);
    let mut weights = WeightMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            weights.set(i, j, rng.random::<f64>());
        }
    }
    let mut gamma = [[0.0; 2]; 2];
    for g in gamma.iter_mut().flatten() {
        *g = rng.random_range(-1.0..=1.0);
    }
    let beta = [rng.random(), rng.random()];
    let delta = [rng.random(), rng.random()];
    let corpus_size = rng.random_range(0..=20u64);
    let k = rng.random_range(2..=3usize);
    let mut clusters: Vec<usize> = (0..n).map(|i| i % k).collect();
    clusters.shuffle(rng);
    TheoryInstance {
        weights,
        gamma,
        beta,
        delta,
        corpus_size,
        clusters: Some(clusters),
        p: 0.5,
    }
}

/// One closed-form versus enumeration comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCheck {
    pub instance: usize,
    pub design: DesignKind,
    pub closed_form: f64,
    pub brute_force: f64,
}

impl OracleCheck {
    pub fn abs_diff(&self) -> f64 {
        (self.closed_form - self.brute_force).abs()
    }
}

/// Outcome of the verification suite.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub tolerance: f64,
    pub checks: Vec<OracleCheck>,
    /// Largest `|gap - (diverted - clustered)|` over instances.
    pub max_gap_error: f64,
    /// Largest deviation from linearity in `W` over instances and designs.
    pub max_linearity_error: f64,
}

impl VerifyReport {
    pub fn max_oracle_error(&self) -> f64 {
        self.checks.iter().map(OracleCheck::abs_diff).fold(0.0, f64::max)
    }

    pub fn violations(&self) -> Vec<&OracleCheck> {
        self.checks
            .iter()
            .filter(|c| c.abs_diff().is_nan() || c.abs_diff() > self.tolerance)
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.violations().is_empty()
            && self.max_gap_error <= IDENTITY_TOLERANCE
            && self.max_linearity_error <= IDENTITY_TOLERANCE
    }
}

/// Checks every design on `instances` random instances drawn from `seed`.
pub fn verify_random_instances(instances: usize, seed: u64, tolerance: f64) -> Result<VerifyReport> {
    let mut rng = stream(seed, Phase::Theory);
    let mut checks = Vec::with_capacity(instances * DesignKind::ALL.len());
    let mut max_gap_error: f64 = 0.0;
    let mut max_linearity_error: f64 = 0.0;
    for k in 0..instances {
        let inst = random_instance(&mut rng);
        let no_corpus = TheoryInstance {
            corpus_size: 0,
            ..inst.clone()
        };
        let doubled_no_corpus = no_corpus.with_scaled_weights(2.0);
        for design in DesignKind::ALL {
            let closed_form = bias_closed_form(&inst, design)?;
            checks.push(OracleCheck {
                instance: k,
                design,
                closed_form,
                brute_force: brute_force_bias(&inst, design)?,
            });
            // the corpus term does not involve W, so linearity is checked without it
            let base = bias_closed_form(&no_corpus, design)?;
            let scaled = bias_closed_form(&doubled_no_corpus, design)?;
            max_linearity_error = max_linearity_error.max((scaled - 2.0 * base).abs());
        }
        let gap = design_bias_gap(&inst)?;
        let diff = bias_closed_form(&inst, DesignKind::DataDiverted)?
            - bias_closed_form(&inst, DesignKind::ClusterRandomized)?;
        max_gap_error = max_gap_error.max((gap - diff).abs());
    }
    Ok(VerifyReport {
        tolerance,
        checks,
        max_gap_error,
        max_linearity_error,
    })
}
