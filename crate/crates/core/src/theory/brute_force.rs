use super::{compute_tte, TheoryInstance};
use crate::designs::DesignKind;
use crate::error::{Error, Result};

/// Largest number of randomization units that is enumerated exhaustively.
pub const MAX_ENUMERATION_UNITS: usize = 20;

/// How a design turns an assignment into outcomes.
#[derive(Clone, Copy)]
struct Semantics {
    /// Indirect effects only flow between units in the same arm.
    gated: bool,
    /// Each arm sees half of the corpus.
    half_corpus: bool,
}

impl Semantics {
    fn of(design: DesignKind) -> Self {
        Self {
            gated: design.diverts_data(),
            half_corpus: design == DesignKind::UserCorpusCoDiverted,
        }
    }
}

fn outcome(inst: &TheoryInstance, sem: Semantics, i: usize, z: &[usize]) -> f64 {
    if !sem.gated {
        return inst.outcome(i, z);
    }
    let zi = z[i];
    let mut indirect = 0.0;
    for (j, &zj) in z.iter().enumerate() {
        if zj == zi {
            indirect += inst.weights.get(i, j) * inst.gamma[zi][zj];
        }
    }
    let corpus = if sem.half_corpus {
        inst.corpus_size as f64 / 2.0
    } else {
        inst.corpus_size as f64
    };
    inst.beta[zi] + inst.delta[zi] * corpus + indirect
}

/// Maps arbitrary labels to `0..k` in order of first appearance.
fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut seen: Vec<usize> = Vec::new();
    let compact = labels
        .iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(k) => k,
            None => {
                seen.push(*l);
                seen.len() - 1
            }
        })
        .collect();
    (compact, seen.len())
}

/// Randomization units of a design: each unit alone, or its cluster.
fn randomization_units(inst: &TheoryInstance, design: DesignKind) -> Result<(Vec<usize>, usize)> {
    let (unit_of, k) = match design {
        DesignKind::ClusterRandomized => compact_labels(inst.require_clusters()?),
        _ => ((0..inst.n()).collect(), inst.n()),
    };
    if k > MAX_ENUMERATION_UNITS {
        return Err(Error::Capacity {
            what: "randomization units",
            value: k,
            limit: MAX_ENUMERATION_UNITS,
        });
    }
    Ok((unit_of, k))
}

/// Exact bias of the Horvitz-Thompson estimator
/// `(1/(Np)) sum_{z_i=1} Y_i - (1/(N(1-p))) sum_{z_i=0} Y_i`
/// by enumerating every Bernoulli(p) assignment of units (or of clusters for
/// the clustered design). Assignments that put everyone in one arm are
/// included. Returns `E[estimate] - TTE`.
pub fn brute_force_bias(inst: &TheoryInstance, design: DesignKind) -> Result<f64> {
    inst.validate()?;
    let (unit_of, k) = randomization_units(inst, design)?;
    let sem = Semantics::of(design);
    let n = inst.n();
    let p = inst.p;
    let w_treated = 1.0 / (n as f64 * p);
    let w_control = 1.0 / (n as f64 * (1.0 - p));

    let mut z = vec![0usize; n];
    let mut expectation = 0.0;
    for mask in 0u32..(1u32 << k) {
        let treated_units = mask.count_ones() as i32;
        let prob = p.powi(treated_units) * (1.0 - p).powi(k as i32 - treated_units);
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = ((mask >> unit_of[i]) & 1) as usize;
        }
        let mut estimate = 0.0;
        for i in 0..n {
            let y = outcome(inst, sem, i, &z);
            if z[i] == 1 {
                estimate += w_treated * y;
            } else {
                estimate -= w_control * y;
            }
        }
        expectation += prob * estimate;
    }
    Ok(expectation - compute_tte(inst))
}

/// Exact bias of the sample-mean difference under complete randomization:
/// every split with `floor(p k)` treated units (units or clusters) is
/// equally likely. When every row of `W` sums to at most 1 this agrees with
/// the Horvitz-Thompson bias up to `O(1/N)`.
pub fn sample_mean_bias(inst: &TheoryInstance, design: DesignKind) -> Result<f64> {
    inst.validate()?;
    let (unit_of, k) = randomization_units(inst, design)?;
    let treated_units = (inst.p * k as f64).floor() as u32;
    if treated_units == 0 || treated_units as usize >= k {
        return Err(Error::Configuration(format!(
            "a complete randomization of {k} units with p = {} leaves an arm empty",
            inst.p
        )));
    }
    let sem = Semantics::of(design);
    let n = inst.n();
    let mut z = vec![0usize; n];
    let mut total = 0.0;
    let mut count = 0u64;
    for mask in 0u32..(1u32 << k) {
        if mask.count_ones() != treated_units {
            continue;
        }
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = ((mask >> unit_of[i]) & 1) as usize;
        }
        let (mut sum, mut n_t) = ([0.0; 2], [0usize; 2]);
        for i in 0..n {
            sum[z[i]] += outcome(inst, sem, i, &z);
            n_t[z[i]] += 1;
        }
        total += sum[1] / n_t[1] as f64 - sum[0] / n_t[0] as f64;
        count += 1;
    }
    Ok(total / count as f64 - compute_tte(inst))
}
