use super::WeightMatrix;
use crate::error::{Error, Result};

/// Share of off-diagonal learning weight that crosses cluster boundaries.
/// Zero when the graph has no off-diagonal weight.
pub fn cluster_cut_quality(weights: &WeightMatrix, clusters: &[usize]) -> Result<f64> {
    let n = weights.len();
    if clusters.len() != n {
        return Err(Error::Configuration(format!(
            "{} cluster labels for {n} units",
            clusters.len()
        )));
    }
    let (mut cut, mut total) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = weights.get(i, j);
            total += w;
            if clusters[i] != clusters[j] {
                cut += w;
            }
        }
    }
    Ok(if total == 0.0 { 0.0 } else { cut / total })
}

/// Expected RMSE growth from randomizing `n` units as `clusters` balanced clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseInflation {
    pub factor: f64,
    /// A single cluster cannot be split into two arms.
    pub degenerate: bool,
}

/// `sqrt(n / clusters)`.
pub fn rmse_inflation(n: usize, clusters: usize) -> Result<RmseInflation> {
    if clusters == 0 {
        return Err(Error::param("C", "cluster count must be at least 1"));
    }
    if clusters > n {
        return Err(Error::param("C", format!("{clusters} clusters for {n} units")));
    }
    let degenerate = clusters == 1;
    if degenerate {
        log::warn!("a single cluster cannot be randomized into two arms");
    }
    Ok(RmseInflation {
        factor: (n as f64 / clusters as f64).sqrt(),
        degenerate,
    })
}

/// Co-engagement graph of a user-by-item incidence matrix: `w_uv` counts
/// the items both users engaged with, so the diagonal is each user's degree.
pub fn fold_bipartite_graph<R: AsRef<[f64]>>(incidence: &[R]) -> Result<WeightMatrix> {
    let n = incidence.len();
    let width = incidence.first().map_or(0, |r| r.as_ref().len());
    for row in incidence {
        let row = row.as_ref();
        if row.len() != width {
            return Err(Error::param("R", "incidence rows differ in length"));
        }
        if let Some(bad) = row.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::param("R", format!("entry {bad} is not finite and >= 0")));
        }
    }
    let mut w = WeightMatrix::zeros(n);
    for u in 0..n {
        for v in u..n {
            let dot: f64 = incidence[u]
                .as_ref()
                .iter()
                .zip(incidence[v].as_ref())
                .map(|(a, b)| a * b)
                .sum();
            w.set(u, v, dot);
            w.set(v, u, dot);
        }
    }
    Ok(w)
}
