//! Planning distance between ground states, Ward clustering of the resulting
//! distance matrix, and ordinary least squares.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::PartialPlan;

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * (p / q.max(f64::MIN_POSITIVE)).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Σ_x D_KL[pi(·|x; a) || pi(·|x; b)] + D_KL[pi(·|x; b) || pi(·|x; a)].
pub fn symmetric_planning_distance(plans: &PartialPlan, a: usize, b: usize) -> f64 {
    let (pa, pb) = (plans.slice(a), plans.slice(b));
    (0..pa.n_states())
        .map(|x| {
            let (ra, rb) = (pa.pi_row(x), pb.pi_row(x));
            kl(ra, rb) + kl(rb, ra)
        })
        .sum()
}

/// Square dissimilarity matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Checks the matrix is n×n, finite, non-negative, symmetric within 1e-9
    /// (relative) and has a zero diagonal.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n || n == 0 {
            return Err(Error::DistanceMatrix(format!("expected {n}x{n} entries, got {}", values.len())));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::DistanceMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::DistanceMatrix(format!("entry ({i}, {j}) = {a}")));
                }
                if (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::DistanceMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Pairwise [`symmetric_planning_distance`] over all ground states.
pub fn planning_distance_matrix(plans: &PartialPlan) -> Result<DistanceMatrix> {
    let n = plans.n_states();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| symmetric_planning_distance(plans, i, j)).collect())
        .collect();
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (k, d) in row.iter().enumerate() {
            let j = i + 1 + k;
            values[i * n + j] = *d;
            values[j * n + i] = *d;
        }
    }
    DistanceMatrix::new(n, values)
}

/// One agglomeration step. Leaves are 0..n; merge k creates cluster n + k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

/// Agglomerative clustering with Ward linkage, updating dissimilarities with
/// the Lance–Williams recurrence
/// `d(k, i∪j) = ((n_i+n_k) d(k,i) + (n_j+n_k) d(k,j) − n_k d(i,j)) / (n_i+n_j+n_k)`.
///
/// Ties go to the pair with the smallest cluster ids.
pub fn ward_cluster(matrix: &DistanceMatrix) -> Dendrogram {
    let n = matrix.len();
    let mut d: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| matrix.get(i, j)).collect()).collect();
    // slot -> (cluster id, size); None once absorbed.
    let mut slots: Vec<Option<(usize, usize)>> = (0..n).map(|i| Some((i, 1))).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for i in 0..n {
            let Some((ci, _)) = slots[i] else { continue };
            for j in i + 1..n {
                let Some((cj, _)) = slots[j] else { continue };
                let key = (d[i][j], ci.min(cj), ci.max(cj));
                if best.map_or(true, |(h, a, b, _, _)| key < (h, a, b)) {
                    best = Some((key.0, key.1, key.2, i, j));
                }
            }
        }
        let (height, a, b, i, j) = best.expect("at least two live clusters");
        let (ni, nj) = (slots[i].unwrap().1 as f64, slots[j].unwrap().1 as f64);
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            let Some((_, nk)) = slots[k] else { continue };
            let nk = nk as f64;
            let updated = ((ni + nk) * d[k][i] + (nj + nk) * d[k][j] - nk * d[i][j]) / (ni + nj + nk);
            d[k][i] = updated;
            d[i][k] = updated;
        }
        let size = (ni + nj) as usize;
        slots[i] = Some((n + step, size));
        slots[j] = None;
        merges.push(Merge { a, b, height, size });
    }
    Dendrogram { n_leaves: n, merges }
}

impl Dendrogram {
    /// Partition after the first n − k merges, as one label per leaf. Labels
    /// rank clusters by size (largest first), ties by smallest member.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.n_leaves;
        if k == 0 || k > n {
            return Err(Error::Config(format!("k must be in 1..={n}, got {k}")));
        }
        let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for m in &self.merges[..n - k] {
            let mut merged = std::mem::take(&mut members[m.a]);
            merged.append(&mut std::mem::take(&mut members[m.b]));
            members.push(merged);
        }
        let mut clusters: Vec<Vec<usize>> = members.into_iter().filter(|c| !c.is_empty()).collect();
        for c in &mut clusters {
            c.sort_unstable();
        }
        clusters.sort_by(|x, y| y.len().cmp(&x.len()).then(x[0].cmp(&y[0])));
        let mut labels = vec![0; n];
        for (label, c) in clusters.iter().enumerate() {
            for &leaf in c {
                labels[leaf] = label;
            }
        }
        Ok(labels)
    }
}

/// Convenience wrapper: `dendrogram.cut(k)`.
pub fn cut(dendrogram: &Dendrogram, k: usize) -> Result<Vec<usize>> {
    dendrogram.cut(k)
}

/// Groups leaves by label.
pub fn clusters_from_labels(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); k];
    for (leaf, &l) in labels.iter().enumerate() {
        out[l].push(leaf);
    }
    out
}

/// How well one cluster matches a reference set of leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterOverlap {
    pub label: usize,
    pub cluster_size: usize,
    pub target_size: usize,
    pub intersection: usize,
}

impl ClusterOverlap {
    /// Share of the cluster inside the target.
    pub fn purity(&self) -> f64 {
        self.intersection as f64 / self.cluster_size as f64
    }

    /// Share of the target inside the cluster.
    pub fn coverage(&self) -> f64 {
        self.intersection as f64 / self.target_size as f64
    }
}

/// The cluster holding the most target leaves (ties to the lower label).
pub fn best_overlap(labels: &[usize], target: &[usize]) -> Option<ClusterOverlap> {
    clusters_from_labels(labels)
        .iter()
        .enumerate()
        .map(|(label, c)| ClusterOverlap {
            label,
            cluster_size: c.len(),
            target_size: target.len(),
            intersection: c.iter().filter(|x| target.contains(x)).count(),
        })
        .fold(None, |best: Option<ClusterOverlap>, o| match best {
            Some(b) if b.intersection >= o.intersection => Some(b),
            _ => Some(o),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Simple linear regression of y on x. R² is 0 when y is constant.
pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Degenerate(format!("need two equal-length samples, got {} and {}", x.len(), y.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite sample".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * x.iter().map(|v| v * v).sum::<f64>() {
        return Err(Error::Degenerate("x is constant".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 0.0 } else { (1.0 - ss_res / ss_tot).max(0.0) };
    Ok(OlsFit { slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::PlanSlice;

    fn two_groups() -> DistanceMatrix {
        // Points on a line: 0, 0.1, 0.3 and 10, 10.2, 10.25.
        let xs = [0.0, 0.1, 0.3, 10.0, 10.2, 10.25];
        let v = xs.iter().flat_map(|a| xs.iter().map(move |b| f64::abs(a - b))).collect();
        DistanceMatrix::new(6, v).unwrap()
    }

    #[test]
    fn within_group_merges_first() {
        let d = ward_cluster(&two_groups());
        assert_eq!(d.merges.len(), 5);
        assert_eq!((d.merges[0].a, d.merges[0].b), (4, 5));
        assert_eq!((d.merges[1].a, d.merges[1].b), (0, 1));
        assert!(d.merges.windows(2).all(|w| w[0].height <= w[1].height));
        assert_eq!(d.merges[4].size, 6);
        let labels = d.cut(2).unwrap();
        assert_eq!(labels[0], labels[2]);
        assert_ne!(labels[0], labels[3]);
        assert_eq!(d.cut(6).unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(d.cut(1).unwrap(), vec![0; 6]);
        assert!(d.cut(0).is_err() && d.cut(7).is_err());
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(2, vec![0.0, -1.0, -1.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(2, vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn one_row_difference_closed_form() {
        let uniform = vec![0.25; 8];
        let mut skew = uniform.clone();
        skew[4..].copy_from_slice(&[0.7, 0.1, 0.1, 0.1]);
        let slice = |ground, pi: Vec<f64>| PlanSlice {
            ground,
            n_actions: 4,
            pi,
            q: vec![0.0; 8],
            v: vec![0.0; 2],
            kl: vec![0.0; 2],
            total_cost: 0.0,
        };
        let plans = PartialPlan { slices: vec![slice(0, uniform), slice(1, skew)] };
        let p: [f64; 4] = [0.7, 0.1, 0.1, 0.1];
        let forward: f64 = p.iter().map(|x| x * (x / 0.25).ln()).sum();
        let backward: f64 = p.iter().map(|x| 0.25 * (0.25 / x).ln()).sum();
        let d = symmetric_planning_distance(&plans, 0, 1);
        assert!((d - forward - backward).abs() < 1e-12);
        assert_eq!(symmetric_planning_distance(&plans, 1, 0), d);
        assert_eq!(symmetric_planning_distance(&plans, 1, 1), 0.0);
    }

    #[test]
    fn ols_exact_and_constant() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let fit = ols_fit(&x, &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12 && (fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let flat = ols_fit(&x, &[4.0; 4]).unwrap();
        assert_eq!((flat.slope, flat.r_squared), (0.0, 0.0));
        assert!(ols_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(ols_fit(&[1.0], &[0.0]).is_err());
    }
}
