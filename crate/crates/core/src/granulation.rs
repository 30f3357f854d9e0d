//! Hierarchical k-means clustering and granular-ball generation.
//!
//! A granular ball summarizes a cluster as (centroid, radius, majority
//! label). Balls are produced by recursively splitting the data with
//! k-means until every leaf is pure enough, then filtering leaves by a
//! minimum member count.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Training data: feature rows with dense class identifiers `0..K-1`.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(features: Matrix, labels: Vec<usize>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows vs {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> Vec<usize> {
        let mut cs = self.labels.clone();
        cs.sort_unstable();
        cs.dedup();
        cs
    }

    /// Subset by row indices (used by splits and folds).
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        let rows: Vec<Vec<f64>> = indices
            .iter()
            .map(|&i| self.features.row(i).to_vec())
            .collect();
        LabeledDataset {
            features: Matrix::from_rows(&rows).expect("rows share dimension"),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GranularBall {
    pub centroid: Vec<f64>,
    pub radius: f64,
    pub label: usize,
    pub member_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallSet {
    pub balls: Vec<GranularBall>,
    pub theta: f64,
    pub min_points: usize,
}

impl BallSet {
    /// Distinct ball labels in ascending order.
    pub fn classes(&self) -> Vec<usize> {
        let mut cs: Vec<usize> = self.balls.iter().map(|b| b.label).collect();
        cs.sort_unstable();
        cs.dedup();
        cs
    }
}

/// Fraction of the modal label; ties resolve to the smallest identifier.
pub fn purity(labels: &[usize]) -> Result<f64> {
    Ok(modal_count(labels)?.1 as f64 / labels.len() as f64)
}

/// (modal label, its count); ties resolve to the smallest identifier.
fn modal_count(labels: &[usize]) -> Result<(usize, usize)> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("purity of empty label list".into()));
    }
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    let mut best = (sorted[0], 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > best.1 {
            best = (sorted[i], j - i);
        }
        i = j;
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct KmeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with farthest-first seeding from the given RNG.
/// Runs until assignments stabilize or 100 iterations.
pub fn kmeans(points: &Matrix, k: usize, seed: u64) -> Result<KmeansResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    kmeans_with_rng(points, k, &mut rng)
}

pub(crate) fn kmeans_with_rng(
    points: &Matrix,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<KmeansResult> {
    let n = points.rows();
    if n == 0 {
        return Err(Error::EmptyInput("kmeans on empty point set".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "kmeans k={k} with n={n}"
        )));
    }

    // farthest-first seeding: first seed random, then repeatedly take the
    // point farthest from its nearest chosen seed
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.gen_range(0..n);
    centroids.push(points.row(first).to_vec());
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let far = (0..n)
            .max_by(|&a, &b| nearest[a].total_cmp(&nearest[b]))
            .expect("nonempty");
        centroids.push(points.row(far).to_vec());
        for i in 0..n {
            nearest[i] = nearest[i].min(sq_dist(points.row(i), centroids.last().unwrap()));
        }
    }

    let d = points.cols();
    let mut assignments = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let p = points.row(i);
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centroids[a]).total_cmp(&sq_dist(p, &centroids[b])))
                .expect("k >= 1");
            if best != assignments[i] {
                assignments[i] = best;
                changed = true;
            }
        }
        // recompute centroids; an emptied cluster grabs the point farthest
        // from its current assignment
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assignments[i]] += 1;
            for (s, &v) in sums[assignments[i]].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(points.row(a), &centroids[assignments[a]])
                            .total_cmp(&sq_dist(points.row(b), &centroids[assignments[b]]))
                    })
                    .expect("nonempty");
                assignments[far] = c;
                centroids[c] = points.row(far).to_vec();
                changed = true;
            } else {
                for (j, s) in sums[c].iter().enumerate() {
                    centroids[c][j] = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(KmeansResult {
        assignments,
        centroids,
    })
}

/// Recursive hierarchical k-means granulation.
///
/// A node whose purity reaches `theta` becomes a leaf; an impure node is
/// split with k = number of distinct labels present (at least 2, capped at
/// the node size). Nodes that cannot be split further (all points
/// identical) are accepted as leaves. Leaves then pass the purity and
/// `min_points` filters to become balls; failing leaves are dropped.
pub fn generate_balls(
    data: &LabeledDataset,
    theta: f64,
    min_points: usize,
    seed: u64,
) -> Result<BallSet> {
    Ok(generate_balls_with_members(data, theta, min_points, seed)?.0)
}

/// Like [`generate_balls`] but also returns, for each ball, the indices of
/// its member points in `data`, aligned with `BallSet::balls`.
pub fn generate_balls_with_members(
    data: &LabeledDataset,
    theta: f64,
    min_points: usize,
    seed: u64,
) -> Result<(BallSet, Vec<Vec<usize>>)> {
    if !(theta > 0.5 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "purity threshold {theta} outside (0.5, 1]"
        )));
    }
    if min_points == 0 {
        return Err(Error::InvalidParameter("min_points must be >= 1".into()));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("granulation of empty dataset".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<usize> = (0..data.len()).collect();
    let mut leaves: Vec<Vec<usize>> = Vec::new();
    split_node(data, all, theta, &mut rng, &mut leaves)?;

    let mut balls: Vec<(GranularBall, Vec<usize>)> = Vec::new();
    for leaf in leaves {
        if leaf.len() < min_points {
            continue;
        }
        let labels: Vec<usize> = leaf.iter().map(|&i| data.labels[i]).collect();
        let pur = purity(&labels)?;
        if pur < theta {
            continue;
        }
        let d = data.dim();
        let mut centroid = vec![0.0; d];
        for &i in &leaf {
            for (c, &v) in centroid.iter_mut().zip(data.features.row(i)) {
                *c += v;
            }
        }
        for c in centroid.iter_mut() {
            *c /= leaf.len() as f64;
        }
        let radius = leaf
            .iter()
            .map(|&i| sq_dist(data.features.row(i), &centroid).sqrt())
            .fold(0.0f64, f64::max);
        let (label, _) = modal_count(&labels)?;
        balls.push((
            GranularBall {
                centroid,
                radius,
                label,
                member_count: leaf.len(),
            },
            leaf,
        ));
    }

    balls.sort_by(|a, b| {
        a.0.label.cmp(&b.0.label).then_with(|| {
            a.0.centroid
                .partial_cmp(&b.0.centroid)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let (balls, members): (Vec<_>, Vec<_>) = balls.into_iter().unzip();

    let set = BallSet {
        balls,
        theta,
        min_points,
    };
    if set.classes().len() < 2 {
        return Err(Error::DegenerateGranulation);
    }
    Ok((set, members))
}

fn split_node(
    data: &LabeledDataset,
    indices: Vec<usize>,
    theta: f64,
    rng: &mut ChaCha8Rng,
    leaves: &mut Vec<Vec<usize>>,
) -> Result<()> {
    let labels: Vec<usize> = indices.iter().map(|&i| data.labels[i]).collect();
    if purity(&labels)? >= theta || indices.len() < 2 {
        leaves.push(indices);
        return Ok(());
    }
    // all points identical: unsplittable, accept as leaf
    let first = data.features.row(indices[0]);
    if indices
        .iter()
        .all(|&i| data.features.row(i) == first)
    {
        leaves.push(indices);
        return Ok(());
    }

    let mut distinct = labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let k = distinct.len().max(2).min(indices.len());

    let sub = data.subset(&indices);
    let km = kmeans_with_rng(&sub.features, k, rng)?;
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (local, &global) in indices.iter().enumerate() {
        children[km.assignments[local]].push(global);
    }
    let nonempty: Vec<Vec<usize>> = children.into_iter().filter(|c| !c.is_empty()).collect();
    if nonempty.len() < 2 {
        // split failed to separate anything; accept as leaf
        leaves.push(indices);
        return Ok(());
    }
    for child in nonempty {
        split_node(data, child, theta, rng, leaves)?;
    }
    Ok(())
}
