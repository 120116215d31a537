//! Seeded k-means over entity vectors.
//!
//! Initialization picks one seeded-random point, then repeatedly the point
//! farthest from all chosen centroids. Lloyd iterations run until no
//! assignment changes or [`MAX_ITERATIONS`] is reached. A cluster that ends
//! up empty is re-seeded with the point farthest from its current centroid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::EntityId;
use crate::vector::Vector;

pub const DEFAULT_CLUSTERS: usize = 3;
pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centroids: Vec<Vector>,
    /// Cluster index per entity id.
    pub assignment: Vec<usize>,
    pub iterations: usize,
    /// Objective (sum of squared distances) after each assignment step.
    #[serde(default)]
    pub objective_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn cluster_of(&self, v: EntityId) -> Option<usize> {
        self.assignment.get(v.index()).copied()
    }

    pub fn objective(&self, points: &[Vector]) -> f64 {
        objective(points, &self.centroids, &self.assignment)
    }
}

fn nearest(p: &Vector, centroids: &[Vector]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = p.squared_distance(c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn objective(points: &[Vector], centroids: &[Vector], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| p.squared_distance(&centroids[c]))
        .sum()
}

fn farthest_point_init(points: &[Vector], k: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..points.len());
    let mut centroids = vec![points[first].clone()];
    let mut min_d: Vec<f64> = points.iter().map(|p| p.squared_distance(&centroids[0])).collect();
    while centroids.len() < k {
        let mut pick = 0;
        for (i, &d) in min_d.iter().enumerate() {
            if d > min_d[pick] {
                pick = i;
            }
        }
        let c = points[pick].clone();
        for (d, p) in min_d.iter_mut().zip(points) {
            *d = d.min(p.squared_distance(&c));
        }
        centroids.push(c);
    }
    centroids
}

/// Fits `k` clusters to `points` (one per entity, in id order).
pub fn kmeans_fit(points: &[Vector], k: usize, seed: u64) -> Result<ClusterModel> {
    if k < 2 || k > points.len() {
        return Err(Error::Config(format!(
            "cluster count must be in 2..={}, got {k}",
            points.len()
        )));
    }
    let dim = points[0].dim();
    let mut centroids = farthest_point_init(points, k, seed);
    let mut assignment: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        trace.push(objective(points, &centroids, &next));
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
        iterations += 1;

        let mut sums = vec![Vector::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            sums[c].add_scaled(p, 1.0);
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].scaled(1.0 / counts[c] as f64);
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            // farthest point from its own centroid, never emptying another cluster
            let mut pick: Option<(usize, f64)> = None;
            for (i, p) in points.iter().enumerate() {
                let own = assignment[i];
                if counts[own] <= 1 {
                    continue;
                }
                let d = p.squared_distance(&centroids[own]);
                if pick.is_none_or(|(_, best)| d > best) {
                    pick = Some((i, d));
                }
            }
            if let Some((i, _)) = pick {
                counts[assignment[i]] -= 1;
                assignment[i] = c;
                counts[c] = 1;
                centroids[c] = points[i].clone();
            }
        }
    }
    if !converged {
        assignment = points.iter().map(|p| nearest(p, &centroids)).collect();
    }
    Ok(ClusterModel {
        centroids,
        assignment,
        iterations,
        objective_trace: trace,
    })
}
