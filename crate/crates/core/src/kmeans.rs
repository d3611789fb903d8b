//! Lloyd's k-means with k-means++ seeding and independent restarts.

use nalgebra::DMatrix;
use rand::Rng;

use crate::{rng, Error, Execution, Partition, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansSettings {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for KMeansSettings {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 100,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOutcome {
    /// Best partition, labels in order of first appearance.
    pub partition: Partition,
    /// Within-cluster sum of squared distances of `partition`.
    pub objective: f64,
    /// Index of the restart that produced `partition`.
    pub restart: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Number of distinct feature rows; below `k` some clusters were forced
    /// apart by the empty-cluster repair.
    pub distinct_points: usize,
    /// Empty-cluster repairs performed in the winning restart.
    pub repaired_empty: usize,
    /// Objective after every Lloyd iteration of the winning restart.
    pub objective_trace: Vec<f64>,
}

struct Run {
    labels: Vec<usize>,
    objective: f64,
    iterations: usize,
    converged: bool,
    repaired: usize,
    trace: Vec<f64>,
}

/// Cluster the rows of `points` into `k` groups.
pub fn kmeans(points: &DMatrix<f64>, k: usize, settings: &KMeansSettings) -> Result<KMeansOutcome> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot form {k} clusters from {n} points")));
    }
    if settings.restarts == 0 {
        return Err(Error::invalid("k-means needs at least one restart"));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("k-means features must be finite"));
    }
    let runs = settings.execution.map_indexed(settings.restarts, |restart| {
        let mut rng = rng::stream(rng::mix(settings.seed, restart as u64));
        let centers = plus_plus(points, k, &mut rng);
        lloyd(points, centers, settings.max_iters)
    });
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.objective < a.1.objective { b } else { a })
        .expect("at least one restart");
    Ok(KMeansOutcome {
        partition: Partition::new(best.labels, k)?.canonical(),
        objective: best.objective,
        restart,
        iterations: best.iterations,
        converged: best.converged,
        distinct_points: distinct_rows(points),
        repaired_empty: best.repaired,
        objective_trace: best.trace,
    })
}

fn dist2(points: &DMatrix<f64>, i: usize, center: &[f64]) -> f64 {
    center
        .iter()
        .enumerate()
        .map(|(d, c)| (points[(i, d)] - c).powi(2))
        .sum()
}

fn row(points: &DMatrix<f64>, i: usize) -> Vec<f64> {
    points.row(i).iter().copied().collect()
}

fn plus_plus(points: &DMatrix<f64>, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.nrows();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![row(points, first)];
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(points, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // every point coincides with a center: take the first unused one
            (0..n).find(|&i| !chosen[i]).expect("k <= n")
        };
        chosen[next] = true;
        centers.push(row(points, next));
        let c = centers.last().unwrap();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(points, i, c));
        }
    }
    centers
}

fn nearest(points: &DMatrix<f64>, i: usize, centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = dist2(points, i, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn centroids(points: &DMatrix<f64>, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points.ncols();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for d in 0..dim {
            sums[l][d] += points[(i, d)];
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

/// Move the point farthest from its centroid into each empty cluster.
fn repair_empty(points: &DMatrix<f64>, labels: &mut [usize], k: usize) -> usize {
    let mut repaired = 0;
    loop {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return repaired;
        };
        let centers = centroids(points, labels, k);
        let mut far = (usize::MAX, f64::NEG_INFINITY);
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] < 2 {
                continue;
            }
            let d = dist2(points, i, &centers[l]);
            if d > far.1 {
                far = (i, d);
            }
        }
        labels[far.0] = empty;
        repaired += 1;
    }
}

fn objective(points: &DMatrix<f64>, labels: &[usize], centers: &[Vec<f64>]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| dist2(points, i, &centers[l]))
        .sum()
}

fn lloyd(points: &DMatrix<f64>, mut centers: Vec<Vec<f64>>, max_iters: usize) -> Run {
    let k = centers.len();
    let n = points.nrows();
    let mut labels: Vec<usize> = (0..n).map(|i| nearest(points, i, &centers).0).collect();
    let mut repaired = repair_empty(points, &mut labels, k);
    centers = centroids(points, &labels, k);
    let mut trace = vec![objective(points, &labels, &centers)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let mut next: Vec<usize> = (0..n).map(|i| nearest(points, i, &centers).0).collect();
        repaired += repair_empty(points, &mut next, k);
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
        centers = centroids(points, &labels, k);
        trace.push(objective(points, &labels, &centers));
    }
    Run {
        objective: *trace.last().unwrap(),
        labels,
        iterations,
        converged,
        repaired,
        trace,
    }
}

fn distinct_rows(points: &DMatrix<f64>) -> usize {
    let mut rows: Vec<Vec<u64>> = (0..points.nrows())
        .map(|i| points.row(i).iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    rows.sort();
    rows.dedup();
    rows.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(values.len(), 1, values)
    }

    #[test]
    fn separated_pairs() {
        let out = kmeans(&column(&[0.0, 0.01, 10.0, 10.01]), 2, &KMeansSettings::default()).unwrap();
        assert_eq!(out.partition.labels(), &[0, 0, 1, 1]);
        assert!(out.converged);
    }

    #[test]
    fn singletons_when_k_equals_n() {
        let out = kmeans(&column(&[3.0, 1.0, 2.0, 7.0, 5.0]), 5, &KMeansSettings::default()).unwrap();
        assert_eq!(out.partition.sizes(), vec![1; 5]);
        assert_eq!(out.objective, 0.0);
    }

    #[test]
    fn duplicates_are_split_deterministically() {
        let pts = column(&[1.0, 1.0, 1.0, 4.0]);
        let a = kmeans(&pts, 3, &KMeansSettings::default()).unwrap();
        let b = kmeans(&pts, 3, &KMeansSettings::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.distinct_points, 2);
        assert_eq!(a.partition.nonempty_clusters(), 3);
    }

    #[test]
    fn objective_never_increases() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pts = DMatrix::from_fn(200, 3, |_, _| rng.random::<f64>());
        let settings = KMeansSettings {
            restarts: 4,
            ..Default::default()
        };
        let out = kmeans(&pts, 6, &settings).unwrap();
        for w in out.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        // fixed point: reassigning to the final centroids changes nothing
        let centers = centroids(&pts, out.partition.labels(), 6);
        for i in 0..200 {
            let l = out.partition.label(i);
            let own = dist2(&pts, i, &centers[l]);
            assert!(nearest(&pts, i, &centers).1 >= own - 1e-12);
        }
    }

    #[test]
    fn rejects_too_many_clusters() {
        assert!(kmeans(&column(&[1.0]), 2, &KMeansSettings::default()).is_err());
    }
}
