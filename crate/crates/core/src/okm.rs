//! Overlapping k-means over superpixel features and the binary
//! spatiotemporal masks derived from it.
//!
//! Every point belongs to exactly `v` clusters: its `v` nearest centroids by
//! squared Euclidean distance. A centroid is the mean of every point that
//! lists it, so a point contributes to `v` means. With `v = 1` this is
//! Lloyd's k-means.
//!
//! Iteration order is fixed: sums run over points in index order and all
//! tie-breaks prefer the lower index, so results do not depend on the number
//! of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::superpixels::SuperpixelMap;
use crate::tensor::{Matrix, TensorFile};

#[derive(Debug, Clone, PartialEq)]
pub struct OkmResult {
    pub k: usize,
    pub v: usize,
    pub dim: usize,
    /// `k×dim`, row-major.
    pub centroids: Vec<f64>,
    /// `n×v`, each row sorted ascending.
    pub assignments: Vec<u32>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl OkmResult {
    pub fn points(&self) -> usize {
        self.assignments.len() / self.v
    }

    pub fn centroid(&self, i: usize) -> &[f64] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }

    pub fn clusters_of(&self, point: usize) -> &[u32] {
        &self.assignments[point * self.v..(point + 1) * self.v]
    }

    /// Number of points listing each cluster.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignments {
            sizes[c as usize] += 1;
        }
        sizes
    }

    pub fn centroids_tensor(&self) -> TensorFile {
        TensorFile::from_f32(
            vec![self.k, self.dim],
            self.centroids.iter().map(|&c| c as f32).collect(),
        )
        .expect("centroid shape is consistent")
    }

    /// `n×v` tensor, u8 when `k ≤ 256`, otherwise f32.
    pub fn assignments_tensor(&self) -> TensorFile {
        let dims = vec![self.points(), self.v];
        if self.k <= 256 {
            TensorFile::from_u8(dims, self.assignments.iter().map(|&a| a as u8).collect())
        } else {
            TensorFile::from_f32(dims, self.assignments.iter().map(|&a| a as f32).collect())
        }
        .expect("assignment shape is consistent")
    }
}

struct Points<'a> {
    data: &'a [f32],
    n: usize,
    dim: usize,
}

impl Points<'_> {
    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn sq_dist(p: &[f32], c: &[f64]) -> f64 {
    p.iter().zip(c).map(|(&a, &b)| (a as f64 - b).powi(2)).sum()
}

/// k-means++ seeding: the first centroid is a uniformly drawn point, every
/// further one is drawn with probability proportional to the squared
/// distance to the nearest centroid chosen so far. When every remaining
/// distance is zero the lowest-index unchosen point is taken.
///
/// Exposed so that alternative clusterers can share the exact same start.
pub fn seed_centroids(features: &Matrix, k: usize, seed: u64) -> Result<Vec<f64>> {
    let n = features.rows;
    if k == 0 || k > n {
        return Err(Error::arg(format!("cannot seed {k} centroids from {n} points")));
    }
    let pts = Points {
        data: &features.data,
        n,
        dim: features.cols,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let to_f64 = |i: usize| pts.row(i).iter().map(|&x| x as f64).collect::<Vec<_>>();
    let mut nearest: Vec<f64> = {
        let c = to_f64(chosen[0]);
        (0..n).map(|i| sq_dist(pts.row(i), &c)).collect()
    };
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave `target` past the last partial sum
            pick.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(pick);
        let c = to_f64(pick);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(pts.row(i), &c));
        }
    }
    Ok(chosen.into_iter().flat_map(to_f64).collect())
}

/// The `v` nearest centroids of every point, each row sorted ascending.
fn assign(pts: &Points, centroids: &[f64], k: usize, v: usize) -> Vec<u32> {
    let dim = pts.dim;
    (0..pts.n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let p = pts.row(i);
            let mut d: Vec<(f64, u32)> = (0..k)
                .map(|c| (sq_dist(p, &centroids[c * dim..(c + 1) * dim]), c as u32))
                .collect();
            if v < k {
                d.select_nth_unstable_by(v - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            }
            let mut row: Vec<u32> = d[..v].iter().map(|&(_, c)| c).collect();
            row.sort_unstable();
            row
        })
        .collect()
}

/// Σ over points of Σ over their clusters of `‖x − c‖²`.
pub fn objective(features: &Matrix, centroids: &[f64], assignments: &[u32], v: usize) -> f64 {
    let dim = features.cols;
    assignments
        .chunks_exact(v)
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .map(|&c| {
                    let c = c as usize;
                    sq_dist(features.row(i), &centroids[c * dim..(c + 1) * dim])
                })
                .sum::<f64>()
        })
        .sum()
}

/// Recomputes centroids as membership means. Empty clusters are moved, in
/// index order, onto the point farthest from its nearest centroid.
fn update(pts: &Points, assignments: &[u32], k: usize, v: usize, centroids: &mut [f64]) {
    let dim = pts.dim;
    let mut sums = vec![0f64; k * dim];
    let mut counts = vec![0usize; k];
    for (i, row) in assignments.chunks_exact(v).enumerate() {
        let p = pts.row(i);
        for &c in row {
            let c = c as usize;
            counts[c] += 1;
            for (s, &x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(p) {
                *s += x as f64;
            }
        }
    }
    let mut live: Vec<usize> = Vec::with_capacity(k);
    for c in 0..k {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            for (dst, s) in centroids[c * dim..(c + 1) * dim]
                .iter_mut()
                .zip(&sums[c * dim..(c + 1) * dim])
            {
                *dst = s / n;
            }
            live.push(c);
        }
    }
    if live.len() == k {
        return;
    }
    let mut nearest: Vec<f64> = (0..pts.n)
        .map(|i| {
            live.iter()
                .map(|&c| sq_dist(pts.row(i), &centroids[c * dim..(c + 1) * dim]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    for c in (0..k).filter(|&c| counts[c] == 0) {
        let far = nearest
            .iter()
            .enumerate()
            .fold(
                (0usize, f64::NEG_INFINITY),
                |best, (i, &d)| if d > best.1 { (i, d) } else { best },
            )
            .0;
        for (dst, &x) in centroids[c * dim..(c + 1) * dim].iter_mut().zip(pts.row(far)) {
            *dst = x as f64;
        }
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(pts.row(i), &centroids[c * dim..(c + 1) * dim]));
        }
    }
}

/// Overlapping k-means with `k` centroids and `v` memberships per point.
///
/// Stops when an update leaves the assignments unchanged (`converged`) or
/// after `max_iter` updates.
pub fn okm_cluster(features: &Matrix, k: usize, v: usize, max_iter: usize, seed: u64) -> Result<OkmResult> {
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    if v == 0 || v > k {
        return Err(Error::arg(format!("v must be in 1..=k, got v={v}, k={k}")));
    }
    if features.rows < k {
        return Err(Error::arg(format!("need at least k={k} points, got {}", features.rows)));
    }
    if let Some(x) = features.data.iter().find(|x| !x.is_finite()) {
        return Err(Error::arg(format!("non-finite feature value {x}")));
    }
    let pts = Points {
        data: &features.data,
        n: features.rows,
        dim: features.cols,
    };
    let mut centroids = seed_centroids(features, k, seed)?;
    let mut assignments = assign(&pts, &centroids, k, v);
    let mut iterations_run = 0;
    let mut converged = false;
    for it in 1..=max_iter {
        #[cfg(debug_assertions)]
        let before = objective(features, &centroids, &assignments, v);
        update(&pts, &assignments, k, v, &mut centroids);
        let next = assign(&pts, &centroids, k, v);
        #[cfg(debug_assertions)]
        {
            let after = objective(features, &centroids, &next, v);
            debug_assert!(
                after <= before + 1e-9 * before.abs().max(1.0),
                "objective rose from {before} to {after} at iteration {it}"
            );
        }
        iterations_run = it;
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    Ok(OkmResult {
        k,
        v,
        dim: features.cols,
        centroids,
        assignments,
        iterations_run,
        converged,
    })
}

/// `k` binary masks over `F×H×W`, stored cluster-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterMasks {
    pub k: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl ClusterMasks {
    pub fn pixels(&self) -> usize {
        self.frames * self.height * self.width
    }

    pub fn mask(&self, i: usize) -> &[u8] {
        let n = self.pixels();
        &self.data[i * n..(i + 1) * n]
    }

    /// Σ_i m_i(p) for pixel `p`.
    pub fn multiplicity(&self, p: usize) -> usize {
        (0..self.k).map(|i| self.mask(i)[p] as usize).sum()
    }

    pub fn coverage(&self) -> Vec<usize> {
        (0..self.k)
            .map(|i| self.mask(i).iter().filter(|&&b| b != 0).count())
            .collect()
    }

    /// Rank-4 `(k, F, H, W)` u8 tensor.
    pub fn to_tensor(&self) -> TensorFile {
        TensorFile::from_u8(vec![self.k, self.frames, self.height, self.width], self.data.clone())
            .expect("mask shape is consistent")
    }

    pub fn from_tensor(t: &TensorFile) -> Result<Self> {
        let [k, frames, height, width] = *t.dims() else {
            return Err(Error::format("cluster masks must be rank 4 (k,F,H,W)"));
        };
        let data: Vec<u8> = (0..t.data().len())
            .map(|i| u8::from(t.data().get_f64(i) != 0.0))
            .collect();
        Ok(Self {
            k,
            frames,
            height,
            width,
            data,
        })
    }
}

/// `m_i(p) = 1` iff the superpixel of pixel `p` lists cluster `i`.
pub fn masks_from_assignments(result: &OkmResult, map: &SuperpixelMap) -> Result<ClusterMasks> {
    if result.points() != map.count {
        return Err(Error::arg(format!(
            "{} assignment rows for {} superpixels",
            result.points(),
            map.count
        )));
    }
    let n = map.labels.len();
    let mut data = vec![0u8; result.k * n];
    data.par_chunks_mut(n).enumerate().for_each(|(i, mask)| {
        let member: Vec<bool> = (0..map.count)
            .map(|s| result.clusters_of(s).contains(&(i as u32)))
            .collect();
        for (m, &l) in mask.iter_mut().zip(&map.labels) {
            *m = u8::from(member[l as usize]);
        }
    });
    Ok(ClusterMasks {
        k: result.k,
        frames: map.frames,
        height: map.height,
        width: map.width,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpixels::grid_init;
    use proptest::prelude::*;

    fn points(rows: &[&[f32]]) -> Matrix {
        let cols = rows[0].len();
        Matrix::from_vec(rows.len(), cols, rows.concat()).unwrap()
    }

    // Exhaustive search over all 2-partitions of the four points.
    fn best_two_partition(xs: &[f64]) -> (u32, f64) {
        let n = xs.len();
        let mut best = (0u32, f64::INFINITY);
        for mask in 1..(1u32 << n) - 1 {
            let mut cost = 0.0;
            for side in [true, false] {
                let members: Vec<f64> = (0..n)
                    .filter(|&i| ((mask >> i) & 1 == 1) == side)
                    .map(|i| xs[i])
                    .collect();
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                cost += members.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
            }
            if cost < best.1 {
                best = (mask, cost);
            }
        }
        best
    }

    #[test]
    fn two_clusters_1d() {
        let xs = [0.0, 0.1, 10.0, 10.1];
        let (mask, _) = best_two_partition(&xs);
        assert!(mask == 0b0011 || mask == 0b1100);

        let f = points(&[&[0.0], &[0.1], &[10.0], &[10.1]]);
        for seed in 0..8 {
            let r = okm_cluster(&f, 2, 1, 20, seed).unwrap();
            assert!(r.converged);
            let a = &r.assignments;
            assert_eq!(a[0], a[1]);
            assert_eq!(a[2], a[3]);
            assert_ne!(a[0], a[2]);
            let lo = r.centroid(a[0] as usize)[0];
            let hi = r.centroid(a[2] as usize)[0];
            assert!((lo - 0.05).abs() < 1e-6 && (hi - 10.05).abs() < 1e-6);
        }
    }

    #[test]
    fn single_cluster_is_global_mean() {
        let f = points(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 9.0]]);
        let r = okm_cluster(&f, 1, 1, 5, 3).unwrap();
        assert_eq!(r.assignments, vec![0, 0, 0]);
        assert!((r.centroid(0)[0] - 3.0).abs() < 1e-12);
        assert!((r.centroid(0)[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn full_overlap() {
        let f = points(&[&[0.0], &[1.0], &[2.0], &[7.0]]);
        let r = okm_cluster(&f, 3, 3, 5, 1).unwrap();
        assert!(r.assignments.chunks(3).all(|row| row == [0, 1, 2]));
        for c in 0..3 {
            assert!((r.centroid(c)[0] - 2.5).abs() < 1e-12);
        }
        assert!(r.converged);
        assert_eq!(r.iterations_run, 1);
    }

    #[test]
    fn argument_errors() {
        let f = points(&[&[0.0], &[1.0]]);
        assert!(matches!(okm_cluster(&f, 3, 1, 5, 0), Err(Error::Argument(_))));
        assert!(matches!(okm_cluster(&f, 2, 3, 5, 0), Err(Error::Argument(_))));
        assert!(okm_cluster(&f, 2, 0, 5, 0).is_err());
        assert!(okm_cluster(&f, 0, 0, 5, 0).is_err());
    }

    #[test]
    fn duplicate_points_still_seed() {
        let f = points(&[&[1.0], &[1.0], &[1.0]]);
        let r = okm_cluster(&f, 3, 2, 5, 0).unwrap();
        assert_eq!(r.cluster_sizes().iter().sum::<usize>(), 6);
    }

    #[test]
    fn identity_masks() {
        let map = grid_init(1, 4, 4, 4).unwrap();
        let r = OkmResult {
            k: 4,
            v: 1,
            dim: 1,
            centroids: vec![0.0; 4],
            assignments: vec![0, 1, 2, 3],
            iterations_run: 0,
            converged: true,
        };
        let m = masks_from_assignments(&r, &map).unwrap();
        for i in 0..4 {
            let expect: Vec<u8> = map.labels.iter().map(|&l| u8::from(l == i as u32)).collect();
            assert_eq!(m.mask(i), &expect[..]);
        }
    }

    #[test]
    fn halves_from_grid() {
        let map = grid_init(1, 4, 4, 4).unwrap();
        let r = OkmResult {
            k: 2,
            v: 1,
            dim: 1,
            centroids: vec![0.0; 2],
            assignments: vec![0, 0, 1, 1],
            iterations_run: 0,
            converged: true,
        };
        let m = masks_from_assignments(&r, &map).unwrap();
        assert_eq!(m.mask(0), &[1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(m.mask(1), &[0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn whole_video_superpixel() {
        let single = grid_init(1, 3, 3, 1).unwrap();
        let r = OkmResult {
            k: 2,
            v: 2,
            dim: 1,
            centroids: vec![0.0; 2],
            assignments: vec![0, 1],
            iterations_run: 0,
            converged: true,
        };
        let m = masks_from_assignments(&r, &single).unwrap();
        assert!(m.data.iter().all(|&b| b == 1));

        let two = grid_init(2, 3, 3, 1).unwrap();
        assert!(matches!(masks_from_assignments(&r, &two), Err(Error::Argument(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn multiplicity_and_determinism(
            raw in prop::collection::vec(-5.0f32..5.0, 60),
            k in 1usize..8,
            vfrac in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let f = Matrix::from_vec(20, 3, raw).unwrap();
            let v = 1 + ((k - 1) as f64 * vfrac) as usize;
            let r = okm_cluster(&f, k, v, 30, seed).unwrap();
            for row in r.assignments.chunks(v) {
                prop_assert!(row.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(row.iter().all(|&c| (c as usize) < k));
            }
            prop_assert!(r.centroids.iter().all(|c| c.is_finite()));
            prop_assert_eq!(okm_cluster(&f, k, v, 30, seed).unwrap(), r);
        }
    }
}
