use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::thin_svd;
use crate::tensor::DenseTensor;

/// Exact k-nearest-neighbour lists plus the per-point least-squares
/// machinery built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    pub k: usize,
    pub dim: usize,
    /// `[N_pts * k]`, nearest first.
    pub neighbors: Vec<usize>,
    /// Displacements `x_j - x_i`, `[N_pts, k, dim]` flattened; the rows of `A_i`.
    pub displacements: Vec<f64>,
    /// Pseudo-inverse of each `A_i`, `[N_pts, dim, k]` flattened.
    pub pinv: Vec<f64>,
    /// Numerical rank of each `A_i`.
    pub rank: Vec<usize>,
}

/// Relative singular-value cutoff for the pseudo-inverse.
pub const RANK_TOLERANCE: f64 = 1e-10;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` nearest points to each point (self excluded), ties
/// broken by lower index. Brute force.
pub fn knn_indices(coords: &DenseTensor, k: usize) -> Result<Vec<usize>> {
    let n = coords.rows();
    if k == 0 || n <= k {
        return Err(Error::contract(format!(
            "knn needs N_pts > k (N_pts={n}, k={k})"
        )));
    }
    let mut out = Vec::with_capacity(n * k);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        cand.clear();
        let xi = coords.row(i);
        cand.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(xi, coords.row(j)), j)),
        );
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        cand.select_nth_unstable_by(k - 1, cmp);
        cand[..k].sort_by(cmp);
        out.extend(cand[..k].iter().map(|c| c.1));
    }
    Ok(out)
}

/// Builds the neighbour table for `coords: [N_pts, N_c]`.
pub fn knn_neighbors(coords: &DenseTensor, k: usize) -> Result<NeighborTable> {
    if coords.rank() != 2 {
        return Err(Error::dim("knn coords rank", 2, coords.rank()));
    }
    coords.ensure_finite("knn coordinates")?;
    let dim = coords.cols();
    let neighbors = knn_indices(coords, k)?;
    let n = coords.rows();
    let mut displacements = Vec::with_capacity(n * k * dim);
    let mut pinv = Vec::with_capacity(n * dim * k);
    let mut rank = Vec::with_capacity(n);
    for i in 0..n {
        let xi = coords.row(i);
        let nb = &neighbors[i * k..(i + 1) * k];
        let a = DMatrix::from_fn(k, dim, |r, c| coords.row(nb[r])[c] - xi[c]);
        for r in 0..k {
            for c in 0..dim {
                displacements.push(a[(r, c)]);
            }
        }
        let (p, rk) = pseudo_inverse(&a);
        rank.push(rk);
        for r in 0..dim {
            for c in 0..k {
                pinv.push(p[(r, c)]);
            }
        }
    }
    Ok(NeighborTable {
        k,
        dim,
        neighbors,
        displacements,
        pinv,
        rank,
    })
}

/// SVD pseudo-inverse with cutoff `RANK_TOLERANCE * sigma_max`, and the rank it kept.
fn pseudo_inverse(a: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let svd = thin_svd(a);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let cutoff = RANK_TOLERANCE * smax;
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    let mut rank = 0;
    for (j, &s) in svd.sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            // out += v_j u_j^T / s
            for r in 0..a.ncols() {
                for c in 0..a.nrows() {
                    out[(r, c)] += svd.v[(r, j)] * svd.u[(c, j)] / s;
                }
            }
        }
    }
    (out, rank)
}

impl NeighborTable {
    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    pub fn neighbors_of(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    pub(crate) fn pinv_of(&self, i: usize) -> &[f64] {
        &self.pinv[i * self.dim * self.k..(i + 1) * self.dim * self.k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Full sort of all pairwise distances.
    fn brute_force(coords: &DenseTensor, k: usize) -> Vec<usize> {
        let n = coords.rows();
        let mut out = Vec::new();
        for i in 0..n {
            let mut all: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(coords.row(i), coords.row(j)), j))
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            out.extend(all[..k].iter().map(|p| p.1));
        }
        out
    }

    fn random_cloud(n: usize, seed: u64) -> DenseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..2 * n).map(|_| rng.random_range(0.0..1.0)).collect();
        DenseTensor::new(vec![n, 2], data).unwrap()
    }

    #[test]
    fn collinear_middle_point() {
        let c = DenseTensor::from_rows(&[&[0.0, 0.0], &[1.0, 0.0], &[3.0, 0.0]]).unwrap();
        let t = knn_neighbors(&c, 1).unwrap();
        assert_eq!(t.neighbors_of(1), &[0]);
        assert_eq!(t.neighbors_of(2), &[1]);
    }

    #[test]
    fn grid_interior_axis_neighbours() {
        let mut rows = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                rows.push(vec![i as f64, j as f64]);
            }
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let c = DenseTensor::from_rows(&refs).unwrap();
        let t = knn_neighbors(&c, 4).unwrap();
        let centre = 2 * 5 + 2;
        let mut nb = t.neighbors_of(centre).to_vec();
        nb.sort();
        assert_eq!(nb, vec![7, 11, 13, 17]);
    }

    #[test]
    fn random_cloud_matches_brute_force() {
        let c = random_cloud(50, 3);
        let t = knn_neighbors(&c, 6).unwrap();
        assert_eq!(t.neighbors, brute_force(&c, 6));
    }

    #[test]
    fn duplicates_exclude_self_only() {
        let c = DenseTensor::from_rows(&[&[0.0, 0.0], &[0.0, 0.0], &[1.0, 1.0]]).unwrap();
        let t = knn_indices(&c, 1).unwrap();
        assert_eq!(t, vec![1, 0, 0]);
    }

    #[test]
    fn needs_more_points_than_k() {
        let c = random_cloud(4, 1);
        assert!(knn_neighbors(&c, 4).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn knn_equals_brute_force(n in 8usize..120, k in 1usize..7, seed in any::<u64>()) {
            let c = random_cloud(n, seed);
            let t = knn_indices(&c, k).unwrap();
            prop_assert_eq!(t, brute_force(&c, k));
        }
    }
}
