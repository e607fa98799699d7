//! Mapper filters from classical multidimensional scaling of a distance matrix.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scc::{DistanceMatrix, SquareMatrix};

/// Relative cutoff below which eigenvalues are treated as zero.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

/// Per-sample filter coordinates, `n_samples x p`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterValues {
    n_samples: usize,
    p: usize,
    values: Vec<f64>,
    /// Eigenvalue behind each coordinate, non-increasing. Empty when the
    /// filters did not come from an eigen-embedding.
    pub eigenvalues: Vec<f64>,
}

impl FilterValues {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || p == 0 {
            return Err(Error::Dimension("filter values need at least one sample and one coordinate".into()));
        }
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("ragged filter rows".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("filter values must be finite".into()));
        }
        Ok(Self { n_samples: rows.len(), p, values: rows.concat(), eigenvalues: Vec::new() })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, sample: usize, coord: usize) -> f64 {
        self.values[sample * self.p + coord]
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        &self.values[sample * self.p..(sample + 1) * self.p]
    }

    pub fn column(&self, coord: usize) -> Vec<f64> {
        (0..self.n_samples).map(|i| self.get(i, coord)).collect()
    }

    /// Rows for the given sample indices, in that order.
    pub fn restrict(&self, samples: &[usize]) -> FilterValues {
        let values = samples.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        FilterValues { n_samples: samples.len(), p: self.p, values, eigenvalues: self.eigenvalues.clone() }
    }
}

/// `B = -1/2 J D^2 J` with `J = I - (1/n) 11^T`.
pub fn double_center(d: &DistanceMatrix) -> Result<SquareMatrix> {
    let n = d.n();
    if n == 0 {
        return Err(Error::Dimension("empty distance matrix".into()));
    }
    let sq: Vec<f64> = d.as_slice().iter().map(|v| v * v).collect();
    let row_means: Vec<f64> = (0..n).map(|i| sq[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            // D^2 is symmetric so column means equal row means
            b.set(i, j, -0.5 * (sq[i * n + j] - row_means[i] - row_means[j] + grand));
        }
    }
    // enforce exact symmetry
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (b.get(i, j) + b.get(j, i));
            b.set(i, j, v);
            b.set(j, i, v);
        }
    }
    Ok(b)
}

/// Full spectrum of `B`, sorted by non-increasing eigenvalue, with eigenvectors
/// oriented so that their largest-magnitude entry is positive.
pub fn sorted_eigen(b: &SquareMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = b.n();
    let m = DMatrix::from_row_slice(n, n, b.as_slice());
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            orient(&mut v);
            v
        })
        .collect();
    (values, vectors)
}

fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Leading `p` classical-MDS coordinates of the samples.
///
/// Column `s` is `sqrt(lambda_s) * v_s` when `scale_by_sqrt_eigenvalue` is set
/// and the unit eigenvector `v_s` otherwise.
pub fn mds_filters(d: &DistanceMatrix, p: usize, scale_by_sqrt_eigenvalue: bool) -> Result<FilterValues> {
    let n = d.n();
    if p == 0 || p > n {
        return Err(Error::Parameter(format!("need 1 <= p <= {n}, got p = {p}")));
    }
    let b = double_center(d)?;
    let (values, vectors) = sorted_eigen(&b);
    let lambda_max = values.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = EIGEN_TOLERANCE * lambda_max;
    let positive = values.iter().take_while(|&&l| l > cutoff && l > 0.0).count();
    if positive < p {
        return Err(Error::RankDeficient { needed: p, spectrum: values });
    }
    let mut out = vec![0.0; n * p];
    for s in 0..p {
        let scale = if scale_by_sqrt_eigenvalue { values[s].sqrt() } else { 1.0 };
        for i in 0..n {
            out[i * p + s] = scale * vectors[s][i];
        }
    }
    Ok(FilterValues { n_samples: n, p, values: out, eigenvalues: values[..p].to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn euclid(points: &[Vec<f64>]) -> DistanceMatrix {
        let n = points.len();
        let mut d = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let s: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum();
                d.set(i, j, s.sqrt());
            }
        }
        d
    }

    #[test]
    fn double_center_examples() {
        let z = double_center(&SquareMatrix::zeros(3)).unwrap();
        assert!(z.as_slice().iter().all(|&v| v == 0.0));

        let d = SquareMatrix::from_row_major(2, vec![0.0, 2.0, 2.0, 0.0]).unwrap();
        assert_eq!(double_center(&d).unwrap().as_slice(), &[1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn double_center_matches_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let d = euclid(&pts);
        let b = double_center(&d).unwrap();
        let n = 5;
        let j = |a: usize, c: usize| if a == c { 1.0 - 1.0 / n as f64 } else { -1.0 / n as f64 };
        for r in 0..n {
            let row_sum: f64 = b.row(r).iter().sum();
            assert!(row_sum.abs() < 1e-9);
            for c in 0..n {
                let mut v = 0.0;
                for a in 0..n {
                    for e in 0..n {
                        v += j(r, a) * d.get(a, e).powi(2) * j(e, c);
                    }
                }
                assert!((b.get(r, c) + 0.5 * v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_points() {
        let d = SquareMatrix::from_row_major(2, vec![0.0, 2.0, 2.0, 0.0]).unwrap();
        let f = mds_filters(&d, 1, true).unwrap();
        assert!((f.eigenvalues[0] - 2.0).abs() < 1e-12);
        let col = f.column(0);
        assert!((col[0].abs() - 1.0).abs() < 1e-12 && (col[0] + col[1]).abs() < 1e-12);
        // sign convention: largest-magnitude entry positive, ties to the lowest index
        assert!(col[0] > 0.0);
    }

    #[test]
    fn unit_square_reconstruction() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let d = euclid(&pts);
        let f = mds_filters(&d, 2, true).unwrap();
        let emb = euclid(&(0..4).map(|i| f.row(i).to_vec()).collect::<Vec<_>>());
        for i in 0..4 {
            for j in 0..4 {
                assert!((emb.get(i, j) - d.get(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn duplicates_get_identical_rows() {
        let pts = vec![vec![0.0, 0.0], vec![3.0, 1.0], vec![0.0, 0.0], vec![-1.0, 2.0]];
        let f = mds_filters(&euclid(&pts), 2, true).unwrap();
        for s in 0..2 {
            assert!((f.get(0, s) - f.get(2, s)).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_deficiency_reports_spectrum() {
        let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
        match mds_filters(&euclid(&pts), 2, true) {
            Err(Error::RankDeficient { needed: 2, spectrum }) => assert_eq!(spectrum.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn embedding_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let pts: Vec<Vec<f64>> = (0..12).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let d = euclid(&pts);
            let f = mds_filters(&d, 3, true).unwrap();
            let again = mds_filters(&d, 3, true).unwrap();
            assert_eq!(f, again);
            assert!(f.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            for s in 0..3 {
                let col = f.column(s);
                assert!(col.iter().sum::<f64>().abs() < 1e-9);
                for t in s + 1..3 {
                    let other = f.column(t);
                    assert!(col.iter().zip(&other).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-8);
                }
            }
            let emb = euclid(&(0..12).map(|i| f.row(i).to_vec()).collect::<Vec<_>>());
            for i in 0..12 {
                for j in 0..12 {
                    assert!((emb.get(i, j) - d.get(i, j)).abs() < 1e-7);
                }
            }
        }
    }
}
