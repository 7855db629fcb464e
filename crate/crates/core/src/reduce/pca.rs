use nalgebra::{DMatrix, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::parallel;

/// Above this width the covariance eigensolve gives way to a thin SVD of
/// the centred data, provided the data matrix itself is small enough.
const EIGEN_MAX_DIM: usize = 512;
const SVD_MAX_ENTRIES: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaReducer {
    pub k: usize,
    pub mean: Vec<f64>,
    /// `k` unit-norm, mutually orthogonal rows of length `d`.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

fn centred(x: &FeatureMatrix, mean: &[f64]) -> DMatrix<f64> {
    let (n, d) = (x.n_rows(), x.n_cols());
    DMatrix::from_fn(n, d, |i, j| f64::from(x.get(i, j)) - mean[j])
}

/// Flips `v` so its largest-magnitude entry is positive; the first such
/// entry wins a magnitude tie.
fn fix_sign(v: &mut [f64]) {
    let mut at = 0;
    for (j, x) in v.iter().enumerate() {
        if x.abs() > v[at].abs() {
            at = j;
        }
    }
    if v[at] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Eigenpairs of the sample covariance, largest first.
fn principal_axes(xc: &DMatrix<f64>, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (n, d) = xc.shape();
    let scale = 1.0 / (n as f64 - 1.0);
    let mut pairs: Vec<(f64, Vec<f64>)> = if d > EIGEN_MAX_DIM && n * d <= SVD_MAX_ENTRIES {
        let svd = SVD::new(xc.clone(), false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        svd.singular_values
            .iter()
            .enumerate()
            .map(|(i, s)| (s * s * scale, v_t.row(i).iter().copied().collect()))
            .collect()
    } else {
        let mut cov = xc.tr_mul(xc);
        cov *= scale;
        let eig = SymmetricEigen::new(cov);
        eig.eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, eig.eigenvectors.column(i).iter().copied().collect()))
            .collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.truncate(k);
    pairs
        .into_iter()
        .map(|(l, mut v)| {
            fix_sign(&mut v);
            (l, v)
        })
        .unzip()
}

/// PCA on the training features: covariance with divisor `n - 1`, top `k`
/// axes. `k` may not exceed `min(n - 1, d)`.
pub fn fit_pca(train: &Dataset, k: usize) -> Result<PcaReducer> {
    let x = train.features();
    let (n, d) = (x.n_rows(), x.n_cols());
    if n < 2 {
        return Err(Error::InvalidParameter(
            "PCA needs at least two rows".into(),
        ));
    }
    let budget = (n - 1).min(d);
    if k == 0 || k > budget {
        return Err(Error::InvalidParameter(format!(
            "PCA k={k} outside [1, min(n-1, d) = {budget}]"
        )));
    }
    x.ensure_finite()?;
    let mean: Vec<f64> = (0..d)
        .map(|j| x.rows().map(|r| f64::from(r[j])).sum::<f64>() / n as f64)
        .collect();
    let xc = centred(x, &mean);
    if xc.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVariance);
    }
    let (explained_variance, components) = principal_axes(&xc, k);
    Ok(PcaReducer {
        k,
        mean,
        components,
        explained_variance,
    })
}

impl PcaReducer {
    pub fn from_parts(
        mean: Vec<f64>,
        components: Vec<Vec<f64>>,
        explained_variance: Vec<f64>,
    ) -> Result<Self> {
        let r = PcaReducer {
            k: components.len(),
            mean,
            components,
            explained_variance,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.input_dim();
        let ok = self.k >= 1
            && self.components.len() == self.k
            && self.explained_variance.len() == self.k
            && self.components.iter().all(|c| c.len() == d)
            && self
                .mean
                .iter()
                .chain(self.components.iter().flatten())
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::CorruptBundle("PCA reducer is inconsistent".into()))
        }
    }

    /// `components · (x - mean)` in full precision.
    pub fn project_row(&self, x: &[f32]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(x)
                    .zip(&self.mean)
                    .map(|((w, &v), m)| w * (f64::from(v) - m))
                    .sum()
            })
            .collect()
    }

    /// `mean + componentsᵀ · z`.
    pub fn reconstruct(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &zi) in self.components.iter().zip(z) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += w * zi;
            }
        }
        out
    }

    pub fn transform_matrix(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        x.expect_cols(self.input_dim())?;
        let mut values = vec![0.0f32; x.n_rows() * self.k];
        parallel::for_each_chunk_mut(&mut values, self.k, |i, out| {
            for (o, v) in out.iter_mut().zip(self.project_row(x.row(i))) {
                *o = v as f32;
            }
        });
        FeatureMatrix::new(values, x.n_rows(), self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_line() {
        let rows: Vec<Vec<f32>> = (-2..=2).map(|t| vec![t as f32, t as f32]).collect();
        let data = Dataset::from_rows(&rows, vec![0, 1, 0, 1, 0]).unwrap();
        let p = fit_pca(&data, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.components[0][0] - h).abs() < 1e-12 && (p.components[0][1] - h).abs() < 1e-12);
        assert!((p.explained_variance[0] - 5.0).abs() < 1e-12);
        assert!((p.project_row(&[1.0, 1.0])[0] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn axis_aligned() {
        // uncorrelated axes with sample variances 16/3 and 4/3
        let rows = vec![
            vec![-2.0, -1.0],
            vec![-2.0, 1.0],
            vec![2.0, -1.0],
            vec![2.0, 1.0],
        ];
        let data = Dataset::from_rows(&rows, vec![0, 1, 0, 1]).unwrap();
        let p = fit_pca(&data, 2).unwrap();
        assert!((p.explained_variance[0] - 16.0 / 3.0).abs() < 1e-12);
        assert!((p.explained_variance[1] - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.components, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn degenerate_inputs() {
        let same = Dataset::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]], vec![0, 1]).unwrap();
        assert!(matches!(fit_pca(&same, 1), Err(Error::ZeroVariance)));
        let three = Dataset::from_rows(
            &[vec![1.0, 2.0], vec![3.0, 2.0], vec![0.0, 5.0]],
            vec![0, 1, 0],
        )
        .unwrap();
        assert!(fit_pca(&three, 2).is_ok());
        assert!(fit_pca(&three, 3).is_err());
        assert!(fit_pca(&three, 0).is_err());
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.3, -0.9, 0.1];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.3, 0.9, -0.1]);
        let mut v = vec![-0.5, 0.5];
        fix_sign(&mut v);
        assert_eq!(v, vec![0.5, -0.5]);
    }
}
