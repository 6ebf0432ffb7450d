//! The four data representations compared by the workbench: raw features,
//! PCA projection, and PCA projection with components weighted by their
//! normalized eigenvalues in forward (WDNE) or reversed order.
//!
//! A fitted [`NormalizationModel`] maps a `d`-vector `x` to a `k`-vector with
//! `out[j] = weights[j] · uⱼ·(x − μ)`, where `uⱼ` is the eigenvector of the
//! sample covariance with the `j`-th largest eigenvalue. Raw mode is the identity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WdneError};
use crate::linalg::{covariance, eigen_sym, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NormalizationMode {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "pca")]
    PcaOnly,
    #[serde(rename = "wdne+")]
    WdnePositive,
    #[serde(rename = "wdne-")]
    WdneNegative,
}

impl NormalizationMode {
    pub const ALL: [NormalizationMode; 4] = [
        NormalizationMode::Raw,
        NormalizationMode::PcaOnly,
        NormalizationMode::WdnePositive,
        NormalizationMode::WdneNegative,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            NormalizationMode::Raw => "raw",
            NormalizationMode::PcaOnly => "pca",
            NormalizationMode::WdnePositive => "wdne+",
            NormalizationMode::WdneNegative => "wdne-",
        }
    }
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for NormalizationMode {
    type Err = WdneError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Ok(NormalizationMode::Raw),
            "pca" | "pcaonly" | "pca-only" => Ok(NormalizationMode::PcaOnly),
            "wdne+" | "wdne" | "wdnepositive" | "positive" => Ok(NormalizationMode::WdnePositive),
            "wdne-" | "wdnenegative" | "negative" => Ok(NormalizationMode::WdneNegative),
            other => Err(WdneError::Config(format!(
                "unknown representation '{other}' (expected raw, pca, wdne+ or wdne-)"
            ))),
        }
    }
}

fn check_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    let first = *eigenvalues
        .first()
        .ok_or_else(|| WdneError::Precondition("empty eigenvalue spectrum".into()))?;
    if !(first > 0.0) {
        return Err(WdneError::DegenerateSpectrum(first));
    }
    if let Some(bad) = eigenvalues.iter().find(|&&l| !(l >= 0.0) || l > first) {
        return Err(WdneError::Precondition(format!(
            "eigenvalues must be non-negative and descending from the first, found {bad}"
        )));
    }
    Ok(first)
}

/// `λⱼ / λ₁` for a descending spectrum.
pub fn positive_weights(eigenvalues: &[f64]) -> Result<Vec<f64>> {
    let first = check_spectrum(eigenvalues)?;
    Ok(eigenvalues.iter().map(|l| l / first).collect())
}

/// Reversed weighting `λ_{k−1−j} / λ₁`: the largest component gets the smallest weight.
pub fn negative_weights(eigenvalues: &[f64]) -> Result<Vec<f64>> {
    let first = check_spectrum(eigenvalues)?;
    Ok(eigenvalues.iter().rev().map(|l| l / first).collect())
}

/// A fitted representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationModel {
    pub mode: NormalizationMode,
    pub input_dim: usize,
    pub mean: Vec<f64>,
    /// `d × k`; column `j` is the eigenvector of the `j`-th largest eigenvalue.
    pub basis: Matrix,
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
    pub retained: usize,
}

/// The audit view written into experiment metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub mode: NormalizationMode,
    pub mean: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NormalizationModel {
    /// Fits a representation on the rows of `x`. `retained = None` keeps every component.
    pub fn fit(x: &Matrix, mode: NormalizationMode, retained: Option<usize>) -> Result<Self> {
        let d = x.cols();
        let k = retained.unwrap_or(d);
        if k > d {
            return Err(WdneError::Config(format!(
                "cannot retain {k} components from {d}-dimensional data"
            )));
        }

        if mode == NormalizationMode::Raw {
            if x.rows() == 0 || d == 0 {
                return Err(WdneError::Precondition("cannot fit on an empty table".into()));
            }
            return Ok(NormalizationModel {
                mode,
                input_dim: d,
                mean: vec![0.0; d],
                basis: Matrix::identity(d),
                eigenvalues: Vec::new(),
                weights: vec![1.0; d],
                retained: d,
            });
        }

        if x.rows() < 2 {
            return Err(WdneError::Precondition(format!(
                "PCA needs at least 2 rows, got {}",
                x.rows()
            )));
        }
        if k == 0 {
            return Err(WdneError::Config("must retain at least one component".into()));
        }

        let (mean, cov) = covariance(x)?;
        let eig = eigen_sym(&cov)?;
        let eigenvalues = eig.values[..k].to_vec();
        let weights = match mode {
            NormalizationMode::PcaOnly => vec![1.0; k],
            NormalizationMode::WdnePositive => positive_weights(&eigenvalues)?,
            NormalizationMode::WdneNegative => negative_weights(&eigenvalues)?,
            NormalizationMode::Raw => unreachable!(),
        };

        Ok(NormalizationModel {
            mode,
            input_dim: d,
            mean,
            basis: eig.vectors.leading_columns(k),
            eigenvalues,
            weights,
            retained: k,
        })
    }

    /// Replaces the component weights, e.g. to express PCA truncation as a 0/1 weighting.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.retained {
            return Err(WdneError::Shape {
                context: "NormalizationModel::with_weights",
                expected: self.retained,
                got: weights.len(),
            });
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn output_dim(&self) -> usize {
        self.retained
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            mode: self.mode,
            mean: self.mean.clone(),
            eigenvalues: self.eigenvalues.clone(),
            weights: self.weights.clone(),
        }
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.retained];
        self.transform_into(x, &mut out)?;
        Ok(out)
    }

    fn transform_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(WdneError::Shape {
                context: "NormalizationModel::transform",
                expected: self.input_dim,
                got: x.len(),
            });
        }
        if self.mode == NormalizationMode::Raw {
            out.copy_from_slice(x);
            return Ok(());
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, (xi, mi)) in x.iter().zip(&self.mean).enumerate() {
            let c = xi - mi;
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.basis[(i, j)] * c;
            }
        }
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o *= w;
        }
        Ok(())
    }

    /// Row-wise [`transform`](Self::transform).
    pub fn transform_table(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() > 0 && x.cols() != self.input_dim {
            return Err(WdneError::Shape {
                context: "NormalizationModel::transform_table",
                expected: self.input_dim,
                got: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), self.retained);
        for i in 0..x.rows() {
            self.transform_into(x.row(i), out.row_mut(i))?;
        }
        Ok(out)
    }
}

/// Per-feature z-scoring, fitted on a set of rows.
///
/// Constant features keep unit scale so they map to zero instead of NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Result<Self> {
        let (mean, cov) = covariance(x)?;
        let scale = (0..x.cols())
            .map(|j| {
                let sd = cov[(j, j)].sqrt();
                if sd > 0.0 { sd } else { 1.0 }
            })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn transform_table(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() > 0 && x.cols() != self.mean.len() {
            return Err(WdneError::Shape {
                context: "Standardizer::transform_table",
                expected: self.mean.len(),
                got: x.cols(),
            });
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            (x[(i, j)] - self.mean[j]) / self.scale[j]
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn standardizer_gives_zero_mean_unit_variance() {
        let x = Matrix::from_rows(&[[1.0, 5.0, 2.0], [3.0, 5.0, 4.0], [5.0, 5.0, 9.0]]).unwrap();
        let z = Standardizer::fit(&x).unwrap();
        assert_eq!(z.scale[1], 1.0);
        let t = z.transform_table(&x).unwrap();
        for j in 0..3 {
            let col = t.column(j);
            let mean = col.iter().sum::<f64>() / 3.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - if j == 1 { 0.0 } else { 1.0 }).abs() < 1e-12);
        }
        assert!(z.transform_table(&Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn positive_weight_examples() {
        assert_eq!(positive_weights(&[4.0, 1.0]).unwrap(), vec![1.0, 0.25]);
        assert_eq!(positive_weights(&[3.0, 3.0, 3.0]).unwrap(), vec![1.0; 3]);
        assert_eq!(positive_weights(&[2.0, 1.0, 0.0]).unwrap(), vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn negative_weight_examples() {
        assert_eq!(negative_weights(&[4.0, 2.0, 1.0]).unwrap(), vec![0.25, 0.5, 1.0]);
        assert_eq!(negative_weights(&[3.0, 3.0, 3.0]).unwrap(), vec![1.0; 3]);
        assert_eq!(negative_weights(&[4.0, 1.0]).unwrap(), vec![0.25, 1.0]);
    }

    #[test]
    fn weights_reject_degenerate_spectrum() {
        assert!(matches!(positive_weights(&[0.0, 0.0]), Err(WdneError::DegenerateSpectrum(_))));
        assert!(matches!(negative_weights(&[-1.0]), Err(WdneError::DegenerateSpectrum(_))));
        assert!(positive_weights(&[]).is_err());
        assert!(positive_weights(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn mode_parsing_round_trips() {
        for mode in NormalizationMode::ALL {
            assert_eq!(mode.tag().parse::<NormalizationMode>().unwrap(), mode);
        }
        assert!("zscore".parse::<NormalizationMode>().is_err());
    }

    #[test]
    fn raw_model_is_identity() {
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let m = NormalizationModel::fit(&x, NormalizationMode::Raw, None).unwrap();
        assert_eq!(m.transform(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(m.transform_table(&x).unwrap(), x);
        let single = Matrix::from_rows(&[[7.0]]).unwrap();
        assert!(NormalizationModel::fit(&single, NormalizationMode::Raw, None).is_ok());
    }

    #[test]
    fn pca_on_cross_pattern_has_equal_spectrum() {
        let x = Matrix::from_rows(&[[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]]).unwrap();
        let m = NormalizationModel::fit(&x, NormalizationMode::PcaOnly, Some(2)).unwrap();
        assert_eq!(m.eigenvalues, vec![2.0, 2.0]);
        assert_eq!(m.weights, vec![1.0, 1.0]);
    }

    #[test]
    fn identity_basis_pca_is_passthrough() {
        let x = Matrix::from_rows(&[[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]]).unwrap();
        let m = NormalizationModel::fit(&x, NormalizationMode::PcaOnly, None).unwrap();
        assert_eq!(m.basis, Matrix::identity(2));
        assert_eq!(m.mean, vec![0.0, 0.0]);
        assert_eq!(m.transform(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn wdne_positive_on_axis_aligned_data() {
        // Hand covariance: diag((9+9)/4, (1+1)/4) = diag(4.5, 0.5).
        let x = Matrix::from_rows(&[[3.0, 0.0], [-3.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap();
        let m = NormalizationModel::fit(&x, NormalizationMode::WdnePositive, None).unwrap();
        assert!(close(&m.eigenvalues, &[4.5, 0.5], 1e-12));
        assert!(close(&m.weights, &[1.0, 1.0 / 9.0], 1e-12));
        let y = m.transform(&[3.0, 1.0]).unwrap();
        assert!(close(&y, &[3.0, 1.0 / 9.0], 1e-12));
    }

    #[test]
    fn wdne_negative_reverses_weights() {
        let x = Matrix::from_rows(&[[3.0, 0.0], [-3.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap();
        let m = NormalizationModel::fit(&x, NormalizationMode::WdneNegative, None).unwrap();
        assert!(close(&m.weights, &[1.0 / 9.0, 1.0], 1e-12));
        let y = m.transform(&[3.0, 1.0]).unwrap();
        assert!(close(&y, &[3.0 / 9.0, 1.0], 1e-12));
    }

    #[test]
    fn fit_errors() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert!(matches!(
            NormalizationModel::fit(&x, NormalizationMode::PcaOnly, Some(3)),
            Err(WdneError::Config(_))
        ));
        let one = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(
            NormalizationModel::fit(&one, NormalizationMode::PcaOnly, None),
            Err(WdneError::Precondition(_))
        ));
        let flat = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        assert!(matches!(
            NormalizationModel::fit(&flat, NormalizationMode::WdnePositive, None),
            Err(WdneError::DegenerateSpectrum(_))
        ));
        assert!(NormalizationModel::fit(&flat, NormalizationMode::PcaOnly, None).is_ok());
    }

    #[test]
    fn transform_checks_dimension() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 5.0]]).unwrap();
        let m = NormalizationModel::fit(&x, NormalizationMode::PcaOnly, None).unwrap();
        assert!(matches!(m.transform(&[1.0]), Err(WdneError::Shape { .. })));
        let wrong = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert!(m.transform_table(&wrong).is_err());
    }

    #[test]
    fn transform_table_batches_rows() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 5.0], [0.0, -1.0]]).unwrap();
        let m = NormalizationModel::fit(&x, NormalizationMode::WdnePositive, None).unwrap();
        let empty = Matrix::zeros(0, 2);
        assert_eq!(m.transform_table(&empty).unwrap().rows(), 0);
        let batch = m.transform_table(&x.select_rows(&[0, 2])).unwrap();
        assert_eq!(batch.row(0), m.transform(x.row(0)).unwrap().as_slice());
        assert_eq!(batch.row(1), m.transform(x.row(2)).unwrap().as_slice());
    }

    #[test]
    fn retained_components_truncate_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Matrix::from_fn(50, 4, |_, j| rng.random_range(-1.0..1.0) * (j + 1) as f64);
        let m = NormalizationModel::fit(&x, NormalizationMode::WdneNegative, Some(2)).unwrap();
        assert_eq!(m.output_dim(), 2);
        assert_eq!(m.transform_table(&x).unwrap().cols(), 2);
        // Reversal is within the retained spectrum.
        assert_eq!(m.weights[1], 1.0);
    }

    fn random_data(seed: u64, n: usize, d: usize) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mix = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let raw = Matrix::from_fn(n, d, |_, j| rng.random_range(-1.0..1.0) * (d - j) as f64 + 3.0);
        raw.matmul(&mix).unwrap()
    }

    fn column_stats(m: &Matrix, j: usize) -> (f64, f64) {
        let col = m.column(j);
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    proptest! {
        #[test]
        fn negative_is_reverse_of_positive(mut spectrum in proptest::collection::vec(0.0f64..100.0, 1..12)) {
            spectrum.sort_by(|a, b| b.total_cmp(a));
            prop_assume!(spectrum[0] > 0.0);
            let mut pos = positive_weights(&spectrum).unwrap();
            let neg = negative_weights(&spectrum).unwrap();
            pos.reverse();
            prop_assert_eq!(pos, neg);
        }

        #[test]
        fn weights_lie_in_unit_interval(mut spectrum in proptest::collection::vec(0.0f64..100.0, 1..12)) {
            spectrum.sort_by(|a, b| b.total_cmp(a));
            prop_assume!(spectrum[0] > 0.0);
            let pos = positive_weights(&spectrum).unwrap();
            prop_assert!(pos.iter().all(|w| (0.0..=1.0).contains(w)));
            prop_assert_eq!(pos[0], 1.0);
            prop_assert!(pos.windows(2).all(|w| w[0] >= w[1]));
            let neg = negative_weights(&spectrum).unwrap();
            prop_assert!(neg.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn zero_one_weights_equal_truncated_pca(seed in any::<u64>(), k in 1usize..5) {
            let x = random_data(seed, 40, 5);
            let full = NormalizationModel::fit(&x, NormalizationMode::PcaOnly, None).unwrap();
            let mask: Vec<f64> = (0..5).map(|j| if j < k { 1.0 } else { 0.0 }).collect();
            let masked = full.clone().with_weights(mask).unwrap();
            let truncated = NormalizationModel::fit(&x, NormalizationMode::PcaOnly, Some(k)).unwrap();
            for row in x.row_iter() {
                let a = masked.transform(row).unwrap();
                let b = truncated.transform(row).unwrap();
                prop_assert!(close(&a[..k], &b, 1e-10));
                prop_assert!(a[k..].iter().all(|&v| v == 0.0));
            }
        }

        #[test]
        fn weighting_inputs_equals_rescaling_weights(
            v in proptest::collection::vec((-5.0f64..5.0, 0.0f64..1.0, -5.0f64..5.0), 1..20)
        ) {
            let lhs: f64 = v.iter().map(|(a, w, x)| a * (w * x)).sum();
            let rhs: f64 = v.iter().map(|(a, w, x)| (a * w) * x).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        #[test]
        fn pca_columns_have_eigenvalue_variance(seed in any::<u64>()) {
            let x = random_data(seed, 60, 4);
            for mode in [NormalizationMode::PcaOnly, NormalizationMode::WdnePositive, NormalizationMode::WdneNegative] {
                let m = NormalizationModel::fit(&x, mode, None).unwrap();
                let y = m.transform_table(&x).unwrap();
                for j in 0..4 {
                    let (mean, var) = column_stats(&y, j);
                    prop_assert!(mean.abs() <= 1e-8);
                    if mode == NormalizationMode::PcaOnly {
                        prop_assert!((var - m.eigenvalues[j]).abs() <= 1e-8 * (1.0 + m.eigenvalues[0]));
                    }
                }
            }
        }
    }
}
