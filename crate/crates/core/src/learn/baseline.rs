use serde::{Deserialize, Serialize};

use super::{Dataset, LearnError};

pub const NB_VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub iterations: usize,
    pub learning_rate: f64,
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            iterations: 500,
            learning_rate: 0.5,
            l2: 1e-3,
        }
    }
}

/// Logistic regression on standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn fit(data: &Dataset, p: &LogisticParams) -> Result<Self, LearnError> {
        data.require_both_classes()?;
        let (n, d) = (data.len(), data.n_features());
        let nf = n as f64;
        let mean: Vec<f64> = (0..d)
            .map(|j| data.x.iter().map(|r| r[j]).sum::<f64>() / nf)
            .collect();
        let scale: Vec<f64> = (0..d)
            .map(|j| {
                let var = data.x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / nf;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let z: Vec<Vec<f64>> = data
            .x
            .iter()
            .map(|r| (0..d).map(|j| (r[j] - mean[j]) / scale[j]).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|i| f64::from(u8::from(data.is_good(i)))).collect();
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut grad = vec![0.0; d];
        for _ in 0..p.iterations {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = 0.0;
            for (row, yi) in z.iter().zip(&y) {
                let e = sigmoid(b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>()) - yi;
                gb += e;
                for (g, a) in grad.iter_mut().zip(row) {
                    *g += e * a;
                }
            }
            for j in 0..d {
                w[j] -= p.learning_rate * (grad[j] / nf + p.l2 * w[j]);
            }
            b -= p.learning_rate * gb / nf;
        }
        Ok(Self {
            mean,
            scale,
            weights: w,
            bias: b,
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let z: f64 = x
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .zip(&self.weights)
            .map(|(((v, m), s), w)| (v - m) / s * w)
            .sum();
        sigmoid(self.bias + z)
    }
}

/// Per-class independent Gaussians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub prior_good: f64,
    /// Per class (good, bad): mean and variance of each feature.
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

impl NaiveBayesModel {
    pub fn fit(data: &Dataset) -> Result<Self, LearnError> {
        data.require_both_classes()?;
        let d = data.n_features();
        let stats = |good: bool| {
            let rows: Vec<&Vec<f64>> = (0..data.len())
                .filter(|&i| data.is_good(i) == good)
                .map(|i| &data.x[i])
                .collect();
            let n = rows.len() as f64;
            let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
            let var: Vec<f64> = (0..d)
                .map(|j| {
                    let v = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                    v.max(NB_VARIANCE_FLOOR)
                })
                .collect();
            (mean, var)
        };
        let (mg, vg) = stats(true);
        let (mb, vb) = stats(false);
        Ok(Self {
            prior_good: data.n_good() as f64 / data.len() as f64,
            mean: [mg, mb],
            var: [vg, vb],
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let loglik = |c: usize| -> f64 {
            x.iter()
                .enumerate()
                .map(|(j, v)| {
                    let var = self.var[c][j];
                    -0.5 * ((v - self.mean[c][j]).powi(2) / var + var.ln())
                })
                .sum()
        };
        let lg = self.prior_good.ln() + loglik(0);
        let lb = (1.0 - self.prior_good).ln() + loglik(1);
        sigmoid(lg - lb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featx::Label;
    use crate::learn::forest::tests::separable;

    fn acc(pred: impl Fn(&[f64]) -> f64, d: &Dataset) -> f64 {
        (0..d.len())
            .filter(|&i| (pred(&d.x[i]) >= 0.5) == d.is_good(i))
            .count() as f64
            / d.len() as f64
    }

    #[test]
    fn logistic_on_separable() {
        let m = LogisticModel::fit(&separable(200, 1), &LogisticParams::default()).unwrap();
        assert!(acc(|x| m.predict(x), &separable(200, 2)) >= 0.95);
    }

    #[test]
    fn zero_logistic_is_half() {
        let m = LogisticModel {
            mean: vec![0.0; 3],
            scale: vec![1.0; 3],
            weights: vec![0.0; 3],
            bias: 0.0,
        };
        assert_eq!(m.predict(&[5.0, -2.0, 1e6]), 0.5);
    }

    #[test]
    fn nb_identical_classes_follow_prior() {
        // Both classes alternate 0 and 1.
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 2) as f64]).collect();
        let labels = (0..40)
            .map(|i| if i < 30 { Label::Good } else { Label::Bad })
            .collect::<Vec<_>>();
        let d = Dataset::new(vec!["a".into()], (0..40).collect(), x, labels).unwrap();
        let m = NaiveBayesModel::fit(&d).unwrap();
        for v in [0.0, 0.5, 1.0, 9.0] {
            assert!((m.predict(&[v]) - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn nb_variance_floor_keeps_constant_features_finite() {
        let mut d = separable(100, 5);
        for r in &mut d.x {
            r[1] = 3.0;
        }
        let m = NaiveBayesModel::fit(&d).unwrap();
        assert_eq!(m.var[0][1], NB_VARIANCE_FLOOR);
        let p = m.predict(&[0.5, 3.0]);
        assert!(p.is_finite() && (0.0..=1.0).contains(&p));
    }
}
