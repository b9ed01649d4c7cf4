use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Beta priors on the edge probabilities and the truncation point of the
/// flat prior on the unseen block counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
    ntilde_max: u64,
}

impl PriorSpec {
    pub fn new(alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>, ntilde_max: u64) -> Result<Self> {
        let k = alpha.len();
        for (name, m) in [("alpha", &alpha), ("beta", &beta)] {
            if k == 0 || m.len() != k || m.iter().any(|r| r.len() != k) {
                return Err(Error::validation(
                    name,
                    format!("expected a {k}x{k} matrix"),
                ));
            }
            for i in 0..k {
                for j in 0..k {
                    if !(m[i][j] > 0.0 && m[i][j].is_finite()) {
                        return Err(Error::validation(
                            name,
                            format!("entry ({}, {}) must be positive", i + 1, j + 1),
                        ));
                    }
                    if m[i][j] != m[j][i] {
                        return Err(Error::validation(name, "matrix is not symmetric"));
                    }
                }
            }
        }
        if ntilde_max == 0 {
            return Err(Error::validation("ntilde_max", "must be at least 1"));
        }
        Ok(PriorSpec {
            alpha,
            beta,
            ntilde_max,
        })
    }

    /// Uniform priors on every edge probability.
    pub fn uniform(k: usize, ntilde_max: u64) -> Self {
        PriorSpec::new(vec![vec![1.0; k]; k], vec![vec![1.0; k]; k], ntilde_max)
            .expect("uniform prior is valid")
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self, i: usize, j: usize) -> f64 {
        self.alpha[i][j]
    }

    pub fn beta(&self, i: usize, j: usize) -> f64 {
        self.beta[i][j]
    }

    pub fn ntilde_max(&self) -> u64 {
        self.ntilde_max
    }

    /// Log of the flat prior mass on one point of `[0, ntilde_max]^K`.
    pub fn ln_phi(&self) -> f64 {
        -(self.k() as f64) * ((self.ntilde_max + 1) as f64).ln()
    }
}

/// Default truncation of the count prior: a hundred times the sample size.
pub fn default_ntilde_max(n: usize) -> u64 {
    100 * n.max(1) as u64
}

/// A scalar shorthand or a full matrix, as accepted in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixOrScalar {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl MatrixOrScalar {
    fn resolve(&self, k: usize) -> Vec<Vec<f64>> {
        match self {
            MatrixOrScalar::Scalar(x) => vec![vec![*x; k]; k],
            MatrixOrScalar::Matrix(m) => m.clone(),
        }
    }
}

impl Default for MatrixOrScalar {
    fn default() -> Self {
        MatrixOrScalar::Scalar(1.0)
    }
}

/// The prior as written in a configuration file; `ntilde_max` defaults to
/// [`default_ntilde_max`] of the sample size.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    #[serde(default)]
    pub alpha: MatrixOrScalar,
    #[serde(default)]
    pub beta: MatrixOrScalar,
    #[serde(default)]
    pub ntilde_max: Option<u64>,
}

impl PriorConfig {
    pub fn resolve(&self, k: usize, n: usize) -> Result<PriorSpec> {
        PriorSpec::new(
            self.alpha.resolve(k),
            self.beta.resolve(k),
            self.ntilde_max.unwrap_or_else(|| default_ntilde_max(n)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(PriorSpec::new(vec![vec![1.0]], vec![vec![0.0]], 5).is_err());
        assert!(PriorSpec::new(vec![vec![1.0]], vec![vec![1.0]], 0).is_err());
        let asym = vec![vec![1.0, 2.0], vec![1.0, 1.0]];
        assert!(PriorSpec::new(asym, vec![vec![1.0; 2]; 2], 5).is_err());
        assert!(PriorSpec::new(vec![vec![1.0]], vec![vec![1.0; 2]; 2], 5).is_err());
    }

    #[test]
    fn config_scalar_and_matrix() {
        let cfg: PriorConfig =
            serde_json::from_str(r#"{"alpha": 2.0, "beta": [[1, 3], [3, 1]]}"#).unwrap();
        let p = cfg.resolve(2, 10).unwrap();
        assert_eq!(p.alpha(0, 1), 2.0);
        assert_eq!(p.beta(0, 1), 3.0);
        assert_eq!(p.ntilde_max(), 1000);
    }
}
