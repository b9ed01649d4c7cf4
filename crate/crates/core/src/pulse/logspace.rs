//! Log-gamma based helpers. Every density in the samplers is evaluated in log
//! space through these functions.

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln B(a, b)` for positive `a`, `b`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln C(n, k)`; negative infinity when `k > n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `x ln y` with the convention `0 ln 0 = 0`.
pub fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Numerically stable `ln Σ exp(x_i)`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Table of `ln k!` for the integer arguments the chains touch repeatedly.
#[derive(Debug, Clone)]
pub struct LnFactorial {
    table: Vec<f64>,
}

impl LnFactorial {
    const MAX_TABLE: u64 = 1 << 22;

    /// Tabulates `ln k!` for `k <= max` (capped); larger arguments fall back
    /// to `ln_gamma`.
    pub fn new(max: u64) -> Self {
        let len = max.min(Self::MAX_TABLE) as usize + 1;
        let table = (0..len).map(|k| ln_gamma(k as f64 + 1.0)).collect();
        LnFactorial { table }
    }

    #[inline]
    pub fn get(&self, k: u64) -> f64 {
        match self.table.get(k as usize) {
            Some(&v) => v,
            None => ln_gamma(k as f64 + 1.0),
        }
    }

    #[inline]
    pub fn ln_choose(&self, n: u64, k: u64) -> f64 {
        if k > n {
            f64::NEG_INFINITY
        } else {
            self.get(n) - self.get(k) - self.get(n - k)
        }
    }
}
