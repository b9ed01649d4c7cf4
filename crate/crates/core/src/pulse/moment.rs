use crate::observation::SufficientStats;

use super::prior::PriorSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    /// `min_i Σ_j (E_ij + α_ij)`.
    pub lambda: f64,
    /// Whether `lambda > moment + 1`, the condition under which the posterior
    /// moment of that order is finite.
    pub exists: bool,
}

pub fn moment_existence(stats: &SufficientStats, prior: &PriorSpec, moment: u32) -> MomentCheck {
    let k = stats.k();
    let lambda = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| stats.e()[i][j] as f64 + prior.alpha(i, j))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    MomentCheck {
        lambda,
        exists: lambda > f64::from(moment) + 1.0,
    }
}
