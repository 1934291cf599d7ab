use serde::{Deserialize, Serialize};

use super::table::{thousands, Table};
use super::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub max: f64,
}

/// Linear interpolation between closest ranks at position `p * (n - 1)`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

pub fn stats_from_ratios(ratios: &[f64]) -> Result<RatioStats, BenchError> {
    if ratios.is_empty() {
        return Err(BenchError::Invalid("no ratios".into()));
    }
    if let Some(r) = ratios.iter().find(|r| !r.is_finite()) {
        return Err(BenchError::Invalid(format!("non-finite ratio {r}")));
    }
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &x) in ratios.iter().enumerate() {
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    let mut sorted = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(RatioStats {
        n: ratios.len(),
        mean,
        std: (m2 / ratios.len() as f64).sqrt(),
        min: sorted[0],
        p25: percentile(&sorted, 0.25),
        median: percentile(&sorted, 0.5),
        p75: percentile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Statistics of `compressed / source` over token-count pairs.
pub fn ratio_stats(pairs: &[(usize, usize)]) -> Result<RatioStats, BenchError> {
    if let Some(i) = pairs.iter().position(|p| p.0 == 0) {
        return Err(BenchError::Invalid(format!("pair {i} has zero source tokens")));
    }
    let ratios: Vec<f64> = pairs.iter().map(|&(s, c)| c as f64 / s as f64).collect();
    stats_from_ratios(&ratios)
}

impl RatioStats {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["Statistic", "Value"]);
        t.row(["n".to_string(), thousands(self.n as u64)]);
        for (name, v) in [
            ("Mean", self.mean),
            ("Std", self.std),
            ("Min", self.min),
            ("25th percentile", self.p25),
            ("Median", self.median),
            ("75th percentile", self.p75),
            ("Max", self.max),
        ] {
            t.row([name.to_string(), format!("{v:.3}")]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_pairs() {
        let s = ratio_stats(&[(100, 50); 5]).unwrap();
        assert_eq!((s.mean, s.std), (0.5, 0.0));
    }

    #[test]
    fn four_ratios() {
        let s = stats_from_ratios(&[0.8, 0.2, 0.6, 0.4]).unwrap();
        assert!((s.mean - 0.5).abs() < 1e-15);
        assert!((s.median - 0.5).abs() < 1e-15);
        assert!((s.p25 - 0.35).abs() < 1e-15);
        assert!((s.p75 - 0.65).abs() < 1e-15);
        assert_eq!((s.min, s.max), (0.2, 0.8));
    }

    #[test]
    fn errors() {
        assert!(ratio_stats(&[]).is_err());
        assert!(ratio_stats(&[(0, 3)]).is_err());
    }

    #[test]
    fn single_value() {
        let s = stats_from_ratios(&[0.7]).unwrap();
        assert_eq!((s.p25, s.median, s.p75), (0.7, 0.7, 0.7));
    }
}
