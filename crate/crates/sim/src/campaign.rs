//! Monte Carlo campaigns: independent seeded trials plus aggregate
//! statistics against the `1/q` reference line.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use pmdss_core::field::{dot_product, PrimeField, SymbolVector};

use crate::error::SimError;
use crate::scenario::ScenarioConfig;
use crate::trial::{run_trial, TrialResult};

/// Aggregates over one campaign. Rates are plain fractions of the trial
/// count; the confidence interval uses the normal approximation to the
/// binomial at three sigma.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignStats {
    pub trials: u64,
    /// Among trials where corruption was emitted: detection named exactly
    /// the guilty nodes.
    pub detection_rate: f64,
    /// Corrupted output delivered without being caught, over all trials.
    pub undetected_rate: f64,
    pub undetected_ci3_halfwidth: f64,
    pub inconclusive_rate: f64,
    /// The reference bound `1/q`.
    pub reference_1_over_q: f64,
}

impl CampaignStats {
    pub fn from_results(results: &[TrialResult], q: u64) -> CampaignStats {
        let n = results.len() as f64;
        let active: Vec<&TrialResult> = results.iter().filter(|r| !r.truth.is_empty()).collect();
        let detected_exact = active
            .iter()
            .filter(|r| r.detected == r.truth)
            .count() as f64;
        let undetected = results.iter().filter(|r| r.undetected).count() as f64;
        let inconclusive = results.iter().filter(|r| r.inconclusive).count() as f64;
        let p_hat = if n > 0.0 { undetected / n } else { 0.0 };
        CampaignStats {
            trials: results.len() as u64,
            detection_rate: if active.is_empty() {
                1.0
            } else {
                detected_exact / active.len() as f64
            },
            undetected_rate: p_hat,
            undetected_ci3_halfwidth: if n > 0.0 {
                3.0 * (p_hat * (1.0 - p_hat) / n).sqrt()
            } else {
                0.0
            },
            inconclusive_rate: if n > 0.0 { inconclusive / n } else { 0.0 },
            reference_1_over_q: 1.0 / q as f64,
        }
    }

    pub fn summary_text(&self) -> String {
        format!(
            "trials={}\n\
             detection_rate={:.6}\n\
             undetected_rate={:.6}\n\
             undetected_ci3_halfwidth={:.6}\n\
             inconclusive_rate={:.6}\n\
             reference_1_over_q={:.6}\n\
             ci_method=normal approximation to the binomial, 3 sigma\n",
            self.trials,
            self.detection_rate,
            self.undetected_rate,
            self.undetected_ci3_halfwidth,
            self.inconclusive_rate,
            self.reference_1_over_q
        )
    }
}

/// Runs all trials of the config, seeded independently from the master seed.
pub fn run_campaign(
    config: &ScenarioConfig,
) -> Result<(Vec<TrialResult>, CampaignStats), SimError> {
    config.validate()?;
    let mut results = Vec::with_capacity(config.trials as usize);
    for index in 0..config.trials {
        results.push(run_trial(config, index)?);
    }
    let stats = CampaignStats::from_results(&results, config.q);
    Ok((results, stats))
}

/// Writes `campaign.csv` and `summary.txt` into `dir`.
pub fn write_reports(
    dir: &Path,
    results: &[TrialResult],
    stats: &CampaignStats,
) -> Result<(), SimError> {
    fs::create_dir_all(dir)?;
    let mut csv = String::with_capacity(results.len() * 48);
    csv.push_str(TrialResult::csv_header());
    csv.push('\n');
    for r in results {
        csv.push_str(&r.to_csv_line());
        csv.push('\n');
    }
    fs::write(dir.join("campaign.csv"), csv)?;
    fs::write(dir.join("summary.txt"), stats.summary_text())?;
    Ok(())
}

/// Monte Carlo estimate of the chance that a fixed nonzero error is
/// orthogonal to a uniformly random packet: the `1/q` event the detection
/// bound rests on.
pub fn orthogonality_rate(q: u64, v: usize, samples: u64, seed: u64) -> Result<f64, SimError> {
    let field = PrimeField::new(q)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let e = SymbolVector::random_nonzero(v, field, &mut rng);
    let mut hits = 0u64;
    for _ in 0..samples {
        let x = SymbolVector::random(v, field, &mut rng);
        if dot_product(field, &e, &x)?.is_zero() {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::paper_mode_config;

    #[test]
    fn campaign_is_reproducible_bit_exact() {
        let config = paper_mode_config(8, 20, 4242);
        let (results_a, stats_a) = run_campaign(&config).unwrap();
        let (results_b, stats_b) = run_campaign(&config).unwrap();
        assert_eq!(results_a, results_b);
        assert_eq!(stats_a, stats_b);
    }

    #[test]
    fn stats_are_order_invariant() {
        let config = paper_mode_config(8, 20, 99);
        let (mut results, stats) = run_campaign(&config).unwrap();
        results.reverse();
        let shuffled_stats = CampaignStats::from_results(&results, config.q);
        assert_eq!(stats, shuffled_stats);
    }

    #[test]
    fn reports_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let config = paper_mode_config(8, 5, 7);
        let (results, stats) = run_campaign(&config).unwrap();
        write_reports(dir.path(), &results, &stats).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("campaign.csv")).unwrap();
        assert!(csv.starts_with(TrialResult::csv_header()));
        assert_eq!(csv.lines().count(), 6);
        let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(summary.contains("reference_1_over_q=0.090909"));
    }

    #[test]
    fn orthogonality_rate_near_one_over_q() {
        let rate = orthogonality_rate(11, 4, 100_000, 1).unwrap();
        let p = 1.0 / 11.0;
        let sigma = (p * (1.0 - p) / 100_000.0).sqrt();
        assert!((rate - p).abs() < 3.0 * sigma, "rate {rate}");
    }
}
