//! Robust peak detection: median + k·MAD threshold with refractory spacing.

use crate::dsp::PipelineConfig;

/// Local maxima of `series` exceeding `median + threshold_k * MAD`, greedily
/// accepted in descending amplitude subject to the refractory spacing.
/// Returned times are sample-aligned seconds from the series start, strictly
/// increasing. Flat or near-empty series yield no peaks.
pub fn detect_peaks(series: &[f64], fs: f64, refractory: f64, threshold_k: f64) -> Vec<f64> {
    if series.len() < 3 || !(fs > 0.0) {
        return Vec::new();
    }
    let med = median(series);
    let deviations: Vec<f64> = series.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&deviations);
    let threshold = med + threshold_k * mad;

    let mut candidates: Vec<usize> = (1..series.len() - 1)
        .filter(|&i| {
            series[i] > series[i - 1] && series[i] >= series[i + 1] && series[i] > threshold
        })
        .collect();
    // Highest first; ties resolved by earlier index for determinism.
    candidates.sort_by(|&a, &b| series[b].total_cmp(&series[a]).then(a.cmp(&b)));

    let min_gap = refractory * fs - 1e-9;
    let mut accepted: Vec<usize> = Vec::new();
    for i in candidates {
        if accepted.iter().all(|&j| (i as f64 - j as f64).abs() >= min_gap) {
            accepted.push(i);
        }
    }
    accepted.sort_unstable();
    accepted.into_iter().map(|i| i as f64 / fs).collect()
}

/// Cough detection: peak search on the rectified dynamic acceleration with
/// the dedicated threshold and separation. Ordinary heartbeats stay below
/// the cough threshold; amplitude alone discriminates.
pub fn detect_cough(dynamic: &[f64], fs: f64, cfg: &PipelineConfig) -> Vec<f64> {
    let rectified: Vec<f64> = dynamic.iter().map(|v| v.abs()).collect();
    detect_peaks(&rectified, fs, cfg.cough_min_separation, cfg.cough_threshold_k)
}

fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
