//! RTF benchmark: repeated `measure_rtf` runs per swarm size, summarized as CSV.

use sib_core::sim::{measure_rtf, RtfSample, SimError};
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub n_drones: usize,
    pub rtf_median: f64,
    pub rtf_min: f64,
    pub rtf_max: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    /// Sorted by `n_drones`.
    pub rows: Vec<BenchRow>,
}

pub const CSV_HEADER: &str = "n,rtf_median,rtf_min,rtf_max,runs";

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.4},{:.4},{:.4},{}",
                r.n_drones, r.rtf_median, r.rtf_min, r.rtf_max, r.runs
            )
            .expect("writing to a String");
        }
        out
    }

    /// Sizes at which the median RTF rises by more than `tolerance` (a fraction)
    /// over the previous size.
    pub fn trend_violations(&self, tolerance: f64) -> Vec<(usize, usize)> {
        self.rows
            .windows(2)
            .filter(|w| w[1].rtf_median > w[0].rtf_median * (1.0 + tolerance))
            .map(|w| (w[0].n_drones, w[1].n_drones))
            .collect()
    }
}

/// Median of the middle two for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

pub fn summarize(n_drones: usize, samples: &[RtfSample]) -> BenchRow {
    let rtfs: Vec<f64> = samples.iter().map(|s| s.rtf).collect();
    BenchRow {
        n_drones,
        rtf_median: median(&rtfs),
        rtf_min: rtfs.iter().copied().fold(f64::INFINITY, f64::min),
        rtf_max: rtfs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        runs: samples.len(),
    }
}

/// Runs `measure` `runs` times for every size, smallest size first.
pub fn bench_with<M>(sizes: &[usize], duration: f64, runs: usize, mut measure: M) -> Result<BenchReport, SimError>
where
    M: FnMut(usize, f64) -> Result<RtfSample, SimError>,
{
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let mut rows = Vec::with_capacity(sizes.len());
    for n in sizes {
        let samples = (0..runs.max(1))
            .map(|_| measure(n, duration))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(summarize(n, &samples));
    }
    Ok(BenchReport { rows })
}

/// The real benchmark. One short unmeasured run per size warms caches and
/// allocator pools first.
pub fn bench(sizes: &[usize], duration: f64, runs: usize) -> Result<BenchReport, SimError> {
    bench_with(sizes, duration, runs, |n, d| {
        measure_rtf(n, d.min(1.0))?;
        measure_rtf(n, d)
    })
}
