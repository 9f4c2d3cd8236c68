use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Per-feature statistics emitted for every segment, in output order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stat {
    Mean,
    Max,
    Min,
    Median,
    Std,
    Skew,
    Kurtosis,
}

impl Stat {
    pub const ALL: [Stat; 7] = [
        Stat::Mean,
        Stat::Max,
        Stat::Min,
        Stat::Median,
        Stat::Std,
        Stat::Skew,
        Stat::Kurtosis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stat::Mean => "mean",
            Stat::Max => "max",
            Stat::Min => "min",
            Stat::Median => "median",
            Stat::Std => "std",
            Stat::Skew => "skew",
            Stat::Kurtosis => "kurtosis",
        }
    }
}

pub const STATS_PER_FEATURE: usize = Stat::ALL.len();

/// Statistics of a single column.
///
/// `std` uses the n−1 denominator (0 for a single value). Skew is the sample
/// third standardized moment `m3 / m2^1.5`, kurtosis the excess fourth moment
/// `m4 / m2^2 − 3`, both with 1/n central moments; both are 0 for a constant
/// column.
pub fn column_stats(values: &[f64]) -> [f64; STATS_PER_FEATURE] {
    let n = values.len();
    debug_assert!(n > 0);
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };

    if max == min {
        return [mean, max, min, median, 0.0, 0.0, 0.0];
    }

    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std = if n > 1 { (m2 / (nf - 1.0)).sqrt() } else { 0.0 };
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let skew = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2) - 3.0;
    [mean, max, min, median, std, skew, kurtosis]
}

/// Statistics of every column of a segment, laid out feature-major:
/// `[f0.mean, f0.max, …, f0.kurtosis, f1.mean, …]`.
pub fn segment_stats(segment: &Matrix) -> Result<Vec<f64>> {
    if segment.rows() == 0 {
        return Err(Error::data("empty segment"));
    }
    let mut out = Vec::with_capacity(segment.cols() * STATS_PER_FEATURE);
    for c in 0..segment.cols() {
        out.extend_from_slice(&column_stats(&segment.column_values(c)));
    }
    Ok(out)
}

/// Column names matching the layout of [`segment_stats`].
pub fn stats_header(base_features: usize) -> Vec<String> {
    (0..base_features)
        .flat_map(|f| Stat::ALL.iter().map(move |s| format!("f{f}_{}", s.name())))
        .collect()
}
