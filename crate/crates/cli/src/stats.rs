/// Mean with a normal-approximation 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

const Z95: f64 = 1.959_963_984_540_054;

/// Sums in slice order, so equal inputs give equal bits.
pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary { n, mean: f64::NAN, std: f64::NAN, ci95_low: f64::NAN, ci95_high: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let half = Z95 * std / (n as f64).sqrt();
    Summary { n, mean, std, ci95_low: mean - half, ci95_high: mean + half }
}
