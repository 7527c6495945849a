//! Mean and standard error of per-episode results.

/// Mean, sample standard deviation and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Uses the `n - 1` denominator; 0 for fewer than two values.
    pub std_dev: f64,
    /// `std_dev / sqrt(n)`.
    pub std_error: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                std_dev: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_dev = if n < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        Self {
            n,
            mean,
            std_dev,
            std_error: std_dev / (n as f64).sqrt(),
        }
    }
}

/// Standard error of the difference of two independent means.
pub fn pooled_std_error(a: &Summary, b: &Summary) -> f64 {
    (a.std_error * a.std_error + b.std_error * b.std_error).sqrt()
}

/// How many pooled standard errors `a.mean` lies above `b.mean`.
pub fn separation(a: &Summary, b: &Summary) -> f64 {
    (a.mean - b.mean) / pooled_std_error(a, b)
}
