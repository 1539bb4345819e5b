/// z-quantile of the two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); NaN below two samples.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Mean with its standard error and normal 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            mean: mean(xs),
            se: sample_sd(xs) / (xs.len() as f64).sqrt(),
            n: xs.len(),
        }
    }

    /// `self - reference` with independent standard errors combined.
    pub fn minus(&self, reference: &Summary) -> Self {
        Self {
            mean: self.mean - reference.mean,
            se: self.se.hypot(reference.se),
            n: self.n,
        }
    }

    pub fn ci_low(&self) -> f64 {
        self.mean - Z95 * self.se
    }

    pub fn ci_high(&self) -> f64 {
        self.mean + Z95 * self.se
    }

    /// Whether `|mean| > k * se`.
    pub fn exceeds(&self, k: f64) -> bool {
        self.mean.abs() > k * self.se
    }
}
