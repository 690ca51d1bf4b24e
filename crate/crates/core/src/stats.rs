//! Small estimators shared by the Monte-Carlo experiments.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Result, ScbfError};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Two-sided Student-t quantile for confidence `level` with `dof` degrees of freedom.
pub fn t_quantile(level: f64, dof: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
    t.inverse_cdf(0.5 + level / 2.0)
}

/// Ordinary least squares `y ≈ a + b x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub n: usize,
}

impl LinearFit {
    /// Half-width of the two-sided confidence interval for the slope.
    pub fn slope_ci(&self, level: f64) -> f64 {
        if self.n <= 2 {
            return f64::INFINITY;
        }
        t_quantile(level, (self.n - 2) as f64) * self.slope_se
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() {
        return Err(ScbfError::InvalidArgument("x and y lengths differ".into()));
    }
    if n < 3 {
        return Err(ScbfError::InsufficientSamples(format!("line fit needs 3 points, got {n}")));
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ScbfError::InvalidArgument("degenerate abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_se = (rss / (n - 2) as f64 / sxx).sqrt();
    Ok(LinearFit { intercept, slope, slope_se, n })
}

/// Mean and batch-means standard error of a correlated series.
pub fn batch_means(xs: &[f64], batches: usize) -> Result<(f64, f64)> {
    if batches < 2 || xs.len() < batches {
        return Err(ScbfError::InsufficientSamples(format!(
            "{} samples cannot fill {batches} batches",
            xs.len()
        )));
    }
    let len = xs.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| mean(&xs[b * len..(b + 1) * len])).collect();
    Ok((mean(&xs[..len * batches]), std_error(&means)))
}
