//! Welch two-sample test and small summary helpers.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WelchTest {
    pub t: f64,
    /// Welch-Satterthwaite degrees of freedom; NaN when both variances vanish.
    pub df: f64,
    /// One-sided p-value for the alternative `mean(p) > mean(q)`.
    pub p_value: f64,
}

/// Welch's unequal-variance t-test of `H0: mean(p) <= mean(q)`.
///
/// With zero variance in both samples the statistic is degenerate: equal
/// means give p = 0.5, otherwise the ordering of the means decides 0 or 1.
pub fn welch_test(p: &[f64], q: &[f64]) -> Result<WelchTest> {
    if p.len() < 2 || q.len() < 2 {
        return Err(Error::contract(format!(
            "Welch test needs at least two samples per side, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    if p.iter().chain(q).any(|x| !x.is_finite()) {
        return Err(Error::contract("Welch test samples must be finite"));
    }
    let (mp, mq) = (mean(p), mean(q));
    let (a, b) = (variance(p) / p.len() as f64, variance(q) / q.len() as f64);
    let se2 = a + b;
    if se2 == 0.0 {
        let (t, p_value) = match mp.partial_cmp(&mq).expect("finite") {
            std::cmp::Ordering::Equal => (0.0, 0.5),
            std::cmp::Ordering::Greater => (f64::INFINITY, 0.0),
            std::cmp::Ordering::Less => (f64::NEG_INFINITY, 1.0),
        };
        return Ok(WelchTest { t, df: f64::NAN, p_value });
    }
    let t = (mp - mq) / se2.sqrt();
    let df = se2 * se2 / (a * a / (p.len() as f64 - 1.0) + b * b / (q.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::contract(format!("t distribution: {e}")))?;
    Ok(WelchTest {
        t,
        df,
        p_value: dist.cdf(-t),
    })
}

/// One-sided p-value of `mean(p) > mean(q)`.
pub fn one_sided_test(p: &[f64], q: &[f64]) -> Result<f64> {
    welch_test(p, q).map(|w| w.p_value)
}
