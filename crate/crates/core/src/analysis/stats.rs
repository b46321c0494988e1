//! Welch's unequal-variance t-test with a self-contained Student t
//! distribution (regularized incomplete beta via continued fractions).

use serde::{Serialize, Serializer};
use thiserror::Error;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..100_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail probability `P(|T| >= |t|)` of Student's t with `df`
/// degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    incomplete_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (n - 1) variance; zero for a single observation.
    pub variance: f64,
}

impl SampleStats {
    /// Welford's single-pass mean and variance. `None` for an empty sample.
    pub fn from_sample(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (i, &v) in values.iter().enumerate() {
            let delta = v - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (v - mean);
        }
        let n = values.len();
        let variance = if n > 1 { (m2 / (n - 1) as f64).max(0.0) } else { 0.0 };
        Some(SampleStats { n, mean, variance })
    }
}

pub(crate) fn finite_or_null<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    if value.is_finite() {
        serializer.serialize_f64(*value)
    } else {
        serializer.serialize_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchResult {
    #[serde(serialize_with = "finite_or_null")]
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    /// Mean of the second sample minus mean of the first.
    pub mean_delta: f64,
    /// `mean_delta` relative to the first sample's mean.
    #[serde(serialize_with = "finite_or_null")]
    pub relative_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("each sample needs at least two observations (got {0} and {1})")]
    TooFewObservations(usize, usize),
    #[error("both samples are constant and equal")]
    DegenerateSample,
}

/// Welch's two-sample t-test on `a` (baseline) and `b`.
///
/// Two constant samples with different means give `t = ±inf` and `p = 0`;
/// their degrees of freedom fall back to `na + nb - 2`.
pub fn welch_test(a: &[f64], b: &[f64]) -> Result<WelchResult, StatsError> {
    let (Some(sa), Some(sb)) = (SampleStats::from_sample(a), SampleStats::from_sample(b)) else {
        return Err(StatsError::TooFewObservations(a.len(), b.len()));
    };
    welch_from_stats(&sa, &sb)
}

pub fn welch_from_stats(a: &SampleStats, b: &SampleStats) -> Result<WelchResult, StatsError> {
    if a.n < 2 || b.n < 2 {
        return Err(StatsError::TooFewObservations(a.n, b.n));
    }
    let mean_delta = b.mean - a.mean;
    let relative_delta = mean_delta / a.mean;
    let (sa, sb) = (a.variance / a.n as f64, b.variance / b.n as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        if a.mean == b.mean {
            return Err(StatsError::DegenerateSample);
        }
        return Ok(WelchResult {
            t: if a.mean > b.mean {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            df: (a.n + b.n - 2) as f64,
            p_value: 0.0,
            mean_delta,
            relative_delta,
        });
    }
    let t = (a.mean - b.mean) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.n - 1) as f64 + sb * sb / (b.n - 1) as f64);
    Ok(WelchResult {
        t,
        df,
        p_value: t_two_sided_p(t, df),
        mean_delta,
        relative_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_at_integers_and_halves() {
        let mut factorial = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64 + 1.0) - (factorial * n as f64).ln()).abs() < 1e-12);
            factorial *= n as f64;
        }
        let sqrt_pi_ln = std::f64::consts::PI.sqrt().ln();
        assert!((ln_gamma(0.5) - sqrt_pi_ln).abs() < 1e-14);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x and I_x(a, 1) = x^a
        for &x in &[0.1, 0.5, 0.9] {
            assert!((incomplete_beta(1.0, 1.0, x) - x).abs() < 1e-14);
            assert!((incomplete_beta(3.0, 1.0, x) - x * x * x).abs() < 1e-14);
        }
    }

    #[test]
    fn cauchy_tail() {
        // df = 1 is the Cauchy distribution: p = 1 - 2 atan(t) / pi
        for &t in &[0.3, 1.0, 2.0, 7.5] {
            let expected = 1.0 - 2.0 * f64::atan(t) / std::f64::consts::PI;
            assert!((t_two_sided_p(t, 1.0) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_samples() {
        let r = welch_test(&[10.0, 12.0, 14.0], &[10.0, 12.0, 14.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn degenerate_and_separated_constants() {
        assert_eq!(welch_test(&[3.0, 3.0], &[3.0, 3.0]), Err(StatsError::DegenerateSample));
        let r = welch_test(&[3.0, 3.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert_eq!(r.t, f64::NEG_INFINITY);
        assert!(matches!(
            welch_test(&[1.0], &[1.0, 2.0]),
            Err(StatsError::TooFewObservations(1, 2))
        ));
    }

    #[test]
    fn large_degrees_of_freedom_converge() {
        let p = t_two_sided_p(1.959_963_984_540_054, 1e7);
        assert!((p - 0.05).abs() < 1e-6, "{p}");
    }
}
