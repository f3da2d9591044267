//! Estimators and model fits over trial datasets: dispersion summaries with
//! bootstrap confidence intervals, the paired Dekking-Host bound check, the
//! event-B probability bound, and dispersion-vs-n scaling fits.
//!
//! The dispersion measure is mad, the mean absolute deviation about the
//! sample mean, because that is the population quantity the coupling bounds
//! control; iqr is reported alongside for robustness.

use crate::num::{real, real_of_usize, Real};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bootstrap resamples for percentile intervals.
pub const BOOTSTRAP_RESAMPLES: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("too few samples: need {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: BOOTSTRAP_RESAMPLES,
            seed: 0x626f_6f74,
        }
    }
}

/// Per-n summary of one record group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats<R> {
    pub n: u64,
    pub count: usize,
    pub mean: R,
    pub std: R,
    /// Mean absolute deviation about the sample mean, `E|D - E D|` empirically.
    pub mad: R,
    pub iqr: R,
    /// 5, 25, 50, 75, 95 percent quantiles.
    pub quantiles: [R; 5],
    /// Bootstrap 95% percentile CI for mad.
    pub mad_ci: (R, R),
}

pub fn mean<R: Real>(xs: &[R]) -> R {
    xs.iter().fold(R::zero(), |a, &x| a + x) / real_of_usize(xs.len())
}

/// Mean absolute deviation about the sample mean.
pub fn mad<R: Real>(xs: &[R]) -> R {
    let m = mean(xs);
    xs.iter().fold(R::zero(), |a, &x| a + (x - m).abs()) / real_of_usize(xs.len())
}

fn sample_std<R: Real>(xs: &[R]) -> R {
    if xs.len() < 2 {
        return R::zero();
    }
    let m = mean(xs);
    let ss = xs.iter().fold(R::zero(), |a, &x| a + (x - m) * (x - m));
    (ss / real_of_usize(xs.len() - 1)).sqrt()
}

/// Linear-interpolation quantile on a sorted slice (the common "type 7").
fn quantile_sorted<R: Real>(sorted: &[R], p: f64) -> R {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = real::<R>(h - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn percentile_ci<R: Real>(mut resampled: Vec<R>) -> (R, R) {
    resampled.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    (
        quantile_sorted(&resampled, 0.025),
        quantile_sorted(&resampled, 0.975),
    )
}

fn bootstrap_statistic<R: Real, F: Fn(&[R]) -> R>(
    xs: &[R],
    cfg: &BootstrapConfig,
    stat: F,
) -> (R, R) {
    let mut rng = SplitMix64::new(cfg.seed);
    let mut buf = vec![R::zero(); xs.len()];
    let mut stats = Vec::with_capacity(cfg.resamples);
    for _ in 0..cfg.resamples {
        for slot in buf.iter_mut() {
            *slot = xs[rng.next_index(xs.len())];
        }
        stats.push(stat(&buf));
    }
    percentile_ci(stats)
}

/// Standard estimates for one n-group; deterministic given the bootstrap
/// seed.
pub fn summarize<R: Real>(
    n: u64,
    values: &[R],
    cfg: &BootstrapConfig,
) -> Result<SummaryStats<R>, AnalysisError> {
    if values.len() < 2 {
        return Err(AnalysisError::TooFewSamples {
            need: 2,
            got: values.len(),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let quantiles = [
        quantile_sorted(&sorted, 0.05),
        quantile_sorted(&sorted, 0.25),
        quantile_sorted(&sorted, 0.50),
        quantile_sorted(&sorted, 0.75),
        quantile_sorted(&sorted, 0.95),
    ];
    let mad_ci = bootstrap_statistic(values, cfg, |xs| mad(xs));
    Ok(SummaryStats {
        n,
        count: values.len(),
        mean: mean(values),
        std: sample_std(values),
        mad: mad(values),
        iqr: quantiles[3] - quantiles[1],
        quantiles,
        mad_ci,
    })
}

/// Empirical `E|D1 - D2|` against the analytic coupling bound
/// (`8 E[X]`, or `8 E[X] k` for the pruned pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDispersion<R> {
    pub n: u64,
    pub count: usize,
    pub mean_abs_diff: R,
    pub ci: (R, R),
    pub bound: R,
    /// True when the CI upper endpoint sits below the bound.
    pub satisfied_within_ci: bool,
}

pub fn paired_dispersion<R: Real>(
    n: u64,
    pairs: &[(R, R)],
    bound: R,
    cfg: &BootstrapConfig,
) -> Result<PairedDispersion<R>, AnalysisError> {
    if pairs.len() < 2 {
        return Err(AnalysisError::TooFewSamples {
            need: 2,
            got: pairs.len(),
        });
    }
    let diffs: Vec<R> = pairs.iter().map(|&(a, b)| (a - b).abs()).collect();
    let point = mean(&diffs);
    let ci = bootstrap_statistic(&diffs, cfg, |xs| mean(xs));
    Ok(PairedDispersion {
        n,
        count: pairs.len(),
        mean_abs_diff: point,
        ci,
        bound,
        satisfied_within_ci: ci.1 < bound,
    })
}

/// Empirical `P(B)` against the plug-in bound `E|V_gamma| / (d (d-1)^{k-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBReport<R> {
    pub n: u64,
    pub k: u32,
    pub count: usize,
    pub p_b_hat: R,
    pub ci: (R, R),
    pub mean_v_gamma: R,
    pub bound: R,
    /// True when the CI lower endpoint does not exceed the plug-in bound.
    pub consistent: bool,
}

pub fn event_b_report<R: Real>(
    n: u64,
    k: u32,
    d: u8,
    flags_and_projections: &[(bool, u64)],
    cfg: &BootstrapConfig,
) -> Result<EventBReport<R>, AnalysisError> {
    if flags_and_projections.len() < 2 {
        return Err(AnalysisError::TooFewSamples {
            need: 2,
            got: flags_and_projections.len(),
        });
    }
    let indicators: Vec<R> = flags_and_projections
        .iter()
        .map(|&(b, _)| if b { R::one() } else { R::zero() })
        .collect();
    let v_gamma: Vec<R> = flags_and_projections
        .iter()
        .map(|&(_, v)| real(v as f64))
        .collect();
    let p_hat = mean(&indicators);
    let ci = bootstrap_statistic(&indicators, cfg, |xs| mean(xs));
    let mean_v = mean(&v_gamma);
    let denom = real::<R>(d as f64) * real::<R>((d - 1) as f64).powi(k as i32 - 1);
    let bound = mean_v / denom;
    Ok(EventBReport {
        n,
        k,
        count: flags_and_projections.len(),
        p_b_hat: p_hat,
        ci,
        mean_v_gamma: mean_v,
        bound,
        consistent: ci.0 <= bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    /// y = a
    Constant,
    /// y = a + b ln n
    Log,
    /// y = a n^beta
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit<R> {
    pub model: ScalingModel,
    /// `[a]`, `[a, b]`, or `[a, beta]`.
    pub params: Vec<R>,
    /// Residual sum of squares in the original (untransformed) space.
    pub rss: R,
    /// Small-sample corrected information score; lower is better.
    pub score: R,
}

/// Fits of all candidate models plus the selected one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit<R> {
    pub fits: Vec<ModelFit<R>>,
    pub chosen: ScalingModel,
}

impl<R: Real> ScalingFit<R> {
    pub fn chosen_fit(&self) -> &ModelFit<R> {
        self.fits
            .iter()
            .find(|f| f.model == self.chosen)
            .expect("chosen model is among the fits")
    }
}

fn ols<R: Real>(xs: &[R], ys: &[R]) -> (R, R) {
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = R::zero();
    let mut sxy = R::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

fn rss<R: Real, F: Fn(R) -> R>(ns: &[R], ys: &[R], f: F) -> R {
    ns.iter()
        .zip(ys)
        .fold(R::zero(), |acc, (&n, &y)| {
            let e = y - f(n);
            acc + e * e
        })
}

/// AICc on Gaussian residuals; `p` counts model parameters (variance
/// excluded, identical across models so it cancels).
fn aicc<R: Real>(m: usize, p: usize, rss: R) -> R {
    let m_r = real_of_usize::<R>(m);
    let floor = real::<R>(1e-300);
    let base = m_r * (rss.max(floor) / m_r).ln();
    let penalty = real::<R>((2 * p) as f64)
        + real::<R>((2 * p * (p + 1)) as f64 / (m - p - 1).max(1) as f64);
    base + penalty
}

/// Least-squares fits of Constant, Log and Power dispersion-vs-n models with
/// small-sample-corrected information-score selection. Input order does not
/// matter; n values must be distinct and at least 4 points are required.
/// The Power model is fitted only when every dispersion is positive.
pub fn fit_scaling<R: Real>(points: &[(u64, R)]) -> Result<ScalingFit<R>, AnalysisError> {
    if points.len() < 4 {
        return Err(AnalysisError::TooFewSamples {
            need: 4,
            got: points.len(),
        });
    }
    let mut pts = points.to_vec();
    pts.sort_by_key(|&(n, _)| n);
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(AnalysisError::DegenerateInput(
            "duplicate n values".into(),
        ));
    }
    if pts.iter().any(|&(n, _)| n == 0) {
        return Err(AnalysisError::DegenerateInput("n must be positive".into()));
    }
    let ns: Vec<R> = pts.iter().map(|&(n, _)| real(n as f64)).collect();
    let ys: Vec<R> = pts.iter().map(|&(_, y)| y).collect();
    let log_ns: Vec<R> = ns.iter().map(|&n| n.ln()).collect();
    let m = pts.len();

    let mut fits = Vec::with_capacity(3);

    let a = mean(&ys);
    let r = rss(&ns, &ys, |_| a);
    fits.push(ModelFit {
        model: ScalingModel::Constant,
        params: vec![a],
        rss: r,
        score: aicc(m, 1, r),
    });

    let (a, b) = ols(&log_ns, &ys);
    let r = rss(&ns, &ys, |n| a + b * n.ln());
    fits.push(ModelFit {
        model: ScalingModel::Log,
        params: vec![a, b],
        rss: r,
        score: aicc(m, 2, r),
    });

    if ys.iter().all(|&y| y > R::zero()) {
        let log_ys: Vec<R> = ys.iter().map(|&y| y.ln()).collect();
        let (log_a, beta) = ols(&log_ns, &log_ys);
        let a = log_a.exp();
        let r = rss(&ns, &ys, |n| a * n.powf(beta));
        fits.push(ModelFit {
            model: ScalingModel::Power,
            params: vec![a, beta],
            rss: r,
            score: aicc(m, 2, r),
        });
    }

    let chosen = fits
        .iter()
        .min_by(|x, y| x.score.partial_cmp(&y.score).expect("finite scores"))
        .expect("at least one model")
        .model;
    Ok(ScalingFit { fits, chosen })
}

/// Mean |D over even trial - D over the following odd trial|: pairs
/// independent replicas and estimates `E|Z - Z'|`, an upper-bound proxy for
/// mad by the tightness lemma.
pub fn tightness_statistic<R: Real>(values: &[R]) -> Result<R, AnalysisError> {
    if values.len() < 4 || values.len() % 2 != 0 {
        return Err(AnalysisError::TooFewSamples {
            need: 4,
            got: values.len(),
        });
    }
    let diffs: Vec<R> = values
        .chunks_exact(2)
        .map(|pair| (pair[0] - pair[1]).abs())
        .collect();
    Ok(mean(&diffs))
}
