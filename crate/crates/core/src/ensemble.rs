//! Ensembles over `t ∈ [T, 2T]`: sampling, weighted moments, KS distance.
//!
//! Statistic evaluations run in parallel but are collected in sample order;
//! every reduction afterwards is a single sequential pass, so a seed fixes the
//! output bit for bit regardless of the thread count.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use crate::error::{Error, Result};
use crate::lattice::{sharp_statistic, AnnulusQuery, LatticeSpec};
use crate::numeric::{format_real, CompensatedSum};
use crate::smooth::{DualSpectrum, SmoothingParams};
use crate::Budget;

/// Center and scale of the smooth density `ω`, in units of `T`.
const OMEGA_CENTER: f64 = 1.5;
const OMEGA_SCALE: f64 = 0.25;
const OMEGA_SUPPORT: (f64, f64) = (0.5, 2.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `t` uniform on `[T, 2T]`.
    #[default]
    Uniform,
    /// `t/T` from a normal(1.5, 0.25) truncated to `[0.5, 2.5]`.
    SmoothOmega,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoRule {
    Fixed(f64),
    /// `ρ = T^(−exponent)`.
    Exponent(f64),
}

impl Default for RhoRule {
    fn default() -> Self {
        RhoRule::Exponent(0.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    #[serde(rename = "T")]
    pub t_base: f64,
    pub samples: usize,
    pub weighting: Weighting,
    pub seed: u64,
    pub rho_rule: RhoRule,
}

impl EnsembleConfig {
    pub fn new(t_base: f64, samples: usize, seed: u64) -> Self {
        EnsembleConfig {
            t_base,
            samples,
            weighting: Weighting::default(),
            seed,
            rho_rule: RhoRule::default(),
        }
    }

    pub fn weighting(mut self, w: Weighting) -> Self {
        self.weighting = w;
        self
    }

    pub fn rho_rule(mut self, r: RhoRule) -> Self {
        self.rho_rule = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_base.is_finite() && self.t_base > 0.0) {
            return Err(Error::config(format!("T must be positive, got {}", self.t_base)));
        }
        if self.samples == 0 {
            return Err(Error::config("samples must be positive"));
        }
        let rho = self.rho();
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::config(format!("rho rule gives invalid width {rho}")));
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        match self.rho_rule {
            RhoRule::Fixed(r) => r,
            RhoRule::Exponent(e) => self.t_base.powf(-e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub weight: f64,
}

pub fn sample_points(cfg: &EnsembleConfig) -> Result<Vec<Sample>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let weight = 1.0 / cfg.samples as f64;
    let big_t = cfg.t_base;
    let omega = Normal::new(OMEGA_CENTER, OMEGA_SCALE).expect("fixed parameters");
    let mut out = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let t = match cfg.weighting {
            Weighting::Uniform => big_t * (1.0 + rng.random::<f64>()),
            Weighting::SmoothOmega => loop {
                let s: f64 = omega.sample(&mut rng);
                if (OMEGA_SUPPORT.0..=OMEGA_SUPPORT.1).contains(&s) {
                    break big_t * s;
                }
            },
        };
        out.push(Sample { t, weight });
    }
    Ok(out)
}

/// Evaluated ensemble: `(t, value, weight)` in sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries {
    pub rows: Vec<(f64, f64, f64)>,
}

impl SampleSeries {
    /// Evaluates `f` at every sample, in parallel, keeping sample order.
    pub fn evaluate<F>(samples: &[Sample], f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let values: Vec<f64> = samples.par_iter().map(|s| f(s.t)).collect::<Result<_>>()?;
        Ok(SampleSeries {
            rows: samples
                .iter()
                .zip(values)
                .map(|(s, v)| (s.t, v, s.weight))
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.1)
    }

    pub fn total_weight(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        acc.extend(self.rows.iter().map(|r| r.2));
        acc.value()
    }

    /// `Σ w·f(value)` in sample order.
    pub fn weighted_sum<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let mut acc = CompensatedSum::new();
        acc.extend(self.rows.iter().map(|&(_, v, w)| w * g(v)));
        acc.value()
    }

    pub fn mean(&self) -> f64 {
        self.weighted_sum(|v| v)
    }

    /// Weighted variance with the reliability-weight correction
    /// `Σw(x−μ)² / (1 − Σw²)`; unbiased for equal weights.
    pub fn variance(&self) -> Result<f64> {
        if self.rows.len() < 2 {
            return Err(Error::config("variance needs at least two samples"));
        }
        let mu = self.mean();
        let ss = self.weighted_sum(|v| (v - mu) * (v - mu));
        let mut w2 = CompensatedSum::new();
        w2.extend(self.rows.iter().map(|r| r.2 * r.2));
        Ok((ss / (1.0 - w2.value())).max(0.0))
    }

    /// Writes `t,value,weight` rows with round-trippable reals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,value,weight")?;
        for &(t, v, wt) in &self.rows {
            writeln!(w, "{},{},{}", format_real(t), format_real(v), format_real(wt))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    /// `(m, ⟨X^m⟩ / σ^m)` for `m = 1..=cap`.
    pub normalized_moments: Vec<(u32, f64)>,
    pub ks_distance: f64,
    pub sigma_squared_predicted: f64,
}

impl MomentReport {
    pub const DEFAULT_CAP: u32 = 6;

    pub fn moment(&self, m: u32) -> Option<f64> {
        self.normalized_moments
            .iter()
            .find(|(k, _)| *k == m)
            .map(|&(_, v)| v)
    }

    pub fn from_series(series: &SampleSeries, sigma: f64, cap: u32) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        let variance = series.variance()?;
        let normalized_moments = (1..=cap)
            .map(|m| (m, series.weighted_sum(|v| (v / sigma).powi(m as i32))))
            .collect();
        Ok(MomentReport {
            samples: series.len(),
            mean: series.mean(),
            variance,
            normalized_moments,
            ks_distance: ks_distance(series, sigma),
            sigma_squared_predicted: sigma * sigma,
        })
    }
}

/// `m!/(2^{m/2}(m/2)!)` for even `m`, zero for odd `m`.
pub fn gaussian_moment(m: u32) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    // (m−1)!! = m!/(2^{m/2}(m/2)!)
    (1..m).step_by(2).map(|k| k as f64).product()
}

/// Kolmogorov–Smirnov distance between the weighted empirical law of
/// `value/σ` and the standard normal.
pub fn ks_distance(series: &SampleSeries, sigma: f64) -> f64 {
    let total = series.total_weight();
    let mut pts: Vec<(f64, f64)> = series
        .rows
        .iter()
        .map(|&(_, v, w)| (v / sigma, w / total))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let phi = StdNormal::standard();
    let mut below = CompensatedSum::new();
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < pts.len() {
        let x = pts[i].0;
        let before = below.value();
        while i < pts.len() && pts[i].0 == x {
            below.add(pts[i].1);
            i += 1;
        }
        let after = below.value().min(1.0);
        let f = phi.cdf(x);
        d = d.max((f - before).abs()).max((after - f).abs());
    }
    d
}

pub fn predicted_sigma_squared(lattice: &LatticeSpec, rho: f64) -> f64 {
    4.0 * PI * rho / lattice.beta()
}

pub fn spectral_sigma_squared(lattice: &LatticeSpec, sp: &SmoothingParams) -> Result<f64> {
    Ok(DualSpectrum::new(lattice, sp, Budget::from_env())?.diagonal_variance())
}

/// Sharp annulus statistic at every sample, with `ρ` from the config.
pub fn sharp_series(lattice: &LatticeSpec, cfg: &EnsembleConfig) -> Result<SampleSeries> {
    let samples = sample_points(cfg)?;
    let rho = cfg.rho();
    SampleSeries::evaluate(&samples, |t| {
        Ok(sharp_statistic(lattice, &AnnulusQuery::new(t, rho)?))
    })
}

pub fn smooth_series(spectrum: &DualSpectrum, cfg: &EnsembleConfig) -> Result<SampleSeries> {
    let samples = sample_points(cfg)?;
    SampleSeries::evaluate(&samples, |t| spectrum.statistic(t))
}

pub fn moment_report<F>(statistic: F, cfg: &EnsembleConfig, sigma: f64) -> Result<MomentReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    moment_report_with_cap(statistic, cfg, sigma, MomentReport::DEFAULT_CAP)
}

pub fn moment_report_with_cap<F>(
    statistic: F,
    cfg: &EnsembleConfig,
    sigma: f64,
    cap: u32,
) -> Result<MomentReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if cfg.samples < 2 {
        return Err(Error::config("moment report needs at least two samples"));
    }
    let series = SampleSeries::evaluate(&sample_points(cfg)?, statistic)?;
    MomentReport::from_series(&series, sigma, cap)
}

/// `|⟨S̃⟩|` over a smooth-weighted ensemble.
pub fn mean_decay_check(
    lattice: &LatticeSpec,
    sp: &SmoothingParams,
    cfg: &EnsembleConfig,
) -> Result<f64> {
    if cfg.weighting != Weighting::SmoothOmega {
        return Err(Error::config("mean decay check uses smooth weighting"));
    }
    let spectrum = DualSpectrum::new(lattice, sp, Budget::from_env())?;
    Ok(smooth_series(&spectrum, cfg)?.mean().abs())
}

/// `⟨(f − g)²⟩` over the ensemble.
pub fn difference_second_moment<F, G>(f: F, g: G, cfg: &EnsembleConfig) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
    G: Fn(f64) -> Result<f64> + Sync,
{
    let samples = sample_points(cfg)?;
    let series = SampleSeries::evaluate(&samples, |t| Ok(f(t)? - g(t)?))?;
    Ok(series.weighted_sum(|d| d * d))
}

/// `⟨|S − S̃|²⟩` with the sharp width `ρ = 1/L` taken from `sp`.
pub fn sharp_smooth_difference_moment(
    lattice: &LatticeSpec,
    sp: &SmoothingParams,
    cfg: &EnsembleConfig,
) -> Result<f64> {
    let rho = sp.rho();
    if (cfg.rho() - rho).abs() > 1e-12 * rho {
        return Err(Error::config(format!(
            "ensemble width {} differs from 1/L = {}",
            cfg.rho(),
            rho
        )));
    }
    let spectrum = DualSpectrum::new(lattice, sp, Budget::from_env())?;
    difference_second_moment(
        |t| Ok(sharp_statistic(lattice, &AnnulusQuery::new(t, rho)?)),
        |t| spectrum.statistic(t),
        cfg,
    )
}
