//! Band-limited counting function and annulus statistic.
//!
//! Both are truncated trigonometric sums over the dual lattice, damped by a
//! compactly supported kernel `ψ̂(|k|/√M)`. Terms are accumulated in ascending
//! `|k|` with compensated summation so that results do not depend on how the
//! dual points were produced.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::lattice::{enumerate_norms, merge_norms, LatticeSpec, NormShell, Which};
use crate::numeric::CompensatedSum;
use crate::Budget;

/// `L/√M` above which the truncation is considered too coarse for the width.
pub const REGIME_WARN_RATIO: f64 = 0.5;

/// Fourier-side smoothing kernel `ψ̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    /// `exp(1 − 1/(1 − x²))` on `|x| < 1`, zero outside.
    #[default]
    Bump,
}

impl Kernel {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Kernel::Bump => {
                let x2 = x * x;
                if x2 < 1.0 {
                    (1.0 - 1.0 / (1.0 - x2)).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

pub fn default_kernel() -> Kernel {
    Kernel::Bump
}

/// Truncation scale `M`, inverse width `L = 1/ρ` and kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    m: f64,
    l: f64,
    kernel: Kernel,
}

impl SmoothingParams {
    pub fn new(m: f64, l: f64) -> Result<Self> {
        Self::with_kernel(m, l, Kernel::default())
    }

    pub fn with_kernel(m: f64, l: f64, kernel: Kernel) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::domain(format!("M must be positive and finite, got {m}")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::domain(format!("L must be positive and finite, got {l}")));
        }
        let sp = SmoothingParams { m, l, kernel };
        if !sp.in_regime() {
            log::warn!(
                "L/sqrt(M) = {:.3} is not small; smoothing is coarse for this width",
                l / m.sqrt()
            );
        }
        Ok(sp)
    }

    /// Parameters for an annulus of width `rho`.
    pub fn for_width(m: f64, rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::domain(format!("rho must be positive and finite, got {rho}")));
        }
        Self::new(m, 1.0 / rho)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn rho(&self) -> f64 {
        1.0 / self.l
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// `√M`; dual vectors at or beyond this length do not contribute.
    pub fn cutoff(&self) -> f64 {
        self.m.sqrt()
    }

    pub fn in_regime(&self) -> bool {
        self.l / self.m.sqrt() <= REGIME_WARN_RATIO
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Shell {
    r: f64,
    /// `mult · ψ̂(r/√M) / r^{3/2}`
    weight: f64,
    /// `weight · sin(πr/L)`
    stat_weight: f64,
    /// `mult · ψ̂² · sin²(πr/L) / r³`
    var_term: f64,
}

/// Dual-lattice shells with `0 < |k| < √M`, ready for repeated evaluation.
///
/// Build once per (lattice, parameters) and share across threads; every
/// evaluation walks the shells sequentially in ascending `|k|`.
#[derive(Debug, Clone)]
pub struct DualSpectrum {
    lattice: LatticeSpec,
    params: SmoothingParams,
    shells: Vec<Shell>,
}

impl DualSpectrum {
    pub fn new(lattice: &LatticeSpec, params: &SmoothingParams, budget: Budget) -> Result<Self> {
        let shells = enumerate_norms(lattice, params.m(), Which::Dual, budget)?;
        Ok(Self::from_shells(lattice, params, &shells))
    }

    /// Builds the spectrum from raw dual squared norms in any order.
    pub fn from_norms(lattice: &LatticeSpec, params: &SmoothingParams, mut norms: Vec<f64>) -> Self {
        norms.retain(|&x| x < params.m());
        norms.sort_by(f64::total_cmp);
        Self::from_shells(lattice, params, &merge_norms(&norms))
    }

    fn from_shells(lattice: &LatticeSpec, params: &SmoothingParams, shells: &[NormShell]) -> Self {
        let cutoff = params.cutoff();
        let shells = shells
            .iter()
            .filter(|s| s.norm > 0.0 && s.norm < params.m())
            .filter_map(|s| {
                let r = s.norm.sqrt();
                let psi = params.kernel().eval(r / cutoff);
                if psi == 0.0 {
                    return None;
                }
                let mult = s.multiplicity as f64;
                let weight = mult * psi / (r * r.sqrt());
                let sn = (PI * r / params.l()).sin();
                Some(Shell {
                    r,
                    weight,
                    stat_weight: weight * sn,
                    var_term: mult * psi * psi * sn * sn / (r * r * r),
                })
            })
            .collect();
        DualSpectrum {
            lattice: *lattice,
            params: *params,
            shells,
        }
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn params(&self) -> &SmoothingParams {
        &self.params
    }

    /// Number of distinct dual norms that carry weight.
    pub fn len(&self) -> usize {
        self.shells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shells.is_empty()
    }

    /// `Σ mult · |k|^{-3/2} · ψ̂(|k|/√M)` (no oscillating factor).
    pub fn total_weight(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        acc.extend(self.shells.iter().map(|s| s.weight));
        acc.value()
    }

    /// `Ñ(t) = πt²/β − (√t/(βπ)) Σ cos(2πt|k| + π/4) |k|^{-3/2} ψ̂(|k|/√M)`.
    pub fn disc_count(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        let beta = self.lattice.beta();
        let mut acc = CompensatedSum::new();
        for s in &self.shells {
            acc.add(s.weight * (2.0 * PI * t * s.r + FRAC_PI_4).cos());
        }
        Ok(PI * t * t / beta - t.sqrt() / (beta * PI) * acc.value())
    }

    /// `(2/(βπ)) Σ sin(π|k|/L) |k|^{-3/2} sin(2π(t + 1/(2L))|k| + π/4) ψ̂(|k|/√M)`.
    pub fn statistic(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        let beta = self.lattice.beta();
        let shift = t + 0.5 / self.params.l();
        let mut acc = CompensatedSum::new();
        for s in &self.shells {
            acc.add(s.stat_weight * (2.0 * PI * shift * s.r + FRAC_PI_4).sin());
        }
        Ok(2.0 / (beta * PI) * acc.value())
    }

    /// `(Ñ(t+ρ) − Ñ(t) − (π/β)(2tρ + ρ²)) / √t` from two counting-function calls.
    pub fn statistic_two_call(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        let rho = self.params.rho();
        let area = PI / self.lattice.beta() * (2.0 * t * rho + rho * rho);
        Ok((self.disc_count(t + rho)? - self.disc_count(t)? - area) / t.sqrt())
    }

    /// `(4/(β²π²)) Σ sin²(π|k|/L) |k|^{-3} ψ̂²(|k|/√M)`.
    pub fn diagonal_variance(&self) -> f64 {
        let beta = self.lattice.beta();
        let mut acc = CompensatedSum::new();
        acc.extend(self.shells.iter().map(|s| s.var_term));
        4.0 / (beta * beta * PI * PI) * acc.value()
    }
}

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("t must be positive and finite, got {t}")))
    }
}

pub fn smooth_disc_count(lattice: &LatticeSpec, t: f64, sp: &SmoothingParams) -> Result<f64> {
    check_t(t)?;
    DualSpectrum::new(lattice, sp, Budget::from_env())?.disc_count(t)
}

pub fn smooth_statistic(lattice: &LatticeSpec, t: f64, sp: &SmoothingParams) -> Result<f64> {
    check_t(t)?;
    DualSpectrum::new(lattice, sp, Budget::from_env())?.statistic(t)
}

pub fn smooth_statistic_two_call(
    lattice: &LatticeSpec,
    t: f64,
    sp: &SmoothingParams,
) -> Result<f64> {
    check_t(t)?;
    DualSpectrum::new(lattice, sp, Budget::from_env())?.statistic_two_call(t)
}
