//! Planar lattices `⟨1, α+iβ⟩`: exact squared norms, sharp disc and annulus
//! counts, squared-norm spectra and norm gaps.
//!
//! Counting walks the rows `n` of the lattice in ascending order. In each row
//! the admissible `m` form one contiguous interval around `-nα`, so a disc of
//! radius `t` costs `O(t/β)` square roots. Interval endpoints are decided by
//! [`LatticeSpec::contains`], which falls back to double-double arithmetic
//! whenever a point lies within a few ulps of the boundary. Discs are closed
//! (`|x| <= t`), so annuli are the half-open radial ranges `(t, t+ρ]`.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Budget, Error, Result};
use crate::numeric::Dd;

/// Multiple of `ε · scale` below which a boundary decision is redone in
/// double-double precision.
const TIE_ULPS: f64 = 4.0;

/// Relative tolerance under which two squared norms are considered equal.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// The lattice spanned by `1` and `α + iβ`, with `β > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    alpha: f64,
    beta: f64,
}

/// Integer coordinates in the basis `{1, α+iβ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub m: i64,
    pub n: i64,
}

/// Integer coordinates in the dual basis `{1 + iξ, iη}` with `ξ = −α/β`,
/// `η = 1/β`: the vector `a·(1, ξ) + b·(0, η)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DualPoint {
    pub a: i64,
    pub b: i64,
}

impl LatticePoint {
    pub fn new(m: i64, n: i64) -> Self {
        LatticePoint { m, n }
    }
}

impl LatticeSpec {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::domain(format!("alpha must be finite, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::domain(format!("beta must be positive, got {beta}")));
        }
        Ok(LatticeSpec { alpha, beta })
    }

    /// `ℤ²`.
    pub fn standard() -> Self {
        LatticeSpec {
            alpha: 0.0,
            beta: 1.0,
        }
    }

    /// The generic test lattice `(α, β) = (π − 3, e/2)`.
    pub fn generic() -> Self {
        LatticeSpec {
            alpha: PI - 3.0,
            beta: E / 2.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Covolume, which is `β` for this basis.
    pub fn determinant(&self) -> f64 {
        self.beta
    }

    /// `ξ = −α/β`, the second coordinate of the first dual basis vector.
    pub fn xi(&self) -> f64 {
        -self.alpha / self.beta
    }

    /// `η = 1/β`, the length of the second dual basis vector.
    pub fn eta(&self) -> f64 {
        1.0 / self.beta
    }

    /// Covolume of the dual lattice, `1/β`.
    pub fn dual_determinant(&self) -> f64 {
        self.eta()
    }

    /// `(m + nα)² + (nβ)²`, evaluated as `u = m + nα`, `v = nβ`, `u² + v²`.
    #[inline]
    pub fn squared_norm(&self, p: LatticePoint) -> f64 {
        let u = p.m as f64 + p.n as f64 * self.alpha;
        let v = p.n as f64 * self.beta;
        u * u + v * v
    }

    /// Squared norm in double-double precision.
    #[inline]
    pub fn squared_norm_dd(&self, p: LatticePoint) -> Dd {
        let u = Dd::prod(p.n as f64, self.alpha).add_f64(p.m as f64);
        let v = Dd::prod(p.n as f64, self.beta);
        u.square() + v.square()
    }

    /// `a² + (aξ + bη)²`, the squared length of a dual lattice vector.
    ///
    /// The dual lattice is `(i/β)·Λ`; the point `(a, b)` is the image of the
    /// primal point `(m, n) = (b, −a)`.
    pub fn dual_squared_norm(&self, d: DualPoint) -> f64 {
        let (a, b) = (d.a as f64, d.b as f64);
        let w = a * self.xi() + b * self.eta();
        a * a + w * w
    }

    /// Whether `p` lies in the closed disc whose squared radius is `radius`.
    #[inline]
    pub fn contains(&self, p: LatticePoint, radius: &SquaredRadius) -> bool {
        let nf = p.n as f64;
        let na = nf * self.alpha;
        let u = p.m as f64 + na;
        let v = nf * self.beta;
        let sn = u * u + v * v;
        let diff = sn - radius.approx;
        let spread = p.m.unsigned_abs() as f64 + na.abs();
        let scale = radius.approx + spread * spread + v * v;
        if diff.abs() > TIE_ULPS * f64::EPSILON * scale {
            return diff < 0.0;
        }
        (self.squared_norm_dd(p) - radius.exact).signum() <= 0
    }

    /// Inclusive `m`-range of row `n` inside the closed disc, or `None`.
    #[inline]
    fn row_interval(&self, n: i64, radius: &SquaredRadius) -> Option<(i64, i64)> {
        let v = n as f64 * self.beta;
        let rem = radius.approx - v * v;
        let w = if rem > 0.0 { rem.sqrt() } else { 0.0 };
        let c = -(n as f64) * self.alpha;
        let mut lo = (c - w).ceil() as i64;
        let mut hi = (c + w).floor() as i64;
        let inside = |m: i64| self.contains(LatticePoint { m, n }, radius);
        while inside(hi + 1) {
            hi += 1;
        }
        while hi >= lo && !inside(hi) {
            hi -= 1;
        }
        while inside(lo - 1) {
            lo -= 1;
        }
        while lo <= hi && !inside(lo) {
            lo += 1;
        }
        (lo <= hi).then_some((lo, hi))
    }

    #[inline]
    fn row_count(&self, n: i64, radius: &SquaredRadius) -> u64 {
        self.row_interval(n, radius)
            .map_or(0, |(lo, hi)| (hi - lo + 1) as u64)
    }

    /// Largest `|n|` whose row can meet the disc.
    fn row_limit(&self, radius: &SquaredRadius) -> i64 {
        (radius.root() / self.beta).floor() as i64 + 1
    }

    /// Visits every lattice point in the closed disc, rows ascending in `n`,
    /// then ascending in `m`.
    pub fn for_each_point_within<F: FnMut(LatticePoint)>(&self, radius: &SquaredRadius, mut f: F) {
        let limit = self.row_limit(radius);
        for n in -limit..=limit {
            if let Some((lo, hi)) = self.row_interval(n, radius) {
                for m in lo..=hi {
                    f(LatticePoint { m, n });
                }
            }
        }
    }

    /// Rough number of points with squared norm at most `bound`.
    pub fn estimated_points(&self, bound: f64) -> f64 {
        PI * bound / self.beta + 4.0 * bound.sqrt() / self.beta.min(1.0) + 1.0
    }
}

/// A squared radius held both as a double and exactly (double-double).
#[derive(Debug, Clone, Copy)]
pub struct SquaredRadius {
    approx: f64,
    exact: Dd,
}

impl SquaredRadius {
    /// Disc of radius `t`; `t²` is represented exactly.
    pub fn from_radius(t: f64) -> Self {
        let exact = Dd::square_f64(t);
        SquaredRadius {
            approx: exact.to_f64(),
            exact,
        }
    }

    /// Disc whose squared radius is `bound`.
    pub fn from_squared(bound: f64) -> Self {
        SquaredRadius {
            approx: bound,
            exact: Dd::from_f64(bound),
        }
    }

    pub fn from_dd(exact: Dd) -> Self {
        SquaredRadius {
            approx: exact.to_f64(),
            exact,
        }
    }

    pub fn value(&self) -> f64 {
        self.approx
    }

    pub fn exact(&self) -> Dd {
        self.exact
    }

    fn root(&self) -> f64 {
        self.approx.max(0.0).sqrt()
    }
}

/// The annulus `t < |x| <= t + ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusQuery {
    t: f64,
    rho: f64,
}

impl AnnulusQuery {
    pub fn new(t: f64, rho: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::domain(format!("inner radius must be positive, got {t}")));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::domain(format!("width must be positive, got {rho}")));
        }
        Ok(AnnulusQuery { t, rho })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn outer(&self) -> f64 {
        self.t + self.rho
    }

    /// `π/β · (2tρ + ρ²)`, the expected number of points.
    pub fn expected_count(&self, lattice: &LatticeSpec) -> f64 {
        PI / lattice.beta * (2.0 * self.t * self.rho + self.rho * self.rho)
    }
}

fn check_radius(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("radius must be finite and non-negative, got {t}")))
    }
}

/// `N_Λ(t)`: number of lattice points with `|x| <= t`.
pub fn count_disc(lattice: &LatticeSpec, t: f64) -> Result<u64> {
    check_radius(t)?;
    let radius = SquaredRadius::from_radius(t);
    let limit = lattice.row_limit(&radius);
    Ok((-limit..=limit).map(|n| lattice.row_count(n, &radius)).sum())
}

/// Number of lattice points with `t < |x| <= t + ρ`, in a single row sweep.
pub fn count_annulus(lattice: &LatticeSpec, q: &AnnulusQuery) -> u64 {
    let inner = SquaredRadius::from_radius(q.t);
    let outer = SquaredRadius::from_radius(q.outer());
    let limit = lattice.row_limit(&outer);
    let mut total = 0u64;
    for n in -limit..=limit {
        total += lattice.row_count(n, &outer) - lattice.row_count(n, &inner);
    }
    total
}

/// `S_Λ(t, ρ) = (N(t+ρ) − N(t) − π/β·(2tρ+ρ²)) / √t`.
pub fn sharp_statistic(lattice: &LatticeSpec, q: &AnnulusQuery) -> f64 {
    let count = count_annulus(lattice, q) as f64;
    (count - q.expected_count(lattice)) / q.t.sqrt()
}

/// `Δ_Λ(t) = N_Λ(t) − π t²/β`.
pub fn disc_error(lattice: &LatticeSpec, t: f64) -> Result<f64> {
    let count = count_disc(lattice, t)? as f64;
    Ok(count - PI / lattice.beta * t * t)
}

/// `F_Λ(t) = Δ_Λ(t) / √t`, defined for `t > 0`.
pub fn normalized_disc_error(lattice: &LatticeSpec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("normalized error needs t > 0, got {t}")));
    }
    Ok(disc_error(lattice, t)? / t.sqrt())
}

/// Which of the two lattices to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    Primal,
    Dual,
}

/// One squared-norm value and the number of lattice points attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormShell {
    pub norm: f64,
    pub multiplicity: u64,
}

/// All points with squared norm `<= bound`, each with its squared norm,
/// in row order (`n` ascending, then `m` ascending).
pub fn enumerate_points(
    lattice: &LatticeSpec,
    bound: f64,
    budget: Budget,
) -> Result<Vec<(LatticePoint, f64)>> {
    check_bound(bound)?;
    budget.check("lattice points", lattice.estimated_points(bound))?;
    let radius = SquaredRadius::from_squared(bound);
    let mut out = Vec::with_capacity(lattice.estimated_points(bound) as usize);
    lattice.for_each_point_within(&radius, |p| out.push((p, lattice.squared_norm(p))));
    Ok(out)
}

fn check_bound(bound: f64) -> Result<()> {
    if bound.is_finite() && bound >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("norm bound must be finite and non-negative, got {bound}")))
    }
}

/// Sorted squared norms `<= bound` with multiplicities. Norms closer than
/// `1e-9 · max(1, x)` are merged into one shell.
pub fn enumerate_norms(
    lattice: &LatticeSpec,
    bound: f64,
    which: Which,
    budget: Budget,
) -> Result<Vec<NormShell>> {
    // The dual lattice is the primal one rotated by 90° and scaled by 1/β.
    let beta_sq = lattice.beta * lattice.beta;
    let mut norms: Vec<f64> = match which {
        Which::Primal => enumerate_points(lattice, bound, budget)?
            .into_iter()
            .map(|(_, sn)| sn)
            .collect(),
        Which::Dual => enumerate_points(lattice, bound * beta_sq, budget)?
            .into_iter()
            .map(|(_, sn)| sn / beta_sq)
            .filter(|&sn| sn <= bound)
            .collect(),
    };
    norms.sort_unstable_by(f64::total_cmp);
    Ok(merge_norms(&norms))
}

/// Groups an ascending list of squared norms into shells.
pub fn merge_norms(sorted: &[f64]) -> Vec<NormShell> {
    let mut shells: Vec<NormShell> = Vec::new();
    for &x in sorted {
        match shells.last_mut() {
            Some(last) if x - last.norm < COINCIDENCE_TOL * last.norm.max(1.0) => {
                last.multiplicity += 1;
            }
            _ => shells.push(NormShell {
                norm: x,
                multiplicity: 1,
            }),
        }
    }
    shells
}

/// Result of a norm-gap scan around a target value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormGap {
    /// The squared norm nearest to the target (the smaller one on ties).
    pub nearest: f64,
    /// Distance from `nearest` to the closest other squared norm.
    pub gap: f64,
}

/// The gap function `δ_Λ` extended to the reals: locate the squared norm
/// nearest to `x` and measure how isolated it is, scanning `[x − window,
/// x + window]`.
pub fn norm_gap(lattice: &LatticeSpec, x: f64, window: f64, budget: Budget) -> Result<NormGap> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain(format!("x must be positive, got {x}")));
    }
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::domain(format!("window must be positive, got {window}")));
    }
    let lower_edge = (x - window).max(0.0);
    let upper_edge = x + window;
    let shells: Vec<NormShell> = enumerate_norms(lattice, upper_edge, Which::Primal, budget)?
        .into_iter()
        .filter(|s| s.norm >= lower_edge)
        .collect();
    if shells.len() < 2 {
        return Err(Error::Inconclusive(format!(
            "window [{lower_edge}, {upper_edge}] holds fewer than two distinct squared norms"
        )));
    }
    // Strict comparison keeps the smaller norm when x sits exactly midway.
    let mut idx = 0;
    for (i, s) in shells.iter().enumerate() {
        if (s.norm - x).abs() < (shells[idx].norm - x).abs() {
            idx = i;
        }
    }
    let nearest = shells[idx].norm;
    let below = idx.checked_sub(1).map(|i| nearest - shells[i].norm);
    let above = shells.get(idx + 1).map(|s| s.norm - nearest);
    let gap = below.into_iter().chain(above).fold(f64::INFINITY, f64::min);
    // A neighbour hidden beyond a window edge could be closer than `gap`.
    let hidden_below = below.is_none() && lower_edge > 0.0 && nearest - lower_edge < gap;
    let hidden_above = above.is_none() && upper_edge - nearest < gap;
    if hidden_below || hidden_above {
        return Err(Error::Inconclusive(format!(
            "nearest norm {nearest} is too close to the window edge to certify its gap"
        )));
    }
    Ok(NormGap { nearest, gap })
}
