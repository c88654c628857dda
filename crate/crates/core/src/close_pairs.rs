//! Pairs of lattice points with nearly equal norms.
//!
//! `A(R, δ)` is the set of ordered pairs `(k, l) ∈ Λ×Λ` with
//! `R ≤ |k|² ≤ 2R` and `|k|² ≤ |l|² ≤ |k|² + δ`, both copies `±` counted.
//! Every comparison against `R`, `2R` and `|k|² + δ` is made on double-double
//! norms, so the count does not depend on rounding of the shell boundaries.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, LatticeSpec, SquaredRadius};
use crate::numeric::{format_real, Dd};
use crate::Budget;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosePairQuery {
    #[serde(rename = "R")]
    r: f64,
    delta: f64,
}

impl ClosePairQuery {
    pub fn new(r: f64, delta: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::domain(format!("R must be positive, got {r}")));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::domain(format!("delta must be nonnegative, got {delta}")));
        }
        Ok(ClosePairQuery { r, delta })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// `Q₁(v) = |v₁ + v₂τ|² − |v₃ + v₄τ|²` with `τ = α + iβ`; signature (2, 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFormQ1 {
    lattice: LatticeSpec,
}

impl QuadFormQ1 {
    pub fn new(lattice: &LatticeSpec) -> Self {
        QuadFormQ1 { lattice: *lattice }
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn evaluate(&self, v: [i64; 4]) -> f64 {
        self.lattice.squared_norm(LatticePoint::new(v[0], v[1]))
            - self.lattice.squared_norm(LatticePoint::new(v[2], v[3]))
    }

    pub fn evaluate_dd(&self, v: [i64; 4]) -> Dd {
        self.lattice.squared_norm_dd(LatticePoint::new(v[0], v[1]))
            - self.lattice.squared_norm_dd(LatticePoint::new(v[2], v[3]))
    }
}

/// Points of norm `≤ bound` with double-double norms, sorted by norm.
fn sorted_points(
    lattice: &LatticeSpec,
    bound: f64,
    budget: Budget,
) -> Result<Vec<(Dd, LatticePoint)>> {
    budget.check("close-pair enumeration", lattice.estimated_points(bound))?;
    let radius = SquaredRadius::from_squared(bound);
    let mut pts = Vec::new();
    lattice.for_each_point_within(&radius, |p| pts.push((lattice.squared_norm_dd(p), p)));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pts)
}

/// For each `k` with `R ≤ |k|² ≤ 2R`, the index range of admissible `l`.
fn sweep<F: FnMut(usize, std::ops::Range<usize>)>(pts: &[(Dd, LatticePoint)], q: &ClosePairQuery, mut f: F) {
    let lo_r = Dd::from_f64(q.r);
    let hi_r = Dd::from_f64(2.0 * q.r);
    let mut lower = 0;
    let mut upper = 0;
    for (i, &(nk, _)) in pts.iter().enumerate() {
        if nk < lo_r {
            continue;
        }
        if nk > hi_r {
            break;
        }
        while pts[lower].0 < nk {
            lower += 1;
        }
        let top = nk.add_f64(q.delta);
        if upper < lower {
            upper = lower;
        }
        while upper < pts.len() && !(pts[upper].0 > top) {
            upper += 1;
        }
        f(i, lower..upper);
    }
}

/// Exact `#A(R, δ)` by a sorted two-pointer sweep.
pub fn count_close_pairs(lattice: &LatticeSpec, q: &ClosePairQuery, budget: Budget) -> Result<u64> {
    let pts = sorted_points(lattice, enumeration_bound(q), budget)?;
    let mut count = 0u64;
    sweep(&pts, q, |_, range| count += range.len() as u64);
    Ok(count)
}

/// All pairs `(k, l)` of `A(R, δ)`, in sweep order.
pub fn close_pairs_list(
    lattice: &LatticeSpec,
    q: &ClosePairQuery,
    budget: Budget,
) -> Result<Vec<(LatticePoint, LatticePoint)>> {
    let pts = sorted_points(lattice, enumeration_bound(q), budget)?;
    let mut out = Vec::new();
    let mut overflow = false;
    sweep(&pts, q, |i, range| {
        if out.len() + range.len() > budget.0 as usize {
            overflow = true;
            return;
        }
        out.extend(pts[range].iter().map(|&(_, l)| (pts[i].1, l)));
    });
    if overflow {
        budget.check("close-pair list", f64::INFINITY)?;
    }
    Ok(out)
}

fn enumeration_bound(q: &ClosePairQuery) -> f64 {
    // Slightly generous; membership is decided on the dd norms.
    (2.0 * q.r + q.delta) * (1.0 + 1e-12)
}

/// Largest `T` accepted by the four-dimensional shell enumeration by default.
pub const SHELL_T_CAP: f64 = 64.0;

/// Solutions of `a < Q₁(v) < b` on the shell `T ≤ ‖v‖ ≤ 2T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellStats {
    pub count: u64,
    /// Extremes of `|v₁+v₂τ|² / T²` and `|v₃+v₄τ|² / T²` over the solutions.
    pub min_norm_ratio: f64,
    pub max_norm_ratio: f64,
}

impl ShellStats {
    fn empty() -> Self {
        ShellStats {
            count: 0,
            min_norm_ratio: f64::INFINITY,
            max_norm_ratio: f64::NEG_INFINITY,
        }
    }

    fn merge(self, o: ShellStats) -> ShellStats {
        ShellStats {
            count: self.count + o.count,
            min_norm_ratio: self.min_norm_ratio.min(o.min_norm_ratio),
            max_norm_ratio: self.max_norm_ratio.max(o.max_norm_ratio),
        }
    }
}

pub fn count_shell_solutions(form: &QuadFormQ1, a: f64, b: f64, t: f64) -> Result<u64> {
    Ok(shell_solution_stats(form, a, b, t, SHELL_T_CAP)?.count)
}

/// Direct enumeration of `ℤ⁴ ∩ {T ≤ ‖v‖ ≤ 2T}`, cost `O(T⁴)`.
pub fn shell_solution_stats(form: &QuadFormQ1, a: f64, b: f64, t: f64, t_cap: f64) -> Result<ShellStats> {
    if !(a < b) {
        return Err(Error::domain(format!("empty interval ({a}, {b})")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("T must be positive, got {t}")));
    }
    if t > t_cap {
        return Err(Error::Budget {
            what: "shell enumeration T".into(),
            needed: t,
            cap: t_cap as u64,
        });
    }
    let lo2 = t * t;
    let hi2 = 4.0 * t * t;
    let r = (2.0 * t).floor() as i64;
    let stats = (-r..=r)
        .into_par_iter()
        .map(|v1| {
            let mut acc = ShellStats::empty();
            let s1 = (v1 * v1) as f64;
            for v2 in -r..=r {
                let s2 = s1 + (v2 * v2) as f64;
                if s2 > hi2 {
                    continue;
                }
                let n12 = form.lattice.squared_norm(LatticePoint::new(v1, v2));
                for v3 in -r..=r {
                    let s3 = s2 + (v3 * v3) as f64;
                    if s3 > hi2 {
                        continue;
                    }
                    let w = (hi2 - s3).sqrt().floor() as i64 + 1;
                    for v4 in -w..=w {
                        let s = s3 + (v4 * v4) as f64;
                        if s < lo2 || s > hi2 {
                            continue;
                        }
                        let n34 = form.lattice.squared_norm(LatticePoint::new(v3, v4));
                        let qv = n12 - n34;
                        if a < qv && qv < b {
                            acc.count += 1;
                            acc.min_norm_ratio = acc.min_norm_ratio.min(n12.min(n34) / lo2);
                            acc.max_norm_ratio = acc.max_norm_ratio.max(n12.max(n34) / lo2);
                        }
                    }
                }
            }
            acc
        })
        .reduce(ShellStats::empty, ShellStats::merge);
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    #[serde(rename = "R")]
    pub r: f64,
    pub delta: f64,
    pub count: u64,
    /// `count / (R δ ln R)`
    pub normalized: f64,
}

pub fn close_pair_scaling_study(
    lattice: &LatticeSpec,
    r_grid: &[f64],
    delta: f64,
    budget: Budget,
) -> Result<Vec<ScalingRow>> {
    if let Some(&r) = r_grid.iter().find(|&&r| !(r >= 10.0)) {
        return Err(Error::domain(format!("scaling study needs R >= 10, got {r}")));
    }
    if !(delta > 0.0) {
        return Err(Error::domain(format!("scaling study needs delta > 0, got {delta}")));
    }
    r_grid
        .iter()
        .map(|&r| {
            let count = count_close_pairs(lattice, &ClosePairQuery::new(r, delta)?, budget)?;
            Ok(ScalingRow {
                r,
                delta,
                count,
                normalized: count as f64 / (r * delta * r.ln()),
            })
        })
        .collect()
}

pub fn write_scaling_csv<W: Write>(rows: &[ScalingRow], mut w: W) -> io::Result<()> {
    writeln!(w, "R,delta,count,normalized")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            format_real(row.r),
            format_real(row.delta),
            row.count,
            format_real(row.normalized)
        )?;
    }
    Ok(())
}
