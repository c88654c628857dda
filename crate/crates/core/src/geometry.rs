//! Low-dimensional lattice geometry: successive minima, box counts, and the
//! covolume of sublattices under `A_t = diag(1, …, 1, t)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Budget;

pub const MAX_DIM: usize = 4;
const BOX_TOL: f64 = 1e-9;

/// A lattice of rank `m` in `ℝⁿ`, `1 ≤ m ≤ n ≤ 4`, given by basis rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralLattice {
    basis: Vec<Vec<f64>>,
}

impl GeneralLattice {
    pub fn new(basis: Vec<Vec<f64>>) -> Result<Self> {
        let m = basis.len();
        if m == 0 {
            return Err(Error::domain("empty basis"));
        }
        let n = basis[0].len();
        if n > MAX_DIM || m > n {
            return Err(Error::domain(format!(
                "need 1 <= rank <= dimension <= {MAX_DIM}, got rank {m} in dimension {n}"
            )));
        }
        if basis.iter().any(|b| b.len() != n || b.iter().any(|x| !x.is_finite())) {
            return Err(Error::domain("basis rows must have equal length and finite entries"));
        }
        let lat = GeneralLattice { basis };
        let det = lat.gram().determinant();
        let scale: f64 = lat.basis.iter().map(|b| b.iter().map(|x| x * x).sum::<f64>()).product();
        if !(det > 1e-12 * scale) {
            return Err(Error::domain("basis vectors are linearly dependent"));
        }
        Ok(lat)
    }

    /// `ℤⁿ`.
    pub fn integer(n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn dimension(&self) -> usize {
        self.basis[0].len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rank(), self.dimension(), |i, j| self.basis[i][j])
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let b = self.matrix();
        &b * b.transpose()
    }

    /// `|det B|` at full rank, `sqrt(det Gram)` otherwise.
    pub fn covolume(&self) -> f64 {
        if self.rank() == self.dimension() {
            self.matrix().determinant().abs()
        } else {
            self.gram().determinant().max(0.0).sqrt()
        }
    }

    /// `Σ xᵢ bᵢ`.
    pub fn point(&self, coeffs: &[i64]) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension()];
        for (c, b) in coeffs.iter().zip(&self.basis) {
            for (vj, bj) in v.iter_mut().zip(b) {
                *vj += *c as f64 * bj;
            }
        }
        v
    }

    /// The image under `A_t = diag(1, …, 1, t)`.
    pub fn stretched(&self, t: f64) -> Self {
        let n = self.dimension();
        GeneralLattice {
            basis: self
                .basis
                .iter()
                .map(|b| {
                    let mut b = b.clone();
                    b[n - 1] *= t;
                    b
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimumVector {
    pub length: f64,
    pub coefficients: Vec<i64>,
    pub vector: Vec<f64>,
}

/// Rank over ℚ of integer vectors (fraction-free elimination).
fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let cols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..a.len()).find(|&r| a[r][c] != 0) else {
            continue;
        };
        a.swap(rank, p);
        for r in 0..a.len() {
            if r != rank && a[r][c] != 0 {
                let (f, g) = (a[rank][c], a[r][c]);
                let pivot = a[rank].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot) {
                    *x = *x * f - y * g;
                }
                let d = a[r].iter().fold(0i128, |d, &x| gcd(d, x));
                if d > 1 {
                    a[r].iter_mut().for_each(|x| *x /= d);
                }
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// All nonzero `x` with `xᵀGx ≤ r2` and first nonzero coordinate positive.
fn short_vectors(gram: &DMatrix<f64>, r2: f64, budget: Budget) -> Result<Vec<(f64, Vec<i64>)>> {
    let m = gram.nrows();
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::domain("Gram matrix is not positive definite"))?;
    // xᵀGx = Σᵢ qᵢᵢ (xᵢ + Σ_{j>i} qᵢⱼ xⱼ)² with q from the Cholesky factor.
    let l = chol.l();
    let u = l.transpose();
    let mut q = vec![vec![0.0; m]; m];
    for i in 0..m {
        q[i][i] = u[(i, i)] * u[(i, i)];
        for j in i + 1..m {
            q[i][j] = u[(i, j)] / u[(i, i)];
        }
    }
    let mut out = Vec::new();
    let mut x = vec![0i64; m];
    let mut visited = 0u64;
    recurse(&q, r2, m, &mut x, 0.0, &mut out, &mut visited, budget)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    q: &[Vec<f64>],
    r2: f64,
    level: usize,
    x: &mut [i64],
    partial: f64,
    out: &mut Vec<(f64, Vec<i64>)>,
    visited: &mut u64,
    budget: Budget,
) -> Result<()> {
    if level == 0 {
        if x.iter().any(|&c| c != 0) && x.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
            out.push((partial, x.to_vec()));
        }
        return Ok(());
    }
    let i = level - 1;
    let m = x.len();
    let center: f64 = -(i + 1..m).map(|j| q[i][j] * x[j] as f64).sum::<f64>();
    let room = ((r2 - partial) / q[i][i]).max(0.0);
    let w = room.sqrt() * (1.0 + 1e-12) + 1e-12;
    let lo = (center - w).ceil() as i64;
    let hi = (center + w).floor() as i64;
    for xi in lo..=hi {
        *visited += 1;
        if *visited > budget.0 {
            return Err(Error::Budget {
                what: "short-vector enumeration".into(),
                needed: *visited as f64,
                cap: budget.0,
            });
        }
        x[i] = xi;
        let d = xi as f64 - center;
        let p = partial + q[i][i] * d * d;
        if p <= r2 * (1.0 + 1e-12) {
            recurse(q, r2, level - 1, x, p, out, visited, budget)?;
        }
    }
    x[i] = 0;
    Ok(())
}

/// `λ₁ ≤ … ≤ λ_count` with realizing vectors, by exhaustive enumeration in
/// balls of doubling radius.
pub fn successive_minima(lat: &GeneralLattice, count: usize, budget: Budget) -> Result<Vec<MinimumVector>> {
    let m = lat.rank();
    if count == 0 || count > m {
        return Err(Error::domain(format!("count must be in 1..={m}, got {count}")));
    }
    let gram = lat.gram();
    let lens: Vec<f64> = (0..m).map(|i| gram[(i, i)]).collect();
    // The basis itself gives m independent vectors, so this radius always suffices.
    let r2_max = lens.iter().cloned().fold(0.0, f64::max);
    let mut r2 = lens.iter().cloned().fold(f64::INFINITY, f64::min);
    loop {
        let mut vs = short_vectors(&gram, r2, budget)?;
        for v in vs.iter_mut() {
            // Recompute the norm from the ambient vector.
            v.0 = lat.point(&v.1).iter().map(|x| x * x).sum();
        }
        vs.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let mut chosen: Vec<Vec<i64>> = Vec::new();
        let mut out = Vec::new();
        for (n2, c) in vs {
            if n2 > r2 * (1.0 + 1e-12) {
                continue;
            }
            chosen.push(c.clone());
            if integer_rank(&chosen) == chosen.len() {
                out.push(MinimumVector {
                    length: n2.sqrt(),
                    vector: lat.point(&c),
                    coefficients: c,
                });
                if out.len() == count {
                    return Ok(out);
                }
            } else {
                chosen.pop();
            }
        }
        if r2 >= r2_max {
            return Err(Error::domain("enumeration failed to find independent vectors"));
        }
        r2 = (4.0 * r2).min(r2_max);
    }
}

/// Factors `(c_lo, c_hi)` with `c_lo·covol ≤ λ₁⋯λₙ ≤ c_hi·covol` (Minkowski).
pub fn minkowski_bounds(n: usize) -> (f64, f64) {
    let pi = std::f64::consts::PI;
    let vol = match n {
        1 => 2.0,
        2 => pi,
        3 => 4.0 * pi / 3.0,
        4 => pi * pi / 2.0,
        _ => panic!("dimension {n} outside 1..=4"),
    };
    let two_n = (1u32 << n) as f64;
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    (two_n / (fact * vol), two_n / vol)
}

/// `(covolume(Λ), covolume(A_tΛ))`.
pub fn stretch_determinant_check(lat: &GeneralLattice, t: f64) -> Result<(f64, f64)> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("t must be positive, got {t}")));
    }
    let before = lat.covolume();
    let after = lat.stretched(t).covolume();
    if !(before > 0.0 && after > 0.0) {
        return Err(Error::domain("degenerate basis"));
    }
    Ok((before, after))
}

/// `V(δ) = [1/τ, 2τ] × [−1, 1]^{n−2} × [0, δ·h/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub tau: f64,
    pub delta: f64,
    /// `h` in the last side; 2 gives `[0, δ]`.
    pub height_scale: f64,
}

impl BoxSpec {
    pub fn new(tau: f64, delta: f64) -> Result<Self> {
        Self::with_height(tau, delta, 2.0)
    }

    pub fn with_height(tau: f64, delta: f64, height_scale: f64) -> Result<Self> {
        for (name, v) in [("tau", tau), ("delta", delta), ("height scale", height_scale)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(BoxSpec {
            tau,
            delta,
            height_scale,
        })
    }

    pub fn sides(&self, n: usize) -> Vec<(f64, f64)> {
        let mut s = vec![(1.0 / self.tau, 2.0 * self.tau)];
        s.extend(std::iter::repeat_n((-1.0, 1.0), n - 2));
        s.push((0.0, self.delta * self.height_scale / 2.0));
        s
    }

    pub fn volume(&self, n: usize) -> f64 {
        self.sides(n).iter().map(|(a, b)| (b - a).max(0.0)).product()
    }
}

/// Lattice points in the closed box, by enumerating all but the last
/// coefficient over the box's preimage and solving for the last directly.
pub fn count_box_points(lat: &GeneralLattice, spec: &BoxSpec, budget: Budget) -> Result<u64> {
    let n = lat.dimension();
    if lat.rank() != n || !(3..=4).contains(&n) {
        return Err(Error::domain(format!(
            "box counts need a full-rank lattice in dimension 3 or 4, got rank {} in {n}",
            lat.rank()
        )));
    }
    let sides = spec.sides(n);
    if sides.iter().any(|(a, b)| a > b) {
        return Ok(0);
    }
    // p = Bᵀx, so x = B⁻ᵀp; coefficient ranges from the box corners.
    let bt = lat.matrix().transpose();
    let inv = bt
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::domain("singular basis"))?;
    let ranges: Vec<(i64, i64)> = (0..n - 1)
        .map(|i| {
            let (mut lo, mut hi) = (0.0, 0.0);
            for (j, &(a, b)) in sides.iter().enumerate() {
                let c = inv[(i, j)];
                lo += (c * a).min(c * b);
                hi += (c * a).max(c * b);
            }
            ((lo - BOX_TOL).floor() as i64, (hi + BOX_TOL).ceil() as i64)
        })
        .collect();
    let cells: f64 = ranges.iter().map(|(a, b)| (b - a + 1) as f64).product();
    budget.check("box enumeration", cells)?;

    let last: Vec<f64> = (0..n).map(|j| bt[(j, n - 1)]).collect();
    let mut x: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut count = 0u64;
    loop {
        let base = DVector::from_fn(n, |j, _| (0..n - 1).map(|i| bt[(j, i)] * x[i] as f64).sum::<f64>());
        // Interval of the last coefficient keeping every coordinate in range.
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut ok = true;
        for (j, &(a, b)) in sides.iter().enumerate() {
            let tol = BOX_TOL * a.abs().max(b.abs()).max(1.0);
            let c = last[j];
            if c == 0.0 {
                if base[j] < a - tol || base[j] > b + tol {
                    ok = false;
                    break;
                }
            } else {
                let (u, v) = ((a - tol - base[j]) / c, (b + tol - base[j]) / c);
                lo = lo.max(u.min(v));
                hi = hi.min(u.max(v));
            }
        }
        if ok && lo <= hi {
            let k = hi.floor() - lo.ceil() + 1.0;
            if k > 0.0 {
                count += k as u64;
            }
        }
        let mut i = 0;
        loop {
            if i == n - 1 {
                return Ok(count);
            }
            if x[i] < ranges[i].1 {
                x[i] += 1;
                break;
            }
            x[i] = ranges[i].0;
            i += 1;
        }
    }
}
