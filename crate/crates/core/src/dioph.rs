//! Empirical Diophantine quality of real tuples.
//!
//! The scans run in `f64`; any candidate whose value falls below the near-miss
//! threshold is re-evaluated with 256-bit floats, and a value below `1e-30`
//! there counts as an exact integer relation.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DualPoint, LatticeSpec, COINCIDENCE_TOL};
use crate::numeric::format_real;
use crate::Budget;

/// Working precision (bits) of the extended re-evaluation.
pub const EXT_PRECISION: usize = 256;
/// Extended-precision values below this are exact zeros.
pub const ZERO_THRESHOLD: f64 = 1e-30;
/// `f64` values below this (or below the rounding bound) are re-checked.
pub const NEAR_MISS: f64 = 1e-10;

/// Default height caps for the linear-form scan.
pub const LINEAR_CAP_SMALL: u64 = 1000;
pub const LINEAR_CAP_N3: u64 = 100;
/// Default number of coefficient vectors a scan may visit.
pub const SCAN_BUDGET: u64 = 400_000_000;

const RM: RoundingMode = RoundingMode::ToEven;

fn consts() -> Consts {
    Consts::new().expect("astro-float constants cache")
}

fn big_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    x.to_string().parse().unwrap_or(f64::NAN)
}

/// A real number known to 256 bits, with its nearest double.
#[derive(Clone)]
pub struct ExtReal {
    big: BigFloat,
    approx: f64,
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExtReal({})", self.approx)
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        self.big.cmp(&other.big) == Some(0)
    }
}

impl ExtReal {
    fn from_big(big: BigFloat) -> Self {
        let approx = big_to_f64(&big);
        ExtReal { big, approx }
    }

    /// The exact value of a double.
    pub fn from_f64(x: f64) -> Self {
        ExtReal {
            big: BigFloat::from_f64(x, EXT_PRECISION),
            approx: x,
        }
    }

    pub fn from_i64(x: i64) -> Self {
        Self::from_big(BigFloat::from_i64(x, EXT_PRECISION))
    }

    pub fn value(&self) -> f64 {
        self.approx
    }

    pub fn big(&self) -> &BigFloat {
        &self.big
    }

    pub fn mul(&self, o: &ExtReal) -> ExtReal {
        Self::from_big(self.big.mul(&o.big, EXT_PRECISION, RM))
    }

    /// Parses a decimal literal or an expression over `+ - * /`, parentheses,
    /// `sqrt(..)`, `pi` and `e`, e.g. `sqrt(2)`, `pi-3`, `e/2`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut p = ExprParser {
            src: s.as_bytes(),
            pos: 0,
            cc: consts(),
        };
        let v = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(Error::config(format!("trailing input in expression {s:?}")));
        }
        if v.is_nan() || v.is_inf() {
            return Err(Error::domain(format!("expression {s:?} is not a finite real")));
        }
        Ok(Self::from_big(v))
    }
}

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
    cc: Consts,
}

impl ExprParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, what: &str) -> Error {
        Error::config(format!(
            "{what} at offset {} in {:?}",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
    }

    fn expr(&mut self) -> Result<BigFloat> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if c == b'+' {
                acc.add(&rhs, EXT_PRECISION, RM)
            } else {
                acc.sub(&rhs, EXT_PRECISION, RM)
            };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<BigFloat> {
        let mut acc = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            acc = if c == b'*' {
                acc.mul(&rhs, EXT_PRECISION, RM)
            } else {
                if rhs.is_zero() {
                    return Err(self.err("division by zero"));
                }
                acc.div(&rhs, EXT_PRECISION, RM)
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<BigFloat> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.factor()?.neg())
            }
            Some(b'+') => {
                self.pos += 1;
                self.factor()
            }
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(b')')?;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                match &self.src[start..self.pos] {
                    b"pi" => Ok(self.cc.pi(EXT_PRECISION, RM)),
                    b"e" => Ok(self.cc.e(EXT_PRECISION, RM)),
                    b"sqrt" => {
                        self.expect(b'(')?;
                        let v = self.expr()?;
                        self.expect(b')')?;
                        if v.is_negative() {
                            return Err(self.err("square root of a negative number"));
                        }
                        Ok(v.sqrt(EXT_PRECISION, RM))
                    }
                    _ => {
                        self.pos = start;
                        Err(self.err("unknown identifier"))
                    }
                }
            }
            _ => Err(self.err("expected a number")),
        }
    }

    fn number(&mut self) -> Result<BigFloat> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && (p.src[p.pos].is_ascii_digit() || p.src[p.pos] == b'.') {
                p.pos += 1;
            }
        };
        digits(self);
        // Exponent only when followed by digits, so that `2e` stays invalid.
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if text.parse::<f64>().is_err() {
            return Err(self.err("malformed number"));
        }
        let v = BigFloat::parse(text, Radix::Dec, EXT_PRECISION, RM, &mut self.cc);
        if v.is_nan() {
            return Err(self.err("malformed number"));
        }
        Ok(v)
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiophQuery {
    pub tuple: Vec<ExtReal>,
    pub height_cap: u64,
    pub degree: u32,
}

impl DiophQuery {
    pub fn linear(tuple: Vec<ExtReal>, height_cap: u64) -> Self {
        DiophQuery {
            tuple,
            height_cap,
            degree: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tuple.is_empty() {
            return Err(Error::config("tuple must be nonempty"));
        }
        if self.height_cap < 1 {
            return Err(Error::config("height cap must be at least 1"));
        }
        if self.degree < 1 {
            return Err(Error::config("degree must be at least 1"));
        }
        Ok(())
    }
}

/// An integer relation `a₀ + Σ aᵢxᵢ = 0` found at the given height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub height: u64,
    /// `(a₀, a₁, …)`, constant first.
    pub coefficients: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// `(q, min |a₀ + Σ aᵢxᵢ|)` on the height grid.
    pub minima: Vec<(u64, f64)>,
    /// Least-squares slope of `−ln(min)` against `ln q`.
    pub fitted_exponent: Option<f64>,
    /// RMS residual of that fit.
    pub fit_residual: Option<f64>,
    /// Set when the scan hit an exact relation; the fit is then abandoned.
    pub relation: Option<Relation>,
}

impl ExponentFit {
    pub fn write_minima_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "q,min_value")?;
        for &(q, v) in &self.minima {
            writeln!(w, "{},{}", q, format_real(v))?;
        }
        Ok(())
    }
}

/// `1, 2, 4, …` below `q_max`, then `q_max`.
pub fn height_grid(q_max: u64) -> Vec<u64> {
    let mut g = Vec::new();
    let mut q = 1u64;
    while q < q_max {
        g.push(q);
        q *= 2;
    }
    g.push(q_max);
    g
}

/// Ordinary least squares `y = c + s·x`; returns `(s, rms residual)`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let c = my - slope * mx;
    let rss: f64 = points.iter().map(|p| (p.1 - c - slope * p.0).powi(2)).sum();
    Some((slope, (rss / n).sqrt()))
}

/// Best vector found by one height scan.
#[derive(Debug, Clone)]
struct Best {
    value: f64,
    coeffs: Vec<i64>,
}

impl Best {
    fn none() -> Self {
        Best {
            value: f64::INFINITY,
            coeffs: Vec::new(),
        }
    }

    fn better(a: Best, b: Best) -> Best {
        match a.value.total_cmp(&b.value).then_with(|| a.coeffs.cmp(&b.coeffs)) {
            Ordering::Greater => b,
            _ => a,
        }
    }
}

enum ScanOutcome {
    Min(f64),
    Relation(Vec<i64>),
}

/// Minimizes `|a₀ + Σ aᵢxᵢ|` over nonzero integer vectors with `max |aᵢ| ≤ h`.
fn scan_height(xs: &[ExtReal], h: i64) -> ScanOutcome {
    let k = xs.len();
    let vals: Vec<f64> = xs.iter().map(|x| x.value()).collect();
    let scale: f64 = vals.iter().map(|v| v.abs()).sum::<f64>() * h as f64;
    let thresh = NEAR_MISS.max(64.0 * f64::EPSILON * scale.max(1.0));
    let hf = h as f64;

    // Sign symmetry: the first nonzero coefficient among a₁..a_k is positive.
    // a₁..a_k all zero leaves a₀ = ±1, value 1.
    let (best, mut near): (Best, Vec<(f64, Vec<i64>)>) = (0..=h)
        .into_par_iter()
        .map(|a1| {
            let mut best = Best::none();
            let mut near = Vec::new();
            let mut c = vec![0i64; k];
            c[0] = a1;
            c[1..].fill(-h);
            loop {
                let lead_ok = c.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0);
                if lead_ok {
                    let s: f64 = c.iter().zip(&vals).map(|(&a, &x)| a as f64 * x).sum();
                    let a0 = (-s).round().clamp(-hf, hf);
                    let v = (a0 + s).abs();
                    if v < thresh {
                        let mut full = vec![a0 as i64];
                        full.extend_from_slice(&c);
                        near.push((v, full));
                    } else if v <= best.value {
                        let mut full = vec![a0 as i64];
                        full.extend_from_slice(&c);
                        best = Best::better(best, Best { value: v, coeffs: full });
                    }
                }
                // odometer over c[1..]
                let mut i = k;
                loop {
                    if i == 1 {
                        return (best, near);
                    }
                    i -= 1;
                    if c[i] < h {
                        c[i] += 1;
                        break;
                    }
                    c[i] = -h;
                }
            }
        })
        .reduce(
            || (Best::none(), Vec::new()),
            |(ba, mut na), (bb, nb)| {
                na.extend(nb);
                (Best::better(ba, bb), na)
            },
        );
    // `best` only covers vectors at or above `thresh`; near-misses are
    // decided with the extended values.
    let mut min = best.value.min(1.0);
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    for (_, coeffs) in &near {
        let mut acc = BigFloat::from_i64(coeffs[0], EXT_PRECISION);
        for (a, x) in coeffs[1..].iter().zip(xs) {
            let term = BigFloat::from_i64(*a, EXT_PRECISION).mul(&x.big, EXT_PRECISION, RM);
            acc = acc.add(&term, EXT_PRECISION, RM);
        }
        let v = big_to_f64(&acc.abs());
        if v < ZERO_THRESHOLD {
            return ScanOutcome::Relation(coeffs.clone());
        }
        min = min.min(v);
    }
    ScanOutcome::Min(min)
}

fn scan_cost(k: usize, h: u64) -> f64 {
    (2.0 * h as f64 + 1.0).powi(k as i32) / 2.0
}

fn fit_over_grid(xs: &[ExtReal], q_max: u64, budget: u64) -> Result<ExponentFit> {
    let grid = height_grid(q_max);
    let cost: f64 = grid.iter().map(|&q| scan_cost(xs.len(), q)).sum();
    Budget(budget).check("coefficient scan", cost)?;
    let mut minima = Vec::new();
    for &q in &grid {
        match scan_height(xs, q as i64) {
            ScanOutcome::Min(v) => minima.push((q, v)),
            ScanOutcome::Relation(coefficients) => {
                return Ok(ExponentFit {
                    minima,
                    fitted_exponent: None,
                    fit_residual: None,
                    relation: Some(Relation {
                        height: q,
                        coefficients,
                    }),
                })
            }
        }
    }
    let pts: Vec<(f64, f64)> = minima
        .iter()
        .map(|&(q, v)| ((q as f64).ln(), -v.ln()))
        .collect();
    let fit = least_squares_slope(&pts);
    Ok(ExponentFit {
        minima,
        fitted_exponent: fit.map(|f| f.0),
        fit_residual: fit.map(|f| f.1),
        relation: None,
    })
}

/// Per-height minima of `|a₀ + Σ aᵢαᵢ|` and the fitted decay exponent.
pub fn linear_form_minimum(q: &DiophQuery) -> Result<ExponentFit> {
    linear_form_minimum_with_budget(q, SCAN_BUDGET)
}

pub fn linear_form_minimum_with_budget(q: &DiophQuery, budget: u64) -> Result<ExponentFit> {
    q.validate()?;
    let n = q.tuple.len();
    if n > 3 {
        return Err(Error::config(format!("linear forms take at most 3 reals, got {n}")));
    }
    if q.tuple.iter().all(|x| x.big.is_zero()) {
        return Err(Error::domain("degenerate tuple: all entries are zero"));
    }
    let cap = if n <= 2 { LINEAR_CAP_SMALL } else { LINEAR_CAP_N3 };
    if q.height_cap > cap {
        return Err(Error::Budget {
            what: format!("height cap for {n} reals"),
            needed: q.height_cap as f64,
            cap,
        });
    }
    fit_over_grid(&q.tuple, q.height_cap, budget)
}

/// Monomials `xⁱyʲ` with `1 ≤ i+j ≤ degree`, ordered by total degree then `i` descending.
pub fn monomials(x: &ExtReal, y: &ExtReal, degree: u32) -> Vec<(u32, u32, ExtReal)> {
    let mut out = Vec::new();
    for d in 1..=degree {
        for i in (0..=d).rev() {
            let j = d - i;
            let mut v = ExtReal::from_i64(1);
            for _ in 0..i {
                v = v.mul(x);
            }
            for _ in 0..j {
                v = v.mul(y);
            }
            out.push((i, j, v));
        }
    }
    out
}

/// Per-height minima of `|p(α, β)|` over integer polynomials of the given
/// degree; coefficients in the result follow [`monomials`] after the constant.
pub fn polynomial_minimum(pair: (&ExtReal, &ExtReal), degree: u32, height_cap: u64) -> Result<ExponentFit> {
    polynomial_minimum_with_budget(pair, degree, height_cap, SCAN_BUDGET)
}

pub fn polynomial_minimum_with_budget(
    pair: (&ExtReal, &ExtReal),
    degree: u32,
    height_cap: u64,
    budget: u64,
) -> Result<ExponentFit> {
    if !(1..=3).contains(&degree) {
        return Err(Error::config(format!("degree must be 1, 2 or 3, got {degree}")));
    }
    if height_cap < 1 {
        return Err(Error::config("height cap must be at least 1"));
    }
    let xs: Vec<ExtReal> = monomials(pair.0, pair.1, degree)
        .into_iter()
        .map(|m| m.2)
        .collect();
    fit_over_grid(&xs, height_cap, budget)
}

/// Which dual coordinate pairs `(a, b)`, `a, b ≥ 0`, feed the square-root sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorFilter {
    /// `gcd(a, b) = 1`.
    #[default]
    Primitive,
    AllNonnegative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqrtSumGap {
    /// `min |Σ εⱼ √zⱼ|` over admissible combinations.
    pub value: f64,
    pub points: Vec<DualPoint>,
    pub norms: Vec<f64>,
    pub signs: Vec<i8>,
    /// `ln(1/value) / ln(bound)`; `None` for a zero value or `bound ≤ 1`.
    pub empirical_exponent: Option<f64>,
    /// A combination vanished although its norms do not cancel pairwise.
    pub nonsymbolic_zero: bool,
    pub candidates: usize,
}

/// `Σ εⱼ √zⱼ` in `f64`.
pub fn signed_sqrt_sum(z: &[f64], eps: &[i8]) -> f64 {
    z.iter().zip(eps).map(|(&z, &e)| e as f64 * z.sqrt()).sum()
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Dual points `(a, b)` with `a, b ≥ 0`, not both zero, `z ≤ bound`, sorted by `z`.
pub fn nonnegative_dual_points(lattice: &LatticeSpec, bound: f64, filter: VectorFilter) -> Vec<(DualPoint, f64)> {
    let (xi, eta) = (lattice.xi(), lattice.eta());
    let amax = bound.sqrt().floor() as i64;
    let mut pts = Vec::new();
    for a in 0..=amax {
        let w = (bound - (a * a) as f64).max(0.0).sqrt();
        let af = a as f64;
        let lo = (((-w - af * xi) / eta).floor() as i64 - 1).max(0);
        let hi = ((w - af * xi) / eta).ceil() as i64 + 1;
        for b in lo..=hi {
            if a == 0 && b == 0 {
                continue;
            }
            if filter == VectorFilter::Primitive && gcd(a, b) != 1 {
                continue;
            }
            let d = DualPoint { a, b };
            let z = lattice.dual_squared_norm(d);
            if z <= bound {
                pts.push((d, z));
            }
        }
    }
    pts.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| (x.0.a, x.0.b).cmp(&(y.0.a, y.0.b))));
    pts
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Minimum of `|Σ_{j≤m} εⱼ √zⱼ|` over `m` distinct dual vectors and signs,
/// skipping combinations that cancel norm by norm.
pub fn sqrt_sum_gap(
    lattice: &LatticeSpec,
    bound: f64,
    m: usize,
    filter: VectorFilter,
    budget: Budget,
) -> Result<SqrtSumGap> {
    if !(2..=4).contains(&m) {
        return Err(Error::config(format!("m must be 2, 3 or 4, got {m}")));
    }
    if !(bound.is_finite() && bound > 0.0) {
        return Err(Error::domain(format!("bound must be positive, got {bound}")));
    }
    let pts = nonnegative_dual_points(lattice, bound, filter);
    let p = pts.len();
    if p < m {
        return Err(Error::domain(format!("only {p} dual vectors below bound {bound}")));
    }
    budget.check(
        "square-root sum combinations",
        binomial(p, m) * (1u64 << (m - 1)) as f64,
    )?;

    // Norm classes, so that cancellation can be recognized symbolically.
    let mut class = vec![0usize; p];
    for i in 1..p {
        let same = pts[i].1 - pts[i - 1].1 < COINCIDENCE_TOL * pts[i].1.max(1.0);
        class[i] = class[i - 1] + usize::from(!same);
    }
    let roots: Vec<f64> = pts.iter().map(|x| x.1.sqrt()).collect();
    let scale = 4.0 * bound.sqrt();
    let thresh = NEAR_MISS.max(64.0 * f64::EPSILON * scale);

    // (value, indices, signs) with deterministic tie-breaking.
    type Cand = (f64, Vec<usize>, Vec<i8>);
    let better = |a: Cand, b: Cand| -> Cand {
        match a.0.total_cmp(&b.0).then_with(|| (&a.1, &a.2).cmp(&(&b.1, &b.2))) {
            Ordering::Greater => b,
            _ => a,
        }
    };
    let none = || (f64::INFINITY, Vec::new(), Vec::new());

    let (best, near): (Cand, Vec<Cand>) = (0..p)
        .into_par_iter()
        .map(|i0| {
            let mut best = none();
            let mut near = Vec::new();
            let mut idx: Vec<usize> = (i0..i0 + m).collect();
            if idx[m - 1] >= p {
                return (best, near);
            }
            loop {
                for mask in 0u32..(1 << (m - 1)) {
                    let signs: Vec<i8> = (0..m)
                        .map(|j| if j > 0 && mask >> (j - 1) & 1 == 1 { -1 } else { 1 })
                        .collect();
                    if cancels(&idx, &signs, &class) {
                        continue;
                    }
                    let v = idx
                        .iter()
                        .zip(&signs)
                        .map(|(&i, &s)| s as f64 * roots[i])
                        .sum::<f64>()
                        .abs();
                    if v < thresh {
                        near.push((v, idx.clone(), signs.clone()));
                    } else if v <= best.0 {
                        best = better(best, (v, idx.clone(), signs));
                    }
                }
                // next combination with idx[0] fixed
                let mut j = m - 1;
                loop {
                    if j == 0 {
                        return (best, near);
                    }
                    if idx[j] < p - (m - j) {
                        idx[j] += 1;
                        for l in j + 1..m {
                            idx[l] = idx[l - 1] + 1;
                        }
                        break;
                    }
                    j -= 1;
                }
            }
        })
        .reduce(
            || (none(), Vec::new()),
            |(ba, mut na), (bb, nb)| {
                na.extend(nb);
                (better(ba, bb), na)
            },
        );

    let mut result = best;
    let mut nonsymbolic_zero = false;
    if !near.is_empty() {
        let (xi, eta) = ext_dual_params(lattice);
        let mut refined: Option<Cand> = None;
        for (_, idx, signs) in near {
            let mut acc = BigFloat::from_i64(0, EXT_PRECISION);
            for (&i, &s) in idx.iter().zip(&signs) {
                let root = ext_dual_norm(&xi, &eta, pts[i].0).sqrt(EXT_PRECISION, RM);
                acc = if s > 0 {
                    acc.add(&root, EXT_PRECISION, RM)
                } else {
                    acc.sub(&root, EXT_PRECISION, RM)
                };
            }
            let mut v = big_to_f64(&acc.abs());
            if v < ZERO_THRESHOLD {
                nonsymbolic_zero = true;
                v = 0.0;
            }
            let cand = (v, idx, signs);
            refined = Some(match refined {
                None => cand,
                Some(r) => better(r, cand),
            });
        }
        result = better(result, refined.expect("nonempty near list"));
    }
    let (value, idx, signs) = result;
    if !value.is_finite() {
        return Err(Error::domain("no admissible combination"));
    }
    Ok(SqrtSumGap {
        value,
        points: idx.iter().map(|&i| pts[i].0).collect(),
        norms: idx.iter().map(|&i| pts[i].1).collect(),
        signs,
        empirical_exponent: (value > 0.0 && bound > 1.0).then(|| (1.0 / value).ln() / bound.ln()),
        nonsymbolic_zero,
        candidates: p,
    })
}

/// Signed counts per norm class all vanish.
fn cancels(idx: &[usize], signs: &[i8], class: &[usize]) -> bool {
    let mut tally: [(usize, i32); 4] = [(usize::MAX, 0); 4];
    let mut used = 0;
    for (&i, &s) in idx.iter().zip(signs) {
        let c = class[i];
        match tally[..used].iter_mut().find(|t| t.0 == c) {
            Some(t) => t.1 += s as i32,
            None => {
                tally[used] = (c, s as i32);
                used += 1;
            }
        }
    }
    tally[..used].iter().all(|t| t.1 == 0)
}

fn ext_dual_params(lattice: &LatticeSpec) -> (BigFloat, BigFloat) {
    let alpha = BigFloat::from_f64(lattice.alpha(), EXT_PRECISION);
    let beta = BigFloat::from_f64(lattice.beta(), EXT_PRECISION);
    let xi = alpha.neg().div(&beta, EXT_PRECISION, RM);
    let eta = BigFloat::from_i64(1, EXT_PRECISION).div(&beta, EXT_PRECISION, RM);
    (xi, eta)
}

fn ext_dual_norm(xi: &BigFloat, eta: &BigFloat, d: DualPoint) -> BigFloat {
    let a = BigFloat::from_i64(d.a, EXT_PRECISION);
    let b = BigFloat::from_i64(d.b, EXT_PRECISION);
    let w = a
        .mul(xi, EXT_PRECISION, RM)
        .add(&b.mul(eta, EXT_PRECISION, RM), EXT_PRECISION, RM);
    a.mul(&a, EXT_PRECISION, RM)
        .add(&w.mul(&w, EXT_PRECISION, RM), EXT_PRECISION, RM)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ext(s: &str) -> ExtReal {
        ExtReal::parse(s).unwrap()
    }

    #[test]
    fn expression_parser() {
        assert_eq!(ext("0.5").value(), 0.5);
        assert_eq!(ext("sqrt(2)").value(), std::f64::consts::SQRT_2);
        // π − 3 rounded once, not π rounded and then shifted.
        assert_eq!(ext("pi - 3").value(), 0.141_592_653_589_793_23);
        assert_ne!(ext("pi - 3").value(), std::f64::consts::PI - 3.0);
        assert_eq!(ext("e/2").value(), std::f64::consts::E / 2.0);
        assert_eq!(ext("-(1+2)*3").value(), -9.0);
        assert_eq!(ext("1.5e2").value(), 150.0);
        assert_eq!(ext("1/3").value(), 1.0 / 3.0);
        for bad in ["", "2e", "sqrt(-1)", "1/0", "foo", "(1", "1 2", "1..2"] {
            assert!(ExtReal::parse(bad).is_err(), "{bad:?}");
        }
        // sqrt(2)^2 - 2 vanishes at the extended precision.
        let s = ext("sqrt(2)");
        let r = s.mul(&s).big().sub(&BigFloat::from_i64(2, EXT_PRECISION), EXT_PRECISION, RM);
        assert!(big_to_f64(&r.abs()) < ZERO_THRESHOLD);
    }

    #[test]
    fn grid_and_fit() {
        assert_eq!(height_grid(1), vec![1]);
        assert_eq!(height_grid(8), vec![1, 2, 4, 8]);
        assert_eq!(height_grid(20), vec![1, 2, 4, 8, 16, 20]);
        let (s, r) = least_squares_slope(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-12);
        assert!(least_squares_slope(&[(1.0, 1.0)]).is_none());
    }

    #[test]
    fn sqrt2_matches_convergents() {
        // |q√2 − p| over the convergents p/q of √2 with p ≤ H.
        let conv = [(1, 1), (3, 2), (7, 5), (17, 12), (41, 29), (99, 70), (239, 169), (577, 408), (1393, 985)];
        let oracle = |h: u64| -> f64 {
            conv.iter()
                .filter(|c| c.0 as u64 <= h)
                .map(|&(p, q)| (q as f64 * std::f64::consts::SQRT_2 - p as f64).abs())
                .fold(f64::INFINITY, f64::min)
        };
        let fit = linear_form_minimum(&DiophQuery::linear(vec![ext("sqrt(2)")], 1000)).unwrap();
        assert!(fit.relation.is_none());
        for &(q, v) in &fit.minima {
            let o = oracle(q);
            assert!((v - o).abs() <= 1e-12 * o, "q={q}: {v} vs {o}");
        }
        let k = fit.fitted_exponent.unwrap();
        assert!((0.8..=1.2).contains(&k), "{k}");
    }

    #[test]
    fn rational_input_gives_relation() {
        let fit = linear_form_minimum(&DiophQuery::linear(vec![ext("1/2")], 100)).unwrap();
        let rel = fit.relation.unwrap();
        assert_eq!(rel.height, 2);
        assert_eq!(rel.coefficients, vec![-1, 2]);
        assert_eq!(fit.minima, vec![(1, 0.5)]);
        assert!(fit.fitted_exponent.is_none());
    }

    #[test]
    fn linear_errors() {
        assert!(matches!(
            linear_form_minimum(&DiophQuery::linear(vec![ext("0")], 10)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            linear_form_minimum(&DiophQuery::linear(vec![ext("sqrt(2)")], 5000)),
            Err(Error::Budget { .. })
        ));
        let three = vec![ext("sqrt(2)"), ext("sqrt(3)"), ext("sqrt(5)")];
        assert!(linear_form_minimum(&DiophQuery::linear(three, 101)).is_err());
        assert!(linear_form_minimum(&DiophQuery::linear(vec![], 10)).is_err());
    }

    #[test]
    fn algebraic_pair_relation_at_degree_two() {
        let fit = polynomial_minimum((&ext("sqrt(2)"), &ext("sqrt(3)")), 2, 5).unwrap();
        let rel = fit.relation.expect("x^2 - 2 vanishes");
        // Check the returned polynomial really vanishes at 256 bits.
        let monos = monomials(&ext("sqrt(2)"), &ext("sqrt(3)"), 2);
        let mut acc = BigFloat::from_i64(rel.coefficients[0], EXT_PRECISION);
        for (a, (_, _, x)) in rel.coefficients[1..].iter().zip(&monos) {
            acc = acc.add(&BigFloat::from_i64(*a, EXT_PRECISION).mul(x.big(), EXT_PRECISION, RM), EXT_PRECISION, RM);
        }
        assert!(big_to_f64(&acc.abs()) < ZERO_THRESHOLD);
        assert!(rel.coefficients.iter().any(|&c| c != 0));
    }

    #[test]
    fn degree_one_equals_linear_form() {
        let (a, b) = (ext("pi-3"), ext("e/2"));
        let p = polynomial_minimum((&a, &b), 1, 64).unwrap();
        let l = linear_form_minimum(&DiophQuery::linear(vec![a, b], 64)).unwrap();
        assert_eq!(p, l);
    }

    #[test]
    fn monotone_in_height() {
        let fit = linear_form_minimum(&DiophQuery::linear(vec![ext("pi-3"), ext("e/2")], 200)).unwrap();
        for w in fit.minima.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn signed_sum_helper() {
        assert_eq!(signed_sqrt_sum(&[1.0, 4.0], &[1, -1]).abs(), 1.0);
    }

    #[test]
    fn z2_square_root_gap() {
        let z2 = LatticeSpec::standard();
        let g = sqrt_sum_gap(&z2, 50.0, 2, VectorFilter::AllNonnegative, Budget::default()).unwrap();
        assert_abs_diff_eq!(g.value, 50f64.sqrt() - 7.0, epsilon = 1e-15);
        assert!(!g.nonsymbolic_zero);
        // Primitive vectors only: 49 = 7² + 0² drops out, 25 = 3² + 4² stays.
        let g = sqrt_sum_gap(&z2, 50.0, 2, VectorFilter::Primitive, Budget::default()).unwrap();
        assert_abs_diff_eq!(g.value, 26f64.sqrt() - 5.0, epsilon = 1e-15);
    }

    #[test]
    fn z2_nonsymbolic_zero_is_flagged() {
        // √18 − √8 − √2 = 0 with (3,3), (2,2), (1,1): three different norms.
        let z2 = LatticeSpec::standard();
        let g = sqrt_sum_gap(&z2, 18.0, 3, VectorFilter::AllNonnegative, Budget::default()).unwrap();
        assert_eq!(g.value, 0.0);
        assert!(g.nonsymbolic_zero);
    }

    #[test]
    fn dual_points_match_dual_norm_formula() {
        let lat = LatticeSpec::generic();
        let pts = nonnegative_dual_points(&lat, 60.0, VectorFilter::Primitive);
        for (d, z) in &pts {
            assert!(d.a >= 0 && d.b >= 0 && gcd(d.a, d.b) == 1);
            assert_eq!(*z, lat.dual_squared_norm(*d));
        }
        // Complete: brute force over a generous box.
        let mut n = 0;
        for a in 0..40i64 {
            for b in 0..40i64 {
                if gcd(a, b) == 1 && lat.dual_squared_norm(DualPoint { a, b }) <= 60.0 {
                    n += 1;
                }
            }
        }
        assert_eq!(pts.len(), n);
    }
}
