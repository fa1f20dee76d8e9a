//! Exact-arithmetic checks of the combinatorial inequalities and majorant
//! power bounds used in the Gevrey regularity argument for weighted
//! parabolic systems.
//!
//! Everything here is exact. The irrational constants are replaced by
//! rationals chosen on the conservative side: [`q_pi`] sits just below
//! `2π²`, so an upper bound proved with it implies the bound with `2π²`, and
//! [`c0_low`] sits below `6 + 2π²`, so a majorant bound that holds with it
//! also holds with the larger constant.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GevreyError {
    #[error("parameters out of range: {0}")]
    Range(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("majorant coefficients must be nonnegative")]
    NegativeCoefficient,
}

/// Arbitrary-precision rational in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(numer: i64, denom: i64) -> Self {
        ExactRational(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_integer(n: BigInt) -> Self {
        ExactRational(BigRational::from_integer(n))
    }

    pub fn zero() -> Self {
        ExactRational(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactRational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn pow(&self, e: u32) -> Self {
        ExactRational(num_traits::pow(self.0.clone(), e as usize))
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    /// Nearest `f64`, for display only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl From<i64> for ExactRational {
    fn from(n: i64) -> Self {
        ExactRational(BigRational::from_integer(n.into()))
    }
}

impl From<BigRational> for ExactRational {
    fn from(r: BigRational) -> Self {
        ExactRational(r)
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for ExactRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: ExactRational) -> ExactRational {
                ExactRational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $tr<&'a ExactRational> for &'a ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &'a ExactRational) -> ExactRational {
                ExactRational((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $tr<&'a ExactRational> for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &'a ExactRational) -> ExactRational {
                ExactRational(self.0.$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl AddAssign<&ExactRational> for ExactRational {
    fn add_assign(&mut self, rhs: &ExactRational) {
        self.0 += &rhs.0;
    }
}

impl AddAssign for ExactRational {
    fn add_assign(&mut self, rhs: ExactRational) {
        self.0 += rhs.0;
    }
}

impl std::iter::Sum for ExactRational {
    fn sum<I: Iterator<Item = ExactRational>>(iter: I) -> Self {
        iter.fold(ExactRational::zero(), |a, b| a + b)
    }
}

/// `123370/6250 = 19.7392`, a rational lower stand-in for `2π² = 19.7392088...`.
pub fn q_pi() -> ExactRational {
    ExactRational::new(123_370, 6_250)
}

/// `25.7391`, a rational stand-in below `6 + 2π² = 25.7392088...`.
pub fn c0_low() -> ExactRational {
    ExactRational::new(257_391, 10_000)
}

thread_local! {
    static FACTORIALS: RefCell<Vec<BigInt>> = RefCell::new(vec![BigInt::one()]);
}

/// `n!`, memoized per thread.
pub fn factorial(n: usize) -> BigInt {
    FACTORIALS.with(|cell| {
        let mut table = cell.borrow_mut();
        while table.len() <= n {
            let next = table.last().unwrap() * BigInt::from(table.len());
            table.push(next);
        }
        table[n].clone()
    })
}

fn fact_q(n: usize) -> ExactRational {
    ExactRational::from_integer(factorial(n))
}

/// Binomial coefficient, zero outside `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let (n, k) = (n as usize, k as usize);
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Exact check of `Σ_i C(m,i) C(n,k-i) = C(m+n,k)`; `false` when `k > m+n`.
pub fn vandermonde_check(m: u32, n: u32, k: u32) -> bool {
    if k > m + n {
        return false;
    }
    let (m, n, k) = (m as i64, n as i64, k as i64);
    let lo = (k - n).max(0);
    let hi = m.min(k);
    let lhs: BigInt = (lo..=hi).map(|i| binomial(m, i) * binomial(n, k - i)).sum();
    lhs == binomial(m + n, k)
}

fn check_weight(b: u32, m: u32, n: u32) -> Result<usize, GevreyError> {
    if b == 0 {
        return Err(GevreyError::Range("weight b must be positive".into()));
    }
    let total = 2 * b as usize * m as usize + n as usize;
    if total < 4 {
        return Err(GevreyError::Range(format!("2bm+n = {total} < 4")));
    }
    Ok(total)
}

/// Left side of the weighted inequality:
/// `Σ (2bi+j-2)! (2b(m-i)+n-j-2)! / (i! j! (m-i)! (n-j)!)` over
/// `0<=i<=m, 0<=j<=n, 2 <= 2bi+j <= 2bm+n-2`.
pub fn combo_sum(b: u32, m: u32, n: u32) -> Result<ExactRational, GevreyError> {
    let total = check_weight(b, m, n)?;
    let (b, m, n) = (b as usize, m as usize, n as usize);
    let mut sum = ExactRational::zero();
    for i in 0..=m {
        for j in 0..=n {
            let w = 2 * b * i + j;
            if w < 2 || w + 2 > total {
                continue;
            }
            let num = factorial(w - 2) * factorial(total - w - 2);
            let den = factorial(i) * factorial(j) * factorial(m - i) * factorial(n - j);
            sum += ExactRational(BigRational::new(num, den));
        }
    }
    Ok(sum)
}

/// Outcome of [`combo_bound_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComboVerdict {
    pub b: u32,
    pub m: u32,
    pub n: u32,
    pub lhs: ExactRational,
    pub rhs_bound: ExactRational,
    pub holds: bool,
}

/// Checks `combo_sum(b,m,n) <= q_π (2bm+n-2)! / (m! n!)`.
pub fn combo_bound_check(b: u32, m: u32, n: u32) -> Result<ComboVerdict, GevreyError> {
    let lhs = combo_sum(b, m, n)?;
    let total = 2 * b as usize * m as usize + n as usize;
    let rhs_bound = q_pi() * fact_q(total - 2) / (fact_q(m as usize) * fact_q(n as usize));
    let holds = lhs <= rhs_bound;
    Ok(ComboVerdict { b, m, n, lhs, rhs_bound, holds })
}

/// The chain of upper bounds for `S = m! n! · combo_sum(b,m,n)`:
/// `[S, S₁, S₂, S₃]` where `S₁` replaces `C(m,i)` by `C(2bm,2bi)`, `S₂`
/// collapses the inner sum to `C(2bm+n,k)`, and
/// `S₃ = Σ_k (2bm+n)! / ((k-1)² (2bm+n-k-1)²)`.
pub fn combo1_chain(b: u32, m: u32, n: u32) -> Result<[ExactRational; 4], GevreyError> {
    let total = check_weight(b, m, n)?;
    let s = combo_sum(b, m, n)? * fact_q(m as usize) * fact_q(n as usize);
    let (bb, m, n) = (2 * b as i64, m as i64, n as i64);
    let big_n = total as i64;
    let mut s1 = ExactRational::zero();
    let mut s2 = ExactRational::zero();
    let mut s3 = ExactRational::zero();
    for k in 2..=big_n - 2 {
        let tail = fact_q((k - 2) as usize) * fact_q((big_n - k - 2) as usize);
        let mut inner = BigInt::zero();
        for i in 0..=m {
            let j = k - bb * i;
            if j < 0 || j > n {
                continue;
            }
            inner += binomial(bb * m, bb * i) * binomial(n, j);
        }
        s1 += ExactRational::from_integer(inner) * &tail;
        s2 += ExactRational::from_integer(binomial(big_n, k)) * &tail;
        let d = (k - 1) * (big_n - k - 1);
        s3 += fact_q(total) / ExactRational::from(d * d);
    }
    Ok([s, s1, s2, s3])
}

/// True when the chain from [`combo1_chain`] is non-increasing from right to left.
pub fn combo1_check(b: u32, m: u32, n: u32) -> Result<bool, GevreyError> {
    let c = combo1_chain(b, m, n)?;
    Ok(c[0] <= c[1] && c[1] <= c[2] && c[2] <= c[3])
}

/// `Σ_{k=2}^{N-2} N! / ((k-1)² (N-k-1)²)`.
pub fn combo2_lhs(big_n: u32) -> Result<ExactRational, GevreyError> {
    if big_n < 4 {
        return Err(GevreyError::Range(format!("N = {big_n} < 4")));
    }
    let nf = fact_q(big_n as usize);
    let big_n = big_n as i64;
    Ok((2..=big_n - 2)
        .map(|k| {
            let d = (k - 1) * (big_n - k - 1);
            &nf / &ExactRational::from(d * d)
        })
        .sum())
}

/// Checks `combo2_lhs(N) <= q_π (N-2)!`.
pub fn combo2_check(big_n: u32) -> Result<bool, GevreyError> {
    let lhs = combo2_lhs(big_n)?;
    Ok(lhs <= q_pi() * fact_q(big_n as usize - 2))
}

/// Truncated bivariate series `Σ c_ij τ^i ξ^j`, `0<=i<=p`, `0<=j<=q`, with
/// nonnegative exact coefficients. `b` is the weight of `τ` relative to `ξ`
/// (`τ` counts as order `2b`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MajorantPoly {
    b: u32,
    p: usize,
    q: usize,
    coeffs: Vec<ExactRational>,
}

impl MajorantPoly {
    pub fn zero(b: u32, p: usize, q: usize) -> Self {
        MajorantPoly { b, p, q, coeffs: vec![ExactRational::zero(); (p + 1) * (q + 1)] }
    }

    /// The constant polynomial `1`.
    pub fn one(b: u32, p: usize, q: usize) -> Self {
        let mut f = Self::zero(b, p, q);
        f.coeffs[0] = ExactRational::one();
        f
    }

    /// Builds from a row-major `(p+1) x (q+1)` coefficient table.
    pub fn from_coeffs(b: u32, p: usize, q: usize, coeffs: Vec<ExactRational>) -> Result<Self, GevreyError> {
        if coeffs.len() != (p + 1) * (q + 1) {
            return Err(GevreyError::ShapeMismatch(format!(
                "{} coefficients for shape ({}, {})",
                coeffs.len(),
                p + 1,
                q + 1
            )));
        }
        if coeffs.iter().any(ExactRational::is_negative) {
            return Err(GevreyError::NegativeCoefficient);
        }
        Ok(MajorantPoly { b, p, q, coeffs })
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn coeff(&self, i: usize, j: usize) -> &ExactRational {
        &self.coeffs[i * (self.q + 1) + j]
    }

    /// Sets `c_ij`. Negative values are rejected.
    pub fn set(&mut self, i: usize, j: usize, value: ExactRational) -> Result<(), GevreyError> {
        if value.is_negative() {
            return Err(GevreyError::NegativeCoefficient);
        }
        let q = self.q;
        self.coeffs[i * (q + 1) + j] = value;
        Ok(())
    }

    fn check_shape(&self, other: &MajorantPoly) -> Result<(), GevreyError> {
        if (self.b, self.p, self.q) != (other.b, other.p, other.q) {
            return Err(GevreyError::ShapeMismatch(format!(
                "(b={}, p={}, q={}) vs (b={}, p={}, q={})",
                self.b, self.p, self.q, other.b, other.p, other.q
            )));
        }
        Ok(())
    }

    /// First coefficient `(i, j) != (0, 0)` where `self` exceeds `other`.
    pub fn first_violation(&self, other: &MajorantPoly) -> Result<Option<(usize, usize)>, GevreyError> {
        self.check_shape(other)?;
        for i in 0..=self.p {
            for j in 0..=self.q {
                if (i, j) != (0, 0) && self.coeff(i, j) > other.coeff(i, j) {
                    return Ok(Some((i, j)));
                }
            }
        }
        Ok(None)
    }
}

/// `f ≪ g`: every coefficient except the constant one is dominated.
///
/// Comparing coefficients is the same as comparing `D_τ^i D_ξ^j` at the
/// origin, since both sides carry the same factor `i! j!`.
pub fn majorant_leq(f: &MajorantPoly, g: &MajorantPoly) -> Result<bool, GevreyError> {
    Ok(f.first_violation(g)?.is_none())
}

/// Truncated product of two series of the same shape.
pub fn majorant_product(f: &MajorantPoly, g: &MajorantPoly) -> Result<MajorantPoly, GevreyError> {
    f.check_shape(g)?;
    let (p, q) = (f.p, f.q);
    let mut out = MajorantPoly::zero(f.b, p, q);
    for i1 in 0..=p {
        for j1 in 0..=q {
            let a = f.coeff(i1, j1);
            if a.is_zero() {
                continue;
            }
            for i2 in 0..=p - i1 {
                for j2 in 0..=q - j1 {
                    let c = g.coeff(i2, j2);
                    if c.is_zero() {
                        continue;
                    }
                    out.coeffs[(i1 + i2) * (q + 1) + j1 + j2] += a * c;
                }
            }
        }
    }
    Ok(out)
}

/// Parameters of the majorant `w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorantParams {
    pub b: u32,
    pub p: usize,
    pub q: usize,
    pub s: i64,
    pub h0: ExactRational,
    pub h: ExactRational,
}

impl MajorantParams {
    pub fn new(b: u32, p: usize, q: usize, s: i64, h0: ExactRational, h: ExactRational) -> Result<Self, GevreyError> {
        if b == 0 {
            return Err(GevreyError::Range("weight b must be positive".into()));
        }
        if h0 < ExactRational::one() || h < ExactRational::one() {
            return Err(GevreyError::Range("H0 and H must be >= 1".into()));
        }
        let top = 2 * b as i64 * p as i64 + q as i64;
        if top + s < 0 {
            return Err(GevreyError::Range(format!("2bp+q+s = {} < 0", top + s)));
        }
        Ok(MajorantParams { b, p, q, s, h0, h })
    }

    /// `2bp + q`, the largest weighted order kept.
    pub fn top_order(&self) -> usize {
        2 * self.b as usize * self.p + self.q
    }

    fn weight(&self, i: usize, j: usize) -> usize {
        2 * self.b as usize * i + j
    }

    fn h_pow(&self, e: i64) -> ExactRational {
        self.h.pow(e.max(0) as u32)
    }
}

/// `w = H̃₀ ξ + Σ_{2<=2bi+j<=2bp+q} (2bi+j-2)!/(i! j!) H̃₀ H^{max(2bi+j+s-2,0)} τ^i ξ^j`.
pub fn majorant_w(params: &MajorantParams) -> MajorantPoly {
    let (p, q) = (params.p, params.q);
    let mut w = MajorantPoly::zero(params.b, p, q);
    if q >= 1 {
        w.coeffs[1] = params.h0.clone();
    }
    for i in 0..=p {
        for j in 0..=q {
            let wt = params.weight(i, j);
            if wt < 2 {
                continue;
            }
            let c = fact_q(wt - 2) / (fact_q(i) * fact_q(j))
                * &params.h0
                * params.h_pow(wt as i64 + params.s - 2);
            w.coeffs[i * (q + 1) + j] = c;
        }
    }
    w
}

/// Right side of the power bound for `w^k` with constant `c0`:
/// `H̃₀^k ξ^k + Σ_{k+1<=2bi+j<=2bp+q} (2bi+j-2)!/(i! j!) c0^{k-1} H̃₀^k H^{max(2bi+j+s-k-1,0)} τ^i ξ^j`.
pub fn power_bound_rhs(params: &MajorantParams, k: usize, c0: &ExactRational) -> MajorantPoly {
    let (p, q) = (params.p, params.q);
    let mut r = MajorantPoly::zero(params.b, p, q);
    let h0k = params.h0.pow(k as u32);
    if k <= q {
        r.coeffs[k] = h0k.clone();
    }
    let c0k = c0.pow(k as u32 - 1);
    for i in 0..=p {
        for j in 0..=q {
            let wt = params.weight(i, j);
            if wt < k + 1 {
                continue;
            }
            let c = fact_q(wt - 2) / (fact_q(i) * fact_q(j))
                * &c0k
                * &h0k
                * params.h_pow(wt as i64 + params.s - k as i64 - 1);
            r.coeffs[i * (q + 1) + j] += c;
        }
    }
    r
}

fn check_power(params: &MajorantParams, k: usize) -> Result<(), GevreyError> {
    if k == 0 || k > params.top_order() {
        return Err(GevreyError::Range(format!("k = {k} outside 1..={}", params.top_order())));
    }
    Ok(())
}

/// Checks `w^k ≪ power_bound_rhs(k, C₀_low)` by direct multiplication.
pub fn verify_power_bound(k: usize, params: &MajorantParams) -> Result<bool, GevreyError> {
    check_power(params, k)?;
    let w = majorant_w(params);
    let mut wk = w.clone();
    for _ in 1..k {
        wk = majorant_product(&wk, &w)?;
    }
    majorant_leq(&wk, &power_bound_rhs(params, k, &c0_low()))
}

/// Induction step: `w · rhs(k) ≪ rhs(k+1)` with `C₀_low`.
pub fn verify_induction_step(k: usize, params: &MajorantParams) -> Result<bool, GevreyError> {
    check_power(params, k)?;
    check_power(params, k + 1)?;
    let c0 = c0_low();
    let lhs = majorant_product(&majorant_w(params), &power_bound_rhs(params, k, &c0))?;
    majorant_leq(&lhs, &power_bound_rhs(params, k + 1, &c0))
}

/// Result of checking every power of `w` for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerBoundReport {
    pub params: MajorantParams,
    /// `k` values where `w^k ≪ rhs(k)` fails.
    pub power_failures: Vec<usize>,
    /// `k` values where `w · rhs(k) ≪ rhs(k+1)` fails.
    pub induction_failures: Vec<usize>,
    pub holds: bool,
}

/// Checks all powers `k = 1..=2bp+q` and all induction steps. Powers are
/// built incrementally.
pub fn power_bound_report(params: &MajorantParams) -> PowerBoundReport {
    let top = params.top_order();
    let c0 = c0_low();
    let w = majorant_w(params);
    let mut wk = w.clone();
    let mut power_failures = Vec::new();
    let mut induction_failures = Vec::new();
    let mut rhs = power_bound_rhs(params, 1, &c0);
    for k in 1..=top {
        if k > 1 {
            wk = majorant_product(&wk, &w).expect("same shape");
        }
        if !majorant_leq(&wk, &rhs).expect("same shape") {
            power_failures.push(k);
        }
        if k < top {
            let next = power_bound_rhs(params, k + 1, &c0);
            let stepped = majorant_product(&w, &rhs).expect("same shape");
            if !majorant_leq(&stepped, &next).expect("same shape") {
                induction_failures.push(k);
            }
            rhs = next;
        }
    }
    let holds = power_failures.is_empty();
    PowerBoundReport { params: params.clone(), power_failures, induction_failures, holds }
}

/// The documented parameter grid: `b ∈ {1,2}`, `(p,q) ∈ {(2,3),(3,5),(4,4)}`,
/// `s ∈ {-2,0,1}`, `H̃₀, H ∈ {1,2}`.
pub fn default_power_grid() -> Vec<MajorantParams> {
    let mut grid = Vec::new();
    for b in [1u32, 2] {
        for (p, q) in [(2usize, 3usize), (3, 5), (4, 4)] {
            for s in [-2i64, 0, 1] {
                for h0 in [1i64, 2] {
                    for h in [1i64, 2] {
                        grid.push(
                            MajorantParams::new(b, p, q, s, h0.into(), h.into()).expect("grid parameters are valid"),
                        );
                    }
                }
            }
        }
    }
    grid
}

/// Scan ranges for [`run_scans`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanRanges {
    /// Largest `m, n` in the Vandermonde scan.
    pub vandermonde_max: u32,
    /// Largest weight `b` in the inequality scan.
    pub b_max: u32,
    /// Largest `2bm+n` in the inequality scan.
    pub degree_max: u32,
    /// Largest `N` in the second bound.
    pub n_max: u32,
}

impl Default for ScanRanges {
    fn default() -> Self {
        ScanRanges { vandermonde_max: 20, b_max: 3, degree_max: 30, n_max: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub ranges: ScanRanges,
    pub vandermonde_cases: usize,
    pub vandermonde_failures: Vec<(u32, u32, u32)>,
    pub combo_cases: usize,
    pub combo_failures: Vec<ComboVerdict>,
    /// Smallest `rhs/lhs` over the inequality scan.
    pub combo_min_ratio: f64,
    pub chain_failures: Vec<(u32, u32, u32)>,
    pub combo2_failures: Vec<u32>,
    pub power_cases: usize,
    pub power_failures: Vec<PowerBoundReport>,
    pub induction_step_failures: usize,
    pub holds: bool,
}

/// All `(b, m, n)` with `1 <= b <= b_max` and `4 <= 2bm+n <= degree_max`.
pub fn combo_index_set(b_max: u32, degree_max: u32) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for b in 1..=b_max {
        let mut m = 0;
        while 2 * b * m <= degree_max {
            for n in 0..=degree_max - 2 * b * m {
                if 2 * b * m + n >= 4 {
                    out.push((b, m, n));
                }
            }
            m += 1;
        }
    }
    out
}

/// Runs every exact scan in parallel. Aggregation preserves input order.
pub fn run_scans(ranges: ScanRanges) -> ScanReport {
    let vm = ranges.vandermonde_max;
    let vcases: Vec<(u32, u32, u32)> =
        (0..=vm).flat_map(|m| (0..=vm).flat_map(move |n| (0..=m + n).map(move |k| (m, n, k)))).collect();
    let vandermonde_failures: Vec<_> =
        vcases.par_iter().filter(|&&(m, n, k)| !vandermonde_check(m, n, k)).copied().collect();

    let ccases = combo_index_set(ranges.b_max, ranges.degree_max);
    let verdicts: Vec<(ComboVerdict, bool)> = ccases
        .par_iter()
        .map(|&(b, m, n)| {
            let v = combo_bound_check(b, m, n).expect("index set respects the range");
            let chain = combo1_check(b, m, n).expect("index set respects the range");
            (v, chain)
        })
        .collect();
    let combo_min_ratio = verdicts
        .iter()
        .filter(|(v, _)| !v.lhs.is_zero())
        .map(|(v, _)| (&v.rhs_bound / &v.lhs).to_f64())
        .min_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
        .unwrap_or(f64::INFINITY);
    let combo_failures: Vec<ComboVerdict> = verdicts.iter().filter(|(v, _)| !v.holds).map(|(v, _)| v.clone()).collect();
    let chain_failures: Vec<(u32, u32, u32)> =
        verdicts.iter().filter(|(_, c)| !c).map(|(v, _)| (v.b, v.m, v.n)).collect();

    let combo2_failures: Vec<u32> =
        (4..=ranges.n_max.max(4)).into_par_iter().filter(|&n| !combo2_check(n).expect("N >= 4")).collect();

    let grid = default_power_grid();
    let reports: Vec<PowerBoundReport> = grid.par_iter().map(power_bound_report).collect();
    let induction_step_failures = reports.iter().map(|r| r.induction_failures.len()).sum();
    let power_failures: Vec<PowerBoundReport> = reports.into_iter().filter(|r| !r.holds).collect();

    let holds = vandermonde_failures.is_empty()
        && combo_failures.is_empty()
        && combo2_failures.is_empty()
        && power_failures.is_empty();
    ScanReport {
        ranges,
        vandermonde_cases: vcases.len(),
        vandermonde_failures,
        combo_cases: ccases.len(),
        combo_failures,
        combo_min_ratio,
        chain_failures,
        combo2_failures,
        power_cases: grid.len(),
        power_failures,
        induction_step_failures,
        holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> ExactRational {
        ExactRational::new(n, d)
    }

    #[test]
    fn constants() {
        assert_eq!(q_pi(), r(197_392, 10_000));
        assert!(q_pi().to_f64() < 2.0 * std::f64::consts::PI.powi(2));
        assert!(c0_low().to_f64() < 6.0 + 2.0 * std::f64::consts::PI.powi(2));
    }

    #[test]
    fn vandermonde_small() {
        assert!(vandermonde_check(1, 1, 1));
        assert!(vandermonde_check(3, 5, 0));
        assert!(vandermonde_check(0, 0, 0));
        assert!(!vandermonde_check(1, 1, 3));
    }

    #[test]
    fn combo_sum_b1_m2_n0() {
        // only i = 1 is admissible: 0! 0! / (1! 0! 1! 0!) = 1
        assert_eq!(combo_sum(1, 2, 0).unwrap(), ExactRational::one());
    }

    #[test]
    fn combo_sum_b1_m1_n2() {
        // (i,j) = (1,0): 0! 0!/(1!0!0!2!) = 1/2 ; (0,2): 0! 0!/(0!2!1!0!) = 1/2
        assert_eq!(combo_sum(1, 1, 2).unwrap(), ExactRational::one());
    }

    #[test]
    fn combo_range() {
        assert!(matches!(combo_sum(1, 1, 1), Err(GevreyError::Range(_))));
        assert!(matches!(combo2_check(3), Err(GevreyError::Range(_))));
    }

    #[test]
    fn combo2_n4() {
        assert_eq!(combo2_lhs(4).unwrap(), ExactRational::from(24));
        assert!(combo2_check(4).unwrap());
    }

    #[test]
    fn combo_examples_hold() {
        assert!(combo_bound_check(1, 2, 1).unwrap().holds);
        assert!(combo_bound_check(3, 1, 4).unwrap().holds);
        assert!(combo1_check(2, 2, 3).unwrap());
    }

    #[test]
    fn product_identities() {
        let (b, p, q) = (1, 2, 3);
        let mut f = MajorantPoly::zero(b, p, q);
        f.set(1, 0, r(1, 1)).unwrap();
        f.set(0, 1, r(1, 1)).unwrap();
        let sq = majorant_product(&f, &f).unwrap();
        assert_eq!(sq.coeff(2, 0), &r(1, 1));
        assert_eq!(sq.coeff(1, 1), &r(2, 1));
        assert_eq!(sq.coeff(0, 2), &r(1, 1));
        assert_eq!(majorant_product(&f, &MajorantPoly::one(b, p, q)).unwrap(), f);
        assert!(majorant_leq(&MajorantPoly::zero(b, p, q), &f).unwrap());
        assert!(majorant_leq(&f, &f).unwrap());
        assert!(majorant_product(&f, &MajorantPoly::zero(2, p, q)).is_err());
    }

    #[test]
    fn leq_ignores_constant() {
        let mut f = MajorantPoly::zero(1, 1, 1);
        f.set(0, 0, r(5, 1)).unwrap();
        assert!(majorant_leq(&f, &MajorantPoly::zero(1, 1, 1)).unwrap());
        assert!(f.set(0, 1, r(-1, 2)).is_err());
    }

    #[test]
    fn power_bound_examples() {
        let p = MajorantParams::new(1, 4, 4, 0, 1.into(), 1.into()).unwrap();
        assert!(verify_power_bound(1, &p).unwrap());
        assert!(verify_power_bound(2, &p).unwrap());
        let p = MajorantParams::new(2, 3, 5, -2, 1.into(), 1.into()).unwrap();
        for k in 1..=5 {
            assert!(verify_power_bound(k, &p).unwrap(), "k = {k}");
        }
        assert!(verify_power_bound(0, &p).is_err());
    }

    #[test]
    fn w_has_no_constant_term() {
        let p = MajorantParams::new(1, 2, 3, 1, 2.into(), 2.into()).unwrap();
        let w = majorant_w(&p);
        assert!(w.coeff(0, 0).is_zero());
        assert_eq!(w.coeff(0, 1), &r(2, 1));
        // (0,2): 0!/(0! 2!) * 2 * 2^{1}
        assert_eq!(w.coeff(0, 2), &r(2, 1));
    }
}
