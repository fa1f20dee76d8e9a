//! Tangent-cone model of a junction where `q` sheets meet along a common
//! boundary.
//!
//! Each sheet `k` is the graph of a map `u_k` over a half-space; at the
//! junction point only its normal slope `a_k = D_{x_n} u_k` matters. Sheets
//! `0..s` live on the plus side `{x_n > 0}`, the remaining ones on the minus
//! side. All vectors in the normal section are written in the coordinates
//! `(x_n, z^1, ..., z^m)`.
//!
//! Sheet indices are zero-based throughout the crate.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest admissible `|a_1 - a_2|` for operations dividing by it.
pub const DEGENERACY_GUARD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid junction configuration: {0}")]
    Invalid(String),
    #[error("sheet index {index} out of range for {count} sheets")]
    SheetIndex { index: usize, count: usize },
    #[error("degenerate configuration: |a_1 - a_2| = {separation:e}")]
    Degenerate { separation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("sheet {sheet} is no longer a graph over its side after normalization")]
    SideChange { sheet: usize },
}

/// Which half-space a sheet is a graph over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    /// `+1` on the plus side, `-1` on the minus side.
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJunctionConfig {
    n: usize,
    m: usize,
    q: usize,
    s: usize,
    theta: Vec<u32>,
    slopes: Vec<Vec<f64>>,
}

/// Junction configuration: dimensions, side split, multiplicities and slopes.
///
/// Serialized as `{n, m, q, s, theta: [..], slopes: [[..], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJunctionConfig", into = "RawJunctionConfig")]
pub struct JunctionConfig {
    n: usize,
    m: usize,
    s: usize,
    theta: Vec<u32>,
    slopes: Vec<Vec<f64>>,
}

impl TryFrom<RawJunctionConfig> for JunctionConfig {
    type Error = ConfigError;

    fn try_from(raw: RawJunctionConfig) -> Result<Self, Self::Error> {
        if raw.q != raw.theta.len() {
            return Err(ConfigError::Invalid(format!(
                "q = {} but {} multiplicities given",
                raw.q,
                raw.theta.len()
            )));
        }
        JunctionConfig::new(raw.n, raw.m, raw.s, raw.theta, raw.slopes)
    }
}

impl From<JunctionConfig> for RawJunctionConfig {
    fn from(c: JunctionConfig) -> Self {
        RawJunctionConfig {
            n: c.n,
            m: c.m,
            q: c.theta.len(),
            s: c.s,
            theta: c.theta,
            slopes: c.slopes,
        }
    }
}

impl JunctionConfig {
    pub fn new(
        n: usize,
        m: usize,
        s: usize,
        theta: Vec<u32>,
        slopes: Vec<Vec<f64>>,
    ) -> Result<Self, ConfigError> {
        let q = theta.len();
        if n == 0 || m == 0 {
            return Err(ConfigError::Invalid("n and m must be positive".into()));
        }
        if q < 3 {
            return Err(ConfigError::Invalid(format!("need at least 3 sheets, got {q}")));
        }
        if s < 2 || s >= q {
            return Err(ConfigError::Invalid(format!("side split s = {s} must satisfy 2 <= s < q = {q}")));
        }
        if theta.contains(&0) {
            return Err(ConfigError::Invalid("multiplicities must be >= 1".into()));
        }
        if slopes.len() != q {
            return Err(ConfigError::DimensionMismatch { expected: q, found: slopes.len() });
        }
        for a in &slopes {
            if a.len() != m {
                return Err(ConfigError::DimensionMismatch { expected: m, found: a.len() });
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(ConfigError::Invalid("slopes must be finite".into()));
            }
        }
        Ok(JunctionConfig { n, m, s, theta, slopes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> usize {
        self.theta.len()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn theta(&self) -> &[u32] {
        &self.theta
    }

    pub fn slopes(&self) -> &[Vec<f64>] {
        &self.slopes
    }

    pub fn slope(&self, k: usize) -> &[f64] {
        &self.slopes[k]
    }

    pub fn side(&self, k: usize) -> Side {
        if k < self.s {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    /// Same geometry with different multiplicities.
    pub fn with_theta(&self, theta: Vec<u32>) -> Result<Self, ConfigError> {
        JunctionConfig::new(self.n, self.m, self.s, theta, self.slopes.clone())
    }

    /// Same multiplicities with different slopes.
    pub fn with_slopes(&self, slopes: Vec<Vec<f64>>) -> Result<Self, ConfigError> {
        JunctionConfig::new(self.n, self.m, self.s, self.theta.clone(), slopes)
    }

    /// `|a_1 - a_2|`, the separation of the two leading sheets.
    pub fn leading_separation(&self) -> f64 {
        norm(&sub(&self.slopes[0], &self.slopes[1]))
    }

    /// True when `a_1, a_2` lie on the first slope axis with `a_1^1 > a_2^1`.
    pub fn is_normalized(&self) -> bool {
        let (a1, a2) = (&self.slopes[0], &self.slopes[1]);
        a1[1..].iter().chain(&a2[1..]).all(|&x| x == 0.0) && a1[0] > a2[0]
    }

    fn check_index(&self, k: usize) -> Result<(), ConfigError> {
        if k >= self.q() {
            Err(ConfigError::SheetIndex { index: k, count: self.q() })
        } else {
            Ok(())
        }
    }

    /// Outward unit conormal of sheet `k` in `(x_n, z)` coordinates:
    /// `-(1, a_k)/sqrt(1+|a_k|^2)` on the plus side, `+(1, a_k)/...` on the minus side.
    pub fn unit_conormal(&self, k: usize) -> Result<Vec<f64>, ConfigError> {
        self.check_index(k)?;
        Ok(conormal_of(self.side(k), &self.slopes[k]))
    }

    /// Multiplicity-weighted sum of conormals; zero iff the cone is stationary.
    pub fn balance_residual(&self) -> BalanceReport {
        let conormals: Vec<Vec<f64>> =
            (0..self.q()).map(|k| conormal_of(self.side(k), &self.slopes[k])).collect();
        let mut residual = vec![0.0; self.m + 1];
        for (eta, &t) in conormals.iter().zip(&self.theta) {
            for (r, e) in residual.iter_mut().zip(eta) {
                *r += t as f64 * e;
            }
        }
        let norm = norm(&residual);
        BalanceReport { residual, norm, per_sheet_conormals: conormals }
    }

    /// Left-hand sides of the curved-boundary balance system at a boundary
    /// point: the `x_n` row followed by the `m` slope rows,
    ///
    /// `sum_k ±θ_k (1, d_k) / sqrt(1 + |Dψ|^2 + |d_k|^2)`, `+` on the plus side,
    ///
    /// where `d_k` is the derivative of `u_k` along `(-D_{x'}ψ, 1)`.
    /// With `psi_gradient = 0` and `d_k = a_k` this is `-balance_residual()`.
    pub fn boundary_balance_residual(
        &self,
        psi_gradient: &[f64],
        directional_derivatives: &[Vec<f64>],
    ) -> Result<Vec<f64>, ConfigError> {
        if psi_gradient.len() != self.n - 1 {
            return Err(ConfigError::DimensionMismatch {
                expected: self.n - 1,
                found: psi_gradient.len(),
            });
        }
        if directional_derivatives.len() != self.q() {
            return Err(ConfigError::DimensionMismatch {
                expected: self.q(),
                found: directional_derivatives.len(),
            });
        }
        let g2: f64 = psi_gradient.iter().map(|x| x * x).sum();
        let mut out = vec![0.0; self.m + 1];
        for (k, d) in directional_derivatives.iter().enumerate() {
            if d.len() != self.m {
                return Err(ConfigError::DimensionMismatch { expected: self.m, found: d.len() });
            }
            let denom = (1.0 + g2 + dot(d, d)).sqrt();
            let w = self.side(k).sign() * self.theta[k] as f64 / denom;
            out[0] += w;
            for (o, dk) in out[1..].iter_mut().zip(d) {
                *o += w * dk;
            }
        }
        Ok(out)
    }

    /// False exactly when every sheet has the same slope, i.e. all sheets are
    /// tangent to one `n`-plane.
    pub fn not_all_tangent(&self) -> bool {
        self.slopes.iter().any(|a| a != &self.slopes[0])
    }

    /// Orthogonal change of coordinates of the normal section bringing the
    /// configuration to normalized form.
    ///
    /// When `a_1` and `a_2` are parallel the rotation only acts on the slope
    /// space (`R a_k` are the new slopes). Otherwise the `x_n` axis is
    /// replaced by the projection of `e_{x_n}` onto the plane of the two
    /// leading half-lines and the slopes are re-read as graphs over it.
    pub fn normalize(&self) -> Result<Normalization, ConfigError> {
        let separation = self.leading_separation();
        if separation < DEGENERACY_GUARD {
            return Err(ConfigError::Degenerate { separation });
        }
        let dim = self.m + 1;
        if self.is_normalized() {
            return Ok(Normalization { config: self.clone(), rotation: DMatrix::identity(dim, dim) });
        }
        let (a1, a2) = (&self.slopes[0], &self.slopes[1]);
        let cross2 = dot(a1, a1) * dot(a2, a2) - dot(a1, a2).powi(2);
        let scale = (1.0 + dot(a1, a1)) * (1.0 + dot(a2, a2));
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(dim);
        if cross2 <= 1e-24 * scale {
            let mut e0 = vec![0.0; dim];
            e0[0] = 1.0;
            let mut e1 = vec![0.0; dim];
            for (e, d) in e1[1..].iter_mut().zip(sub(a1, a2)) {
                *e = d / separation;
            }
            frame.push(e0);
            frame.push(e1);
        } else {
            let v1 = lift(a1);
            let v2 = lift(a2);
            let f1 = scaled(&v1, 1.0 / norm(&v1));
            let mut f2 = sub(&v2, &scaled(&f1, dot(&v2, &f1)));
            let f2n = norm(&f2);
            f2 = scaled(&f2, 1.0 / f2n);
            // Projection of e_{x_n} onto span(v1, v2).
            let (alpha, beta) = (f1[0], f2[0]);
            let r = alpha.hypot(beta);
            let (alpha, beta) = (alpha / r, beta / r);
            let e0: Vec<f64> = f1.iter().zip(&f2).map(|(x, y)| alpha * x + beta * y).collect();
            let mut e1: Vec<f64> = f1.iter().zip(&f2).map(|(x, y)| -beta * x + alpha * y).collect();
            let s1 = dot(&v1, &e1) / dot(&v1, &e0);
            let s2 = dot(&v2, &e1) / dot(&v2, &e0);
            if s1 < s2 {
                e1.iter_mut().for_each(|x| *x = -*x);
            }
            frame.push(e0);
            frame.push(e1);
        }
        complete_orthonormal(&mut frame, dim);
        let rotation = DMatrix::from_fn(dim, dim, |i, j| frame[i][j]);

        let mut slopes = Vec::with_capacity(self.q());
        for (k, a) in self.slopes.iter().enumerate() {
            let v = &rotation * DVector::from_vec(lift(a));
            if v[0] <= 1e-10 * v.norm() {
                return Err(ConfigError::SideChange { sheet: k });
            }
            slopes.push(v.iter().skip(1).map(|x| x / v[0]).collect::<Vec<f64>>());
        }
        for a in slopes.iter_mut().take(2) {
            a[1..].iter_mut().for_each(|x| *x = 0.0);
        }
        let config = JunctionConfig::new(self.n, self.m, self.s, self.theta.clone(), slopes)?;
        Ok(Normalization { config, rotation })
    }
}

impl fmt::Display for JunctionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "junction(n={}, m={}, q={}, s={}, theta={:?})", self.n, self.m, self.q(), self.s, self.theta)
    }
}

/// Result of [`JunctionConfig::balance_residual`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub residual: Vec<f64>,
    pub norm: f64,
    pub per_sheet_conormals: Vec<Vec<f64>>,
}

/// A normalized configuration together with the orthogonal map of the
/// normal section `(x_n, z)` that produced it.
#[derive(Debug, Clone)]
pub struct Normalization {
    pub config: JunctionConfig,
    pub rotation: DMatrix<f64>,
}

impl Normalization {
    /// The `m x m` slope rotation when the change of coordinates fixes the
    /// `x_n` axis, `None` otherwise.
    pub fn slope_rotation(&self) -> Option<DMatrix<f64>> {
        let dim = self.rotation.nrows();
        let fixes_axis = (self.rotation[(0, 0)] - 1.0).abs() < 1e-12
            && (1..dim).all(|i| self.rotation[(0, i)].abs() < 1e-12 && self.rotation[(i, 0)].abs() < 1e-12);
        fixes_axis.then(|| self.rotation.view((1, 1), (dim - 1, dim - 1)).into_owned())
    }
}

fn conormal_of(side: Side, a: &[f64]) -> Vec<f64> {
    let scale = -side.sign() / (1.0 + dot(a, a)).sqrt();
    lift(a).into_iter().map(|x| x * scale).collect()
}

/// Gram-Schmidt completion of `frame` with the standard basis, in order.
fn complete_orthonormal(frame: &mut Vec<Vec<f64>>, dim: usize) {
    for i in 0..dim {
        if frame.len() == dim {
            break;
        }
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for f in frame.iter() {
                let c = dot(&v, f);
                v.iter_mut().zip(f).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            frame.push(scaled(&v, 1.0 / nv));
        }
    }
}

fn lift(a: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(a.iter().copied()).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn scaled(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

/// Symmetric bilinear map `(point, v, w) -> A_point(v, w)` into `R^{n+m}`.
pub type SecondFundamentalForm = dyn Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync;

/// Ambient manifold data entering the curvature source term. Only the flat
/// case is used by the simulator.
#[derive(Clone)]
pub struct AmbientGeometry {
    dim: usize,
    form: Option<Arc<SecondFundamentalForm>>,
}

impl fmt::Debug for AmbientGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AmbientGeometry").field("dim", &self.dim).field("is_flat", &self.is_flat()).finish()
    }
}

impl AmbientGeometry {
    /// Flat ambient space of dimension `n + m`.
    pub fn flat(dim: usize) -> Self {
        AmbientGeometry { dim, form: None }
    }

    /// Caller-supplied second fundamental form. Symmetry in the two vector
    /// arguments is the caller's responsibility.
    pub fn with_form(dim: usize, form: Arc<SecondFundamentalForm>) -> Self {
        AmbientGeometry { dim, form: Some(form) }
    }

    /// Point-independent form given by one symmetric matrix per output component.
    pub fn constant(components: Vec<DMatrix<f64>>) -> Self {
        let dim = components.len();
        let form = move |_: &[f64], v: &[f64], w: &[f64]| -> Vec<f64> {
            let v = DVector::from_column_slice(v);
            let w = DVector::from_column_slice(w);
            components.iter().map(|a| v.dot(&(a * &w))).collect()
        };
        AmbientGeometry { dim, form: Some(Arc::new(form)) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_flat(&self) -> bool {
        self.form.is_none()
    }

    pub fn second_fundamental_form(&self, point: &[f64], v: &[f64], w: &[f64]) -> Vec<f64> {
        match &self.form {
            Some(f) => f(point, v, w),
            None => vec![0.0; self.dim],
        }
    }
}

/// `G(p) = I + p^T p` for a slope matrix `p` of shape `m x n`
/// (`p[(λ, i)] = D_{x_i} u^λ`).
pub fn metric_matrix(p: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(p.ncols(), p.ncols()) + p.transpose() * p
}

/// `𝓗^κ(x, z, p) = Σ_ij G^{ij}(p) A_{(x,z)}^κ((e_i, p_i), (e_j, p_j))` for
/// `κ = 1..n+m`.
pub fn curvature_source(ambient: &AmbientGeometry, x: &[f64], z: &[f64], p: &DMatrix<f64>) -> Vec<f64> {
    let dim = ambient.dim();
    if ambient.is_flat() {
        return vec![0.0; dim];
    }
    let n = p.ncols();
    let g = metric_matrix(p);
    // G is symmetric positive definite.
    let g_inv = g.cholesky().expect("metric matrix is positive definite").inverse();
    let point: Vec<f64> = x.iter().chain(z).copied().collect();
    let tangent = |i: usize| -> Vec<f64> {
        let mut t = vec![0.0; n];
        t[i] = 1.0;
        t.extend(p.column(i).iter());
        t
    };
    let tangents: Vec<Vec<f64>> = (0..n).map(tangent).collect();
    let mut out = vec![0.0; dim];
    for i in 0..n {
        for j in 0..n {
            let a = ambient.second_fundamental_form(&point, &tangents[i], &tangents[j]);
            for (o, ak) in out.iter_mut().zip(a) {
                *o += g_inv[(i, j)] * ak;
            }
        }
    }
    out
}
