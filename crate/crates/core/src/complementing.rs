//! Linearized junction systems and the complementing (Lopatinskii-Shapiro)
//! condition.
//!
//! At a normalized configuration the principal part of the transformed
//! system is diagonal, so each perturbation `ū_k` decays like
//! `exp(iξ'·y' - λ_k y_n)`. The boundary system in the amplitudes
//! `c_k^κ` is checked two ways: through the closed-form determinant `D` of
//! the reduced `(c_1^1, c_2^1, c_1^2)` system, and numerically through the
//! singular values of the full `qm x qm` complex boundary matrix.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;
use thiserror::Error;

use crate::junction_config::{dot, ConfigError, JunctionConfig, Normalization, DEGENERACY_GUARD};

pub type C64 = Complex<f64>;

/// Relative singular-value threshold deciding `kernel_dim`.
pub const KERNEL_TOL: f64 = 1e-8;
/// `|D| <= D_ZERO_TOL * scale` counts as a vanishing determinant.
pub const D_ZERO_TOL: f64 = 1e-12;
/// Tolerance for `ρ + |ξ'|²` touching the branch cut.
pub const BRANCH_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComplementingError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("shear constant C = {c} must satisfy C * gap > 1 (gap = {gap})")]
    InvalidShear { c: f64, gap: f64 },
    #[error("rho + |xi'|^2 = {re} + {im}i lies on the branch cut")]
    BranchFailure { re: f64, im: f64 },
    #[error("inadmissible sample: {0}")]
    InvalidSample(String),
    #[error("no samples given")]
    EmptySamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Elliptic,
    Parabolic,
}

/// Linearization at a normalized configuration.
#[derive(Debug, Clone)]
pub struct LinearizedSystem {
    config: JunctionConfig,
    normalization: Normalization,
    c: f64,
    gap: f64,
    mode: Mode,
}

/// Default shear constant `2 / gap`, giving `C * gap - 1 = 1`.
pub fn default_shear(gap: f64) -> f64 {
    2.0 / gap
}

/// Normalizes `config` and sets up the linearized system with shear `c`
/// (`None` for [`default_shear`]).
pub fn build_linearization(
    config: &JunctionConfig,
    c: Option<f64>,
    mode: Mode,
) -> Result<LinearizedSystem, ComplementingError> {
    if !config.not_all_tangent() {
        return Err(ComplementingError::Degenerate("all sheets share one tangent plane".into()));
    }
    let normalization = config.normalize()?;
    let cfg = normalization.config.clone();
    let gap = cfg.slope(0)[0] - cfg.slope(1)[0];
    if gap < DEGENERACY_GUARD {
        return Err(ComplementingError::Config(ConfigError::Degenerate { separation: gap }));
    }
    let c = c.unwrap_or_else(|| default_shear(gap));
    if !(c * gap > 1.0) || !c.is_finite() {
        return Err(ComplementingError::InvalidShear { c, gap });
    }
    Ok(LinearizedSystem { config: cfg, normalization, c, gap, mode })
}

impl LinearizedSystem {
    pub fn config(&self) -> &JunctionConfig {
        &self.config
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn shear(&self) -> f64 {
        self.c
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        LinearizedSystem { mode, ..self.clone() }
    }

    fn theta_f(&self, k: usize) -> f64 {
        self.config.theta()[k] as f64
    }

    fn minus_factor(&self) -> f64 {
        self.c * self.gap - 1.0
    }

    /// Coefficient of `D_{y_n y_n}` in the `k`-th diagonal equation after
    /// dividing by the `|ξ'|²` coefficient.
    pub fn second_order_coefficient(&self, k: usize) -> f64 {
        let a = self.config.slope(k);
        let base = self.gap * self.gap / (1.0 + dot(a, a));
        if k < self.config.s() {
            base
        } else {
            base / (1.0 - self.c * self.gap).powi(2)
        }
    }
}

/// Decay rates of the exponential solutions for one frequency sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentTable {
    /// `lambda[k][κ]`, independent of `κ`. Stored as `[re, im]` pairs.
    #[serde(serialize_with = "serialize_complex_table")]
    pub lambda: Vec<Vec<C64>>,
    pub frequency: Vec<f64>,
    #[serde(serialize_with = "serialize_complex_opt")]
    pub rho: Option<C64>,
}

fn serialize_complex_table<S: serde::Serializer>(t: &[Vec<C64>], s: S) -> Result<S::Ok, S::Error> {
    let v: Vec<Vec<[f64; 2]>> = t.iter().map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect();
    v.serialize(s)
}

fn serialize_complex_opt<S: serde::Serializer>(z: &Option<C64>, s: S) -> Result<S::Ok, S::Error> {
    z.map(|z| [z.re, z.im]).serialize(s)
}

/// One frequency sample: tangential frequency `ξ'` and, in parabolic mode,
/// the Laplace variable `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub xi: Vec<f64>,
    #[serde(serialize_with = "serialize_complex_opt")]
    pub rho: Option<C64>,
}

/// `sqrt(ρ + |ξ'|²)` on the principal branch, after the admissibility checks.
fn frequency_root(sys: &LinearizedSystem, xi: &[f64], rho: Option<C64>) -> Result<C64, ComplementingError> {
    let xi2 = dot(xi, xi);
    if xi.iter().any(|x| !x.is_finite()) {
        return Err(ComplementingError::InvalidSample("non-finite frequency".into()));
    }
    match (sys.mode, rho) {
        (Mode::Elliptic, _) => {
            if xi2 == 0.0 {
                return Err(ComplementingError::InvalidSample("xi' = 0 in elliptic mode".into()));
            }
            Ok(C64::new(xi2.sqrt(), 0.0))
        }
        (Mode::Parabolic, rho) => {
            let rho = rho.unwrap_or(C64::new(0.0, 0.0));
            if xi2 == 0.0 && rho.norm() == 0.0 {
                return Err(ComplementingError::InvalidSample("(rho, xi') = (0, 0)".into()));
            }
            let z = rho + xi2;
            let scale = 1.0 + rho.norm() + xi2;
            if z.im.abs() <= BRANCH_TOL * scale && z.re <= BRANCH_TOL * scale {
                return Err(ComplementingError::BranchFailure { re: z.re, im: z.im });
            }
            let delta1 = delta_bound(sys) / 2.0;
            if rho.re < -delta1 * xi2 {
                return Err(ComplementingError::InvalidSample(format!(
                    "Re rho = {} < -delta_1 |xi'|^2 = {}",
                    rho.re,
                    -delta1 * xi2
                )));
            }
            Ok(z.sqrt())
        }
    }
}

/// Decay exponents `λ_k = sqrt(1+|a_k|²) sqrt(ρ+|ξ'|²) / gap`, multiplied by
/// `C·gap - 1` on the minus side. `rho` is ignored in elliptic mode.
pub fn decay_exponents(
    sys: &LinearizedSystem,
    xi: &[f64],
    rho: Option<C64>,
) -> Result<ExponentTable, ComplementingError> {
    let root = frequency_root(sys, xi, rho)?;
    let cfg = &sys.config;
    let lambda = (0..cfg.q())
        .map(|k| {
            let a = cfg.slope(k);
            let mut l = root * ((1.0 + dot(a, a)).sqrt() / sys.gap);
            if k >= cfg.s() {
                l *= sys.minus_factor();
            }
            vec![l; cfg.m()]
        })
        .collect();
    let rho = match sys.mode {
        Mode::Elliptic => None,
        Mode::Parabolic => Some(rho.unwrap_or(C64::new(0.0, 0.0))),
    };
    Ok(ExponentTable { lambda, frequency: xi.to_vec(), rho })
}

/// Half of `min{1, coefficient_k}` over all sheets.
pub fn delta_bound(sys: &LinearizedSystem) -> f64 {
    (0..sys.config.q()).map(|k| sys.second_order_coefficient(k)).fold(1.0, f64::min) / 2.0
}

/// Roots `ρ = -|ξ'|² - coefficient_k ξ_n²` of the diagonal symbols, one per
/// `(k, κ)`.
pub fn diagonal_roots(sys: &LinearizedSystem, xi_tangential: &[f64], xi_n: f64) -> Vec<f64> {
    let xi2 = dot(xi_tangential, xi_tangential);
    (0..sys.config.q())
        .flat_map(|k| {
            let r = -xi2 - sys.second_order_coefficient(k) * xi_n * xi_n;
            std::iter::repeat_n(r, sys.config.m())
        })
        .collect()
}

/// Largest `Re ρ + 2 δ |ξ|²` over the diagonal roots; nonpositive when the
/// system is uniformly parabolic with constant `δ`.
pub fn parabolicity_margin(sys: &LinearizedSystem, xi_tangential: &[f64], xi_n: f64) -> f64 {
    let delta = delta_bound(sys);
    let xi2 = dot(xi_tangential, xi_tangential) + xi_n * xi_n;
    diagonal_roots(sys, xi_tangential, xi_n).into_iter().map(|r| r + 2.0 * delta * xi2).fold(f64::NEG_INFINITY, f64::max)
}

/// Reduced boundary matrix acting on `(c_1^1, c_2^1, ĉ_1)` with
/// `ĉ_1 = (c_1^2, ..., c_1^m)`. Row 0 is the `x_n` balance row, rows
/// `1..=m` the slope rows, all after eliminating the other amplitudes with
/// the coincidence relations and dropping the common decay factor.
pub fn reduced_matrix(sys: &LinearizedSystem) -> DMatrix<f64> {
    let cfg = &sys.config;
    let m = cfg.m();
    let g = sys.gap;
    let a1 = cfg.slope(0);
    let a2 = cfg.slope(1);
    let mut r = DMatrix::zeros(m + 1, m + 1);
    for k in 0..cfg.q() {
        let a = cfg.slope(k);
        let a_sq = dot(a, a);
        let theta = sys.theta_f(k);
        let tt = theta / (1.0 + a_sq);
        let hat = &a[1..];
        let hat_sq = dot(hat, hat);
        let (d1, d2) = (dot(a, a1), dot(a, a2));
        r[(0, 0)] += tt * (a_sq - d2) / g;
        r[(0, 1)] += tt * (d1 - a_sq) / g;
        r[(1, 0)] += tt * (a[0] - a2[0] - hat_sq * a2[0]) / g;
        r[(1, 1)] += tt * (a1[0] - a[0] + hat_sq * a1[0]) / g;
        for (j, &hj) in hat.iter().enumerate() {
            r[(0, 2 + j)] += tt * hj;
            r[(1, 2 + j)] -= tt * a[0] * hj;
            r[(2 + j, 0)] += tt * (1.0 + d2) * hj / g;
            r[(2 + j, 1)] -= tt * (1.0 + d1) * hj / g;
            for (l, &hl) in hat.iter().enumerate() {
                let delta = if j == l { 1.0 } else { 0.0 };
                r[(2 + j, 2 + l)] += theta * (delta - hj * hl / (1.0 + a_sq));
            }
        }
    }
    r
}

/// Determinant of the leading `3 x 3` block of [`reduced_matrix`]
/// (`2 x 2` when `m = 1`).
pub fn determinant_bruteforce(sys: &LinearizedSystem) -> f64 {
    let r = reduced_matrix(sys);
    let d = if sys.config.m() == 1 { 2 } else { 3 };
    r.view((0, 0), (d, d)).into_owned().determinant()
}

/// Cauchy-Schwarz defects, their weights and the magnitudes used to scale
/// the zero test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchySchwarzTerms {
    pub terms: [f64; 5],
    pub weights: [f64; 5],
    /// Size of the products whose difference forms each term.
    pub magnitudes: [f64; 5],
}

impl CauchySchwarzTerms {
    /// `Σ w_i T_i`, which equals `gap · D`.
    pub fn recombined(&self) -> f64 {
        self.terms.iter().zip(&self.weights).map(|(t, w)| t * w).sum()
    }

    pub fn scale(&self) -> f64 {
        self.magnitudes.iter().zip(&self.weights).map(|(t, w)| t * w).sum()
    }
}

/// The five defect terms for a configuration whose leading slopes lie on
/// the first slope axis (or whose slopes all coincide).
fn defects(cfg: &JunctionConfig) -> CauchySchwarzTerms {
    let m = cfg.m();
    let comp = |a: &[f64], i: usize| if i < a.len() { a[i] } else { 0.0 };
    let mut s = [0.0f64; 16];
    // s: [θ̃, θ̃a1, θ̃a1², θ̃a2, θ̃a2², θ̃a1a2, θ̃|ã|², θ̃|a|², θ̃(1+a1²+|ã|²), θ̃(1+a2²+|ã|²), θ̃(1+|a|²), ..]
    for (k, a) in cfg.slopes().iter().enumerate() {
        let tt = cfg.theta()[k] as f64 / (1.0 + dot(a, a));
        let (x, y) = (comp(a, 0), comp(a, 1));
        let tilde = if m > 2 { dot(&a[2..], &a[2..]) } else { 0.0 };
        s[0] += tt;
        s[1] += tt * x;
        s[2] += tt * x * x;
        s[3] += tt * y;
        s[4] += tt * y * y;
        s[5] += tt * x * y;
        s[6] += tt * tilde;
        s[7] += tt * dot(a, a);
        s[8] += tt * (1.0 + x * x + tilde);
        s[9] += tt * (1.0 + y * y + tilde);
        s[10] += tt * (1.0 + dot(a, a));
    }
    let terms = [
        s[0] * s[2] - s[1] * s[1],
        s[0] * s[4] - s[3] * s[3],
        s[2] * s[4] - s[5] * s[5],
        s[0] * s[2] * s[4] - s[1] * s[3] * s[5],
        s[6],
    ];
    let magnitudes = [
        s[0] * s[2] + s[1] * s[1],
        s[0] * s[4] + s[3] * s[3],
        s[2] * s[4] + s[5] * s[5],
        s[0] * s[2] * s[4] + (s[1] * s[3] * s[5]).abs(),
        s[6],
    ];
    let weights = if m == 1 { [1.0, 0.0, 0.0, 0.0, 0.0] } else { [s[8], s[9], s[7], 2.0, s[10] * s[10]] };
    CauchySchwarzTerms { terms, weights, magnitudes }
}

/// The five grouped Cauchy-Schwarz defects of the determinant.
pub fn cauchy_schwarz_terms(sys: &LinearizedSystem) -> CauchySchwarzTerms {
    defects(&sys.config)
}

/// Closed-form determinant `D = gap⁻¹ Σ w_i T_i`.
pub fn determinant_closed_form(sys: &LinearizedSystem) -> f64 {
    cauchy_schwarz_terms(sys).recombined() / sys.gap
}

/// Scale for the zero test on `D`.
pub fn determinant_scale(sys: &LinearizedSystem) -> f64 {
    cauchy_schwarz_terms(sys).scale() / sys.gap
}

/// Full complex boundary matrix in the amplitudes `c_k^κ` (column
/// `k * m + κ`), given the `x_n`-decay rates `mu[k]` of the perturbations
/// in the original coordinates and the leading gap (`None` when all slopes
/// coincide, in which case the interface shift drops out).
fn boundary_system(cfg: &JunctionConfig, gap: Option<f64>, mu: &[C64]) -> DMatrix<C64> {
    let (q, m) = (cfg.q(), cfg.m());
    let col = |k: usize, kappa: usize| k * m + kappa;
    let mut mat = DMatrix::<C64>::zeros(q * m, q * m);
    let mut row = 0;
    // shift coefficient of (c_2^1 - c_1^1) in the difference of sheets k and l, component κ
    let coincide = |mat: &mut DMatrix<C64>, row: usize, k: usize, l: usize, kappa: usize| {
        mat[(row, col(k, kappa))] += C64::new(1.0, 0.0);
        mat[(row, col(l, kappa))] -= C64::new(1.0, 0.0);
        if let Some(g) = gap {
            let shift = (cfg.slope(k)[kappa] - cfg.slope(l)[kappa]) / g;
            mat[(row, col(1, 0))] += C64::new(shift, 0.0);
            mat[(row, col(0, 0))] -= C64::new(shift, 0.0);
        }
    };
    for k in 2..q {
        coincide(&mut mat, row, k, 1, 0);
        row += 1;
    }
    for kappa in 1..m {
        for k in 1..q {
            coincide(&mut mat, row, k, 0, kappa);
            row += 1;
        }
    }
    // Linearized balance Σ ±θ_k (1, d_k)/sqrt(1+|d_k|²) with d̄_k = D_{x_n} ū_k = ∓ μ_k c_k.
    for k in 0..q {
        let a = cfg.slope(k);
        let w = 1.0 + dot(a, a);
        let theta = cfg.theta()[k] as f64;
        let sign = cfg.side(k).sign();
        let factor = -mu[k] * (sign * sign * theta / w.powf(1.5));
        for lam in 0..m {
            mat[(row, col(k, lam))] += factor * (-a[lam]);
            for kappa in 0..m {
                let delta = if kappa == lam { w } else { 0.0 };
                mat[(row + 1 + kappa, col(k, lam))] += factor * (delta - a[kappa] * a[lam]);
            }
        }
    }
    mat
}

/// Complex boundary matrix of the linearized system at one sample.
pub fn boundary_matrix(sys: &LinearizedSystem, table: &ExponentTable) -> DMatrix<C64> {
    let cfg = &sys.config;
    let g = sys.gap;
    // D_{x_n} = g D_{y_n} on the plus side and g/(1 - C g) D_{y_n} on the minus side.
    let mu: Vec<C64> = (0..cfg.q())
        .map(|k| {
            let scale = if k < cfg.s() { g } else { -g / (1.0 - sys.c * g) };
            table.lambda[k][0] * scale
        })
        .collect();
    boundary_system(cfg, Some(g), &mu)
}

fn singular_summary(mat: DMatrix<C64>) -> (usize, f64) {
    let sv = mat.singular_values();
    let max = sv.max();
    let min = sv.min();
    let kernel = sv.iter().filter(|&&s| s <= KERNEL_TOL * max).count();
    (kernel, if max > 0.0 { min / max } else { 0.0 })
}

/// Default frequency samples: `ξ' ∈ {e_1, e_1+e_2 (n >= 3)}` and, in
/// parabolic mode, `ρ ∈ {0, i, 1+i, -δ_1/2}`. For `n = 1` the tangential
/// frequency is a formal one-component vector.
pub fn default_samples(sys: &LinearizedSystem) -> Vec<Sample> {
    let dim = sys.config.n().saturating_sub(1).max(1);
    let mut xis = vec![unit(dim, 0)];
    if sys.config.n() >= 3 {
        let mut v = unit(dim, 0);
        v[1] = 1.0;
        xis.push(v);
    }
    match sys.mode {
        Mode::Elliptic => xis.into_iter().map(|xi| Sample { xi, rho: None }).collect(),
        Mode::Parabolic => {
            let delta1 = delta_bound(sys) / 2.0;
            let rhos = [C64::new(0.0, 0.0), C64::new(0.0, 1.0), C64::new(1.0, 1.0), C64::new(-delta1 / 2.0, 0.0)];
            xis.into_iter().flat_map(|xi| rhos.iter().map(move |&r| Sample { xi: xi.clone(), rho: Some(r) })).collect()
        }
    }
}

fn unit(dim: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = 1.0;
    v
}

/// Outcome of a complementing check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub mode: Mode,
    /// Complementing condition holds (trivial kernel at every sample).
    pub holds: bool,
    #[serde(rename = "D")]
    pub d: f64,
    pub d_scale: f64,
    pub d_nonzero: bool,
    /// Largest kernel dimension over the samples.
    pub kernel_dim: usize,
    /// Smallest relative singular value `σ_min/σ_max` over the samples.
    pub min_singular_value: f64,
    pub per_sample_min_singular_value: Vec<f64>,
    pub per_sample_kernel_dim: Vec<usize>,
    /// `δ` for parabolic mode.
    pub delta: Option<f64>,
    pub shear: Option<f64>,
    pub gap: f64,
    /// `kernel_dim == 0` exactly when `D != 0`.
    pub agrees_with_determinant: bool,
    /// Every sample produced the same kernel dimension.
    pub sample_independent: bool,
}

/// Evaluates the boundary matrix at every sample and compares with `D`.
pub fn check_complementing(sys: &LinearizedSystem, samples: &[Sample]) -> Result<Verdict, ComplementingError> {
    if samples.is_empty() {
        return Err(ComplementingError::EmptySamples);
    }
    let mut kernels = Vec::with_capacity(samples.len());
    let mut mins = Vec::with_capacity(samples.len());
    for s in samples {
        let table = decay_exponents(sys, &s.xi, s.rho)?;
        let (kernel, min) = singular_summary(boundary_matrix(sys, &table));
        kernels.push(kernel);
        mins.push(min);
    }
    let terms = cauchy_schwarz_terms(sys);
    let d = terms.recombined() / sys.gap;
    let d_scale = terms.scale() / sys.gap;
    Ok(assemble_verdict(sys.mode, d, d_scale, kernels, mins, sys.gap, Some(sys.c), Some(delta_bound(sys))))
}

#[allow(clippy::too_many_arguments)]
fn assemble_verdict(
    mode: Mode,
    d: f64,
    d_scale: f64,
    kernels: Vec<usize>,
    mins: Vec<f64>,
    gap: f64,
    shear: Option<f64>,
    delta: Option<f64>,
) -> Verdict {
    let kernel_dim = kernels.iter().copied().max().unwrap_or(0);
    let min_singular_value = mins.iter().copied().fold(f64::INFINITY, f64::min);
    let d_nonzero = d.abs() > D_ZERO_TOL * d_scale.max(f64::MIN_POSITIVE);
    let sample_independent = kernels.iter().all(|&k| k == kernels[0]);
    Verdict {
        mode,
        holds: kernel_dim == 0,
        d,
        d_scale,
        d_nonzero,
        kernel_dim,
        min_singular_value,
        per_sample_min_singular_value: mins,
        per_sample_kernel_dim: kernels,
        delta: if mode == Mode::Parabolic { delta } else { None },
        shear,
        gap,
        agrees_with_determinant: (kernel_dim == 0) == d_nonzero,
        sample_independent,
    }
}

/// Complementing check for an arbitrary configuration with default samples.
///
/// Configurations whose slopes all coincide cannot be normalized; for them
/// the interface shift drops out of the boundary system, the gap factor of
/// `D` is omitted and the reported `D` is the defect sum itself.
pub fn check_junction(config: &JunctionConfig, c: Option<f64>, mode: Mode) -> Result<Verdict, ComplementingError> {
    if config.not_all_tangent() {
        let sys = build_linearization(config, c, mode)?;
        let samples = default_samples(&sys);
        return check_complementing(&sys, &samples);
    }
    let aligned = align_common_slope(config)?;
    let terms = defects(&aligned);
    let a = aligned.slope(0);
    let root = (1.0 + dot(a, a)).sqrt();
    let roots: Vec<C64> = match mode {
        Mode::Elliptic => vec![C64::new(1.0, 0.0)],
        Mode::Parabolic => [C64::new(0.0, 0.0), C64::new(0.0, 1.0), C64::new(1.0, 1.0)]
            .iter()
            .map(|r| (r + 1.0).sqrt())
            .collect(),
    };
    let mut kernels = Vec::new();
    let mut mins = Vec::new();
    for z in roots {
        let mu = vec![z * root; config.q()];
        let (kernel, min) = singular_summary(boundary_system(&aligned, None, &mu));
        kernels.push(kernel);
        mins.push(min);
    }
    Ok(assemble_verdict(mode, terms.recombined(), terms.scale(), kernels, mins, 0.0, None, None))
}

/// Rotates the slope space so a common slope lies on the first axis.
fn align_common_slope(config: &JunctionConfig) -> Result<JunctionConfig, ComplementingError> {
    let a = config.slope(0);
    let r = dot(a, a).sqrt();
    let mut b = vec![0.0; config.m()];
    b[0] = r;
    Ok(config.with_slopes(vec![b; config.q()])?)
}
