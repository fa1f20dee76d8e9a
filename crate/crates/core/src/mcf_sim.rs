//! Curvature flow of a network of `q` graph curves in `R^{1+m}` meeting at
//! one free junction.
//!
//! Sheet `k < s` is a graph over `[γ, X_R]`, the others over `[X_L, γ]`.
//! Every sheet is stored on the reference grid `s_i = i/N`, mapped to
//! `x = γ ± s (X - γ)` with `s = 0` at the junction, so the grid follows
//! the junction. The outer ends are pinned.
//!
//! A step solves the frozen-coefficient implicit scheme for the interior of
//! every sheet and Newton-iterates on the junction position `γ` and value
//! `P` until the multiplicity-weighted conormals balance.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hodograph::{GraphFunction, HodographError, LineSet};
use crate::interp::Hermite;
use crate::junction_config::{ConfigError, JunctionConfig, Side};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid network state: {0}")]
    InvalidState(String),
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("junction Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64, last: Box<NetworkState> },
    #[error("junction left the domain: gamma = {gamma}")]
    JunctionEscape { gamma: f64 },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Numerical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    /// Reference-grid step; each sheet has `round(1/h)` cells.
    pub h: f64,
    pub dt: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    /// Implicitness `θ_s ∈ [1/2, 1]`; 1 is backward Euler.
    pub scheme_weight: f64,
    /// Run stops once `max |u_t| < steady_tol`.
    pub steady_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            h: 1.0 / 128.0,
            dt: 1e-3,
            newton_tol: 1e-10,
            newton_max_iters: 30,
            scheme_weight: 1.0,
            steady_tol: 1e-9,
        }
    }
}

/// `dt <= DT_SAFETY * h²` is required for `θ_s < 1`.
pub const DT_SAFETY: f64 = 1.0;

impl SolverParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [self.h, self.dt, self.newton_tol, self.steady_tol];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) || self.newton_max_iters == 0 {
            return Err(SimError::InvalidParams("h, dt, tolerances and iteration count must be positive".into()));
        }
        if !(0.5..=1.0).contains(&self.scheme_weight) {
            return Err(SimError::InvalidParams(format!("scheme weight {} outside [1/2, 1]", self.scheme_weight)));
        }
        if self.scheme_weight < 1.0 && self.dt > DT_SAFETY * self.h * self.h {
            return Err(SimError::InvalidParams(format!("dt = {} exceeds h^2 = {} for a non-implicit scheme", self.dt, self.h * self.h)));
        }
        if self.cells() < 4 {
            return Err(SimError::InvalidParams("need h <= 1/4".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        (1.0 / self.h).round() as usize
    }
}

/// Network of graph curves sharing one junction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkState {
    pub t: f64,
    pub gamma: f64,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    pub x_left: f64,
    pub x_right: f64,
    /// `sheets[k][i][κ]` at reference node `s_i = i/N`; node 0 is the junction.
    pub sheets: Vec<Vec<Vec<f64>>>,
    /// Pinned value of each sheet at its outer end.
    pub pins: Vec<Vec<f64>>,
    #[serde(skip)]
    junction: JunctionConfig,
}

impl NetworkState {
    /// Builds a state from explicit node values; node 0 of every sheet must
    /// equal `p` and the last node the pin.
    pub fn new(
        gamma: f64,
        x_left: f64,
        x_right: f64,
        s: usize,
        theta: Vec<u32>,
        sheets: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, SimError> {
        if !(x_left < gamma && gamma < x_right) {
            return Err(SimError::InvalidState(format!("need X_L < gamma < X_R, got {x_left}, {gamma}, {x_right}")));
        }
        let q = theta.len();
        if sheets.len() != q {
            return Err(SimError::InvalidState("one sheet per multiplicity".into()));
        }
        let nodes = sheets[0].len();
        let m = sheets[0].first().map_or(0, Vec::len);
        if nodes < 5 || m == 0 {
            return Err(SimError::InvalidState("need at least 5 nodes and one component".into()));
        }
        if sheets.iter().any(|sh| sh.len() != nodes || sh.iter().any(|v| v.len() != m || v.iter().any(|x| !x.is_finite()))) {
            return Err(SimError::InvalidState("ragged or non-finite sheet data".into()));
        }
        let p = sheets[0][0].clone();
        for (k, sh) in sheets.iter().enumerate() {
            if sh[0].iter().zip(&p).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs())) {
                return Err(SimError::InvalidState(format!("sheet {k} does not start at the junction value")));
            }
        }
        let junction = JunctionConfig::new(1, m, s, theta, vec![vec![0.0; m]; q])?;
        let pins = sheets.iter().map(|sh| sh[nodes - 1].clone()).collect();
        let mut state = NetworkState { t: 0.0, gamma, p, x_left, x_right, sheets, pins, junction };
        let slopes = (0..q).map(|k| state.junction_slope(k)).collect();
        state.junction = state.junction.with_slopes(slopes)?;
        Ok(state)
    }

    /// Straight segments from `(γ, P)` to the pins plus a perturbation
    /// `bump(k, s)` vanishing at `s = 0, 1`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_segments<F>(
        gamma: f64,
        p: Vec<f64>,
        x_left: f64,
        x_right: f64,
        s: usize,
        theta: Vec<u32>,
        pins: Vec<Vec<f64>>,
        cells: usize,
        bump: F,
    ) -> Result<Self, SimError>
    where
        F: Fn(usize, f64) -> Vec<f64>,
    {
        let sheets = pins
            .iter()
            .enumerate()
            .map(|(k, pin)| {
                (0..=cells)
                    .map(|i| {
                        let si = i as f64 / cells as f64;
                        let b = bump(k, si);
                        p.iter().zip(pin).zip(&b).map(|((a, z), e)| a + (z - a) * si + e).collect()
                    })
                    .collect()
            })
            .collect();
        NetworkState::new(gamma, x_left, x_right, s, theta, sheets)
    }

    pub fn q(&self) -> usize {
        self.sheets.len()
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn cells(&self) -> usize {
        self.sheets[0].len() - 1
    }

    pub fn s(&self) -> usize {
        self.junction.s()
    }

    pub fn theta(&self) -> &[u32] {
        self.junction.theta()
    }

    pub fn side(&self, k: usize) -> Side {
        self.junction.side(k)
    }

    /// Signed length `x(s=1) - γ` of the domain of sheet `k`.
    pub fn span(&self, k: usize) -> f64 {
        match self.side(k) {
            Side::Plus => self.x_right - self.gamma,
            Side::Minus => self.x_left - self.gamma,
        }
    }

    pub fn x(&self, k: usize, i: usize) -> f64 {
        self.gamma + self.span(k) * i as f64 / self.cells() as f64
    }

    /// `D_x u_k` at the junction by a one-sided second-order stencil.
    pub fn junction_slope(&self, k: usize) -> Vec<f64> {
        one_sided_slope(&self.sheets[k], self.span(k), self.cells())
    }

    /// Sheet `k` as a single-line [`GraphFunction`].
    pub fn sheet_graph(&self, k: usize) -> Result<GraphFunction, HodographError> {
        let h = self.span(k).abs() / self.cells() as f64;
        GraphFunction::new(self.side(k), LineSet::single(), h, vec![self.gamma], vec![self.sheets[k].clone()])
    }

    /// Largest `|u_k(γ) - P|`.
    pub fn coincidence_error(&self) -> f64 {
        self.sheets
            .iter()
            .flat_map(|sh| sh[0].iter().zip(&self.p).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

fn one_sided_slope(sheet: &[Vec<f64>], span: f64, cells: usize) -> Vec<f64> {
    let ds = 1.0 / cells as f64;
    (0..sheet[0].len())
        .map(|c| (-3.0 * sheet[0][c] + 4.0 * sheet[1][c] - sheet[2][c]) / (2.0 * ds * span))
        .collect()
}

/// Balance of the junction: the curved-boundary balance system evaluated
/// with one-sided derivative estimates (`m + 1` components).
pub fn junction_conditions(state: &NetworkState) -> Vec<f64> {
    let d: Vec<Vec<f64>> = (0..state.q()).map(|k| state.junction_slope(k)).collect();
    state.junction.boundary_balance_residual(&[], &d).expect("shapes fixed at construction")
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `Σ θ_k` times the polyline length of sheet `k`.
pub fn total_area(state: &NetworkState) -> f64 {
    (0..state.q())
        .map(|k| {
            let sh = &state.sheets[k];
            let dx = state.span(k).abs() / state.cells() as f64;
            let len: f64 = sh
                .windows(2)
                .map(|w| (dx * dx + w[0].iter().zip(&w[1]).map(|(a, b)| (b - a).powi(2)).sum::<f64>()).sqrt())
                .sum();
            state.theta()[k] as f64 * len
        })
        .sum()
}

/// Solves `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i`.
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut beta = b[0];
    d[0] /= beta;
    for i in 1..n {
        cp[i - 1] = c[i - 1] / beta;
        beta = b[i] - a[i] * cp[i - 1];
        d[i] = (d[i] - a[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// `1 / (1 + |u_x|²)` at every node of one sheet.
fn frozen_coefficient(sheet: &[Vec<f64>], span: f64) -> Vec<f64> {
    let cells = sheet.len() - 1;
    let ds = 1.0 / cells as f64;
    let m = sheet[0].len();
    (0..=cells)
        .map(|i| {
            let g2: f64 = (0..m)
                .map(|c| {
                    let d = if i == 0 {
                        -3.0 * sheet[0][c] + 4.0 * sheet[1][c] - sheet[2][c]
                    } else if i == cells {
                        3.0 * sheet[i][c] - 4.0 * sheet[i - 1][c] + sheet[i - 2][c]
                    } else {
                        sheet[i + 1][c] - sheet[i - 1][c]
                    };
                    (d / (2.0 * ds * span)).powi(2)
                })
                .sum();
            1.0 / (1.0 + g2)
        })
        .collect()
}

/// Interior update of every sheet for a trial junction `(γ', P')`.
fn advance_sheets(state: &NetworkState, params: &SolverParams, gamma_new: f64, p_new: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let cells = state.cells();
    let ds = 1.0 / cells as f64;
    let dt = params.dt;
    let th = params.scheme_weight;
    let gamma_dot = (gamma_new - state.gamma) / dt;
    (0..state.q())
        .into_par_iter()
        .map(|k| {
            let old = &state.sheets[k];
            let span_old = state.span(k);
            let span_new = match state.side(k) {
                Side::Plus => state.x_right - gamma_new,
                Side::Minus => state.x_left - gamma_new,
            };
            let coef = frozen_coefficient(old, span_old);
            let m = state.m();
            let mut out = vec![vec![0.0; m]; cells + 1];
            out[0] = p_new.to_vec();
            out[cells] = state.pins[k].clone();
            let n = cells - 1;
            let (mut a, mut b, mut c) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            for i in 1..cells {
                let si = i as f64 * ds;
                let diff = coef[i] / (ds * ds * span_new * span_new);
                let adv = gamma_dot * (1.0 - si) / (2.0 * ds * span_new);
                a[i - 1] = -dt * th * (diff - adv);
                b[i - 1] = 1.0 + 2.0 * dt * th * diff;
                c[i - 1] = -dt * th * (diff + adv);
            }
            for comp in 0..m {
                let mut rhs: Vec<f64> = (1..cells)
                    .map(|i| {
                        let u = |j: usize| old[j][comp];
                        let mut r = u(i);
                        if th < 1.0 {
                            let si = i as f64 * ds;
                            let diff = coef[i] / (ds * ds * span_old * span_old);
                            let adv = gamma_dot * (1.0 - si) / (2.0 * ds * span_old);
                            r += dt * (1.0 - th)
                                * (diff * (u(i + 1) - 2.0 * u(i) + u(i - 1)) + adv * (u(i + 1) - u(i - 1)));
                        }
                        r
                    })
                    .collect();
                rhs[0] -= a[0] * p_new[comp];
                rhs[n - 1] -= c[n - 1] * state.pins[k][comp];
                thomas(&a, &b, &c, &mut rhs);
                for (i, v) in rhs.into_iter().enumerate() {
                    out[i + 1][comp] = v;
                }
            }
            out
        })
        .collect()
}

fn trial_state(state: &NetworkState, params: &SolverParams, z: &[f64]) -> NetworkState {
    let sheets = advance_sheets(state, params, z[0], &z[1..]);
    NetworkState {
        t: state.t + params.dt,
        gamma: z[0],
        p: z[1..].to_vec(),
        x_left: state.x_left,
        x_right: state.x_right,
        sheets,
        pins: state.pins.clone(),
        junction: state.junction.clone(),
    }
}

/// One time step.
pub fn step(state: &NetworkState, params: &SolverParams) -> Result<NetworkState, SimError> {
    params.validate()?;
    if params.cells() != state.cells() {
        return Err(SimError::InvalidParams(format!(
            "grid has {} cells but h gives {}",
            state.cells(),
            params.cells()
        )));
    }
    let dim = state.m() + 1;
    let inside = |g: f64| state.x_left < g && g < state.x_right;
    let eval = |z: &[f64]| -> (NetworkState, Vec<f64>) {
        let s = trial_state(state, params, z);
        let r = junction_conditions(&s);
        (s, r)
    };
    let mut z: Vec<f64> = std::iter::once(state.gamma).chain(state.p.iter().copied()).collect();
    let (mut current, mut r) = eval(&z);
    let mut rn = norm(&r);
    for _ in 0..params.newton_max_iters {
        if rn <= params.newton_tol {
            break;
        }
        let mut jac = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let e = 1e-7 * (1.0 + z[j].abs());
            let mut zp = z.clone();
            zp[j] += e;
            if !inside(zp[0]) {
                zp[j] -= 2.0 * e;
            }
            let (_, rp) = eval(&zp);
            let sign = if zp[j] > z[j] { 1.0 } else { -1.0 };
            for i in 0..dim {
                jac[(i, j)] = sign * (rp[i] - r[i]) / e;
            }
        }
        let delta = match jac.lu().solve(&DVector::from_iterator(dim, r.iter().map(|x| -x))) {
            Some(d) => d,
            None => break,
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let zt: Vec<f64> = z.iter().zip(delta.iter()).map(|(a, d)| a + lambda * d).collect();
            if inside(zt[0]) {
                let (st, rt) = eval(&zt);
                let nt = norm(&rt);
                if nt < rn {
                    z = zt;
                    current = st;
                    r = rt;
                    rn = nt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            let zt = z[0] + delta[0];
            if !inside(zt) {
                return Err(SimError::JunctionEscape { gamma: zt });
            }
            break;
        }
    }
    if rn > params.newton_tol {
        return Err(SimError::NewtonDiverged {
            iterations: params.newton_max_iters,
            residual: rn,
            last: Box::new(current),
        });
    }
    Ok(current)
}

/// `D_t u - u_xx/(1+|u_x|²)` at the interior nodes of sheet `k` of `next`,
/// with `D_t` at fixed `x` from the grid-following difference
/// `(U' - U)/dt - u_x γ̇ (1 - s)`.
pub fn mcf_residual(prev: &NetworkState, next: &NetworkState, k: usize) -> Vec<Vec<f64>> {
    let dt = next.t - prev.t;
    let gamma_dot = (next.gamma - prev.gamma) / dt;
    let cells = next.cells();
    let ds = 1.0 / cells as f64;
    let span = next.span(k);
    let (u, v) = (&next.sheets[k], &prev.sheets[k]);
    (1..cells)
        .map(|i| {
            let si = i as f64 * ds;
            let ux: Vec<f64> = (0..next.m()).map(|c| (u[i + 1][c] - u[i - 1][c]) / (2.0 * ds * span)).collect();
            let a = 1.0 / (1.0 + ux.iter().map(|x| x * x).sum::<f64>());
            (0..next.m())
                .map(|c| {
                    let uxx = (u[i + 1][c] - 2.0 * u[i][c] + u[i - 1][c]) / (ds * ds * span * span);
                    let ut = (u[i][c] - v[i][c]) / dt - ux[c] * gamma_dot * (1.0 - si);
                    ut - a * uxx
                })
                .collect()
        })
        .collect()
}

/// Same residual with an exact time derivative `u_t(x)` supplied.
pub fn mcf_residual_exact<F>(state: &NetworkState, k: usize, u_t: F) -> Vec<Vec<f64>>
where
    F: Fn(f64) -> Vec<f64>,
{
    let cells = state.cells();
    let ds = 1.0 / cells as f64;
    let span = state.span(k);
    let u = &state.sheets[k];
    (1..cells)
        .map(|i| {
            let ux: Vec<f64> = (0..state.m()).map(|c| (u[i + 1][c] - u[i - 1][c]) / (2.0 * ds * span)).collect();
            let a = 1.0 / (1.0 + ux.iter().map(|x| x * x).sum::<f64>());
            let exact = u_t(state.x(k, i));
            (0..state.m())
                .map(|c| exact[c] - a * (u[i + 1][c] - 2.0 * u[i][c] + u[i - 1][c]) / (ds * ds * span * span))
                .collect()
        })
        .collect()
}

/// Divergence-form minimal-graph operator `D_x(u_x / sqrt(1+|u_x|²))` at
/// the interior nodes of a uniformly sampled curve, from midpoint fluxes.
pub fn minimal_residual_line(values: &[Vec<f64>], dx: f64) -> Vec<Vec<f64>> {
    let m = values[0].len();
    let flux: Vec<Vec<f64>> = values
        .windows(2)
        .map(|w| {
            let d: Vec<f64> = (0..m).map(|c| (w[1][c] - w[0][c]) / dx).collect();
            let root = (1.0 + d.iter().map(|x| x * x).sum::<f64>()).sqrt();
            d.into_iter().map(|x| x / root).collect()
        })
        .collect();
    flux.windows(2).map(|f| (0..m).map(|c| (f[1][c] - f[0][c]) / dx).collect()).collect()
}

/// [`minimal_residual_line`] for every sheet of a network.
pub fn minimal_residual(state: &NetworkState) -> Vec<Vec<Vec<f64>>> {
    (0..state.q())
        .map(|k| {
            let dx = state.span(k) / state.cells() as f64;
            minimal_residual_line(&state.sheets[k], dx)
        })
        .collect()
}

/// Largest entry of [`minimal_residual`].
pub fn max_minimal_residual(state: &NetworkState) -> f64 {
    minimal_residual(state).iter().flatten().flatten().fold(0.0, |a, x| a.max(x.abs()))
}

/// Smooth bump `φ(X) = exp(1 - 1/(1 - |X-c|²/r²))` inside the ball, zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpTest {
    /// Center in `(x, z^1, ..., z^m)`.
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BumpTest {
    pub fn around_origin(m: usize, radius: f64) -> Self {
        BumpTest { center: vec![0.0; m + 1], radius }
    }

    /// Value and gradient at `point`.
    pub fn eval(&self, point: &[f64]) -> (f64, Vec<f64>) {
        let d: Vec<f64> = point.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let r2 = d.iter().map(|x| x * x).sum::<f64>() / (self.radius * self.radius);
        if r2 >= 1.0 {
            return (0.0, vec![0.0; point.len()]);
        }
        let v = (1.0 - 1.0 / (1.0 - r2)).exp();
        let dv_dr2 = -v / (1.0 - r2).powi(2);
        let scale = 2.0 * dv_dr2 / (self.radius * self.radius);
        (v, d.into_iter().map(|x| x * scale).collect())
    }
}

/// Integrals `(∫ φ ds, ∫ (∇φ·H - φ|H|²) ds)` over sheet `k`, with the
/// trapezoid rule in `x` and second-order differences.
fn sheet_integrals(state: &NetworkState, k: usize, phi: &BumpTest) -> (f64, f64) {
    let cells = state.cells();
    let ds = 1.0 / cells as f64;
    let span = state.span(k);
    let dx = span.abs() * ds;
    let u = &state.sheets[k];
    let m = state.m();
    let mut mass = 0.0;
    let mut flow = 0.0;
    for i in 0..=cells {
        let (d1, d2): (Vec<f64>, Vec<f64>) = (0..m)
            .map(|c| {
                let f = |j: usize| u[j][c];
                if i == 0 {
                    ((-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * ds), (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / (ds * ds))
                } else if i == cells {
                    let n = cells;
                    (
                        (3.0 * f(n) - 4.0 * f(n - 1) + f(n - 2)) / (2.0 * ds),
                        (2.0 * f(n) - 5.0 * f(n - 1) + 4.0 * f(n - 2) - f(n - 3)) / (ds * ds),
                    )
                } else {
                    ((f(i + 1) - f(i - 1)) / (2.0 * ds), (f(i + 1) - 2.0 * f(i) + f(i - 1)) / (ds * ds))
                }
            })
            .unzip();
        let ux: Vec<f64> = d1.iter().map(|x| x / span).collect();
        let uxx: Vec<f64> = d2.iter().map(|x| x / (span * span)).collect();
        let g = 1.0 + ux.iter().map(|x| x * x).sum::<f64>();
        // curvature vector of x -> (x, u(x)): (c'' - (c''·T)T)/|c'|² with c'' = (0, u'')
        let proj: f64 = ux.iter().zip(&uxx).map(|(a, b)| a * b).sum::<f64>() / g;
        let mut curv = Vec::with_capacity(m + 1);
        curv.push(-proj / g);
        curv.extend(ux.iter().zip(&uxx).map(|(a, b)| (b - proj * a) / g));
        let point: Vec<f64> = std::iter::once(state.x(k, i)).chain(u[i].iter().copied()).collect();
        let (v, grad) = phi.eval(&point);
        let h2: f64 = curv.iter().map(|x| x * x).sum();
        let gh: f64 = grad.iter().zip(&curv).map(|(a, b)| a * b).sum();
        let w = if i == 0 || i == cells { 0.5 } else { 1.0 } * dx * g.sqrt();
        mass += w * v;
        flow += w * (gh - v * h2);
    }
    (mass, flow)
}

fn weighted_integrals(state: &NetworkState, phi: &BumpTest) -> (f64, f64) {
    (0..state.q()).fold((0.0, 0.0), |(a, b), k| {
        let (x, y) = sheet_integrals(state, k, phi);
        let th = state.theta()[k] as f64;
        (a + th * x, b + th * y)
    })
}

/// `(I(next) - I(prev))/dt - Σθ_k ∫(∇φ·H - φ|H|²) ds` at `next`, where
/// `I = Σθ_k ∫ φ ds` and `φ` is time-independent.
pub fn brakke_identity_residual(prev: &NetworkState, next: &NetworkState, phi: &BumpTest) -> f64 {
    let dt = next.t - prev.t;
    let (i0, _) = weighted_integrals(prev, phi);
    let (i1, flow) = weighted_integrals(next, phi);
    (i1 - i0) / dt - flow
}

/// Per-step record of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub total_area: f64,
    pub balance_norm: f64,
    pub brakke_residual: f64,
    pub max_mcf_residual: f64,
    pub coincidence_error: f64,
    pub gamma: f64,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
}

fn diagnostics(prev: Option<&NetworkState>, next: &NetworkState, phi: &BumpTest) -> Diagnostics {
    let (brakke, mcf) = match prev {
        Some(prev) => (
            brakke_identity_residual(prev, next, phi),
            (0..next.q()).flat_map(|k| mcf_residual(prev, next, k)).flatten().fold(0.0, |a: f64, x| a.max(x.abs())),
        ),
        None => (0.0, 0.0),
    };
    Diagnostics {
        t: next.t,
        total_area: total_area(next),
        balance_norm: norm(&junction_conditions(next)),
        brakke_residual: brakke,
        max_mcf_residual: mcf,
        coincidence_error: next.coincidence_error(),
        gamma: next.gamma,
        p: next.p.clone(),
    }
}

/// Output of [`run`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    /// Initial record followed by one record per `record_every` steps (and the last step).
    pub diagnostics: Vec<Diagnostics>,
    pub final_state: NetworkState,
    pub steps: usize,
    /// Stopped because `max |u_t| < steady_tol`.
    pub steady: bool,
    /// Largest increase of `total_area` over any step.
    pub max_area_increase: f64,
    /// Largest balance residual after any step.
    pub max_balance_norm: f64,
    pub max_coincidence_error: f64,
}

/// Largest `|u_t|` between two states, including the junction motion.
pub fn max_rate(prev: &NetworkState, next: &NetworkState) -> f64 {
    let dt = next.t - prev.t;
    let sheets = (0..next.q())
        .flat_map(|k| mcf_rate(prev, next, k))
        .fold(0.0, f64::max);
    sheets.max(((next.gamma - prev.gamma) / dt).abs())
}

fn mcf_rate(prev: &NetworkState, next: &NetworkState, k: usize) -> Vec<f64> {
    let dt = next.t - prev.t;
    next.sheets[k]
        .iter()
        .zip(&prev.sheets[k])
        .flat_map(|(a, b)| a.iter().zip(b).map(move |(x, y)| ((x - y) / dt).abs()))
        .collect()
}

/// Steps until time `t_end` or a steady state; `record_every = 0` records
/// only the first and last states.
pub fn run(
    initial: &NetworkState,
    params: &SolverParams,
    t_end: f64,
    record_every: usize,
    phi: &BumpTest,
) -> Result<RunOutput, SimError> {
    params.validate()?;
    let total = ((t_end - initial.t) / params.dt).round().max(0.0) as usize;
    let mut state = initial.clone();
    let mut diags = vec![diagnostics(None, &state, phi)];
    let mut max_area_increase = f64::NEG_INFINITY;
    let mut max_balance: f64 = 0.0;
    let mut max_coincidence: f64 = 0.0;
    let mut steady = false;
    let mut steps = 0;
    for n in 1..=total {
        let next = step(&state, params)?;
        steps = n;
        let d = diagnostics(Some(&state), &next, phi);
        max_area_increase = max_area_increase.max(d.total_area - total_area(&state));
        max_balance = max_balance.max(d.balance_norm);
        max_coincidence = max_coincidence.max(d.coincidence_error);
        steady = max_rate(&state, &next) < params.steady_tol;
        let last = n == total || steady;
        if last || (record_every > 0 && n % record_every == 0) {
            diags.push(d);
        }
        state = next;
        if steady {
            break;
        }
    }
    Ok(RunOutput {
        diagnostics: diags,
        final_state: state,
        steps,
        steady,
        max_area_increase,
        max_balance_norm: max_balance,
        max_coincidence_error: max_coincidence,
    })
}

/// Runs until steady (or `t_max`) and returns the final state.
pub fn steady_solve(initial: &NetworkState, params: &SolverParams, t_max: f64) -> Result<(NetworkState, bool), SimError> {
    let out = run(initial, params, t_max, 0, &BumpTest::around_origin(initial.m(), 0.4))?;
    Ok((out.final_state, out.steady))
}

/// Equilateral pins `(-1, 0)`, `(1/2, ±√3/2)` joined straight to the origin.
pub fn y_network(cells: usize) -> NetworkState {
    perturbed_y(cells, 0.0, 0.0, 0.0)
}

/// The Y network with junction moved to `(γ, P)` and sine bumps of size
/// `amplitude` on every sheet.
pub fn perturbed_y(cells: usize, gamma: f64, p: f64, amplitude: f64) -> NetworkState {
    let r3 = 3f64.sqrt() / 2.0;
    NetworkState::from_segments(
        gamma,
        vec![p],
        -1.0,
        0.5,
        2,
        vec![1, 1, 1],
        vec![vec![r3], vec![-r3], vec![0.0]],
        cells,
        |k, s| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            vec![sign * amplitude * (std::f64::consts::PI * s).sin() * (1.0 + 0.5 * k as f64)]
        },
    )
    .expect("Y network data are valid")
}

/// Resamples sheet values on node positions of `target` from `source`
/// (same sides), with cubic Hermite interpolation in `x`.
pub fn resample_like(source: &NetworkState, target_cells: usize) -> Result<NetworkState, SimError> {
    let sheets = (0..source.q())
        .map(|k| {
            let g = source.sheet_graph(k).map_err(|e| SimError::InvalidState(e.to_string()))?;
            let span = source.span(k);
            let comps: Vec<Hermite> = (0..source.m())
                .map(|c| {
                    let mut vals: Vec<f64> = g.values()[0].iter().map(|v| v[c]).collect();
                    let mut x0 = source.gamma;
                    if span < 0.0 {
                        vals.reverse();
                        x0 = source.gamma + span;
                    }
                    Hermite::new(x0, span.abs() / source.cells() as f64, vals)
                })
                .collect();
            Ok((0..=target_cells)
                .map(|i| {
                    let x = source.gamma + span * i as f64 / target_cells as f64;
                    comps.iter().map(|p| p.eval(x)).collect()
                })
                .collect())
        })
        .collect::<Result<Vec<Vec<Vec<f64>>>, SimError>>()?;
    let mut out = NetworkState::new(source.gamma, source.x_left, source.x_right, source.s(), source.theta().to_vec(), sheets)?;
    out.t = source.t;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(cells: usize, dt: f64) -> SolverParams {
        SolverParams { h: 1.0 / cells as f64, dt, ..SolverParams::default() }
    }

    #[test]
    fn y_is_balanced_and_fixed() {
        let y = y_network(32);
        assert!(norm(&junction_conditions(&y)) < 1e-13);
        let next = step(&y, &params(32, 1e-3)).unwrap();
        assert!((next.gamma - y.gamma).abs() < 1e-12);
        for (a, b) in next.sheets.iter().flatten().flatten().zip(y.sheets.iter().flatten().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pairwise_cancelling_junction() {
        let st = NetworkState::from_segments(
            0.0,
            vec![0.0],
            -1.0,
            1.0,
            2,
            vec![1, 1, 1, 1],
            vec![vec![0.5], vec![-0.5], vec![-0.5], vec![0.5]],
            16,
            |_, _| vec![0.0],
        )
        .unwrap();
        assert!(norm(&junction_conditions(&st)) < 1e-14);
    }

    #[test]
    fn junction_conditions_match_config() {
        let st = perturbed_y(64, 0.05, 0.1, 0.1);
        let d: Vec<Vec<f64>> = (0..3).map(|k| st.junction_slope(k)).collect();
        let cfg = JunctionConfig::new(1, 1, 2, vec![1, 1, 1], d.clone()).unwrap();
        let bal = cfg.balance_residual();
        let jc = junction_conditions(&st);
        for (a, b) in jc.iter().zip(&bal.residual) {
            assert!((a + b).abs() < 1e-14);
        }
    }

    #[test]
    fn perturbed_y_step_balances_and_shrinks() {
        let st = perturbed_y(64, 0.05, 0.1, 0.1);
        let p = params(64, 1e-3);
        let next = step(&st, &p).unwrap();
        assert!(norm(&junction_conditions(&next)) <= p.newton_tol);
        assert!(next.coincidence_error() == 0.0);
        let after = step(&next, &p).unwrap();
        assert!(total_area(&after) < total_area(&next));
    }

    #[test]
    fn straight_line_residuals_vanish() {
        let line = vec![vec![0.0, 1.0], vec![0.5, 1.5], vec![1.0, 2.0], vec![1.5, 2.5]];
        for r in minimal_residual_line(&line, 0.25).into_iter().flatten() {
            assert!(r.abs() < 1e-14);
        }
        let y = y_network(16);
        let again = step(&y, &params(16, 1e-3)).unwrap();
        assert!((0..3).flat_map(|k| mcf_residual(&y, &again, k)).flatten().all(|r| r.abs() < 1e-9));
    }

    #[test]
    fn circle_arc_residual() {
        for n in [40usize, 80] {
            let dx = 1.0 / n as f64;
            let vals: Vec<Vec<f64>> = (0..=n).map(|i| {
                let x = -0.5 + i as f64 * dx;
                vec![(1.0 - x * x).sqrt()]
            }).collect();
            let res = minimal_residual_line(&vals, dx);
            let err = res.iter().map(|r| (r[0] + 1.0).abs()).fold(0.0, f64::max);
            assert!(err < 2.0 * dx * dx, "n = {n}: {err}");
        }
        let dx = 0.01;
        let cat: Vec<Vec<f64>> = (0..=50).map(|i| vec![(i as f64 * dx).cosh()]).collect();
        assert!(minimal_residual_line(&cat, dx).iter().all(|r| r[0] > 0.0));
    }

    #[test]
    fn junction_moves_down_the_length_gradient() {
        let st = NetworkState::from_segments(
            0.0,
            vec![0.0],
            -1.0,
            1.0,
            2,
            vec![1, 1, 1],
            vec![vec![0.0], vec![3.0], vec![0.0]],
            64,
            |_, _| vec![0.0],
        )
        .unwrap();
        let descent = junction_conditions(&st);
        let next = step(&st, &params(64, 1e-3)).unwrap();
        let velocity = [next.gamma - st.gamma, next.p[0] - st.p[0]];
        assert!(velocity[0] * descent[0] + velocity[1] * descent[1] > 0.0);
        assert!(total_area(&next) < total_area(&st));
    }

    #[test]
    fn grim_reaper_truncation_order() {
        let errs: Vec<f64> = [64usize, 128]
            .iter()
            .map(|&cells| {
                let st = NetworkState::from_segments(
                    0.0,
                    vec![0.0],
                    -1.0,
                    1.0,
                    2,
                    vec![1, 1, 1],
                    vec![vec![-(1f64.cos()).ln()]; 3],
                    cells,
                    |k, s| {
                        let x = if k < 2 { s } else { -s };
                        vec![-x.cos().ln() - s * (-(1f64.cos()).ln())]
                    },
                )
                .unwrap();
                (0..3)
                    .flat_map(|k| mcf_residual_exact(&st, k, |_| vec![1.0]))
                    .flatten()
                    .fold(0.0, |a: f64, r| a.max(r.abs()))
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.9, "{errs:?}");
    }

    #[test]
    fn params_validation() {
        let mut p = SolverParams { scheme_weight: 0.5, ..SolverParams::default() };
        assert!(p.validate().is_err());
        p.dt = 1e-5;
        assert!(p.validate().is_ok());
        p.scheme_weight = 0.3;
        assert!(p.validate().is_err());
    }

    #[test]
    fn bump_gradient() {
        let b = BumpTest { center: vec![0.1, -0.2], radius: 0.5 };
        let x = [0.2, 0.05];
        let (_, g) = b.eval(&x);
        let e = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            xp[i] += e;
            let mut xm = x;
            xm[i] -= e;
            let fd = (b.eval(&xp).0 - b.eval(&xm).0) / (2.0 * e);
            assert!((fd - g[i]).abs() < 1e-8);
        }
        assert_eq!(b.eval(&[1.0, 1.0]).0, 0.0);
    }
}
