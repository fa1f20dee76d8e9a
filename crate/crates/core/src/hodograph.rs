//! Partial hodograph transform of sampled multi-sheet graph data.
//!
//! Data are organised in *lines*: a single line for one space dimension,
//! lines indexed by a tangential coordinate `x_1` for two, or by time for
//! the parabolic transform (time is passed through unchanged). Along each
//! line, node `i` of a sheet sits at `x_n = γ + σ i h` with `σ = +1` on the
//! plus side and `-1` on the minus side, so node 0 is on the interface.
//!
//! The transform replaces `x_n` by `y_n = w(x) = u_1^1 - u_2^1`, with
//! inverse `x_n = ψ(y)`. Plus-side sheets become `φ_k(y) = u_k(ψ(y))`,
//! minus-side sheets `φ_k(y) = u_k(ψ(y) - C y_n)`.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::{fd_derivative, solve_monotone, Hermite, RootError};
use crate::junction_config::Side;

/// Relative tolerance for sheets to agree on the interface.
pub const INTERFACE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HodographError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("w is not strictly increasing on line {line} at node {node}")]
    NonMonotone { line: usize, node: usize },
    #[error("sheet {sheet} misses the interface value on line {line} by {error:e}")]
    InterfaceMismatch { line: usize, sheet: usize, error: f64 },
    #[error("target {value} on line {line} outside the transformed support [{lo}, {hi}]")]
    OutOfRange { line: usize, value: f64, lo: f64, hi: f64 },
    #[error("root solve failed on line {line}: {source}")]
    Root { line: usize, source: RootError },
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    /// One space dimension, no line coordinate.
    Single,
    /// Lines indexed by the tangential coordinate `x_1`.
    Tangential,
    /// Lines indexed by time.
    Time,
}

/// Uniformly spaced family of lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSet {
    pub kind: LineKind,
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl LineSet {
    pub fn single() -> Self {
        LineSet { kind: LineKind::Single, start: 0.0, step: 0.0, count: 1 }
    }

    pub fn tangential(start: f64, step: f64, count: usize) -> Self {
        LineSet { kind: LineKind::Tangential, start, step, count }
    }

    pub fn time(start: f64, step: f64, count: usize) -> Self {
        LineSet { kind: LineKind::Time, start, step, count }
    }

    pub fn coord(&self, l: usize) -> f64 {
        self.start + self.step * l as f64
    }

    fn validate(&self) -> Result<(), HodographError> {
        match self.kind {
            LineKind::Single if self.count != 1 => Err(HodographError::InvalidGrid("single line set must have one line".into())),
            LineKind::Tangential | LineKind::Time if self.count == 0 || !(self.step > 0.0) => {
                Err(HodographError::InvalidGrid("line spacing must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Samples of one sheet `u_k` over its side of the interface.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFunction {
    side: Side,
    lines: LineSet,
    h: f64,
    interface: Vec<f64>,
    /// `values[line][node][κ]`.
    values: Vec<Vec<Vec<f64>>>,
}

impl GraphFunction {
    pub fn new(
        side: Side,
        lines: LineSet,
        h: f64,
        interface: Vec<f64>,
        values: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, HodographError> {
        lines.validate()?;
        if !(h > 0.0) {
            return Err(HodographError::InvalidGrid(format!("spacing h = {h} must be positive")));
        }
        if interface.len() != lines.count || values.len() != lines.count {
            return Err(HodographError::InvalidGrid("one interface value and one value row per line".into()));
        }
        let nodes = values[0].len();
        let m = values[0].first().map_or(0, Vec::len);
        if nodes < 3 || m == 0 {
            return Err(HodographError::InvalidGrid("need at least 3 nodes and one component".into()));
        }
        for line in &values {
            if line.len() != nodes || line.iter().any(|v| v.len() != m) {
                return Err(HodographError::InvalidGrid("ragged value array".into()));
            }
            if line.iter().flatten().any(|x| !x.is_finite()) {
                return Err(HodographError::InvalidGrid("values must be finite".into()));
            }
        }
        Ok(GraphFunction { side, lines, h, interface, values })
    }

    /// Samples `f(line_coord, x_n)` at `nodes` nodes per line.
    pub fn sample<F>(side: Side, lines: LineSet, h: f64, interface: Vec<f64>, nodes: usize, f: F) -> Result<Self, HodographError>
    where
        F: Fn(f64, f64) -> Vec<f64>,
    {
        let sigma = side.sign();
        let values = (0..lines.count)
            .map(|l| (0..nodes).map(|i| f(lines.coord(l), interface[l] + sigma * h * i as f64)).collect())
            .collect();
        GraphFunction::new(side, lines, h, interface, values)
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn lines(&self) -> LineSet {
        self.lines
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn interface(&self) -> &[f64] {
        &self.interface
    }

    pub fn values(&self) -> &[Vec<Vec<f64>>] {
        &self.values
    }

    pub fn nodes(&self) -> usize {
        self.values[0].len()
    }

    pub fn m(&self) -> usize {
        self.values[0][0].len()
    }

    pub fn x(&self, line: usize, node: usize) -> f64 {
        self.interface[line] + self.side.sign() * self.h * node as f64
    }

    /// Interpolants of each component along `line`, over ascending `x_n`.
    fn interpolants(&self, line: usize) -> Vec<Hermite> {
        (0..self.m()).map(|c| self.component_interp(line, |v| v[c])).collect()
    }

    fn component_interp(&self, line: usize, f: impl Fn(&[f64]) -> f64) -> Hermite {
        let mut vals: Vec<f64> = self.values[line].iter().map(|v| f(v)).collect();
        let x0 = match self.side {
            Side::Plus => self.interface[line],
            Side::Minus => {
                vals.reverse();
                self.interface[line] - self.h * (vals.len() - 1) as f64
            }
        };
        Hermite::new(x0, self.h, vals)
    }
}

/// Uniform grid `0, h, 2h, ...` with `nodes` points (in `y_n` for the
/// forward map, in `|x_n - γ|` for the inverse map).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetGrid {
    pub h: f64,
    pub nodes: usize,
}

impl TargetGrid {
    fn validate(&self) -> Result<(), HodographError> {
        if !(self.h > 0.0) || self.nodes < 3 {
            return Err(HodographError::InvalidGrid("target grid needs h > 0 and at least 3 nodes".into()));
        }
        Ok(())
    }
}

/// Transformed data on `{y_n >= 0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HodographPair {
    pub lines: LineSet,
    pub h_y: f64,
    /// `psi[line][j]` at `y_n = j h_y`.
    pub psi: Vec<Vec<f64>>,
    /// `phi[k][line][j][κ]`.
    pub phi: Vec<Vec<Vec<Vec<f64>>>>,
    pub sides: Vec<Side>,
    /// Shear constant.
    #[serde(rename = "C")]
    pub c: f64,
    pub w_def: String,
}

impl HodographPair {
    pub fn q(&self) -> usize {
        self.phi.len()
    }

    /// Discrete `D_{y_n} ψ` on one line.
    pub fn psi_derivative(&self, line: usize) -> Vec<f64> {
        fd_derivative(&self.psi[line], self.h_y)
    }

    /// `max |φ_k^κ - φ_l^κ|` at `y_n = 0` over the pairs that must agree:
    /// all sheets from the second on in the first component, all sheets in
    /// the others.
    pub fn interface_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..self.lines.count {
            let m = self.phi[0][l][0].len();
            for k in 0..self.q() {
                for c in 0..m {
                    let reference = if c == 0 { self.phi[1][l][0][0] } else { self.phi[0][l][0][c] };
                    if c == 0 && k == 0 {
                        continue;
                    }
                    worst = worst.max((self.phi[k][l][0][c] - reference).abs());
                }
            }
        }
        worst
    }
}

/// `C = 2 max D_{y_n} ψ` over all lines and nodes.
pub fn choose_c(psi: &[Vec<f64>], h_y: f64) -> f64 {
    2.0 * psi.iter().flat_map(|line| fd_derivative(line, h_y)).fold(f64::NEG_INFINITY, f64::max)
}

fn check_sheets(u: &[GraphFunction]) -> Result<(), HodographError> {
    if u.len() < 2 {
        return Err(HodographError::InvalidGrid("need at least two sheets".into()));
    }
    let (a, b) = (&u[0], &u[1]);
    if a.side != Side::Plus || b.side != Side::Plus {
        return Err(HodographError::InvalidGrid("the first two sheets must be on the plus side".into()));
    }
    for s in u {
        if s.lines != a.lines || s.m() != a.m() {
            return Err(HodographError::InvalidGrid("sheets must share lines and codimension".into()));
        }
        if s.interface.iter().zip(&a.interface).any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs())) {
            return Err(HodographError::InvalidGrid("sheets must share the interface".into()));
        }
    }
    if b.h != a.h || b.nodes() != a.nodes() {
        return Err(HodographError::InvalidGrid("the first two sheets must share their grid".into()));
    }
    Ok(())
}

fn w_line(u: &[GraphFunction], line: usize) -> Vec<f64> {
    u[0].values[line].iter().zip(&u[1].values[line]).map(|(a, b)| a[0] - b[0]).collect()
}

fn check_line(u: &[GraphFunction], line: usize) -> Result<Vec<f64>, HodographError> {
    let w = w_line(u, line);
    if let Some(i) = w.windows(2).position(|p| !(p[1] > p[0])) {
        return Err(HodographError::NonMonotone { line, node: i });
    }
    let reference = &u[0].values[line][0];
    let scale = 1.0 + reference.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for (k, s) in u.iter().enumerate().skip(1) {
        let err = s.values[line][0].iter().zip(reference).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        if err > INTERFACE_TOL * scale {
            return Err(HodographError::InterfaceMismatch { line, sheet: k, error: err });
        }
    }
    Ok(w)
}

/// Forward transform with `C` from [`choose_c`].
pub fn forward_transform(u: &[GraphFunction], target: TargetGrid) -> Result<HodographPair, HodographError> {
    forward_transform_with_shear(u, target, None)
}

/// Forward transform with a given shear constant (or [`choose_c`] when `None`).
pub fn forward_transform_with_shear(
    u: &[GraphFunction],
    target: TargetGrid,
    shear: Option<f64>,
) -> Result<HodographPair, HodographError> {
    check_sheets(u)?;
    target.validate()?;
    let lines = u[0].lines;
    let h = u[0].h;
    let psi: Vec<Vec<f64>> = (0..lines.count)
        .into_par_iter()
        .map(|l| -> Result<Vec<f64>, HodographError> {
            let w = check_line(u, l)?;
            let gamma = u[0].interface[l];
            let interp = Hermite::new(gamma, h, w.clone());
            let hi = interp.x_max();
            let w_max = *w.last().unwrap();
            let mut out = Vec::with_capacity(target.nodes);
            out.push(gamma);
            for j in 1..target.nodes {
                let y = target.h * j as f64;
                if y > w_max {
                    return Err(HodographError::OutOfRange { line: l, value: y, lo: w[0], hi: w_max });
                }
                let x = solve_monotone(|x| interp.eval_with_derivative(x), y, gamma, hi)
                    .map_err(|source| HodographError::Root { line: l, source })?;
                out.push(x);
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    let c = match shear {
        Some(c) => c,
        None => choose_c(&psi, target.h),
    };
    let max_dpsi = choose_c(&psi, target.h) / 2.0;
    if !(c > max_dpsi) {
        return Err(HodographError::InvalidGrid(format!("shear C = {c} must exceed max D_y psi = {max_dpsi}")));
    }
    let phi: Vec<Vec<Vec<Vec<f64>>>> = u
        .iter()
        .map(|sheet| {
            (0..lines.count)
                .into_par_iter()
                .map(|l| -> Result<Vec<Vec<f64>>, HodographError> {
                    let comps = sheet.interpolants(l);
                    let (lo, hi) = (comps[0].x_min(), comps[0].x_max());
                    (0..target.nodes)
                        .map(|j| {
                            let y = target.h * j as f64;
                            let x = match sheet.side {
                                Side::Plus => psi[l][j],
                                Side::Minus => psi[l][j] - c * y,
                            };
                            if !comps[0].contains(x) {
                                return Err(HodographError::OutOfRange { line: l, value: x, lo, hi });
                            }
                            Ok(comps.iter().map(|p| p.eval(x)).collect())
                        })
                        .collect()
                })
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(HodographPair {
        lines,
        h_y: target.h,
        psi,
        phi,
        sides: u.iter().map(|s| s.side).collect(),
        c,
        w_def: "u_1^1 - u_2^1".into(),
    })
}

/// Reconstructs every sheet on `x_n = γ ± i h`, using `plus` for plus-side
/// sheets and `minus` for the others.
pub fn inverse_transform(
    pair: &HodographPair,
    plus: TargetGrid,
    minus: TargetGrid,
) -> Result<Vec<GraphFunction>, HodographError> {
    plus.validate()?;
    minus.validate()?;
    let lines = pair.lines;
    let h_y = pair.h_y;
    let c = pair.c;
    // per line: y-coordinates of the plus and minus target nodes
    let roots: Vec<(Vec<f64>, Vec<f64>)> = (0..lines.count)
        .into_par_iter()
        .map(|l| -> Result<(Vec<f64>, Vec<f64>), HodographError> {
            let psi = Hermite::new(0.0, h_y, pair.psi[l].clone());
            let gamma = pair.psi[l][0];
            let y_max = psi.x_max();
            let solve_side = |grid: TargetGrid, side: Side| -> Result<Vec<f64>, HodographError> {
                let sheared = |y: f64| {
                    let (v, d) = psi.eval_with_derivative(y);
                    match side {
                        Side::Plus => (v, d),
                        Side::Minus => (v - c * y, d - c),
                    }
                };
                let end = sheared(y_max).0;
                let mut ys = vec![0.0];
                for i in 1..grid.nodes {
                    let x = gamma + side.sign() * grid.h * i as f64;
                    let (lo, hi) = if end > gamma { (gamma, end) } else { (end, gamma) };
                    if x < lo || x > hi {
                        return Err(HodographError::OutOfRange { line: l, value: x, lo, hi });
                    }
                    ys.push(
                        solve_monotone(sheared, x, 0.0, y_max).map_err(|source| HodographError::Root { line: l, source })?,
                    );
                }
                Ok(ys)
            };
            Ok((solve_side(plus, Side::Plus)?, solve_side(minus, Side::Minus)?))
        })
        .collect::<Result<_, _>>()?;
    let interface: Vec<f64> = pair.psi.iter().map(|p| p[0]).collect();
    (0..pair.q())
        .map(|k| {
            let side = pair.sides[k];
            let grid = if side == Side::Plus { plus } else { minus };
            let values = (0..lines.count)
                .map(|l| {
                    let m = pair.phi[k][l][0].len();
                    let comps: Vec<Hermite> = (0..m)
                        .map(|cc| Hermite::new(0.0, h_y, pair.phi[k][l].iter().map(|v| v[cc]).collect()))
                        .collect();
                    let ys = if side == Side::Plus { &roots[l].0 } else { &roots[l].1 };
                    ys.iter().map(|&y| comps.iter().map(|p| p.eval(y)).collect()).collect()
                })
                .collect();
            GraphFunction::new(side, lines, grid.h, interface.clone(), values)
        })
        .collect()
}

/// Largest nodewise difference between two sheets on a common set of
/// nodes (the shorter of the two node ranges).
pub fn max_difference(a: &GraphFunction, b: &GraphFunction) -> f64 {
    let nodes = a.nodes().min(b.nodes());
    let mut worst: f64 = 0.0;
    for l in 0..a.lines.count.min(b.lines.count) {
        for i in 0..nodes {
            for (x, y) in a.values[l][i].iter().zip(&b.values[l][i]) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    worst
}

/// Maximum deviations in the derivative identities of the transform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRuleReport {
    pub h: f64,
    /// `max |D_{x_n} w - 1/D_{y_n} ψ|` over interior `y_n` nodes.
    pub normal_max_error: f64,
    pub normal_nodes: usize,
    /// `max |D_l w + D_l ψ / D_{y_n} ψ|` with `l` the line coordinate
    /// (`x_1` or `t`); `None` for a single line.
    pub line_max_error: Option<f64>,
    pub line_nodes: usize,
}

impl ChainRuleReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.normal_max_error <= tol && self.line_max_error.is_none_or(|e| e <= tol)
    }
}

fn three_point(values: [f64; 3], step: f64, position: usize) -> f64 {
    match position {
        0 => (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step),
        1 => (values[2] - values[0]) / (2.0 * step),
        _ => (3.0 * values[2] - 4.0 * values[1] + values[0]) / (2.0 * step),
    }
}

fn stencil(count: usize, l: usize) -> (usize, usize) {
    if l == 0 {
        (0, 0)
    } else if l + 1 == count {
        (count - 3, 2)
    } else {
        (l - 1, 1)
    }
}

/// Finite-difference check of the derivative identities relating `w` and `ψ`.
pub fn verify_chain_rule(u: &[GraphFunction], pair: &HodographPair) -> Result<ChainRuleReport, HodographError> {
    check_sheets(u)?;
    let lines = pair.lines;
    let h = u[0].h;
    let w_interp: Vec<Hermite> = (0..lines.count).map(|l| Hermite::new(u[0].interface[l], h, w_line(u, l))).collect();
    let ny = pair.psi[0].len();
    let dpsi: Vec<Vec<f64>> = (0..lines.count).map(|l| pair.psi_derivative(l)).collect();

    let mut normal_max: f64 = 0.0;
    let mut normal_nodes = 0;
    for l in 0..lines.count {
        let dw = fd_derivative(w_interp[l].values(), h);
        let x0 = w_interp[l].x_min();
        for j in 1..ny - 1 {
            let x = pair.psi[l][j];
            let s = (x - x0) / h;
            let i = (s.floor().max(0.0) as usize).min(dw.len() - 2);
            let t = s - i as f64;
            let dwx = (1.0 - t) * dw[i] + t * dw[i + 1];
            let centered = (pair.psi[l][j + 1] - pair.psi[l][j - 1]) / (2.0 * pair.h_y);
            normal_max = normal_max.max((dwx - 1.0 / centered).abs());
            normal_nodes += 1;
        }
    }

    let mut line_max = None;
    let mut line_nodes = 0;
    if lines.kind != LineKind::Single && lines.count >= 3 {
        let mut worst: f64 = 0.0;
        for l in 0..lines.count {
            let (first, pos) = stencil(lines.count, l);
            for j in 0..ny {
                let x = pair.psi[l][j];
                if (first..first + 3).any(|r| !w_interp[r].contains(x)) {
                    continue;
                }
                let wv = [w_interp[first].eval(x), w_interp[first + 1].eval(x), w_interp[first + 2].eval(x)];
                let pv = [pair.psi[first][j], pair.psi[first + 1][j], pair.psi[first + 2][j]];
                let dw = three_point(wv, lines.step, pos);
                let dp = three_point(pv, lines.step, pos);
                worst = worst.max((dw + dp / dpsi[l][j]).abs());
                line_nodes += 1;
            }
        }
        line_max = Some(worst);
    }
    Ok(ChainRuleReport { h, normal_max_error: normal_max, normal_nodes, line_max_error: line_max, line_nodes })
}

fn line_header(kind: LineKind) -> Option<&'static str> {
    match kind {
        LineKind::Single => None,
        LineKind::Tangential => Some("x1"),
        LineKind::Time => Some("t"),
    }
}

/// Writes `[line coordinate,] x_n, u^1..u^m` rows, node 0 of each line first.
pub fn write_graph_csv<W: Write>(g: &GraphFunction, out: W) -> Result<(), HodographError> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = line_header(g.lines.kind).into_iter().map(String::from).collect();
    header.push("xn".into());
    header.extend((1..=g.m()).map(|c| format!("u{c}")));
    wtr.write_record(&header).map_err(csv_err)?;
    for l in 0..g.lines.count {
        for i in 0..g.nodes() {
            let mut row: Vec<String> = Vec::new();
            if g.lines.kind != LineKind::Single {
                row.push(fmt_f(g.lines.coord(l)));
            }
            row.push(fmt_f(g.x(l, i)));
            row.extend(g.values[l][i].iter().map(|v| fmt_f(*v)));
            wtr.write_record(&row).map_err(csv_err)?;
        }
    }
    wtr.flush().map_err(|e| HodographError::Csv(e.to_string()))
}

/// Reads the format of [`write_graph_csv`]. Side and spacing are inferred
/// from the node ordering.
pub fn read_graph_csv<R: Read>(input: R) -> Result<GraphFunction, HodographError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let kind = match header.get(0) {
        Some("x1") => LineKind::Tangential,
        Some("t") => LineKind::Time,
        Some("xn") => LineKind::Single,
        other => return Err(HodographError::Csv(format!("unexpected first column {other:?}"))),
    };
    let offset = usize::from(kind != LineKind::Single);
    let m = header.len().saturating_sub(offset + 1);
    let mut coords: Vec<f64> = Vec::new();
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut values: Vec<Vec<Vec<f64>>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let nums: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| HodographError::Csv(format!("{s:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        let coord = if offset == 1 { nums[0] } else { 0.0 };
        if coords.last() != Some(&coord) || coords.is_empty() {
            coords.push(coord);
            xs.push(Vec::new());
            values.push(Vec::new());
        }
        xs.last_mut().unwrap().push(nums[offset]);
        values.last_mut().unwrap().push(nums[offset + 1..].to_vec());
    }
    if xs.is_empty() || xs[0].len() < 3 || m == 0 {
        return Err(HodographError::Csv("need at least three nodes and one value column".into()));
    }
    let step_x = xs[0][1] - xs[0][0];
    let side = if step_x > 0.0 { Side::Plus } else { Side::Minus };
    let h = step_x.abs();
    let lines = match kind {
        LineKind::Single => LineSet::single(),
        _ => {
            let step = if coords.len() > 1 { coords[1] - coords[0] } else { 1.0 };
            LineSet { kind, start: coords[0], step, count: coords.len() }
        }
    };
    let interface = xs.iter().map(|x| x[0]).collect();
    GraphFunction::new(side, lines, h, interface, values)
}

/// Writes `[line coordinate,] y, psi, phi<k>_<κ>...` rows.
pub fn write_pair_csv<W: Write>(pair: &HodographPair, out: W) -> Result<(), HodographError> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = line_header(pair.lines.kind).into_iter().map(String::from).collect();
    header.push("y".into());
    header.push("psi".into());
    let m = pair.phi[0][0][0].len();
    for k in 1..=pair.q() {
        for c in 1..=m {
            header.push(format!("phi{k}_{c}"));
        }
    }
    wtr.write_record(&header).map_err(csv_err)?;
    for l in 0..pair.lines.count {
        for j in 0..pair.psi[l].len() {
            let mut row: Vec<String> = Vec::new();
            if pair.lines.kind != LineKind::Single {
                row.push(fmt_f(pair.lines.coord(l)));
            }
            row.push(fmt_f(pair.h_y * j as f64));
            row.push(fmt_f(pair.psi[l][j]));
            for k in 0..pair.q() {
                row.extend(pair.phi[k][l][j].iter().map(|v| fmt_f(*v)));
            }
            wtr.write_record(&row).map_err(csv_err)?;
        }
    }
    wtr.flush().map_err(|e| HodographError::Csv(e.to_string()))
}

fn csv_err(e: csv::Error) -> HodographError {
    HodographError::Csv(e.to_string())
}

/// Shortest round-trip representation.
pub(crate) fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

/// Built-in smooth test data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    /// One space dimension, `m = 2`, curved sheets.
    Curved,
    /// Two space dimensions with a curved interface, `m = 1`.
    Tangential,
    /// Time-dependent data with a moving interface, `m = 2`.
    Translating,
}

impl Dataset {
    pub const ALL: [Dataset; 3] = [Dataset::Curved, Dataset::Tangential, Dataset::Translating];
}

/// Sheets and grids of a synthetic round-trip experiment.
#[derive(Debug, Clone)]
pub struct SyntheticCase {
    pub sheets: Vec<GraphFunction>,
    pub forward: TargetGrid,
    pub plus: TargetGrid,
    pub minus: TargetGrid,
}

fn nodes_for(length: f64, h: f64) -> usize {
    (length / h).round() as usize + 1
}

/// Samples `dataset` with spacing `h` (also used for the line spacing and
/// the `y_n` grid).
pub fn synthetic_case(dataset: Dataset, h: f64) -> Result<SyntheticCase, HodographError> {
    let plus_len = 0.5;
    let minus_len = 0.8;
    let line_len = 0.5;
    type Sheet = Box<dyn Fn(f64, f64) -> Vec<f64> + Sync>;
    let (lines, gamma, sheets): (LineSet, Box<dyn Fn(f64) -> f64>, Vec<Sheet>) = match dataset {
        Dataset::Curved => (
            LineSet::single(),
            Box::new(|_| 0.0),
            vec![
                Box::new(|_, x: f64| vec![x + 0.3 * x * x + 0.1 * (3.0 * x).sin(), 0.2 + 0.5 * x + 0.3 * x * x]),
                Box::new(|_, x: f64| vec![-x + 0.2 * x.powi(3) + 0.05 * (2.0 * x).sin(), 0.2 - 0.4 * x + 0.1 * x * x]),
                Box::new(|_, x: f64| vec![0.5 * x + 0.25 * x * x, 0.2 + 0.1 * (4.0 * x).sin()]),
            ],
        ),
        Dataset::Tangential => {
            let g = |x1: f64| 0.1 * (2.0 * x1).sin();
            let p = |x1: f64| 0.3 * x1.cos();
            (
                LineSet::tangential(0.0, h, nodes_for(line_len, h)),
                Box::new(g),
                vec![
                    Box::new(move |x1, x| {
                        let r = x - g(x1);
                        vec![p(x1) + (1.0 + 0.2 * x1) * r + 0.3 * r * r]
                    }),
                    Box::new(move |x1, x| {
                        let r = x - g(x1);
                        vec![p(x1) - r + 0.2 * x1 * r * r]
                    }),
                    Box::new(move |x1, x| {
                        let r = x - g(x1);
                        vec![p(x1) + 0.4 * r + 0.1 * x1.sin() * r * r]
                    }),
                ],
            )
        }
        Dataset::Translating => {
            let g = |t: f64| 0.2 * t;
            (
                LineSet::time(0.0, h, nodes_for(line_len, h)),
                Box::new(g),
                vec![
                    Box::new(move |t, x| {
                        let r = x - g(t);
                        vec![0.1 * t + r * (1.0 + 0.1 * t) + 0.2 * r * r, -0.05 * t + 0.3 * r + 0.1 * t * r * r]
                    }),
                    Box::new(move |t, x| {
                        let r = x - g(t);
                        vec![0.1 * t - r + 0.1 * r * r * (1.0 + t).sin(), -0.05 * t - 0.2 * r]
                    }),
                    Box::new(move |t, x| {
                        let r = x - g(t);
                        vec![0.1 * t + 0.3 * r + 0.1 * t * r, -0.05 * t + 0.5 * r * r]
                    }),
                ],
            )
        }
    };
    let interface: Vec<f64> = (0..lines.count).map(|l| gamma(lines.coord(l))).collect();
    let sides = [Side::Plus, Side::Plus, Side::Minus];
    let sheets = sheets
        .iter()
        .zip(sides)
        .map(|(f, side)| {
            let len = if side == Side::Plus { plus_len } else { minus_len };
            GraphFunction::sample(side, lines, h, interface.clone(), nodes_for(len, h), f)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SyntheticCase {
        sheets,
        forward: TargetGrid { h, nodes: nodes_for(0.75, h) },
        plus: TargetGrid { h, nodes: nodes_for(0.3, h) },
        minus: TargetGrid { h, nodes: nodes_for(0.3, h) },
    })
}

/// Result of transforming a synthetic case forward and back.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundtripReport {
    pub h: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub roundtrip_error: f64,
    pub interface_defect: f64,
    pub chain_rule: ChainRuleReport,
}

pub fn roundtrip(case: &SyntheticCase) -> Result<RoundtripReport, HodographError> {
    let pair = forward_transform(&case.sheets, case.forward)?;
    let back = inverse_transform(&pair, case.plus, case.minus)?;
    let err = case.sheets.iter().zip(&back).map(|(a, b)| max_difference(a, b)).fold(0.0, f64::max);
    let chain_rule = verify_chain_rule(&case.sheets, &pair)?;
    Ok(RoundtripReport {
        h: case.forward.h,
        c: pair.c,
        roundtrip_error: err,
        interface_defect: pair.interface_defect(),
        chain_rule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(a1: f64, a2: f64, a3: f64, h: f64, nodes: usize) -> Vec<GraphFunction> {
        let mk = |side, a: f64| GraphFunction::sample(side, LineSet::single(), h, vec![0.0], nodes, move |_, x| vec![a * x]).unwrap();
        vec![mk(Side::Plus, a1), mk(Side::Plus, a2), mk(Side::Minus, a3)]
    }

    #[test]
    fn linear_sheets_invert_exactly() {
        let u = linear(1.0, -1.0, 0.5, 0.05, 21);
        let pair = forward_transform(&u, TargetGrid { h: 0.05, nodes: 11 }).unwrap();
        for (j, p) in pair.psi[0].iter().enumerate() {
            assert!((p - 0.025 * j as f64).abs() < 1e-14);
        }
        assert!((pair.c - 1.0).abs() < 1e-12);
        let back = inverse_transform(&pair, TargetGrid { h: 0.05, nodes: 5 }, TargetGrid { h: 0.05, nodes: 5 }).unwrap();
        for (a, b) in u.iter().zip(&back) {
            assert!(max_difference(a, b) < 1e-13);
        }
        let rep = verify_chain_rule(&u, &pair).unwrap();
        assert!(rep.normal_max_error < 1e-12, "{rep:?}");
    }

    #[test]
    fn minus_side_uses_shear() {
        let u = linear(1.0, -1.0, 0.5, 0.05, 21);
        let pair = forward_transform_with_shear(&u, TargetGrid { h: 0.05, nodes: 11 }, Some(1.5)).unwrap();
        for j in 0..11 {
            let y = 0.05 * j as f64;
            let x = pair.psi[0][j] - 1.5 * y;
            assert!((pair.phi[2][0][j][0] - 0.5 * x).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_inverse_matches_series() {
        let h = 0.01;
        let mk = |side, f: fn(f64) -> f64| {
            let nodes = if side == Side::Plus { 21 } else { 61 };
            GraphFunction::sample(side, LineSet::single(), h, vec![0.0], nodes, move |_, x| vec![f(x)]).unwrap()
        };
        let u = vec![mk(Side::Plus, |x| x + x * x), mk(Side::Plus, |x| -x), mk(Side::Minus, |x| 0.1 * x)];
        let pair = forward_transform(&u, TargetGrid { h: 0.02, nodes: 20 }).unwrap();
        for (j, p) in pair.psi[0].iter().enumerate() {
            let y = 0.02 * j as f64;
            assert!((p - ((1.0 + y).sqrt() - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn detects_bad_input() {
        let u = linear(-1.0, 1.0, 0.5, 0.05, 21);
        assert!(matches!(forward_transform(&u, TargetGrid { h: 0.05, nodes: 5 }), Err(HodographError::NonMonotone { .. })));
        let mut u = linear(1.0, -1.0, 0.5, 0.05, 21);
        u[2] = GraphFunction::sample(Side::Minus, LineSet::single(), 0.05, vec![0.0], 21, |_, x| vec![0.5 * x + 1e-3]).unwrap();
        assert!(matches!(
            forward_transform(&u, TargetGrid { h: 0.05, nodes: 5 }),
            Err(HodographError::InterfaceMismatch { sheet: 2, .. })
        ));
        let u = linear(1.0, -1.0, 0.5, 0.05, 21);
        assert!(matches!(forward_transform(&u, TargetGrid { h: 0.6, nodes: 5 }), Err(HodographError::OutOfRange { .. })));
    }

    #[test]
    fn choose_c_examples() {
        let half: Vec<f64> = (0..5).map(|j| 0.5 * j as f64 * 0.1).collect();
        assert!((choose_c(&[half], 0.1) - 1.0).abs() < 1e-14);
        let id: Vec<f64> = (0..5).map(|j| j as f64 * 0.1).collect();
        assert!((choose_c(&[id], 0.1) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn translating_profile() {
        // w(t, x) = x + t on the plus side: D_t w = 1 and psi = y - t
        let lines = LineSet::time(0.0, 0.1, 5);
        let gamma: Vec<f64> = (0..5).map(|l| -0.1 * l as f64).collect();
        let u = vec![
            GraphFunction::sample(Side::Plus, lines, 0.05, gamma.clone(), 21, |t, x| vec![x + t]).unwrap(),
            GraphFunction::sample(Side::Plus, lines, 0.05, gamma.clone(), 21, |_, _| vec![0.0]).unwrap(),
            GraphFunction::sample(Side::Minus, lines, 0.05, gamma, 21, |_, _| vec![0.0]).unwrap(),
        ];
        let pair = forward_transform(&u, TargetGrid { h: 0.05, nodes: 9 }).unwrap();
        let rep = verify_chain_rule(&u, &pair).unwrap();
        assert!(rep.line_max_error.unwrap() < 1e-12 && rep.line_nodes > 0, "{rep:?}");
    }

    #[test]
    fn csv_roundtrip() {
        let case = synthetic_case(Dataset::Tangential, 0.1).unwrap();
        for g in &case.sheets {
            let mut buf = Vec::new();
            write_graph_csv(g, &mut buf).unwrap();
            let back = read_graph_csv(buf.as_slice()).unwrap();
            assert_eq!(back.values(), g.values());
            assert_eq!(back.interface(), g.interface());
            assert_eq!((back.side(), back.lines()), (g.side(), g.lines()));
            assert!((back.h() - g.h()).abs() < 1e-15);
        }
        let pair = forward_transform(&case.sheets, case.forward).unwrap();
        let mut buf = Vec::new();
        write_pair_csv(&pair, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x1,y,psi,phi1_1"));
    }
}
