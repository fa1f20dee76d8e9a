//! Uniform-grid cubic Hermite interpolation and a bracketed monotone root
//! solver.

use thiserror::Error;

/// Newton tolerance on the residual, relative to `1 + |target|`.
pub const ROOT_TOL: f64 = 1e-12;
pub const ROOT_MAX_ITERS: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("target {target} outside [{lo_value}, {hi_value}]")]
    NotBracketed { target: f64, lo_value: f64, hi_value: f64 },
    #[error("no convergence after {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },
}

/// Piecewise cubic Hermite interpolant on `x0 + i h`, `i = 0..len`, with
/// nodal slopes from second-order finite differences (centered inside,
/// three-point one-sided at the ends).
#[derive(Debug, Clone, PartialEq)]
pub struct Hermite {
    x0: f64,
    h: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Hermite {
    /// Needs at least three nodes and `h > 0`.
    pub fn new(x0: f64, h: f64, values: Vec<f64>) -> Self {
        assert!(values.len() >= 3, "cubic Hermite needs at least three nodes");
        assert!(h > 0.0);
        let slopes = fd_derivative(&values, h);
        Hermite { x0, h, values, slopes }
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, x: f64) -> bool {
        let eps = 1e-12 * self.h;
        x >= self.x_min() - eps && x <= self.x_max() + eps
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x - self.x0) / self.h;
        let last = self.values.len() - 2;
        let i = (s.floor().max(0.0) as usize).min(last);
        (i, s - i as f64)
    }

    /// Value and derivative at `x`; extrapolates the end cubics outside the range.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let (i, t) = self.locate(x);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.h, self.slopes[i + 1] * self.h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dv = (6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1;
        (v, dv / self.h)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }
}

/// Second-order finite-difference derivative of uniformly sampled values.
pub fn fd_derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    assert!(n >= 3);
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d
}

/// Solves `f(x) = target` on `[lo, hi]` for monotone `f` returning
/// `(value, derivative)`, by Newton steps safeguarded with bisection.
pub fn solve_monotone<F>(f: F, target: f64, mut lo: f64, mut hi: f64) -> Result<f64, RootError>
where
    F: Fn(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    let increasing = fhi >= flo;
    let tol = ROOT_TOL * (1.0 + target.abs());
    let sign = if increasing { 1.0 } else { -1.0 };
    let (glo, ghi) = (sign * (flo - target), sign * (fhi - target));
    if glo > tol || ghi < -tol {
        return Err(RootError::NotBracketed { target, lo_value: flo, hi_value: fhi });
    }
    if glo.abs() <= tol {
        return Ok(lo);
    }
    if ghi.abs() <= tol {
        return Ok(hi);
    }
    // secant guess
    let mut x = lo + (hi - lo) * (-glo / (ghi - glo));
    let mut residual = f64::INFINITY;
    for _ in 0..ROOT_MAX_ITERS {
        let (v, dv) = f(x);
        let g = sign * (v - target);
        residual = g.abs();
        if residual <= tol {
            return Ok(x);
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - (v - target) / dv;
        x = if dv.is_finite() && dv != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (hi - lo).abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            return Ok(x);
        }
    }
    Err(RootError::NoConvergence { iters: ROOT_MAX_ITERS, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_quadratics() {
        let h = 0.1;
        let v: Vec<f64> = (0..8).map(|i| {
            let x = 0.3 + i as f64 * h;
            2.0 * x * x - x + 1.0
        }).collect();
        let p = Hermite::new(0.3, h, v);
        for x in [0.3, 0.37, 0.5111, 0.99, 1.0] {
            let (val, d) = p.eval_with_derivative(x);
            assert!((val - (2.0 * x * x - x + 1.0)).abs() < 1e-13);
            assert!((d - (4.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn root_of_cubic() {
        let f = |x: f64| (x * x * x + x, 3.0 * x * x + 1.0);
        let r = solve_monotone(f, 2.0, 0.0, 3.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let g = |x: f64| (-x, -1.0);
        assert!((solve_monotone(g, -0.25, 0.0, 1.0).unwrap() - 0.25).abs() < 1e-14);
        assert!(matches!(solve_monotone(f, 50.0, 0.0, 3.0), Err(RootError::NotBracketed { .. })));
    }
}
