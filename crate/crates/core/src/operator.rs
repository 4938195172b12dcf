//! The graphical soliton operator `Q[u] = div(Du/W) − f(u)/W` with
//! `W = √(1+|Du|²)` and `f(u) = −(1+nu)/u²`, pointwise and on grids.

use serde::Serialize;

use crate::error::{invalid, HoroError, Result};
use crate::exec::Exec;
use crate::grid::{DomainSpec, GridFunction};

/// Default absolute tolerance for sign classification of residuals.
pub const CLASSIFICATION_TOL: f64 = 1e-8;

/// Zeroth-order term of the soliton operator.
pub fn f_rhs(u: f64, n: usize) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(HoroError::NonpositiveHeight(u));
    }
    Ok(f_unchecked(u, n as f64))
}

#[inline]
pub(crate) fn f_unchecked(u: f64, n: f64) -> f64 {
    -(1.0 + n * u) / (u * u)
}

/// Value, gradient and Hessian of a graph at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilSample {
    pub u: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
}

impl StencilSample {
    pub fn new(u: f64, grad: Vec<f64>, hess: Vec<Vec<f64>>) -> Result<Self> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(HoroError::NonpositiveHeight(u));
        }
        let d = grad.len();
        if hess.len() != d || hess.iter().any(|row| row.len() != d) {
            return Err(invalid(format!("Hessian must be {d}×{d}")));
        }
        let scale = hess.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (hess[i][j] - hess[j][i]).abs() > 1e-12 * scale {
                    return Err(invalid("Hessian is not symmetric"));
                }
            }
        }
        Ok(StencilSample { u, grad, hess })
    }

    /// Sample of a constant function in `d` variables.
    pub fn constant(c: f64, d: usize) -> Result<Self> {
        StencilSample::new(c, vec![0.0; d], vec![vec![0.0; d]; d])
    }

    pub fn w(&self) -> f64 {
        (1.0 + self.grad.iter().map(|g| g * g).sum::<f64>()).sqrt()
    }

    /// `div(Du/W)` expanded as `(Δu − Du·D²u·Du/W²)/W`.
    pub fn div_normalized_gradient(&self) -> f64 {
        let w = self.w();
        let d = self.grad.len();
        let lap: f64 = (0..d).map(|i| self.hess[i][i]).sum();
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += self.grad[i] * self.hess[i][j] * self.grad[j];
            }
        }
        (lap - quad / (w * w)) / w
    }
}

/// Unnormalized scalar hyperbolic mean curvature of the graph of `u`:
/// `H = u·div(Du/W) + n/W`.
pub fn mean_curvature_graph(s: &StencilSample, n: usize) -> f64 {
    s.u * s.div_normalized_gradient() + n as f64 / s.w()
}

/// `Q[u]` at a point from exact derivatives.
pub fn q_pointwise(s: &StencilSample, n: usize) -> f64 {
    s.div_normalized_gradient() - f_unchecked(s.u, n as f64) / s.w()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Solution,
    Subsolution,
    Supersolution,
    Neither,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Solution => "solution",
            Classification::Subsolution => "subsolution",
            Classification::Supersolution => "supersolution",
            Classification::Neither => "neither",
        }
    }
}

/// Per-node residuals with norms and sign classification. Nodes that were
/// not evaluated (boundary nodes, nodes without a full stencil) hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub residuals: Vec<f64>,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub classification: Classification,
    pub tol_used: f64,
}

impl ResidualReport {
    pub fn from_residuals(residuals: Vec<f64>, tol: f64) -> Self {
        let vals: Vec<f64> = residuals.iter().copied().filter(|r| !r.is_nan()).collect();
        let max_abs = vals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let mean_abs =
            if vals.is_empty() { 0.0 } else { vals.iter().map(|r| r.abs()).sum::<f64>() / vals.len() as f64 };
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let classification = if max_abs <= tol {
            Classification::Solution
        } else if min >= -tol {
            Classification::Subsolution
        } else if max <= tol {
            Classification::Supersolution
        } else {
            Classification::Neither
        };
        ResidualReport { residuals, max_abs, mean_abs, classification, tol_used: tol }
    }

    pub fn evaluated(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.residuals.iter().copied().enumerate().filter(|(_, r)| !r.is_nan())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "classification": self.classification.as_str(),
            "tol": self.tol_used,
        })
    }
}

/// Precomputed grid data for fast residual evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    pub domain: DomainSpec,
    pub n: f64,
    pub h: Vec<f64>,
    pub radial: bool,
    pub coord: Vec<f64>,
    pub boundary: Vec<bool>,
}

impl Stencil {
    pub fn new(domain: &DomainSpec, n: usize) -> Result<Self> {
        if domain.resolution < 3 {
            return Err(HoroError::DegenerateGrid(format!("{} nodes per axis", domain.resolution)));
        }
        if n < 1 {
            return Err(invalid("dimension n must be at least 1"));
        }
        Ok(Stencil {
            domain: *domain,
            n: n as f64,
            h: domain.spacing(),
            radial: domain.is_radial(),
            coord: domain.axis(0),
            boundary: (0..domain.len()).map(|i| domain.is_boundary(i)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    /// Discrete `Q[u]` at an interior node.
    pub fn residual(&self, u: &[f64], idx: usize) -> f64 {
        if self.domain.dim() == 1 {
            self.residual_1d(u, idx)
        } else {
            self.residual_2d(u, idx)
        }
    }

    fn residual_1d(&self, u: &[f64], i: usize) -> f64 {
        let h = self.h[0];
        let n = self.n;
        let flux = |a: f64, b: f64| {
            let g = (b - a) / h;
            g / (1.0 + g * g).sqrt()
        };
        if i == 0 {
            // center of a ball: half cell [0, h/2], symmetric slope
            let fr = flux(u[0], u[1]);
            return n * fr / (0.5 * h) - f_unchecked(u[0], n);
        }
        let fl = flux(u[i - 1], u[i]);
        let fr = flux(u[i], u[i + 1]);
        let gc = (u[i + 1] - u[i - 1]) / (2.0 * h);
        let w = (1.0 + gc * gc).sqrt();
        let div = if self.radial {
            let r = self.coord[i];
            let wl = (r - 0.5 * h).powf(n - 1.0);
            let wr = (r + 0.5 * h).powf(n - 1.0);
            (wr * fr - wl * fl) / (r.powf(n - 1.0) * h)
        } else {
            (fr - fl) / h
        };
        div - f_unchecked(u[i], n) / w
    }

    fn residual_2d(&self, u: &[f64], idx: usize) -> f64 {
        let m = self.domain.resolution;
        let (hx, hy) = (self.h[0], self.h[1]);
        let at = |i: usize, j: usize| u[j * m + i];
        let (i, j) = (idx % m, idx / m);
        // transverse derivative at a node, one-sided on the grid edge
        let dy = |i: usize, j: usize| {
            if j == 0 {
                (at(i, 1) - at(i, 0)) / hy
            } else if j == m - 1 {
                (at(i, m - 1) - at(i, m - 2)) / hy
            } else {
                (at(i, j + 1) - at(i, j - 1)) / (2.0 * hy)
            }
        };
        let dx = |i: usize, j: usize| {
            if i == 0 {
                (at(1, j) - at(0, j)) / hx
            } else if i == m - 1 {
                (at(m - 1, j) - at(m - 2, j)) / hx
            } else {
                (at(i + 1, j) - at(i - 1, j)) / (2.0 * hx)
            }
        };
        let xflux = |i0: usize| {
            let gx = (at(i0 + 1, j) - at(i0, j)) / hx;
            let gy = 0.5 * (dy(i0, j) + dy(i0 + 1, j));
            gx / (1.0 + gx * gx + gy * gy).sqrt()
        };
        let yflux = |j0: usize| {
            let gy = (at(i, j0 + 1) - at(i, j0)) / hy;
            let gx = 0.5 * (dx(i, j0) + dx(i, j0 + 1));
            gy / (1.0 + gx * gx + gy * gy).sqrt()
        };
        let div = (xflux(i) - xflux(i - 1)) / hx + (yflux(j) - yflux(j - 1)) / hy;
        let gx = dx(i, j);
        let gy = dy(i, j);
        let w = (1.0 + gx * gx + gy * gy).sqrt();
        div - f_unchecked(at(i, j), self.n) / w
    }

    /// Residual vector over all nodes (0 on boundary nodes).
    pub fn residual_vec(&self, u: &[f64], exec: Exec) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        exec.fill(&mut out, |i| if self.boundary[i] { 0.0 } else { self.residual(u, i) });
        out
    }
}

/// Discrete `Q[u]` in conservative face-flux form at all interior nodes,
/// classified with the default tolerance.
pub fn q_residual(u: &GridFunction, n: usize) -> Result<ResidualReport> {
    q_residual_with(u, n, CLASSIFICATION_TOL, Exec::default())
}

pub fn q_residual_with(u: &GridFunction, n: usize, tol: f64, exec: Exec) -> Result<ResidualReport> {
    let st = Stencil::new(&u.domain, n)?;
    let mut res = vec![f64::NAN; st.len()];
    exec.fill(&mut res, |i| if st.boundary[i] { f64::NAN } else { st.residual(&u.values, i) });
    Ok(ResidualReport::from_residuals(res, tol))
}
