//! Quadrature kernels for the transverse-momentum integrals.
//!
//! The amplitude integrands are products of a Gaussian, an oscillating sinc
//! and unit-modulus chirps, so Gauss-Legendre on a truncated rectangle is the
//! workhorse; an equally-weighted trapezoid rule is kept behind the same
//! interface as a cross-check. Convergence is always established by doubling
//! the node count and comparing, never assumed from the node count alone.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// sin(u)/u, continuous through u = 0.
///
/// Below |u| = 1e-4 the direct quotient loses nothing yet, but the series is
/// exact to f64 there and keeps the function analytic at the origin.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0))
    } else {
        u.sin() / u
    }
}

/// Quadrature rule selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    GaussLegendre,
    Trapezoid,
}

impl QuadRule {
    pub fn name(&self) -> &'static str {
        match self {
            QuadRule::GaussLegendre => "gauss-legendre",
            QuadRule::Trapezoid => "trapezoid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gauss-legendre" | "gauss_legendre" => Some(QuadRule::GaussLegendre),
            "trapezoid" => Some(QuadRule::Trapezoid),
            _ => None,
        }
    }
}

/// Domain and resolution for one 2D integral. Axis 0 and axis 1 may differ;
/// the amplitude model uses a wide fast axis for the difference coordinate
/// and a narrow one for the pump-limited sum coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Half-width of the truncated domain per axis, in rad/m.
    pub half_width: [f64; 2],
    /// Base node count per axis; the refinement check re-runs at double.
    pub nodes: [usize; 2],
    pub rule: QuadRule,
    /// Relative tolerance for the node-doubling check.
    pub tolerance: f64,
}

impl QuadratureSpec {
    pub fn new(half_width: [f64; 2], nodes: [usize; 2], rule: QuadRule, tolerance: f64) -> Result<Self> {
        let spec = QuadratureSpec { half_width, nodes, rule, tolerance };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.half_width {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidQuadratureSpec(format!(
                    "domain half-width must be positive, got {w}"
                )));
            }
        }
        for n in self.nodes {
            if n < 8 {
                return Err(Error::InvalidQuadratureSpec(format!(
                    "need at least 8 nodes per axis, got {n}"
                )));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidQuadratureSpec(format!(
                "refinement tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Nodes and weights on [-hw, hw] for the given rule.
///
/// Gauss-Legendre roots come from Newton iteration on the recurrence; the
/// half set is mirrored so the returned grid is symmetric to the last bit,
/// which downstream code relies on for exact evenness of its integrals.
pub fn nodes_weights(half_width: f64, n: usize, rule: QuadRule) -> Vec<(f64, f64)> {
    match rule {
        QuadRule::GaussLegendre => gauss_legendre(n)
            .into_iter()
            .map(|(x, w)| (x * half_width, w * half_width))
            .collect(),
        QuadRule::Trapezoid => {
            let h = 2.0 * half_width / (n as f64 - 1.0);
            (0..n)
                .map(|i| {
                    let x = -half_width + h * i as f64;
                    let w = if i == 0 || i == n - 1 { h / 2.0 } else { h };
                    (x, w)
                })
                .collect()
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 2, "Gauss-Legendre needs at least 2 nodes");
    let mut out = vec![(0.0f64, 0.0f64); n];
    let m = n.div_ceil(2);
    for i in 1..=m {
        // Tricomi-style initial guess for the i-th root from the right.
        let mut z = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(z) and its derivative.
            let mut p0 = 1.0;
            let mut p1 = z;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        out[i - 1] = (-z, w);
        out[n - i] = (z, w);
    }
    if n % 2 == 1 {
        // The middle node is exactly 0 by symmetry.
        out[n / 2].0 = 0.0;
    }
    out
}

/// Single-pass 1D integral, no refinement check.
pub fn integrate_1d_once<F>(f: F, half_width: f64, n: usize, rule: QuadRule) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in nodes_weights(half_width, n, rule) {
        acc += f(x) * w;
    }
    acc
}

/// Single-pass 2D integral over the spec's rectangle, no refinement check.
///
/// Sums one row at a time; the row subtotals keep roundoff growth closer to
/// sqrt(n) than n, which matters when coefficients twenty orders of magnitude
/// below the integrand scale are still physically meaningful.
pub fn integrate_2d_once<F>(f: &F, spec: &QuadratureSpec, nodes: [usize; 2]) -> Complex64
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    let a = nodes_weights(spec.half_width[0], nodes[0], spec.rule);
    let b = nodes_weights(spec.half_width[1], nodes[1], spec.rule);
    let mut total = Complex64::new(0.0, 0.0);
    for &(x0, w0) in &a {
        let mut row = Complex64::new(0.0, 0.0);
        for &(x1, w1) in &b {
            row += f(x0, x1) * w1;
        }
        total += row * w0;
    }
    total
}

/// 2D integral with the doubling-based refinement check.
///
/// Runs the rule at the spec's node counts and again at double, and fails
/// with a nonconvergence error when the two disagree beyond the tolerance
/// relative to the larger magnitude. Integrals that are legitimately close
/// to zero against the integrand scale need a caller-supplied scale instead;
/// see the amplitude evaluator for that pattern.
pub fn integrate_2d<F>(f: F, spec: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    spec.validate()?;
    let coarse = integrate_2d_once(&f, spec, spec.nodes);
    let fine = integrate_2d_once(&f, spec, [spec.nodes[0] * 2, spec.nodes[1] * 2]);
    let scale = coarse.norm().max(fine.norm());
    if scale == 0.0 {
        return Ok(fine);
    }
    let delta = (fine - coarse).norm();
    if delta > spec.tolerance * scale {
        return Err(Error::QuadratureNonConvergence {
            delta: delta / scale,
            tolerance: spec.tolerance,
        });
    }
    Ok(fine)
}
