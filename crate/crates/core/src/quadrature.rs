//! Composite Gauss–Legendre quadrature with endpoint power substitution.
//!
//! Band integrands blow up like `dist^{−s}` at the band edges with
//! `s < 1`. Writing `θ = edge + w^m` near each end turns the integrand into
//! `m·w^{m−1}·f(edge + w^m)`, which is bounded as soon as `m(1 − s) ≥ 1`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Gauss–Legendre order used on every panel.
pub const ORDER: usize = 10;

/// Nodes and weights on `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `n`-point rule by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    GaussLegendre { nodes, weights }
}

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

/// Substitution exponent making `dist^{−s}` bounded.
pub fn power_for(s: f64) -> u32 {
    (1.0 / (1.0 - s) - 1e-9).ceil().max(2.0) as u32
}

/// A node of the edge-substituted rule, located by its distance to the
/// nearer endpoint so that callers can resolve offsets below the spacing
/// of floating-point angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeNode {
    /// Measured from `lo` (true) or from `hi` (false).
    pub from_lo: bool,
    pub offset: f64,
    pub weight: f64,
}

impl EdgeNode {
    pub fn theta(&self, lo: f64, hi: f64) -> f64 {
        if self.from_lo {
            lo + self.offset
        } else {
            hi - self.offset
        }
    }
}

/// Nodes for `∫_lo^hi` with power substitution of exponent `m` at both
/// ends and `panels` panels per half.
pub fn edge_offsets(lo: f64, hi: f64, m: u32, panels: usize) -> Vec<EdgeNode> {
    let mut out = Vec::with_capacity(2 * panels * ORDER);
    if hi <= lo {
        return out;
    }
    let gl = rule();
    let half = 0.5 * (hi - lo);
    let wmax = half.powf(1.0 / m as f64);
    let h = wmax / panels as f64;
    for from_lo in [true, false] {
        for p in 0..panels {
            let a = p as f64 * h;
            for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
                let w = a + 0.5 * h * (x + 1.0);
                let jac = m as f64 * w.powi(m as i32 - 1);
                out.push(EdgeNode {
                    from_lo,
                    offset: w.powi(m as i32),
                    weight: 0.5 * h * wt * jac,
                });
            }
        }
    }
    out
}

/// Quadrature nodes `(θ, weight)` of [`edge_offsets`].
pub fn edge_nodes(lo: f64, hi: f64, m: u32, panels: usize) -> Vec<(f64, f64)> {
    edge_offsets(lo, hi, m, panels)
        .into_iter()
        .map(|n| (n.theta(lo, hi), n.weight))
        .collect()
}

pub fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, m: u32, panels: usize) -> f64 {
    integrate_offsets(|n| f(n.theta(lo, hi)), lo, hi, m, panels)
}

/// Like [`integrate`], with the integrand receiving the node itself.
pub fn integrate_offsets(f: impl Fn(&EdgeNode) -> f64, lo: f64, hi: f64, m: u32, panels: usize) -> f64 {
    edge_offsets(lo, hi, m, panels)
        .iter()
        .filter(|n| n.weight > 0.0)
        .map(|n| n.weight * f(n))
        .sum()
}

/// A quadrature value with the difference to the half-resolution value as
/// error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

pub fn integrate_with_error(f: impl Fn(f64) -> f64, lo: f64, hi: f64, m: u32, panels: usize) -> Estimate {
    integrate_offsets_with_error(|n| f(n.theta(lo, hi)), lo, hi, m, panels)
}

pub fn integrate_offsets_with_error(
    f: impl Fn(&EdgeNode) -> f64,
    lo: f64,
    hi: f64,
    m: u32,
    panels: usize,
) -> Estimate {
    let coarse = integrate_offsets(&f, lo, hi, m, panels);
    let fine = integrate_offsets(&f, lo, hi, m, 2 * panels);
    Estimate {
        value: fine,
        error: (fine - coarse).abs(),
    }
}
