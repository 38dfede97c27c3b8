//! Gauss-Legendre quadrature: 1-D rules, tensor products over boxes,
//! panel-composite rules, and an adaptive driver for matrix integrands.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // f64 math comes from the trait under no_std
use num_traits::Float;


/// A 1-D Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on the Legendre polynomial.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess.
            let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
            let (_, d) = legendre_and_derivative(n, 0.0);
            weights[n / 2] = 2.0 / (d * d);
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product Gauss-Legendre over an axis-aligned box.
pub fn tensor_integrate<F: FnMut(&[f64]) -> f64>(
    bounds: &[(f64, f64)],
    order: usize,
    mut f: F,
) -> f64 {
    let dim = bounds.len();
    if dim == 0 {
        return 0.0;
    }
    let rule = GaussLegendre::new(order);
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut total = 0.0;
    let scale: f64 = bounds.iter().map(|&(a, b)| 0.5 * (b - a)).product();
    'outer: loop {
        let mut w = 1.0;
        for (d, &i) in idx.iter().enumerate() {
            let (a, b) = bounds[d];
            point[d] = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[i];
            w *= rule.weights[i];
        }
        total += w * f(&point);
        for d in 0..dim {
            idx[d] += 1;
            if idx[d] < order {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    total * scale
}

/// Tensor quadrature where each axis is split into uniform panels; the
/// per-panel rule stays low-order. Handles mildly non-smooth integrands
/// (kinks from compactly supported bumps) much better than one big rule.
pub fn tensor_integrate_composite<F: FnMut(&[f64]) -> f64>(
    bounds: &[(f64, f64)],
    panels: usize,
    order: usize,
    mut f: F,
) -> f64 {
    let dim = bounds.len();
    if dim == 0 {
        return 0.0;
    }
    let rule = GaussLegendre::new(order);
    // Per-axis flattened node/weight lists over all panels.
    let mut axis_nodes: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let mut axis_weights: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for &(a, b) in bounds {
        let h = (b - a) / panels as f64;
        let mut xs = Vec::with_capacity(panels * order);
        let mut ws = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                xs.push(mid + 0.5 * h * x);
                ws.push(0.5 * h * w);
            }
        }
        axis_nodes.push(xs);
        axis_weights.push(ws);
    }
    let per_axis = panels * order;
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut total = 0.0;
    'outer: loop {
        let mut w = 1.0;
        for d in 0..dim {
            point[d] = axis_nodes[d][idx[d]];
            w *= axis_weights[d][idx[d]];
        }
        total += w * f(&point);
        for d in 0..dim {
            idx[d] += 1;
            if idx[d] < per_axis {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    total
}

/// 1-D adaptive Gauss-Legendre on vector-valued integrands (used for the
/// covariance integral): bisects panels until the order-doubling estimate
/// meets the tolerance, entrywise.
pub fn adaptive_vector_integrate<F: FnMut(f64, &mut [f64])>(
    a: f64,
    b: f64,
    len: usize,
    rel_tol: f64,
    f: &mut F,
) -> Vec<f64> {
    let lo = GaussLegendre::new(8);
    let hi = GaussLegendre::new(16);
    let mut out = vec![0.0; len];
    let mut stack = vec![(a, b, 0usize)];
    let mut buf = vec![0.0; len];
    while let Some((a, b, depth)) = stack.pop() {
        let coarse = panel_vec(&lo, a, b, len, &mut buf, f);
        let fine = panel_vec(&hi, a, b, len, &mut buf, f);
        let scale = fine.iter().fold(1e-300, |m, v| m.max(v.abs()));
        let err = coarse
            .iter()
            .zip(&fine)
            .fold(0.0f64, |m, (c, f)| m.max((c - f).abs()));
        if err <= rel_tol * scale || depth >= 24 {
            for (o, v) in out.iter_mut().zip(&fine) {
                *o += v;
            }
        } else {
            let mid = 0.5 * (a + b);
            stack.push((a, mid, depth + 1));
            stack.push((mid, b, depth + 1));
        }
    }
    out
}

fn panel_vec<F: FnMut(f64, &mut [f64])>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    len: usize,
    buf: &mut [f64],
    f: &mut F,
) -> Vec<f64> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = vec![0.0; len];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        f(mid + half * x, buf);
        for (a, v) in acc.iter_mut().zip(buf.iter()) {
            *a += w * v;
        }
    }
    for v in acc.iter_mut() {
        *v *= half;
    }
    acc
}
