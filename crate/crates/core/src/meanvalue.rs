//! Mean-value operators on Euclidean balls: the measure pair (mu on the
//! sphere, nu on the ball) realizing the representation formula
//! u(x) = M(u)(x) - N(Lu)(x) for the classical Laplacian, plus the
//! right-invariant mass identity for the sphere operator M.
//!
//! Only the Laplacian/ball family is instantiated; the API takes measure
//! pairs as data so other families can plug in.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)] // f64 math comes from the trait under no_std
use num_traits::Float;

use crate::group::{Family, GroupLaw};
use crate::operator::SecondOrderOperator;
use crate::quad::{tensor_integrate_composite, GaussLegendre};
use crate::symbolic::{CompiledExpr, Expr};

#[derive(Debug, Clone, PartialEq)]
pub enum MeanValueError {
    /// The measure family is only instantiated for the Laplacian on
    /// Euclidean balls with an abelian translation structure.
    NotInstantiated,
    SupportViolation,
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for MeanValueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanValueError::NotInstantiated => write!(
                f,
                "representation measures are instantiated only for the Laplacian on balls"
            ),
            MeanValueError::SupportViolation => {
                write!(f, "support of u is not contained in the truncated box")
            }
            MeanValueError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {}, got {}", expected, got)
            }
        }
    }
}

impl core::error::Error for MeanValueError {}

/// Quadrature resolution for the ball measures.
#[derive(Debug, Clone, Copy)]
pub struct BallQuadrature {
    /// trapezoid nodes on the circle (n = 2)
    pub circle_nodes: usize,
    /// Gauss order in cos(theta) and half the azimuthal count (n = 3)
    pub polar_order: usize,
    /// Gauss order per radial panel
    pub radial_order: usize,
    /// geometrically shrinking radial panels toward the center
    pub radial_panels: usize,
}

impl Default for BallQuadrature {
    fn default() -> Self {
        BallQuadrature {
            circle_nodes: 256,
            polar_order: 16,
            radial_order: 12,
            radial_panels: 40,
        }
    }
}

/// Discrete measures (mu, nu) on the sphere and ball of radius r centered
/// at the origin (the group identity).
#[derive(Debug, Clone)]
pub struct MeasurePair {
    pub dim: usize,
    pub radius: f64,
    /// sphere nodes and weights; weights sum to exactly 1
    pub boundary: Vec<(Vec<f64>, f64)>,
    /// ball nodes and weights with the Green density folded in
    pub volume: Vec<(Vec<f64>, f64)>,
    /// declared quadrature method
    pub note: String,
}

impl MeasurePair {
    pub fn mu_mass(&self) -> f64 {
        self.boundary.iter().map(|(_, w)| w).sum()
    }

    pub fn nu_mass(&self) -> f64 {
        self.volume.iter().map(|(_, w)| w).sum()
    }
}

/// Unit-sphere nodes with weights summing to 1.
fn unit_sphere_nodes(n: usize, quad: &BallQuadrature) -> Vec<(Vec<f64>, f64)> {
    match n {
        1 => vec![(vec![1.0], 0.5), (vec![-1.0], 0.5)],
        2 => {
            let m = quad.circle_nodes;
            (0..m)
                .map(|k| {
                    let theta = 2.0 * core::f64::consts::PI * k as f64 / m as f64;
                    (vec![theta.cos(), theta.sin()], 1.0 / m as f64)
                })
                .collect()
        }
        3 => {
            // product Gauss: Gauss-Legendre in cos(theta), uniform azimuth
            let rule = GaussLegendre::new(quad.polar_order);
            let naz = 2 * quad.polar_order;
            let mut nodes = Vec::with_capacity(quad.polar_order * naz);
            for (&c, &w) in rule.nodes.iter().zip(&rule.weights) {
                let s = (1.0 - c * c).sqrt();
                for k in 0..naz {
                    let phi = 2.0 * core::f64::consts::PI * (k as f64 + 0.5) / naz as f64;
                    nodes.push((
                        vec![s * phi.cos(), s * phi.sin(), c],
                        w / 2.0 / naz as f64,
                    ));
                }
            }
            nodes
        }
        _ => panic!("sphere quadrature implemented for n <= 3"),
    }
}

/// Surface area of the unit sphere in R^n (counting measure 2 for n = 1).
fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * core::f64::consts::PI,
        3 => 4.0 * core::f64::consts::PI,
        _ => panic!("sphere area implemented for n <= 3"),
    }
}

/// Green function of the ball of radius r at its center, as a radial
/// density.
fn green_density(n: usize, r: f64, rho: f64) -> f64 {
    match n {
        1 => 0.5 * (r - rho),
        2 => (r / rho).ln() / (2.0 * core::f64::consts::PI),
        3 => (1.0 / rho - 1.0 / r) / (4.0 * core::f64::consts::PI),
        _ => panic!("green density implemented for n <= 3"),
    }
}

/// Harmonic measure (uniform on the sphere, unit mass) and Green measure
/// of the ball at its center, as quadrature-ready node lists.
pub fn laplacian_ball_measures(n: usize, r: f64, quad: &BallQuadrature) -> MeasurePair {
    assert!(n >= 1 && r > 0.0);
    let sphere = unit_sphere_nodes(n, quad);
    // normalize exactly against floating accumulation
    let total: f64 = sphere.iter().map(|(_, w)| w).sum();
    let boundary: Vec<(Vec<f64>, f64)> = sphere
        .iter()
        .map(|(sigma, w)| (sigma.iter().map(|s| s * r).collect(), w / total))
        .collect();

    // radial panels shrink geometrically toward the center to absorb the
    // mild singularity of the Green density at the origin (n >= 2)
    let rule = GaussLegendre::new(quad.radial_order);
    let mut volume = Vec::new();
    let mut hi = r;
    for panel in 0..quad.radial_panels {
        let lo = if panel + 1 == quad.radial_panels { 0.0 } else { hi * 0.5 };
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (&xi, &wq) in rule.nodes.iter().zip(&rule.weights) {
            let rho = mid + half * xi;
            if rho <= 0.0 {
                continue;
            }
            let radial_w =
                wq * half * green_density(n, r, rho) * rho.powi(n as i32 - 1) * sphere_area(n);
            for (sigma, ws) in &sphere {
                volume.push((
                    sigma.iter().map(|s| s * rho).collect(),
                    radial_w * ws / total,
                ));
            }
        }
        hi = lo;
        if hi == 0.0 {
            break;
        }
    }
    let note = match n {
        1 => String::from("mu: two-point; nu: Gauss-Legendre radial panels"),
        2 => format!(
            "mu: {}-node trapezoid circle; nu: {} geometric radial panels x Gauss {}",
            quad.circle_nodes, quad.radial_panels, quad.radial_order
        ),
        _ => format!(
            "mu: product Gauss {}x{} sphere; nu: {} geometric radial panels x Gauss {}",
            quad.polar_order,
            2 * quad.polar_order,
            quad.radial_panels,
            quad.radial_order
        ),
    };
    MeasurePair { dim: n, radius: r, boundary, volume, note }
}

/// M(u)(x) = integral over the sphere of u(x . y) d mu(y).
pub fn m_op(u: &Expr, group: &GroupLaw, mp: &MeasurePair, x: &[f64]) -> f64 {
    m_op_fn(&|p| u.eval(p), group, mp, x)
}

/// M for black-box integrands (compactly supported cutoffs and the like).
pub fn m_op_fn(
    u: &dyn Fn(&[f64]) -> f64,
    group: &GroupLaw,
    mp: &MeasurePair,
    x: &[f64],
) -> f64 {
    mp.boundary
        .iter()
        .map(|(y, w)| w * u(&group.product_eval(x, y)))
        .sum()
}

/// N(f)(x) = integral over the closed ball of f(x . y) d nu(y).
pub fn n_op(f: &Expr, group: &GroupLaw, mp: &MeasurePair, x: &[f64]) -> f64 {
    n_op_fn(&|p| f.eval(p), group, mp, x)
}

pub fn n_op_fn(
    f: &dyn Fn(&[f64]) -> f64,
    group: &GroupLaw,
    mp: &MeasurePair,
    x: &[f64],
) -> f64 {
    mp.volume
        .iter()
        .map(|(y, w)| w * f(&group.product_eval(x, y)))
        .sum()
}

/// Is the operator the Laplacian (identity principal part, no drift)?
fn is_laplacian(op: &SecondOrderOperator) -> bool {
    let n = op.dim();
    for i in 0..n {
        for j in 0..n {
            let a = op.a(i, j);
            if i == j && !a.is_one() {
                return false;
            }
            if i != j && !a.is_zero() {
                return false;
            }
        }
    }
    (0..n).all(|j| op.b(j).is_zero())
}

/// Max over the probe points of |u(x) - M(u)(x) + N(Lu)(x)|; only the
/// Laplacian/ball/abelian instantiation carries validated measures.
pub fn representation_residual(
    u: &Expr,
    op: &SecondOrderOperator,
    group: &GroupLaw,
    mp: &MeasurePair,
    xs: &[Vec<f64>],
) -> Result<f64, MeanValueError> {
    if !is_laplacian(op) || !matches!(group.family(), Family::Abelian(_)) {
        return Err(MeanValueError::NotInstantiated);
    }
    if group.dim() != mp.dim {
        return Err(MeanValueError::DimensionMismatch { expected: mp.dim, got: group.dim() });
    }
    let lu = op.apply(u).map_err(|_| MeanValueError::DimensionMismatch {
        expected: op.dim(),
        got: u.max_var().map(|v| v + 1).unwrap_or(0),
    })?;
    let mut worst = 0.0f64;
    for x in xs {
        let m = m_op(u, group, mp, x);
        let nn = n_op(&lu, group, mp, x);
        worst = worst.max((u.eval(x) - m + nn).abs());
    }
    Ok(worst)
}

/// An expression cut off outside an axis-aligned support box.
#[derive(Debug, Clone)]
pub struct SupportedExpr {
    pub expr: Expr,
    pub support: Vec<(f64, f64)>,
}

impl SupportedExpr {
    pub fn eval(&self, p: &[f64]) -> f64 {
        for (v, (lo, hi)) in p.iter().zip(&self.support) {
            if v < lo || v > hi {
                return 0.0;
            }
        }
        self.expr.eval(p)
    }
}

/// Quadrature resolution for the mass identity integrals.
#[derive(Debug, Clone, Copy)]
pub struct MassIdentityConfig {
    pub panels: usize,
    pub order: usize,
}

impl Default for MassIdentityConfig {
    fn default() -> Self {
        MassIdentityConfig { panels: 16, order: 6 }
    }
}

/// |int over [-R,R]^dim of M(u) dH - int of u dH| for a compactly
/// supported u; the mass identity of the right-invariant measure. u must
/// be supported in [-R+r, R-r]^dim so the sphere sweep never leaves the
/// box.
///
/// The sphere average and the box quadrature are interchanged: for each
/// boundary node y the translated integrand u(x.y) w(x) is compiled once
/// (the translation components are expressions in x with y substituted)
/// and integrated on the composite grid, so the per-point cost is a flat
/// stack-program evaluation.
pub fn mass_identity_residual(
    u: &SupportedExpr,
    group: &GroupLaw,
    mp: &MeasurePair,
    r_box: f64,
    config: &MassIdentityConfig,
) -> Result<f64, MeanValueError> {
    let dim = group.dim();
    if u.support.len() != dim || mp.dim != dim {
        return Err(MeanValueError::DimensionMismatch {
            expected: dim,
            got: u.support.len(),
        });
    }
    let margin = r_box - mp.radius;
    for &(lo, hi) in &u.support {
        if lo < -margin || hi > margin {
            return Err(MeanValueError::SupportViolation);
        }
    }
    let w = group
        .right_invariant_density()
        .map_err(|_| MeanValueError::NotInstantiated)?
        .w;
    let wc = CompiledExpr::new(&w);
    let uc = CompiledExpr::new(&u.expr);
    // Every integrand vanishes outside the preimages of the support under
    // the node translations; restricting the quadrature to their verified
    // bounding box is exact and concentrates the panels where the bump
    // actually varies.
    let bounds = active_box(u, group, mp, r_box);
    let mut stack = Vec::new();
    let mut wstack = Vec::new();
    let inside = |p: &[f64], support: &[(f64, f64)]| {
        p.iter()
            .zip(support)
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    };
    let rhs = tensor_integrate_composite(&bounds, config.panels, config.order, |x| {
        if inside(x, &u.support) {
            uc.eval_with(x, &mut stack) * wc.eval_with(x, &mut wstack)
        } else {
            0.0
        }
    });
    let mut lhs = 0.0;
    let mut point = vec![0.0; dim];
    for (y, mu_w) in &mp.boundary {
        let tau: Vec<CompiledExpr> = group
            .translation_exprs_f64(crate::group::Side::Right, y)
            .iter()
            .map(CompiledExpr::new)
            .collect();
        let integral =
            tensor_integrate_composite(&bounds, config.panels, config.order, |x| {
                for (k, comp) in tau.iter().enumerate() {
                    point[k] = comp.eval_with(x, &mut stack);
                }
                if inside(&point, &u.support) {
                    uc.eval_with(&point, &mut stack) * wc.eval_with(x, &mut wstack)
                } else {
                    0.0
                }
            });
        lhs += mu_w * integral;
    }
    Ok((lhs - rhs).abs())
}

/// Bounding box of the union of the support with the preimages of the
/// support under all boundary-node right translations, clipped to
/// [-R, R]^dim. Falls back to the full box when the inverse map is
/// unavailable or when verification sampling finds activity outside.
fn active_box(
    u: &SupportedExpr,
    group: &GroupLaw,
    mp: &MeasurePair,
    r_box: f64,
) -> Vec<(f64, f64)> {
    let dim = group.dim();
    let full = vec![(-r_box, r_box); dim];
    let mut lo: Vec<f64> = u.support.iter().map(|s| s.0).collect();
    let mut hi: Vec<f64> = u.support.iter().map(|s| s.1).collect();
    // 3-per-axis lattice over the support box
    let lattice_count = 3usize.pow(dim as u32);
    for (y, _) in &mp.boundary {
        let yinv = match group.inverse_eval(y) {
            Some(v) => v,
            None => return full,
        };
        for idx in 0..lattice_count {
            let mut z = vec![0.0; dim];
            let mut rem = idx;
            for (d, s) in u.support.iter().enumerate() {
                let frac = (rem % 3) as f64 / 2.0;
                rem /= 3;
                z[d] = s.0 + frac * (s.1 - s.0);
            }
            let x = group.product_eval(&z, &yinv);
            for d in 0..dim {
                lo[d] = lo[d].min(x[d]);
                hi[d] = hi[d].max(x[d]);
            }
        }
    }
    // safety margin, then clip
    let mut bbox = Vec::with_capacity(dim);
    for d in 0..dim {
        let pad = 0.15 * (hi[d] - lo[d]).max(0.5);
        bbox.push(((lo[d] - pad).max(-r_box), (hi[d] + pad).min(r_box)));
    }
    // verification: sampled points outside the bbox must be inactive for
    // every node translation
    let spec = crate::sample::SampleSpec::new(128, -r_box, r_box, 17);
    for p in spec.points(dim) {
        let outside = p
            .iter()
            .zip(&bbox)
            .any(|(v, (lo, hi))| *v < *lo || *v > *hi);
        if !outside {
            continue;
        }
        for (y, _) in &mp.boundary {
            let z = group.product_eval(&p, y);
            let active = z
                .iter()
                .zip(&u.support)
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi);
            if active {
                return full;
            }
        }
    }
    bbox
}
