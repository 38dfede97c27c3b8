//! Vector fields with symbolic coefficients, Lie brackets, left-invariant
//! frames, and the bracket-generating rank test used as the executable
//! proxy for hypoellipticity.
//!
//! The rank test is a sufficient criterion: reports say "verified up to
//! depth d" or "rank r achieved", never "hypoelliptic: no".

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_rational::BigRational;

use crate::group::{GroupLaw, Side};
use crate::linalg::Matrix;
use crate::ratmat::RatMatrix;
use crate::sample::SampleSpec;
use crate::symbolic::{equal_on_samples, Expr};

/// First-order operator sum_i c_i(x) d/dx_i.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub coeffs: Vec<Expr>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldError {
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::DimensionMismatch { expected, got } => {
                write!(f, "field dimension mismatch: expected {}, got {}", expected, got)
            }
        }
    }
}

impl core::error::Error for FieldError {}

impl VectorField {
    pub fn new(coeffs: Vec<Expr>, label: impl Into<String>) -> Self {
        VectorField { coeffs, label: label.into() }
    }

    /// The coordinate field d/dx_i in `dim` variables.
    pub fn coordinate(dim: usize, i: usize, label: impl Into<String>) -> Self {
        let mut coeffs = vec![Expr::zero(); dim];
        coeffs[i] = Expr::one();
        VectorField { coeffs, label: label.into() }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero_on_samples(&self, spec: &SampleSpec) -> bool {
        self.coeffs
            .iter()
            .all(|c| equal_on_samples(c, &Expr::zero(), self.dim(), spec))
    }

    pub fn scale(&self, s: Expr) -> VectorField {
        VectorField {
            coeffs: self.coeffs.iter().map(|c| s.clone() * c.clone()).collect(),
            label: format!("({})*{}", "scaled", self.label),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
            label: format!("{}+{}", self.label, other.label),
        }
    }

    pub fn neg(&self) -> VectorField {
        VectorField {
            coeffs: self.coeffs.iter().map(|c| c.clone().neg()).collect(),
            label: format!("-{}", self.label),
        }
    }

    /// Evaluate the coefficient vector at a point.
    pub fn eval(&self, point: &[f64]) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.eval(point)).collect()
    }

    pub fn eval_exact(&self, point: &[BigRational]) -> Option<Vec<BigRational>> {
        self.coeffs.iter().map(|c| c.eval_exact(point)).collect()
    }
}

/// Xu = sum_i c_i du/dx_i.
pub fn apply_field(x: &VectorField, u: &Expr) -> Result<Expr, FieldError> {
    let dim = x.dim();
    if let Some(v) = u.max_var() {
        if v >= dim {
            return Err(FieldError::DimensionMismatch { expected: dim, got: v + 1 });
        }
    }
    Ok(Expr::sum(
        x.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.clone() * u.differentiate(i))
            .collect(),
    ))
}

/// Coefficients of the commutator XY - YX as a first-order operator:
/// [X,Y]_k = sum_j (X_j dY_k/dx_j - Y_j dX_k/dx_j).
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, FieldError> {
    if x.dim() != y.dim() {
        return Err(FieldError::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    let dim = x.dim();
    let mut coeffs = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut terms = Vec::new();
        for j in 0..dim {
            terms.push(x.coeffs[j].clone() * y.coeffs[k].differentiate(j));
            terms.push((y.coeffs[j].clone() * x.coeffs[k].differentiate(j)).neg());
        }
        coeffs.push(Expr::sum(terms));
    }
    Ok(VectorField { coeffs, label: format!("[{},{}]", x.label, y.label) })
}

/// The left-invariant frame of a group: columns of the left-translation
/// Jacobian at the identity, as symbolic-coefficient fields.
pub fn left_invariant_frame(g: &GroupLaw) -> Vec<VectorField> {
    let jac = g.jacobian_at_identity_symbolic(Side::Left);
    let n = g.dim();
    let mut frame = Vec::with_capacity(n);
    for j in 0..n {
        let coeffs: Vec<Expr> = (0..n).map(|k| jac[k][j].clone()).collect();
        // label coordinate fields by their variable, others generically
        let label = match single_coordinate(&coeffs) {
            Some(k) => format!("d{}", g.vars().name(k)),
            None => format!("X{}", j),
        };
        frame.push(VectorField { coeffs, label });
    }
    frame
}

fn single_coordinate(coeffs: &[Expr]) -> Option<usize> {
    let mut found = None;
    for (k, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        if c.is_one() && found.is_none() {
            found = Some(k);
        } else {
            return None;
        }
    }
    found
}

/// Certificate from the bracket-generating rank test.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BracketCertificate {
    /// Best rank achieved by the bracket closure at the point.
    pub achieved_rank: usize,
    /// Depth at which that rank was first achieved (0 = input fields).
    pub depth: usize,
    /// Bracket words whose evaluations span the achieved rank.
    pub witnesses: Vec<String>,
    /// Whether the rank was certified by exact rational elimination.
    pub exact: bool,
    /// Ambient dimension, for "full rank" readings.
    pub dim: usize,
}

impl BracketCertificate {
    pub fn full_rank(&self) -> bool {
        self.achieved_rank == self.dim
    }
}

/// Breadth-first bracket closure up to `max_depth`, evaluated at `point`;
/// rank by exact fraction-free elimination when every coefficient has an
/// exact value at the point, singular-tolerance QR otherwise.
pub fn hormander_rank(
    fields: &[VectorField],
    point: &[BigRational],
    max_depth: usize,
) -> BracketCertificate {
    assert!(!fields.is_empty(), "need at least one field");
    let dim = fields[0].dim();
    assert!(fields.iter().all(|f| f.dim() == dim), "mixed dimensions");
    assert_eq!(point.len(), dim, "point dimension mismatch");

    let fp_spec = SampleSpec::new(8, -2.0, 2.0, 0x5eed);
    let fp_points = fp_spec.points(dim);
    let fingerprint = |f: &VectorField| -> Vec<f64> {
        fp_points.iter().flat_map(|p| f.eval(p)).collect()
    };
    let close = |a: &[f64], b: &[f64]| -> bool {
        a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs())))
    };

    let eq_spec = SampleSpec::default();
    let mut pool: Vec<(VectorField, Vec<f64>, usize)> = Vec::new(); // field, fp, depth
    let push_unique = |pool: &mut Vec<(VectorField, Vec<f64>, usize)>,
                           f: VectorField,
                           depth: usize|
     -> bool {
        let fp = fingerprint(&f);
        if fp.iter().all(|v| v.abs() <= 1e-9) && f.is_zero_on_samples(&eq_spec) {
            return false;
        }
        for (existing, efp, _) in pool.iter() {
            if close(&fp, efp) {
                let same = existing
                    .coeffs
                    .iter()
                    .zip(&f.coeffs)
                    .all(|(a, b)| equal_on_samples(a, b, dim, &eq_spec));
                if same {
                    return false;
                }
            }
        }
        pool.push((f, fp, depth));
        true
    };

    for f in fields {
        push_unique(&mut pool, f.clone(), 0);
    }

    let mut best_rank = 0usize;
    let mut best_depth = 0usize;
    let mut witnesses: Vec<String> = Vec::new();

    let mut generation_start = 0usize;
    for depth in 0..=max_depth {
        if depth > 0 {
            let prev: Vec<VectorField> = pool[generation_start..]
                .iter()
                .map(|(f, _, _)| f.clone())
                .collect();
            generation_start = pool.len();
            if prev.is_empty() {
                break;
            }
            for base in fields {
                for w in &prev {
                    if let Ok(br) = lie_bracket(base, w) {
                        push_unique(&mut pool, br, depth);
                    }
                }
            }
            // nothing new at this depth: the closure is stable
            if pool.len() == generation_start && depth > 0 {
                // still need the rank bookkeeping below for this depth
            }
        } else {
            generation_start = 0;
        }

        let active: Vec<&VectorField> = pool
            .iter()
            .filter(|(_, _, d)| *d <= depth)
            .map(|(f, _, _)| f)
            .collect();
        let (rank, wit, exact) = rank_with_witnesses(&active, point, dim);
        if rank > best_rank {
            best_rank = rank;
            best_depth = depth;
            witnesses = wit;
        }
        if best_rank == dim {
            return BracketCertificate {
                achieved_rank: best_rank,
                depth: best_depth,
                witnesses,
                exact,
                dim,
            };
        }
    }
    let active: Vec<&VectorField> = pool.iter().map(|(f, _, _)| f).collect();
    let (_, _, exact) = rank_with_witnesses(&active, point, dim);
    BracketCertificate { achieved_rank: best_rank, depth: best_depth, witnesses, exact, dim }
}

/// Greedy independent subset in generation order; returns (rank, labels,
/// exact?).
fn rank_with_witnesses(
    fields: &[&VectorField],
    point: &[BigRational],
    dim: usize,
) -> (usize, Vec<String>, bool) {
    let exact_rows: Option<Vec<Vec<BigRational>>> =
        fields.iter().map(|f| f.eval_exact(point)).collect();
    match exact_rows {
        Some(rows) => {
            let mut chosen: Vec<usize> = Vec::new();
            let mut rank = 0usize;
            for (i, _) in rows.iter().enumerate() {
                let mut m = RatMatrix::zeros(chosen.len() + 1, dim);
                for (r, &c) in chosen.iter().enumerate() {
                    for j in 0..dim {
                        m[(r, j)] = rows[c][j].clone();
                    }
                }
                for j in 0..dim {
                    m[(chosen.len(), j)] = rows[i][j].clone();
                }
                if m.rank() > rank {
                    rank += 1;
                    chosen.push(i);
                    if rank == dim {
                        break;
                    }
                }
            }
            let wit = chosen.iter().map(|&i| fields[i].label.clone()).collect();
            (rank, wit, true)
        }
        None => {
            let pf: Vec<f64> = point.iter().map(crate::scalar::rational_to_f64).collect();
            let mut chosen: Vec<usize> = Vec::new();
            let mut rank = 0usize;
            let rows: Vec<Vec<f64>> = fields.iter().map(|f| f.eval(&pf)).collect();
            for (i, _) in rows.iter().enumerate() {
                let mut stacked: Vec<Vec<f64>> =
                    chosen.iter().map(|&c| rows[c].clone()).collect();
                stacked.push(rows[i].clone());
                let m = Matrix::from_rows(&stacked);
                if m.rank(1e-9) > rank {
                    rank += 1;
                    chosen.push(i);
                    if rank == dim {
                        break;
                    }
                }
            }
            let wit = chosen.iter().map(|&i| fields[i].label.clone()).collect();
            (rank, wit, false)
        }
    }
}
