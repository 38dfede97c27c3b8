//! Weighted Lp scans over exhausting boxes, the convexity gadgets behind
//! the Liouville arguments, and a registry of scripted demonstrations
//! whose reports must always come out "consistent": the theorems are
//! proven, so an inconsistent report means a toolkit bug and fails CI.
//!
//! Divergence is a reported trend (growth ratio between the last two
//! radii), never a mathematical claim; reports phrase it as "no evidence
//! of finiteness".

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Zero;
#[allow(unused_imports)] // f64 math comes from the trait under no_std
use num_traits::Float;

use crate::fields::{hormander_rank, BracketCertificate, VectorField};
use crate::group::GroupLaw;
use crate::kolmogorov::KolmogorovSpec;
use crate::operator::{builtin, from_frame, ChainFn, Classification, SecondOrderOperator};
use crate::quad::tensor_integrate;
use crate::ratmat::RatMatrix;
use crate::sample::SampleSpec;
use crate::scalar::Scalar;
use crate::symbolic::{CompiledExpr, Expr, VarSet};

#[derive(Debug, Clone, PartialEq)]
pub enum LiouvilleError {
    UnknownScenario(String),
    ExponentOutOfRange { kind: GadgetKind, p: f64 },
}

impl fmt::Display for LiouvilleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiouvilleError::UnknownScenario(s) => write!(f, "unknown scenario '{}'", s),
            LiouvilleError::ExponentOutOfRange { kind, p } => {
                write!(f, "exponent p = {} outside the legal range for {:?}", p, kind)
            }
        }
    }
}

impl core::error::Error for LiouvilleError {}

/// Growth classification of the partial integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScanTrend {
    /// growth ratio above the divergence threshold
    NoEvidenceOfFiniteness,
    /// partial integrals flat at desk scale
    ApparentlyBounded,
}

/// Ratio threshold between the last two radii that counts as growth.
pub const DIVERGENCE_RATIO: f64 = 1.1;

/// Partial integrals of |u|^p against a weight over [-R, R]^dim.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LpScan {
    pub label: String,
    pub p: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// order-doubling error estimates, one per radius
    pub error_estimates: Vec<f64>,
    /// false where the estimate exceeds 1% of the value
    pub reliable: Vec<bool>,
    pub growth_ratio: f64,
    pub trend: ScanTrend,
}

/// Scan input: a ring expression or a black-box integrand (some natural
/// test functions, like radial Gaussians, live outside the ring).
pub enum Integrand<'a> {
    Expr(&'a Expr),
    Func { f: &'a dyn Fn(&[f64]) -> f64, label: &'a str },
}

/// Partial weighted Lp integrals by tensor quadrature at two orders.
pub fn lp_partial_scan(
    u: &Integrand<'_>,
    p: f64,
    weight: &Expr,
    dim: usize,
    radii: &[f64],
    order: usize,
) -> LpScan {
    assert!(p > 0.0, "p must be positive");
    assert!(radii.windows(2).all(|w| w[0] < w[1]), "radii must increase");
    let wc = CompiledExpr::new(weight);
    let (label, eval): (String, alloc::boxed::Box<dyn Fn(&[f64]) -> f64 + '_>) = match u {
        Integrand::Expr(e) => {
            let c = CompiledExpr::new(e);
            (
                crate::symbolic::expr_to_string(e, &VarSet::spatial(dim)),
                alloc::boxed::Box::new(move |x: &[f64]| c.eval(x)),
            )
        }
        Integrand::Func { f, label } => {
            (label.to_string(), alloc::boxed::Box::new(move |x: &[f64]| f(x)))
        }
    };
    let mut values = Vec::with_capacity(radii.len());
    let mut error_estimates = Vec::with_capacity(radii.len());
    let mut reliable = Vec::with_capacity(radii.len());
    for &r in radii {
        let bounds = vec![(-r, r); dim];
        let integrand = |x: &[f64]| eval(x).abs().powf(p) * wc.eval(x);
        let coarse = tensor_integrate(&bounds, order, integrand);
        let fine = tensor_integrate(&bounds, order + 8, integrand);
        let est = (fine - coarse).abs();
        values.push(fine);
        error_estimates.push(est);
        reliable.push(est <= 0.01 * fine.abs().max(1e-300));
    }
    let growth_ratio = if values.len() >= 2 {
        let last = values[values.len() - 1];
        let prev = values[values.len() - 2];
        if prev > 0.0 {
            last / prev
        } else {
            f64::INFINITY
        }
    } else {
        1.0
    };
    let trend = if growth_ratio > DIVERGENCE_RATIO {
        ScanTrend::NoEvidenceOfFiniteness
    } else {
        ScanTrend::ApparentlyBounded
    };
    LpScan {
        label,
        p,
        radii: radii.to_vec(),
        values,
        error_estimates,
        reliable,
        growth_ratio,
        trend,
    }
}

/// Default exhausting radii.
pub fn default_radii() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0, 16.0]
}

/// Which convexity gadget family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GadgetKind {
    /// F(t) = (sqrt(1+t^2) - 1)^p, p >= 1: C^2, 0 <= F <= |t|^p, F'' > 0
    /// away from 0
    HarmonicPGe1,
    /// F(t) = (1+t)^p - 1 on t >= 0, 0 < p < 1: 0 <= F <= t^p, F'' < 0
    HarmonicPLt1,
    /// F = 0 for t <= 0, ((1+t^4)^{1/4} - 1)^p for t > 0, p >= 1:
    /// increasing, convex, C^2 across 0
    Subharmonic,
}

/// Closed-form F with two derivatives; the pieces live outside the
/// expression ring (fractional powers), so values come from stable
/// closed-form evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ConvexityGadget {
    pub kind: GadgetKind,
    pub p: f64,
}

pub fn gadget(kind: GadgetKind, p: f64) -> Result<ConvexityGadget, LiouvilleError> {
    let ok = match kind {
        GadgetKind::HarmonicPGe1 | GadgetKind::Subharmonic => p >= 1.0,
        GadgetKind::HarmonicPLt1 => p > 0.0 && p < 1.0,
    };
    if ok {
        Ok(ConvexityGadget { kind, p })
    } else {
        Err(LiouvilleError::ExponentOutOfRange { kind, p })
    }
}

impl ConvexityGadget {
    pub fn value(&self, t: f64) -> f64 {
        let p = self.p;
        match self.kind {
            GadgetKind::HarmonicPGe1 => {
                let s = (1.0 + t * t).sqrt();
                let g = t * t / (1.0 + s); // s - 1 without cancellation
                g.powf(p)
            }
            GadgetKind::HarmonicPLt1 => (1.0 + t).powf(p) - 1.0,
            GadgetKind::Subharmonic => {
                if t <= 0.0 {
                    0.0
                } else {
                    let t4 = t * t * t * t;
                    let s = (1.0 + t4).powf(0.25);
                    let g = t4 / (s * s * s + s * s + s + 1.0); // s - 1
                    g.powf(p)
                }
            }
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        let p = self.p;
        match self.kind {
            GadgetKind::HarmonicPGe1 => {
                if t == 0.0 {
                    return 0.0;
                }
                let s = (1.0 + t * t).sqrt();
                let g = t * t / (1.0 + s);
                p * g.powf(p - 1.0) * t / s
            }
            GadgetKind::HarmonicPLt1 => p * (1.0 + t).powf(p - 1.0),
            GadgetKind::Subharmonic => {
                if t <= 0.0 {
                    0.0
                } else {
                    let t4 = t * t * t * t;
                    let s = (1.0 + t4).powf(0.25);
                    let g = t4 / (s * s * s + s * s + s + 1.0);
                    p * g.powf(p - 1.0) * t * t * t / (s * s * s)
                }
            }
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        let p = self.p;
        match self.kind {
            GadgetKind::HarmonicPGe1 => {
                if t == 0.0 {
                    // limit: 1 for p = 1, 0 for p > 1
                    return if p == 1.0 { 1.0 } else { 0.0 };
                }
                let s = (1.0 + t * t).sqrt();
                let g = t * t / (1.0 + s);
                p * ((p - 1.0) * g.powf(p - 2.0) * t * t / (s * s)
                    + g.powf(p - 1.0) / (s * s * s))
            }
            GadgetKind::HarmonicPLt1 => p * (p - 1.0) * (1.0 + t).powf(p - 2.0),
            GadgetKind::Subharmonic => {
                if t <= 0.0 {
                    0.0
                } else {
                    let t4 = t * t * t * t;
                    let s = (1.0 + t4).powf(0.25);
                    let g = t4 / (s * s * s + s * s + s + 1.0);
                    p * (p - 1.0) * g.powf(p - 2.0) * t4 * t * t / s.powi(6)
                        + 3.0 * p * g.powf(p - 1.0) * t * t / s.powi(7)
                }
            }
        }
    }

    /// The kind's invariant bullet list, checked on dense samples.
    pub fn validate(&self, samples: usize) -> bool {
        let p = self.p;
        match self.kind {
            GadgetKind::HarmonicPGe1 => {
                for k in 0..samples {
                    let t = -50.0 + 100.0 * (k as f64 + 0.5) / samples as f64;
                    let f = self.value(t);
                    if !(0.0..=t.abs().powf(p) + 1e-12).contains(&f) {
                        return false;
                    }
                    if t != 0.0 && self.d2(t) <= 0.0 {
                        return false;
                    }
                    if !self.fd_consistent(t) {
                        return false;
                    }
                }
                true
            }
            GadgetKind::HarmonicPLt1 => {
                for k in 0..samples {
                    let t = 50.0 * (k as f64 + 0.5) / samples as f64;
                    let f = self.value(t);
                    if !(0.0..=t.powf(p) + 1e-12).contains(&f) {
                        return false;
                    }
                    if self.d2(t) >= 0.0 {
                        return false;
                    }
                    if !self.fd_consistent(t) {
                        return false;
                    }
                }
                true
            }
            GadgetKind::Subharmonic => {
                for k in 0..samples {
                    let t = -50.0 + 100.0 * (k as f64 + 0.5) / samples as f64;
                    let f = self.value(t);
                    if t <= 0.0 {
                        if f != 0.0 || self.d1(t) != 0.0 || self.d2(t) != 0.0 {
                            return false;
                        }
                    } else {
                        if !(0.0..=t.powf(p) + 1e-12).contains(&f) {
                            return false;
                        }
                        if self.d1(t) <= 0.0 || self.d2(t) < 0.0 {
                            return false;
                        }
                        if t > 1e-3 && !self.fd_consistent(t) {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    /// Central finite differences agree with the closed-form derivatives.
    fn fd_consistent(&self, t: f64) -> bool {
        let h = 1e-5 * (1.0 + t.abs());
        let fd1 = (self.value(t + h) - self.value(t - h)) / (2.0 * h);
        let fd2 = (self.value(t + h) - 2.0 * self.value(t) + self.value(t - h)) / (h * h);
        let scale1 = self.d1(t).abs().max(1.0);
        let scale2 = self.d2(t).abs().max(1.0);
        (fd1 - self.d1(t)).abs() <= 1e-4 * scale1 && (fd2 - self.d2(t)).abs() <= 1e-2 * scale2
    }
}

/// Closure bundle for [`ChainFn::Closed`]; keeps the borrows alive.
pub struct GadgetClosures {
    pub f: alloc::boxed::Box<dyn Fn(f64) -> f64>,
    pub d1: alloc::boxed::Box<dyn Fn(f64) -> f64>,
    pub d2: alloc::boxed::Box<dyn Fn(f64) -> f64>,
}

impl ConvexityGadget {
    pub fn closures(&self) -> GadgetClosures {
        let g1 = *self;
        let g2 = *self;
        let g3 = *self;
        GadgetClosures {
            f: alloc::boxed::Box::new(move |t| g1.value(t)),
            d1: alloc::boxed::Box::new(move |t| g2.d1(t)),
            d2: alloc::boxed::Box::new(move |t| g3.d2(t)),
        }
    }
}

impl GadgetClosures {
    pub fn chain_fn(&self) -> ChainFn<'_> {
        ChainFn::Closed { f: &self.f, d1: &self.d1, d2: &self.d2 }
    }
}

/// Demonstration verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DemoVerdict {
    Consistent,
    NegativeControl,
    Inconsistent,
}

/// One named numeric check inside a report.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub method: String,
}

/// Structured output of a scripted demonstration.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DemonstrationReport {
    pub scenario: String,
    pub description: String,
    pub checks: Vec<CheckRecord>,
    pub hormander: Vec<BracketCertificate>,
    pub classification: Option<Classification>,
    /// Lu collapsed to the literal zero expression (not just numerically)
    pub exact_symbolic_zero: bool,
    pub scans: Vec<LpScan>,
    pub verdict: DemoVerdict,
    pub statement: String,
}

/// The scenario ids the registry knows.
pub fn scenario_ids() -> &'static [&'static str] {
    &[
        "heat_counterexample",
        "kolmogorov_n1",
        "polarized_heisenberg_l2",
        "dapratolunardi",
        "companion_example",
        "constant_one_trace1",
        "laplacian_subharmonic",
    ]
}

/// Run a registered scenario.
pub fn liouville_demonstration(
    scenario: &str,
    seed: u64,
) -> Result<DemonstrationReport, LiouvilleError> {
    match scenario {
        "heat_counterexample" => Ok(heat_counterexample(seed)),
        "kolmogorov_n1" => Ok(kolmogorov_n1(seed)),
        "polarized_heisenberg_l2" => Ok(polarized_heisenberg_l2(seed)),
        "dapratolunardi" => Ok(dapratolunardi(seed)),
        "companion_example" => Ok(companion_example(seed)),
        "constant_one_trace1" => Ok(constant_one_trace1(seed)),
        "laplacian_subharmonic" => Ok(laplacian_subharmonic(seed)),
        other => Err(LiouvilleError::UnknownScenario(other.to_string())),
    }
}

struct ScenarioFrame {
    op: SecondOrderOperator,
    group: GroupLaw,
    u: Option<Expr>,
    expected_class: Option<Classification>,
    scan_ps: Vec<f64>,
    hormander_fields: Vec<VectorField>,
    description: String,
    theorem: String,
}

fn run_frame(scenario: &str, frame: ScenarioFrame, seed: u64) -> DemonstrationReport {
    let spec = SampleSpec::identity_testing(seed);
    let dim = frame.op.dim();
    let mut checks = Vec::new();

    let nd = frame.op.check_nd(&spec.points(dim));
    checks.push(CheckRecord {
        name: "nd".to_string(),
        passed: nd,
        value: if nd { 1.0 } else { 0.0 },
        tolerance: 1e-12,
        method: "max |a_ij(x)| > 1e-12 at each sampled point".to_string(),
    });

    let origin = vec![num_rational::BigRational::from_integer(0.into()); dim];
    let cert = hormander_rank(&frame.hormander_fields, &origin, dim + 2);
    checks.push(CheckRecord {
        name: "hormander".to_string(),
        passed: cert.full_rank(),
        value: cert.achieved_rank as f64,
        tolerance: dim as f64,
        method: format!("bracket closure to depth {} at the origin", cert.depth),
    });
    let hormander = vec![cert];

    let li = frame
        .op
        .left_invariance_residual(&frame.group, &spec)
        .unwrap_or(f64::INFINITY);
    checks.push(CheckRecord {
        name: "left_invariance_residual".to_string(),
        passed: li <= 1e-6,
        value: li,
        tolerance: 1e-6,
        method: "max |L(u o tau_g) - (Lu) o tau_g| over sampled (g, u, x)".to_string(),
    });

    let mut classification = None;
    let mut exact_zero = false;
    if let Some(u) = &frame.u {
        let class = frame.op.classify(u, &spec).unwrap_or(Classification::None);
        classification = Some(class);
        exact_zero = frame
            .op
            .apply(u)
            .map(|lu| lu.is_zero())
            .unwrap_or(false);
        checks.push(CheckRecord {
            name: "classification".to_string(),
            passed: frame.expected_class.map(|e| e == class).unwrap_or(true),
            value: if exact_zero { 0.0 } else { 1.0 },
            tolerance: 1e-10,
            method: format!("sign of Lu on {} sampled points", spec.count),
        });
    }

    let w = frame
        .group
        .right_invariant_density()
        .map(|d| d.w)
        .unwrap_or_else(|_| Expr::one());
    let mut scans = Vec::new();
    if let Some(u) = &frame.u {
        for &p in &frame.scan_ps {
            scans.push(lp_partial_scan(
                &Integrand::Expr(u),
                p,
                &w,
                dim,
                &default_radii(),
                24,
            ));
        }
    }

    let all_checks_pass = checks.iter().all(|c| c.passed);
    let scans_diverge = scans
        .iter()
        .all(|s| s.trend == ScanTrend::NoEvidenceOfFiniteness);
    let verdict = if all_checks_pass && scans_diverge {
        DemoVerdict::Consistent
    } else {
        DemoVerdict::Inconsistent
    };
    let statement = match verdict {
        DemoVerdict::Consistent => format!("consistent with {}", frame.theorem),
        DemoVerdict::NegativeControl => "negative control".to_string(),
        DemoVerdict::Inconsistent => format!("INCONSISTENT with {}", frame.theorem),
    };
    DemonstrationReport {
        scenario: scenario.to_string(),
        description: frame.description,
        checks,
        hormander,
        classification,
        exact_symbolic_zero: exact_zero,
        scans,
        verdict,
        statement,
    }
}

fn heat_counterexample(seed: u64) -> DemonstrationReport {
    let op = builtin::heat(2);
    let u = crate::symbolic::parse("exp(x1 + x2 + 2*t)", op.vars()).unwrap();
    let dec = op.decompose();
    let mut fields = dec.fields.clone();
    fields.push(dec.drift.clone());
    let mut report = run_frame(
        "heat_counterexample",
        ScenarioFrame {
            group: GroupLaw::abelian(3),
            u: Some(u),
            expected_class: Some(Classification::Harmonic),
            scan_ps: vec![1.0, 2.0],
            hormander_fields: fields,
            description:
                "the heat operator annihilates a nonnegative exponential; the scan shows it \
                 is in no Lp, so the one-side Liouville statement cannot be strengthened"
                    .to_string(),
            theorem: "Theorem 1.1".to_string(),
            op,
        },
        seed,
    );
    // kernel checks are enabled here: trace B = 0
    let spec = KolmogorovSpec::new(RatMatrix::identity(2), RatMatrix::zeros(2, 2)).unwrap();
    append_kernel_checks(&mut report, &spec);
    report
}

fn kolmogorov_n1(seed: u64) -> DemonstrationReport {
    let kspec = KolmogorovSpec::new(
        RatMatrix::from_i64_rows(&[vec![1, 0], vec![0, 0]]),
        RatMatrix::from_i64_rows(&[vec![0, 0], vec![1, 0]]),
    )
    .unwrap();
    let op = kspec.operator();
    let group = kspec.group_law().expect("built-in law validates");
    let u = crate::symbolic::parse("x2 + t*x1", op.vars()).unwrap();
    let dec = op.decompose();
    let mut fields = vec![dec.fields[0].clone()];
    fields.push(dec.drift.clone());
    let mut report = run_frame(
        "kolmogorov_n1",
        ScenarioFrame {
            group,
            u: Some(u),
            expected_class: Some(Classification::Harmonic),
            scan_ps: vec![1.0],
            hormander_fields: fields,
            description: "the classical Kolmogorov block: hypoelliptic by the dual \
                          criterion, with a polynomial harmonic function outside every Lp"
                .to_string(),
            theorem: "Theorem 1.1".to_string(),
            op,
        },
        seed,
    );
    let rep = kspec.hypoellipticity_check(&KolmogorovSpec::default_t_samples(), None);
    report.checks.push(CheckRecord {
        name: "hypoellipticity_dual".to_string(),
        passed: rep.verdict == crate::kolmogorov::Verdict::Pass,
        value: rep.kalman_rank as f64,
        tolerance: kspec.n as f64,
        method: "covariance positive-definiteness vs exact Kalman rank".to_string(),
    });
    if report.checks.iter().any(|c| !c.passed) {
        report.verdict = DemoVerdict::Inconsistent;
        report.statement = "INCONSISTENT with Theorem 1.1".to_string();
    }
    append_kernel_checks(&mut report, &kspec);
    report
}

fn append_kernel_checks(report: &mut DemonstrationReport, spec: &KolmogorovSpec) {
    if !spec.b.trace().is_zero() {
        return; // mass normalization only holds on the trace-free subclass
    }
    if let Ok(mass) = spec.kernel_mass(0.5, 48) {
        report.checks.push(CheckRecord {
            name: "kernel_mass".to_string(),
            passed: (mass - 1.0).abs() <= 1e-6,
            value: mass,
            tolerance: 1e-6,
            method: "tensor quadrature over an eigenvector-aligned box".to_string(),
        });
    }
    if let Ok(res) = spec.kernel_annihilation_residual(&[0.5, 1.0, 1.5]) {
        report.checks.push(CheckRecord {
            name: "kernel_annihilation".to_string(),
            passed: res <= 1e-4,
            value: res,
            tolerance: 1e-4,
            method: "finite-difference application of the operator to the kernel"
                .to_string(),
        });
    }
    if report.checks.iter().any(|c| !c.passed) {
        report.verdict = DemoVerdict::Inconsistent;
        report.statement = format!("INCONSISTENT: {}", report.statement);
    }
}

fn polarized_heisenberg_l2(seed: u64) -> DemonstrationReport {
    let vars = VarSet::time_first(2);
    let dx1 = VectorField::coordinate(3, 1, "dx1");
    let t_field = VectorField::new(vec![Expr::one(), Expr::zero(), Expr::var(1)], "T");
    let op = from_frame(&[dx1.clone()], Some(&t_field.neg()), None, vars.clone())
        .expect("PSD by construction");
    let b = RatMatrix::from_i64_rows(&[vec![0, 0], vec![1, 0]]);
    let group = GroupLaw::inverse_matrix_exponential(b).unwrap();
    let u = crate::symbolic::parse("exp(x1 + t)", &vars).unwrap();
    run_frame(
        "polarized_heisenberg_l2",
        ScenarioFrame {
            group,
            u: Some(u),
            expected_class: Some(Classification::Harmonic),
            scan_ps: vec![1.0],
            hormander_fields: vec![t_field, dx1],
            description: "the degenerate ultraparabolic operator on the polarized \
                          Heisenberg group with a nonnegative harmonic exponential"
                .to_string(),
            theorem: "Theorem 1.1".to_string(),
            op,
        },
        seed,
    )
}

fn dapratolunardi_operator() -> (SecondOrderOperator, VectorField, VectorField, VarSet) {
    let vars = VarSet::time_first(2);
    let dx1 = VectorField::coordinate(3, 1, "dx1");
    // T = dt + (x1 + x2) dx1 - x1 dx2
    let t_field = VectorField::new(
        vec![Expr::one(), Expr::var(1) + Expr::var(2), Expr::var(1).neg()],
        "T",
    );
    let op = from_frame(
        &[dx1.clone()],
        Some(&t_field.neg()),
        Some(&[Scalar::from_ratio(1, 2)]),
        vars.clone(),
    )
    .expect("PSD by construction");
    (op, dx1, t_field, vars)
}

fn dapratolunardi(seed: u64) -> DemonstrationReport {
    let (op, dx1, t_field, _) = dapratolunardi_operator();
    let b = RatMatrix::from_i64_rows(&[vec![1, 1], vec![-1, 0]]);
    let group = GroupLaw::inverse_matrix_exponential(b).unwrap();
    run_frame(
        "dapratolunardi",
        ScenarioFrame {
            group,
            u: Some(Expr::one()),
            expected_class: Some(Classification::Harmonic),
            scan_ps: vec![1.0],
            hormander_fields: vec![t_field, dx1],
            description: "the drift-rotation operator with weight e^{-t}: the constant 1 \
                          is harmonic and its weighted mass diverges"
                .to_string(),
            theorem: "Lemma 3.3 (only the zero constant is integrable)".to_string(),
            op,
        },
        seed,
    )
}

fn companion_example(seed: u64) -> DemonstrationReport {
    // degree-3 nilpotent companion matrix
    let b = RatMatrix::from_i64_rows(&[vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0]]);
    let group = GroupLaw::matrix_exponential(b).unwrap();
    let frame = crate::fields::left_invariant_frame(&group);
    let dt = frame[0].clone();
    let x1 = frame[1].clone();
    let vars = group.vars().clone();
    let spec = SampleSpec::identity_testing(seed);
    let mut checks = Vec::new();

    let origin = vec![num_rational::BigRational::from_integer(0.into()); 4];
    let cert = hormander_rank(&[dt.clone(), x1.clone()], &origin, 6);
    checks.push(CheckRecord {
        name: "hormander_frame".to_string(),
        passed: cert.full_rank() && cert.depth <= 2,
        value: cert.achieved_rank as f64,
        tolerance: 4.0,
        method: format!("two-generator closure, full rank at depth {}", cert.depth),
    });

    // the five operators built from {dt, X1}
    let five: Vec<(&str, SecondOrderOperator)> = vec![
        (
            "dt^2 + X1^2",
            from_frame(&[dt.clone(), x1.clone()], None, None, vars.clone()).unwrap(),
        ),
        (
            "dt^2 + X1",
            from_frame(&[dt.clone()], Some(&x1), None, vars.clone()).unwrap(),
        ),
        (
            "dt^2 - X1",
            from_frame(&[dt.clone()], Some(&x1.neg()), None, vars.clone()).unwrap(),
        ),
        (
            "X1^2 + dt",
            from_frame(&[x1.clone()], Some(&dt), None, vars.clone()).unwrap(),
        ),
        (
            "X1^2 - dt",
            from_frame(&[x1.clone()], Some(&dt.neg()), None, vars.clone()).unwrap(),
        ),
    ];
    for (name, op) in &five {
        let nd = op.check_nd(&spec.points(4));
        let li = op.left_invariance_residual(&group, &spec).unwrap_or(f64::INFINITY);
        checks.push(CheckRecord {
            name: format!("nd[{}]", name),
            passed: nd,
            value: if nd { 1.0 } else { 0.0 },
            tolerance: 1e-12,
            method: "principal part nonzero at sampled points".to_string(),
        });
        checks.push(CheckRecord {
            name: format!("left_invariance[{}]", name),
            passed: li <= 1e-6,
            value: li,
            tolerance: 1e-6,
            method: "translation residual on sampled (g, u, x)".to_string(),
        });
    }
    let all = checks.iter().all(|c| c.passed);
    DemonstrationReport {
        scenario: "companion_example".to_string(),
        description: "a degree-3 nilpotent companion matrix: two generators span the \
                      whole algebra, and the five derived operators satisfy the \
                      structural hypotheses with Lebesgue invariant measure"
            .to_string(),
        checks,
        hormander: vec![cert],
        classification: None,
        exact_symbolic_zero: false,
        scans: Vec::new(),
        verdict: if all { DemoVerdict::Consistent } else { DemoVerdict::Inconsistent },
        statement: if all {
            "consistent with Theorems 1.1/1.2 structural hypotheses".to_string()
        } else {
            "INCONSISTENT: hypothesis check failed".to_string()
        },
    }
}

fn constant_one_trace1(seed: u64) -> DemonstrationReport {
    let b = RatMatrix::from_i64_rows(&[vec![1, 1], vec![-1, 0]]);
    let group = GroupLaw::inverse_matrix_exponential(b).unwrap();
    let spec = SampleSpec::identity_testing(seed);
    let _ = spec;
    let w = group.right_invariant_density().unwrap().w;
    let scan = lp_partial_scan(
        &Integrand::Expr(&Expr::one()),
        1.0,
        &w,
        3,
        &default_radii(),
        24,
    );
    let mut checks = Vec::new();
    // weighted masses track haar_mass_partial and the closed form
    let mut monotone = true;
    let mut prev = 0.0;
    for (&r, &v) in scan.radii.iter().zip(&scan.values) {
        let closed = 4.0 * r * r * (r.exp() - (-r).exp());
        if (v - closed).abs() > 1e-6 * closed {
            monotone = false;
        }
        if v <= prev {
            monotone = false;
        }
        prev = v;
    }
    checks.push(CheckRecord {
        name: "mass_matches_closed_form".to_string(),
        passed: monotone,
        value: *scan.values.last().unwrap(),
        tolerance: 1e-6,
        method: "4R^2(e^R - e^{-R}) against tensor quadrature".to_string(),
    });
    let diverges = scan.trend == ScanTrend::NoEvidenceOfFiniteness;
    let all = monotone && diverges;
    DemonstrationReport {
        scenario: "constant_one_trace1".to_string(),
        description: "the constant 1 on the trace-one inverse group: weighted partial \
                      masses grow without bound, so no nonzero constant is integrable"
            .to_string(),
        checks,
        hormander: Vec::new(),
        classification: Some(Classification::Harmonic),
        exact_symbolic_zero: true,
        scans: vec![scan],
        verdict: if all { DemoVerdict::Consistent } else { DemoVerdict::Inconsistent },
        statement: if all {
            "consistent with Lemma 3.3".to_string()
        } else {
            "INCONSISTENT with Lemma 3.3".to_string()
        },
    }
}

fn laplacian_subharmonic(seed: u64) -> DemonstrationReport {
    let op = builtin::laplacian(2);
    let u = crate::symbolic::parse("x1^2", op.vars()).unwrap();
    let dec = op.decompose();
    run_frame(
        "laplacian_subharmonic",
        ScenarioFrame {
            group: GroupLaw::abelian(2),
            u: Some(u),
            expected_class: Some(Classification::Subharmonic),
            scan_ps: vec![1.0],
            hormander_fields: dec.fields.clone(),
            description: "x1^2 is subharmonic and nonnegative; its scan diverges, as a \
                          nonnegative subharmonic function in some Lp would have to vanish"
                .to_string(),
            theorem: "Theorem 1.2".to_string(),
            op,
        },
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_scan_converges_to_closed_form() {
        // int over R^2 of exp(-2|x|^2) = pi/2
        let f = |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1])).exp();
        let scan = lp_partial_scan(
            &Integrand::Func { f: &f, label: "exp(-|x|^2)" },
            2.0,
            &Expr::one(),
            2,
            &[1.0, 2.0, 4.0, 6.0],
            32,
        );
        let last = *scan.values.last().unwrap();
        assert!(
            (last - core::f64::consts::PI / 2.0).abs() < 1e-8,
            "limit {last}"
        );
        assert_eq!(scan.trend, ScanTrend::ApparentlyBounded);
        assert!(scan.reliable.iter().all(|r| *r));
    }

    #[test]
    fn scan_values_nonnegative_nondecreasing_and_scale() {
        let vars = VarSet::spatial(1);
        let u = crate::symbolic::parse("x1^2 + 1", &vars).unwrap();
        let scan = lp_partial_scan(
            &Integrand::Expr(&u),
            1.5,
            &Expr::one(),
            1,
            &default_radii(),
            24,
        );
        assert!(scan.values.windows(2).all(|w| w[0] <= w[1] && w[0] >= 0.0));
        // |c u|^p = |c|^p |u|^p
        let cu = Expr::int(3) * u.clone();
        let scaled = lp_partial_scan(
            &Integrand::Expr(&cu),
            1.5,
            &Expr::one(),
            1,
            &default_radii(),
            24,
        );
        let factor = 3.0f64.powf(1.5);
        for (a, b) in scan.values.iter().zip(&scaled.values) {
            assert!((b / a - factor).abs() < 1e-9 * factor);
        }
    }

    #[test]
    fn scan_flags_unreliable_entries() {
        // a needle the coarse rule misses while the fine rule catches a
        // flank: the order-doubling estimate blows past 1% of the value
        let f = |x: &[f64]| (-(x[0] * 4.0).powi(2)).exp();
        let scan = lp_partial_scan(
            &Integrand::Func { f: &f, label: "needle" },
            1.0,
            &Expr::one(),
            1,
            &[8.0],
            6,
        );
        assert!(scan.reliable.iter().any(|r| !*r), "{:?}", scan);
    }

    #[test]
    fn gadget_ranges_and_frozen_values() {
        assert!(gadget(GadgetKind::HarmonicPGe1, 0.5).is_err());
        assert!(gadget(GadgetKind::HarmonicPLt1, 1.0).is_err());
        assert!(gadget(GadgetKind::Subharmonic, 0.99).is_err());
        // p = 1: F(0) = 0 and F''(t) = (1+t^2)^{-3/2}
        let g = gadget(GadgetKind::HarmonicPGe1, 1.0).unwrap();
        assert_eq!(g.value(0.0), 0.0);
        for &t in &[-2.0, -0.5, 0.3, 4.0] {
            let expect = (1.0 + t * t).powf(-1.5);
            assert!((g.d2(t) - expect).abs() < 1e-12);
        }
        // p = 1/2 at t = 1: sqrt(2) - 1 <= 1
        let g = gadget(GadgetKind::HarmonicPLt1, 0.5).unwrap();
        assert!((g.value(1.0) - (2.0f64.sqrt() - 1.0)).abs() < 1e-14);
        assert!(g.value(1.0) <= 1.0);
    }

    #[test]
    fn gadget_invariants_hold_on_dense_samples() {
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert!(gadget(GadgetKind::HarmonicPGe1, p).unwrap().validate(10_000));
            assert!(gadget(GadgetKind::Subharmonic, p).unwrap().validate(10_000));
        }
        for p in [0.25, 0.5, 0.9] {
            assert!(gadget(GadgetKind::HarmonicPLt1, p).unwrap().validate(10_000));
        }
    }

    #[test]
    fn subharmonic_gadget_second_derivative_continuous_at_zero() {
        let g = gadget(GadgetKind::Subharmonic, 1.0).unwrap();
        // one-sided limits of F'' approach each other near 0
        let eps = 1e-4;
        assert!((g.d2(eps) - g.d2(-eps)).abs() <= 1e-6);
        // and the closed form agrees with finite differences where the
        // values are representable
        for t in [-0.1f64, 0.1, 0.5] {
            let h = 1e-3;
            let fd = (g.value(t + h) - 2.0 * g.value(t) + g.value(t - h)) / (h * h);
            assert!(
                (fd - g.d2(t)).abs() <= 1e-4 + 1e-3 * g.d2(t).abs(),
                "t={t}: fd {fd} vs formula {}",
                g.d2(t)
            );
        }
        assert_eq!(g.value(-1.0), 0.0);
        assert_eq!(g.d2(-1.0), 0.0);
    }

    #[test]
    fn demonstrations_all_consistent() {
        for id in scenario_ids() {
            let rep = liouville_demonstration(id, 0).unwrap();
            assert_eq!(
                rep.verdict,
                DemoVerdict::Consistent,
                "{id}: {} ({:?})",
                rep.statement,
                rep.checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.clone())
                    .collect::<Vec<_>>()
            );
        }
        assert!(matches!(
            liouville_demonstration("nope", 0),
            Err(LiouvilleError::UnknownScenario(_))
        ));
    }

    #[test]
    fn heat_counterexample_specifics() {
        let rep = liouville_demonstration("heat_counterexample", 0).unwrap();
        assert_eq!(rep.classification, Some(Classification::Harmonic));
        assert!(rep.exact_symbolic_zero);
        // exponential growth: ratio well above the generic threshold
        for scan in &rep.scans {
            assert!(scan.growth_ratio > 1.5, "ratio {}", scan.growth_ratio);
        }
    }
}
