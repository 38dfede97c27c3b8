//! Property tests for the ring invariants: linearity of differentiation,
//! the product rule, Clairaut symmetry, print/parse round trips, and
//! bracket algebra on randomly generated expressions.

use hypolie_core::fields::{lie_bracket, VectorField};
use hypolie_core::sample::SampleSpec;
use hypolie_core::scalar::Scalar;
use hypolie_core::symbolic::{
    equal_on_samples_tol, expr_to_string, parse, AffineForm, CompiledExpr, Expr, Tolerance,
    VarSet,
};
use proptest::prelude::*;

const DIM: usize = 3;

fn vars() -> VarSet {
    VarSet::new(&["x1", "x2", "t"], Some("t")).unwrap()
}

fn tol() -> Tolerance {
    // identities are exact symbolically; the slack only absorbs float
    // reassociation on exponential-sized values
    Tolerance { atol: 1e-7, rtol: 1e-7 }
}

fn arb_scalar() -> impl Strategy<Value = Scalar> {
    (-2i64..=2, 1i64..=3).prop_map(|(p, q)| Scalar::from_ratio(p, q))
}

fn arb_affine() -> impl Strategy<Value = AffineForm> {
    (arb_scalar(), proptest::collection::vec(arb_scalar(), DIM)).prop_map(|(c, coeffs)| {
        let mut acc = AffineForm::constant(c);
        for (i, coeff) in coeffs.into_iter().enumerate() {
            acc = acc.add(&AffineForm::term(i, coeff));
        }
        acc
    })
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        arb_scalar().prop_map(Expr::Const),
        (0..DIM).prop_map(Expr::var),
        arb_affine().prop_map(Expr::exp),
        arb_affine().prop_map(Expr::sin),
        arb_affine().prop_map(Expr::cos),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
            proptest::collection::vec(inner.clone(), 2..3).prop_map(Expr::product),
            (inner, 0u32..4).prop_map(|(e, k)| Expr::pow(e, k)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn differentiation_is_linear(e1 in arb_expr(), e2 in arb_expr(),
                                 a in arb_scalar(), b in arb_scalar()) {
        let combo = Expr::Const(a.clone()) * e1.clone() + Expr::Const(b.clone()) * e2.clone();
        for v in 0..DIM {
            let lhs = combo.differentiate(v);
            let rhs = Expr::Const(a.clone()) * e1.differentiate(v)
                + Expr::Const(b.clone()) * e2.differentiate(v);
            prop_assert!(equal_on_samples_tol(&lhs, &rhs, DIM, &SampleSpec::default(), tol()));
        }
    }

    #[test]
    fn product_rule_holds(e1 in arb_expr(), e2 in arb_expr()) {
        let prod = e1.clone() * e2.clone();
        for v in 0..DIM {
            let lhs = prod.differentiate(v);
            let rhs = e1.differentiate(v) * e2.clone() + e1.clone() * e2.differentiate(v);
            prop_assert!(equal_on_samples_tol(&lhs, &rhs, DIM, &SampleSpec::default(), tol()));
        }
    }

    #[test]
    fn clairaut_symmetry(e in arb_expr()) {
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                let ij = e.differentiate(i).differentiate(j);
                let ji = e.differentiate(j).differentiate(i);
                prop_assert!(equal_on_samples_tol(&ij, &ji, DIM, &SampleSpec::default(), tol()));
            }
        }
    }

    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let vs = vars();
        let text = expr_to_string(&e, &vs);
        let back = parse(&text, &vs)
            .unwrap_or_else(|err| panic!("'{}' failed to reparse: {}", text, err));
        prop_assert!(
            equal_on_samples_tol(&e, &back, DIM, &SampleSpec::default(), tol()),
            "round trip through '{}'",
            text
        );
    }

    #[test]
    fn compiled_evaluation_agrees(e in arb_expr()) {
        let c = CompiledExpr::new(&e);
        for p in SampleSpec::default().points(DIM) {
            let a = e.eval(&p);
            let b = c.eval(&p);
            prop_assert!(
                (a - b).abs() <= 1e-9 * (1.0 + a.abs()),
                "tree {a} vs compiled {b}"
            );
        }
    }

    #[test]
    fn substitution_is_composition(e in arb_expr(), shift in arb_scalar()) {
        // affine map x_i -> x_i + shift keeps everything in the ring
        let map: Vec<Expr> = (0..DIM)
            .map(|i| Expr::var(i) + Expr::Const(shift.clone()))
            .collect();
        let composed = e.substitute(&map).unwrap();
        let s = shift.to_f64();
        for p in SampleSpec::default().points(DIM) {
            let shifted: Vec<f64> = p.iter().map(|x| x + s).collect();
            let a = composed.eval(&p);
            let b = e.eval(&shifted);
            prop_assert!((a - b).abs() <= 1e-7 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn bracket_antisymmetry_and_bilinearity(
        c1 in proptest::collection::vec(arb_expr(), DIM),
        c2 in proptest::collection::vec(arb_expr(), DIM),
        a in arb_scalar(),
    ) {
        let x = VectorField::new(c1, "X");
        let y = VectorField::new(c2, "Y");
        let xy = lie_bracket(&x, &y).unwrap();
        let yx = lie_bracket(&y, &x).unwrap();
        let spec = SampleSpec::default();
        for k in 0..DIM {
            // compare against the negation so the relative tolerance has
            // the coefficient's own scale to work with
            let neg = yx.coeffs[k].clone().neg();
            prop_assert!(equal_on_samples_tol(&xy.coeffs[k], &neg, DIM, &spec, tol()));
        }
        // [aX, Y] = a[X, Y] for constant a
        let ax = x.scale(Expr::Const(a.clone()));
        let axy = lie_bracket(&ax, &y).unwrap();
        for k in 0..DIM {
            let rhs = Expr::Const(a.clone()) * xy.coeffs[k].clone();
            prop_assert!(equal_on_samples_tol(&axy.coeffs[k], &rhs, DIM, &spec, tol()));
        }
    }
}
