use nuloss_core::exprlang::{parse, BinOp, Expr, ExprError, Func};
use proptest::prelude::*;

// Trees whose value and derivative stay finite for t in [0.5, 2]: log, sqrt
// and division only see arguments of the form 1 + e², exp only sees sin(e).
fn smooth_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![Just(Expr::var("t")), (0.25f64..3.0).prop_map(Expr::num)];
    leaf.prop_recursive(6, 48, 2, |inner| {
        let guarded = |e: Expr| Expr::binary(BinOp::Add, Expr::num(1.0), Expr::binary(BinOp::Mul, e.clone(), e));
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinOp::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinOp::Mul, a, b)),
            (inner.clone(), inner.clone()).prop_map(move |(a, b)| Expr::binary(BinOp::Div, a, guarded(b))),
            inner.clone().prop_map(|a| Expr::binary(BinOp::Pow, a, Expr::num(2.0))),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Cos, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Exp, Expr::call(Func::Sin, a))),
            inner.clone().prop_map(move |a| Expr::call(Func::Log, guarded(a))),
            inner.prop_map(move |a| Expr::call(Func::Sqrt, guarded(a))),
        ]
    })
}

fn any_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        prop_oneof![Just("t"), Just("x"), Just("tau")].prop_map(Expr::var),
        (0.0f64..1e6).prop_map(Expr::num),
    ];
    leaf.prop_recursive(6, 64, 2, |inner| {
        let ops = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div), Just(BinOp::Pow)];
        prop_oneof![
            (ops, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            inner.clone().prop_map(Expr::neg),
            (proptest::sample::select(Func::ALL.to_vec()), inner).prop_map(|(f, a)| Expr::call(f, a)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn derivative_matches_central_difference(e in smooth_tree(), t in 0.5f64..2.0) {
        let d = e.differentiate("t").unwrap();
        let exact = d.eval1("t", t).unwrap();
        let h = 1e-6;
        let fd = (e.eval1("t", t + h).unwrap() - e.eval1("t", t - h).unwrap()) / (2.0 * h);
        // Cancellation in the difference quotient scales with |f|.
        let scale = exact.abs().max(e.eval1("t", t).unwrap().abs()).max(1.0);
        prop_assert!((exact - fd).abs() <= 1e-5 * scale, "{e}: {exact} vs {fd}");
    }

    #[test]
    fn print_then_parse_is_identity(e in any_tree()) {
        let printed = e.to_string();
        prop_assert_eq!(parse(&printed).unwrap(), e, "{}", printed);
    }
}

#[test]
fn second_derivative_of_log_chain() {
    let e = parse("log(1/t)").unwrap();
    let d2 = e.differentiate("t").unwrap().differentiate("t").unwrap();
    for t in [0.1, 0.5] {
        assert!((e.differentiate("t").unwrap().eval1("t", t).unwrap() + 1.0 / t).abs() < 1e-12);
        assert!((d2.eval1("t", t).unwrap() - 1.0 / (t * t)).abs() < 1e-9);
    }
}

#[test]
fn syntax_errors_carry_offsets() {
    match parse("sin(2x)") {
        Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 5),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse("sine(t)"), Err(ExprError::UnknownFunction { .. })));
    assert!(parse("").is_err());
    assert!(parse("floor(t)").unwrap().differentiate("t").is_err());
}
