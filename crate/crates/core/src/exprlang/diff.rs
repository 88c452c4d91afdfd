use super::{BinOp, Expr, ExprError, Func, Result};

pub(super) fn differentiate(e: &Expr, var: &str) -> Result<Expr> {
    if e.contains_func(Func::Floor) {
        return Err(ExprError::NonDifferentiable("floor"));
    }
    Ok(d(e, var))
}

fn d(e: &Expr, var: &str) -> Expr {
    match e {
        Expr::Num(_) => zero(),
        Expr::Var(name) => {
            if name == var {
                one()
            } else {
                zero()
            }
        }
        Expr::Neg(a) => neg(d(a, var)),
        Expr::Binary(op, a, b) => {
            let (da, db) = (d(a, var), d(b, var));
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, b), mul(a, db)),
                BinOp::Div => sub(div(da, b.clone()), div(mul(a, db), pow(b, Expr::num(2.0)))),
                BinOp::Pow => {
                    if is_zero(&db) {
                        // d(u^c) = c u^(c-1) u'
                        let c = b.as_const();
                        let reduced = match c {
                            Some(c) => Expr::num(c - 1.0),
                            None => sub(b.clone(), one()),
                        };
                        mul(mul(b, pow(a, reduced)), da)
                    } else {
                        // d(u^v) = u^v (v' log u + v u'/u)
                        let uv = pow(a.clone(), b.clone());
                        let log_term = mul(db, Expr::call(Func::Log, a.clone()));
                        let base_term = div(mul(b, da), a);
                        mul(uv, add(log_term, base_term))
                    }
                }
            }
        }
        Expr::Call(f, a) => {
            let da = d(a, var);
            let a = (**a).clone();
            let outer = match f {
                Func::Sin => Expr::call(Func::Cos, a),
                Func::Cos => neg(Expr::call(Func::Sin, a)),
                Func::Exp => Expr::call(Func::Exp, a),
                Func::Log => div(one(), a),
                Func::Sqrt => div(one(), mul(Expr::num(2.0), Expr::call(Func::Sqrt, a))),
                Func::Abs => div(a.clone(), Expr::call(Func::Abs, a)),
                Func::Floor => unreachable!("floor rejected before differentiation"),
            };
            mul(outer, da)
        }
    }
}

fn zero() -> Expr {
    Expr::Num(0.0)
}

fn one() -> Expr {
    Expr::Num(1.0)
}

fn is_zero(e: &Expr) -> bool {
    e.as_const() == Some(0.0)
}

fn is_one(e: &Expr) -> bool {
    e.as_const() == Some(1.0)
}

// Light constant folding keeps derivative trees from growing without bound
// when differentiated twice.

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Neg(inner) => *inner,
        a if is_zero(&a) => zero(),
        a => Expr::neg(a),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::num(x + y),
        _ => Expr::binary(BinOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        return a;
    }
    if is_zero(&a) {
        return neg(b);
    }
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::num(x - y),
        _ => Expr::binary(BinOp::Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        return zero();
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::num(x * y),
        _ => Expr::binary(BinOp::Mul, a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return zero();
    }
    if is_one(&b) {
        return a;
    }
    Expr::binary(BinOp::Div, a, b)
}

fn pow(a: Expr, b: Expr) -> Expr {
    if is_one(&b) {
        return a;
    }
    Expr::binary(BinOp::Pow, a, b)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn deriv_at(src: &str, t: f64) -> f64 {
        parse(src).unwrap().differentiate("t").unwrap().eval1("t", t).unwrap()
    }

    #[test]
    fn square_derivative_is_linear() {
        for t in [-2.0, 0.0, 0.3, 5.0] {
            assert!((deriv_at("t^2", t) - 2.0 * t).abs() < 1e-14);
        }
    }

    #[test]
    fn log_reciprocal_derivative() {
        for t in [0.1, 0.5] {
            assert!((deriv_at("log(1/t)", t) + 1.0 / t).abs() < 1e-12);
        }
    }

    #[test]
    fn floor_is_rejected() {
        let e = parse("sin(t) + floor(t)").unwrap();
        assert_eq!(e.differentiate("t"), Err(ExprError::NonDifferentiable("floor")));
    }

    #[test]
    fn second_derivative() {
        let e = parse("2 + sin(log(1/t))").unwrap();
        let dd = e.differentiate("t").unwrap().differentiate("t").unwrap();
        for t in [0.01, 0.2, 0.35] {
            let l = (1.0f64 / t).ln();
            let exact = (l.cos() - l.sin()) / (t * t);
            assert!((dd.eval1("t", t).unwrap() - exact).abs() < 1e-9 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn variable_exponent() {
        // d/dt t^t = t^t (log t + 1)
        let t = 1.7_f64;
        let exact = t.powf(t) * (t.ln() + 1.0);
        assert!((deriv_at("t^t", t) - exact).abs() < 1e-12);
    }

    #[test]
    fn other_variables_are_constants() {
        let e = parse("x * t + x").unwrap();
        let de = e.differentiate("t").unwrap();
        assert_eq!(de.eval_with(&|n| Some(if n == "x" { 3.0 } else { 1.0 })).unwrap(), 3.0);
    }
}
