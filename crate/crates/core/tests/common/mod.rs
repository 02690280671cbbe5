use occ_core::expr::{BinaryOp, Expr, Func};
use proptest::prelude::*;

pub fn names() -> Vec<String> {
    ["x1", "x2", "t"].iter().map(|s| s.to_string()).collect()
}

/// Random expressions that are smooth and defined everywhere.
pub fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-2.0..2.0f64).prop_map(Expr::Constant),
        prop_oneof![Just("x1"), Just("x2"), Just("t")].prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Mul, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(
                BinaryOp::Div,
                a,
                Expr::binary(BinaryOp::Add, Expr::Constant(2.0), Expr::call(Func::Sin, b))
            )),
            (inner.clone(), 2..4i32)
                .prop_map(|(a, k)| Expr::binary(BinaryOp::Pow, a, Expr::Constant(k as f64))),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Cos, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Tanh, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Exp, Expr::call(Func::Tanh, a))),
            inner.clone().prop_map(|a| Expr::call(
                Func::Ln,
                Expr::binary(
                    BinaryOp::Add,
                    Expr::Constant(1.0),
                    Expr::binary(BinaryOp::Pow, a, Expr::Constant(2.0))
                )
            )),
            inner.prop_map(|a| Expr::call(
                Func::Sqrt,
                Expr::binary(
                    BinaryOp::Add,
                    Expr::Constant(1.0),
                    Expr::binary(BinaryOp::Mul, a.clone(), a)
                )
            )),
        ]
    })
}

pub fn point() -> impl Strategy<Value = [f64; 3]> {
    [-2.0..2.0f64, -2.0..2.0f64, 0.0..3.0f64]
}
