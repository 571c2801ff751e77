//! Coefficient expressions: constants, affine maps and polynomials in `(t, x, a)`.
//!
//! Every coefficient of a problem (drift, diffusion, costs and their declared
//! state gradients) is one of these forms, which keeps problem files portable
//! and evaluation bit-reproducible.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", bound = "S: Scalar")]
pub enum Expr<S> {
    Constant {
        value: S,
    },
    /// `constant + t·t_coef + x·x_coef + a·a_coef`
    Affine {
        #[serde(default)]
        constant: S,
        #[serde(default)]
        t: S,
        #[serde(default)]
        x: Vec<S>,
        #[serde(default)]
        a: Vec<S>,
    },
    Polynomial {
        terms: Vec<Monomial<S>>,
    },
}

/// `coef · t^t · Π xᵢ^x[i] · Π aⱼ^a[j]`; missing exponents are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Monomial<S> {
    pub coef: S,
    #[serde(default, skip_serializing_if = "is_zero_u32")]
    pub t: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<u32>,
}

fn is_zero_u32(v: &u32) -> bool {
    *v == 0
}

impl<S: Scalar> Monomial<S> {
    pub fn new(coef: f64) -> Self {
        Self {
            coef: S::lit(coef),
            t: 0,
            x: Vec::new(),
            a: Vec::new(),
        }
    }

    pub fn t(mut self, power: u32) -> Self {
        self.t = power;
        self
    }

    pub fn x(mut self, index: usize, power: u32) -> Self {
        if self.x.len() <= index {
            self.x.resize(index + 1, 0);
        }
        self.x[index] = power;
        self
    }

    pub fn a(mut self, index: usize, power: u32) -> Self {
        if self.a.len() <= index {
            self.a.resize(index + 1, 0);
        }
        self.a[index] = power;
        self
    }

    fn eval(&self, t: S, x: &[S], a: &[S]) -> S {
        if !self.live() {
            return S::zero();
        }
        let mut v = self.coef;
        if self.t != 0 {
            v = v * t.powi(self.t as i32);
        }
        for (i, &p) in self.x.iter().enumerate() {
            if p != 0 {
                v = v * x[i].powi(p as i32);
            }
        }
        for (j, &p) in self.a.iter().enumerate() {
            if p != 0 {
                v = v * a[j].powi(p as i32);
            }
        }
        v
    }

    fn live(&self) -> bool {
        self.coef != S::zero()
    }
}

impl<S: Scalar> Expr<S> {
    pub fn zero() -> Self {
        Expr::Constant { value: S::zero() }
    }

    pub fn constant(value: f64) -> Self {
        Expr::Constant { value: S::lit(value) }
    }

    pub fn poly(terms: Vec<Monomial<S>>) -> Self {
        Expr::Polynomial { terms }
    }

    pub fn eval(&self, t: S, x: &[S], a: &[S]) -> S {
        match self {
            Expr::Constant { value } => *value,
            Expr::Affine {
                constant,
                t: ct,
                x: cx,
                a: ca,
            } => {
                let mut v = *constant + *ct * t;
                for (c, &xi) in cx.iter().zip(x) {
                    v = v + *c * xi;
                }
                for (c, &ai) in ca.iter().zip(a) {
                    v = v + *c * ai;
                }
                v
            }
            Expr::Polynomial { terms } => terms.iter().fold(S::zero(), |acc, m| acc + m.eval(t, x, a)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Expr::Constant { value } => *value == S::zero(),
            Expr::Affine { constant, t, x, a } => {
                *constant == S::zero()
                    && *t == S::zero()
                    && x.iter().all(|v| *v == S::zero())
                    && a.iter().all(|v| *v == S::zero())
            }
            Expr::Polynomial { terms } => terms.iter().all(|m| !m.live()),
        }
    }

    pub fn uses_t(&self) -> bool {
        match self {
            Expr::Constant { .. } => false,
            Expr::Affine { t, .. } => *t != S::zero(),
            Expr::Polynomial { terms } => terms.iter().any(|m| m.live() && m.t != 0),
        }
    }

    pub fn uses_x(&self) -> bool {
        match self {
            Expr::Constant { .. } => false,
            Expr::Affine { x, .. } => x.iter().any(|v| *v != S::zero()),
            Expr::Polynomial { terms } => terms.iter().any(|m| m.live() && m.x.iter().any(|&p| p != 0)),
        }
    }

    pub fn uses_a(&self) -> bool {
        match self {
            Expr::Constant { .. } => false,
            Expr::Affine { a, .. } => a.iter().any(|v| *v != S::zero()),
            Expr::Polynomial { terms } => terms.iter().any(|m| m.live() && m.a.iter().any(|&p| p != 0)),
        }
    }

    /// Number of state / control variables the expression indexes.
    pub(crate) fn arity(&self) -> (usize, usize) {
        match self {
            Expr::Constant { .. } => (0, 0),
            Expr::Affine { x, a, .. } => (x.len(), a.len()),
            Expr::Polynomial { terms } => terms
                .iter()
                .fold((0, 0), |(nx, na), m| (nx.max(m.x.len()), na.max(m.a.len()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_evaluation() {
        // x² + 1 − 2a² + a⁴ at x = 0.5, a = 2
        let e: Expr<f64> = Expr::poly(vec![
            Monomial::new(1.0).x(0, 2),
            Monomial::new(1.0),
            Monomial::new(-2.0).a(0, 2),
            Monomial::new(1.0).a(0, 4),
        ]);
        assert_eq!(e.eval(0.0, &[0.5], &[2.0]), 0.25 + 1.0 - 8.0 + 16.0);
        assert!(e.uses_x() && e.uses_a() && !e.uses_t());
    }

    #[test]
    fn affine_and_constant() {
        let e: Expr<f64> = Expr::Affine {
            constant: 1.0,
            t: 2.0,
            x: vec![3.0],
            a: vec![],
        };
        assert_eq!(e.eval(0.5, &[2.0], &[9.0]), 1.0 + 1.0 + 6.0);
        assert!(!e.uses_a());
        assert!(Expr::<f64>::zero().is_zero());
    }

    #[test]
    fn json_forms_are_tagged() {
        let e: Expr<f64> =
            serde_json::from_str(r#"{"form":"polynomial","terms":[{"coef":2.0,"x":[1],"a":[0,3]}]}"#).unwrap();
        assert_eq!(e.eval(0.0, &[4.0], &[1.0, 0.5]), 2.0 * 4.0 * 0.125);
        let back = serde_json::to_string(&e).unwrap();
        assert_eq!(serde_json::from_str::<Expr<f64>>(&back).unwrap(), e);
    }
}
