//! Arithmetic expression trees over one vector variable.
//!
//! The language is deliberately small: constants, named parameters, the
//! variable components `x` (1-D) or `x1..xn`, `+`, `-`, unary `-`, `*`, and
//! integer powers via `^`. No division or roots, so natural interval
//! evaluation is total. Multivalued objects such as square roots are built
//! downstream from transposes, never from expressions.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::interval::Interval;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Component of the vector variable, zero-based.
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    /// Parse an infix expression. `dim` fixes which variable components are
    /// legal (`x` alone only when `dim == 1`).
    pub fn parse(src: &str, dim: usize) -> Result<Expr> {
        Parser {
            tokens: tokenize(src)?,
            pos: 0,
            dim,
        }
        .parse_full()
    }

    /// Names of parameters that occur in the tree, sorted.
    pub fn params(&self) -> Vec<String> {
        let mut out = BTreeMap::new();
        self.collect_params(&mut out);
        out.into_keys().collect()
    }

    fn collect_params(&self, out: &mut BTreeMap<String, ()>) {
        match self {
            Expr::Param(name) => {
                out.insert(name.clone(), ());
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_params(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            _ => {}
        }
    }

    /// Replace every parameter with its binding. Errors on unbound names.
    pub fn bind(&self, bindings: &BTreeMap<String, f64>) -> Result<Expr> {
        Ok(match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(k) => Expr::Var(*k),
            Expr::Param(name) => match bindings.get(name) {
                Some(v) => Expr::Const(*v),
                None => return Err(Error::Spec(format!("unbound parameter `{name}`"))),
            },
            Expr::Neg(a) => Expr::Neg(Box::new(a.bind(bindings)?)),
            Expr::Add(a, b) => Expr::Add(Box::new(a.bind(bindings)?), Box::new(b.bind(bindings)?)),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.bind(bindings)?), Box::new(b.bind(bindings)?)),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.bind(bindings)?), Box::new(b.bind(bindings)?)),
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.bind(bindings)?), *n),
        })
    }

    /// Natural interval extension. All parameters must already be bound.
    pub fn eval_interval(&self, x: &[Interval]) -> Result<Interval> {
        Ok(match self {
            Expr::Const(c) => Interval::point(*c),
            Expr::Var(k) => *x
                .get(*k)
                .ok_or_else(|| Error::Arity(format!("variable component {} out of range", k + 1)))?,
            Expr::Param(name) => return Err(Error::Spec(format!("unbound parameter `{name}`"))),
            Expr::Neg(a) => a.eval_interval(x)?.neg(),
            Expr::Add(a, b) => a.eval_interval(x)?.add(&b.eval_interval(x)?),
            Expr::Sub(a, b) => a.eval_interval(x)?.sub(&b.eval_interval(x)?),
            Expr::Mul(a, b) => a.eval_interval(x)?.mul(&b.eval_interval(x)?),
            Expr::Pow(a, n) => a.eval_interval(x)?.powi(*n),
        })
    }

    /// Plain f64 evaluation at a point.
    pub fn eval_point(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(k) => *x
                .get(*k)
                .ok_or_else(|| Error::Arity(format!("variable component {} out of range", k + 1)))?,
            Expr::Param(name) => return Err(Error::Spec(format!("unbound parameter `{name}`"))),
            Expr::Neg(a) => -a.eval_point(x)?,
            Expr::Add(a, b) => a.eval_point(x)? + b.eval_point(x)?,
            Expr::Sub(a, b) => a.eval_point(x)? - b.eval_point(x)?,
            Expr::Mul(a, b) => a.eval_point(x)? * b.eval_point(x)?,
            Expr::Pow(a, n) => a.eval_point(x)?.powi(*n as i32),
        })
    }

    /// Symbolic partial derivative with respect to component `k`.
    pub fn derivative(&self, k: usize) -> Expr {
        match self {
            Expr::Const(_) | Expr::Param(_) => Expr::Const(0.0),
            Expr::Var(j) => Expr::Const(if *j == k { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::Neg(Box::new(a.derivative(k))),
            Expr::Add(a, b) => Expr::Add(Box::new(a.derivative(k)), Box::new(b.derivative(k))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.derivative(k)), Box::new(b.derivative(k))),
            Expr::Mul(a, b) => Expr::Add(
                Box::new(Expr::Mul(Box::new(a.derivative(k)), b.clone())),
                Box::new(Expr::Mul(a.clone(), Box::new(b.derivative(k)))),
            ),
            Expr::Pow(a, n) => {
                if *n == 0 {
                    Expr::Const(0.0)
                } else {
                    Expr::Mul(
                        Box::new(Expr::Mul(
                            Box::new(Expr::Const(*n as f64)),
                            Box::new(Expr::Pow(a.clone(), n - 1)),
                        )),
                        Box::new(a.derivative(k)),
                    )
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(0) => write!(f, "x"),
            Expr::Var(k) => write!(f, "x{}", k + 1),
            Expr::Param(name) => write!(f, "{name}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Pow(a, n) => write!(f, "({a}^{n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '/' => {
                return Err(Error::Spec(
                    "division is not part of the expression language".into(),
                ))
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Spec(format!("bad number literal `{text}`")))?;
                out.push(Tok::Num(v));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(bytes[start..i].iter().collect()));
            }
            _ => return Err(Error::Spec(format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn parse_full(&mut self) -> Result<Expr> {
        let e = self.sum()?;
        if self.pos != self.tokens.len() {
            return Err(Error::Spec("trailing tokens in expression".into()));
        }
        Ok(e)
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut acc = self.product()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = Expr::Add(Box::new(acc), Box::new(self.product()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = Expr::Sub(Box::new(acc), Box::new(self.product()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        while matches!(self.peek(), Some(Tok::Star)) {
            self.bump();
            acc = Expr::Mul(Box::new(acc), Box::new(self.unary()?));
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            match self.bump() {
                Some(Tok::Num(v)) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => {
                    return Ok(Expr::Pow(Box::new(base), v as u32));
                }
                _ => {
                    return Err(Error::Spec(
                        "exponent must be a nonnegative integer literal".into(),
                    ))
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::Ident(name)) => {
                if name == "x" {
                    if self.dim != 1 {
                        return Err(Error::Spec(
                            "`x` is only valid in one dimension; use x1..xn".into(),
                        ));
                    }
                    return Ok(Expr::Var(0));
                }
                if let Some(rest) = name.strip_prefix('x') {
                    if let Ok(k) = rest.parse::<usize>() {
                        if k >= 1 && k <= self.dim {
                            return Ok(Expr::Var(k - 1));
                        }
                        return Err(Error::Spec(format!(
                            "component `{name}` out of range for dimension {}",
                            self.dim
                        )));
                    }
                }
                Ok(Expr::Param(name))
            }
            Some(Tok::LParen) => {
                let e = self.sum()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(Error::Spec("missing closing parenthesis".into())),
                }
            }
            other => Err(Error::Spec(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_affine() {
        let e = Expr::parse("(x - 1) * 0.5", 1).unwrap();
        assert_eq!(e.eval_point(&[3.0]).unwrap(), 1.0);
    }

    #[test]
    fn parses_cubic_with_param() {
        let e = Expr::parse("-x^3 + 3*x^2 + x - alpha", 1).unwrap();
        assert_eq!(e.params(), vec!["alpha".to_string()]);
        let mut b = BTreeMap::new();
        b.insert("alpha".to_string(), 4.0);
        let bound = e.bind(&b).unwrap();
        assert_eq!(bound.eval_point(&[-1.0]).unwrap(), -1.0);
        assert_eq!(bound.eval_point(&[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn rejects_division() {
        assert!(Expr::parse("x / 2", 1).is_err());
    }

    #[test]
    fn rejects_unbound_in_interval_eval() {
        let e = Expr::parse("x + beta", 1).unwrap();
        assert!(e.eval_interval(&[Interval::point(0.0)]).is_err());
    }

    #[test]
    fn derivative_of_cubic() {
        let e = Expr::parse("-x^3 + 3*x^2 + x - 4", 1).unwrap();
        let d = e.derivative(0);
        // f'(x) = -3x^2 + 6x + 1
        assert!((d.eval_point(&[2.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((d.eval_point(&[-1.0]).unwrap() - (-8.0)).abs() < 1e-12);
    }

    #[test]
    fn components_in_two_dims() {
        let e = Expr::parse("x1 * x2", 2).unwrap();
        assert_eq!(e.eval_point(&[3.0, 4.0]).unwrap(), 12.0);
        assert!(Expr::parse("x", 2).is_err());
    }

    #[test]
    fn interval_eval_contains_point_evals() {
        let e = Expr::parse("-x^3 + 3*x^2 + x - 4", 1).unwrap();
        let iv = Interval::new(1.9, 2.1);
        let enc = e.eval_interval(&[iv]).unwrap();
        for k in 0..=100 {
            let x = 1.9 + 0.2 * (k as f64) / 100.0;
            let v = e.eval_point(&[x]).unwrap();
            assert!(enc.contains(v), "escape at x={x}: {v} not in {enc:?}");
        }
    }
}
