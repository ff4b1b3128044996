//! Scalar expression language for metric components and test functions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?            right associative
//! atom    := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are either declared coordinates or one of the functions
//! `sin cos exp ln sqrt abs`. Exponents must not reference coordinates.
//! There is no implicit multiplication: `2x` is rejected.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::jets::{Jet, JetError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{function}` takes {expected} argument(s), got {got} (offset {offset})")]
    Arity {
        function: String,
        expected: usize,
        got: usize,
        offset: usize,
    },
    #[error("exponent at offset {offset} depends on a coordinate")]
    NonConstantExponent { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. }
            | ParseError::NonConstantExponent { offset } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{op} node at offset {offset}: {source}")]
    Singular {
        op: &'static str,
        offset: usize,
        #[source]
        source: JetError,
    },
    #[error("expected {expected} values, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("coordinate `{0}` has no assigned value")]
    Unassigned(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }

    fn node_name(self) -> &'static str {
        match self {
            BinaryOp::Add => "addition",
            BinaryOp::Sub => "subtraction",
            BinaryOp::Mul => "multiplication",
            BinaryOp::Div => "division",
            BinaryOp::Pow => "power",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Function {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Function::Sin,
            "cos" => Function::Cos,
            "exp" => Function::Exp,
            "ln" => Function::Ln,
            "sqrt" => Function::Sqrt,
            "abs" => Function::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Exp => "exp",
            Function::Ln => "ln",
            Function::Sqrt => "sqrt",
            Function::Abs => "abs",
        }
    }
}

/// Returns true for identifiers reserved as function names.
pub fn is_function_name(name: &str) -> bool {
    Function::from_name(name).is_some()
}

/// Source offset of a node. Spans never participate in structural equality.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span(pub usize);

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Constant(f64),
    Variable(usize),
    Neg(Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Function, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub node: Node,
    pub span: Span,
}

/// A parsed expression bound to an ordered coordinate list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Expr,
    coords: Arc<[String]>,
}

/// Arithmetic needed to evaluate an expression; implemented for `f64` and [`Jet`].
///
/// The `f64` implementation mirrors the constant-term arithmetic of jets so
/// real evaluation reproduces jet constant terms bit for bit.
pub trait Scalar: Clone {
    fn constant_like(&self, value: f64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Result<Self, JetError>;
    fn neg(&self) -> Self;
    fn powf(&self, exponent: f64) -> Result<Self, JetError>;
    fn apply(&self, f: Function) -> Result<Self, JetError>;
}

impl Scalar for Jet {
    fn constant_like(&self, value: f64) -> Self {
        Jet::constant_like(self, value)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Result<Self, JetError> {
        self.checked_div(rhs)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powf(&self, exponent: f64) -> Result<Self, JetError> {
        Jet::powf(self, exponent)
    }
    fn apply(&self, f: Function) -> Result<Self, JetError> {
        match f {
            Function::Sin => Ok(self.sin()),
            Function::Cos => Ok(self.cos()),
            Function::Exp => Ok(self.exp()),
            Function::Ln => self.ln(),
            Function::Sqrt => self.sqrt(),
            Function::Abs => self.abs(),
        }
    }
}

impl Scalar for f64 {
    fn constant_like(&self, value: f64) -> Self {
        value
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Result<Self, JetError> {
        if *rhs == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        Ok(self * (1.0 / rhs))
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powf(&self, exponent: f64) -> Result<Self, JetError> {
        let c = *self;
        if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
            let e = exponent as i32;
            let base = if e < 0 {
                if c == 0.0 {
                    return Err(JetError::PowDomain { value: c, exponent });
                }
                1.0 / c
            } else {
                c
            };
            let mut n = e.unsigned_abs();
            let mut result = 1.0;
            let mut square = base;
            while n > 0 {
                if n & 1 == 1 {
                    result *= square;
                }
                n >>= 1;
                if n > 0 {
                    square *= square;
                }
            }
            return Ok(result);
        }
        if c <= 0.0 || !exponent.is_finite() {
            return Err(JetError::PowDomain { value: c, exponent });
        }
        Ok(c.powf(exponent))
    }
    fn apply(&self, f: Function) -> Result<Self, JetError> {
        let c = *self;
        match f {
            Function::Sin => Ok(crate::jets::sin_cos(c).0),
            Function::Cos => Ok(crate::jets::sin_cos(c).1),
            Function::Exp => Ok(c.exp()),
            Function::Ln if c <= 0.0 => Err(JetError::LnDomain { value: c }),
            Function::Ln => Ok(c.ln()),
            Function::Sqrt if c <= 0.0 => Err(JetError::SqrtDomain { value: c }),
            Function::Sqrt => Ok(c.sqrt()),
            Function::Abs if c == 0.0 => Err(JetError::AbsAtZero),
            Function::Abs => Ok(c.abs()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

fn describe(token: &Token) -> String {
    match token {
        Token::Number(v) => format!("number {v}"),
        Token::Ident(s) => format!("identifier `{s}`"),
        Token::Plus => "`+`".into(),
        Token::Minus => "`-`".into(),
        Token::Star => "`*`".into(),
        Token::Slash => "`/`".into(),
        Token::Caret => "`^`".into(),
        Token::LParen => "`(`".into(),
        Token::RParen => "`)`".into(),
        Token::Comma => "`,`".into(),
        Token::End => "end of input".into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let simple = match c {
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'^' => Some(Token::Caret),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            b',' => Some(Token::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push((tok, start));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let literal = &text[start..i];
            let value: f64 = literal
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{literal}`"),
                })?;
            if i < bytes.len() && (bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
                return Err(ParseError::Syntax {
                    offset: i,
                    message: "implicit multiplication is not supported".into(),
                });
            }
            out.push((Token::Number(value), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Token::Ident(text[start..i].to_string()), start));
            continue;
        }
        let ch = text[start..].chars().next().unwrap_or('?');
        return Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        });
    }
    out.push((Token::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    coords: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> (Token, usize) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {}", describe(self.peek())),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            let (_, at) = self.bump();
            let rhs = self.term()?;
            lhs = binary(op, lhs, rhs, at);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinaryOp::Mul,
                Token::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            let (_, at) = self.bump();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs, at);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Token::Minus {
            let (_, at) = self.bump();
            let inner = self.unary()?;
            return Ok(Expr {
                node: Node::Neg(Box::new(inner)),
                span: Span(at),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Token::Caret {
            return Ok(base);
        }
        let (_, at) = self.bump();
        let exponent_offset = self.offset();
        let exponent = self.unary()?;
        if mentions_variable(&exponent) {
            return Err(ParseError::NonConstantExponent {
                offset: exponent_offset,
            });
        }
        Ok(binary(BinaryOp::Pow, base, exponent, at))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.peek().clone() {
            Token::Number(v) => {
                self.bump();
                Ok(Expr {
                    node: Node::Constant(v),
                    span: Span(at),
                })
            }
            Token::LParen => {
                self.bump();
                let inner = self.expr()?;
                if *self.peek() != Token::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            Token::Ident(name) => {
                self.bump();
                if let Some(k) = self.coords.iter().position(|c| *c == name) {
                    return Ok(Expr {
                        node: Node::Variable(k),
                        span: Span(at),
                    });
                }
                let Some(function) = Function::from_name(&name) else {
                    return Err(ParseError::UnknownIdentifier { name, offset: at });
                };
                if *self.peek() != Token::LParen {
                    return Err(self.unexpected("`(` after function name"));
                }
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Token::RParen {
                    loop {
                        args.push(self.expr()?);
                        if *self.peek() == Token::Comma {
                            self.bump();
                            continue;
                        }
                        break;
                    }
                }
                if *self.peek() != Token::RParen {
                    return Err(self.unexpected("`)` or `,`"));
                }
                self.bump();
                if args.len() != 1 {
                    return Err(ParseError::Arity {
                        function: name,
                        expected: 1,
                        got: args.len(),
                        offset: at,
                    });
                }
                Ok(Expr {
                    node: Node::Call(function, Box::new(args.pop().expect("one argument"))),
                    span: Span(at),
                })
            }
            _ => Err(self.unexpected("a number, identifier or `(`")),
        }
    }
}

fn binary(op: BinaryOp, lhs: Expr, rhs: Expr, at: usize) -> Expr {
    Expr {
        node: Node::Binary(op, Box::new(lhs), Box::new(rhs)),
        span: Span(at),
    }
}

fn mentions_variable(e: &Expr) -> bool {
    match &e.node {
        Node::Constant(_) => false,
        Node::Variable(_) => true,
        Node::Neg(a) | Node::Call(_, a) => mentions_variable(a),
        Node::Binary(_, a, b) => mentions_variable(a) || mentions_variable(b),
    }
}

impl Expression {
    /// Parses `text` against the given coordinate names.
    pub fn parse<S: AsRef<str>>(text: &str, coordinates: &[S]) -> Result<Self, ParseError> {
        let coords: Arc<[String]> = coordinates.iter().map(|c| c.as_ref().to_string()).collect();
        Self::parse_shared(text, coords)
    }

    pub(crate) fn parse_shared(text: &str, coords: Arc<[String]>) -> Result<Self, ParseError> {
        let tokens = tokenize(text)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            coords: &coords,
        };
        let root = parser.expr()?;
        if *parser.peek() != Token::End {
            return Err(parser.unexpected("an operator or end of input"));
        }
        Ok(Self { root, coords })
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coords
    }

    /// Evaluates with values given in coordinate order.
    pub fn eval<V: Scalar>(&self, values: &[V]) -> Result<V, EvalError> {
        if values.is_empty() || values.len() != self.coords.len() {
            return Err(EvalError::ValueCount {
                expected: self.coords.len(),
                got: values.len(),
            });
        }
        eval_node(&self.root, values)
    }

    /// Evaluates with values looked up by coordinate name.
    pub fn eval_named<V: Scalar>(&self, assignment: &HashMap<String, V>) -> Result<V, EvalError> {
        let values = self
            .coords
            .iter()
            .map(|c| {
                assignment
                    .get(c)
                    .cloned()
                    .ok_or_else(|| EvalError::Unassigned(c.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        eval_node(&self.root, &values)
    }
}

fn singular(op: &'static str, span: Span) -> impl FnOnce(JetError) -> EvalError {
    move |source| EvalError::Singular {
        op,
        offset: span.0,
        source,
    }
}

fn constant_value(e: &Expr) -> Result<f64, EvalError> {
    eval_node(e, &[0.0])
}

fn eval_node<V: Scalar>(e: &Expr, values: &[V]) -> Result<V, EvalError> {
    match &e.node {
        Node::Constant(c) => Ok(values[0].constant_like(*c)),
        Node::Variable(k) => Ok(values[*k].clone()),
        Node::Neg(a) => Ok(eval_node(a, values)?.neg()),
        Node::Call(f, a) => eval_node(a, values)?
            .apply(*f)
            .map_err(singular(f.name(), e.span)),
        Node::Binary(BinaryOp::Pow, base, exponent) => {
            let r = constant_value(exponent)?;
            eval_node(base, values)?
                .powf(r)
                .map_err(singular(BinaryOp::Pow.node_name(), e.span))
        }
        Node::Binary(op, a, b) => {
            let x = eval_node(a, values)?;
            let y = eval_node(b, values)?;
            match op {
                BinaryOp::Add => Ok(x.add(&y)),
                BinaryOp::Sub => Ok(x.sub(&y)),
                BinaryOp::Mul => Ok(x.mul(&y)),
                BinaryOp::Div => x.div(&y).map_err(singular(op.node_name(), e.span)),
                BinaryOp::Pow => unreachable!("handled above"),
            }
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, &self.coords, f)
    }
}

fn write_node(e: &Expr, coords: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match &e.node {
        Node::Constant(c) => write!(f, "{c:?}"),
        Node::Variable(k) => write!(f, "{}", coords[*k]),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(a, coords, f)?;
            write!(f, ")")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(a, coords, f)?;
            write!(f, ")")
        }
        Node::Binary(op, a, b) => {
            write!(f, "(")?;
            write_node(a, coords, f)?;
            write!(f, " {} ", op.symbol())?;
            write_node(b, coords, f)?;
            write!(f, ")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{seed_coordinates, MultiIndex};

    fn xy() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn var(k: usize) -> Expr {
        Expr {
            node: Node::Variable(k),
            span: Span(0),
        }
    }

    fn num(v: f64) -> Expr {
        Expr {
            node: Node::Constant(v),
            span: Span(0),
        }
    }

    #[test]
    fn parses_sum_of_power_and_call() {
        let e = Expression::parse("x^2 + sin(y)", &xy()).unwrap();
        let expected = binary(
            BinaryOp::Add,
            binary(BinaryOp::Pow, var(0), num(2.0), 0),
            Expr {
                node: Node::Call(Function::Sin, Box::new(var(1))),
                span: Span(0),
            },
            0,
        );
        assert_eq!(e.root(), &expected);
    }

    #[test]
    fn incomplete_input_offset() {
        let err = Expression::parse("x + ", &xy()).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 4, .. }), "{err:?}");
    }

    #[test]
    fn squared_difference() {
        let e = Expression::parse("(x - y)*(x - y)", &xy()).unwrap();
        assert_eq!(e.eval(&[2.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn precedence_and_associativity() {
        let c = xy();
        let v = |s: &str| Expression::parse(s, &c).unwrap().eval(&[2.0, 3.0]).unwrap();
        assert_eq!(v("-x^2"), -4.0);
        assert_eq!(v("2^3^2"), 512.0);
        assert_eq!(v("x - y - 1"), -2.0);
        assert_eq!(v("12 / x / y"), 2.0);
        assert_eq!(v("x + y * 2"), 8.0);
        assert_eq!(v("2^-1"), 0.5);
        assert_eq!(v("1.5e1 + 2E-1"), 15.2);
    }

    #[test]
    fn rejects_bad_input() {
        let c = xy();
        assert!(matches!(
            Expression::parse("x + z", &c),
            Err(ParseError::UnknownIdentifier { offset: 4, .. })
        ));
        assert!(matches!(
            Expression::parse("2x", &c),
            Err(ParseError::Syntax { offset: 1, .. })
        ));
        assert!(matches!(
            Expression::parse("sin(x, y)", &c),
            Err(ParseError::Arity { got: 2, .. })
        ));
        assert!(matches!(
            Expression::parse("x^y", &c),
            Err(ParseError::NonConstantExponent { offset: 2 })
        ));
        assert!(matches!(
            Expression::parse("(x", &c),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            Expression::parse("x $ y", &c),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
        assert!(Expression::parse("", &c).is_err());
        assert!(Expression::parse("sin", &c).is_err());
    }

    #[test]
    fn evaluates_reals_and_jets() {
        let e = Expression::parse("x*y", &xy()).unwrap();
        assert_eq!(e.eval(&[2.0, 5.0]).unwrap(), 10.0);
        let seeds = seed_coordinates(&[2.0, 5.0], 1).unwrap();
        let j = e.eval(&seeds).unwrap();
        assert_eq!(j.coeffs(), &[10.0, 5.0, 2.0]);
        assert_eq!(j.partial(&MultiIndex::new(vec![0, 1])).unwrap(), 2.0);
    }

    #[test]
    fn named_assignment() {
        let e = Expression::parse("x*y", &xy()).unwrap();
        let mut m = HashMap::new();
        m.insert("x".to_string(), 2.0);
        assert_eq!(e.eval_named(&m), Err(EvalError::Unassigned("y".into())));
        m.insert("y".to_string(), 5.0);
        assert_eq!(e.eval_named(&m).unwrap(), 10.0);
    }

    #[test]
    fn division_by_zero_names_node() {
        let e = Expression::parse("1/x", &["x"]).unwrap();
        let seeds = seed_coordinates(&[0.0], 2).unwrap();
        let err = e.eval(&seeds).unwrap_err();
        assert_eq!(
            err,
            EvalError::Singular {
                op: "division",
                offset: 1,
                source: JetError::DivisionByZero
            }
        );
        assert!(err.to_string().contains("division"));
        assert!(e.eval(&[0.0]).is_err());
    }

    #[test]
    fn pretty_print_reparses() {
        let c = xy();
        for text in ["x^2 + sin(y)", "-x^-2*y/3", "abs(x - y)^(1/3)", "exp(-(x+y))^0.5"] {
            let e = Expression::parse(text, &c).unwrap();
            let again = Expression::parse(&e.to_string(), &c).unwrap();
            assert_eq!(e, again, "{text} -> {e}");
        }
    }
}
