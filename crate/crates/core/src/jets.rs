//! Truncated multivariate Taylor series ("jets").
//!
//! A [`Jet`] of order `m` in `n` variables stores every Taylor coefficient
//! `c_α = ∂^α f(p) / α!` with `|α| ≤ m` of a scalar function at a base point
//! `p`. Arithmetic on jets is exact up to truncation, so every derivative used
//! elsewhere in the crate comes from here rather than from finite differences
//! or symbolic manipulation.
//!
//! Coefficients are stored densely in graded-lexicographic order. Because the
//! ordering is graded, the coefficients of order `m' < m` are a prefix of the
//! order-`m` storage and truncation is a slice.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

/// Errors raised by jet arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("coordinate {slot} is not finite ({value})")]
    NonFinite { slot: usize, value: f64 },
    #[error("division by a jet with zero constant term")]
    DivisionByZero,
    #[error("sqrt of a jet with non-positive constant term {value}")]
    SqrtDomain { value: f64 },
    #[error("ln of a jet with non-positive constant term {value}")]
    LnDomain { value: f64 },
    #[error("pow with exponent {exponent} of a jet with constant term {value}")]
    PowDomain { value: f64, exponent: f64 },
    #[error("abs of a jet with zero constant term")]
    AbsAtZero,
    #[error("order exhausted: {needed} derivatives requested, jet carries {available}")]
    OrderExhausted { needed: usize, available: usize },
    #[error("jet shape mismatch: ({0}, {1}) vs ({2}, {3}) (nvars, order)")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("multi-index has {got} entries, jet has {expected} variables")]
    IndexLength { got: usize, expected: usize },
    #[error("operation {op} expects {expected} operand(s), got {got}")]
    Arity {
        op: &'static str,
        expected: usize,
        got: usize,
    },
}

/// Exponent vector `α` of a partial derivative `∂^α`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zero(nvars: usize) -> Self {
        Self(vec![0; nvars])
    }

    /// The unit multi-index `e_i`.
    pub fn unit(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self(e)
    }

    /// Multi-index of the mixed partial `∂_{i_1} … ∂_{i_k}`.
    pub fn from_slots(nvars: usize, slots: &[usize]) -> Self {
        let mut e = vec![0; nvars];
        for &s in slots {
            e[s] += 1;
        }
        Self(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total degree `|α|`.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// `α!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&e| (1..=e).map(f64::from).product::<f64>())
            .product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Index tables shared by all jets of one `(nvars, order)` shape.
#[derive(Debug)]
pub struct Layout {
    nvars: usize,
    order: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<Vec<u32>, usize>,
    /// `prefix[k]` = number of coefficients with `|α| ≤ k`.
    prefix: Vec<usize>,
    /// Unordered pairs `(a, b, c)` with `a ≤ b` and `α_a + α_b = α_c`.
    products: Vec<[u32; 3]>,
    /// Per variable: `(source slot, factor)` for each slot of the order-1-lower layout.
    derivatives: Vec<Vec<(u32, f64)>>,
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Self {
        let mut indices = Vec::new();
        let mut prefix = Vec::with_capacity(order + 1);
        for degree in 0..=order {
            push_degree(nvars, degree as u32, &mut Vec::with_capacity(nvars), &mut indices);
            prefix.push(indices.len());
        }
        let lookup: HashMap<Vec<u32>, usize> = indices
            .iter()
            .enumerate()
            .map(|(k, a)| (a.0.clone(), k))
            .collect();

        let mut products = Vec::new();
        let mut sum = vec![0u32; nvars];
        for a in 0..indices.len() {
            for b in a..indices.len() {
                if indices[a].degree() + indices[b].degree() > order {
                    continue;
                }
                for v in 0..nvars {
                    sum[v] = indices[a].0[v] + indices[b].0[v];
                }
                let c = lookup[&sum];
                products.push([a as u32, b as u32, c as u32]);
            }
        }

        let mut derivatives = Vec::with_capacity(nvars);
        let lower = if order == 0 { 0 } else { prefix[order - 1] };
        for v in 0..nvars {
            let mut table = Vec::with_capacity(lower);
            for alpha in &indices[..lower] {
                let mut raised = alpha.0.clone();
                raised[v] += 1;
                table.push((lookup[&raised] as u32, f64::from(alpha.0[v] + 1)));
            }
            derivatives.push(table);
        }

        Self {
            nvars,
            order,
            indices,
            lookup,
            prefix,
            products,
            derivatives,
        }
    }

    /// Shared layout for the given shape.
    pub fn get(nvars: usize, order: usize) -> Arc<Layout> {
        thread_local! {
            static LOCAL: RefCell<Vec<((usize, usize), Arc<Layout>)>> = const { RefCell::new(Vec::new()) };
        }
        LOCAL.with(|local| {
            let mut local = local.borrow_mut();
            if let Some((_, layout)) = local.iter().find(|(key, _)| *key == (nvars, order)) {
                return layout.clone();
            }
            let layout = Self::get_shared(nvars, order);
            local.push(((nvars, order), layout.clone()));
            layout
        })
    }

    fn get_shared(nvars: usize, order: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(&alpha.0).copied()
    }
}

fn push_degree(nvars: usize, remaining: u32, head: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if head.len() + 1 == nvars {
        head.push(remaining);
        out.push(MultiIndex(head.clone()));
        head.pop();
        return;
    }
    for e in (0..=remaining).rev() {
        head.push(e);
        push_degree(nvars, remaining - e, head, out);
        head.pop();
    }
}

/// Number of coefficients of a jet: `C(nvars + order, order)`.
pub fn coefficient_count(nvars: usize, order: usize) -> usize {
    let mut c: usize = 1;
    for k in 1..=order {
        c = c * (nvars + k) / k;
    }
    c
}

/// Truncated Taylor expansion of a scalar function at a base point.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.nvars())
            .field("order", &self.order())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.nvars() == other.nvars() && self.order() == other.order() && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn zero(nvars: usize, order: usize) -> Self {
        let layout = Layout::get(nvars, order);
        let coeffs = vec![0.0; layout.len()];
        Self { layout, coeffs }
    }

    pub fn constant(value: f64, nvars: usize, order: usize) -> Self {
        let mut j = Self::zero(nvars, order);
        j.coeffs[0] = value;
        j
    }

    /// Jet of the coordinate function `x^index` at `x^index = value`.
    pub fn variable(value: f64, index: usize, nvars: usize, order: usize) -> Self {
        assert!(index < nvars, "variable index {index} out of range for {nvars} variables");
        let mut j = Self::constant(value, nvars, order);
        if order > 0 {
            j.coeffs[1 + index] = 1.0;
        }
        j
    }

    /// Builds a jet from coefficients in graded-lexicographic order.
    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<f64>) -> Self {
        let layout = Layout::get(nvars, order);
        assert_eq!(coeffs.len(), layout.len(), "coefficient count mismatch");
        Self { layout, coeffs }
    }

    /// A jet with the same shape as `self` holding the constant `value`.
    pub fn constant_like(&self, value: f64) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Self {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    pub fn zero_like(&self) -> Self {
        self.constant_like(0.0)
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Value of the function at the base point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient `c_α`, or 0 if `|α|` exceeds the order.
    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.layout
            .position(alpha)
            .map_or(0.0, |k| self.coeffs[k])
    }

    /// `∂^α f` at the base point, i.e. `α! · c_α`.
    pub fn partial(&self, alpha: &MultiIndex) -> Result<f64, JetError> {
        if alpha.len() != self.nvars() {
            return Err(JetError::IndexLength {
                got: alpha.len(),
                expected: self.nvars(),
            });
        }
        let degree = alpha.degree();
        if degree > self.order() {
            return Err(JetError::OrderExhausted {
                needed: degree,
                available: self.order(),
            });
        }
        Ok(alpha.factorial() * self.coeff(alpha))
    }

    /// First partial `∂_i f` at the base point.
    pub fn gradient_component(&self, i: usize) -> Result<f64, JetError> {
        self.partial(&MultiIndex::unit(self.nvars(), i))
    }

    /// Jet of `∂_i f`, one order lower.
    pub fn differentiate(&self, i: usize) -> Result<Jet, JetError> {
        if self.order() == 0 {
            return Err(JetError::OrderExhausted {
                needed: 1,
                available: 0,
            });
        }
        let layout = Layout::get(self.nvars(), self.order() - 1);
        let coeffs = self.layout.derivatives[i]
            .iter()
            .map(|&(src, factor)| factor * self.coeffs[src as usize])
            .collect();
        Ok(Jet { layout, coeffs })
    }

    /// Drops all coefficients above `order`.
    ///
    /// Panics if `order` exceeds the jet's order.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(
            order <= self.order(),
            "cannot truncate an order-{} jet to order {order}",
            self.order()
        );
        if order == self.order() {
            return self.clone();
        }
        let layout = Layout::get(self.nvars(), order);
        let coeffs = self.coeffs[..self.layout.prefix[order]].to_vec();
        Jet { layout, coeffs }
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, factor: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn same_shape(&self, other: &Jet) -> bool {
        self.nvars() == other.nvars() && self.order() == other.order()
    }

    fn check_shape(&self, other: &Jet) -> Result<(), JetError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(JetError::ShapeMismatch(
                self.nvars(),
                self.order(),
                other.nvars(),
                other.order(),
            ))
        }
    }

    fn assert_shape(&self, other: &Jet) {
        if let Err(e) = self.check_shape(other) {
            panic!("{e}");
        }
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        self.assert_shape(other);
        let a = &self.coeffs;
        let b = &other.coeffs;
        // −0 is the additive identity, so a lone product keeps the sign of zero
        let mut out = vec![-0.0; a.len()];
        for &[i, j, k] in &self.layout.products {
            let (i, j) = (i as usize, j as usize);
            if i == j {
                out[k as usize] += a[i] * b[i];
            } else {
                out[k as usize] += a[i] * b[j] + a[j] * b[i];
            }
        }
        Jet {
            layout: self.layout.clone(),
            coeffs: out,
        }
    }

    /// Evaluates `Σ_k taylor[k] (f − f(p))^k` by Horner's scheme, where `taylor`
    /// holds the Taylor coefficients of an outer function at `f(p)`.
    fn compose(&self, taylor: &[f64]) -> Jet {
        let m = self.order();
        debug_assert_eq!(taylor.len(), m + 1);
        let mut nilpotent = self.clone();
        nilpotent.coeffs[0] = 0.0;
        let mut acc = self.constant_like(taylor[m]);
        for k in (0..m).rev() {
            acc = acc.mul_jet(&nilpotent);
            // the product has no constant term; assigning keeps inf out of 0 · inf
            acc.coeffs[0] = taylor[k];
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        // d^k/dx^k (1/x) / k! = (-1)^k / x^{k+1}
        let inv = 1.0 / c;
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut term = inv;
        for _ in 0..=self.order() {
            taylor.push(term);
            term *= -inv;
        }
        Ok(self.compose(&taylor))
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_shape(other)?;
        Ok(self.mul_jet(&other.recip()?))
    }

    /// Integer power by repeated squaring; negative exponents go through `recip`.
    pub fn powi(&self, exponent: i32) -> Result<Jet, JetError> {
        let base = if exponent < 0 {
            self.recip().map_err(|_| JetError::PowDomain {
                value: self.value(),
                exponent: f64::from(exponent),
            })?
        } else {
            self.clone()
        };
        let mut e = exponent.unsigned_abs();
        let mut result = self.constant_like(1.0);
        let mut square = base;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&square);
            }
            e >>= 1;
            if e > 0 {
                square = square.mul_jet(&square);
            }
        }
        Ok(result)
    }

    /// Real power. Small integer exponents are exact products; otherwise the
    /// constant term must be positive.
    pub fn powf(&self, exponent: f64) -> Result<Jet, JetError> {
        if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
            return self.powi(exponent as i32);
        }
        let c = self.value();
        if c <= 0.0 || !exponent.is_finite() {
            return Err(JetError::PowDomain { value: c, exponent });
        }
        Ok(self.compose(&power_series(c, exponent, c.powf(exponent), self.order())))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c <= 0.0 {
            return Err(JetError::SqrtDomain { value: c });
        }
        Ok(self.compose(&power_series(c, 0.5, c.sqrt(), self.order())))
    }

    /// `|f|`, defined only where `f(p) ≠ 0`.
    pub fn abs(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c == 0.0 {
            Err(JetError::AbsAtZero)
        } else if c > 0.0 {
            Ok(self.clone())
        } else {
            Ok(-self)
        }
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut factorial = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                factorial *= k as f64;
            }
            taylor.push(e / factorial);
        }
        self.compose(&taylor)
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c <= 0.0 {
            return Err(JetError::LnDomain { value: c });
        }
        let mut taylor = vec![c.ln()];
        let inv = 1.0 / c;
        let mut power = 1.0;
        for k in 1..=self.order() {
            power *= inv;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            taylor.push(sign * power / k as f64);
        }
        Ok(self.compose(&taylor))
    }

    pub fn sin(&self) -> Jet {
        self.compose(&trig_series(self.value(), self.order(), 0))
    }

    pub fn cos(&self) -> Jet {
        self.compose(&trig_series(self.value(), self.order(), 1))
    }
}

/// Taylor coefficients of `x^r` at `x = c`: `binom(r, k) c^{r-k}`. The caller
/// supplies `c^r` so that the value matches real evaluation bit for bit.
fn power_series(c: f64, r: f64, lead: f64, order: usize) -> Vec<f64> {
    let mut taylor = Vec::with_capacity(order + 1);
    taylor.push(lead);
    let mut binom = 1.0;
    for k in 1..=order {
        binom *= (r - (k as f64 - 1.0)) / k as f64;
        taylor.push(binom * c.powf(r - k as f64));
    }
    taylor
}

/// `(sin c, cos c)` for both evaluators. Kept out of line: inlined, the
/// compiler picks `sin`, `cos` or a fused `sincos` per call site, and those
/// can differ in the last bit.
#[inline(never)]
pub(crate) fn sin_cos(c: f64) -> (f64, f64) {
    c.sin_cos()
}

/// Taylor coefficients of `sin` (`shift = 0`) or `cos` (`shift = 1`) at `c`.
fn trig_series(c: f64, order: usize, shift: usize) -> Vec<f64> {
    let (s, co) = sin_cos(c);
    // derivative cycle of sin: sin, cos, -sin, -cos
    let cycle = [s, co, -s, -co];
    let mut taylor = Vec::with_capacity(order + 1);
    let mut factorial = 1.0;
    for k in 0..=order {
        if k > 0 {
            factorial *= k as f64;
        }
        taylor.push(cycle[(k + shift) % 4] / factorial);
    }
    taylor
}

/// One jet per coordinate of `point`, seeded as independent variables.
pub fn seed_coordinates(point: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
    if let Some((slot, &value)) = point.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(JetError::NonFinite { slot, value });
    }
    let n = point.len();
    Ok(point
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(v, i, n, order))
        .collect())
}

/// Operation tags accepted by [`elementary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow(f64),
    Sqrt,
    Abs,
    Exp,
    Ln,
    Sin,
    Cos,
}

impl ElementaryOp {
    pub fn name(&self) -> &'static str {
        match self {
            ElementaryOp::Add => "add",
            ElementaryOp::Sub => "sub",
            ElementaryOp::Mul => "mul",
            ElementaryOp::Div => "div",
            ElementaryOp::Neg => "neg",
            ElementaryOp::Pow(_) => "pow",
            ElementaryOp::Sqrt => "sqrt",
            ElementaryOp::Abs => "abs",
            ElementaryOp::Exp => "exp",
            ElementaryOp::Ln => "ln",
            ElementaryOp::Sin => "sin",
            ElementaryOp::Cos => "cos",
        }
    }

    fn arity(&self) -> usize {
        match self {
            ElementaryOp::Add | ElementaryOp::Sub | ElementaryOp::Mul | ElementaryOp::Div => 2,
            _ => 1,
        }
    }
}

/// Applies a tagged elementary operation, checking operand count and shapes.
pub fn elementary(op: ElementaryOp, operands: &[&Jet]) -> Result<Jet, JetError> {
    if operands.len() != op.arity() {
        return Err(JetError::Arity {
            op: op.name(),
            expected: op.arity(),
            got: operands.len(),
        });
    }
    let a = operands[0];
    if let Some(b) = operands.get(1) {
        a.check_shape(b)?;
    }
    match op {
        ElementaryOp::Add => Ok(a + operands[1]),
        ElementaryOp::Sub => Ok(a - operands[1]),
        ElementaryOp::Mul => Ok(a * operands[1]),
        ElementaryOp::Div => a.checked_div(operands[1]),
        ElementaryOp::Neg => Ok(-a),
        ElementaryOp::Pow(r) => a.powf(r),
        ElementaryOp::Sqrt => a.sqrt(),
        ElementaryOp::Abs => a.abs(),
        ElementaryOp::Exp => Ok(a.exp()),
        ElementaryOp::Ln => a.ln(),
        ElementaryOp::Sin => Ok(a.sin()),
        ElementaryOp::Cos => Ok(a.cos()),
    }
}

impl Add<&Jet> for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.assert_shape(rhs);
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&Jet> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.assert_shape(rhs);
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.assert_shape(rhs);
        self.coeffs.iter_mut().zip(&rhs.coeffs).for_each(|(a, b)| *a += b);
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.assert_shape(rhs);
        self.coeffs.iter_mut().zip(&rhs.coeffs).for_each(|(a, b)| *a -= b);
    }
}

impl Jet {
    /// `self += factor * rhs`.
    pub fn add_scaled(&mut self, factor: f64, rhs: &Jet) {
        self.assert_shape(rhs);
        self.coeffs
            .iter_mut()
            .zip(&rhs.coeffs)
            .for_each(|(a, b)| *a += factor * b);
    }

    /// `self += a * b`, truncated.
    pub fn add_product(&mut self, a: &Jet, b: &Jet) {
        self.assert_shape(a);
        self.assert_shape(b);
        let (x, y) = (&a.coeffs, &b.coeffs);
        for &[i, j, k] in &self.layout.products {
            let (i, j) = (i as usize, j as usize);
            if i == j {
                self.coeffs[k as usize] += x[i] * y[i];
            } else {
                self.coeffs[k as usize] += x[i] * y[j] + x[j] * y[i];
            }
        }
    }
}
