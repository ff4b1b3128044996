//! Carter-quantized operators `K̂ = ∇_i K^{ij} ∇_j`, their pointwise
//! composition and commutators through jets, the quadratic integrals
//! `K^{ij} p_i p_j` with their Poisson brackets, and a geodesic integrator
//! used to watch those integrals along trajectories.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::expr::{EvalError, Expression};
use crate::geometry::{
    check_nondegenerate, evaluate_metric, raise_index, GeometryError, JetTensor, MetricField,
    MetricFrame, Variance,
};
use crate::jets::{seed_coordinates, Jet, JetError};
use crate::projective::{benenti_from_metrics, ProjectivePair};

/// Jet order needed to evaluate a commutator of two second-order operators.
pub const COMMUTATOR_ORDER: usize = 4;

/// Jet order used by [`commutator_decompose`]: the commutator is kept as a
/// first-order jet so that `∂_k Q^{ij}` can be read off.
pub const DECOMPOSITION_ORDER: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("coefficient field uses coordinates {got:?}, metric uses {expected:?}")]
    Coordinates {
        got: Vec<String>,
        expected: Vec<String>,
    },
    #[error("phase-space point has non-finite entries")]
    NonFinite,
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("horizon must be non-negative and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("trajectory left the domain at time {time}")]
    DomainExit { time: f64, point: Vec<f64> },
}

/// Where the (lower-index) coefficients `K_{ij}` of an operator come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    /// `K = g`, giving the Beltrami–Laplace operator.
    Metric,
    /// `K = Σ_k w_k K_k` over the Benenti family of `(g, ḡ)`; `K(t)` has
    /// weights `t^k`.
    Benenti { gbar: MetricField, weights: Vec<f64> },
    /// Explicit symmetric components in the metric's chart.
    Explicit(MetricField),
}

/// `K̂ f = ∇_i K^{ij} ∇_j f` over a background metric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedOperator {
    metric: MetricField,
    coefficients: Coefficients,
}

impl QuantizedOperator {
    pub fn laplace(metric: &MetricField) -> Self {
        Self {
            metric: metric.clone(),
            coefficients: Coefficients::Metric,
        }
    }

    /// The quantization of `K(t)` for a pair.
    pub fn killing(pair: &ProjectivePair, t: f64) -> Self {
        let weights = (0..pair.dim()).map(|k| t.powi(k as i32)).collect();
        Self::benenti_combination(pair, weights)
    }

    pub fn benenti_combination(pair: &ProjectivePair, weights: Vec<f64>) -> Self {
        Self {
            metric: pair.g().clone(),
            coefficients: Coefficients::Benenti {
                gbar: pair.gbar().clone(),
                weights,
            },
        }
    }

    /// Operator with explicitly given `K_{ij}`.
    pub fn explicit(metric: &MetricField, k: MetricField) -> Result<Self, OperatorError> {
        if k.coordinates() != metric.coordinates() {
            return Err(OperatorError::Coordinates {
                got: k.coordinates().to_vec(),
                expected: metric.coordinates().to_vec(),
            });
        }
        Ok(Self {
            metric: metric.clone(),
            coefficients: Coefficients::Explicit(k),
        })
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Metric frame and `K_{ij}`, both with metric jets of order `order`.
    pub fn lower_at(
        &self,
        point: &[f64],
        order: usize,
    ) -> Result<(MetricFrame, JetTensor), OperatorError> {
        let metric = MetricFrame::new(&self.metric, point, order.max(1))?;
        let k = match &self.coefficients {
            Coefficients::Metric => metric.g.clone(),
            Coefficients::Benenti { gbar, weights } => {
                let gbar = evaluate_metric(gbar, point, metric.order())?;
                benenti_from_metrics(&metric.g, &gbar)?.killing_combination(weights)
            }
            Coefficients::Explicit(k) => evaluate_components(k, point, metric.order())?,
        };
        Ok((metric, k))
    }

    /// Values of `K_{ij}` at `point` in plain floating point.
    pub fn lower_values(&self, point: &[f64]) -> Result<Vec<f64>, OperatorError> {
        let n = self.dim();
        if point.len() != n {
            return Err(OperatorError::Dimension(point.len(), n));
        }
        let g = self.metric.values_at(point)?;
        match &self.coefficients {
            Coefficients::Metric => Ok(g),
            Coefficients::Explicit(k) => Ok(k.values_at(point)?),
            Coefficients::Benenti { gbar, weights } => {
                let gbar = gbar.values_at(point)?;
                benenti_values(&g, &gbar, n, weights)
            }
        }
    }

    /// Everything needed to apply the operator at `point`, with metric jets of
    /// order `order` (outputs of order up to `order − 1`).
    pub fn frame(&self, point: &[f64], order: usize) -> Result<OperatorFrame, OperatorError> {
        let (metric, k) = self.lower_at(point, order)?;
        OperatorFrame::new(Arc::new(metric), &k)
    }
}

/// Jets of a symmetric component matrix, with no nondegeneracy requirement.
pub fn evaluate_components(
    field: &MetricField,
    point: &[f64],
    order: usize,
) -> Result<JetTensor, OperatorError> {
    let n = field.dim();
    if point.len() != n {
        return Err(OperatorError::Dimension(point.len(), n));
    }
    let seeds = seed_coordinates(point, order)?;
    let mut comps = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            comps.push(field.component(i.min(j), i.max(j)).eval(&seeds)?);
        }
    }
    Ok(JetTensor::from_fn(
        n,
        vec![Variance::Down; 2],
        point.into(),
        |idx| comps[idx[0] * n + idx[1]].clone(),
    ))
}

/// `Σ_k w_k K_k` from constant metric matrices: `L` from its defining
/// formula, then the Faddeev–LeVerrier recursion on plain matrices.
fn benenti_values(g: &[f64], gbar: &[f64], n: usize, weights: &[f64]) -> Result<Vec<f64>, OperatorError> {
    let det_g = check_nondegenerate(g, n)?;
    let det_gbar = check_nondegenerate(gbar, n)?;
    let g = DMatrix::from_row_slice(n, n, g);
    let gbar_inv = DMatrix::from_row_slice(n, n, gbar)
        .try_inverse()
        .ok_or(GeometryError::Singular { column: 0 })?;
    let l = (gbar_inv * &g) * (det_gbar / det_g).abs().powf(1.0 / (n as f64 + 1.0));
    let id = DMatrix::<f64>::identity(n, n);
    // M_1 = Id, c_{n−k} = −tr(L M_k)/k, M_{k+1} = L M_k + c_{n−k} Id; S_j = M_{n−j}
    let mut m = id.clone();
    let mut ms = Vec::with_capacity(n);
    for k in 1..=n {
        ms.push(m.clone());
        let lm = &l * &m;
        let c = -lm.trace() / k as f64;
        m = lm + &id * c;
    }
    let mut k = DMatrix::<f64>::zeros(n, n);
    for (j, w) in weights.iter().enumerate().take(n) {
        k += (&g * &ms[n - 1 - j]) * *w;
    }
    let k = (&k + k.transpose()) * 0.5;
    Ok((0..n * n).map(|idx| k[(idx / n, idx % n)]).collect())
}

/// `g^{ij}` and `Γ^i_{jk}` (flattened as `[(i * n + j) * n + k]`) at `point`
/// in plain floating point.
pub fn christoffel_values(
    metric: &MetricField,
    point: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), OperatorError> {
    let n = metric.dim();
    let g = evaluate_components(metric, point, 1)?;
    let values = g.values();
    check_nondegenerate(&values, n)?;
    let ginv = DMatrix::from_row_slice(n, n, &values)
        .try_inverse()
        .ok_or(GeometryError::Singular { column: 0 })?;
    // dg[(a * n + b) * n + c] = ∂_c g_ab
    let mut dg = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                dg[(a * n + b) * n + c] = g.at(a, b).gradient_component(c)?;
            }
        }
    }
    let mut gamma = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut acc = 0.0;
                for s in 0..n {
                    acc += ginv[(i, s)]
                        * (dg[(s * n + k) * n + j] + dg[(s * n + j) * n + k]
                            - dg[(j * n + k) * n + s]);
                }
                gamma[(i * n + j) * n + k] = 0.5 * acc;
                gamma[(i * n + k) * n + j] = 0.5 * acc;
            }
        }
    }
    let ginv = (0..n * n).map(|idx| ginv[(idx / n, idx % n)]).collect();
    Ok((ginv, gamma))
}

/// An operator evaluated at one point: metric frame plus `K^{ij}`.
#[derive(Debug, Clone)]
pub struct OperatorFrame {
    metric: Arc<MetricFrame>,
    k_upper: JetTensor,
}

impl OperatorFrame {
    /// Raises both indices of `K_{ij}`.
    pub fn new(metric: Arc<MetricFrame>, k_lower: &JetTensor) -> Result<Self, OperatorError> {
        let half = raise_index(k_lower, &metric.ginv, 0)?;
        let k_upper = raise_index(&half, &metric.ginv, 1)?.symmetrize(0, 1)?;
        Ok(Self { metric, k_upper })
    }

    /// Uses already raised coefficients `K^{ij}`.
    pub fn from_upper(metric: Arc<MetricFrame>, k_upper: JetTensor) -> Result<Self, OperatorError> {
        if k_upper.slots() != [Variance::Up, Variance::Up] {
            return Err(GeometryError::Variance { slot: 0 }.into());
        }
        if k_upper.dim() != metric.dim() {
            return Err(OperatorError::Dimension(k_upper.dim(), metric.dim()));
        }
        Ok(Self { metric, k_upper })
    }

    pub fn metric(&self) -> &MetricFrame {
        &self.metric
    }

    pub fn shared_metric(&self) -> Arc<MetricFrame> {
        self.metric.clone()
    }

    /// `K^{ij}`.
    pub fn coefficients(&self) -> &JetTensor {
        &self.k_upper
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn point(&self) -> &[f64] {
        self.metric.point()
    }

    fn check_input(&self, f: &Jet) -> Result<usize, OperatorError> {
        if f.nvars() != self.dim() {
            return Err(OperatorError::Dimension(f.nvars(), self.dim()));
        }
        if f.order() < 2 {
            return Err(JetError::OrderExhausted {
                needed: 2,
                available: f.order(),
            }
            .into());
        }
        let out = f.order() - 2;
        let available = self.k_upper.order().min(self.metric.gamma.order() + 1);
        if available < out + 1 {
            return Err(JetError::OrderExhausted {
                needed: out + 1,
                available,
            }
            .into());
        }
        Ok(out)
    }

    /// `V^i = K^{ij} ∂_j f`, one order below `f`.
    fn flux(&self, f: &Jet, order: usize) -> Result<Vec<Jet>, OperatorError> {
        let n = self.dim();
        let grad = (0..n)
            .map(|j| f.differentiate(j))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..n)
            .map(|i| {
                let mut v = Jet::zero(n, order);
                for (j, df) in grad.iter().enumerate() {
                    v.add_product(&self.k_upper.at(i, j).truncate(order), df);
                }
                v
            })
            .collect())
    }

    /// Jet of `K̂ f` two orders below `f`, as the covariant divergence
    /// `∂_i V^i + Γ^s_{si} V^i`.
    pub fn apply(&self, f: &Jet) -> Result<Jet, OperatorError> {
        let out = self.check_input(f)?;
        let n = self.dim();
        let v = self.flux(f, out + 1)?;
        let gamma = &self.metric.gamma;
        let mut acc = Jet::zero(n, out);
        for (i, vi) in v.iter().enumerate() {
            acc += &vi.differentiate(i)?;
            let vi = vi.truncate(out);
            for s in 0..n {
                acc.add_product(&gamma.get(&[s, s, i]).truncate(out), &vi);
            }
        }
        Ok(acc)
    }

    /// The same operator in density form `(1/√|g|) ∂_i (√|g| V^i)`.
    pub fn apply_density(&self, f: &Jet) -> Result<Jet, OperatorError> {
        let out = self.check_input(f)?;
        let n = self.dim();
        let v = self.flux(f, out + 1)?;
        let vol = self.metric.volume.truncate(out + 1);
        let mut acc = Jet::zero(n, out);
        for (i, vi) in v.iter().enumerate() {
            acc += &(&vol * vi).differentiate(i)?;
        }
        Ok(&acc * &vol.truncate(out).recip()?)
    }

    /// Relative disagreement between [`apply`](Self::apply) and
    /// [`apply_density`](Self::apply_density), over all coefficients.
    pub fn divergence_form_defect(&self, f: &Jet) -> Result<f64, OperatorError> {
        let a = self.apply(f)?;
        let b = self.apply_density(f)?;
        let diff = a
            .coeffs()
            .iter()
            .zip(b.coeffs())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        Ok(diff / a.max_abs().max(b.max_abs()).max(1.0))
    }

    /// Principal symbol `K^{ij}(x) p_i p_j` at the frame's point.
    pub fn symbol(&self, p: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.k_upper.at(i, j).value() * p[i] * p[j];
            }
        }
        acc
    }

    /// `(∂I/∂x, ∂I/∂p)` of the symbol; needs first-order coefficient jets.
    pub fn symbol_gradient(&self, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>), OperatorError> {
        let n = self.dim();
        let mut dx = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let k = self.k_upper.at(i, j);
                dp[i] += 2.0 * k.value() * p[j];
                for (l, d) in dx.iter_mut().enumerate() {
                    *d += k.gradient_component(l)? * p[i] * p[j];
                }
            }
        }
        Ok((dx, dp))
    }
}

/// The Benenti family of a pair at one point with raised coefficients, from
/// which the frame of every `K̂(t)` is assembled without re-evaluating metrics.
#[derive(Debug, Clone)]
pub struct FamilyFrame {
    metric: Arc<MetricFrame>,
    upper: Vec<JetTensor>,
}

impl FamilyFrame {
    pub fn new(pair: &ProjectivePair, point: &[f64], order: usize) -> Result<Self, OperatorError> {
        let metric = MetricFrame::new(pair.g(), point, order.max(1))?;
        let gbar = evaluate_metric(pair.gbar(), point, metric.order())?;
        let benenti = benenti_from_metrics(&metric.g, &gbar)?;
        let upper = benenti
            .k_coeffs
            .iter()
            .map(|k| {
                let half = raise_index(k, &metric.ginv, 0)?;
                raise_index(&half, &metric.ginv, 1)?.symmetrize(0, 1)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            metric: Arc::new(metric),
            upper,
        })
    }

    pub fn metric(&self) -> &MetricFrame {
        &self.metric
    }

    pub fn point(&self) -> &[f64] {
        self.metric.point()
    }

    /// Frame of `K̂(t)`.
    pub fn operator(&self, t: f64) -> OperatorFrame {
        let mut acc = self.upper[self.upper.len() - 1].clone();
        for c in self.upper[..self.upper.len() - 1].iter().rev() {
            acc = acc.scale(t).add(c);
        }
        OperatorFrame {
            metric: self.metric.clone(),
            k_upper: acc,
        }
    }

    /// Frame of `Σ_k w_k K̂_k`.
    pub fn combination(&self, weights: &[f64]) -> OperatorFrame {
        let mut acc = self.upper[0].scale(0.0);
        for (w, k) in weights.iter().zip(&self.upper) {
            acc = acc.add(&k.scale(*w));
        }
        OperatorFrame {
            metric: self.metric.clone(),
            k_upper: acc,
        }
    }

    /// Frame of the Beltrami–Laplace operator.
    pub fn laplace(&self) -> OperatorFrame {
        OperatorFrame {
            metric: self.metric.clone(),
            k_upper: self.metric.ginv.clone(),
        }
    }
}

/// Jet of `K̂ f` at `p` to order `output_order`.
pub fn apply_operator(
    op: &QuantizedOperator,
    f: &Expression,
    p: &[f64],
    output_order: usize,
) -> Result<Jet, OperatorError> {
    let frame = op.frame(p, output_order + 1)?;
    frame.apply(&function_jet(f, p, output_order + 2)?)
}

/// Relative disagreement of the Christoffel and density forms of `K̂ f`.
pub fn density_form_defect(
    op: &QuantizedOperator,
    f: &Expression,
    p: &[f64],
    output_order: usize,
) -> Result<f64, OperatorError> {
    let frame = op.frame(p, output_order + 1)?;
    frame.divergence_form_defect(&function_jet(f, p, output_order + 2)?)
}

/// Jet of `Δ_g f` at `p`.
pub fn laplace_apply(
    g: &MetricField,
    f: &Expression,
    p: &[f64],
    output_order: usize,
) -> Result<Jet, OperatorError> {
    apply_operator(&QuantizedOperator::laplace(g), f, p, output_order)
}

/// Jet of an expression at a point.
pub fn function_jet(f: &Expression, p: &[f64], order: usize) -> Result<Jet, OperatorError> {
    if f.coordinates().len() != p.len() {
        return Err(OperatorError::Dimension(p.len(), f.coordinates().len()));
    }
    Ok(f.eval(&seed_coordinates(p, order)?)?)
}

/// `(K̂_a K̂_b − K̂_b K̂_a) f` at a point, with both compositions kept for
/// scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorValue {
    pub value: f64,
    /// `K̂_a(K̂_b f)`.
    pub forward: f64,
    /// `K̂_b(K̂_a f)`.
    pub backward: f64,
}

impl CommutatorValue {
    /// `max(1, |K̂_a K̂_b f|, |K̂_b K̂_a f|)`.
    pub fn scale(&self) -> f64 {
        1f64.max(self.forward.abs()).max(self.backward.abs())
    }

    pub fn relative(&self) -> f64 {
        self.value.abs() / self.scale()
    }
}

/// Jets of `K̂_a(K̂_b f)` and `K̂_b(K̂_a f)`, four orders below `f`.
pub fn compositions(
    a: &OperatorFrame,
    b: &OperatorFrame,
    f: &Jet,
) -> Result<(Jet, Jet), OperatorError> {
    if f.order() < 4 {
        return Err(JetError::OrderExhausted {
            needed: 4,
            available: f.order(),
        }
        .into());
    }
    let forward = a.apply(&b.apply(f)?)?;
    let backward = b.apply(&a.apply(f)?)?;
    Ok((forward, backward))
}

/// Commutator value from frames and a function jet of order ≥ 4.
pub fn commutator_at(
    a: &OperatorFrame,
    b: &OperatorFrame,
    f: &Jet,
) -> Result<CommutatorValue, OperatorError> {
    let f = f.truncate(4.min(f.order()));
    let (forward, backward) = compositions(a, b, &f)?;
    Ok(CommutatorValue {
        value: (&forward - &backward).value(),
        forward: forward.value(),
        backward: backward.value(),
    })
}

/// `[K̂_t, K̂_s] f` at `p`.
pub fn commutator_apply(
    op_t: &QuantizedOperator,
    op_s: &QuantizedOperator,
    f: &Expression,
    p: &[f64],
) -> Result<CommutatorValue, OperatorError> {
    let a = op_t.frame(p, COMMUTATOR_ORDER)?;
    let b = op_s.frame(p, COMMUTATOR_ORDER)?;
    commutator_at(&a, &b, &function_jet(f, p, COMMUTATOR_ORDER)?)
}

/// A commutator written as `∇_i Q^{ij} ∇_j + V^ℓ ∇_ℓ` at a point, with the
/// terms that form cannot represent measured separately.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorDecomposition {
    dim: usize,
    /// `Q^{ij}`, row-major and symmetric.
    pub q: Vec<f64>,
    /// `V^ℓ`.
    pub v: Vec<f64>,
    /// Raw first-order coefficient `W^ℓ = ∇_i Q^{iℓ} + V^ℓ`.
    pub w: Vec<f64>,
    /// Commutator applied to the constant function 1.
    pub zeroth: f64,
    /// Commutator applied to `u_i u_j u_k` (`u = x − p`, `i ≤ j ≤ k`); these
    /// measure third-order terms.
    pub cubic: Vec<f64>,
    /// Largest `|K̂_a K̂_b u|`, `|K̂_b K̂_a u|` over all probes, at least 1.
    pub scale: f64,
}

impl CommutatorDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q_at(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.dim + j]
    }

    pub fn q_norm(&self) -> f64 {
        max_abs(&self.q)
    }

    pub fn v_norm(&self) -> f64 {
        max_abs(&self.v)
    }

    pub fn cubic_norm(&self) -> f64 {
        max_abs(&self.cubic)
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Probes `[K̂_a, K̂_b]` with `1` and centred monomials of degree 1, 2, 3
/// and solves for `Q`, `V`. Both frames need metric jets of order ≥ 4.
pub fn decompose_at(
    a: &OperatorFrame,
    b: &OperatorFrame,
) -> Result<CommutatorDecomposition, OperatorError> {
    let n = a.dim();
    let order = DECOMPOSITION_ORDER;
    let u: Vec<Jet> = (0..n).map(|k| Jet::variable(0.0, k, n, order)).collect();
    let mut scale: f64 = 1.0;
    let mut probe = |f: &Jet| -> Result<Jet, OperatorError> {
        let (forward, backward) = compositions(a, b, f)?;
        scale = scale.max(forward.value().abs()).max(backward.value().abs());
        Ok(&forward - &backward)
    };

    let zeroth = probe(&Jet::constant(1.0, n, order))?.value();

    // C(u_k) = W^k
    let mut w = vec![0.0; n];
    for (k, uk) in u.iter().enumerate() {
        w[k] = probe(uk)?.value();
    }

    // C(u_i u_j) = 2 Q^{ij} + W^i u_j + W^j u_i
    let mut q = vec![0.0; n * n];
    // dq[(k * n + i) * n + j] = ∂_k Q^{ij}
    let mut dq = vec![0.0; n * n * n];
    for i in 0..n {
        for j in i..n {
            let c = probe(&(&u[i] * &u[j]))?;
            q[i * n + j] = 0.5 * c.value();
            q[j * n + i] = q[i * n + j];
            for k in 0..n {
                let mut d = c.gradient_component(k)?;
                if j == k {
                    d -= w[i];
                }
                if i == k {
                    d -= w[j];
                }
                dq[(k * n + i) * n + j] = 0.5 * d;
                dq[(k * n + j) * n + i] = 0.5 * d;
            }
        }
    }

    // V^j = W^j − ∂_i Q^{ij} − Γ^i_{is} Q^{sj}
    let gamma = &a.metric().gamma;
    let v = (0..n)
        .map(|j| {
            let mut div = 0.0;
            for i in 0..n {
                div += dq[(i * n + i) * n + j];
                for s in 0..n {
                    div += gamma.get(&[i, i, s]).value() * q[s * n + j];
                }
            }
            w[j] - div
        })
        .collect();

    let mut cubic = Vec::new();
    for i in 0..n {
        for j in i..n {
            let uij = &u[i] * &u[j];
            for k in j..n {
                cubic.push(probe(&(&uij * &u[k]))?.value());
            }
        }
    }

    Ok(CommutatorDecomposition {
        dim: n,
        q,
        v,
        w,
        zeroth,
        cubic,
        scale,
    })
}

/// Decomposition of `[K̂_t, K̂_s]` at `p`.
pub fn commutator_decompose(
    op_t: &QuantizedOperator,
    op_s: &QuantizedOperator,
    p: &[f64],
) -> Result<CommutatorDecomposition, OperatorError> {
    let a = op_t.frame(p, DECOMPOSITION_ORDER - 1)?;
    let b = op_s.frame(p, DECOMPOSITION_ORDER - 1)?;
    decompose_at(&a, &b)
}

/// A point `(x, p)` of the cotangent bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpacePoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseSpacePoint {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Result<Self, OperatorError> {
        if x.len() != p.len() {
            return Err(OperatorError::Dimension(x.len(), p.len()));
        }
        if !x.iter().chain(&p).all(|v| v.is_finite()) {
            return Err(OperatorError::NonFinite);
        }
        Ok(Self { x, p })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// `I_t(x, p) = g^{ia} g^{jb} K(t)_{ab} p_i p_j`.
pub fn integral_value(
    pair: &ProjectivePair,
    t: f64,
    phi: &PhaseSpacePoint,
) -> Result<f64, OperatorError> {
    symbol_value(&QuantizedOperator::killing(pair, t), phi)
}

/// `K^{ij}(x) p_i p_j` for any operator.
pub fn symbol_value(op: &QuantizedOperator, phi: &PhaseSpacePoint) -> Result<f64, OperatorError> {
    check_phase_dim(op, phi)?;
    Ok(op.frame(&phi.x, 1)?.symbol(&phi.p))
}

fn check_phase_dim(op: &QuantizedOperator, phi: &PhaseSpacePoint) -> Result<(), OperatorError> {
    if phi.dim() != op.dim() {
        return Err(OperatorError::Dimension(phi.dim(), op.dim()));
    }
    Ok(())
}

/// A Poisson bracket together with the size of the terms that cancel in it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketValue {
    pub value: f64,
    /// `max(1, Σ_i |∂_p I_a ∂_x I_b| + |∂_x I_a ∂_p I_b|)`.
    pub scale: f64,
}

impl BracketValue {
    pub fn relative(&self) -> f64 {
        self.value.abs() / self.scale
    }
}

/// `{I_a, I_b} = Σ_i ∂I_a/∂p_i ∂I_b/∂x^i − ∂I_a/∂x^i ∂I_b/∂p_i` from frames
/// with first-order coefficient jets.
pub fn bracket_at(a: &OperatorFrame, b: &OperatorFrame, p: &[f64]) -> Result<BracketValue, OperatorError> {
    let (ax, ap) = a.symbol_gradient(p)?;
    let (bx, bp) = b.symbol_gradient(p)?;
    let mut value = 0.0;
    let mut scale = 0.0;
    for i in 0..a.dim() {
        let (u, v) = (ap[i] * bx[i], ax[i] * bp[i]);
        value += u - v;
        scale += u.abs() + v.abs();
    }
    Ok(BracketValue {
        value,
        scale: f64::max(1.0, scale),
    })
}

/// `{I_t, I_s}` at a phase-space point.
pub fn poisson_bracket(
    pair: &ProjectivePair,
    t: f64,
    s: f64,
    phi: &PhaseSpacePoint,
) -> Result<BracketValue, OperatorError> {
    symbol_bracket(
        &QuantizedOperator::killing(pair, t),
        &QuantizedOperator::killing(pair, s),
        phi,
    )
}

/// Poisson bracket of the symbols of two operators.
pub fn symbol_bracket(
    a: &QuantizedOperator,
    b: &QuantizedOperator,
    phi: &PhaseSpacePoint,
) -> Result<BracketValue, OperatorError> {
    check_phase_dim(a, phi)?;
    check_phase_dim(b, phi)?;
    bracket_at(&a.frame(&phi.x, 1)?, &b.frame(&phi.x, 1)?, &phi.p)
}

/// Result of following a geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift {
    /// `max_τ |I(τ) − I(0)| / max(1, |I(0)|)`.
    pub max_drift: f64,
    pub initial: f64,
    pub steps: usize,
}

/// Integrates the geodesic of `g` through `φ0` with classical RK4 and tracks
/// `I = K_{ab} γ'^a γ'^b` (equal to the symbol at `p = g γ'`).
pub fn symbol_drift(
    op: &QuantizedOperator,
    domain: &[(f64, f64)],
    phi0: &PhaseSpacePoint,
    horizon: f64,
    step: f64,
) -> Result<Drift, OperatorError> {
    check_phase_dim(op, phi0)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(OperatorError::InvalidStep(step));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(OperatorError::InvalidHorizon(horizon));
    }
    let n = op.dim();
    let inside = |x: &[f64]| {
        x.iter()
            .zip(domain)
            .all(|(v, &(lo, hi))| *v > lo && *v < hi)
    };
    let exit = |time: f64, x: &[f64]| OperatorError::DomainExit {
        time,
        point: x.to_vec(),
    };
    if !inside(&phi0.x) {
        return Err(exit(0.0, &phi0.x));
    }

    let invariant = |x: &[f64], v: &[f64]| -> Result<f64, OperatorError> {
        let k = op.lower_values(x)?;
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc += k[a * n + b] * v[a] * v[b];
            }
        }
        Ok(acc)
    };
    // state = (x, v); d/dτ (x, v) = (v, −Γ(v, v))
    let rhs = |state: &[f64], time: f64| -> Result<Vec<f64>, OperatorError> {
        let (x, v) = state.split_at(n);
        if !inside(x) {
            return Err(exit(time, x));
        }
        let (_, gamma) = christoffel_values(&op.metric, x)?;
        let mut out = Vec::with_capacity(2 * n);
        out.extend_from_slice(v);
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += gamma[(i * n + j) * n + k] * v[j] * v[k];
                }
            }
            out.push(-acc);
        }
        Ok(out)
    };

    let (ginv, _) = christoffel_values(&op.metric, &phi0.x)?;
    let v0: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| ginv[i * n + j] * phi0.p[j]).sum())
        .collect();
    let mut state: Vec<f64> = phi0.x.iter().chain(&v0).copied().collect();
    let initial = invariant(&phi0.x, &v0)?;
    let norm = initial.abs().max(1.0);
    let mut max_drift: f64 = 0.0;
    let mut time = 0.0;
    let mut steps = 0;
    let axpy = |y: &[f64], h: f64, k: &[f64]| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + h * b).collect()
    };
    while time < horizon * (1.0 - 1e-12) {
        let h = step.min(horizon - time);
        let k1 = rhs(&state, time)?;
        let k2 = rhs(&axpy(&state, 0.5 * h, &k1), time)?;
        let k3 = rhs(&axpy(&state, 0.5 * h, &k2), time)?;
        let k4 = rhs(&axpy(&state, h, &k3), time)?;
        for (idx, y) in state.iter_mut().enumerate() {
            *y += h / 6.0 * (k1[idx] + 2.0 * k2[idx] + 2.0 * k3[idx] + k4[idx]);
        }
        time += h;
        steps += 1;
        let (x, v) = state.split_at(n);
        if !inside(x) {
            return Err(exit(time, x));
        }
        max_drift = max_drift.max((invariant(x, v)? - initial).abs() / norm);
    }
    Ok(Drift {
        max_drift,
        initial,
        steps,
    })
}

/// Drift of `I_t` along the `g`-geodesic through `φ0`.
pub fn geodesic_drift(
    pair: &ProjectivePair,
    t: f64,
    phi0: &PhaseSpacePoint,
    horizon: f64,
    step: f64,
) -> Result<f64, OperatorError> {
    symbol_drift(
        &QuantizedOperator::killing(pair, t),
        pair.domain(),
        phi0,
        horizon,
        step,
    )
    .map(|d| d.max_drift)
}

/// Test functions for commutator checks: monomials, sines and cosines of
/// single coordinates, and the exponential of a linear form.
pub fn test_function_suite(coords: &[String]) -> Vec<Expression> {
    let first = &coords[0];
    let second = coords.get(1).unwrap_or(first);
    let last = &coords[coords.len() - 1];
    let texts = [
        format!("{first}^2 * {second}"),
        format!("{first} * {last}"),
        format!("{last}^2"),
        format!("sin({first}) + cos({second})"),
        format!("sin({last})"),
        format!("cos({first})"),
        format!("exp({first} - {last})"),
    ];
    texts
        .iter()
        .map(|t| Expression::parse(t, coords).expect("suite expressions are well formed"))
        .collect()
}
