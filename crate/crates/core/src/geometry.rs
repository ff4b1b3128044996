//! Chart-local tensor calculus in jet arithmetic.
//!
//! Tensors are stored as dense arrays of [`Jet`] components, one variance
//! marker per slot, indexed row-major. Indices are 0-based here; reports
//! print them 1-based.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{EvalError, Expression, ParseError};
use crate::jets::{seed_coordinates, Jet, JetError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate metric: |det| = {det:e} is below {threshold:e}")]
    Degenerate { det: f64, threshold: f64 },
    #[error("singular matrix: no usable pivot in column {column}")]
    Singular { column: usize },
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("component ({row}, {col}): {source}")]
    Parse {
        row: usize,
        col: usize,
        #[source]
        source: ParseError,
    },
    #[error("metric components ({0}, {1}) and ({1}, {0}) disagree")]
    Asymmetric(usize, usize),
    #[error("malformed component matrix: {0}")]
    Shape(String),
    #[error("slot {slot} out of range for a rank-{rank} tensor")]
    SlotOutOfRange { slot: usize, rank: usize },
    #[error("slot {slot} has the wrong variance for this operation")]
    Variance { slot: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
}

/// Position of a tensor index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Up,
    Down,
}

/// Jet-valued tensor at a single base point.
#[derive(Debug, Clone)]
pub struct JetTensor {
    dim: usize,
    slots: Vec<Variance>,
    point: Arc<[f64]>,
    comps: Vec<Jet>,
}

impl JetTensor {
    /// Builds a tensor from a component function over multi-indices.
    pub fn from_fn(
        dim: usize,
        slots: Vec<Variance>,
        point: Arc<[f64]>,
        mut f: impl FnMut(&[usize]) -> Jet,
    ) -> Self {
        let rank = slots.len();
        let count = dim.pow(rank as u32);
        let mut idx = vec![0; rank];
        let mut comps = Vec::with_capacity(count);
        for flat in 0..count {
            unflatten(flat, dim, &mut idx);
            comps.push(f(&idx));
        }
        Self {
            dim,
            slots,
            point,
            comps,
        }
    }

    /// A rank-0 tensor.
    pub fn scalar(value: Jet, point: Arc<[f64]>) -> Self {
        Self {
            dim: value.nvars(),
            slots: Vec::new(),
            point,
            comps: vec![value],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slots(&self) -> &[Variance] {
        &self.slots
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    /// `(number of upper slots, number of lower slots)`.
    pub fn valence(&self) -> (usize, usize) {
        let up = self.slots.iter().filter(|v| **v == Variance::Up).count();
        (up, self.rank() - up)
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub(crate) fn shared_point(&self) -> Arc<[f64]> {
        self.point.clone()
    }

    pub fn order(&self) -> usize {
        self.comps[0].order()
    }

    pub fn components(&self) -> &[Jet] {
        &self.comps
    }

    fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[self.flat(idx)]
    }

    /// Component of a rank-2 tensor.
    pub fn at(&self, i: usize, j: usize) -> &Jet {
        &self.comps[i * self.dim + j]
    }

    /// Constant terms of all components, row-major.
    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(Jet::value).collect()
    }

    /// Largest |component| at the base point.
    pub fn max_abs_value(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.value().abs()))
    }

    /// Largest |coefficient| over all components and all jet orders.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    pub fn truncate(&self, order: usize) -> Self {
        self.map(|c| c.truncate(order))
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        Self {
            dim: self.dim,
            slots: self.slots.clone(),
            point: self.point.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|c| c.scale(factor))
    }

    fn zip(&self, other: &Self, f: impl Fn(&Jet, &Jet) -> Jet) -> Self {
        assert_eq!(self.slots, other.slots, "tensor slot mismatch");
        assert_eq!(self.dim, other.dim, "tensor dimension mismatch");
        Self {
            dim: self.dim,
            slots: self.slots.clone(),
            point: self.point.clone(),
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    /// Largest |self − other| at the base point.
    pub fn max_value_diff(&self, other: &Self) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .fold(0.0, |m, (a, b)| m.max((a.value() - b.value()).abs()))
    }

    /// Largest |self − other| over all jet coefficients.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        self.comps.iter().zip(&other.comps).fold(0.0, |m, (a, b)| {
            a.coeffs()
                .iter()
                .zip(b.coeffs())
                .fold(m, |m, (x, y)| m.max((x - y).abs()))
        })
    }

    fn check_slot(&self, slot: usize) -> Result<(), GeometryError> {
        if slot < self.rank() {
            Ok(())
        } else {
            Err(GeometryError::SlotOutOfRange {
                slot,
                rank: self.rank(),
            })
        }
    }

    /// Largest jet-coefficient asymmetry between slots `a` and `b`.
    pub fn asymmetry(&self, a: usize, b: usize) -> Result<f64, GeometryError> {
        self.check_slot(a)?;
        self.check_slot(b)?;
        let mut worst: f64 = 0.0;
        let mut idx = vec![0; self.rank()];
        for (flat, c) in self.comps.iter().enumerate() {
            unflatten(flat, self.dim, &mut idx);
            idx.swap(a, b);
            let other = self.get(&idx);
            for (x, y) in c.coeffs().iter().zip(other.coeffs()) {
                worst = worst.max((x - y).abs());
            }
        }
        Ok(worst)
    }

    /// Averages the components over a swap of slots `a` and `b`.
    pub fn symmetrize(&self, a: usize, b: usize) -> Result<Self, GeometryError> {
        self.check_slot(a)?;
        self.check_slot(b)?;
        if self.slots[a] != self.slots[b] {
            return Err(GeometryError::Variance { slot: b });
        }
        let mut idx = vec![0; self.rank()];
        let comps = (0..self.comps.len())
            .map(|flat| {
                unflatten(flat, self.dim, &mut idx);
                idx.swap(a, b);
                (&self.comps[flat] + self.get(&idx)).scale(0.5)
            })
            .collect();
        Ok(Self {
            comps,
            ..self.clone()
        })
    }

    /// Partial derivative `∂_k` of every component, appended as a new lower slot.
    pub fn partial_derivative(&self) -> Result<Self, GeometryError> {
        let n = self.dim;
        let derivs: Vec<Vec<Jet>> = self
            .comps
            .iter()
            .map(|c| (0..n).map(|k| c.differentiate(k)).collect())
            .collect::<Result<_, _>>()?;
        let mut slots = self.slots.clone();
        slots.push(Variance::Down);
        Ok(Self::from_fn(n, slots, self.point.clone(), |idx| {
            let (head, k) = idx.split_at(idx.len() - 1);
            derivs[self.flat(head)][k[0]].clone()
        }))
    }
}

fn unflatten(mut flat: usize, dim: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}

/// A metric given by component expressions in a coordinate chart.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    coords: Arc<[String]>,
    components: Vec<Expression>,
}

impl MetricField {
    /// Parses a component matrix. Each row holds either the full row (`n`
    /// entries) or the lower triangle (`i + 1` entries for row `i`). Full
    /// matrices must be symmetric: mirrored entries must be identical strings
    /// or parse to the same expression tree.
    pub fn parse<S: AsRef<str>, T: AsRef<str>>(
        coords: &[S],
        rows: &[Vec<T>],
    ) -> Result<Self, GeometryError> {
        let coords: Arc<[String]> = coords.iter().map(|c| c.as_ref().to_string()).collect();
        let n = coords.len();
        if rows.len() != n {
            return Err(GeometryError::Shape(format!(
                "{} rows for {n} coordinates",
                rows.len()
            )));
        }
        let lower = rows.iter().enumerate().all(|(i, r)| r.len() == i + 1);
        let full = rows.iter().all(|r| r.len() == n);
        if !lower && !full {
            return Err(GeometryError::Shape(
                "rows must be full (n entries) or lower-triangular (i + 1 entries)".into(),
            ));
        }
        let mut parsed: Vec<Option<Expression>> = vec![None; n * n];
        for (i, row) in rows.iter().enumerate() {
            for (j, text) in row.iter().enumerate() {
                let e = Expression::parse_shared(text.as_ref(), coords.clone())
                    .map_err(|source| GeometryError::Parse { row: i, col: j, source })?;
                parsed[i * n + j] = Some(e);
            }
        }
        for i in 0..n {
            for j in 0..i {
                match (&parsed[i * n + j], &parsed[j * n + i]) {
                    (Some(a), Some(b)) => {
                        let same_text = rows[i][j].as_ref().trim() == rows[j][i].as_ref().trim();
                        if !same_text && a != b {
                            return Err(GeometryError::Asymmetric(i, j));
                        }
                    }
                    (Some(a), None) => parsed[j * n + i] = Some(a.clone()),
                    _ => unreachable!("lower triangle is always present"),
                }
            }
        }
        Ok(Self {
            coords,
            components: parsed.into_iter().map(|e| e.expect("filled")).collect(),
        })
    }

    /// Diagonal metric from one expression per coordinate.
    pub fn diagonal<S: AsRef<str>, T: AsRef<str>>(
        coords: &[S],
        diag: &[T],
    ) -> Result<Self, GeometryError> {
        let rows: Vec<Vec<String>> = (0..diag.len())
            .map(|i| {
                (0..=i)
                    .map(|j| if i == j { diag[i].as_ref().to_string() } else { "0".into() })
                    .collect()
            })
            .collect();
        Self::parse(coords, &rows)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coords
    }

    pub fn component(&self, i: usize, j: usize) -> &Expression {
        &self.components[i * self.dim() + j]
    }

    /// Component matrix at a point in plain floating point.
    pub fn values_at(&self, point: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.components
            .iter()
            .map(|e| e.eval(point).map_err(GeometryError::from))
            .collect()
    }
}

/// Rejects a nearly singular constant-term matrix.
pub fn check_nondegenerate(values: &[f64], n: usize) -> Result<f64, GeometryError> {
    let m = nalgebra::DMatrix::from_row_slice(n, n, values);
    let det = m.determinant();
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let threshold = 1e-10 * scale.powi(n as i32);
    if !(det.abs() > threshold) {
        return Err(GeometryError::Degenerate { det, threshold });
    }
    Ok(det)
}

/// Jets of the metric components at `point`, symmetric by construction.
pub fn evaluate_metric(
    metric: &MetricField,
    point: &[f64],
    order: usize,
) -> Result<JetTensor, GeometryError> {
    let n = metric.dim();
    if point.len() != n {
        return Err(GeometryError::Dimension(point.len(), n));
    }
    let seeds = seed_coordinates(point, order)?;
    let mut comps: Vec<Option<Jet>> = vec![None; n * n];
    for i in 0..n {
        for j in i..n {
            let v = metric.component(i, j).eval(&seeds)?;
            comps[j * n + i] = Some(v.clone());
            comps[i * n + j] = Some(v);
        }
    }
    let point: Arc<[f64]> = point.into();
    let g = JetTensor::from_fn(n, vec![Variance::Down; 2], point, |idx| {
        comps[idx[0] * n + idx[1]].take().expect("filled")
    });
    check_nondegenerate(&g.values(), n)?;
    Ok(g)
}

/// Gaussian elimination with partial pivoting on the constant terms.
/// Returns `(determinant, inverse)` of a jet matrix given row-major.
pub fn jet_det_inverse(m: &[Jet], n: usize) -> Result<(Jet, Vec<Jet>), GeometryError> {
    let template = &m[0];
    let mut a: Vec<Jet> = m.to_vec();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|k| template.constant_like(if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    let mut det = template.constant_like(1.0);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| {
                a[r * n + col]
                    .value()
                    .abs()
                    .total_cmp(&a[s * n + col].value().abs())
            })
            .expect("non-empty range");
        if a[pivot_row * n + col].value() == 0.0 {
            return Err(GeometryError::Singular { column: col });
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(pivot_row * n + k, col * n + k);
                inv.swap(pivot_row * n + k, col * n + k);
            }
            det = -det;
        }
        let pivot = a[col * n + col].clone();
        det = &det * &pivot;
        let pivot_inv = pivot.recip()?;
        for k in 0..n {
            a[col * n + k] = &a[col * n + k] * &pivot_inv;
            inv[col * n + k] = &inv[col * n + k] * &pivot_inv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r * n + col].clone();
            if factor.max_abs() == 0.0 {
                continue;
            }
            for k in 0..n {
                let da = &factor * &a[col * n + k];
                a[r * n + k] -= &da;
                let di = &factor * &inv[col * n + k];
                inv[r * n + k] -= &di;
            }
        }
    }
    Ok((det, inv))
}

/// Determinant of a jet matrix.
pub fn jet_determinant(m: &[Jet], n: usize) -> Result<Jet, GeometryError> {
    jet_det_inverse(m, n).map(|(d, _)| d)
}

/// `g^{ij}` from `g_{ij}`.
pub fn inverse_metric(g: &JetTensor) -> Result<JetTensor, GeometryError> {
    let n = g.dim();
    check_nondegenerate(&g.values(), n)?;
    let (_, inv) = jet_det_inverse(g.components(), n)?;
    let inv = JetTensor::from_fn(n, vec![Variance::Up; 2], g.shared_point(), |idx| {
        inv[idx[0] * n + idx[1]].clone()
    });
    // remove rounding asymmetry
    inv.symmetrize(0, 1)
}

/// Levi-Civita connection `Γ^i_{jk}`, one jet order below `g`.
pub fn christoffel(g: &JetTensor, ginv: &JetTensor) -> Result<JetTensor, GeometryError> {
    let n = g.dim();
    if g.order() == 0 {
        return Err(JetError::OrderExhausted {
            needed: 1,
            available: 0,
        }
        .into());
    }
    let m = g.order() - 1;
    // dg[(s * n + j) * n + k] = ∂_k g_{sj}
    let dg = g.partial_derivative()?;
    let ginv = ginv.truncate(m);
    let mut lowered = vec![Jet::zero(n, m); n * n * n];
    for s in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut v = dg.get(&[s, k, j]) + dg.get(&[s, j, k]);
                v -= dg.get(&[j, k, s]);
                let v = v.scale(0.5);
                lowered[(s * n + j) * n + k] = v.clone();
                lowered[(s * n + k) * n + j] = v;
            }
        }
    }
    let mut out = vec![Jet::zero(n, m); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut acc = Jet::zero(n, m);
                for s in 0..n {
                    acc.add_product(ginv.at(i, s), &lowered[(s * n + j) * n + k]);
                }
                out[(i * n + k) * n + j] = acc.clone();
                out[(i * n + j) * n + k] = acc;
            }
        }
    }
    Ok(JetTensor::from_fn(
        n,
        vec![Variance::Up, Variance::Down, Variance::Down],
        g.shared_point(),
        |idx| out[(idx[0] * n + idx[1]) * n + idx[2]].clone(),
    ))
}

fn check_connection(gamma: &JetTensor) -> Result<(), GeometryError> {
    if gamma.slots() != [Variance::Up, Variance::Down, Variance::Down] {
        return Err(GeometryError::Variance { slot: 0 });
    }
    Ok(())
}

/// `∇T`, with the derivative index appended as the last (lower) slot.
pub fn covariant_derivative(t: &JetTensor, gamma: &JetTensor) -> Result<JetTensor, GeometryError> {
    check_connection(gamma)?;
    if t.dim() != gamma.dim() {
        return Err(GeometryError::Dimension(t.dim(), gamma.dim()));
    }
    if t.order() == 0 {
        return Err(JetError::OrderExhausted {
            needed: 1,
            available: 0,
        }
        .into());
    }
    let m = t.order() - 1;
    if gamma.order() < m {
        return Err(JetError::OrderExhausted {
            needed: m,
            available: gamma.order(),
        }
        .into());
    }
    let n = t.dim();
    let gamma = gamma.truncate(m);
    let t_low = t.truncate(m);
    let partial = t.partial_derivative()?;
    let rank = t.rank();
    let mut scratch = vec![0; rank];
    Ok(JetTensor::from_fn(
        n,
        partial.slots().to_vec(),
        t.shared_point(),
        |idx| {
            let (head, k) = idx.split_at(rank);
            let k = k[0];
            let mut acc = partial.get(idx).clone();
            for (a, variance) in t.slots().iter().enumerate() {
                scratch.copy_from_slice(head);
                for s in 0..n {
                    scratch[a] = s;
                    match variance {
                        Variance::Up => {
                            acc.add_product(gamma.get(&[head[a], k, s]), t_low.get(&scratch))
                        }
                        Variance::Down => {
                            let term = gamma.get(&[s, k, head[a]]) * t_low.get(&scratch);
                            acc -= &term;
                        }
                    }
                }
            }
            acc
        },
    ))
}

/// Ricci tensor `R_{ij} = ∂_s Γ^s_{ij} − ∂_j Γ^s_{si} + Γ^s_{sp} Γ^p_{ij} − Γ^s_{jp} Γ^p_{si}`,
/// positive on the round sphere; two jet orders below the metric.
pub fn ricci(gamma: &JetTensor) -> Result<JetTensor, GeometryError> {
    check_connection(gamma)?;
    if gamma.order() == 0 {
        return Err(JetError::OrderExhausted {
            needed: 2,
            available: 1,
        }
        .into());
    }
    let n = gamma.dim();
    let m = gamma.order() - 1;
    let dgamma = gamma.partial_derivative()?;
    let gl = gamma.truncate(m);
    // trace Γ^s_{sp}
    let traced: Vec<Jet> = (0..n)
        .map(|p| {
            let mut acc = Jet::zero(n, m);
            for s in 0..n {
                acc += gl.get(&[s, s, p]);
            }
            acc
        })
        .collect();
    let mut comps = vec![Jet::zero(n, m); n * n];
    for i in 0..n {
        for j in i..n {
            let mut acc = Jet::zero(n, m);
            for s in 0..n {
                acc += dgamma.get(&[s, i, j, s]);
                acc -= dgamma.get(&[s, s, i, j]);
                acc.add_product(&traced[s], gl.get(&[s, i, j]));
                for p in 0..n {
                    let term = gl.get(&[s, j, p]) * gl.get(&[p, s, i]);
                    acc -= &term;
                }
            }
            comps[j * n + i] = acc.clone();
            comps[i * n + j] = acc;
        }
    }
    Ok(JetTensor::from_fn(
        n,
        vec![Variance::Down; 2],
        gamma.shared_point(),
        |idx| comps[idx[0] * n + idx[1]].clone(),
    ))
}

fn reindex(
    t: &JetTensor,
    metric: &JetTensor,
    slot: usize,
    from: Variance,
    to: Variance,
) -> Result<JetTensor, GeometryError> {
    t.check_slot(slot)?;
    if t.slots()[slot] != from {
        return Err(GeometryError::Variance { slot });
    }
    if metric.slots() != [to, to] {
        return Err(GeometryError::Variance { slot: 0 });
    }
    if t.dim() != metric.dim() {
        return Err(GeometryError::Dimension(t.dim(), metric.dim()));
    }
    let m = t.order().min(metric.order());
    let t = t.truncate(m);
    let metric = metric.truncate(m);
    let n = t.dim();
    let mut slots = t.slots().to_vec();
    slots[slot] = to;
    let mut scratch = vec![0; t.rank()];
    Ok(JetTensor::from_fn(n, slots, t.shared_point(), |idx| {
        scratch.copy_from_slice(idx);
        let mut acc = Jet::zero(n, m);
        for b in 0..n {
            scratch[slot] = b;
            acc.add_product(metric.at(idx[slot], b), t.get(&scratch));
        }
        acc
    }))
}

/// Raises lower slot `slot` with `g^{ab}`, keeping slot positions.
pub fn raise_index(t: &JetTensor, ginv: &JetTensor, slot: usize) -> Result<JetTensor, GeometryError> {
    reindex(t, ginv, slot, Variance::Down, Variance::Up)
}

/// Lowers upper slot `slot` with `g_{ab}`, keeping slot positions.
pub fn lower_index(t: &JetTensor, g: &JetTensor, slot: usize) -> Result<JetTensor, GeometryError> {
    reindex(t, g, slot, Variance::Up, Variance::Down)
}

/// Contracts an upper and a lower slot.
pub fn contract(t: &JetTensor, a: usize, b: usize) -> Result<JetTensor, GeometryError> {
    t.check_slot(a)?;
    t.check_slot(b)?;
    if a == b || t.slots()[a] == t.slots()[b] {
        return Err(GeometryError::Variance { slot: b });
    }
    let n = t.dim();
    let slots: Vec<Variance> = t
        .slots()
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != a && *k != b)
        .map(|(_, v)| *v)
        .collect();
    let mut full = vec![0; t.rank()];
    Ok(JetTensor::from_fn(n, slots, t.shared_point(), |idx| {
        let mut rest = idx.iter();
        for (k, slot) in full.iter_mut().enumerate() {
            if k != a && k != b {
                *slot = *rest.next().expect("index length");
            }
        }
        let mut acc = Jet::zero(n, t.order());
        for s in 0..n {
            full[a] = s;
            full[b] = s;
            acc += t.get(&full);
        }
        acc
    }))
}

/// `(AB)^i_j = A^i_s B^s_j` for two (1,1) tensors.
pub fn compose_endomorphisms(a: &JetTensor, b: &JetTensor) -> Result<JetTensor, GeometryError> {
    for (t, slot) in [(a, 0), (b, 0)] {
        if t.slots() != [Variance::Up, Variance::Down] {
            return Err(GeometryError::Variance { slot });
        }
    }
    let n = a.dim();
    let m = a.order().min(b.order());
    let (a, b) = (a.truncate(m), b.truncate(m));
    Ok(JetTensor::from_fn(n, a.slots().to_vec(), a.shared_point(), |idx| {
        let mut acc = Jet::zero(n, m);
        for s in 0..n {
            acc.add_product(a.at(idx[0], s), b.at(s, idx[1]));
        }
        acc
    }))
}

/// `δ^i_j` as constant jets.
pub fn identity(n: usize, order: usize, point: Arc<[f64]>) -> JetTensor {
    JetTensor::from_fn(n, vec![Variance::Up, Variance::Down], point, |idx| {
        Jet::constant(if idx[0] == idx[1] { 1.0 } else { 0.0 }, n, order)
    })
}

/// Metric, inverse, Christoffel symbols and volume density at one point.
#[derive(Debug, Clone)]
pub struct MetricFrame {
    pub g: JetTensor,
    pub ginv: JetTensor,
    pub gamma: JetTensor,
    /// `√|det g|`, same order as `g`.
    pub volume: Jet,
}

impl MetricFrame {
    /// Evaluates everything needed for first-order covariant calculus; `order`
    /// is the jet order of `g` (so `Γ` carries `order − 1`).
    pub fn new(metric: &MetricField, point: &[f64], order: usize) -> Result<Self, GeometryError> {
        let g = evaluate_metric(metric, point, order.max(1))?;
        Self::from_metric(g)
    }

    pub fn from_metric(g: JetTensor) -> Result<Self, GeometryError> {
        let n = g.dim();
        check_nondegenerate(&g.values(), n)?;
        let (det, inv) = jet_det_inverse(g.components(), n)?;
        let ginv = JetTensor::from_fn(n, vec![Variance::Up; 2], g.shared_point(), |idx| {
            inv[idx[0] * n + idx[1]].clone()
        })
        .symmetrize(0, 1)?;
        let gamma = christoffel(&g, &ginv)?;
        let volume = det.abs()?.sqrt()?;
        Ok(Self {
            g,
            ginv,
            gamma,
            volume,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn order(&self) -> usize {
        self.g.order()
    }

    pub fn point(&self) -> &[f64] {
        self.g.point()
    }
}
