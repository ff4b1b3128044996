//! Algebraic constructions from a metric pair and the residual checks of the
//! identities they satisfy when the pair is projectively equivalent.
//!
//! From `g` and `ḡ` we build
//!
//! * `L^i_j = |det ḡ / det g|^{1/(n+1)} ḡ^{il} g_{lj}`,
//! * `λ = ½ tr L`, its differential `λ_i` and `φ_i = −(L⁻¹)^s_i λ_s`,
//! * the adjugate family `S(t) = adj(t Id − L) = Σ_k t^k S_k` and the Killing
//!   tensors `K(t)_{ij} = g_{ir} S(t)^r_j = Σ_k t^k K_k`.
//!
//! Every residual is a dimensionless max-norm evaluated at the base point.


use nalgebra::DMatrix;
use thiserror::Error;

use crate::geometry::{
    self, compose_endomorphisms, contract, covariant_derivative, evaluate_metric, identity,
    jet_det_inverse, lower_index, raise_index, GeometryError, JetTensor, MetricField, MetricFrame,
    Variance,
};
use crate::jets::{Jet, JetError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PairError {
    #[error("metrics have different coordinates: {0:?} vs {1:?}")]
    CoordinateMismatch(Vec<String>, Vec<String>),
    #[error("domain has {got} intervals for {dim} coordinates")]
    DomainArity { got: usize, dim: usize },
    #[error("empty domain interval [{lo}, {hi}] for coordinate {coord}")]
    EmptyInterval { coord: usize, lo: f64, hi: f64 },
}

/// Two metrics on the same chart together with a sampling box.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePair {
    g: MetricField,
    gbar: MetricField,
    domain: Vec<(f64, f64)>,
}

impl ProjectivePair {
    pub fn new(
        g: MetricField,
        gbar: MetricField,
        domain: Vec<(f64, f64)>,
    ) -> Result<Self, PairError> {
        if g.coordinates() != gbar.coordinates() {
            return Err(PairError::CoordinateMismatch(
                g.coordinates().to_vec(),
                gbar.coordinates().to_vec(),
            ));
        }
        if domain.len() != g.dim() {
            return Err(PairError::DomainArity {
                got: domain.len(),
                dim: g.dim(),
            });
        }
        for (coord, &(lo, hi)) in domain.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(PairError::EmptyInterval { coord, lo, hi });
            }
        }
        Ok(Self { g, gbar, domain })
    }

    pub fn g(&self) -> &MetricField {
        &self.g
    }

    pub fn gbar(&self) -> &MetricField {
        &self.gbar
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn coordinates(&self) -> &[String] {
        self.g.coordinates()
    }

    /// True if `point` lies strictly inside the sampling box.
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(&self.domain)
                .all(|(x, &(lo, hi))| lo < *x && *x < hi)
    }

    /// Maps a point of the unit cube onto the sampling box.
    pub fn point_from_unit(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(&self.domain)
            .map(|(u, &(lo, hi))| lo + u * (hi - lo))
            .collect()
    }
}

/// `L` and everything derived from it at one point.
#[derive(Debug, Clone)]
pub struct BenentiData {
    /// `L^i_j`, same order as the metrics.
    pub l: JetTensor,
    /// `λ = ½ tr L`.
    pub lambda: Jet,
    /// `λ_i = ∂_i λ`, one order lower.
    pub lambda_form: JetTensor,
    /// `φ_i = −(L⁻¹)^s_i λ_s`, one order lower.
    pub phi_form: JetTensor,
    /// Coefficients `c_k` of `det(t Id − L) = Σ_k c_k t^k`, `k = 0..=n`.
    pub char_poly: Vec<Jet>,
    /// `S_k` with `S(t) = Σ_{k<n} t^k S_k`.
    pub s_coeffs: Vec<JetTensor>,
    /// `K_k = g S_k` (both indices lower), `K(t) = Σ_{k<n} t^k K_k`.
    pub k_coeffs: Vec<JetTensor>,
}

impl BenentiData {
    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    /// `S(t)` as a (1,1) tensor.
    pub fn comatrix_at(&self, t: f64) -> JetTensor {
        polynomial_at(&self.s_coeffs, t)
    }

    /// `K(t)_{ij}`.
    pub fn killing_at(&self, t: f64) -> JetTensor {
        polynomial_at(&self.k_coeffs, t)
    }

    /// `Σ_k w_k K_k` for arbitrary weights (missing weights count as zero).
    pub fn killing_combination(&self, weights: &[f64]) -> JetTensor {
        let mut acc = self.k_coeffs[0].scale(0.0);
        for (w, k) in weights.iter().zip(&self.k_coeffs) {
            acc = acc.add(&k.scale(*w));
        }
        acc
    }

    /// `det(t Id − L)`.
    pub fn char_poly_at(&self, t: f64) -> Jet {
        let mut acc = self.char_poly[self.dim()].clone();
        for c in self.char_poly[..self.dim()].iter().rev() {
            acc = &acc.scale(t) + c;
        }
        acc
    }

    /// Coefficient-level defect of `S(t)(t Id − L) = det(t Id − L) Id`,
    /// relative to the largest term.
    pub fn adjugate_residual(&self, t: f64) -> f64 {
        let n = self.dim();
        let s = self.comatrix_at(t);
        let shifted = identity(n, self.l.order(), self.l.shared_point())
            .scale(t)
            .sub(&self.l);
        let product = compose_endomorphisms(&s, &shifted).expect("(1,1) tensors");
        let det = self.char_poly_at(t);
        let rhs = JetTensor::from_fn(n, product.slots().to_vec(), self.l.shared_point(), |idx| {
            if idx[0] == idx[1] {
                det.clone()
            } else {
                det.zero_like()
            }
        });
        let scale = product.max_abs().max(rhs.max_abs()).max(1.0);
        product.max_coeff_diff(&rhs) / scale
    }

    /// Real eigenvalues and complex pairs of `L` at the base point.
    pub fn eigenvalues(&self) -> Vec<nalgebra::Complex<f64>> {
        let n = self.dim();
        DMatrix::from_row_slice(n, n, &self.l.values())
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect()
    }
}

/// Whether a real `n × n` matrix (row-major) is diagonalizable over ℂ, with
/// eigenvalues closer than `tol · scale` treated as equal and singular values
/// below `tol · scale` as zero.
pub fn is_diagonalizable(values: &[f64], n: usize, tol: f64) -> bool {
    let m = DMatrix::from_row_slice(n, n, values);
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let eigenvalues: Vec<nalgebra::Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    let mc = m.map(|v| nalgebra::Complex::new(v, 0.0));
    let mut seen = vec![false; n];
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let cluster: Vec<usize> = (i..n)
            .filter(|&j| !seen[j] && (eigenvalues[j] - eigenvalues[i]).norm() <= tol * scale)
            .collect();
        for &j in &cluster {
            seen[j] = true;
        }
        if cluster.len() == 1 {
            continue;
        }
        let mean = cluster.iter().map(|&j| eigenvalues[j]).sum::<nalgebra::Complex<f64>>()
            / cluster.len() as f64;
        let shifted = &mc - DMatrix::<nalgebra::Complex<f64>>::identity(n, n) * mean;
        let rank = shifted
            .singular_values()
            .iter()
            .filter(|s| **s > tol * scale)
            .count();
        if n - rank != cluster.len() {
            return false;
        }
    }
    true
}

fn polynomial_at(coeffs: &[JetTensor], t: f64) -> JetTensor {
    let mut acc = coeffs[coeffs.len() - 1].clone();
    for c in coeffs[..coeffs.len() - 1].iter().rev() {
        acc = acc.scale(t).add(c);
    }
    acc
}

/// `L^i_j = |det ḡ / det g|^{1/(n+1)} ḡ^{il} g_{lj}` from metric jets.
pub fn build_l_from_metrics(g: &JetTensor, gbar: &JetTensor) -> Result<JetTensor, GeometryError> {
    let n = g.dim();
    geometry::check_nondegenerate(&g.values(), n)?;
    geometry::check_nondegenerate(&gbar.values(), n)?;
    let (det_g, _) = jet_det_inverse(g.components(), n)?;
    let (det_gbar, gbar_inv) = jet_det_inverse(gbar.components(), n)?;
    let factor = det_gbar
        .checked_div(&det_g)?
        .abs()?
        .powf(1.0 / (n as f64 + 1.0))?;
    Ok(JetTensor::from_fn(
        n,
        vec![Variance::Up, Variance::Down],
        g.shared_point(),
        |idx| {
            let mut acc = Jet::zero(n, g.order());
            for l in 0..n {
                acc.add_product(&gbar_inv[idx[0] * n + l], g.at(l, idx[1]));
            }
            &acc * &factor
        },
    ))
}

/// `L` at `point`, as jets of the given order.
pub fn build_l(pair: &ProjectivePair, point: &[f64], order: usize) -> Result<JetTensor, GeometryError> {
    let g = evaluate_metric(pair.g(), point, order)?;
    let gbar = evaluate_metric(pair.gbar(), point, order)?;
    build_l_from_metrics(&g, &gbar)
}

/// Faddeev–LeVerrier: characteristic polynomial and adjugate coefficients of
/// `t Id − L`, using only ring operations and division by integers.
pub fn faddeev_leverrier(l: &JetTensor) -> (Vec<Jet>, Vec<JetTensor>) {
    let n = l.dim();
    let order = l.order();
    let point = l.shared_point();
    let id = identity(n, order, point.clone());
    let trace = |t: &JetTensor| -> Jet {
        let mut acc = Jet::zero(n, order);
        for i in 0..n {
            acc += t.at(i, i);
        }
        acc
    };
    // c[n] = 1; M_1 = Id; c_{n-k} = -tr(L M_k)/k; M_{k+1} = L M_k + c_{n-k} Id
    let mut c = vec![Jet::zero(n, order); n + 1];
    c[n] = Jet::constant(1.0, n, order);
    let mut m = id.clone();
    let mut ms = Vec::with_capacity(n);
    for k in 1..=n {
        ms.push(m.clone());
        let lm = compose_endomorphisms(l, &m).expect("(1,1) tensors");
        c[n - k] = trace(&lm).scale(-1.0 / k as f64);
        m = lm.add(&id.map(|d| d * &c[n - k]));
    }
    // adj(t Id − L) = Σ_{k=1}^{n} M_k t^{n−k}; coefficient of t^j is M_{n−j}
    let s_coeffs = (0..n).map(|j| ms[n - 1 - j].clone()).collect();
    (c, s_coeffs)
}

/// `L`, `λ`, `φ` and the Killing family coefficients from metric jets.
pub fn benenti_from_metrics(g: &JetTensor, gbar: &JetTensor) -> Result<BenentiData, GeometryError> {
    let n = g.dim();
    let l = build_l_from_metrics(g, gbar)?;
    let mut trace = Jet::zero(n, l.order());
    for i in 0..n {
        trace += l.at(i, i);
    }
    let lambda = trace.scale(0.5);
    let lambda_form = JetTensor::scalar(lambda.clone(), l.shared_point()).partial_derivative()?;
    let lower = l.order().saturating_sub(1);
    // φ_i = −(L⁻¹)^s_i λ_s, i.e. −½ ∂_i ln |det L|
    let (_, l_inv) = jet_det_inverse(l.truncate(lower).components(), n)?;
    let phi_form = JetTensor::from_fn(n, vec![Variance::Down], l.shared_point(), |idx| {
        let mut acc = Jet::zero(n, lower);
        for s in 0..n {
            acc.add_product(&l_inv[s * n + idx[0]], lambda_form.get(&[s]));
        }
        -acc
    });
    let (char_poly, s_coeffs) = faddeev_leverrier(&l);
    let k_coeffs = s_coeffs
        .iter()
        .map(|s| lower_index(s, g, 0).and_then(|k| k.symmetrize(0, 1)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BenentiData {
        l,
        lambda,
        lambda_form,
        phi_form,
        char_poly,
        s_coeffs,
        k_coeffs,
    })
}

/// [`BenentiData`] at `point`. Needs `order ≥ 1` for `λ_i`.
pub fn benenti_data(
    pair: &ProjectivePair,
    point: &[f64],
    order: usize,
) -> Result<BenentiData, GeometryError> {
    if order == 0 {
        return Err(JetError::OrderExhausted {
            needed: 1,
            available: 0,
        }
        .into());
    }
    let g = evaluate_metric(pair.g(), point, order)?;
    let gbar = evaluate_metric(pair.gbar(), point, order)?;
    benenti_from_metrics(&g, &gbar)
}

/// All geometric data of a pair at one point.
#[derive(Debug, Clone)]
pub struct PairFrame {
    pub metric: MetricFrame,
    pub metric_bar: MetricFrame,
    pub benenti: BenentiData,
}

impl PairFrame {
    pub fn new(pair: &ProjectivePair, point: &[f64], order: usize) -> Result<Self, GeometryError> {
        if order == 0 {
            return Err(JetError::OrderExhausted {
                needed: 1,
                available: 0,
            }
            .into());
        }
        let metric = MetricFrame::new(pair.g(), point, order)?;
        let metric_bar = MetricFrame::new(pair.gbar(), point, order)?;
        let benenti = benenti_from_metrics(&metric.g, &metric_bar.g)?;
        Ok(Self {
            metric,
            metric_bar,
            benenti,
        })
    }

    pub fn order(&self) -> usize {
        self.metric.order()
    }

    pub fn point(&self) -> &[f64] {
        self.metric.point()
    }

    /// `L_{ij} = g_{is} L^s_j`.
    pub fn l_lower(&self) -> JetTensor {
        lower_index(&self.benenti.l, &self.metric.g, 0).expect("(1,1) tensor")
    }

    /// Asymmetry of `g_{is} L^s_j`, relative to its size.
    pub fn self_adjointness_residual(&self) -> f64 {
        let l = self.l_lower();
        l.asymmetry(0, 1).expect("rank 2") / l.max_abs().max(1.0)
    }

    /// `∇_k L_{ij} = λ_i g_{jk} + λ_j g_{ik}`.
    pub fn projective_residual(&self) -> Result<f64, GeometryError> {
        let n = self.metric.dim();
        let nabla_l = covariant_derivative(&self.l_lower(), &self.metric.gamma)?;
        let g = self.metric.g.truncate(nabla_l.order());
        let lam = &self.benenti.lambda_form;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let rhs = lam.get(&[i]).value() * g.at(j, k).value()
                        + lam.get(&[j]).value() * g.at(i, k).value();
                    worst = worst.max((nabla_l.get(&[i, j, k]).value() - rhs).abs());
                }
            }
        }
        Ok(worst / nabla_l.max_abs_value().max(1.0))
    }

    /// `Γ̄^i_{jk} − Γ^i_{jk} = δ^i_k φ_j + δ^i_j φ_k`.
    pub fn connection_residual(&self) -> Result<f64, GeometryError> {
        let n = self.metric.dim();
        let diff = self.metric_bar.gamma.sub(&self.metric.gamma);
        let phi = &self.benenti.phi_form;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut rhs = 0.0;
                    if i == k {
                        rhs += phi.get(&[j]).value();
                    }
                    if i == j {
                        rhs += phi.get(&[k]).value();
                    }
                    worst = worst.max((diff.get(&[i, j, k]).value() - rhs).abs());
                }
            }
        }
        Ok(worst / diff.max_abs_value().max(1.0))
    }

    /// Raised Ricci endomorphism `R^i_j`, two orders below the metric.
    pub fn ricci_endomorphism(&self) -> Result<JetTensor, GeometryError> {
        let ric = geometry::ricci(&self.metric.gamma)?;
        raise_index(&ric, &self.metric.ginv, 0)
    }

    /// `R^i_s L^s_j − L^i_s R^s_j`.
    pub fn ricci_commutation_residual(&self) -> Result<f64, GeometryError> {
        let r = self.ricci_endomorphism()?;
        let l = self.benenti.l.truncate(r.order());
        let comm = compose_endomorphisms(&r, &l)?.sub(&compose_endomorphisms(&l, &r)?);
        let scale = (r.max_abs_value() * l.max_abs_value()).max(1.0);
        Ok(comm.max_abs_value() / scale)
    }

    /// `∇_i (R^i_s K^s_j − K^i_s R^s_j)` for `K = K(t)`.
    pub fn carter_residual(&self, t: f64) -> Result<f64, GeometryError> {
        self.carter_residual_for(&self.benenti.killing_at(t))
    }

    /// Carter's condition for an arbitrary symmetric (0,2) tensor.
    pub fn carter_residual_for(&self, k: &JetTensor) -> Result<f64, GeometryError> {
        let r = self.ricci_endomorphism()?;
        let k_mixed = raise_index(&k.truncate(r.order()), &self.metric.ginv, 0)?;
        let b = compose_endomorphisms(&r, &k_mixed)?.sub(&compose_endomorphisms(&k_mixed, &r)?);
        let nabla_b = covariant_derivative(&b, &self.metric.gamma)?;
        let div = contract(&nabla_b, 0, 2)?;
        Ok(div.max_abs_value() / nabla_b.max_abs_value().max(1.0))
    }
}

/// Residual of the Killing equation `∇_{(i} K_{jk)} = 0` for a symmetric
/// (0,2) tensor, normalised by `1 + max |∇K|`.
pub fn check_killing(k: &JetTensor, gamma: &JetTensor) -> Result<f64, GeometryError> {
    if k.slots() != [Variance::Down, Variance::Down] {
        return Err(GeometryError::Variance { slot: 0 });
    }
    let nabla = covariant_derivative(k, gamma)?;
    let n = k.dim();
    let mut worst: f64 = 0.0;
    // nabla[j, k, i] = ∇_i K_{jk}; symmetrise over all permutations of (i, j, k)
    for i in 0..n {
        for j in i..n {
            for l in j..n {
                let perms = [
                    [i, j, l],
                    [i, l, j],
                    [j, i, l],
                    [j, l, i],
                    [l, i, j],
                    [l, j, i],
                ];
                let sum: f64 = perms.iter().map(|p| nabla.get(p).value()).sum();
                worst = worst.max((sum / 6.0).abs());
            }
        }
    }
    Ok(worst / (1.0 + nabla.max_abs_value()))
}

/// Residual of `∇_k L_{ij} = λ_i g_{jk} + λ_j g_{ik}` at `point`.
pub fn check_projective_equivalence(
    pair: &ProjectivePair,
    point: &[f64],
    order: usize,
) -> Result<f64, GeometryError> {
    PairFrame::new(pair, point, order)?.projective_residual()
}

/// Residual of `Γ̄ − Γ = δφ + δφ` at `point`.
pub fn check_connection_difference(
    pair: &ProjectivePair,
    point: &[f64],
    order: usize,
) -> Result<f64, GeometryError> {
    PairFrame::new(pair, point, order)?.connection_residual()
}

/// Residual of `[Ric, L] = 0` at `point`; needs `order ≥ 2`.
pub fn check_ricci_commutation(
    pair: &ProjectivePair,
    point: &[f64],
    order: usize,
) -> Result<f64, GeometryError> {
    PairFrame::new(pair, point, order)?.ricci_commutation_residual()
}

/// Residual of Carter's condition for `K(t)` at `point`; needs `order ≥ 3`.
pub fn check_carter_condition(
    pair: &ProjectivePair,
    t: f64,
    point: &[f64],
    order: usize,
) -> Result<f64, GeometryError> {
    PairFrame::new(pair, point, order)?.carter_residual(t)
}

/// Default parameter grid for the Killing family.
pub const DEFAULT_T_GRID: [f64; 8] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0];

/// Drops grid values within `1e-6` of an eigenvalue of `L`.
pub fn t_grid_avoiding_spectrum(grid: &[f64], eigenvalues: &[nalgebra::Complex<f64>]) -> Vec<f64> {
    grid.iter()
        .copied()
        .filter(|&t| {
            eigenvalues
                .iter()
                .all(|ev| (nalgebra::Complex::new(t, 0.0) - ev).norm() > 1e-6)
        })
        .collect()
}
