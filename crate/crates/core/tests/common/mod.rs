//! Finite-difference oracles shared by the integration tests. The oracles work
//! on plain `f64` evaluations; only [`ChainCase`] builds the jet side of its
//! comparison.

#![allow(dead_code)]

use nalgebra::DMatrix;
use projeq::catalog::{self, CatalogEntry};
use projeq::expr::Expression;
use projeq::geometry::MetricField;
use projeq::jets::{elementary, seed_coordinates, ElementaryOp, MultiIndex};

pub fn coords(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn equivalent_entries() -> Vec<CatalogEntry> {
    catalog::entries()
        .into_iter()
        .filter(|e| e.expected_equivalent)
        .collect()
}

/// Row-major `n × n` metric values at a point.
pub fn metric_fn(m: &MetricField) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |p| m.values_at(p).expect("metric defined at probe point")
}

pub fn invert(values: &[f64], n: usize) -> Vec<f64> {
    let m = DMatrix::from_row_slice(n, n, values);
    let inv = m.lu().try_inverse().expect("invertible");
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = inv[(i, j)];
        }
    }
    out
}

fn shifted(p: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[k] += h;
    q
}

/// Central difference of a vector-valued function along coordinate `k`.
pub fn central<F: Fn(&[f64]) -> Vec<f64>>(f: &F, p: &[f64], k: usize, h: f64) -> Vec<f64> {
    let plus = f(&shifted(p, k, h));
    let minus = f(&shifted(p, k, -h));
    plus.iter()
        .zip(&minus)
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect()
}

/// Fourth-order five-point central difference.
pub fn central5<F: Fn(&[f64]) -> Vec<f64>>(f: &F, p: &[f64], k: usize, h: f64) -> Vec<f64> {
    let p2 = f(&shifted(p, k, 2.0 * h));
    let p1 = f(&shifted(p, k, h));
    let m1 = f(&shifted(p, k, -h));
    let m2 = f(&shifted(p, k, -2.0 * h));
    (0..p1.len())
        .map(|i| (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h))
        .collect()
}

/// `Γ^i_{jk}` flattened as `[(i*n + j)*n + k]`, metric derivatives by
/// five-point differences.
pub fn fd_christoffel<F: Fn(&[f64]) -> Vec<f64>>(g: &F, p: &[f64], h: f64) -> Vec<f64> {
    let n = p.len();
    let ginv = invert(&g(p), n);
    let dg: Vec<Vec<f64>> = (0..n).map(|k| central5(g, p, k, h)).collect();
    let mut gamma = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for s in 0..n {
                    acc += ginv[i * n + s]
                        * (dg[j][s * n + k] + dg[k][s * n + j] - dg[s][j * n + k]);
                }
                gamma[(i * n + j) * n + k] = 0.5 * acc;
            }
        }
    }
    gamma
}

/// Ricci tensor with the sign convention of the library, Christoffels and
/// their derivatives both by finite differences.
pub fn fd_ricci<F: Fn(&[f64]) -> Vec<f64>>(g: &F, p: &[f64], h_inner: f64, h_outer: f64) -> Vec<f64> {
    let n = p.len();
    let gamma_at = |q: &[f64]| fd_christoffel(g, q, h_inner);
    let gamma = gamma_at(p);
    let dgamma: Vec<Vec<f64>> = (0..n).map(|k| central5(&gamma_at, p, k, h_outer)).collect();
    let gm = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k];
    let dgm = |d: usize, i: usize, j: usize, k: usize| dgamma[d][(i * n + j) * n + k];
    let mut r = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for s in 0..n {
                acc += dgm(s, s, i, j) - dgm(j, s, s, i);
                for q in 0..n {
                    acc += gm(s, s, q) * gm(q, i, j) - gm(s, j, q) * gm(q, s, i);
                }
            }
            r[i * n + j] = acc;
        }
    }
    r
}

/// Real-valued evaluation of an expression, for stencils.
pub fn scalar_fn(e: &Expression) -> impl Fn(&[f64]) -> f64 + '_ {
    move |p| e.eval(p).expect("expression defined at probe point")
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Solves the Vandermonde system through `n + 1` samples of `K(t)` and
/// returns the monomial coefficients, lowest first.
pub fn interpolate(samples: &[(f64, Vec<f64>)]) -> Vec<Vec<f64>> {
    let m = samples.len();
    let v = DMatrix::from_fn(m, m, |i, j| samples[i].0.powi(j as i32));
    let lu = v.lu();
    let width = samples[0].1.len();
    let mut coeffs = vec![vec![0.0; width]; m];
    for c in 0..width {
        let rhs = nalgebra::DVector::from_fn(m, |i, _| samples[i].1[c]);
        let sol = lu.solve(&rhs).unwrap();
        for k in 0..m {
            coeffs[k][c] = sol[k];
        }
    }
    coeffs
}

/// `u ↦ ∂_i(K^{ij} ∂_j u)` on the flat plane, every derivative by a central
/// difference; nesting two of these gives a 9-point stencil per direction.
pub fn fd_apply<'a>(
    k: &'a dyn Fn(&[f64]) -> [f64; 2],
    u: &'a dyn Fn(&[f64]) -> f64,
    h: f64,
) -> impl Fn(&[f64]) -> f64 + 'a {
    move |q: &[f64]| {
        let flux = |r: &[f64], i: usize| {
            let mut a = r.to_vec();
            let mut b = r.to_vec();
            a[i] += h;
            b[i] -= h;
            k(r)[i] * (u(&a) - u(&b)) / (2.0 * h)
        };
        (0..2)
            .map(|i| {
                let mut a = q.to_vec();
                let mut b = q.to_vec();
                a[i] += h;
                b[i] -= h;
                (flux(&a, i) - flux(&b, i)) / (2.0 * h)
            })
            .sum()
    }
}

/// `[K̂, Δ] u` at `p` for a diagonal `K` on the flat plane, nested stencils
/// with one Richardson step.
pub fn fd_commutator(k: &dyn Fn(&[f64]) -> [f64; 2], u: &dyn Fn(&[f64]) -> f64, p: &[f64]) -> f64 {
    let delta = |_: &[f64]| [1.0, 1.0];
    let at = |h: f64| {
        let ku = fd_apply(k, u, h);
        let du = fd_apply(&delta, u, h);
        let k_du = fd_apply(k, &du, h);
        let d_ku = fd_apply(&delta, &ku, h);
        k_du(p) - d_ku(p)
    };
    let (coarse, fine) = (at(2e-2), at(1e-2));
    (4.0 * fine - coarse) / 3.0
}

/// One chain-rule case: `h(f)` with `f = c0 + c₁x + c₂y + c₃xy + c₄x²` and
/// `h` picked from the elementary functions. `c` holds `c₁..c₄`; `f > 0` on
/// the unit box for `c0 ≥ 2`, `|cᵢ| ≤ ½`.
#[derive(Debug)]
pub struct ChainCase {
    pub op_index: usize,
    pub c0: f64,
    pub c: [f64; 4],
    pub point: [f64; 2],
}

impl ChainCase {
    pub const OPS: usize = 9;

    fn op(&self) -> ElementaryOp {
        [
            ElementaryOp::Exp,
            ElementaryOp::Ln,
            ElementaryOp::Sqrt,
            ElementaryOp::Sin,
            ElementaryOp::Cos,
            ElementaryOp::Abs,
            ElementaryOp::Pow(-1.5),
            ElementaryOp::Pow(1.0 / 3.0),
            ElementaryOp::Neg,
        ][self.op_index]
    }

    fn inner_real(&self, x: f64, y: f64) -> f64 {
        let v = self.c0 + self.c[0] * x + self.c[1] * y + self.c[2] * x * y + self.c[3] * x * x;
        // abs is tested on the negative branch
        if self.op() == ElementaryOp::Abs {
            -v
        } else {
            v
        }
    }

    fn outer_real(&self, v: f64) -> f64 {
        match self.op() {
            ElementaryOp::Exp => v.exp(),
            ElementaryOp::Ln => v.ln(),
            ElementaryOp::Sqrt => v.sqrt(),
            ElementaryOp::Sin => v.sin(),
            ElementaryOp::Cos => v.cos(),
            ElementaryOp::Abs => v.abs(),
            ElementaryOp::Pow(r) => v.powf(r),
            ElementaryOp::Neg => -v,
            _ => unreachable!(),
        }
    }

    /// `(jet partial, central difference)` of `h(f)` along coordinate `i`.
    pub fn evaluate(&self, i: usize) -> (f64, f64) {
        let v = seed_coordinates(&self.point, 2).unwrap();
        let (x, y) = (&v[0], &v[1]);
        let mut f = &(&(&(x * self.c[0]) + &(y * self.c[1])) + &(&(x * y) * self.c[2]))
            + &(&(x * x) * self.c[3]);
        f = &f + self.c0;
        if self.op() == ElementaryOp::Abs {
            f = -f;
        }
        let h = elementary(self.op(), &[&f]).unwrap();
        let jet = h.partial(&MultiIndex::unit(2, i)).unwrap();
        let step = 1e-5;
        let mut plus = self.point;
        let mut minus = self.point;
        plus[i] += step;
        minus[i] -= step;
        let fd = (self.outer_real(self.inner_real(plus[0], plus[1]))
            - self.outer_real(self.inner_real(minus[0], minus[1])))
            / (2.0 * step);
        (jet, fd)
    }
}
