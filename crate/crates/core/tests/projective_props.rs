mod common;

use common::*;
use nalgebra::DMatrix;
use projeq::catalog;
use projeq::geometry::{evaluate_metric, JetTensor, MetricField, MetricFrame, Variance};
use projeq::projective::{
    benenti_data, build_l, check_carter_condition, check_connection_difference, check_killing,
    check_projective_equivalence, check_ricci_commutation, t_grid_avoiding_spectrum, PairFrame,
    ProjectivePair, DEFAULT_T_GRID,
};
use projeq::verify::sample_points;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn xy() -> Vec<String> {
    coords(&["x", "y"])
}

fn pair_of(g: &[&str], gbar: &[&str], domain: Vec<(f64, f64)>) -> ProjectivePair {
    let c: Vec<String> = ["x", "y", "z"][..g.len()].iter().map(|s| s.to_string()).collect();
    ProjectivePair::new(
        MetricField::diagonal(&c, g).unwrap(),
        MetricField::diagonal(&c, gbar).unwrap(),
        domain,
    )
    .unwrap()
}

fn dini() -> ProjectivePair {
    catalog::get_entry("dini").unwrap().pair
}

fn points(pair: &ProjectivePair, count: usize) -> Vec<Vec<f64>> {
    sample_points(pair, count, 42)
        .unwrap()
        .into_iter()
        .map(|s| s.point)
        .collect()
}

#[test]
fn l_for_identical_and_scaled_pairs() {
    let same = pair_of(&["1 + x^2", "exp(y)"], &["1 + x^2", "exp(y)"], vec![(-1.0, 1.0); 2]);
    let l = build_l(&same, &[0.3, -0.2], 3).unwrap();
    assert_eq!(l.values(), vec![1.0, 0.0, 0.0, 1.0]);
    assert!(l.sub(&projeq::geometry::identity(2, 3, l.point().into())).max_abs() < 1e-15);

    let scaled = pair_of(&["1 + x^2", "exp(y)"], &["4*(1 + x^2)", "4*exp(y)"], vec![(-1.0, 1.0); 2]);
    let l = build_l(&scaled, &[0.3, -0.2], 3).unwrap();
    let c = 4f64.powf(-1.0 / 3.0);
    assert!((c - 0.629_960_524_947_436_6).abs() < 1e-15);
    assert!(max_diff(&l.values(), &[c, 0.0, 0.0, c]) < 1e-15);
}

#[test]
fn dini_l_and_killing_at_reference_point() {
    // oracle: the defining formula evaluated by hand at (2, 1)
    let g = [1.0f64, 1.0];
    let gbar = [(1.0 - 0.5) / 2.0, (1.0 - 0.5) / 1.0];
    let ratio = (gbar[0] * gbar[1] / (g[0] * g[1])).abs().powf(1.0 / 3.0);
    let l_oracle = [ratio * g[0] / gbar[0], ratio * g[1] / gbar[1]];
    assert_eq!(l_oracle, [2.0, 1.0]);

    let data = benenti_data(&dini(), &[2.0, 1.0], 3).unwrap();
    assert!(max_diff(&data.l.values(), &[2.0, 0.0, 0.0, 1.0]) < 1e-14);
    assert!((data.lambda.value() - 1.5).abs() < 1e-14);

    // comatrix of (0·Id − diag(2, 1)) = diag(−1, −2); g = δ at (2, 1)
    let m = DMatrix::<f64>::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -1.0]);
    let adj = m.determinant() * m.try_inverse().unwrap();
    let k0 = data.killing_at(0.0).values();
    assert!(max_diff(&k0, adj.transpose().as_slice()) < 1e-14);
    assert!(max_diff(&k0, &[-1.0, 0.0, 0.0, -2.0]) < 1e-14);
    assert!(max_diff(&data.k_coeffs[1].values(), &[1.0, 0.0, 0.0, 1.0]) < 1e-14);
}

#[test]
fn trivial_pair_killing_family() {
    for n in [2usize, 3] {
        let diag = ["1 + x^2", "2 + sin(y)", "3"];
        let pair = pair_of(&diag[..n], &diag[..n], vec![(-1.0, 1.0); n]);
        let p = vec![0.4; n];
        let data = benenti_data(&pair, &p, 2).unwrap();
        let g = evaluate_metric(pair.g(), &p, 2).unwrap();
        assert_eq!(data.k_coeffs.len(), n);
        for t in [-2.0, 0.5, 3.0] {
            let want = g.scale((t - 1.0f64).powi(n as i32 - 1));
            assert!(data.killing_at(t).max_coeff_diff(&want) < 1e-13);
        }
    }
}

#[test]
fn adjugate_identity_at_random_t() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for entry in catalog::entries() {
        for p in points(&entry.pair, 20) {
            let data = benenti_data(&entry.pair, &p, 3).unwrap();
            for _ in 0..5 {
                let t = rng.gen_range(-3.0..3.0);
                let r = data.adjugate_residual(t);
                assert!(r <= 1e-10, "{} at {p:?}, t = {t}: {r}", entry.name);
            }
        }
    }
}

#[test]
fn killing_family_has_degree_n_minus_one() {
    let ts = [-1.5, -0.25, 0.75, 2.5];
    for entry in catalog::entries() {
        let n = entry.pair.dim();
        for p in points(&entry.pair, 20) {
            let data = benenti_data(&entry.pair, &p, 2).unwrap();
            let samples: Vec<(f64, Vec<f64>)> = ts[..=n]
                .iter()
                .map(|&t| (t, data.killing_at(t).values()))
                .collect();
            let coeffs = interpolate(&samples);
            let scale = samples.iter().map(|s| max_abs(&s.1)).fold(1.0, f64::max);
            assert!(max_abs(&coeffs[n]) <= 1e-9 * scale, "{}: degree n term", entry.name);
            for k in 0..n {
                let d = max_diff(&coeffs[k], &data.k_coeffs[k].values());
                assert!(d <= 1e-9 * scale, "{} K_{k}: {d}", entry.name);
            }
        }
    }
}

#[test]
fn lambda_form_is_gradient_of_half_trace() {
    for entry in catalog::entries() {
        let n = entry.pair.dim();
        for p in points(&entry.pair, 20) {
            let data = benenti_data(&entry.pair, &p, 3).unwrap();
            let l = data.l.values();
            let half_trace: f64 = (0..n).map(|i| l[i * n + i]).sum::<f64>() / 2.0;
            assert!((data.lambda.value() - half_trace).abs() <= 1e-14 * half_trace.abs().max(1.0));
            let scale = data.lambda.max_abs().max(1.0);
            for i in 0..n {
                let d = data.lambda.differentiate(i).unwrap();
                let form = &data.lambda_form.components()[i];
                let diff = d
                    .coeffs()
                    .iter()
                    .zip(form.coeffs())
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(diff <= 1e-11 * scale, "{}", entry.name);
            }
        }
    }
}

#[test]
fn l_self_adjoint_and_killing_coefficients_symmetric() {
    for entry in catalog::entries() {
        for p in points(&entry.pair, 20) {
            let frame = PairFrame::new(&entry.pair, &p, 3).unwrap();
            assert!(frame.self_adjointness_residual() <= 1e-10, "{}", entry.name);
            for k in &frame.benenti.k_coeffs {
                assert!(k.asymmetry(0, 1).unwrap() <= 1e-10 * k.max_abs().max(1.0), "{}", entry.name);
            }
        }
    }
}

#[test]
fn five_residuals_on_equivalent_entries() {
    for entry in equivalent_entries() {
        for p in points(&entry.pair, 20) {
            let frame = PairFrame::new(&entry.pair, &p, 4).unwrap();
            let basic = frame.projective_residual().unwrap();
            let connection = frame.connection_residual().unwrap();
            let ricci = frame.ricci_commutation_residual().unwrap();
            assert!(basic <= 1e-9, "{} basic {basic}", entry.name);
            assert!(connection <= 1e-8, "{} connection {connection}", entry.name);
            assert!(ricci <= 1e-8, "{} ricci {ricci}", entry.name);
            for t in DEFAULT_T_GRID {
                let k = frame.benenti.killing_at(t);
                let killing = check_killing(&k, &frame.metric.gamma).unwrap();
                let carter = frame.carter_residual(t).unwrap();
                assert!(killing <= 1e-9, "{} killing t={t}: {killing}", entry.name);
                assert!(carter <= 1e-7, "{} carter t={t}: {carter}", entry.name);
            }
        }
    }
}

#[test]
fn free_function_checks_agree_with_frame() {
    let pair = dini();
    let p = [2.3, 0.4];
    let frame = PairFrame::new(&pair, &p, 4).unwrap();
    assert_eq!(check_projective_equivalence(&pair, &p, 4).unwrap(), frame.projective_residual().unwrap());
    assert_eq!(check_connection_difference(&pair, &p, 4).unwrap(), frame.connection_residual().unwrap());
    assert_eq!(check_ricci_commutation(&pair, &p, 4).unwrap(), frame.ricci_commutation_residual().unwrap());
    assert_eq!(check_carter_condition(&pair, 0.5, &p, 4).unwrap(), frame.carter_residual(0.5).unwrap());
}

#[test]
fn control_pair_fails_basic_and_connection() {
    let entry = catalog::get_entry("control_nonequiv").unwrap();
    let pts = points(&entry.pair, 20);
    let mut basic_over = 0;
    let mut connection_over = 0;
    for p in &pts {
        if check_projective_equivalence(&entry.pair, p, 4).unwrap() > 1e-2 {
            basic_over += 1;
        }
        if check_connection_difference(&entry.pair, p, 4).unwrap() > 1e-2 {
            connection_over += 1;
        }
    }
    assert!(basic_over * 10 >= pts.len() * 9, "{basic_over}/{}", pts.len());
    assert!(connection_over * 10 >= pts.len() * 9, "{connection_over}/{}", pts.len());
}

/// Γ̄ − Γ from finite differences; if it has the form δφ + δφ then contracting
/// `i` with `j` gives `(n + 1) φ_k`.
fn fd_connection_oracle(pair: &ProjectivePair, p: &[f64]) -> (Vec<f64>, f64) {
    let n = p.len();
    let diff: Vec<f64> = fd_christoffel(&metric_fn(pair.gbar()), p, 1e-3)
        .iter()
        .zip(fd_christoffel(&metric_fn(pair.g()), p, 1e-3))
        .map(|(a, b)| a - b)
        .collect();
    let at = |i: usize, j: usize, k: usize| diff[(i * n + j) * n + k];
    let phi: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|i| at(i, i, k)).sum::<f64>() / (n as f64 + 1.0))
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut rhs = 0.0;
                if i == k {
                    rhs += phi[j];
                }
                if i == j {
                    rhs += phi[k];
                }
                worst = worst.max((at(i, j, k) - rhs).abs());
            }
        }
    }
    (phi, worst / max_abs(&diff).max(1.0))
}

#[test]
fn connection_difference_matches_finite_difference_oracle() {
    for name in ["dini", "beltrami", "lc3", "jordan"] {
        let pair = catalog::get_entry(name).unwrap().pair;
        for p in points(&pair, 20) {
            let (phi, residual) = fd_connection_oracle(&pair, &p);
            assert!(residual < 1e-7, "{name}: oracle residual {residual}");
            let data = benenti_data(&pair, &p, 2).unwrap();
            let d = max_diff(&data.phi_form.values(), &phi);
            assert!(d < 1e-7 * max_abs(&phi).max(1.0), "{name} at {p:?}: φ differs by {d}");
        }
    }
    let control = catalog::get_entry("control_nonequiv").unwrap().pair;
    let over = points(&control, 20)
        .iter()
        .filter(|p| fd_connection_oracle(&control, p).1 > 1e-2)
        .count();
    assert!(over >= 18, "{over}");
}

#[test]
fn ricci_commutation_control_matches_finite_difference_oracle() {
    let entry = catalog::get_entry("control_nonequiv3").unwrap();
    let n = 3;
    let mut over = 0;
    let pts = points(&entry.pair, 20);
    for p in &pts {
        let g = metric_fn(entry.pair.g());
        let ric = fd_ricci(&g, p, 1e-3, 1e-3);
        let ginv = invert(&g(p), n);
        let data = benenti_data(&entry.pair, p, 1).unwrap();
        let l = data.l.values();
        let mul = |a: &[f64], b: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = (0..n).map(|s| a[i * n + s] * b[s * n + j]).sum();
                }
            }
            out
        };
        let r_mixed = mul(&ginv, &ric);
        let comm: Vec<f64> = mul(&r_mixed, &l)
            .iter()
            .zip(mul(&l, &r_mixed))
            .map(|(a, b)| a - b)
            .collect();
        let oracle = max_abs(&comm) / (max_abs(&r_mixed) * max_abs(&l)).max(1.0);
        let lib = check_ricci_commutation(&entry.pair, p, 2).unwrap();
        assert!((oracle - lib).abs() < 1e-5, "{oracle} vs {lib}");
        if lib > 1e-3 {
            over += 1;
        }
    }
    assert!(over * 10 >= pts.len() * 9, "{over}");
}

#[test]
fn killing_controls() {
    let flat = MetricField::diagonal(&xy(), &["1", "1"]).unwrap();
    for p in [[0.3, -0.1], [2.0, 5.0]] {
        let frame = MetricFrame::new(&flat, &p, 2).unwrap();
        let seeds = projeq::jets::seed_coordinates(&p, 2).unwrap();
        let k = JetTensor::from_fn(2, vec![Variance::Down; 2], p.to_vec().into(), |idx| {
            if idx == [0, 0] {
                seeds[0].clone()
            } else {
                seeds[0].zero_like()
            }
        });
        // ∇_{(x}K_{xx)} = ∂_x K_xx = 1, normalised by 1 + max|∇K| = 2
        assert_eq!(check_killing(&k, &frame.gamma).unwrap(), 0.5);
        assert_eq!(check_killing(&frame.g, &frame.gamma).unwrap(), 0.0);

        let pair = ProjectivePair::new(flat.clone(), flat.clone(), vec![(-5.0, 5.0); 2]).unwrap();
        let pf = PairFrame::new(&pair, &p, 3).unwrap();
        assert_eq!(pf.carter_residual_for(&k).unwrap(), 0.0);
    }
}

#[test]
fn t_grid_filter_drops_eigenvalues() {
    let pair = catalog::get_entry("trivial").unwrap().pair;
    let data = benenti_data(&pair, &points(&pair, 1)[0], 1).unwrap();
    let grid = t_grid_avoiding_spectrum(&DEFAULT_T_GRID, &data.eigenvalues());
    assert_eq!(grid, vec![-2.0, -1.0, -0.5, 0.0, 0.5, 2.0, 3.0]);
}
