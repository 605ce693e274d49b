use super::*;
use crate::bem::{
    assemble_aefie, assemble_efie, assemble_gradient, AssemblyOptions, ChargeGauge, Formulation, Problem,
};
use crate::geometry::{generate_sphere, Point};
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
    let a = random_matrix(n, seed);
    &a * a.transpose() + DMatrix::identity(n, n) * (n as f64 * 0.1)
}

fn system(m: DMatrix<f64>, owners: Vec<usize>) -> SystemMatrix<f64> {
    let n = m.nrows();
    SystemMatrix::new(Formulation::Efie, ChargeGauge::Reduced, 1.0, m, owners, n).unwrap()
}

#[test]
fn identity_and_diagonal() {
    let id = logdet(&DMatrix::<f64>::identity(50, 50)).unwrap();
    assert_eq!((id.sign, id.log_abs), (1.0, 0.0));
    let d = logdet(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 4.0]))).unwrap();
    assert!((d.log_abs - 24f64.ln()).abs() < 1e-15);
    let neg = logdet(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -3.0, 4.0]))).unwrap();
    assert_eq!(neg.sign, -1.0);
}

#[test]
fn spd_matches_eigenvalue_sum() {
    let a = random_spd(20, 7);
    let ev = a.clone().symmetric_eigenvalues();
    let want: f64 = ev.iter().map(|x| x.ln()).sum();
    let got = logdet(&a).unwrap();
    assert_eq!(got.sign, 1.0);
    assert!((got.log_abs - want).abs() < 1e-10 * want.abs().max(1.0));
}

#[test]
fn sign_tracks_permutation_parity() {
    // a single row swap of the identity has determinant -1
    let mut p = DMatrix::<f64>::identity(5, 5);
    p.swap_rows(1, 3);
    let d = logdet(&p).unwrap();
    assert_eq!(d.sign, -1.0);
    assert!(d.log_abs.abs() < 1e-15);
    let a = random_matrix(12, 3);
    let want = a.determinant();
    let got = logdet(&a).unwrap();
    assert_eq!(got.sign, want.signum());
    assert!((got.log_abs - want.abs().ln()).abs() < 1e-10);
}

#[test]
fn exact_zero_pivot_is_an_error() {
    let z = DMatrix::<f64>::zeros(4, 4);
    assert!(matches!(logdet(&z), Err(Error::Singular { .. })));
    assert_eq!(condition_estimate(&z), f64::INFINITY);
}

#[test]
fn singularity_flag_uses_relative_pivot_threshold() {
    let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0f32, 1e-7]));
    let f = Factorization::new(m).unwrap();
    assert!(f.is_singular());
    assert!(f.check_singular().is_err());
    let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0f64, 1e-7]));
    assert!(!Factorization::new(m).unwrap().is_singular());
}

#[test]
fn ratio_of_identical_systems_is_zero() {
    let z = system(random_spd(10, 1), vec![0; 10]);
    assert_eq!(logdet_ratio(&z, &z).unwrap(), 0.0);
}

#[test]
fn ratio_paths_agree_on_sixty_dimensions() {
    let pr = Problem::new(
        {
            let a = generate_sphere(1.0, 0).unwrap();
            a.combine(&a.translate_object(0, Point::new(2.6, 0.0, 0.0)).unwrap()).unwrap()
        },
        AssemblyOptions::default(),
    )
    .unwrap();
    for kappa in [0.2, 1.0] {
        let z = assemble_efie::<f64>(&pr, kappa).unwrap();
        assert_eq!(z.dim(), 60);
        let zi = z.normalized();
        let lu = logdet_ratio(&z, &zi).unwrap();
        let eig = logdet_ratio_eigen(&z, &zi).unwrap();
        assert!((lu - eig).abs() < 1e-8 * lu.abs().max(1e-3), "{lu} vs {eig}");
        assert!(lu < 0.0);
    }
}

#[test]
fn mismatched_ratio_inputs_are_rejected() {
    let a = system(random_spd(4, 1), vec![0; 4]);
    let b = system(random_spd(5, 1), vec![0; 5]);
    assert!(logdet_ratio(&a, &b).is_err());
}

#[test]
fn trace_derivative_special_cases() {
    let m = random_spd(15, 4);
    let z = system(m.clone(), vec![0; 15]);
    let grad = |g: DMatrix<f64>| GradientMatrixBuilder::build(g);
    assert_eq!(logdet_derivative(&z, &grad(DMatrix::zeros(15, 15))).unwrap(), 0.0);
    let t = logdet_derivative(&z, &grad(m)).unwrap();
    assert!((t - 15.0).abs() < 1e-10);
}

/// Wraps a raw matrix as a gradient through the public assembly path's shape.
struct GradientMatrixBuilder;
impl GradientMatrixBuilder {
    fn build(m: DMatrix<f64>) -> GradientMatrix<f64> {
        // borrow a real gradient for its metadata, then replace the entries
        let a = generate_sphere(1.0, 0).unwrap();
        let pr = Problem::new(
            a.combine(&a.translate_object(0, Point::new(3.0, 0.0, 0.0)).unwrap()).unwrap(),
            AssemblyOptions::default(),
        )
        .unwrap();
        let mut g = assemble_gradient::<f64>(&pr, Formulation::Efie, 1.0, 0, Vector3::x()).unwrap();
        g.matrix = m;
        g
    }
}

#[test]
fn trace_matches_generalized_eigenvalue_sum() {
    let a = generate_sphere(1.0, 0).unwrap();
    let pr = Problem::new(
        a.combine(&a.translate_object(0, Point::new(2.5, 0.0, 0.0)).unwrap()).unwrap(),
        AssemblyOptions::default(),
    )
    .unwrap();
    let z = assemble_aefie::<f64>(&pr, 0.6).unwrap();
    assert!(z.dim() <= 100);
    let g = assemble_gradient::<f64>(&pr, Formulation::Aefie, 0.6, 1, Vector3::x()).unwrap();
    let tr = logdet_derivative(&z, &g).unwrap();
    let alphas = generalized_eigenvalues(&g.matrix, &z.matrix).unwrap();
    let sum: f64 = alphas.iter().map(|a| a.0).sum();
    let imag: f64 = alphas.iter().map(|a| a.1).sum();
    assert!((tr - sum).abs() < 1e-8 * tr.abs());
    assert!(imag.abs() < 1e-8 * tr.abs());
}

#[test]
fn condition_estimates() {
    assert!((condition_estimate(&DMatrix::<f64>::identity(7, 7)) - 1.0).abs() < 1e-12);
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-8]));
    let c = condition_estimate(&d);
    assert!(c > 0.5e8 && c < 2e8, "{c}");
}

#[test]
fn condition_estimate_tracks_svd_for_efie_at_low_kappa() {
    let pr = Problem::new(generate_sphere(1.0, 0).unwrap(), AssemblyOptions::default()).unwrap();
    let m = assemble_efie::<f64>(&pr, 1e-6).unwrap().matrix;
    assert!(m.nrows() <= 60);
    let sv = m.clone().svd(false, false).singular_values;
    let exact = sv.max() / sv.min();
    let est = condition_estimate(&m);
    assert!(est / exact < 10.0 && exact / est < 10.0, "{est:e} vs {exact:e}");
}

#[test]
fn cast_precision_rounds_entrywise() {
    let m = random_matrix(6, 9);
    let same: DMatrix<f64> = cast_precision::<f64, f64>(&m);
    assert!(same.iter().zip(m.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    let x = DMatrix::from_element(1, 1, 1.0 + 2f64.powi(-30));
    let y: DMatrix<f32> = cast_precision::<f64, f32>(&x);
    assert_eq!(y[(0, 0)], 1.0f32);
}

#[test]
fn single_precision_hilbert_loses_digits() {
    let n = 8;
    let h = DMatrix::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64);
    // det H_n = c_n⁴ / c_{2n},  c_n = Π_{k<n} k!
    let ln_fact = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    let ln_c = |m: usize| (1..m).map(ln_fact).sum::<f64>();
    let exact = 4.0 * ln_c(n) - ln_c(2 * n);
    let digits = |ld: LogDet| -> f64 {
        let rel = if ld.sign > 0.0 { (ld.log_abs - exact).exp_m1().abs() } else { 2.0 };
        -rel.max(1e-17).log10()
    };
    let d64 = digits(logdet(&h).unwrap());
    let d32 = digits(logdet(&cast_precision::<f64, f32>(&h)).unwrap());
    assert!(d64 - d32 >= 4.0, "double {d64:.1} digits, single {d32:.1} digits");
}

#[test]
fn identity_shifted_logdet_is_relatively_accurate() {
    let e = random_matrix(30, 11) * 1e-9;
    let got = logdet_identity_plus(&e).unwrap().log_abs;
    // tr log(I + E) = tr E - tr(E²)/2 + ...
    let want = e.trace() - (&e * &e).trace() / 2.0;
    assert!((got - want).abs() < 1e-12 * want.abs());
    // single precision keeps the same relative accuracy
    let e32: DMatrix<f32> = cast_precision(&e);
    let got32 = logdet_identity_plus(&e32).unwrap().log_abs;
    assert!(((got32 - want) / want).abs() < 1e-5);
    // large perturbations take the pivoted path
    let big = random_matrix(10, 2);
    let mut a = big.clone();
    for i in 0..10 {
        a[(i, i)] += 1.0;
    }
    assert!((logdet_identity_plus(&big).unwrap().log_abs - logdet(&a).unwrap().log_abs).abs() < 1e-12);
}

#[test]
fn full_and_reduced_gauges_give_the_same_ratio() {
    let a = generate_sphere(1.0, 0).unwrap();
    let scene = a.combine(&a.translate_object(0, Point::new(2.4, 0.0, 0.0)).unwrap()).unwrap();
    let mut vals = Vec::new();
    for gauge in [ChargeGauge::Reduced, ChargeGauge::Full] {
        let pr = Problem::new(scene.clone(), AssemblyOptions { gauge, ..Default::default() }).unwrap();
        let z = assemble_aefie::<f64>(&pr, 0.5).unwrap();
        vals.push(logdet_ratio(&z, &z.normalized()).unwrap());
    }
    let pr = Problem::new(scene, AssemblyOptions::default()).unwrap();
    let m = assemble_efie::<f64>(&pr, 0.5).unwrap();
    vals.push(logdet_ratio(&m, &m.normalized()).unwrap());
    for v in &vals[1..] {
        assert!((v - vals[0]).abs() < 1e-10 * vals[0].abs(), "{vals:?}");
    }
}

#[test]
fn diagnostics_are_consistent_with_logdet() {
    let a = random_spd(12, 5);
    let d = spectrum_diagnostics(&a);
    let prod: f64 = d.eigenvalues.iter().map(|e| e.0.ln()).sum();
    assert!((prod - logdet(&a).unwrap().log_abs).abs() < 1e-8 * prod.abs());
    assert_eq!(d.precision, Precision::Double);
    assert!(d.condition_estimate >= 1.0);
}

#[test]
fn pairwise_sum_is_order_fixed() {
    let v: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    assert_eq!(pairwise_sum(&v).to_bits(), pairwise_sum(&v.clone()).to_bits());
    assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn block_diagonal_logdets_add(na in 1usize..12, nb in 1usize..12, seed in 0u64..1000) {
        let a = random_spd(na, seed);
        let b = random_matrix(nb, seed + 1) + DMatrix::identity(nb, nb) * 3.0;
        let mut c = DMatrix::zeros(na + nb, na + nb);
        c.view_mut((0, 0), (na, na)).copy_from(&a);
        c.view_mut((na, na), (nb, nb)).copy_from(&b);
        let (la, lb, lc) = (logdet(&a).unwrap(), logdet(&b).unwrap(), logdet(&c).unwrap());
        prop_assert!((lc.log_abs - la.log_abs - lb.log_abs).abs() < 1e-10 * lc.log_abs.abs().max(1.0));
        prop_assert_eq!(lc.sign, la.sign * lb.sign);
    }

    #[test]
    fn symmetric_permutation_leaves_logdet_unchanged(n in 2usize..16, seed in 0u64..1000) {
        let a = random_matrix(n, seed) + DMatrix::identity(n, n) * 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let b = DMatrix::from_fn(n, n, |i, j| a[(perm[i], perm[j])]);
        let (la, lb) = (logdet(&a).unwrap(), logdet(&b).unwrap());
        prop_assert!((la.log_abs - lb.log_abs).abs() < 1e-10 * la.log_abs.abs().max(1.0));
        prop_assert_eq!(la.sign, lb.sign);
    }

    #[test]
    fn trace_identity_matches_finite_difference(n in 2usize..12, seed in 0u64..1000) {
        let z = random_spd(n, seed);
        let dz = random_matrix(n, seed + 7);
        let f = Factorization::new(z.clone()).unwrap();
        let tr = trace_solve(&f, &dz).unwrap();
        for h in [1e-4, 1e-5, 1e-6] {
            let lp = logdet(&(&z + &dz * h)).unwrap().log_abs;
            let lm = logdet(&(&z - &dz * h)).unwrap().log_abs;
            let fd = (lp - lm) / (2.0 * h);
            prop_assert!((fd - tr).abs() < 1e-6 * tr.abs().max(1.0), "h={} fd={} tr={}", h, fd, tr);
        }
    }

    #[test]
    fn precisions_agree_when_well_conditioned(n in 2usize..20, seed in 0u64..1000) {
        let a = random_spd(n, seed);
        prop_assume!(condition_estimate(&a) < 1e5);
        let l64 = logdet(&a).unwrap().log_abs;
        let l32 = logdet(&cast_precision::<f64, f32>(&a)).unwrap().log_abs;
        // five significant digits of the determinant itself
        prop_assert!((l64 - l32).abs() < 1e-5, "{} vs {}", l64, l32);
    }
}
