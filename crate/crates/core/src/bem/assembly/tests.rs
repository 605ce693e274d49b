use super::*;
use crate::bem::static_singular_integral;
use crate::geometry::{generate_plate, generate_sphere};
use std::f64::consts::PI;

fn two_spheres(sub: u32, gap: f64) -> TriScene {
    let a = generate_sphere(1.0, sub).unwrap();
    let b = a.translate_object(0, Point::new(2.0 + gap, 0.0, 0.0)).unwrap();
    a.combine(&b).unwrap()
}

fn problem(scene: TriScene) -> Problem {
    Problem::new(scene, AssemblyOptions::default()).unwrap()
}

fn rel_frobenius_asym(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).norm() / m.norm()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

fn cond_svd(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    sv.max() / sv.min()
}

#[test]
fn blocks_are_symmetric() {
    let pr = problem(two_spheres(1, 0.5));
    for kappa in [0.1, 1.0, 5.0] {
        let (v, p) = assemble_vp::<f64>(&pr, kappa).unwrap();
        assert!(rel_frobenius_asym(&v) < 1e-12);
        assert!(rel_frobenius_asym(&p) < 1e-12);
        let m = assemble_efie::<f64>(&pr, kappa).unwrap();
        assert!(rel_frobenius_asym(&m.matrix) < 1e-12);
        assert!(p.diagonal().iter().all(|&x| x > 0.0));
    }
}

#[test]
fn s_factorization_matches_direct_assembly() {
    // meshes up to 100 patches: one sphere (80), two plates (2 × 32)
    let plates = {
        let a = generate_plate(1.0, 4).unwrap();
        let b = a.translate_object(0, Point::new(0.0, 0.0, 0.4)).unwrap();
        a.combine(&b).unwrap()
    };
    for scene in [generate_sphere(1.0, 1).unwrap(), plates] {
        let pr = problem(scene);
        assert!(pr.basis().num_patches() <= 100);
        for kappa in [0.0, 0.3, 4.0] {
            let p = assemble_p::<f64>(&pr, kappa).unwrap();
            let d = pr.basis().incidence_matrix();
            let s_fact = d.transpose() * &p * &d;
            let s_direct = assemble_s_direct::<f64>(&pr, kappa).unwrap();
            let rel = (&s_fact - &s_direct).norm() / s_direct.norm();
            assert!(rel < 1e-10, "κ={kappa}: {rel:e}");
            let gathered = s_from_p(pr.basis(), &p);
            assert!((&gathered - &s_direct).norm() / s_direct.norm() < 1e-10);
        }
    }
}

#[test]
fn cross_entries_decay_exponentially() {
    // two small, well-separated patches: the point-kernel ratio is e^{-κd}
    let a = generate_plate(0.1, 1).unwrap();
    let d = 6.0;
    let b = a.translate_object(0, Point::new(d, 0.0, 0.0)).unwrap();
    let pr = problem(a.combine(&b).unwrap());
    for kappa in [0.2, 0.5, 1.0] {
        let p1 = assemble_p::<f64>(&pr, kappa).unwrap();
        let p2 = assemble_p::<f64>(&pr, 2.0 * kappa).unwrap();
        let v1 = assemble_v::<f64>(&pr, kappa).unwrap();
        let v2 = assemble_v::<f64>(&pr, 2.0 * kappa).unwrap();
        let want = (-kappa * d).exp();
        let rp = p2[(0, 2)] / p1[(0, 2)];
        let rv = v2[(0, 1)] / v1[(0, 1)];
        assert!((rp / want - 1.0).abs() < 0.1, "{rp} vs {want}");
        assert!((rv / want - 1.0).abs() < 0.1, "{rv} vs {want}");
    }
}

/// Brute-force midpoint rule on `n²` congruent subtriangles per triangle.
fn midpoint_points(c: [Point; 3], n: usize) -> Vec<(Point, f64)> {
    let area = 0.5 * (c[1] - c[0]).cross(&(c[2] - c[0])).norm();
    let w = area / (n * n) as f64;
    let at = |i: f64, j: f64| c[0] + (c[1] - c[0]) * (i / n as f64) + (c[2] - c[0]) * (j / n as f64);
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n - i {
            let (fi, fj) = (i as f64, j as f64);
            pts.push(((at(fi, fj) + at(fi + 1.0, fj) + at(fi, fj + 1.0)) / 3.0, w));
            if i + j + 1 < n {
                pts.push(((at(fi + 1.0, fj) + at(fi, fj + 1.0) + at(fi + 1.0, fj + 1.0)) / 3.0, w));
            }
        }
    }
    pts
}

#[test]
fn far_pair_matches_brute_force_quadrature() {
    let a = generate_plate(1.0, 1).unwrap();
    let b = a.translate_object(0, Point::new(1.5, 0.3, 2.0)).unwrap();
    let scene = a.combine(&b).unwrap();
    let pr = problem(scene.clone());
    let kappa = 0.7;
    let v = assemble_v::<f64>(&pr, kappa).unwrap();
    let p = assemble_p::<f64>(&pr, kappa).unwrap();

    let basis = pr.basis();
    let verts = scene.vertices();
    let lambda = |n: usize, t: usize, r: &Point| -> Point {
        let e = &basis.edges()[n];
        let area = scene.triangle_area(t);
        if t == e.plus {
            (r - verts[e.plus_free]) / (2.0 * area)
        } else {
            (verts[e.minus_free] - r) / (2.0 * area)
        }
    };
    let g = |r: &Point, s: &Point| (-(kappa * (r - s).norm())).exp() / (4.0 * PI * (r - s).norm());
    let (m, n) = (0, 1);
    let (em, en) = (basis.edges()[m], basis.edges()[n]);
    let mut v_ref = 0.0;
    for t in [em.plus, em.minus] {
        for s in [en.plus, en.minus] {
            let pt = midpoint_points(scene.corners(t), 40);
            let ps = midpoint_points(scene.corners(s), 40);
            for (r, w) in &pt {
                for (q, wq) in &ps {
                    v_ref += w * wq * lambda(m, t, r).dot(&lambda(n, s, q)) * g(r, q);
                }
            }
        }
    }
    assert!(((v[(m, n)] - v_ref) / v_ref).abs() < 0.01, "{} vs {v_ref}", v[(m, n)]);

    let (t, s) = (0, 3);
    let mut p_ref = 0.0;
    for (r, w) in &midpoint_points(scene.corners(t), 40) {
        for (q, wq) in &midpoint_points(scene.corners(s), 40) {
            p_ref += w * wq * g(r, q);
        }
    }
    p_ref /= scene.triangle_area(t) * scene.triangle_area(s);
    assert!(((p[(t, s)] - p_ref) / p_ref).abs() < 0.01);
}

#[test]
fn self_term_matches_refined_outer_integration() {
    // one patch interacting with itself: analytic inner integral, refined outer rule
    let scene = generate_plate(1.0, 1).unwrap();
    let pr = problem(scene.clone());
    for kappa in [0.0, 2.0] {
        let p = assemble_p::<f64>(&pr, kappa).unwrap();
        let c = scene.corners(0);
        let area = scene.triangle_area(0);
        let outer = midpoint_points(c, 60);
        let inner = midpoint_points(c, 30);
        let mut reference = 0.0;
        for (r, w) in &outer {
            let mut val = static_singular_integral(&c, r).unwrap();
            for (q, wq) in &inner {
                let d = (r - q).norm();
                val += wq * if d > 0.0 { ((-kappa * d).exp() - 1.0) / (4.0 * PI * d) } else { -kappa / (4.0 * PI) };
            }
            reference += w * val;
        }
        reference /= area * area;
        assert!(((p[(0, 0)] - reference) / reference).abs() < 2e-3, "κ={kappa}: {} vs {reference}", p[(0, 0)]);
    }
}

#[test]
fn efie_is_positive_definite_for_a_closed_body() {
    let pr = problem(generate_sphere(1.0, 1).unwrap());
    for kappa in [0.5, 1.0, 3.0] {
        let m = assemble_efie::<f64>(&pr, kappa).unwrap();
        let eig = m.matrix.clone().symmetric_eigenvalues();
        assert!(eig.min() > 0.0, "κ={kappa}: λmin = {}", eig.min());
    }
}

#[test]
fn efie_conditioning_breaks_down_while_aefie_stays_bounded() {
    let pr = problem(generate_sphere(1.0, 1).unwrap());
    let kappas = [1e-2, 1e-4, 1e-6];
    let efie: Vec<f64> = kappas.iter().map(|&k| cond_svd(&assemble_efie::<f64>(&pr, k).unwrap().matrix)).collect();
    let aefie: Vec<f64> = kappas.iter().map(|&k| cond_svd(&assemble_aefie::<f64>(&pr, k).unwrap().matrix)).collect();
    assert!(efie[0] < efie[1] && efie[1] < efie[2], "{efie:?}");
    assert!(efie[2] / efie[0] > 100.0);
    let (lo, hi) = aefie.iter().fold((f64::MAX, 0.0f64), |(l, h), &c| (l.min(c), h.max(c)));
    assert!(hi / lo < 10.0, "{aefie:?}");
}

#[test]
fn aefie_block_structure() {
    for gauge in [ChargeGauge::Reduced, ChargeGauge::Full] {
        let opts = AssemblyOptions { gauge, ..Default::default() };
        let pr = Problem::new(two_spheres(0, 1.0), opts).unwrap();
        let kappa = 0.37;
        let z = assemble_aefie::<f64>(&pr, kappa).unwrap();
        let e = z.num_currents();
        let nq = z.num_charges();
        assert_eq!(z.dim(), pr.dimension(Formulation::Aefie));
        let br = z.matrix.view((e, e), (nq, nq));
        for i in 0..nq {
            for j in 0..nq {
                let want = if i == j { -kappa * kappa } else { 0.0 };
                assert_eq!(br[(i, j)], want);
            }
        }
        let bl = z.matrix.view((e, 0), (nq, e));
        assert!(bl.iter().all(|&x| x == 0.0 || x == 1.0 || x == -1.0));
        if gauge == ChargeGauge::Full {
            assert_eq!(bl.clone_owned(), pr.basis().incidence_matrix());
        }
        let v = assemble_v::<f64>(&pr, kappa).unwrap();
        assert_eq!(z.matrix.view((0, 0), (e, e)).clone_owned(), v);
    }
}

#[test]
fn charge_gauges_share_the_schur_complement() {
    // both A-EFIE gauges reduce to V + DᵀPD/κ² on the currents
    let kappa = 0.8;
    let mut schur = Vec::new();
    for gauge in [ChargeGauge::Reduced, ChargeGauge::Full] {
        let pr = Problem::new(two_spheres(0, 0.7), AssemblyOptions { gauge, ..Default::default() }).unwrap();
        let z = assemble_aefie::<f64>(&pr, kappa).unwrap().matrix;
        let e = pr.basis().num_edges();
        let n = z.nrows();
        let a = z.view((0, 0), (e, e));
        let b = z.view((0, e), (e, n - e));
        let c = z.view((e, 0), (n - e, e));
        let d = z.view((e, e), (n - e, n - e));
        let dinv = d.clone_owned().try_inverse().unwrap();
        schur.push(a - b * dinv * c);
    }
    let pr = problem(two_spheres(0, 0.7));
    let m = assemble_efie::<f64>(&pr, kappa).unwrap().matrix / kappa;
    for s in &schur {
        assert!((s - &m).norm() / m.norm() < 1e-12);
    }
}

#[test]
fn cross_blocks_are_screened_at_large_kappa() {
    let gap = 1.0;
    let pr = problem(two_spheres(1, gap));
    let kappa = 45.0 / gap;
    for f in [Formulation::Efie, Formulation::Aefie] {
        let z = assemble_system::<f64>(&pr, f, kappa).unwrap();
        let max = max_abs(&z.matrix);
        let o = z.owners();
        for j in 0..z.dim() {
            for i in 0..z.dim() {
                if o[i] != o[j] {
                    assert!(z.matrix[(i, j)].abs() < 1e-16 * max);
                }
            }
        }
    }
}

#[test]
fn normalization_zeroes_exactly_the_cross_blocks() {
    let pr = problem(two_spheres(0, 0.5));
    let z = assemble_aefie::<f64>(&pr, 0.5).unwrap();
    let zi = z.normalized();
    let o = z.owners();
    for j in 0..z.dim() {
        for i in 0..z.dim() {
            if o[i] == o[j] {
                assert_eq!(zi.matrix[(i, j)], z.matrix[(i, j)]);
            } else {
                assert_eq!(zi.matrix[(i, j)], 0.0);
            }
        }
    }
    let single = problem(generate_sphere(1.0, 0).unwrap());
    let z1 = assemble_efie::<f64>(&single, 0.5).unwrap();
    assert_eq!(z1.normalized(), z1);
}

#[test]
fn cross_block_bounded_by_kernel_at_gap() {
    // ‖Z∞ − Z‖ over the P block ≤ e^{-κg}/(4πg): pulse functions have unit mass
    let gap = 0.8;
    let pr = problem(two_spheres(0, gap));
    let gap = pr.scene().vertex_gap().unwrap();
    for kappa in [0.1, 1.0, 3.0] {
        let p = assemble_p::<f64>(&pr, kappa).unwrap();
        let bound = (-kappa * gap).exp() / (4.0 * PI * gap);
        let r0 = pr.basis().patch_range(0);
        let r1 = pr.basis().patch_range(1);
        for i in r0.clone() {
            for j in r1.clone() {
                assert!(p[(i, j)] <= bound * (1.0 + 1e-9));
            }
        }
    }
}

fn fd_gradient(pr: &Problem, f: Formulation, kappa: f64, object: usize, u: Vector3<f64>, h: f64) -> DMatrix<f64> {
    let plus = pr.displaced(object, u * (0.5 * h)).unwrap();
    let minus = pr.displaced(object, u * (-0.5 * h)).unwrap();
    let zp = assemble_system::<f64>(&plus, f, kappa).unwrap().matrix;
    let zm = assemble_system::<f64>(&minus, f, kappa).unwrap().matrix;
    (zp - zm) / h
}

#[test]
fn gradient_matches_central_differences_over_two_decades() {
    let gap = 0.5;
    let pr = problem(two_spheres(0, gap));
    let u = Vector3::new(1.0, 0.0, 0.0);
    for f in [Formulation::Efie, Formulation::Aefie] {
        for kappa in [0.3, 2.0] {
            let g = assemble_gradient::<f64>(&pr, f, kappa, 1, u).unwrap();
            let scale = max_abs(&g.matrix);
            for h in [1e-3 * gap, 1e-4 * gap, 1e-5 * gap] {
                let fd = fd_gradient(&pr, f, kappa, 1, u, h);
                let err = max_abs(&(&fd - &g.matrix)) / scale;
                assert!(err < 1e-5, "{f} κ={kappa} h={h:e}: {err:e}");
            }
        }
    }
}

#[test]
fn gradient_block_structure_is_exact() {
    let pr = problem(two_spheres(0, 0.5));
    let u = Vector3::new(0.0, 0.6, 0.8);
    for f in [Formulation::Efie, Formulation::Aefie] {
        let g = assemble_gradient::<f64>(&pr, f, 0.9, 0, u).unwrap();
        let o = g.owners();
        let n = g.dim();
        for i in 0..n {
            for j in 0..n {
                if o[i] == o[j] {
                    assert_eq!(g.matrix[(i, j)], 0.0);
                }
                if i >= g.num_currents() {
                    assert_eq!(g.matrix[(i, j)], 0.0);
                }
            }
        }
    }
}

#[test]
fn gradient_is_antisymmetric_between_the_two_objects() {
    // moving object 0 by +u changes the pair geometry like moving object 1 by -u
    let pr = problem(two_spheres(0, 0.6));
    let u = Vector3::new(1.0, 0.0, 0.0);
    for f in [Formulation::Efie, Formulation::Aefie] {
        let g0 = assemble_gradient::<f64>(&pr, f, 0.7, 0, u).unwrap().matrix;
        let g1 = assemble_gradient::<f64>(&pr, f, 0.7, 1, -u).unwrap().matrix;
        assert!(max_abs(&(&g0 - &g1)) <= 1e-14 * max_abs(&g0));
    }
}

#[test]
fn three_objects_gradient_skips_unrelated_pairs() {
    let a = generate_sphere(0.5, 0).unwrap();
    let scene = a
        .combine(&a.translate_object(0, Point::new(2.0, 0.0, 0.0)).unwrap())
        .unwrap()
        .combine(&a.translate_object(0, Point::new(0.0, 2.0, 0.0)).unwrap())
        .unwrap();
    let pr = problem(scene);
    let g = assemble_gradient::<f64>(&pr, Formulation::Efie, 0.5, 2, Vector3::new(0.0, 1.0, 0.0)).unwrap();
    let o = g.owners();
    let mut nonzero = 0;
    for i in 0..g.dim() {
        for j in 0..g.dim() {
            let involved = (o[i] == 2) != (o[j] == 2);
            if !involved {
                assert_eq!(g.matrix[(i, j)], 0.0);
            } else if g.matrix[(i, j)] != 0.0 {
                nonzero += 1;
            }
        }
    }
    assert!(nonzero > 0);
}

#[test]
fn single_and_double_assembly_agree() {
    let pr = problem(two_spheres(1, 0.5));
    let z64 = assemble_aefie::<f64>(&pr, 0.8).unwrap().matrix;
    let z32 = assemble_aefie::<f32>(&pr, 0.8).unwrap().matrix;
    let diff = z32.map(|x| x as f64) - &z64;
    assert!(max_abs(&diff) < 1e-5 * max_abs(&z64));
}

#[test]
fn invalid_arguments_are_rejected() {
    let pr = problem(two_spheres(0, 0.5));
    assert!(assemble_efie::<f64>(&pr, 0.0).is_err());
    assert!(assemble_efie::<f64>(&pr, -1.0).is_err());
    assert!(assemble_efie::<f64>(&pr, f64::NAN).is_err());
    assert!(assemble_aefie::<f64>(&pr, 0.0).is_ok());
    assert!(assemble_gradient::<f64>(&pr, Formulation::Efie, 1.0, 5, Vector3::x()).is_err());
    assert!(assemble_gradient::<f64>(&pr, Formulation::Efie, 1.0, 0, Vector3::new(2.0, 0.0, 0.0)).is_err());
}

#[test]
fn near_field_plan_is_reused_by_displaced_problems() {
    let pr = problem(two_spheres(0, 0.1));
    let moved = pr.displaced(1, Point::new(10.0, 0.0, 0.0)).unwrap();
    assert_eq!(moved.plan(), pr.plan());
    assert!(pr.plan().singular_pairs() > 0);
    assert!(pr.plan().near_pairs() > 0);
}

#[test]
fn formulation_parses_and_prints() {
    assert_eq!("A-EFIE".parse::<Formulation>().unwrap(), Formulation::Aefie);
    assert_eq!("efie".parse::<Formulation>().unwrap(), Formulation::Efie);
    assert!("mfie".parse::<Formulation>().is_err());
    assert_eq!(Formulation::Aefie.to_string(), "aefie");
}
