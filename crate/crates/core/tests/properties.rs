//! Property tests for the invariants of the workbench.

use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rustfft::num_complex::Complex64;

use fracq_core::degree::{brouwer_degree, index_formula, DegreeOptions, ObstructionField, ObstructionRule, SyntheticIndexField};
use fracq_core::flatness::{build_matrix_m, classify_kminus, pair_criterion, ClassifyOptions, CurvatureSpec, LocalModel};
use fracq_core::spectral_ops::{apply_psigma, eigenvalue, invert_psigma, HarmonicBasis, SpectralField, SphericalTransform};
use fracq_core::sphere_core::{bubble, sphere_area, FnSphere, StereoChart};
use fracq_core::variational::beckner_check;
use fracq_core::{GridField, GridKind, MoebiusParams, ProblemParams, QuadratureGrid, SpherePoint};

fn point3() -> impl Strategy<Value = SpherePoint> {
    prop::array::uniform3(-1.0f64..1.0)
        .prop_filter("away from the origin", |v| v.iter().map(|x| x * x).sum::<f64>() > 0.05)
        .prop_map(|v| SpherePoint::normalized(v.to_vec()).unwrap())
}

/// Rotation matrix of a unit quaternion.
fn rotation() -> impl Strategy<Value = [[f64; 3]; 3]> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("nonzero quaternion", |q| q.iter().map(|x| x * x).sum::<f64>() > 0.05)
        .prop_map(|q| {
            let s = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            let [w, x, y, z] = q.map(|c| c / s);
            [
                [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
                [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
                [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
            ]
        })
}

fn mul(r: &[[f64; 3]; 3], v: &[f64]) -> Vec<f64> {
    (0..3).map(|i| (0..3).map(|j| r[i][j] * v[j]).sum()).collect()
}

fn mul_t(r: &[[f64; 3]; 3], v: &[f64]) -> Vec<f64> {
    (0..3).map(|i| (0..3).map(|j| r[j][i] * v[j]).sum()).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moebius_maps_the_sphere_and_inverts(p in point3(), q in point3(), t in 1.0f64..50.0) {
        let m = MoebiusParams::new(p, t).unwrap();
        let y = m.apply(q.coords());
        prop_assert!((y.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-12);
        let back = m.inverse().apply(&y);
        prop_assert!(dist(&back, q.coords()) < 1e-9);
    }

    #[test]
    fn moebius_is_a_chart_dilation(p in point3(), y in prop::array::uniform2(-3.0f64..3.0), s in 1.0f64..10.0, t in 1.0f64..10.0) {
        let chart = StereoChart::with_north(&p);
        let m = MoebiusParams::new(p.clone(), t).unwrap();
        let img = m.apply(&chart.forward(&y));
        let want = chart.forward(&[t * y[0], t * y[1]]);
        prop_assert!(dist(&img, &want) < 1e-10);
        // one-parameter subgroup
        let composed = MoebiusParams::new(p.clone(), s).unwrap().apply(&img);
        let direct = MoebiusParams::new(p, s * t).unwrap().apply(&chart.forward(&y));
        prop_assert!(dist(&composed, &direct) < 1e-9);
    }

    #[test]
    fn chart_round_trip(p in point3(), y in prop::array::uniform2(-5.0f64..5.0)) {
        let chart = StereoChart::with_north(&p);
        let x = chart.forward(&y);
        let back = chart.inverse(&x).unwrap();
        prop_assert!(dist(&back, &y) < 1e-10 * (1.0 + y[0].abs() + y[1].abs()));
    }

    #[test]
    fn eigenvalue_recurrence(n in 2usize..6, frac in 0.02f64..0.98, k in 0usize..40) {
        let sigma = frac * n as f64 / 2.0;
        let pr = ProblemParams::new(n, sigma).unwrap();
        let h = n as f64 / 2.0 + k as f64;
        let ratio = eigenvalue(k + 1, &pr) / eigenvalue(k, &pr);
        prop_assert!((ratio - (h + sigma) / (h - sigma)).abs() <= 1e-12 * ratio);
    }

    #[test]
    fn index_formula_is_invariant_under_relabeling(
        a in prop::collection::vec(prop::array::uniform2(prop_oneof![-2.0f64..-0.1, 0.1f64..2.0]), 1..6),
        perm_seed in any::<u64>(),
    ) {
        let poles: Vec<SpherePoint> = (0..a.len())
            .map(|i| {
                let th = 2.0 * PI * i as f64 / a.len() as f64;
                SpherePoint::normalized(vec![th.cos(), th.sin(), 0.3]).unwrap()
            })
            .collect();
        prop_assume!(a.iter().all(|v| (v[0] + v[1]).abs() > 1e-9));
        let spec = |order: &[usize], swap: bool| {
            let ms = order
                .iter()
                .map(|&i| {
                    let c = if swap { vec![a[i][1], a[i][0]] } else { a[i].to_vec() };
                    LocalModel::canonical(poles[i].clone(), c, 2.0).unwrap()
                })
                .collect();
            CurvatureSpec::new(2, "relabel", Arc::new(FnSphere(|_: &[f64]| 1.0)), ms).unwrap()
        };
        let ident: Vec<usize> = (0..a.len()).collect();
        let mut perm = ident.clone();
        let mut s = perm_seed;
        for i in (1..perm.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let base = index_formula(&spec(&ident, false)).unwrap();
        prop_assert_eq!(index_formula(&spec(&perm, false)).unwrap(), base);
        prop_assert_eq!(index_formula(&spec(&ident, true)).unwrap(), base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn spectral_round_trip(coeffs in prop::collection::vec(-1.0f64..1.0, 49), frac in 0.05f64..0.95) {
        let g = Arc::new(QuadratureGrid::build(2, 16, GridKind::Product).unwrap());
        let tr = SphericalTransform::new(&g, 6).unwrap();
        let c = SpectralField::from_coeffs(HarmonicBasis::RealS2, 6, coeffs.clone()).unwrap();
        let back = tr.analyze_values(&tr.synthesize_values(&c));
        for (x, y) in back.coeffs().iter().zip(&coeffs) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        let pr = ProblemParams::new(2, frac).unwrap();
        let id = invert_psigma(&apply_psigma(&c, &pr), &pr);
        for (x, y) in id.coeffs().iter().zip(&coeffs) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn conformal_jacobian_preserves_area(p in point3(), t in 1.0f64..3.0) {
        let g = Arc::new(QuadratureGrid::build(2, 64, GridKind::Product).unwrap());
        let m = MoebiusParams::new(p, t).unwrap();
        let vals: Vec<f64> = g.nodes().map(|x| m.jacobian_det(x)).collect();
        prop_assert!((g.integrate(&vals) - sphere_area(2)).abs() < 1e-8);
    }

    #[test]
    fn bubbles_are_sobolev_extremals(p in point3(), t in 1.0f64..4.0, frac in 0.2f64..0.8) {
        let g = Arc::new(QuadratureGrid::build(2, 64, GridKind::Product).unwrap());
        let pr = ProblemParams::new(2, frac).unwrap();
        let b = bubble(&g, &MoebiusParams::new(p, t).unwrap(), &pr);
        let (l, r) = beckner_check(&b, &pr).unwrap();
        prop_assert!((l - r).abs() < 1e-6 * r);
        let pert = GridField::from_fn(&g, |x| 1.0 + 0.2 * x[0] * x[1]);
        let (l, r) = beckner_check(&pert, &pr).unwrap();
        prop_assert!(l < r);
    }

    #[test]
    fn matrix_is_symmetric_and_pair_criterion_reads_the_minors(
        p in point3(), q in point3(),
        a in prop::array::uniform2(-1.0f64..-0.01), b in prop::array::uniform2(-1.0f64..-0.01),
        base in 0.5f64..3.0,
    ) {
        prop_assume!(dist(p.coords(), q.coords()) > 1.0);
        let pr = ProblemParams::new(2, 0.5).unwrap();
        let pts = vec![(p, a.to_vec(), 1.0), (q, b.to_vec(), 1.0)];
        let spec = CurvatureSpec::flatness_demo(2, base, 0.3, pts).unwrap();
        let members = classify_kminus(&spec, &pr, &ClassifyOptions::default()).unwrap().members();
        prop_assert_eq!(members.len(), 2);
        let m = build_matrix_m(&spec, &members, &pr).unwrap();
        prop_assert_eq!(m.entries[0][1], m.entries[1][0]);
        prop_assert!(m.entries[0][0] > 0.0 && m.entries[1][1] > 0.0 && m.entries[0][1] < 0.0);
        let e = &m.entries;
        prop_assert_eq!(pair_criterion(&m)[0].holds, e[0][0] * e[1][1] < e[0][1] * e[0][1]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn degree_is_rotation_invariant(r in rotation(), eps in 0.05f64..0.3) {
        let base = CurvatureSpec::linear_x(2, eps).unwrap();
        let g = base.global.clone();
        let rotated = CurvatureSpec::new(2, "rotated", Arc::new(FnSphere(move |x: &[f64]| g.value(&mul_t(&r, x)))), Vec::new()).unwrap();
        let opts = DegreeOptions::default();
        let f0 = ObstructionField::new(base, 10.0).unwrap().with_rule(ObstructionRule { panel_nodes: 8, directions: 24, ..Default::default() });
        let f1 = ObstructionField::new(rotated, 10.0).unwrap().with_rule(ObstructionRule { panel_nodes: 8, directions: 24, ..Default::default() });
        let d0 = brouwer_degree(&f0, &opts).unwrap();
        let d1 = brouwer_degree(&f1, &opts).unwrap();
        prop_assert_eq!(d0.degree, d1.degree);
        prop_assert!((d0.boundary_min_norm - d1.boundary_min_norm).abs() < 0.05 * d0.boundary_min_norm);
        // field equivariance at a sample point
        use fracq_core::degree::BallField;
        let p = [0.3, -0.2, 0.5];
        let v = mul(&r, &f0.eval(&p).unwrap());
        let w = f1.eval(&mul(&r, &p)).unwrap();
        prop_assert!(dist(&v, &w) < 1e-6 * (1.0 + v.iter().map(|x| x.abs()).sum::<f64>()));
    }

    #[test]
    fn degree_is_stable_under_seed_refinement(
        raw in prop::collection::vec((0.0f64..0.6, 0.0f64..(2.0 * PI), prop::bool::ANY), 1..5),
    ) {
        let zeros: Vec<(Complex64, i32)> = raw.iter().map(|(r, th, s)| (Complex64::from_polar(*r, *th), if *s { 1 } else { -1 })).collect();
        let separated = zeros.iter().enumerate().all(|(i, a)| zeros[..i].iter().all(|b| (a.0 - b.0).norm() > 0.25));
        prop_assume!(separated);
        let expected: i64 = zeros.iter().map(|z| z.1 as i64).sum();
        let field = SyntheticIndexField { zeros, radius: 0.9 };
        for (seeds, cells) in [(5, 48), (7, 48), (9, 64)] {
            let opts = DegreeOptions { seeds_per_axis: seeds, boundary_cells: cells, ..Default::default() };
            let rep = brouwer_degree(&field, &opts).unwrap();
            prop_assert_eq!(rep.degree, expected);
            prop_assert_eq!(rep.kronecker, Some(expected));
        }
    }
}
