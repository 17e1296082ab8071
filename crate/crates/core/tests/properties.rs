use cartan3::cli::{random_unit_tangent, run_from, EXIT_OK};
use cartan3::domains::*;
use cartan3::geometry::*;
use cartan3::linalg::{ComplexSymMatrix, PosDefMatrix, RealSymMatrix, C64};
use cartan3::montecarlo::McConfig;
use cartan3::oracle::{gram_matrix, monomial_basis, Integrator};
use cartan3::spectral::*;
use cartan3::symbols::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn tags() -> impl Strategy<Value = DomainTag> {
    prop_oneof![Just(DomainTag::BoundedDIII), Just(DomainTag::SiegelS)]
}

fn signature(n: usize) -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::vec(0u32..9, n).prop_map(|mut v| {
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn signature_text_and_json_round_trip(alpha in (1usize..4).prop_flat_map(signature)) {
        let s = Signature::new(alpha.clone()).unwrap();
        prop_assert_eq!(s.to_string().parse::<Signature>().unwrap(), s.clone());
        let json = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<Signature>(&json).unwrap(), s);
    }

    #[test]
    fn increasing_signatures_are_rejected(a in 0u32..5, d in 1u32..5) {
        prop_assert!(Signature::new(vec![a, a + d]).is_err());
    }

    #[test]
    fn real_matrix_serde_round_trip(data in proptest::collection::vec(-5.0f64..5.0, 6)) {
        let m = RealSymMatrix::from_packed(3, data).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        prop_assert_eq!(serde_json::from_str::<RealSymMatrix>(&text).unwrap(), m);
    }

    #[test]
    fn kernel_is_hermitian(tag in tags(), n in 1usize..4, seed in any::<u64>(), lambda in 4.0f64..7.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_point(tag, n, &mut rng);
        let w = random_point(tag, n, &mut rng);
        let a = bergman_kernel(tag, lambda, &z, &w).unwrap();
        let b = bergman_kernel(tag, lambda, &w, &z).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-9 * a.norm().max(1.0));
        prop_assert!(bergman_kernel(tag, lambda, &z, &z).unwrap().re > 0.0);
    }

    #[test]
    fn cayley_round_trip(n in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_interior_point(DomainTag::SiegelS, n, 0.3, &mut rng).unwrap();
        let w = cayley(&z).unwrap();
        prop_assert_eq!(w.tag(), DomainTag::BoundedDIII);
        let back = cayley_inv(&w).unwrap();
        prop_assert!(back.z().max_abs_diff(z.z()) <= 1e-9 * (1.0 + z.z().max_abs()));
    }

    #[test]
    fn moments_are_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (action, group) in [(Action::AbelianElliptic, Group::T), (Action::AbelianElliptic, Group::Un), (Action::AbelianHyperbolic, Group::Rplus)] {
            let z = random_point(action.domain(), 2, &mut rng);
            let moved = DomainPoint::new(action.domain(), group.act_random(z.z(), &mut rng)).unwrap();
            let (a, b) = match (moment(action, &z).unwrap(), moment(action, &moved).unwrap()) {
                (MomentValue::Scalar(a), MomentValue::Scalar(b)) => (a, b),
                _ => unreachable!(),
            };
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn weight_density_positive_inside(tag in tags(), seed in any::<u64>(), lambda in 3.1f64..8.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_point(tag, 2, &mut rng);
        let d = weight_density(tag, lambda, z.z()).unwrap();
        prop_assert!(d > 0.0 && d.is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn hamiltonian_residual_is_second_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for gen in [
            GroupGenerator::AbelianElliptic(1.0),
            GroupGenerator::AbelianHyperbolic(1.0),
            GroupGenerator::Parabolic(RealSymMatrix::from_packed(2, vec![0.7, -0.4, 1.1]).unwrap()),
        ] {
            let z = random_interior_point(gen.action().domain(), 2, 0.7, &mut rng).unwrap();
            let v = random_unit_tangent(2, &mut rng).unwrap();
            let coarse = hamiltonian_residual(&gen, &z, &v, 1e-3).unwrap();
            let fine = hamiltonian_residual(&gen, &z, &v, 5e-4).unwrap();
            // The parabolic moment is linear along some directions; skip residuals at rounding level.
            if coarse > 1e-8 {
                let ratio = coarse / fine;
                prop_assert!((3.5..=4.5).contains(&ratio), "ratio {ratio} for {gen:?}");
            }
        }
    }

    #[test]
    fn c_coeff_lies_in_symbol_range(lambda in 1.5f64..6.0, k in 0u32..7) {
        let cfg = CoeffConfig::new(32, McConfig::new(1000, 0));
        let alpha = Signature::new(vec![k]).unwrap();
        // exp(−s) of s = tr((I − Z Z̄)⁻¹) ∈ [1, ∞) takes values in (0, 1/e].
        let a = SymbolSpec::elliptic(ScalarProfile::ExpNeg);
        let v = c_coeff(&a, lambda, &alpha, &cfg).unwrap().value;
        prop_assert!(v.im.abs() < 1e-12);
        prop_assert!(v.re > 0.0 && v.re <= (-1.0f64).exp() + 1e-12);
        let r = c_coeff(&SymbolSpec::raw(RawBuiltin::Radial, DomainTag::BoundedDIII), lambda, &alpha, &cfg).unwrap().value;
        prop_assert!(r.re > 0.0 && r.re < 1.0);
    }

    #[test]
    fn gamma_matches_exp_neg_closed_form(lambda in 1.5f64..5.0, x in 0.05f64..8.0) {
        let g = gamma_parabolic(|y| c((-y.trace()).exp(), 0.0), lambda, &PosDefMatrix::diagonal(&[x]).unwrap(), &ConeQuadConfig::default()).unwrap();
        let want = (2.0 * x / (2.0 * x + 1.0)).powf(lambda - 1.0);
        prop_assert!((g.value.re - want).abs() < 1e-6 && g.value.im.abs() < 1e-9);
        prop_assert!(g.value.re > 0.0 && g.value.re < 1.0);
    }

    #[test]
    fn gram_matrix_is_positive(lambda in 2.0f64..6.0, degree in 1u32..7) {
        let b = gram_matrix(DomainTag::BoundedDIII, 1, lambda, monomial_basis(1, degree), &Integrator::Quadrature { order: 40 }).unwrap();
        prop_assert!(b.min_eigenvalue() > 0.0);
        prop_assert!((b.gram[(0, 0)] - c(1.0, 0.0)).norm() < 1e-10);
    }
}

#[test]
fn fourier_laplace_transform_is_holomorphic() {
    let cfg = ConeQuadConfig::default();
    let f = |x: &RealSymMatrix| c(x.trace().powi(2) * (-x.trace()).exp(), 0.0);
    let eval = |z: C64| {
        let p = DomainPoint::new(DomainTag::SiegelS, ComplexSymMatrix::diagonal(&[z])).unwrap();
        fourier_laplace_adjoint(f, 2.5, &p, 1.0, &cfg).unwrap().value
    };
    let h = 1e-4;
    for z in [c(0.3, 0.5), c(-1.2, 0.2), c(2.0, 1.5)] {
        let dx = (eval(z + h) - eval(z - h)) / (2.0 * h);
        let dy = (eval(z + c(0.0, h)) - eval(z - c(0.0, h))) / (2.0 * h);
        // ∂F/∂z̄ = (∂x + i∂y)F / 2 vanishes.
        let dbar = (dx + c(0.0, 1.0) * dy) * 0.5;
        assert!(dbar.norm() < 1e-6 * dx.norm().max(1.0), "d/dz̄ = {dbar} at {z}");
    }
}

fn table_body(workers: &str, path: &std::path::Path) -> String {
    let code = run_from([
        "cartan3",
        "c-table",
        "--n",
        "2",
        "--lambda",
        "3.5",
        "--symbol",
        r#"{"kind":"elliptic","profile":"reciprocal"}"#,
        "--max-degree",
        "2",
        "--mc-samples",
        "20000",
        "--seed",
        "9",
        "--workers",
        workers,
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn c_table_does_not_depend_on_worker_count() {
    let dir = std::env::temp_dir();
    let one = table_body("1", &dir.join("cartan3_workers_1.csv"));
    let three = table_body("3", &dir.join("cartan3_workers_3.csv"));
    assert_eq!(one, three);
    assert!(one.starts_with("alpha,value_re,value_im,std_error"));
    assert_eq!(one.lines().count(), 1 + Signature::up_to_degree(2, 2).len());
}
