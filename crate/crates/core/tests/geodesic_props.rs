use mmhom_core::geodesic::{dijkstra_oracle, kh_1d, minimize_kh, path_cost, OracleOptions, StringOptions};
use mmhom_core::*;
use proptest::prelude::*;

fn product_wells(a: [f64; 2], b: [f64; 2], scale: f64) -> PotentialSpec {
    PotentialSpec::new(2, a.to_vec(), b.to_vec(), BaseWell::QuadraticProduct, Modulation::Constant(1.0))
        .unwrap()
        .with_scale(scale)
        .unwrap()
}

fn quick() -> StringOptions {
    StringOptions {
        segments: 64,
        tol: 1e-7,
        ..StringOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn swapping_the_wells_reverses_the_answer(ax in -1.0..0.0f64, ay in -0.5..0.5f64,
                                              bx in 0.2..1.0f64, by in -0.5..0.5f64) {
        let w = product_wells([ax, ay], [bx, by], 1.0);
        let hp = HomogenizedPotential::exact(&w);
        let fwd = minimize_kh(&hp, &[ax, ay], &[bx, by], &quick()).unwrap();
        let back = minimize_kh(&hp, &[bx, by], &[ax, ay], &quick()).unwrap();
        prop_assert_eq!(fwd.cost, back.cost);
        prop_assert_eq!(fwd.path.node(0), &[ax, ay][..]);
        prop_assert_eq!(back.path.node(0), &[bx, by][..]);
    }

    #[test]
    fn cost_scales_with_the_square_root(ay in -0.5..0.5f64, by in -0.5..0.5f64, k in -2i32..3) {
        // powers of four keep every intermediate exact
        let c = 4f64.powi(k);
        let base = HomogenizedPotential::exact(&product_wells([-1.0, ay], [1.0, by], 1.0));
        let scaled = HomogenizedPotential::exact(&product_wells([-1.0, ay], [1.0, by], c));
        let r0 = minimize_kh(&base, &[-1.0, ay], &[1.0, by], &quick()).unwrap();
        let r1 = minimize_kh(&scaled, &[-1.0, ay], &[1.0, by], &quick()).unwrap();
        prop_assert!((r1.cost - c.sqrt() * r0.cost).abs() <= 1e-10 * r1.cost);
    }

    #[test]
    fn result_never_exceeds_the_straight_path(ay in -0.5..0.5f64, by in -0.5..0.5f64, bump in 0.0..20.0f64) {
        let a = [-1.0, ay];
        let b = [1.0, by];
        let base = product_wells(a, b, 1.0);
        let land = Uniform::new(2, move |p: &[f64]| {
            base.base_value(p) + bump * (-(p[0] * p[0] + p[1] * p[1]) / 0.1).exp()
        });
        let r = minimize_kh(&land, &a, &b, &quick()).unwrap();
        let straight = path_cost(&geodesic::Path::straight(&a, &b, 64), &land);
        prop_assert!(r.cost <= straight * (1.0 + 1e-12));
    }

    #[test]
    fn converged_paths_survive_refinement(ay in -0.5..0.5f64, by in -0.5..0.5f64, bump in 0.0..20.0f64) {
        let a = [-1.0, ay];
        let b = [1.0, by];
        let base = product_wells(a, b, 1.0);
        let land = Uniform::new(2, move |p: &[f64]| {
            base.base_value(p) + bump * (-(p[0] * p[0] + p[1] * p[1]) / 0.1).exp()
        });
        let r = minimize_kh(&land, &a, &b, &quick()).unwrap();
        let fine = r.path.resample(2 * r.path.segments());
        let c2 = path_cost(&fine, &land);
        prop_assert!((c2 - r.cost).abs() < 0.005 * r.cost, "{} vs {}", c2, r.cost);
    }

    #[test]
    fn string_method_is_sandwiched_by_the_oracle(ay in -0.4..0.4f64, by in -0.4..0.4f64, bump in 0.0..10.0f64) {
        let a = [-1.0, ay];
        let b = [1.0, by];
        let base = product_wells(a, b, 1.0);
        let land = Uniform::new(2, move |p: &[f64]| {
            base.base_value(p) + bump * (-(p[0] * p[0] + p[1] * p[1]) / 0.1).exp()
        });
        let r = minimize_kh(&land, &a, &b, &quick()).unwrap();
        let opts = OracleOptions { bounds: Bounds::cube(2, -1.6, 1.6).unwrap(), per_axis: 81, order: 2 };
        let oracle = dijkstra_oracle(&land, &a, &b, &opts).unwrap();
        prop_assert!(r.cost <= oracle * 1.02, "string {} oracle {}", r.cost, oracle);
    }

    #[test]
    fn oracle_costs_do_not_increase_under_refinement(w in 0.3..2.0f64, c in 0.1..4.0f64) {
        let spec = PotentialSpec::new(1, vec![-w], vec![w], BaseWell::QuarticScalar, Modulation::Constant(c)).unwrap();
        let hp = HomogenizedPotential::exact(&spec);
        let mut last = f64::INFINITY;
        for per_axis in [101, 201, 401] {
            // wells fall on the lattice of [−2w, 2w]
            let opts = OracleOptions { bounds: Bounds::cube(1, -2.0 * w, 2.0 * w).unwrap(), per_axis, order: 2 };
            let cost = dijkstra_oracle(&hp, &[-w], &[w], &opts).unwrap();
            prop_assert!(cost <= last + 1e-9);
            last = cost;
        }
    }

    #[test]
    fn one_dimensional_reduction_matches_the_closed_form(w in 0.3..2.0f64, c in 0.1..4.0f64) {
        let spec = PotentialSpec::new(1, vec![-w], vec![w], BaseWell::QuarticScalar, Modulation::Constant(c)).unwrap();
        let hp = HomogenizedPotential::exact(&spec);
        // 2√c ∫(w² − p²) dp over [−w, w]
        let exact = 2.0 * c.sqrt() * 4.0 * w * w * w / 3.0;
        prop_assert!((kh_1d(&hp, -w, w) - exact).abs() < 1e-8);
    }
}
