use mmhom_core::field::*;
use mmhom_core::geodesic::Path;
use mmhom_core::minimize::*;
use mmhom_core::schedule::{ScalingSchedule, CRITICAL_ALPHA};
use mmhom_core::*;
use proptest::prelude::*;

fn checkerboard(space_dim: usize) -> PotentialSpec {
    PotentialSpec::new(
        space_dim,
        vec![-1.0],
        vec![1.0],
        BaseWell::QuarticScalar,
        Modulation::Checkerboard { low: 1.0, high: 2.0 },
    )
    .unwrap()
}

fn smooth_field(cells: usize, phase: f64, amp: f64) -> GridField {
    let counts = GridField::counts_for(&Bounds::unit(2), cells).unwrap();
    GridField::from_fn(Bounds::unit(2), counts, 1, |x, out| {
        out[0] = (amp * (x[0] - 0.5) + 0.3 * (7.0 * x[1] + phase).sin()).tanh();
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn axis_aligned_faces_are_counted_exactly(cells in 2usize..80, cut_frac in 0.0..1.0f64, axis in 0usize..2,
                                             lo in -3.0..3.0f64, side in 0.5..4.0f64) {
        let bounds = Bounds::new(vec![lo, lo], vec![lo + side, lo + side]).unwrap();
        let counts = GridField::counts_for(&bounds, cells).unwrap();
        let cut = 1 + ((cells - 1) as f64 * cut_frac) as usize;
        let u = GridField::from_fn(bounds.clone(), counts.clone(), 1, |x, out| {
            let i = ((x[axis] - lo) / side * cells as f64).round() as usize;
            out[0] = if i < cut { -1.0 } else { 1.0 };
        })
        .unwrap();
        let p = face_perimeter(&u, &[-1.0], &[1.0], &Region::Full).unwrap();
        prop_assert!((p - side).abs() <= 1e-12 * side);
    }

    #[test]
    fn energy_reports_add_up(cells in 8usize..48, phase in 0.0..6.0f64, amp in 1.0..30.0f64, delta in 0.05..1.0f64) {
        let u = smooth_field(cells, phase, amp);
        let eps = 4.0 / cells as f64;
        let e = diffuse_energy(&u, eps, delta, &checkerboard(2)).unwrap();
        prop_assert!((e.total - (e.potential + e.gradient)).abs() <= 1e-12 * e.total.abs());
        let hp = HomogenizedPotential::exact(&checkerboard(2));
        let eh = homogenized_energy(&u, delta, &hp).unwrap();
        prop_assert!((eh.total - (eh.potential + eh.gradient)).abs() <= 1e-12 * eh.total.abs());
        // the two energies share the gradient term and differ by at most the discrepancy
        let d = discrepancy(&u, eps, delta, &checkerboard(2), &hp).unwrap();
        prop_assert_eq!(e.gradient, eh.gradient);
        prop_assert!((e.total - eh.total).abs() <= d + 1e-12);
    }

    #[test]
    fn homogeneous_potentials_have_no_discrepancy(cells in 8usize..48, phase in 0.0..6.0f64, amp in 1.0..30.0f64,
                                                  c in 0.2..5.0f64) {
        let u = smooth_field(cells, phase, amp);
        let w = PotentialSpec::new(2, vec![-1.0], vec![1.0], BaseWell::QuarticScalar, Modulation::Constant(c)).unwrap();
        let hp = HomogenizedPotential::exact(&w);
        prop_assert_eq!(discrepancy(&u, 1e-3, 0.1, &w, &hp).unwrap(), 0.0);
    }

    #[test]
    fn projection_lands_on_the_wells(cells in 4usize..40, phase in 0.0..6.0f64, amp in 0.5..30.0f64) {
        let u = smooth_field(cells, phase, amp);
        let p = project_to_wells(&u, &[-1.0], &[1.0]).unwrap();
        for (orig, proj) in u.values().iter().zip(p.values()) {
            prop_assert!(*proj == -1.0 || *proj == 1.0);
            prop_assert_eq!(*proj == 1.0, *orig > 0.0);
        }
        prop_assert_eq!(l1_distance(&p, &p).unwrap(), 0.0);
        let back = project_to_wells(&p, &[-1.0], &[1.0]).unwrap();
        prop_assert_eq!(back.values(), p.values());
    }

    #[test]
    fn scales_shrink_geometrically(eps0 in 0.01..1.0f64, delta0 in 0.01..1.0f64, rho in 0.1..0.9f64,
                                   alpha in 0.05..0.95f64, n_max in 0usize..12) {
        let s = ScalingSchedule { eps0, delta0, rho, alpha, n_max: Some(n_max) };
        s.validate().unwrap();
        let pairs = s.pairs();
        prop_assert_eq!(pairs.len(), n_max + 1);
        for w in pairs.windows(2) {
            prop_assert!(w[1].eps < w[0].eps && w[1].delta < w[0].delta);
            prop_assert!(w[1].eps > 0.0 && w[1].delta > 0.0);
            if alpha < CRITICAL_ALPHA {
                prop_assert!(w[1].ratio_three_halves() < w[0].ratio_three_halves());
            }
        }
    }
}

fn quartic_profile() -> TransitionProfile {
    let w = PotentialSpec::new(1, vec![-1.0], vec![1.0], BaseWell::QuarticScalar, Modulation::Constant(1.0)).unwrap();
    let hp = HomogenizedPotential::exact(&w);
    TransitionProfile::new(&hp, &Path::straight(&[-1.0], &[1.0], 128), TransitionProfile::DEFAULT_COLLAR).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn descent_is_monotone_and_keeps_boundary_data(angle in 0.0..1.6f64, wiggle in 0.0..0.4f64, planar in any::<bool>()) {
        let w = checkerboard(2);
        let boundary = if planar { Boundary::Planar { angle } } else { Boundary::Dirichlet };
        let base = TransitionProblem {
            bounds: Bounds::unit(2),
            cells: 32,
            eps: 0.125,
            delta: 0.25,
            boundary,
            init: InitialField::Profile,
            profile: quartic_profile(),
        };
        let mut start = base.planar_field().unwrap();
        for (i, v) in start.values_mut().iter_mut().enumerate() {
            *v += wiggle * ((i as f64) * 0.7).sin();
        }
        let problem = TransitionProblem { init: InitialField::Given(start), ..base };
        let (u0, fixed) = problem.initial_state().unwrap();
        for scheme in [Scheme::QuasiNewton, Scheme::SemiImplicit] {
            let opts = FlowOptions { scheme, max_steps: 300, ..FlowOptions::default() };
            let out = minimize_diffuse(&problem, &w, &opts).unwrap();
            for pair in out.history.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-12 * pair[0].abs());
            }
            for (node, f) in fixed.iter().enumerate() {
                if *f {
                    prop_assert_eq!(u0.value(node), out.field.value(node));
                }
            }
        }
    }
}

#[test]
fn explicit_scheme_respects_its_step_cap() {
    let w = PotentialSpec::new(1, vec![-1.0], vec![1.0], BaseWell::QuarticScalar, Modulation::Constant(1.0)).unwrap();
    let problem = TransitionProblem {
        bounds: Bounds::new(vec![-0.5], vec![0.5]).unwrap(),
        cells: 200,
        eps: 1.0,
        delta: 0.05,
        boundary: Boundary::Dirichlet,
        init: InitialField::Profile,
        profile: quartic_profile(),
    };
    let opts = FlowOptions { scheme: Scheme::Explicit, max_steps: 50, ..FlowOptions::default() };
    let out = minimize_diffuse(&problem, &w, &opts).unwrap();
    assert_eq!(out.rejected, 0);
    for pair in out.history.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12 * pair[0]);
    }
}
