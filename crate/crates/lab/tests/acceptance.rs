//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::time::Instant;

use mmhom::config::{Config, ModulationConfig};
use mmhom::emit::write_csv;
use mmhom::experiment::{fit_column, fit_scaling, isotropy_study, run_schedule, spread};
use mmhom::{ExperimentRow, Setup};
use mmhom_core::field::{
    face_perimeter, homogenized_energy, l1_distance, reconstructed_perimeter, GridField, Region,
};
use mmhom_core::geodesic::{minimize_kh, verify_truncation_invariance, Path, StringOptions};
use mmhom_core::minimize::{
    minimize_diffuse, recovery_sequence, Boundary, InitialField, TransitionProblem, TransitionProfile,
};
use mmhom_core::potential::{truncate, TruncationLattice};
use mmhom_core::{BaseWell, Bounds, HomogenizedPotential, Landscape, Modulation, PotentialSpec};

const KH_QUARTIC: f64 = 8.0 / 3.0;

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, id: &str, name: &str, ok: bool, detail: String) {
        println!("{} {id:>3} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

fn quartic(space_dim: usize, m: Modulation) -> PotentialSpec {
    PotentialSpec::new(space_dim, vec![-1.0], vec![1.0], BaseWell::QuarticScalar, m).unwrap()
}

fn checkerboard_config() -> Config {
    let mut c = Config::default();
    c.potential.modulation = ModulationConfig::Checkerboard { low: 1.0, high: 2.0 };
    c
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn rel_spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    (max - min) / min
}

fn kh_closed_form(r: &mut Report) -> f64 {
    let mut c = Config::default();
    c.potential.space_dim = 1;
    c.potential.modulation = ModulationConfig::Sine { amplitude: 0.5 };
    let start = Instant::now();
    let setup = Setup::new(&c).unwrap();
    let k = setup.kh_report().unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ok = (k.kh - KH_QUARTIC).abs() < 1e-3 && (k.oracle - KH_QUARTIC).abs() < 1e-2 && secs < 5.0;
    r.check(
        "1",
        "K_H closed form",
        ok,
        format!("string {:.8}, oracle {:.8} ({} nodes), {:.2}s", k.kh, k.oracle, k.oracle_per_axis, secs),
    );
    k.kh
}

fn scale_equivariance(r: &mut Report) {
    let opts = StringOptions::default();
    let cases = [
        PotentialSpec::new(1, vec![-1.0], vec![1.0], BaseWell::QuarticScalar, Modulation::Sine { amplitude: 0.5 })
            .unwrap(),
        PotentialSpec::new(
            2,
            vec![-1.0, 0.0],
            vec![1.0, 0.0],
            BaseWell::QuadraticProduct,
            Modulation::Checkerboard { low: 1.0, high: 2.0 },
        )
        .unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for spec in &cases {
        let (a, b) = (spec.well_a(), spec.well_b());
        let base = minimize_kh(&HomogenizedPotential::exact(spec), a, b, &opts).unwrap().cost;
        for c in [0.25, 1.5, 4.0] {
            let scaled = spec.clone().with_scale(c).unwrap();
            let k = minimize_kh(&HomogenizedPotential::exact(&scaled), a, b, &opts).unwrap().cost;
            worst = worst.max((k - c.sqrt() * base).abs() / (c.sqrt() * base));
        }
    }
    r.check("2", "scale equivariance", worst < 1e-10, format!("max relative deviation {worst:.2e}"));
}

fn truncation_invariance(r: &mut Report) {
    let opts = StringOptions::default();
    let family = [
        quartic(1, Modulation::Constant(1.0)),
        quartic(2, Modulation::Sine { amplitude: 0.5 }),
        quartic(2, Modulation::Checkerboard { low: 1.0, high: 2.0 }),
        PotentialSpec::new(
            2,
            vec![-1.0, 0.5],
            vec![1.0, -0.5],
            BaseWell::QuarticVector,
            Modulation::Checkerboard { low: 1.0, high: 2.0 },
        )
        .unwrap(),
    ];
    let mut worst: f64 = 0.0;
    let mut valid = true;
    for spec in &family {
        let t = truncate(spec, spec.default_truncation_radius(), &TruncationLattice::default()).unwrap();
        let rep = verify_truncation_invariance(spec, &t, &opts).unwrap();
        worst = worst.max(rep.gap);
        valid &= rep.valid;
    }
    r.check(
        "3",
        "truncation invariance",
        worst < 1e-6 && valid,
        format!("max |K_H - K~_H| = {worst:.2e} over {} potentials", family.len()),
    );
}

fn modica_mortola_1d(r: &mut Report) {
    let spec = quartic(1, Modulation::Constant(1.0));
    let hp = HomogenizedPotential::exact(&spec);
    let delta: f64 = 0.02;
    let problem = TransitionProblem {
        bounds: Bounds::new(vec![-0.5], vec![0.5]).unwrap(),
        cells: (20.0 / delta).round() as usize,
        eps: delta,
        delta,
        boundary: Boundary::Dirichlet,
        init: InitialField::Profile,
        profile: TransitionProfile::new(&hp, &Path::straight(&[-1.0], &[1.0], 128), 8.0).unwrap(),
    };
    let start = Instant::now();
    let out = minimize_diffuse(&problem, &spec, &Default::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let err = (out.energy - KH_QUARTIC).abs() / KH_QUARTIC;
    r.check(
        "4",
        "1D Modica-Mortola",
        out.converged && err < 0.01 && secs < 30.0,
        format!("energy {:.8}, relative error {err:.2e}, {} steps, {secs:.2}s", out.energy, out.steps),
    );
}

fn homogenization_exactness(r: &mut Report) {
    let sine = quartic(1, Modulation::Sine { amplitude: 0.7 });
    let cb = quartic(2, Modulation::Checkerboard { low: 1.0, high: 2.0 });
    let hs = HomogenizedPotential::quadrature(&sine, 256).unwrap();
    let hc = HomogenizedPotential::quadrature(&cb, 256).unwrap();
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut es, mut ec): (f64, f64) = (0.0, 0.0);
    for k in 1..=20 {
        let p = [-2.0 + 4.0 * (k as f64 * golden).fract()];
        let w0 = sine.base_value(&p);
        es = es.max((hs.value(&p) - w0).abs());
        ec = ec.max((hc.value(&p) - 1.5 * w0).abs());
    }
    r.check(
        "5",
        "homogenization exactness",
        es < 1e-6 && ec < 1e-8,
        format!("sine max error {es:.2e}, checkerboard max error {ec:.2e}"),
    );
}

fn schedule_criteria(r: &mut Report, kh_quartic: f64) -> Vec<ExperimentRow> {
    let setup = Setup::new(&checkerboard_config()).unwrap();
    let start = Instant::now();
    let rows = run_schedule(&setup).unwrap();
    let secs = start.elapsed().as_secs_f64();
    println!("     schedule: {} rows in {secs:.1}s", rows.len());
    for row in &rows {
        println!(
            "     n={} eps={:.5} delta={:.5} F={:.6} D={:.3e} bound={:.3e} l1={:.5} steps={} {:?}",
            row.n, row.eps, row.delta, row.energy, row.discrepancy, row.poincare_bound, row.l1_to_projection,
            row.steps, row.status
        );
    }
    let all_ok = rows.len() == 6 && rows.iter().all(ExperimentRow::succeeded);

    let d: Vec<f64> = rows.iter().map(|r| r.discrepancy).collect();
    let bounded = rows
        .iter()
        .all(|r| r.discrepancy <= r.poincare_bound + r.boundary_term && r.dirichlet_budget <= setup.budget);
    let bound_fit = fit_column(&rows, |r| r.poincare_bound).unwrap();
    let d_fit = fit_scaling(&rows).unwrap();
    r.check(
        "6",
        "discrepancy bound",
        all_ok
            && d.iter().all(|x| x.is_finite())
            && decreasing(&d)
            && bounded
            && (bound_fit.slope - 1.0).abs() < 1e-12
            && d_fit.slope >= 0.9,
        format!(
            "D {:.3e} -> {:.3e}, C~ = {}, budget T = {:.4}, bound slope {:.15}, D slope {:.3}",
            d[0],
            d[d.len() - 1],
            setup.poincare_constant,
            setup.budget,
            bound_fit.slope,
            d_fit.slope
        ),
    );

    // flat interface: the exact face count of the sharp step on the finest grid
    let finest = rows.last().unwrap();
    let counts = GridField::counts_for(&setup.bounds, finest.cells).unwrap();
    let step = GridField::from_fn(setup.bounds.clone(), counts, 1, |x, out| {
        out[0] = if x[0] < 0.5 { -1.0 } else { 1.0 };
    })
    .unwrap();
    let p = face_perimeter(&step, &[-1.0], &[1.0], &Region::Full).unwrap();
    let target = 1.5f64.sqrt() * kh_quartic * p;
    let errs: Vec<f64> = rows.iter().map(|r| (r.energy - target).abs() / target).collect();
    r.check(
        "7",
        "Gamma-limit convergence",
        all_ok && decreasing(&errs) && *errs.last().unwrap() < 0.05,
        format!("K_H P = {target:.6}, relative errors {:.2e} -> {:.2e}", errs[0], errs[errs.len() - 1]),
    );

    let l1: Vec<f64> = rows.iter().map(|r| r.l1_to_projection).collect();
    let ratio: Vec<f64> = rows.iter().map(|r| r.l1_to_projection / r.delta).collect();
    r.check(
        "8",
        "compactness surrogate",
        all_ok && decreasing(&l1) && rel_spread(&ratio) <= 0.2,
        format!("l1/delta in [{:.4}, {:.4}]", ratio.iter().cloned().fold(f64::INFINITY, f64::min), ratio
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)),
    );

    let liminf = rows.iter().all(|r| r.energy >= 0.98 * r.sharp_energy);
    let consistent = rows.iter().all(|r| (r.energy - r.homogenized_energy).abs() <= r.discrepancy + 1e-12);
    r.check(
        "inv",
        "lower bound and row consistency",
        all_ok && liminf && consistent,
        format!("F_n >= 0.98 K_H P: {liminf}, |F - F^H| <= D: {consistent}"),
    );
    rows
}

fn isotropy(r: &mut Report) {
    let setup = Setup::new(&checkerboard_config()).unwrap();
    let start = Instant::now();
    let rows = isotropy_study(&setup).unwrap();
    let secs = start.elapsed().as_secs_f64();
    for row in &rows {
        println!(
            "     theta={:>4} E={:.6} length={:.6} E/length={:.6} {:?}",
            row.angle_deg, row.energy, row.length, row.energy_per_length, row.status
        );
    }
    let s = spread(&rows);
    let ok = rows.len() == 5 && rows.iter().all(|r| r.status == mmhom::RowStatus::Ok) && s < 0.03;
    r.check("9", "isotropy", ok, format!("spread {:.3}% over {} angles, {secs:.1}s", 100.0 * s, rows.len()));
}

fn perimeters(r: &mut Report) {
    let step = GridField::from_fn(Bounds::unit(2), vec![65, 65], 1, |x, out| {
        out[0] = if x[1] < 0.3 { -1.0 } else { 1.0 };
    })
    .unwrap();
    let faces = face_perimeter(&step, &[-1.0], &[1.0], &Region::Full).unwrap();
    let disc = GridField::from_fn(Bounds::unit(2), vec![513, 513], 1, |x, out| {
        let d = ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt();
        out[0] = if d < 0.25 { 1.0 } else { -1.0 };
    })
    .unwrap();
    let len = reconstructed_perimeter(&disc, &[-1.0], &[1.0], &Region::Full).unwrap();
    let want = 2.0 * std::f64::consts::PI * 0.25;
    let err = (len - want).abs() / want;
    r.check(
        "10",
        "perimeter oracles",
        (faces - 1.0).abs() <= 1e-12 && err < 0.02,
        format!("axis-aligned {faces:.15}, disc {len:.6} (error {:.3}%)", 100.0 * err),
    );
}

fn recovery(r: &mut Report) {
    let spec = quartic(2, Modulation::Checkerboard { low: 1.0, high: 2.0 });
    let hp = HomogenizedPotential::exact(&spec);
    let kh = 1.5f64.sqrt() * KH_QUARTIC;
    let profile = TransitionProfile::new(&hp, &Path::straight(&[-1.0], &[1.0], 128), 8.0).unwrap();
    let sharp = GridField::from_fn(Bounds::unit(2), vec![801, 801], 1, |x, out| {
        out[0] = if x[0] < 0.4 { -1.0 } else { 1.0 };
    })
    .unwrap();
    let p = face_perimeter(&sharp, &[-1.0], &[1.0], &Region::Full).unwrap();
    let mut constants = Vec::new();
    let mut energy = f64::NAN;
    for delta in [0.08, 0.04, 0.02] {
        let u = recovery_sequence(&sharp, delta, &profile).unwrap();
        constants.push(l1_distance(&u, &sharp).unwrap() / delta);
        energy = homogenized_energy(&u, delta, &hp).unwrap().total;
    }
    r.check(
        "11",
        "recovery sequence",
        energy <= kh * p * 1.02 && rel_spread(&constants) < 0.1,
        format!(
            "F^H(u_0.02) / (K_H P) = {:.5}, l1/delta = {:.4} {:.4} {:.4}",
            energy / (kh * p),
            constants[0],
            constants[1],
            constants[2]
        ),
    );
}

fn determinism(r: &mut Report, first: &[ExperimentRow]) {
    let setup = Setup::new(&checkerboard_config()).unwrap();
    let second = run_schedule(&setup).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_csv(first, ExperimentRow::COLUMNS, &a).unwrap();
    write_csv(&second, ExperimentRow::COLUMNS, &b).unwrap();
    let (ba, bb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    r.check(
        "12",
        "determinism",
        ba == bb,
        format!("{} bytes, identical: {}", ba.len(), ba == bb),
    );
}

fn main() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let failed = pool.install(|| {
        let mut r = Report { failed: 0 };
        let kh = kh_closed_form(&mut r);
        scale_equivariance(&mut r);
        truncation_invariance(&mut r);
        modica_mortola_1d(&mut r);
        homogenization_exactness(&mut r);
        let rows = schedule_criteria(&mut r, kh);
        isotropy(&mut r);
        perimeters(&mut r);
        recovery(&mut r);
        determinism(&mut r, &rows);
        r.failed
    });
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
    println!("all acceptance checks passed");
}
