use std::f64::consts::PI;
use std::sync::Arc;

use nuloss_core::coeffs::{catalog_profile, CoefficientProfile, ExprCoefficient, NuFunction, NuSpec};
use nuloss_core::counterexample::{build_family, FamilyConfig};
use nuloss_core::energy::*;
use nuloss_core::exprlang::parse;
use nuloss_core::linalg::C64;
use nuloss_core::modesolve::{sample_states, ModeState, SolverOptions};
use nuloss_core::spectral::{forward_transform, Boundary, MagneticOperator1D, ModeCoefficient, ModeCoefficients, XGrid};
use nuloss_core::zones::ZoneParams;

fn catalog() -> Vec<NuSpec> {
    vec![
        NuSpec::Constant { c: 1.0 },
        NuSpec::Log,
        NuSpec::LogPower { gamma: 0.5 },
        NuSpec::IteratedLog { gammas: vec![1.0] },
    ]
}

/// Eight frequencies per octave on `[2^lo, 2^hi]`.
fn lambda_grid(lo: i32, hi: i32) -> Vec<f64> {
    (8 * lo..=8 * hi).map(|e| 2f64.powf(e as f64 / 8.0)).collect()
}

#[test]
fn free_energy_matches_exact_solution() {
    let opts = SolverOptions::default();
    let b = ExprCoefficient::constant(1.0);
    for lambda in [1.0, 8.0, 64.0] {
        let times: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        let states = sample_states(&b, 1.0, lambda, &ModeState::real(0.0, 0.0, 1.0, lambda), &times, &opts).unwrap();
        for (st, &t) in states.iter().zip(&times) {
            let (u, ut) = ((lambda * t).sin() / lambda, (lambda * t).cos());
            assert!((st.u.re - u).abs() < 1e-8 / lambda && (st.ut.re - ut).abs() < 1e-8);
            for s in [1.0, 0.5, 2.0] {
                let e = mode_energy(lambda, st.u, st.ut, s);
                assert!((e / lambda.powf(2.0 * (s - 1.0)) - 1.0).abs() < 1e-8);
            }
        }
        for s in [1.0, 0.5] {
            assert!(conservation_check(lambda, 0.0, 1.0, s, &opts).unwrap().passed);
        }
    }
}

#[test]
fn first_energy_is_gradient_norm() {
    // Σ λ²|û|² = ‖(i d/dx + a) u‖², the right side by finite differences.
    let op = MagneticOperator1D::new(PI, parse("0.3 + cos(x)").unwrap(), Boundary::Dirichlet).unwrap();
    let modes = op.eigen_modes(120).unwrap();
    let grid = XGrid::resolving(PI, 120.0);
    let u = |x: f64| C64::from_polar(x * x * (PI - x), op.gauge_phase(x).unwrap());
    let samples: Vec<C64> = grid.points().iter().map(|&x| u(x)).collect();
    let coeffs = forward_transform(&op, &samples, &grid, &modes).unwrap();
    let zero = ModeCoefficients::new(
        coeffs.entries().iter().map(|c| ModeCoefficient { value: C64::new(0.0, 0.0), ..*c }).collect(),
    )
    .unwrap();
    let energy = sobolev_energy(&coeffs, &zero, 1.0).unwrap();
    let h = 1e-5;
    let grad: Vec<C64> = grid
        .points()
        .iter()
        .map(|&x| {
            let d = (u(x + h) - u(x - h)) / (2.0 * h);
            C64::new(0.0, 1.0) * d + u(x) * (0.3 + x.cos())
        })
        .collect();
    let oracle = grid.l2_norm(&grad).powi(2);
    assert!((energy - oracle).abs() < 1e-4 * oracle, "{energy} vs {oracle}");
}

#[test]
fn constant_coefficient_has_no_loss() {
    let profile = catalog_profile(&NuSpec::Constant { c: 1.0 }).unwrap();
    let params = ZoneParams::new(4.0, 4).unwrap();
    let (u0, u1) = default_initial_data(&lambda_grid(3, 10)).unwrap();
    let r = verify_estimate(&profile, &params, &u0, &u1, &SolverOptions::default()).unwrap();
    assert!(r.c1 <= 1e-6 && r.passed, "{}", r.c1);
    for row in &r.rows {
        assert!((row.ratio - 0.5f64.sqrt()).abs() < 1e-8);
    }
}

#[test]
fn catalog_fits_are_stable_under_grid_doubling() {
    let params = ZoneParams::new(4.0, 4).unwrap();
    let (u0, u1) = default_initial_data(&lambda_grid(3, 12)).unwrap();
    for spec in catalog() {
        let profile = catalog_profile(&spec).unwrap();
        let r = verify_estimate(&profile, &params, &u0, &u1, &SolverOptions::default()).unwrap();
        assert!(r.c1.is_finite() && r.passed, "{spec:?}: {} vs {}", r.c1, r.c1_coarse);
        assert!((r.c1 - r.c1_coarse).abs() <= 0.1 * r.c1.abs());
    }
}

#[test]
fn log_profile_over_high_frequencies() {
    let nu = NuFunction::log((-1.0f64).exp()).unwrap();
    let profile = CoefficientProfile::from_expr("2 + sin(log(1/t))", nu).unwrap();
    let params = ZoneParams::new(4.0, 4).unwrap();
    let (u0, u1) = default_initial_data(&lambda_grid(8, 14)).unwrap();
    let r = verify_estimate(&profile, &params, &u0, &u1, &SolverOptions::default()).unwrap();
    assert!(r.c1.is_finite() && r.passed, "{} vs {}", r.c1, r.c1_coarse);
    let table = r.to_table();
    assert_eq!(table.rows.len(), 49);
}

#[test]
fn oscillating_member_saturates_the_estimate() {
    let nu = NuFunction::log((-1.0f64).exp()).unwrap();
    let family = build_family(&FamilyConfig { zone_p: 10, k_count: 2, ..Default::default() }, &nu).unwrap();
    let m = &family.members[0];
    let profile = CoefficientProfile::new(Arc::new(family.coefficient(1).unwrap()), nu).unwrap();
    let params = ZoneParams::new(4.0, 10).unwrap();
    let (u0, u1) = default_initial_data(&[m.lambda]).unwrap();
    let r = verify_estimate(&profile, &params, &u0, &u1, &SolverOptions { rel_tol: 1e-12, abs_tol: 1e-14 }).unwrap();
    // Generic data carry an O(1) share of the growing Floquet solution, whose
    // amplitude gains exp(ε ρ λ / 2) across the interval.
    let half = 0.5 * family.config.epsilon * m.rho_k * m.lambda;
    assert!(r.rows[0].ratio.ln() >= half - 3.0, "{} vs {half}", r.rows[0].ratio.ln());
}
