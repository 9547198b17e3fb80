use std::f64::consts::PI;

use proptest::prelude::*;

use nvspin::effective::{delta_e_closed, delta_e_exact, effective_h0e_with, n14_frequencies_nvm};
use nvspin::hamiltonian::{build, FieldConfig, SpinSystemSpec};
use nvspin::hyperfine::{Family, FamilyCatalog, HyperfineScalars, PhysicalConstants};

const BX_GRID: [f64; 4] = [0.0, 0.5, 1.0, 1.5];

fn discrepancy_khz(sc: &HyperfineScalars, field: &FieldConfig, c: &PhysicalConstants) -> f64 {
    (delta_e_closed(sc, field, c) - delta_e_exact(sc, field, c).unwrap()).abs() * 1e3
}

#[test]
fn closed_form_tracks_exact_diagonalization() {
    let cat = FamilyCatalog::default();
    let c = PhysicalConstants::default();
    for f in Family::ALL {
        for bx in BX_GRID {
            for site in 0..cat.get(f).n_sites {
                let sc = cat.site_scalars(f, site).unwrap();
                let d = discrepancy_khz(&sc, &FieldConfig::new(486.8, bx, 0.0), &c);
                assert!(d <= 2.0, "family {f} site {site} bx {bx}: {d} kHz");
            }
        }
    }
}

#[test]
fn halving_transverse_couplings_shrinks_residual() {
    let cat = FamilyCatalog::default();
    let c = PhysicalConstants::default();
    for bx in BX_GRID {
        let field = FieldConfig::new(486.8, bx, 0.0);
        for site in 0..cat.get(Family::A).n_sites {
            let sc = cat.site_scalars(Family::A, site).unwrap();
            let full = discrepancy_khz(&sc, &field, &c);
            let half = discrepancy_khz(&sc.scale_transverse(0.5), &field, &c);
            assert!(full >= 3.0 * half, "site {site} bx {bx}: {full} vs {half}");
        }
    }
    // Without a transverse field every family scales the same way.
    for f in Family::ALL {
        let field = FieldConfig::axial(486.8);
        let sc = cat.get(f).scalars;
        assert!(discrepancy_khz(&sc, &field, &c) >= 3.0 * discrepancy_khz(&sc.scale_transverse(0.5), &field, &c));
    }
}

#[test]
fn transverse_field_residual_survives_without_transverse_couplings() {
    // A∥ alone picks up a (γe Bx)² admixture that the closed form omits.
    let c = PhysicalConstants::default();
    let sc = HyperfineScalars::secular(-6.51, 0.0);
    let d = discrepancy_khz(&sc, &FieldConfig::new(486.8, 1.5, 0.0), &c);
    assert!(d > 0.01 && d < 0.05, "{d} kHz");
    assert!(discrepancy_khz(&sc, &FieldConfig::axial(486.8), &c) < 1e-6);
}

#[test]
fn double_quantum_term_is_absorbed_by_the_toggle() {
    let c = PhysicalConstants::default();
    let sc = HyperfineScalars {
        a_perp_prime: 2.0,
        ..FamilyCatalog::default().get(Family::A).scalars
    };
    let field = FieldConfig::new(486.8, 1.0, 0.3);
    let spec = SpinSystemSpec::nv_c13(sc, field).with_double_quantum(true);
    let eig = build(&spec).unwrap().eigensystem().unwrap();
    let zero: Vec<f64> = (0..eig.dim())
        .filter(|&k| eig.m_values(k).unwrap()[0] == 0.0)
        .map(|k| eig.energies[k])
        .collect();
    let exact = (zero[1] - zero[0]).abs();
    let with = effective_h0e_with(&sc, &field, &c, true).delta_e();
    let without = effective_h0e_with(&sc, &field, &c, false).delta_e();
    assert!((with - exact).abs() < (without - exact).abs());
    assert!((with - exact).abs() * 1e3 < 2.0);
}

#[test]
fn n14_closed_forms_match_nine_level_diagonalization() {
    let c = PhysicalConstants::default();
    let lines = n14_frequencies_nvm(&c, 486.8).unwrap();
    let eig = build(&SpinSystemSpec::nv_n14(c, FieldConfig::axial(486.8)))
        .unwrap()
        .eigensystem()
        .unwrap();
    for line in &lines.lines {
        let ms = if line.m_s == 0.0 { "0" } else if line.m_s > 0.0 { "+1" } else { "-1" };
        let upper = eig.state_labeled(&format!("{ms}_e,{:+}_N", line.m_i)).unwrap();
        let lower = eig.state_labeled(&format!("{ms}_e,0_N")).unwrap();
        let exact = (eig.energies[upper] - eig.energies[lower]).abs();
        assert!(
            (exact - line.frequency_mhz).abs() < 5e-3,
            "{}: {} vs {}",
            line.label(),
            line.frequency_mhz,
            exact
        );
    }
}

proptest! {
    #[test]
    fn axial_splitting_ignores_azimuth(
        a_par in -20.0f64..20.0,
        a_perp in -20.0f64..20.0,
        a_ani in -3.0f64..3.0,
        phi in 0.0..2.0 * PI,
        bz in 100.0f64..800.0,
    ) {
        let c = PhysicalConstants::default();
        let sc = HyperfineScalars { a_par, a_perp, a_ani, phi, a_perp_prime: 0.0 };
        let field = FieldConfig::axial(bz);
        prop_assert_eq!(delta_e_closed(&sc, &field, &c), delta_e_closed(&sc.with_phi(0.0), &field, &c));
    }

    #[test]
    fn transverse_field_reversal_equals_half_turn(
        a_par in -20.0f64..20.0,
        a_perp in -20.0f64..20.0,
        a_ani in -3.0f64..3.0,
        phi in 0.0..2.0 * PI,
        bz in 100.0f64..800.0,
        bx in 0.0f64..5.0,
    ) {
        let c = PhysicalConstants::default();
        let sc = HyperfineScalars { a_par, a_perp, a_ani, phi, a_perp_prime: 0.0 };
        let a = delta_e_closed(&sc, &FieldConfig::new(bz, -bx, 0.0), &c);
        let b = delta_e_closed(&sc.with_phi(phi + PI), &FieldConfig::new(bz, bx, 0.0), &c);
        prop_assert!((a - b).abs() < 1e-12);
        let ea = delta_e_exact(&sc, &FieldConfig::new(bz, -bx, 0.0), &c).unwrap();
        let eb = delta_e_exact(&sc.with_phi(phi + PI), &FieldConfig::new(bz, bx, 0.0), &c).unwrap();
        prop_assert!((ea - eb).abs() < 1e-8);
    }
}
