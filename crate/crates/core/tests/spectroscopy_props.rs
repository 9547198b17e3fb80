use std::f64::consts::PI;

use proptest::prelude::*;

use nvspin::hamiltonian::{build, FieldConfig, SpinSystemSpec};
use nvspin::hyperfine::{Family, FamilyCatalog, HyperfineScalars, PhysicalConstants};
use nvspin::spectroscopy::{
    enumerate_transitions, linear_grid, odnmr_lines, pair_gt_frequencies, rf_operator, synthesize_spectrum, LineWeights,
    RfDrive, TransitionLine,
};

fn scalars() -> impl Strategy<Value = HyperfineScalars> {
    (-20.0f64..20.0, -20.0f64..20.0, -3.0f64..3.0, 0.0..2.0 * PI).prop_map(|(a_par, a_perp, a_ani, phi)| {
        HyperfineScalars {
            a_par,
            a_perp,
            a_ani,
            phi,
            a_perp_prime: 0.0,
        }
    })
}

// Every eigenpair, so no line can drop below a floor under rotation.
fn sorted_frequencies(spec: &SpinSystemSpec) -> Vec<f64> {
    let eig = build(spec).unwrap().eigensystem().unwrap();
    let rf = rf_operator(spec, RfDrive::Zeeman).unwrap();
    let weights = LineWeights { floor: 0.0, ..LineWeights::default() };
    let mut f: Vec<f64> = enumerate_transitions(&eig, &rf, &weights)
        .unwrap()
        .iter()
        .map(|l| l.frequency_mhz)
        .collect();
    f.sort_by(f64::total_cmp);
    f
}

fn line(f: f64, a: f64) -> TransitionLine {
    TransitionLine {
        frequency_mhz: f,
        amplitude: a,
        matrix_element_sq: 1.0,
        from_label: String::new(),
        to_label: String::new(),
        manifold: None,
        family: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_elements_are_complete(
        s1 in scalars(),
        s2 in scalars(),
        bz in 0.0f64..800.0,
        bx in 0.0f64..10.0,
        drive in prop::sample::select(vec![RfDrive::Nuclear, RfDrive::Zeeman, RfDrive::Electron]),
    ) {
        let spec = SpinSystemSpec::nv_c13_pair(s1, s2, FieldConfig::new(bz, bx, 0.0));
        let eig = build(&spec).unwrap().eigensystem().unwrap();
        let rf = rf_operator(&spec, drive).unwrap();
        let weights = LineWeights { floor: 0.0, ..LineWeights::default() };
        let off: f64 = enumerate_transitions(&eig, &rf, &weights).unwrap().iter().map(|l| l.matrix_element_sq).sum();
        let diag: f64 = eig.states.iter().map(|v| rf.sandwich(v, v).norm_sqr()).sum();
        let tr = rf.matmul(&rf).trace().re;
        prop_assert!((2.0 * off - (tr - diag)).abs() < 1e-9 * tr.max(1.0), "{} vs {}", 2.0 * off, tr - diag);
    }

    #[test]
    fn line_positions_follow_global_azimuth(
        sc in scalars(),
        bz in 100.0f64..800.0,
        bx in 0.0f64..10.0,
        az in 0.0..2.0 * PI,
        rot in 0.0..2.0 * PI,
    ) {
        let a = sorted_frequencies(&SpinSystemSpec::nv_c13(sc, FieldConfig::new(bz, bx, az)));
        let b = sorted_frequencies(&SpinSystemSpec::nv_c13(sc.with_phi(sc.phi + rot), FieldConfig::new(bz, bx, az + rot)));
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn synthesis_is_linear(
        first in prop::collection::vec((0.0f64..1.0, 0.0f64..2.0), 1..6),
        second in prop::collection::vec((0.0f64..1.0, 0.0f64..2.0), 1..6),
        scale in 0.0f64..5.0,
        width in 0.001f64..0.1,
    ) {
        let grid = linear_grid(0.0, 1.0, 101);
        let la: Vec<_> = first.iter().map(|&(f, a)| line(f, a)).collect();
        let lb: Vec<_> = second.iter().map(|&(f, a)| line(f, a)).collect();
        let both: Vec<_> = la.iter().chain(&lb).cloned().collect();
        let scaled: Vec<_> = la.iter().map(|l| line(l.frequency_mhz, l.amplitude * scale)).collect();
        let sa = synthesize_spectrum(&la, &grid, width).unwrap();
        let sb = synthesize_spectrum(&lb, &grid, width).unwrap();
        let sab = synthesize_spectrum(&both, &grid, width).unwrap();
        let ss = synthesize_spectrum(&scaled, &grid, width).unwrap();
        for k in 0..grid.len() {
            prop_assert!((sab.signal[k] - sa.signal[k] - sb.signal[k]).abs() < 1e-12);
            prop_assert!((ss.signal[k] - scale * sa.signal[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_pairs_have_no_singlet_line(
        a_par in -20.0f64..20.0,
        a_perp in -20.0f64..20.0,
        a_ani in -3.0f64..3.0,
        phi in 0.0..2.0 * PI,
        bz in 200.0f64..700.0,
    ) {
        let mut cat = FamilyCatalog::default();
        cat.get_mut(Family::A).scalars = HyperfineScalars { a_par, a_perp, a_ani, phi: 0.0, a_perp_prime: 0.0 };
        let p = pair_gt_frequencies(&cat, Family::A, Family::A, (phi, phi), &FieldConfig::axial(bz), &PhysicalConstants::default()).unwrap();
        prop_assert!(p.singlet_matrix_element_sq < 1e-10, "{}", p.singlet_matrix_element_sq);
    }
}

#[test]
fn family_zero_manifold_lines_are_ordered() {
    let lines = odnmr_lines(
        &FamilyCatalog::default(),
        &Family::ALL,
        &FieldConfig::axial(486.8),
        &PhysicalConstants::default(),
        Default::default(),
    )
    .unwrap();
    let zero: Vec<f64> = Family::ALL
        .iter()
        .map(|&f| {
            lines
                .iter()
                .filter(|l| l.family == Some(f) && l.manifold == Some(nvspin::spectroscopy::Manifold::Zero))
                .map(|l| l.frequency_mhz)
                .next()
                .unwrap()
        })
        .collect();
    assert!(zero.windows(2).all(|w| w[0] < w[1]), "{zero:?}");
}
