//! Closed-form second-order results: the effective nuclear Hamiltonian of
//! the `m_s = 0` manifold, ¹⁴N transition frequencies for NV⁻ and NV⁰,
//! extraction of the NV⁰ coupling constants, and hyperfine-enhanced
//! gyromagnetic ratios.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_nv_c13, FieldConfig, SpinSystemSpec};
use crate::hyperfine::{Family, FamilyCatalog, HyperfineScalars, PhysicalConstants};
use crate::spin::ComplexMatrix;

/// Minimum ratio between `|D ± γe Bz|` and the largest perturbation.
pub const VALIDITY_FACTOR: f64 = 20.0;

/// Outcome of the perturbative validity guard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    /// `min |D ± γe Bz|`, MHz.
    pub min_gap_mhz: f64,
    /// Largest of `|A⊥|, |A∥|, |A_ani|, |γn Bz|`, MHz.
    pub max_perturbation_mhz: f64,
    /// Set when the gap is below [`VALIDITY_FACTOR`] times the perturbation.
    pub warning: bool,
}

pub fn validity(scalars: &HyperfineScalars, field: &FieldConfig, c: &PhysicalConstants) -> Validity {
    let ez = c.gamma_e_mhz_per_g * field.bz_gauss;
    let min_gap_mhz = (c.d_mhz - ez).abs().min((c.d_mhz + ez).abs());
    let max_perturbation_mhz = scalars
        .max_abs()
        .max((c.gamma_n_c13_mhz_per_g * field.bz_gauss).abs());
    Validity {
        min_gap_mhz,
        max_perturbation_mhz,
        warning: min_gap_mhz < VALIDITY_FACTOR * max_perturbation_mhz,
    }
}

/// Two-level nuclear Hamiltonian of the `m_s = 0` manifold.
#[derive(Debug, Clone)]
pub struct EffectiveH0e {
    /// Second-order diagonal shift ν, MHz.
    pub nu: f64,
    /// Second-order off-diagonal term, MHz.
    pub h_perp: Complex64,
    /// Common shift C, MHz. Drops out of every transition frequency.
    pub c_shift: f64,
    /// `Δ² = D² − (γe Bz)²`, MHz².
    pub delta_sq: f64,
    /// `[[(γnBz+ν)/2, (γnBx+h⊥)/2], [c.c., −(γnBz+ν)/2]]`
    pub matrix: ComplexMatrix,
    pub validity: Validity,
}

impl EffectiveH0e {
    /// Splitting of the two nuclear levels, MHz.
    pub fn delta_e(&self) -> f64 {
        let d = self.matrix[(0, 0)].re;
        let o = self.matrix[(0, 1)];
        2.0 * (d * d + o.norm_sqr()).sqrt()
    }
}

/// Effective Hamiltonian without double-quantum couplings.
pub fn effective_h0e(
    scalars: &HyperfineScalars,
    field: &FieldConfig,
    constants: &PhysicalConstants,
) -> EffectiveH0e {
    effective_h0e_with(scalars, field, constants, false)
}

/// Effective Hamiltonian; with `double_quantum` set, `A⊥² → A⊥² − A'⊥²` in ν
/// and `A⊥ → A⊥ − A'⊥` in h⊥.
pub fn effective_h0e_with(
    scalars: &HyperfineScalars,
    field: &FieldConfig,
    c: &PhysicalConstants,
    double_quantum: bool,
) -> EffectiveH0e {
    let d = c.d_mhz;
    let ge = c.gamma_e_mhz_per_g;
    let gn = c.gamma_n_c13_mhz_per_g;
    let (bz, bx) = (field.bz_gauss, field.bx_gauss);
    let phi = scalars.phi - field.azimuth_rad;
    let delta_sq = d * d - (ge * bz).powi(2);

    let (a_perp, a_ani) = (scalars.a_perp, scalars.a_ani);
    let (perp_sq, perp_lin) = if double_quantum {
        let p = scalars.a_perp_prime;
        (a_perp * a_perp - p * p, a_perp - p)
    } else {
        (a_perp * a_perp, a_perp)
    };

    let nu = (-2.0 * d * a_ani * phi.cos() * ge * bx + ge * bz * perp_sq) / delta_sq;
    let h_perp = -(ge * perp_lin / delta_sq)
        * (Complex64::from_polar(a_ani, phi) * bz + Complex64::new(2.0 * d * bx, 0.0));
    let c_shift = -(d / delta_sq) * (2.0 * (ge * bx).powi(2) + a_ani * a_ani / 2.0 + a_perp * a_perp);

    let diag = (gn * bz + nu) / 2.0;
    let off = (h_perp + gn * bx) / 2.0;
    let mut matrix = ComplexMatrix::zeros(2);
    matrix[(0, 0)] = Complex64::new(diag, 0.0);
    matrix[(1, 1)] = Complex64::new(-diag, 0.0);
    matrix[(0, 1)] = off;
    matrix[(1, 0)] = off.conj();

    EffectiveH0e {
        nu,
        h_perp,
        c_shift,
        delta_sq,
        matrix,
        validity: validity(scalars, field, c),
    }
}

/// `ΔE = √((γnBz + ν)² + |γnBx + h⊥|²)` in MHz.
pub fn delta_e_closed(scalars: &HyperfineScalars, field: &FieldConfig, constants: &PhysicalConstants) -> f64 {
    let h = effective_h0e(scalars, field, constants);
    let gn = constants.gamma_n_c13_mhz_per_g;
    ((gn * field.bz_gauss + h.nu).powi(2) + (h.h_perp + gn * field.bx_gauss).norm_sqr()).sqrt()
}

/// Splitting of the two exact eigenstates assigned to `m_s = 0`, MHz.
pub fn delta_e_exact(scalars: &HyperfineScalars, field: &FieldConfig, constants: &PhysicalConstants) -> Result<f64> {
    let spec = SpinSystemSpec::nv_c13(*scalars, *field).with_constants(*constants);
    let eig = build_nv_c13(&spec)?.eigensystem()?;
    let e: Vec<f64> = (0..eig.dim())
        .filter(|&k| eig.m_values(k).map(|m| m[0] == 0.0).unwrap_or(false))
        .map(|k| eig.energies[k])
        .collect();
    if e.len() != 2 {
        return Err(Error::InvalidSystem(format!(
            "expected two states in the m_s = 0 manifold, found {}",
            e.len()
        )));
    }
    Ok((e[1] - e[0]).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteSplitting {
    pub site: usize,
    pub phi: f64,
    pub delta_e_mhz: f64,
}

/// Closed-form ΔE for every site of `family`.
pub fn site_splitting(
    catalog: &FamilyCatalog,
    family: Family,
    field: &FieldConfig,
    constants: &PhysicalConstants,
) -> Vec<SiteSplitting> {
    let base = catalog.get(family).scalars;
    catalog
        .site_phis(family)
        .into_iter()
        .enumerate()
        .map(|(site, phi)| SiteSplitting {
            site,
            phi,
            delta_e_mhz: delta_e_closed(&base.with_phi(phi), field, constants),
        })
        .collect()
}

/// Hyperfine-enhanced nuclear parameters in the `m_s = 0` rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatingFrameParams {
    /// `½ γn^∥ Bz`, MHz.
    pub omega0: f64,
    /// Longitudinal term from the transverse static field, MHz.
    pub omega_prime: f64,
    /// `½ γn^⊥ B_RF`, MHz.
    pub omega_rabi: f64,
    /// Static transverse term, MHz.
    pub omega_perp: Complex64,
    pub gamma_par_eff_khz_per_g: f64,
    pub gamma_perp_eff_khz_per_g: f64,
    pub validity: Validity,
}

/// Enhanced gyromagnetic ratios and rotating-frame terms for an RF drive of
/// amplitude `b_rf_gauss`.
pub fn enhanced_gyromagnetic(
    scalars: &HyperfineScalars,
    field: &FieldConfig,
    c: &PhysicalConstants,
    b_rf_gauss: f64,
) -> RotatingFrameParams {
    let d = c.d_mhz;
    let ge = c.gamma_e_mhz_per_g;
    let gn = c.gamma_n_c13_mhz_per_g;
    let (bz, bx) = (field.bz_gauss, field.bx_gauss);
    let phi = scalars.phi - field.azimuth_rad;
    let delta_sq = d * d - (ge * bz).powi(2);
    let gamma_par = gn + ge * scalars.a_perp.powi(2) / delta_sq;
    let gamma_perp = gn - 2.0 * d * ge * scalars.a_perp / delta_sq;
    RotatingFrameParams {
        omega0: 0.5 * gamma_par * bz,
        omega_prime: -(2.0 * d * scalars.a_ani * phi.cos() / (2.0 * delta_sq)) * ge * bx,
        omega_rabi: 0.5 * gamma_perp * b_rf_gauss,
        omega_perp: Complex64::from_polar(scalars.a_ani, phi) * (-(scalars.a_perp / (2.0 * delta_sq)) * ge * bz),
        gamma_par_eff_khz_per_g: gamma_par * 1e3,
        gamma_perp_eff_khz_per_g: gamma_perp * 1e3,
        validity: validity(scalars, field, c),
    }
}

/// One ¹⁴N nuclear transition `m_I ↔ 0` inside electron manifold `m_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct N14Line {
    /// Nuclear projection paired with `m_I = 0`: `+1` or `−1`.
    pub m_i: i32,
    /// Electron projection of the manifold.
    pub m_s: f64,
    pub frequency_mhz: f64,
}

impl N14Line {
    /// Compact name such as `+1N0`, `-1N+1` or `+1N-1/2`.
    pub fn label(&self) -> String {
        let ms = if self.m_s == 0.0 {
            "0".to_string()
        } else if self.m_s.fract() == 0.0 {
            format!("{:+}", self.m_s as i64)
        } else {
            format!("{}1/2", if self.m_s > 0.0 { '+' } else { '-' })
        };
        format!("{:+}N{}", self.m_i, ms)
    }
}

impl fmt::Display for N14Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:.6} MHz", self.label(), self.frequency_mhz)
    }
}

/// Labeled set of ¹⁴N transition frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct N14Frequencies {
    pub lines: Vec<N14Line>,
}

impl N14Frequencies {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.lines.iter().find(|l| l.label() == label).map(|l| l.frequency_mhz)
    }

    pub fn labels(&self) -> Vec<String> {
        self.lines.iter().map(N14Line::label).collect()
    }

    /// Four NV⁰ frequencies in the order `+1N-1/2, -1N-1/2, +1N+1/2, -1N+1/2`.
    pub fn nv0(f: [f64; 4]) -> Self {
        let lines = NV0_ORDER
            .iter()
            .zip(f)
            .map(|(&(m_i, m_s), frequency_mhz)| N14Line {
                m_i,
                m_s,
                frequency_mhz,
            })
            .collect();
        Self { lines }
    }
}

const NV0_ORDER: [(i32, f64); 4] = [(1, -0.5), (-1, -0.5), (1, 0.5), (-1, 0.5)];

/// Six NV⁻ ¹⁴N transitions at axial field `bz_gauss`, second order in A⊥.
pub fn n14_frequencies_nvm(c: &PhysicalConstants, bz_gauss: f64) -> Result<N14Frequencies> {
    if !(bz_gauss > 0.0) {
        return Err(Error::InvalidInput(format!("bz must be positive, got {bz_gauss} G")));
    }
    let q = c.q_n14_nvm_mhz.abs();
    let a_par = c.a_par_n14_nvm_mhz.abs();
    let a_perp_sq = c.a_perp_n14_nvm_mhz.powi(2);
    let gnb = c.gamma_n_n14_mhz_per_g * bz_gauss;
    let ez = c.gamma_e_mhz_per_g * bz_gauss;
    let floor = VALIDITY_FACTOR * c.a_perp_n14_nvm_mhz.abs().max(a_par);
    let lower = c.d_mhz - ez;
    let upper = c.d_mhz + ez;
    if lower.abs() < floor {
        return Err(Error::NearAnticrossing { sign: '-', gap: lower });
    }
    if upper.abs() < floor {
        return Err(Error::NearAnticrossing { sign: '+', gap: upper });
    }
    let line = |m_i, m_s, frequency_mhz| N14Line {
        m_i,
        m_s,
        frequency_mhz,
    };
    Ok(N14Frequencies {
        lines: vec![
            line(1, 0.0, q - gnb - a_perp_sq / lower),
            line(-1, 0.0, q + gnb - a_perp_sq / upper),
            line(1, -1.0, q - a_par - gnb),
            line(-1, -1.0, q + a_par + gnb + a_perp_sq / lower),
            line(1, 1.0, q + a_par - gnb + a_perp_sq / upper),
            line(-1, 1.0, q - a_par + gnb),
        ],
    })
}

/// Four NV⁰ ¹⁴N transitions, second order in `A0⊥ / (γe B)`.
pub fn n14_frequencies_nv0(
    q0: f64,
    a0_par: f64,
    a0_perp: f64,
    bz_gauss: f64,
    c: &PhysicalConstants,
) -> Result<N14Frequencies> {
    if !(bz_gauss > 0.0) {
        return Err(Error::InvalidInput(format!("bz must be positive, got {bz_gauss} G")));
    }
    let q = q0.abs();
    let gnb = c.gamma_n_n14_mhz_per_g * bz_gauss;
    let x = a0_perp * a0_perp / (2.0 * c.gamma_e_mhz_per_g * bz_gauss);
    Ok(N14Frequencies::nv0([
        q + a0_par / 2.0 - gnb,
        q - a0_par / 2.0 + gnb - x,
        q - a0_par / 2.0 - gnb + x,
        q + a0_par / 2.0 + gnb,
    ]))
}

/// Coupling constants recovered from four NV⁰ ¹⁴N lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nv0Extraction {
    pub q0_abs_mhz: f64,
    /// Value of the A0∥ combination with its own sign.
    pub a0_par_mhz: f64,
    /// `√|radicand|`, MHz.
    pub a0_perp_mhz: f64,
    /// `γe B·[f(+1N-1/2) + f(-1N-1/2) − f(+1N+1/2) − f(-1N+1/2)]`, MHz².
    pub radicand_mhz2: f64,
    /// The radicand was negative; `a0_perp_mhz` uses the sign-flipped value.
    pub radicand_negative: bool,
}

impl Nv0Extraction {
    pub const CONVENTION_NOTE: &'static str = "a0_par is the combination value with its own sign; \
         a positive A0∥ convention corresponds to its magnitude";

    pub fn a0_par_magnitude(&self) -> f64 {
        self.a0_par_mhz.abs()
    }
}

/// Inverts the four NV⁰ line positions for `|Q0|`, `A0∥` and `A0⊥`.
pub fn extract_nv0_tensor(f: &N14Frequencies, bz_gauss: f64, c: &PhysicalConstants) -> Result<Nv0Extraction> {
    let mut labels = f.labels();
    labels.sort();
    let mut expected: Vec<String> = N14Frequencies::nv0([0.0; 4]).labels();
    expected.sort();
    if labels != expected {
        return Err(Error::InvalidInput(format!(
            "expected NV⁰ lines {expected:?}, got {:?}",
            f.labels()
        )));
    }
    if !(bz_gauss > 0.0) {
        return Err(Error::InvalidInput(format!("bz must be positive, got {bz_gauss} G")));
    }
    let get = |l: &str| f.get(l).unwrap_or(f64::NAN);
    let (pm, mm, pp, mp) = (get("+1N-1/2"), get("-1N-1/2"), get("+1N+1/2"), get("-1N+1/2"));
    let radicand = c.gamma_e_mhz_per_g * bz_gauss * (pm + mm - pp - mp);
    Ok(Nv0Extraction {
        q0_abs_mhz: (pm + mm + pp + mp) / 4.0,
        a0_par_mhz: 0.5 * (mm - pm + pp - mp),
        a0_perp_mhz: radicand.abs().sqrt(),
        radicand_mhz2: radicand,
        radicand_negative: radicand < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: f64 = 486.8;

    fn family(name: &str) -> HyperfineScalars {
        FamilyCatalog::default().lookup(name).unwrap().scalars
    }

    #[test]
    fn decoupled_limit_is_bare_zeeman() {
        let c = PhysicalConstants::default();
        let sc = HyperfineScalars::secular(3.0, 0.0);
        let h = effective_h0e(&sc, &FieldConfig::axial(B), &c);
        assert_eq!(h.h_perp, Complex64::new(0.0, 0.0));
        assert_eq!(h.nu, 0.0);
        assert!((h.delta_e() - (c.gamma_n_c13_mhz_per_g * B).abs()).abs() < 1e-15);
    }

    #[test]
    fn family_a_second_order_terms() {
        let c = PhysicalConstants::default();
        let h = effective_h0e(&family("A"), &FieldConfig::axial(B), &c);
        assert!((h.nu - 0.0521).abs() < 2e-4, "nu = {}", h.nu);
        // |γe A⊥ A_ani Bz| / Δ²
        let expect = (c.gamma_e_mhz_per_g * 15.6 * 1.56 * B).abs() / h.delta_sq;
        assert!((h.h_perp.norm() - expect).abs() < 1e-15);
        assert!((h.h_perp.norm() - 0.0052).abs() < 1e-4);
        assert!(!h.validity.warning);
    }

    #[test]
    fn closed_delta_e_near_table_values() {
        let c = PhysicalConstants::default();
        let f = FieldConfig::axial(B);
        assert!((delta_e_closed(&family("A"), &f, &c) - 0.4689).abs() < 1e-3);
        assert!((delta_e_closed(&family("D"), &f, &c) - 0.5151).abs() < 1e-3);
    }

    #[test]
    fn matrix_splitting_matches_closed_form() {
        let c = PhysicalConstants::default();
        let f = FieldConfig::new(B, 1.3, 0.4);
        let sc = family("B").with_phi(1.9);
        let h = effective_h0e(&sc, &f, &c);
        assert!((h.delta_e() - delta_e_closed(&sc, &f, &c)).abs() < 1e-14);
        assert!(h.matrix.is_hermitian(1e-15));
    }

    #[test]
    fn guard_fires_near_gslac() {
        let c = PhysicalConstants::default();
        let h = effective_h0e(&family("A"), &FieldConfig::axial(1020.0), &c);
        assert!(h.validity.warning);
    }

    #[test]
    fn enhanced_gamma_family_a() {
        let c = PhysicalConstants::default();
        let f = FieldConfig::axial(B);
        let a = enhanced_gyromagnetic(&family("A"), &f, &c, 1.0);
        assert!((a.gamma_perp_eff_khz_per_g + 40.4).abs() < 0.1);
        let b = enhanced_gyromagnetic(&family("B"), &f, &c, 1.0);
        let ratio = b.gamma_perp_eff_khz_per_g / a.gamma_perp_eff_khz_per_g;
        assert!((ratio / 0.90 - 1.0).abs() < 0.02, "{ratio}");
        let none = enhanced_gyromagnetic(&HyperfineScalars::secular(5.0, 0.0), &f, &c, 1.0);
        assert_eq!(none.gamma_par_eff_khz_per_g, none.gamma_perp_eff_khz_per_g);
    }

    #[test]
    fn rotating_frame_reassembles_effective_matrix() {
        let c = PhysicalConstants::default();
        let f = FieldConfig::new(B, 0.9, 0.0);
        let sc = family("A").with_phi(0.7);
        let h = effective_h0e(&sc, &f, &c);
        let r = enhanced_gyromagnetic(&sc, &f, &c, f.bx_gauss);
        assert!((h.matrix[(0, 0)].re - (r.omega0 + r.omega_prime)).abs() < 1e-15);
        let off = Complex64::new(r.omega_rabi, 0.0) + r.omega_perp;
        assert!((h.matrix[(0, 1)] - off).norm() < 1e-15);
    }

    #[test]
    fn nvm_lines_at_default_field() {
        let f = n14_frequencies_nvm(&PhysicalConstants::default(), B).unwrap();
        assert!((f.get("+1N0").unwrap() - 5.095).abs() < 1e-3);
        assert!((f.get("-1N0").unwrap() - 4.799).abs() < 1e-3);
        assert_eq!(f.labels(), ["+1N0", "-1N0", "+1N-1", "-1N-1", "+1N+1", "-1N+1"]);
    }

    #[test]
    fn nvm_lines_collapse_without_transverse_terms() {
        let c = PhysicalConstants {
            a_perp_n14_nvm_mhz: 0.0,
            gamma_n_n14_mhz_per_g: 0.0,
            ..PhysicalConstants::default()
        };
        let f = n14_frequencies_nvm(&c, B).unwrap();
        let q = 4.95;
        for l in &f.lines {
            let ok = [q, q + 2.16, q - 2.16].iter().any(|x| (x - l.frequency_mhz).abs() < 1e-12);
            assert!(ok, "{l}");
        }
    }

    #[test]
    fn nvm_near_gslac_is_an_error() {
        let c = PhysicalConstants::default();
        let b = c.d_mhz / c.gamma_e_mhz_per_g;
        assert!(matches!(n14_frequencies_nvm(&c, b), Err(Error::NearAnticrossing { sign: '-', .. })));
    }

    #[test]
    fn nv0_secular_limit() {
        let c = PhysicalConstants::default();
        let f = n14_frequencies_nv0(-4.655, 6.057, 0.0, B, &c).unwrap();
        let diff = f.get("+1N-1/2").unwrap() - f.get("-1N+1/2").unwrap();
        assert!((diff + 2.0 * c.gamma_n_n14_mhz_per_g * B).abs() < 1e-12);
    }

    #[test]
    fn extraction_round_trip() {
        let c = PhysicalConstants::default();
        let f = n14_frequencies_nv0(-4.655, 6.06, 3.9, B, &c).unwrap();
        let x = extract_nv0_tensor(&f, B, &c).unwrap();
        assert!((x.q0_abs_mhz - 4.655).abs() < 1e-12);
        assert!((x.a0_par_magnitude() - 6.06).abs() < 1e-12);
        assert!((x.a0_perp_mhz - 3.9).abs() < 1e-9);
        assert!(x.radicand_negative);
    }

    #[test]
    fn extraction_rejects_wrong_labels() {
        let c = PhysicalConstants::default();
        let f = n14_frequencies_nvm(&c, B).unwrap();
        assert!(extract_nv0_tensor(&f, B, &c).is_err());
    }

    #[test]
    fn site_splitting_degenerate_without_transverse_field() {
        let cat = FamilyCatalog::default();
        let s = site_splitting(&cat, Family::A, &FieldConfig::axial(B), &PhysicalConstants::default());
        assert_eq!(s.len(), 6);
        assert!(s.iter().all(|x| (x.delta_e_mhz - s[0].delta_e_mhz).abs() < 1e-12));
    }
}
