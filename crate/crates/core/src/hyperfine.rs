//! Hyperfine tensors, the scalar couplings used by the Hamiltonian builders,
//! physical constants and the built-in ¹³C family catalog.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants in MHz, MHz/G.
///
/// Nuclear gyromagnetic ratios carry their physical sign, so the nuclear
/// Zeeman term is `+γn B·I` with `γn < 0` for ¹³C and ¹⁴N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConstants {
    pub d_mhz: f64,
    pub d_ex_mhz: f64,
    pub gamma_e_mhz_per_g: f64,
    pub gamma_n_c13_mhz_per_g: f64,
    pub gamma_n_n14_mhz_per_g: f64,
    pub gamma_n_n15_mhz_per_g: f64,
    pub q_n14_nvm_mhz: f64,
    pub a_par_n14_nvm_mhz: f64,
    pub a_perp_n14_nvm_mhz: f64,
    pub q0_n14_nv0_mhz: f64,
    pub a0_par_n14_nv0_mhz: f64,
    pub a0_perp_n14_nv0_mhz: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            d_mhz: 2870.0,
            d_ex_mhz: 1400.0,
            gamma_e_mhz_per_g: 2.8025,
            gamma_n_c13_mhz_per_g: -1.07e-3,
            gamma_n_n14_mhz_per_g: -0.3077e-3,
            gamma_n_n15_mhz_per_g: 0.4316e-3,
            q_n14_nvm_mhz: -4.95,
            a_par_n14_nvm_mhz: -2.16,
            a_perp_n14_nvm_mhz: -2.62,
            q0_n14_nv0_mhz: -4.655,
            a0_par_n14_nv0_mhz: 6.06,
            a0_perp_n14_nv0_mhz: 3.9,
        }
    }
}

/// Contact plus point-dipole description of one nuclear site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperfineGeometry {
    /// Isotropic contact term, MHz.
    pub a_c: f64,
    /// Dipolar magnitude, MHz, non-negative.
    pub a_d: f64,
    /// Polar angle from the NV axis, rad.
    pub theta: f64,
    /// Azimuth in the NV frame, rad.
    pub phi: f64,
}

impl HyperfineGeometry {
    pub fn new(a_c: f64, a_d: f64, theta: f64, phi: f64) -> Result<Self> {
        let g = Self {
            a_c,
            a_d,
            theta,
            phi,
        };
        g.validate()?;
        Ok(g)
    }

    /// Geometry with the dipolar magnitude taken from the electron–nucleus
    /// distance `r_nm`.
    pub fn from_distance(
        a_c: f64,
        r_nm: f64,
        theta: f64,
        phi: f64,
        gamma_e_mhz_per_g: f64,
        gamma_n_mhz_per_g: f64,
    ) -> Result<Self> {
        if !(r_nm > 0.0) {
            return Err(Error::InvalidInput(format!("distance must be positive, got {r_nm} nm")));
        }
        let a_d = dipolar_magnitude(r_nm, gamma_e_mhz_per_g, gamma_n_mhz_per_g);
        Self::new(a_c, a_d, theta, phi)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a_c, self.a_d, self.theta, self.phi]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidInput("geometry contains non-finite values".into()));
        }
        if self.a_d < 0.0 {
            return Err(Error::InvalidInput(format!("a_d must be ≥ 0, got {}", self.a_d)));
        }
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::InvalidInput(format!("theta {} outside [0, π]", self.theta)));
        }
        if !(0.0..2.0 * PI).contains(&self.phi) {
            return Err(Error::InvalidInput(format!("phi {} outside [0, 2π)", self.phi)));
        }
        Ok(())
    }
}

/// Point-dipole coupling magnitude `μ0 ħ γe γn / (4π r³)` in MHz.
///
/// Gyromagnetic ratios are given in MHz/G; only their magnitudes enter.
pub fn dipolar_magnitude(r_nm: f64, gamma_e_mhz_per_g: f64, gamma_n_mhz_per_g: f64) -> f64 {
    const MU0_OVER_4PI: f64 = 1e-7;
    const HBAR: f64 = 1.054_571_817e-34;
    // MHz/G → rad s⁻¹ T⁻¹
    let to_si = 2.0 * PI * 1e6 * 1e4;
    let ge = gamma_e_mhz_per_g.abs() * to_si;
    let gn = gamma_n_mhz_per_g.abs() * to_si;
    let r = r_nm * 1e-9;
    let omega = MU0_OVER_4PI * HBAR * ge * gn / (r * r * r);
    omega / (2.0 * PI) * 1e-6
}

/// Contact term reproducing a given `(a_par, a_perp)` pair, from
/// `a_perp = (3 a_c − a_par) / 2`.
pub fn contact_from_scalars(a_par: f64, a_perp: f64) -> f64 {
    (2.0 * a_perp + a_par) / 3.0
}

/// Scalar couplings entering the electron–nuclear Hamiltonian, MHz and rad.
///
/// `a_ani · e^{iφ}` multiplies the `S⁺I_z` family of terms and
/// `a_perp_prime · e^{2iφ}` the double-quantum `S⁺I⁺` terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperfineScalars {
    pub a_par: f64,
    pub a_perp: f64,
    pub a_ani: f64,
    pub phi: f64,
    pub a_perp_prime: f64,
}

impl HyperfineScalars {
    /// Couplings without anisotropic or double-quantum parts.
    pub fn secular(a_par: f64, a_perp: f64) -> Self {
        Self {
            a_par,
            a_perp,
            ..Self::default()
        }
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    /// Largest coupling magnitude, used by validity guards.
    pub fn max_abs(&self) -> f64 {
        self.a_par.abs().max(self.a_perp.abs()).max(self.a_ani.abs())
    }

    /// Same couplings with `(a_perp, a_ani)` multiplied by `s`.
    pub fn scale_transverse(mut self, s: f64) -> Self {
        self.a_perp *= s;
        self.a_ani *= s;
        self
    }
}

/// Full 3×3 hyperfine matrix in the NV frame together with its scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperfineTensor {
    pub a: [[f64; 3]; 3],
    pub scalars: HyperfineScalars,
}

impl HyperfineTensor {
    pub fn from_matrix(a: [[f64; 3]; 3]) -> Result<Self> {
        let scalars = derived_scalars(&a)?;
        Ok(Self { a, scalars })
    }

    pub fn trace(&self) -> f64 {
        self.a[0][0] + self.a[1][1] + self.a[2][2]
    }
}

/// Builds the contact + dipolar tensor for one site.
pub fn tensor_from_geometry(g: &HyperfineGeometry) -> HyperfineTensor {
    let HyperfineGeometry {
        a_c,
        a_d,
        theta,
        phi,
    } = *g;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let xx = a_c - a_d * (1.0 - 3.0 * st * st * cp * cp);
    let yy = a_c - a_d * (1.0 - 3.0 * st * st * sp * sp);
    let zz = a_c - a_d * (1.0 - 3.0 * ct * ct);
    let xy = 3.0 * a_d * st * st * cp * sp;
    let xz = 3.0 * a_d * st * ct * cp;
    let yz = 3.0 * a_d * st * ct * sp;
    let a = [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]];
    let scalars = HyperfineScalars {
        a_par: zz,
        a_perp: (xx + yy) / 2.0,
        a_ani: 3.0 * a_d * ct * st,
        phi,
        a_perp_prime: 1.5 * a_d * st * st,
    };
    HyperfineTensor { a, scalars }
}

/// Extracts the Hamiltonian scalars from a symmetric tensor.
///
/// φ comes from `A_xz + iA_yz`. When both vanish it falls back to the
/// in-plane part `A_xx − A_yy + 2iA_xy`. `a_ani` and `a_perp_prime` are the
/// projections onto that φ, so `a_ani·e^{iφ} = A_xz + iA_yz` always holds.
pub fn derived_scalars(t: &[[f64; 3]; 3]) -> Result<HyperfineScalars> {
    let asym = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| (t[i][j] - t[j][i]).abs())
        .fold(0.0, f64::max);
    let scale = t.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if asym > 1e-12 * scale.max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let (xx, yy, zz) = (t[0][0], t[1][1], t[2][2]);
    let (xy, xz, yz) = (t[0][1], t[0][2], t[1][2]);
    let phi = if xz.hypot(yz) > 1e-14 * scale.max(1.0) {
        yz.atan2(xz)
    } else if (xx - yy).hypot(xy) > 1e-14 * scale.max(1.0) {
        0.5 * (2.0 * xy).atan2(xx - yy)
    } else {
        0.0
    };
    let phi = phi.rem_euclid(2.0 * PI);
    let (sp, cp) = phi.sin_cos();
    let (s2, c2) = (2.0 * phi).sin_cos();
    Ok(HyperfineScalars {
        a_par: zz,
        a_perp: (xx + yy) / 2.0,
        a_ani: xz * cp + yz * sp,
        phi,
        // Re[(A_xx − A_yy − 2iA_xy)·e^{2iφ}] / 2
        a_perp_prime: ((xx - yy) * c2 + 2.0 * xy * s2) / 2.0,
    })
}

/// The four ¹³C lattice-site families nearest the NV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
    D,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::A, Family::B, Family::C, Family::D];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Family::A),
            "B" | "b" => Ok(Family::B),
            "C" | "c" => Ok(Family::C),
            "D" | "d" => Ok(Family::D),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

/// Catalog entry for one family. `scalars.phi` is 0; use
/// [`FamilyCatalog::site_phis`] for the individual sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub family: Family,
    pub n_sites: usize,
    pub scalars: HyperfineScalars,
    pub polarization: f64,
    /// `a_ani` is a placeholder rather than a measured value.
    pub a_ani_assumed: bool,
}

/// Measured couplings, multiplicities and polarizations of families A–D.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCatalog {
    entries: [FamilyParams; 4],
    /// Azimuth of the first site of every family, rad.
    pub phi_offset: f64,
}

impl Default for FamilyCatalog {
    fn default() -> Self {
        let entry = |family, n_sites, a_perp, a_ani, a_par, polarization, assumed| FamilyParams {
            family,
            n_sites,
            scalars: HyperfineScalars {
                a_par,
                a_perp,
                a_ani,
                phi: 0.0,
                a_perp_prime: 0.0,
            },
            polarization,
            a_ani_assumed: assumed,
        };
        Self {
            entries: [
                entry(Family::A, 6, 15.6, 1.56, 13.7496, 0.52, false),
                entry(Family::B, 3, 14.00, 1.8, 12.795, 0.53, false),
                entry(Family::C, 3, -10.4, 0.9, -8.9, 0.56, false),
                entry(Family::D, 6, -5.2, 0.5, -6.51, 0.65, true),
            ],
            phi_offset: 0.0,
        }
    }
}

impl FamilyCatalog {
    pub fn get(&self, family: Family) -> &FamilyParams {
        &self.entries[family.index()]
    }

    pub fn get_mut(&mut self, family: Family) -> &mut FamilyParams {
        &mut self.entries[family.index()]
    }

    /// Looks a family up by name (`"A"` … `"D"`).
    pub fn lookup(&self, name: &str) -> Result<&FamilyParams> {
        Ok(self.get(name.parse()?))
    }

    pub fn entries(&self) -> &[FamilyParams; 4] {
        &self.entries
    }

    /// Replaces the placeholder anisotropic coupling of family D.
    pub fn with_d_a_ani(mut self, a_ani: f64) -> Self {
        self.entries[Family::D.index()].scalars.a_ani = a_ani;
        self
    }

    pub fn total_sites(&self) -> usize {
        self.entries.iter().map(|e| e.n_sites).sum()
    }

    /// Equally spaced site azimuths `φ₀ + 2πk/n`.
    pub fn site_phis(&self, family: Family) -> Vec<f64> {
        let n = self.get(family).n_sites;
        (0..n)
            .map(|k| self.phi_offset + 2.0 * PI * k as f64 / n as f64)
            .collect()
    }

    /// Scalars of one site with its azimuth filled in.
    pub fn site_scalars(&self, family: Family, site: usize) -> Result<HyperfineScalars> {
        let phis = self.site_phis(family);
        let phi = *phis.get(site).ok_or(Error::OutOfRange {
            value: site as i64,
            min: 0,
            max: phis.len() as i64 - 1,
        })?;
        Ok(self.get(family).scalars.with_phi(phi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn axial_geometry() {
        let t = tensor_from_geometry(&HyperfineGeometry::new(2.0, 0.5, 0.0, 0.3).unwrap());
        assert!(close(t.a[0][0], 1.5, 1e-15) && close(t.a[1][1], 1.5, 1e-15));
        assert!(close(t.a[2][2], 3.0, 1e-15));
        assert_eq!(t.a[0][1], 0.0);
        assert_eq!(t.a[0][2], 0.0);
        assert_eq!(t.a[1][2], 0.0);
        assert_eq!(t.scalars.a_ani, 0.0);
    }

    #[test]
    fn equatorial_geometry() {
        let t = tensor_from_geometry(&HyperfineGeometry::new(2.0, 0.5, PI / 2.0, 0.0).unwrap());
        assert!(close(t.a[0][0], 3.0, 1e-15));
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!(t.a[i][j].abs() < 1e-15);
        }
    }

    #[test]
    fn in_plane_identity() {
        let g = HyperfineGeometry::new(0.7, 1.3, 1.1, 4.0).unwrap();
        let t = tensor_from_geometry(&g).a;
        let lhs = Complex64::new(t[0][0] - t[1][1], 2.0 * t[0][1]);
        let rhs = Complex64::from_polar(3.0 * g.a_d * g.theta.sin().powi(2), 2.0 * g.phi);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn scalar_multiple_of_identity() {
        let c = 4.2;
        let s = derived_scalars(&[[c, 0.0, 0.0], [0.0, c, 0.0], [0.0, 0.0, c]]).unwrap();
        assert_eq!((s.a_par, s.a_perp, s.a_perp_prime, s.a_ani), (c, c, 0.0, 0.0));
    }

    #[test]
    fn asymmetric_tensor_rejected() {
        let t = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(derived_scalars(&t), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn contact_term_for_family_a() {
        assert!(close(contact_from_scalars(13.7496, 15.6), 14.9832, 1e-12));
    }

    #[test]
    fn one_nanometre_dipole_is_about_twenty_khz() {
        let c = PhysicalConstants::default();
        let a_d = dipolar_magnitude(1.0, c.gamma_e_mhz_per_g, c.gamma_n_c13_mhz_per_g);
        assert!(close(a_d, 0.0199, 2e-4), "{a_d}");
    }

    #[test]
    fn catalog_values() {
        let cat = FamilyCatalog::default();
        let a = cat.lookup("A").unwrap();
        assert_eq!((a.scalars.a_perp, a.n_sites), (15.6, 6));
        let d = cat.get(Family::D);
        assert_eq!((d.scalars.a_par, d.n_sites), (-6.51, 6));
        assert!(d.a_ani_assumed);
        assert_eq!(cat.total_sites(), 18);
        let b = cat.site_phis(Family::B);
        assert_eq!(b.len(), 3);
        assert!(close(b[1], 2.0 * PI / 3.0, 1e-15) && close(b[2], 4.0 * PI / 3.0, 1e-15));
        for e in cat.entries() {
            assert_eq!(e.scalars.a_perp.signum(), e.scalars.a_par.signum());
        }
    }

    #[test]
    fn unknown_family() {
        assert_eq!(
            FamilyCatalog::default().lookup("E").unwrap_err(),
            Error::UnknownFamily("E".into())
        );
    }

    #[test]
    fn invalid_geometry_rejected() {
        assert!(HyperfineGeometry::new(1.0, -0.1, 0.5, 0.5).is_err());
        assert!(HyperfineGeometry::new(1.0, 0.1, 4.0, 0.5).is_err());
        assert!(HyperfineGeometry::new(1.0, 0.1, 0.5, 2.0 * PI).is_err());
        assert!(HyperfineGeometry::from_distance(1.0, 0.0, 0.5, 0.5, 2.8, -1e-3).is_err());
    }
}
