//! ¹³C site occupancy, ODNMR contrast ratios between families and the
//! nuclear polarization metric.

use serde::{Deserialize, Serialize};

use crate::effective::enhanced_gyromagnetic;
use crate::error::{Error, Result};
use crate::hamiltonian::FieldConfig;
use crate::hyperfine::{Family, FamilyCatalog, PhysicalConstants};
use crate::spectroscopy::AmplitudeModel;

/// Natural ¹³C abundance.
pub const NATURAL_ABUNDANCE: f64 = 0.0107;

/// Independent occupation of `n_sites` lattice sites with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OccupancyModel {
    pub n_sites: u32,
    pub p: f64,
}

impl Default for OccupancyModel {
    fn default() -> Self {
        Self {
            n_sites: 18,
            p: NATURAL_ABUNDANCE,
        }
    }
}

impl OccupancyModel {
    /// Rounded abundance of 1 %.
    pub fn rounded_abundance() -> Self {
        Self {
            p: 0.01,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidInput(format!("abundance {} outside [0, 1]", self.p)));
        }
        Ok(())
    }
}

/// `C(N, k) pᵏ (1 − p)^{N−k}`
pub fn occupancy_probability(model: &OccupancyModel, k: u32) -> Result<f64> {
    model.validate()?;
    let n = model.n_sites;
    if k > n {
        return Err(Error::OutOfRange {
            value: k as i64,
            min: 0,
            max: n as i64,
        });
    }
    let k_small = k.min(n - k);
    let binom = (0..k_small).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    Ok(binom * model.p.powi(k as i32) * (1.0 - model.p).powi((n - k) as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastRatio {
    pub family: Family,
    /// `|γn^⊥|` of the family, kHz/G.
    pub omega_khz_per_g: f64,
    pub ratio: f64,
    pub a_ani_assumed: bool,
}

/// `R^i = (p^i/p^ref)(Ω^i/Ω^ref)^m (N^i/N^ref)` with `Ω = |γn^⊥|`.
pub fn contrast_ratios(
    catalog: &FamilyCatalog,
    field: &FieldConfig,
    constants: &PhysicalConstants,
    model: AmplitudeModel,
    reference: Family,
) -> Vec<ContrastRatio> {
    let omega = |f: Family| {
        enhanced_gyromagnetic(&catalog.get(f).scalars, field, constants, 1.0)
            .gamma_perp_eff_khz_per_g
            .abs()
    };
    let weight = |f: Family| {
        let e = catalog.get(f);
        e.polarization * omega(f).powi(model.exponent()) * e.n_sites as f64
    };
    let reference_weight = weight(reference);
    Family::ALL
        .iter()
        .map(|&f| ContrastRatio {
            family: f,
            omega_khz_per_g: omega(f),
            ratio: weight(f) / reference_weight,
            a_ani_assumed: catalog.get(f).a_ani_assumed,
        })
        .collect()
}

/// `P = amp_plus / (amp_plus + amp_minus)`
pub fn polarization_metric(amp_plus: f64, amp_minus: f64) -> Result<f64> {
    if amp_plus < 0.0 || amp_minus < 0.0 {
        return Err(Error::InvalidInput("amplitudes must be non-negative".into()));
    }
    let total = amp_plus + amp_minus;
    if total == 0.0 {
        return Err(Error::InvalidInput("both amplitudes are zero".into()));
    }
    Ok(amp_plus / total)
}
