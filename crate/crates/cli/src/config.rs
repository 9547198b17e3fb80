//! Run configuration: TOML with unit-suffixed keys, `--set` overrides and
//! conversion to library types.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nvspin::dynamics::{DecayParams, Window};
use nvspin::hamiltonian::{ElectronSpecies, FieldConfig, NucleusSpec, SpinSystemSpec};
use nvspin::hyperfine::{Family, FamilyCatalog, HyperfineScalars, PhysicalConstants};
use nvspin::spectroscopy::AmplitudeModel;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub constants: PhysicalConstants,
    pub field: FieldSection,
    pub catalog: CatalogSection,
    pub decay: DecayParams,
    pub system: SystemSection,
    pub spectrum: SpectrumSection,
    pub odmr: OdmrSection,
    pub pairs: PairsSection,
    pub eseem: EseemSection,
    pub ramsey: RamseySection,
    pub extract: ExtractSection,
    pub stats: StatsSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub bz_gauss: f64,
    pub bx_gauss: f64,
    pub azimuth_deg: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self {
            bz_gauss: 486.8,
            bx_gauss: 0.0,
            azimuth_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogSection {
    pub phi_offset_deg: f64,
    pub d_a_ani_mhz: f64,
}

impl Default for CatalogSection {
    fn default() -> Self {
        Self {
            phi_offset_deg: 0.0,
            d_a_ani_mhz: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElectronKind {
    NvMinus,
    Nv0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeciesKind {
    C13,
    N14,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NucleusSection {
    pub species: SpeciesKind,
    /// Catalog family supplying default couplings (¹³C only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default)]
    pub site: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_par_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_perp_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_ani_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_perp_prime_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrupole_mhz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub electron: ElectronKind,
    pub include_double_quantum: bool,
    pub nuclei: Vec<NucleusSection>,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            electron: ElectronKind::NvMinus,
            include_double_quantum: false,
            nuclei: vec![NucleusSection {
                species: SpeciesKind::C13,
                family: Some("A".into()),
                site: 0,
                a_par_mhz: None,
                a_perp_mhz: None,
                a_ani_mhz: None,
                a_perp_prime_mhz: None,
                phi_deg: None,
                quadrupole_mhz: None,
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub points: usize,
    pub linewidth_khz: f64,
    pub families: Vec<String>,
    pub amplitude_model: AmplitudeModel,
    /// `0_e`, `+1_e`, `-1_e` or `all`.
    pub manifold: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lines_path: Option<PathBuf>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            start_mhz: 0.44,
            stop_mhz: 0.54,
            points: 2001,
            linewidth_khz: 3.0,
            families: all_families(),
            amplitude_model: AmplitudeModel::Quadratic,
            manifold: "0_e".into(),
            lines_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdmrSection {
    pub families: Vec<String>,
}

impl Default for OdmrSection {
    fn default() -> Self {
        Self {
            families: all_families(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PairsSection {
    pub phi1_deg: f64,
    pub phi2_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EseemSection {
    pub tau_start_us: f64,
    pub tau_step_us: f64,
    pub points: usize,
    /// `single`: one ¹³C with the couplings below; `ensemble`: a spread of
    /// `ensemble_size` couplings up to `max_coupling_mhz`.
    pub mode: EseemMode,
    pub a_par_mhz: f64,
    pub a_perp_mhz: f64,
    pub ensemble_size: usize,
    pub max_coupling_mhz: f64,
    pub a_ani_mhz: f64,
    pub detrend_order: usize,
    pub window: Window,
    pub zero_pad: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fft_path: Option<PathBuf>,
}

impl Default for EseemSection {
    fn default() -> Self {
        Self {
            tau_start_us: 0.0,
            tau_step_us: 0.01,
            points: 1501,
            mode: EseemMode::Single,
            a_par_mhz: 0.05,
            a_perp_mhz: 0.05,
            ensemble_size: 12,
            max_coupling_mhz: 1.0,
            a_ani_mhz: 0.1,
            detrend_order: 3,
            window: Window::Hann,
            zero_pad: 16,
            fft_path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EseemMode {
    Single,
    Ensemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RamseySection {
    pub drive_khz: f64,
    pub families: Vec<String>,
    /// Explicit detunings; replace the family lines when non-empty.
    pub detunings_khz: Vec<f64>,
    /// Measured `0_e` line centres of families A to D.
    pub centers_khz: Vec<f64>,
    /// Take line positions from the exact model instead of `centers_khz`.
    pub use_model_lines: bool,
    pub weights: Vec<f64>,
    pub t_step_us: f64,
    pub points: usize,
    pub window: Window,
    pub zero_pad: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fft_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_path: Option<PathBuf>,
}

impl Default for RamseySection {
    fn default() -> Self {
        Self {
            drive_khz: 460.0,
            families: vec!["A".into(), "B".into()],
            detunings_khz: vec![],
            centers_khz: vec![469.79, 480.27, 499.29, 516.58],
            use_model_lines: false,
            weights: vec![],
            t_step_us: 1.0,
            points: 2000,
            window: Window::None,
            zero_pad: 16,
            fft_path: None,
            fit_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    /// NV⁰ lines in the order `+1N-1/2, -1N-1/2, +1N+1/2, -1N+1/2`.
    pub frequencies_mhz: Vec<f64>,
}

impl Default for ExtractSection {
    fn default() -> Self {
        Self {
            frequencies_mhz: vec![7.828, 1.472, 1.782, 7.540],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub n_sites: u32,
    /// Overrides the abundance when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Use the rounded 1 % abundance when `p` is not given.
    pub rounded_abundance: bool,
    pub max_k: u32,
    pub amplitude_model: AmplitudeModel,
}

impl Default for StatsSection {
    fn default() -> Self {
        Self {
            n_sites: 18,
            p: None,
            rounded_abundance: true,
            max_k: 3,
            amplitude_model: AmplitudeModel::Quadratic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: Format,
}

fn all_families() -> Vec<String> {
    ["A", "B", "C", "D"].map(String::from).to_vec()
}

impl RunConfig {
    /// Parses TOML text, applies `key=value` overrides and validates keys.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self, CliError> {
        let mut root: toml::Table = match text {
            Some(t) => t
                .parse()
                .map_err(|e: toml::de::Error| CliError::Config(format!("cannot parse config: {e}")))?,
            None => toml::Table::new(),
        };
        for item in overrides {
            apply_override(&mut root, item)?;
        }
        toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("invalid config: {e}")))
    }

    /// SHA-256 of the canonical TOML form, excluding the output section.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        let text = toml::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn field(&self) -> FieldConfig {
        FieldConfig::new(
            self.field.bz_gauss,
            self.field.bx_gauss,
            self.field.azimuth_deg.to_radians(),
        )
    }

    pub fn catalog(&self) -> FamilyCatalog {
        let mut cat = FamilyCatalog::default().with_d_a_ani(self.catalog.d_a_ani_mhz);
        cat.phi_offset = self.catalog.phi_offset_deg.to_radians();
        cat
    }

    pub fn system_spec(&self) -> Result<SpinSystemSpec, CliError> {
        let c = self.constants;
        let cat = self.catalog();
        let electron = match self.system.electron {
            ElectronKind::NvMinus => ElectronSpecies::NvMinus,
            ElectronKind::Nv0 => ElectronSpecies::Nv0,
        };
        let mut nuclei = Vec::new();
        for (k, n) in self.system.nuclei.iter().enumerate() {
            let spec = match n.species {
                SpeciesKind::C13 => {
                    if n.quadrupole_mhz.is_some() {
                        return Err(CliError::Config(format!("system.nuclei[{k}]: ¹³C takes no quadrupole_mhz")));
                    }
                    let mut sc = match &n.family {
                        Some(f) => cat.site_scalars(parse_family(f)?, n.site)?,
                        None => HyperfineScalars::default(),
                    };
                    apply_scalar_overrides(&mut sc, n);
                    NucleusSpec::c13(sc)
                }
                SpeciesKind::N14 => {
                    if n.family.is_some() {
                        return Err(CliError::Config(format!("system.nuclei[{k}]: families apply to ¹³C only")));
                    }
                    let (a_par, a_perp, q) = match electron {
                        ElectronSpecies::NvMinus => (c.a_par_n14_nvm_mhz, c.a_perp_n14_nvm_mhz, c.q_n14_nvm_mhz),
                        ElectronSpecies::Nv0 => (c.a0_par_n14_nv0_mhz, c.a0_perp_n14_nv0_mhz, c.q0_n14_nv0_mhz),
                    };
                    let mut spec = NucleusSpec::n14(a_par, a_perp, n.quadrupole_mhz.unwrap_or(q));
                    if let nvspin::hamiltonian::Coupling::Scalars(sc) = &mut spec.coupling {
                        apply_scalar_overrides(sc, n);
                    }
                    spec
                }
            };
            nuclei.push(spec);
        }
        Ok(SpinSystemSpec::new(electron, nuclei, self.field())
            .with_constants(c)
            .with_double_quantum(self.system.include_double_quantum))
    }
}

fn apply_scalar_overrides(sc: &mut HyperfineScalars, n: &NucleusSection) {
    if let Some(v) = n.a_par_mhz {
        sc.a_par = v;
    }
    if let Some(v) = n.a_perp_mhz {
        sc.a_perp = v;
    }
    if let Some(v) = n.a_ani_mhz {
        sc.a_ani = v;
    }
    if let Some(v) = n.a_perp_prime_mhz {
        sc.a_perp_prime = v;
    }
    if let Some(v) = n.phi_deg {
        sc.phi = v.to_radians();
    }
}

pub fn parse_family(name: &str) -> Result<Family, CliError> {
    name.parse::<Family>().map_err(|e| CliError::Config(e.to_string()))
}

pub fn parse_families(names: &[String]) -> Result<Vec<Family>, CliError> {
    names.iter().map(|n| parse_family(n)).collect()
}

/// Sets `a.b.c = value` in a TOML table. The value is read as TOML and
/// falls back to a plain string.
fn apply_override(root: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{item}`")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("malformed key `{path}`")));
    }
    let value = parse_value(raw.trim());
    let (last, parents) = keys.split_last().expect("non-empty key path");
    let mut table = root;
    for key in parents {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{key}` in `{path}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back = RunConfig::load(Some(&text), &[]).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
    }

    #[test]
    fn overrides_apply_and_unknown_keys_fail() {
        let c = RunConfig::load(None, &["field.bz_gauss=500".into(), "output.format=\"json\"".into()]).unwrap();
        assert_eq!(c.field.bz_gauss, 500.0);
        assert_eq!(c.output.format, Format::Json);
        let bare = RunConfig::load(None, &["output.format=json".into()]).unwrap();
        assert_eq!(bare.output.format, Format::Json);
        assert!(matches!(
            RunConfig::load(None, &["field.bz=500".into()]),
            Err(CliError::Config(_))
        ));
        assert!(RunConfig::load(None, &["nonsense".into()]).is_err());
    }

    #[test]
    fn digest_ignores_output_section() {
        let a = RunConfig::load(None, &["output.path=\"x.csv\"".into()]).unwrap();
        assert_eq!(a.digest(), RunConfig::default().digest());
        let b = RunConfig::load(None, &["field.bx_gauss=1".into()]).unwrap();
        assert_ne!(b.digest(), RunConfig::default().digest());
    }

    #[test]
    fn default_system_is_family_a() {
        let spec = RunConfig::default().system_spec().unwrap();
        assert_eq!(spec.dim(), 6);
    }
}
