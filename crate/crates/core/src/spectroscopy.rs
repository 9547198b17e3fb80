//! RF transition enumeration, Lorentzian spectrum synthesis, electronic
//! ODMR lines, ¹³C pair lines and the two-tone family response.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build, EmbeddedSpin, FieldConfig, NucleusSpec, SpinSystemSpec};
use crate::hyperfine::{Family, FamilyCatalog, PhysicalConstants};
use crate::spin::{ComplexMatrix, Eigensystem, FactorKind, SpinOperatorSet};

/// Electron manifold a transition belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Manifold {
    #[serde(rename = "0_e")]
    Zero,
    #[serde(rename = "+1_e")]
    PlusOne,
    #[serde(rename = "-1_e")]
    MinusOne,
    /// Nuclear transition of the neutral charge state.
    #[serde(rename = "NV0")]
    Nv0,
    /// The electron projection changes.
    #[serde(rename = "electronic")]
    Electronic,
}

impl Manifold {
    pub fn from_m(m_s: f64) -> Option<Self> {
        match m_s {
            x if x == 0.0 => Some(Manifold::Zero),
            x if x == 1.0 => Some(Manifold::PlusOne),
            x if x == -1.0 => Some(Manifold::MinusOne),
            _ => None,
        }
    }

    pub fn is_nuclear(self) -> bool {
        self != Manifold::Electronic
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Manifold::Zero => "0_e",
            Manifold::PlusOne => "+1_e",
            Manifold::MinusOne => "-1_e",
            Manifold::Nv0 => "NV0",
            Manifold::Electronic => "electronic",
        })
    }
}

/// A single RF transition between two eigenstates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionLine {
    pub frequency_mhz: f64,
    /// Weighted line strength.
    pub amplitude: f64,
    /// `|⟨to|rf|from⟩|²` before weighting.
    pub matrix_element_sq: f64,
    pub from_label: String,
    pub to_label: String,
    /// `None` when the eigensystem carries no product basis.
    pub manifold: Option<Manifold>,
    pub family: Option<Family>,
}

/// How line strength scales with the RF matrix element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudeModel {
    /// `p · |M|² · N`
    #[default]
    Quadratic,
    /// `p · |M| · N`
    Linear,
}

impl AmplitudeModel {
    pub fn exponent(self) -> i32 {
        match self {
            AmplitudeModel::Quadratic => 2,
            AmplitudeModel::Linear => 1,
        }
    }
}

/// Weights applied to every line of one enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineWeights {
    pub polarization: f64,
    pub n_sites: f64,
    pub model: AmplitudeModel,
    pub family: Option<Family>,
    /// Lines with `|M|²` below this fraction of the strongest are dropped.
    pub floor: f64,
}

impl Default for LineWeights {
    fn default() -> Self {
        Self {
            polarization: 1.0,
            n_sites: 1.0,
            model: AmplitudeModel::Quadratic,
            family: None,
            floor: 1e-12,
        }
    }
}

impl LineWeights {
    pub fn for_family(catalog: &FamilyCatalog, family: Family, model: AmplitudeModel) -> Self {
        let p = catalog.get(family);
        Self {
            polarization: p.polarization,
            n_sites: p.n_sites as f64,
            model,
            family: Some(family),
            ..Self::default()
        }
    }

    fn amplitude(&self, m_sq: f64) -> f64 {
        let m = match self.model {
            AmplitudeModel::Quadratic => m_sq,
            AmplitudeModel::Linear => m_sq.sqrt(),
        };
        self.polarization * m * self.n_sites
    }
}

/// One line per eigenpair `i < j` whose RF matrix element survives the floor.
pub fn enumerate_transitions(
    eig: &Eigensystem,
    rf: &ComplexMatrix,
    weights: &LineWeights,
) -> Result<Vec<TransitionLine>> {
    let n = eig.dim();
    if rf.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rf.dim(),
        });
    }
    if !rf.is_hermitian(1e-10) {
        return Err(Error::NotHermitian {
            deviation: rf.hermiticity_error(),
            allowed: 1e-10 * rf.max_abs(),
        });
    }
    let images: Vec<_> = eig.states.iter().map(|v| rf.mul_vec(v)).collect();
    let mut elements = Vec::with_capacity(n * (n - 1) / 2);
    let mut max_sq: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let m: num_complex::Complex64 = eig.states[j]
                .iter()
                .zip(&images[i])
                .map(|(a, b)| a.conj() * b)
                .sum();
            let m_sq = m.norm_sqr();
            max_sq = max_sq.max(m_sq);
            elements.push((i, j, m_sq));
        }
    }
    let threshold = weights.floor * max_sq;
    Ok(elements
        .into_iter()
        .filter(|&(_, _, m_sq)| m_sq > threshold && m_sq > 0.0)
        .map(|(i, j, m_sq)| TransitionLine {
            frequency_mhz: eig.energies[j] - eig.energies[i],
            amplitude: weights.amplitude(m_sq),
            matrix_element_sq: m_sq,
            from_label: eig.labels[i].clone(),
            to_label: eig.labels[j].clone(),
            manifold: manifold_of(eig, i, j),
            family: weights.family,
        })
        .collect())
}

fn manifold_of(eig: &Eigensystem, i: usize, j: usize) -> Option<Manifold> {
    let basis = eig.basis()?;
    let first = basis.factors().first()?;
    if first.kind != FactorKind::Electron {
        return None;
    }
    let mi = eig.m_values(i)?[0];
    let mj = eig.m_values(j)?[0];
    if mi != mj {
        return Some(Manifold::Electronic);
    }
    if first.spin.multiplicity() == 2 {
        return Some(Manifold::Nv0);
    }
    Manifold::from_m(mi)
}

/// Which spin operators the RF field couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RfDrive {
    /// `Σ_k I_kx`
    Nuclear,
    /// `γe S_x + Σ_k γn_k I_kx`, per gauss of RF amplitude. Includes the
    /// electron term responsible for hyperfine enhancement.
    Zeeman,
    /// `S_x`
    Electron,
}

/// RF operator on the Hilbert space of `spec` along the NV-frame x axis.
pub fn rf_operator(spec: &SpinSystemSpec, drive: RfDrive) -> Result<ComplexMatrix> {
    let dims = spec.basis().dims();
    let c = &spec.constants;
    let s = EmbeddedSpin::new(&SpinOperatorSet::new(spec.electron.spin()), 0, &dims)?;
    let mut op = ComplexMatrix::zeros(spec.dim());
    match drive {
        RfDrive::Electron => op += &s.x,
        RfDrive::Zeeman => op += &s.x.scale_real(c.gamma_e_mhz_per_g),
        RfDrive::Nuclear => {}
    }
    if drive != RfDrive::Electron {
        for (k, n) in spec.nuclei.iter().enumerate() {
            let i = EmbeddedSpin::new(&SpinOperatorSet::new(n.species.spin()), k + 1, &dims)?;
            let g = if drive == RfDrive::Zeeman { n.species.gamma(c) } else { 1.0 };
            op += &i.x.scale_real(g);
        }
    }
    Ok(op)
}

/// Sampled line shape on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freq_grid_mhz: Vec<f64>,
    pub signal: Vec<f64>,
    /// Lorentzian FWHM, MHz. Zero for spectra not built from lines.
    pub linewidth_mhz: f64,
}

impl Spectrum {
    /// Indices of strict local maxima above `min_signal`.
    pub fn local_maxima(&self, min_signal: f64) -> Vec<usize> {
        let y = &self.signal;
        (1..y.len().saturating_sub(1))
            .filter(|&k| y[k] > y[k - 1] && y[k] >= y[k + 1] && y[k] > min_signal)
            .collect()
    }

    /// Index of the largest value within `[lo, hi]` MHz.
    pub fn peak_in(&self, lo: f64, hi: f64) -> Option<usize> {
        self.freq_grid_mhz
            .iter()
            .enumerate()
            .filter(|(_, &f)| f >= lo && f <= hi)
            .max_by(|a, b| self.signal[a.0].total_cmp(&self.signal[b.0]))
            .map(|(k, _)| k)
    }
}

/// `n` equally spaced points from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Renders lines as Lorentzians of full width `linewidth_mhz`.
pub fn synthesize_spectrum(lines: &[TransitionLine], grid: &[f64], linewidth_mhz: f64) -> Result<Spectrum> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !(linewidth_mhz > 0.0) {
        return Err(Error::InvalidInput(format!("linewidth must be positive, got {linewidth_mhz}")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("frequency grid must be strictly increasing".into()));
    }
    let hw_sq = (linewidth_mhz / 2.0).powi(2);
    let signal = grid
        .iter()
        .map(|&f| {
            lines
                .iter()
                .map(|l| l.amplitude * hw_sq / ((f - l.frequency_mhz).powi(2) + hw_sq))
                .sum()
        })
        .collect();
    Ok(Spectrum {
        freq_grid_mhz: grid.to_vec(),
        signal,
        linewidth_mhz,
    })
}

/// Nuclear ¹³C lines of every requested family under the total Zeeman drive.
///
/// With no transverse field all sites of a family are degenerate and one
/// representative carries the full site count; otherwise each site
/// contributes its own lines with unit multiplicity.
pub fn odnmr_lines(
    catalog: &FamilyCatalog,
    families: &[Family],
    field: &FieldConfig,
    constants: &PhysicalConstants,
    model: AmplitudeModel,
) -> Result<Vec<TransitionLine>> {
    let mut out = Vec::new();
    for &family in families {
        let mut weights = LineWeights::for_family(catalog, family, model);
        let sites: Vec<usize> = if field.bx_gauss == 0.0 {
            vec![0]
        } else {
            weights.n_sites = 1.0;
            (0..catalog.get(family).n_sites).collect()
        };
        for site in sites {
            let spec = SpinSystemSpec::nv_c13(catalog.site_scalars(family, site)?, *field).with_constants(*constants);
            let eig = build(&spec)?.eigensystem()?;
            let rf = rf_operator(&spec, RfDrive::Zeeman)?;
            out.extend(
                enumerate_transitions(&eig, &rf, &weights)?
                    .into_iter()
                    .filter(|l| l.manifold.map(Manifold::is_nuclear).unwrap_or(false)),
            );
        }
    }
    Ok(out)
}

/// Electronic `0 → −1` lines: the three ¹⁴N hyperfine lines, then for each
/// family the two ¹³C satellites of the `m_I(¹⁴N) = +1` line.
///
/// Amplitudes are `|⟨f|S_x|i⟩|²`, satellites weighted by site count.
pub fn odmr_electronic_lines(
    catalog: &FamilyCatalog,
    families: &[Family],
    field: &FieldConfig,
    constants: &PhysicalConstants,
) -> Result<Vec<TransitionLine>> {
    let lower_branch = |l: &TransitionLine, nuclear_match: &dyn Fn(&str, &str) -> bool| {
        l.from_label.starts_with("0_e,")
            && l.to_label.starts_with("-1_e,")
            && nuclear_match(nuclear_part(&l.from_label), nuclear_part(&l.to_label))
    };

    let n14 = SpinSystemSpec::nv_n14(*constants, *field);
    let eig = build(&n14)?.eigensystem()?;
    let rf = rf_operator(&n14, RfDrive::Electron)?;
    let mut out: Vec<TransitionLine> = enumerate_transitions(&eig, &rf, &LineWeights::default())?
        .into_iter()
        .filter(|l| lower_branch(l, &|a, b| a == b))
        .collect();

    for &family in families {
        let mut spec = SpinSystemSpec::nv_n14(*constants, *field);
        spec.nuclei.push(NucleusSpec::c13(catalog.site_scalars(family, 0)?));
        let eig = build(&spec)?.eigensystem()?;
        let rf = rf_operator(&spec, RfDrive::Electron)?;
        let weights = LineWeights {
            n_sites: catalog.get(family).n_sites as f64,
            family: Some(family),
            ..LineWeights::default()
        };
        out.extend(
            enumerate_transitions(&eig, &rf, &weights)?
                .into_iter()
                .filter(|l| lower_branch(l, &|a, b| a == b && a.starts_with("+1_N"))),
        );
    }
    out.sort_by(|a, b| a.frequency_mhz.total_cmp(&b.frequency_mhz));
    Ok(out)
}

fn nuclear_part(label: &str) -> &str {
    label.split_once(',').map(|(_, rest)| rest).unwrap_or("")
}

/// `|g⟩ → single-flip` lines of a ¹³C pair in the `m_s = 0` manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTransitions {
    pub families: (Family, Family),
    /// RF-allowed lines out of `|g⟩ = |0_e, +1/2, +1/2⟩`, ascending.
    pub lines: Vec<TransitionLine>,
    /// Lower of the two single-flip lines.
    pub lower: TransitionLine,
    /// Upper of the two single-flip lines.
    pub upper: TransitionLine,
    /// `|M|²` of the weaker single-flip line, without any floor.
    pub singlet_matrix_element_sq: f64,
    /// `|M|²` of the stronger single-flip line.
    pub triplet_matrix_element_sq: f64,
}

impl PairTransitions {
    pub fn triplet(&self) -> &TransitionLine {
        if self.lower.matrix_element_sq >= self.upper.matrix_element_sq {
            &self.lower
        } else {
            &self.upper
        }
    }
}

/// Exact 12-dimensional pair lines under `rf = I1x + I2x`.
pub fn pair_gt_frequencies(
    catalog: &FamilyCatalog,
    first: Family,
    second: Family,
    phis: (f64, f64),
    field: &FieldConfig,
    constants: &PhysicalConstants,
) -> Result<PairTransitions> {
    let s1 = catalog.get(first).scalars.with_phi(phis.0);
    let s2 = catalog.get(second).scalars.with_phi(phis.1);
    let spec = SpinSystemSpec::nv_c13_pair(s1, s2, *field).with_constants(*constants);
    let eig = build(&spec)?.eigensystem()?;
    let rf = rf_operator(&spec, RfDrive::Nuclear)?;

    let in_zero = |k: usize| eig.m_values(k).map(|m| m[0] == 0.0).unwrap_or(false);
    let g = eig
        .state_labeled("0_e,+1/2,+1/2")
        .ok_or_else(|| Error::InvalidSystem("no state assigned to |0_e,+1/2,+1/2⟩".into()))?;
    let flips: Vec<usize> = (0..eig.dim())
        .filter(|&k| in_zero(k) && eig.m_values(k).map(|m| m[1] + m[2] == 0.0).unwrap_or(false))
        .collect();
    if flips.len() != 2 {
        return Err(Error::InvalidSystem(format!(
            "expected two single-flip states, found {}",
            flips.len()
        )));
    }

    let line = |k: usize| {
        let m = rf.sandwich(&eig.states[k], &eig.states[g]);
        TransitionLine {
            frequency_mhz: (eig.energies[k] - eig.energies[g]).abs(),
            amplitude: m.norm_sqr(),
            matrix_element_sq: m.norm_sqr(),
            from_label: eig.labels[g].clone(),
            to_label: eig.labels[k].clone(),
            manifold: Some(Manifold::Zero),
            family: None,
        }
    };
    let mut single: Vec<TransitionLine> = flips.iter().map(|&k| line(k)).collect();
    single.sort_by(|a, b| a.frequency_mhz.total_cmp(&b.frequency_mhz));
    let singlet = single[0].matrix_element_sq.min(single[1].matrix_element_sq);
    let triplet = single[0].matrix_element_sq.max(single[1].matrix_element_sq);

    let max_sq = (0..eig.dim())
        .filter(|&k| in_zero(k) && k != g)
        .map(|k| line(k).matrix_element_sq)
        .fold(0.0, f64::max);
    let mut lines: Vec<TransitionLine> = (0..eig.dim())
        .filter(|&k| in_zero(k) && k != g)
        .map(line)
        .filter(|l| l.matrix_element_sq > 1e-12 * max_sq)
        .collect();
    lines.sort_by(|a, b| a.frequency_mhz.total_cmp(&b.frequency_mhz));

    let upper = single.pop().expect("two single-flip lines");
    let lower = single.pop().expect("two single-flip lines");
    Ok(PairTransitions {
        families: (first, second),
        lines,
        lower,
        upper,
        singlet_matrix_element_sq: singlet,
        triplet_matrix_element_sq: triplet,
    })
}

/// Demodulated two-tone signal: 1 when pump and probe address the same
/// family, 0 otherwise.
pub fn two_tone_response(pump: &TransitionLine, probe: &TransitionLine) -> Result<f64> {
    let (Some(a), Some(b)) = (pump.family, probe.family) else {
        return Err(Error::InvalidInput("two-tone lines need family labels".into()));
    };
    if pump.manifold != Some(Manifold::Zero) {
        return Err(Error::InvalidInput(format!(
            "pump must sit in the 0_e manifold, got {:?}",
            pump.manifold
        )));
    }
    if !matches!(probe.manifold, Some(Manifold::PlusOne | Manifold::MinusOne)) {
        return Err(Error::InvalidInput(format!(
            "probe must sit in a ±1_e manifold, got {:?}",
            probe.manifold
        )));
    }
    Ok(if a == b { 1.0 } else { 0.0 })
}

/// Response of every (pump, probe) family combination. Rows are pumps in
/// `m_s = 0`, columns probes in `m_s = −1`, both in A, B, C, D order.
pub fn two_tone_matrix(
    catalog: &FamilyCatalog,
    field: &FieldConfig,
    constants: &PhysicalConstants,
) -> Result<[[f64; 4]; 4]> {
    let lines = odnmr_lines(catalog, &Family::ALL, field, constants, AmplitudeModel::Quadratic)?;
    let pick = |f: Family, m: Manifold| {
        lines
            .iter()
            .filter(|l| l.family == Some(f) && l.manifold == Some(m))
            .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
            .ok_or_else(|| Error::InvalidSystem(format!("no {m} line for family {f}")))
    };
    let mut out = [[0.0; 4]; 4];
    for (r, &pf) in Family::ALL.iter().enumerate() {
        let pump = pick(pf, Manifold::Zero)?;
        for (c, &qf) in Family::ALL.iter().enumerate() {
            out[r][c] = two_tone_response(pump, pick(qf, Manifold::MinusOne)?)?;
        }
    }
    Ok(out)
}
