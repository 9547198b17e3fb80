//! Command-line front end for the `nvspin` library.
//!
//! Every subcommand reads one [`config::RunConfig`], computes a table and
//! writes it as CSV (with a `# nvspin <command> config_sha256=…` line) or
//! JSON. Exit codes: 1 for I/O, 2 for configuration or input errors,
//! 3 when a numerical routine fails to converge.

pub mod config;
pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use nvspin::dynamics::{
    detrend_polynomial, fft_spectrum, fit_decaying_sinusoids, simulate_hahn_echo_ensemble, simulate_ramsey,
    uniform_times, weak_c13_ensemble, RamseyComponent, TimeTrace,
};
use nvspin::effective::{extract_nv0_tensor, N14Frequencies};
use nvspin::hamiltonian::{build, SpinSystemSpec};
use nvspin::hyperfine::{Family, HyperfineScalars};
use nvspin::spectroscopy::{
    linear_grid, odmr_electronic_lines, odnmr_lines, pair_gt_frequencies, synthesize_spectrum, two_tone_matrix,
    AmplitudeModel, Manifold, Spectrum, TransitionLine,
};
use nvspin::stats::{contrast_ratios, occupancy_probability, OccupancyModel};

use config::{parse_families, EseemMode, Format, RunConfig};
use output::Table;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Library(nvspin::Error),
    #[error("numerical failure: {0}")]
    Numerical(nvspin::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl From<nvspin::Error> for CliError {
    fn from(e: nvspin::Error) -> Self {
        match e {
            nvspin::Error::NoConvergence { .. } => CliError::Numerical(e),
            other => CliError::Library(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) | CliError::Library(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nvspin", version, about = "NV-centre spin Hamiltonians, spectra and signal analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Override a config key, e.g. `--set field.bz_gauss=500`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Eigenvalues and state labels of the configured spin system.
    Levels,
    /// Synthesised ¹³C ODNMR spectrum.
    Spectrum,
    /// Electronic 0 → −1 lines with ¹³C satellites.
    Odmr,
    /// Single-flip lines of every ¹³C family pair.
    Pairs,
    /// Hahn-echo ESEEM trace of a weakly coupled ¹³C ensemble.
    Eseem,
    /// Ramsey trace of the configured ¹³C lines.
    Ramsey,
    /// NV⁰ ¹⁴N tensor from four measured lines.
    Extract,
    /// Site occupancy and family contrast ratios.
    Stats,
    /// Pump/probe family response matrix.
    Twotone,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Levels => "levels",
            Command::Spectrum => "spectrum",
            Command::Odmr => "odmr",
            Command::Pairs => "pairs",
            Command::Eseem => "eseem",
            Command::Ramsey => "ramsey",
            Command::Extract => "extract",
            Command::Stats => "stats",
            Command::Twotone => "twotone",
        }
    }
}

/// Parses arguments, runs the command and writes its output.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| io_err(p, e))?),
        None => None,
    };
    let mut cfg = RunConfig::load(text.as_deref(), &cli.overrides)?;
    if let Some(p) = &cli.out {
        cfg.output.path = Some(p.clone());
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    let digest = cfg.digest();
    let name = cli.command.name();
    let (table, extra) = execute(cli.command, &cfg)?;
    for (path, t) in &extra {
        emit(t, Some(path), name, &digest, cfg.output.format)?;
    }
    emit(&table, cfg.output.path.as_deref(), name, &digest, cfg.output.format)
}

fn emit(table: &Table, path: Option<&Path>, command: &str, digest: &str, format: Format) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| io_err(p, e))?;
            let mut w = BufWriter::new(f);
            table.write(&mut w, command, digest, format).map_err(|e| io_err(p, e))?;
            w.flush().map_err(|e| io_err(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            match table.write(&mut w, command, digest, format) {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|e| io_err(Path::new("<stdout>"), e)),
            }
        }
    }
}

fn io_err(path: &Path, source: io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Main table of a command plus the secondary tables requested through
/// `*_path` keys.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<(Table, Vec<(PathBuf, Table)>), CliError> {
    let mut extra = Vec::new();
    let main = match command {
        Command::Levels => levels(cfg)?,
        Command::Spectrum => {
            let (t, lines) = spectrum(cfg)?;
            if let Some(p) = &cfg.spectrum.lines_path {
                extra.push((p.clone(), lines));
            }
            t
        }
        Command::Odmr => odmr(cfg)?,
        Command::Pairs => pairs(cfg)?,
        Command::Eseem => {
            let (t, fft) = eseem(cfg)?;
            if let Some(p) = &cfg.eseem.fft_path {
                extra.push((p.clone(), fft));
            }
            t
        }
        Command::Ramsey => {
            let r = ramsey(cfg)?;
            if let Some(p) = &cfg.ramsey.fft_path {
                extra.push((p.clone(), r.fft));
            }
            if let Some(p) = &cfg.ramsey.fit_path {
                extra.push((p.clone(), fit_table(&r.signal, r.components)?));
            }
            r.trace
        }
        Command::Extract => extract(cfg)?,
        Command::Stats => stats(cfg)?,
        Command::Twotone => twotone(cfg)?,
    };
    Ok((main, extra))
}

fn levels(cfg: &RunConfig) -> Result<Table, CliError> {
    let spec = cfg.system_spec()?;
    let eig = build(&spec)?.eigensystem()?;
    let mut t = Table::new(&["index", "energy_mhz", "label"]);
    for k in 0..eig.dim() {
        t.push(vec![k.into(), eig.energies[k].into(), eig.labels[k].clone().into()]);
    }
    Ok(t)
}

fn manifold_filter(name: &str) -> Result<Option<Manifold>, CliError> {
    match name {
        "all" => Ok(None),
        "0_e" => Ok(Some(Manifold::Zero)),
        "+1_e" => Ok(Some(Manifold::PlusOne)),
        "-1_e" => Ok(Some(Manifold::MinusOne)),
        other => Err(CliError::Config(format!(
            "spectrum.manifold must be 0_e, +1_e, -1_e or all, got `{other}`"
        ))),
    }
}

fn line_table(lines: &[TransitionLine]) -> Table {
    let mut t = Table::new(&[
        "frequency_mhz",
        "amplitude",
        "matrix_element_sq",
        "family",
        "manifold",
        "from_label",
        "to_label",
    ]);
    for l in lines {
        t.push(vec![
            l.frequency_mhz.into(),
            l.amplitude.into(),
            l.matrix_element_sq.into(),
            l.family.map(|f| f.to_string()).unwrap_or_default().into(),
            l.manifold.map(|m| m.to_string()).unwrap_or_default().into(),
            l.from_label.clone().into(),
            l.to_label.clone().into(),
        ]);
    }
    t
}

fn spectrum(cfg: &RunConfig) -> Result<(Table, Table), CliError> {
    let s = &cfg.spectrum;
    let families = parse_families(&s.families)?;
    let keep = manifold_filter(&s.manifold)?;
    if s.points < 2 || !(s.stop_mhz > s.start_mhz) {
        return Err(CliError::Config("spectrum grid needs points ≥ 2 and stop_mhz > start_mhz".into()));
    }
    let lines: Vec<TransitionLine> = odnmr_lines(&cfg.catalog(), &families, &cfg.field(), &cfg.constants, s.amplitude_model)?
        .into_iter()
        .filter(|l| keep.map_or(true, |m| l.manifold == Some(m)))
        .collect();
    let grid = linear_grid(s.start_mhz, s.stop_mhz, s.points);
    let sp = synthesize_spectrum(&lines, &grid, s.linewidth_khz * 1e-3)?;
    Ok((spectrum_table(&sp, "signal"), line_table(&lines)))
}

fn spectrum_table(sp: &Spectrum, value: &str) -> Table {
    let mut t = Table::new(&["frequency_mhz", value]);
    for (f, y) in sp.freq_grid_mhz.iter().zip(&sp.signal) {
        t.push(vec![(*f).into(), (*y).into()]);
    }
    t
}

fn odmr(cfg: &RunConfig) -> Result<Table, CliError> {
    let families = parse_families(&cfg.odmr.families)?;
    let lines = odmr_electronic_lines(&cfg.catalog(), &families, &cfg.field(), &cfg.constants)?;
    Ok(line_table(&lines))
}

fn pairs(cfg: &RunConfig) -> Result<Table, CliError> {
    let catalog = cfg.catalog();
    let phis = (cfg.pairs.phi1_deg.to_radians(), cfg.pairs.phi2_deg.to_radians());
    let mut t = Table::new(&[
        "pair",
        "frequency_khz",
        "matrix_element_sq",
        "upper_frequency_khz",
        "upper_matrix_element_sq",
        "singlet_matrix_element_sq",
    ]);
    for (i, &a) in Family::ALL.iter().enumerate() {
        for &b in &Family::ALL[i..] {
            let p = pair_gt_frequencies(&catalog, a, b, phis, &cfg.field(), &cfg.constants)?;
            t.push(vec![
                format!("{a}{b}").into(),
                (p.lower.frequency_mhz * 1e3).into(),
                p.lower.matrix_element_sq.into(),
                (p.upper.frequency_mhz * 1e3).into(),
                p.upper.matrix_element_sq.into(),
                p.singlet_matrix_element_sq.into(),
            ]);
        }
    }
    Ok(t)
}

fn eseem(cfg: &RunConfig) -> Result<(Table, Table), CliError> {
    let e = &cfg.eseem;
    if e.ensemble_size == 0 || e.points < 2 || !(e.tau_step_us > 0.0) {
        return Err(CliError::Config("eseem needs ensemble_size ≥ 1, points ≥ 2, tau_step_us > 0".into()));
    }
    cfg.decay.validate()?;
    let tau = uniform_times(e.tau_start_us, e.tau_step_us, e.points);
    let ensemble = match e.mode {
        EseemMode::Single => {
            let sc = HyperfineScalars {
                a_par: e.a_par_mhz,
                a_perp: e.a_perp_mhz,
                a_ani: e.a_ani_mhz,
                ..HyperfineScalars::default()
            };
            vec![(SpinSystemSpec::nv_c13(sc, cfg.field()).with_constants(cfg.constants), 1.0)]
        }
        EseemMode::Ensemble => {
            weak_c13_ensemble(&cfg.field(), &cfg.constants, e.ensemble_size, e.max_coupling_mhz, e.a_ani_mhz)
        }
    };
    let trace = simulate_hahn_echo_ensemble(&ensemble, &tau, Some(&cfg.decay))?;
    let detrended = detrend_polynomial(&trace, e.detrend_order)?;
    let mut t = Table::new(&["tau_us", "echo", "echo_detrended"]);
    for k in 0..trace.len() {
        t.push(vec![trace.t_us[k].into(), trace.y[k].into(), detrended.y[k].into()]);
    }
    let fft = fft_spectrum(&detrended, e.window, e.zero_pad)?;
    Ok((t, spectrum_table(&fft, "magnitude")))
}

struct RamseyOutput {
    signal: TimeTrace,
    components: usize,
    trace: Table,
    fft: Table,
}

fn ramsey_components(cfg: &RunConfig) -> Result<Vec<RamseyComponent>, CliError> {
    let r = &cfg.ramsey;
    let detunings: Vec<f64> = if !r.detunings_khz.is_empty() {
        r.detunings_khz.clone()
    } else if r.use_model_lines {
        let families = parse_families(&r.families)?;
        let lines = odnmr_lines(&cfg.catalog(), &families, &cfg.field(), &cfg.constants, AmplitudeModel::Quadratic)?;
        families
            .iter()
            .map(|&f| {
                lines
                    .iter()
                    .filter(|l| l.family == Some(f) && l.manifold == Some(Manifold::Zero))
                    .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
                    .map(|l| (l.frequency_mhz * 1e3 - r.drive_khz).abs())
                    .ok_or_else(|| CliError::Config(format!("family {f} has no 0_e line")))
            })
            .collect::<Result<_, _>>()?
    } else {
        if r.centers_khz.len() != 4 {
            return Err(CliError::Config("ramsey.centers_khz needs one value per family A to D".into()));
        }
        parse_families(&r.families)?
            .iter()
            .map(|f| (r.centers_khz[f.index()] - r.drive_khz).abs())
            .collect()
    };
    let weights = if r.weights.is_empty() {
        vec![1.0; detunings.len()]
    } else if r.weights.len() == detunings.len() {
        r.weights.clone()
    } else {
        return Err(CliError::Config(format!(
            "ramsey.weights has {} entries for {} components",
            r.weights.len(),
            detunings.len()
        )));
    };
    Ok(detunings
        .into_iter()
        .zip(weights)
        .map(|(detuning_khz, weight)| RamseyComponent { detuning_khz, weight })
        .collect())
}

fn ramsey(cfg: &RunConfig) -> Result<RamseyOutput, CliError> {
    let r = &cfg.ramsey;
    if r.points < 2 || !(r.t_step_us > 0.0) {
        return Err(CliError::Config("ramsey needs points ≥ 2 and t_step_us > 0".into()));
    }
    let components = ramsey_components(cfg)?;
    let t = uniform_times(0.0, r.t_step_us, r.points);
    let trace = simulate_ramsey(&components, cfg.decay.t2_star_c13_us, &t)?;
    let fft = fft_spectrum(&trace, r.window, r.zero_pad)?;
    let mut fft_t = spectrum_table(&fft, "magnitude");
    fft_t.columns[0] = "frequency_khz".into();
    for row in &mut fft_t.rows {
        if let output::Cell::Num(f) = row[0] {
            row[0] = (f * 1e3).into();
        }
    }
    Ok(RamseyOutput {
        trace: trace_table(&trace, "t_us", "signal"),
        components: components.len(),
        signal: trace,
        fft: fft_t,
    })
}

fn fit_table(trace: &TimeTrace, n: usize) -> Result<Table, CliError> {
    let res = fit_decaying_sinusoids(trace, n, None)?;
    let mut t = Table::new(&["parameter", "value", "sigma", "converged"]);
    for p in &res.params {
        t.push(vec![
            p.name.clone().into(),
            p.value.into(),
            p.sigma.unwrap_or(f64::NAN).into(),
            res.converged.into(),
        ]);
    }
    Ok(t)
}

fn trace_table(trace: &TimeTrace, x: &str, y: &str) -> Table {
    let mut t = Table::new(&[x, y]);
    for (a, b) in trace.t_us.iter().zip(&trace.y) {
        t.push(vec![(*a).into(), (*b).into()]);
    }
    t
}

fn extract(cfg: &RunConfig) -> Result<Table, CliError> {
    let f: [f64; 4] = cfg
        .extract
        .frequencies_mhz
        .as_slice()
        .try_into()
        .map_err(|_| CliError::Config("extract.frequencies_mhz needs exactly four values".into()))?;
    let x = extract_nv0_tensor(&N14Frequencies::nv0(f), cfg.field.bz_gauss, &cfg.constants)?;
    let mut t = Table::new(&["quantity", "value"]);
    t.push(vec!["q0_abs_mhz".into(), x.q0_abs_mhz.into()]);
    t.push(vec!["a0_par_mhz".into(), x.a0_par_mhz.into()]);
    t.push(vec!["a0_perp_mhz".into(), x.a0_perp_mhz.into()]);
    t.push(vec!["radicand_mhz2".into(), x.radicand_mhz2.into()]);
    t.push(vec!["radicand_negative".into(), x.radicand_negative.into()]);
    Ok(t)
}

fn stats(cfg: &RunConfig) -> Result<Table, CliError> {
    let s = &cfg.stats;
    let base = if s.rounded_abundance {
        OccupancyModel::rounded_abundance()
    } else {
        OccupancyModel::default()
    };
    let model = OccupancyModel {
        n_sites: s.n_sites,
        p: s.p.unwrap_or(base.p),
    };
    let mut t = Table::new(&["kind", "key", "value"]);
    for k in 0..=s.max_k.min(s.n_sites) {
        t.push(vec![
            "occupancy".into(),
            format!("k={k}").into(),
            occupancy_probability(&model, k)?.into(),
        ]);
    }
    for r in contrast_ratios(&cfg.catalog(), &cfg.field(), &cfg.constants, s.amplitude_model, Family::A) {
        t.push(vec!["contrast_ratio".into(), r.family.to_string().into(), r.ratio.into()]);
        t.push(vec![
            "gamma_perp_eff_khz_per_g".into(),
            r.family.to_string().into(),
            r.omega_khz_per_g.into(),
        ]);
    }
    Ok(t)
}

fn twotone(cfg: &RunConfig) -> Result<Table, CliError> {
    let m = two_tone_matrix(&cfg.catalog(), &cfg.field(), &cfg.constants)?;
    let mut t = Table::new(&["pump", "probe_a", "probe_b", "probe_c", "probe_d"]);
    for (f, row) in Family::ALL.iter().zip(m) {
        let mut cells = vec![f.to_string().into()];
        cells.extend(row.iter().map(|&v| v.into()));
        t.push(cells);
    }
    Ok(t)
}
