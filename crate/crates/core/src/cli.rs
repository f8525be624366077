//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for invalid input or I/O failure, 2 when a
//! numerical routine fails to converge.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::balanced::{self, DesignError, DesignOptions, FilterDesign, SlotMetadata};
use crate::circuit::{self, CircuitError, DmModel, SweepConfig};
use crate::config::{ConfigError, RunConfig};
use crate::fields::{self, FieldError, DEFAULT_NULL_TOL};
use crate::modal::{self, ModalError, ModeId, Orientation, ResonatorSpec};
use crate::report;
use crate::specfun::SpecfunError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

fn specfun_error(e: SpecfunError) -> CliError {
    match e {
        SpecfunError::RootSearch { .. } | SpecfunError::RootNotConverged { .. } => {
            CliError::Numerical(e.to_string())
        }
        _ => CliError::Validation(e.to_string()),
    }
}

impl From<SpecfunError> for CliError {
    fn from(e: SpecfunError) -> Self {
        specfun_error(e)
    }
}

impl From<ModalError> for CliError {
    fn from(e: ModalError) -> Self {
        match e {
            ModalError::Specfun(s) => specfun_error(s),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::Specfun(s) => specfun_error(s),
            FieldError::Modal(m) => m.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::Modal(m) => m.into(),
            DesignError::Field(f) => f.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "circpatch", version, about = "Circular-patch balanced filter toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Patch radius in meters.
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true, conflicts_with_all = ["fit_mode", "fit_freq"])]
    pub eps_eff: Option<f64>,
    /// Mode used to fit eps_eff, as `n,i`.
    #[arg(long, global = true, requires = "fit_freq")]
    pub fit_mode: Option<String>,
    /// Measured frequency of the fit mode in Hz.
    #[arg(long, global = true, requires = "fit_mode")]
    pub fit_freq: Option<f64>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct DesignArgs {
    /// `single` or `dual`.
    #[arg(long)]
    pub kind: Option<String>,
    /// Fit eps_eff so TM11 lands here (Hz).
    #[arg(long)]
    pub f_target: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    #[arg(long)]
    pub f_start: Option<f64>,
    #[arg(long)]
    pub f_stop: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub notch_q: Option<f64>,
    #[arg(long)]
    pub cm_leakage_db: Option<f64>,
    #[arg(long)]
    pub cm_q: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resonant modes up to a frequency.
    Spectrum {
        #[arg(long)]
        fmax: Option<f64>,
    },
    /// Field samples of one mode on a polar grid (CSV).
    Fieldmap {
        /// `n,i`
        #[arg(long)]
        mode: Option<String>,
        /// `cos` or `sin`
        #[arg(long)]
        orientation: Option<String>,
        #[arg(long)]
        n_rho: Option<usize>,
        #[arg(long)]
        n_phi: Option<usize>,
    },
    /// Rim null angles of one mode.
    Nulls {
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        orientation: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Port, via and slot placement.
    Design {
        #[command(flatten)]
        design: DesignArgs,
    },
    /// Coupling coefficient from a split pair, or the split from a coupling.
    Coupling {
        #[arg(long)]
        fp1: Option<f64>,
        #[arg(long)]
        fp2: Option<f64>,
        #[arg(long)]
        f0: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
        /// `positive` or `negative`
        #[arg(long)]
        sign: Option<String>,
    },
    /// Mixed-mode response as Touchstone and CSV.
    Sparams {
        /// Re-use a design written by `design` or `report`.
        #[arg(long)]
        design: Option<PathBuf>,
        #[command(flatten)]
        design_args: DesignArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Full design dossier: report.txt, design.json, spectrum.csv.
    Report {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

/// Parses `args` and runs; returns the text destined for standard output.
pub fn run_from<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Validation(e.to_string()))?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    apply_common(&mut cfg, &cli.common)?;
    let out = cli.common.out.as_deref();
    match &cli.command {
        Command::Spectrum { fmax } => {
            cfg.set_opt("f_max_hz", *fmax)?;
            cmd_spectrum(&cfg, out)
        }
        Command::Fieldmap {
            mode,
            orientation,
            n_rho,
            n_phi,
        } => {
            cfg.set_opt("mode", mode.as_ref())?;
            cfg.set_opt("orientation", orientation.as_ref())?;
            cfg.set_opt("n_rho", *n_rho)?;
            cfg.set_opt("n_phi", *n_phi)?;
            cmd_fieldmap(&cfg, out)
        }
        Command::Nulls { mode, orientation, tol } => {
            cfg.set_opt("mode", mode.as_ref())?;
            cfg.set_opt("orientation", orientation.as_ref())?;
            cfg.set_opt("null_tol", *tol)?;
            cmd_nulls(&cfg, out)
        }
        Command::Design { design } => {
            apply_design(&mut cfg, design)?;
            cmd_design(&cfg, out)
        }
        Command::Coupling { fp1, fp2, f0, k, sign } => {
            cfg.set_opt("fp1_hz", *fp1)?;
            cfg.set_opt("fp2_hz", *fp2)?;
            cfg.set_opt("f0_hz", *f0)?;
            cfg.set_opt("k", *k)?;
            cfg.set_opt("sign", sign.as_ref())?;
            cmd_coupling(&cfg, out)
        }
        Command::Sparams {
            design,
            design_args,
            sweep,
        } => {
            apply_design(&mut cfg, design_args)?;
            apply_sweep(&mut cfg, sweep)?;
            cmd_sparams(&cfg, design.as_deref(), out)
        }
        Command::Report { design, sweep } => {
            apply_design(&mut cfg, design)?;
            apply_sweep(&mut cfg, sweep)?;
            cmd_report(&cfg, out)
        }
    }
}

fn apply_common(cfg: &mut RunConfig, c: &CommonArgs) -> Result<(), CliError> {
    cfg.set_opt("radius_m", c.radius)?;
    if let Some(e) = c.eps_eff {
        cfg.remove("fit_mode");
        cfg.remove("fit_freq_hz");
        cfg.set("eps_eff", e)?;
    }
    if let (Some(m), Some(f)) = (&c.fit_mode, c.fit_freq) {
        cfg.remove("eps_eff");
        cfg.set("fit_mode", m)?;
        cfg.set("fit_freq_hz", f)?;
    }
    Ok(())
}

fn apply_design(cfg: &mut RunConfig, d: &DesignArgs) -> Result<(), CliError> {
    cfg.set_opt("kind", d.kind.as_ref())?;
    cfg.set_opt("f_target_hz", d.f_target)?;
    Ok(())
}

fn apply_sweep(cfg: &mut RunConfig, s: &SweepArgs) -> Result<(), CliError> {
    cfg.set_opt("f_start_hz", s.f_start)?;
    cfg.set_opt("f_stop_hz", s.f_stop)?;
    cfg.set_opt("points", s.points)?;
    cfg.set_opt("notch_q", s.notch_q)?;
    cfg.set_opt("cm_leakage_db", s.cm_leakage_db)?;
    cfg.set_opt("cm_q", s.cm_q)?;
    Ok(())
}

fn resolve_spec(cfg: &RunConfig, allow_target: bool) -> Result<ResonatorSpec, CliError> {
    let radius = cfg.require_f64("radius_m")?;
    if let Some(eps) = cfg.f64("eps_eff")? {
        if cfg.raw("fit_mode").is_some() || cfg.raw("fit_freq_hz").is_some() {
            return Err(CliError::Validation(
                "set either eps_eff or fit_mode + fit_freq_hz, not both".into(),
            ));
        }
        return Ok(ResonatorSpec::new(radius, eps)?);
    }
    match (cfg.index_pair("fit_mode")?, cfg.f64("fit_freq_hz")?) {
        (Some((n, i)), Some(f)) => Ok(ResonatorSpec::fitted(radius, ModeId::tm(n, i)?, f)?),
        (None, None) => match cfg.f64("f_target_hz")? {
            Some(f) if allow_target => Ok(ResonatorSpec::fitted(radius, ModeId::tm(1, 1)?, f)?),
            _ => Err(CliError::Validation(
                "missing eps_eff (or fit_mode + fit_freq_hz)".into(),
            )),
        },
        _ => Err(CliError::Validation("fit_mode and fit_freq_hz go together".into())),
    }
}

fn resolve_mode(cfg: &RunConfig) -> Result<ModeId, CliError> {
    let (n, i) = cfg
        .index_pair("mode")?
        .ok_or_else(|| ConfigError::Missing("mode".into()))?;
    let orientation = match cfg.raw("orientation").unwrap_or("cos") {
        "cos" | "cosine" => Orientation::Cosine,
        "sin" | "sine" => Orientation::Sine,
        other => {
            return Err(CliError::Validation(format!(
                "orientation must be `cos` or `sin`, got `{other}`"
            )))
        }
    };
    Ok(ModeId::new(n, i, orientation)?)
}

fn build_design(cfg: &RunConfig) -> Result<FilterDesign, CliError> {
    let spec = resolve_spec(cfg, true)?;
    let f_target = cfg.f64("f_target_hz")?;
    let opts = DesignOptions::default();
    let mut design = match cfg.raw("kind").unwrap_or("single") {
        "single" => balanced::design_single_band(&spec, f_target, &opts)?,
        "dual" => {
            let meta = SlotMetadata {
                length_m: cfg.f64("lc_m")?,
                width_m: cfg.f64("wc_m")?,
            };
            balanced::design_dual_band(&spec, f_target, meta, &opts)?
        }
        other => {
            return Err(CliError::Validation(format!(
                "kind must be `single` or `dual`, got `{other}`"
            )))
        }
    };
    design.metadata.extend(cfg.geometry()?);
    Ok(design)
}

fn sweep_config(cfg: &RunConfig) -> Result<SweepConfig, CliError> {
    let d = SweepConfig::default();
    Ok(SweepConfig {
        f_start: cfg.f64("f_start_hz")?.unwrap_or(d.f_start),
        f_stop: cfg.f64("f_stop_hz")?.unwrap_or(d.f_stop),
        points: cfg.usize("points")?.unwrap_or(d.points),
        notch_q: cfg.f64("notch_q")?.unwrap_or(d.notch_q),
        cm_leakage_db: cfg.f64("cm_leakage_db")?.unwrap_or(d.cm_leakage_db),
        cm_q: cfg.f64("cm_q")?.unwrap_or(d.cm_q),
        ..d
    })
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Validation(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

fn out_dir(out: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    Ok(dir)
}

fn cmd_spectrum(cfg: &RunConfig, out: Option<&Path>) -> Result<String, CliError> {
    let spec = resolve_spec(cfg, false)?;
    let f_max = match cfg.f64("f_max_hz")? {
        Some(f) => f,
        None => 1.1 * modal::resonant_frequency(&spec, ModeId::tm(3, 1)?)?,
    };
    let entries = modal::spectrum(&spec, f_max)?;
    if entries.is_empty() {
        eprintln!("warning: no modes below {f_max:e} Hz");
    }
    if let Some(path) = out {
        write_atomic(path, report::spectrum_csv(&entries).as_bytes())?;
    }
    Ok(report::spectrum_table(&entries))
}

fn cmd_fieldmap(cfg: &RunConfig, out: Option<&Path>) -> Result<String, CliError> {
    let spec = resolve_spec(cfg, false)?;
    let mode = resolve_mode(cfg)?;
    let n_rho = cfg.usize("n_rho")?.unwrap_or(33);
    let n_phi = cfg.usize("n_phi")?.unwrap_or(72);
    let map = fields::field_map(&spec, mode, n_rho, n_phi)?;
    let mut buf = Vec::new();
    map.write_csv(&mut buf).expect("writing to memory");
    match out {
        Some(path) => {
            write_atomic(path, &buf)?;
            Ok(format!("{mode}: {} samples written to {}\n", map.values.len(), path.display()))
        }
        None => Ok(String::from_utf8(buf).expect("ascii csv")),
    }
}

fn cmd_nulls(cfg: &RunConfig, out: Option<&Path>) -> Result<String, CliError> {
    let spec = resolve_spec(cfg, false)?;
    let mode = resolve_mode(cfg)?;
    let tol = cfg.f64("null_tol")?.unwrap_or(DEFAULT_NULL_TOL);
    let nulls = fields::rim_nulls(&spec, mode, tol)?;
    let mut text = String::new();
    for a in &nulls {
        let _ = writeln!(text, "{:.9}", a.to_degrees());
    }
    if let Some(path) = out {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(format!("{mode} rim nulls (deg):\n{text}"))
}

fn cmd_design(cfg: &RunConfig, out: Option<&Path>) -> Result<String, CliError> {
    let design = build_design(cfg)?;
    let summary = report::design_summary(&design);
    if out.is_some() {
        let dir = out_dir(out)?;
        write_design_json(&dir.join("design.json"), &design)?;
        write_atomic(&dir.join("design.txt"), summary.as_bytes())?;
    }
    Ok(summary)
}

fn write_design_json(path: &Path, design: &FilterDesign) -> Result<(), CliError> {
    let json = report::design_to_json(design).map_err(|e| CliError::Validation(e.to_string()))?;
    write_atomic(path, json.as_bytes())
}

fn cmd_coupling(cfg: &RunConfig, out: Option<&Path>) -> Result<String, CliError> {
    let sign = match cfg.raw("sign").unwrap_or("positive") {
        "positive" | "+" => circuit::CouplingSign::Positive,
        "negative" | "-" => circuit::CouplingSign::Negative,
        other => {
            return Err(CliError::Validation(format!(
                "sign must be `positive` or `negative`, got `{other}`"
            )))
        }
    };
    let text = match (cfg.f64("fp1_hz")?, cfg.f64("fp2_hz")?, cfg.f64("f0_hz")?, cfg.f64("k")?) {
        (Some(a), Some(b), None, None) => {
            let r = circuit::coupling_from_split_signed(a, b, sign)?;
            format!("f_p1 = {:.9e} Hz\nf_p2 = {:.9e} Hz\nk = {:.9}\n", r.f_p1, r.f_p2, r.k)
        }
        (None, None, Some(f0), Some(k)) => {
            let (a, b) = circuit::split_from_coupling(f0, k)?;
            format!("f_p1 = {a:.9e} Hz\nf_p2 = {b:.9e} Hz\nk = {k:.9}\n")
        }
        _ => {
            return Err(CliError::Validation(
                "give either --fp1 and --fp2, or --f0 and --k".into(),
            ))
        }
    };
    if let Some(path) = out {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(text)
}

fn load_design(path: &Path) -> Result<FilterDesign, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    report::design_from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn cmd_sparams(cfg: &RunConfig, design_path: Option<&Path>, out: Option<&Path>) -> Result<String, CliError> {
    let design = match design_path {
        Some(p) => load_design(p)?,
        None => build_design(cfg)?,
    };
    let sweep = circuit::sweep(&design, &sweep_config(cfg)?)?;
    let dir = out_dir(out)?;
    let mut s2p = Vec::new();
    sweep.write_touchstone(&mut s2p).expect("writing to memory");
    let mut csv = Vec::new();
    sweep.write_csv(&mut csv).expect("writing to memory");
    write_atomic(&dir.join("sparams.s2p"), &s2p)?;
    write_atomic(&dir.join("sparams.csv"), &csv)?;
    Ok(format!(
        "{} points, {:.3e}-{:.3e} Hz, written to {}\n",
        sweep.len(),
        sweep.freqs[0],
        sweep.freqs[sweep.len() - 1],
        dir.display()
    ))
}

fn cmd_report(cfg: &RunConfig, out: Option<&Path>) -> Result<String, CliError> {
    let design = build_design(cfg)?;
    let sweep_cfg = sweep_config(cfg)?;
    let model = DmModel::new(
        circuit::bands_from_passbands(&design.predicted_passbands)?,
        design.predicted_tz.clone(),
        sweep_cfg.notch_q,
    )?;
    let metrics: Vec<_> = (0..model.bands().len())
        .filter_map(|i| model.band_metrics(i))
        .collect();
    let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let text = report::report_text(&design, &metrics, &stamp);
    let f_max = 1.1 * modal::resonant_frequency(&design.spec, ModeId::tm(3, 1)?)?;
    let spectrum = modal::spectrum(&design.spec, f_max)?;

    let dir = out_dir(out)?;
    write_atomic(&dir.join("report.txt"), text.as_bytes())?;
    write_design_json(&dir.join("design.json"), &design)?;
    write_atomic(&dir.join("spectrum.csv"), report::spectrum_csv(&spectrum).as_bytes())?;
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_command() {
        let out = run_from(["circpatch", "coupling", "--fp1", "2.5e9", "--fp2", "2.7e9"]).unwrap();
        assert!(out.contains("k = 0.076809453"), "{out}");
    }

    #[test]
    fn design_command_single() {
        let out = run_from(["circpatch", "design", "--kind", "single", "--f-target", "2.77e9", "--radius", "16e-3"]).unwrap();
        assert!(out.contains("output_angle_deg: 60.000000"));
        assert!(out.contains("via_sites: 3"));
        assert!(out.contains("tz_1: 4.59"));
    }

    #[test]
    fn missing_permittivity_is_validation() {
        let e = run_from(["circpatch", "spectrum", "--radius", "16e-3"]).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn bad_kind_rejected() {
        let e = run_from(["circpatch", "design", "--kind", "triple", "--f-target", "2.77e9", "--radius", "16e-3"]).unwrap_err();
        assert!(matches!(e, CliError::Validation(_)));
    }

    #[test]
    fn numerical_failures_map_to_two() {
        let e: CliError = ModalError::Specfun(SpecfunError::RootNotConverged {
            order: 1,
            index: 1,
            residual: 1.0,
        })
        .into();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn spectrum_ratios() {
        let out = run_from(["circpatch", "spectrum", "--radius", "16e-3", "--fit-mode", "1,1", "--fit-freq", "2.77e9"]).unwrap();
        let ratios: Vec<f64> = out
            .lines()
            .skip(1)
            .take(4)
            .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
            .collect();
        for (got, want) in ratios.iter().zip([1.0, 1.658844, 2.081110, 2.281787]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn empty_spectrum_is_ok() {
        let out = run_from(["circpatch", "spectrum", "--radius", "16e-3", "--eps-eff", "3.93", "--fmax", "1e9"]).unwrap();
        assert_eq!(out.lines().count(), 1);
    }
}
