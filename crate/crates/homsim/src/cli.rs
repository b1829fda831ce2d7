//! Command-line driver.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use homsim_core::acquisition::generate;
use homsim_core::analysis::{
    classify, estimate, fit_visibility, klyshko_eta, CountsSummary, EstimatedPoint, TriangleGuess,
    MIN_FIT_POINTS,
};
use homsim_core::biphoton::CrystalConfig;
use homsim_core::interference::{sweep, DelaySetting, ExchangeSign};
use rayon::prelude::*;

use crate::config::{ConfigFile, ExperimentSpec};
use crate::curve_file::{self, CurveRow};
use crate::error::{Error, Result};
use crate::{event_file, selftest, svg, write_atomic};

#[derive(Debug, Parser)]
#[command(
    name = "homsim",
    version,
    about = "Two-photon coalescence at a beam splitter: theory curves, Monte Carlo runs with photon-number-resolving detectors, and their analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the ideal coincidence curves as CSV (and SVG with --svg).
    Theory(Common),
    /// Simulate one acquisition run per delay and write event files.
    Run(Common),
    /// Reconstruct coincidence probabilities from event files.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Event files, one per delay.
        files: Vec<PathBuf>,
    },
    /// Estimate detector efficiencies from event files taken far from the dip.
    Calibrate {
        #[command(flatten)]
        common: Common,
        files: Vec<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML experiment description; flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "FS", allow_hyphen_values = true)]
    pub tau_min: Option<f64>,
    #[arg(long, value_name = "FS", allow_hyphen_values = true)]
    pub tau_max: Option<f64>,
    #[arg(long, value_name = "N")]
    pub tau_steps: Option<usize>,
    #[arg(long, value_name = "MM")]
    pub crystal_length: Option<f64>,
    /// Inverse group-velocity difference of the crystal.
    #[arg(long, value_name = "FS_PER_MM", allow_hyphen_values = true)]
    pub dvg: Option<f64>,
    #[arg(long, value_name = "ETA")]
    pub eta_a: Option<f64>,
    #[arg(long, value_name = "ETA")]
    pub eta_b: Option<f64>,
    #[arg(long, value_name = "V")]
    pub visibility: Option<f64>,
    /// Antisymmetric exchange: the dip becomes a peak.
    #[arg(long)]
    pub fermion: bool,
    /// Also write an SVG plot.
    #[arg(long)]
    pub svg: bool,
    /// Pairs per delay point.
    #[arg(long, value_name = "N", conflicts_with = "duration")]
    pub pairs: Option<u64>,
    /// Seconds of acquisition per delay point.
    #[arg(long, value_name = "S")]
    pub duration: Option<f64>,
    /// Pairs per second at the beam splitter.
    #[arg(long, value_name = "HZ")]
    pub pair_rate: Option<f64>,
    /// Cross-coincidence window.
    #[arg(long, value_name = "NS")]
    pub window_ns: Option<u64>,
}

impl Common {
    fn as_overrides(&self) -> ConfigFile {
        ConfigFile {
            version: None,
            seed: self.seed,
            pair_rate_hz: self.pair_rate,
            pairs: self.pairs,
            duration_s: self.duration,
            tau_min_fs: self.tau_min,
            tau_max_fs: self.tau_max,
            tau_steps: self.tau_steps,
            crystal_length_mm: self.crystal_length,
            dvg_fs_per_mm: self.dvg,
            pump_nm: None,
            eta_a: self.eta_a,
            eta_b: self.eta_b,
            fwhm_ev: None,
            relax_window_us: None,
            visibility: self.visibility,
            fermion: self.fermion.then_some(true),
            window_ns: self.window_ns,
            out: self.out.clone(),
            svg: self.svg.then_some(true),
        }
    }

    /// Config file (if any) with the flags applied on top.
    pub fn merged(&self) -> Result<ConfigFile> {
        let base = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        Ok(base.overridden_by(&self.as_overrides()))
    }

    pub fn spec(&self) -> Result<ExperimentSpec> {
        ExperimentSpec::resolve(&self.merged()?)
    }
}

/// Runs a parsed command, writing progress to `log`. Returns the process
/// exit code.
pub fn execute(cli: Cli, log: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Theory(common) => theory(&common.spec()?, log).map(|_| 0),
        Command::Run(common) => run(&common.spec()?, log).map(|_| 0),
        Command::Analyze { common, files } => analyze(&common, &files, log).map(|_| 0),
        Command::Calibrate { common, files } => calibrate(&common, &files, log).map(|_| 0),
        Command::Selftest => Ok(if selftest::run(log) { 0 } else { 1 }),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn say(log: &mut dyn Write, msg: std::fmt::Arguments) {
    let _ = log.write_fmt(msg);
    let _ = log.write_all(b"\n");
}

pub fn theory(spec: &ExperimentSpec, log: &mut dyn Write) -> Result<Vec<CurveRow>> {
    let curve = sweep(&spec.crystal, &spec.taus, spec.sign, spec.visibility)?;
    let rows = curve_file::theory_rows(&curve);
    ensure_dir(&spec.out)?;
    let path = spec.out.join("theory.csv");
    write_atomic(&path, &curve_file::to_bytes(&rows))?;
    say(log, format_args!("wrote {} ({} delays)", path.display(), rows.len()));
    if spec.svg {
        let path = spec.out.join("theory.svg");
        let title = format!("{} theory, L·D = {} fs, v = {}", spec.sign.as_str(), spec.crystal.walkoff_fs(), spec.visibility);
        write_atomic(&path, svg::coincidence_plot(&title, Some(&rows), None).as_bytes())?;
        say(log, format_args!("wrote {}", path.display()));
    }
    Ok(rows)
}

/// File name for the run at `tau_fs` with `seed`.
pub fn event_file_name(tau_fs: f64, seed: u64) -> String {
    let tau = if tau_fs == 0.0 { 0.0 } else { tau_fs };
    format!("events_tau{tau:+.3}fs_seed{seed}.tsv")
}

/// Delay encoded in a name made by [`event_file_name`].
pub fn tau_from_file_name(path: &Path) -> Option<f64> {
    let name = path.file_name()?.to_str()?;
    let rest = name.split_once("_tau")?.1;
    rest.split_once("fs")?.0.parse().ok()
}

pub fn run(spec: &ExperimentSpec, log: &mut dyn Write) -> Result<Vec<PathBuf>> {
    ensure_dir(&spec.out)?;
    let paths = (0..spec.taus.len())
        .into_par_iter()
        .map(|i| {
            let config = spec.run_config(i);
            let stream = generate(&config)?;
            let path = spec.out.join(event_file_name(config.tau_fs, config.seed));
            write_atomic(&path, &event_file::to_bytes(&stream))?;
            Ok(path)
        })
        .collect::<Result<Vec<_>>>()?;
    for p in &paths {
        say(log, format_args!("wrote {}", p.display()));
    }
    Ok(paths)
}

struct Loaded {
    tau_fs: f64,
    counts: CountsSummary,
    header: Option<homsim_core::acquisition::RunConfig>,
}

fn load_counts(path: &Path, window_ns: u64) -> Result<Loaded> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parsed = event_file::read(std::io::BufReader::new(file)).map_err(|e| e.in_file(path))?;
    let mut counts = classify(&parsed.events, window_ns)?;
    let (tau_fs, header) = match parsed.header {
        Some((config, pairs)) => {
            counts.n_pairs_assumed = Some(pairs);
            (config.tau_fs, Some(config))
        }
        None => {
            let tau = tau_from_file_name(path).ok_or_else(|| {
                Error::Usage(format!(
                    "{}: no header and no delay in the file name (expected …_tau<FS>fs…)",
                    path.display()
                ))
            })?;
            (tau, None)
        }
    };
    Ok(Loaded { tau_fs, counts, header })
}

fn load_all(files: &[PathBuf], window_ns: u64) -> Result<Vec<Loaded>> {
    if files.is_empty() {
        return Err(Error::Usage("no event files given".into()));
    }
    files.par_iter().map(|p| load_counts(p, window_ns)).collect()
}

pub fn analyze(common: &Common, files: &[PathBuf], log: &mut dyn Write) -> Result<Vec<EstimatedPoint>> {
    let merged = common.merged()?;
    let spec = ExperimentSpec::resolve(&merged)?;
    let loaded = load_all(files, spec.window_ns)?;

    let mut points = Vec::with_capacity(loaded.len());
    for (l, path) in loaded.iter().zip(files) {
        let eta = |flag: Option<f64>, k: usize| {
            flag.or_else(|| l.header.as_ref().map(|h| h.detectors[k].eta())).ok_or_else(|| {
                Error::Usage(format!("{}: no header; give --eta-a and --eta-b", path.display()))
            })
        };
        let p = estimate(&l.counts, l.tau_fs, eta(merged.eta_a, 0)?, eta(merged.eta_b, 1)?)?;
        points.push(p);
    }
    points.sort_by(|a, b| a.tau_fs.total_cmp(&b.tau_fs));

    let rows: Vec<CurveRow> = points.iter().map(CurveRow::from).collect();
    ensure_dir(&spec.out)?;
    let path = spec.out.join("estimates.csv");
    write_atomic(&path, &curve_file::to_bytes(&rows))?;
    say(log, format_args!("{:>10} {:>22} {:>22} {:>22}", "tau_fs", "p20", "p02", "p11"));
    for p in &points {
        say(
            log,
            format_args!(
                "{:>10.3} {:>11.6} ± {:<8.6} {:>11.6} ± {:<8.6} {:>11.6} ± {:<8.6}{}",
                p.tau_fs,
                p.p20,
                p.p20_err,
                p.p02,
                p.p02_err,
                p.p11,
                p.p11_err,
                if p.degenerate { "  (zero count)" } else { "" }
            ),
        );
    }
    say(log, format_args!("wrote {}", path.display()));

    // theory for comparison: the first header's run, else the flags
    let (crystal, sign, visibility) = loaded
        .iter()
        .find_map(|l| l.header.as_ref())
        .map(|h| (h.crystal, h.sign, h.visibility))
        .unwrap_or((spec.crystal, spec.sign, spec.visibility));

    if points.len() >= MIN_FIT_POINTS {
        match fit_visibility(&points, TriangleGuess::from_crystal(&crystal)) {
            Ok(fit) => say(
                log,
                format_args!(
                    "fit: visibility {:.4} ± {:.4}, centre {:.2} fs, width {:.2} fs{}",
                    fit.visibility,
                    fit.visibility_err,
                    fit.center_fs,
                    fit.width_fs,
                    if fit.width_identifiable { "" } else { " (width not identifiable)" }
                ),
            ),
            Err(e) => say(log, format_args!("fit: {e}")),
        }
    }

    if spec.svg {
        let theory_rows = theory_overlay(&points, &crystal, sign, visibility)?;
        let path = spec.out.join("estimates.svg");
        let title = format!("measured vs theory, L·D = {} fs", crystal.walkoff_fs());
        write_atomic(&path, svg::coincidence_plot(&title, Some(&theory_rows), Some(&rows)).as_bytes())?;
        say(log, format_args!("wrote {}", path.display()));
    }
    Ok(points)
}

fn theory_overlay(
    points: &[EstimatedPoint],
    crystal: &CrystalConfig,
    sign: ExchangeSign,
    visibility: f64,
) -> Result<Vec<CurveRow>> {
    let lo = points.first().map_or(-1.0, |p| p.tau_fs);
    let hi = points.last().map_or(1.0, |p| p.tau_fs);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, lo + 1.0) };
    let taus = DelaySetting::linspace(lo, hi, 201)?;
    Ok(curve_file::theory_rows(&sweep(crystal, &taus, sign, visibility)?))
}

pub fn calibrate(common: &Common, files: &[PathBuf], log: &mut dyn Write) -> Result<homsim_core::analysis::Efficiencies> {
    let spec = common.spec()?;
    let loaded = load_all(files, spec.window_ns)?;
    let mut total = CountsSummary {
        window_ns: spec.window_ns,
        ..CountsSummary::default()
    };
    for l in &loaded {
        let c = &l.counts;
        total.singles_a += c.singles_a;
        total.singles_b += c.singles_b;
        total.doubles_a += c.doubles_a;
        total.doubles_b += c.doubles_b;
        total.cross += c.cross;
        total.photons_a += c.photons_a;
        total.photons_b += c.photons_b;
        if let Some(h) = &l.header {
            if h.tau_fs.abs() < h.crystal.dip_width_fs() {
                say(
                    log,
                    format_args!("warning: τ = {} fs lies inside the dip; calibration assumes distinguishable photons", h.tau_fs),
                );
            }
        }
    }
    let eff = klyshko_eta(&total)?;
    say(log, format_args!("eta_a = {:.5} ± {:.5}", eff.eta_a, eff.eta_a_err));
    say(log, format_args!("eta_b = {:.5} ± {:.5}", eff.eta_b, eff.eta_b_err));
    Ok(eff)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names_embed_delay_and_seed() {
        assert_eq!(event_file_name(-200.0, 7), "events_tau-200.000fs_seed7.tsv");
        assert_eq!(event_file_name(-0.0, 7), "events_tau+0.000fs_seed7.tsv");
        let p = PathBuf::from("x/events_tau+12.500fs_seed3.tsv");
        assert_eq!(tau_from_file_name(&p), Some(12.5));
        assert_eq!(tau_from_file_name(Path::new("plain.tsv")), None);
    }

    #[test]
    fn negative_delay_flags_parse() {
        let cli = Cli::try_parse_from(["homsim", "theory", "--tau-min", "-300", "--tau-max", "300"]).unwrap();
        let Command::Theory(c) = cli.command else { panic!() };
        assert_eq!(c.tau_min, Some(-300.0));
    }

    #[test]
    fn pairs_and_duration_conflict() {
        assert!(Cli::try_parse_from(["homsim", "run", "--pairs", "10", "--duration", "1"]).is_err());
    }
}
