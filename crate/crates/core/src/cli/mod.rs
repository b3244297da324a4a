//! Command-line front end: `ymh run`, `ymh gauge-fix`, `ymh render`.
//!
//! Exit codes: 0 on success, 1 for bad input (usage, config, snapshot,
//! I/O or a failed run), 2 when the flow produced non-finite values.

pub mod config;
pub mod presets;
pub mod render;
pub mod snapshot;

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::diagnostics::{bubble_account, SingularEvent, TimeSeriesRow};
use crate::energy::TensionPair;
use crate::error::Error;
use crate::fields::{apply_gauge, holonomy, holonomy_raw, FlowState};
use crate::flow::{run, Monitor, RunReport};
use crate::gauge::{coulomb_fix, is_pure_gauge};

use config::{InitialData, RunConfig};
use render::FieldSelector;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NON_FINITE: i32 = 2;

/// Tolerance for the pure-gauge verdict of `gauge-fix`.
const PURE_GAUGE_TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "ymh", version, about = "Abelian Yang-Mills-Higgs gradient flow on a flat torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the flow described by a config file
    Run { config: PathBuf },
    /// Move a snapshot into the Coulomb gauge
    GaugeFix { input: PathBuf, output: PathBuf },
    /// Render a snapshot field as a PGM image
    Render {
        input: PathBuf,
        output: PathBuf,
        /// density, curvature or moment
        #[arg(long, default_value = "density")]
        field: String,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::GaugeFix { input, output } => cmd_gauge_fix(&input, &output),
        Command::Render { input, output, field } => cmd_render(&input, &output, &field),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("ymh: {}", e.message);
            e.code
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFiniteField(_) => EXIT_NON_FINITE,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::input(format!("{}: {e}", path.display()))
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it over
/// `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

pub fn read_snapshot(path: &Path) -> Result<FlowState, CliError> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    snapshot::decode(&bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn write_snapshot(path: &Path, state: &FlowState) -> Result<(), CliError> {
    atomic_write(path, &snapshot::encode(state)).map_err(|e| io_error(path, e))
}

/// Initial state described by `cfg`.
pub fn initial_state(cfg: &RunConfig) -> Result<FlowState, CliError> {
    match &cfg.initial {
        InitialData::Snapshot(path) => {
            let s = read_snapshot(path)?;
            if s.spec() != &cfg.spec || s.model() != &cfg.model {
                return Err(CliError::input(format!(
                    "{}: grid or fiber differs from the config",
                    path.display()
                )));
            }
            Ok(s)
        }
        InitialData::Preset { name, params } => {
            presets::build(name, params, cfg.spec, cfg.model, cfg.seed).map_err(|e| CliError::input(e.to_string()))
        }
    }
}

/// Writes `snap_<step>.ymh` every `every` accepted steps.
struct SnapshotWriter {
    dir: PathBuf,
    every: usize,
    steps: usize,
    error: Option<CliError>,
}

impl Monitor for SnapshotWriter {
    fn observe(&mut self, _prev: &FlowState, current: &FlowState, _dt: f64, _t: &TensionPair) {
        self.steps += 1;
        if self.error.is_some() || self.steps % self.every != 0 {
            return;
        }
        let path = self.dir.join(format!("snap_{:08}.ymh", self.steps));
        if let Err(e) = write_snapshot(&path, current) {
            self.error = Some(e);
        }
    }
}

pub fn series_csv(rows: &[TimeSeriesRow]) -> String {
    let mut s = String::from(TimeSeriesRow::HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

/// One block per event; empty when there are none.
pub fn events_text(events: &[SingularEvent]) -> String {
    let mut s = String::new();
    for (k, e) in events.iter().enumerate() {
        let _ = writeln!(s, "[event {k}]");
        let _ = writeln!(s, "time = {:.16e}", e.time);
        let _ = writeln!(s, "onset = {:.16e}", e.onset);
        let _ = writeln!(s, "location = {} {}", e.location.0, e.location.1);
        let _ = writeln!(s, "scale = {:.16e}", e.scale);
        let _ = writeln!(s, "energy_before = {:.16e}", e.energy_before);
        let _ = writeln!(s, "energy_after = {:.16e}", e.energy_after);
        let _ = writeln!(s, "bubble_energy = {:.16e}", e.bubble_energy);
        let _ = writeln!(s, "quanta = {:.16e}", e.quanta);
        let sites: Vec<String> = e.sites.iter().map(|(i, j)| format!("{i} {j}")).collect();
        let _ = writeln!(s, "sites = {}", sites.join(", "));
        s.push('\n');
    }
    s
}

pub fn report_text(report: &RunReport, alpha_m: f64) -> String {
    let acc = bubble_account(
        &report.events,
        report.initial_energy.total,
        report.final_energy.total,
        report.dissipated,
        alpha_m,
    );
    let mut s = String::new();
    let _ = writeln!(s, "steps = {}", report.steps);
    let _ = writeln!(s, "final_time = {:.16e}", report.final_state.time);
    let _ = writeln!(s, "final_tension = {:.16e}", report.final_tension);
    s.push_str(&acc.render());
    s
}

pub fn cmd_run(path: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(path).map_err(|e| CliError::input(e.to_string()))?;
    let initial = initial_state(&cfg)?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;

    let mut writer = SnapshotWriter {
        dir: out.clone(),
        every: cfg.snapshot_every,
        steps: 0,
        error: None,
    };
    let report = if cfg.snapshot_every > 0 {
        run(&initial, &cfg.integrator, &cfg.monitors, &mut [&mut writer])?
    } else {
        run(&initial, &cfg.integrator, &cfg.monitors, &mut [])?
    };
    if let Some(e) = writer.error {
        return Err(e);
    }

    let files = [
        ("series.csv", series_csv(&report.series).into_bytes()),
        ("events.txt", events_text(&report.events).into_bytes()),
        ("report.txt", report_text(&report, cfg.monitors.alpha_m).into_bytes()),
        ("final.ymh", snapshot::encode(&report.final_state)),
    ];
    for (name, bytes) in files {
        let p = out.join(name);
        atomic_write(&p, &bytes).map_err(|e| io_error(&p, e))?;
    }
    Ok(())
}

pub fn gauge_fix_report(state: &FlowState) -> Result<(FlowState, String), CliError> {
    let fix = coulomb_fix(&state.gauge)?;
    let fixed = apply_gauge(&fix.transform, state)?;
    let pure = is_pure_gauge(&state.gauge, PURE_GAUGE_TOL)?;
    let hol = holonomy(&state.gauge);
    let raw = holonomy_raw(&state.gauge);
    let mut s = String::new();
    let _ = writeln!(s, "residual = {:.16e}", fix.residual);
    let _ = writeln!(s, "harmonic_part = {:.16e} {:.16e}", fix.harmonic_part.0, fix.harmonic_part.1);
    let _ = writeln!(s, "holonomy = {:.16e} {:.16e}", hol.0, hol.1);
    let _ = writeln!(s, "holonomy_raw = {:.16e} {:.16e}", raw.0, raw.1);
    let _ = writeln!(s, "curvature_norm = {:.16e}", pure.curvature_norm);
    let _ = writeln!(s, "pure_gauge = {}", pure.pure);
    if pure.pure {
        let _ = writeln!(s, "winding = {} {}", pure.winding.0, pure.winding.1);
    } else {
        let _ = writeln!(s, "winding = none");
    }
    let _ = writeln!(s, "h1_constant = {:.16e}", fix.h1_constant());
    Ok((fixed, s))
}

pub fn cmd_gauge_fix(input: &Path, output: &Path) -> Result<(), CliError> {
    let state = read_snapshot(input)?;
    let (fixed, report) = gauge_fix_report(&state)?;
    write_snapshot(output, &fixed)?;
    let mut report_path = output.as_os_str().to_owned();
    report_path.push(".report.txt");
    let report_path = PathBuf::from(report_path);
    atomic_write(&report_path, report.as_bytes()).map_err(|e| io_error(&report_path, e))?;
    print!("{report}");
    Ok(())
}

pub fn cmd_render(input: &Path, output: &Path, field: &str) -> Result<(), CliError> {
    let selector: FieldSelector = field.parse().map_err(CliError::input)?;
    let state = read_snapshot(input)?;
    let img = render::to_pgm(&render::select(&state, selector));
    atomic_write(output, &img).map_err(|e| io_error(output, e))
}
