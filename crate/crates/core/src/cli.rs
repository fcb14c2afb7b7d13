//! Command-line runs that emit figure data and provenance sidecars.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::algebra::{parse_key_values, verify_algebra};
use crate::dynamics::{
    evolve_series, leakage_gate, leakage_observables, make_propagator, truncation_doubling,
    TimeSeries, TruncationReport,
};
use crate::error::{Error, Result};
use crate::frames::{build_h_lab, composite_sigma_z, ModelParams, Sign};
use crate::hilbert::{number, parity, Space, StateVector, C64, GROUND};
use crate::partition::{driven_oscillator_h, reconcile, sector_leakage, Convention, SubspaceLabel};
use crate::states::{
    chain_inversion_series, gp_coherent_closed, gp_coherent_numeric, husimi_q,
    lab_reduced_first_mode, mean_n_closed_with, pumping_dim, reconcile_mean_n,
    sigma_z_lab_from_parity, CoherentParams, QGrid, LEAKAGE_GATE,
};

/// Doubling the truncation may move any reported sample by at most this much.
pub const DOUBLING_TOLERANCE: f64 = 1e-8;
/// Relative tolerance for accepting a closed-form reading.
pub const RECONCILE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "parabose",
    version,
    about = "Driven para-Bose oscillators in a two-mode trapped ion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Interior residuals of the para-Bose relations.
    Algebra(RunArgs),
    /// Projects the auxiliary Hamiltonians onto the sectors of index `--order-N`.
    Project(RunArgs),
    /// Evolves the para-Bose vacuum under the driven oscillator.
    Evolve(RunArgs),
    /// Coherent-state amplitudes at `--gt`.
    Coherent(RunArgs),
    /// Husimi Q grid of the lab-frame first mode at `--gt`.
    Husimi(RunArgs),
    /// Time series behind one panel of the dynamics figure.
    Fig1 {
        #[arg(long, value_enum)]
        panel: Panel,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Husimi Q grid behind the phase-space figure.
    Fig2(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub omega0: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long = "order-N")]
    pub order_n: Option<usize>,
    /// Fock truncation (per mode for composite runs).
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub gt: Option<f64>,
    #[arg(long)]
    pub range: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Panel {
    A,
    B,
    C,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Algebra,
    Project,
    Evolve,
    Coherent,
    Husimi,
    Fig1(Panel),
    Fig2,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommandKind::Algebra => f.write_str("algebra"),
            CommandKind::Project => f.write_str("project"),
            CommandKind::Evolve => f.write_str("evolve"),
            CommandKind::Coherent => f.write_str("coherent"),
            CommandKind::Husimi => f.write_str("husimi"),
            CommandKind::Fig1(p) => write!(f, "fig1{}", format!("{p:?}").to_lowercase()),
            CommandKind::Fig2 => f.write_str("fig2"),
        }
    }
}

/// A fully resolved, validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub params: ModelParams,
    pub order_n: usize,
    pub dim: usize,
    pub tmax: f64,
    pub samples: usize,
    pub gt: f64,
    pub range: f64,
    pub points: usize,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let (command, args) = match cli.command {
            Command::Algebra(a) => (CommandKind::Algebra, a),
            Command::Project(a) => (CommandKind::Project, a),
            Command::Evolve(a) => (CommandKind::Evolve, a),
            Command::Coherent(a) => (CommandKind::Coherent, a),
            Command::Husimi(a) => (CommandKind::Husimi, a),
            Command::Fig1 { panel, args } => (CommandKind::Fig1(panel), args),
            Command::Fig2(a) => (CommandKind::Fig2, a),
        };
        Self::resolve(command, &args)
    }

    /// Fills unset flags with the defaults of `command`.
    pub fn resolve(command: CommandKind, args: &RunArgs) -> Result<Self> {
        let pumped = matches!(
            command,
            CommandKind::Fig1(Panel::C | Panel::D)
                | CommandKind::Fig2
                | CommandKind::Husimi
                | CommandKind::Coherent
        );
        let (omega, g, tmax) = if pumped {
            (0.0, 1.0, 5.0)
        } else {
            (1.0, 0.1, 100.0)
        };
        let dim = match command {
            CommandKind::Algebra => 64,
            CommandKind::Project => 40,
            _ => 32,
        };
        let params = ModelParams::new(
            args.omega0.unwrap_or(0.0),
            args.omega.unwrap_or(omega),
            args.g.unwrap_or(g),
        )?;
        let config = RunConfig {
            command,
            params,
            order_n: args.order_n.unwrap_or(0),
            dim: args.dim.unwrap_or(dim),
            tmax: args.tmax.unwrap_or(tmax),
            samples: args.samples.unwrap_or(1000),
            gt: args.gt.unwrap_or(1.0),
            range: args.range.unwrap_or(4.0),
            points: args.points.unwrap_or(161),
            out: args
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(default_output(command))),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::InvalidConfig(format!(
                "--samples must be >= 2, got {}",
                self.samples
            )));
        }
        if !(self.tmax > 0.0) || !self.tmax.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "--tmax must be positive, got {}",
                self.tmax
            )));
        }
        if self.dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "--dim must be >= 2, got {}",
                self.dim
            )));
        }
        if !(self.gt >= 0.0) || !self.gt.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "--gt must be >= 0, got {}",
                self.gt
            )));
        }
        if !(self.range > 0.0) || !self.range.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "--range must be positive, got {}",
                self.range
            )));
        }
        if self.points < 3 || self.points % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "--points must be odd and >= 3, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn sidecar_path(&self) -> PathBuf {
        sidecar_path(&self.out)
    }
}

fn default_output(command: CommandKind) -> String {
    match command {
        CommandKind::Algebra | CommandKind::Project => format!("{command}.txt"),
        _ => format!("{command}.csv"),
    }
}

/// `<out>.provenance`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".provenance");
    PathBuf::from(name)
}

/// Ordered `key=value` record of everything a run depended on and measured.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    entries: BTreeMap<String, String>,
}

impl Provenance {
    pub fn insert(&mut self, key: &str, value: impl fmt::Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Parse(format!("missing key `{key}`")))?;
        raw.parse()
            .map_err(|_| Error::Parse(format!("bad value for `{key}`: {raw}")))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(Provenance {
            entries: parse_key_values(text)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    fn record_config(&mut self, config: &RunConfig) {
        self.insert("command", config.command);
        self.insert("omega", config.params.omega);
        self.insert("omega0", config.params.omega0);
        self.insert("g", config.params.g);
        self.insert("order_N", config.order_n);
        self.insert("order_p", 2 * (config.order_n + 1));
        self.insert("dim", config.dim);
    }

    fn record_time_grid(&mut self, config: &RunConfig) {
        self.insert("tmax", config.tmax);
        self.insert("samples", config.samples);
    }

    fn record_doubling(&mut self, report: &TruncationReport) {
        self.insert("doubling.dim", report.dim);
        self.insert("doubling.doubled_dim", report.doubled_dim);
        self.insert("doubling.max_change", format!("{:e}", report.max_change));
    }

    fn extend(&mut self, prefix: &str, text: &str) -> Result<()> {
        for (k, v) in parse_key_values(text)? {
            self.entries.insert(format!("{prefix}{k}"), v);
        }
        Ok(())
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Oscillator-frame vacuum evolution of sector `+, N`: columns `n`, `parity`,
/// `sigma_z_lab` and the leakage of the top eighth of the levels.
pub fn oscillator_series(
    params: &ModelParams,
    order_n: usize,
    dim: usize,
    times: &[f64],
) -> Result<TimeSeries> {
    let h = driven_oscillator_h(Sign::Plus, order_n, params, dim - 1, Convention::Projected)?;
    let prop = make_propagator(&h)?;
    let space = Space::Oscillator(dim);
    let vacuum = StateVector::basis(0, space)?;
    let mut observables = vec![
        ("n".to_string(), number(dim)?),
        ("parity".to_string(), parity(dim)?),
    ];
    observables.extend(leakage_observables(space, (dim / 8).max(1))?);
    sigma_z_lab_from_parity(&evolve_series(&prop, &vacuum, times, &observables)?)
}

/// Oscillator run accepted only if it passes the leakage gate and the doubling check.
pub fn gated_oscillator_series(
    params: &ModelParams,
    order_n: usize,
    dim: usize,
    times: &[f64],
) -> Result<(TimeSeries, TruncationReport, f64)> {
    let (series, report) = truncation_doubling(dim, DOUBLING_TOLERANCE, |d| {
        oscillator_series(params, order_n, d, times)
    })?;
    let leak = leakage_gate(&series, LEAKAGE_GATE)?;
    Ok((series, report, leak))
}

/// Full lab-frame evolution of `|0,0,g⟩`: columns `sigma_z_lab` and per-mode leakage.
pub fn lab_inversion_series(params: &ModelParams, d: usize, times: &[f64]) -> Result<TimeSeries> {
    let h = build_h_lab(params, d, d)?;
    let prop = make_propagator(&h)?;
    let psi0 = StateVector::composite_fock(0, 0, GROUND, d, d)?;
    let mut observables = vec![("sigma_z_lab".to_string(), composite_sigma_z(d, d)?)];
    observables.extend(leakage_observables(Space::Composite(d, d), (d / 8).max(1))?);
    evolve_series(&prop, &psi0, times, &observables)
}

/// Result of one run: the data file plus its provenance.
#[derive(Debug, Clone)]
pub enum RunData {
    Text(String),
    Series(TimeSeries),
    Amplitudes(Vec<C64>),
    Grid(QGrid),
}

pub fn execute(config: &RunConfig) -> Result<(RunData, Provenance)> {
    let mut prov = Provenance::default();
    prov.record_config(config);
    let times = || TimeSeries::uniform(config.tmax, config.samples);
    let data = match config.command {
        CommandKind::Algebra => {
            let report = verify_algebra(config.order_n, config.dim)?;
            prov.extend("algebra.", &report.to_string())?;
            prov.insert("algebra.passes_1e-12", report.passes(1e-12));
            RunData::Text(report.to_string())
        }
        CommandKind::Project => {
            let kmax = config.dim;
            let modes = kmax + 4 * config.order_n + 8;
            let mut text = String::new();
            for label in [
                SubspaceLabel::plus(config.order_n),
                SubspaceLabel::minus(config.order_n),
            ] {
                let rec = reconcile(label, &config.params, kmax, modes, modes)?;
                let leak = sector_leakage(label, &config.params, kmax, modes, modes)?;
                let key = format!("sector[{label}]");
                text.push_str(&format!(
                    "{key}.as_written_residual={:e}\n",
                    rec.as_written_residual
                ));
                text.push_str(&format!(
                    "{key}.parity_flipped_residual={:e}\n",
                    rec.parity_flipped_residual
                ));
                text.push_str(&format!(
                    "{key}.projected_residual={:e}\n",
                    rec.projected_residual
                ));
                text.push_str(&format!("{key}.chosen={}\n", rec.chosen));
                text.push_str(&format!("{key}.closure_leakage={leak:e}\n"));
            }
            prov.insert("kmax", kmax);
            prov.insert("mode_dim", modes);
            prov.extend("", &text)?;
            RunData::Text(text)
        }
        CommandKind::Evolve | CommandKind::Fig1(Panel::A) => {
            prov.record_time_grid(config);
            let (series, report, leak) =
                gated_oscillator_series(&config.params, config.order_n, config.dim, &times()?)?;
            prov.record_doubling(&report);
            prov.insert("leakage", format!("{leak:e}"));
            let peak = series.column("n")?.iter().copied().fold(0.0, f64::max);
            prov.insert("peak_n", peak);
            if config.params.omega != 0.0 {
                let boson_peak = 4.0 * config.params.g * config.params.g
                    / (config.params.omega * config.params.omega);
                prov.insert("boson_peak_n", boson_peak);
                prov.insert("peak_ratio", peak / boson_peak);
            }
            RunData::Series(series)
        }
        CommandKind::Fig1(Panel::B) => {
            prov.record_time_grid(config);
            let times = times()?;
            let lab = lab_inversion_series(&config.params, config.dim, &times)?;
            let leak = leakage_gate(&lab, LEAKAGE_GATE)?;
            prov.insert("frame", "lab");
            prov.insert("composite_dim", 2 * config.dim * config.dim);
            prov.insert("leakage", format!("{leak:e}"));
            if config.params.omega0 == 0.0 {
                let (osc, _, _) =
                    gated_oscillator_series(&config.params, config.order_n, config.dim, &times)?;
                let diff = lab.max_abs_diff(&osc, "sigma_z_lab")?;
                prov.insert("max_diff_vs_oscillator_parity", format!("{diff:e}"));
            }
            RunData::Series(lab)
        }
        CommandKind::Fig1(Panel::C) => {
            prov.record_time_grid(config);
            let times = times()?;
            let g = config.params.g;
            let gts: Vec<f64> = times.iter().map(|t| g * t).collect();
            let dim = config.dim.max(pumping_dim(g * config.tmax));
            let (series, report, leak) = gated_oscillator_series(&config.params, 0, dim, &times)?;
            prov.record_doubling(&report);
            prov.insert("oscillator_dim", dim);
            prov.insert("leakage", format!("{leak:e}"));
            let numeric = series.column("n")?;
            let window: Vec<usize> = (0..gts.len()).filter(|&i| gts[i] >= 0.1).collect();
            let rec = reconcile_mean_n(
                &window.iter().map(|&i| gts[i]).collect::<Vec<_>>(),
                &window.iter().map(|&i| numeric[i]).collect::<Vec<_>>(),
                RECONCILE_TOLERANCE,
            )?;
            prov.extend("reconcile.mean_n.", &rec.to_string())?;
            let closed = gts
                .iter()
                .map(|&x| mean_n_closed_with(rec.chosen, x))
                .collect::<Result<Vec<_>>>()?;
            let mut out = series.clone();
            out.push_column("n_closed", closed)?;
            RunData::Series(out)
        }
        CommandKind::Fig1(Panel::D) => {
            prov.record_time_grid(config);
            let times = times()?;
            let d = config.dim.max(pumping_dim(config.params.g * config.tmax));
            let guard = (d / 8).max(1);
            let (series, report) = truncation_doubling(d, DOUBLING_TOLERANCE, |dd| {
                chain_inversion_series(&config.params, dd, &times, guard)
            })?;
            prov.record_doubling(&report);
            let leak = leakage_gate(&series, LEAKAGE_GATE)?;
            prov.insert("frame", "crossed_coupling_chain");
            prov.insert("mode_dim", d);
            prov.insert("leakage", format!("{leak:e}"));
            RunData::Series(series)
        }
        CommandKind::Coherent => {
            let params = CoherentParams::new(config.order_n, config.gt)?;
            let dim = config.dim.max(params.min_dim());
            let psi = gp_coherent_numeric(params, dim)?;
            prov.insert("gt", config.gt);
            prov.insert("coherent_dim", dim);
            prov.insert("norm", psi.norm_sqr());
            if config.order_n == 0 {
                let jmax = (2.0 * config.gt * config.gt + 10.0).ceil() as usize;
                let closed = gp_coherent_closed(config.gt, jmax)?;
                let len = psi.dim().min(closed.dim());
                let diff = (0..len).fold(0.0_f64, |m, k| {
                    m.max((psi.amps()[k] - closed.amps()[k]).norm())
                });
                prov.insert("max_diff_vs_closed_form", format!("{diff:e}"));
            }
            RunData::Amplitudes(psi.amps().to_vec())
        }
        CommandKind::Husimi | CommandKind::Fig2 => {
            let gt = if config.command == CommandKind::Fig2 {
                1.0
            } else {
                config.gt
            };
            if config.order_n != 0 {
                return Err(Error::InvalidConfig(
                    "the lab-frame Husimi grid is available for --order-N 0 only".into(),
                ));
            }
            let rho = lab_reduced_first_mode(gt, config.dim)?;
            let grid = husimi_q(&rho, config.range, config.points)?;
            prov.insert("gt", gt);
            prov.insert("range", config.range);
            prov.insert("points", config.points);
            prov.insert("integral", grid.integral());
            prov.insert("anisotropy", grid.anisotropy());
            let (x, y) = grid.peak();
            prov.insert("peak_re", x);
            prov.insert("peak_im", y);
            RunData::Grid(grid)
        }
    };
    Ok((data, prov))
}

/// Writes `k,re,im` rows.
pub fn write_amplitudes(path: &Path, amps: &[C64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "re", "im"])?;
    for (k, z) in amps.iter().enumerate() {
        w.write_record([k.to_string(), format!("{:?}", z.re), format!("{:?}", z.im)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_amplitudes(path: &Path) -> Result<Vec<C64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::Parse(format!("short row {row}")))
        };
        let k: usize = field(0)?
            .parse()
            .map_err(|_| Error::Parse(format!("bad level in row {row}")))?;
        if k != row {
            return Err(Error::Parse(format!("levels out of order at row {row}")));
        }
        let re: f64 = field(1)?
            .parse()
            .map_err(|_| Error::Parse(format!("bad re in row {row}")))?;
        let im: f64 = field(2)?
            .parse()
            .map_err(|_| Error::Parse(format!("bad im in row {row}")))?;
        out.push(C64::new(re, im));
    }
    Ok(out)
}

/// Runs `config`, writing the data file and its sidecar. Returns both paths.
pub fn run(config: &RunConfig) -> Result<(PathBuf, PathBuf)> {
    let (data, prov) = execute(config)?;
    let out = &config.out;
    match &data {
        RunData::Text(text) => std::fs::write(out, text)?,
        RunData::Series(series) => series.save(out)?,
        RunData::Amplitudes(amps) => write_amplitudes(out, amps)?,
        RunData::Grid(grid) => grid.save(out)?,
    }
    let sidecar = config.sidecar_path();
    prov.save(&sidecar)?;
    log::info!("wrote {} and {}", out.display(), sidecar.display());
    Ok((out.clone(), sidecar))
}
