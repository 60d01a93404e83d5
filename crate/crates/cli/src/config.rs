//! Flat `section.key = value` experiment configuration.
//!
//! Lines starting with `#` are comments, lists are comma separated, and
//! unknown keys are rejected. Every key has a default; the defaults describe
//! the baseline Burgers experiment.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rom_dwr::{InitialCondition, Scheme};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub n_grid: usize,
    pub length: f64,
    /// Viscosity at which snapshots are taken and bases are trained.
    pub viscosity: f64,
    pub ic_roots: [f64; 3],
    pub ic_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSection {
    pub t_final: f64,
    pub num_steps: usize,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PodSize {
    Modes(usize),
    Energy(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RomSection {
    pub pod_size: PodSize,
    pub deim_points: usize,
    pub adaptive: bool,
    pub alpha: f64,
    pub dwr_modes: usize,
    pub normalize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QoiSection {
    pub lower: f64,
    pub upper: f64,
}

/// Sweep lists. `alphas = None` means standard DEIM only.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub pod_dims: Vec<usize>,
    pub deim_points: Vec<usize>,
    pub alphas: Option<Vec<f64>>,
    pub viscosities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    pub newton_tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub time: TimeSection,
    pub rom: RomSection,
    pub qoi: QoiSection,
    pub sweep: SweepSection,
    pub solver: SolverSection,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ic = InitialCondition::default();
        Self {
            model: ModelSection {
                n_grid: 201,
                length: 1.0,
                viscosity: 0.1,
                ic_roots: ic.roots,
                ic_amplitude: ic.amplitude,
            },
            time: TimeSection {
                t_final: 1.0,
                num_steps: 201,
                scheme: Scheme::Implicit,
            },
            rom: RomSection {
                pod_size: PodSize::Modes(15),
                deim_points: 40,
                adaptive: false,
                alpha: 0.5,
                dwr_modes: 15,
                normalize: false,
            },
            qoi: QoiSection {
                lower: 0.05,
                upper: 0.1,
            },
            sweep: SweepSection {
                pod_dims: vec![5, 10, 12, 15, 20, 25, 30],
                deim_points: vec![40],
                alphas: None,
                viscosities: vec![0.1],
            },
            solver: SolverSection {
                newton_tol: 1e-10,
                max_iter: 50,
            },
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> CliResult<T> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {raw:?}")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> CliResult<Vec<T>> {
    if raw.trim().is_empty() {
        return Err(CliError::Config(format!("{key}: list is empty")));
    }
    raw.split(',').map(|item| parse_value(key, item)).collect()
}

fn parse_bool(key: &str, raw: &str) -> CliResult<bool> {
    match raw.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(CliError::Config(format!(
            "{key}: expected a boolean, got {other:?}"
        ))),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CliError::Config(format!("config file {} not found", path.display()))
            } else {
                CliError::io(path, e)
            }
        })?;
        text.parse()
    }

    fn set(&mut self, key: &str, raw: &str) -> CliResult<()> {
        match key {
            "model.n_grid" => self.model.n_grid = parse_value(key, raw)?,
            "model.length" => self.model.length = parse_value(key, raw)?,
            "model.viscosity" => self.model.viscosity = parse_value(key, raw)?,
            "model.ic_roots" => {
                let r: Vec<f64> = parse_list(key, raw)?;
                self.model.ic_roots = r
                    .try_into()
                    .map_err(|_| CliError::Config(format!("{key}: expected three roots")))?;
            }
            "model.ic_amplitude" => self.model.ic_amplitude = parse_value(key, raw)?,
            "time.t_final" => self.time.t_final = parse_value(key, raw)?,
            "time.num_steps" => self.time.num_steps = parse_value(key, raw)?,
            "time.scheme" => {
                self.time.scheme = raw
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("{key}: unknown scheme {raw:?}")))?
            }
            "rom.pod_dim" => self.rom.pod_size = PodSize::Modes(parse_value(key, raw)?),
            "rom.energy" => self.rom.pod_size = PodSize::Energy(parse_value(key, raw)?),
            "rom.deim_points" => self.rom.deim_points = parse_value(key, raw)?,
            "rom.adaptive" => self.rom.adaptive = parse_bool(key, raw)?,
            "rom.alpha" => self.rom.alpha = parse_value(key, raw)?,
            "rom.dwr_modes" => self.rom.dwr_modes = parse_value(key, raw)?,
            "rom.normalize" => self.rom.normalize = parse_bool(key, raw)?,
            "qoi.lower" => self.qoi.lower = parse_value(key, raw)?,
            "qoi.upper" => self.qoi.upper = parse_value(key, raw)?,
            "sweep.pod_dims" => self.sweep.pod_dims = parse_list(key, raw)?,
            "sweep.deim_points" => self.sweep.deim_points = parse_list(key, raw)?,
            "sweep.alphas" => self.sweep.alphas = Some(parse_list(key, raw)?),
            "sweep.viscosities" => self.sweep.viscosities = parse_list(key, raw)?,
            "solver.newton_tol" => self.solver.newton_tol = parse_value(key, raw)?,
            "solver.max_iter" => self.solver.max_iter = parse_value(key, raw)?,
            "output.dir" => self.output_dir = PathBuf::from(raw.trim()),
            "run.seed" => self.seed = parse_value(key, raw)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Range checks applied after parsing and after command-line overrides.
    pub fn validate(&self) -> CliResult<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        let positive = |name: &str, v: f64| -> CliResult<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        if self.model.n_grid < 4 {
            return fail(format!(
                "model.n_grid must be at least 4, got {}",
                self.model.n_grid
            ));
        }
        positive("model.length", self.model.length)?;
        positive("model.viscosity", self.model.viscosity)?;
        positive("model.ic_amplitude", self.model.ic_amplitude)?;
        positive("time.t_final", self.time.t_final)?;
        if self.time.num_steps == 0 {
            return fail("time.num_steps must be positive".into());
        }
        let ns = self.model.n_grid - 2;
        match self.rom.pod_size {
            PodSize::Modes(k) if k == 0 || k > ns => {
                return fail(format!("rom.pod_dim must be in 1..={ns}, got {k}"))
            }
            PodSize::Energy(g) if !(g > 0.0 && g <= 1.0) => {
                return fail(format!("rom.energy must be in (0, 1], got {g}"))
            }
            _ => {}
        }
        if self.rom.deim_points == 0 || self.rom.deim_points > ns {
            return fail(format!(
                "rom.deim_points must be in 1..={ns}, got {}",
                self.rom.deim_points
            ));
        }
        if !(0.0..=1.0).contains(&self.rom.alpha) {
            return fail(format!(
                "rom.alpha must be in [0, 1], got {}",
                self.rom.alpha
            ));
        }
        if self.rom.dwr_modes == 0 {
            return fail("rom.dwr_modes must be positive".into());
        }
        if !(self.qoi.lower <= self.qoi.upper) {
            return fail("qoi.lower must not exceed qoi.upper".into());
        }
        if let Some(a) = &self.sweep.alphas {
            if a.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return fail("sweep.alphas entries must be in [0, 1]".into());
            }
        }
        for &mu in &self.sweep.viscosities {
            positive("sweep.viscosities entry", mu)?;
        }
        positive("solver.newton_tol", self.solver.newton_tol)?;
        if self.solver.max_iter == 0 {
            return fail("solver.max_iter must be positive".into());
        }
        Ok(())
    }

    /// Sweep sizes depend on the grid, so they are only checked when a sweep
    /// actually runs. The defaults target the baseline grid.
    pub fn validate_sweep(&self) -> CliResult<()> {
        let ns = self.model.n_grid.saturating_sub(2);
        if self.sweep.pod_dims.iter().any(|&k| k == 0 || k > ns) {
            return Err(CliError::Config(format!(
                "sweep.pod_dims entries must be in 1..={ns}"
            )));
        }
        if self.sweep.deim_points.iter().any(|&m| m == 0 || m > ns) {
            return Err(CliError::Config(format!(
                "sweep.deim_points entries must be in 1..={ns}"
            )));
        }
        Ok(())
    }

    pub fn initial_condition(&self) -> InitialCondition {
        InitialCondition {
            roots: self.model.ic_roots,
            amplitude: self.model.ic_amplitude,
        }
    }
}

impl FromStr for ExperimentConfig {
    type Err = CliError;

    fn from_str(text: &str) -> CliResult<Self> {
        let mut config = Self::default();
        let mut seen = BTreeSet::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(CliError::Config(format!(
                    "line {}: duplicate key {key:?}",
                    lineno + 1
                )));
            }
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }
}
