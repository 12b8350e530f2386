use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_error, CliError, CliResult};
use crate::diagnostics::{Column, ControlVolume};
use crate::fields::{DiffusionParams, Force, Mode};
use crate::grid::Grid;

/// A declarative run description.
///
/// ```toml
/// name = "free_recoil"
/// mode = "recoil"
/// seed = 7
/// dt = 0.001
/// t_end = 2.0
///
/// [params]
/// D = 0.5
///
/// [grid]
/// x_min = -25.0
/// x_max = 25.0
/// n_points = 1024
///
/// [potential]
/// kind = "free"
///
/// [initial]
/// kind = "gaussian"
/// alpha = 1.0
///
/// [engines]
/// analytic = true
/// schrodinger = true
/// sde = { n_particles = 100000 }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub mode: Mode,
    /// Master seed of every random stream in the run.
    #[serde(default)]
    pub seed: u64,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between output rows; defaults to 1/100 of the run.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    pub params: ParamsSpec,
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub initial: InitialSpec,
    pub engines: EnginesSpec,
    #[serde(default)]
    pub outputs: Option<Vec<Column>>,
    /// Interval for the `momentum_rate` column.
    #[serde(default)]
    pub control_volume: Option<ControlVolume>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub friction: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

/// External field. In standard mode it defines the force, in recoil mode
/// the potential `Omega` the force would generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Free,
    /// Drift `-gamma x`; in recoil mode `Omega = gamma^2 x^2/2 - D gamma`.
    Harmonic { gamma: f64 },
    /// Polynomial force coefficients in increasing order.
    SmoluchowskiForce { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `rho ~ exp(-x^2/alpha^2)` at rest.
    Gaussian { alpha: f64 },
    /// Two-column `x,rho` CSV, interpolated onto the grid; relative paths
    /// resolve against the scenario file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnginesSpec {
    #[serde(default)]
    pub analytic: bool,
    #[serde(default)]
    pub schrodinger: bool,
    #[serde(default)]
    pub fokker_planck: bool,
    #[serde(default)]
    pub sde: Option<SdeSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeSpec {
    pub n_particles: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Analytic,
    Schrodinger,
    FokkerPlanck,
    Sde,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Analytic => "analytic",
            Engine::Schrodinger => "schrodinger",
            Engine::FokkerPlanck => "fokker_planck",
            Engine::Sde => "sde",
        })
    }
}

impl Scenario {
    /// Parse scenario text, applying `key.path=value` overrides first.
    pub fn parse(text: &str, overrides: &[String], origin: &Path) -> CliResult<Self> {
        let parse_error = |message: String| CliError::Parse { path: origin.to_path_buf(), message };
        let scenario: Scenario = if overrides.is_empty() {
            toml::from_str(text).map_err(|e| parse_error(e.to_string()))?
        } else {
            let mut table: toml::Table = toml::from_str(text).map_err(|e| parse_error(e.to_string()))?;
            for o in overrides {
                apply_override(&mut table, o)?;
            }
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| parse_error(e.to_string()))?
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path, overrides: &[String]) -> CliResult<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        let mut scenario = Self::parse(&text, overrides, path)?;
        if let InitialSpec::File { path: p } = &mut scenario.initial {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
            }
            if !p.is_file() {
                return Err(CliError::Invalid(format!("initial density file {} not found", p.display())));
            }
        }
        Ok((scenario, text))
    }

    pub fn engines(&self) -> Vec<Engine> {
        let e = &self.engines;
        [
            (e.analytic, Engine::Analytic),
            (e.schrodinger, Engine::Schrodinger),
            (e.fokker_planck, Engine::FokkerPlanck),
            (e.sde.is_some(), Engine::Sde),
        ]
        .into_iter()
        .filter_map(|(on, engine)| on.then_some(engine))
        .collect()
    }

    pub fn outputs(&self) -> Vec<Column> {
        self.outputs.clone().unwrap_or_else(|| Column::DEFAULT.to_vec())
    }

    pub fn diffusion_params(&self) -> CliResult<DiffusionParams> {
        DiffusionParams::new(self.params.d, self.params.mass, self.params.friction)
            .map_err(|e| CliError::Invalid(e.to_string()))
    }

    pub fn build_grid(&self) -> CliResult<Grid> {
        Grid::new(self.grid.x_min, self.grid.x_max, self.grid.n_points).map_err(|e| CliError::Invalid(e.to_string()))
    }

    /// The Smoluchowski force behind the potential section.
    pub fn force(&self) -> Force {
        match &self.potential {
            PotentialSpec::Free => Force::zero(),
            PotentialSpec::Harmonic { gamma } => Force::harmonic(gamma * self.params.mass * self.params.friction),
            PotentialSpec::SmoluchowskiForce { coefficients } => Force { coefficients: coefficients.clone() },
        }
    }

    fn validate(&self) -> CliResult<()> {
        let invalid = |m: String| Err(CliError::Invalid(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return invalid(format!("name `{}` is not a plain file stem", self.name));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return invalid(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.snapshot_every == Some(0) {
            return invalid("snapshot_every must be at least 1".into());
        }
        self.diffusion_params()?;
        self.build_grid()?;
        match &self.potential {
            PotentialSpec::Harmonic { gamma } if !(*gamma > 0.0) => {
                return invalid(format!("harmonic gamma must be positive, got {gamma}"));
            }
            _ => {}
        }
        if let InitialSpec::Gaussian { alpha } = self.initial {
            if !(alpha > 0.0) {
                return invalid(format!("gaussian alpha must be positive, got {alpha}"));
            }
        }
        let engines = self.engines();
        if engines.is_empty() {
            return invalid("no engine requested".into());
        }
        match self.mode {
            Mode::Recoil if self.engines.fokker_planck => {
                return invalid("fokker_planck integrates the standard process only; use mode = \"standard\"".into());
            }
            Mode::Standard if self.engines.schrodinger => {
                return invalid("schrodinger integrates the recoil process only; use mode = \"recoil\"".into());
            }
            _ => {}
        }
        if let Some(s) = self.engines.sde {
            if s.n_particles < 2 {
                return invalid(format!("sde needs at least 2 particles, got {}", s.n_particles));
            }
        }
        let outputs = self.outputs();
        if outputs.is_empty() {
            return invalid("outputs list is empty".into());
        }
        for (i, c) in outputs.iter().enumerate() {
            if outputs[..i].contains(c) {
                return invalid(format!("output `{}` listed twice", c.name()));
            }
        }
        if outputs.contains(&Column::MomentumRate) && self.control_volume.is_none() {
            return invalid("momentum_rate needs a [control_volume]".into());
        }
        if let Some(v) = self.control_volume {
            let grid = self.build_grid()?;
            if !(v.a < v.b && grid.contains(v.a) && grid.contains(v.b)) {
                return invalid(format!("control volume [{}, {}] is not inside the grid", v.a, v.b));
            }
        }
        Ok(())
    }
}

/// Set `dotted.key=value` in `table`. The value is read as a TOML literal
/// and falls back to a bare string.
fn apply_override(table: &mut toml::Table, assignment: &str) -> CliResult<()> {
    let bad = || CliError::Override(assignment.to_string());
    let (key, raw) = assignment.split_once('=').ok_or_else(bad)?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(bad());
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = path.split_last().unwrap();
    let mut node = table;
    for p in parents {
        node = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(bad)?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
name = "t"
mode = "standard"
dt = 0.01
t_end = 1.0

[params]
D = 0.5

[grid]
x_min = -10.0
x_max = 10.0
n_points = 256

[potential]
kind = "harmonic"
gamma = 1.0

[initial]
kind = "gaussian"
alpha = 1.0

[engines]
fokker_planck = true
"#;

    fn parse(text: &str, overrides: &[&str]) -> CliResult<Scenario> {
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        Scenario::parse(text, &o, Path::new("test.toml"))
    }

    #[test]
    fn parses_and_fills_defaults() {
        let s = parse(BASE, &[]).unwrap();
        assert_eq!(s.params.mass, 1.0);
        assert_eq!(s.potential, PotentialSpec::Harmonic { gamma: 1.0 });
        assert_eq!(s.engines(), vec![Engine::FokkerPlanck]);
        assert_eq!(s.outputs(), Column::DEFAULT.to_vec());
        assert_eq!(s.force().drift(2.0, &s.diffusion_params().unwrap()), -2.0);
    }

    #[test]
    fn overrides_replace_and_insert() {
        let s = parse(BASE, &["params.D=0.25", "engines.sde.n_particles=10", "name=other"]).unwrap();
        assert_eq!(s.params.d, 0.25);
        assert_eq!(s.engines.sde, Some(SdeSpec { n_particles: 10 }));
        assert_eq!(s.name, "other");
        assert!(matches!(parse(BASE, &["params.D"]), Err(CliError::Override(_))));
        assert!(matches!(parse(BASE, &["dt.x=1"]), Err(CliError::Override(_))));
    }

    #[test]
    fn unknown_keys_are_named_with_their_line() {
        let text = BASE.replace("D = 0.5", "D = 0.5\ndiffusion = 1.0");
        let err = parse(&text, &[]).unwrap_err().to_string();
        assert!(err.contains("diffusion") && err.contains("line"), "{err}");
    }

    #[test]
    fn engines_must_suit_the_mode() {
        assert!(matches!(parse(BASE, &["mode=recoil"]), Err(CliError::Invalid(_))));
        assert!(matches!(parse(BASE, &["engines.schrodinger=true"]), Err(CliError::Invalid(_))));
        assert!(parse(BASE, &["mode=recoil", "engines.fokker_planck=false", "engines.schrodinger=true"]).is_ok());
    }

    #[test]
    fn momentum_rate_needs_a_volume_inside_the_grid() {
        assert!(parse(BASE, &["outputs=['msd', 'momentum_rate']"]).is_err());
        assert!(parse(BASE, &["outputs=['msd', 'momentum_rate']", "control_volume={a=0.0, b=5.0}"]).is_ok());
        assert!(parse(BASE, &["control_volume={a=0.0, b=50.0}"]).is_err());
    }
}
