//! Scenario configuration: built-in defaults, then a named preset, then the
//! user's file, then command-line flags. Unknown keys are rejected at every
//! level.

use std::path::PathBuf;

use ionmod_core::dynamics::{DriftModel, GateModel, LeakagePhase, NoiseModel, PulseShape};
use ionmod_core::photonics::{ArmSpec, CouplerSpec, DeviceSpec, MziStage, Routing, Topology};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub device: DeviceConfig,
    pub map: MapConfig,
    pub rabi: RabiConfig,
    pub hist: HistConfig,
    pub noise: NoiseConfig,
    pub gst: GstConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            out: PathBuf::from("ionmod-out"),
            device: DeviceConfig::default(),
            map: MapConfig::default(),
            rabi: RabiConfig::default(),
            hist: HistConfig::default(),
            noise: NoiseConfig::default(),
            gst: GstConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingName {
    Straight,
    Crossed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyName {
    SeriesPair,
    TerminatedOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceConfig {
    /// Power splits of the couplers: stage 1 in, stage 1 out, stage 2 in, stage 2 out.
    pub splits: [f64; 4],
    pub coupler_loss_db: f64,
    pub arm_loss_db: f64,
    pub vpi: [f64; 2],
    pub bias_phase: [f64; 2],
    pub routing: RoutingName,
    pub topology: TopologyName,
    pub input_port: usize,
    pub designated_output: usize,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig {
            splits: [0.5; 4],
            coupler_loss_db: 0.0,
            arm_loss_db: 0.0,
            vpi: [24.0, 24.0],
            bias_phase: [0.0, 0.0],
            routing: RoutingName::Straight,
            topology: TopologyName::SeriesPair,
            input_port: 0,
            designated_output: 0,
        }
    }
}

impl DeviceConfig {
    pub fn spec(&self) -> DeviceSpec {
        let coupler = |split| CouplerSpec {
            power_split: split,
            insertion_loss_db: self.coupler_loss_db,
        };
        let stage = |k: usize| MziStage {
            input: coupler(self.splits[2 * k]),
            output: coupler(self.splits[2 * k + 1]),
            arms: ArmSpec {
                loss_db: self.arm_loss_db,
                bias_phase: self.bias_phase[k],
                vpi: self.vpi[k],
            },
        };
        DeviceSpec {
            stages: [stage(0), stage(1)],
            routing: match self.routing {
                RoutingName::Straight => Routing::Straight,
                RoutingName::Crossed => Routing::Crossed,
            },
            topology: match self.topology {
                TopologyName::SeriesPair => Topology::SeriesPair,
                TopologyName::TerminatedOutput => Topology::TerminatedOutput,
            },
            input_port: self.input_port,
            designated_output: self.designated_output,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        if self.points == 0 {
            return Err("grid needs at least one point".into());
        }
        if !(self.min.is_finite() && self.max.is_finite()) || (self.points > 1 && self.max <= self.min) {
            return Err(format!(
                "grid [{}, {}] must be finite and increasing",
                self.min, self.max
            ));
        }
        Ok(ionmod_core::photonics::linspace(self.min, self.max, self.points))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    pub v1: Grid,
    pub v2: Grid,
    /// Also search the voltage box for the best on/off pair.
    pub extinction: bool,
}

impl Default for MapConfig {
    fn default() -> Self {
        let g = Grid {
            min: -48.0,
            max: 48.0,
            points: 201,
        };
        MapConfig {
            v1: g,
            v2: g,
            extinction: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiConfig {
    pub t_pi_on_us: f64,
    pub extinction_db: f64,
    pub durations: Grid,
}

impl Default for RabiConfig {
    fn default() -> Self {
        RabiConfig {
            t_pi_on_us: 21.95,
            extinction_db: 38.7,
            durations: Grid {
                min: 0.0,
                max: 4000.0,
                points: 4001,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistConfig {
    pub pulses: usize,
    pub rise_us: f64,
    pub fall_us: f64,
    pub plateau_us: f64,
    /// Time between pulse starts, used to advance drift.
    pub period_us: f64,
}

impl Default for HistConfig {
    fn default() -> Self {
        HistConfig {
            pulses: 1000,
            rise_us: 0.3,
            fall_us: 0.5,
            plateau_us: 24.0,
            period_us: 1000.0,
        }
    }
}

impl HistConfig {
    pub fn pulse(&self) -> PulseShape {
        PulseShape {
            rise_time: self.rise_us,
            fall_time: self.fall_us,
            plateau: self.plateau_us,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftName {
    None,
    Mzm,
    Stabilized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakageName {
    /// Uniform draw per experiment from the seed.
    PerExperiment,
    /// `leakage_phase` for every sequence.
    Fixed,
    /// Gaussian steps of `leakage_walk_std` between sequences.
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub energy_jitter_rel: f64,
    pub drift: DriftName,
    pub leakage: LeakageName,
    pub leakage_phase: f64,
    pub leakage_walk_std: f64,
    /// `inf` disables dephasing.
    pub t2_us: f64,
    pub gap_us: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let n = NoiseModel::default();
        NoiseConfig {
            energy_jitter_rel: n.energy_jitter_rel,
            drift: DriftName::None,
            leakage: LeakageName::PerExperiment,
            leakage_phase: 0.0,
            leakage_walk_std: 0.0,
            // scenarios leave dephasing off unless asked; the unitary gate
            // model alone accounts for the reported error budget
            t2_us: f64::INFINITY,
            gap_us: n.gap,
        }
    }
}

impl NoiseConfig {
    pub fn model(&self) -> NoiseModel {
        NoiseModel {
            energy_jitter_rel: self.energy_jitter_rel,
            drift: match self.drift {
                DriftName::None => None,
                DriftName::Mzm => Some(DriftModel::mzm()),
                DriftName::Stabilized => Some(DriftModel::stabilized()),
            },
            leakage_phase: match self.leakage {
                LeakageName::PerExperiment => LeakagePhase::PerExperiment,
                LeakageName::Fixed => LeakagePhase::Fixed(self.leakage_phase),
                LeakageName::RandomWalk => LeakagePhase::RandomWalk {
                    step_std: self.leakage_walk_std,
                },
            },
            t2: (self.t2_us != f64::INFINITY).then_some(self.t2_us),
            gap: self.gap_us,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    Standard,
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GstConfig {
    /// Common √X/√Y angle error of the simulated device, rad.
    pub dtheta: f64,
    /// Off-state extinction during idle gates; `inf` for a perfect switch.
    pub extinction_db: f64,
    pub gate_duration_us: f64,
    pub max_power: u32,
    pub shots: u64,
    pub infinite_shots: bool,
    pub readout_error: f64,
    pub shot_overhead_us: f64,
    pub fits: Vec<FitKind>,
    pub intervals: bool,
    /// Overrides the optimizers' iteration budgets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
}

impl Default for GstConfig {
    fn default() -> Self {
        GstConfig {
            dtheta: 0.0,
            extinction_db: f64::INFINITY,
            gate_duration_us: ionmod_core::dynamics::DEFAULT_GATE_DURATION,
            max_power: 16,
            shots: 1000,
            infinite_shots: false,
            readout_error: 0.0,
            shot_overhead_us: 1000.0,
            fits: vec![FitKind::Standard, FitKind::Physical],
            intervals: true,
            max_iterations: None,
        }
    }
}

impl ScenarioConfig {
    pub fn truth(&self) -> GateModel {
        GateModel {
            dtheta: self.gst.dtheta,
            extinction_db: self.gst.extinction_db,
            duration: self.gst.gate_duration_us,
            noise: self.noise.model(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub const PRESETS: [&str; 5] = ["perfect", "imperfect", "ideal", "mzm", "aom"];

fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "perfect" => "[device]\nsplits = [0.5, 0.5, 0.5, 0.5]\n",
        "imperfect" => "[device]\nsplits = [0.4, 0.4, 0.4, 0.4]\n",
        "ideal" => {
            "[gst]\ndtheta = 0.0\nextinction_db = inf\n\
             [noise]\nenergy_jitter_rel = 0.0\ndrift = \"none\"\nleakage = \"fixed\"\nt2_us = inf\n"
        }
        "mzm" => {
            "[gst]\ndtheta = -0.0301\nextinction_db = 25.8\n\
             [noise]\ndrift = \"mzm\"\n\
             [rabi]\nextinction_db = 38.7\n"
        }
        "aom" => {
            "[gst]\ndtheta = 0.0\nextinction_db = 115.0\n\
             [noise]\ndrift = \"stabilized\"\n\
             [rabi]\nextinction_db = 115.0\n"
        }
        _ => return None,
    })
}

/// Recursively overlays `top` onto `base`; tables merge, everything else is replaced.
fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Builds the resolved configuration. Errors are user-facing messages.
pub fn resolve(
    preset: Option<&str>,
    file_text: Option<&str>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<ScenarioConfig, String> {
    let mut table = Table::new();
    if let Some(name) = preset {
        let text =
            preset_text(name).ok_or_else(|| format!("unknown preset `{name}` (available: {})", PRESETS.join(", ")))?;
        merge(&mut table, text.parse::<Table>().expect("preset parses"));
    }
    if let Some(text) = file_text {
        let user: Table = text.parse().map_err(|e| format!("config: {e}"))?;
        merge(&mut table, user);
    }
    let mut cfg: ScenarioConfig = Value::Table(table).try_into().map_err(|e| format!("config: {e}"))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.out = o;
    }
    Ok(cfg)
}
