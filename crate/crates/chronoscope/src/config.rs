//! Scenario configuration: a JSON schema that names the state, window,
//! gate, and axes for one pipeline run, validated before any computation.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ChronoError, Result};
use crate::grid::{Axis, FrequencyGrid};
use crate::interferometer::{Gate, GateKernel};
use crate::state::{
    chirped_gaussian_state, constant_window, gaussian_state, gaussian_window,
    hamming_window, hermite_gauss_state, mix_states, qudit_comb_state, PureState,
    State, Window,
};

pub const MIN_AXIS_COUNT: usize = 8;
pub const MAX_AXIS_COUNT: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Wigner,
    PseudoWigner,
    Spectrogram,
    HomMap,
    Retrieve,
    Reconstruct,
    Figure3,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Scenario::Wigner => "wigner",
            Scenario::PseudoWigner => "pseudo_wigner",
            Scenario::Spectrogram => "spectrogram",
            Scenario::HomMap => "hom_map",
            Scenario::Retrieve => "retrieve",
            Scenario::Reconstruct => "reconstruct",
            Scenario::Figure3 => "figure3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub count: usize,
    pub center: f64,
    pub span: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.count, self.center, self.span)
    }
}

/// A pure spectral amplitude by family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PureSpec {
    Gaussian {
        center: f64,
        width: f64,
    },
    ChirpedGaussian {
        center: f64,
        width: f64,
        chirp: f64,
    },
    HermiteGauss {
        order: usize,
        center: f64,
        width: f64,
    },
    QuditComb {
        half_d: usize,
        spacing: f64,
        kappa: f64,
        peak_width: f64,
    },
}

impl PureSpec {
    pub fn build(&self, grid: FrequencyGrid) -> Result<PureState> {
        match *self {
            PureSpec::Gaussian { center, width } => gaussian_state(grid, center, width),
            PureSpec::ChirpedGaussian {
                center,
                width,
                chirp,
            } => chirped_gaussian_state(grid, center, width, chirp),
            PureSpec::HermiteGauss {
                order,
                center,
                width,
            } => hermite_gauss_state(grid, order, center, width),
            PureSpec::QuditComb {
                half_d,
                spacing,
                kappa,
                peak_width,
            } => qudit_comb_state(grid, half_d, spacing, kappa, peak_width),
        }
    }
}

/// Pure state or statistical mixture of pure components.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Pure(PureSpec),
    Mixture {
        components: Vec<PureSpec>,
        weights: Vec<f64>,
    },
}

impl StateSpec {
    pub fn build(&self, grid: FrequencyGrid) -> Result<State> {
        match self {
            StateSpec::Pure(p) => Ok(State::Pure(p.build(grid)?)),
            StateSpec::Mixture {
                components,
                weights,
            } => {
                if components.is_empty() || components.len() != weights.len() {
                    return Err(ChronoError::Config(format!(
                        "mixture has {} components and {} weights",
                        components.len(),
                        weights.len()
                    )));
                }
                let pures = components
                    .iter()
                    .map(|c| c.build(grid))
                    .collect::<Result<Vec<_>>>()?;
                Ok(State::Mixed(mix_states(weights, &pures)?))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WindowSpec {
    Hamming { span: f64 },
    Gaussian { width: f64 },
    Constant,
}

impl WindowSpec {
    pub fn build(&self, grid: FrequencyGrid) -> Result<Window> {
        match *self {
            WindowSpec::Hamming { span } => hamming_window(grid, span),
            WindowSpec::Gaussian { width } => gaussian_window(grid, width),
            WindowSpec::Constant => constant_window(grid),
        }
    }
}

/// Gate selection for the coincidence pipeline. The separable kernel's
/// factors are Gaussian transmission profiles, which covers the
/// finite-bandwidth scenarios the runner exposes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateSpec {
    FreqBs,
    Cx,
    None,
    SeparableKernel { plus_width: f64, minus_width: f64 },
}

impl GateSpec {
    pub fn build(&self) -> Gate {
        match *self {
            GateSpec::FreqBs => Gate::FreqBs,
            GateSpec::Cx => Gate::Cx,
            GateSpec::None => Gate::None,
            GateSpec::SeparableKernel {
                plus_width,
                minus_width,
            } => {
                let gp = move |w: f64| Complex64::new((-w * w / (2.0 * plus_width * plus_width)).exp(), 0.0);
                let gm = move |w: f64| {
                    Complex64::new((-w * w / (2.0 * minus_width * minus_width)).exp(), 0.0)
                };
                Gate::Kernel(GateKernel::separable(gp, gm))
            }
        }
    }

    /// The U_minus factor of a separable kernel, needed by recovery checks.
    pub fn u_minus(&self) -> Option<crate::state::Eval> {
        match *self {
            GateSpec::SeparableKernel { minus_width, .. } => {
                Some(Arc::new(move |w: f64| {
                    Complex64::new((-w * w / (2.0 * minus_width * minus_width)).exp(), 0.0)
                }))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AxisSpec {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn build(&self, label: &str) -> Result<Axis> {
        if self.count < MIN_AXIS_COUNT || self.count > MAX_AXIS_COUNT {
            return Err(ChronoError::Config(format!(
                "{label} axis count {} outside [{MIN_AXIS_COUNT}, {MAX_AXIS_COUNT}]",
                self.count
            )));
        }
        if !(self.step > 0.0) || !self.step.is_finite() || !self.start.is_finite() {
            return Err(ChronoError::Config(format!(
                "{label} axis has non-finite or non-positive step"
            )));
        }
        Ok(Axis {
            start: self.start,
            step: self.step,
            count: self.count,
        })
    }
}

/// Explicit (tau, mu) axes; scenarios fall back to the grid's dual pair
/// when omitted.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AxesSpec {
    pub tau: AxisSpec,
    pub mu: AxisSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Figure3Spec {
    pub resolution: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_half_d")]
    pub half_d: usize,
    /// Comb spacing; defaults to grid span / 16.
    #[serde(default)]
    pub comb_spacing: Option<f64>,
    /// Window span in frequency; defaults scale inversely with resolution.
    #[serde(default)]
    pub window_span: Option<f64>,
}

fn default_kappa() -> f64 {
    0.1
}

fn default_half_d() -> usize {
    6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub state: Option<StateSpec>,
    /// Second photon at the beam splitter (hom_map); the first is `state`.
    #[serde(default)]
    pub reference: Option<PureSpec>,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub gate: Option<GateSpec>,
    #[serde(default)]
    pub axes: Option<AxesSpec>,
    #[serde(default)]
    pub figure3: Option<Figure3Spec>,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ChronoError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| ChronoError::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Schema validation before any computation runs.
    pub fn validate(&self) -> Result<()> {
        let need = |field: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(ChronoError::Config(format!(
                    "scenario {} requires the {field} field",
                    self.scenario
                )))
            }
        };
        match self.scenario {
            Scenario::Figure3 => {
                let f = self.figure3.as_ref();
                need("figure3", f.is_some())?;
                let f = f.unwrap();
                if f.resolution != 256 && f.resolution != 1024 {
                    return Err(ChronoError::Config(format!(
                        "figure3 resolution must be 256 or 1024, got {}",
                        f.resolution
                    )));
                }
                if !(f.kappa > 0.0) || f.half_d == 0 {
                    return Err(ChronoError::Config(
                        "figure3 needs kappa > 0 and half_d >= 1".into(),
                    ));
                }
                return Ok(());
            }
            Scenario::Wigner | Scenario::Reconstruct => {
                need("grid", self.grid.is_some())?;
                need("state", self.state.is_some())?;
            }
            Scenario::PseudoWigner | Scenario::Spectrogram | Scenario::Retrieve => {
                need("grid", self.grid.is_some())?;
                need("state", self.state.is_some())?;
                need("window", self.window.is_some())?;
            }
            Scenario::HomMap => {
                need("grid", self.grid.is_some())?;
                need("state", self.state.is_some())?;
                need("reference", self.reference.is_some())?;
                need("gate", self.gate.is_some())?;
            }
        }
        if let Some(g) = &self.grid {
            if g.count < MIN_AXIS_COUNT || g.count > MAX_AXIS_COUNT {
                return Err(ChronoError::Config(format!(
                    "grid count {} outside [{MIN_AXIS_COUNT}, {MAX_AXIS_COUNT}]",
                    g.count
                )));
            }
            g.build()?;
        }
        if let Some(a) = &self.axes {
            a.tau.build("tau")?;
            a.mu.build("mu")?;
        }
        Ok(())
    }
}
