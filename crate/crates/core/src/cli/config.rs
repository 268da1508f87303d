//! Run configuration: one TOML file with a section per concern, every field
//! defaulted, unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::IntegratorConfig;
use crate::effective::ModelParams;
use crate::error::{Error, Result};
use crate::experiments::{SweepModel, SweepProtocol, ValidityScenario};
use crate::phase_space::PhasePoint;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub model: ModelSection,
    pub integrator: IntegratorSection,
    pub grid: GridSection,
    pub spectrum: SpectrumSection,
    pub quantum: QuantumSection,
    pub portrait: PortraitSection,
    pub evolve: EvolveSection,
    pub sweep: SweepSection,
    pub trapping: TrappingSection,
    pub validity: ValiditySection,
    /// Filled in when the config is written next to run outputs; ignored on input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub command: String,
    pub version: String,
}

/// Physical parameters; the drive is given either as `A` or as `drive_ratio = A/ω`,
/// defaulting to `drive_ratio = DEFAULT_DRIVE_RATIO` when both are absent.
pub const DEFAULT_DRIVE_RATIO: f64 = 1.42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub gamma: f64,
    pub delta0: f64,
    pub c: f64,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive_ratio: Option<f64>,
    pub omega: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            delta0: 0.2,
            c: 1.0,
            amplitude: None,
            drive_ratio: None,
            omega: 20.0,
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams> {
        let amplitude = match (self.amplitude, self.drive_ratio) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either model.A or model.drive_ratio, not both".into(),
                ))
            }
            (Some(a), None) => a,
            (None, Some(r)) => r * self.omega,
            (None, None) => DEFAULT_DRIVE_RATIO * self.omega,
        };
        let p = ModelParams {
            gamma: self.gamma,
            delta0: self.delta0,
            c: self.c,
            amplitude,
            omega: self.omega,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    /// Fixed step; derived from the parameters when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub steps_per_natural: u32,
    pub norm_tol: f64,
    /// Stored-sample stride; derived from `max_samples` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<usize>,
    pub max_samples: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            dt: None,
            steps_per_natural: 200,
            norm_tol: IntegratorConfig::default().norm_tol,
            sample_every: None,
            max_samples: 20_000,
        }
    }
}

impl IntegratorSection {
    /// Applies explicit settings on top of a derived configuration.
    pub fn apply(&self, mut base: IntegratorConfig, t_span: f64) -> IntegratorConfig {
        if let Some(dt) = self.dt {
            base.dt = dt;
        }
        base.norm_tol = self.norm_tol;
        base.sample_every = match self.sample_every {
            Some(n) => n,
            None => {
                let steps = (t_span / base.dt).ceil() as usize;
                steps.div_ceil(self.max_samples.max(1)).max(1)
            }
        };
        base
    }

    fn validate(&self) -> Result<()> {
        if self.steps_per_natural < 100 {
            return Err(Error::Config(format!(
                "integrator.steps_per_natural must be >= 100, got {}",
                self.steps_per_natural
            )));
        }
        if self.norm_tol.is_nan() || self.norm_tol <= 0.0 {
            return Err(Error::Config("integrator.norm_tol must be > 0".into()));
        }
        if self.sample_every == Some(0) || self.max_samples == 0 {
            return Err(Error::Config("integrator sampling must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub n_gamma: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            gamma_min: -2.0,
            gamma_max: 2.0,
            n_gamma: 401,
        }
    }
}

impl GridSection {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.gamma_min.is_finite() && self.gamma_max.is_finite())
            || self.gamma_max <= self.gamma_min
        {
            return Err(Error::Config(
                "grid needs finite gamma_min < gamma_max".into(),
            ));
        }
        if self.n_gamma < 2 {
            return Err(Error::Config("grid.n_gamma must be >= 2".into()));
        }
        let step = (self.gamma_max - self.gamma_min) / (self.n_gamma - 1) as f64;
        Ok((0..self.n_gamma)
            .map(|k| self.gamma_min + step * k as f64)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub include_quantum: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumSection {
    pub n_particles: usize,
}

impl Default for QuantumSection {
    fn default() -> Self {
        Self { n_particles: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PortraitSection {
    pub n_s: usize,
    pub n_phi: usize,
    /// Number of evenly spaced contour levels.
    pub levels: usize,
    pub separatrices: bool,
}

impl Default for PortraitSection {
    fn default() -> Self {
        Self {
            n_s: 200,
            n_phi: 400,
            levels: 24,
            separatrices: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Lab,
    Rotating,
    Effective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub frame: Frame,
    pub t_final: f64,
    pub s0: f64,
    pub phi0: f64,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            frame: Frame::Rotating,
            t_final: 100.0,
            s0: -1.0,
            phi0: 0.0,
        }
    }
}

impl EvolveSection {
    pub fn initial(&self) -> Result<PhasePoint> {
        initial_point(self.s0, self.phi0, "evolve")
    }
}

fn initial_point(s0: f64, phi0: f64, section: &str) -> Result<PhasePoint> {
    if !(s0.abs() <= 1.0 && phi0.is_finite()) {
        return Err(Error::Config(format!(
            "{section}.s0 must lie in [-1, 1] and phi0 be finite"
        )));
    }
    Ok(PhasePoint::new(s0, phi0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub gamma_start: f64,
    pub gamma_end: f64,
    pub rate: f64,
    pub model: SweepModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ramp: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            gamma_start: -5.0,
            gamma_end: 5.0,
            rate: SweepProtocol::DEFAULT_RATE,
            model: SweepModel::Effective,
            ramp: None,
        }
    }
}

impl SweepSection {
    pub fn protocol(&self, seed: u64) -> SweepProtocol {
        SweepProtocol {
            gamma_start: self.gamma_start,
            gamma_end: self.gamma_end,
            rate: self.rate,
            model: self.model,
            ramp: self.ramp,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrappingSection {
    pub gamma_start: f64,
    pub gamma_end: f64,
    pub rate: f64,
    pub model: SweepModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ramp: Option<f64>,
    pub ensemble_size: usize,
    pub perturbation: f64,
}

impl Default for TrappingSection {
    fn default() -> Self {
        Self {
            gamma_start: -5.0,
            gamma_end: 0.0,
            rate: 1e-3,
            model: SweepModel::Effective,
            ramp: None,
            ensemble_size: 50,
            perturbation: 1e-3,
        }
    }
}

impl TrappingSection {
    pub fn protocol(&self, seed: u64) -> SweepProtocol {
        SweepProtocol {
            gamma_start: self.gamma_start,
            gamma_end: self.gamma_end,
            rate: self.rate,
            model: self.model,
            ramp: self.ramp,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValiditySection {
    pub multipliers: Vec<f64>,
    pub s0: f64,
    pub phi0: f64,
    pub t_final: f64,
}

impl Default for ValiditySection {
    fn default() -> Self {
        let sc = ValidityScenario::default();
        Self {
            multipliers: vec![10.0, 20.0, 40.0, 80.0],
            s0: sc.s0,
            phi0: sc.phi0,
            t_final: sc.t_final,
        }
    }
}

impl ValiditySection {
    pub fn scenario(&self) -> Result<ValidityScenario> {
        initial_point(self.s0, self.phi0, "validity")?;
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config("validity.t_final must be > 0".into()));
        }
        Ok(ValidityScenario {
            s0: self.s0,
            phi0: self.phi0,
            t_final: self.t_final,
        })
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// Checks every section a command reads, before any computation starts.
    pub fn validate_for(&self, command: &str) -> Result<()> {
        let p = self.model.params()?;
        self.integrator.validate()?;
        if self.run.threads == Some(0) {
            return Err(Error::Config("run.threads must be >= 1".into()));
        }
        match command {
            "spectrum" => {
                self.grid.values()?;
                if self.spectrum.include_quantum {
                    crate::quantum::FockSpace::new(self.quantum.n_particles)?;
                }
            }
            "quantum" => {
                self.grid.values()?;
                crate::quantum::FockSpace::new(self.quantum.n_particles)?;
            }
            "portrait" => {
                if self.portrait.n_s < 2 || self.portrait.n_phi < 2 {
                    return Err(Error::Config("portrait grid must be at least 2x2".into()));
                }
            }
            "evolve" => {
                self.evolve.initial()?;
                if !(self.evolve.t_final > 0.0 && self.evolve.t_final.is_finite()) {
                    return Err(Error::Config("evolve.t_final must be > 0".into()));
                }
            }
            "lz" => self.sweep.protocol(self.run.seed).validate(&p)?,
            "trapping" => {
                self.trapping.protocol(self.run.seed).validate(&p)?;
                if self.trapping.ensemble_size == 0 {
                    return Err(Error::Config("trapping.ensemble_size must be >= 1".into()));
                }
                if !(self.trapping.perturbation >= 0.0 && self.trapping.perturbation.is_finite()) {
                    return Err(Error::Config("trapping.perturbation must be >= 0".into()));
                }
            }
            "validity" => {
                self.validity.scenario()?;
                if self.validity.multipliers.is_empty()
                    || self
                        .validity
                        .multipliers
                        .iter()
                        .any(|m| m.is_nan() || *m <= 0.0)
                {
                    return Err(Error::Config(
                        "validity.multipliers must be positive".into(),
                    ));
                }
            }
            other => return Err(Error::Config(format!("unknown command {other:?}"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let p = cfg.model.params().unwrap();
        assert!((p.amplitude - 28.4).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[model]\ngama = 1.0\n").is_err());
        assert!(RunConfig::from_toml("[nonsense]\n").is_err());
    }

    #[test]
    fn amplitude_and_ratio_conflict() {
        let cfg = RunConfig::from_toml("[model]\nA = 1.0\ndrive_ratio = 1.0\n").unwrap();
        assert!(matches!(cfg.model.params(), Err(Error::Config(_))));
    }

    #[test]
    fn serialization_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.model.gamma = 0.1 + 0.2;
        cfg.run.threads = Some(3);
        cfg.provenance = Some(Provenance {
            command: "lz".into(),
            version: "x".into(),
        });
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.model.gamma.to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn negative_delta_fails_validation() {
        let cfg = RunConfig::from_toml("[model]\ndelta0 = -1.0\n").unwrap();
        assert!(matches!(
            cfg.validate_for("portrait"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn sweep_start_must_be_far() {
        let cfg = RunConfig::from_toml("[sweep]\ngamma_start = -1.0\n").unwrap();
        assert!(cfg.validate_for("lz").is_err());
        assert!(cfg.validate_for("portrait").is_ok());
    }
}
