//! Scripted protocols: adiabatic bias sweeps, transition probabilities,
//! symmetry-breaking trapping ensembles and the averaging validity table.

use std::f64::consts::TAU;
use std::fmt;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    default_ramp, evolve_effective, evolve_effective_scheduled, evolve_lab_scheduled,
    evolve_rotating, evolve_rotating_scheduled, frame_transform, AmplitudePair, FrameDirection,
    IntegratorConfig, Schedule, Trajectory,
};
use crate::effective::{bessel_j0, derive_effective, ModelParams};
use crate::error::{Error, Result};
use crate::phase_space::{
    find_fixed_points, ground_fixed_point, mirror_pairs, Couplings, FixedPoint, FixedPointOptions,
    PhasePoint, POLE_GUARD,
};

/// Which equations a sweep integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepModel {
    /// Lab frame with the drive ramped on before the sweep starts.
    LabDriven,
    /// Exact rotating frame.
    Rotating,
    /// Averaged model.
    Effective,
}

impl std::str::FromStr for SweepModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lab_driven" => Ok(SweepModel::LabDriven),
            "rotating" => Ok(SweepModel::Rotating),
            "effective" => Ok(SweepModel::Effective),
            other => Err(Error::Config(format!("unknown sweep model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepProtocol {
    pub gamma_start: f64,
    pub gamma_end: f64,
    /// `|dγ/dt|`; the sign follows from the endpoints.
    pub rate: f64,
    pub model: SweepModel,
    /// Drive ramp-on window for the lab-frame model; ten drive periods when absent.
    #[serde(default)]
    pub ramp: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl SweepProtocol {
    pub const DEFAULT_RATE: f64 = 1e-4;

    pub fn new(gamma_start: f64, gamma_end: f64, rate: f64, model: SweepModel) -> Self {
        Self {
            gamma_start,
            gamma_end,
            rate,
            model,
            ramp: None,
            seed: 0,
        }
    }

    /// `+1` for increasing bias, `−1` for decreasing.
    pub fn direction(&self) -> f64 {
        (self.gamma_end - self.gamma_start).signum()
    }

    pub fn duration(&self) -> f64 {
        (self.gamma_end - self.gamma_start).abs() / self.rate
    }

    pub fn validate(&self, p: &ModelParams) -> Result<()> {
        p.validate()?;
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::Config(format!(
                "sweep rate must be positive, got {}",
                self.rate
            )));
        }
        if !(self.gamma_start.is_finite() && self.gamma_end.is_finite())
            || self.gamma_start == self.gamma_end
        {
            return Err(Error::Config(
                "sweep endpoints must be finite and distinct".into(),
            ));
        }
        let min_start = 5.0 * p.delta0.max(p.c);
        if self.gamma_start.abs() < min_start {
            return Err(Error::Config(format!(
                "|gamma_start| = {} is below 5·max(delta0, c) = {min_start}",
                self.gamma_start.abs()
            )));
        }
        if let Some(r) = self.ramp {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("ramp window must be >= 0, got {r}")));
            }
        }
        Ok(())
    }

    /// Integrator settings: 200 steps per natural period over the whole sweep
    /// range and at most ~`max_samples` stored samples.
    pub fn integrator(&self, p: &ModelParams, max_samples: usize) -> IntegratorConfig {
        let gamma_max = self.gamma_start.abs().max(self.gamma_end.abs());
        let base = if self.model == SweepModel::Effective {
            // the averaged model has no drive period to resolve
            IntegratorConfig::recommended(
                &ModelParams {
                    amplitude: 0.0,
                    ..*p
                },
                gamma_max,
                200,
            )
        } else {
            IntegratorConfig::recommended(p, gamma_max, 200)
        };
        let steps = (self.duration() / base.dt).ceil() as usize;
        base.with_sample_every(steps.div_ceil(max_samples.max(1)).max(1))
    }
}

/// Stable fixed point a trajectory ended up circling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Attractor {
    /// Mirror-pair member with `φ > π`.
    #[serde(rename = "D_R")]
    Right,
    /// Mirror-pair member with `φ < π`.
    #[serde(rename = "D_L")]
    Left,
    #[serde(rename = "none")]
    None,
}

impl Attractor {
    pub fn label(&self) -> &'static str {
        match self {
            Attractor::Right => "D_R",
            Attractor::Left => "D_L",
            Attractor::None => "none",
        }
    }
}

impl fmt::Display for Attractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub attractor: Attractor,
    /// Degenerate mirror pair present at the classification bias.
    pub window_open: bool,
    /// Distances to the two candidates were within a factor of two.
    pub ambiguous: bool,
}

/// Nearest member of the lowest stable mirror pair, with the periodic `φ` metric.
pub fn classify_attractor(pt: &PhasePoint, fixed_points: &[FixedPoint]) -> Classification {
    let centers: Vec<FixedPoint> = fixed_points
        .iter()
        .filter(|f| f.is_center())
        .copied()
        .collect();
    let pair = mirror_pairs(&centers, 1e-6)
        .into_iter()
        .min_by(|x, y| x.0.energy.total_cmp(&y.0.energy));
    let Some((left, right)) = pair else {
        return Classification {
            attractor: Attractor::None,
            window_open: false,
            ambiguous: false,
        };
    };
    let d_left = pt.distance(&left.point);
    let d_right = pt.distance(&right.point);
    let ratio = d_left.max(d_right) / d_left.min(d_right).max(1e-300);
    if ratio < 2.0 {
        return Classification {
            attractor: Attractor::None,
            window_open: true,
            ambiguous: true,
        };
    }
    Classification {
        attractor: if d_right < d_left {
            Attractor::Right
        } else {
            Attractor::Left
        },
        window_open: true,
        ambiguous: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundState {
    pub state: AmplitudePair,
    pub fixed_point: FixedPoint,
}

/// Lowest stable mean-field eigenstate of the averaged model at `p.gamma`,
/// as amplitudes in the `φ_a = 0` gauge.
pub fn prepare_ground(p: &ModelParams) -> Result<GroundState> {
    p.validate()?;
    let cp = Couplings::from_model(p)?;
    let fps = find_fixed_points(&cp, &FixedPointOptions::default());
    let fp = ground_fixed_point(&fps)
        .ok_or_else(|| Error::Protocol(format!("no stable fixed point at gamma = {}", p.gamma)))?;
    Ok(GroundState {
        state: AmplitudePair::from_phase_point(fp.point, 0.0),
        fixed_point: fp,
    })
}

/// `1 − max |⟨ψ|g⟩|²` over the (possibly degenerate) lowest stable states.
pub fn transition_probability(state: &AmplitudePair, fixed_points: &[FixedPoint]) -> Result<f64> {
    let ground = ground_fixed_point(fixed_points)
        .ok_or_else(|| Error::Protocol("no stable fixed point".into()))?;
    let norm = state.norm_sqr();
    let best = fixed_points
        .iter()
        .filter(|f| f.is_center() && (f.energy - ground.energy).abs() < 1e-9)
        .map(|f| state.overlap(&AmplitudePair::from_phase_point(f.point, state.t)) / norm)
        .fold(0.0, f64::max);
    Ok((1.0 - best).clamp(0.0, 1.0))
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub transition_probability: f64,
    /// Final state in the rotating (= averaged-model) frame.
    pub final_state: AmplitudePair,
    /// Rotating-frame state at the moment the sweep starts (after any ramp-on).
    pub start_state: AmplitudePair,
    pub attractor: Attractor,
    pub attractor_ambiguous: bool,
    /// Bias at which the attractor was classified, if the window was seen.
    pub attractor_gamma: Option<f64>,
    /// Trajectory came within 1e-6 of a pole `|s| = 1`.
    pub pole_proximity: bool,
    pub trajectory: Trajectory,
}

/// Number of equally spaced sweep checkpoints searched for an open degenerate window.
const WINDOW_CHECKPOINTS: usize = 64;

/// Runs the protocol from its prepared ground state.
pub fn run_lz_sweep(
    proto: &SweepProtocol,
    p: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<SweepResult> {
    proto.validate(p)?;
    let start = ModelParams {
        gamma: proto.gamma_start,
        ..*p
    };
    let ground = prepare_ground(&start)?;
    let sweep = integrate_sweep(proto, p, ground.state, cfg)?;
    let end = sweep
        .trajectory
        .last()
        .copied()
        .expect("trajectory holds at least the initial state");
    let final_state = sweep.to_rotating(&end);

    let end_params = ModelParams {
        gamma: proto.gamma_end,
        ..*p
    };
    let end_fps = find_fixed_points(
        &Couplings::from_model(&end_params)?,
        &FixedPointOptions::default(),
    );
    let transition_probability = transition_probability(&final_state, &end_fps)?;

    // attractor: last checkpoint at which the degenerate window was open
    let duration = proto.duration();
    let mut classification = None;
    for k in (0..=WINDOW_CHECKPOINTS).rev() {
        let frac = k as f64 / WINDOW_CHECKPOINTS as f64;
        let gamma = proto.gamma_start + proto.direction() * proto.rate * duration * frac;
        let fps = if k == WINDOW_CHECKPOINTS {
            end_fps.clone()
        } else {
            find_fixed_points(
                &Couplings::from_model(&ModelParams { gamma, ..*p })?,
                &FixedPointOptions::default(),
            )
        };
        let Some(state) = sweep.trajectory.at(sweep.sweep_t0 + duration * frac) else {
            continue;
        };
        let c = classify_attractor(&sweep.to_rotating(&state).phase_point(), &fps);
        if c.window_open {
            classification = Some((gamma, c));
            break;
        }
    }

    let pole_proximity = sweep
        .trajectory
        .samples
        .iter()
        .any(|s| s.imbalance().abs() / s.norm_sqr() > 1.0 - 1e-6);

    Ok(SweepResult {
        transition_probability,
        final_state,
        start_state: sweep.start_state,
        attractor: classification
            .map(|c| c.1.attractor)
            .unwrap_or(Attractor::None),
        attractor_ambiguous: classification.is_some_and(|c| c.1.ambiguous),
        attractor_gamma: classification.map(|c| c.0),
        pole_proximity,
        trajectory: sweep.trajectory,
    })
}

struct SweepRun {
    trajectory: Trajectory,
    start_state: AmplitudePair,
    /// Time at which the bias starts to move.
    sweep_t0: f64,
    frame: Option<(f64, f64)>,
}

impl SweepRun {
    fn to_rotating(&self, s: &AmplitudePair) -> AmplitudePair {
        match self.frame {
            Some((ratio, omega)) => crate::dynamics::frame_transform_with_amplitude(
                s,
                ratio,
                omega,
                FrameDirection::LabToRotating,
            ),
            None => *s,
        }
    }
}

fn integrate_sweep(
    proto: &SweepProtocol,
    p: &ModelParams,
    initial: AmplitudePair,
    cfg: &IntegratorConfig,
) -> Result<SweepRun> {
    let start = ModelParams {
        gamma: proto.gamma_start,
        ..*p
    };
    let rate = proto.direction() * proto.rate;
    let duration = proto.duration();
    match proto.model {
        SweepModel::Effective => {
            let eff = derive_effective(&start)?;
            let gamma_scale = bessel_j0(start.drive_ratio())?;
            let traj = evolve_effective_scheduled(
                &initial,
                &eff,
                p.delta0,
                &Schedule::sweep(rate * gamma_scale),
                duration,
                cfg,
            )?;
            Ok(SweepRun {
                trajectory: traj,
                start_state: initial,
                sweep_t0: 0.0,
                frame: None,
            })
        }
        SweepModel::Rotating => {
            let traj =
                evolve_rotating_scheduled(&initial, &start, &Schedule::sweep(rate), duration, cfg)?;
            Ok(SweepRun {
                trajectory: traj,
                start_state: initial,
                sweep_t0: 0.0,
                frame: None,
            })
        }
        SweepModel::LabDriven => {
            let ramp = if start.is_driven() {
                proto.ramp.unwrap_or_else(|| default_ramp(start.omega))
            } else {
                0.0
            };
            let schedule = Schedule {
                gamma_rate: rate,
                hold: ramp,
                drive_ramp: (ramp > 0.0).then_some(ramp),
            };
            let traj = evolve_lab_scheduled(&initial, &start, &schedule, ramp + duration, cfg)?;
            let frame = Some((start.drive_ratio(), start.omega));
            let ramp_end = traj.at(ramp).unwrap_or(initial);
            let run = SweepRun {
                trajectory: traj,
                start_state: initial,
                sweep_t0: ramp,
                frame,
            };
            let start_state = run.to_rotating(&ramp_end);
            Ok(SweepRun { start_state, ..run })
        }
    }
}

/// Runs [`run_lz_sweep`] at the protocol rate and at half of it.
pub fn rate_halving_check(proto: &SweepProtocol, p: &ModelParams) -> Result<(f64, f64)> {
    let full = run_lz_sweep(proto, p, &proto.integrator(p, 10_000))?;
    let half_proto = SweepProtocol {
        rate: proto.rate / 2.0,
        ..*proto
    };
    let half = run_lz_sweep(&half_proto, p, &half_proto.integrator(p, 10_000))?;
    Ok((full.transition_probability, half.transition_probability))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrappingHistogram {
    pub right: usize,
    pub left: usize,
    pub none: usize,
    /// Members whose classification was ambiguous (also counted in `none`).
    pub ambiguous: usize,
    pub seed: u64,
}

impl TrappingHistogram {
    pub fn total(&self) -> usize {
        self.right + self.left + self.none
    }
}

impl fmt::Display for TrappingHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D_R,{} D_L,{} none,{}", self.right, self.left, self.none)
    }
}

/// Per-member outcome of a trapping ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrappingMember {
    pub index: usize,
    pub initial: PhasePoint,
    pub last: PhasePoint,
    pub classification: Classification,
}

/// Seeded perturbation of `(s, φ)`, uniform in `[−ε, ε]²`.
pub fn perturbed_start(base: PhasePoint, perturbation: f64, seed: u64, index: usize) -> PhasePoint {
    if perturbation == 0.0 {
        return base;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let ds: f64 = rng.gen_range(-perturbation..=perturbation);
    let dphi: f64 = rng.gen_range(-perturbation..=perturbation);
    PhasePoint::new(
        (base.s + ds).clamp(-POLE_GUARD, POLE_GUARD),
        base.phi + dphi,
    )
}

/// Ensemble of sweeps ending inside the degenerate window; each member starts
/// from the ground state displaced by a seeded perturbation of size at most
/// `perturbation` and is classified by its nearest stable mirror fixed point.
pub fn trapping_experiment(
    proto: &SweepProtocol,
    p: &ModelParams,
    cfg: &IntegratorConfig,
    ensemble_size: usize,
    perturbation: f64,
) -> Result<(TrappingHistogram, Vec<TrappingMember>)> {
    proto.validate(p)?;
    if !(perturbation >= 0.0 && perturbation.is_finite()) {
        return Err(Error::Config(format!(
            "perturbation must be >= 0, got {perturbation}"
        )));
    }
    let end_fps = find_fixed_points(
        &Couplings::from_model(&ModelParams {
            gamma: proto.gamma_end,
            ..*p
        })?,
        &FixedPointOptions::default(),
    );
    let probe = classify_attractor(&PhasePoint::new(0.0, 0.0), &end_fps);
    if !probe.window_open {
        return Err(Error::Protocol(format!(
            "gamma_end = {} lies outside the degenerate window",
            proto.gamma_end
        )));
    }
    let ground = prepare_ground(&ModelParams {
        gamma: proto.gamma_start,
        ..*p
    })?;
    // only the final state matters
    let cfg = IntegratorConfig {
        sample_every: usize::MAX,
        ..*cfg
    };

    let members: Vec<Result<TrappingMember>> = (0..ensemble_size)
        .into_par_iter()
        .map(|index| {
            let initial =
                perturbed_start(ground.fixed_point.point, perturbation, proto.seed, index);
            let run = integrate_sweep(
                proto,
                p,
                AmplitudePair::from_phase_point(initial, 0.0),
                &cfg,
            )?;
            let last = run.to_rotating(run.trajectory.last().expect("non-empty trajectory"));
            let pt = last.phase_point();
            Ok(TrappingMember {
                index,
                initial,
                last: pt,
                classification: classify_attractor(&pt, &end_fps),
            })
        })
        .collect();
    let members: Vec<TrappingMember> = members.into_iter().collect::<Result<_>>()?;

    let mut hist = TrappingHistogram {
        right: 0,
        left: 0,
        none: 0,
        ambiguous: 0,
        seed: proto.seed,
    };
    for m in &members {
        match m.classification.attractor {
            Attractor::Right => hist.right += 1,
            Attractor::Left => hist.left += 1,
            Attractor::None => hist.none += 1,
        }
        if m.classification.ambiguous {
            hist.ambiguous += 1;
        }
    }
    info!("trapping ensemble (seed {}): {hist}", proto.seed);
    Ok((hist, members))
}

/// Fixed scenario for comparing the exact rotating frame with the averaged model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidityScenario {
    pub s0: f64,
    pub phi0: f64,
    pub t_final: f64,
}

impl Default for ValidityScenario {
    fn default() -> Self {
        Self {
            s0: -0.5,
            phi0: std::f64::consts::PI,
            t_final: 250.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityRow {
    pub multiplier: f64,
    pub omega: f64,
    pub amplitude: f64,
    /// Max over drive periods of `| |a'|²_rotating − |a|²_averaged |`.
    pub max_error: f64,
    pub periods: usize,
}

/// For each multiplier `m`, `ω = m · max(Δ0, c, |γ|)` at fixed `A/ω`, the
/// largest stroboscopic population discrepancy between the two models.
pub fn averaging_validity_report(
    p: &ModelParams,
    multipliers: &[f64],
    scenario: &ValidityScenario,
) -> Result<Vec<ValidityRow>> {
    p.validate()?;
    let ratio = p.drive_ratio();
    let scale = p.natural_scale();
    if scale <= 0.0 {
        return Err(Error::Config(
            "validity report needs a nonzero energy scale".into(),
        ));
    }
    if multipliers.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::Config("omega multipliers must be positive".into()));
    }
    let initial = AmplitudePair::from_phase_point(PhasePoint::new(scenario.s0, scenario.phi0), 0.0);
    multipliers
        .par_iter()
        .map(|&m| {
            let omega = m * scale;
            let pm = ModelParams::with_drive_ratio(p.gamma, p.delta0, p.c, ratio, omega);
            let period = TAU / omega;
            let base = IntegratorConfig::recommended(&pm, p.gamma, 200);
            let per_period = (period / base.dt).ceil() as usize;
            let cfg = base
                .with_dt(period / per_period as f64)
                .with_sample_every(per_period);
            let periods = (scenario.t_final / period).floor() as usize;
            let t_final = periods as f64 * period;
            let rot = evolve_rotating(&initial, &pm, t_final, &cfg)?;
            let avg = evolve_effective(&initial, &derive_effective(&pm)?, p.delta0, t_final, &cfg)?;
            let max_error = rot
                .samples
                .iter()
                .zip(&avg.samples)
                .map(|(x, y)| (x.pop_a() - y.pop_a()).abs())
                .fold(0.0, f64::max);
            Ok(ValidityRow {
                multiplier: m,
                omega,
                amplitude: pm.amplitude,
                max_error,
                periods,
            })
        })
        .collect()
}

/// Lab-frame state after ramping the drive on at fixed bias, mapped to the
/// rotating frame.
pub fn ramp_on(
    initial: &AmplitudePair,
    p: &ModelParams,
    ramp: f64,
    cfg: &IntegratorConfig,
) -> Result<AmplitudePair> {
    let schedule = Schedule {
        gamma_rate: 0.0,
        hold: 0.0,
        drive_ramp: Some(ramp),
    };
    let traj = evolve_lab_scheduled(initial, p, &schedule, initial.t + ramp, cfg)?;
    Ok(frame_transform(
        traj.last().expect("non-empty trajectory"),
        p,
        FrameDirection::LabToRotating,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn linear_ground_far_from_resonance() {
        let g = prepare_ground(&ModelParams::undriven(-10.0, 0.2, 0.0)).unwrap();
        let want = -10.0 / (100.0f64 + 0.04).sqrt();
        assert_abs_diff_eq!(g.fixed_point.point.s, want, epsilon = 1e-9);
        assert_abs_diff_eq!(g.fixed_point.point.phi, PI, epsilon = 1e-9);
    }

    #[test]
    fn linear_ground_at_resonance() {
        let g = prepare_ground(&ModelParams::undriven(0.0, 0.2, 0.0)).unwrap();
        assert_abs_diff_eq!(g.fixed_point.point.s, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.fixed_point.point.phi, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(g.fixed_point.energy, -0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(g.state.pop_a(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn driven_ground_is_lowest() {
        let p = ModelParams::with_drive_ratio(-2.0, 0.2, 1.0, 1.42, 100.0);
        let g = prepare_ground(&p).unwrap();
        let fps = find_fixed_points(
            &Couplings::from_model(&p).unwrap(),
            &FixedPointOptions::default(),
        );
        for f in &fps {
            if f.point.distance(&g.fixed_point.point) > 1e-9 {
                assert!(f.energy > g.fixed_point.energy);
            }
        }
    }

    #[test]
    fn protocol_rejects_small_start() {
        let p = ModelParams::undriven(0.0, 0.2, 1.0);
        let proto = SweepProtocol::new(-2.0, 2.0, 1e-3, SweepModel::Effective);
        assert!(matches!(proto.validate(&p), Err(Error::Config(_))));
    }

    #[test]
    fn protocol_rejects_bad_rate() {
        let p = ModelParams::undriven(0.0, 0.2, 0.0);
        let proto = SweepProtocol::new(-2.0, 2.0, 0.0, SweepModel::Effective);
        assert!(proto.validate(&p).is_err());
    }

    #[test]
    fn perturbations_are_bounded_and_reproducible() {
        let base = PhasePoint::new(-0.9, PI);
        for i in 0..20 {
            let x = perturbed_start(base, 1e-3, 7, i);
            let y = perturbed_start(base, 1e-3, 7, i);
            assert_eq!(x, y);
            assert!((x.s - base.s).abs() <= 1e-3);
            assert!(crate::phase_space::phase_difference(x.phi, base.phi).abs() <= 1e-3 + 1e-15);
        }
        assert_ne!(
            perturbed_start(base, 1e-3, 7, 0),
            perturbed_start(base, 1e-3, 8, 0)
        );
        assert_eq!(perturbed_start(base, 0.0, 7, 3), base);
    }

    #[test]
    fn classification_needs_an_open_window() {
        let fps = find_fixed_points(
            &Couplings::new(0.0, 0.2, 0.0, 0.0),
            &FixedPointOptions::default(),
        );
        let c = classify_attractor(&PhasePoint::new(0.0, 4.0), &fps);
        assert!(!c.window_open);
        assert_eq!(c.attractor, Attractor::None);
    }

    #[test]
    fn classification_sides() {
        let fps = find_fixed_points(
            &Couplings::new(0.0, 0.2, 0.4, 0.6),
            &FixedPointOptions::default(),
        );
        assert_eq!(
            classify_attractor(&PhasePoint::new(0.0, 4.3), &fps).attractor,
            Attractor::Right
        );
        assert_eq!(
            classify_attractor(&PhasePoint::new(0.0, 2.0), &fps).attractor,
            Attractor::Left
        );
        // on the symmetry axis both are equally far
        let c = classify_attractor(&PhasePoint::new(0.0, PI), &fps);
        assert!(c.ambiguous);
        assert_eq!(c.attractor, Attractor::None);
    }

    #[test]
    fn validity_with_zero_drive_is_exact() {
        let p = ModelParams::undriven(0.5, 0.2, 1.0);
        let rows =
            averaging_validity_report(&p, &[10.0, 40.0], &ValidityScenario::default()).unwrap();
        for r in rows {
            assert!(r.max_error < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn histogram_format() {
        let h = TrappingHistogram {
            right: 50,
            left: 0,
            none: 0,
            ambiguous: 0,
            seed: 1,
        };
        assert_eq!(h.to_string(), "D_R,50 D_L,0 none,0");
    }
}
