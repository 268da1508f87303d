//! Mean-field evolution in three equivalent representations.
//!
//! * lab frame: the driven two-mode equations with `Δ0 + A sin ωt` coupling;
//! * rotating frame: the exact rewrite obtained with the unitary
//!   `exp(−i χ(t) σx)`, `χ(t) = (A/2ω) cos ωt`, which removes the drive from
//!   the coupling and moves it into `θ = 2χ` dependent bias and nonlinear terms;
//! * effective model: the period average of the rotating frame, autonomous up
//!   to a caller-supplied linear bias ramp.
//!
//! All three are integrated with fixed-step classical RK4. States are never
//! renormalized; the norm is monitored and drift past tolerance is a failure.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::effective::{EffectiveParams, ModelParams};
use crate::error::{Error, Result};
use crate::phase_space::PhasePoint;

pub type C64 = Complex64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Complex mode amplitudes `(a, b)` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudePair {
    pub a: C64,
    pub b: C64,
    pub t: f64,
}

impl AmplitudePair {
    pub fn new(a: C64, b: C64, t: f64) -> Self {
        Self { a, b, t }
    }

    /// Mode `a` fully occupied.
    pub fn mode_a(t: f64) -> Self {
        Self::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), t)
    }

    /// State with imbalance `s` and relative phase `φ`, gauge `φ_a = 0`.
    pub fn from_phase_point(pt: PhasePoint, t: f64) -> Self {
        let s = pt.s.clamp(-1.0, 1.0);
        let a = ((1.0 - s) / 2.0).sqrt();
        let b = ((1.0 + s) / 2.0).sqrt();
        Self::new(C64::new(a, 0.0), C64::from_polar(b, pt.phi), t)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    pub fn pop_a(&self) -> f64 {
        self.a.norm_sqr()
    }

    pub fn pop_b(&self) -> f64 {
        self.b.norm_sqr()
    }

    /// `s = |b|² − |a|²`.
    pub fn imbalance(&self) -> f64 {
        self.b.norm_sqr() - self.a.norm_sqr()
    }

    /// `φ = arg b − arg a`, wrapped to `[0, 2π)`.
    pub fn relative_phase(&self) -> f64 {
        wrap_phase((self.a.conj() * self.b).arg())
    }

    /// Canonical coordinates; normalizes by the current norm.
    pub fn phase_point(&self) -> PhasePoint {
        let n = self.norm_sqr();
        PhasePoint::new(self.imbalance() / n, self.relative_phase())
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &AmplitudePair) -> f64 {
        (self.a.conj() * other.a + self.b.conj() * other.b).norm_sqr()
    }

    fn as_array(&self) -> [C64; 2] {
        [self.a, self.b]
    }
}

pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative input
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Fixed-step integrator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Minimum number of steps per drive period when `A != 0`.
    pub periods_per_step_min: u32,
    pub norm_tol: f64,
    /// Keep every n-th step in the returned trajectory (the last step is always kept).
    pub sample_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            periods_per_step_min: 50,
            norm_tol: 1e-8,
            sample_every: 1,
        }
    }
}

impl IntegratorConfig {
    /// Step size with `steps_per_natural` subdivisions of the shortest time
    /// scale `2π / max(Δ0, c, |γ|max, 2A, 2ω)`. The drive enters twice because
    /// the lab-frame local error grows with both its amplitude and frequency.
    pub fn recommended(p: &ModelParams, gamma_max: f64, steps_per_natural: u32) -> Self {
        let mut scale = p.delta0.max(p.c).max(gamma_max.abs()).max(p.gamma.abs());
        if p.is_driven() {
            scale = scale.max(2.0 * p.amplitude).max(2.0 * p.omega);
        }
        let mut dt = if scale > 0.0 {
            TAU / (steps_per_natural as f64 * scale)
        } else {
            0.01
        };
        let base = Self::default();
        if p.is_driven() {
            dt = dt.min(TAU / (p.omega * base.periods_per_step_min as f64));
        }
        Self { dt, ..base }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_sample_every(mut self, n: usize) -> Self {
        self.sample_every = n.max(1);
        self
    }

    pub fn validate(&self, p: Option<&ModelParams>) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.norm_tol.is_nan() || self.norm_tol <= 0.0 {
            return Err(Error::Config(format!(
                "norm_tol must be positive, got {}",
                self.norm_tol
            )));
        }
        if self.periods_per_step_min == 0 {
            return Err(Error::Config("periods_per_step_min must be >= 1".into()));
        }
        if let Some(p) = p {
            if p.is_driven() {
                let max_dt = TAU / (p.omega * self.periods_per_step_min as f64);
                if self.dt > max_dt * (1.0 + 1e-12) {
                    return Err(Error::Config(format!(
                        "dt = {} exceeds 2π/(ω·{}) = {max_dt}",
                        self.dt, self.periods_per_step_min
                    )));
                }
            }
        }
        Ok(())
    }

    /// Norm drift beyond which a run fails: ten times `norm_tol` per 10³ time units.
    pub fn failure_threshold(&self, elapsed: f64) -> f64 {
        10.0 * self.norm_tol * (elapsed.abs() / 1000.0).max(1.0)
    }
}

/// Time dependence layered on top of constant [`ModelParams`].
///
/// `γ(t) = γ + gamma_rate · max(0, t − hold)`, and when `drive_ramp` is set the
/// drive amplitude rises linearly from zero, `A(t) = A · min(1, t / T_ramp)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Schedule {
    pub gamma_rate: f64,
    pub hold: f64,
    pub drive_ramp: Option<f64>,
}

impl Schedule {
    pub fn constant() -> Self {
        Self::default()
    }

    pub fn sweep(gamma_rate: f64) -> Self {
        Self {
            gamma_rate,
            ..Self::default()
        }
    }

    pub fn gamma_at(&self, gamma0: f64, t: f64) -> f64 {
        gamma0 + self.gamma_rate * (t - self.hold).max(0.0)
    }

    pub fn amplitude_at(&self, amplitude: f64, t: f64) -> f64 {
        match self.drive_ramp {
            Some(tr) if tr > 0.0 => amplitude * (t / tr).clamp(0.0, 1.0),
            _ => amplitude,
        }
    }
}

/// Default drive ramp-on window, ten drive periods.
pub fn default_ramp(omega: f64) -> f64 {
    10.0 * TAU / omega
}

/// Sampled trajectory.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub samples: Vec<AmplitudePair>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&AmplitudePair> {
        self.samples.last()
    }

    pub fn first(&self) -> Option<&AmplitudePair> {
        self.samples.first()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn max_norm_drift(&self) -> f64 {
        let Some(first) = self.samples.first() else {
            return 0.0;
        };
        let n0 = first.norm_sqr();
        self.samples
            .iter()
            .map(|s| (s.norm_sqr() - n0).abs())
            .fold(0.0, f64::max)
    }

    /// State at time `t` (linear interpolation of amplitudes between samples;
    /// exact when `t` falls on a sample).
    pub fn at(&self, t: f64) -> Option<AmplitudePair> {
        let idx = self.samples.partition_point(|s| s.t < t);
        if idx == self.samples.len() {
            return None;
        }
        let hi = self.samples[idx];
        if (hi.t - t).abs() < 1e-12 || idx == 0 {
            return Some(hi);
        }
        let lo = self.samples[idx - 1];
        let w = (t - lo.t) / (hi.t - lo.t);
        Some(AmplitudePair::new(
            lo.a * (1.0 - w) + hi.a * w,
            lo.b * (1.0 - w) + hi.b * w,
            t,
        ))
    }
}

fn pair_derivative(h11: f64, h12: C64, a: C64, b: C64) -> [C64; 2] {
    // i d/dt (a, b) = H (a, b), H = [[h11, h12], [conj h12, −h11]]
    [-I * (a * h11 + h12 * b), -I * (h12.conj() * a - b * h11)]
}

/// `−i H(t) (a, b)` for the lab-frame Hamiltonian.
pub fn rhs_lab(state: &AmplitudePair, p: &ModelParams, t: f64) -> [C64; 2] {
    rhs_lab_raw(
        state.a,
        state.b,
        p.gamma,
        p.delta0,
        p.c,
        p.amplitude,
        p.omega,
        t,
    )
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn rhs_lab_raw(
    a: C64,
    b: C64,
    gamma: f64,
    delta0: f64,
    c: f64,
    amp: f64,
    omega: f64,
    t: f64,
) -> [C64; 2] {
    let s = b.norm_sqr() - a.norm_sqr();
    let h11 = 0.5 * (gamma + c * s);
    let coupling = 0.5 * (delta0 + amp * (omega * t).sin());
    pair_derivative(h11, C64::new(coupling, 0.0), a, b)
}

/// Exact rotating-frame right-hand side with `θ = (A/ω) cos ωt`.
pub fn rhs_rotating(state: &AmplitudePair, p: &ModelParams, t: f64) -> [C64; 2] {
    rhs_rotating_raw(
        state.a,
        state.b,
        p.gamma,
        p.delta0,
        p.c,
        p.drive_ratio(),
        p.omega,
        t,
    )
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn rhs_rotating_raw(
    a: C64,
    b: C64,
    gamma: f64,
    delta0: f64,
    c: f64,
    ratio: f64,
    omega: f64,
    t: f64,
) -> [C64; 2] {
    let theta = ratio * (omega * t).cos();
    let (sin_t, cos_t) = theta.sin_cos();
    let pa = a.norm_sqr();
    let pb = b.norm_sqr();
    // y = a* b − a b*, purely imaginary
    let y = a.conj() * b - a * b.conj();
    let h11 =
        0.5 * (gamma * cos_t + c * cos_t * cos_t * (pb - pa) + (-I * c * sin_t * cos_t * y).re);
    let h12 = 0.5
        * (C64::new(delta0, gamma * sin_t) + c * sin_t * sin_t * y
            - I * (c * sin_t * cos_t * (pa - pb)));
    pair_derivative(h11, h12, a, b)
}

/// Averaged model right-hand side.
pub fn rhs_effective(state: &AmplitudePair, eff: &EffectiveParams, delta0: f64) -> [C64; 2] {
    rhs_effective_raw(state.a, state.b, eff.gamma_eff, delta0, eff.c_z, eff.c_y)
}

#[inline]
fn rhs_effective_raw(a: C64, b: C64, gamma_eff: f64, delta0: f64, c_z: f64, c_y: f64) -> [C64; 2] {
    let s = b.norm_sqr() - a.norm_sqr();
    let y = a.conj() * b - a * b.conj();
    let h11 = 0.5 * (gamma_eff + c_z * s);
    let h12 = 0.5 * (delta0 + c_y * y);
    pair_derivative(h11, h12, a, b)
}

/// Mean-field energy of the averaged model evaluated on amplitudes.
///
/// Equals the classical Hamiltonian of [`crate::phase_space`] for normalized states.
pub fn effective_energy(state: &AmplitudePair, eff: &EffectiveParams, delta0: f64) -> f64 {
    let s = state.imbalance();
    let cross = state.a.conj() * state.b;
    0.5 * (-eff.gamma_eff * s - 0.5 * eff.c_z * s * s + 2.0 * delta0 * cross.re
        - 2.0 * eff.c_y * cross.im * cross.im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDirection {
    LabToRotating,
    RotatingToLab,
}

/// Maps amplitudes between the lab and rotating frames at the state's time.
pub fn frame_transform(
    state: &AmplitudePair,
    p: &ModelParams,
    direction: FrameDirection,
) -> AmplitudePair {
    frame_transform_with_amplitude(state, p.drive_ratio(), p.omega, direction)
}

pub fn frame_transform_with_amplitude(
    state: &AmplitudePair,
    ratio: f64,
    omega: f64,
    direction: FrameDirection,
) -> AmplitudePair {
    let chi = 0.5 * ratio * (omega * state.t).cos();
    let phase = C64::from_polar(1.0, chi);
    let (sum, diff) = (state.a + state.b, state.a - state.b);
    let (sum, diff) = match direction {
        // a' ± b' = (a ± b) e^{∓iχ}
        FrameDirection::LabToRotating => (sum * phase.conj(), diff * phase),
        FrameDirection::RotatingToLab => (sum * phase, diff * phase.conj()),
    };
    AmplitudePair::new(0.5 * (sum + diff), 0.5 * (sum - diff), state.t)
}

fn integrate<F>(
    state0: &AmplitudePair,
    t_final: f64,
    cfg: &IntegratorConfig,
    mut rhs: F,
) -> Result<Trajectory>
where
    F: FnMut(C64, C64, f64) -> [C64; 2],
{
    let span = t_final - state0.t;
    if !span.is_finite() || span < 0.0 {
        return Err(Error::Config(format!(
            "t_final = {t_final} precedes the initial time {}",
            state0.t
        )));
    }
    if !state0.a.re.is_finite()
        || !state0.a.im.is_finite()
        || !state0.b.re.is_finite()
        || !state0.b.im.is_finite()
    {
        return Err(Error::Domain("non-finite initial amplitudes".into()));
    }
    let n_steps = (span / cfg.dt)
        .ceil()
        .max(if span > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if n_steps > 0 {
        span / n_steps as f64
    } else {
        0.0
    };
    let every = cfg.sample_every.max(1);

    let norm0 = state0.norm_sqr();
    let mut samples = Vec::with_capacity(n_steps / every + 2);
    samples.push(*state0);
    let [mut a, mut b] = state0.as_array();
    let t0 = state0.t;

    for k in 0..n_steps {
        let t = t0 + k as f64 * h;
        let [k1a, k1b] = rhs(a, b, t);
        let [k2a, k2b] = rhs(a + k1a * (0.5 * h), b + k1b * (0.5 * h), t + 0.5 * h);
        let [k3a, k3b] = rhs(a + k2a * (0.5 * h), b + k2b * (0.5 * h), t + 0.5 * h);
        let [k4a, k4b] = rhs(a + k3a * h, b + k3b * h, t + h);
        a += (k1a + 2.0 * k2a + 2.0 * k3a + k4a) * (h / 6.0);
        b += (k1b + 2.0 * k2b + 2.0 * k3b + k4b) * (h / 6.0);

        let step = k + 1;
        let t_now = t0 + step as f64 * h;
        if step % every == 0 || step == n_steps {
            let drift = (a.norm_sqr() + b.norm_sqr() - norm0).abs();
            if !drift.is_finite() || drift > cfg.failure_threshold(t_now - t0) {
                return Err(Error::Integration {
                    t: t_now,
                    reason: format!("norm drift {drift:.3e} exceeds tolerance"),
                });
            }
            samples.push(AmplitudePair::new(a, b, t_now));
        }
    }
    Ok(Trajectory { samples })
}

/// Lab-frame evolution at constant parameters.
pub fn evolve_lab(
    state0: &AmplitudePair,
    p: &ModelParams,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    evolve_lab_scheduled(state0, p, &Schedule::constant(), t_final, cfg)
}

pub fn evolve_lab_scheduled(
    state0: &AmplitudePair,
    p: &ModelParams,
    schedule: &Schedule,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    p.validate()?;
    cfg.validate(Some(p))?;
    let p = *p;
    let sch = *schedule;
    integrate(state0, t_final, cfg, move |a, b, t| {
        rhs_lab_raw(
            a,
            b,
            sch.gamma_at(p.gamma, t),
            p.delta0,
            p.c,
            sch.amplitude_at(p.amplitude, t),
            p.omega,
            t,
        )
    })
}

/// Exact rotating-frame evolution of `(a', b')`.
pub fn evolve_rotating(
    state0: &AmplitudePair,
    p: &ModelParams,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    evolve_rotating_scheduled(state0, p, &Schedule::constant(), t_final, cfg)
}

/// Rotating-frame evolution with a bias ramp. Drive ramps are not supported
/// here since the frame itself depends on `A`.
pub fn evolve_rotating_scheduled(
    state0: &AmplitudePair,
    p: &ModelParams,
    schedule: &Schedule,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    p.validate()?;
    cfg.validate(Some(p))?;
    if schedule.drive_ramp.is_some() {
        return Err(Error::Config(
            "drive ramp-on is only defined in the lab frame".into(),
        ));
    }
    let p = *p;
    let sch = *schedule;
    let ratio = p.drive_ratio();
    integrate(state0, t_final, cfg, move |a, b, t| {
        rhs_rotating_raw(
            a,
            b,
            sch.gamma_at(p.gamma, t),
            p.delta0,
            p.c,
            ratio,
            p.omega,
            t,
        )
    })
}

/// Averaged-model evolution at constant couplings.
pub fn evolve_effective(
    state0: &AmplitudePair,
    eff: &EffectiveParams,
    delta0: f64,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    evolve_effective_scheduled(state0, eff, delta0, &Schedule::constant(), t_final, cfg)
}

/// Averaged-model evolution; `schedule.gamma_rate` is the rate of the
/// effective bias `γ′`.
pub fn evolve_effective_scheduled(
    state0: &AmplitudePair,
    eff: &EffectiveParams,
    delta0: f64,
    schedule: &Schedule,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate(None)?;
    if !(eff.gamma_eff.is_finite()
        && eff.c_z.is_finite()
        && eff.c_y.is_finite()
        && delta0.is_finite())
    {
        return Err(Error::Config("non-finite effective parameters".into()));
    }
    let eff = *eff;
    let sch = *schedule;
    integrate(state0, t_final, cfg, move |a, b, t| {
        rhs_effective_raw(
            a,
            b,
            sch.gamma_at(eff.gamma_eff, t),
            delta0,
            eff.c_z,
            eff.c_y,
        )
    })
}

/// One drive period `2π/ω`.
pub fn drive_period(omega: f64) -> f64 {
    2.0 * PI / omega
}
