//! Classical phase space of the averaged model.
//!
//! In canonical coordinates `s = |b|² − |a|²` and `φ = φ_b − φ_a` the mean-field
//! energy is
//!
//! ```text
//! H_c = ½ [ −γ′ s − (c_Z/2) s² + Δ0 √(1−s²) cos φ − (c_Y/2)(1−s²) sin² φ ]
//! ```
//!
//! and the flow is `ds/dt = 2 ∂H_c/∂φ`, `dφ/dt = −2 ∂H_c/∂s`. Fixed points of
//! the flow are the nonlinear eigenstates; their `H_c` value is used as the
//! level energy throughout the crate.

use std::f64::consts::{PI, TAU};

use log::{debug, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::wrap_phase;
use crate::effective::{derive_effective, EffectiveParams, ModelParams};
use crate::error::{Error, Result};

/// Largest `|s|` admitted by root finding and flow integration.
pub const POLE_GUARD: f64 = 1.0 - 1e-9;

/// Point `(s, φ)` with `φ` wrapped to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub s: f64,
    pub phi: f64,
}

impl PhasePoint {
    pub fn new(s: f64, phi: f64) -> Self {
        Self {
            s,
            phi: wrap_phase(phi),
        }
    }

    /// Euclidean distance with the periodic metric in `φ`.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        let ds = self.s - other.s;
        let dphi = phase_difference(self.phi, other.phi);
        (ds * ds + dphi * dphi).sqrt()
    }

    /// Image under `φ → 2π − φ`.
    pub fn mirror(&self) -> PhasePoint {
        PhasePoint::new(self.s, TAU - self.phi)
    }
}

/// Signed shortest difference `a − b` on the circle, in `(−π, π]`.
pub fn phase_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Parameters entering the classical Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Couplings {
    pub gamma_eff: f64,
    pub delta0: f64,
    pub c_z: f64,
    pub c_y: f64,
}

impl Couplings {
    pub fn new(gamma_eff: f64, delta0: f64, c_z: f64, c_y: f64) -> Self {
        Self {
            gamma_eff,
            delta0,
            c_z,
            c_y,
        }
    }

    pub fn from_effective(eff: &EffectiveParams, delta0: f64) -> Self {
        Self::new(eff.gamma_eff, delta0, eff.c_z, eff.c_y)
    }

    pub fn from_model(p: &ModelParams) -> Result<Self> {
        Ok(Self::from_effective(&derive_effective(p)?, p.delta0))
    }

    pub fn with_gamma_eff(mut self, gamma_eff: f64) -> Self {
        self.gamma_eff = gamma_eff;
        self
    }

    pub fn effective(&self) -> EffectiveParams {
        EffectiveParams {
            gamma_eff: self.gamma_eff,
            c_z: self.c_z,
            c_y: self.c_y,
        }
    }
}

pub fn hc_value(pt: &PhasePoint, cp: &Couplings) -> f64 {
    let s = pt.s;
    let u = 1.0 - s * s;
    let (sin_p, cos_p) = pt.phi.sin_cos();
    0.5 * (-cp.gamma_eff * s - 0.5 * cp.c_z * s * s + cp.delta0 * u.max(0.0).sqrt() * cos_p
        - 0.5 * cp.c_y * u * sin_p * sin_p)
}

fn check_interior(s: f64) -> Result<()> {
    if !s.is_finite() || s.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "|s| = {} lies on or beyond the pole, derivatives are singular",
            s.abs()
        )));
    }
    Ok(())
}

/// `(∂H_c/∂s, ∂H_c/∂φ)`.
pub fn gradient(pt: &PhasePoint, cp: &Couplings) -> Result<[f64; 2]> {
    check_interior(pt.s)?;
    Ok(gradient_unchecked(pt.s, pt.phi, cp))
}

#[inline]
fn gradient_unchecked(s: f64, phi: f64, cp: &Couplings) -> [f64; 2] {
    let u = 1.0 - s * s;
    let r = u.sqrt();
    let (sin_p, cos_p) = phi.sin_cos();
    let d_s =
        0.5 * (-cp.gamma_eff - cp.c_z * s - cp.delta0 * s / r * cos_p + cp.c_y * s * sin_p * sin_p);
    let d_phi = 0.5 * (-cp.delta0 * r * sin_p - cp.c_y * u * sin_p * cos_p);
    [d_s, d_phi]
}

/// Symmetric Hessian `[[H_ss, H_sφ], [H_sφ, H_φφ]]`.
pub fn hessian(pt: &PhasePoint, cp: &Couplings) -> Result<[[f64; 2]; 2]> {
    check_interior(pt.s)?;
    Ok(hessian_unchecked(pt.s, pt.phi, cp))
}

#[inline]
fn hessian_unchecked(s: f64, phi: f64, cp: &Couplings) -> [[f64; 2]; 2] {
    let u = 1.0 - s * s;
    let r = u.sqrt();
    let (sin_p, cos_p) = phi.sin_cos();
    let cos_2p = cos_p * cos_p - sin_p * sin_p;
    let h_ss = 0.5 * (-cp.c_z - cp.delta0 * cos_p / (u * r) + cp.c_y * sin_p * sin_p);
    let h_sp = 0.5 * (cp.delta0 * s / r * sin_p + 2.0 * cp.c_y * s * sin_p * cos_p);
    let h_pp = 0.5 * (-cp.delta0 * r * cos_p - cp.c_y * u * cos_2p);
    [[h_ss, h_sp], [h_sp, h_pp]]
}

/// `(ds/dt, dφ/dt)`.
pub fn hamilton_rhs(pt: &PhasePoint, cp: &Couplings) -> Result<(f64, f64)> {
    let [d_s, d_phi] = gradient(pt, cp)?;
    Ok((2.0 * d_phi, -2.0 * d_s))
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn sym2_eigenvalues(m: &[[f64; 2]; 2]) -> [f64; 2] {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let rad = half_diff.hypot(m[0][1]);
    [mean - rad, mean + rad]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    /// Elliptic: Hessian definite.
    Center,
    /// Hyperbolic: Hessian indefinite.
    Saddle,
    /// Hessian (near) singular, typically a bifurcation point.
    Degenerate,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Center => "center",
            Stability::Saddle => "saddle",
            Stability::Degenerate => "degenerate",
        }
    }
}

impl std::str::FromStr for Stability {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" => Ok(Stability::Center),
            "saddle" => Ok(Stability::Saddle),
            "degenerate" => Ok(Stability::Degenerate),
            other => Err(Error::Domain(format!("unknown stability tag {other:?}"))),
        }
    }
}

pub const DEGENERATE_EIG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub point: PhasePoint,
    pub energy: f64,
    pub stability: Stability,
    pub hessian_eigs: [f64; 2],
}

impl FixedPoint {
    pub fn is_center(&self) -> bool {
        self.stability == Stability::Center
    }
    pub fn is_saddle(&self) -> bool {
        self.stability == Stability::Saddle
    }
}

/// Stability of a stationary point from the analytic Hessian.
pub fn classify_stability(pt: &PhasePoint, cp: &Couplings) -> Result<(Stability, [f64; 2])> {
    let eigs = sym2_eigenvalues(&hessian(pt, cp)?);
    let tag = if eigs.iter().any(|e| e.abs() < DEGENERATE_EIG_TOL) {
        Stability::Degenerate
    } else if eigs[0] * eigs[1] > 0.0 {
        Stability::Center
    } else {
        Stability::Saddle
    };
    Ok((tag, eigs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub grid_s: usize,
    pub grid_phi: usize,
    pub merge_distance: f64,
    pub max_newton_iter: usize,
    /// Converged when `|∇H_c|` falls below this.
    pub grad_tol: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            grid_s: 400,
            grid_phi: 400,
            merge_distance: 1e-6,
            max_newton_iter: 200,
            grad_tol: 1e-13,
        }
    }
}

/// All stationary points of `H_c`.
///
/// A `grid_s × grid_phi` lattice is scanned for cells across which both
/// gradient components change sign; each such cell seeds a damped Newton
/// iteration on `∇H_c = 0`. Converged roots closer than `merge_distance`
/// are merged.
pub fn find_fixed_points(cp: &Couplings, opts: &FixedPointOptions) -> Vec<FixedPoint> {
    let ns = opts.grid_s.max(2);
    let np = opts.grid_phi.max(4);
    let s_lo = -POLE_GUARD;
    let s_step = 2.0 * POLE_GUARD / (ns - 1) as f64;
    let p_step = TAU / np as f64;

    // gradient on the lattice, φ periodic so np columns wrap around
    let mut grid = vec![[0.0f64; 2]; ns * np];
    for i in 0..ns {
        let s = s_lo + i as f64 * s_step;
        for j in 0..np {
            grid[i * np + j] = gradient_unchecked(s, j as f64 * p_step, cp);
        }
    }

    let straddles = |vals: [f64; 4]| {
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        lo <= 0.0 && hi >= 0.0
    };

    let mut roots: Vec<PhasePoint> = Vec::new();
    let mut discarded = 0usize;
    for i in 0..ns - 1 {
        for j in 0..np {
            let jn = (j + 1) % np;
            let corners = [
                grid[i * np + j],
                grid[i * np + jn],
                grid[(i + 1) * np + j],
                grid[(i + 1) * np + jn],
            ];
            if !straddles(corners.map(|g| g[0])) || !straddles(corners.map(|g| g[1])) {
                continue;
            }
            let seed = PhasePoint::new(s_lo + (i as f64 + 0.5) * s_step, (j as f64 + 0.5) * p_step);
            match newton(seed, cp, opts) {
                Some(root) => {
                    if !roots
                        .iter()
                        .any(|r| r.distance(&root) < opts.merge_distance)
                    {
                        roots.push(root);
                    }
                }
                None => discarded += 1,
            }
        }
    }
    if discarded > 0 {
        debug!("find_fixed_points: {discarded} seeds did not converge and were discarded");
    }

    let mut out: Vec<FixedPoint> = roots
        .into_iter()
        .filter_map(|pt| {
            let (stability, hessian_eigs) = classify_stability(&pt, cp).ok()?;
            Some(FixedPoint {
                point: pt,
                energy: hc_value(&pt, cp),
                stability,
                hessian_eigs,
            })
        })
        .collect();
    out.sort_by(|x, y| {
        x.energy
            .total_cmp(&y.energy)
            .then(x.point.phi.total_cmp(&y.point.phi))
    });
    if out.len() > 6 {
        warn!(
            "find_fixed_points: {} stationary points, parameters are likely at a degenerate (continuum) point",
            out.len()
        );
    }
    out
}

fn newton(seed: PhasePoint, cp: &Couplings, opts: &FixedPointOptions) -> Option<PhasePoint> {
    let norm = |g: [f64; 2]| g[0].hypot(g[1]);
    let (mut s, mut phi) = (seed.s, seed.phi);
    let mut g = gradient_unchecked(s, phi, cp);
    let mut gn = norm(g);
    for _ in 0..opts.max_newton_iter {
        if gn < opts.grad_tol {
            break;
        }
        let h = hessian_unchecked(s, phi, cp);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let (mut ds, mut dphi) = if det.abs() > 1e-300 {
            (
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
            )
        } else {
            (-g[0], -g[1])
        };
        // keep steps local to the seed cell scale
        let len = ds.hypot(dphi);
        if len > 0.5 {
            ds *= 0.5 / len;
            dphi *= 0.5 / len;
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let s_try = s + lambda * ds;
            if s_try.abs() <= POLE_GUARD {
                let phi_try = phi + lambda * dphi;
                let g_try = gradient_unchecked(s_try, phi_try, cp);
                let n_try = norm(g_try);
                if n_try < gn || n_try < opts.grad_tol {
                    s = s_try;
                    phi = phi_try;
                    g = g_try;
                    gn = n_try;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // roots right at the guard are pole artifacts
    if gn < 1e-10 && s.abs() < POLE_GUARD {
        Some(PhasePoint::new(s, phi))
    } else {
        None
    }
}

/// Lowest-energy center, if any.
pub fn ground_fixed_point(points: &[FixedPoint]) -> Option<FixedPoint> {
    points
        .iter()
        .filter(|f| f.is_center())
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
        .copied()
}

/// Pairs of fixed points off the `φ ∈ {0, π}` axis that are mirror images of
/// each other; returned as `(left, right)` with `left.phi < π < right.phi`.
pub fn mirror_pairs(points: &[FixedPoint], tol: f64) -> Vec<(FixedPoint, FixedPoint)> {
    let mut pairs = Vec::new();
    for (i, x) in points.iter().enumerate() {
        if x.point.phi >= PI || x.point.phi.sin().abs() < 1e-6 {
            continue;
        }
        for y in points.iter().skip(i + 1).chain(points.iter().take(i)) {
            if y.point.phi > PI && y.point.distance(&x.point.mirror()) < tol {
                pairs.push((*x, *y));
                break;
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatrixOptions {
    pub displacement: f64,
    pub step: f64,
    pub max_steps: usize,
    /// Tracing stops once the curve comes this close to a saddle.
    pub capture_radius: f64,
}

impl Default for SeparatrixOptions {
    fn default() -> Self {
        Self {
            displacement: 1e-6,
            step: 0.01,
            max_steps: 200_000,
            capture_radius: 2e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatrixCurve {
    pub saddle: FixedPoint,
    /// Polylines; a new segment starts wherever `φ` wraps.
    pub segments: Vec<Vec<PhasePoint>>,
    /// False when a branch hit the step budget.
    pub complete: bool,
}

impl SeparatrixCurve {
    pub fn points(&self) -> impl Iterator<Item = &PhasePoint> {
        self.segments.iter().flatten()
    }
}

/// Level set `H_c = E_saddle` traced along the four saddle manifolds.
pub fn separatrix_curve(
    saddle: &FixedPoint,
    cp: &Couplings,
    opts: &SeparatrixOptions,
) -> Result<SeparatrixCurve> {
    if saddle.stability != Stability::Saddle {
        return Err(Error::Domain(format!(
            "separatrix requested for a {} point",
            saddle.stability.as_str()
        )));
    }
    let pt = saddle.point;
    let h = hessian(&pt, cp)?;
    // linearized flow J = 2 [[H_φs, H_φφ], [−H_ss, −H_sφ]]
    let j = [
        [2.0 * h[0][1], 2.0 * h[1][1]],
        [-2.0 * h[0][0], -2.0 * h[0][1]],
    ];
    let lambda = (j[0][0] * j[0][0] + j[0][1] * j[1][0]).max(0.0).sqrt();
    let eigvec = |ev: f64| {
        // (J − ev) v = 0, either row gives a solution; take the better conditioned one
        let v1 = [j[0][1], ev - j[0][0]];
        let v2 = [ev - j[1][1], j[1][0]];
        let v = if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) {
            v1
        } else {
            v2
        };
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    };
    let unstable = eigvec(lambda);
    let stable = eigvec(-lambda);

    let others: Vec<PhasePoint> = find_fixed_points(cp, &FixedPointOptions::default())
        .into_iter()
        .filter(|f| f.is_saddle())
        .map(|f| f.point)
        .collect();

    let mut segments = Vec::new();
    let mut complete = true;
    for (dir, time_sign) in [(unstable, 1.0), (stable, -1.0)] {
        for sign in [1.0, -1.0] {
            let start = (
                pt.s + sign * opts.displacement * dir[0],
                pt.phi + sign * opts.displacement * dir[1],
            );
            let (mut branch, done) = trace_branch(start, time_sign, pt, &others, cp, opts);
            complete &= done;
            if time_sign < 0.0 {
                branch.reverse();
            }
            segments.extend(split_on_wrap(branch));
        }
    }
    if !complete {
        warn!("separatrix tracing hit the step budget; curve is partial");
    }
    Ok(SeparatrixCurve {
        saddle: *saddle,
        segments,
        complete,
    })
}

fn trace_branch(
    start: (f64, f64),
    time_sign: f64,
    origin: PhasePoint,
    saddles: &[PhasePoint],
    cp: &Couplings,
    opts: &SeparatrixOptions,
) -> (Vec<(f64, f64)>, bool) {
    let flow = |s: f64, phi: f64| {
        let [d_s, d_phi] = gradient_unchecked(s, phi, cp);
        (time_sign * 2.0 * d_phi, -time_sign * 2.0 * d_s)
    };
    let h = opts.step;
    let (mut s, mut phi) = start;
    let mut out = vec![(s, phi)];
    let mut left_origin = false;
    for _ in 0..opts.max_steps {
        let (k1s, k1p) = flow(s, phi);
        let (k2s, k2p) = flow(s + 0.5 * h * k1s, phi + 0.5 * h * k1p);
        let (k3s, k3p) = flow(s + 0.5 * h * k2s, phi + 0.5 * h * k2p);
        let (k4s, k4p) = flow(s + h * k3s, phi + h * k3p);
        s += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
        phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if !s.is_finite() || s.abs() > POLE_GUARD {
            return (out, true);
        }
        out.push((s, phi));
        let here = PhasePoint::new(s, phi);
        let d_origin = here.distance(&origin);
        if !left_origin {
            left_origin = d_origin > 10.0 * opts.capture_radius;
            continue;
        }
        if d_origin < opts.capture_radius
            || saddles
                .iter()
                .any(|q| here.distance(q) < opts.capture_radius)
        {
            return (out, true);
        }
    }
    (out, false)
}

fn split_on_wrap(raw: Vec<(f64, f64)>) -> Vec<Vec<PhasePoint>> {
    let mut segments: Vec<Vec<PhasePoint>> = Vec::new();
    let mut current: Vec<PhasePoint> = Vec::new();
    let mut last_turn: Option<f64> = None;
    for (s, phi) in raw {
        let turn = (phi / TAU).floor();
        if last_turn.is_some_and(|t| t != turn) && !current.is_empty() {
            segments.push(std::mem::take(&mut current));
        }
        last_turn = Some(turn);
        let p = PhasePoint::new(s, phi);
        if current
            .last()
            .is_none_or(|q: &PhasePoint| q.distance(&p) > 1e-12)
        {
            current.push(p);
        }
    }
    if !current.is_empty() {
        segments.push(current);
    }
    segments
}

/// One fixed-point branch followed across the `γ` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub id: usize,
    /// `(γ, fixed point)` in grid order.
    pub points: Vec<(f64, FixedPoint)>,
}

impl Branch {
    pub fn birth(&self) -> f64 {
        self.points.first().map(|p| p.0).unwrap_or(f64::NAN)
    }
    pub fn death(&self) -> f64 {
        self.points.last().map(|p| p.0).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Continuation {
    pub gamma_grid: Vec<f64>,
    pub branches: Vec<Branch>,
    /// Number of fixed points at each grid value.
    pub counts: Vec<usize>,
    /// Number of linking decisions that had more than one candidate.
    pub ambiguous_links: usize,
}

impl Continuation {
    /// Grid values at which branches are born or die (interior of the grid only).
    pub fn bifurcations(&self) -> Vec<f64> {
        let (first, last) = match (self.gamma_grid.first(), self.gamma_grid.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Vec::new(),
        };
        let mut out: Vec<f64> = self
            .branches
            .iter()
            .flat_map(|b| [b.birth(), b.death()])
            .filter(|g| *g != first && *g != last)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub fixed_points: FixedPointOptions,
    pub link_threshold: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            fixed_points: FixedPointOptions::default(),
            link_threshold: 0.5,
        }
    }
}

/// Fixed points of the averaged model across a grid of physical biases `γ`
/// (the effective bias is `γ J0(A/ω)`), linked into persistent branches.
pub fn continue_in_gamma(
    p: &ModelParams,
    gamma_grid: &[f64],
    opts: &ContinuationOptions,
) -> Result<Continuation> {
    p.validate()?;
    let increasing = gamma_grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = gamma_grid.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::Config("gamma grid must be strictly monotone".into()));
    }
    let base = Couplings::from_model(p)?;
    let scale = if p.gamma != 0.0 {
        base.gamma_eff / p.gamma
    } else {
        derive_effective(&ModelParams { gamma: 1.0, ..*p })?.gamma_eff
    };

    let per_gamma: Vec<Vec<FixedPoint>> = gamma_grid
        .par_iter()
        .map(|&g| find_fixed_points(&base.with_gamma_eff(g * scale), &opts.fixed_points))
        .collect();

    let mut branches: Vec<Branch> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut counts = Vec::with_capacity(gamma_grid.len());
    let mut ambiguous = 0;
    for (&g, fps) in gamma_grid.iter().zip(&per_gamma) {
        counts.push(fps.len());
        let mut taken = vec![false; fps.len()];
        let mut next_active = Vec::new();

        // branches with the closest candidate claim first
        let mut order: Vec<(usize, f64)> = active
            .iter()
            .map(|&bid| {
                let last = branches[bid].points.last().unwrap().1;
                let best = fps
                    .iter()
                    .map(|f| f.point.distance(&last.point))
                    .fold(f64::INFINITY, f64::min);
                (bid, best)
            })
            .collect();
        order.sort_by(|x, y| x.1.total_cmp(&y.1));

        for (bid, _) in order {
            let last = branches[bid].points.last().unwrap().1;
            let candidates: Vec<usize> = (0..fps.len())
                .filter(|&k| !taken[k] && fps[k].point.distance(&last.point) < opts.link_threshold)
                .collect();
            if candidates.len() > 1 {
                ambiguous += 1;
                debug!(
                    "continuation: {} candidates for branch {bid} at gamma = {g}",
                    candidates.len()
                );
            }
            // nearest in phase space, energy continuity breaks near ties
            let pick = candidates.into_iter().min_by(|&x, &y| {
                let dx = fps[x].point.distance(&last.point);
                let dy = fps[y].point.distance(&last.point);
                if (dx - dy).abs() > 1e-9 {
                    dx.total_cmp(&dy)
                } else {
                    let ex = (fps[x].energy - last.energy).abs();
                    let ey = (fps[y].energy - last.energy).abs();
                    ex.total_cmp(&ey)
                }
            });
            if let Some(k) = pick {
                taken[k] = true;
                branches[bid].points.push((g, fps[k]));
                next_active.push(bid);
            }
        }
        for (k, f) in fps.iter().enumerate() {
            if !taken[k] {
                let id = branches.len();
                branches.push(Branch {
                    id,
                    points: vec![(g, *f)],
                });
                next_active.push(id);
            }
        }
        active = next_active;
    }
    Ok(Continuation {
        gamma_grid: gamma_grid.to_vec(),
        branches,
        counts,
        ambiguous_links: ambiguous,
    })
}

/// Contour samples of `H_c` on a regular grid, for portrait plots.
pub fn energy_grid(cp: &Couplings, n_s: usize, n_phi: usize) -> Vec<(PhasePoint, f64)> {
    let mut out = Vec::with_capacity(n_s * n_phi);
    for i in 0..n_s {
        let s = -1.0 + 2.0 * (i as f64 + 0.5) / n_s as f64;
        for j in 0..n_phi {
            let pt = PhasePoint::new(s, TAU * j as f64 / n_phi as f64);
            out.push((pt, hc_value(&pt, cp)));
        }
    }
    out
}

/// One polyline of an `H_c` level set. `φ` runs over `[0, 2π]` without wrapping.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub energy: f64,
    pub points: Vec<PhasePoint>,
    pub closed: bool,
}

/// Level sets of `H_c` by marching squares on an `n_s × n_phi` cell grid,
/// stitched into polylines.
pub fn contour_lines(
    cp: &Couplings,
    levels: &[f64],
    n_s: usize,
    n_phi: usize,
) -> Result<Vec<Contour>> {
    if n_s < 2 || n_phi < 2 {
        return Err(Error::Config(format!(
            "contour grid must be at least 2x2, got {n_s}x{n_phi}"
        )));
    }
    let s_at = |i: usize| -POLE_GUARD + 2.0 * POLE_GUARD * i as f64 / n_s as f64;
    let phi_at = |j: usize| TAU * j as f64 / n_phi as f64;
    let values: Vec<Vec<f64>> = (0..=n_s)
        .map(|i| {
            (0..=n_phi)
                .map(|j| {
                    hc_value(
                        &PhasePoint {
                            s: s_at(i),
                            phi: phi_at(j),
                        },
                        cp,
                    )
                })
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    for &level in levels {
        // edge ids: (0, i, j) joins (i,j)-(i,j+1); (1, i, j) joins (i,j)-(i+1,j)
        let crossing = |e: (u8, usize, usize)| -> Option<PhasePoint> {
            let (k, i, j) = e;
            let (i2, j2) = if k == 0 { (i, j + 1) } else { (i + 1, j) };
            let (v1, v2) = (values[i][j] - level, values[i2][j2] - level);
            if (v1 >= 0.0) == (v2 >= 0.0) {
                return None;
            }
            let t = v1 / (v1 - v2);
            Some(PhasePoint {
                s: s_at(i) + t * (s_at(i2) - s_at(i)),
                phi: phi_at(j) + t * (phi_at(j2) - phi_at(j)),
            })
        };
        // (orientation, i, j): 0 is the edge along φ, 1 the edge along s
        type Edge = (u8, usize, usize);
        let mut links: Vec<(Edge, Edge)> = Vec::new();
        for (i, row) in values.iter().enumerate().take(n_s) {
            for (j, &corner) in row.iter().enumerate().take(n_phi) {
                let edges = [(0, i, j), (1, i, j + 1), (0, i + 1, j), (1, i, j)];
                let hits: Vec<usize> = (0..4).filter(|&k| crossing(edges[k]).is_some()).collect();
                match hits.len() {
                    2 => links.push((edges[hits[0]], edges[hits[1]])),
                    4 => {
                        let center = hc_value(
                            &PhasePoint {
                                s: 0.5 * (s_at(i) + s_at(i + 1)),
                                phi: 0.5 * (phi_at(j) + phi_at(j + 1)),
                            },
                            cp,
                        );
                        if (center >= level) == (corner >= level) {
                            links.push((edges[0], edges[1]));
                            links.push((edges[2], edges[3]));
                        } else {
                            links.push((edges[0], edges[3]));
                            links.push((edges[1], edges[2]));
                        }
                    }
                    _ => {}
                }
            }
        }
        let mut adjacency: std::collections::HashMap<Edge, Vec<usize>> =
            std::collections::HashMap::new();
        for (k, (a, b)) in links.iter().enumerate() {
            adjacency.entry(*a).or_default().push(k);
            adjacency.entry(*b).or_default().push(k);
        }
        let mut used = vec![false; links.len()];
        // open chains first, starting from their free ends, then closed loops
        let mut starts: Vec<(u8, usize, usize)> = adjacency
            .iter()
            .filter(|(_, v)| v.len() == 1)
            .map(|(e, _)| *e)
            .collect();
        starts.sort_unstable();
        let mut loop_starts: Vec<(u8, usize, usize)> = links.iter().map(|l| l.0).collect();
        loop_starts.sort_unstable();
        for (start, closed_hint) in starts
            .into_iter()
            .map(|e| (e, false))
            .chain(loop_starts.into_iter().map(|e| (e, true)))
        {
            let mut edge = start;
            let mut chain = Vec::new();
            while let Some(&k) = adjacency[&edge].iter().find(|&&k| !used[k]) {
                used[k] = true;
                if chain.is_empty() {
                    chain.push(crossing(edge).expect("linked edges are crossed"));
                }
                edge = if links[k].0 == edge {
                    links[k].1
                } else {
                    links[k].0
                };
                chain.push(crossing(edge).expect("linked edges are crossed"));
            }
            if chain.len() >= 2 {
                out.push(Contour {
                    energy: level,
                    closed: closed_hint && edge == start,
                    points: chain,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fig2(gamma_eff: f64) -> Couplings {
        Couplings::new(gamma_eff, 0.2, 0.4, 0.6)
    }

    #[test]
    fn energy_examples() {
        let cp = Couplings::new(0.0, 0.2, 0.0, 0.0);
        assert_abs_diff_eq!(
            hc_value(&PhasePoint::new(0.0, 0.0), &cp),
            0.1,
            epsilon = 1e-15
        );
        let cp = fig2(0.0);
        assert_abs_diff_eq!(
            hc_value(&PhasePoint::new(0.0, PI), &cp),
            -0.1,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            hc_value(&PhasePoint::new(0.0, PI / 2.0), &cp),
            -0.15,
            epsilon = 1e-15
        );
    }

    #[test]
    fn free_precession() {
        let cp = Couplings::new(1.0, 0.0, 0.0, 0.0);
        let (ds, dphi) = hamilton_rhs(&PhasePoint::new(0.3, 1.0), &cp).unwrap();
        assert_abs_diff_eq!(ds, 0.0);
        assert_abs_diff_eq!(dphi, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn origin_is_stationary_for_fig2() {
        let (ds, dphi) = hamilton_rhs(&PhasePoint::new(0.0, 0.0), &fig2(0.0)).unwrap();
        assert_eq!((ds, dphi), (0.0, 0.0));
    }

    #[test]
    fn pole_is_a_domain_error() {
        assert!(matches!(
            hamilton_rhs(&PhasePoint::new(1.0, 0.0), &fig2(0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn stability_examples() {
        let cp = fig2(0.0);
        let (tag, eigs) = classify_stability(&PhasePoint::new(0.0, 0.0), &cp).unwrap();
        assert_eq!(tag, Stability::Center);
        assert_abs_diff_eq!(eigs[0], -0.4, epsilon = 1e-14);
        assert_abs_diff_eq!(eigs[1], -0.3, epsilon = 1e-14);

        let h = hessian(&PhasePoint::new(0.75f64.sqrt(), PI), &cp).unwrap();
        assert_abs_diff_eq!(h[0][0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(h[1][1], -0.025, epsilon = 1e-12);
        let (tag, _) = classify_stability(&PhasePoint::new(0.75f64.sqrt(), PI), &cp).unwrap();
        assert_eq!(tag, Stability::Saddle);

        let linear = Couplings::new(0.0, 0.2, 0.0, 0.0);
        let (tag, _) = classify_stability(&PhasePoint::new(0.0, PI), &linear).unwrap();
        assert_eq!(tag, Stability::Center);
    }

    #[test]
    fn linear_census() {
        let fps = find_fixed_points(
            &Couplings::new(0.0, 0.2, 0.0, 0.0),
            &FixedPointOptions::default(),
        );
        assert_eq!(fps.len(), 2);
        assert_abs_diff_eq!(fps[0].energy, -0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(fps[1].energy, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(fps[0].point.phi, PI, epsilon = 1e-9);
        assert_abs_diff_eq!(fps[1].point.phi, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn mirror_pair_detection() {
        let fps = find_fixed_points(&fig2(0.0), &FixedPointOptions::default());
        let pairs = mirror_pairs(&fps, 1e-8);
        assert_eq!(pairs.len(), 1);
        let (l, r) = pairs[0];
        assert!(l.point.phi < PI && r.point.phi > PI);
        assert_abs_diff_eq!(l.energy, r.energy, epsilon = 1e-12);
    }

    #[test]
    fn separatrix_requires_saddle() {
        let cp = fig2(0.0);
        let fps = find_fixed_points(&cp, &FixedPointOptions::default());
        let center = fps.iter().find(|f| f.is_center()).unwrap();
        assert!(separatrix_curve(center, &cp, &SeparatrixOptions::default()).is_err());
    }

    #[test]
    fn non_monotone_grid_rejected() {
        let p = ModelParams::undriven(0.0, 0.2, 0.0);
        assert!(continue_in_gamma(&p, &[0.0, 1.0, 0.5], &ContinuationOptions::default()).is_err());
    }

    #[test]
    fn phase_difference_wraps() {
        assert_abs_diff_eq!(phase_difference(0.1, TAU - 0.1), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(phase_difference(TAU - 0.1, 0.1), -0.2, epsilon = 1e-15);
    }

    #[test]
    fn contours_follow_their_level() {
        let cp = fig2(0.0);
        let lines = contour_lines(&cp, &[-0.12, 0.0, 0.05], 120, 240).unwrap();
        assert!(!lines.is_empty());
        for c in &lines {
            for p in &c.points {
                assert!(
                    (hc_value(p, &cp) - c.energy).abs() < 2e-3,
                    "{p:?} off level {}",
                    c.energy
                );
            }
        }
        // small loops around the lowest centers are closed
        assert!(lines.iter().any(|c| c.energy == -0.12 && c.closed));
    }

    #[test]
    fn contour_grid_must_be_nontrivial() {
        assert!(contour_lines(&fig2(0.0), &[0.0], 1, 10).is_err());
    }
}
