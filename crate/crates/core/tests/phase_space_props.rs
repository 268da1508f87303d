use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twomode::dynamics::{effective_energy, evolve_effective, IntegratorConfig};
use twomode::phase_space::{
    find_fixed_points, gradient, hamilton_rhs, hc_value, hessian, phase_difference,
    separatrix_curve, FixedPointOptions, SeparatrixOptions, Stability,
};
use twomode::{AmplitudePair, Couplings, PhasePoint};

fn random_couplings(rng: &mut ChaCha8Rng) -> Couplings {
    Couplings::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.5),
        rng.gen_range(0.0..1.5),
    )
}

/// Fourth-order central difference of `f` at zero.
fn d1(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}

fn d2(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (-f(-2.0 * h) + 16.0 * f(-h) - 30.0 * f(0.0) + 16.0 * f(h) - f(2.0 * h)) / (12.0 * h * h)
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let cp = random_couplings(&mut rng);
        let (s, phi) = (rng.gen_range(-0.95..0.95), rng.gen_range(0.0..TAU));
        let f = |ds: f64, dp: f64| {
            hc_value(
                &PhasePoint {
                    s: s + ds,
                    phi: phi + dp,
                },
                &cp,
            )
        };
        let g = gradient(&PhasePoint::new(s, phi), &cp).unwrap();
        let hs = hessian(&PhasePoint::new(s, phi), &cp).unwrap();
        let fd_s = d1(|x| f(x, 0.0), h);
        let fd_p = d1(|x| f(0.0, x), h);
        let fd_ss = d2(|x| f(x, 0.0), h);
        let fd_pp = d2(|x| f(0.0, x), h);
        let fd_sp = d1(|y| d1(|x| f(x, y), h), h);
        for err in [
            g[0] - fd_s,
            g[1] - fd_p,
            hs[0][0] - fd_ss,
            hs[1][1] - fd_pp,
            hs[0][1] - fd_sp,
            hs[1][0] - fd_sp,
        ] {
            worst = worst.max(err.abs());
        }
    }
    assert!(worst < 1e-6, "max derivative error {worst:e}");
}

fn rk4_flow(pt: (f64, f64), cp: &Couplings, h: f64, steps: usize) -> (f64, f64) {
    let f = |s: f64, phi: f64| hamilton_rhs(&PhasePoint { s, phi }, cp).unwrap();
    let (mut s, mut phi) = pt;
    for _ in 0..steps {
        let k1 = f(s, phi);
        let k2 = f(s + 0.5 * h * k1.0, phi + 0.5 * h * k1.1);
        let k3 = f(s + 0.5 * h * k2.0, phi + 0.5 * h * k2.1);
        let k4 = f(s + h * k3.0, phi + h * k3.1);
        s += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        phi += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (s, phi)
}

#[test]
fn flow_conserves_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let cp = random_couplings(&mut rng);
        let start = (rng.gen_range(-0.8..0.8), rng.gen_range(0.0..TAU));
        let e0 = hc_value(
            &PhasePoint {
                s: start.0,
                phi: start.1,
            },
            &cp,
        );
        let (s, phi) = rk4_flow(start, &cp, 2e-3, 1000);
        let e1 = hc_value(&PhasePoint { s, phi }, &cp);
        assert!(
            (e1 - e0).abs() < 1e-9,
            "{cp:?}: drift {:e}",
            (e1 - e0).abs()
        );
    }
}

#[test]
fn amplitude_energy_is_conserved_by_effective_evolution() {
    let cp = Couplings::new(0.1, 0.2, 0.4, 0.6);
    let eff = cp.effective();
    let start = AmplitudePair::from_phase_point(PhasePoint::new(0.3, 1.0), 0.0);
    let cfg = IntegratorConfig::default();
    let traj = evolve_effective(&start, &eff, cp.delta0, 1000.0 * cfg.dt, &cfg).unwrap();
    let e0 = effective_energy(&start, &eff, cp.delta0);
    let drift = traj
        .samples
        .iter()
        .map(|x| (effective_energy(x, &eff, cp.delta0) - e0).abs())
        .fold(0.0, f64::max);
    assert!(drift < 1e-9, "energy drift {drift:e}");
}

#[test]
fn hamilton_rhs_matches_amplitude_dynamics() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = 1e-4;
    let cfg = IntegratorConfig::default().with_dt(h / 20.0);
    for _ in 0..20 {
        let cp = random_couplings(&mut rng);
        let pt = PhasePoint::new(rng.gen_range(-0.9..0.9), rng.gen_range(0.0..TAU));
        let start = AmplitudePair::from_phase_point(pt, 0.0);
        let traj = evolve_effective(&start, &cp.effective(), cp.delta0, h, &cfg).unwrap();
        let mid = traj.at(0.5 * h).unwrap().phase_point();
        let end = traj.last().unwrap().phase_point();
        // midpoint rule keeps the difference quotient second order
        let (ds, dphi) = hamilton_rhs(&mid, &cp).unwrap();
        let est_s = (end.s - pt.s) / h;
        let est_phi = phase_difference(end.phi, pt.phi) / h;
        assert!((est_s - ds).abs() < 1e-7, "ds/dt: {est_s} vs {ds}");
        assert!(
            (est_phi - dphi).abs() < 1e-7,
            "dphi/dt: {est_phi} vs {dphi}"
        );
    }
}

#[test]
fn fixed_points_are_stationary_under_amplitude_evolution() {
    for cp in [
        Couplings::new(0.0, 0.2, 0.4, 0.6),
        Couplings::new(-0.1, 0.2, 0.4, 0.6),
        Couplings::new(0.3, 0.2, 1.0, 0.0),
    ] {
        let eff = cp.effective();
        for f in find_fixed_points(&cp, &FixedPointOptions::default()) {
            // saddles are unstable, so only centers can be held for long times
            if !f.is_center() || f.point.s.abs() > 0.999 {
                continue;
            }
            let cfg = IntegratorConfig::default().with_sample_every(100);
            let traj = evolve_effective(
                &AmplitudePair::from_phase_point(f.point, 0.0),
                &eff,
                cp.delta0,
                1000.0,
                &cfg,
            )
            .unwrap();
            for x in &traj.samples {
                let d = x.phase_point().distance(&f.point);
                assert!(d < 1e-6, "{f:?} moved by {d:e}");
            }
        }
    }
}

/// Closed-form census of the fixed points at zero bias.
fn census_oracle(cp: &Couplings) -> Vec<(f64, f64)> {
    assert_eq!(cp.gamma_eff, 0.0);
    let mut out = vec![(0.0, 0.0), (0.0, PI)];
    // φ = π with s ≠ 0 needs √(1 − s²) = Δ0 / c_z
    let r = cp.delta0 / cp.c_z;
    if r < 1.0 {
        let s = (1.0 - r * r).sqrt();
        out.push((s, PI));
        out.push((-s, PI));
    }
    // cos φ = −Δ0 / c_y at s = 0
    if cp.c_y > cp.delta0 {
        let phi = (-cp.delta0 / cp.c_y).acos();
        out.push((0.0, phi));
        out.push((0.0, TAU - phi));
    }
    out
}

#[test]
fn zero_bias_census_matches_closed_form() {
    for (dz, dy) in [(0.4, 0.6), (0.3, 0.9), (0.1, 0.15), (0.25, 0.3), (0.9, 0.1)] {
        let cp = Couplings::new(0.0, 0.2, dz, dy);
        let want = census_oracle(&cp);
        let got = find_fixed_points(&cp, &FixedPointOptions::default());
        assert_eq!(got.len(), want.len(), "{cp:?}: {got:?}");
        for (s, phi) in want {
            let target = PhasePoint::new(s, phi);
            assert!(
                got.iter().any(|f| f.point.distance(&target) < 1e-8),
                "{cp:?}: missing ({s}, {phi})"
            );
        }
    }
}

#[test]
fn off_axis_pairs_match_closed_form_at_finite_bias() {
    // s = γ′/(c_y − c_z), cos φ = −Δ0/(c_y √(1 − s²))
    for g in [-0.15, -0.05, 0.05, 0.12] {
        let cp = Couplings::new(g, 0.2, 0.4, 0.6);
        let s = g / (cp.c_y - cp.c_z);
        let phi = (-cp.delta0 / (cp.c_y * (1.0 - s * s).sqrt())).acos();
        let got = find_fixed_points(&cp, &FixedPointOptions::default());
        for target in [PhasePoint::new(s, phi), PhasePoint::new(s, TAU - phi)] {
            let f = got
                .iter()
                .find(|f| f.point.distance(&target) < 1e-8)
                .expect("pair member");
            assert_eq!(f.stability, Stability::Center);
        }
    }
}

#[test]
fn separatrix_lies_on_its_level_and_is_mirror_symmetric() {
    let cp = Couplings::new(0.0, 0.2, 0.4, 0.6);
    let fps = find_fixed_points(&cp, &FixedPointOptions::default());
    let saddle = fps
        .iter()
        .find(|f| f.stability == Stability::Saddle && f.point.s > 0.0)
        .unwrap();
    let curve = separatrix_curve(saddle, &cp, &SeparatrixOptions::default()).unwrap();
    assert!(curve.complete);
    let pts: Vec<&PhasePoint> = curve.points().collect();
    assert!(pts.len() > 100);
    for p in &pts {
        assert!((hc_value(p, &cp) + 0.125).abs() < 1e-6, "{p:?}");
    }
    // every mirrored point lies close to some curve point
    for p in pts.iter().step_by(17) {
        let m = p.mirror();
        let d = pts
            .iter()
            .map(|q| q.distance(&m))
            .fold(f64::INFINITY, f64::min);
        assert!(d < 0.05, "mirror of {p:?} is {d} away");
    }
}

proptest! {
    #[test]
    fn energy_is_mirror_symmetric(s in -1.0f64..1.0, phi in 0.0f64..TAU, g in -2.0f64..2.0, dz in 0.0f64..2.0, dy in 0.0f64..2.0) {
        let cp = Couplings::new(g, 0.2, dz, dy);
        let a = hc_value(&PhasePoint::new(s, phi), &cp);
        let b = hc_value(&PhasePoint::new(s, TAU - phi), &cp);
        prop_assert!((a - b).abs() <= 1e-15 * (1.0 + a.abs()));
    }

    #[test]
    fn linear_levels_are_the_two_level_energies(g in -3.0f64..3.0, d in 0.01f64..1.0) {
        let cp = Couplings::new(g, d, 0.0, 0.0);
        let fps = find_fixed_points(&cp, &FixedPointOptions::default());
        prop_assert_eq!(fps.len(), 2);
        let e = 0.5 * g.hypot(d);
        prop_assert!((fps[0].energy + e).abs() < 1e-10);
        prop_assert!((fps[1].energy - e).abs() < 1e-10);
    }

    #[test]
    fn off_axis_fixed_points_pair_up(g in -0.15f64..0.15, dz in 0.0f64..0.5, dy in 0.5f64..1.5) {
        let cp = Couplings::new(g, 0.2, dz, dy);
        let fps = find_fixed_points(&cp, &FixedPointOptions::default());
        for f in fps.iter().filter(|f| (f.point.phi.sin()).abs() > 1e-6) {
            let m = f.point.mirror();
            let partner = fps.iter().find(|q| q.point.distance(&m) < 1e-8);
            prop_assert!(partner.is_some(), "no mirror partner for {:?}", f);
            prop_assert!((partner.unwrap().energy - f.energy).abs() < 1e-10);
        }
    }
}
