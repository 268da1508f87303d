//! Physical drive parameters and the high-frequency effective couplings.
//!
//! Averaging the rotating-frame equations over one drive period rescales the
//! bias by `J0(A/ω)` and splits the nonlinearity into a `Z` part
//! `c (1 + J0(2A/ω)) / 2` and a new `Y` part `c (1 − J0(2A/ω)) / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the driven two-mode mean-field Hamiltonian.
///
/// `H(t) = ½ [[γ + c s, Δ0 + A sin ωt], [Δ0 + A sin ωt, −γ − c s]]` with
/// `s = |b|² − |a|²` and ħ = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub gamma: f64,
    pub delta0: f64,
    pub c: f64,
    /// Drive amplitude `A`.
    #[serde(rename = "A", alias = "amplitude")]
    pub amplitude: f64,
    pub omega: f64,
}

impl ModelParams {
    /// Undriven parameters (`A = 0`).
    pub fn undriven(gamma: f64, delta0: f64, c: f64) -> Self {
        Self {
            gamma,
            delta0,
            c,
            amplitude: 0.0,
            omega: 1.0,
        }
    }

    /// Driven parameters specified through the ratio `A/ω`.
    pub fn with_drive_ratio(gamma: f64, delta0: f64, c: f64, ratio: f64, omega: f64) -> Self {
        Self {
            gamma,
            delta0,
            c,
            amplitude: ratio * omega,
            omega,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma", self.gamma),
            ("delta0", self.delta0),
            ("c", self.c),
            ("A", self.amplitude),
            ("omega", self.omega),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        if self.delta0 < 0.0 {
            return Err(Error::Config(format!(
                "delta0 must be >= 0, got {}",
                self.delta0
            )));
        }
        if self.c < 0.0 {
            return Err(Error::Config(format!("c must be >= 0, got {}", self.c)));
        }
        if self.amplitude < 0.0 {
            return Err(Error::Config(format!(
                "A must be >= 0, got {}",
                self.amplitude
            )));
        }
        if self.amplitude != 0.0 && self.omega <= 0.0 {
            return Err(Error::Config(format!(
                "omega must be > 0 when A != 0, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    pub fn is_driven(&self) -> bool {
        self.amplitude != 0.0
    }

    /// `A/ω`, zero for the undriven model.
    pub fn drive_ratio(&self) -> f64 {
        if self.is_driven() {
            self.amplitude / self.omega
        } else {
            0.0
        }
    }

    /// Largest natural energy scale `max(Δ0, c, |γ|)`.
    pub fn natural_scale(&self) -> f64 {
        self.delta0.max(self.c).max(self.gamma.abs())
    }
}

/// Averaged couplings `(γ′, c_Z, c_Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub gamma_eff: f64,
    pub c_z: f64,
    pub c_y: f64,
}

/// Bessel function of the first kind, order zero.
///
/// Power series on `|x| <= 8`; beyond that the Hankel form
/// `sqrt(2/(πx)) (P cos(x − π/4) − Q sin(x − π/4))` with rational fits for the
/// modulus terms `P` and `Q`.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!(
            "bessel_j0 needs a finite argument, got {x}"
        )));
    }
    let x = x.abs();
    if x <= 8.0 {
        Ok(j0_series(x))
    } else {
        Ok(j0_hankel(x))
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    // terms fall below 1e-17 relative to the peak well before k = 60 for x <= 8
    while k < 60.0 {
        term *= q / (k * k);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
        k += 1.0;
    }
    sum
}

const HANKEL_PP: [f64; 7] = [
    7.969367292973471e-4,
    8.283523921074408e-2,
    1.239533716464143,
    5.447250030587687,
    8.74716500199817,
    5.303240382353949,
    1.0,
];
const HANKEL_PQ: [f64; 7] = [
    9.244088105588637e-4,
    8.562884743544745e-2,
    1.2535274390105895,
    5.470977403304171,
    8.761908832370695,
    5.306052882353947,
    1.0,
];
const HANKEL_QP: [f64; 8] = [
    -1.1366383889846916e-2,
    -1.2825271867050931,
    -1.9553954425773597e1,
    -9.320601521237683e1,
    -1.7768116798048806e2,
    -1.4707750515495118e2,
    -5.141053267665993e1,
    -6.050143506007285,
];
// monic denominator, leading 1 implied
const HANKEL_QQ: [f64; 7] = [
    6.43178256118178e1,
    8.564300259769806e2,
    3.8824018360540163e3,
    7.240467741956525e3,
    5.930727011873169e3,
    2.0620933166032783e3,
    2.420057402402914e2,
];

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn horner_monic(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(1.0, |acc, &c| acc * x + c)
}

fn j0_hankel(x: f64) -> f64 {
    let w = 5.0 / x;
    let z = w * w;
    let p = horner(&HANKEL_PP, z) / horner(&HANKEL_PQ, z);
    let q = horner(&HANKEL_QP, z) / horner_monic(&HANKEL_QQ, z);
    let xn = x - std::f64::consts::FRAC_PI_4;
    let amp = (std::f64::consts::FRAC_2_PI / x).sqrt();
    amp * (p * xn.cos() - w * q * xn.sin())
}

/// Effective couplings of the averaged model.
pub fn derive_effective(p: &ModelParams) -> Result<EffectiveParams> {
    if p.is_driven() && p.omega == 0.0 {
        return Err(Error::Domain("A != 0 requires omega != 0".into()));
    }
    let ratio = p.drive_ratio();
    let j_single = bessel_j0(ratio)?;
    let j_double = bessel_j0(2.0 * ratio)?;
    let c_z = p.c * (1.0 + j_double) / 2.0;
    // c_y from the difference keeps c_z + c_y == c to rounding
    let c_y = p.c - c_z;
    Ok(EffectiveParams {
        gamma_eff: p.gamma * j_single,
        c_z,
        c_y,
    })
}

/// Ratio `c_Z / c_Y = (1 + J0(2A/ω)) / (1 − J0(2A/ω))`; infinite when undriven.
pub fn anisotropy_ratio(drive_ratio: f64) -> Result<f64> {
    let j = bessel_j0(2.0 * drive_ratio)?;
    Ok((1.0 + j) / (1.0 - j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Direct truncated power series, kept separate from the production path.
    fn series_oracle(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for k in 0..40 {
            if k > 0 {
                fact *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (x / 2.0).powi(2 * k) / (fact * fact);
        }
        sum
    }

    #[test]
    fn j0_at_origin() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
    }

    #[test]
    fn j0_first_zero() {
        assert!(bessel_j0(2.404825557695773).unwrap().abs() < 1e-10);
    }

    #[test]
    fn j0_reference_values() {
        // mpmath.besselj(0, x) at 30 digits
        let table = [
            (1.42, 0.555_980_742_013_612_6),
            (2.84, -0.201_156_795_751_033_96),
            (7.99, 0.173_990_013_127_932_58),
            (8.0, 0.171_650_807_137_553_9),
            (8.01, 0.169_297_369_110_542_96),
            (9.5, -0.193_928_747_687_422_36),
            (12.3, 0.110_797_950_307_585_44),
            (15.0, -0.014_224_472_826_780_773),
            (17.77, -0.056_137_369_412_442_024),
            (20.0, 0.167_024_664_340_583_15),
            (-13.1, 0.212_888_197_522_060_36),
        ];
        for (x, want) in table {
            assert_abs_diff_eq!(bessel_j0(x).unwrap(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn j0_rejects_non_finite() {
        assert!(matches!(bessel_j0(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(bessel_j0(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn fig_two_couplings() {
        let p = ModelParams::with_drive_ratio(0.0, 0.2, 1.0, 1.42, 20.0);
        let e = derive_effective(&p).unwrap();
        assert_abs_diff_eq!(e.c_z, 0.4, epsilon = 5e-3);
        assert_abs_diff_eq!(e.c_y, 0.6, epsilon = 5e-3);
    }

    #[test]
    fn undriven_is_identity() {
        let e = derive_effective(&ModelParams::undriven(0.5, 0.2, 1.0)).unwrap();
        assert_eq!(e.gamma_eff, 0.5);
        assert_eq!(e.c_z, 1.0);
        assert_eq!(e.c_y, 0.0);
    }

    #[test]
    fn bias_vanishes_at_first_zero() {
        let p = ModelParams::with_drive_ratio(1.0, 0.2, 1.0, 2.404825557695773, 10.0);
        let e = derive_effective(&p).unwrap();
        assert!(e.gamma_eff.abs() < 1e-10);
        // J0(4.809651115391546) from mpmath
        let j = -0.237_536_218_201_345_25;
        assert_abs_diff_eq!(e.c_z, (1.0 + j) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.c_y, (1.0 - j) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_omega_with_drive_is_rejected() {
        let p = ModelParams {
            gamma: 0.0,
            delta0: 0.2,
            c: 1.0,
            amplitude: 1.0,
            omega: 0.0,
        };
        assert!(matches!(derive_effective(&p), Err(Error::Domain(_))));
        assert!(matches!(p.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn anisotropy_matches_couplings() {
        let p = ModelParams::with_drive_ratio(0.0, 0.2, 1.0, 1.42, 20.0);
        let e = derive_effective(&p).unwrap();
        assert_abs_diff_eq!(
            anisotropy_ratio(1.42).unwrap(),
            e.c_z / e.c_y,
            epsilon = 1e-12
        );
    }

    proptest! {
        #[test]
        fn j0_matches_series(x in -8.0f64..8.0) {
            prop_assert!((bessel_j0(x).unwrap() - series_oracle(x)).abs() < 1e-12);
        }

        #[test]
        fn couplings_sum_to_c(c in 0.0f64..5.0, ratio in 0.0f64..10.0) {
            let p = ModelParams::with_drive_ratio(0.3, 0.2, c, ratio, 7.0);
            let e = derive_effective(&p).unwrap();
            prop_assert!((e.c_z + e.c_y - c).abs() < 1e-12);
            prop_assert!(e.c_z >= 0.0 && e.c_z <= c + 1e-15);
            prop_assert!(e.c_y >= -1e-15 && e.c_y <= c);
        }
    }
}
