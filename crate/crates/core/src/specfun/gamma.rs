use std::f64::consts::PI;

use super::SpecialError;
use crate::C64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_pole(z: C64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// `sin(πx)` with exact argument reduction, so zeros at integers are exact.
fn sin_pi_real(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).round();
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

fn cos_pi_real(x: f64) -> f64 {
    sin_pi_real(x + 0.5)
}

fn sin_pi(z: C64) -> C64 {
    let y = PI * z.im;
    C64::new(sin_pi_real(z.re) * y.cosh(), cos_pi_real(z.re) * y.sinh())
}

/// `ln Γ(z)` for `Re z ≥ ½` (principal branch of the Lanczos form).
fn ln_gamma_right(z: C64) -> C64 {
    let z = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `Γ(z)`; reflection for `Re z < ½`.
pub fn gamma_complex(z: C64) -> Result<C64, SpecialError> {
    if is_pole(z) {
        return Err(SpecialError::Pole(z));
    }
    if z.re < 0.5 {
        let s = sin_pi(z);
        Ok(PI / (s * ln_gamma_right(1.0 - z).exp()))
    } else {
        Ok(ln_gamma_right(z).exp())
    }
}

/// A logarithm of `Γ(z)` (not necessarily the principal branch for `Re z < ½`).
pub fn ln_gamma_complex(z: C64) -> Result<C64, SpecialError> {
    if is_pole(z) {
        return Err(SpecialError::Pole(z));
    }
    if z.re < 0.5 {
        Ok(C64::new(PI, 0.0).ln() - sin_pi(z).ln() - ln_gamma_right(1.0 - z))
    } else {
        Ok(ln_gamma_right(z))
    }
}

/// `1/Γ(z)`, entire; exactly zero at the poles of `Γ`.
pub fn rgamma(z: C64) -> C64 {
    if is_pole(z) {
        return C64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        sin_pi(z) * ln_gamma_right(1.0 - z).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: Stirling series after shifting `Re z` above 20.
    fn stirling_gamma(z: C64) -> C64 {
        let mut shift = C64::new(1.0, 0.0);
        let mut w = z;
        while w.re < 20.0 {
            shift *= w;
            w += 1.0;
        }
        let inv = 1.0 / w;
        let inv2 = inv * inv;
        let series = inv
            * (1.0 / 12.0
                - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
        let ln = (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series;
        ln.exp() / shift
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn classical_values() {
        assert!(rel(gamma_complex(C64::new(1.0, 0.0)).unwrap(), C64::new(1.0, 0.0)) < 1e-15);
        let half = gamma_complex(C64::new(0.5, 0.0)).unwrap();
        assert!((half.re - PI.sqrt()).abs() < 1e-14 && half.im == 0.0);
        assert!((half.re - 1.772_453_851).abs() < 1e-9);
        assert!(rel(gamma_complex(C64::new(5.0, 0.0)).unwrap(), C64::new(24.0, 0.0)) < 1e-14);
        let neg_half = gamma_complex(C64::new(-0.5, 0.0)).unwrap();
        assert!((neg_half.re + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn poles_are_errors() {
        for x in [0.0, -1.0, -2.0, -17.0] {
            assert!(matches!(gamma_complex(C64::new(x, 0.0)), Err(SpecialError::Pole(_))));
            assert_eq!(rgamma(C64::new(x, 0.0)), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rgamma_vanishes_linearly_near_poles() {
        // 1/Γ(−n + ε) ≈ (−1)^n n! ε
        let eps = 1e-9;
        let v = rgamma(C64::new(-3.0 + eps, 0.0));
        assert!((v.re - (-6.0 * eps)).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_stirling_oracle() {
        for &(x, y) in &[
            (1.0, 1.0),
            (0.3, -2.5),
            (-3.7, 0.2),
            (12.5, 7.0),
            (-0.5, 9.0),
            (30.0, -20.0),
            (2.0, 40.0),
            (-20.3, 0.0),
            (49.0, 0.0),
        ] {
            let z = C64::new(x, y);
            let got = gamma_complex(z).unwrap();
            let want = stirling_gamma(z);
            assert!(rel(got, want) < 1e-12, "z = {z}: {got} vs {want}");
        }
    }

    #[test]
    fn gamma_one_plus_i() {
        let g = gamma_complex(C64::new(1.0, 1.0)).unwrap();
        assert!(rel(g, C64::new(0.498_015_668_118_356, -0.154_949_828_301_810_7)) < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn reflection_formula(x in -10.0f64..10.0, y in -3.0f64..3.0) {
            let z = C64::new(x, y);
            prop_assume!(y.abs() > 1e-3 || (x - x.round()).abs() > 1e-3);
            let lhs = gamma_complex(z).unwrap() * gamma_complex(1.0 - z).unwrap() * sin_pi(z) / PI;
            prop_assert!((lhs - 1.0).norm() < 1e-10);
        }

        #[test]
        fn recurrence(x in -8.0f64..8.0, y in -5.0f64..5.0) {
            let z = C64::new(x, y);
            prop_assume!(y.abs() > 1e-3 || (x - x.round()).abs() > 1e-3);
            let lhs = gamma_complex(z + 1.0).unwrap();
            let rhs = z * gamma_complex(z).unwrap();
            prop_assert!(rel(lhs, rhs) < 1e-12);
        }

        #[test]
        fn rgamma_is_reciprocal(x in -8.0f64..8.0, y in -5.0f64..5.0) {
            let z = C64::new(x, y);
            prop_assume!(y.abs() > 1e-3 || (x - x.round()).abs() > 1e-3);
            prop_assert!((rgamma(z) * gamma_complex(z).unwrap() - 1.0).norm() < 1e-12);
        }
    }
}
