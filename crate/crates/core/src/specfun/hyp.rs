use serde::{Deserialize, Serialize};

use super::gamma::{gamma_complex, rgamma};
use super::{near_nonpositive_integer, SpecialError};
use crate::C64;

const MAX_TERMS: usize = 100_000;
const REL_TOL: f64 = 1e-16;
/// Minimum distance of `c − a − b` from an integer for the `1 − z` connection.
const CONNECTION_GAP: f64 = 0.05;

/// Parameters `(a, b; c)` of the Gauss hypergeometric function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypergeometricParams {
    pub a: C64,
    pub b: C64,
    pub c: C64,
}

impl HypergeometricParams {
    pub fn new(a: C64, b: C64, c: C64) -> Self {
        Self { a, b, c }
    }

    pub fn real(a: f64, b: f64, c: f64) -> Self {
        Self::new(C64::new(a, 0.0), C64::new(b, 0.0), C64::new(c, 0.0))
    }
}

fn series(a: C64, b: C64, c: C64, z: C64) -> Result<C64, SpecialError> {
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut small = 0;
    for k in 0..MAX_TERMS {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if term.norm() == 0.0 {
            return Ok(sum);
        }
        if term.norm() <= REL_TOL * sum.norm() {
            small += 1;
            if small == 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(SpecialError::NonConvergence(MAX_TERMS))
}

/// `₂F₁(a, b; c; z)` for `|z| < 1`.
///
/// Maclaurin series for `|z| ≤ ½` and wherever the `1 − z` connection is
/// unavailable; for real `z ∈ (½, 1)` with `c − a − b` away from the
/// integers, the connection formula onto two series in `1 − z`.
pub fn hyp2f1(params: &HypergeometricParams, z: C64) -> Result<C64, SpecialError> {
    let HypergeometricParams { a, b, c } = *params;
    if near_nonpositive_integer(c, 0.0) {
        return Err(SpecialError::InvalidC(c));
    }
    if !(z.norm() < 1.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(SpecialError::Domain(z));
    }
    if z.norm() == 0.0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let d = c - a - b;
    let gap = if d.im.abs() > CONNECTION_GAP {
        f64::INFINITY
    } else {
        (d.re - d.re.round()).abs()
    };
    if z.im == 0.0 && z.re > 0.5 && gap > CONNECTION_GAP {
        let w = 1.0 - z;
        let gc = gamma_complex(c)?;
        let first = gc * gamma_complex(d)? * rgamma(c - a) * rgamma(c - b);
        let second = gc * gamma_complex(-d)? * rgamma(a) * rgamma(b);
        let mut out = C64::new(0.0, 0.0);
        if first != C64::new(0.0, 0.0) {
            out += first * series(a, b, 1.0 - d, w)?;
        }
        if second != C64::new(0.0, 0.0) {
            out += second * w.powc(d) * series(c - a, c - b, 1.0 + d, w)?;
        }
        return Ok(out);
    }
    series(a, b, c, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    /// Plain Maclaurin sum with a fixed, generous number of terms.
    fn oracle(a: f64, b: f64, c: f64, z: f64) -> f64 {
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 0..200_000 {
            let k = k as f64;
            term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
            sum += term;
        }
        sum
    }

    #[test]
    fn zero_argument() {
        let p = HypergeometricParams::real(3.7, -2.2, 0.4);
        assert_eq!(hyp2f1(&p, r(0.0)).unwrap(), r(1.0));
    }

    #[test]
    fn log_closed_form() {
        let p = HypergeometricParams::real(1.0, 1.0, 2.0);
        let got = hyp2f1(&p, r(0.5)).unwrap();
        assert!((got.re - 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!((got.re - 1.386_294_361).abs() < 1e-9);
        assert!((got.re - oracle(1.0, 1.0, 2.0, 0.5)).abs() < 1e-14);
        for z in [0.7, 0.9, 0.99] {
            let got = hyp2f1(&p, r(z)).unwrap().re;
            assert!((got + (1.0 - z).ln() / z).abs() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn terminating_polynomial() {
        let p = HypergeometricParams::real(-1.0, 3.0, 2.0);
        assert!((hyp2f1(&p, r(0.4)).unwrap().re - 0.4).abs() < 1e-15);
        assert!((hyp2f1(&p, r(0.9)).unwrap().re - (1.0 - 1.5 * 0.9)).abs() < 1e-14);
    }

    #[test]
    fn binomial_and_arcsin_closed_forms() {
        // ₂F₁(a, b; b; z) = (1−z)^{−a}
        let p = HypergeometricParams::real(-0.5, 1.0, 1.0);
        for z in [0.2, 0.6, 0.95, 0.9975] {
            assert!((hyp2f1(&p, r(z)).unwrap().re - (1.0 - z).sqrt()).abs() < 1e-13);
        }
        // ₂F₁(½, ½; 3/2; z²) = arcsin(z)/z
        let p = HypergeometricParams::real(0.5, 0.5, 1.5);
        for x in [0.3, 0.8, 0.97] {
            let got = hyp2f1(&p, r(x * x)).unwrap().re;
            assert!((got - x.asin() / x).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn integer_gap_falls_back_to_series() {
        // c − a − b = 0 (logarithmic case)
        let p = HypergeometricParams::real(0.5, 0.5, 1.0);
        let got = hyp2f1(&p, r(0.8)).unwrap().re;
        assert!((got - oracle(0.5, 0.5, 1.0, 0.8)).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            hyp2f1(&HypergeometricParams::real(1.0, 1.0, -2.0), r(0.3)),
            Err(SpecialError::InvalidC(_))
        ));
        assert!(matches!(
            hyp2f1(&HypergeometricParams::real(1.0, 1.0, 2.0), r(1.0)),
            Err(SpecialError::Domain(_))
        ));
    }

    #[test]
    fn complex_parameters_match_series() {
        let p = HypergeometricParams::new(C64::new(0.3, 1.1), C64::new(-0.7, 0.4), r(0.5));
        let direct = series(p.a, p.b, p.c, r(0.8)).unwrap();
        let conn = hyp2f1(&p, r(0.8)).unwrap();
        assert!((direct - conn).norm() < 1e-12 * direct.norm());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn euler_transformation(a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.2f64..3.0, z in 0.0f64..0.9) {
            let p = HypergeometricParams::real(a, b, c);
            let lhs = hyp2f1(&p, r(z)).unwrap().re;
            let q = HypergeometricParams::real(c - a, c - b, c);
            let rhs = (1.0 - z).powf(c - a - b) * hyp2f1(&q, r(z)).unwrap().re;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
        }

        #[test]
        fn agrees_with_plain_series(a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.2f64..3.0, z in 0.0f64..0.9) {
            let got = hyp2f1(&HypergeometricParams::real(a, b, c), r(z)).unwrap().re;
            let want = oracle(a, b, c, z);
            prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }
}
