//! Sampled check of the growth and Lipschitz bounds on the perturbation.
//!
//! The bounds quantify over all of ℂ³ in (u, v, w); this module only samples
//! a finite box, so a passing report is evidence, not proof. Partial
//! derivatives in r and in x = Re u, y = Im u are central finite differences.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{decompose_abc, Decomposition, ExprError, PerturbationExpr, Point};
use crate::rng;
use crate::C64;

const FD_STEP: f64 = 1e-5;
const SLACK: f64 = 1e-8;
const MAX_STORED_VIOLATIONS: usize = 64;

/// Sampling region `[1−t0, 1+t0] × [0, r0] × D(u_radius) × D(v_radius) × D(w_radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub t0: f64,
    pub r0: f64,
    pub u_radius: f64,
    pub v_radius: f64,
    pub w_radius: f64,
}

impl Default for SampleBox {
    fn default() -> Self {
        Self {
            t0: 0.1,
            r0: 0.4,
            u_radius: 10.0,
            v_radius: 10.0,
            w_radius: 10.0,
        }
    }
}

impl SampleBox {
    fn validate(&self) -> Result<(), ExprError> {
        let all = [self.t0, self.r0, self.u_radius, self.v_radius, self.w_radius];
        if all.iter().any(|x| !x.is_finite() || *x < 0.0) || self.t0 == 0.0 {
            return Err(ExprError::InvalidParameters(format!("empty or invalid sampling box {self:?}")));
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        Point::new(
            1.0 - self.t0 + 2.0 * self.t0 * rng.random::<f64>(),
            self.r0 * rng.random::<f64>(),
            rng::disk(rng, self.u_radius),
            rng::disk(rng, self.v_radius),
            rng::disk(rng, self.w_radius),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// One of `estBC`, `estimateV1`, `estderF`, `estLipF`.
    pub inequality: String,
    /// Which line of the inequality group (`bound`, `lipschitz`, `r`, `xy`, `x`, `y`).
    pub form: String,
    pub t: f64,
    pub r: f64,
    pub u: C64,
    pub v: C64,
    pub w: C64,
    /// Second point for Lipschitz-type forms.
    pub u2: Option<C64>,
    pub v2: Option<C64>,
    pub w2: Option<C64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub m: f64,
    pub q: f64,
    pub p: f64,
    pub samples_checked: usize,
    /// First violations found (capped); `violation_count` has the total.
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    /// Violations of the stricter r-derivative bound `M(1+|u|^q+|v|+|w|)`.
    /// Informational; the pass/fail verdict uses the weaker form
    /// `M(1+|u|^q+(1+|u|)(|v|+|w|))`.
    pub strict_r_bound_violations: usize,
    /// Smallest M each form would have needed on these samples
    /// (`None` when the right-hand side vanished while the left did not).
    pub required_m: BTreeMap<String, Option<f64>>,
}

impl AssumptionReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Checker<'a> {
    f: &'a PerturbationExpr,
    abc: &'a Decomposition,
    m: f64,
    q: f64,
    report: AssumptionReport,
}

/// `u |u|^{k}` with the removable value 0 at the origin.
fn signed_power(u: C64, k: f64) -> C64 {
    if u.norm() == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        u * u.norm().powf(k)
    }
}

struct Partials {
    r: C64,
    x: C64,
    y: C64,
    scale: f64,
}

impl<'a> Checker<'a> {
    fn eval(&self, pt: &Point) -> Result<C64, ExprError> {
        self.f.evaluate(pt)
    }

    fn partials(&self, pt: &Point) -> Result<Partials, ExprError> {
        let hr = FD_STEP * pt.r.abs().max(1.0);
        let hu = FD_STEP * pt.u.norm().max(1.0);
        let at_r = |dr: f64| self.eval(&Point { r: pt.r + dr, ..*pt });
        let at_u = |du: C64| self.eval(&Point { u: pt.u + du, ..*pt });
        let f0 = self.eval(pt)?;
        Ok(Partials {
            r: (at_r(hr)? - at_r(-hr)?) / (2.0 * hr),
            x: (at_u(C64::new(hu, 0.0))? - at_u(C64::new(-hu, 0.0))?) / (2.0 * hu),
            y: (at_u(C64::new(0.0, hu))? - at_u(C64::new(0.0, -hu))?) / (2.0 * hu),
            scale: 1.0 + f0.norm(),
        })
    }

    /// Records `lhs <= m * rhs_unit` and tracks the required constant.
    #[allow(clippy::too_many_arguments)]
    fn record(&mut self, group: &str, form: &str, lhs: f64, rhs_unit: f64, slack: f64, a: &Point, b: Option<&Point>) {
        let key = format!("{group}.{form}");
        let needed = if rhs_unit > 0.0 {
            Some(lhs / rhs_unit)
        } else if lhs <= slack {
            Some(0.0)
        } else {
            None
        };
        let entry = self.report.required_m.entry(key).or_insert(Some(0.0));
        *entry = match (*entry, needed) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
        let rhs = self.m * rhs_unit;
        if lhs > rhs + slack {
            self.report.violation_count += 1;
            if self.report.violations.len() < MAX_STORED_VIOLATIONS {
                self.report.violations.push(Violation {
                    inequality: group.to_string(),
                    form: form.to_string(),
                    t: a.t,
                    r: a.r,
                    u: a.u,
                    v: a.v,
                    w: a.w,
                    u2: b.map(|p| p.u),
                    v2: b.map(|p| p.v),
                    w2: b.map(|p| p.w),
                    lhs,
                    rhs,
                });
            }
        }
    }

    fn check_pair(&mut self, p1: &Point, p2: &Point) -> Result<(), ExprError> {
        let q = self.q;
        let (a1, b1, c1) = self.abc.eval_abc(p1.t, p1.r, p1.u)?;
        let (a2, b2, c2) = self.abc.eval_abc(p2.t, p2.r, p2.u)?;
        let d1 = self.partials(p1)?;
        let d2 = self.partials(p2)?;
        let (u, v, w) = (p1.u.norm(), p1.v.norm(), p1.w.norm());
        let coef_slack = SLACK * (1.0 + a1.norm() + b1.norm() + c1.norm());
        let fd_slack = 1e3 * SLACK * (d1.scale + d2.scale);

        self.record("estBC", "bound", b1.norm() + c1.norm(), 1.0 + u, coef_slack, p1, None);
        self.record(
            "estBC",
            "lipschitz",
            (b1 - b2).norm() + (c1 - c2).norm(),
            (p1.u - p2.u).norm(),
            coef_slack,
            p1,
            Some(p2),
        );
        self.record("estimateV1", "bound", a1.norm(), 1.0 + u.powf(q), coef_slack, p1, None);
        self.record(
            "estimateV1",
            "lipschitz",
            (a1 - a2).norm(),
            (signed_power(p1.u, q - 1.0) - signed_power(p2.u, q - 1.0)).norm(),
            coef_slack,
            p1,
            Some(p2),
        );

        let weak = 1.0 + u.powf(q) + (1.0 + u) * (v + w);
        self.record("estderF", "r", d1.r.norm(), weak, fd_slack, p1, None);
        if d1.r.norm() > self.m * (1.0 + u.powf(q) + v + w) + fd_slack {
            self.report.strict_r_bound_violations += 1;
        }
        let xy_rhs = 1.0 + if u > 0.0 { u.powf(q - 1.0) } else { f64::from(q == 1.0) } + v + w;
        self.record("estderF", "xy", d1.x.norm() + d1.y.norm(), xy_rhs, fd_slack, p1, None);

        let dv = (p1.v - p2.v).norm();
        let dw = (p1.w - p2.w).norm();
        let lip_r = (signed_power(p1.u, q - 1.0) - signed_power(p2.u, q - 1.0)).norm()
            + dv
            + dw
            + (p1.u * p1.v - p2.u * p2.v).norm()
            + (p1.u * p1.w - p2.u * p2.w).norm();
        self.record("estLipF", "r", (d1.r - d2.r).norm(), lip_r, fd_slack, p1, Some(p2));
        let lip_xy = (signed_power(p1.u, q - 2.0) - signed_power(p2.u, q - 2.0)).norm() + dv + dw;
        self.record("estLipF", "x", (d1.x - d2.x).norm(), lip_xy, fd_slack, p1, Some(p2));
        self.record("estLipF", "y", (d1.y - d2.y).norm(), lip_xy, fd_slack, p1, Some(p2));
        Ok(())
    }
}

/// Checks the growth and Lipschitz bounds on `n_samples` seeded points
/// (and as many point pairs for the Lipschitz forms) of `region`.
pub fn validate_assumption(
    expr: &PerturbationExpr,
    p: f64,
    q: f64,
    m: f64,
    region: &SampleBox,
    n_samples: usize,
    rng_seed: u64,
) -> Result<AssumptionReport, ExprError> {
    if !(q >= 1.0 && q < p) {
        return Err(ExprError::InvalidParameters(format!("need 1 <= q < p, got q = {q}, p = {p}")));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(ExprError::InvalidParameters(format!("M must be positive, got {m}")));
    }
    region.validate()?;
    if n_samples == 0 {
        return Err(ExprError::InvalidParameters("n_samples must be positive".into()));
    }
    let abc = decompose_abc(expr)?;
    let mut checker = Checker {
        f: expr,
        abc: &abc,
        m,
        q,
        report: AssumptionReport {
            m,
            q,
            p,
            samples_checked: 0,
            violations: Vec::new(),
            violation_count: 0,
            strict_r_bound_violations: 0,
            required_m: BTreeMap::new(),
        },
    };
    let mut rng = rng::stream(rng_seed, rng::streams::VALIDATE);
    for _ in 0..n_samples {
        let p1 = region.sample(&mut rng);
        let mut p2 = region.sample(&mut rng);
        p2.t = p1.t;
        p2.r = p1.r;
        // points where F is singular are outside the admissible set
        if checker.check_pair(&p1, &p2).is_ok() {
            checker.report.samples_checked += 1;
        }
    }
    Ok(checker.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn small_box() -> SampleBox {
        SampleBox {
            u_radius: 10.0,
            ..SampleBox::default()
        }
    }

    #[test]
    fn mass_term_passes() {
        let rep = validate_assumption(&parse("u").unwrap(), 3.0, 1.0, 2.0, &small_box(), 500, 7).unwrap();
        assert!(rep.passes(), "{:?}", rep.violations.first());
        assert_eq!(rep.samples_checked, 500);
    }

    #[test]
    fn q_not_below_p_is_rejected() {
        let e = parse("u^6").unwrap();
        assert!(matches!(
            validate_assumption(&e, 5.0, 6.0, 2.0, &small_box(), 10, 1),
            Err(ExprError::InvalidParameters(_))
        ));
        assert!(validate_assumption(&e, 7.0, 0.5, 2.0, &small_box(), 10, 1).is_err());
    }

    #[test]
    fn empty_box_is_rejected() {
        let e = parse("u").unwrap();
        let b = SampleBox { t0: 0.0, ..small_box() };
        assert!(validate_assumption(&e, 3.0, 1.0, 2.0, &b, 10, 1).is_err());
    }

    #[test]
    fn sixth_power_meets_growth_bound_with_m_two() {
        let rep = validate_assumption(&parse("u^6").unwrap(), 7.0, 6.0, 2.0, &small_box(), 500, 11).unwrap();
        assert!(rep.violations.iter().all(|v| v.form != "bound" || v.inequality != "estimateV1"));
        // |∂_x u^6| + |∂_y u^6| = 12|u|^5 and the Lipschitz ratios of u^6
        // against u|u|^5 reach 6, so M = 2 cannot satisfy every line
        assert!(!rep.passes());
        let need = rep.required_m["estderF.xy"].unwrap();
        assert!(need > 6.0 && need <= 12.0 + 1e-6, "{need}");
    }

    #[test]
    fn sixth_power_passes_with_its_required_constant() {
        let e = parse("u^6").unwrap();
        let probe = validate_assumption(&e, 7.0, 6.0, 2.0, &small_box(), 300, 3).unwrap();
        let m = probe.required_m.values().map(|x| x.unwrap()).fold(0.0, f64::max) * 1.5;
        let rep = validate_assumption(&e, 7.0, 6.0, m, &small_box(), 300, 3).unwrap();
        assert!(rep.passes(), "M = {m}: {:?}", rep.violations.first());
    }

    #[test]
    fn reports_are_reproducible() {
        let e = PerturbationExpr::from_preset_or_source("paper_random_example").unwrap();
        let a = validate_assumption(&e, 7.0, 6.0, 2.0, &small_box(), 200, 42).unwrap();
        let b = validate_assumption(&e, 7.0, 6.0, 2.0, &small_box(), 200, 42).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
