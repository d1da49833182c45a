//! Split of `F(t,r,u,v,w)` into `A(t,r,u) + B(t,r,u) v + C(t,r,u) w`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BinOp, ExprError, Node, PerturbationExpr, Point, Var};
use crate::rng;
use crate::C64;

/// Relative tolerance for the numerical affinity check.
pub const AFFINE_TOL: f64 = 1e-10;
const CHECK_POINTS: usize = 64;
const CHECK_SEED: u64 = 0x5eed_abc0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub a: PerturbationExpr,
    pub b: PerturbationExpr,
    pub c: PerturbationExpr,
    /// True when the coefficients were read off the tree, false when they
    /// were built by evaluation at v, w ∈ {0, 1}.
    pub symbolic: bool,
}

impl Decomposition {
    pub fn eval_abc(&self, t: f64, r: f64, u: C64) -> Result<(C64, C64, C64), ExprError> {
        let zero = C64::new(0.0, 0.0);
        let pt = Point::new(t, r, u, zero, zero);
        Ok((self.a.evaluate(&pt)?, self.b.evaluate(&pt)?, self.c.evaluate(&pt)?))
    }
}

/// Signed summand of a top-level sum.
struct Term {
    negative: bool,
    node: Node,
}

fn collect_terms(node: &Node, negative: bool, out: &mut Vec<Term>) {
    match node {
        Node::Binary(BinOp::Add, a, b) => {
            collect_terms(a, negative, out);
            collect_terms(b, negative, out);
        }
        Node::Binary(BinOp::Sub, a, b) => {
            collect_terms(a, negative, out);
            collect_terms(b, !negative, out);
        }
        Node::Neg(a) if matches!(**a, Node::Binary(BinOp::Add | BinOp::Sub, ..)) => {
            collect_terms(a, !negative, out)
        }
        _ => out.push(Term {
            negative,
            node: node.clone(),
        }),
    }
}

fn collect_factors(node: &Node, denominator: bool, out: &mut Vec<(Node, bool)>) {
    match node {
        Node::Binary(BinOp::Mul, a, b) => {
            collect_factors(a, denominator, out);
            collect_factors(b, denominator, out);
        }
        Node::Binary(BinOp::Div, a, b) if !denominator => {
            collect_factors(a, false, out);
            out.push(((**b).clone(), true));
        }
        _ => out.push((node.clone(), denominator)),
    }
}

/// Removes a single multiplicative factor `var` from `term`, keeping the
/// order of the remaining factors. `None` when `var` is not a plain
/// numerator factor.
fn strip_factor(term: &Node, var: Var) -> Option<Node> {
    let mut factors = Vec::new();
    collect_factors(term, false, &mut factors);
    let idx = factors
        .iter()
        .position(|(f, den)| !den && *f == Node::Var(var))?;
    factors.remove(idx);
    let mut iter = factors.into_iter();
    let mut acc = match iter.next() {
        None => return Some(Node::Num(1.0)),
        Some((f, false)) => f,
        Some((f, true)) => Node::binary(BinOp::Div, Node::Num(1.0), f),
    };
    for (f, den) in iter {
        let op = if den { BinOp::Div } else { BinOp::Mul };
        acc = Node::binary(op, acc, f);
    }
    Some(acc)
}

fn sum_terms(terms: Vec<Term>) -> Node {
    let mut iter = terms.into_iter();
    let Some(first) = iter.next() else {
        return Node::Num(0.0);
    };
    let mut acc = if first.negative {
        Node::Neg(Box::new(first.node))
    } else {
        first.node
    };
    for t in iter {
        let op = if t.negative { BinOp::Sub } else { BinOp::Add };
        acc = Node::binary(op, acc, t.node);
    }
    acc
}

fn symbolic_split(root: &Node) -> Option<(Node, Node, Node)> {
    let mut terms = Vec::new();
    collect_terms(root, false, &mut terms);
    let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for term in terms {
        let nv = term.node.count_var(Var::V);
        let nw = term.node.count_var(Var::W);
        match (nv, nw) {
            (0, 0) => a.push(term),
            (1, 0) => b.push(Term {
                negative: term.negative,
                node: strip_factor(&term.node, Var::V)?,
            }),
            (0, 1) => c.push(Term {
                negative: term.negative,
                node: strip_factor(&term.node, Var::W)?,
            }),
            _ => return None,
        }
    }
    Some((sum_terms(a), sum_terms(b), sum_terms(c)))
}

fn evaluated_split(root: &Node) -> (Node, Node, Node) {
    let zero = Node::Num(0.0);
    let one = Node::Num(1.0);
    let at = |v: &Node, w: &Node| root.substitute(Var::V, v).substitute(Var::W, w);
    let base = at(&zero, &zero);
    let b = Node::binary(BinOp::Sub, at(&one, &zero), base.clone());
    let c = Node::binary(BinOp::Sub, at(&zero, &one), base.clone());
    (base, b, c)
}

fn sample_point<R: Rng>(rng: &mut R) -> Point {
    Point::new(
        0.5 + rng.random::<f64>(),
        rng.random::<f64>(),
        rng::disk(rng, 2.0),
        rng::disk(rng, 2.0),
        rng::disk(rng, 2.0),
    )
}

/// Second differences in v and w, and the mixed difference, must vanish.
fn check_affine(expr: &PerturbationExpr) -> Result<(), ExprError> {
    let mut rng = rng::stream(CHECK_SEED, rng::streams::DECOMPOSE);
    for _ in 0..CHECK_POINTS {
        let pt = sample_point(&mut rng);
        let hv = rng::disk(&mut rng, 1.0) + C64::new(0.5, 0.0);
        let hw = rng::disk(&mut rng, 1.0) + C64::new(0.0, 0.5);
        let f = |dv: C64, dw: C64| {
            expr.evaluate(&Point {
                v: pt.v + dv,
                w: pt.w + dw,
                ..pt
            })
        };
        let z = C64::new(0.0, 0.0);
        let vals = (|| -> Result<[C64; 7], ExprError> {
            Ok([f(z, z)?, f(hv, z)?, f(-hv, z)?, f(z, hw)?, f(z, -hw)?, f(hv, hw)?, f(z, z)?])
        })();
        let Ok([f0, fvp, fvm, fwp, fwm, fvw, _]) = vals else {
            continue;
        };
        let scale = 1.0 + [f0, fvp, fvm, fwp, fwm, fvw].iter().map(|x| x.norm()).fold(0.0, f64::max);
        let dvv = (fvp - 2.0 * f0 + fvm).norm();
        let dww = (fwp - 2.0 * f0 + fwm).norm();
        let dvw = (fvw - fvp - fwp + f0).norm();
        if dvv > AFFINE_TOL * scale || dww > AFFINE_TOL * scale || dvw > AFFINE_TOL * scale {
            return Err(ExprError::NonlinearInDerivatives(format!(
                "second difference {:.3e} at t={}, r={}, u={}, v={}, w={}",
                dvv.max(dww).max(dvw),
                pt.t,
                pt.r,
                pt.u,
                pt.v,
                pt.w
            )));
        }
    }
    Ok(())
}

fn check_reconstruction(expr: &PerturbationExpr, d: &Decomposition) -> Result<(), ExprError> {
    let mut rng = rng::stream(CHECK_SEED ^ 1, rng::streams::DECOMPOSE);
    for _ in 0..CHECK_POINTS {
        let pt = sample_point(&mut rng);
        let (Ok(full), Ok((a, b, c))) = (expr.evaluate(&pt), d.eval_abc(pt.t, pt.r, pt.u)) else {
            continue;
        };
        let err = (full - (a + b * pt.v + c * pt.w)).norm();
        if err > AFFINE_TOL * (1.0 + full.norm()) {
            return Err(ExprError::NonlinearInDerivatives(format!(
                "not complex-affine: reconstruction error {err:.3e} at v={}, w={}",
                pt.v, pt.w
            )));
        }
    }
    Ok(())
}

/// Splits `expr` into the coefficient trees `A`, `B`, `C`.
///
/// Reads the coefficients off the tree when the expression is a sum of
/// terms in which `v` or `w` appears at most once as a plain factor; falls
/// back to `B = F|_{v=1,w=0} − F|_{v=0,w=0}` (and likewise `C`) otherwise.
/// Fails when `F` is not affine in `(v, w)`.
pub fn decompose_abc(expr: &PerturbationExpr) -> Result<Decomposition, ExprError> {
    check_affine(expr)?;
    let (d, symbolic) = match symbolic_split(expr.root()) {
        Some(split) => (split, true),
        None => (evaluated_split(expr.root()), false),
    };
    let d = Decomposition {
        a: PerturbationExpr::new(d.0),
        b: PerturbationExpr::new(d.1),
        c: PerturbationExpr::new(d.2),
        symbolic,
    };
    check_reconstruction(expr, &d)?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn split(src: &str) -> Decomposition {
        decompose_abc(&parse(src).unwrap()).unwrap()
    }

    #[test]
    fn mass_term_has_no_derivative_part() {
        let d = split("2*u");
        assert_eq!(d.a.to_string(), "2*u");
        assert_eq!(d.b.to_string(), "0");
        assert_eq!(d.c.to_string(), "0");
    }

    #[test]
    fn random_example_splits_symbolically() {
        let d = split("t^5*exp(i*t+r^2)*u*v + u^6");
        assert!(d.symbolic);
        assert_eq!(d.a.to_string(), "u^6");
        assert_eq!(d.b.to_string(), "t^5*exp(i*t+r^2)*u");
        assert_eq!(d.c.to_string(), "0");
    }

    #[test]
    fn signs_and_denominators_survive() {
        let d = split("u - 3*w/r - v");
        assert_eq!(d.a.to_string(), "u");
        assert_eq!(d.b.to_string(), "-1");
        assert_eq!(d.c.to_string(), "-(3/r)");
    }

    #[test]
    fn non_factor_occurrence_falls_back_to_evaluation() {
        let e = parse("(v + 1)*u + w*(u+1)").unwrap();
        let d = decompose_abc(&e).unwrap();
        assert!(!d.symbolic);
        let (a, b, c) = d.eval_abc(1.0, 0.2, C64::new(0.5, -1.0)).unwrap();
        assert!((a - C64::new(0.5, -1.0)).norm() < 1e-15);
        assert!((b - C64::new(0.5, -1.0)).norm() < 1e-15);
        assert!((c - C64::new(1.5, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn quadratic_in_v_is_rejected() {
        assert!(matches!(
            decompose_abc(&parse("u*v^2").unwrap()),
            Err(ExprError::NonlinearInDerivatives(_))
        ));
    }

    #[test]
    fn real_linear_but_not_complex_linear_is_rejected() {
        assert!(matches!(
            decompose_abc(&parse("conj(v)").unwrap()),
            Err(ExprError::NonlinearInDerivatives(_))
        ));
    }

    #[test]
    fn reconstruction_on_presets() {
        let mut rng = rng::stream(99, 0);
        for name in ["mass", "damping", "power_q", "power_q:4", "paper_random_example", "zero"] {
            let e = PerturbationExpr::from_preset_or_source(name).unwrap();
            let d = decompose_abc(&e).unwrap();
            for _ in 0..100 {
                let pt = sample_point(&mut rng);
                let full = e.evaluate(&pt).unwrap();
                let (a, b, c) = d.eval_abc(pt.t, pt.r, pt.u).unwrap();
                assert!((full - (a + b * pt.v + c * pt.w)).norm() <= 1e-12 * (1.0 + full.norm()), "{name}");
            }
        }
    }
}
