//! Profits, consumer welfare and the IR / Pareto classification.
//!
//! Every integrand is linear in θ on each sale run and densities are
//! piecewise constant, so all integrals are exact.

use crate::equilibrium::EquilibriumOutcome;
use crate::error::{Error, Result};
use crate::market::{ByFirm, Firm, MarketConfig, SegmentKind};
use crate::pricing::SaleRun;
use crate::pwl::{Linear, PiecewiseLinearFn};
use crate::rational::{half, Rational};
use num_traits::{One, Signed, Zero};
use std::fmt;

/// `t·d(θ)` for the distance to `firm`.
fn transport(firm: Firm, t: &Rational) -> Linear {
    match firm {
        Firm::A => Linear::new(Rational::zero(), *t),
        Firm::B => Linear::new(*t, -*t),
    }
}

/// Utility of a consumer served by `run`, as a function of θ.
pub(crate) fn run_utility(run: &SaleRun, config: &MarketConfig) -> Linear {
    let cost = run.price.intercept + transport(run.winner, &config.t).intercept;
    let slope = run.price.slope + transport(run.winner, &config.t).slope;
    Linear::new(config.v - cost, -slope)
}

/// Mass-weighted revenue per firm and consumer welfare on one segment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct SegmentMetrics {
    pub revenue: ByFirm<Rational>,
    pub welfare: Rational,
}

pub(crate) fn segment_metrics(kind: SegmentKind, runs: &[SaleRun], config: &MarketConfig) -> SegmentMetrics {
    let mass = config.mass(kind);
    let density = config.density(kind);
    let mut out = SegmentMetrics::default();
    if mass.is_zero() {
        return out;
    }
    for run in runs {
        let paid = density.integrate_linear(&run.start, &run.end, &run.price.intercept, &run.price.slope);
        out.revenue[run.winner] += mass * paid;
        let u = run_utility(run, config);
        out.welfare += mass * density.integrate_linear(&run.start, &run.end, &u.intercept, &u.slope);
    }
    out
}

/// Realized utility along one segment.
pub(crate) fn welfare_function(runs: &[SaleRun], config: &MarketConfig) -> PiecewiseLinearFn {
    let mut f = PiecewiseLinearFn::new();
    for run in runs {
        f.push(run.start, run.end, run_utility(run, config));
    }
    f
}

/// `(π_A, π_B)`, integrated from the outcome's sale runs.
pub fn profits(outcome: &EquilibriumOutcome) -> (Rational, Rational) {
    let mut total = ByFirm::<Rational>::default();
    for (kind, runs) in outcome.runs.iter() {
        let m = segment_metrics(kind, runs, &outcome.config);
        total.a += m.revenue.a;
        total.b += m.revenue.b;
    }
    (total.a, total.b)
}

/// Total realized consumer utility.
pub fn consumer_welfare(outcome: &EquilibriumOutcome) -> Rational {
    outcome
        .runs
        .iter()
        .map(|(kind, runs)| segment_metrics(kind, runs, &outcome.config).welfare)
        .sum()
}

/// Realized utility of the consumer at `theta` on `segment`.
pub fn pointwise_welfare(outcome: &EquilibriumOutcome, segment: SegmentKind, theta: &Rational) -> Result<Rational> {
    if theta.is_negative() || *theta > Rational::one() {
        return Err(Error::DomainError(format!("location {theta} outside [0, 1]")));
    }
    Ok(outcome.welfare[segment]
        .eval(theta)
        .expect("welfare functions cover [0, 1]"))
}

/// Mass-weighted mean distance between consumers and the firm they buy from.
pub fn expected_distance(outcome: &EquilibriumOutcome) -> Rational {
    let config = &outcome.config;
    let mut acc = Rational::zero();
    for (kind, runs) in outcome.runs.iter() {
        let mass = config.mass(kind);
        if mass.is_zero() {
            continue;
        }
        for run in runs {
            let d = transport(run.winner, &Rational::one());
            acc += mass
                * config
                    .density(kind)
                    .integrate_linear(&run.start, &run.end, &d.intercept, &d.slope);
        }
    }
    acc
}

/// A reason a comparison flag came out false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// A firm earns less than in the baseline.
    Firm {
        firm: Firm,
        baseline: Rational,
        candidate: Rational,
    },
    /// The two firms together earn less than in the baseline.
    Joint { baseline: Rational, candidate: Rational },
    /// A consumer is strictly worse off.
    Consumer {
        segment: SegmentKind,
        theta: Rational,
        baseline: Rational,
        candidate: Rational,
    },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Firm {
                firm,
                baseline,
                candidate,
            } => {
                write!(f, "firm {firm} earns {candidate} < {baseline}")
            }
            Witness::Joint { baseline, candidate } => write!(f, "joint profit {candidate} < {baseline}"),
            Witness::Consumer {
                segment,
                theta,
                baseline,
                candidate,
            } => write!(
                f,
                "consumer at θ = {theta} on segment {segment} gets {candidate} < {baseline}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParetoVerdict {
    pub ir_a: bool,
    pub ir_b: bool,
    pub jointly_ir: bool,
    /// Every consumer weakly better off.
    pub consumers_no_worse: bool,
    /// Both firms and every consumer weakly better off.
    pub pareto_improving: bool,
    /// Pareto-improving with a strict gain for a firm or in total welfare.
    pub strict: bool,
    pub witnesses: Vec<Witness>,
}

/// First location on `[0, 1]` where `candidate < baseline`, if any.
pub(crate) fn first_harm(candidate: &PiecewiseLinearFn, baseline: &PiecewiseLinearFn) -> Option<Rational> {
    let mut cuts: Vec<Rational> = candidate.breakpoints();
    cuts.extend(baseline.breakpoints());
    cuts.sort();
    cuts.dedup();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (Some(c), Some(b)) = (candidate.piece_at(&lo), baseline.piece_at(&lo)) else {
            continue;
        };
        let diff = c.f.sub(&b.f);
        let at_lo = diff.eval(&lo);
        if at_lo.is_negative() {
            return Some(lo);
        }
        let at_hi = diff.eval(&hi);
        if at_hi.is_negative() {
            // The difference turns negative strictly inside the piece.
            let root = -diff.intercept / diff.slope;
            return Some((root + hi) * half());
        }
    }
    None
}

/// Compares `candidate` with `baseline`, usually the no-sharing outcome of
/// the same market.
pub fn pareto_compare(candidate: &EquilibriumOutcome, baseline: &EquilibriumOutcome) -> Result<ParetoVerdict> {
    if candidate.config != baseline.config {
        return Err(Error::ConfigMismatch);
    }
    let config = &candidate.config;
    let mut witnesses = Vec::new();
    let mut firm_ok = |firm: Firm, c: Rational, b: Rational| {
        let ok = c >= b;
        if !ok {
            witnesses.push(Witness::Firm {
                firm,
                baseline: b,
                candidate: c,
            });
        }
        ok
    };
    let ir_a = firm_ok(Firm::A, candidate.pi_a, baseline.pi_a);
    let ir_b = firm_ok(Firm::B, candidate.pi_b, baseline.pi_b);
    let (joint_c, joint_b) = (candidate.pi_a + candidate.pi_b, baseline.pi_a + baseline.pi_b);
    let jointly_ir = joint_c >= joint_b;
    if !jointly_ir {
        witnesses.push(Witness::Joint {
            baseline: joint_b,
            candidate: joint_c,
        });
    }
    let mut consumers_no_worse = true;
    for kind in SegmentKind::ALL {
        if config.mass(kind).is_zero() {
            continue;
        }
        if let Some(theta) = first_harm(&candidate.welfare[kind], &baseline.welfare[kind]) {
            consumers_no_worse = false;
            witnesses.push(Witness::Consumer {
                segment: kind,
                theta,
                baseline: baseline.welfare[kind].eval(&theta).unwrap_or_default(),
                candidate: candidate.welfare[kind].eval(&theta).unwrap_or_default(),
            });
        }
    }
    let pareto_improving = ir_a && ir_b && consumers_no_worse;
    let gain = candidate.pi_a > baseline.pi_a || candidate.pi_b > baseline.pi_b || candidate.cw > baseline.cw;
    Ok(ParetoVerdict {
        ir_a,
        ir_b,
        jointly_ir,
        consumers_no_worse,
        pareto_improving,
        strict: pareto_improving && gain,
        witnesses,
    })
}

/// `v − t·E[distance]`: total surplus in a covered market.
pub fn total_surplus(outcome: &EquilibriumOutcome) -> Rational {
    outcome.config.v - outcome.config.t * expected_distance(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_equilibrium;
    use crate::market::{IntervalSet, SharingMechanism};
    use crate::rational::{int, rat};

    fn one_seg() -> MarketConfig {
        MarketConfig::one_segment(int(3), int(1)).unwrap()
    }

    fn four_seg() -> MarketConfig {
        MarketConfig::four_segment(int(3), int(1)).unwrap()
    }

    fn share(b: (Rational, Rational), a: Option<(Rational, Rational)>) -> SharingMechanism {
        SharingMechanism::new(
            IntervalSet::interval(b.0, b.1).unwrap(),
            a.map(|(x, y)| IntervalSet::interval(x, y).unwrap()).unwrap_or_default(),
        )
    }

    #[test]
    fn profit_and_welfare_examples() {
        let none = solve_equilibrium(&SharingMechanism::no_sharing(), &one_seg()).unwrap();
        assert_eq!(profits(&none), (rat(1, 8), rat(9, 16)));
        let full = solve_equilibrium(&SharingMechanism::full_sharing(), &one_seg()).unwrap();
        assert_eq!(consumer_welfare(&full), int(3) - rat(3, 4));
        let firmopt = solve_equilibrium(&share((rat(1, 4), rat(3, 8)), None), &one_seg()).unwrap();
        let (a, b) = profits(&firmopt);
        assert_eq!(a + b, rat(23, 32));

        let base4 = solve_equilibrium(&SharingMechanism::no_sharing(), &four_seg()).unwrap();
        assert_eq!(consumer_welfare(&base4), int(2));
        let copt = share((rat(1, 6), rat(1, 2)), Some((rat(1, 2), rat(5, 6))));
        let copt = solve_equilibrium(&copt, &four_seg()).unwrap();
        assert_eq!(profits(&copt), (rat(25, 72), rat(25, 72)));
        assert_eq!(consumer_welfare(&copt), int(3) - rat(17, 18));
    }

    #[test]
    fn pointwise_examples() {
        let none = solve_equilibrium(&SharingMechanism::no_sharing(), &one_seg()).unwrap();
        assert_eq!(
            pointwise_welfare(&none, SegmentKind::BOnly, &rat(3, 5)).unwrap(),
            int(3) - rat(11, 10)
        );
        let firmopt = solve_equilibrium(&share((rat(1, 4), rat(3, 8)), None), &one_seg()).unwrap();
        assert_eq!(
            pointwise_welfare(&firmopt, SegmentKind::BOnly, &rat(3, 10)).unwrap(),
            int(3) - rat(7, 10)
        );
        let base4 = solve_equilibrium(&SharingMechanism::no_sharing(), &four_seg()).unwrap();
        assert_eq!(
            pointwise_welfare(&base4, SegmentKind::Both, &rat(1, 2)).unwrap(),
            int(3) - rat(1, 2)
        );
        assert!(pointwise_welfare(&base4, SegmentKind::Both, &rat(3, 2)).is_err());
    }

    #[test]
    fn verdict_examples() {
        let cfg = one_seg();
        let none = solve_equilibrium(&SharingMechanism::no_sharing(), &cfg).unwrap();
        let full = solve_equilibrium(&SharingMechanism::full_sharing(), &cfg).unwrap();
        let v = pareto_compare(&full, &none).unwrap();
        assert!(v.ir_a && !v.ir_b && !v.jointly_ir && !v.pareto_improving);

        let eps = solve_equilibrium(&share((rat(1, 100), rat(1, 2)), None), &cfg).unwrap();
        let v = pareto_compare(&eps, &none).unwrap();
        assert!(v.ir_a && v.ir_b && !v.pareto_improving);
        assert!(v.witnesses.iter().any(|w| matches!(w, Witness::Consumer { .. })));

        let cfg4 = four_seg();
        let base = solve_equilibrium(&SharingMechanism::no_sharing(), &cfg4).unwrap();
        let fopt = share((rat(1, 6), rat(1, 3)), Some((rat(2, 3), rat(5, 6))));
        let fopt = solve_equilibrium(&fopt, &cfg4).unwrap();
        let v = pareto_compare(&fopt, &base).unwrap();
        assert!(v.ir_a && v.ir_b && v.jointly_ir && v.pareto_improving && v.strict);
        assert!(v.witnesses.is_empty());

        let refl = pareto_compare(&base, &base).unwrap();
        assert!(refl.pareto_improving && !refl.strict);
        assert_eq!(pareto_compare(&base, &none), Err(Error::ConfigMismatch));
    }

    #[test]
    fn harm_witness_is_exact() {
        let mut base = PiecewiseLinearFn::new();
        base.push(int(0), int(1), Linear::constant(int(1)));
        let mut cand = PiecewiseLinearFn::new();
        cand.push(int(0), int(1), Linear::new(int(2), int(-2)));
        // cand < base on (1/2, 1].
        let w = first_harm(&cand, &base).unwrap();
        assert!(w > rat(1, 2));
        assert!(cand.eval(&w).unwrap() < base.eval(&w).unwrap());
        assert_eq!(first_harm(&base, &base), None);
    }

    #[test]
    fn surplus_identity_on_examples() {
        for m in [
            SharingMechanism::no_sharing(),
            SharingMechanism::full_sharing(),
            share((rat(1, 6), rat(1, 3)), Some((rat(2, 3), rat(5, 6)))),
        ] {
            let out = solve_equilibrium(&m, &four_seg()).unwrap();
            assert_eq!(out.pi_a + out.pi_b + out.cw, total_surplus(&out));
        }
    }
}
