//! Subgame-perfect equilibrium of the pricing game for a fixed mechanism.
//!
//! Each firm's best response is one of finitely many affine formulas in the
//! rival's price. Solving every formula pair and keeping the pairs that are
//! mutual best responses finds all pure equilibria exactly. Damped
//! best-response iteration is kept as a fallback.

use crate::error::{Error, Result};
use crate::market::{ByFirm, Firm, IntervalSet, MarketConfig, PerSegment, SharingMechanism};
use crate::pricing::{
    personalized_stage, Affine, AllocationBreakpoints, BestResponse, Responder, ResponseKind, SaleRun, UniformDemand,
};
use crate::pwl::PiecewiseLinearFn;
use crate::rational::{half, int, rat, round_dyadic, Rational};
use crate::welfare;
use num_traits::{Signed, Zero};
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

/// Uniform prices plus every personalized schedule they induce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceSystem {
    pub p_a: Rational,
    pub p_b: Rational,
    pub schedules: PerSegment<ByFirm<PiecewiseLinearFn>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SolveStrategy {
    /// Solve every pair of best-response formulas.
    #[default]
    Exhaustive,
    /// Follow best-response formulas from a starting point; falls back to
    /// [`SolveStrategy::Exhaustive`] if that does not certify quickly.
    WarmStart,
    /// Damped best-response iteration, snapped to an exact fixed point.
    Iteration,
}

impl fmt::Display for SolveStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStrategy::Exhaustive => "exhaustive",
            SolveStrategy::WarmStart => "warm-start",
            SolveStrategy::Iteration => "iteration",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOptions {
    pub strategy: SolveStrategy,
    /// Starting prices for warm starts and iteration; `(t, t)` if absent.
    pub start: Option<(Rational, Rational)>,
    pub warm_steps: usize,
    pub max_iterations: usize,
    pub damping: Rational,
    /// Convergence threshold as a multiple of `t`.
    pub tolerance: Rational,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            strategy: SolveStrategy::Exhaustive,
            start: None,
            warm_steps: 8,
            max_iterations: 10_000,
            damping: half(),
            tolerance: rat(1, 1_000_000_000_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SolveDiagnostics {
    /// Strategy that produced the answer.
    pub method: SolveStrategy,
    pub iterations: usize,
    /// Best-response formulas active at the answer.
    pub branches: ByFirm<Affine>,
    pub kinds: ByFirm<Option<ResponseKind>>,
    /// Every certified price pair found (exhaustive mode).
    pub candidates: Vec<(Rational, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumOutcome {
    pub config: MarketConfig,
    pub mechanism: SharingMechanism,
    pub prices: PriceSystem,
    pub allocation: AllocationBreakpoints,
    pub runs: PerSegment<Vec<SaleRun>>,
    pub pi_a: Rational,
    pub pi_b: Rational,
    pub cw: Rational,
    /// Realized consumer utility along each segment.
    pub welfare: PerSegment<PiecewiseLinearFn>,
    pub diagnostics: SolveDiagnostics,
}

impl EquilibriumOutcome {
    /// Runs the personalized stage at the given uniform prices and integrates
    /// profits and welfare. Does not check that the prices are an equilibrium.
    pub fn at_prices(
        mechanism: &SharingMechanism,
        config: &MarketConfig,
        p_a: Rational,
        p_b: Rational,
        diagnostics: SolveDiagnostics,
    ) -> Self {
        let stage = personalized_stage(&p_a, &p_b, mechanism, config);
        let welfare = stage.runs.map(|_, runs| welfare::welfare_function(runs, config));
        let mut outcome = EquilibriumOutcome {
            config: config.clone(),
            mechanism: mechanism.clone(),
            prices: PriceSystem {
                p_a,
                p_b,
                schedules: stage.schedules,
            },
            allocation: stage.allocation,
            runs: stage.runs,
            pi_a: Rational::zero(),
            pi_b: Rational::zero(),
            cw: Rational::zero(),
            welfare,
            diagnostics,
        };
        (outcome.pi_a, outcome.pi_b) = welfare::profits(&outcome);
        outcome.cw = welfare::consumer_welfare(&outcome);
        outcome
    }

    pub fn profit(&self, firm: Firm) -> Rational {
        match firm {
            Firm::A => self.pi_a,
            Firm::B => self.pi_b,
        }
    }

    pub fn joint_profit(&self) -> Rational {
        self.pi_a + self.pi_b
    }
}

/// Both firms' demand structures for one mechanism.
pub(crate) struct Duopoly<'a> {
    pub a: &'a dyn Responder,
    pub b: &'a dyn Responder,
}

/// An exactly certified equilibrium price pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Certified {
    pub p_a: Rational,
    pub p_b: Rational,
    pub branches: ByFirm<Affine>,
    pub kinds: ByFirm<ResponseKind>,
}

impl Certified {
    fn new(p_a: &Rational, p_b: &Rational, br_a: &BestResponse, br_b: &BestResponse) -> Self {
        Certified {
            p_a: *p_a,
            p_b: *p_b,
            branches: ByFirm::new(br_a.formula, br_b.formula),
            kinds: ByFirm::new(br_a.kind, br_b.kind),
        }
    }
}

/// `own` earns the best-response revenue; a firm that can sell nothing must
/// price at 0.
pub(crate) fn holds(demand: &(impl Responder + ?Sized), br: &BestResponse, own: &Rational, rival: &Rational) -> bool {
    if br.kind == ResponseKind::Degenerate {
        return own.is_zero();
    }
    !own.is_negative() && demand.revenue(own, rival) == br.revenue
}

impl Duopoly<'_> {
    /// Both prices are best responses (by revenue, so ties are accepted).
    pub fn certify(&self, p_a: &Rational, p_b: &Rational) -> Option<Certified> {
        if p_a.is_negative() || p_b.is_negative() {
            return None;
        }
        let br_a = self.a.best_response(p_b);
        if !holds(self.a, &br_a, p_a, p_b) {
            return None;
        }
        let br_b = self.b.best_response(p_a);
        holds(self.b, &br_b, p_b, p_a).then(|| Certified::new(p_a, p_b, &br_a, &br_b))
    }

    /// Intersection of `p_A = f_a(p_B)` and `p_B = f_b(p_A)`.
    pub fn intersect(fa: &Affine, fb: &Affine) -> Option<(Rational, Rational)> {
        let det = Rational::from_integer(1) - fa.rival * fb.rival;
        if det.is_zero() {
            return None;
        }
        let p_a = (fa.constant + fa.rival * fb.constant) / det;
        let p_b = (fb.constant + fb.rival * fa.constant) / det;
        Some((p_a, p_b))
    }

    /// All certified pairs, sorted.
    pub fn exhaustive(&self) -> Vec<Certified> {
        let fa = self.a.candidate_formulas();
        let fb = self.b.candidate_formulas();
        let mut points = BTreeSet::new();
        for f in &fa {
            for g in &fb {
                if let Some((p_a, p_b)) = Self::intersect(f, g) {
                    if !p_a.is_negative() && !p_b.is_negative() {
                        points.insert((p_a, p_b));
                    }
                }
            }
        }
        points.iter().filter_map(|(p_a, p_b)| self.certify(p_a, p_b)).collect()
    }

    /// Follows the active best-response formulas from `start`.
    pub fn warm_start(&self, start: (Rational, Rational), steps: usize) -> Option<(Certified, usize)> {
        let (mut p_a, mut p_b) = start;
        for step in 1..=steps {
            let br_a = self.a.best_response(&p_b);
            let br_b = self.b.best_response(&p_a);
            if holds(self.a, &br_a, &p_a, &p_b) && holds(self.b, &br_b, &p_b, &p_a) {
                return Some((Certified::new(&p_a, &p_b, &br_a, &br_b), step));
            }
            if let Some((qa, qb)) = Self::intersect(&br_a.formula, &br_b.formula) {
                if let Some(c) = self.certify(&qa, &qb) {
                    return Some((c, step));
                }
            }
            (p_a, p_b) = (br_a.price, br_b.price);
        }
        None
    }

    /// Damped iteration, then an exact solve of the formula pair it settles on.
    pub fn iterate(
        &self,
        start: (Rational, Rational),
        t: &Rational,
        options: &SolveOptions,
    ) -> Result<(Certified, usize)> {
        const BITS: u32 = 40;
        let tolerance = options.tolerance * t;
        let (mut p_a, mut p_b) = (round_dyadic(&start.0, BITS), round_dyadic(&start.1, BITS));
        let mut seen: HashMap<(Rational, Rational), usize> = HashMap::new();
        for step in 1..=options.max_iterations {
            let br_a = self.a.best_response(&p_b).price;
            let br_b = self.b.best_response(&p_a).price;
            let next_a = round_dyadic(&(p_a + options.damping * (br_a - p_a)), BITS);
            let next_b = round_dyadic(&(p_b + options.damping * (br_b - p_b)), BITS);
            let moved = (next_a - p_a).abs().max((next_b - p_b).abs());
            (p_a, p_b) = (next_a, next_b);
            if moved < tolerance {
                let fa = self.a.best_response(&p_b).formula;
                let fb = self.b.best_response(&p_a).formula;
                if let Some((qa, qb)) = Self::intersect(&fa, &fb) {
                    if let Some(c) = self.certify(&qa, &qb) {
                        return Ok((c, step));
                    }
                }
                return Err(Error::NoPureEquilibrium(format!(
                    "iteration settled near ({p_a}, {p_b}) but no exact fixed point certifies there"
                )));
            }
            if let Some(first) = seen.insert((p_a, p_b), step) {
                return Err(Error::NoPureEquilibrium(format!(
                    "best responses cycle with period {} through ({p_a}, {p_b})",
                    step - first
                )));
            }
        }
        Err(Error::NonConvergence {
            iterations: options.max_iterations,
            p_a,
            p_b,
        })
    }
}

/// Solves the game with exhaustive branch-pair enumeration.
pub fn solve_equilibrium(mechanism: &SharingMechanism, config: &MarketConfig) -> Result<EquilibriumOutcome> {
    solve_equilibrium_with(mechanism, config, &SolveOptions::default())
}

pub fn solve_equilibrium_with(
    mechanism: &SharingMechanism,
    config: &MarketConfig,
    options: &SolveOptions,
) -> Result<EquilibriumOutcome> {
    config.validate()?;
    let a = UniformDemand::new(Firm::A, mechanism, config);
    let b = UniformDemand::new(Firm::B, mechanism, config);
    let duo = Duopoly { a: &a, b: &b };
    let start = options.start.unwrap_or((config.t, config.t));

    let mut diagnostics = SolveDiagnostics {
        method: options.strategy,
        ..Default::default()
    };
    let found = match options.strategy {
        SolveStrategy::WarmStart => match duo.warm_start(start, options.warm_steps) {
            Some((c, steps)) => {
                diagnostics.iterations = steps;
                Some(c)
            }
            None => None,
        },
        SolveStrategy::Iteration => {
            let (c, steps) = duo.iterate(start, &config.t, options)?;
            diagnostics.iterations = steps;
            Some(c)
        }
        SolveStrategy::Exhaustive => None,
    };
    let chosen = match found {
        Some(c) => c,
        None => {
            diagnostics.method = SolveStrategy::Exhaustive;
            let all = duo.exhaustive();
            diagnostics.candidates = all.iter().map(|c| (c.p_a, c.p_b)).collect();
            match all.into_iter().next() {
                Some(c) => c,
                None => {
                    diagnostics.method = SolveStrategy::Iteration;
                    let (c, steps) = duo.iterate(start, &config.t, options)?;
                    diagnostics.iterations = steps;
                    c
                }
            }
        }
    };
    diagnostics.branches = chosen.branches;
    diagnostics.kinds = ByFirm::new(Some(chosen.kinds.a), Some(chosen.kinds.b));
    Ok(EquilibriumOutcome::at_prices(
        mechanism,
        config,
        chosen.p_a,
        chosen.p_b,
        diagnostics,
    ))
}

// ---------------------------------------------------------------------------
// Closed-form reference values
// ---------------------------------------------------------------------------

/// Markets and mechanisms with known closed-form equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    OneSegNone,
    OneSegFull,
    /// B reveals `[ε, ½)`.
    OneSegEps(Rational),
    OneSegFirmOpt,
    TwoSegConsumerOpt,
    TwoSegFirmOpt,
    FourSegNone,
    FourSegFull,
    FourSegConsumerOpt,
    FourSegFirmOpt,
}

impl Scenario {
    /// The ten table rows, with `ε = 1/10` for the ε row.
    pub fn table() -> [Scenario; 10] {
        [
            Scenario::OneSegNone,
            Scenario::OneSegFull,
            Scenario::OneSegEps(rat(1, 10)),
            Scenario::OneSegFirmOpt,
            Scenario::TwoSegConsumerOpt,
            Scenario::TwoSegFirmOpt,
            Scenario::FourSegNone,
            Scenario::FourSegFull,
            Scenario::FourSegConsumerOpt,
            Scenario::FourSegFirmOpt,
        ]
    }

    pub fn config(&self, v: Rational, t: Rational) -> Result<MarketConfig> {
        match self {
            Scenario::OneSegNone | Scenario::OneSegFull | Scenario::OneSegEps(_) | Scenario::OneSegFirmOpt => {
                MarketConfig::one_segment(v, t)
            }
            Scenario::TwoSegConsumerOpt | Scenario::TwoSegFirmOpt => MarketConfig::two_segment(v, t),
            _ => MarketConfig::four_segment(v, t),
        }
    }

    pub fn mechanism(&self) -> Result<SharingMechanism> {
        let iv = |a: Rational, b: Rational| IntervalSet::interval(a, b);
        let pair = |b_side: IntervalSet| {
            let a_side = b_side.mirror();
            SharingMechanism::new(b_side, a_side)
        };
        Ok(match self {
            Scenario::OneSegNone | Scenario::FourSegNone => SharingMechanism::no_sharing(),
            Scenario::OneSegFull | Scenario::FourSegFull => SharingMechanism::full_sharing(),
            Scenario::OneSegEps(eps) => {
                if !eps.is_positive() || *eps >= half() {
                    return Err(Error::BadParam(format!("ε = {eps} must lie in (0, 1/2)")));
                }
                SharingMechanism::new(iv(*eps, half())?, IntervalSet::empty())
            }
            Scenario::OneSegFirmOpt => SharingMechanism::new(iv(rat(1, 4), rat(3, 8))?, IntervalSet::empty()),
            Scenario::TwoSegConsumerOpt => pair(iv(rat(1, 4), half())?),
            Scenario::TwoSegFirmOpt => pair(iv(rat(1, 4), rat(3, 8))?),
            Scenario::FourSegConsumerOpt => pair(iv(rat(1, 6), half())?),
            Scenario::FourSegFirmOpt => pair(iv(rat(1, 6), rat(1, 3))?),
        })
    }

    pub fn name(&self) -> String {
        match self {
            Scenario::OneSegNone => "1seg-none".into(),
            Scenario::OneSegFull => "1seg-full".into(),
            Scenario::OneSegEps(eps) => format!("1seg-eps({eps})"),
            Scenario::OneSegFirmOpt => "1seg-firmopt".into(),
            Scenario::TwoSegConsumerOpt => "2seg-consumeropt".into(),
            Scenario::TwoSegFirmOpt => "2seg-firmopt".into(),
            Scenario::FourSegNone => "4seg-none".into(),
            Scenario::FourSegFull => "4seg-full".into(),
            Scenario::FourSegConsumerOpt => "4seg-consumeropt".into(),
            Scenario::FourSegFirmOpt => "4seg-firmopt".into(),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    /// Accepts the display names; the ε row as `1seg-eps(1/10)` or
    /// `1seg-eps=0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("1seg-eps") {
            let arg = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .or_else(|| rest.strip_prefix('='))
                .ok_or_else(|| Error::UnknownScenario(s.to_string()))?;
            let eps = crate::rational::parse_rational(arg)?;
            return Ok(Scenario::OneSegEps(eps));
        }
        Ok(match s {
            "1seg-none" => Scenario::OneSegNone,
            "1seg-full" => Scenario::OneSegFull,
            "1seg-firmopt" => Scenario::OneSegFirmOpt,
            "2seg-consumeropt" => Scenario::TwoSegConsumerOpt,
            "2seg-firmopt" => Scenario::TwoSegFirmOpt,
            "4seg-none" => Scenario::FourSegNone,
            "4seg-full" => Scenario::FourSegFull,
            "4seg-consumeropt" => Scenario::FourSegConsumerOpt,
            "4seg-firmopt" => Scenario::FourSegFirmOpt,
            _ => return Err(Error::UnknownScenario(s.to_string())),
        })
    }
}

/// Reference values for a [`Scenario`]. A price is `None` when the firm
/// sells nothing at any uniform price, so the equilibrium leaves it free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedForm {
    pub scenario: Scenario,
    pub config: MarketConfig,
    pub mechanism: SharingMechanism,
    pub p_a: Option<Rational>,
    pub p_b: Option<Rational>,
    pub pi_a: Rational,
    pub pi_b: Rational,
    pub cw: Rational,
}

impl ClosedForm {
    pub fn joint_profit(&self) -> Rational {
        self.pi_a + self.pi_b
    }

    /// Compares with an engine outcome; returns the mismatching fields.
    pub fn mismatches(&self, outcome: &EquilibriumOutcome) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: &str, expected: &Rational, got: &Rational| {
            if expected != got {
                out.push(format!("{name}: expected {expected}, got {got}"));
            }
        };
        if let Some(p) = &self.p_a {
            check("p_A", p, &outcome.prices.p_a);
        }
        if let Some(p) = &self.p_b {
            check("p_B", p, &outcome.prices.p_b);
        }
        check("pi_A", &self.pi_a, &outcome.pi_a);
        check("pi_B", &self.pi_b, &outcome.pi_b);
        check("CW", &self.cw, &outcome.cw);
        out
    }
}

/// Closed-form equilibrium values of a [`Scenario`] at `(v, t)`.
pub fn closed_form_reference(scenario: Scenario, v: Rational, t: Rational) -> Result<ClosedForm> {
    let config = scenario.config(v, t)?;
    let mechanism = scenario.mechanism()?;
    let r = rat;
    // (p_A, p_B, π_A, π_B, v − CW), all in units of t.
    let (p_a, p_b, pi_a, pi_b, gap): (Option<Rational>, Option<Rational>, Rational, Rational, Rational) = match scenario
    {
        Scenario::OneSegNone => (Some(half()), None, r(1, 8), r(9, 16), int(1)),
        Scenario::OneSegFull => (None, None, r(1, 4), r(1, 4), r(3, 4)),
        Scenario::OneSegEps(eps) => (
            Some(int(1) - int(2) * eps),
            None,
            r(1, 4) - eps * eps,
            r(3, 4) - eps,
            r(5, 4) - eps - eps * eps,
        ),
        Scenario::OneSegFirmOpt => (Some(half()), None, r(11, 64), r(35, 64), r(63, 64)),
        Scenario::TwoSegConsumerOpt => (Some(half()), Some(half()), r(11, 32), r(11, 32), r(15, 16)),
        Scenario::TwoSegFirmOpt => (Some(half()), Some(half()), r(23, 64), r(23, 64), r(63, 64)),
        Scenario::FourSegNone => (Some(r(2, 3)), Some(r(2, 3)), r(25, 72), r(25, 72), int(1)),
        Scenario::FourSegFull => (Some(int(1)), Some(int(1)), r(5, 16), r(5, 16), r(7, 8)),
        Scenario::FourSegConsumerOpt => (Some(r(2, 3)), Some(r(2, 3)), r(25, 72), r(25, 72), r(17, 18)),
        Scenario::FourSegFirmOpt => (Some(r(2, 3)), Some(r(2, 3)), r(13, 36), r(13, 36), r(71, 72)),
    };
    Ok(ClosedForm {
        scenario,
        config,
        mechanism,
        p_a: p_a.map(|p| p * t),
        p_b: p_b.map(|p| p * t),
        pi_a: pi_a * t,
        pi_b: pi_b * t,
        cw: v - gap * t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i128, d: i128) -> Rational {
        rat(n, d)
    }

    #[test]
    fn four_segment_examples() {
        let cfg = MarketConfig::four_segment(int(3), int(1)).unwrap();
        let none = solve_equilibrium(&SharingMechanism::no_sharing(), &cfg).unwrap();
        assert_eq!((none.prices.p_a, none.prices.p_b), (q(2, 3), q(2, 3)));
        assert_eq!((none.pi_a, none.pi_b, none.cw), (q(25, 72), q(25, 72), int(2)));
        assert_eq!(none.diagnostics.candidates, vec![(q(2, 3), q(2, 3))]);
        let full = solve_equilibrium(&SharingMechanism::full_sharing(), &cfg).unwrap();
        assert_eq!((full.prices.p_a, full.prices.p_b), (int(1), int(1)));
        assert_eq!((full.pi_a, full.cw), (q(5, 16), int(3) - q(7, 8)));
    }

    #[test]
    fn all_scenarios_match_reference() {
        for scenario in Scenario::table() {
            let reference = closed_form_reference(scenario, int(3), int(1)).unwrap();
            let outcome = solve_equilibrium(&reference.mechanism, &reference.config).unwrap();
            assert!(
                reference.mismatches(&outcome).is_empty(),
                "{scenario}: {:?}",
                reference.mismatches(&outcome)
            );
        }
    }

    #[test]
    fn strategies_agree() {
        let cfg = MarketConfig::four_segment(int(3), int(1)).unwrap();
        let m = Scenario::FourSegFirmOpt.mechanism().unwrap();
        let exact = solve_equilibrium(&m, &cfg).unwrap();
        for strategy in [SolveStrategy::WarmStart, SolveStrategy::Iteration] {
            let opts = SolveOptions {
                strategy,
                ..Default::default()
            };
            let other = solve_equilibrium_with(&m, &cfg, &opts).unwrap();
            assert_eq!(other.prices.p_a, exact.prices.p_a, "{strategy}");
            assert_eq!(other.prices.p_b, exact.prices.p_b, "{strategy}");
            assert_eq!(other.diagnostics.method, strategy);
        }
    }

    #[test]
    fn eps_outside_window_still_solves() {
        let cfg = MarketConfig::one_segment(int(3), int(1)).unwrap();
        let m = Scenario::OneSegEps(q(3, 10)).mechanism().unwrap();
        let out = solve_equilibrium(&m, &cfg).unwrap();
        let demand = UniformDemand::new(Firm::A, &m, &cfg);
        assert_eq!(
            demand.best_response(&out.prices.p_b).revenue,
            demand.revenue(&out.prices.p_a, &out.prices.p_b)
        );
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::table() {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert_eq!(
            "1seg-eps=0.25".parse::<Scenario>().unwrap(),
            Scenario::OneSegEps(q(1, 4))
        );
        assert!(matches!("7seg".parse::<Scenario>(), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn rejects_uncovered_market() {
        let mut cfg = MarketConfig::one_segment(int(3), int(1)).unwrap();
        cfg.v = int(2);
        assert!(matches!(
            solve_equilibrium(&SharingMechanism::no_sharing(), &cfg),
            Err(Error::CoverageViolation { .. })
        ));
    }
}
