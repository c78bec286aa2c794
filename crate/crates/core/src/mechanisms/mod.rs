//! Named mechanisms, the general-distribution construction, and exhaustive
//! search over single-interval mechanisms.

mod search;

pub use search::{
    search_interval_mechanisms, Constraint, Evaluated, FrontierPoint, Objective, SearchOptions, SearchReport,
};

use crate::equilibrium::solve_equilibrium;
use crate::error::{Error, Result};
use crate::market::{IntervalSet, MarketConfig, SegmentKind, SharingMechanism};
use crate::rational::{half, int, parse_rational, rat, Rational};
use num_traits::{Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CanonicalMechanism {
    NoSharing,
    FullSharing,
    /// B reveals `[ε, ½)` of its segment.
    OneSegEps(Rational),
    OneSegConsumerOpt,
    OneSegFirmOpt,
    TwoSegConsumerOpt,
    TwoSegFirmOpt,
    FourSegConsumerOpt,
    FourSegFirmOpt,
    /// Built from the market's no-sharing prices; see [`appendix_firm_optimal`].
    Appendix,
}

impl CanonicalMechanism {
    pub const NAMES: [&'static str; 10] = [
        "no-sharing",
        "full-sharing",
        "1seg-eps",
        "1seg-consumeropt",
        "1seg-firmopt",
        "2seg-consumeropt",
        "2seg-firmopt",
        "4seg-consumeropt",
        "4seg-firmopt",
        "appendix",
    ];
}

impl fmt::Display for CanonicalMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CanonicalMechanism::NoSharing => f.write_str("no-sharing"),
            CanonicalMechanism::FullSharing => f.write_str("full-sharing"),
            CanonicalMechanism::OneSegEps(eps) => write!(f, "1seg-eps({eps})"),
            CanonicalMechanism::OneSegConsumerOpt => f.write_str("1seg-consumeropt"),
            CanonicalMechanism::OneSegFirmOpt => f.write_str("1seg-firmopt"),
            CanonicalMechanism::TwoSegConsumerOpt => f.write_str("2seg-consumeropt"),
            CanonicalMechanism::TwoSegFirmOpt => f.write_str("2seg-firmopt"),
            CanonicalMechanism::FourSegConsumerOpt => f.write_str("4seg-consumeropt"),
            CanonicalMechanism::FourSegFirmOpt => f.write_str("4seg-firmopt"),
            CanonicalMechanism::Appendix => f.write_str("appendix"),
        }
    }
}

impl FromStr for CanonicalMechanism {
    type Err = Error;

    /// `1seg-eps` takes its parameter inline: `1seg-eps(1/10)` or `1seg-eps=0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("1seg-eps") {
            let arg = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .or_else(|| rest.strip_prefix('='))
                .ok_or_else(|| Error::BadParam(format!("`{s}` needs a value, e.g. 1seg-eps(1/10)")))?;
            return Ok(CanonicalMechanism::OneSegEps(parse_rational(arg)?));
        }
        Ok(match s {
            "no-sharing" => CanonicalMechanism::NoSharing,
            "full-sharing" => CanonicalMechanism::FullSharing,
            "1seg-consumeropt" => CanonicalMechanism::OneSegConsumerOpt,
            "1seg-firmopt" => CanonicalMechanism::OneSegFirmOpt,
            "2seg-consumeropt" => CanonicalMechanism::TwoSegConsumerOpt,
            "2seg-firmopt" => CanonicalMechanism::TwoSegFirmOpt,
            "4seg-consumeropt" => CanonicalMechanism::FourSegConsumerOpt,
            "4seg-firmopt" => CanonicalMechanism::FourSegFirmOpt,
            "appendix" => CanonicalMechanism::Appendix,
            _ => {
                return Err(Error::BadParam(format!(
                    "unknown mechanism `{s}` (expected one of {})",
                    CanonicalMechanism::NAMES.join(", ")
                )))
            }
        })
    }
}

fn b_only(a: Rational, b: Rational) -> Result<SharingMechanism> {
    Ok(SharingMechanism::new(
        IntervalSet::interval(a, b)?,
        IntervalSet::empty(),
    ))
}

/// Interval sets of a named mechanism. `ε` must lie in `(0, ¼]` unless
/// `allow_extrapolation` is set, in which case `(0, ½)` is accepted.
/// Only [`CanonicalMechanism::Appendix`] looks at `config`.
pub fn canonical_mechanism(
    name: &CanonicalMechanism,
    config: &MarketConfig,
    allow_extrapolation: bool,
) -> Result<SharingMechanism> {
    match name {
        CanonicalMechanism::NoSharing => Ok(SharingMechanism::no_sharing()),
        CanonicalMechanism::FullSharing => Ok(SharingMechanism::full_sharing()),
        CanonicalMechanism::OneSegEps(eps) => {
            let upper = if allow_extrapolation { half() } else { rat(1, 4) };
            let in_range = eps.is_positive() && (*eps < upper || (!allow_extrapolation && *eps == upper));
            if !in_range {
                return Err(Error::BadParam(format!(
                    "ε = {eps} outside {}",
                    if allow_extrapolation { "(0, 1/2)" } else { "(0, 1/4]" }
                )));
            }
            b_only(*eps, half())
        }
        CanonicalMechanism::OneSegConsumerOpt => b_only(rat(1, 4), half()),
        CanonicalMechanism::OneSegFirmOpt => b_only(rat(1, 4), rat(3, 8)),
        CanonicalMechanism::TwoSegConsumerOpt => product_mechanism(&b_only(rat(1, 4), half())?),
        CanonicalMechanism::TwoSegFirmOpt => product_mechanism(&b_only(rat(1, 4), rat(3, 8))?),
        CanonicalMechanism::FourSegConsumerOpt => product_mechanism(&b_only(rat(1, 6), half())?),
        CanonicalMechanism::FourSegFirmOpt => product_mechanism(&b_only(rat(1, 6), rat(1, 3))?),
        CanonicalMechanism::Appendix => Ok(appendix_firm_optimal(config)?.1),
    }
}

/// Two-segment version of a one-sided mechanism: A reveals the mirror image
/// of what B reveals.
pub fn product_mechanism(m: &SharingMechanism) -> Result<SharingMechanism> {
    if !m.share_a_to_b.is_empty() {
        return Err(Error::BadParam(format!(
            "product construction expects a mechanism where only B shares, got {m}"
        )));
    }
    Ok(SharingMechanism::new(m.share_b_to_a.clone(), m.share_b_to_a.mirror()))
}

/// `rational + coeff·√radicand`, compared exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Surd {
    pub rational: Rational,
    pub coeff: Rational,
    pub radicand: Rational,
}

impl Surd {
    pub fn to_f64(&self) -> f64 {
        crate::rational::to_f64(&self.rational)
            + crate::rational::to_f64(&self.coeff) * crate::rational::to_f64(&self.radicand).sqrt()
    }

    /// Sign of `x − self`.
    pub fn cmp_rational(&self, x: &Rational) -> Ordering {
        // x − r vs c·√d, both sides' signs decide before squaring.
        let lhs = x - self.rational;
        let rhs_sign = if self.coeff.is_zero() || self.radicand.is_zero() {
            Ordering::Equal
        } else if self.coeff.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        };
        let lhs_sign = lhs.cmp(&Rational::zero());
        if lhs_sign != rhs_sign {
            return lhs_sign.cmp(&rhs_sign);
        }
        if lhs_sign == Ordering::Equal {
            return Ordering::Equal;
        }
        let squares = (lhs * lhs).cmp(&(self.coeff * self.coeff * self.radicand));
        if lhs_sign == Ordering::Greater {
            squares
        } else {
            squares.reverse()
        }
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeff.is_zero() {
            write!(f, "{}", self.rational)
        } else {
            write!(f, "{} + {}·√{}", self.rational, self.coeff, self.radicand)
        }
    }
}

/// Open interval of ε for which sharing `[ε, ½)` in the one-segment market
/// raises both joint profit and consumer welfare above no sharing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpsilonWindow {
    pub lower: Surd,
    pub upper: Surd,
}

impl EpsilonWindow {
    /// `(welfare rises, joint profit rises)`: `ε + ε² > ¼` and `ε + ε² < 5/16`.
    pub fn conditions(eps: &Rational) -> (bool, bool) {
        let s = eps + eps * eps;
        (s > rat(1, 4), s < rat(5, 16))
    }

    pub fn contains(&self, eps: &Rational) -> bool {
        self.lower.cmp_rational(eps) == Ordering::Greater && self.upper.cmp_rational(eps) == Ordering::Less
    }
}

/// Positive root of `ε² + ε − c`: `−½ + ½·√(1 + 4c)`.
fn positive_root(c: Rational) -> Surd {
    let radicand = int(1) + int(4) * c;
    match crate::rational::exact_sqrt(&radicand) {
        Some(root) => Surd {
            rational: (root - int(1)) * half(),
            coeff: Rational::zero(),
            radicand: Rational::zero(),
        },
        None => Surd {
            rational: -half(),
            coeff: half(),
            radicand,
        },
    }
}

/// `((√2 − 1)/2, ¼)`, the solution set of `¼ < ε + ε² < 5/16`.
pub fn epsilon_window() -> EpsilonWindow {
    EpsilonWindow {
        lower: positive_root(rat(1, 4)),
        upper: positive_root(rat(5, 16)),
    }
}

/// Sharing plan built from the no-sharing prices of an arbitrary market.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppendixPlan {
    pub p_a: Rational,
    pub p_b: Rational,
    /// Where B's match price against `p_A` reaches zero: `½ − p_A/(2t)`.
    pub alpha1: Rational,
    /// Where A's match price against `p_B` reaches zero: `½ + p_B/(2t)`.
    pub alpha2: Rational,
    pub share_b_to_a: IntervalSet,
    pub share_a_to_b: IntervalSet,
    /// A's gain on the revealed part of B's segment.
    pub ir_lhs_a: Rational,
    /// A's loss on the revealed part of its own segment.
    pub ir_rhs_a: Rational,
    pub ir_lhs_b: Rational,
    pub ir_rhs_b: Rational,
}

impl AppendixPlan {
    pub fn ir_a(&self) -> bool {
        self.ir_lhs_a >= self.ir_rhs_a
    }

    pub fn ir_b(&self) -> bool {
        self.ir_lhs_b >= self.ir_rhs_b
    }
}

fn interval_or_empty(a: Rational, b: Rational) -> Result<IntervalSet> {
    if a < b {
        IntervalSet::interval(a, b)
    } else {
        Ok(IntervalSet::empty())
    }
}

/// Reveals to the rival exactly those consumers it would win by dueling at a
/// higher price than the current owner's match price, and checks whether
/// each firm's gain covers its loss at the no-sharing prices.
pub fn appendix_firm_optimal(config: &MarketConfig) -> Result<(AppendixPlan, SharingMechanism, bool)> {
    let baseline = solve_equilibrium(&SharingMechanism::no_sharing(), config)?;
    let (p_a, p_b) = (baseline.prices.p_a, baseline.prices.p_b);
    let t = config.t;
    let two_t = t * int(2);
    let alpha1 = half() - p_a / two_t;
    let alpha2 = half() + p_b / two_t;
    let end_b = (int(1) + int(2) * alpha1) / int(4);
    let start_a = (int(1) + int(2) * alpha2) / int(4);
    let share_b_to_a = interval_or_empty(alpha1, end_b)?;
    let share_a_to_b = interval_or_empty(start_a, alpha2)?;

    let integral = |kind: SegmentKind, lo: &Rational, hi: &Rational, intercept: Rational, slope: Rational| {
        if lo >= hi {
            return Rational::zero();
        }
        config.mass(kind) * config.density(kind).integrate_linear(lo, hi, &intercept, &slope)
    };
    let ir_lhs_a = integral(SegmentKind::BOnly, &alpha1, &end_b, t, -two_t);
    let ir_rhs_a = integral(SegmentKind::AOnly, &start_a, &alpha2, p_b + t, -two_t);
    let ir_lhs_b = integral(SegmentKind::AOnly, &start_a, &alpha2, -t, two_t);
    let ir_rhs_b = integral(SegmentKind::BOnly, &alpha1, &end_b, p_a - t, two_t);

    let plan = AppendixPlan {
        p_a,
        p_b,
        alpha1,
        alpha2,
        share_b_to_a: share_b_to_a.clone(),
        share_a_to_b: share_a_to_b.clone(),
        ir_lhs_a,
        ir_rhs_a,
        ir_lhs_b,
        ir_rhs_b,
    };
    let ok = plan.ir_a() && plan.ir_b();
    Ok((plan, SharingMechanism::new(share_b_to_a, share_a_to_b), ok))
}

fn check_masses(q_a: &Rational, q_b: &Rational) -> Result<()> {
    if !q_a.is_positive() || !q_b.is_positive() {
        return Err(Error::BadMasses(format!(
            "need q_A > 0 and q_B > 0, got {q_a} and {q_b}"
        )));
    }
    Ok(())
}

/// No-sharing uniform prices with uniform densities and segment masses
/// `q_A`, `q_B`, `q_∅`.
pub fn no_sharing_prices_general(
    q_a: &Rational,
    q_b: &Rational,
    q_none: &Rational,
    t: &Rational,
) -> Result<(Rational, Rational)> {
    check_masses(q_a, q_b)?;
    if q_none.is_negative() {
        return Err(Error::BadMasses(format!("q_∅ = {q_none} is negative")));
    }
    let (a, b, n) = (q_a, q_b, q_none);
    let denom = int(4) * b * a + int(4) * b * n + int(4) * a * n + int(3) * n * n;
    let p_a = t * (int(2) * b * a + int(2) * b * n + int(3) * a * n + int(3) * n * n) / denom;
    let p_b = t * (int(2) * b * a + int(2) * a * n + int(3) * b * n + int(3) * n * n) / denom;
    Ok((p_a, p_b))
}

/// `3q_B ≥ q_A ≥ q_B/3`.
pub fn mass_ratio_ir_check(q_a: &Rational, q_b: &Rational) -> Result<bool> {
    check_masses(q_a, q_b)?;
    Ok(int(3) * q_b >= *q_a && *q_a * int(3) >= *q_b)
}
