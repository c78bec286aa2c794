//! Personalized (stage 3) and uniform (stage 2) pricing.
//!
//! Stage 3 is solved in closed form per knowledge class: where both firms know
//! θ the nearer firm wins at `t·|1−2θ|`; where one firm knows θ it matches the
//! rival's uniform price; elsewhere the two uniform prices compete.
//!
//! Stage 2 needs each firm's uniform demand as a function of its own price.
//! Under piecewise-constant densities that demand is piecewise linear, so
//! revenue is a concave quadratic on every branch and the best response is
//! found by comparing branch corners with interior stationary points.

use crate::market::{
    knowledge_partition, ByFirm, Firm, IntervalSet, KnownBy, MarketConfig, PerSegment, SegmentKind, SharingMechanism,
};
use crate::pwl::{Linear, PiecewiseLinearFn};
use crate::rational::{clamp, half, int, Rational};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

/// `max{0, rival_offer + t·(d_rival(θ) − d_firm(θ))}`: the highest price at
/// which the consumer still (weakly) prefers `firm`.
pub fn match_price(firm: Firm, theta: &Rational, rival_offer: &Rational, config: &MarketConfig) -> Rational {
    let gap = config.t * (firm.rival().distance(theta) - firm.distance(theta));
    (rival_offer + gap).max(Rational::zero())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuelOutcome {
    pub price_a: Rational,
    pub price_b: Rational,
    pub winner: Firm,
}

/// Both firms know θ: the nearer one wins at `t·|1−2θ|`, the other bids 0.
/// At θ = ½ both bid 0 and B wins.
pub fn duel_prices(theta: &Rational, config: &MarketConfig) -> DuelOutcome {
    let t = config.t;
    if *theta < half() {
        DuelOutcome {
            price_a: t * (int(1) - int(2) * theta),
            price_b: Rational::zero(),
            winner: Firm::A,
        }
    } else {
        DuelOutcome {
            price_a: Rational::zero(),
            price_b: t * (int(2) * theta - int(1)),
            winner: Firm::B,
        }
    }
}

/// Cut on a stretch known only to B: A's uniform price wins on `[0, μ₁)`.
pub(crate) fn cut_b_only(p_a: &Rational, t: &Rational) -> Rational {
    clamp(half() - p_a / (t * int(2)), Rational::zero(), Rational::one())
}

/// Cut on a stretch known only to A: A's matched price wins on `[0, μ₂)`.
pub(crate) fn cut_a_only(p_b: &Rational, t: &Rational) -> Rational {
    clamp(half() + p_b / (t * int(2)), Rational::zero(), Rational::one())
}

/// Cut where neither firm knows θ: `μ₃ = ½ − (p_A − p_B)/(2t)`.
pub(crate) fn cut_neither(p_a: &Rational, p_b: &Rational, t: &Rational) -> Rational {
    clamp(half() - (p_a - p_b) / (t * int(2)), Rational::zero(), Rational::one())
}

/// A maximal stretch of one segment where the same firm sells at the same
/// price formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaleRun {
    pub start: Rational,
    pub end: Rational,
    pub winner: Firm,
    pub price: Linear,
    /// False when the consumer pays the winner's uniform price.
    pub personalized: bool,
}

/// Per segment, the maximal runs of `[0, 1]` served by one firm.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AllocationBreakpoints {
    pub runs: PerSegment<Vec<(Rational, Rational, Firm)>>,
}

impl AllocationBreakpoints {
    fn from_runs(runs: &PerSegment<Vec<SaleRun>>) -> Self {
        AllocationBreakpoints {
            runs: runs.map(|_, rs| {
                let mut out: Vec<(Rational, Rational, Firm)> = Vec::new();
                for r in rs {
                    match out.last_mut() {
                        Some(last) if last.2 == r.winner && last.1 == r.start => last.1 = r.end,
                        _ => out.push((r.start, r.end, r.winner)),
                    }
                }
                out
            }),
        }
    }

    /// Interior cut locations of one segment.
    pub fn cuts(&self, segment: SegmentKind) -> Vec<Rational> {
        self.runs[segment].iter().skip(1).map(|r| r.0).collect()
    }

    pub fn winner_at(&self, segment: SegmentKind, theta: &Rational) -> Option<Firm> {
        let runs = &self.runs[segment];
        runs.iter()
            .find(|r| r.0 <= *theta && *theta < r.1)
            .or_else(|| runs.last().filter(|r| r.1 == *theta))
            .map(|r| r.2)
    }
}

/// Everything stage 3 produces for fixed uniform prices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonalizedStage {
    /// Personalized offers, defined exactly where the firm knows θ. Losing
    /// offers are recorded at their floor of 0.
    pub schedules: PerSegment<ByFirm<PiecewiseLinearFn>>,
    pub runs: PerSegment<Vec<SaleRun>>,
    pub allocation: AllocationBreakpoints,
}

fn push_run(runs: &mut Vec<SaleRun>, run: SaleRun) {
    if run.start >= run.end {
        return;
    }
    if let Some(last) = runs.last_mut() {
        if last.end == run.start
            && last.winner == run.winner
            && last.price == run.price
            && last.personalized == run.personalized
        {
            last.end = run.end;
            return;
        }
    }
    runs.push(run);
}

/// Stage-3 outcome on one segment given its knowledge cover.
pub(crate) fn segment_stage(
    spans: &[(Rational, Rational, KnownBy)],
    p_a: &Rational,
    p_b: &Rational,
    t: &Rational,
) -> (Vec<SaleRun>, ByFirm<PiecewiseLinearFn>) {
    let zero = Linear::default();
    let duel_a = Linear::new(*t, -int(2) * t);
    let duel_b = Linear::new(-*t, int(2) * t);
    let mut runs = Vec::new();
    let mut offers = ByFirm::<PiecewiseLinearFn>::default();
    for (lo, hi, known) in spans {
        let split = |cut: Rational| clamp(cut, *lo, *hi);
        match known {
            KnownBy::Both => {
                let cut = split(half());
                push_run(
                    &mut runs,
                    SaleRun {
                        start: *lo,
                        end: cut,
                        winner: Firm::A,
                        price: duel_a,
                        personalized: true,
                    },
                );
                push_run(
                    &mut runs,
                    SaleRun {
                        start: cut,
                        end: *hi,
                        winner: Firm::B,
                        price: duel_b,
                        personalized: true,
                    },
                );
                offers.a.push(*lo, cut, duel_a);
                offers.a.push(cut, *hi, zero);
                offers.b.push(*lo, cut, zero);
                offers.b.push(cut, *hi, duel_b);
            }
            KnownBy::BOnly => {
                let cut = split(cut_b_only(p_a, t));
                let matched = Linear::new(p_a - t, int(2) * t);
                push_run(
                    &mut runs,
                    SaleRun {
                        start: *lo,
                        end: cut,
                        winner: Firm::A,
                        price: Linear::constant(*p_a),
                        personalized: false,
                    },
                );
                push_run(
                    &mut runs,
                    SaleRun {
                        start: cut,
                        end: *hi,
                        winner: Firm::B,
                        price: matched,
                        personalized: true,
                    },
                );
                offers.b.push(*lo, cut, zero);
                offers.b.push(cut, *hi, matched);
            }
            KnownBy::AOnly => {
                let cut = split(cut_a_only(p_b, t));
                let matched = Linear::new(p_b + t, -int(2) * t);
                push_run(
                    &mut runs,
                    SaleRun {
                        start: *lo,
                        end: cut,
                        winner: Firm::A,
                        price: matched,
                        personalized: true,
                    },
                );
                push_run(
                    &mut runs,
                    SaleRun {
                        start: cut,
                        end: *hi,
                        winner: Firm::B,
                        price: Linear::constant(*p_b),
                        personalized: false,
                    },
                );
                offers.a.push(*lo, cut, matched);
                offers.a.push(cut, *hi, zero);
            }
            KnownBy::Neither => {
                let cut = split(cut_neither(p_a, p_b, t));
                push_run(
                    &mut runs,
                    SaleRun {
                        start: *lo,
                        end: cut,
                        winner: Firm::A,
                        price: Linear::constant(*p_a),
                        personalized: false,
                    },
                );
                push_run(
                    &mut runs,
                    SaleRun {
                        start: cut,
                        end: *hi,
                        winner: Firm::B,
                        price: Linear::constant(*p_b),
                        personalized: false,
                    },
                );
            }
        }
    }
    (runs, offers)
}

/// Personalized offers and the resulting allocation for fixed uniform prices.
pub fn personalized_stage(
    p_a: &Rational,
    p_b: &Rational,
    mechanism: &SharingMechanism,
    config: &MarketConfig,
) -> PersonalizedStage {
    let knowledge = knowledge_partition(mechanism);
    let mut runs = PerSegment::<Vec<SaleRun>>::default();
    let mut schedules = PerSegment::<ByFirm<PiecewiseLinearFn>>::default();
    for kind in SegmentKind::ALL {
        let (r, s) = segment_stage(&knowledge[kind].spans(), p_a, p_b, &config.t);
        runs[kind] = r;
        schedules[kind] = s;
    }
    let allocation = AllocationBreakpoints::from_runs(&runs);
    PersonalizedStage {
        schedules,
        runs,
        allocation,
    }
}

// ---------------------------------------------------------------------------
// Uniform demand
// ---------------------------------------------------------------------------

/// `price = constant + rival·p_rival`: how a best-response candidate moves
/// with the rival's uniform price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Affine {
    pub constant: Rational,
    pub rival: Rational,
}

impl Affine {
    pub fn eval(&self, p_rival: &Rational) -> Rational {
        self.constant + self.rival * p_rival
    }
}

/// Cumulative mass `G(x) = ∫₀ˣ g` of a piecewise-constant weight `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct CumulativeMass {
    xs: Vec<Rational>,
    levels: Vec<Rational>,
    cum: Vec<Rational>,
}

impl CumulativeMass {
    /// `mass · density`, zeroed on `masked`.
    pub(crate) fn new(mass: &Rational, density: &crate::market::DensitySpec, masked: &IntervalSet) -> Self {
        let mut cuts: Vec<Rational> = density.pieces().iter().flat_map(|p| [p.lo, p.hi]).collect();
        for (a, b) in masked.spans() {
            cuts.push(*a);
            cuts.push(*b);
        }
        cuts.sort();
        cuts.dedup();
        let mut xs = vec![Rational::zero()];
        let mut levels: Vec<Rational> = Vec::new();
        for w in cuts.windows(2) {
            let mid = (w[0] + w[1]) * half();
            let level = if masked.contains(&mid) {
                Rational::zero()
            } else {
                mass * density.level_at(&mid)
            };
            if levels.last() == Some(&level) {
                *xs.last_mut().unwrap() = w[1];
            } else {
                levels.push(level);
                xs.push(w[1]);
            }
        }
        let mut cum = Vec::with_capacity(xs.len());
        let mut acc = Rational::zero();
        cum.push(acc);
        for (i, level) in levels.iter().enumerate() {
            acc += level * (xs[i + 1] - xs[i]);
            cum.push(acc);
        }
        CumulativeMass { xs, levels, cum }
    }

    pub(crate) fn total(&self) -> Rational {
        *self.cum.last().unwrap()
    }

    /// `(cum at piece start, level, piece start)` for the piece containing x,
    /// with the clamped regions below 0 and above 1 as zero-level pieces.
    fn piece(&self, x: &Rational) -> (Rational, Rational, Rational) {
        if *x <= Rational::zero() {
            return (Rational::zero(), Rational::zero(), Rational::zero());
        }
        if *x >= Rational::one() {
            return (self.total(), Rational::zero(), Rational::one());
        }
        let i = self.xs.partition_point(|b| b <= x) - 1;
        (self.cum[i], self.levels[i], self.xs[i])
    }

    pub(crate) fn at(&self, x: &Rational) -> Rational {
        let (c, level, z) = self.piece(x);
        c + level * (x - z)
    }
}

/// One contribution to a firm's uniform demand: the mass of `G` below the
/// location `½ + [follows_rival]·p_r/(2t) − p/(2t)`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct DemandTerm {
    cdf: CumulativeMass,
    follows_rival: bool,
}

/// Which kind of candidate won a best-response comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResponseKind {
    /// Stationary point inside a demand branch.
    Interior,
    /// Branch boundary (including price 0).
    Corner,
    /// Demand is identically zero; price 0 by convention.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestResponse {
    pub price: Rational,
    pub revenue: Rational,
    pub formula: Affine,
    pub kind: ResponseKind,
}

/// A firm's uniform-price demand for a fixed mechanism, as a function of its
/// own price and the rival's.
///
/// Firm B's problem is mapped onto A's by the reflection θ ↦ 1 − θ, so one
/// implementation serves both firms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformDemand {
    t: Rational,
    terms: Vec<DemandTerm>,
}

impl UniformDemand {
    pub fn new(firm: Firm, mechanism: &SharingMechanism, config: &MarketConfig) -> Self {
        let (own_turf, masked) = match firm {
            Firm::A => (SegmentKind::BOnly, mechanism.share_b_to_a.clone()),
            Firm::B => (SegmentKind::AOnly, mechanism.share_a_to_b.clone()),
        };
        Self::from_parts(firm, config, own_turf, &masked)
    }

    /// Demand of `firm` when the rival's turf segment reveals `shared`.
    /// Depends on the mechanism only through that one interval set.
    pub fn for_side(firm: Firm, shared: &IntervalSet, config: &MarketConfig) -> Self {
        let own_turf = match firm {
            Firm::A => SegmentKind::BOnly,
            Firm::B => SegmentKind::AOnly,
        };
        Self::from_parts(firm, config, own_turf, shared)
    }

    fn from_parts(firm: Firm, config: &MarketConfig, turf: SegmentKind, masked: &IntervalSet) -> Self {
        let orient = |set: &IntervalSet| match firm {
            Firm::A => set.clone(),
            Firm::B => set.mirror(),
        };
        let orient_density = |kind: SegmentKind| match firm {
            Firm::A => config.density(kind).clone(),
            Firm::B => config.density(kind).mirror(),
        };
        let mut terms = Vec::new();
        let turf_mass = config.mass(turf);
        if turf_mass.is_positive() {
            terms.push(DemandTerm {
                cdf: CumulativeMass::new(&turf_mass, &orient_density(turf), &orient(masked)),
                follows_rival: false,
            });
        }
        let open_mass = config.mass(SegmentKind::Neither);
        if open_mass.is_positive() {
            terms.push(DemandTerm {
                cdf: CumulativeMass::new(&open_mass, &orient_density(SegmentKind::Neither), &IntervalSet::empty()),
                follows_rival: true,
            });
        }
        terms.retain(|term| term.cdf.total().is_positive());
        UniformDemand { t: config.t, terms }
    }

    pub fn is_degenerate(&self) -> bool {
        self.terms.is_empty()
    }

    fn location(&self, term: &DemandTerm, p: &Rational, p_rival: &Rational) -> Rational {
        let two_t = self.t * int(2);
        let shift = if term.follows_rival {
            p_rival / two_t
        } else {
            Rational::zero()
        };
        half() + shift - p / two_t
    }

    /// Mass of consumers paying this firm's uniform price.
    pub fn demand(&self, p: &Rational, p_rival: &Rational) -> Rational {
        self.terms
            .iter()
            .map(|term| term.cdf.at(&self.location(term, p, p_rival)))
            .sum()
    }

    pub fn revenue(&self, p: &Rational, p_rival: &Rational) -> Rational {
        p * self.demand(p, p_rival)
    }

    /// Price at which a term's location crosses a breakpoint `z`.
    fn crossing(&self, term: &DemandTerm, z: &Rational) -> Affine {
        Affine {
            constant: self.t - int(2) * self.t * z,
            rival: if term.follows_rival {
                Rational::one()
            } else {
                Rational::zero()
            },
        }
    }

    /// Stationary point of revenue for a fixed choice of piece per term.
    fn stationary(&self, states: &[(Rational, Rational, Rational)]) -> Option<Affine> {
        let two_t = self.t * int(2);
        let mut slope = Rational::zero();
        let mut base = Rational::zero();
        let mut rival = Rational::zero();
        for (term, (cum, level, z)) in self.terms.iter().zip(states) {
            slope += level / two_t;
            base += cum + level * (half() - z);
            if term.follows_rival {
                rival += level / two_t;
            }
        }
        if !slope.is_positive() {
            return None;
        }
        let denom = slope * int(2);
        Some(Affine {
            constant: base / denom,
            rival: rival / denom,
        })
    }

    /// Global revenue maximizer over `p ≥ 0`; ties go to the lowest price.
    pub fn best_response(&self, p_rival: &Rational) -> BestResponse {
        if self.is_degenerate() {
            return BestResponse {
                price: Rational::zero(),
                revenue: Rational::zero(),
                formula: Affine::default(),
                kind: ResponseKind::Degenerate,
            };
        }
        let mut corners: Vec<(Rational, Affine)> = vec![(Rational::zero(), Affine::default())];
        for term in &self.terms {
            for z in &term.cdf.xs {
                let f = self.crossing(term, z);
                let p = f.eval(p_rival);
                if p.is_positive() {
                    corners.push((p, f));
                }
            }
        }
        corners.sort();
        corners.dedup_by(|x, y| x.0 == y.0);

        let mut candidates: Vec<(Rational, Affine, ResponseKind)> =
            corners.iter().map(|(p, f)| (*p, *f, ResponseKind::Corner)).collect();
        for w in corners.windows(2) {
            let (lo, hi) = (&w[0].0, &w[1].0);
            let mid = (lo + hi) * half();
            let states: Vec<_> = self
                .terms
                .iter()
                .map(|term| term.cdf.piece(&self.location(term, &mid, p_rival)))
                .collect();
            if let Some(f) = self.stationary(&states) {
                let p = f.eval(p_rival);
                if *lo < p && p < *hi {
                    candidates.push((p, f, ResponseKind::Interior));
                }
            }
        }
        candidates.sort_by_key(|x| x.0);

        let mut best: Option<BestResponse> = None;
        for (p, formula, kind) in candidates {
            let revenue = self.revenue(&p, p_rival);
            if best.as_ref().is_none_or(|b| revenue > b.revenue) {
                best = Some(BestResponse {
                    price: p,
                    revenue,
                    formula,
                    kind,
                });
            }
        }
        best.expect("price 0 is always a candidate")
    }

    /// Every affine formula a best response can take, over all rival prices.
    pub fn candidate_formulas(&self) -> Vec<Affine> {
        if self.is_degenerate() {
            return vec![Affine::default()];
        }
        let mut out = BTreeSet::new();
        out.insert(Affine::default());
        let mut per_term: Vec<Vec<(Rational, Rational, Rational)>> = Vec::new();
        for term in &self.terms {
            let mut states = vec![(Rational::zero(), Rational::zero(), Rational::zero())];
            for (i, z) in term.cdf.xs.iter().enumerate() {
                out.insert(self.crossing(term, z));
                if i < term.cdf.levels.len() {
                    states.push((term.cdf.cum[i], term.cdf.levels[i], *z));
                }
            }
            states.push((term.cdf.total(), Rational::zero(), Rational::one()));
            per_term.push(states);
        }
        let mut combo = vec![0usize; per_term.len()];
        loop {
            let states: Vec<_> = combo.iter().zip(&per_term).map(|(&i, s)| s[i]).collect();
            if let Some(f) = self.stationary(&states) {
                out.insert(f);
            }
            let mut k = 0;
            loop {
                if k == combo.len() {
                    return out.into_iter().collect();
                }
                combo[k] += 1;
                if combo[k] < per_term[k].len() {
                    break;
                }
                combo[k] = 0;
                k += 1;
            }
        }
    }
}

/// Mass of consumers who end up paying `firm`'s uniform price.
pub fn uniform_demand(
    firm: Firm,
    p_self: &Rational,
    p_rival: &Rational,
    mechanism: &SharingMechanism,
    config: &MarketConfig,
) -> Rational {
    UniformDemand::new(firm, mechanism, config).demand(p_self, p_rival)
}

/// Source of uniform-price best responses for one firm.
pub(crate) trait Responder {
    fn revenue(&self, p: &Rational, p_rival: &Rational) -> Rational;
    fn best_response(&self, p_rival: &Rational) -> BestResponse;
    fn candidate_formulas(&self) -> Vec<Affine>;
}

impl Responder for UniformDemand {
    fn revenue(&self, p: &Rational, p_rival: &Rational) -> Rational {
        UniformDemand::revenue(self, p, p_rival)
    }
    fn best_response(&self, p_rival: &Rational) -> BestResponse {
        UniformDemand::best_response(self, p_rival)
    }
    fn candidate_formulas(&self) -> Vec<Affine> {
        UniformDemand::candidate_formulas(self)
    }
}

/// Revenue-maximizing uniform price against `p_rival` (lowest on ties).
/// A firm whose uniform price reaches nobody gets price 0 and
/// [`ResponseKind::Degenerate`].
pub fn best_response_uniform(
    firm: Firm,
    p_rival: &Rational,
    mechanism: &SharingMechanism,
    config: &MarketConfig,
) -> BestResponse {
    UniformDemand::new(firm, mechanism, config).best_response(p_rival)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn q(n: i128, d: i128) -> Rational {
        rat(n, d)
    }

    fn one_seg() -> MarketConfig {
        MarketConfig::one_segment(int(3), int(1)).unwrap()
    }

    fn four_seg() -> MarketConfig {
        MarketConfig::four_segment(int(3), int(1)).unwrap()
    }

    fn share_b(a: Rational, b: Rational) -> SharingMechanism {
        SharingMechanism::new(IntervalSet::interval(a, b).unwrap(), IntervalSet::empty())
    }

    #[test]
    fn match_price_examples() {
        let cfg = one_seg();
        assert_eq!(match_price(Firm::B, &q(3, 4), &q(1, 2), &cfg), int(1));
        assert_eq!(match_price(Firm::B, &int(0), &q(1, 2), &cfg), int(0));
        assert_eq!(match_price(Firm::A, &q(1, 4), &q(2, 3), &cfg), q(7, 6));
    }

    #[test]
    fn duel_examples() {
        let cfg = one_seg();
        assert_eq!(
            duel_prices(&q(1, 4), &cfg),
            DuelOutcome {
                price_a: q(1, 2),
                price_b: int(0),
                winner: Firm::A
            }
        );
        assert_eq!(
            duel_prices(&q(1, 2), &cfg),
            DuelOutcome {
                price_a: int(0),
                price_b: int(0),
                winner: Firm::B
            }
        );
        assert_eq!(
            duel_prices(&q(4, 5), &cfg),
            DuelOutcome {
                price_a: int(0),
                price_b: q(3, 5),
                winner: Firm::B
            }
        );
    }

    #[test]
    fn stage_one_segment_no_sharing() {
        let cfg = one_seg();
        let st = personalized_stage(&q(1, 2), &int(0), &SharingMechanism::no_sharing(), &cfg);
        assert_eq!(st.allocation.cuts(SegmentKind::BOnly), vec![q(1, 4)]);
        let b = &st.schedules[SegmentKind::BOnly].b;
        for k in 0..=20 {
            let th = q(k, 20);
            let expect = (int(2) * th - q(1, 2)).max(int(0));
            assert_eq!(b.eval(&th), Some(expect));
        }
        assert!(st.schedules[SegmentKind::BOnly].a.is_empty());
    }

    #[test]
    fn stage_four_segment_no_sharing_cuts() {
        let cfg = four_seg();
        let p = q(2, 3);
        let st = personalized_stage(&p, &p, &SharingMechanism::no_sharing(), &cfg);
        assert_eq!(st.allocation.cuts(SegmentKind::BOnly), vec![q(1, 6)]);
        assert_eq!(st.allocation.cuts(SegmentKind::AOnly), vec![q(5, 6)]);
        assert_eq!(st.allocation.cuts(SegmentKind::Neither), vec![q(1, 2)]);
        assert_eq!(st.allocation.cuts(SegmentKind::Both), vec![q(1, 2)]);
    }

    #[test]
    fn stage_epsilon_sharing_schedule() {
        let cfg = one_seg();
        let eps = q(1, 10);
        let p_a = int(1) - int(2) * eps;
        let st = personalized_stage(&p_a, &int(0), &share_b(eps, q(1, 2)), &cfg);
        let b = &st.schedules[SegmentKind::BOnly].b;
        let a = &st.schedules[SegmentKind::BOnly].a;
        for k in 0..=40 {
            let th = q(k, 40);
            let expect_b = if th >= q(1, 2) {
                int(2) * th - int(2) * eps
            } else {
                int(0)
            };
            assert_eq!(b.eval(&th), Some(expect_b), "θ = {th}");
            let expect_a = (th >= eps && th < q(1, 2)).then(|| int(1) - int(2) * th);
            assert_eq!(a.eval(&th), expect_a, "θ = {th}");
        }
        assert_eq!(st.allocation.winner_at(SegmentKind::BOnly, &q(1, 20)), Some(Firm::A));
        assert_eq!(st.allocation.winner_at(SegmentKind::BOnly, &q(3, 10)), Some(Firm::A));
        assert_eq!(st.allocation.winner_at(SegmentKind::BOnly, &q(1, 2)), Some(Firm::B));
    }

    #[test]
    fn demand_examples() {
        let none = SharingMechanism::no_sharing();
        assert_eq!(uniform_demand(Firm::A, &q(1, 2), &int(0), &none, &one_seg()), q(1, 4));
        let p = q(2, 3);
        assert_eq!(uniform_demand(Firm::A, &p, &p, &none, &four_seg()), q(1, 6));
        assert_eq!(uniform_demand(Firm::B, &p, &p, &none, &four_seg()), q(1, 6));
        // Recapture branch below t/3 under the firm-optimal four-segment mechanism.
        let m = share_b(q(1, 6), q(1, 3));
        let p_a = q(1, 4);
        let expected = q(1, 4) * (q(1, 2) - p_a / int(2) - q(1, 6)) + q(1, 4) * (q(1, 2) - (p_a - p) / int(2));
        assert_eq!(uniform_demand(Firm::A, &p_a, &p, &m, &four_seg()), expected);
    }

    #[test]
    fn best_response_examples() {
        let none = SharingMechanism::no_sharing();
        for rival in [int(0), q(1, 3), int(2)] {
            assert_eq!(best_response_uniform(Firm::A, &rival, &none, &one_seg()).price, q(1, 2));
        }
        let br = best_response_uniform(Firm::A, &q(2, 3), &none, &four_seg());
        assert_eq!(br.price, q(2, 3));
        assert_eq!(br.kind, ResponseKind::Interior);
        assert_eq!(
            br.formula,
            Affine {
                constant: q(1, 2),
                rival: q(1, 4)
            }
        );

        let br = best_response_uniform(Firm::A, &int(0), &share_b(q(1, 4), q(1, 2)), &one_seg());
        assert_eq!(br.price, q(1, 2));
        let br = best_response_uniform(Firm::A, &int(0), &share_b(q(1, 10), q(1, 2)), &one_seg());
        assert_eq!(br.price, q(4, 5));
        assert_eq!(br.kind, ResponseKind::Corner);

        let full = SharingMechanism::full_sharing();
        let br = best_response_uniform(Firm::A, &int(1), &full, &one_seg());
        assert_eq!(br.kind, ResponseKind::Degenerate);
        assert_eq!(br.price, int(0));
        let br = best_response_uniform(Firm::B, &int(1), &full, &four_seg());
        assert_eq!(br.price, int(1));
    }

    #[test]
    fn best_response_beats_price_grid() {
        let cfg = four_seg();
        let m = share_b(q(1, 6), q(1, 3));
        let demand = UniformDemand::new(Firm::A, &m, &cfg);
        for rival in [int(0), q(1, 3), q(2, 3), int(1), q(3, 2)] {
            let br = demand.best_response(&rival);
            for k in 0..=2000 {
                let p = q(k, 1000);
                assert!(demand.revenue(&p, &rival) <= br.revenue, "p = {p}, rival = {rival}");
            }
            assert_eq!(br.revenue, demand.revenue(&br.price, &rival));
            assert_eq!(br.formula.eval(&rival), br.price);
        }
    }

    #[test]
    fn candidate_formulas_include_every_realized_branch() {
        let cfg = four_seg();
        let m = SharingMechanism::new(
            IntervalSet::interval(q(1, 12), q(5, 12)).unwrap(),
            IntervalSet::interval(q(1, 2), q(3, 4)).unwrap(),
        );
        for firm in Firm::BOTH {
            let demand = UniformDemand::new(firm, &m, &cfg);
            let formulas = demand.candidate_formulas();
            for k in 0..=60 {
                let rival = q(k, 30);
                let br = demand.best_response(&rival);
                assert!(formulas.contains(&br.formula), "{firm} rival {rival}: {:?}", br.formula);
            }
        }
    }

    #[test]
    fn demand_matches_stage_allocation() {
        // Two independent routes: the demand terms and the stage-3 runs.
        let cfg = four_seg();
        let m = SharingMechanism::new(
            IntervalSet::new([(q(1, 10), q(1, 5)), (q(3, 5), q(7, 10))]).unwrap(),
            IntervalSet::interval(q(1, 3), q(2, 3)).unwrap(),
        );
        for (pa, pb) in [(q(2, 3), q(2, 3)), (q(1, 5), q(9, 10)), (q(3, 2), q(1, 10))] {
            let st = personalized_stage(&pa, &pb, &m, &cfg);
            for firm in Firm::BOTH {
                let (own, rival) = if firm == Firm::A { (&pa, &pb) } else { (&pb, &pa) };
                let from_runs: Rational = st
                    .runs
                    .iter()
                    .flat_map(|(k, rs)| rs.iter().map(move |r| (k, r)))
                    .filter(|(_, r)| r.winner == firm && !r.personalized)
                    .map(|(k, r)| cfg.mass(k) * (r.end - r.start))
                    .sum();
                assert_eq!(uniform_demand(firm, own, rival, &m, &cfg), from_runs);
            }
        }
    }
}
