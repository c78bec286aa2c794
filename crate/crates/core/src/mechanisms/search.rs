//! Exhaustive search over mechanisms that reveal one grid interval per side.
//!
//! A's demand depends on the mechanism only through what B reveals, and B's
//! only through what A reveals, so both are built once per interval. Segment
//! outcomes are cached the same way: B's segment depends on (what B reveals,
//! p_A), A's segment on (what A reveals, p_B). Most mechanisms leave the
//! no-sharing prices in place, which makes them almost free to evaluate.

use crate::equilibrium::{holds, solve_equilibrium, Duopoly};
use crate::error::{Error, Result};
use crate::market::{
    knowledge_partition, ByFirm, Firm, IntervalSet, KnownBy, MarketConfig, PerSegment, SegmentKind, SharingMechanism,
};
use crate::par::Execution;
use crate::pricing::{segment_stage, Affine, BestResponse, Responder, UniformDemand};
use crate::pwl::PiecewiseLinearFn;
use crate::rational::Rational;
use crate::welfare::{first_harm, segment_metrics, welfare_function, SegmentMetrics};
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    None,
    /// No consumer is worse off than without sharing.
    NoHarm,
    /// Joint profit at least the no-sharing joint profit.
    JointlyIr,
}

impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Constraint::None),
            "no-harm" => Ok(Constraint::NoHarm),
            "joint-ir" | "jointly-ir" => Ok(Constraint::JointlyIr),
            _ => Err(Error::BadParam(format!(
                "unknown constraint `{s}` (none, no-harm, joint-ir)"
            ))),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::None => "none",
            Constraint::NoHarm => "no-harm",
            Constraint::JointlyIr => "joint-ir",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    JointProfit,
    ConsumerWelfare,
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "profit" | "joint-profit" => Ok(Objective::JointProfit),
            "cw" | "consumer-welfare" => Ok(Objective::ConsumerWelfare),
            _ => Err(Error::BadParam(format!("unknown objective `{s}` (profit, cw)"))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::JointProfit => "profit",
            Objective::ConsumerWelfare => "cw",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOptions {
    pub constraint: Constraint,
    pub objective: Objective,
    /// Grid spacing; its reciprocal must be a whole number.
    pub resolution: Rational,
    pub execution: Execution,
}

impl SearchOptions {
    pub fn new(constraint: Constraint, objective: Objective, resolution: Rational) -> Self {
        SearchOptions {
            constraint,
            objective,
            resolution,
            execution: Execution::default(),
        }
    }
}

/// One mechanism's equilibrium metrics and classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluated {
    pub mechanism: SharingMechanism,
    pub p_a: Rational,
    pub p_b: Rational,
    pub pi_a: Rational,
    pub pi_b: Rational,
    pub cw: Rational,
    pub ir_a: bool,
    pub ir_b: bool,
    pub jointly_ir: bool,
    pub no_harm: bool,
}

impl Evaluated {
    pub fn joint(&self) -> Rational {
        self.pi_a + self.pi_b
    }

    pub fn objective(&self, objective: Objective) -> Rational {
        match objective {
            Objective::JointProfit => self.joint(),
            Objective::ConsumerWelfare => self.cw,
        }
    }

    pub fn satisfies(&self, constraint: Constraint) -> bool {
        match constraint {
            Constraint::None => true,
            Constraint::NoHarm => self.no_harm,
            Constraint::JointlyIr => self.jointly_ir,
        }
    }
}

/// A non-dominated (joint profit, consumer welfare) pair and the first
/// mechanism, in grid order, that attains it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontierPoint {
    pub joint: Rational,
    pub cw: Rational,
    pub mechanism: SharingMechanism,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchReport {
    pub baseline: Evaluated,
    /// Objective maximizer among feasible mechanisms; ties go to the
    /// lexicographically smallest (B's interval, A's interval).
    pub best: Option<Evaluated>,
    /// Pareto frontier of (joint profit, CW) over feasible mechanisms, by
    /// decreasing joint profit.
    pub frontier: Vec<FrontierPoint>,
    pub evaluated: usize,
    pub feasible: usize,
    /// Mechanisms for which no pure equilibrium was found.
    pub unsolved: Vec<SharingMechanism>,
}

/// Empty set plus every `[i/n, j/n)` with `i < j`, in lexicographic order.
fn grid_sets(n: i128, active: bool) -> Result<Vec<IntervalSet>> {
    let mut out = vec![IntervalSet::empty()];
    if active {
        for i in 0..n {
            for j in (i + 1)..=n {
                out.push(IntervalSet::interval(Rational::new(i, n), Rational::new(j, n))?);
            }
        }
    }
    Ok(out)
}

type SegmentOutcome = (SegmentMetrics, bool);

/// Everything about one side's revealed interval that does not depend on the
/// other side.
struct Side {
    sets: Vec<IntervalSet>,
    spans: Vec<Vec<(Rational, Rational, KnownBy)>>,
    demand: Vec<UniformDemand>,
    /// The firm's no-sharing price is still a best response.
    stays: Vec<bool>,
    /// Index into `formulas` of the best response to the rival's no-sharing
    /// price.
    class: Vec<usize>,
    formulas: Vec<Affine>,
    /// Segment outcome at the no-sharing prices: metrics and whether some
    /// consumer there is harmed.
    at_base: Vec<SegmentOutcome>,
    /// Per rival formula class: the segment outcome at the point where both
    /// baseline best-response formulas intersect, if this side's firm is
    /// best-responding there.
    jump: Vec<Vec<Option<SegmentOutcome>>>,
}

struct Context<'a> {
    config: &'a MarketConfig,
    base_prices: (Rational, Rational),
    base_welfare: PerSegment<PiecewiseLinearFn>,
    base_metrics: PerSegment<SegmentMetrics>,
}

impl Context<'_> {
    fn segment(
        &self,
        kind: SegmentKind,
        spans: &[(Rational, Rational, KnownBy)],
        p_a: &Rational,
        p_b: &Rational,
    ) -> SegmentOutcome {
        if self.config.mass(kind).is_zero() {
            return (SegmentMetrics::default(), false);
        }
        let (runs, _) = segment_stage(spans, p_a, p_b, &self.config.t);
        let metrics = segment_metrics(kind, &runs, self.config);
        let harmed = first_harm(&welfare_function(&runs, self.config), &self.base_welfare[kind]).is_some();
        (metrics, harmed)
    }

    fn side(&self, firm: Firm, sets: Vec<IntervalSet>, execution: Execution) -> Side {
        let kind = turf(firm);
        let share = |s: &IntervalSet| match firm {
            Firm::A => SharingMechanism::new(s.clone(), IntervalSet::empty()),
            Firm::B => SharingMechanism::new(IntervalSet::empty(), s.clone()),
        };
        let (pa0, pb0) = &self.base_prices;
        let (own0, rival0) = match firm {
            Firm::A => (pa0, pb0),
            Firm::B => (pb0, pa0),
        };
        let built = execution.map(&sets, |set| {
            let spans = knowledge_partition(&share(set))[kind].spans();
            let demand = UniformDemand::for_side(firm, set, self.config);
            let br = demand.best_response(rival0);
            let stays = holds(&demand, &br, own0, rival0);
            let at_base = self.segment(kind, &spans, pa0, pb0);
            (spans, demand, br.formula, stays, at_base)
        });
        let mut side = Side {
            sets,
            spans: Vec::new(),
            demand: Vec::new(),
            stays: Vec::new(),
            class: Vec::new(),
            formulas: Vec::new(),
            at_base: Vec::new(),
            jump: Vec::new(),
        };
        let mut index: BTreeMap<Affine, usize> = BTreeMap::new();
        for (spans, demand, formula, stays, at_base) in built {
            let next = index.len();
            let class = *index.entry(formula).or_insert(next);
            if class == next {
                side.formulas.push(formula);
            }
            side.spans.push(spans);
            side.demand.push(demand);
            side.stays.push(stays);
            side.class.push(class);
            side.at_base.push(at_base);
        }
        side
    }

    /// Fills `side.jump` given the intersection points of every formula pair
    /// (indexed by this side's class, then the rival's).
    fn jumps(&self, firm: Firm, side: &mut Side, points: &[Vec<Option<(Rational, Rational)>>], execution: Execution) {
        let kind = turf(firm);
        let rival_classes = points.first().map_or(0, Vec::len);
        side.jump = execution.map_range(side.sets.len(), |i| {
            (0..rival_classes)
                .map(|c| {
                    let (p_a, p_b) = points[side.class[i]][c]?;
                    let (own, rival) = match firm {
                        Firm::A => (&p_a, &p_b),
                        Firm::B => (&p_b, &p_a),
                    };
                    let demand = &side.demand[i];
                    if !holds(demand, &demand.best_response(rival), own, rival) {
                        return None;
                    }
                    let moved = match firm {
                        Firm::A => p_a != self.base_prices.0,
                        Firm::B => p_b != self.base_prices.1,
                    };
                    Some(if moved {
                        self.segment(kind, &side.spans[i], &p_a, &p_b)
                    } else {
                        side.at_base[i].clone()
                    })
                })
                .collect()
        });
    }
}

/// The segment whose data `firm` can receive.
fn turf(firm: Firm) -> SegmentKind {
    match firm {
        Firm::A => SegmentKind::BOnly,
        Firm::B => SegmentKind::AOnly,
    }
}

type BestResponseCache = Mutex<HashMap<Rational, BestResponse>>;

struct Memo<'a> {
    demand: &'a UniformDemand,
    cache: &'a BestResponseCache,
}

impl<'a> Memo<'a> {
    fn new(demand: &'a UniformDemand, cache: &'a BestResponseCache) -> Self {
        Memo { demand, cache }
    }
}

impl Responder for Memo<'_> {
    fn revenue(&self, p: &Rational, p_rival: &Rational) -> Rational {
        self.demand.revenue(p, p_rival)
    }

    fn best_response(&self, p_rival: &Rational) -> BestResponse {
        let lock = || self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(br) = lock().get(p_rival) {
            return br.clone();
        }
        let br = self.demand.best_response(p_rival);
        lock().insert(*p_rival, br.clone());
        br
    }

    fn candidate_formulas(&self) -> Vec<Affine> {
        self.demand.candidate_formulas()
    }
}

/// Compact per-pair result; the mechanism is rebuilt from the indices.
#[derive(Debug, Clone)]
struct Cell {
    j: usize,
    p_a: Rational,
    p_b: Rational,
    pi: ByFirm<Rational>,
    cw: Rational,
    no_harm: bool,
}

#[derive(Default)]
struct Row {
    best: Option<Cell>,
    /// Distinct feasible (joint, CW) pairs with the first column reaching each.
    points: BTreeMap<(Rational, Rational), usize>,
    evaluated: usize,
    feasible: usize,
    unsolved: Vec<usize>,
}

fn non_dominated<K: Copy>(
    points: impl IntoIterator<Item = ((Rational, Rational), K)>,
) -> Vec<((Rational, Rational), K)> {
    let mut all: Vec<_> = points.into_iter().collect();
    all.sort_by(|x, y| y.0 .0.cmp(&x.0 .0).then(y.0 .1.cmp(&x.0 .1)));
    let mut out: Vec<((Rational, Rational), K)> = Vec::new();
    for p in all {
        if out.last().is_none_or(|last| p.0 .1 > last.0 .1) {
            out.push(p);
        }
    }
    out
}

/// Solves every mechanism that reveals at most one grid interval per side
/// and reports the best one under `options`.
pub fn search_interval_mechanisms(config: &MarketConfig, options: &SearchOptions) -> Result<SearchReport> {
    config.validate()?;
    let r = options.resolution;
    if !r.is_positive() || r > Rational::from_integer(1) || !r.recip().is_integer() {
        return Err(Error::BadParam(format!(
            "resolution {r} must be 1/n for a positive integer n"
        )));
    }
    let n = r.recip().to_integer();

    let baseline = solve_equilibrium(&SharingMechanism::no_sharing(), config)?;
    let ctx = Context {
        config,
        base_prices: (baseline.prices.p_a, baseline.prices.p_b),
        base_welfare: baseline.welfare.clone(),
        base_metrics: baseline.runs.map(|kind, runs| segment_metrics(kind, runs, config)),
    };
    let exec = options.execution;
    let mut b_side = ctx.side(
        Firm::A,
        grid_sets(n, config.mass(SegmentKind::BOnly).is_positive())?,
        exec,
    );
    let mut a_side = ctx.side(
        Firm::B,
        grid_sets(n, config.mass(SegmentKind::AOnly).is_positive())?,
        exec,
    );
    let (pa0, pb0) = ctx.base_prices;
    let base_joint = baseline.joint_profit();
    let both = &ctx.base_metrics[SegmentKind::Both];

    // First warm-start step from the baseline: intersect A's and B's
    // best-response formulas there. Indexed [A's class][B's class].
    let points: Vec<Vec<Option<(Rational, Rational)>>> = b_side
        .formulas
        .iter()
        .map(|fa| {
            a_side
                .formulas
                .iter()
                .map(|fb| Duopoly::intersect(fa, fb).filter(|(x, y)| !x.is_negative() && !y.is_negative()))
                .collect()
        })
        .collect();
    let transposed: Vec<Vec<Option<(Rational, Rational)>>> = (0..a_side.formulas.len())
        .map(|cb| points.iter().map(|row| row[cb]).collect())
        .collect();
    ctx.jumps(Firm::A, &mut b_side, &points, exec);
    ctx.jumps(Firm::B, &mut a_side, &transposed, exec);
    let neither_spans = [(Rational::zero(), Rational::from_integer(1), KnownBy::Neither)];
    let neither: Vec<Vec<Option<SegmentOutcome>>> = points
        .iter()
        .map(|row| {
            row.iter()
                .map(|pt| pt.map(|(p_a, p_b)| ctx.segment(SegmentKind::Neither, &neither_spans, &p_a, &p_b)))
                .collect()
        })
        .collect();
    let base_neither = (ctx.base_metrics[SegmentKind::Neither].clone(), false);

    let assemble = |j: usize, p_a: Rational, p_b: Rational, parts: [&SegmentOutcome; 3]| {
        let metrics = [&parts[0].0, &parts[1].0, &parts[2].0, both];
        Cell {
            j,
            p_a,
            p_b,
            pi: ByFirm::new(
                metrics.iter().map(|m| m.revenue.a).sum(),
                metrics.iter().map(|m| m.revenue.b).sum(),
            ),
            cw: metrics.iter().map(|m| m.welfare).sum(),
            no_harm: !parts.iter().any(|p| p.1),
        }
    };

    // Rows and columns of the grid share one demand each; the fallback solver
    // keeps asking them about the same rival prices.
    let memo_rows: Vec<BestResponseCache> = b_side.sets.iter().map(|_| Default::default()).collect();
    let memo_cols: Vec<BestResponseCache> = a_side.sets.iter().map(|_| Default::default()).collect();

    let evaluate = |i: usize, j: usize| -> Option<Cell> {
        if b_side.stays[i] && a_side.stays[j] {
            return Some(assemble(
                j,
                pa0,
                pb0,
                [&b_side.at_base[i], &a_side.at_base[j], &base_neither],
            ));
        }
        let (ca, cb) = (b_side.class[i], a_side.class[j]);
        if let (Some((p_a, p_b)), Some(seg_b), Some(seg_a)) = (points[ca][cb], &b_side.jump[i][cb], &a_side.jump[j][ca])
        {
            let seg_none = neither[ca][cb].as_ref().expect("point exists");
            return Some(assemble(j, p_a, p_b, [seg_b, seg_a, seg_none]));
        }
        let memo_a = Memo::new(&b_side.demand[i], &memo_rows[i]);
        let memo_b = Memo::new(&a_side.demand[j], &memo_cols[j]);
        let duo = Duopoly { a: &memo_a, b: &memo_b };
        // Continue the warm start where the cached first step left off.
        let step2 = (b_side.formulas[ca].eval(&pb0), a_side.formulas[cb].eval(&pa0));
        let c = duo
            .warm_start(step2, 7)
            .map(|(c, _)| c)
            .or_else(|| duo.exhaustive().into_iter().next())?;
        let seg_b = ctx.segment(SegmentKind::BOnly, &b_side.spans[i], &c.p_a, &c.p_b);
        let seg_a = ctx.segment(SegmentKind::AOnly, &a_side.spans[j], &c.p_a, &c.p_b);
        let seg_none = ctx.segment(SegmentKind::Neither, &neither_spans, &c.p_a, &c.p_b);
        Some(assemble(j, c.p_a, c.p_b, [&seg_b, &seg_a, &seg_none]))
    };

    let feasible = |c: &Cell| match options.constraint {
        Constraint::None => true,
        Constraint::NoHarm => c.no_harm,
        Constraint::JointlyIr => c.pi.a + c.pi.b >= base_joint,
    };
    let score = |c: &Cell| match options.objective {
        Objective::JointProfit => c.pi.a + c.pi.b,
        Objective::ConsumerWelfare => c.cw,
    };

    let rows: Vec<Row> = exec.map_range(b_side.sets.len(), |i| {
        let mut row = Row::default();
        for j in 0..a_side.sets.len() {
            row.evaluated += 1;
            let Some(cell) = evaluate(i, j) else {
                row.unsolved.push(j);
                continue;
            };
            if !feasible(&cell) {
                continue;
            }
            row.feasible += 1;
            row.points.entry((cell.pi.a + cell.pi.b, cell.cw)).or_insert(j);
            if row.best.as_ref().is_none_or(|b| score(&cell) > score(b)) {
                row.best = Some(cell);
            }
        }
        let kept = non_dominated(row.points.iter().map(|(k, v)| (*k, *v)));
        row.points = kept.into_iter().collect();
        row
    });

    let mechanism = |i: usize, j: usize| SharingMechanism::new(b_side.sets[i].clone(), a_side.sets[j].clone());
    let to_evaluated = |i: usize, c: &Cell| Evaluated {
        mechanism: mechanism(i, c.j),
        p_a: c.p_a,
        p_b: c.p_b,
        pi_a: c.pi.a,
        pi_b: c.pi.b,
        cw: c.cw,
        ir_a: c.pi.a >= baseline.pi_a,
        ir_b: c.pi.b >= baseline.pi_b,
        jointly_ir: c.pi.a + c.pi.b >= base_joint,
        no_harm: c.no_harm,
    };

    let mut best: Option<(usize, Cell)> = None;
    let mut points: Vec<((Rational, Rational), (usize, usize))> = Vec::new();
    let (mut evaluated, mut n_feasible) = (0, 0);
    let mut unsolved = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        evaluated += row.evaluated;
        n_feasible += row.feasible;
        unsolved.extend(row.unsolved.iter().map(|&j| mechanism(i, j)));
        points.extend(row.points.into_iter().map(|(k, j)| (k, (i, j))));
        if let Some(cell) = row.best {
            if best.as_ref().is_none_or(|(_, b)| score(&cell) > score(b)) {
                best = Some((i, cell));
            }
        }
    }
    // Keep the first mechanism in grid order for each duplicate point.
    points.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
    points.dedup_by(|later, earlier| later.0 == earlier.0);
    let frontier = non_dominated(points)
        .into_iter()
        .map(|((joint, cw), (i, j))| FrontierPoint {
            joint,
            cw,
            mechanism: mechanism(i, j),
        })
        .collect();

    let base_cell = Cell {
        j: 0,
        p_a: pa0,
        p_b: pb0,
        pi: ByFirm::new(baseline.pi_a, baseline.pi_b),
        cw: baseline.cw,
        no_harm: true,
    };
    Ok(SearchReport {
        baseline: to_evaluated(0, &base_cell),
        best: best.map(|(i, c)| to_evaluated(i, &c)),
        frontier,
        evaluated,
        feasible: n_feasible,
        unsolved,
    })
}
