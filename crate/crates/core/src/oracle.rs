//! Floating-point brute force, kept apart from the exact engine.
//!
//! Consumers sit on a midpoint grid. Who sells to whom, and at what price, is
//! decided by comparing the consumer's utility from the two offers, never by
//! the closed-form cut points the engine uses. Uniform prices live on a
//! discrete grid over `[0, v]` and are found by best-response dynamics.

use crate::equilibrium::EquilibriumOutcome;
use crate::error::{Error, Result};
use crate::market::{Firm, IntervalSet, MarketConfig, SegmentKind, SharingMechanism};
use crate::par::Execution;
use crate::rational::to_f64;
use std::collections::HashMap;
use std::fmt;

/// Consumers per reduction chunk; fixed so sums do not depend on threading.
const CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Absolute spacing of the uniform-price grid.
    pub price_step: f64,
    /// Grid consumers per segment.
    pub consumers: usize,
    /// Starting prices for the dynamics; `(t, t)` when absent.
    pub start: Option<(f64, f64)>,
    pub max_iterations: usize,
    pub execution: Execution,
}

impl OracleOptions {
    /// Price step `10⁻³·t` and `10⁵` consumers per segment.
    pub fn new(config: &MarketConfig) -> Self {
        OracleOptions {
            price_step: 1e-3 * to_f64(&config.t),
            consumers: 100_000,
            start: None,
            max_iterations: 1_000,
            execution: Execution::default(),
        }
    }

    pub fn with_grid(config: &MarketConfig, price_step: f64, consumers: usize) -> Self {
        OracleOptions {
            price_step,
            consumers,
            ..Self::new(config)
        }
    }
}

/// Best-response dynamics revisited an earlier state without settling.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCycle {
    /// Price pairs of one full period, in visiting order.
    pub states: Vec<(f64, f64)>,
}

impl fmt::Display for OracleCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "best-response cycle of length {}:", self.states.len())?;
        for (a, b) in &self.states {
            write!(f, " ({a:.6}, {b:.6})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub p_a: f64,
    pub p_b: f64,
    pub pi_a: f64,
    pub pi_b: f64,
    pub cw: f64,
    pub iterations: usize,
    /// Set when the dynamics cycled; prices are then the last state visited.
    pub cycle: Option<OracleCycle>,
}

impl GridOutcome {
    pub fn joint(&self) -> f64 {
        self.pi_a + self.pi_b
    }

    pub fn settled(&self) -> bool {
        self.cycle.is_none()
    }
}

#[derive(Debug, Clone, Copy)]
struct Consumer {
    /// Transport cost to A and to B.
    d_a: f64,
    d_b: f64,
    weight: f64,
    a_knows: bool,
    b_knows: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Offer {
    price: f64,
    personalized: bool,
}

/// Utilities closer than this count as equal; matching offers are built to
/// tie exactly and rounding must not break the tie.
const TIE: f64 = 1e-12;

/// Buyer's choice between the two offers: `None` means no purchase.
/// A utility tie goes to a personalized offer (it can shade by any amount),
/// between two personalized offers to the higher price, and otherwise to B.
fn choose(v: f64, c: &Consumer, a: Offer, b: Offer) -> Option<(Firm, f64)> {
    let u_a = v - a.price - c.d_a;
    let u_b = v - b.price - c.d_b;
    let firm = if u_a > u_b + TIE {
        Firm::A
    } else if u_b > u_a + TIE {
        Firm::B
    } else {
        match (a.personalized, b.personalized) {
            (true, false) => Firm::A,
            (false, true) => Firm::B,
            (true, true) if a.price > b.price => Firm::A,
            _ => Firm::B,
        }
    };
    let (price, utility) = match firm {
        Firm::A => (a.price, u_a),
        Firm::B => (b.price, u_b),
    };
    (utility >= -TIE).then_some((firm, price))
}

/// Highest price at which a firm that knows the consumer still gets chosen
/// over `rival_utility`, floored at zero and capped by participation.
fn matching_offer(v: f64, own_distance: f64, rival_utility: f64) -> Offer {
    let price = (v - own_distance - rival_utility.max(0.0)).clamp(0.0, (v - own_distance).max(0.0));
    Offer {
        price,
        personalized: true,
    }
}

struct Grid {
    v: f64,
    consumers: Vec<Consumer>,
}

impl Grid {
    fn new(mechanism: &SharingMechanism, config: &MarketConfig, n: usize) -> Self {
        let v = to_f64(&config.v);
        let t = to_f64(&config.t);
        let to_spans = |set: &IntervalSet| -> Vec<(f64, f64)> {
            set.spans().iter().map(|(a, b)| (to_f64(a), to_f64(b))).collect()
        };
        let inside = |spans: &[(f64, f64)], x: f64| spans.iter().any(|&(a, b)| a <= x && x < b);
        let shared_to_a = to_spans(&mechanism.share_b_to_a);
        let shared_to_b = to_spans(&mechanism.share_a_to_b);
        let mut consumers = Vec::new();
        for kind in SegmentKind::ALL {
            let mass = to_f64(&config.mass(kind));
            if mass <= 0.0 {
                continue;
            }
            let density: Vec<(f64, f64, f64)> = config
                .density(kind)
                .pieces()
                .iter()
                .map(|p| (to_f64(&p.lo), to_f64(&p.hi), to_f64(&p.level)))
                .collect();
            for i in 0..n {
                let theta = (i as f64 + 0.5) / n as f64;
                let level = density
                    .iter()
                    .find(|&&(lo, hi, _)| lo <= theta && theta < hi)
                    .map_or(0.0, |p| p.2);
                let (a_knows, b_knows) = match kind {
                    SegmentKind::Both => (true, true),
                    SegmentKind::Neither => (false, false),
                    SegmentKind::AOnly => (true, inside(&shared_to_b, theta)),
                    SegmentKind::BOnly => (inside(&shared_to_a, theta), true),
                };
                consumers.push(Consumer {
                    d_a: t * theta,
                    d_b: t * (1.0 - theta),
                    weight: mass * level / n as f64,
                    a_knows,
                    b_knows,
                });
            }
        }
        Grid { v, consumers }
    }

    /// Offers made to `c` when the uniform prices are `p_a`, `p_b`.
    fn offers(&self, c: &Consumer, p_a: f64, p_b: f64) -> (Offer, Offer) {
        let v = self.v;
        let uniform = |price| Offer {
            price,
            personalized: false,
        };
        match (c.a_knows, c.b_knows) {
            (false, false) => (uniform(p_a), uniform(p_b)),
            // Each firm's floor is a zero price; the other prices against it.
            (true, true) => (matching_offer(v, c.d_a, v - c.d_b), matching_offer(v, c.d_b, v - c.d_a)),
            (true, false) => (matching_offer(v, c.d_a, v - p_b - c.d_b), uniform(p_b)),
            (false, true) => (uniform(p_a), matching_offer(v, c.d_b, v - p_a - c.d_a)),
        }
    }

    fn evaluate(&self, p_a: f64, p_b: f64, execution: Execution) -> (f64, f64, f64) {
        let chunks = self.consumers.len().div_ceil(CHUNK);
        let partial = execution.map_range(chunks, |k| {
            let (mut pi_a, mut pi_b, mut cw) = (0.0, 0.0, 0.0);
            for c in &self.consumers[k * CHUNK..((k + 1) * CHUNK).min(self.consumers.len())] {
                let (a, b) = self.offers(c, p_a, p_b);
                if let Some((firm, price)) = choose(self.v, c, a, b) {
                    let distance = match firm {
                        Firm::A => {
                            pi_a += c.weight * price;
                            c.d_a
                        }
                        Firm::B => {
                            pi_b += c.weight * price;
                            c.d_b
                        }
                    };
                    cw += c.weight * (self.v - price - distance);
                }
            }
            (pi_a, pi_b, cw)
        });
        partial
            .into_iter()
            .fold((0.0, 0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1, s.2 + p.2))
    }

    /// Index on `0..=top` of the most profitable uniform price for `firm`,
    /// lowest on ties. Each consumer the firm cannot identify buys at grid
    /// prices up to a reservation index, found by asking `choose` directly at
    /// the two grid points around the analytic boundary.
    fn best_response(&self, firm: Firm, rival_price: f64, step: f64, top: usize) -> usize {
        let mut bins = vec![0.0; top + 2];
        for c in &self.consumers {
            let knows = match firm {
                Firm::A => c.a_knows,
                Firm::B => c.b_knows,
            };
            if knows {
                continue;
            }
            let buys = |k: usize| {
                let p = k as f64 * step;
                let (a, b) = match firm {
                    Firm::A => self.offers(c, p, rival_price),
                    Firm::B => self.offers(c, rival_price, p),
                };
                choose(self.v, c, a, b).is_some_and(|(f, _)| f == firm)
            };
            if !buys(0) {
                continue;
            }
            // Buying is monotone in the own price; bisect for the last yes.
            let (mut lo, mut hi) = (0usize, top + 1);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if buys(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            bins[lo] += c.weight;
        }
        let mut mass = 0.0;
        let mut best = (0usize, f64::NEG_INFINITY);
        let mut profits = vec![0.0; top + 1];
        for k in (0..=top).rev() {
            mass += bins[k];
            profits[k] = k as f64 * step * mass;
        }
        for (k, &profit) in profits.iter().enumerate() {
            if profit > best.1 {
                best = (k, profit);
            }
        }
        best.0
    }
}

fn check_grid(config: &MarketConfig, price_step: f64, consumers: usize) -> Result<()> {
    config.validate()?;
    if !(price_step.is_finite() && price_step > 0.0) {
        return Err(Error::BadParam(format!(
            "price step must be positive, got {price_step}"
        )));
    }
    if consumers < 1_000 {
        return Err(Error::BadParam(format!(
            "need at least 1000 grid consumers, got {consumers}"
        )));
    }
    Ok(())
}

/// Profits and welfare on the consumer grid at fixed uniform prices.
pub fn evaluate_at_prices(
    mechanism: &SharingMechanism,
    config: &MarketConfig,
    p_a: f64,
    p_b: f64,
    consumers: usize,
) -> Result<GridOutcome> {
    check_grid(config, 1.0, consumers)?;
    let grid = Grid::new(mechanism, config, consumers);
    let (pi_a, pi_b, cw) = grid.evaluate(p_a, p_b, Execution::default());
    Ok(GridOutcome {
        p_a,
        p_b,
        pi_a,
        pi_b,
        cw,
        iterations: 0,
        cycle: None,
    })
}

/// Gauss–Seidel best-response dynamics on the price grid. A cycle is
/// reported in the outcome rather than returned as an error.
pub fn grid_equilibrium(
    mechanism: &SharingMechanism,
    config: &MarketConfig,
    options: &OracleOptions,
) -> Result<GridOutcome> {
    check_grid(config, options.price_step, options.consumers)?;
    let step = options.price_step;
    let v = to_f64(&config.v);
    let t = to_f64(&config.t);
    let top = (v / step + 1e-9).floor() as usize;
    let snap = |p: f64| ((p / step).round().max(0.0) as usize).min(top);
    let (s_a, s_b) = options.start.unwrap_or((t, t));
    let grid = Grid::new(mechanism, config, options.consumers);

    let mut state = (snap(s_a), snap(s_b));
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut trail = Vec::new();
    let mut cycle = None;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        seen.insert(state, trail.len());
        trail.push(state);
        iterations += 1;
        let k_a = grid.best_response(Firm::A, state.1 as f64 * step, step, top);
        let k_b = grid.best_response(Firm::B, k_a as f64 * step, step, top);
        let next = (k_a, k_b);
        if next == state {
            break;
        }
        if let Some(&first) = seen.get(&next) {
            let states = trail[first..]
                .iter()
                .map(|&(a, b)| (a as f64 * step, b as f64 * step))
                .collect();
            cycle = Some(OracleCycle { states });
            state = next;
            break;
        }
        state = next;
    }
    let (p_a, p_b) = (state.0 as f64 * step, state.1 as f64 * step);
    let (pi_a, pi_b, cw) = grid.evaluate(p_a, p_b, options.execution);
    Ok(GridOutcome {
        p_a,
        p_b,
        pi_a,
        pi_b,
        cw,
        iterations,
        cycle,
    })
}

/// Midpoint sums of the profits and welfare of an exact outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannSums {
    pub pi_a: f64,
    pub pi_b: f64,
    pub cw: f64,
}

impl RiemannSums {
    pub fn joint(&self) -> f64 {
        self.pi_a + self.pi_b
    }
}

/// Integrates the outcome's price schedules over its allocation with an
/// `n`-point midpoint rule on every segment.
pub fn riemann_sums(outcome: &EquilibriumOutcome, n: usize, execution: Execution) -> Result<RiemannSums> {
    if n < 1_000 {
        return Err(Error::BadParam(format!("need at least 1000 points, got {n}")));
    }
    let config = &outcome.config;
    let v = to_f64(&config.v);
    let t = to_f64(&config.t);
    let uniform = [to_f64(&outcome.prices.p_a), to_f64(&outcome.prices.p_b)];
    let mut total = RiemannSums {
        pi_a: 0.0,
        pi_b: 0.0,
        cw: 0.0,
    };
    for kind in SegmentKind::ALL {
        let mass = to_f64(&config.mass(kind));
        if mass <= 0.0 {
            continue;
        }
        let runs: Vec<(f64, f64, Firm)> = outcome.allocation.runs[kind]
            .iter()
            .map(|(a, b, f)| (to_f64(a), to_f64(b), *f))
            .collect();
        let schedule = |firm: Firm| -> Vec<(f64, f64, f64, f64)> {
            outcome.prices.schedules[kind][firm]
                .pieces()
                .iter()
                .map(|p| {
                    (
                        to_f64(&p.start),
                        to_f64(&p.end),
                        to_f64(&p.f.intercept),
                        to_f64(&p.f.slope),
                    )
                })
                .collect()
        };
        let prices = [schedule(Firm::A), schedule(Firm::B)];
        let density: Vec<(f64, f64, f64)> = config
            .density(kind)
            .pieces()
            .iter()
            .map(|p| (to_f64(&p.lo), to_f64(&p.hi), to_f64(&p.level)))
            .collect();
        let find = |x: f64, lo: f64, hi: f64| lo <= x && x < hi;
        let chunks = n.div_ceil(CHUNK);
        let partial = execution.map_range(chunks, |k| {
            let mut sums = (0.0, 0.0, 0.0);
            for i in k * CHUNK..((k + 1) * CHUNK).min(n) {
                let theta = (i as f64 + 0.5) / n as f64;
                let Some(&(_, _, firm)) = runs.iter().find(|r| find(theta, r.0, r.1)) else {
                    continue;
                };
                // Off its personalized schedule a firm charges its uniform price.
                let price = prices[firm as usize]
                    .iter()
                    .find(|p| find(theta, p.0, p.1))
                    .map_or(uniform[firm as usize], |&(_, _, c0, c1)| c0 + c1 * theta);
                let level = density.iter().find(|d| find(theta, d.0, d.1)).map_or(0.0, |d| d.2);
                let w = mass * level / n as f64;
                let distance = match firm {
                    Firm::A => {
                        sums.0 += w * price;
                        t * theta
                    }
                    Firm::B => {
                        sums.1 += w * price;
                        t * (1.0 - theta)
                    }
                };
                sums.2 += w * (v - price - distance);
            }
            sums
        });
        for (a, b, c) in partial {
            total.pi_a += a;
            total.pi_b += b;
            total.cw += c;
        }
    }
    Ok(total)
}

/// Largest absolute gap between the midpoint sums and the exact profits and
/// welfare of `outcome`.
pub fn riemann_check(outcome: &EquilibriumOutcome, n: usize) -> Result<f64> {
    let sums = riemann_sums(outcome, n, Execution::default())?;
    Ok([
        (sums.pi_a - to_f64(&outcome.pi_a)).abs(),
        (sums.pi_b - to_f64(&outcome.pi_b)).abs(),
        (sums.cw - to_f64(&outcome.cw)).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{closed_form_reference, solve_equilibrium, Scenario};
    use crate::rational::int;

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    #[test]
    fn four_segment_baseline_on_the_grid() {
        let config = MarketConfig::four_segment(int(3), int(1)).unwrap();
        let opts = OracleOptions::new(&config);
        let g = grid_equilibrium(&SharingMechanism::no_sharing(), &config, &opts).unwrap();
        assert!(g.settled(), "{:?}", g.cycle);
        assert!(close(g.p_a, 2.0 / 3.0, 1e-3) && close(g.p_b, 2.0 / 3.0, 1e-3), "{g:?}");
        assert!(close(g.pi_a, 25.0 / 72.0, 1e-2) && close(g.pi_b, 25.0 / 72.0, 1e-2));
    }

    #[test]
    fn full_sharing_is_personalized_only() {
        let config = MarketConfig::one_segment(int(3), int(1)).unwrap();
        let opts = OracleOptions::with_grid(&config, 1e-2, 10_000);
        let g = grid_equilibrium(&SharingMechanism::full_sharing(), &config, &opts).unwrap();
        assert!(close(g.pi_a, 0.25, 1e-2) && close(g.pi_b, 0.25, 1e-2), "{g:?}");
    }

    #[test]
    fn one_segment_world_prices_at_half_t() {
        let config = MarketConfig::one_segment(int(3), int(1)).unwrap();
        let g = grid_equilibrium(&SharingMechanism::no_sharing(), &config, &OracleOptions::new(&config)).unwrap();
        assert!(close(g.p_a, 0.5, 1e-3), "{g:?}");
    }

    #[test]
    fn start_point_does_not_matter() {
        let config = MarketConfig::four_segment(int(3), int(1)).unwrap();
        let mech = Scenario::FourSegConsumerOpt.mechanism().unwrap();
        let base = OracleOptions::with_grid(&config, 1e-3, 20_000);
        let from_t = grid_equilibrium(&mech, &config, &base).unwrap();
        for start in [(0.0, 0.0), (3.0, 3.0)] {
            let g = grid_equilibrium(
                &mech,
                &config,
                &OracleOptions {
                    start: Some(start),
                    ..base
                },
            )
            .unwrap();
            assert!(
                close(g.p_a, from_t.p_a, 2e-3) && close(g.p_b, from_t.p_b, 2e-3),
                "{start:?}: {g:?}"
            );
        }
    }

    #[test]
    fn riemann_sums_track_exact_integrals() {
        for scenario in Scenario::table() {
            let reference = closed_form_reference(scenario, int(3), int(1)).unwrap();
            let outcome = solve_equilibrium(&reference.mechanism, &reference.config).unwrap();
            assert!(riemann_check(&outcome, 1_000).unwrap() <= 1e-2, "{}", scenario.name());
        }
    }

    #[test]
    fn zero_prices_give_zero_profit_gap() {
        let zero = num_traits::Zero::zero;
        let config = MarketConfig::uniform(int(3), int(1), [zero(), zero(), int(1), zero()]).unwrap();
        let outcome = EquilibriumOutcome::at_prices(
            &SharingMechanism::no_sharing(),
            &config,
            zero(),
            zero(),
            Default::default(),
        );
        let sums = riemann_sums(&outcome, 1_000, Execution::Sequential).unwrap();
        assert_eq!((sums.pi_a, sums.pi_b), (0.0, 0.0));
    }

    #[test]
    fn rejects_coarse_grids() {
        let config = MarketConfig::one_segment(int(3), int(1)).unwrap();
        let mech = SharingMechanism::no_sharing();
        assert!(matches!(
            grid_equilibrium(&mech, &config, &OracleOptions::with_grid(&config, 1e-3, 999)),
            Err(Error::BadParam(_))
        ));
        assert!(matches!(
            grid_equilibrium(&mech, &config, &OracleOptions::with_grid(&config, 0.0, 1_000)),
            Err(Error::BadParam(_))
        ));
    }
}
