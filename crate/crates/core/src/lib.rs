//! Subgame-perfect equilibria of a two-stage Hotelling pricing game in which
//! firms may share consumer-location data before competing.
//!
//! Firm `A` sits at 0 and firm `B` at 1. Consumers fall into four segments
//! according to which firm natively knows their location. A
//! [`SharingMechanism`] lets `B` reveal part of its segment to `A` and vice
//! versa. Firms then announce uniform prices, and every firm that knows a
//! consumer's location follows up with a personalized offer.
//!
//! All closed-form paths use exact rational arithmetic ([`Rational`]); the
//! [`oracle`] module is the only place floating point appears, and it never
//! calls back into the exact engine.

pub mod equilibrium;
pub mod error;
pub mod market;
pub mod mechanisms;
pub mod oracle;
pub mod par;
pub mod pricing;
pub mod pwl;
pub mod rational;
pub mod welfare;

pub use equilibrium::{
    closed_form_reference, solve_equilibrium, solve_equilibrium_with, ClosedForm, EquilibriumOutcome, PriceSystem,
    Scenario, SolveDiagnostics, SolveOptions, SolveStrategy,
};
pub use error::{Error, Result};
pub use market::{
    consumer_utility, knowledge_partition, validate_market, ByFirm, DensitySpec, Firm, IntervalSet, KnownBy,
    MarketConfig, PerSegment, SegmentKind, SegmentSpec, SharingMechanism,
};
pub use mechanisms::{
    appendix_firm_optimal, canonical_mechanism, epsilon_window, mass_ratio_ir_check, no_sharing_prices_general,
    product_mechanism, search_interval_mechanisms, CanonicalMechanism,
};
pub use par::Execution;
pub use pricing::{
    best_response_uniform, duel_prices, match_price, personalized_stage, uniform_demand, AllocationBreakpoints,
    BestResponse,
};
pub use pwl::{Linear, PiecewiseLinearFn};
pub use rational::Rational;
pub use welfare::{consumer_welfare, pareto_compare, pointwise_welfare, profits, ParetoVerdict};
