use datashare_core::pricing::ResponseKind;
use datashare_core::rational::{int, rat};
use datashare_core::welfare::total_surplus;
use datashare_core::{
    best_response_uniform, pareto_compare, solve_equilibrium, uniform_demand, Firm, IntervalSet, MarketConfig,
    Rational, SharingMechanism,
};
use proptest::prelude::*;

const GRID: i128 = 24;

fn arb_interval() -> impl Strategy<Value = IntervalSet> {
    prop_oneof![
        1 => Just(IntervalSet::empty()),
        4 => (0..GRID, 1..=GRID).prop_filter_map("empty", |(a, len)| {
            let b = (a + len).min(GRID);
            (a < b).then(|| IntervalSet::interval(rat(a, GRID), rat(b, GRID)).unwrap())
        }),
    ]
}

fn arb_mechanism() -> impl Strategy<Value = SharingMechanism> {
    (arb_interval(), arb_interval()).prop_map(|(b, a)| SharingMechanism::new(b, a))
}

/// Uniform densities, masses `(q_A, q_B, q_∅, q_AB)` with `q_A, q_B > 0`.
fn arb_masses() -> impl Strategy<Value = [Rational; 4]> {
    (1..20i128, 1..20i128, 0..20i128, 0..20i128).prop_map(|(a, b, n, ab)| {
        let total = a + b + n + ab;
        [rat(a, total), rat(b, total), rat(n, total), rat(ab, total)]
    })
}

fn arb_market() -> impl Strategy<Value = MarketConfig> {
    (arb_masses(), 1..4i128).prop_map(|(q, t)| MarketConfig::uniform(int(2 * t + 1), int(t), q).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn surplus_identity_and_reflexivity(config in arb_market(), mechanism in arb_mechanism()) {
        let o = solve_equilibrium(&mechanism, &config).unwrap();
        prop_assert_eq!(o.pi_a + o.pi_b + o.cw, total_surplus(&o));
        let verdict = pareto_compare(&o, &o).unwrap();
        prop_assert!(verdict.pareto_improving && !verdict.strict && verdict.witnesses.is_empty());
        prop_assert!(o.prices.p_a >= int(0) && o.prices.p_b >= int(0));
    }

    #[test]
    fn relabeling_firms_mirrors_the_outcome(masses in arb_masses(), mechanism in arb_mechanism()) {
        let config = MarketConfig::uniform(int(3), int(1), masses).unwrap();
        let [a, b, n, ab] = masses;
        let mirrored = MarketConfig::uniform(int(3), int(1), [b, a, n, ab]).unwrap();
        let o = solve_equilibrium(&mechanism, &config).unwrap();
        let m = solve_equilibrium(&mechanism.swapped(), &mirrored).unwrap();
        prop_assert_eq!((o.pi_a, o.pi_b, o.cw), (m.pi_b, m.pi_a, m.cw));
    }

    #[test]
    fn equilibrium_prices_are_unbeaten_on_a_price_grid(config in arb_market(), mechanism in arb_mechanism()) {
        let o = solve_equilibrium(&mechanism, &config).unwrap();
        let (p_a, p_b) = (o.prices.p_a, o.prices.p_b);
        for (firm, own, rival) in [(Firm::A, p_a, p_b), (Firm::B, p_b, p_a)] {
            let br = best_response_uniform(firm, &rival, &mechanism, &config);
            let earned = own * uniform_demand(firm, &own, &rival, &mechanism, &config);
            if br.kind != ResponseKind::Degenerate {
                prop_assert_eq!(&earned, &br.revenue);
            }
            for k in 0..=200 {
                let p = config.v * rat(k, 200);
                prop_assert!(p * uniform_demand(firm, &p, &rival, &mechanism, &config) <= br.revenue);
            }
        }
    }
}

#[test]
fn best_response_beats_a_fine_grid() {
    let config = MarketConfig::four_segment(int(3), int(1)).unwrap();
    let mechanism = SharingMechanism::new(
        IntervalSet::interval(rat(1, 6), rat(1, 2)).unwrap(),
        IntervalSet::interval(rat(1, 2), rat(5, 6)).unwrap(),
    );
    for rival in [rat(0, 1), rat(1, 3), rat(2, 3), int(1), int(2)] {
        let br = best_response_uniform(Firm::A, &rival, &mechanism, &config);
        for k in 0..=10_000 {
            let p = config.v * rat(k, 10_000);
            assert!(p * uniform_demand(Firm::A, &p, &rival, &mechanism, &config) <= br.revenue);
        }
    }
}
