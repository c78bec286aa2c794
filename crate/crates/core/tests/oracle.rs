use datashare_core::oracle::{grid_equilibrium, riemann_check, OracleOptions};
use datashare_core::rational::{int, to_f64};
use datashare_core::{closed_form_reference, solve_equilibrium, Scenario};

#[test]
fn oracle_agrees_with_engine_on_every_scenario() {
    for scenario in Scenario::table() {
        let reference = closed_form_reference(scenario, int(3), int(1)).unwrap();
        let exact = solve_equilibrium(&reference.mechanism, &reference.config).unwrap();
        let opts = OracleOptions::new(&reference.config);
        let grid = grid_equilibrium(&reference.mechanism, &reference.config, &opts).unwrap();
        let name = scenario.name();
        let pairs = [
            ("pi_A", grid.pi_a, to_f64(&exact.pi_a)),
            ("pi_B", grid.pi_b, to_f64(&exact.pi_b)),
            ("CW", grid.cw, to_f64(&exact.cw)),
        ];
        for (what, approx, value) in pairs {
            assert!(
                (approx - value).abs() <= 1e-2,
                "{name} {what}: oracle {approx}, engine {value}"
            );
        }
        if let Some(p) = &reference.p_a {
            assert!((grid.p_a - to_f64(p)).abs() <= 1e-2, "{name} p_A: {}", grid.p_a);
        }
        if let Some(p) = &reference.p_b {
            assert!((grid.p_b - to_f64(p)).abs() <= 1e-2, "{name} p_B: {}", grid.p_b);
        }
    }
}

#[test]
fn halving_the_price_step_never_widens_the_gap() {
    for scenario in Scenario::table() {
        let reference = closed_form_reference(scenario, int(3), int(1)).unwrap();
        let (Some(p_a), Some(p_b)) = (&reference.p_a, &reference.p_b) else {
            continue;
        };
        let gap = |step: f64| {
            let opts = OracleOptions::with_grid(&reference.config, step, 20_000);
            let g = grid_equilibrium(&reference.mechanism, &reference.config, &opts).unwrap();
            (g.p_a - to_f64(p_a)).abs().max((g.p_b - to_f64(p_b)).abs())
        };
        let (coarse, fine) = (gap(2e-3), gap(1e-3));
        assert!(fine <= coarse + 1e-12, "{}: {coarse} -> {fine}", scenario.name());
    }
}

#[test]
fn midpoint_sums_converge_at_a_million_points() {
    for scenario in Scenario::table() {
        let reference = closed_form_reference(scenario, int(3), int(1)).unwrap();
        let exact = solve_equilibrium(&reference.mechanism, &reference.config).unwrap();
        let gap = riemann_check(&exact, 1_000_000).unwrap();
        assert!(gap <= 1e-5, "{}: {gap}", scenario.name());
    }
}
