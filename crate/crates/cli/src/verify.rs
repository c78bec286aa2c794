//! Closed-form table against the exact engine and the grid oracle.

use datashare_core::mechanisms::AppendixPlan;
use datashare_core::oracle::{grid_equilibrium, OracleOptions};
use datashare_core::rational::{rat, to_f64};
use datashare_core::{
    appendix_firm_optimal, closed_form_reference, epsilon_window, mass_ratio_ir_check, no_sharing_prices_general,
    solve_equilibrium, MarketConfig, Rational, Scenario,
};
use std::fmt::Write as _;

/// Oracle values may differ from the exact ones by this many units of `t`.
pub const ORACLE_TOLERANCE: f64 = 1e-2;

pub struct VerifyOptions {
    pub v: Rational,
    pub t: Rational,
    pub oracle: bool,
    pub oracle_consumers: usize,
}

struct Line {
    label: String,
    quantity: String,
    expected: String,
    engine: String,
    oracle: String,
    status: Status,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    OracleFail,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::OracleFail => "FAIL (oracle)",
        }
    }
}

pub struct VerifyReport {
    pub text: String,
    pub passed: bool,
}

pub fn run(opts: &VerifyOptions) -> anyhow::Result<VerifyReport> {
    // Rejects bad (v, t) before any work.
    MarketConfig::one_segment(opts.v, opts.t)?;
    let t = to_f64(&opts.t);
    let mut lines = Vec::new();
    let mut notes = Vec::new();

    for scenario in Scenario::table() {
        let name = scenario.name();
        let reference = closed_form_reference(scenario, opts.v, opts.t)?;
        let outcome = solve_equilibrium(&reference.mechanism, &reference.config)?;
        let grid = if opts.oracle {
            let oracle_opts = OracleOptions {
                consumers: opts.oracle_consumers,
                ..OracleOptions::new(&reference.config)
            };
            let g = grid_equilibrium(&reference.mechanism, &reference.config, &oracle_opts)?;
            if let Some(cycle) = &g.cycle {
                notes.push(format!("{name}: oracle {cycle}"));
            }
            Some(g)
        } else {
            None
        };
        let rows = [
            ("p_A", reference.p_a, outcome.prices.p_a, grid.as_ref().map(|g| g.p_a)),
            ("p_B", reference.p_b, outcome.prices.p_b, grid.as_ref().map(|g| g.p_b)),
            (
                "pi_A",
                Some(reference.pi_a),
                outcome.pi_a,
                grid.as_ref().map(|g| g.pi_a),
            ),
            (
                "pi_B",
                Some(reference.pi_b),
                outcome.pi_b,
                grid.as_ref().map(|g| g.pi_b),
            ),
            ("CW", Some(reference.cw), outcome.cw, grid.as_ref().map(|g| g.cw)),
        ];
        for (quantity, expected, engine, approx) in rows {
            // A firm with nothing to price uniformly has no stated price.
            let Some(expected) = expected else { continue };
            let status = if expected != engine {
                Status::Fail
            } else if approx.is_some_and(|x| (x - to_f64(&expected)).abs() > ORACLE_TOLERANCE * t) {
                Status::OracleFail
            } else {
                Status::Pass
            };
            lines.push(Line {
                label: name.clone(),
                quantity: quantity.into(),
                expected: expected.to_string(),
                engine: engine.to_string(),
                oracle: approx.map_or("-".into(), |x| format!("{x:.6}")),
                status,
            });
        }
    }
    appendix_lines(opts, &mut lines)?;

    let passed = lines.iter().all(|l| l.status == Status::Pass);
    let mut text = String::new();
    let widths = [22, 9, 26, 26, 10];
    let _ = writeln!(
        text,
        "{:<w0$} {:<w1$} {:<w2$} {:<w3$} {:<w4$} status",
        "scenario",
        "quantity",
        "reference",
        "engine",
        "oracle",
        w0 = widths[0],
        w1 = widths[1],
        w2 = widths[2],
        w3 = widths[3],
        w4 = widths[4],
    );
    for l in &lines {
        let _ = writeln!(
            text,
            "{:<w0$} {:<w1$} {:<w2$} {:<w3$} {:<w4$} {}",
            l.label,
            l.quantity,
            l.expected,
            l.engine,
            l.oracle,
            l.status.as_str(),
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3],
            w4 = widths[4],
        );
    }
    for note in notes {
        let _ = writeln!(text, "note: {note}");
    }
    let failed = lines.iter().filter(|l| l.status != Status::Pass).count();
    let _ = writeln!(text, "{} checks, {} failed", lines.len(), failed);
    Ok(VerifyReport { text, passed })
}

fn check(lines: &mut Vec<Line>, label: &str, quantity: &str, expected: String, engine: String, ok: bool) {
    lines.push(Line {
        label: label.into(),
        quantity: quantity.into(),
        expected,
        engine,
        oracle: "-".into(),
        status: if ok { Status::Pass } else { Status::Fail },
    });
}

fn appendix_lines(opts: &VerifyOptions, lines: &mut Vec<Line>) -> anyhow::Result<()> {
    let (v, t) = (opts.v, opts.t);
    let four = MarketConfig::four_segment(v, t)?;
    let (plan, mechanism, ok) = appendix_firm_optimal(&four)?;
    let target = Scenario::FourSegFirmOpt.mechanism()?;
    check(
        lines,
        "appendix/4seg",
        "intervals",
        format!("{} & {}", target.share_b_to_a, target.share_a_to_b),
        format!("{} & {}", mechanism.share_b_to_a, mechanism.share_a_to_b),
        mechanism == target && ok,
    );

    let q = rat(1, 4);
    let (p_a, p_b) = no_sharing_prices_general(&q, &q, &q, &t)?;
    let expected = t * rat(2, 3);
    check(
        lines,
        "appendix/general",
        "p_A,p_B",
        format!("{expected},{expected}"),
        format!("{p_a},{p_b}"),
        p_a == expected && p_b == expected,
    );

    // q_A = 3q_B with no anonymous consumers sits exactly on A's IR boundary.
    let (q_a, q_b) = (rat(3, 4), rat(1, 4));
    let zero = Rational::from_integer(0);
    let boundary = MarketConfig::uniform(v, t, [q_a, q_b, zero, zero])?;
    let (plan_b, _, ok_b) = appendix_firm_optimal(&boundary)?;
    let ratio_ok = mass_ratio_ir_check(&q_a, &q_b)?;
    check(
        lines,
        "appendix/q_A=3q_B",
        "IR_A",
        "gain = loss".into(),
        format!("{} vs {}", plan_b.ir_lhs_a, plan_b.ir_rhs_a),
        plan_b.ir_lhs_a == plan_b.ir_rhs_a && ok_b && ratio_ok,
    );
    check(
        lines,
        "appendix/4seg",
        "IR",
        "A and B".into(),
        ir_summary(&plan),
        plan.ir_a() && plan.ir_b(),
    );

    let window = epsilon_window();
    let (lo, hi) = (window.lower.to_f64(), window.upper.to_f64());
    let expected_lo = (2f64.sqrt() - 1.0) / 2.0;
    check(
        lines,
        "epsilon-window",
        "bounds",
        format!("({expected_lo:.10}, 0.25)"),
        format!("({}, {})", window.lower, window.upper),
        window.upper.cmp_rational(&rat(1, 4)).is_eq() && (lo - expected_lo).abs() < 1e-15 && hi == 0.25,
    );
    let inside = window.contains(&rat(22, 100));
    let outside = !window.contains(&rat(1, 5)) && !window.contains(&rat(1, 4));
    check(
        lines,
        "epsilon-window",
        "members",
        "0.22 in; 0.2, 0.25 out".into(),
        format!(
            "0.22 {}; 0.2/0.25 {}",
            if inside { "in" } else { "out" },
            if outside { "out" } else { "in" }
        ),
        inside && outside,
    );
    Ok(())
}

fn ir_summary(plan: &AppendixPlan) -> String {
    format!(
        "A {} ≥ {}, B {} ≥ {}",
        plan.ir_lhs_a, plan.ir_rhs_a, plan.ir_lhs_b, plan.ir_rhs_b
    )
}
