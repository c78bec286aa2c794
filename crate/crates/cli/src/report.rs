//! CSV and JSON rendering. Rationals are printed as `p/q` with a decimal
//! companion at 12 significant digits, so output is byte-stable.

use datashare_core::mechanisms::FrontierPoint;
use datashare_core::rational::format_decimal;
use datashare_core::{EquilibriumOutcome, IntervalSet, ParetoVerdict, Rational, SharingMechanism};
use serde_json::{json, Value};
use std::io::Write;

pub const SIGNIFICANT: usize = 12;

pub const METRIC_HEADER: [&str; 19] = [
    "param",
    "p_A",
    "p_B",
    "pi_A",
    "pi_B",
    "joint",
    "CW",
    "ir_A",
    "ir_B",
    "jointly_ir",
    "pareto",
    "strict",
    "param_dec",
    "p_A_dec",
    "p_B_dec",
    "pi_A_dec",
    "pi_B_dec",
    "joint_dec",
    "CW_dec",
];

pub fn dec(r: &Rational) -> String {
    format_decimal(r, SIGNIFICANT)
}

/// One mechanism's equilibrium metrics and its verdict against no sharing.
pub struct MetricsRow {
    /// Label or swept value.
    pub param: String,
    pub param_value: Option<Rational>,
    pub p_a: Rational,
    pub p_b: Rational,
    pub pi_a: Rational,
    pub pi_b: Rational,
    pub cw: Rational,
    pub verdict: ParetoVerdict,
}

impl MetricsRow {
    pub fn new(
        param: String,
        param_value: Option<Rational>,
        outcome: &EquilibriumOutcome,
        verdict: ParetoVerdict,
    ) -> Self {
        MetricsRow {
            param,
            param_value,
            p_a: outcome.prices.p_a,
            p_b: outcome.prices.p_b,
            pi_a: outcome.pi_a,
            pi_b: outcome.pi_b,
            cw: outcome.cw,
            verdict,
        }
    }

    pub fn joint(&self) -> Rational {
        self.pi_a + self.pi_b
    }

    fn record(&self) -> Vec<String> {
        let flag = |b: bool| b.to_string();
        let v = &self.verdict;
        let joint = self.joint();
        vec![
            self.param.clone(),
            self.p_a.to_string(),
            self.p_b.to_string(),
            self.pi_a.to_string(),
            self.pi_b.to_string(),
            joint.to_string(),
            self.cw.to_string(),
            flag(v.ir_a),
            flag(v.ir_b),
            flag(v.jointly_ir),
            flag(v.pareto_improving),
            flag(v.strict),
            self.param_value.as_ref().map(dec).unwrap_or_default(),
            dec(&self.p_a),
            dec(&self.p_b),
            dec(&self.pi_a),
            dec(&self.pi_b),
            dec(&joint),
            dec(&self.cw),
        ]
    }
}

pub fn write_metrics(out: impl Write, rows: &[MetricsRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRIC_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub const RUN_HEADER: [&str; 8] = [
    "segment",
    "start",
    "end",
    "winner",
    "personalized",
    "price_intercept",
    "price_slope",
    "price_at_start",
];

/// Breakpoint table: who sells on each stretch of each segment and at what price.
pub fn write_runs(out: impl Write, outcome: &EquilibriumOutcome) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_HEADER)?;
    for (kind, runs) in outcome.runs.iter() {
        if outcome.config.mass(kind) == Rational::from_integer(0) {
            continue;
        }
        for run in runs {
            w.write_record([
                kind.name().to_string(),
                run.start.to_string(),
                run.end.to_string(),
                run.winner.to_string(),
                run.personalized.to_string(),
                run.price.intercept.to_string(),
                run.price.slope.to_string(),
                run.price.eval(&run.start).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub const FRONTIER_HEADER: [&str; 6] = ["joint", "CW", "joint_dec", "CW_dec", "share_B_to_A", "share_A_to_B"];

pub fn write_frontier(out: impl Write, frontier: &[FrontierPoint]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FRONTIER_HEADER)?;
    for p in frontier {
        w.write_record([
            p.joint.to_string(),
            p.cw.to_string(),
            dec(&p.joint),
            dec(&p.cw),
            p.mechanism.share_b_to_a.to_string(),
            p.mechanism.share_a_to_b.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn r(x: &Rational) -> Value {
    Value::String(x.to_string())
}

fn spans(set: &IntervalSet) -> Value {
    Value::Array(set.spans().iter().map(|(a, b)| json!([r(a), r(b)])).collect())
}

/// Same shape as the mechanism input format.
pub fn mechanism_json(m: &SharingMechanism) -> Value {
    json!({ "share_B_to_A": spans(&m.share_b_to_a), "share_A_to_B": spans(&m.share_a_to_b) })
}

pub fn verdict_json(v: &ParetoVerdict) -> Value {
    json!({
        "ir_A": v.ir_a,
        "ir_B": v.ir_b,
        "jointly_ir": v.jointly_ir,
        "consumers_no_worse": v.consumers_no_worse,
        "pareto_improving": v.pareto_improving,
        "strict": v.strict,
        "witnesses": v.witnesses.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
    })
}

pub fn outcome_json(
    label: &str,
    outcome: &EquilibriumOutcome,
    baseline: &EquilibriumOutcome,
    verdict: &ParetoVerdict,
) -> Value {
    let metrics = |o: &EquilibriumOutcome| {
        let joint = o.pi_a + o.pi_b;
        json!({
            "p_A": r(&o.prices.p_a),
            "p_B": r(&o.prices.p_b),
            "pi_A": r(&o.pi_a),
            "pi_B": r(&o.pi_b),
            "joint": r(&joint),
            "CW": r(&o.cw),
            "decimal": {
                "p_A": dec(&o.prices.p_a),
                "p_B": dec(&o.prices.p_b),
                "pi_A": dec(&o.pi_a),
                "pi_B": dec(&o.pi_b),
                "joint": dec(&joint),
                "CW": dec(&o.cw),
            },
        })
    };
    let runs: Vec<Value> = outcome
        .runs
        .iter()
        .filter(|(kind, _)| outcome.config.mass(*kind) != Rational::from_integer(0))
        .flat_map(|(kind, runs)| {
            runs.iter().map(move |run| {
                json!({
                    "segment": kind.name(),
                    "start": r(&run.start),
                    "end": r(&run.end),
                    "winner": run.winner.to_string(),
                    "personalized": run.personalized,
                    "price": { "intercept": r(&run.price.intercept), "slope": r(&run.price.slope) },
                })
            })
        })
        .collect();
    json!({
        "label": label,
        "mechanism": mechanism_json(&outcome.mechanism),
        "equilibrium": metrics(outcome),
        "baseline": metrics(baseline),
        "verdict": verdict_json(verdict),
        "schedule": runs,
    })
}
