//! Importance metrics over a causal network: risk reduction worth (RRW and
//! its interventional form IRRW), average/relative causal effects, Birnbaum
//! importance via soft evidence, pairwise interventions, path-specific
//! effects and tornado data.
//!
//! Every [`MetricValue`] carries the probabilities it was computed from so a
//! report can be audited with [`MetricValue::recompute`].

use std::fmt;

use rayon::prelude::*;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{marginal, Evidence};
use crate::intervention::{
    interventional_marginal, negated_state_distribution, path_specific_marginal, Intervention, InterventionSet, PathSet, Reference,
};
use crate::model::CausalNetwork;

pub const DEFAULT_DELTA: f64 = 0.01;
pub const MAX_DELTA: f64 = 0.05;

/// A metric value. Division by zero is explicit rather than an error so
/// that ranked reports stay total.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Finite(f64),
    Infinite,
    NegInfinite,
    /// 0/0
    Undefined,
}

impl Value {
    pub fn ratio(numerator: f64, denominator: f64) -> Value {
        if denominator == 0.0 {
            if numerator > 0.0 {
                Value::Infinite
            } else if numerator < 0.0 {
                Value::NegInfinite
            } else {
                Value::Undefined
            }
        } else {
            Value::Finite(numerator / denominator)
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Value::Finite(x) => x,
            Value::Infinite => f64::INFINITY,
            Value::NegInfinite => f64::NEG_INFINITY,
            Value::Undefined => f64::NAN,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Value::Finite(_))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Finite(x) => write!(f, "{x}"),
            Value::Infinite => f.write_str("inf"),
            Value::NegInfinite => f.write_str("-inf"),
            Value::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Finite(x) => s.serialize_f64(*x),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

/// How a metric combines its provenance probabilities `p0, p1, ...`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Formula {
    /// p0 / p1
    Ratio,
    /// p0 - p1
    Difference,
    /// (p0 - p1) / (2 step)
    CentralDifference { step: f64 },
    /// (p0 - p1) / (p2 - p3)
    RatioOfDifferences,
}

/// One probability query that contributed to a metric.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Query {
    pub query: String,
    pub probability: f64,
}

impl Query {
    pub fn new(query: impl Into<String>, probability: f64) -> Self {
        Query {
            query: query.into(),
            probability,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricValue {
    pub metric: String,
    pub variable: String,
    /// State, state pair or path set the metric refers to.
    pub subject: String,
    pub value: Value,
    pub numerator: f64,
    pub denominator: f64,
    pub formula: Formula,
    pub provenance: Vec<Query>,
}

impl MetricValue {
    pub fn new(metric: impl Into<String>, variable: impl Into<String>, subject: impl Into<String>, formula: Formula, provenance: Vec<Query>) -> Self {
        let (numerator, denominator) = quotient(formula, &provenance);
        MetricValue {
            metric: metric.into(),
            variable: variable.into(),
            subject: subject.into(),
            value: Value::ratio(numerator, denominator),
            numerator,
            denominator,
            formula,
            provenance,
        }
    }

    /// Re-derives the value from the recorded provenance probabilities.
    pub fn recompute(&self) -> Value {
        let (n, d) = quotient(self.formula, &self.provenance);
        Value::ratio(n, d)
    }
}

fn quotient(formula: Formula, provenance: &[Query]) -> (f64, f64) {
    let p = |i: usize| provenance[i].probability;
    match formula {
        Formula::Ratio => (p(0), p(1)),
        Formula::Difference => (p(0) - p(1), 1.0),
        Formula::CentralDifference { step } => (p(0) - p(1), 2.0 * step),
        Formula::RatioOfDifferences => (p(0) - p(1), p(2) - p(3)),
    }
}

/// The outcome event `Y = y` whose probability the metrics track.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetEvent {
    pub variable: String,
    pub state: String,
}

impl TargetEvent {
    pub fn new(variable: impl Into<String>, state: impl Into<String>) -> Self {
        TargetEvent {
            variable: variable.into(),
            state: state.into(),
        }
    }

    pub fn check(&self, network: &CausalNetwork) -> Result<()> {
        network.state_index(&self.variable, &self.state).map(|_| ())
    }
}

impl fmt::Display for TargetEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.variable, self.state)
    }
}

/// Nominal state of a variable against which other states are compared.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReferenceAssignment {
    pub variable: String,
    pub state: String,
}

impl ReferenceAssignment {
    pub fn new(variable: impl Into<String>, state: impl Into<String>) -> Self {
        ReferenceAssignment {
            variable: variable.into(),
            state: state.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Associational,
    Interventional,
}

/// What a state is compared against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Comparison {
    Reference(String),
    /// `not x`: the observational marginal without `x`, renormalized.
    Negated,
}

/// How soft evidence on a node is realized for Birnbaum importance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SoftEvidenceMode {
    /// Shift the node's belief and update the rest of the network
    /// consistently (`sum_x q(x) P(Y | X = x)`); confounders move with it.
    Observational,
    /// Replace the node's mechanism by the shifted distribution.
    Interventional,
}

/// `P(Y = y | evidence, do(interventions))`.
pub fn target_probability(network: &CausalNetwork, target: &TargetEvent, evidence: &Evidence, interventions: &InterventionSet) -> Result<f64> {
    let dist = if interventions.is_empty() {
        marginal(network, &target.variable, evidence)?
    } else {
        interventional_marginal(network, &target.variable, interventions, evidence)?
    };
    dist.probability(&target.state)
}

fn p_base(network: &CausalNetwork, target: &TargetEvent) -> Result<Query> {
    Ok(Query::new(
        format!("P({target})"),
        target_probability(network, target, &Evidence::new(), &InterventionSet::empty())?,
    ))
}

fn p_given(network: &CausalNetwork, target: &TargetEvent, variable: &str, state: &str) -> Result<Query> {
    let ev = Evidence::new().observe(variable, state)?;
    Ok(Query::new(
        format!("P({target} | {variable}={state})"),
        target_probability(network, target, &ev, &InterventionSet::empty())?,
    ))
}

fn p_do(network: &CausalNetwork, target: &TargetEvent, interventions: Vec<Intervention>) -> Result<Query> {
    let set = InterventionSet::new(interventions)?;
    Ok(Query::new(
        format!("P({target} | {set})"),
        target_probability(network, target, &Evidence::new(), &set)?,
    ))
}

/// `sum_x q(x) P(Y | X = x)`: the target probability after the belief in
/// `variable` is moved to `q` with everything else updated consistently.
fn soft_observation(network: &CausalNetwork, target: &TargetEvent, variable: &str, q: &[f64]) -> Result<f64> {
    let v = network.index_of(variable)?;
    let mut total = 0.0;
    for (s, &w) in q.iter().enumerate() {
        if w > 0.0 {
            let state = &network.variable(v).states[s];
            total += w * p_given(network, target, variable, state)?.probability;
        }
    }
    Ok(total)
}

/// `P(Y | X = not x)`: conditioning on `X != x`.
fn p_given_not(network: &CausalNetwork, target: &TargetEvent, variable: &str, state: &str) -> Result<Query> {
    let neg = negated_state_distribution(network, variable, state)?;
    Ok(Query::new(
        format!("P({target} | {variable}!={state})"),
        soft_observation(network, target, variable, &neg.probabilities)?,
    ))
}

fn p_do_not(network: &CausalNetwork, target: &TargetEvent, variable: &str, state: &str) -> Result<Query> {
    let neg = negated_state_distribution(network, variable, state)?;
    let set = InterventionSet::single(Intervention::from_distribution(&neg));
    Ok(Query::new(
        format!("P({target} | do({variable}=not {state}))"),
        target_probability(network, target, &Evidence::new(), &set)?,
    ))
}

fn check_target(network: &CausalNetwork, target: &TargetEvent, variable: &str) -> Result<()> {
    target.check(network)?;
    network.index_of(variable)?;
    if target.variable == variable {
        return Err(Error::TargetFixed(variable.to_string()));
    }
    Ok(())
}

/// Categorical RRW `P(Y) / P(Y | X = x_ref)` or IRRW `P(Y) / P(Y | do(X = x_ref))`.
pub fn rrw(network: &CausalNetwork, target: &TargetEvent, reference: &ReferenceAssignment, mode: Mode) -> Result<MetricValue> {
    check_target(network, target, &reference.variable)?;
    let (var, state) = (reference.variable.as_str(), reference.state.as_str());
    let base = p_base(network, target)?;
    let (name, denominator) = match mode {
        Mode::Associational => ("RRW", p_given(network, target, var, state)?),
        Mode::Interventional => ("IRRW", p_do(network, target, vec![Intervention::hard(var, state)])?),
    };
    Ok(MetricValue::new(name, var, state, Formula::Ratio, vec![base, denominator]))
}

/// Dichotomic RRW `P(Y) / P(Y | X = not x)` or IRRW `P(Y) / P(Y | do(X = not x))`.
pub fn rrw_dichotomic(network: &CausalNetwork, target: &TargetEvent, variable: &str, state: &str, mode: Mode) -> Result<MetricValue> {
    check_target(network, target, variable)?;
    let base = p_base(network, target)?;
    let (name, denominator) = match mode {
        Mode::Associational => ("RRW-dichotomic", p_given_not(network, target, variable, state)?),
        Mode::Interventional => ("IRRW-dichotomic", p_do_not(network, target, variable, state)?),
    };
    Ok(MetricValue::new(name, variable, state, Formula::Ratio, vec![base, denominator]))
}

/// `ACE = P(Y | do(X=x)) - P(Y | do(X=x_ref))` and `RCE` as their ratio.
pub fn ace_rce(
    network: &CausalNetwork,
    target: &TargetEvent,
    variable: &str,
    state: &str,
    comparison: &Comparison,
) -> Result<(MetricValue, MetricValue)> {
    check_target(network, target, variable)?;
    let active = p_do(network, target, vec![Intervention::hard(variable, state)])?;
    let (suffix, reference) = match comparison {
        Comparison::Reference(r) if r == state => ("", active.clone()),
        Comparison::Reference(r) => ("", p_do(network, target, vec![Intervention::hard(variable, r.as_str())])?),
        Comparison::Negated => ("-dichotomic", p_do_not(network, target, variable, state)?),
    };
    let provenance = vec![active, reference];
    Ok((
        MetricValue::new(format!("ACE{suffix}"), variable, state, Formula::Difference, provenance.clone()),
        MetricValue::new(format!("RCE{suffix}"), variable, state, Formula::Ratio, provenance),
    ))
}

/// `P(Y | do(X = x)) / P(Y | do(X = not x))`.
pub fn rce_dichotomic(network: &CausalNetwork, target: &TargetEvent, variable: &str, state: &str) -> Result<MetricValue> {
    Ok(ace_rce(network, target, variable, state, &Comparison::Negated)?.1)
}

/// Distribution obtained by moving `delta` of probability mass onto (or,
/// for negative `delta`, away from) `state`, rescaling the other states
/// proportionally.
pub fn shifted_distribution(marginal: &[f64], state: usize, delta: f64) -> Option<Vec<f64>> {
    let m = marginal[state];
    let target = m + delta;
    if !(0.0..=1.0).contains(&target) || m >= 1.0 {
        return None;
    }
    let scale = (1.0 - target) / (1.0 - m);
    Some(
        marginal
            .iter()
            .enumerate()
            .map(|(i, &p)| if i == state { target } else { p * scale })
            .collect(),
    )
}

/// Birnbaum importance as the central difference quotient of `P(Y)` with
/// respect to the probability of `failure_state`, using soft evidence of
/// size `delta` in both directions.
pub fn birnbaum_cbn(
    network: &CausalNetwork,
    target: &TargetEvent,
    variable: &str,
    failure_state: &str,
    delta: f64,
    mode: SoftEvidenceMode,
) -> Result<MetricValue> {
    check_target(network, target, variable)?;
    if !(delta > 0.0 && delta <= MAX_DELTA) {
        return Err(Error::InvalidDelta {
            delta,
            reason: format!("must lie in (0, {MAX_DELTA}]"),
        });
    }
    let (v, s) = network.state_index(variable, failure_state)?;
    let prior = marginal(network, variable, &Evidence::new())?.probabilities;
    let shifted = |d: f64| {
        shifted_distribution(&prior, s, d).ok_or_else(|| Error::InvalidDelta {
            delta,
            reason: format!("P({variable}={failure_state}) = {} cannot move by {d}", prior[s]),
        })
    };
    let (up, down) = (shifted(delta)?, shifted(-delta)?);
    let evaluate = |q: &[f64]| -> Result<f64> {
        match mode {
            SoftEvidenceMode::Observational => soft_observation(network, target, variable, q),
            SoftEvidenceMode::Interventional => {
                let set = InterventionSet::single(Intervention::stochastic(network.variable(v).name.clone(), q.to_vec()));
                target_probability(network, target, &Evidence::new(), &set)
            }
        }
    };
    let label = match mode {
        SoftEvidenceMode::Observational => "soft",
        SoftEvidenceMode::Interventional => "do-soft",
    };
    Ok(MetricValue::new(
        "BB",
        variable,
        failure_state,
        Formula::CentralDifference { step: delta },
        vec![
            Query::new(format!("P({target} | {label}({variable}={failure_state} +{delta}))"), evaluate(&up)?),
            Query::new(format!("P({target} | {label}({variable}={failure_state} -{delta}))"), evaluate(&down)?),
        ],
    ))
}

/// One side of a pairwise intervention: variable, active state, reference state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairArm {
    pub variable: String,
    pub state: String,
    pub reference: String,
}

impl PairArm {
    pub fn new(variable: impl Into<String>, state: impl Into<String>, reference: impl Into<String>) -> Self {
        PairArm {
            variable: variable.into(),
            state: state.into(),
            reference: reference.into(),
        }
    }
}

/// `P(Y | do(X1=x1, X2=x2)) / P(Y | do(X1=x1_ref, X2=x2_ref))`.
pub fn rce_pairwise(network: &CausalNetwork, target: &TargetEvent, first: &PairArm, second: &PairArm) -> Result<MetricValue> {
    check_target(network, target, &first.variable)?;
    check_target(network, target, &second.variable)?;
    if first.variable == second.variable {
        return Err(Error::DuplicateVariable(first.variable.clone()));
    }
    let active = p_do(
        network,
        target,
        vec![
            Intervention::hard(&first.variable, &first.state),
            Intervention::hard(&second.variable, &second.state),
        ],
    )?;
    let reference = p_do(
        network,
        target,
        vec![
            Intervention::hard(&first.variable, &first.reference),
            Intervention::hard(&second.variable, &second.reference),
        ],
    )?;
    Ok(MetricValue::new(
        "RCE2",
        format!("{}&{}", first.variable, second.variable),
        format!("{}&{}", first.state, second.state),
        Formula::Ratio,
        vec![active, reference],
    ))
}

/// RCE² for every pair of distinct variables in `subjects` and every
/// combination of their states, in deterministic order.
pub fn pairwise_grid(network: &CausalNetwork, target: &TargetEvent, subjects: &[ReferenceAssignment]) -> Result<Vec<MetricValue>> {
    let mut cells = Vec::new();
    for (i, a) in subjects.iter().enumerate() {
        for b in &subjects[i + 1..] {
            let (va, _) = network.state_index(&a.variable, &a.state)?;
            let (vb, _) = network.state_index(&b.variable, &b.state)?;
            for sa in &network.variable(va).states {
                for sb in &network.variable(vb).states {
                    cells.push((PairArm::new(&a.variable, sa, &a.state), PairArm::new(&b.variable, sb, &b.state)));
                }
            }
        }
    }
    cells.par_iter().map(|(a, b)| rce_pairwise(network, target, a, b)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathMetrics {
    pub ape: MetricValue,
    pub rpe: MetricValue,
    pub ape_over_ace: MetricValue,
}

/// Absolute and relative path-specific effects and the share of the total
/// causal effect transmitted along `pathset`.
pub fn path_metrics(network: &CausalNetwork, target: &TargetEvent, pathset: &PathSet, active: &str, reference: &Reference) -> Result<PathMetrics> {
    check_target(network, target, &pathset.source)?;
    let x = pathset.source.as_str();
    let p_ref = p_do(network, target, vec![reference.intervention(x)])?;
    let p_full = p_do(network, target, vec![Intervention::hard(x, active)])?;
    let p_path = match reference {
        // do_pi(X=(x,x)) is do(X=x).
        Reference::State(r) if r == active => Query::new(format!("P({target} | do_pi({x}=({active},{reference})))"), p_ref.probability),
        _ => {
            let d = path_specific_marginal(network, &target.variable, pathset, active, reference)?;
            Query::new(
                format!("P({target} | do_pi({x}=({active},{reference})) via {pathset})"),
                d.probability(&target.state)?,
            )
        }
    };
    let subject = format!("{active} via {pathset}");
    Ok(PathMetrics {
        ape: MetricValue::new("APE", x, subject.clone(), Formula::Difference, vec![p_path.clone(), p_ref.clone()]),
        rpe: MetricValue::new("RPE", x, subject.clone(), Formula::Ratio, vec![p_path.clone(), p_ref.clone()]),
        ape_over_ace: MetricValue::new(
            "APE/ACE",
            x,
            subject,
            Formula::RatioOfDifferences,
            vec![p_path, p_ref.clone(), p_full, p_ref],
        ),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TornadoRow {
    pub variable: String,
    pub state: String,
    /// `P(Y | X = x)`
    pub conditional: f64,
    /// `P(Y | do(X = x))`
    pub interventional: f64,
    /// `P(Y)`
    pub baseline: f64,
}

impl TornadoRow {
    pub fn label(&self) -> String {
        format!("{}={}", self.variable, self.state)
    }
}

/// Conditional and interventional target probabilities per subject, sorted
/// by distance of the interventional value from the baseline (largest first).
pub fn tornado(network: &CausalNetwork, target: &TargetEvent, subjects: &[(String, String)]) -> Result<Vec<TornadoRow>> {
    target.check(network)?;
    let baseline = p_base(network, target)?.probability;
    let mut rows: Vec<TornadoRow> = subjects
        .par_iter()
        .map(|(var, state)| {
            check_target(network, target, var)?;
            Ok(TornadoRow {
                variable: var.clone(),
                state: state.clone(),
                conditional: p_given(network, target, var, state)?.probability,
                interventional: p_do(network, target, vec![Intervention::hard(var, state)])?.probability,
                baseline,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| {
        let da = (a.interventional - a.baseline).abs();
        let db = (b.interventional - b.baseline).abs();
        db.total_cmp(&da)
    });
    Ok(rows)
}

/// Every state of each listed variable, as tornado subjects.
pub fn all_states(network: &CausalNetwork, variables: &[&str]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for &name in variables {
        let v = network.index_of(name)?;
        out.extend(network.variable(v).states.iter().map(|s| (name.to_string(), s.clone())));
    }
    Ok(out)
}

/// Collected metric values for one target event.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricReport {
    pub target: String,
    pub entries: Vec<MetricValue>,
    pub errors: Vec<String>,
}

impl MetricReport {
    pub fn new(target: &TargetEvent) -> Self {
        MetricReport {
            target: target.to_string(),
            entries: Vec::new(),
            errors: Vec::new(),
        }
    }

    /// Records a metric or, on failure, the error with its subject.
    pub fn record(&mut self, context: &str, result: Result<MetricValue>) {
        match result {
            Ok(v) => self.entries.push(v),
            Err(e) => self.errors.push(format!("{context}: {e}")),
        }
    }

    pub fn find(&self, metric: &str, variable: &str, subject: &str) -> Option<&MetricValue> {
        self.entries
            .iter()
            .find(|m| m.metric == metric && m.variable == variable && m.subject == subject)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let write = |w: &mut csv::Writer<Vec<u8>>, rec: [&str; 6]| w.write_record(rec).expect("in-memory writer");
        write(&mut w, ["metric", "variable", "subject", "value", "numerator", "denominator"]);
        for m in &self.entries {
            write(
                &mut w,
                [
                    &m.metric,
                    &m.variable,
                    &m.subject,
                    &m.value.to_string(),
                    &m.numerator.to_string(),
                    &m.denominator.to_string(),
                ],
            );
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
    }
}

pub fn tornado_csv(rows: &[TornadoRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["variable", "state", "conditional", "interventional", "baseline"])
        .expect("in-memory writer");
    for r in rows {
        w.write_record([
            r.variable.as_str(),
            r.state.as_str(),
            &r.conditional.to_string(),
            &r.interventional.to_string(),
            &r.baseline.to_string(),
        ])
        .expect("in-memory writer");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

/// Horizontal bar chart: for each subject, the conditional and
/// interventional values as bars from the baseline.
pub fn tornado_svg(rows: &[TornadoRow], title: &str) -> String {
    let (width, row_h, left, right, top) = (720.0, 28.0, 200.0, 40.0, 50.0);
    let height = top + row_h * rows.len() as f64 + 40.0;
    let baseline = rows.first().map_or(0.0, |r| r.baseline);
    let span = rows
        .iter()
        .flat_map(|r| [r.conditional, r.interventional])
        .map(|v| (v - baseline).abs())
        .fold(f64::MIN_POSITIVE, f64::max);
    let plot = width - left - right;
    let x_of = |v: f64| left + plot / 2.0 + (v - baseline) / span * (plot / 2.0);
    let esc = |s: &str| s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        width / 2.0,
        esc(title)
    );
    for (i, r) in rows.iter().enumerate() {
        let y = top + row_h * i as f64;
        svg += &format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            left - 8.0,
            y + row_h / 2.0 + 4.0,
            esc(&r.label())
        );
        for (k, (v, color)) in [(r.conditional, "#9e9e9e"), (r.interventional, "#1f77b4")].into_iter().enumerate() {
            let (x0, x1) = (x_of(baseline), x_of(v));
            svg += &format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\"><title>{}</title></rect>\n",
                x0.min(x1),
                y + 3.0 + k as f64 * (row_h - 6.0) / 2.0,
                (x1 - x0).abs(),
                (row_h - 6.0) / 2.0,
                v
            );
        }
    }
    let xb = x_of(baseline);
    svg += &format!(
        "<line x1=\"{xb:.2}\" y1=\"{}\" x2=\"{xb:.2}\" y2=\"{}\" stroke=\"black\"/>\n<text x=\"{xb:.2}\" y=\"{}\" text-anchor=\"middle\">baseline {baseline:.4e}</text>\n",
        top - 4.0,
        height - 30.0,
        height - 12.0
    );
    svg += "</svg>\n";
    svg
}
