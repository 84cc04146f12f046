//! Network data model, JSON document format and structural validation.
//!
//! A [`CausalNetwork`] is a DAG of categorical variables with exactly one
//! conditional probability table per variable. CPT rows enumerate the parent
//! state combinations with the last-listed parent varying fastest.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on row sums when loading a CPT.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: impl Into<String>, states: impl IntoIterator<Item = S>) -> Self {
        Variable {
            name: name.into(),
            states: states.into_iter().map(Into::into).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    #[serde(rename = "variable")]
    pub child: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new<S: Into<String>>(child: impl Into<String>, parents: impl IntoIterator<Item = S>, rows: Vec<Vec<f64>>) -> Self {
        Cpt {
            child: child.into(),
            parents: parents.into_iter().map(Into::into).collect(),
            rows,
        }
    }

    /// Parentless CPT with a single row.
    pub fn prior(child: impl Into<String>, row: Vec<f64>) -> Self {
        Cpt {
            child: child.into(),
            parents: Vec::new(),
            rows: vec![row],
        }
    }
}

/// Serialized form of a network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub schema: u32,
    pub variables: Vec<Variable>,
    pub cpts: Vec<Cpt>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    EmptyName,
    TooFewStates,
    EmptyStateLabel,
    DuplicateState,
    DuplicateVariable,
    MissingCpt,
    DuplicateCpt,
    CptForUnknownVariable,
    UnknownParent,
    DuplicateParent,
    RowCount,
    RowWidth,
    ProbabilityRange,
    RowSum,
    Cycle,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::EmptyName => "empty-name",
            Rule::TooFewStates => "too-few-states",
            Rule::EmptyStateLabel => "empty-state-label",
            Rule::DuplicateState => "duplicate-state",
            Rule::DuplicateVariable => "duplicate-variable",
            Rule::MissingCpt => "missing-cpt",
            Rule::DuplicateCpt => "duplicate-cpt",
            Rule::CptForUnknownVariable => "cpt-for-unknown-variable",
            Rule::UnknownParent => "unknown-parent",
            Rule::DuplicateParent => "duplicate-parent",
            Rule::RowCount => "row-count",
            Rule::RowWidth => "row-width",
            Rule::ProbabilityRange => "probability-range",
            Rule::RowSum => "row-sum",
            Rule::Cycle => "cycle",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub variable: String,
    pub rule: Rule,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, variable: &str, rule: Rule, detail: impl Into<String>) {
        self.violations.push(Violation {
            variable: variable.to_string(),
            rule,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "ok: no violations");
        }
        for v in &self.violations {
            writeln!(f, "{}: [{}] {}", v.variable, v.rule, v.detail)?;
        }
        Ok(())
    }
}

/// Checks every structural and numeric invariant of a network definition.
/// Violations are returned as data; an empty report means the definition is valid.
pub fn validate(variables: &[Variable], cpts: &[Cpt]) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut by_name: HashMap<&str, &Variable> = HashMap::new();
    for var in variables {
        if var.name.is_empty() {
            report.push(&var.name, Rule::EmptyName, "variable name is empty");
        }
        if var.states.len() < 2 {
            report.push(
                &var.name,
                Rule::TooFewStates,
                format!("{} state(s), at least 2 required", var.states.len()),
            );
        }
        let mut seen = HashSet::new();
        for s in &var.states {
            if s.is_empty() {
                report.push(&var.name, Rule::EmptyStateLabel, "state label is empty");
            }
            if !seen.insert(s.as_str()) {
                report.push(&var.name, Rule::DuplicateState, format!("state `{s}` listed twice"));
            }
        }
        if by_name.insert(var.name.as_str(), var).is_some() {
            report.push(&var.name, Rule::DuplicateVariable, "variable name used twice");
        }
    }

    let mut cpt_count: HashMap<&str, usize> = HashMap::new();
    for cpt in cpts {
        *cpt_count.entry(cpt.child.as_str()).or_default() += 1;
        let Some(child) = by_name.get(cpt.child.as_str()) else {
            report.push(&cpt.child, Rule::CptForUnknownVariable, "CPT names a variable that does not exist");
            continue;
        };

        let mut parent_seen = HashSet::new();
        let mut expected_rows = Some(1usize);
        for p in &cpt.parents {
            if !parent_seen.insert(p.as_str()) {
                report.push(&cpt.child, Rule::DuplicateParent, format!("parent `{p}` listed twice"));
            }
            match by_name.get(p.as_str()) {
                Some(pv) => expected_rows = expected_rows.map(|n| n * pv.states.len()),
                None => {
                    report.push(&cpt.child, Rule::UnknownParent, format!("parent `{p}` does not exist"));
                    expected_rows = None;
                }
            }
        }
        if let Some(n) = expected_rows {
            if cpt.rows.len() != n {
                report.push(&cpt.child, Rule::RowCount, format!("{} rows, expected {n}", cpt.rows.len()));
            }
        }
        for (i, row) in cpt.rows.iter().enumerate() {
            if row.len() != child.states.len() {
                report.push(
                    &cpt.child,
                    Rule::RowWidth,
                    format!("row {i} has {} entries, expected {}", row.len(), child.states.len()),
                );
                continue;
            }
            if let Some(x) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                report.push(&cpt.child, Rule::ProbabilityRange, format!("row {i} has entry {x} outside [0,1]"));
                continue;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                report.push(&cpt.child, Rule::RowSum, format!("row {i} sums to {sum}"));
            }
        }
    }
    for var in variables {
        match cpt_count.get(var.name.as_str()).copied().unwrap_or(0) {
            0 => report.push(&var.name, Rule::MissingCpt, "no CPT"),
            1 => {}
            n => report.push(&var.name, Rule::DuplicateCpt, format!("{n} CPTs")),
        }
    }

    if let Some(cycle_member) = find_cycle(cpts, &by_name) {
        report.push(&cycle_member, Rule::Cycle, "directed graph implied by parent lists has a cycle");
    }

    report
}

fn find_cycle(cpts: &[Cpt], known: &HashMap<&str, &Variable>) -> Option<String> {
    let mut parents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for cpt in cpts {
        if known.contains_key(cpt.child.as_str()) {
            let entry = parents.entry(cpt.child.as_str()).or_default();
            entry.extend(cpt.parents.iter().map(String::as_str).filter(|p| known.contains_key(p)));
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: HashMap<&str, u8> = HashMap::new();
    fn visit<'a>(node: &'a str, parents: &BTreeMap<&'a str, Vec<&'a str>>, state: &mut HashMap<&'a str, u8>) -> Option<String> {
        match state.get(node) {
            Some(1) => return Some(node.to_string()),
            Some(2) => return None,
            _ => {}
        }
        state.insert(node, 1);
        if let Some(ps) = parents.get(node) {
            for p in ps {
                if let Some(hit) = visit(p, parents, state) {
                    return Some(hit);
                }
            }
        }
        state.insert(node, 2);
        None
    }
    let nodes: Vec<&str> = parents.keys().copied().collect();
    nodes.into_iter().find_map(|n| visit(n, &parents, &mut state))
}

/// A validated, immutable causal Bayesian network.
#[derive(Clone, Debug)]
pub struct CausalNetwork {
    variables: Vec<Variable>,
    /// `cpts[i]` belongs to `variables[i]`.
    cpts: Vec<Cpt>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    /// Row stride of each parent, aligned with `parents`.
    strides: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl PartialEq for CausalNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.cpts == other.cpts
    }
}

impl CausalNetwork {
    /// Validates the definition and builds the network. Rows within the
    /// normalization tolerance are rescaled to sum to one; deviations at the
    /// level of rounding error are left as given so that reloading a saved
    /// network reproduces it bit for bit.
    pub fn new(variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self> {
        let report = validate(&variables, &cpts);
        if !report.is_empty() {
            return Err(Error::Invalid(report));
        }
        let index: HashMap<String, usize> = variables.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();

        let mut aligned: Vec<Option<Cpt>> = vec![None; variables.len()];
        for mut cpt in cpts {
            for row in &mut cpt.rows {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > row.len() as f64 * f64::EPSILON {
                    row.iter_mut().for_each(|x| *x /= sum);
                }
            }
            let i = index[&cpt.child];
            aligned[i] = Some(cpt);
        }
        let cpts: Vec<Cpt> = aligned.into_iter().map(|c| c.expect("validated: one CPT per variable")).collect();

        let parents: Vec<Vec<usize>> = cpts.iter().map(|c| c.parents.iter().map(|p| index[p]).collect()).collect();
        let mut children = vec![Vec::new(); variables.len()];
        for (child, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(child);
            }
        }
        let strides = parents
            .iter()
            .map(|ps| {
                let mut strides = vec![1; ps.len()];
                for k in (0..ps.len().saturating_sub(1)).rev() {
                    strides[k] = strides[k + 1] * variables[ps[k + 1]].cardinality();
                }
                strides
            })
            .collect();

        Ok(CausalNetwork {
            variables,
            cpts,
            parents,
            children,
            strides,
            index,
        })
    }

    pub fn from_document(doc: NetworkDocument) -> Result<Self> {
        if doc.schema != SCHEMA_VERSION {
            return Err(Error::UnsupportedSchema(doc.schema));
        }
        CausalNetwork::new(doc.variables, doc.cpts)
    }

    pub fn to_document(&self, metadata: BTreeMap<String, String>) -> NetworkDocument {
        NetworkDocument {
            schema: SCHEMA_VERSION,
            variables: self.variables.clone(),
            cpts: self.cpts.clone(),
            metadata,
        }
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, idx: usize) -> &Variable {
        &self.variables[idx]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, idx: usize) -> &Cpt {
        &self.cpts[idx]
    }

    pub fn parents(&self, idx: usize) -> &[usize] {
        &self.parents[idx]
    }

    pub fn children(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    pub fn cardinality(&self, idx: usize) -> usize {
        self.variables[idx].cardinality()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn state_index(&self, variable: &str, state: &str) -> Result<(usize, usize)> {
        let v = self.index_of(variable)?;
        let s = self.variables[v].state_index(state).ok_or_else(|| Error::UnknownState {
            variable: variable.to_string(),
            state: state.to_string(),
        })?;
        Ok((v, s))
    }

    pub fn is_root(&self, idx: usize) -> bool {
        self.parents[idx].is_empty()
    }

    /// CPT row of `var` selected by the parent states found in a full assignment.
    pub fn cpt_row(&self, var: usize, assignment: &[usize]) -> &[f64] {
        let row = self.parents[var]
            .iter()
            .zip(&self.strides[var])
            .map(|(&p, &stride)| assignment[p] * stride)
            .sum::<usize>();
        &self.cpts[var].rows[row]
    }

    /// Row stride of each parent of `var` (last parent has stride 1).
    pub fn parent_strides(&self, var: usize) -> &[usize] {
        &self.strides[var]
    }

    /// Variable indices in topological order; among ready nodes the
    /// lexicographically smallest name is emitted first.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<(&str, usize)> = indegree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| (self.variables[i].name.as_str(), i))
            .collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(next) = ready.pop_first() {
            let i = next.1;
            order.push(i);
            for &c in &self.children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert((self.variables[c].name.as_str(), c));
                }
            }
        }
        debug_assert_eq!(order.len(), self.len(), "validated network is acyclic");
        order
    }

    pub fn topological_names(&self) -> Vec<String> {
        self.topological_order().into_iter().map(|i| self.variables[i].name.clone()).collect()
    }

    /// All variables reachable from `idx` along directed edges, excluding `idx`.
    pub fn descendants(&self, idx: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = self.children[idx].clone();
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend_from_slice(&self.children[n]);
            }
        }
        seen
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.variables, &self.cpts)
    }

    /// Returns a copy of the network where `var`'s CPT is replaced.
    pub fn with_cpt(&self, cpt: Cpt) -> Result<CausalNetwork> {
        let mut cpts = self.cpts.clone();
        let i = self.index_of(&cpt.child)?;
        cpts[i] = cpt;
        CausalNetwork::new(self.variables.clone(), cpts)
    }
}

pub fn parse_document(text: &str) -> Result<NetworkDocument> {
    serde_json::from_str(text).map_err(Error::from_json)
}

pub fn parse_network(text: &str) -> Result<CausalNetwork> {
    CausalNetwork::from_document(parse_document(text)?)
}

pub fn load_network(path: impl AsRef<Path>) -> Result<CausalNetwork> {
    parse_network(&std::fs::read_to_string(path)?)
}

pub fn serialize_network(network: &CausalNetwork, metadata: BTreeMap<String, String>) -> String {
    serde_json::to_string_pretty(&network.to_document(metadata)).expect("network documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> CausalNetwork {
        parse_network(
            r#"{"schema":1,
                "variables":[{"name":"Luminance","states":["low","medium","high"]},
                             {"name":"Perception","states":["FN","TP"]}],
                "cpts":[{"variable":"Luminance","parents":[],"rows":[[0.2,0.5,0.3]]},
                        {"variable":"Perception","parents":["Luminance"],
                         "rows":[[0.08,0.92],[0.05,0.95],[0.06,0.94]]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn parses_two_node_network() {
        let net = two_node();
        let l = net.index_of("Luminance").unwrap();
        let p = net.index_of("Perception").unwrap();
        assert_eq!(net.parents(p), &[l]);
        assert_eq!(net.children(l), &[p]);
    }

    #[test]
    fn minimal_one_node_network() {
        let net =
            parse_network(r#"{"schema":1,"variables":[{"name":"X","states":["a","b"]}],"cpts":[{"variable":"X","parents":[],"rows":[[0.5,0.5]]}]}"#)
                .unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net.topological_names(), vec!["X"]);
    }

    #[test]
    fn row_sum_violation_is_rejected() {
        let err =
            parse_network(r#"{"schema":1,"variables":[{"name":"X","states":["a","b"]}],"cpts":[{"variable":"X","rows":[[0.5,0.4]]}]}"#).unwrap_err();
        match err {
            Error::Invalid(report) => {
                assert!(report.has(Rule::RowSum));
                assert_eq!(report.violations[0].variable, "X");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_network("{\"schema\":1,\n \"variables\": [,]}").unwrap_err();
        match err {
            Error::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn near_normalized_rows_are_rescaled() {
        let net = CausalNetwork::new(vec![Variable::new("X", ["a", "b"])], vec![Cpt::prior("X", vec![0.5, 0.5 + 5e-10])]).unwrap();
        let row = &net.cpt(0).rows[0];
        assert_eq!(row.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn detects_two_cycle() {
        let vars = vec![Variable::new("A", ["0", "1"]), Variable::new("B", ["0", "1"])];
        let cpts = vec![
            Cpt::new("A", ["B"], vec![vec![0.5, 0.5]; 2]),
            Cpt::new("B", ["A"], vec![vec![0.5, 0.5]; 2]),
        ];
        let report = validate(&vars, &cpts);
        assert!(report.has(Rule::Cycle));
    }

    #[test]
    fn detects_row_count_mismatch() {
        let vars = vec![
            Variable::new("P1", ["a", "b", "c"]),
            Variable::new("P2", ["a", "b"]),
            Variable::new("C", ["x", "y"]),
        ];
        let cpts = vec![
            Cpt::prior("P1", vec![0.2, 0.3, 0.5]),
            Cpt::prior("P2", vec![0.5, 0.5]),
            Cpt::new("C", ["P1", "P2"], vec![vec![0.5, 0.5]; 5]),
        ];
        let report = validate(&vars, &cpts);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, Rule::RowCount);
        assert!(report.violations[0].detail.contains("expected 6"));
    }

    #[test]
    fn reports_structural_violations() {
        let vars = vec![Variable::new("A", ["x"]), Variable::new("B", ["x", "x"]), Variable::new("B", ["y", "z"])];
        let cpts = vec![
            Cpt::new("A", ["Ghost"], vec![vec![1.0]]),
            Cpt::prior("Nope", vec![1.0]),
            Cpt::prior("B", vec![1.2, -0.2]),
        ];
        let report = validate(&vars, &cpts);
        for rule in [
            Rule::TooFewStates,
            Rule::DuplicateState,
            Rule::DuplicateVariable,
            Rule::UnknownParent,
            Rule::CptForUnknownVariable,
            Rule::ProbabilityRange,
        ] {
            assert!(report.has(rule), "missing {rule}: {report}");
        }
    }

    #[test]
    fn missing_and_duplicate_cpts() {
        let vars = vec![Variable::new("A", ["0", "1"]), Variable::new("B", ["0", "1"])];
        let cpts = vec![Cpt::prior("A", vec![0.5, 0.5]), Cpt::prior("A", vec![0.5, 0.5])];
        let report = validate(&vars, &cpts);
        assert!(report.has(Rule::MissingCpt));
        assert!(report.has(Rule::DuplicateCpt));
    }

    #[test]
    fn rejects_other_schema_versions() {
        let err = parse_network(r#"{"schema":2,"variables":[],"cpts":[]}"#).unwrap_err();
        assert!(matches!(err, Error::UnsupportedSchema(2)));
    }

    #[test]
    fn chain_topological_order() {
        let vars = vec![
            Variable::new("C", ["0", "1"]),
            Variable::new("B", ["0", "1"]),
            Variable::new("A", ["0", "1"]),
        ];
        let cpts = vec![
            Cpt::new("C", ["B"], vec![vec![0.5, 0.5]; 2]),
            Cpt::new("B", ["A"], vec![vec![0.5, 0.5]; 2]),
            Cpt::prior("A", vec![0.5, 0.5]),
        ];
        let net = CausalNetwork::new(vars, cpts).unwrap();
        assert_eq!(net.topological_names(), vec!["A", "B", "C"]);
    }

    #[test]
    fn cpt_row_uses_last_parent_fastest() {
        let vars = vec![
            Variable::new("P1", ["a", "b", "c"]),
            Variable::new("P2", ["u", "v"]),
            Variable::new("C", ["x", "y"]),
        ];
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 10.0, 1.0 - i as f64 / 10.0]).collect();
        let net = CausalNetwork::new(
            vars,
            vec![
                Cpt::prior("P1", vec![0.2, 0.3, 0.5]),
                Cpt::prior("P2", vec![0.5, 0.5]),
                Cpt::new("C", ["P1", "P2"], rows),
            ],
        )
        .unwrap();
        // P1=c (2), P2=u (0) -> row 4
        assert_eq!(net.cpt_row(2, &[2, 0, 0])[0], 0.4);
        assert_eq!(net.cpt_row(2, &[1, 1, 0])[0], 0.3);
    }
}
