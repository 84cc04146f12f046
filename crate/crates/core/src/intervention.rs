//! Interventions by graph mutilation and path-specific interventions by
//! splitting the source variable into an active and a reference copy.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{marginal, Distribution, Evidence};
use crate::model::{CausalNetwork, Cpt, Variable, NORMALIZATION_TOLERANCE};

#[derive(Clone, Debug, PartialEq)]
pub enum InterventionKind {
    /// `do(X = state)`
    Hard(String),
    /// Replace the mechanism of X by a distribution over its states.
    Stochastic(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Intervention {
    pub variable: String,
    pub kind: InterventionKind,
}

impl Intervention {
    pub fn hard(variable: impl Into<String>, state: impl Into<String>) -> Self {
        Intervention {
            variable: variable.into(),
            kind: InterventionKind::Hard(state.into()),
        }
    }

    pub fn stochastic(variable: impl Into<String>, probabilities: Vec<f64>) -> Self {
        Intervention {
            variable: variable.into(),
            kind: InterventionKind::Stochastic(probabilities),
        }
    }

    pub fn from_distribution(dist: &Distribution) -> Self {
        Intervention::stochastic(dist.variable.clone(), dist.probabilities.clone())
    }

    /// The parentless CPT row that replaces the variable's mechanism.
    pub fn row(&self, network: &CausalNetwork) -> Result<Vec<f64>> {
        let v = network.index_of(&self.variable)?;
        let card = network.cardinality(v);
        match &self.kind {
            InterventionKind::Hard(state) => {
                let (_, s) = network.state_index(&self.variable, state)?;
                let mut row = vec![0.0; card];
                row[s] = 1.0;
                Ok(row)
            }
            InterventionKind::Stochastic(p) => {
                check_distribution(&self.variable, p, card)?;
                Ok(p.clone())
            }
        }
    }
}

impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            InterventionKind::Hard(s) => write!(f, "{}={}", self.variable, s),
            InterventionKind::Stochastic(p) => {
                let parts: Vec<String> = p.iter().map(|x| format!("{x:.4}")).collect();
                write!(f, "{}~({})", self.variable, parts.join(","))
            }
        }
    }
}

fn check_distribution(variable: &str, p: &[f64], card: usize) -> Result<()> {
    let bad = |reason: String| Error::InvalidDistribution {
        variable: variable.to_string(),
        reason,
    };
    if p.len() != card {
        return Err(bad(format!("{} probabilities for {card} states", p.len())));
    }
    if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(bad("entry outside [0,1]".into()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(bad(format!("sums to {sum}")));
    }
    Ok(())
}

/// Interventions on distinct variables, applied jointly.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InterventionSet {
    items: Vec<Intervention>,
}

impl InterventionSet {
    pub fn new(items: Vec<Intervention>) -> Result<Self> {
        let mut seen = HashSet::new();
        for i in &items {
            if !seen.insert(i.variable.as_str()) {
                return Err(Error::DuplicateVariable(i.variable.clone()));
            }
        }
        Ok(InterventionSet { items })
    }

    pub fn single(intervention: Intervention) -> Self {
        InterventionSet { items: vec![intervention] }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn push(&mut self, intervention: Intervention) -> Result<()> {
        if self.contains(&intervention.variable) {
            return Err(Error::DuplicateVariable(intervention.variable));
        }
        self.items.push(intervention);
        Ok(())
    }

    pub fn contains(&self, variable: &str) -> bool {
        self.items.iter().any(|i| i.variable == variable)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Intervention> {
        self.items.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl fmt::Display for InterventionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.items.iter().map(ToString::to_string).collect();
        write!(f, "do({})", parts.join(", "))
    }
}

/// Replaces each intervened variable's CPT with a parentless one. All
/// other CPTs are left untouched.
pub fn mutilate(network: &CausalNetwork, interventions: &InterventionSet) -> Result<CausalNetwork> {
    let mut cpts = network.cpts().to_vec();
    for i in interventions.iter() {
        let v = network.index_of(&i.variable)?;
        cpts[v] = Cpt::prior(i.variable.clone(), i.row(network)?);
    }
    CausalNetwork::new(network.variables().to_vec(), cpts)
}

/// `P(target | do(interventions), evidence)` via the mutilated network.
pub fn interventional_marginal(network: &CausalNetwork, target: &str, interventions: &InterventionSet, evidence: &Evidence) -> Result<Distribution> {
    if interventions.contains(target) {
        return Err(Error::TargetFixed(target.to_string()));
    }
    marginal(&mutilate(network, interventions)?, target, evidence)
}

/// Observational marginal of `variable` with `excluded` removed and the
/// remaining mass renormalized. Realizes `do(X = not x)` as a stochastic
/// intervention.
pub fn negated_state_distribution(network: &CausalNetwork, variable: &str, excluded: &str) -> Result<Distribution> {
    let (_, s) = network.state_index(variable, excluded)?;
    let mut dist = marginal(network, variable, &Evidence::new())?;
    dist.probabilities[s] = 0.0;
    let mass: f64 = dist.probabilities.iter().sum();
    if mass <= 0.0 {
        return Err(Error::ZeroMass {
            variable: variable.to_string(),
            state: excluded.to_string(),
        });
    }
    dist.probabilities.iter_mut().for_each(|p| *p /= mass);
    Ok(dist)
}

/// A directed path given by its node sequence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CausalPath {
    nodes: Vec<String>,
}

impl CausalPath {
    pub fn new<S: Into<String>>(nodes: impl IntoIterator<Item = S>) -> Result<Self> {
        let nodes: Vec<String> = nodes.into_iter().map(Into::into).collect();
        if nodes.len() < 2 {
            return Err(Error::InvalidPath(format!("`{}` has no edge", nodes.join("->"))));
        }
        let mut seen = HashSet::new();
        if let Some(n) = nodes.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::InvalidPath(format!("`{}` visits `{n}` twice", nodes.join("->"))));
        }
        Ok(CausalPath { nodes })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn source(&self) -> &str {
        &self.nodes[0]
    }

    pub fn sink(&self) -> &str {
        self.nodes.last().expect("at least two nodes")
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.nodes.windows(2).map(|w| (w[0].as_str(), w[1].as_str()))
    }

    pub fn first_edge(&self) -> (&str, &str) {
        (&self.nodes[0], &self.nodes[1])
    }

    /// Every edge must exist in `network`.
    pub fn check(&self, network: &CausalNetwork) -> Result<()> {
        for (a, b) in self.edges() {
            let pa = network.index_of(a)?;
            let cb = network.index_of(b)?;
            if !network.parents(cb).contains(&pa) {
                return Err(Error::InvalidPath(format!("edge {a}->{b} of `{self}` is not in the network")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for CausalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.nodes.join("->"))
    }
}

impl FromStr for CausalPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CausalPath::new(s.split("->").map(str::trim))
    }
}

/// A set of directed paths sharing a source and a sink.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathSet {
    pub source: String,
    pub sink: String,
    pub paths: BTreeSet<CausalPath>,
}

impl PathSet {
    pub fn new(source: impl Into<String>, sink: impl Into<String>, paths: impl IntoIterator<Item = CausalPath>) -> Result<Self> {
        let set = PathSet {
            source: source.into(),
            sink: sink.into(),
            paths: paths.into_iter().collect(),
        };
        for p in &set.paths {
            if p.source() != set.source || p.sink() != set.sink {
                return Err(Error::InvalidPath(format!("`{p}` does not run from {} to {}", set.source, set.sink)));
            }
        }
        Ok(set)
    }

    /// Parses `A->B->C; A->D->C`. The text must contain at least one path.
    pub fn parse(text: &str) -> Result<Self> {
        let paths: Vec<CausalPath> = text
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        let first = paths.first().ok_or_else(|| Error::InvalidPath("empty path set".into()))?;
        let (source, sink) = (first.source().to_string(), first.sink().to_string());
        PathSet::new(source, sink, paths)
    }

    /// Every directed path from `source` to `sink`.
    pub fn all(network: &CausalNetwork, source: &str, sink: &str) -> Result<Self> {
        PathSet::new(source, sink, all_paths(network, source, sink)?)
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn check(&self, network: &CausalNetwork) -> Result<()> {
        network.index_of(&self.source)?;
        network.index_of(&self.sink)?;
        self.paths.iter().try_for_each(|p| p.check(network))
    }
}

impl fmt::Display for PathSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.paths.is_empty() {
            return write!(f, "{{}} ({}->{})", self.source, self.sink);
        }
        let parts: Vec<String> = self.paths.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Every directed path from `source` to `sink`, in lexicographic node order.
pub fn all_paths(network: &CausalNetwork, source: &str, sink: &str) -> Result<Vec<CausalPath>> {
    let s = network.index_of(source)?;
    let t = network.index_of(sink)?;
    let mut out = Vec::new();
    let mut stack = vec![s];
    fn walk(network: &CausalNetwork, t: usize, stack: &mut Vec<usize>, out: &mut Vec<CausalPath>) {
        let last = *stack.last().expect("non-empty");
        if last == t {
            let names = stack.iter().map(|&v| network.variable(v).name.clone());
            out.push(CausalPath::new(names).expect("DAG paths are simple"));
            return;
        }
        let mut children = network.children(last).to_vec();
        children.sort_by(|a, b| network.variable(*a).name.cmp(&network.variable(*b).name));
        for c in children {
            stack.push(c);
            walk(network, t, stack, out);
            stack.pop();
        }
    }
    if s != t {
        walk(network, t, &mut stack, &mut out);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Identifiability {
    pub identifiable: bool,
    /// First edges shared by a path in the set and a path outside it.
    pub offending_edges: Vec<(String, String)>,
    pub diagnostic: String,
}

/// Path-specific effects of a DAG without latent confounders are computable
/// when no excluded source-to-sink path starts with the same edge as an
/// included one.
pub fn check_path_identifiability(network: &CausalNetwork, pathset: &PathSet) -> Result<Identifiability> {
    pathset.check(network)?;
    let included_first: BTreeSet<(&str, &str)> = pathset.paths.iter().map(CausalPath::first_edge).collect();
    let all = all_paths(network, &pathset.source, &pathset.sink)?;
    let mut offending: BTreeSet<(String, String)> = BTreeSet::new();
    let mut excluded_witness = Vec::new();
    for p in all.iter().filter(|p| !pathset.paths.contains(p)) {
        let fe = p.first_edge();
        if included_first.contains(&fe) {
            offending.insert((fe.0.to_string(), fe.1.to_string()));
            excluded_witness.push(p.to_string());
        }
    }
    let identifiable = offending.is_empty();
    let diagnostic = if identifiable {
        format!(
            "identifiable: {} of {} paths selected, no first edge shared with an excluded path",
            pathset.paths.len(),
            all.len()
        )
    } else {
        format!(
            "not identifiable: excluded path(s) {} share first edge(s) {}",
            excluded_witness.join(", "),
            offending.iter().map(|(a, b)| format!("{a}->{b}")).collect::<Vec<_>>().join(", ")
        )
    };
    Ok(Identifiability {
        identifiable,
        offending_edges: offending.into_iter().collect(),
        diagnostic,
    })
}

/// Comparative value for the reference copy of a split variable.
#[derive(Clone, Debug, PartialEq)]
pub enum Reference {
    State(String),
    Distribution(Vec<f64>),
}

impl Reference {
    pub fn intervention(&self, variable: &str) -> Intervention {
        match self {
            Reference::State(s) => Intervention::hard(variable, s.clone()),
            Reference::Distribution(p) => Intervention::stochastic(variable, p.clone()),
        }
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::State(s) => f.write_str(s),
            Reference::Distribution(p) => {
                let parts: Vec<String> = p.iter().map(|x| format!("{x:.4}")).collect();
                write!(f, "({})", parts.join(","))
            }
        }
    }
}

pub fn active_copy_name(variable: &str) -> String {
    format!("{variable}[active]")
}

pub fn reference_copy_name(variable: &str) -> String {
    format!("{variable}[reference]")
}

/// Builds the network for `do_pi(X = (active, reference))`: the source is
/// replaced by an active copy fixed to `active_state` and a reference copy
/// carrying `reference`. Each out-edge of the source is routed to the active
/// copy exactly when it is the first edge of some path in the set.
pub fn split_for_paths(network: &CausalNetwork, pathset: &PathSet, active_state: &str, reference: &Reference) -> Result<CausalNetwork> {
    let check = check_path_identifiability(network, pathset)?;
    if !check.identifiable {
        return Err(Error::Unidentifiable(check.diagnostic));
    }
    let x = network.index_of(&pathset.source)?;
    let source = network.variable(x);
    let active_row = Intervention::hard(&source.name, active_state).row(network)?;
    let reference_row = reference.intervention(&source.name).row(network)?;

    let active_name = active_copy_name(&source.name);
    let reference_name = reference_copy_name(&source.name);
    for name in [&active_name, &reference_name] {
        if network.index_of(name).is_ok() {
            return Err(Error::DuplicateVariable(name.clone()));
        }
    }
    let routed_active: HashSet<&str> = pathset.paths.iter().map(|p| p.first_edge().1).collect();

    let mut variables = Vec::with_capacity(network.len() + 1);
    let mut cpts = Vec::with_capacity(network.len() + 1);
    for (v, var) in network.variables().iter().enumerate() {
        if v == x {
            variables.push(Variable::new(active_name.clone(), source.states.clone()));
            variables.push(Variable::new(reference_name.clone(), source.states.clone()));
            cpts.push(Cpt::prior(active_name.clone(), active_row.clone()));
            cpts.push(Cpt::prior(reference_name.clone(), reference_row.clone()));
            continue;
        }
        let mut cpt = network.cpt(v).clone();
        for p in &mut cpt.parents {
            if *p == source.name {
                *p = if routed_active.contains(var.name.as_str()) {
                    active_name.clone()
                } else {
                    reference_name.clone()
                };
            }
        }
        variables.push(var.clone());
        cpts.push(cpt);
    }
    CausalNetwork::new(variables, cpts)
}

/// `P(target | do_pi(X = (active, reference)))`.
pub fn path_specific_marginal(
    network: &CausalNetwork,
    target: &str,
    pathset: &PathSet,
    active_state: &str,
    reference: &Reference,
) -> Result<Distribution> {
    if target == pathset.source {
        return Err(Error::TargetFixed(target.to_string()));
    }
    marginal(&split_for_paths(network, pathset, active_state, reference)?, target, &Evidence::new())
}
