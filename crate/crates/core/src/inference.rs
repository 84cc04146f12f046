//! Associational queries: exact inference by variable elimination, a
//! brute-force enumeration oracle, ancestral sampling and maximum-likelihood
//! CPT fitting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CausalNetwork, Cpt};

/// Name of the pseudo-random generator behind [`forward_sample`]. Sample
/// sets are reproducible for a given seed as long as this does not change.
pub const SAMPLER_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3), seeded via seed_from_u64";

pub const DEFAULT_LAPLACE_ALPHA: f64 = 1.0;

/// Hard evidence: variable name to observed state label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    assignments: BTreeMap<String, String>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an observation. A variable may only be observed once.
    pub fn observe(mut self, variable: impl Into<String>, state: impl Into<String>) -> Result<Self> {
        self.insert(variable, state)?;
        Ok(self)
    }

    pub fn insert(&mut self, variable: impl Into<String>, state: impl Into<String>) -> Result<()> {
        let variable = variable.into();
        if self.assignments.contains_key(&variable) {
            return Err(Error::DuplicateVariable(variable));
        }
        self.assignments.insert(variable, state.into());
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn contains(&self, variable: &str) -> bool {
        self.assignments.contains_key(variable)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignments.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Resolves names against a network into `(variable, state)` indices.
    pub fn resolve(&self, network: &CausalNetwork) -> Result<Vec<(usize, usize)>> {
        self.assignments.iter().map(|(v, s)| network.state_index(v, s)).collect()
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.assignments.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(", "))
    }
}

/// Probability distribution over the states of one variable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution {
    pub variable: String,
    pub states: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl Distribution {
    pub fn new(network: &CausalNetwork, variable: usize, probabilities: Vec<f64>) -> Self {
        let v = network.variable(variable);
        Distribution {
            variable: v.name.clone(),
            states: v.states.clone(),
            probabilities,
        }
    }

    pub fn probability(&self, state: &str) -> Result<f64> {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|i| self.probabilities[i])
            .ok_or_else(|| Error::UnknownState {
                variable: self.variable.clone(),
                state: state.to_string(),
            })
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.variable)?;
        for (s, p) in self.states.iter().zip(&self.probabilities) {
            writeln!(f, "  {s:<12} {p:.10}")?;
        }
        Ok(())
    }
}

/// Dense non-negative table over the joint states of `scope`.
/// The last scope variable varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    scope: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(scope.len(), cards.len());
        assert_eq!(values.len(), cards.iter().product::<usize>());
        Factor { scope, cards, values }
    }

    /// The CPT of `var` as a factor over (parents..., var).
    pub fn from_cpt(network: &CausalNetwork, var: usize) -> Self {
        let mut scope = network.parents(var).to_vec();
        scope.push(var);
        let cards = scope.iter().map(|&v| network.cardinality(v)).collect();
        let values = network.cpt(var).rows.iter().flatten().copied().collect();
        Factor::new(scope, cards, values)
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.scope.len()];
        for k in (0..self.scope.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.cards[k + 1];
        }
        strides
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (&v, &c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(&v) {
                scope.push(v);
                cards.push(c);
            }
        }
        let self_strides = self.strides();
        let other_strides = other.strides();
        // Stride of each result dimension inside each operand (0 when absent).
        let map = |f: &Factor, strides: &[usize]| -> Vec<usize> {
            scope
                .iter()
                .map(|v| f.scope.iter().position(|x| x == v).map_or(0, |k| strides[k]))
                .collect()
        };
        let a_map = map(self, &self_strides);
        let b_map = map(other, &other_strides);

        let total: usize = cards.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut counter = vec![0usize; scope.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..total {
            values.push(self.values[ia] * other.values[ib]);
            for k in (0..scope.len()).rev() {
                counter[k] += 1;
                ia += a_map[k];
                ib += b_map[k];
                if counter[k] < cards[k] {
                    break;
                }
                ia -= a_map[k] * cards[k];
                ib -= b_map[k] * cards[k];
                counter[k] = 0;
            }
        }
        Factor { scope, cards, values }
    }

    pub fn sum_out(&self, var: usize) -> Factor {
        let Some(k) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let strides = self.strides();
        let card = self.cards[k];
        let outer: usize = self.cards[..k].iter().product();
        let inner = strides[k];
        let mut values = vec![0.0; outer * inner];
        for o in 0..outer {
            for s in 0..card {
                let base = o * card * inner + s * inner;
                for i in 0..inner {
                    values[o * inner + i] += self.values[base + i];
                }
            }
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(k);
        cards.remove(k);
        Factor { scope, cards, values }
    }

    /// Restricts the factor to `var = state`, dropping `var` from the scope.
    pub fn reduce(&self, var: usize, state: usize) -> Factor {
        let Some(k) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let strides = self.strides();
        let card = self.cards[k];
        let outer: usize = self.cards[..k].iter().product();
        let inner = strides[k];
        let mut values = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = o * card * inner + state * inner;
            values.extend_from_slice(&self.values[base..base + inner]);
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(k);
        cards.remove(k);
        Factor { scope, cards, values }
    }
}

/// Full assignment of states to every variable, keyed by name.
pub type Assignment = BTreeMap<String, String>;

/// Product over all variables of the CPT entry selected by `assignment`.
pub fn joint_probability(network: &CausalNetwork, assignment: &Assignment) -> Result<f64> {
    let mut states = vec![0usize; network.len()];
    for (i, var) in network.variables().iter().enumerate() {
        let label = assignment.get(&var.name).ok_or_else(|| Error::IncompleteAssignment(var.name.clone()))?;
        states[i] = network.state_index(&var.name, label)?.1;
    }
    for name in assignment.keys() {
        network.index_of(name)?;
    }
    Ok(joint_probability_indexed(network, &states))
}

pub(crate) fn joint_probability_indexed(network: &CausalNetwork, states: &[usize]) -> f64 {
    (0..network.len()).map(|v| network.cpt_row(v, states)[states[v]]).product()
}

fn check_query(network: &CausalNetwork, target: &str, evidence: &Evidence) -> Result<(usize, Vec<(usize, usize)>)> {
    let t = network.index_of(target)?;
    if evidence.contains(target) {
        return Err(Error::TargetFixed(target.to_string()));
    }
    Ok((t, evidence.resolve(network)?))
}

fn normalize(network: &CausalNetwork, target: usize, unnormalized: Vec<f64>) -> Result<Distribution> {
    let total: f64 = unnormalized.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityEvidence);
    }
    Ok(Distribution::new(network, target, unnormalized.into_iter().map(|x| x / total).collect()))
}

/// Exact `P(target | evidence)` by variable elimination with a min-fill order.
pub fn marginal(network: &CausalNetwork, target: &str, evidence: &Evidence) -> Result<Distribution> {
    let (t, observed) = check_query(network, target, evidence)?;
    let factors = reduced_factors(network, t, &observed);
    let order = min_fill_order(network, &factors, t);
    eliminate(network, t, factors, &order)
}

/// Variable elimination with a caller-supplied order. The order must list
/// every variable that is neither the target nor observed.
pub fn marginal_with_order(network: &CausalNetwork, target: &str, evidence: &Evidence, order: &[String]) -> Result<Distribution> {
    let (t, observed) = check_query(network, target, evidence)?;
    let order: Vec<usize> = order.iter().map(|n| network.index_of(n)).collect::<Result<_>>()?;
    let factors = reduced_factors(network, t, &observed);
    let needed: BTreeSet<usize> = factors.iter().flat_map(|f| f.scope.iter().copied()).filter(|&v| v != t).collect();
    let given: BTreeSet<usize> = order.iter().copied().collect();
    if let Some(&missing) = needed.difference(&given).next() {
        return Err(Error::IncompleteAssignment(network.variable(missing).name.clone()));
    }
    let order: Vec<usize> = order.into_iter().filter(|v| needed.contains(v)).collect();
    eliminate(network, t, factors, &order)
}

/// CPT factors reduced by the evidence. Variables that are neither the
/// target, observed, nor an ancestor of either sum out to one and are dropped.
fn reduced_factors(network: &CausalNetwork, target: usize, observed: &[(usize, usize)]) -> Vec<Factor> {
    let mut relevant = vec![false; network.len()];
    let mut stack: Vec<usize> = std::iter::once(target).chain(observed.iter().map(|&(v, _)| v)).collect();
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut relevant[v], true) {
            stack.extend(network.parents(v).iter().copied());
        }
    }
    (0..network.len())
        .filter(|&v| relevant[v])
        .map(|v| {
            observed
                .iter()
                .fold(Factor::from_cpt(network, v), |f, &(var, state)| f.reduce(var, state))
        })
        .collect()
}

fn eliminate(network: &CausalNetwork, target: usize, mut factors: Vec<Factor>, order: &[usize]) -> Result<Distribution> {
    for &var in order {
        let (touching, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.scope.contains(&var));
        factors = rest;
        if let Some(product) = touching.into_iter().reduce(|a, b| a.product(&b)) {
            factors.push(product.sum_out(var));
        }
    }
    let card = network.cardinality(target);
    let mut result = Factor::new(vec![target], vec![card], vec![1.0; card]);
    for f in &factors {
        result = result.product(f);
    }
    debug_assert_eq!(result.scope, vec![target]);
    normalize(network, target, result.values)
}

/// Greedy min-fill elimination order over all non-target variables that
/// appear in `factors`; ties are broken by variable name.
fn min_fill_order(network: &CausalNetwork, factors: &[Factor], target: usize) -> Vec<usize> {
    let mut neighbors: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for f in factors {
        for &a in &f.scope {
            let entry = neighbors.entry(a).or_default();
            entry.extend(f.scope.iter().copied().filter(|&b| b != a));
        }
    }
    neighbors.remove(&target);
    for adj in neighbors.values_mut() {
        adj.remove(&target);
    }

    let mut order = Vec::with_capacity(neighbors.len());
    while !neighbors.is_empty() {
        let (&best, _) = neighbors
            .iter()
            .min_by_key(|(&v, adj)| {
                let adj: Vec<usize> = adj.iter().copied().collect();
                let mut fill = 0usize;
                for i in 0..adj.len() {
                    for j in i + 1..adj.len() {
                        if !neighbors[&adj[i]].contains(&adj[j]) {
                            fill += 1;
                        }
                    }
                }
                (fill, network.variable(v).name.as_str())
            })
            .expect("non-empty");
        let adj = neighbors.remove(&best).unwrap_or_default();
        for &a in &adj {
            let entry = neighbors.get_mut(&a).expect("symmetric adjacency");
            entry.remove(&best);
            entry.extend(adj.iter().copied().filter(|&b| b != a));
        }
        order.push(best);
    }
    order
}

/// `P(target | evidence)` by summing the joint over every full assignment.
/// Exponential in the number of variables; used as an oracle.
pub fn enumerate_marginal(network: &CausalNetwork, target: &str, evidence: &Evidence) -> Result<Distribution> {
    let (t, observed) = check_query(network, target, evidence)?;
    let mut sums = vec![0.0; network.cardinality(t)];
    for_each_assignment(network, |states| {
        if observed.iter().all(|&(v, s)| states[v] == s) {
            sums[states[t]] += joint_probability_indexed(network, states);
        }
    });
    normalize(network, t, sums)
}

/// Calls `f` with every full state assignment (indexed by variable).
pub(crate) fn for_each_assignment(network: &CausalNetwork, mut f: impl FnMut(&[usize])) {
    let cards: Vec<usize> = (0..network.len()).map(|v| network.cardinality(v)).collect();
    let mut states = vec![0usize; cards.len()];
    loop {
        f(&states);
        let mut k = cards.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            states[k] += 1;
            if states[k] < cards[k] {
                break;
            }
            states[k] = 0;
        }
    }
}

/// Complete samples of every variable, columns in topological order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    columns: Vec<String>,
    states: Vec<Vec<String>>,
    data: Vec<u32>,
    seed: Option<u64>,
}

impl SampleSet {
    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        if self.columns.is_empty() {
            0
        } else {
            self.data.len() / self.columns.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let w = self.columns.len();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn label(&self, row: usize, column: usize) -> &str {
        &self.states[column][self.row(row)[column] as usize]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Relative frequency of each state of `variable`.
    pub fn empirical_marginal(&self, variable: &str) -> Result<Vec<f64>> {
        let c = self.column_index(variable).ok_or_else(|| Error::UnknownVariable(variable.to_string()))?;
        let mut counts = vec![0usize; self.states[c].len()];
        for i in 0..self.len() {
            counts[self.row(i)[c] as usize] += 1;
        }
        let n = self.len().max(1) as f64;
        Ok(counts.into_iter().map(|k| k as f64 / n).collect())
    }

    /// An empty sample set with the columns of `network`.
    pub fn empty(network: &CausalNetwork) -> Self {
        let order = network.topological_order();
        SampleSet {
            columns: order.iter().map(|&v| network.variable(v).name.clone()).collect(),
            states: order.iter().map(|&v| network.variable(v).states.clone()).collect(),
            data: Vec::new(),
            seed: None,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.columns)?;
        for i in 0..self.len() {
            w.write_record((0..self.columns.len()).map(|c| self.label(i, c)))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV whose header names variables of `network` and whose cells
    /// are state labels. Column order is free.
    pub fn read_csv<R: Read>(reader: R, network: &CausalNetwork) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let vars: Vec<usize> = columns.iter().map(|c| network.index_of(c)).collect::<Result<_>>()?;
        let states: Vec<Vec<String>> = vars.iter().map(|&v| network.variable(v).states.clone()).collect();
        let mut data = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            if record.len() != columns.len() {
                return Err(Error::Samples(format!(
                    "row {} has {} cells, expected {}",
                    line + 1,
                    record.len(),
                    columns.len()
                )));
            }
            for (c, cell) in record.iter().enumerate() {
                let s = states[c].iter().position(|s| s == cell).ok_or_else(|| Error::UnknownState {
                    variable: columns[c].clone(),
                    state: cell.to_string(),
                })?;
                data.push(s as u32);
            }
        }
        Ok(SampleSet {
            columns,
            states,
            data,
            seed: None,
        })
    }
}

/// Draws `n` i.i.d. ancestral samples. Deterministic for a fixed seed.
pub fn forward_sample(network: &CausalNetwork, n: usize, seed: u64) -> SampleSet {
    let order = network.topological_order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = vec![0usize; network.len()];
    let mut data = Vec::with_capacity(n * order.len());
    for _ in 0..n {
        for &v in &order {
            let row = network.cpt_row(v, &states);
            states[v] = draw(row, rng.gen::<f64>());
        }
        data.extend(order.iter().map(|&v| states[v] as u32));
    }
    let mut set = SampleSet::empty(network);
    set.data = data;
    set.seed = Some(seed);
    set
}

fn draw(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left u above the cumulative sum: take the last state with mass.
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

/// A CPT row that had no supporting samples and no smoothing; it was set uniform.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnsupportedRow {
    pub variable: String,
    pub row: usize,
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub network: CausalNetwork,
    pub unsupported: Vec<UnsupportedRow>,
}

/// Maximum-likelihood CPTs with additive (Laplace) smoothing:
/// `(count + alpha) / (row_total + alpha * |states|)`.
pub fn fit_cpts(structure: &CausalNetwork, data: &SampleSet, laplace_alpha: f64) -> Result<FitOutcome> {
    if !(laplace_alpha >= 0.0 && laplace_alpha.is_finite()) {
        return Err(Error::Samples(format!(
            "smoothing parameter {laplace_alpha} must be a finite non-negative number"
        )));
    }
    let column_of: Vec<usize> = structure
        .variables()
        .iter()
        .map(|v| {
            data.column_index(&v.name)
                .ok_or_else(|| Error::Samples(format!("no column for variable `{}`", v.name)))
        })
        .collect::<Result<_>>()?;
    for (v, &c) in column_of.iter().enumerate() {
        if data.states[c] != structure.variable(v).states {
            return Err(Error::Samples(format!(
                "state labels of column `{}` differ from the network",
                data.columns[c]
            )));
        }
    }

    let mut counts: Vec<Vec<Vec<f64>>> = structure
        .cpts()
        .iter()
        .enumerate()
        .map(|(v, cpt)| vec![vec![0.0; structure.cardinality(v)]; cpt.rows.len()])
        .collect();
    let mut states = vec![0usize; structure.len()];
    for i in 0..data.len() {
        let row = data.row(i);
        for (v, &c) in column_of.iter().enumerate() {
            states[v] = row[c] as usize;
        }
        for v in 0..structure.len() {
            let r: usize = structure
                .parents(v)
                .iter()
                .zip(structure.parent_strides(v))
                .map(|(&p, &stride)| states[p] * stride)
                .sum();
            counts[v][r][states[v]] += 1.0;
        }
    }

    let mut unsupported = Vec::new();
    let cpts = structure
        .cpts()
        .iter()
        .zip(counts)
        .map(|(cpt, table)| {
            let rows = table
                .into_iter()
                .enumerate()
                .map(|(r, row)| {
                    let k = row.len() as f64;
                    let total: f64 = row.iter().sum::<f64>() + laplace_alpha * k;
                    if total == 0.0 {
                        unsupported.push(UnsupportedRow {
                            variable: cpt.child.clone(),
                            row: r,
                        });
                        vec![1.0 / k; row.len()]
                    } else {
                        row.into_iter().map(|c| (c + laplace_alpha) / total).collect()
                    }
                })
                .collect();
            Cpt::new(cpt.child.clone(), cpt.parents.clone(), rows)
        })
        .collect();

    Ok(FitOutcome {
        network: CausalNetwork::new(structure.variables().to_vec(), cpts)?,
        unsupported,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::model::Variable;

    fn chain() -> CausalNetwork {
        CausalNetwork::new(
            vec![
                Variable::new("A", ["0", "1"]),
                Variable::new("B", ["0", "1"]),
                Variable::new("C", ["0", "1", "2"]),
            ],
            vec![
                Cpt::prior("A", vec![0.3, 0.7]),
                Cpt::new("B", ["A"], vec![vec![0.9, 0.1], vec![0.2, 0.8]]),
                Cpt::new("C", ["B"], vec![vec![0.1, 0.2, 0.7], vec![0.5, 0.25, 0.25]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn joint_probability_of_confounding_assignment() {
        let net = bundled::confounding();
        let a: Assignment = [("Weather", "sun"), ("Luminance", "low"), ("Perception", "FN")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let p = joint_probability(&net, &a).unwrap();
        assert!((p - 0.6 * 0.05 * 0.04).abs() < 1e-15);
    }

    #[test]
    fn joint_probability_rejects_incomplete_assignment() {
        let net = bundled::confounding();
        let a: Assignment = [("Weather".to_string(), "sun".to_string())].into_iter().collect();
        assert!(matches!(joint_probability(&net, &a), Err(Error::IncompleteAssignment(_))));
    }

    #[test]
    fn joint_sums_to_one() {
        let net = bundled::perception();
        let mut total = 0.0;
        for_each_assignment(&net, |s| total += joint_probability_indexed(&net, s));
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn confounding_fn_rate() {
        let net = bundled::confounding();
        let d = marginal(&net, "Perception", &Evidence::new()).unwrap();
        // Enumeration over the 3x3x2 joint gives 0.05505.
        assert!((d.probability("FN").unwrap() - 0.05505).abs() < 1e-12);
    }

    #[test]
    fn fusion_is_tp_when_both_sensors_detect() {
        let net = bundled::perception();
        let ev = Evidence::new().observe("Sen1", "TP").unwrap().observe("Sen2", "TP").unwrap();
        let d = marginal(&net, "Fusion", &ev).unwrap();
        assert_eq!(d.probability("FN").unwrap(), 0.0);
    }

    #[test]
    fn root_marginal_is_prior_row() {
        let net = bundled::perception();
        let d = marginal(&net, "TrafficDensity", &Evidence::new()).unwrap();
        assert_eq!(d.probabilities, vec![0.4, 0.3, 0.3]);
    }

    #[test]
    fn contradictory_evidence_is_an_error() {
        let net = bundled::perception();
        // Fusion=FN is impossible when both sensors detect.
        let ev = Evidence::new()
            .observe("Sen1", "TP")
            .unwrap()
            .observe("Sen2", "TP")
            .unwrap()
            .observe("Fusion", "FN")
            .unwrap();
        assert!(matches!(marginal(&net, "Occlusion", &ev), Err(Error::ZeroProbabilityEvidence)));
        assert!(matches!(enumerate_marginal(&net, "Occlusion", &ev), Err(Error::ZeroProbabilityEvidence)));
    }

    #[test]
    fn target_in_evidence_is_rejected() {
        let net = chain();
        let ev = Evidence::new().observe("B", "0").unwrap();
        assert!(matches!(marginal(&net, "B", &ev), Err(Error::TargetFixed(_))));
    }

    #[test]
    fn duplicate_evidence_is_rejected() {
        let ev = Evidence::new().observe("A", "0").unwrap();
        assert!(matches!(ev.observe("A", "1"), Err(Error::DuplicateVariable(_))));
    }

    #[test]
    fn chain_posterior_matches_hand_computation() {
        let net = chain();
        let ev = Evidence::new().observe("C", "2").unwrap();
        let d = marginal(&net, "A", &ev).unwrap();
        // P(C=2|A=0) = 0.9*0.7 + 0.1*0.25 = 0.655; P(C=2|A=1) = 0.2*0.7 + 0.8*0.25 = 0.34
        let num0 = 0.3 * 0.655;
        let num1 = 0.7 * 0.34;
        assert!((d.probabilities[0] - num0 / (num0 + num1)).abs() < 1e-12);
    }

    #[test]
    fn direction_agnostic_conditioning() {
        let net = chain();
        let forward = marginal(&net, "B", &Evidence::new().observe("A", "1").unwrap()).unwrap();
        let backward = marginal(&net, "A", &Evidence::new().observe("B", "1").unwrap()).unwrap();
        let prior_b = marginal(&net, "B", &Evidence::new()).unwrap();
        assert_ne!(forward.probabilities, prior_b.probabilities);
        assert_ne!(backward.probabilities, vec![0.3, 0.7]);
        // Bayes: P(A=1|B=1) P(B=1) = P(B=1|A=1) P(A=1)
        let lhs = backward.probabilities[1] * prior_b.probabilities[1];
        let rhs = forward.probabilities[1] * 0.7;
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn factor_sum_out_and_reduce() {
        let f = Factor::new(vec![0, 1], vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(f.sum_out(0).values(), &[5.0, 7.0, 9.0]);
        assert_eq!(f.sum_out(1).values(), &[6.0, 15.0]);
        assert_eq!(f.reduce(1, 2).values(), &[3.0, 6.0]);
        assert_eq!(f.reduce(0, 1).values(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn factor_product_aligns_scopes() {
        let a = Factor::new(vec![0], vec![2], vec![0.5, 2.0]);
        let b = Factor::new(vec![1, 0], vec![3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let p = a.product(&b);
        assert_eq!(p.scope(), &[0, 1]);
        // p[a, b] = a[a] * b[b, a]
        assert_eq!(p.values(), &[0.5, 1.5, 2.5, 4.0, 8.0, 12.0]);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let net = bundled::confounding();
        let a = forward_sample(&net, 500, 11);
        let b = forward_sample(&net, 500, 11);
        let c = forward_sample(&net, 500, 12);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.columns(), &["Weather", "Luminance", "Perception"]);
    }

    #[test]
    fn point_mass_network_samples_identical_rows() {
        let net = CausalNetwork::new(
            vec![Variable::new("A", ["0", "1"]), Variable::new("B", ["0", "1"])],
            vec![
                Cpt::prior("A", vec![0.0, 1.0]),
                Cpt::new("B", ["A"], vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
            ],
        )
        .unwrap();
        let s = forward_sample(&net, 100, 3);
        assert!((0..s.len()).all(|i| s.row(i) == [1, 0]));
    }

    #[test]
    fn csv_round_trip() {
        let net = bundled::perception();
        let s = forward_sample(&net, 50, 5);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("ObjectDistance,ObjectSize,TrafficDensity,Occlusion,Sen1,Sen2,Fusion"));
        let back = SampleSet::read_csv(&buf[..], &net).unwrap();
        assert_eq!(back.len(), 50);
        assert_eq!(back.data, s.data);
    }

    #[test]
    fn csv_rejects_unknown_label() {
        let net = chain();
        let err = SampleSet::read_csv("A,B,C\n0,1,7\n".as_bytes(), &net).unwrap_err();
        assert!(matches!(err, Error::UnknownState { .. }));
    }

    #[test]
    fn fit_with_empty_data_is_uniform_prior() {
        let net = bundled::perception();
        let out = fit_cpts(&net, &SampleSet::empty(&net), 1.0).unwrap();
        assert!(out.unsupported.is_empty());
        for (v, cpt) in out.network.cpts().iter().enumerate() {
            let k = net.cardinality(v) as f64;
            assert!(cpt.rows.iter().flatten().all(|&x| (x - 1.0 / k).abs() < 1e-15));
        }
    }

    #[test]
    fn fit_without_smoothing_reports_unsupported_rows() {
        let net = chain();
        let mut data = SampleSet::empty(&net);
        // A=0,B=0,C=0 only: B's row for A=1 and C's row for B=1 have no support.
        data.data = vec![0, 0, 0, 0, 0, 0];
        let out = fit_cpts(&net, &data, 0.0).unwrap();
        assert_eq!(
            out.unsupported,
            vec![
                UnsupportedRow {
                    variable: "B".into(),
                    row: 1
                },
                UnsupportedRow {
                    variable: "C".into(),
                    row: 1
                }
            ]
        );
        assert_eq!(out.network.cpt(1).rows[1], vec![0.5, 0.5]);
        assert_eq!(out.network.cpt(0).rows[0], vec![1.0, 0.0]);
    }

    #[test]
    fn fit_recovers_point_mass() {
        let net = CausalNetwork::new(
            vec![Variable::new("A", ["0", "1"]), Variable::new("B", ["x", "y", "z"])],
            vec![
                Cpt::prior("A", vec![0.5, 0.5]),
                Cpt::new("B", ["A"], vec![vec![0.0, 1.0, 0.0], vec![0.2, 0.3, 0.5]]),
            ],
        )
        .unwrap();
        let data = forward_sample(&net, 10_000, 21);
        let out = fit_cpts(&net, &data, 0.1).unwrap();
        assert!(out.network.cpt(1).rows[0][1] >= 0.99);
    }

    #[test]
    fn fit_rejects_negative_alpha() {
        let net = chain();
        assert!(fit_cpts(&net, &SampleSet::empty(&net), -1.0).is_err());
    }
}
