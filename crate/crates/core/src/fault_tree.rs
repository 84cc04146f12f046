//! Static AND/OR fault trees over independent basic events.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Formula, MetricValue, Query};
use crate::model::{CausalNetwork, Cpt, Variable, SCHEMA_VERSION};

/// State labels of every variable produced by [`fault_tree_to_cbn`].
pub const OCCURS: &str = "occurs";
pub const ABSENT: &str = "absent";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasicEvent {
    pub name: String,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub kind: GateKind,
    pub inputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultTreeDocument {
    pub schema: u32,
    pub events: Vec<BasicEvent>,
    pub gates: Vec<Gate>,
    pub top: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Node {
    Event(usize),
    Gate(usize),
}

#[derive(Clone, Debug)]
pub struct FaultTree {
    events: Vec<BasicEvent>,
    gates: Vec<Gate>,
    top: usize,
    gate_inputs: Vec<Vec<Node>>,
    event_index: HashMap<String, usize>,
    /// Events reachable from the top gate, sorted by name.
    relevant: Vec<usize>,
}

impl PartialEq for FaultTree {
    fn eq(&self, other: &Self) -> bool {
        self.events == other.events && self.gates == other.gates && self.top == other.top
    }
}

impl FaultTree {
    pub fn new(events: Vec<BasicEvent>, gates: Vec<Gate>, top: &str) -> Result<Self> {
        let bad = |msg: String| Err(Error::FaultTree(msg));
        let mut names: HashMap<&str, Node> = HashMap::new();
        for (i, e) in events.iter().enumerate() {
            if e.name.is_empty() {
                return bad("basic event with empty name".into());
            }
            if !(0.0..=1.0).contains(&e.p) {
                return bad(format!("basic event `{}` has probability {} outside [0,1]", e.name, e.p));
            }
            if names.insert(&e.name, Node::Event(i)).is_some() {
                return bad(format!("name `{}` is used twice", e.name));
            }
        }
        for (i, g) in gates.iter().enumerate() {
            if g.name.is_empty() {
                return bad("gate with empty name".into());
            }
            if names.insert(&g.name, Node::Gate(i)).is_some() {
                return bad(format!("name `{}` is used twice", g.name));
            }
        }
        let mut gate_inputs = Vec::with_capacity(gates.len());
        for g in &gates {
            if g.inputs.len() < 2 {
                return bad(format!("gate `{}` has {} input(s), at least 2 required", g.name, g.inputs.len()));
            }
            let mut seen = HashSet::new();
            let mut inputs = Vec::with_capacity(g.inputs.len());
            for input in &g.inputs {
                if !seen.insert(input.as_str()) {
                    return bad(format!("gate `{}` lists input `{input}` twice", g.name));
                }
                match names.get(input.as_str()) {
                    Some(&n) => inputs.push(n),
                    None => return bad(format!("gate `{}` has unknown input `{input}`", g.name)),
                }
            }
            gate_inputs.push(inputs);
        }
        let top_idx = match names.get(top) {
            Some(Node::Gate(i)) => *i,
            Some(Node::Event(_)) => return bad(format!("top `{top}` is a basic event; the top must be a gate")),
            None => return bad(format!("top `{top}` does not exist")),
        };

        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; gates.len()];
        fn visit(g: usize, inputs: &[Vec<Node>], state: &mut [u8], gates: &[Gate]) -> Result<()> {
            match state[g] {
                1 => return Err(Error::FaultTree(format!("gate `{}` is part of a cycle", gates[g].name))),
                2 => return Ok(()),
                _ => {}
            }
            state[g] = 1;
            for n in &inputs[g] {
                if let Node::Gate(h) = n {
                    visit(*h, inputs, state, gates)?;
                }
            }
            state[g] = 2;
            Ok(())
        }
        for g in 0..gates.len() {
            visit(g, &gate_inputs, &mut state, &gates)?;
        }

        let mut relevant = BTreeSet::new();
        let mut stack = vec![top_idx];
        let mut seen_gates = HashSet::new();
        while let Some(g) = stack.pop() {
            if !seen_gates.insert(g) {
                continue;
            }
            for n in &gate_inputs[g] {
                match *n {
                    Node::Event(e) => {
                        relevant.insert((events[e].name.clone(), e));
                    }
                    Node::Gate(h) => stack.push(h),
                }
            }
        }

        Ok(FaultTree {
            event_index: events.iter().enumerate().map(|(i, e)| (e.name.clone(), i)).collect(),
            relevant: relevant.into_iter().map(|(_, e)| e).collect(),
            events,
            gates,
            top: top_idx,
            gate_inputs,
        })
    }

    pub fn from_document(doc: FaultTreeDocument) -> Result<Self> {
        if doc.schema != SCHEMA_VERSION {
            return Err(Error::UnsupportedSchema(doc.schema));
        }
        FaultTree::new(doc.events, doc.gates, &doc.top)
    }

    pub fn to_document(&self) -> FaultTreeDocument {
        FaultTreeDocument {
            schema: SCHEMA_VERSION,
            events: self.events.clone(),
            gates: self.gates.clone(),
            top: self.top_name().to_string(),
        }
    }

    pub fn events(&self) -> &[BasicEvent] {
        &self.events
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn top_name(&self) -> &str {
        &self.gates[self.top].name
    }

    fn event(&self, name: &str) -> Result<usize> {
        self.event_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::FaultTree(format!("unknown basic event `{name}`")))
    }

    /// Returns a copy with one basic-event probability changed.
    pub fn with_probability(&self, event: &str, p: f64) -> Result<FaultTree> {
        let e = self.event(event)?;
        let mut events = self.events.clone();
        events[e].p = p;
        FaultTree::new(events, self.gates.clone(), self.top_name())
    }

    /// Three-valued evaluation under a partial assignment of basic events.
    fn eval(&self, node: Node, assignment: &[Option<bool>]) -> Option<bool> {
        match node {
            Node::Event(e) => assignment[e],
            Node::Gate(g) => {
                let mut unknown = false;
                match self.gates[g].kind {
                    GateKind::And => {
                        for &n in &self.gate_inputs[g] {
                            match self.eval(n, assignment) {
                                Some(false) => return Some(false),
                                None => unknown = true,
                                Some(true) => {}
                            }
                        }
                        (!unknown).then_some(true)
                    }
                    GateKind::Or => {
                        for &n in &self.gate_inputs[g] {
                            match self.eval(n, assignment) {
                                Some(true) => return Some(true),
                                None => unknown = true,
                                Some(false) => {}
                            }
                        }
                        (!unknown).then_some(false)
                    }
                }
            }
        }
    }

    /// Whether the top event occurs for a complete assignment of basic events.
    pub fn top_occurs(&self, occurring: &[bool]) -> bool {
        let assignment: Vec<Option<bool>> = occurring.iter().map(|&b| Some(b)).collect();
        self.eval(Node::Gate(self.top), &assignment).expect("complete assignment")
    }

    fn shannon(&self, k: usize, assignment: &mut Vec<Option<bool>>) -> f64 {
        match self.eval(Node::Gate(self.top), assignment) {
            Some(true) => 1.0,
            Some(false) => 0.0,
            None => {
                let e = self.relevant[k];
                let p = self.events[e].p;
                assignment[e] = Some(true);
                let hi = if p > 0.0 { self.shannon(k + 1, assignment) } else { 0.0 };
                assignment[e] = Some(false);
                let lo = if p < 1.0 { self.shannon(k + 1, assignment) } else { 0.0 };
                assignment[e] = None;
                p * hi + (1.0 - p) * lo
            }
        }
    }
}

pub fn parse_fault_tree(text: &str) -> Result<FaultTree> {
    let doc: FaultTreeDocument = serde_json::from_str(text).map_err(Error::from_json)?;
    FaultTree::from_document(doc)
}

pub fn load_fault_tree(path: impl AsRef<Path>) -> Result<FaultTree> {
    parse_fault_tree(&std::fs::read_to_string(path)?)
}

pub fn serialize_fault_tree(tree: &FaultTree) -> String {
    serde_json::to_string_pretty(&tree.to_document()).expect("fault tree documents always serialize")
}

/// Exact top-event probability by Shannon expansion over the basic events
/// (lexicographic order). Correct for shared events as well as pure trees.
pub fn top_event_probability(tree: &FaultTree) -> f64 {
    let mut assignment = vec![None; tree.events.len()];
    tree.shannon(0, &mut assignment)
}

fn pinned_probability(tree: &FaultTree, event: &str, occurs: bool) -> Result<f64> {
    let pinned = tree.with_probability(event, if occurs { 1.0 } else { 0.0 })?;
    Ok(top_event_probability(&pinned))
}

/// Minimal cut sets by top-down (MOCUS) expansion followed by absorption.
pub fn minimal_cut_sets(tree: &FaultTree) -> Vec<BTreeSet<String>> {
    let mut pending: Vec<Vec<Node>> = vec![vec![Node::Gate(tree.top)]];
    let mut finished: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    while let Some(row) = pending.pop() {
        let Some(pos) = row.iter().position(|n| matches!(n, Node::Gate(_))) else {
            finished.insert(
                row.iter()
                    .map(|n| match n {
                        Node::Event(e) => *e,
                        Node::Gate(_) => unreachable!(),
                    })
                    .collect(),
            );
            continue;
        };
        let Node::Gate(g) = row[pos] else { unreachable!() };
        let mut rest = row.clone();
        rest.remove(pos);
        match tree.gates[g].kind {
            GateKind::And => {
                rest.extend(tree.gate_inputs[g].iter().copied());
                pending.push(rest);
            }
            GateKind::Or => {
                for &input in &tree.gate_inputs[g] {
                    let mut r = rest.clone();
                    r.push(input);
                    pending.push(r);
                }
            }
        }
    }

    let sets: Vec<BTreeSet<usize>> = finished.into_iter().collect();
    let minimal: Vec<&BTreeSet<usize>> = sets.iter().filter(|s| !sets.iter().any(|o| o != *s && o.is_subset(s))).collect();
    let mut out: Vec<BTreeSet<String>> = minimal
        .into_iter()
        .map(|s| s.iter().map(|&e| tree.events[e].name.clone()).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Birnbaum importance `P(T | e occurs) - P(T | e absent)`.
pub fn birnbaum_fta(tree: &FaultTree, event: &str) -> Result<MetricValue> {
    let top = tree.top_name();
    let hi = pinned_probability(tree, event, true)?;
    let lo = pinned_probability(tree, event, false)?;
    Ok(MetricValue::new(
        "BB",
        event,
        OCCURS,
        Formula::Difference,
        vec![
            Query::new(format!("P({top}|{event}={OCCURS})"), hi),
            Query::new(format!("P({top}|{event}={ABSENT})"), lo),
        ],
    ))
}

/// Risk reduction worth `P(T) / P(T | e absent)`; infinite when the event
/// belongs to every minimal cut set.
pub fn rrw_fta(tree: &FaultTree, event: &str) -> Result<MetricValue> {
    let top = tree.top_name();
    let base = top_event_probability(tree);
    let lo = pinned_probability(tree, event, false)?;
    Ok(MetricValue::new(
        "RRW",
        event,
        ABSENT,
        Formula::Ratio,
        vec![
            Query::new(format!("P({top})"), base),
            Query::new(format!("P({top}|{event}={ABSENT})"), lo),
        ],
    ))
}

/// Basic events become parentless binary variables with prior `(p, 1-p)`;
/// gates become deterministic binary variables over their inputs.
pub fn fault_tree_to_cbn(tree: &FaultTree) -> CausalNetwork {
    let mut variables = Vec::with_capacity(tree.events.len() + tree.gates.len());
    let mut cpts = Vec::with_capacity(variables.capacity());
    for e in &tree.events {
        variables.push(Variable::new(e.name.clone(), [OCCURS, ABSENT]));
        cpts.push(Cpt::prior(e.name.clone(), vec![e.p, 1.0 - e.p]));
    }
    for g in &tree.gates {
        variables.push(Variable::new(g.name.clone(), [OCCURS, ABSENT]));
        let k = g.inputs.len();
        let rows = (0..1usize << k)
            .map(|r| {
                // Bit (k-1-i) of r is input i's state; 0 = occurs. Last input varies fastest.
                let occurring = (0..k).filter(|i| (r >> (k - 1 - i)) & 1 == 0).count();
                let fires = match g.kind {
                    GateKind::And => occurring == k,
                    GateKind::Or => occurring > 0,
                };
                if fires {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                }
            })
            .collect();
        cpts.push(Cpt::new(g.name.clone(), g.inputs.clone(), rows));
    }
    CausalNetwork::new(variables, cpts).expect("validated fault trees convert to valid networks")
}
