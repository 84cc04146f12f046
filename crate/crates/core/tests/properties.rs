use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cbn_safety::bundled;
use cbn_safety::fault_tree::{fault_tree_to_cbn, minimal_cut_sets, top_event_probability, BasicEvent, FaultTree, Gate, GateKind, OCCURS};
use cbn_safety::inference::{enumerate_marginal, joint_probability, marginal, marginal_with_order, Evidence};
use cbn_safety::intervention::{interventional_marginal, Intervention, InterventionSet};
use cbn_safety::metrics::{birnbaum_cbn, rrw, Mode, ReferenceAssignment, SoftEvidenceMode, TargetEvent};
use cbn_safety::model::{parse_network, serialize_network, CausalNetwork, Cpt, Variable};
use cbn_safety::reproduce::random_queries;

fn random_row(rng: &mut ChaCha8Rng, card: usize) -> Vec<f64> {
    // Occasional zeros exercise impossible-evidence paths.
    let w: Vec<f64> = (0..card)
        .map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.01..1.0) })
        .collect();
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        let mut w = vec![0.0; card];
        w[0] = 1.0;
        return w;
    }
    w.iter().map(|x| x / total).collect()
}

/// Random DAG over `V0..Vn` with edges only from lower to higher index,
/// declared in shuffled order.
fn random_network(seed: u64) -> CausalNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=3)).collect();
    let mut variables = Vec::new();
    let mut cpts = Vec::new();
    for i in 0..n {
        let states: Vec<String> = (0..cards[i]).map(|s| format!("s{s}")).collect();
        variables.push(Variable::new(format!("V{i}"), states));
        let parents: Vec<usize> = (0..i).filter(|_| rng.gen_bool(0.45)).take(3).collect();
        let rows_n: usize = parents.iter().map(|&p| cards[p]).product();
        let rows = (0..rows_n).map(|_| random_row(&mut rng, cards[i])).collect();
        cpts.push(Cpt::new(format!("V{i}"), parents.iter().map(|p| format!("V{p}")), rows));
    }
    variables.shuffle(&mut rng);
    cpts.shuffle(&mut rng);
    CausalNetwork::new(variables, cpts).expect("generated network is valid")
}

/// Random coherent fault tree; events may feed several gates.
fn random_fault_tree(seed: u64) -> FaultTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=7);
    let events: Vec<BasicEvent> = (0..n)
        .map(|i| BasicEvent {
            name: format!("e{i}"),
            p: if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..1.0) },
        })
        .collect();
    let mut pool: Vec<String> = events.iter().map(|e| e.name.clone()).collect();
    let mut gates = Vec::new();
    while pool.len() > 1 {
        let k = rng.gen_range(2..=3.min(pool.len()));
        pool.shuffle(&mut rng);
        let inputs: Vec<String> = pool.drain(..k).collect();
        // Keep one input around sometimes so events repeat across gates.
        if rng.gen_bool(0.3) && pool.len() > 1 {
            pool.push(inputs[0].clone());
        }
        let name = format!("g{}", gates.len());
        gates.push(Gate {
            name: name.clone(),
            kind: if rng.gen_bool(0.5) { GateKind::And } else { GateKind::Or },
            inputs,
        });
        pool.push(name);
    }
    let top = gates.last().expect("at least one gate").name.clone();
    FaultTree::new(events, gates, &top).expect("generated tree is valid")
}

fn brute_force_top(tree: &FaultTree) -> f64 {
    let events = tree.events();
    (0..1u32 << events.len())
        .map(|mask| {
            let occurring: Vec<bool> = (0..events.len()).map(|i| mask >> i & 1 == 1).collect();
            if !tree.top_occurs(&occurring) {
                return 0.0;
            }
            events.iter().zip(&occurring).map(|(e, &o)| if o { e.p } else { 1.0 - e.p }).product()
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn elimination_matches_enumeration(seed in any::<u64>()) {
        let net = random_network(seed);
        for (target, ev) in random_queries(&net, 10, seed) {
            match (marginal(&net, &target, &ev), enumerate_marginal(&net, &target, &ev)) {
                (Ok(a), Ok(b)) => {
                    for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
                        prop_assert!((x - y).abs() < 1e-9, "{target} | {ev}: {x} vs {y}");
                    }
                    prop_assert!((a.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{target} | {ev}: {:?} vs {:?}", a.err(), b.err()),
            }
        }
    }

    #[test]
    fn elimination_order_does_not_matter(seed in any::<u64>(), shuffle_seed in any::<u64>()) {
        let net = random_network(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        for (target, ev) in random_queries(&net, 5, seed) {
            let Ok(reference) = marginal(&net, &target, &ev) else { continue };
            let mut order: Vec<String> = net
                .variables()
                .iter()
                .map(|v| v.name.clone())
                .filter(|n| *n != target && !ev.contains(n))
                .collect();
            order.shuffle(&mut rng);
            let other = marginal_with_order(&net, &target, &ev, &order).unwrap();
            for (x, y) in reference.probabilities.iter().zip(&other.probabilities) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn serialization_round_trips(seed in any::<u64>()) {
        let net = random_network(seed);
        let text = serialize_network(&net, BTreeMap::new());
        prop_assert_eq!(parse_network(&text).unwrap(), net);
    }

    #[test]
    fn topological_order_respects_edges(seed in any::<u64>()) {
        let net = random_network(seed);
        let order = net.topological_order();
        prop_assert_eq!(order.len(), net.len());
        let pos: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        for v in 0..net.len() {
            for &p in net.parents(v) {
                prop_assert!(pos[&p] < pos[&v]);
            }
        }
    }

    #[test]
    fn joint_probabilities_sum_to_one(seed in any::<u64>()) {
        let net = random_network(seed);
        let mut total = 0.0;
        let cards: Vec<usize> = (0..net.len()).map(|v| net.cardinality(v)).collect();
        let count: usize = cards.iter().product();
        for mut k in 0..count {
            let mut a = BTreeMap::new();
            for (v, &c) in cards.iter().enumerate() {
                a.insert(net.variable(v).name.clone(), net.variable(v).states[k % c].clone());
                k /= c;
            }
            total += joint_probability(&net, &a).unwrap();
        }
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn intervention_leaves_non_descendants_alone(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let net = random_network(seed);
        let x = pick.index(net.len());
        let set = InterventionSet::single(Intervention::hard(net.variable(x).name.clone(), net.variable(x).states[0].clone()));
        let descendants = net.descendants(x);
        for v in (0..net.len()).filter(|v| *v != x && !descendants.contains(v)) {
            let name = &net.variable(v).name;
            let before = marginal(&net, name, &Evidence::new()).unwrap();
            let after = interventional_marginal(&net, name, &set, &Evidence::new()).unwrap();
            for (a, b) in before.probabilities.iter().zip(&after.probabilities) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn root_rrw_equals_irrw(seed in any::<u64>()) {
        let net = random_network(seed);
        let sink = *net.topological_order().last().unwrap();
        let target = TargetEvent::new(net.variable(sink).name.clone(), net.variable(sink).states[0].clone());
        for v in (0..net.len()).filter(|&v| net.is_root(v) && v != sink) {
            let r = ReferenceAssignment::new(net.variable(v).name.clone(), net.variable(v).states[0].clone());
            let (Ok(a), Ok(b)) = (rrw(&net, &target, &r, Mode::Associational), rrw(&net, &target, &r, Mode::Interventional)) else { continue };
            let (a, b) = (a.value.as_f64(), b.value.as_f64());
            let same = a == b || (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-9 * a.abs().max(1.0);
            prop_assert!(same, "{a} vs {b}");
        }
    }

    #[test]
    fn metric_provenance_recomputes(seed in any::<u64>()) {
        let net = random_network(seed);
        let sink = *net.topological_order().last().unwrap();
        let target = TargetEvent::new(net.variable(sink).name.clone(), net.variable(sink).states[0].clone());
        for v in (0..net.len()).filter(|&v| v != sink) {
            let var = net.variable(v);
            if let Ok(m) = birnbaum_cbn(&net, &target, &var.name, &var.states[0], 0.01, SoftEvidenceMode::Observational) {
                prop_assert_eq!(m.recompute(), m.value);
            }
        }
    }

    #[test]
    fn shannon_expansion_matches_brute_force(seed in any::<u64>()) {
        let tree = random_fault_tree(seed);
        prop_assert!((top_event_probability(&tree) - brute_force_top(&tree)).abs() < 1e-12);
    }

    #[test]
    fn top_probability_is_monotone(seed in any::<u64>(), pick in any::<prop::sample::Index>(), bump in 0.0..1.0f64) {
        let tree = random_fault_tree(seed);
        let e = &tree.events()[pick.index(tree.events().len())];
        let raised = tree.with_probability(&e.name, e.p + (1.0 - e.p) * bump).unwrap();
        prop_assert!(top_event_probability(&raised) >= top_event_probability(&tree) - 1e-15);
    }

    #[test]
    fn cut_sets_are_minimal_and_complete(seed in any::<u64>()) {
        let tree = random_fault_tree(seed);
        let names: Vec<&str> = tree.events().iter().map(|e| e.name.as_str()).collect();
        let cuts = minimal_cut_sets(&tree);
        let occurs = |set: &BTreeSet<String>| tree.top_occurs(&names.iter().map(|n| set.contains(*n)).collect::<Vec<_>>());
        for cut in &cuts {
            prop_assert!(occurs(cut));
            for e in cut {
                let mut smaller = cut.clone();
                smaller.remove(e);
                prop_assert!(!occurs(&smaller), "{cut:?} is not minimal");
            }
        }
        for mask in 0..1u32 << names.len() {
            let set: BTreeSet<String> = (0..names.len()).filter(|i| mask >> i & 1 == 1).map(|i| names[i].to_string()).collect();
            let covered = cuts.iter().any(|c| c.is_subset(&set));
            prop_assert_eq!(occurs(&set), covered);
        }
    }

    #[test]
    fn converted_tree_preserves_probabilities(seed in any::<u64>()) {
        let tree = random_fault_tree(seed);
        let net = fault_tree_to_cbn(&tree);
        let p = marginal(&net, tree.top_name(), &Evidence::new()).unwrap().probability(OCCURS).unwrap();
        prop_assert!((p - top_event_probability(&tree)).abs() < 1e-12);
        for e in tree.events() {
            let m = marginal(&net, &e.name, &Evidence::new()).unwrap().probability(OCCURS).unwrap();
            prop_assert!((m - e.p).abs() < 1e-15);
        }
    }
}

#[test]
fn bundled_models_agree_with_enumeration() {
    for (name, net) in bundled::networks() {
        let mut answered = 0;
        for (target, ev) in random_queries(&net, 120, 5) {
            match (marginal(&net, &target, &ev), enumerate_marginal(&net, &target, &ev)) {
                (Ok(a), Ok(b)) => {
                    answered += 1;
                    for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
                        assert!((x - y).abs() < 1e-9, "{name}: P({target} | {ev})");
                    }
                }
                (Err(_), Err(_)) => {}
                (a, b) => panic!("{name}: {:?} vs {:?}", a.err(), b.err()),
            }
        }
        assert!(answered >= 100, "{name}: {answered}");
    }
}
