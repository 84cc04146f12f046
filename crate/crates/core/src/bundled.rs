//! Model files shipped with the crate, embedded at compile time.

use crate::fault_tree::{parse_fault_tree, FaultTree};
use crate::model::{parse_network, CausalNetwork};

pub const CONFOUNDING: &str = include_str!("../models/confounding.cbn.json");
pub const CONFOUNDING_MEASURE_CORR: &str = include_str!("../models/confounding_measure_corr.cbn.json");
pub const CONFOUNDING_MEASURE_CAUSAL: &str = include_str!("../models/confounding_measure_causal.cbn.json");
pub const PERCEPTION: &str = include_str!("../models/perception.cbn.json");
pub const PERCEPTION_FAULT_TREE: &str = include_str!("../models/perception.ft.json");
pub const PERCEPTION_ANALYSIS: &str = include_str!("../models/perception-analysis.json");

/// File name and contents of every bundled model.
pub const FILES: [(&str, &str); 6] = [
    ("confounding.cbn.json", CONFOUNDING),
    ("confounding_measure_corr.cbn.json", CONFOUNDING_MEASURE_CORR),
    ("confounding_measure_causal.cbn.json", CONFOUNDING_MEASURE_CAUSAL),
    ("perception.cbn.json", PERCEPTION),
    ("perception.ft.json", PERCEPTION_FAULT_TREE),
    ("perception-analysis.json", PERCEPTION_ANALYSIS),
];

pub fn confounding() -> CausalNetwork {
    parse_network(CONFOUNDING).expect("bundled model is valid")
}

pub fn confounding_measure_corr() -> CausalNetwork {
    parse_network(CONFOUNDING_MEASURE_CORR).expect("bundled model is valid")
}

pub fn confounding_measure_causal() -> CausalNetwork {
    parse_network(CONFOUNDING_MEASURE_CAUSAL).expect("bundled model is valid")
}

pub fn perception() -> CausalNetwork {
    parse_network(PERCEPTION).expect("bundled model is valid")
}

pub fn perception_fault_tree() -> FaultTree {
    parse_fault_tree(PERCEPTION_FAULT_TREE).expect("bundled fault tree is valid")
}

/// Every bundled causal network by file name.
pub fn networks() -> Vec<(&'static str, CausalNetwork)> {
    vec![
        ("confounding.cbn.json", confounding()),
        ("confounding_measure_corr.cbn.json", confounding_measure_corr()),
        ("confounding_measure_causal.cbn.json", confounding_measure_causal()),
        ("perception.cbn.json", perception()),
    ]
}
