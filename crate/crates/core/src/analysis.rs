//! Batch analysis driven by a JSON configuration: which model, which target
//! event, nominal and failure states per factor, and path sets to evaluate.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::intervention::{check_path_identifiability, PathSet, Reference};
use crate::metrics::{
    ace_rce, birnbaum_cbn, pairwise_grid, path_metrics, rce_dichotomic, rrw, rrw_dichotomic, Comparison, MetricReport, Mode, ReferenceAssignment,
    SoftEvidenceMode, TargetEvent, DEFAULT_DELTA, MAX_DELTA,
};
use crate::model::{load_network, CausalNetwork};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Svg,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Svg => "svg",
        })
    }
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Model file, relative to the configuration file.
    pub model: PathBuf,
    pub target: TargetEvent,
    /// Nominal state per analysed factor.
    pub references: BTreeMap<String, String>,
    /// State treated as the failure for Birnbaum importance.
    #[serde(default)]
    pub failure_states: BTreeMap<String, String>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub path_sets: Vec<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl AnalysisConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(Error::from_json)
    }

    /// Loads a configuration; the model path is resolved against the
    /// configuration file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut config = Self::parse(&std::fs::read_to_string(path)?)?;
        if config.model.is_relative() {
            if let Some(dir) = path.parent() {
                config.model = dir.join(&config.model);
            }
        }
        Ok(config)
    }

    pub fn load_model(&self) -> Result<CausalNetwork> {
        load_network(&self.model)
    }

    /// Checks that every name in the configuration resolves against `network`.
    pub fn check(&self, network: &CausalNetwork) -> Result<()> {
        let config_err = |e: Error| Error::Config(e.to_string());
        self.target.check(network).map_err(config_err)?;
        for (kind, map) in [("reference", &self.references), ("failure", &self.failure_states)] {
            for (var, state) in map {
                network
                    .state_index(var, state)
                    .map_err(|e| Error::Config(format!("{kind} state {var}={state}: {e}")))?;
                if *var == self.target.variable {
                    return Err(Error::Config(format!("{kind} state set on the target `{var}`")));
                }
            }
        }
        if !(self.delta > 0.0 && self.delta <= MAX_DELTA) {
            return Err(Error::Config(format!("delta {} must lie in (0, {MAX_DELTA}]", self.delta)));
        }
        for text in &self.path_sets {
            let ps = self.path_set(text)?;
            ps.check(network).map_err(config_err)?;
            if ps.sink != self.target.variable {
                return Err(Error::Config(format!("path set `{text}` does not end at the target")));
            }
            if !self.references.contains_key(&ps.source) {
                return Err(Error::Config(format!(
                    "path set `{text}` starts at `{}`, which has no reference state",
                    ps.source
                )));
            }
        }
        Ok(())
    }

    fn path_set(&self, text: &str) -> Result<PathSet> {
        PathSet::parse(text).map_err(|e| Error::Config(format!("path set `{text}`: {e}")))
    }

    pub fn reference_assignments(&self) -> Vec<ReferenceAssignment> {
        self.references.iter().map(|(v, s)| ReferenceAssignment::new(v, s)).collect()
    }
}

/// Runs every configured metric. Failures of individual metrics are
/// collected in the report rather than aborting the run.
pub fn run_suite(network: &CausalNetwork, config: &AnalysisConfig) -> Result<MetricReport> {
    config.check(network)?;
    let target = &config.target;
    let mut report = MetricReport::new(target);

    for (var, state) in &config.failure_states {
        let ctx = format!("BB {var}={state}");
        report.record(
            &ctx,
            birnbaum_cbn(network, target, var, state, config.delta, SoftEvidenceMode::Observational),
        );
    }

    for (var, reference) in &config.references {
        let r = ReferenceAssignment::new(var, reference);
        report.record(&format!("RRW {var}={reference}"), rrw(network, target, &r, Mode::Associational));
        report.record(&format!("IRRW {var}={reference}"), rrw(network, target, &r, Mode::Interventional));
        let v = network.index_of(var)?;
        for state in &network.variable(v).states {
            let ctx = format!("{var}={state}");
            match ace_rce(network, target, var, state, &Comparison::Reference(reference.clone())) {
                Ok((ace, rce)) => report.entries.extend([ace, rce]),
                Err(e) => report.errors.push(format!("ACE/RCE {ctx}: {e}")),
            }
            report.record(&format!("RCE-dichotomic {ctx}"), rce_dichotomic(network, target, var, state));
            report.record(
                &format!("RRW-dichotomic {ctx}"),
                rrw_dichotomic(network, target, var, state, Mode::Associational),
            );
            report.record(
                &format!("IRRW-dichotomic {ctx}"),
                rrw_dichotomic(network, target, var, state, Mode::Interventional),
            );
        }
    }

    match pairwise_grid(network, target, &config.reference_assignments()) {
        Ok(cells) => report.entries.extend(cells),
        Err(e) => report.errors.push(format!("RCE2 grid: {e}")),
    }

    for text in &config.path_sets {
        let ps = config.path_set(text)?;
        match check_path_identifiability(network, &ps) {
            Ok(id) if !id.identifiable => {
                report.errors.push(format!("paths {ps}: {}", id.diagnostic));
                continue;
            }
            Err(e) => {
                report.errors.push(format!("paths {ps}: {e}"));
                continue;
            }
            Ok(_) => {}
        }
        let reference = &config.references[&ps.source];
        let v = network.index_of(&ps.source)?;
        for state in network.variable(v).states.iter().filter(|s| *s != reference) {
            match path_metrics(network, target, &ps, state, &Reference::State(reference.clone())) {
                Ok(m) => report.entries.extend([m.ape, m.rpe, m.ape_over_ace]),
                Err(e) => report.errors.push(format!("paths {ps} {state}: {e}")),
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    fn config() -> AnalysisConfig {
        AnalysisConfig::parse(bundled::PERCEPTION_ANALYSIS).unwrap()
    }

    #[test]
    fn bundled_config_checks() {
        let c = config();
        assert_eq!(c.format, OutputFormat::Json);
        assert_eq!(c.references.len(), 4);
        c.check(&bundled::perception()).unwrap();
    }

    #[test]
    fn unknown_reference_state_is_config_error() {
        let mut c = config();
        c.references.insert("Occlusion".into(), "total".into());
        assert!(matches!(c.check(&bundled::perception()), Err(Error::Config(_))));
        assert!(matches!(run_suite(&bundled::perception(), &c), Err(Error::Config(_))));
    }

    #[test]
    fn bad_delta_is_config_error() {
        let mut c = config();
        c.delta = 0.5;
        assert!(matches!(c.check(&bundled::perception()), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_field_rejected() {
        let text = bundled::PERCEPTION_ANALYSIS.replacen('{', "{\"colour\": 1,", 1);
        assert!(AnalysisConfig::parse(&text).is_err());
    }

    #[test]
    fn suite_covers_configured_metrics() {
        let report = run_suite(&bundled::perception(), &config()).unwrap();
        assert!(report.errors.is_empty(), "{:?}", report.errors);
        let rce = report.find("RCE", "TrafficDensity", "high").unwrap().value.as_f64();
        assert!((rce - 9.64).abs() < 0.02);
        assert_eq!(report.entries.iter().filter(|m| m.metric == "BB").count(), 4);
        // 3 path sets x 2 non-reference states x 3 metrics
        assert_eq!(
            report
                .entries
                .iter()
                .filter(|m| m.variable == "TrafficDensity" && m.subject.contains(" via "))
                .count(),
            18
        );
        for m in &report.entries {
            let (a, b) = (m.value.as_f64(), m.recompute().as_f64());
            assert!(a == b || (a.is_nan() && b.is_nan()), "{m:?}");
        }
    }

    #[test]
    fn suite_is_deterministic() {
        let net = bundled::perception();
        let a = run_suite(&net, &config()).unwrap().to_json();
        let b = run_suite(&net, &config()).unwrap().to_json();
        assert_eq!(a, b);
    }
}
