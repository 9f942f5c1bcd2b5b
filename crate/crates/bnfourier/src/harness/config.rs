use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    Km,
    LearnDnf,
    LearnTree,
    EndToEnd,
    LowerBounds,
    OracleCheck,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Km => "km",
            Experiment::LearnDnf => "learn-dnf",
            Experiment::LearnTree => "learn-tree",
            Experiment::EndToEnd => "end-to-end",
            Experiment::LowerBounds => "lower-bounds",
            Experiment::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Where the distribution comes from. Random kinds draw from the run seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetSpec {
    /// uniform | product | chain | tree | forest | dag | kjunta |
    /// homogeneous_chain | unbounded_chain | gstar | file
    pub kind: String,
    pub n: usize,
    pub c: f64,
    pub alpha: f64,
    pub k: usize,
    pub max_parents: usize,
    pub mu0: f64,
    pub mu1: f64,
    /// gstar chain length
    pub m: usize,
    pub path: Option<PathBuf>,
}

impl Default for NetSpec {
    fn default() -> Self {
        NetSpec {
            kind: "uniform".into(),
            n: 8,
            c: 0.1,
            alpha: 0.1,
            k: 2,
            max_parents: 2,
            mu0: 0.07,
            mu1: 0.56,
            m: 23,
            path: None,
        }
    }
}

/// The Boolean (or bounded real) target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSpec {
    /// conjunction | dnf | random_tree | random_dnf | parity | planted
    pub kind: String,
    /// 1-based signed literals for `conjunction`
    pub literals: Vec<i64>,
    /// DNF text for `dnf` (used when `path` is absent)
    pub text: Option<String>,
    pub path: Option<PathBuf>,
    pub depth: usize,
    pub terms: usize,
    pub width: usize,
    /// variables of `parity`
    pub vars: Vec<usize>,
    /// (variables, weight) pairs for `planted`
    pub planted: Vec<(Vec<usize>, f64)>,
    /// zero_one | plus_minus
    pub range: String,
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec {
            kind: "random_dnf".into(),
            literals: vec![1],
            text: None,
            path: None,
            depth: 3,
            terms: 2,
            width: 2,
            vars: vec![0],
            planted: Vec::new(),
            range: "plus_minus".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KmSection {
    pub theta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// exact | sampled
    pub mode: String,
    pub m1: Option<u64>,
    pub m2: Option<u64>,
}

impl Default for KmSection {
    fn default() -> Self {
        KmSection {
            theta: 0.25,
            gamma: 0.1,
            delta: 0.05,
            mode: "exact".into(),
            m1: None,
            m2: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnSection {
    pub epsilon: f64,
    pub delta: f64,
    /// disjoint | ptf
    pub learner: String,
    /// auto | product | chain | tree | enumerated
    pub l1_form: String,
}

impl Default for LearnSection {
    fn default() -> Self {
        LearnSection {
            epsilon: 0.1,
            delta: 0.1,
            learner: "disjoint".into(),
            l1_form: "auto".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeSection {
    /// sample count M
    pub m: usize,
    pub c: f64,
    pub alpha: f64,
    /// baseline | diff | lp | all
    pub algorithm: String,
    pub samples_csv: Option<PathBuf>,
    pub kl_threshold: f64,
    /// learned net file (written for the first seed)
    pub net_out: Option<PathBuf>,
}

impl Default for TreeSection {
    fn default() -> Self {
        TreeSection {
            m: 20_000,
            c: 0.1,
            alpha: 0.8,
            algorithm: "diff".into(),
            samples_csv: None,
            kl_threshold: 0.05,
            net_out: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    /// independent repetitions, each on its own RNG stream
    pub seeds: u64,
    pub net: NetSpec,
    pub target: TargetSpec,
    pub km: KmSection,
    pub learn: LearnSection,
    pub tree: TreeSection,
    /// branching count of the composite lower-bound row
    pub gstar_n: usize,
    /// spectrum JSON output for the spectrum experiment
    pub spectrum_out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            seed: None,
            seeds: 1,
            net: NetSpec::default(),
            target: TargetSpec::default(),
            km: KmSection::default(),
            learn: LearnSection::default(),
            tree: TreeSection::default(),
            gstar_n: 3,
            spectrum_out: None,
        }
    }
}

pub const NET_KINDS: [&str; 11] = [
    "uniform",
    "product",
    "chain",
    "tree",
    "forest",
    "dag",
    "kjunta",
    "homogeneous_chain",
    "unbounded_chain",
    "gstar",
    "file",
];
pub const TARGET_KINDS: [&str; 6] = ["conjunction", "dnf", "random_tree", "random_dnf", "parity", "planted"];

fn cfg_err(path: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        msg: msg.into(),
    }
}

impl ExperimentConfig {
    /// Parses JSON, reporting errors with the path of the offending field.
    pub fn from_json(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            cfg_err(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| cfg_err(path.display().to_string(), e.to_string()))?;
        Self::from_json(&s)
    }

    /// Applies `a.b.c=value` overrides. The value is read as JSON when it
    /// parses, as a string otherwise.
    pub fn apply_overrides(&self, sets: &[String]) -> Result<Self> {
        let mut v = serde_json::to_value(self)?;
        for s in sets {
            let (key, raw) = s
                .split_once('=')
                .ok_or_else(|| cfg_err(s.clone(), "expected key=value"))?;
            let val: serde_json::Value =
                serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            let mut cur = &mut v;
            let parts: Vec<&str> = key.split('.').collect();
            for (i, p) in parts.iter().enumerate() {
                let obj = cur
                    .as_object_mut()
                    .ok_or_else(|| cfg_err(key, format!("{p} is not inside an object")))?;
                if i + 1 == parts.len() {
                    if !obj.contains_key(*p) {
                        return Err(cfg_err(key, "unknown field"));
                    }
                    obj.insert(p.to_string(), val.clone());
                    break;
                }
                cur = obj
                    .get_mut(*p)
                    .ok_or_else(|| cfg_err(key, format!("unknown field {p}")))?;
            }
        }
        Self::from_json(&v.to_string())
    }

    /// Field-level checks that do not need the experiment to run.
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if self.seeds == 0 {
            return Err(cfg_err("seeds", "must be >= 1"));
        }
        if self.net.n == 0 || self.net.n > 64 {
            return Err(cfg_err("net.n", "must be in 1..=64"));
        }
        if !(self.net.c > 0.0 && self.net.c <= 0.5) {
            return Err(cfg_err("net.c", "must be in (0, 0.5]"));
        }
        if !(self.km.theta > 0.0 && self.km.theta <= 1.0) {
            return Err(cfg_err("km.theta", "must be in (0, 1]"));
        }
        if !(self.km.gamma > 0.0 && self.km.gamma <= 1.0) {
            return Err(cfg_err("km.gamma", "must be in (0, 1]"));
        }
        if !unit(self.km.delta) {
            return Err(cfg_err("km.delta", "must be in (0, 1)"));
        }
        if !matches!(self.km.mode.as_str(), "exact" | "sampled") {
            return Err(cfg_err("km.mode", "exact or sampled"));
        }
        if !unit(self.learn.epsilon) {
            return Err(cfg_err("learn.epsilon", "must be in (0, 1)"));
        }
        if !unit(self.learn.delta) {
            return Err(cfg_err("learn.delta", "must be in (0, 1)"));
        }
        if !matches!(self.learn.learner.as_str(), "disjoint" | "ptf") {
            return Err(cfg_err("learn.learner", "disjoint or ptf"));
        }
        if !matches!(self.target.range.as_str(), "zero_one" | "plus_minus") {
            return Err(cfg_err("target.range", "zero_one or plus_minus"));
        }
        if !matches!(self.tree.algorithm.as_str(), "baseline" | "diff" | "lp" | "all") {
            return Err(cfg_err("tree.algorithm", "baseline, diff, lp or all"));
        }
        if !NET_KINDS.contains(&self.net.kind.as_str()) {
            return Err(cfg_err(
                "net.kind",
                format!("unknown kind {:?}; one of {}", self.net.kind, NET_KINDS.join(", ")),
            ));
        }
        if !TARGET_KINDS.contains(&self.target.kind.as_str()) {
            return Err(cfg_err(
                "target.kind",
                format!(
                    "unknown kind {:?}; one of {}",
                    self.target.kind,
                    TARGET_KINDS.join(", ")
                ),
            ));
        }
        if !matches!(
            self.learn.l1_form.as_str(),
            "auto" | "product" | "chain" | "tree" | "enumerated"
        ) {
            return Err(cfg_err("learn.l1_form", "auto, product, chain, tree or enumerated"));
        }
        if self.tree.m == 0 {
            return Err(cfg_err("tree.m", "must be >= 1"));
        }
        Ok(())
    }

    /// Seeded experiments refuse to run without an explicit seed.
    pub fn needs_seed(&self) -> bool {
        let random_net = !matches!(
            self.net.kind.as_str(),
            "uniform" | "homogeneous_chain" | "unbounded_chain" | "gstar" | "file"
        );
        let random_target = matches!(self.target.kind.as_str(), "random_tree" | "random_dnf");
        match self.experiment {
            Some(Experiment::Km) => self.km.mode == "sampled" || random_net || random_target,
            Some(Experiment::LearnTree) => self.tree.samples_csv.is_none(),
            Some(Experiment::EndToEnd) => true,
            Some(Experiment::Spectrum) | Some(Experiment::LearnDnf) => random_net || random_target,
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&s).unwrap(), c);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn errors_carry_field_paths() {
        match ExperimentConfig::from_json(r#"{"km": {"theta": "x"}}"#) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "km.theta"),
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::from_json(r#"{"net": {"bogus": 1}}"#) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with("net"), "{path}"),
            other => panic!("{other:?}"),
        }
        let bad = ExperimentConfig {
            seeds: 0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config { path, .. }) if path == "seeds"));
    }

    #[test]
    fn overrides() {
        let c = ExperimentConfig::default()
            .apply_overrides(&["km.theta=0.5".into(), "net.kind=chain".into(), "seed=7".into()])
            .unwrap();
        assert_eq!(c.km.theta, 0.5);
        assert_eq!(c.net.kind, "chain");
        assert_eq!(c.seed, Some(7));
        assert!(ExperimentConfig::default()
            .apply_overrides(&["km.nope=1".into()])
            .is_err());
    }
}
