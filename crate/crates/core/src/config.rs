//! Experiment configuration: JSON with `--key value` overrides.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::amoeba::SeedMode;
use crate::error::{invalid, Error, Result};
use crate::twoball::RecursiveMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    /// Union of high-degree categories: prune, amoeba, refine.
    Multiplex,
    /// Grid plus one sparse category: bounded disjoint path pruning.
    Edp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Generate,
    Prune,
    Amoeba,
    Refine,
    Evaluate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refine {
    /// Basic two-ball test on the evaluation pairs.
    TwoBall,
    /// Direct refinement plus long-edge shortest paths.
    Extended,
    /// Recursive refinement; needs `dim >= 3`.
    Recursive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Local {
    None,
    Grid,
}

/// Every knob of one run. Unset optional values are derived from the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    pub stages: Vec<Stage>,
    pub seed: u64,
    pub n: usize,
    pub dim: usize,
    pub categories: usize,
    /// Target degree; `16·ln n` when unset in the multiplex pipeline, 3 for EDP.
    pub degree: Option<f64>,
    pub jitter: f64,
    pub norm_p: f64,
    pub permute: bool,
    pub local: Local,
    /// Split the union into independent edge sets, one per stage.
    pub partition: bool,
    pub partitions: usize,

    pub theta_m2: f64,
    pub m2: Option<usize>,
    pub loose_factor: f64,
    pub theta_pr: f64,
    pub theta_ar: f64,
    pub theta_am: f64,
    pub amoeba_n: Option<usize>,
    pub amoeba_m: Option<usize>,
    pub diam_floor: Option<u32>,
    pub seed_mode: SeedMode,
    pub seed_attempts: usize,

    pub refine: Refine,
    /// Direct scale of the extended refinement; `n^(1/(d+2))` when unset.
    pub r_scale: Option<f64>,
    pub expansion_bound: f64,
    /// Recursive cutoff; `4·ln² n` when unset.
    pub floor: Option<f64>,
    pub c_pd: Option<f64>,
    pub c_dim: Option<f64>,
    pub dimconst_trials: usize,
    pub recursive_mode: RecursiveMode,

    pub edp_p: Option<usize>,
    pub edp_h: usize,
    pub adaptive: bool,
    pub h_candidates: Vec<usize>,
    pub alpha: f64,
    pub c0: f64,
    pub state_cap: usize,

    pub eval_pairs: usize,
    pub far_pairs: usize,
    pub delta_grid: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pipeline: Pipeline::Multiplex,
            stages: vec![Stage::Generate, Stage::Prune, Stage::Amoeba, Stage::Refine, Stage::Evaluate],
            seed: 1,
            n: 4096,
            dim: 2,
            categories: 2,
            degree: None,
            jitter: 0.5,
            norm_p: 2.0,
            permute: true,
            local: Local::None,
            partition: true,
            partitions: 3,
            theta_m2: 0.125,
            m2: None,
            loose_factor: 1.0,
            theta_pr: 2.0,
            theta_ar: 2.0,
            theta_am: 1.0,
            amoeba_n: None,
            amoeba_m: None,
            diam_floor: None,
            seed_mode: SeedMode::FastThenBrute,
            seed_attempts: 256,
            refine: Refine::TwoBall,
            r_scale: None,
            expansion_bound: 4.0,
            floor: None,
            c_pd: None,
            c_dim: None,
            dimconst_trials: 20_000,
            recursive_mode: RecursiveMode::Sequential,
            edp_p: None,
            edp_h: 3,
            adaptive: false,
            h_candidates: vec![3, 5, 7],
            alpha: 1.0,
            c0: 4.0,
            state_cap: crate::edp::DEFAULT_STATE_CAP,
            eval_pairs: 1000,
            far_pairs: 100_000,
            delta_grid: vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0],
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Applies `key=value` overrides. Values are read as JSON when they
    /// parse, otherwise as strings.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut v = serde_json::to_value(self)?;
        let obj = v.as_object_mut().expect("config serializes to an object");
        for (k, raw) in overrides {
            let key = k.trim_start_matches("--").replace('-', "_");
            if !obj.contains_key(&key) {
                return invalid(format!("unknown config key `{key}`"));
            }
            let val = parse_value(raw, &obj[&key]);
            obj.insert(key, val);
        }
        let cfg: ExperimentConfig = serde_json::from_value(v).map_err(|e| Error::InvalidInput(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| invalid(m.to_string());
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if self.dim == 0 || self.categories == 0 || self.categories > 6 {
            return bad("need dim >= 1 and 1..=6 categories");
        }
        if crate::metric::lattice_side(self.n, self.dim).is_none() {
            return bad("n must be a perfect dim-th power");
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return bad("jitter must lie in [0, 1)");
        }
        if self.degree.is_some_and(|k| !(k >= 0.0)) {
            return bad("degree must be non-negative");
        }
        if self.partitions == 0 {
            return bad("partitions must be at least 1");
        }
        for (name, x) in [
            ("theta_m2", self.theta_m2),
            ("theta_pr", self.theta_pr),
            ("theta_ar", self.theta_ar),
            ("theta_am", self.theta_am),
            ("alpha", self.alpha),
            ("c0", self.c0),
        ] {
            if !(x > 0.0) {
                return invalid(format!("{name} must be positive"));
            }
        }
        if !(self.loose_factor >= 1.0) || !(self.expansion_bound >= 1.0) {
            return bad("loose_factor and expansion_bound must be at least 1");
        }
        if self.edp_h == 0 || self.h_candidates.contains(&0) || self.edp_p == Some(0) {
            return bad("EDP path counts and hop bounds must be positive");
        }
        if self.refine == Refine::Recursive && self.dim < 3 {
            return bad("recursive refinement needs dim >= 3");
        }
        if self.local == Local::Grid && self.jitter != 0.0 {
            return bad("grid local edges need jitter 0");
        }
        Ok(())
    }

    pub fn degree(&self) -> f64 {
        self.degree.unwrap_or(match self.pipeline {
            Pipeline::Multiplex => 16.0 * (self.n as f64).ln(),
            Pipeline::Edp => 3.0,
        })
    }

    pub fn runs(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }
}

fn parse_value(raw: &str, current: &Value) -> Value {
    if current.is_array() && !raw.trim_start().starts_with('[') {
        let items: Vec<Value> = raw.split(',').map(|s| parse_scalar(s.trim())).collect();
        return Value::Array(items);
    }
    parse_scalar(raw)
}

fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Splits `--key value` pairs, rejecting dangling keys.
pub fn split_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(k) = it.next() {
        let Some(key) = k.strip_prefix("--") else {
            return invalid(format!("expected --key, got `{k}`"));
        };
        if let Some((a, b)) = key.split_once('=') {
            out.push((a.to_string(), b.to_string()));
            continue;
        }
        let v = it.next().ok_or_else(|| Error::InvalidInput(format!("missing value for --{key}")))?;
        out.push((key.to_string(), v.clone()));
    }
    Ok(out)
}

/// Cartesian grid of overrides, keys in sorted order.
pub fn sweep_grid(axes: &BTreeMap<String, Vec<String>>) -> Vec<Vec<(String, String)>> {
    let mut grid: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (k, vals) in axes {
        grid = grid
            .into_iter()
            .flat_map(|row| {
                vals.iter().map(move |v| {
                    let mut r = row.clone();
                    r.push((k.clone(), v.clone()));
                    r
                })
            })
            .collect();
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn overrides() {
        let c = ExperimentConfig::default();
        let args: Vec<String> = ["--n", "1024", "--theta-pr", "1.5", "--stages", "generate", "--seed_mode=brute", "--degree", "12"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let o = c.with_overrides(&split_overrides(&args).unwrap()).unwrap();
        assert_eq!(o.n, 1024);
        assert_eq!(o.theta_pr, 1.5);
        assert_eq!(o.stages, vec![Stage::Generate]);
        assert_eq!(o.seed_mode, SeedMode::Brute);
        assert_eq!(o.degree, Some(12.0));
        let o = c.with_overrides(&[("h_candidates".into(), "3,5".into())]).unwrap();
        assert_eq!(o.h_candidates, vec![3, 5]);
    }

    #[test]
    fn invalid_configs() {
        let c = ExperimentConfig::default();
        assert!(c.with_overrides(&[("bogus".into(), "1".into())]).is_err());
        assert!(c.with_overrides(&[("n".into(), "1000".into())]).is_err());
        assert!(c.with_overrides(&[("theta_pr".into(), "-1".into())]).is_err());
        assert!(c.with_overrides(&[("refine".into(), "recursive".into())]).is_err());
        assert!(ExperimentConfig::from_json(r#"{"nn": 3}"#).is_err());
        assert!(split_overrides(&["--n".to_string()]).is_err());
        assert!(split_overrides(&["n".to_string()]).is_err());
    }

    #[test]
    fn sweep_is_cartesian() {
        let mut axes = BTreeMap::new();
        axes.insert("theta_pr".to_string(), vec!["1.5".to_string(), "2".to_string()]);
        axes.insert("c0".to_string(), vec!["2".to_string(), "4".to_string(), "8".to_string()]);
        let g = sweep_grid(&axes);
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![("c0".to_string(), "2".to_string()), ("theta_pr".to_string(), "1.5".to_string())]);
    }
}
