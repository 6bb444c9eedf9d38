//! End-to-end runs: generate, prune, grow amoebas, refine, score.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amoeba::{run_amoeba_stage, AmoebaParams, AmoebaResult};
use crate::config::{ExperimentConfig, Local, Pipeline, Refine, Stage};
use crate::edp::{adaptive_edp, const_dr, edp_prune, AdaptiveParams};
use crate::error::{invalid, Error, Result};
use crate::estimate::DistanceEstimate;
use crate::eval::{
    evaluate_categories, evaluate_distortion, simple_test_check, CategoryReport, DistortionReport, SimpleTestCheck,
};
use crate::gen::{
    build_local_structure, build_multiplex, calibrate_normalizer, partition_edges, sample_single_category,
    LocalKind, MultiplexGraph, SwgParams,
};
use crate::graph::{Adjacency, Edge, EdgeSet, Node, UNREACHED};
use crate::io;
use crate::metric::{CategoryEnsemble, TorusSpace};
use crate::prune::{default_m2, simple_test, PruneParams, Radii};
use crate::rng;
use crate::twoball::{
    calibrate_dimconst, extended_two_ball, multi_recursive_two_ball, two_ball_estimate, ExtParams, RecursiveParams,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub c_sw: f64,
    pub ck: f64,
    pub local_r: f64,
    pub edges: usize,
    pub category_edges: Vec<usize>,
    pub local_edges: usize,
    pub mean_degree: f64,
    pub partition_sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneSummary {
    pub m2: usize,
    pub local_r: f64,
    pub pruned_r: f64,
    pub amoeba_r: f64,
    pub strict_pairs: usize,
    pub loose_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmoebaSummary {
    pub params: AmoebaParams,
    pub category_edges: Vec<usize>,
    pub seed_sizes: Vec<usize>,
    pub uncovered: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineSummary {
    pub algorithm: String,
    pub normalizer: f64,
    pub pairs: usize,
    pub fallbacks: Vec<usize>,
    pub unavailable: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub simple_test: bool,
    pub amoeba: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluateSummary {
    pub simple_test: SimpleTestCheck,
    pub categories: Option<CategoryReport>,
    /// Per discovered category: spanner and refined distortion.
    pub spanner: Vec<DistortionReport>,
    pub refined: Vec<DistortionReport>,
    pub verdicts: Verdicts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdpSummary {
    pub p: usize,
    pub h: usize,
    pub const_dr: f64,
    pub kept: usize,
    pub grid_kept: bool,
    pub long_kept: usize,
    pub non_grid_kept: usize,
    pub connected: bool,
    pub side_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub message: String,
}

/// Everything `summary.json` records. Seed-deterministic: no timings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub generate: Option<GenerateSummary>,
    pub prune: Option<PruneSummary>,
    pub amoeba: Option<AmoebaSummary>,
    pub refine: Option<RefineSummary>,
    pub evaluate: Option<EvaluateSummary>,
    pub edp: Option<EdpSummary>,
    pub failure: Option<Failure>,
}

impl Summary {
    /// Whether every recorded pass/fail check passed.
    pub fn passed(&self) -> bool {
        self.failure.is_none()
            && self.evaluate.as_ref().is_none_or(|e| e.verdicts.simple_test && e.verdicts.amoeba)
            && self.edp.as_ref().is_none_or(|e| e.grid_kept && e.long_kept == 0)
    }
}

struct Generated {
    ensemble: CategoryEnsemble,
    graph: MultiplexGraph,
    params: SwgParams,
    grid: Option<EdgeSet>,
    /// Edge sets for pruning, amoeba tests and refinement.
    parts: [EdgeSet; 3],
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    out: &'a Path,
    summary: Summary,
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage: name.to_string(), source: Box::new(e) })
}

/// Runs the configured pipeline, writing artifacts and `summary.json` under
/// `out`. A failing stage is recorded in the summary before the error is
/// returned; earlier artifacts stay on disk.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Summary> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let mut run = Run {
        cfg,
        out,
        summary: Summary {
            config: cfg.clone(),
            generate: None,
            prune: None,
            amoeba: None,
            refine: None,
            evaluate: None,
            edp: None,
            failure: None,
        },
    };
    let result = match cfg.pipeline {
        Pipeline::Multiplex => run.multiplex(),
        Pipeline::Edp => run.edp(),
    };
    if let Err(Error::Stage { stage, source }) = &result {
        run.summary.failure = Some(Failure { stage: stage.clone(), message: source.to_string() });
    }
    write_summary(out, &run.summary)?;
    result.map(|_| run.summary)
}

pub fn write_summary(out: &Path, summary: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(out.join("summary.json"), text)?;
    Ok(())
}

impl Run<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn generate(&mut self) -> Result<Generated> {
        let cfg = self.cfg;
        let side = crate::metric::lattice_side(cfg.n, cfg.dim).expect("validated") as f64;
        let space = TorusSpace::new(cfg.dim, side, cfg.norm_p)?;
        let k = match cfg.pipeline {
            Pipeline::Multiplex => cfg.categories,
            Pipeline::Edp => 1,
        };
        let ensemble = CategoryEnsemble::generate(
            space,
            cfg.n,
            k,
            cfg.jitter,
            cfg.permute && cfg.pipeline == Pipeline::Multiplex,
            rng::derive_label(cfg.seed, "points"),
        )?;
        let c_sw = calibrate_normalizer(&ensemble.categories[0])?;
        let params = SwgParams::new(cfg.degree(), c_sw, cfg.dim)?;
        let edge_seed = rng::derive_label(cfg.seed, "edges");
        let sets: Vec<EdgeSet> = ensemble
            .categories
            .iter()
            .enumerate()
            .map(|(i, p)| sample_single_category(p, &params, rng::derive(edge_seed, i as u64)))
            .collect();
        let local = match (cfg.local, cfg.pipeline) {
            (Local::Grid, _) | (_, Pipeline::Edp) => {
                Some(build_local_structure(&ensemble.categories[0], LocalKind::ToroidalGrid, None)?)
            }
            (Local::None, _) => None,
        };
        let graph = build_multiplex(cfg.n, &sets, local.as_ref())?;
        for (i, p) in ensemble.categories.iter().enumerate() {
            io::save_positions(&self.path(&format!("positions_cat{i}.csv")), p)?;
        }
        if let Some(perms) = &ensemble.permutations {
            for (i, p) in perms.iter().enumerate() {
                io::save_permutation(&self.path(&format!("permutation_cat{i}.csv")), p)?;
            }
        }
        io::save_edges(&self.path("edges.txt"), graph.observed(), &[])?;
        io::save_ground_truth(&self.path("truth.txt"), &graph)?;
        let parts: [EdgeSet; 3] = if cfg.partition && cfg.partitions > 1 && cfg.pipeline == Pipeline::Multiplex {
            let p = partition_edges(&graph, cfg.partitions, rng::derive_label(cfg.seed, "partition"))?;
            std::array::from_fn(|i| p[i % p.len()].clone())
        } else {
            std::array::from_fn(|_| graph.observed().clone())
        };
        let m = graph.observed().len();
        self.summary.generate = Some(GenerateSummary {
            c_sw,
            ck: params.ck(),
            local_r: params.local_radius(),
            edges: m,
            category_edges: sets.iter().map(EdgeSet::len).collect(),
            local_edges: local.as_ref().map_or(0, |l| l.edges.len()),
            mean_degree: 2.0 * m as f64 / cfg.n as f64,
            partition_sizes: parts.iter().map(EdgeSet::len).collect(),
        });
        info!("generated {m} union edges, C·k = {}", params.ck());
        Ok(Generated { ensemble, graph, params, grid: local.map(|l| l.edges), parts })
    }

    fn multiplex(&mut self) -> Result<()> {
        let cfg = self.cfg;
        if !cfg.runs(Stage::Generate) {
            return invalid("every pipeline starts with the generate stage");
        }
        let g = stage("generate", self.generate())?;
        if !cfg.runs(Stage::Prune) {
            return Ok(());
        }
        let radii = Radii::new(g.params.ck(), cfg.dim, cfg.categories, cfg.theta_pr, cfg.theta_ar);
        let (strict, loose) = stage("prune", self.prune(&g, &radii))?;
        if !cfg.runs(Stage::Amoeba) {
            return Ok(());
        }
        let amoeba = stage("amoeba", self.amoeba(&g, &radii, &strict, &loose))?;
        let normalizer = radii.local;
        let inits: Vec<DistanceEstimate> = amoeba
            .category_edges
            .iter()
            .map(|e| DistanceEstimate::Spanner { adj: Adjacency::new(e), scale: radii.amoeba / normalizer })
            .collect();
        let pairs = evaluation_pairs(&inits, cfg.eval_pairs, rng::derive_label(cfg.seed, "pairs"));
        let refined = if cfg.runs(Stage::Refine) {
            Some(stage("refine", self.refine(&g, &inits, &pairs, normalizer))?)
        } else {
            None
        };
        if cfg.runs(Stage::Evaluate) {
            stage("evaluate", self.evaluate(&g, &radii, &loose, &amoeba, &inits, &pairs, refined.as_deref()))?;
        }
        Ok(())
    }

    fn prune(&mut self, g: &Generated, radii: &Radii) -> Result<(EdgeSet, EdgeSet)> {
        let cfg = self.cfg;
        let m2 = cfg.m2.unwrap_or_else(|| default_m2(g.params.ck(), cfg.theta_m2));
        let adj = Adjacency::new(&g.parts[0]);
        let strict = simple_test(&adj, &PruneParams::new(m2, 1.0)?).pairs;
        let loose = if cfg.loose_factor > 1.0 {
            let l = simple_test(&adj, &PruneParams::new(m2, cfg.loose_factor)?).pairs;
            io::save_edges(&self.path("pruned_loose.txt"), &l, &[format!("pruned m2={m2} loose_factor={}", cfg.loose_factor)])?;
            l
        } else {
            strict.clone()
        };
        io::save_edges(&self.path("pruned.txt"), &strict, &[format!("pruned m2={m2}")])?;
        info!("pruning kept {} pairs at m2 = {m2}", strict.len());
        self.summary.prune = Some(PruneSummary {
            m2,
            local_r: radii.local,
            pruned_r: radii.pruned,
            amoeba_r: radii.amoeba,
            strict_pairs: strict.len(),
            loose_pairs: loose.len(),
        });
        Ok((strict, loose))
    }

    fn amoeba(&mut self, g: &Generated, radii: &Radii, strict: &EdgeSet, loose: &EdgeSet) -> Result<AmoebaResult> {
        let cfg = self.cfg;
        let mut p = AmoebaParams::defaults(radii, cfg.dim, cfg.categories, cfg.n, cfg.theta_am);
        if let Some(m) = cfg.amoeba_m {
            p.amoeba_m = m;
        }
        if let Some(a) = cfg.amoeba_n {
            p.amoeba_n = a;
        }
        if let Some(f) = cfg.diam_floor {
            p.diam_floor = f;
        }
        p.seed_mode = cfg.seed_mode;
        p.seed_attempts = cfg.seed_attempts;
        let p = AmoebaParams { seed_attempts: cfg.seed_attempts, ..AmoebaParams::new(p.amoeba_n, p.amoeba_m, p.amoeba_r, p.diam_floor, p.seed_mode)? };
        let res = run_amoeba_stage(&g.parts[1], strict, loose, cfg.categories, &p)?;
        for (i, e) in res.category_edges.iter().enumerate() {
            io::save_edges(&self.path(&format!("amoeba_cat{i}.txt")), e, &[format!("amoeba cat={i} amoebaR={}", p.amoeba_r)])?;
        }
        self.summary.amoeba = Some(AmoebaSummary {
            params: p,
            category_edges: res.category_edges.iter().map(EdgeSet::len).collect(),
            seed_sizes: res.seed_cliques.iter().map(Vec::len).collect(),
            uncovered: res.uncovered,
        });
        Ok(res)
    }

    fn refine(
        &mut self,
        g: &Generated,
        inits: &[DistanceEstimate],
        pairs: &[Vec<(Node, Node)>],
        normalizer: f64,
    ) -> Result<Vec<Vec<f64>>> {
        let cfg = self.cfg;
        let union = Adjacency::new(&g.parts[2]);
        let dim = cfg.dim;
        let n = cfg.n;
        let mut fallbacks = Vec::new();
        let mut unavailable = Vec::new();
        let mut all = Vec::new();
        let algorithm = match cfg.refine {
            Refine::TwoBall => "two-ball",
            Refine::Extended => "extended-two-ball",
            Refine::Recursive => "recursive-two-ball",
        };
        for (i, (init, ps)) in inits.iter().zip(pairs).enumerate() {
            let (values, fb): (Vec<f64>, usize) = match cfg.refine {
                Refine::TwoBall => {
                    let v: Vec<(f64, bool)> = ps
                        .par_iter()
                        .map(|&(s, t)| match two_ball_estimate(&union, init, s, t, dim) {
                            Ok(o) => (o.value, false),
                            Err(Error::EstimateUnavailable { .. }) => (init.get(s, t), true),
                            Err(_) => (f64::INFINITY, false),
                        })
                        .collect();
                    let fb = v.iter().filter(|x| x.1).count();
                    (v.into_iter().map(|x| x.0).collect(), fb)
                }
                Refine::Extended => {
                    let r = cfg.r_scale.unwrap_or((n as f64).powf(1.0 / (dim as f64 + 2.0)));
                    let ext = extended_two_ball(&union, init, &ExtParams::new(r, cfg.expansion_bound)?, dim)?;
                    let v = ps.par_iter().map(|&(s, t)| ext.estimate(s, t).unwrap_or(f64::INFINITY)).collect();
                    (v, ext.fallbacks)
                }
                Refine::Recursive => {
                    let params = self.recursive_params(g)?;
                    let m = multi_recursive_two_ball(&union, init, &params, cfg.categories, cfg.expansion_bound, normalizer)?;
                    let v = ps.iter().map(|&(s, t)| m.get(s, t).unwrap_or(f64::INFINITY)).collect();
                    (v, m.recursive.fallbacks.len())
                }
            };
            let missing = values.iter().filter(|x| !x.is_finite()).count();
            if missing > 0 {
                warn!("category {i}: {missing} pairs without a refined estimate");
            }
            io::save_with(&self.path(&format!("estimates_cat{i}.csv")), |w| {
                io::write_estimates(w, n, ps.iter().zip(&values).map(|(&(s, t), &x)| (Edge::new(s, t), x)), normalizer, algorithm)
            })?;
            fallbacks.push(fb);
            unavailable.push(missing);
            all.push(values);
        }
        self.summary.refine = Some(RefineSummary {
            algorithm: algorithm.to_string(),
            normalizer,
            pairs: pairs.iter().map(Vec::len).sum(),
            fallbacks,
            unavailable,
        });
        Ok(all)
    }

    fn recursive_params(&self, g: &Generated) -> Result<RecursiveParams> {
        let cfg = self.cfg;
        let volume = g.ensemble.categories[0].space.unit_ball_volume();
        let c_pd = cfg.c_pd.unwrap_or(volume * g.params.ck());
        let c_dim = match cfg.c_dim {
            Some(c) => c,
            None => calibrate_dimconst(cfg.dim, c_pd, cfg.dimconst_trials, rng::derive_label(cfg.seed, "dimconst"))?.c_dim,
        };
        let ln = (cfg.n as f64).ln();
        Ok(RecursiveParams {
            dim: cfg.dim,
            c_pd,
            c_dim,
            floor: cfg.floor.unwrap_or(4.0 * ln * ln),
            x_max: f64::INFINITY,
            mode: cfg.recursive_mode,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &mut self,
        g: &Generated,
        radii: &Radii,
        loose: &EdgeSet,
        amoeba: &AmoebaResult,
        inits: &[DistanceEstimate],
        pairs: &[Vec<(Node, Node)>],
        refined: Option<&[Vec<f64>]>,
    ) -> Result<()> {
        let cfg = self.cfg;
        let pruned = loose;
        let st = simple_test_check(
            &g.ensemble,
            &io::load_edges(&self.path("pruned.txt"))?.0,
            radii.local,
            radii.pruned,
            cfg.far_pairs,
            rng::derive_label(cfg.seed, "far"),
        );
        let cats = evaluate_categories(&g.ensemble.categories, amoeba, pruned, radii.local, radii.amoeba)?;
        let mut spanner = Vec::new();
        let mut refined_reports = Vec::new();
        let budget = (cfg.n as f64).powf(-0.5);
        for (j, init) in inits.iter().enumerate() {
            let truth_pts = &g.ensemble.categories[cats.matching[j]];
            let truth = |u: Node, v: Node| truth_pts.dist(u, v) / radii.local;
            let ps = &pairs[j];
            let lookup: BTreeMap<(Node, Node), usize> = ps.iter().enumerate().map(|(i, &p)| (p, i)).collect();
            let init_vals: Vec<f64> = ps.iter().map(|&(s, t)| init.get(s, t)).collect();
            let at = |vals: &[f64], u: Node, v: Node| lookup.get(&(u.min(v), u.max(v))).map_or(f64::INFINITY, |&i| vals[i]);
            if !ps.is_empty() {
                spanner.push(evaluate_distortion(truth, |u, v| at(&init_vals, u, v), ps, &cfg.delta_grid, None, budget)?);
                if let Some(r) = refined {
                    refined_reports.push(evaluate_distortion(truth, |u, v| at(&r[j], u, v), ps, &cfg.delta_grid, None, budget)?);
                }
            }
        }
        let verdicts = Verdicts {
            simple_test: st.near_rate() >= 0.999 && st.far_rate() <= 0.001,
            amoeba: cats.categories.iter().all(|c| c.recall >= 0.99 && c.contamination == 0),
        };
        write_reports(self.out, &st, &cats, &spanner, &refined_reports)?;
        self.summary.evaluate = Some(EvaluateSummary {
            simple_test: st,
            categories: Some(cats),
            spanner,
            refined: refined_reports,
            verdicts,
        });
        Ok(())
    }

    fn edp(&mut self) -> Result<()> {
        let cfg = self.cfg;
        if cfg.jitter != 0.0 {
            return invalid("the EDP pipeline needs jitter 0");
        }
        let g = stage("generate", self.generate())?;
        if !cfg.runs(Stage::Prune) {
            return Ok(());
        }
        stage("prune", self.edp_prune(&g))
    }

    fn edp_prune(&mut self, g: &Generated) -> Result<()> {
        let cfg = self.cfg;
        let union = g.graph.observed();
        let (p, h, pruned, side_ok) = if cfg.adaptive {
            let a = adaptive_edp(
                union,
                &AdaptiveParams {
                    h_candidates: cfg.h_candidates.clone(),
                    alpha: cfg.alpha,
                    c0: cfg.c0,
                    k: cfg.degree(),
                    c_sw: g.params.c_sw,
                    dim: cfg.dim,
                    density_bound: g.ensemble.categories[0].density_bound,
                    expansion: cfg.expansion_bound,
                    bisect: false,
                    cap: cfg.state_cap,
                },
            )?;
            (a.p, a.h, a.pruned, Some(a.side_ok))
        } else {
            let p = cfg.edp_p.unwrap_or(2 * cfg.dim - 1);
            (p, cfg.edp_h, edp_prune(union, p, cfg.edp_h, cfg.state_cap)?, None)
        };
        let cdr = const_dr(cfg.alpha, p, h, cfg.n, cfg.dim, cfg.degree(), cfg.c0);
        io::save_edges(&self.path("edp.txt"), &pruned, &[format!("edp p={p} h={h} constdr={cdr}")])?;
        let pts = &g.ensemble.categories[0];
        let grid = g.grid.as_ref().expect("EDP runs always carry the grid");
        let long_kept = pruned.iter().filter(|e| pts.dist(e.lo, e.hi) > cdr).count();
        self.summary.edp = Some(EdpSummary {
            p,
            h,
            const_dr: cdr,
            kept: pruned.len(),
            grid_kept: grid.is_subset(&pruned),
            long_kept,
            non_grid_kept: pruned.difference(grid).len(),
            connected: Adjacency::new(&pruned).is_connected(),
            side_ok,
        });
        Ok(())
    }
}

/// Per category, pairs from sampled source rows spread evenly over ten
/// bands of initial estimate.
fn evaluation_pairs(inits: &[DistanceEstimate], count: usize, seed: u64) -> Vec<Vec<(Node, Node)>> {
    inits
        .iter()
        .enumerate()
        .map(|(i, est)| {
            let n = est.n();
            let mut r = rng::sub_rng(seed, i as u64);
            let sources = count.div_ceil(10).clamp(1, n);
            let mut nodes: Vec<Node> = (0..n as Node).collect();
            nodes.shuffle(&mut r);
            nodes.truncate(sources);
            nodes.sort_unstable();
            let rows: Vec<(Node, Vec<f64>)> = nodes.par_iter().map(|&s| (s, est.row(s))).collect();
            let mut cands: Vec<(f64, Node, Node)> = rows
                .iter()
                .flat_map(|(s, row)| {
                    row.iter().enumerate().filter(|(v, x)| *v as Node != *s && x.is_finite()).map(|(v, &x)| (x, *s, v as Node))
                })
                .collect();
            if cands.is_empty() {
                return Vec::new();
            }
            let hi = cands.iter().map(|c| c.0).fold(0.0, f64::max);
            cands.shuffle(&mut r);
            let per = count.div_ceil(10);
            let mut bins = vec![0usize; 10];
            let mut out = Vec::new();
            for (x, s, t) in cands {
                let b = ((x / hi * 10.0).ceil() as usize).clamp(1, 10) - 1;
                if bins[b] < per {
                    bins[b] += 1;
                    out.push((s.min(t), s.max(t)));
                }
            }
            out.sort_unstable();
            out.dedup();
            out.truncate(count);
            out
        })
        .collect()
}

fn write_reports(
    out: &Path,
    st: &SimpleTestCheck,
    cats: &CategoryReport,
    spanner: &[DistortionReport],
    refined: &[DistortionReport],
) -> Result<()> {
    use std::io::Write;
    io::save_with(&out.join("simple_test.csv"), |w| {
        writeln!(w, "near_pairs,near_accepted,far_sampled,far_accepted")?;
        writeln!(w, "{},{},{},{}", st.near_pairs, st.near_accepted, st.far_sampled, st.far_accepted)?;
        Ok(())
    })?;
    io::save_with(&out.join("categories.csv"), |w| {
        writeln!(w, "true_category,discovered,short_edges,discovered_edges,recall,precision,contamination")?;
        for c in &cats.categories {
            let d = c.discovered.map_or(String::new(), |d| d.to_string());
            writeln!(
                w,
                "{},{d},{},{},{},{},{}",
                c.true_category, c.short_edges, c.discovered_edges, c.recall, c.precision, c.contamination
            )?;
        }
        Ok(())
    })?;
    io::save_with(&out.join("distortion.csv"), |w| {
        writeln!(w, "estimate,category,delta,expansion,contraction")?;
        for (name, reps) in [("spanner", spanner), ("refined", refined)] {
            for (j, r) in reps.iter().enumerate() {
                for (d, c) in &r.expansion_curve {
                    writeln!(w, "{name},{j},{d},{c},{}", r.contraction)?;
                }
            }
        }
        Ok(())
    })?;
    io::save_with(&out.join("bucket_errors.csv"), |w| {
        writeln!(w, "estimate,category,lo,hi,pairs,median,q90,max")?;
        for (name, reps) in [("spanner", spanner), ("refined", refined)] {
            for (j, r) in reps.iter().enumerate() {
                for b in &r.bucket_errors {
                    writeln!(w, "{name},{j},{},{},{},{},{},{}", b.lo, b.hi, b.pairs, b.median, b.q90, b.max)?;
                }
            }
        }
        Ok(())
    })
}

/// One sweep point: its overrides and the resulting summary or error.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    pub overrides: Vec<(String, String)>,
    pub dir: String,
    pub passed: bool,
    pub error: Option<String>,
}

/// Runs the Cartesian grid of `axes` on top of `base`, one directory per
/// point, and writes `sweep.json`.
pub fn sweep(base: &ExperimentConfig, axes: &BTreeMap<String, Vec<String>>, out: &Path) -> Result<Vec<SweepPoint>> {
    let grid = crate::config::sweep_grid(axes);
    let mut points = Vec::new();
    for (i, ov) in grid.into_iter().enumerate() {
        let cfg = base.with_overrides(&ov)?;
        let dir = format!("run_{i:03}");
        let res = run_experiment(&cfg, &out.join(&dir));
        points.push(SweepPoint {
            passed: res.as_ref().is_ok_and(Summary::passed),
            error: res.err().map(|e| e.to_string()),
            overrides: ov,
            dir,
        });
    }
    let mut text = serde_json::to_string_pretty(&points)?;
    text.push('\n');
    fs::write(out.join("sweep.json"), text)?;
    Ok(points)
}

/// Hop distance in `edges` scaled by `scale`, for a batch of pairs grouped by
/// source.
pub fn hop_estimates(edges: &EdgeSet, pairs: &[(Node, Node)], scale: f64) -> Vec<f64> {
    let adj = Adjacency::new(edges);
    let mut by_src: BTreeMap<Node, Vec<usize>> = BTreeMap::new();
    for (i, &(s, _)) in pairs.iter().enumerate() {
        by_src.entry(s).or_default().push(i);
    }
    let mut out = vec![f64::INFINITY; pairs.len()];
    let rows: Vec<(Vec<usize>, Vec<u32>)> = by_src.into_iter().map(|(s, ix)| (ix, adj.bfs(s))).collect();
    for (ix, d) in rows {
        for i in ix {
            let h = d[pairs[i].1 as usize];
            if h != UNREACHED {
                out[i] = h as f64 * scale;
            }
        }
    }
    out
}
