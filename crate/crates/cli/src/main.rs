use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use multiplex_recon::amoeba::{build_distance_labels, run_amoeba_stage, AmoebaParams, LabelParams, SeedMode};
use multiplex_recon::config::{split_overrides, ExperimentConfig, Stage};
use multiplex_recon::edp::{adaptive_edp, const_dr, edp_prune, AdaptiveParams};
use multiplex_recon::estimate::DistanceEstimate;
use multiplex_recon::eval::evaluate_distortion;
use multiplex_recon::experiment::{run_experiment, sweep};
use multiplex_recon::graph::{Adjacency, Edge, Node};
use multiplex_recon::metric::{lattice_side, TorusSpace};
use multiplex_recon::prune::{simple_test, PruneParams};
use multiplex_recon::twoball::{
    calibrate_dimconst, extended_two_ball, multi_recursive_two_ball, two_ball_estimate, ExtParams, RecursiveMode,
    RecursiveParams,
};
use multiplex_recon::{io, Error};

#[derive(Parser)]
#[command(name = "mrecon", version, about = "Reconstruct hidden category metrics from a multiplex edge list")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a multiplex graph and write positions, edges and ground truth.
    Gen(ConfigArgs),
    /// Keep pairs with enough common neighbours.
    Prune(PruneArgs),
    /// Grow one spanner per category from the pruned pairs.
    Amoeba(AmoebaArgs),
    /// Refine an initial estimate with the basic two-ball count.
    Twoball(RefineArgs),
    /// Recursive two-ball refinement, routed by category count.
    RecTwoball(RecArgs),
    /// Two-ball refinement for short pairs plus long-hop paths.
    ExtTwoball(ExtArgs),
    /// Edge-disjoint-paths pruning of a graph with local structure.
    Edp(EdpArgs),
    /// Distortion of an estimates file against true positions.
    Eval(EvalArgs),
    /// Full pipeline from a config file.
    Run(ConfigArgs),
    /// Grid of runs over config overrides.
    Sweep(ConfigArgs),
}

/// `--config FILE`, `--out DIR`, `--check`, `--axis key=v1,v2` and any
/// `--<config key> <value>` override, in any order.
#[derive(Args)]
struct ConfigArgs {
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "ARGS")]
    args: Vec<String>,
}

#[derive(Args)]
struct PruneArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    m2: usize,
    #[arg(long, default_value_t = 1.0)]
    loose_factor: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AmoebaArgs {
    /// Union edge list.
    #[arg(long)]
    edges: PathBuf,
    /// Strictly pruned pairs.
    #[arg(long)]
    pruned: PathBuf,
    /// Loosely pruned pairs; defaults to the strict set.
    #[arg(long)]
    loose: Option<PathBuf>,
    #[arg(long)]
    categories: usize,
    #[arg(long)]
    amoeba_n: usize,
    #[arg(long)]
    amoeba_m: usize,
    #[arg(long)]
    amoeba_r: f64,
    #[arg(long)]
    diam_floor: u32,
    #[arg(long, default_value = "fast-then-brute")]
    seed_mode: String,
    /// Also write beacon distance labels per category.
    #[arg(long)]
    labels: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InitArgs {
    /// Union edge list.
    #[arg(long)]
    edges: PathBuf,
    /// Initial estimate: an edge list (hop distance times `scale`) or an
    /// estimates CSV.
    #[arg(long)]
    init: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long)]
    dim: usize,
    /// `u v` pairs to estimate; all pairs otherwise.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Divisor recorded in the output header.
    #[arg(long, default_value_t = 1.0)]
    normalizer: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RefineArgs {
    #[command(flatten)]
    init: InitArgs,
}

#[derive(Args)]
struct RecArgs {
    #[command(flatten)]
    init: InitArgs,
    #[arg(long)]
    c_pd: f64,
    /// Calibrated by simulation when absent.
    #[arg(long)]
    c_dim: Option<f64>,
    #[arg(long)]
    floor: f64,
    #[arg(long, default_value_t = f64::INFINITY)]
    x_max: f64,
    #[arg(long, default_value_t = 1)]
    categories: usize,
    #[arg(long, default_value_t = 4.0)]
    expansion_bound: f64,
    #[arg(long, default_value = "sequential")]
    mode: String,
    #[arg(long, default_value_t = 20000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ExtArgs {
    #[command(flatten)]
    init: InitArgs,
    #[arg(long)]
    r_scale: f64,
    #[arg(long, default_value_t = 4.0)]
    expansion_bound: f64,
}

#[derive(Args)]
struct EdpArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long, required_unless_present = "adaptive")]
    p: Option<usize>,
    #[arg(long, default_value_t = 3)]
    h: usize,
    #[arg(long)]
    adaptive: bool,
    #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
    h_candidates: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 4.0)]
    c0: f64,
    /// Expected long-range degree.
    #[arg(long, default_value_t = 3.0)]
    k: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    c_sw: f64,
    #[arg(long, default_value_t = 1)]
    density_bound: usize,
    #[arg(long, default_value_t = 1.0)]
    expansion: f64,
    #[arg(long)]
    bisect: bool,
    #[arg(long, default_value_t = multiplex_recon::edp::DEFAULT_STATE_CAP)]
    cap: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    positions: PathBuf,
    #[arg(long)]
    estimates: PathBuf,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 2.0)]
    norm_p: f64,
    /// Overrides the normalizer recorded in the estimates header.
    #[arg(long)]
    normalizer: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,4,8,16")]
    delta_grid: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

enum Fail {
    Config(String),
    Stage(String),
    Check,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        match e {
            Error::InvalidInput(_) | Error::Json(_) => Fail::Config(e.to_string()),
            _ => Fail::Stage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Config(m)) => {
            error!("{m}");
            ExitCode::from(2)
        }
        Err(Fail::Stage(m)) => {
            error!("{m}");
            ExitCode::from(3)
        }
        Err(Fail::Check) => {
            error!("acceptance check failed");
            ExitCode::from(4)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), Fail> {
    match cmd {
        Cmd::Gen(a) => {
            let (cfg, out, _, _) = config_args(&a.args)?;
            run_experiment(&ExperimentConfig { stages: vec![Stage::Generate], ..cfg }, &out)?;
        }
        Cmd::Run(a) => {
            let (cfg, out, check, _) = config_args(&a.args)?;
            let s = run_experiment(&cfg, &out)?;
            info!("wrote {}", out.join("summary.json").display());
            if check && !s.passed() {
                return Err(Fail::Check);
            }
        }
        Cmd::Sweep(a) => {
            let (cfg, out, check, axes) = config_args(&a.args)?;
            if axes.is_empty() {
                return Err(Fail::Config("sweep needs at least one --axis key=v1,v2".into()));
            }
            let points = sweep(&cfg, &axes, &out)?;
            if check && !points.iter().all(|p| p.passed) {
                return Err(Fail::Check);
            }
        }
        Cmd::Prune(a) => {
            let (edges, _) = io::load_edges(&a.edges)?;
            let p = simple_test(&Adjacency::new(&edges), &PruneParams::new(a.m2, a.loose_factor)?);
            let mut h = format!("pruned m2={}", a.m2);
            if a.loose_factor != 1.0 {
                h.push_str(&format!(" loose_factor={}", a.loose_factor));
            }
            io::save_edges(&a.out, &p.pairs, &[h])?;
        }
        Cmd::Amoeba(a) => amoeba(a)?,
        Cmd::Twoball(a) => {
            let (union, init, pairs) = load_refine_inputs(&a.init)?;
            let dim = a.init.dim;
            let vals: Vec<f64> = pairs
                .iter()
                .map(|&(s, t)| match two_ball_estimate(&union, &init, s, t, dim) {
                    Ok(o) => Ok(o.value),
                    Err(Error::EstimateUnavailable { .. }) => Ok(init.get(s, t)),
                    Err(e) => Err(e),
                })
                .collect::<Result<_, _>>()?;
            write_refined(&a.init, &pairs, &vals, "two-ball", init.n())?;
        }
        Cmd::RecTwoball(a) => {
            let (union, init, pairs) = load_refine_inputs(&a.init)?;
            let mode = match a.mode.as_str() {
                "sequential" => RecursiveMode::Sequential,
                "wave" => RecursiveMode::Wave,
                m => return Err(Fail::Config(format!("unknown mode `{m}`"))),
            };
            let dim = a.init.dim;
            let c_dim = match a.c_dim {
                Some(c) => c,
                None => calibrate_dimconst(dim, a.c_pd, a.trials, a.seed)?.c_dim,
            };
            let params = RecursiveParams { dim, c_pd: a.c_pd, c_dim, floor: a.floor, x_max: a.x_max, mode };
            let m = multi_recursive_two_ball(&union, &init, &params, a.categories, a.expansion_bound, a.init.normalizer)?;
            let vals: Vec<f64> = pairs.iter().map(|&(s, t)| m.get(s, t).unwrap_or(f64::INFINITY)).collect();
            write_refined(&a.init, &pairs, &vals, "recursive-two-ball", init.n())?;
        }
        Cmd::ExtTwoball(a) => {
            let (union, init, pairs) = load_refine_inputs(&a.init)?;
            let ext = extended_two_ball(&union, &init, &ExtParams::new(a.r_scale, a.expansion_bound)?, a.init.dim)?;
            let vals: Vec<f64> = pairs.iter().map(|&(s, t)| ext.estimate(s, t).unwrap_or(f64::INFINITY)).collect();
            write_refined(&a.init, &pairs, &vals, "extended-two-ball", init.n())?;
        }
        Cmd::Edp(a) => edp(a)?,
        Cmd::Eval(a) => eval(a)?,
    }
    Ok(())
}

type ConfigParts = (ExperimentConfig, PathBuf, bool, BTreeMap<String, Vec<String>>);

fn config_args(args: &[String]) -> Result<ConfigParts, Fail> {
    let mut rest = Vec::new();
    let mut config = None;
    let mut out = PathBuf::from("out");
    let mut check = false;
    let mut axes = BTreeMap::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let (key, inline) = match a.split_once('=') {
            Some((k, v)) if k.starts_with("--") => (k, Some(v.to_string())),
            _ => (a.as_str(), None),
        };
        let mut value = || inline.clone().or_else(|| it.next().cloned()).ok_or_else(|| Fail::Config(format!("missing value for {key}")));
        match key {
            "--check" => check = true,
            "--config" => config = Some(PathBuf::from(value()?)),
            "--out" => out = PathBuf::from(value()?),
            "--axis" => {
                let spec = value()?;
                let (k, vs) = spec.split_once('=').ok_or_else(|| Fail::Config(format!("axis `{spec}` is not key=v1,v2")))?;
                axes.insert(k.replace('-', "_"), vs.split(',').map(str::to_string).collect());
            }
            _ => {
                rest.push(a.clone());
            }
        }
    }
    let base = match config {
        Some(p) => ExperimentConfig::load(&p).map_err(|e| Fail::Config(format!("{}: {e}", p.display())))?,
        None => ExperimentConfig::default(),
    };
    let cfg = base.with_overrides(&split_overrides(&rest)?)?;
    Ok((cfg, out, check, axes))
}

fn load_init(path: &Path, scale: f64) -> Result<DistanceEstimate, Fail> {
    if path.extension().is_some_and(|e| e == "csv") {
        Ok(io::load_with(path, io::read_estimates)?.0)
    } else {
        let (e, _) = io::load_edges(path)?;
        Ok(DistanceEstimate::Spanner { adj: Adjacency::new(&e), scale })
    }
}

fn load_refine_inputs(a: &InitArgs) -> Result<(Adjacency, DistanceEstimate, Vec<(Node, Node)>), Fail> {
    let (union, _) = io::load_edges(&a.edges)?;
    let init = load_init(&a.init, a.scale)?;
    if init.n() != union.n() {
        return Err(Fail::Config("initial estimate and union disagree on n".into()));
    }
    let pairs = match &a.pairs {
        Some(p) => {
            let ps = io::load_with(p, io::read_pairs)?;
            if ps.iter().any(|&(u, v)| u == v || u.max(v) as usize >= union.n()) {
                return Err(Fail::Config("pairs must be distinct nodes inside 0..n".into()));
            }
            ps
        }
        None => {
            let n = union.n() as Node;
            (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
        }
    };
    Ok((Adjacency::new(&union), init, pairs))
}

fn write_refined(a: &InitArgs, pairs: &[(Node, Node)], vals: &[f64], algorithm: &str, n: usize) -> Result<(), Fail> {
    let mut rows: Vec<(Edge, f64)> = pairs.iter().zip(vals).map(|(&(s, t), &x)| (Edge::new(s, t), x)).collect();
    rows.sort_by_key(|r| r.0);
    rows.dedup_by_key(|r| r.0);
    io::save_with(&a.out, |w| io::write_estimates(w, n, rows, a.normalizer, algorithm))?;
    Ok(())
}

fn amoeba(a: AmoebaArgs) -> Result<(), Fail> {
    let seed_mode = match a.seed_mode.as_str() {
        "brute" => SeedMode::Brute,
        "fast" => SeedMode::Fast,
        "fast-then-brute" => SeedMode::FastThenBrute,
        m => return Err(Fail::Config(format!("unknown seed mode `{m}`"))),
    };
    let params = AmoebaParams::new(a.amoeba_n, a.amoeba_m, a.amoeba_r, a.diam_floor, seed_mode)?;
    let (union, _) = io::load_edges(&a.edges)?;
    let (strict, _) = io::load_edges(&a.pruned)?;
    let loose = match &a.loose {
        Some(p) => io::load_edges(p)?.0,
        None => strict.clone(),
    };
    let res = run_amoeba_stage(&union, &strict, &loose, a.categories, &params)?;
    for (i, e) in res.category_edges.iter().enumerate() {
        let header = format!("amoeba cat={i} amoebaR={}", params.amoeba_r);
        io::save_edges(&a.out.join(format!("amoeba_cat{i}.txt")), e, &[header])?;
        if a.labels {
            let seed = multiplex_recon::rng::derive(a.seed, i as u64);
            let labels = build_distance_labels(&Adjacency::new(e), &LabelParams::default(), seed)?;
            io::save_with(&a.out.join(format!("labels_cat{i}.csv")), |w| io::write_labels(w, &labels))?;
        }
    }
    info!("found {} categories, {} pruned pairs uncovered", res.category_edges.len(), res.uncovered);
    Ok(())
}

fn edp(a: EdpArgs) -> Result<(), Fail> {
    let (edges, _) = io::load_edges(&a.edges)?;
    let n = edges.n();
    let (p, h, pruned) = if a.adaptive {
        let r = adaptive_edp(
            &edges,
            &AdaptiveParams {
                h_candidates: a.h_candidates,
                alpha: a.alpha,
                c0: a.c0,
                k: a.k,
                c_sw: a.c_sw,
                dim: a.dim,
                density_bound: a.density_bound,
                expansion: a.expansion,
                bisect: a.bisect,
                cap: a.cap,
            },
        )?;
        (r.p, r.h, r.pruned)
    } else {
        let p = a.p.expect("clap requires p without --adaptive");
        (p, a.h, edp_prune(&edges, p, a.h, a.cap)?)
    };
    let cdr = const_dr(a.alpha, p, h, n, a.dim, a.k, a.c0);
    io::save_edges(&a.out, &pruned, &[format!("edp p={p} h={h} constdr={cdr}")])?;
    info!("kept {} of {} edges at p={p}, h={h}", pruned.len(), edges.len());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<(), Fail> {
    let (est, header) = io::load_with(&a.estimates, io::read_estimates)?;
    let n = est.n();
    let side = lattice_side(n, a.dim).ok_or_else(|| Fail::Config(format!("n={n} is not a perfect power of {}", a.dim)))?;
    let space = TorusSpace::new(a.dim, side as f64, a.norm_p)?;
    let points = io::load_positions(&a.positions, space, usize::MAX)?;
    let normalizer = a.normalizer.or_else(|| header.get("normalizer")).unwrap_or(1.0);
    let DistanceEstimate::Overlay { values, .. } = &est else { unreachable!("estimates load as an overlay") };
    let pairs: Vec<(Node, Node)> =
        values.iter().enumerate().flat_map(|(u, m)| m.keys().filter(move |&&v| v as usize > u).map(move |&v| (u as Node, v))).collect();
    let report = evaluate_distortion(
        |u, v| points.dist(u, v) / normalizer,
        |u, v| est.get(u, v),
        &pairs,
        &a.delta_grid,
        None,
        (n as f64).powf(-0.5),
    )?;
    std::fs::create_dir_all(&a.out).map_err(Error::from)?;
    let mut text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    text.push('\n');
    std::fs::write(a.out.join("distortion.json"), text).map_err(Error::from)?;
    io::save_with(&a.out.join("distortion.csv"), |w| {
        use std::io::Write;
        writeln!(w, "delta,expansion,contraction")?;
        for (d, c) in &report.expansion_curve {
            writeln!(w, "{d},{c},{}", report.contraction)?;
        }
        Ok(())
    })?;
    info!("{} pairs, contraction {}", report.pairs_used, report.contraction);
    Ok(())
}
