//! Command-line interface: `grow`, `chain`, `project`, `verify`, `mc` and
//! `scaling`.
//!
//! Exit codes: `0` success (all checks passed), `1` a check failed, `2`
//! usage error (bad arguments or parameters).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::decorated::{project_collapsed, project_decorated, DecoratedTree};
use crate::error::{Error, Result};
use crate::exact::{self, Caps, CheckResult, ExactContext};
use crate::growth::{grow_decorated_to, grow_nonplanar, grow_semiplanar, GrowthModel, Variant};
use crate::harness::{self, Observable, RunConfig, ScalingConfig, Space, Start};
use crate::numeric::{format_q, parse_rational, Params, Q};
use crate::sampling::{replica_rng, RngChooser};
use crate::stats::{compare_distributions, Reference};
use crate::tree::LabelledTree;

/// Exit code: success.
pub const EXIT_OK: i32 = 0;
/// Exit code: a check failed.
pub const EXIT_FAIL: i32 = 1;
/// Exit code: usage error.
pub const EXIT_USAGE: i32 = 2;

/// Output format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// JSON document.
    Json,
    /// Comma-separated values.
    Csv,
    /// Human-readable text.
    Text,
}

/// `(α, γ)` tree growth processes and down-up chains.
#[derive(Debug, Parser)]
#[command(name = "agtrees", version, about)]
pub struct Cli {
    /// Parameter α as "p/q" or a decimal.
    #[arg(long, global = true, default_value = "1/2")]
    pub alpha: String,
    /// Parameter γ as "p/q" or a decimal.
    #[arg(long, global = true, default_value = "1/2")]
    pub gamma: String,
    /// Master seed.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (or directory for `scaling`); standard output if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
    /// Subcommand.
    #[command(subcommand)]
    pub command: Command,
}

/// Growth variant on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    /// Non-planar growth.
    Nonplanar,
    /// Semi-planar growth.
    Semiplanar,
    /// Internal growth.
    Internal,
    /// Branch-point growth (order from `--c`).
    Branchpoint,
    /// Decorated growth (shape size from `--k`).
    Decorated,
}

/// Chain on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpaceArg {
    /// Aldous' uniform chain.
    Uniform,
    /// Binary α-chain.
    Alpha,
    /// Non-planar chain.
    Nonplanar,
    /// Semi-planar chain.
    Semiplanar,
    /// Decorated chain.
    Decorated,
}

impl From<SpaceArg> for Space {
    fn from(s: SpaceArg) -> Space {
        match s {
            SpaceArg::Uniform => Space::Uniform,
            SpaceArg::Alpha => Space::Alpha,
            SpaceArg::Nonplanar => Space::NonPlanar,
            SpaceArg::Semiplanar => Space::SemiPlanar,
            SpaceArg::Decorated => Space::Decorated,
        }
    }
}

/// Exact check selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    /// Stationarity of the growth law under every chain.
    Stationarity,
    /// Kemeny–Snell lumpability of collapsed onto decorated trees.
    Lumpability,
    /// Intertwining of the collapsed and decorated lifts.
    Intertwining,
    /// Down-step independence.
    Independence,
    /// Kernel factorization through the semi-planar chain.
    KernelEquality,
    /// Everything.
    All,
}

/// Reference law for `mc`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReferenceArg {
    /// Independent growth-law samples (shape observable).
    Growth,
    /// Exact law by enumeration (small `n`).
    Exact,
    /// Decorated growth urn (mass observable).
    Urn,
    /// No comparison.
    None,
}

/// Observable for `mc` and `chain`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObservableArg {
    /// Unlabelled shape.
    Shape,
    /// Full state.
    State,
    /// Decorated projection onto `[k]`.
    Masses,
}

impl From<ObservableArg> for Observable {
    fn from(o: ObservableArg) -> Observable {
        match o {
            ObservableArg::Shape => Observable::Shape,
            ObservableArg::State => Observable::State,
            ObservableArg::Masses => Observable::Masses,
        }
    }
}

/// Start for `mc` and `chain`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    /// Growth-law draw.
    Growth,
    /// Caterpillar.
    Comb,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample trees from a growth process (or print its exact law).
    Grow {
        /// Number of leaves (total mass for decorated growth).
        #[arg(long)]
        n: usize,
        /// Variant.
        #[arg(long, value_enum, default_value = "nonplanar")]
        variant: VariantArg,
        /// Order of branch-point growth.
        #[arg(long, default_value_t = 3)]
        c: usize,
        /// Shape size for decorated growth.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Number of samples.
        #[arg(long, default_value_t = 1)]
        samples: usize,
        /// Print the exact rational law instead of samples.
        #[arg(long)]
        exact: bool,
    },
    /// Run a down-up chain and print the visited states.
    Chain {
        /// Chain.
        #[arg(long, value_enum, default_value = "nonplanar")]
        space: SpaceArg,
        /// Number of leaves (total mass for decorated chains).
        #[arg(long)]
        n: usize,
        /// Shape size of decorated chains.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Number of steps.
        #[arg(long, default_value_t = 10)]
        steps: u64,
        /// Initial state.
        #[arg(long, value_enum, default_value = "growth")]
        start: StartArg,
    },
    /// Project trees onto `[k]` (collapsed and decorated representations).
    Project {
        /// Tree in the tree grammar.
        #[arg(long)]
        tree: Option<String>,
        /// File with one tree per line.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Number of retained labels.
        #[arg(long)]
        k: usize,
    },
    /// Exact rational verification.
    Verify {
        /// Which check.
        #[arg(long, value_enum, default_value = "all")]
        check: CheckArg,
        /// Number of leaves.
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Shape size for decorated checks.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Report format override (`json`).
        #[arg(long, value_enum)]
        report: Option<Format>,
    },
    /// Monte Carlo simulation and comparison with a reference law.
    Mc {
        /// Chain.
        #[arg(long, value_enum, default_value = "nonplanar")]
        space: SpaceArg,
        /// Number of leaves.
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Shape size.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Steps per replica.
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        /// Burn-in steps.
        #[arg(long, default_value_t = 1_000)]
        burn_in: u64,
        /// Thinning interval.
        #[arg(long, default_value_t = 1)]
        thin: u64,
        /// Replicas.
        #[arg(long, default_value_t = 1)]
        replicas: u64,
        /// Observable.
        #[arg(long, value_enum, default_value = "shape")]
        observable: ObservableArg,
        /// Initial state.
        #[arg(long, value_enum, default_value = "comb")]
        start: StartArg,
        /// Reference law.
        #[arg(long, value_enum, default_value = "growth")]
        reference: ReferenceArg,
        /// Samples for the growth reference.
        #[arg(long, default_value_t = 1_000_000)]
        reference_samples: u64,
        /// Fail (exit 1) if the total variation exceeds this.
        #[arg(long)]
        tv_max: Option<f64>,
        /// Fail (exit 1) if the chi-square p-value is below this.
        #[arg(long)]
        p_min: Option<f64>,
    },
    /// Wright-Fisher scaling experiment on decorated mass proportions.
    Scaling {
        /// Total masses, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "25,50,100")]
        ns: Vec<usize>,
        /// Fixed `[k]`-shape.
        #[arg(long, default_value = "(1,2)")]
        shape: String,
        /// Horizon in time units of n² steps.
        #[arg(long, default_value_t = 200.0)]
        horizon: f64,
        /// Records per time unit.
        #[arg(long, default_value_t = 20)]
        samples_per_unit: usize,
        /// Replicas per n.
        #[arg(long, default_value_t = 8)]
        replicas: u64,
        /// Tracked part address.
        #[arg(long, default_value = "e:")]
        x0: String,
        /// Fail (exit 1) unless the exponent lies in [1.5, 2.5] and every
        /// mean is within 3 standard errors of its prediction.
        #[arg(long)]
        check: bool,
    },
}

fn exact_params(cli: &Cli) -> Result<Params<Q>> {
    Params::new(parse_rational(&cli.alpha)?, parse_rational(&cli.gamma)?)
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(p) => {
            if let Some(dir) = p.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            std::fs::write(p, text)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn rows_output(cli: &Cli, header: &[&str], rows: &[Vec<String>], json_doc: Value) -> Result<()> {
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&json_doc).map_err(|e| Error::Io(e.to_string()))? + "\n",
        Format::Csv => {
            let mut s = header.join(",") + "\n";
            for r in rows {
                s += &(r.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(",") + "\n");
            }
            s
        }
        Format::Text => rows.iter().map(|r| r.join("\t") + "\n").collect(),
    };
    emit(cli, &text)
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn variant_of(v: VariantArg, c: usize) -> Variant {
    match v {
        VariantArg::Nonplanar => Variant::NonPlanar,
        VariantArg::Semiplanar => Variant::SemiPlanar,
        VariantArg::Internal => Variant::Internal,
        VariantArg::Branchpoint => Variant::BranchPoint(c),
        VariantArg::Decorated => Variant::Decorated,
    }
}

fn cmd_grow(cli: &Cli, n: usize, variant: VariantArg, c: usize, k: usize, samples: usize, exact: bool) -> Result<i32> {
    let variant = variant_of(variant, c);
    if exact {
        let p = exact_params(cli)?;
        let model = GrowthModel::new(variant, p)?;
        let law = exact::exact_law(&model, n, Some(k), &Caps::default())?;
        let rows: Vec<Vec<String>> = law.iter().map(|(s, q)| vec![s.clone(), format_q(q)]).collect();
        let dist: Vec<Value> = law.iter().map(|(s, q)| json!({"outcome": s, "p": format_q(q)})).collect();
        let doc = json!({"schema": harness::SCHEMA, "n": n, "distribution": dist});
        rows_output(cli, &["state", "probability"], &rows, doc)?;
        return Ok(EXIT_OK);
    }
    let p = exact_params(cli)?.to_f64();
    let model = GrowthModel::new(variant, p.clone())?;
    let mut rng = replica_rng(cli.seed, 0);
    let mut ch = RngChooser::new(&mut rng);
    let mut trees = Vec::with_capacity(samples);
    for _ in 0..samples {
        let s = match variant {
            Variant::NonPlanar => grow_nonplanar(&model, n, &mut ch)?.encode(),
            Variant::Decorated => {
                let shape = harness::sample_growth_tree(&p, k, &mut ch)?;
                grow_decorated_to(&DecoratedTree::unit(&shape), &p, n, &mut ch)?.key()
            }
            _ => grow_semiplanar(&model, n, &mut ch)?.encode(),
        };
        trees.push(s);
    }
    let rows: Vec<Vec<String>> = trees.iter().enumerate().map(|(i, t)| vec![i.to_string(), t.clone()]).collect();
    let doc = json!({"schema": harness::SCHEMA, "seed": cli.seed, "n": n, "trees": trees});
    rows_output(cli, &["sample", "tree"], &rows, doc)?;
    Ok(EXIT_OK)
}

fn cmd_chain(cli: &Cli, space: SpaceArg, n: usize, k: usize, steps: u64, start: StartArg) -> Result<i32> {
    let p = exact_params(cli)?.to_f64();
    let mut cfg = RunConfig::new(space.into(), p);
    cfg.n = n;
    cfg.k = k;
    cfg.steps = steps.max(1);
    cfg.seed = cli.seed;
    cfg.observable = Observable::State;
    cfg.start = if start == StartArg::Growth { Start::Growth } else { Start::Comb };
    cfg.validate()?;
    let mut rng = replica_rng(cfg.seed, 0);
    let mut ch = RngChooser::new(&mut rng);
    let mut state = harness::ChainState::initial(&cfg, &mut ch)?;
    let mut states = vec![state.observe(Observable::State, k)?];
    for _ in 0..steps {
        state.step(cfg.space, &cfg.params, &mut ch)?;
        states.push(state.observe(Observable::State, k)?);
    }
    let rows: Vec<Vec<String>> = states.iter().enumerate().map(|(i, s)| vec![i.to_string(), s.clone()]).collect();
    let doc = json!({"schema": harness::SCHEMA, "seed": cli.seed, "states": states});
    rows_output(cli, &["step", "state"], &rows, doc)?;
    Ok(EXIT_OK)
}

fn cmd_project(cli: &Cli, tree: &Option<String>, input: &Option<PathBuf>, k: usize) -> Result<i32> {
    let mut trees: Vec<String> = Vec::new();
    if let Some(t) = tree {
        trees.push(t.clone());
    }
    if let Some(path) = input {
        let text = std::fs::read_to_string(path)?;
        trees.extend(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from));
    }
    if trees.is_empty() {
        return Err(Error::Parse("no tree given (use --tree or --input)".into()));
    }
    let mut rows = Vec::new();
    let mut docs = Vec::new();
    for s in &trees {
        let t = LabelledTree::parse(s)?;
        let c = project_collapsed(t.tree(), k)?;
        let d = project_decorated(&t, k)?;
        rows.push(vec![s.clone(), c.key(), d.key()]);
        docs.push(json!({"tree": s, "collapsed": c.to_json(), "decorated": d.to_json()}));
    }
    rows_output(cli, &["tree", "collapsed", "decorated"], &rows, json!({"schema": harness::SCHEMA, "k": k, "projections": docs}))?;
    Ok(EXIT_OK)
}

/// Runs the selected exact checks.
pub fn run_checks(check: CheckArg, n: usize, k: usize, params: &Params<Q>) -> Result<(Vec<CheckResult>, Value)> {
    let caps = Caps::default();
    let mut ctx = ExactContext::new(n, params.clone(), caps.clone());
    let ks: Vec<usize> = if k >= 2 && k < n { vec![k] } else { Vec::new() };
    let mut out = Vec::new();
    let mut extra = serde_json::Map::new();
    let all = check == CheckArg::All;
    if all || check == CheckArg::Stationarity {
        out.extend(exact::stationarity_checks(&mut ctx, &ks)?);
    }
    if all || check == CheckArg::KernelEquality {
        out.extend(exact::kernel_equality_checks(&mut ctx, &ks)?);
        let report = exact::i_tilde_report(&mut ctx)?;
        extra.insert("i_tilde_laws".into(), serde_json::to_value(report).map_err(|e| Error::Io(e.to_string()))?);
    }
    if (all || matches!(check, CheckArg::Lumpability | CheckArg::Intertwining)) && k >= 1 && k < n {
        let li = exact::lumpability_intertwining_checks(&mut ctx, k)?;
        for c in li {
            let is_lump = c.name.starts_with("lumpability");
            if all || (is_lump == (check == CheckArg::Lumpability)) {
                out.push(c);
            }
        }
        if all || check == CheckArg::Intertwining {
            let r = exact::check_projected_markov(&mut ctx, k)?;
            out.push(CheckResult {
                name: format!("markov/decorated-projection/n={n}/k={k}"),
                pass: r == Q::from_integer(0.into()),
                residual: Some(format_q(&r)),
                details: json!({"description": "two-step joint law of the projected chain from the decorated lift versus the decorated kernel"}),
            });
        }
    }
    if all || check == CheckArg::Independence {
        let rep = exact::check_downstep_independence(n, params, &caps)?;
        let is_zero = |s: &str| parse_rational(s).is_ok_and(|q| q == Q::from_integer(0.into()));
        let pass_fact = is_zero(&rep.factorization_residual) && is_zero(&rep.pushforward_residual);
        out.push(CheckResult {
            name: format!("independence/factorization/n={n}"),
            pass: pass_fact,
            residual: Some(rep.factorization_residual.clone()),
            details: json!({"pushforward_residual": rep.pushforward_residual}),
        });
        let all_match = rep.table.iter().all(|r| r.matches);
        out.push(CheckResult {
            name: format!("independence/event-probabilities/n={n}"),
            pass: all_match,
            residual: Some(rep.off_diagonal_residual.clone()),
            details: json!({"off_diagonal_residual_i_ge_2": rep.off_diagonal_residual_i_ge_2}),
        });
        extra.insert("independence".into(), serde_json::to_value(rep).map_err(|e| Error::Io(e.to_string()))?);
    }
    Ok((out, Value::Object(extra)))
}

fn cmd_verify(cli: &Cli, check: CheckArg, n: usize, k: usize, report: Option<Format>) -> Result<i32> {
    let params = exact_params(cli)?;
    let (checks, extra) = run_checks(check, n, k, &params)?;
    let pass = checks.iter().all(|c| c.pass);
    let format = report.unwrap_or(cli.format);
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| vec![c.name.clone(), if c.pass { "PASS".into() } else { "FAIL".into() }, c.residual.clone().unwrap_or_default()])
        .collect();
    let doc = json!({
        "schema": harness::SCHEMA,
        "alpha": format_q(&params.alpha),
        "gamma": format_q(&params.gamma),
        "n": n,
        "k": k,
        "pass": pass,
        "checks": checks,
        "reports": extra,
    });
    let cli2 = Cli { format, ..clone_globals(cli) };
    rows_output(&cli2, &["check", "status", "residual"], &rows, doc)?;
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

fn clone_globals(cli: &Cli) -> Cli {
    Cli {
        alpha: cli.alpha.clone(),
        gamma: cli.gamma.clone(),
        seed: cli.seed,
        threads: cli.threads,
        out: cli.out.clone(),
        format: cli.format,
        command: Command::Project { tree: None, input: None, k: 0 },
    }
}

/// Exact law of an observable, as floats, for small `n`.
pub fn exact_reference(cfg: &RunConfig, params: &Params<Q>) -> Result<BTreeMap<String, f64>> {
    use crate::numeric::Scalar;
    let caps = Caps::default();
    let mut ctx = ExactContext::new(cfg.n, params.clone(), caps.clone());
    let law: exact::Law = match (cfg.space, cfg.observable) {
        (Space::Decorated, _) => ctx.decorated_law(cfg.k)?,
        (_, Observable::Masses) => ctx.decorated_law(cfg.k)?,
        (Space::SemiPlanar, Observable::State) => exact::law_of(ctx.semiplanar_law()?),
        (Space::Uniform, _) => {
            let m = GrowthModel::new(Variant::NonPlanar, Params::new(Q::ratio(1, 2), Q::ratio(1, 2))?)?;
            exact::law_of(&exact::nonplanar_growth_law(&m, cfg.n, &caps)?)
        }
        (Space::Alpha, _) => {
            let m = GrowthModel::new(Variant::NonPlanar, Params::new(params.alpha.clone(), Q::ratio(1, 1) - params.alpha.clone())?)?;
            exact::law_of(&exact::nonplanar_growth_law(&m, cfg.n, &caps)?)
        }
        _ => ctx.nonplanar_law()?,
    };
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for (key, q) in law {
        let obs = match cfg.observable {
            Observable::Shape => {
                if cfg.space == Space::Decorated {
                    DecoratedTree::from_key(&key)?.tree().shape_key()
                } else if cfg.space == Space::SemiPlanar {
                    crate::semiplanar::SemiPlanarTree::parse(&key)?.tree().shape_key()
                } else {
                    LabelledTree::parse(&key)?.shape_key()
                }
            }
            _ => key,
        };
        *out.entry(obs).or_insert(0.0) += q.to_f64();
    }
    Ok(out)
}

/// Decorated stationary law of the mass observable: shapes from the exact
/// `k`-leaf growth law, masses from the growth urn.
pub fn urn_reference(cfg: &RunConfig, params: &Params<Q>) -> Result<BTreeMap<String, f64>> {
    use crate::numeric::Scalar;
    let shapes = exact::nonplanar_growth_law(&GrowthModel::new(Variant::NonPlanar, params.clone())?, cfg.k, &Caps::default())?;
    let pf = params.to_f64();
    let mut out = BTreeMap::new();
    for (shape, q) in shapes.values() {
        for (key, p) in harness::dirmult_decorated_law(shape, cfg.n, &pf)? {
            *out.entry(key).or_insert(0.0) += p * q.to_f64();
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_mc(cli: &Cli, cmd: &Command) -> Result<i32> {
    let Command::Mc { space, n, k, steps, burn_in, thin, replicas, observable, start, reference, reference_samples, tv_max, p_min } = cmd else {
        unreachable!("dispatched on Mc")
    };
    let params = exact_params(cli)?;
    let pf = params.to_f64();
    let cfg = RunConfig {
        space: (*space).into(),
        params: pf.clone(),
        n: *n,
        k: *k,
        steps: *steps,
        burn_in: *burn_in,
        thin: *thin,
        seed: cli.seed,
        replicas: *replicas,
        observable: (*observable).into(),
        start: if *start == StartArg::Growth { Start::Growth } else { Start::Comb },
        keep_stream: false,
    };
    let result = harness::run_simulation(&cfg)?;
    let reference = match reference {
        ReferenceArg::None => None,
        ReferenceArg::Exact => Some(Reference::Law(exact_reference(&cfg, &params)?)),
        ReferenceArg::Urn => Some(Reference::Law(urn_reference(&cfg, &params)?)),
        ReferenceArg::Growth => {
            if cfg.observable != Observable::Shape || cfg.space == Space::Decorated {
                return Err(Error::InvalidParams("the growth reference compares shapes of tree chains".into()));
            }
            let rp = match cfg.space {
                Space::Uniform => Params::new(0.5, 0.5)?,
                Space::Alpha => Params::new(pf.alpha, 1.0 - pf.alpha)?,
                _ => pf.clone(),
            };
            Some(Reference::Counts(harness::growth_shape_reference(&rp, cfg.n, *reference_samples, cli.seed, 16)?))
        }
    };
    let cmp = match &reference {
        Some(r) => Some(compare_distributions(&result.counts, r)?),
        None => None,
    };
    let mut pass = true;
    if let Some(c) = &cmp {
        if let Some(t) = tv_max {
            pass &= c.tv <= *t;
        }
        if let Some(p) = p_min {
            pass &= c.p >= *p;
        }
    }
    let rows: Vec<Vec<String>> = result.counts.iter().map(|(k, v)| vec![k.clone(), v.to_string()]).collect();
    let doc = json!({
        "schema": harness::SCHEMA,
        "seed_scheme": harness::SEED_SCHEME,
        "config": cfg,
        "total": result.total,
        "counts": result.counts,
        "comparison": cmp,
        "pass": pass,
    });
    match cli.format {
        Format::Text => {
            let mut s = format!("samples: {}\nstates: {}\n", result.total, result.counts.len());
            if let Some(c) = &cmp {
                s += &format!("tv: {:.6}\nchi2: {:.3} (df {}), p = {:.4}\n", c.tv, c.chi2, c.df, c.p);
            }
            s += if pass { "PASS\n" } else { "FAIL\n" };
            emit(cli, &s)?;
        }
        _ => rows_output(cli, &["state", "count"], &rows, doc)?,
    }
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_scaling(cli: &Cli, cmd: &Command) -> Result<i32> {
    let Command::Scaling { ns, shape, horizon, samples_per_unit, replicas, x0, check } = cmd else {
        unreachable!("dispatched on Scaling")
    };
    let cfg = ScalingConfig {
        ns: ns.clone(),
        shape: shape.clone(),
        params: exact_params(cli)?.to_f64(),
        horizon: *horizon,
        samples_per_unit: *samples_per_unit,
        replicas: *replicas,
        seed: cli.seed,
        x0: x0.clone(),
    };
    let summary = harness::wf_scaling_experiment(&cfg, cli.out.as_deref())?;
    let slope = summary.fit.as_ref().map(|f| f.slope);
    let means_ok = summary.points.iter().all(|p| p.max_z <= 3.0);
    let pass = !*check || (slope.is_some_and(|s| (1.5..=2.5).contains(&s)) && means_ok);
    let doc = serde_json::to_value(&summary).map_err(|e| Error::Io(e.to_string()))?;
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))? + "\n",
        Format::Csv => {
            let mut s = "n,tau_steps,tau_units,max_z,stopped_fraction\n".to_string();
            for p in &summary.points {
                s += &format!("{},{},{},{},{}\n", p.n, p.tau_steps, p.tau_units, p.max_z, p.stopped_fraction);
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for p in &summary.points {
                s += &format!("n={} tau={:.1} steps ({:.3} units) max|z|={:.2} stopped={:.2}\n", p.n, p.tau_steps, p.tau_units, p.max_z, p.stopped_fraction);
            }
            if let Some(f) = &summary.fit {
                s += &format!("fitted exponent {:.3} ± {:.3}\n", f.slope, f.slope_se);
            }
            s
        }
    };
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?)?;
            std::io::stdout().lock().write_all(text.as_bytes())?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

/// Runs a parsed command line and returns the exit code. Domain errors
/// (invalid parameters, unparsable trees, caps) are usage errors.
pub fn run(cli: Cli) -> i32 {
    if let Some(t) = cli.threads {
        // a second initialisation in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let res = match &cli.command {
        Command::Grow { n, variant, c, k, samples, exact } => cmd_grow(&cli, *n, *variant, *c, *k, *samples, *exact),
        Command::Chain { space, n, k, steps, start } => cmd_chain(&cli, *space, *n, *k, *steps, *start),
        Command::Project { tree, input, k } => cmd_project(&cli, tree, input, *k),
        Command::Verify { check, n, k, report } => cmd_verify(&cli, *check, *n, *k, *report),
        Command::Mc { .. } => cmd_mc(&cli, &cli.command),
        Command::Scaling { .. } => cmd_scaling(&cli, &cli.command),
    };
    match res {
        Ok(code) => code,
        Err(Error::Io(e)) => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

/// Parses `args` (including the program name) and runs; clap usage errors
/// exit with code 2, `--help`/`--version` with 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
