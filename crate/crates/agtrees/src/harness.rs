//! Monte Carlo driver: seeded replica-parallel simulation of the chains,
//! growth-law reference samples, and the Wright-Fisher scaling experiment
//! on decorated mass proportions.
//!
//! Replica `r` of a run with master seed `s` draws from
//! [`replica_rng`]`(s, r)`; replicas run in parallel and their results are
//! merged in replica order, so outputs do not depend on the thread count.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::chains::{alpha_chain_step, decorated_chain_step, nonplanar_chain_step, semiplanar_chain_step, uniform_chain_step};
use crate::decorated::{canonical_parts, initial_weight, project_decorated, DecoratedTree};
use crate::error::{Error, Result};
use crate::growth::{grow_decorated_to, grow_nonplanar_fast, grow_semiplanar, GrowthModel, Variant};
use crate::numeric::Params;
use crate::sampling::{replica_rng, RngChooser};
use crate::semiplanar::SemiPlanarTree;
use crate::stats::{integrated_autocorrelation_time, linear_fit, mean, variance, LinearFit};
use crate::tree::{part_address, part_kind, LabelledTree, PartKind, Tree};
use crate::urn::dirmult_pmf_unchecked;

/// Version tag written into every JSON and CSV output.
pub const SCHEMA: &str = "agtrees/1";

/// Description of the per-replica seeding, recorded in output metadata.
pub const SEED_SCHEME: &str = "ChaCha8 keyed by the master seed; replica r uses stream number r";

/// State space of a simulated chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    /// Aldous' uniform chain on binary trees.
    Uniform,
    /// The binary `α`-chain.
    Alpha,
    /// Non-planar `(α, γ)`-chain.
    NonPlanar,
    /// Semi-planar `(α, γ)`-chain.
    SemiPlanar,
    /// Decorated `(α, γ)`-chain on `[k]`-trees (`k` from the config).
    Decorated,
}

/// Quantity recorded at every sampled time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// Unlabelled shape of the (projected non-planar) tree.
    Shape,
    /// Canonical encoding of the full state.
    State,
    /// Decorated projection onto `[k]` (the state itself for decorated
    /// chains).
    Masses,
}

/// Initial state of every replica.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    /// An independent draw from the growth law (stationary start).
    Growth,
    /// The caterpillar `(…((1,2),3)…,n)` (for decorated chains: its
    /// decorated projection).
    Comb,
}

/// Configuration of a simulation run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    /// State space.
    pub space: Space,
    /// Model parameters.
    pub params: Params<f64>,
    /// Number of leaves (total mass for decorated chains).
    pub n: usize,
    /// Shape size of decorated chains and mass observables.
    pub k: usize,
    /// Steps per replica.
    pub steps: u64,
    /// Steps discarded before recording.
    pub burn_in: u64,
    /// Record every `thin`-th step after the burn-in.
    pub thin: u64,
    /// Master seed.
    pub seed: u64,
    /// Number of independent replicas.
    pub replicas: u64,
    /// Recorded quantity.
    pub observable: Observable,
    /// Initial state.
    pub start: Start,
    /// Keep the recorded stream of each replica (not only counts).
    pub keep_stream: bool,
}

impl RunConfig {
    /// Default configuration for a space: `n = 8`, `k = 2`, 10⁴ steps, no
    /// burn-in, no thinning, seed 1, one replica, shape observable, comb
    /// start.
    pub fn new(space: Space, params: Params<f64>) -> Self {
        RunConfig {
            space,
            params,
            n: 8,
            k: 2,
            steps: 10_000,
            burn_in: 0,
            thin: 1,
            seed: 1,
            replicas: 1,
            observable: Observable::Shape,
            start: Start::Comb,
            keep_stream: false,
        }
    }

    /// Checks `steps > burn_in ≥ 0`, `thin ≥ 1`, `replicas ≥ 1` and the
    /// sizes required by the space.
    pub fn validate(&self) -> Result<()> {
        if self.steps <= self.burn_in {
            return Err(Error::OutOfRange(format!("steps ({}) must exceed burn-in ({})", self.steps, self.burn_in)));
        }
        if self.thin == 0 || self.replicas == 0 {
            return Err(Error::OutOfRange("thin and replicas must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::OutOfRange("n >= 2 required".into()));
        }
        let needs_k = self.space == Space::Decorated || self.observable == Observable::Masses;
        if needs_k && (self.k == 0 || self.k > self.n) {
            return Err(Error::OutOfRange(format!("k = {} must lie in 1..=n", self.k)));
        }
        if self.space == Space::Decorated && self.observable == Observable::Shape && self.k < 2 {
            return Err(Error::OutOfRange("shape observable needs k >= 2".into()));
        }
        if matches!(self.space, Space::Uniform | Space::Alpha) && self.start == Start::Growth {
            // the stationary law of the binary chains is the binary growth law
            if self.space == Space::Uniform && (self.params.alpha != 0.5 || self.params.gamma != 0.5) {
                return Err(Error::InvalidParams("the uniform chain's growth start needs alpha = gamma = 1/2".into()));
            }
        }
        Ok(())
    }

    /// Number of recorded samples per replica.
    pub fn samples_per_replica(&self) -> u64 {
        (self.steps - self.burn_in) / self.thin
    }
}

/// Chain state of any space.
#[derive(Clone, Debug)]
pub enum ChainState {
    /// Non-planar (or binary) tree.
    NonPlanar(LabelledTree),
    /// Semi-planar tree.
    SemiPlanar(SemiPlanarTree),
    /// Decorated tree.
    Decorated(DecoratedTree),
}

fn comb(n: usize) -> LabelledTree {
    let mut s = "1".to_string();
    for l in 2..=n {
        s = format!("({s},{l})");
    }
    LabelledTree::parse(&s).expect("comb")
}

/// Draws a tree from the non-planar growth law with the class-total sampler.
pub fn sample_growth_tree<C: crate::sampling::Chooser<f64> + ?Sized>(params: &Params<f64>, n: usize, ch: &mut C) -> Result<LabelledTree> {
    Ok(LabelledTree::from_tree(grow_nonplanar_fast(params, n, ch)?))
}

impl ChainState {
    /// Initial state of a replica.
    pub fn initial<C: crate::sampling::Chooser<f64> + ?Sized>(cfg: &RunConfig, ch: &mut C) -> Result<Self> {
        let p = &cfg.params;
        Ok(match (cfg.space, cfg.start) {
            (Space::SemiPlanar, Start::Growth) => {
                ChainState::SemiPlanar(grow_semiplanar(&GrowthModel::new(Variant::SemiPlanar, p.clone())?, cfg.n, ch)?)
            }
            (Space::SemiPlanar, Start::Comb) => ChainState::SemiPlanar(SemiPlanarTree::from_tree(comb(cfg.n).into_tree())?),
            (Space::Decorated, Start::Growth) => {
                let shape = sample_growth_tree(p, cfg.k, ch)?;
                ChainState::Decorated(grow_decorated_to(&DecoratedTree::unit(&shape), p, cfg.n, ch)?)
            }
            (Space::Decorated, Start::Comb) => ChainState::Decorated(project_decorated(&comb(cfg.n), cfg.k)?),
            (Space::Alpha, Start::Growth) => {
                let q = Params::new(p.alpha, 1.0 - p.alpha)?;
                ChainState::NonPlanar(sample_growth_tree(&q, cfg.n, ch)?)
            }
            (Space::Uniform, Start::Growth) => ChainState::NonPlanar(sample_growth_tree(&Params::new(0.5, 0.5)?, cfg.n, ch)?),
            (_, Start::Growth) => ChainState::NonPlanar(sample_growth_tree(p, cfg.n, ch)?),
            (_, Start::Comb) => ChainState::NonPlanar(comb(cfg.n)),
        })
    }

    /// One chain step.
    pub fn step<C: crate::sampling::Chooser<f64> + ?Sized>(&mut self, space: Space, params: &Params<f64>, ch: &mut C) -> Result<()> {
        match (space, &*self) {
            (Space::Uniform, ChainState::NonPlanar(t)) => *self = ChainState::NonPlanar(uniform_chain_step(t, ch)?),
            (Space::Alpha, ChainState::NonPlanar(t)) => *self = ChainState::NonPlanar(alpha_chain_step(t, &params.alpha, ch)?),
            (Space::NonPlanar, ChainState::NonPlanar(t)) => *self = ChainState::NonPlanar(nonplanar_chain_step(t, params, ch, None)?),
            (Space::SemiPlanar, ChainState::SemiPlanar(t)) => *self = ChainState::SemiPlanar(semiplanar_chain_step(t, params, ch, None)?),
            (Space::Decorated, ChainState::Decorated(d)) => *self = ChainState::Decorated(decorated_chain_step(d, params, ch, None)?),
            _ => return Err(Error::VariantMismatch("state does not belong to the simulated space".into())),
        }
        Ok(())
    }

    /// Value of an observable.
    pub fn observe(&self, obs: Observable, k: usize) -> Result<String> {
        Ok(match (obs, self) {
            (Observable::State, ChainState::NonPlanar(t)) => t.encode(),
            (Observable::State, ChainState::SemiPlanar(t)) => t.encode(),
            (Observable::State | Observable::Masses, ChainState::Decorated(d)) => d.key(),
            (Observable::Shape, ChainState::NonPlanar(t)) => t.shape_key(),
            (Observable::Shape, ChainState::SemiPlanar(t)) => t.tree().shape_key(),
            (Observable::Shape, ChainState::Decorated(d)) => d.tree().shape_key(),
            (Observable::Masses, ChainState::NonPlanar(t)) => project_decorated(t, k)?.key(),
            (Observable::Masses, ChainState::SemiPlanar(t)) => project_decorated(&t.project(), k)?.key(),
        })
    }
}

/// Output of one replica.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ReplicaResult {
    /// Occupation counts of the observable.
    pub counts: BTreeMap<String, u64>,
    /// Recorded values in time order (when requested).
    pub stream: Vec<String>,
}

/// Output of a run.
#[derive(Clone, Debug, Serialize)]
pub struct SimulationResult {
    /// Output schema.
    pub schema: &'static str,
    /// Seeding scheme.
    pub seed_scheme: &'static str,
    /// The configuration.
    pub config: RunConfig,
    /// Merged occupation counts.
    pub counts: BTreeMap<String, u64>,
    /// Total number of recorded samples.
    pub total: u64,
    /// Per-replica results in replica order.
    pub replicas: Vec<ReplicaResult>,
}

/// Runs replica `r` of a configuration.
pub fn run_replica(cfg: &RunConfig, r: u64) -> Result<ReplicaResult> {
    let mut rng = replica_rng(cfg.seed, r);
    let mut ch = RngChooser::new(&mut rng);
    let mut state = ChainState::initial(cfg, &mut ch)?;
    let mut out = ReplicaResult::default();
    for t in 1..=cfg.steps {
        state.step(cfg.space, &cfg.params, &mut ch)?;
        if t > cfg.burn_in && (t - cfg.burn_in).is_multiple_of(cfg.thin) {
            let o = state.observe(cfg.observable, cfg.k)?;
            *out.counts.entry(o.clone()).or_insert(0) += 1;
            if cfg.keep_stream {
                out.stream.push(o);
            }
        }
    }
    Ok(out)
}

/// Runs all replicas in parallel and merges their counts.
pub fn run_simulation(cfg: &RunConfig) -> Result<SimulationResult> {
    cfg.validate()?;
    let replicas: Vec<ReplicaResult> = (0..cfg.replicas).into_par_iter().map(|r| run_replica(cfg, r)).collect::<Result<_>>()?;
    let mut counts = BTreeMap::new();
    for rep in &replicas {
        for (k, v) in &rep.counts {
            *counts.entry(k.clone()).or_insert(0) += v;
        }
    }
    let total = counts.values().sum();
    let replicas = if cfg.keep_stream { replicas } else { Vec::new() };
    Ok(SimulationResult { schema: SCHEMA, seed_scheme: SEED_SCHEME, config: cfg.clone(), counts, total, replicas })
}

/// Shape counts of `samples` independent draws from the non-planar growth
/// law, split into `chunks` seeded replicas (replica numbers offset by
/// `2⁶³` so they never coincide with chain replicas).
pub fn growth_shape_reference(params: &Params<f64>, n: usize, samples: u64, seed: u64, chunks: u64) -> Result<BTreeMap<String, u64>> {
    let chunks = chunks.max(1);
    let parts: Vec<BTreeMap<String, u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = replica_rng(seed, (1u64 << 63) + c);
            let mut ch = RngChooser::new(&mut rng);
            let m = samples / chunks + u64::from(c < samples % chunks);
            let mut counts = BTreeMap::new();
            for _ in 0..m {
                let t: Tree = grow_nonplanar_fast(params, n, &mut ch)?;
                *counts.entry(t.shape_key()).or_insert(0) += 1;
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for p in parts {
        for (k, v) in p {
            *out.entry(k).or_insert(0) += v;
        }
    }
    Ok(out)
}

/// Law of the decorated masses of decorated growth from the unit
/// decoration of `shape` to total mass `n`: the extra masses are
/// Dirichlet-multinomial with the initial growth weights. Keys are decorated
/// state keys.
pub fn dirmult_decorated_law(shape: &LabelledTree, n: usize, params: &Params<f64>) -> Result<BTreeMap<String, f64>> {
    let unit = DecoratedTree::unit(shape);
    if n < unit.n() {
        return Err(Error::OutOfRange("n below the shape size".into()));
    }
    let parts = canonical_parts(unit.tree());
    let weights: Vec<f64> = parts.iter().map(|&p| initial_weight(unit.tree(), p, params)).collect();
    let mut out = BTreeMap::new();
    for comp in crate::urn::compositions(n - unit.n(), parts.len()) {
        let pmf = dirmult_pmf_unchecked(n - unit.n(), &weights, &comp);
        if pmf > 0.0 {
            let mut d = unit.clone();
            for (p, c) in parts.iter().zip(&comp) {
                d.set_mass(*p, d.mass(*p) + c);
            }
            out.insert(d.key(), pmf);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// scaling experiment

/// Configuration of the Wright-Fisher scaling experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingConfig {
    /// Total masses.
    pub ns: Vec<usize>,
    /// The fixed `[k]`-shape.
    pub shape: String,
    /// Model parameters.
    pub params: Params<f64>,
    /// Horizon in time units of `n²` chain steps.
    pub horizon: f64,
    /// Samples per time unit.
    pub samples_per_unit: usize,
    /// Independent replicas per `n`.
    pub replicas: u64,
    /// Master seed.
    pub seed: u64,
    /// Part address of the tracked proportion `Y^{x₀}`.
    pub x0: String,
}

impl ScalingConfig {
    /// The binary `[2]`-shape at `α = γ = 1/2` with `n ∈ {25, 50, 100}`,
    /// tracking the root edge, horizon 200, 20 samples per time unit, four
    /// replicas.
    pub fn standard() -> Self {
        ScalingConfig {
            ns: vec![25, 50, 100],
            shape: "(1,2)".into(),
            params: Params::new(0.5, 0.5).expect("valid"),
            horizon: 200.0,
            samples_per_unit: 20,
            replicas: 4,
            seed: 1,
            x0: "e:".into(),
        }
    }
}

/// Mass-proportion trajectory of one replica at one `n`.
#[derive(Clone, Debug, Serialize)]
pub struct MassTrajectory {
    /// Total mass.
    pub n: usize,
    /// Replica number.
    pub replica: u64,
    /// Part addresses (columns).
    pub parts: Vec<String>,
    /// Chain steps of the records.
    pub steps: Vec<u64>,
    /// Proportions `Y^x = y_x/n` per record (frozen after the stop).
    pub proportions: Vec<Vec<f64>>,
    /// Whether the stopping rule had fired by each record.
    pub stopped: Vec<bool>,
    /// First step at which an external edge reached mass 1, if any.
    pub stop_step: Option<u64>,
    /// Unstopped series of `Y^{x₀}` (used for autocorrelation estimates),
    /// truncated if the shape ever changes.
    pub x0_series: Vec<f64>,
    /// Unstopped proportions of every part, truncated like `x0_series`.
    #[serde(skip)]
    pub unstopped: Vec<Vec<f64>>,
}

/// Drift weights of the limiting diffusion: `w_x` for internal parts and
/// `w_x − 1` for external edges.
pub fn wf_weights(shape: &LabelledTree, params: &Params<f64>) -> Vec<(String, f64)> {
    let t = shape.tree();
    let mins = t.min_labels();
    canonical_parts(t)
        .into_iter()
        .map(|p| {
            let w = initial_weight(t, p, params);
            let w = if part_kind(t, p) == PartKind::LeafEdge { w - 1.0 } else { w };
            (part_address(t, p, &mins).to_string(), w)
        })
        .collect()
}

/// Per-`n` summary of the scaling experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingPoint {
    /// Total mass.
    pub n: usize,
    /// Integrated autocorrelation time of `Y^{x₀}` in chain steps.
    pub tau_steps: f64,
    /// The same in time units of `n²` steps.
    pub tau_units: f64,
    /// Mean proportions per part.
    pub mean: Vec<(String, f64)>,
    /// Standard errors of the means (variance × τ / samples).
    pub std_error: Vec<(String, f64)>,
    /// Stationary means predicted by the growth urn.
    pub predicted: Vec<(String, f64)>,
    /// Largest `|mean − predicted| / std_error`.
    pub max_z: f64,
    /// Fraction of replicas that met the stopping rule.
    pub stopped_fraction: f64,
}

/// Summary of the scaling experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingSummary {
    /// Output schema.
    pub schema: &'static str,
    /// Seeding scheme.
    pub seed_scheme: &'static str,
    /// Configuration.
    pub config: ScalingConfig,
    /// Drift weights of the limiting diffusion per part.
    pub drift_weights: Vec<(String, f64)>,
    /// Per-`n` results.
    pub points: Vec<ScalingPoint>,
    /// Least-squares fit of `log τ` against `log n` (`τ` in steps).
    pub fit: Option<LinearFit>,
}

/// Runs one replica of the scaling experiment at mass `n`: a stationary
/// start (decorated growth from the unit decoration of the shape), then
/// `horizon·n²` decorated chain steps.
pub fn scaling_replica(cfg: &ScalingConfig, shape: &LabelledTree, n: usize, r: u64) -> Result<MassTrajectory> {
    let p = &cfg.params;
    let mut rng = replica_rng(cfg.seed, ((n as u64) << 32) + r);
    let mut ch = RngChooser::new(&mut rng);
    let mut d = grow_decorated_to(&DecoratedTree::unit(shape), p, n, &mut ch)?;
    let t = d.tree().clone();
    let mins = t.min_labels();
    let parts = canonical_parts(&t);
    let addrs: Vec<String> = parts.iter().map(|&x| part_address(&t, x, &mins).to_string()).collect();
    let x0 = addrs.iter().position(|a| *a == cfg.x0).ok_or_else(|| Error::DanglingAddress(cfg.x0.clone()))?;
    let external: Vec<bool> = parts.iter().map(|&x| part_kind(&t, x) == PartKind::LeafEdge).collect();
    let shape_key = shape.encode();
    let unit = (n * n) as u64;
    let total_steps = (cfg.horizon * unit as f64).round() as u64;
    let every = (unit / cfg.samples_per_unit.max(1) as u64).max(1);
    let nf = n as f64;
    let props = |d: &DecoratedTree| -> Vec<f64> { parts.iter().map(|&x| d.mass(x) as f64 / nf).collect() };
    let hits = |d: &DecoratedTree| parts.iter().zip(&external).any(|(&x, &e)| e && d.mass(x) <= 1);
    let mut traj = MassTrajectory {
        n,
        replica: r,
        parts: addrs.clone(),
        steps: Vec::new(),
        proportions: Vec::new(),
        stopped: Vec::new(),
        stop_step: None,
        x0_series: Vec::new(),
        unstopped: Vec::new(),
    };
    let mut frozen: Option<Vec<f64>> = None;
    let mut same_shape = true;
    if hits(&d) {
        traj.stop_step = Some(0);
        frozen = Some(props(&d));
    }
    for step in 0..=total_steps {
        if step > 0 {
            d = decorated_chain_step(&d, p, &mut ch, None)?;
            same_shape = same_shape && d.shape().encode() == shape_key;
            if frozen.is_none() && hits(&d) {
                traj.stop_step = Some(step);
                frozen = Some(props(&d));
            }
        }
        if step % every == 0 {
            let y = if same_shape { props(&d) } else { Vec::new() };
            if same_shape {
                traj.x0_series.push(y[x0]);
                traj.unstopped.push(y.clone());
            }
            traj.steps.push(step);
            traj.stopped.push(frozen.is_some());
            traj.proportions.push(frozen.clone().unwrap_or(y));
        }
    }
    Ok(traj)
}

/// Writes a trajectory as CSV: `step`, one column per part address, then
/// `stopped`. The first line is a `# schema` comment.
pub fn write_trajectory_csv(traj: &MassTrajectory, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# schema={SCHEMA} n={} replica={}", traj.n, traj.replica)?;
    writeln!(f, "step,{},stopped", traj.parts.join(","))?;
    for ((s, y), st) in traj.steps.iter().zip(&traj.proportions).zip(&traj.stopped) {
        let ys: Vec<String> = y.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(f, "{s},{},{}", ys.join(","), u8::from(*st))?;
    }
    Ok(())
}

/// Runs the scaling experiment; writes one CSV per `(n, replica)` into
/// `out_dir` when given.
pub fn wf_scaling_experiment(cfg: &ScalingConfig, out_dir: Option<&Path>) -> Result<ScalingSummary> {
    let shape = LabelledTree::parse(&cfg.shape)?;
    if cfg.replicas == 0 || cfg.ns.is_empty() || cfg.horizon <= 0.0 {
        return Err(Error::OutOfRange("need replicas, sizes and a positive horizon".into()));
    }
    let k = shape.n_leaves();
    let unit = DecoratedTree::unit(&shape);
    let t = unit.tree();
    let mins = t.min_labels();
    let parts = canonical_parts(t);
    let wsum: f64 = parts.iter().map(|&x| initial_weight(t, x, &cfg.params)).sum();
    let mut points = Vec::new();
    for &n in &cfg.ns {
        if n <= k {
            return Err(Error::OutOfRange(format!("n = {n} must exceed the shape size")));
        }
        let trajs: Vec<MassTrajectory> =
            (0..cfg.replicas).into_par_iter().map(|r| scaling_replica(cfg, &shape, n, r)).collect::<Result<_>>()?;
        if let Some(dir) = out_dir {
            std::fs::create_dir_all(dir)?;
            for tr in &trajs {
                write_trajectory_csv(tr, &dir.join(format!("trajectory_n{n}_r{}.csv", tr.replica)))?;
            }
        }
        let series: Vec<Vec<f64>> = trajs.iter().map(|t| t.x0_series.clone()).filter(|s| s.len() >= 4).collect();
        let tau_samples = integrated_autocorrelation_time(&series);
        let every = ((n * n) as f64 / cfg.samples_per_unit.max(1) as f64).floor().max(1.0);
        let tau_steps = tau_samples * every;
        // stationary means from the unstopped records of every part
        let addrs = &trajs[0].parts;
        let mut mean_v = Vec::new();
        let mut se_v = Vec::new();
        let mut pred_v = Vec::new();
        let mut max_z: f64 = 0.0;
        for (j, addr) in addrs.iter().enumerate() {
            let mut all = Vec::new();
            let mut per_rep = Vec::new();
            for tr in &trajs {
                let ys: Vec<f64> = tr.unstopped.iter().map(|y| y[j]).collect();
                per_rep.push(ys.clone());
                all.extend(ys);
            }
            let tau_j = integrated_autocorrelation_time(&per_rep).max(1.0);
            let m = mean(&all);
            let se = (variance(&all) * tau_j / all.len() as f64).sqrt();
            let x = parts[j];
            let base = if part_kind(t, x) == PartKind::LeafEdge { 1.0 } else { 0.0 };
            let pred = (base + (n - k) as f64 * initial_weight(t, x, &cfg.params) / wsum) / n as f64;
            if se > 0.0 {
                max_z = max_z.max((m - pred).abs() / se);
            }
            debug_assert_eq!(addr, &part_address(t, x, &mins).to_string());
            mean_v.push((addr.clone(), m));
            se_v.push((addr.clone(), se));
            pred_v.push((addr.clone(), pred));
        }
        let stopped = trajs.iter().filter(|t| t.stop_step.is_some()).count() as f64 / trajs.len() as f64;
        points.push(ScalingPoint {
            n,
            tau_steps,
            tau_units: tau_steps / (n * n) as f64,
            mean: mean_v,
            std_error: se_v,
            predicted: pred_v,
            max_z,
            stopped_fraction: stopped,
        });
    }
    let fit = if points.len() >= 2 {
        let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
        let y: Vec<f64> = points.iter().map(|p| p.tau_steps.ln()).collect();
        linear_fit(&x, &y).ok()
    } else {
        None
    };
    Ok(ScalingSummary { schema: SCHEMA, seed_scheme: SEED_SCHEME, config: cfg.clone(), drift_weights: wf_weights(&shape, &cfg.params), points, fit })
}

/// Output path helper: `dir/name`, creating `dir`.
pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

/// Probability of a decorated mass vector under decorated growth from the
/// unit decoration (helper for reports).
pub fn decorated_growth_pmf(d: &DecoratedTree, params: &Params<f64>) -> f64 {
    let t = d.tree();
    let parts = canonical_parts(t);
    let weights: Vec<f64> = parts.iter().map(|&x| initial_weight(t, x, params)).collect();
    let counts: Vec<usize> = parts.iter().map(|&x| d.reduced_mass(x)).collect();
    dirmult_pmf_unchecked(d.n() - d.k(), &weights, &counts)
}
