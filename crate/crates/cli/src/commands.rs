use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use llm_router::baselines::GreedyPolicy;
use llm_router::dataset::{
    label_difficulty, load_dataset, save_dataset, split_train_eval, Dataset, DatasetPaths,
    EmbedderKind, LoadOptions,
};
use llm_router::optimizer::{
    brute_force, check_kkt, dual_value, parse_instance, solve, RoutingInstance, SolverConfig,
    BRUTE_FORCE_LIMIT,
};
use llm_router::pipeline::{fit, PipelineConfig};
use llm_router::predictor::{
    BucketConfig, DualHeadModel, FusionConfig, PredictionTable, Predictor, RetrievalStore,
    TrainConfig,
};
use llm_router::simulator::{
    format_curve, routing_distribution, run_simulation, sweep_alpha, sweep_concurrency, Router,
    SimConfig, SweepPoint, TrafficConfig,
};
use llm_router::synthetic::{gen_synthetic, DifficultyMix, SyntheticConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::report::{Report, RunManifest};
use crate::{
    config, runtime, Cli, Command, DataArgs, Embedder, EvaluateArgs, GenArgs, IngestArgs,
    OracleArgs, Outcome, Param, PredictorArgs, RouteArgs, RouterKind, ServingArgs, SimulateArgs,
    SweepArgs, TrainArgs, TrainCmd,
};

const QUERIES_FILE: &str = "queries.jsonl";
const MODELS_FILE: &str = "models.jsonl";

pub fn run(cli: Cli) -> Outcome {
    let seed = cli.seed;
    let out = cli.out;
    match cli.command {
        Command::Ingest(args) => ingest(&args, seed, out),
        Command::Train(args) => train_cmd(&args, seed, out),
        Command::EvaluatePredictor(args) => evaluate(&args, seed, out),
        Command::Route(args) => route(&args, seed, out),
        Command::Simulate(args) => simulate(&args, seed, out),
        Command::Sweep(args) => sweep(&args, seed, out),
        Command::OracleCompare(args) => {
            let out = args.report.clone().or(out);
            oracle_compare(&args, seed, out)
        }
        Command::GenSynthetic(args) => gen(&args, seed, out),
    }
}

// ---------- shared plumbing ----------

fn data_paths(args: &DataArgs) -> Option<DatasetPaths> {
    let mut paths = match (&args.data, &args.queries, &args.models) {
        (Some(dir), _, _) => DatasetPaths::new(dir.join(QUERIES_FILE), dir.join(MODELS_FILE)),
        (None, Some(q), Some(m)) => DatasetPaths::new(q, m),
        _ => return None,
    };
    paths.embeddings = args.embeddings.clone();
    Some(paths)
}

/// Loads the named files, or generates a synthetic dataset from `seed`.
fn load(args: &DataArgs, seed: u64, manifest: &mut RunManifest) -> Outcome<Dataset> {
    let Some(paths) = data_paths(args) else {
        let cfg = SyntheticConfig {
            n_queries: args.synthetic_queries,
            seed,
            l_max: args.l_max,
            ..SyntheticConfig::default()
        };
        return config(gen_synthetic(&cfg));
    };
    let options = LoadOptions {
        embedder: match args.embedder {
            Embedder::Hashed => EmbedderKind::Hashed,
            Embedder::Precomputed => EmbedderKind::Precomputed,
        },
        dim: args.dim,
        l_max: args.l_max,
    };
    let ds = runtime(load_dataset(&paths, &options))?;
    manifest.add_input(&paths.queries)?;
    manifest.add_input(&paths.models)?;
    if let Some(extra) = &paths.embeddings {
        manifest.add_input(extra)?;
    }
    Ok(ds)
}

fn pipeline_config(
    args: &TrainArgs,
    fusion: Option<FusionConfig>,
    seed: u64,
) -> Outcome<PipelineConfig> {
    if !(args.eval_fraction > 0.0 && args.eval_fraction < 1.0) {
        return Err(crate::Failure::Config(anyhow::anyhow!(
            "eval fraction {} is outside (0, 1)",
            args.eval_fraction
        )));
    }
    if !(args.lr.is_finite() && args.lr > 0.0) || args.batch_size == 0 {
        return Err(crate::Failure::Config(anyhow::anyhow!(
            "learning rate must be positive and batch size non-zero"
        )));
    }
    let base = PipelineConfig::seeded(seed);
    Ok(PipelineConfig {
        eval_fraction: args.eval_fraction,
        n_buckets: args.buckets,
        bucket_size: args.bucket_size,
        train: TrainConfig {
            epochs: args.epochs,
            learning_rate: args.lr,
            batch_size: args.batch_size,
            seed,
        },
        fusion: fusion.unwrap_or(base.fusion),
        ..base
    })
}

fn bucket_config(args: &TrainArgs, l_max: u32) -> Outcome<BucketConfig> {
    config(match args.bucket_size {
        Some(size) => BucketConfig::with_bucket_size(l_max, size),
        None => BucketConfig::with_bucket_count(l_max, args.buckets),
    })
}

struct Prepared {
    eval_set: Dataset,
    predictor: Predictor,
    predictions: PredictionTable,
}

/// Held-out split plus a predictor whose store covers the training split only.
fn prepare(
    ds: &Dataset,
    args: &PredictorArgs,
    seed: u64,
    manifest: &mut RunManifest,
) -> Outcome<Prepared> {
    let fusion = config(FusionConfig::new(
        args.fusion.gamma,
        args.fusion.delta,
        args.fusion.k,
    ))?;
    let pipeline = pipeline_config(&args.train, Some(fusion), seed)?;
    bucket_config(&args.train, ds.l_max)?;
    let (eval_set, predictor) = match &args.predictor {
        Some(path) => {
            let head = runtime(DualHeadModel::load(path))?;
            manifest.add_input(path)?;
            let (train_set, eval_set) = config(split_train_eval(
                ds,
                pipeline.eval_fraction,
                pipeline.split_seed,
            ))?;
            let store = runtime(RetrievalStore::from_dataset(&train_set))?;
            (eval_set, runtime(Predictor::new(head, store, fusion))?)
        }
        None => {
            let fitted = runtime(fit(ds, &pipeline))?;
            (fitted.eval_set, fitted.predictor)
        }
    };
    let predictions = runtime(predictor.predict_dataset(&eval_set))?;
    Ok(Prepared {
        eval_set,
        predictor,
        predictions,
    })
}

fn router_for(kind: RouterKind, args: &ServingArgs, seed: u64) -> Outcome<Router> {
    Ok(match kind {
        RouterKind::Omni => Router::Omni {
            solver: SolverConfig {
                max_iters: args.solver.max_iters,
                ..SolverConfig::default()
            },
        },
        RouterKind::GreedyCost => {
            Router::greedy(config(GreedyPolicy::cheapest_confident(args.threshold))?)
        }
        RouterKind::GreedyQuality => Router::greedy(GreedyPolicy::MaxQuality),
        RouterKind::Random => Router::greedy(GreedyPolicy::Random { seed }),
    })
}

fn sim_config(ds: &Dataset, args: &ServingArgs, seed: u64) -> Outcome<SimConfig> {
    let horizon_ms = match args.horizon {
        Some(h) if !(h.is_finite() && h >= 0.0) => {
            return Err(crate::Failure::Config(anyhow::anyhow!(
                "horizon {h} is not a duration"
            )))
        }
        Some(h) => Some((h * 1000.0).round() as u64),
        None => None,
    };
    let mut cfg = SimConfig::for_dataset(ds);
    cfg.alpha = args.solver.alpha;
    cfg.traffic = TrafficConfig {
        tick_ms: args.tick_ms,
        routing_interval_ms: args.interval_ms,
        horizon_ms,
        seed,
        ..TrafficConfig::default()
    };
    if let Some(l) = args.capacity {
        cfg = cfg.with_uniform_capacity(l);
    }
    config(cfg.validate(ds.n_models()))?;
    Ok(cfg)
}

fn check_alpha(alpha: f64) -> Outcome {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(crate::Failure::Config(anyhow::anyhow!(
            "alpha {alpha} is outside [0, 1]"
        )))
    }
}

// ---------- sub-commands ----------

fn ingest(args: &IngestArgs, seed: u64, out: Option<PathBuf>) -> Outcome {
    let mut manifest = RunManifest::new("ingest", args, seed)?;
    if data_paths(&args.data).is_none() {
        return Err(crate::Failure::Config(anyhow::anyhow!(
            "ingest needs --data or both --queries and --models"
        )));
    }
    let ds = load(&args.data, seed, &mut manifest)?;
    let mut difficulty: BTreeMap<String, usize> = BTreeMap::new();
    let mut source: BTreeMap<String, usize> = BTreeMap::new();
    for q in &ds.queries {
        let d = runtime(label_difficulty(q, ds.n_models()))?;
        *difficulty.entry(d.to_string()).or_default() += 1;
        let s = serde_json::to_value(q.source).map_err(anyhow::Error::from)?;
        *source
            .entry(s.as_str().unwrap_or_default().to_string())
            .or_default() += 1;
    }
    if let Some(dir) = &args.write {
        write_dataset(&ds, dir)?;
    }
    let summary = json!({
        "n_queries": ds.n_queries(),
        "n_models": ds.n_models(),
        "embedding_dim": ds.embedding_dim,
        "difficulty": difficulty,
        "source": source,
    });
    Report::new(out).finish(&summary, &manifest)?;
    Ok(())
}

fn write_dataset(ds: &Dataset, dir: &Path) -> Outcome {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(crate::Failure::Runtime)?;
    runtime(save_dataset(
        ds,
        &DatasetPaths::new(dir.join(QUERIES_FILE), dir.join(MODELS_FILE)),
    ))
}

fn train_cmd(args: &TrainCmd, seed: u64, out: Option<PathBuf>) -> Outcome {
    let mut manifest = RunManifest::new("train", args, seed)?;
    let ds = load(&args.data, seed, &mut manifest)?;
    let pipeline = pipeline_config(&args.train, None, seed)?;
    bucket_config(&args.train, ds.l_max)?;
    let fitted = runtime(fit(&ds, &pipeline))?;
    let mut report = Report::new(out);
    for (epoch, loss) in fitted.log.epochs.iter().enumerate() {
        report.record(&json!({ "epoch": epoch + 1, "loss": loss }))?;
    }
    if let Some(path) = &args.save {
        runtime(fitted.predictor.head.save(path))?;
    }
    let accuracy = runtime(fitted.predictor.evaluate(&fitted.eval_set))?;
    let summary = json!({
        "train_queries": fitted.train_set.n_queries(),
        "eval_queries": fitted.eval_set.n_queries(),
        "initial_loss": fitted.log.initial,
        "final_loss": fitted.log.epochs.last(),
        "eval_accuracy": accuracy,
    });
    report.finish(&summary, &manifest)?;
    Ok(())
}

fn evaluate(args: &EvaluateArgs, seed: u64, out: Option<PathBuf>) -> Outcome {
    let mut manifest = RunManifest::new("evaluate-predictor", args, seed)?;
    let ds = load(&args.data, seed, &mut manifest)?;
    let prepared = prepare(&ds, &args.predictor, seed, &mut manifest)?;
    let p = &prepared.predictor;
    let fused = runtime(p.evaluate(&prepared.eval_set))?;
    let variant = |gamma: f64, delta: f64| -> Outcome<_> {
        let fusion = config(FusionConfig::new(gamma, delta, p.config.k))?;
        let alt = runtime(Predictor::new(p.head.clone(), p.store.clone(), fusion))?;
        runtime(alt.evaluate(&prepared.eval_set))
    };
    let summary = json!({
        "eval_queries": prepared.eval_set.n_queries(),
        "fused": fused,
        "trained_only": variant(1.0, 1.0)?,
        "retrieval_only": variant(0.0, 0.0)?,
    });
    Report::new(out).finish(&summary, &manifest)?;
    Ok(())
}

fn route(args: &RouteArgs, seed: u64, out: Option<PathBuf>) -> Outcome {
    let mut manifest = RunManifest::new("route", args, seed)?;
    check_alpha(args.solver.alpha)?;
    let solver = SolverConfig {
        max_iters: args.solver.max_iters,
        ..SolverConfig::default()
    };
    let mut report = Report::new(out);
    let (instance, labels) = match &args.instance {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(crate::Failure::Runtime)?;
            manifest.add_input(path)?;
            let inst = config(parse_instance(&text))?;
            let labels: Vec<(String, Vec<String>)> = (0..inst.n_queries())
                .map(|i| {
                    (
                        i.to_string(),
                        (0..inst.n_models()).map(|j| j.to_string()).collect(),
                    )
                })
                .collect();
            (inst, labels)
        }
        None => {
            let ds = load(&args.data, seed, &mut manifest)?;
            let prepared = prepare(&ds, &args.predictor, seed, &mut manifest)?;
            let n = args.batch.min(prepared.eval_set.n_queries());
            let m = prepared.eval_set.n_models();
            let (mut cost, mut cap) = (Vec::with_capacity(n * m), Vec::with_capacity(n * m));
            for i in 0..n {
                for p in prepared.predictions.row(i) {
                    cost.push(p.cost);
                    cap.push(p.a);
                }
            }
            let inst = config(RoutingInstance::new(
                n,
                m,
                cost,
                cap,
                args.solver.alpha,
                vec![args.capacity; m],
            ))?;
            let model_ids: Vec<String> = prepared
                .eval_set
                .models
                .iter()
                .map(|m| m.id.clone())
                .collect();
            let labels = prepared.eval_set.queries[..n]
                .iter()
                .map(|q| (q.id.clone(), model_ids.clone()))
                .collect();
            (inst, labels)
        }
    };
    let (assignment, solve_report) = solve(&instance, &solver);
    for (i, &j) in assignment.choice.iter().enumerate() {
        report.record(&json!({
            "query": labels[i].0,
            "model": labels[i].1[j],
            "capability": instance.capability(i, j),
            "cost": instance.cost(i, j),
        }))?;
    }
    let kkt = check_kkt(&instance, &assignment, &solve_report.multipliers);
    let summary = json!({
        "n_queries": instance.n_queries(),
        "n_models": instance.n_models(),
        "alpha": instance.alpha(),
        "solve": solve_report,
        "kkt": kkt,
    });
    report.finish(&summary, &manifest)?;
    Ok(())
}

fn simulate(args: &SimulateArgs, seed: u64, out: Option<PathBuf>) -> Outcome {
    let mut manifest = RunManifest::new("simulate", args, seed)?;
    check_alpha(args.serving.solver.alpha)?;
    let router = router_for(args.router, &args.serving, seed)?;
    let ds = load(&args.data, seed, &mut manifest)?;
    let prepared = prepare(&ds, &args.predictor, seed, &mut manifest)?;
    let cfg = sim_config(&prepared.eval_set, &args.serving, seed)?;
    let run = runtime(run_simulation(
        &prepared.eval_set,
        &prepared.predictions,
        &router,
        &cfg,
    ))?;
    let mut report = Report::new(out);
    for w in &run.windows {
        report.record(w)?;
    }
    let summary = json!({
        "metrics": run.metrics,
        "routing_distribution": routing_distribution(&run.metrics),
    });
    report.finish(&summary, &manifest)?;
    Ok(())
}

fn sweep(args: &SweepArgs, seed: u64, out: Option<PathBuf>) -> Outcome {
    let mut manifest = RunManifest::new("sweep", args, seed)?;
    let kinds = if args.routers.is_empty() {
        vec![
            RouterKind::Omni,
            RouterKind::GreedyQuality,
            RouterKind::GreedyCost,
            RouterKind::Random,
        ]
    } else {
        args.routers.clone()
    };
    let routers: Vec<Router> = kinds
        .iter()
        .map(|&k| router_for(k, &args.serving, seed))
        .collect::<Outcome<_>>()?;
    let concurrency: Vec<u32> = match args.param {
        Param::Alpha => {
            args.values.iter().try_for_each(|&a| check_alpha(a))?;
            Vec::new()
        }
        Param::Concurrency => args
            .values
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                    Ok(v as u32)
                } else {
                    Err(crate::Failure::Config(anyhow::anyhow!(
                        "concurrency {v} is not a whole number"
                    )))
                }
            })
            .collect::<Outcome<_>>()?,
    };
    let ds = load(&args.data, seed, &mut manifest)?;
    let prepared = prepare(&ds, &args.predictor, seed, &mut manifest)?;
    let base = sim_config(&prepared.eval_set, &args.serving, seed)?;
    let mut points: Vec<SweepPoint> = Vec::new();
    for router in &routers {
        let curve = match args.param {
            Param::Alpha => sweep_alpha(
                &prepared.eval_set,
                &prepared.predictions,
                router,
                &base,
                &args.values,
                args.jobs,
            ),
            Param::Concurrency => sweep_concurrency(
                &prepared.eval_set,
                &prepared.predictions,
                router,
                &base,
                &concurrency,
                args.jobs,
            ),
        };
        points.extend(config(curve)?);
    }
    let mut report = Report::new(out.clone());
    for p in &points {
        report.record(p)?;
    }
    if out.is_none() {
        eprint!("{}", format_curve(&points));
    }
    let summary = json!({
        "param": args.param,
        "values": args.values,
        "routers": kinds,
        "points": points.len(),
    });
    report.finish(&summary, &manifest)?;
    Ok(())
}

#[derive(Serialize)]
struct Trial {
    trial: usize,
    n: usize,
    m: usize,
    alpha: f64,
    oracle_cost: f64,
    solver_cost: Option<f64>,
    gap: Option<f64>,
    dual_value: f64,
    status: llm_router::optimizer::SolveStatus,
}

fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> RoutingInstance {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let cost: Vec<f64> = (0..n * m).map(|_| rng.gen_range(0.01..1.0)).collect();
    let cap: Vec<f64> = (0..n * m).map(|_| rng.gen::<f64>()).collect();
    let mut limit: Vec<u32> = (0..m).map(|_| rng.gen_range(1..=n as u32)).collect();
    while limit.iter().sum::<u32>() < n as u32 {
        let j = rng.gen_range(0..m);
        limit[j] += 1;
    }
    RoutingInstance::new(n, m, cost, cap, 0.0, limit).expect("generated values are in range")
}

/// Highest reachable average capability, by exhaustive search on `1 - a`.
fn max_quality(inst: &RoutingInstance) -> anyhow::Result<f64> {
    let (n, m) = (inst.n_queries(), inst.n_models());
    let shortfall: Vec<f64> = (0..n)
        .flat_map(|i| inst.capability_row(i).iter().map(|a| 1.0 - a))
        .collect();
    let cap: Vec<f64> = (0..n)
        .flat_map(|i| inst.capability_row(i).to_vec())
        .collect();
    let probe = RoutingInstance::new(n, m, shortfall, cap, 0.0, inst.capacity().to_vec())?;
    let best = brute_force(&probe)?;
    let x = best.assignment().context("capacity admits no assignment")?;
    Ok(inst.avg_quality(x))
}

fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

fn oracle_compare(args: &OracleArgs, seed: u64, out: Option<PathBuf>) -> Outcome {
    let manifest = RunManifest::new("oracle-compare", args, seed)?;
    if args.max_n == 0
        || args.max_m == 0
        || (args.max_m as f64).powi(args.max_n as i32) > BRUTE_FORCE_LIMIT
    {
        return Err(crate::Failure::Config(anyhow::anyhow!(
            "max-n {} and max-m {} must be positive with max-m^max-n <= {BRUTE_FORCE_LIMIT}",
            args.max_n,
            args.max_m
        )));
    }
    let solver = SolverConfig {
        max_iters: args.max_iters,
        ..SolverConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Report::new(out);
    let (mut gaps, mut infeasible, mut below, mut duality) = (Vec::new(), 0usize, 0usize, 0usize);
    for trial in 0..args.trials {
        let raw = random_instance(&mut rng, args.max_n, args.max_m);
        let alpha = rng.gen_range(0.0..=1.0) * max_quality(&raw)?;
        let inst = runtime(raw.with_alpha(alpha))?;
        let oracle_cost = runtime(brute_force(&inst))?
            .cost()
            .context("alpha is drawn below the reachable quality")?;
        let (x, r) = solve(&inst, &solver);
        let feasible = inst.is_feasible(&x);
        let solver_cost = feasible.then(|| inst.total_cost(&x));
        let gap = solver_cost.map(|c| (c - oracle_cost) / oracle_cost);
        let dual = dual_value(&inst, &r.multipliers);
        match gap {
            Some(g) => {
                gaps.push(g);
                if g < -1e-9 {
                    below += 1;
                }
            }
            None => infeasible += 1,
        }
        if dual > oracle_cost + 1e-9 {
            duality += 1;
        }
        report.record(&Trial {
            trial,
            n: inst.n_queries(),
            m: inst.n_models(),
            alpha,
            oracle_cost,
            solver_cost,
            gap,
            dual_value: dual,
            status: r.status,
        })?;
    }
    gaps.sort_by(f64::total_cmp);
    let mean = if gaps.is_empty() {
        None
    } else {
        Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
    };
    let summary = json!({
        "trials": args.trials,
        "feasible": gaps.len(),
        "infeasible": infeasible,
        "below_oracle": below,
        "weak_duality_violations": duality,
        "median_gap": percentile(&gaps, 0.5),
        "p95_gap": percentile(&gaps, 0.95),
        "mean_gap": mean,
        "max_gap": gaps.last(),
    });
    report.finish(&summary, &manifest)?;
    Ok(())
}

fn gen(args: &GenArgs, seed: u64, out: Option<PathBuf>) -> Outcome {
    let manifest = RunManifest::new("gen-synthetic", args, seed)?;
    let [easy, medium, hard] = args.mix[..] else {
        return Err(crate::Failure::Config(anyhow::anyhow!(
            "mix needs three shares, got {}",
            args.mix.len()
        )));
    };
    let mix = config(DifficultyMix::new(easy, medium, hard))?;
    let cfg = SyntheticConfig {
        n_queries: args.n_queries,
        n_models: args.n_models,
        seed,
        mix,
        concurrency_limit: args.concurrency,
        l_max: args.l_max,
    };
    let ds = config(gen_synthetic(&cfg))?;
    write_dataset(&ds, &args.dir)?;
    let mut difficulty: BTreeMap<String, usize> = BTreeMap::new();
    for q in &ds.queries {
        *difficulty
            .entry(runtime(label_difficulty(q, ds.n_models()))?.to_string())
            .or_default() += 1;
    }
    let summary = json!({
        "n_queries": ds.n_queries(),
        "n_models": ds.n_models(),
        "difficulty": difficulty,
        "files": [args.dir.join(QUERIES_FILE), args.dir.join(MODELS_FILE)],
    });
    Report::new(out).finish(&summary, &manifest)?;
    Ok(())
}
