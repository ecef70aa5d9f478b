//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use llm_router::baselines::GreedyPolicy;
use llm_router::dataset::{
    label_difficulty, token_cost, Difficulty, ModelSpec, QueryRecord, Source, Tier,
};
use llm_router::optimizer::{
    assign_given_multipliers, brute_force, dual_value, solve, Multipliers, RoutingInstance,
    SolverConfig,
};
use llm_router::pipeline::{fit, PipelineConfig};
use llm_router::predictor::{
    fuse, loss_and_gradient, BucketConfig, DualHeadModel, Estimate, FusionConfig, RetrievalStore,
    Sample, StoreEntry, TrainingSet,
};
use llm_router::simulator::{run_simulation, sweep_alpha, sweep_concurrency, Router, SimConfig};
use llm_router::synthetic::{gen_synthetic, SyntheticConfig};
use llm_router::TokenPrice;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

// ---------- independent oracles ----------

/// Every assignment of `n` queries to `m` models, as mixed-radix counters.
fn for_each_assignment(n: usize, m: usize, mut f: impl FnMut(&[usize])) {
    let mut x = vec![0usize; n];
    loop {
        f(&x);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            x[i] += 1;
            if x[i] < m {
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

struct Raw {
    n: usize,
    m: usize,
    cost: Vec<Vec<f64>>,
    cap: Vec<Vec<f64>>,
    limit: Vec<u32>,
}

impl Raw {
    fn fits(&self, x: &[usize]) -> bool {
        let mut load = vec![0u32; self.m];
        x.iter().for_each(|&j| load[j] += 1);
        load.iter().zip(&self.limit).all(|(l, c)| l <= c)
    }

    fn quality(&self, x: &[usize]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &j)| self.cap[i][j])
            .sum::<f64>()
            / self.n as f64
    }

    fn cost_of(&self, x: &[usize]) -> f64 {
        x.iter().enumerate().map(|(i, &j)| self.cost[i][j]).sum()
    }

    /// Best quality over capacity-respecting assignments.
    fn max_quality(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for_each_assignment(self.n, self.m, |x| {
            if self.fits(x) {
                best = best.max(self.quality(x));
            }
        });
        best
    }

    /// Cheapest feasible cost and its average quality.
    fn optimum(&self, alpha: f64) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for_each_assignment(self.n, self.m, |x| {
            if self.fits(x) && self.quality(x) >= alpha - 1e-9 {
                let c = self.cost_of(x);
                if best.is_none_or(|(b, _)| c < b) {
                    best = Some((c, self.quality(x)));
                }
            }
        });
        best
    }

    fn instance(&self, alpha: f64) -> RoutingInstance {
        RoutingInstance::from_rows(&self.cost, &self.cap, alpha, self.limit.clone()).unwrap()
    }
}

fn random_raw(rng: &mut ChaCha8Rng, discrete: bool) -> Raw {
    let n = rng.gen_range(2..=8);
    let m = rng.gen_range(2..=3);
    let cost = (0..n)
        .map(|_| (0..m).map(|_| rng.gen_range(0.01..1.0)).collect())
        .collect();
    let cap = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    if discrete {
                        rng.gen_range(0..3) as f64 * 0.5
                    } else {
                        rng.gen::<f64>()
                    }
                })
                .collect()
        })
        .collect();
    // enough slots in total, at least one per model
    let mut limit: Vec<u32> = (0..m).map(|_| rng.gen_range(1..=n as u32)).collect();
    while limit.iter().sum::<u32>() < n as u32 {
        let j = rng.gen_range(0..m);
        limit[j] += 1;
    }
    Raw {
        n,
        m,
        cost,
        cap,
        limit,
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

// ---------- criteria ----------

const ORACLE_TRIALS: usize = 300;

struct OracleRun {
    gaps: Vec<f64>,
    infeasible: usize,
    below_oracle: usize,
    duality_breaks: usize,
    elapsed: Duration,
}

fn oracle_trials() -> OracleRun {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut run = OracleRun {
        gaps: Vec::new(),
        infeasible: 0,
        below_oracle: 0,
        duality_breaks: 0,
        elapsed: Duration::ZERO,
    };
    for _ in 0..ORACLE_TRIALS {
        let raw = random_raw(&mut rng, false);
        let alpha = rng.gen_range(0.0..=1.0) * raw.max_quality();
        let (opt, _) = raw
            .optimum(alpha)
            .expect("alpha is drawn below the reachable quality");
        let inst = raw.instance(alpha);
        let (x, report) = solve(&inst, &SolverConfig::default());
        if !inst.is_feasible(&x) || !report.feasible {
            run.infeasible += 1;
            continue;
        }
        let cost = raw.cost_of(&x.choice);
        if cost < opt - 1e-9 {
            run.below_oracle += 1;
        }
        if dual_value(&inst, &report.multipliers) > opt + 1e-9 {
            run.duality_breaks += 1;
        }
        run.gaps.push((cost - opt) / opt);
    }
    run.elapsed = start.elapsed();
    run
}

fn oracle_gap(run: &OracleRun) -> Outcome {
    let mut gaps = run.gaps.clone();
    gaps.sort_by(f64::total_cmp);
    let median = if gaps.is_empty() {
        f64::INFINITY
    } else {
        percentile(&gaps, 0.5)
    };
    let p95 = if gaps.is_empty() {
        f64::INFINITY
    } else {
        percentile(&gaps, 0.95)
    };
    let detail = format!(
        "{ORACLE_TRIALS} trials, infeasible {}, below oracle {}, median gap {:.4}, p95 gap {:.4}, {:.2?}",
        run.infeasible, run.below_oracle, median, p95, run.elapsed
    );
    let ok = run.infeasible == 0
        && run.below_oracle == 0
        && median <= 0.05
        && p95 <= 0.15
        && run.elapsed < Duration::from_secs(30);
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn weak_duality(run: &OracleRun) -> Outcome {
    let detail = format!(
        "{} of {ORACLE_TRIALS} trials above the optimum",
        run.duality_breaks
    );
    if run.duality_breaks == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn argmin_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let discrete = rng.gen_bool(0.3);
        let raw = random_raw(&mut rng, discrete);
        let alpha = rng.gen::<f64>();
        let inst = raw.instance(alpha);
        let mult = Multipliers {
            lambda1: if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(0.0..5.0)
            },
            lambda2: (0..raw.m)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        0.0
                    } else {
                        rng.gen_range(0.0..1.0)
                    }
                })
                .collect(),
        };
        let got = assign_given_multipliers(&inst, &mult);
        for i in 0..raw.n {
            let reduced = |j: usize| {
                raw.cost[i][j] - mult.lambda1 * raw.cap[i][j] / raw.n as f64 + mult.lambda2[j]
            };
            let best = (0..raw.m).map(reduced).fold(f64::INFINITY, f64::min);
            // ties: higher capability, then lower index
            let want = (0..raw.m)
                .filter(|&j| reduced(j) == best)
                .min_by(|&a, &b| raw.cap[i][b].total_cmp(&raw.cap[i][a]).then(a.cmp(&b)))
                .unwrap();
            if got.choice[i] != want {
                mismatches += 1;
            }
        }
    }
    let detail = format!("1000 pairs, {mismatches} row mismatches");
    if mismatches == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn slackness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut tight, mut zero_lambda, mut failures) = (0, 0, Vec::new());
    for t in 0..ORACLE_TRIALS {
        let raw = random_raw(&mut rng, true);
        // alpha from a random capacity-respecting assignment keeps it reachable
        let alpha = loop {
            let x: Vec<usize> = (0..raw.n).map(|_| rng.gen_range(0..raw.m)).collect();
            if raw.fits(&x) {
                break raw.quality(&x);
            }
        };
        let Some((_, q_opt)) = raw.optimum(alpha) else {
            continue;
        };
        let inst = raw.instance(alpha);
        let (x, report) = solve(&inst, &SolverConfig::default());
        if report.multipliers.lambda1 == 0.0 {
            zero_lambda += 1;
            if report.quality_slack_residual != 0.0 {
                failures.push(format!(
                    "trial {t}: residual {} with zero multiplier",
                    report.quality_slack_residual
                ));
            }
        }
        if (q_opt - alpha).abs() > 1e-9 {
            continue;
        }
        tight += 1;
        let bound = report.step_quality * inst.max_row_spread() / raw.n as f64;
        if inst.avg_quality(&x) < alpha - 1e-9 {
            failures.push(format!(
                "trial {t}: quality {} below {alpha}",
                inst.avg_quality(&x)
            ));
        }
        if report.quality_slack_residual.abs() > bound {
            failures.push(format!(
                "trial {t}: residual {} exceeds {bound}",
                report.quality_slack_residual.abs()
            ));
        }
    }
    let detail = format!(
        "{tight} tight trials, {zero_lambda} with zero multiplier, {} failures",
        failures.len()
    );
    if tight >= 20 && failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!(
            "{detail}; {}",
            failures
                .iter()
                .take(3)
                .cloned()
                .collect::<Vec<_>>()
                .join("; ")
        ))
    }
}

fn oracle_monotone() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let alphas = [0.5, 0.6, 0.7, 0.8, 0.9];
    let mut breaks = 0;
    let mut points = 0;
    for _ in 0..20 {
        let n = rng.gen_range(2..=6);
        let m = rng.gen_range(2..=3);
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(0.01..1.0)).collect())
            .collect();
        let cap: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let mut grid = [[f64::INFINITY; 4]; 5];
        for (a, &alpha) in alphas.iter().enumerate() {
            for l in 1..=4u32 {
                let inst = RoutingInstance::from_rows(&cost, &cap, alpha, vec![l; m]).unwrap();
                grid[a][l as usize - 1] =
                    brute_force(&inst).unwrap().cost().unwrap_or(f64::INFINITY);
                points += 1;
            }
        }
        for a in 0..5 {
            for l in 0..4 {
                if a + 1 < 5 && grid[a + 1][l] < grid[a][l] {
                    breaks += 1;
                }
                if l + 1 < 4 && grid[a][l + 1] > grid[a][l] {
                    breaks += 1;
                }
            }
        }
    }
    let detail = format!("20 instances, {points} grid points, {breaks} monotonicity breaks");
    if breaks == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn controllability_shape() -> Outcome {
    let start = Instant::now();
    let ds = gen_synthetic(&SyntheticConfig::default()).map_err(|e| e.to_string())?;
    let fitted = fit(&ds, &PipelineConfig::seeded(0)).map_err(|e| e.to_string())?;
    let preds = fitted.eval_predictions().map_err(|e| e.to_string())?;
    let eval = &fitted.eval_set;
    let base = SimConfig::for_dataset(eval);
    let alphas = [0.70, 0.75, 0.80, 0.85, 0.90];
    let omni = Router::omni();
    let max_quality = Router::greedy(GreedyPolicy::MaxQuality);
    let confident =
        Router::greedy(GreedyPolicy::cheapest_confident(GreedyPolicy::DEFAULT_THRESHOLD).unwrap());
    let omni_alpha =
        sweep_alpha(eval, &preds, &omni, &base, &alphas, 4).map_err(|e| e.to_string())?;
    let mq_alpha =
        sweep_alpha(eval, &preds, &max_quality, &base, &alphas, 4).map_err(|e| e.to_string())?;
    let omni_l =
        sweep_concurrency(eval, &preds, &omni, &base, &[1], 1).map_err(|e| e.to_string())?;
    let cc_l =
        sweep_concurrency(eval, &preds, &confident, &base, &[1], 1).map_err(|e| e.to_string())?;
    let ratio = omni_alpha[4].total_cost_dollars / mq_alpha[4].total_cost_dollars;
    let lead = omni_l[0].accuracy - cc_l[0].accuracy;
    let elapsed = start.elapsed();
    let detail = format!(
        "cost ratio at 0.90 {ratio:.3} (need <= 0.5), accuracy lead at L=1 {:+.1}pp (need >= +3), {elapsed:.2?}",
        lead * 100.0
    );
    if ratio <= 0.5 && lead >= 0.03 - 1e-12 && elapsed < Duration::from_secs(300) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn unit_store(sims: &[f64], capability: &[f64], length: &[u32]) -> (RetrievalStore, Vec<f64>) {
    // query is e0; entry i leans on e0 by sims[i] and on its own axis otherwise
    let dim = sims.len() + 1;
    let mut store = RetrievalStore::new(vec!["m".into()], dim, 1024);
    for (i, &s) in sims.iter().enumerate() {
        let mut e = vec![0.0; dim];
        e[0] = s;
        e[i + 1] = (1.0 - s * s).sqrt();
        store
            .insert(StoreEntry {
                id: format!("h{i}"),
                embedding: e,
                capability: vec![capability[i]],
                length: vec![length[i]],
            })
            .unwrap();
    }
    let mut q = vec![0.0; dim];
    q[0] = 1.0;
    (store, q)
}

fn fd_relative_error(
    model: &DualHeadModel,
    set: &TrainingSet,
    batch: &[usize],
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    let (_, grad) = loss_and_gradient(model, set, batch);
    let h = 1e-6;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
    let (mut cap_err, mut len_err) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let i = rng.gen_range(0..model.w1.len());
        let (mut p, mut m) = (model.clone(), model.clone());
        p.w1[i] += h;
        m.w1[i] -= h;
        let num = (loss_and_gradient(&p, set, batch).0.capability
            - loss_and_gradient(&m, set, batch).0.capability)
            / (2.0 * h);
        cap_err = cap_err.max(rel(grad.w1[i], num));

        let k = rng.gen_range(0..model.w2.len());
        let (mut p, mut m) = (model.clone(), model.clone());
        p.w2[k] += h;
        m.w2[k] -= h;
        let num = (loss_and_gradient(&p, set, batch).0.length
            - loss_and_gradient(&m, set, batch).0.length)
            / (2.0 * h);
        len_err = len_err.max(rel(grad.w2[k], num));
    }
    let (mut p, mut m) = (model.clone(), model.clone());
    p.b1 += h;
    m.b1 -= h;
    let num = (loss_and_gradient(&p, set, batch).0.capability
        - loss_and_gradient(&m, set, batch).0.capability)
        / (2.0 * h);
    cap_err = cap_err.max(rel(grad.b1, num));
    let k = rng.gen_range(0..model.b2.len());
    let (mut p, mut m) = (model.clone(), model.clone());
    p.b2[k] += h;
    m.b2[k] -= h;
    let num = (loss_and_gradient(&p, set, batch).0.length
        - loss_and_gradient(&m, set, batch).0.length)
        / (2.0 * h);
    len_err = len_err.max(rel(grad.b2[k], num));
    (cap_err, len_err)
}

fn spec_model(id: &str, price_in: f64, price_out: f64, tier: Tier) -> ModelSpec {
    ModelSpec {
        id: id.into(),
        name: id.into(),
        description: format!("{id} model"),
        embedding: Vec::new(),
        price_in: TokenPrice::from_dollars_per_million(price_in).unwrap(),
        price_out: TokenPrice::from_dollars_per_million(price_out).unwrap(),
        tier,
        concurrency_limit: 4,
    }
}

fn predictor_numerics() -> Outcome {
    let mut problems = Vec::new();

    // hand-computed weighted averages
    let (store, q) = unit_store(&[0.9, 0.5, 0.1], &[1.0, 0.0, 1.0], &[10, 20, 30]);
    let a = store.capability_retrieve(&q, "m", 3).unwrap();
    if (a - (0.9 + 0.1) / 1.5).abs() > 1e-9 {
        problems.push(format!("three-neighbour capability {a}"));
    }
    let (store, q) = unit_store(&[0.8, 0.2], &[1.0, 1.0], &[100, 600]);
    let l = store.length_retrieve(&q, "m", 2).unwrap();
    if l != 200 {
        problems.push(format!("two-neighbour length {l}"));
    }
    let (store, q) = unit_store(&[0.6, 0.6], &[1.0, 0.0], &[100, 300]);
    let (a, l) = (
        store.capability_retrieve(&q, "m", 2).unwrap(),
        store.length_retrieve(&q, "m", 2).unwrap(),
    );
    if (a - 0.5).abs() > 1e-9 || l != 200 {
        problems.push(format!("equal-weight pair gave {a}, {l}"));
    }

    // fusion boundaries
    let model = spec_model("gpt-4o", 2.5, 10.0, Tier::Strong);
    let trained = Estimate {
        capability: 0.83,
        length: 117,
    };
    let retrieved = Estimate {
        capability: 0.21,
        length: 402,
    };
    for gamma in [0.0, 1.0] {
        for delta in [0.0, 1.0] {
            let p = fuse(
                trained,
                retrieved,
                &FusionConfig::new(gamma, delta, 16).unwrap(),
                &model,
                55,
            );
            let want_a = if gamma == 1.0 {
                trained.capability
            } else {
                retrieved.capability
            };
            let len = if delta == 1.0 {
                trained.length
            } else {
                retrieved.length
            };
            let want_cost =
                token_cost(&model, 55, 0).dollars() + token_cost(&model, 0, len as u64).dollars();
            if p.a != want_a || p.cost != want_cost {
                problems.push(format!(
                    "fusion at gamma {gamma}, delta {delta}: {} / {}",
                    p.a, p.cost
                ));
            }
        }
    }

    // finite differences on both heads
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dim = 6;
    let buckets = BucketConfig::with_bucket_count(100, 5).unwrap();
    let model = DualHeadModel::random(dim, buckets, 0.8, 3);
    let unit = |rng: &mut ChaCha8Rng| {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect::<Vec<_>>()
    };
    let set = TrainingSet {
        query_embeddings: (0..8).map(|_| unit(&mut rng)).collect(),
        model_embeddings: (0..3).map(|_| unit(&mut rng)).collect(),
        samples: (0..24)
            .map(|s| Sample {
                query: s % 8,
                model: s % 3,
                capability: (s % 2) as f64,
                bucket: s % 5,
            })
            .collect(),
    };
    let batch: Vec<usize> = (0..24).collect();
    let (cap_err, len_err) = fd_relative_error(&model, &set, &batch, &mut rng);
    if cap_err > 1e-4 || len_err > 1e-4 {
        problems.push(format!(
            "gradient relative error {cap_err:.2e} / {len_err:.2e}"
        ));
    }

    let detail = format!(
        "3 retrieval fixtures, 4 fusion corners, gradient rel err {cap_err:.1e} / {len_err:.1e}"
    );
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn simulator_safety() -> Outcome {
    let ds = gen_synthetic(&SyntheticConfig {
        n_queries: 400,
        seed: 11,
        ..SyntheticConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let fitted = fit(&ds, &PipelineConfig::seeded(11)).map_err(|e| e.to_string())?;
    let preds = fitted.eval_predictions().map_err(|e| e.to_string())?;
    let eval = &fitted.eval_set;
    let routers = [
        Router::omni(),
        Router::greedy(GreedyPolicy::MaxQuality),
        Router::greedy(GreedyPolicy::cheapest_confident(GreedyPolicy::DEFAULT_THRESHOLD).unwrap()),
        Router::greedy(GreedyPolicy::Random { seed: 3 }),
    ];
    let (mut runs, mut unsafe_runs, mut drifted) = (0, 0, 0);
    for router in &routers {
        for l in [1, 2, 4, 8] {
            let cfg = SimConfig::for_dataset(eval).with_uniform_capacity(l);
            let a = run_simulation(eval, &preds, router, &cfg).map_err(|e| e.to_string())?;
            let b = run_simulation(eval, &preds, router, &cfg).map_err(|e| e.to_string())?;
            runs += 1;
            let m = &a.metrics;
            if m.capacity_violations != 0
                || m.conservation_violations != 0
                || m.completed != eval.n_queries()
            {
                unsafe_runs += 1;
            }
            if serde_json::to_string(&a.metrics).unwrap()
                != serde_json::to_string(&b.metrics).unwrap()
            {
                drifted += 1;
            }
        }
    }
    let detail = format!(
        "{runs} runs, {unsafe_runs} with violations, {drifted} not byte-identical on rerun"
    );
    if unsafe_runs == 0 && drifted == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dataset_fidelity() -> Outcome {
    let ids: Vec<String> = (0..10).map(|j| format!("m{j}")).collect();
    let mut problems = Vec::new();
    for correct in 0..=10 {
        let record = QueryRecord {
            id: format!("q{correct}"),
            text: String::new(),
            source: Source::Mmlu,
            in_tokens: 1,
            correctness: ids
                .iter()
                .enumerate()
                .map(|(j, id)| (id.clone(), u8::from(j < correct)))
                .collect(),
            out_tokens: ids
                .iter()
                .map(|id| (id.clone(), 1))
                .collect::<BTreeMap<_, _>>(),
            embedding: Vec::new(),
        };
        let want = match correct {
            8..=10 => Difficulty::Easy,
            4..=7 => Difficulty::Medium,
            _ => Difficulty::Hard,
        };
        let got = label_difficulty(&record, 10).unwrap();
        if got != want {
            problems.push(format!("{correct} correct labelled {got}"));
        }
    }
    // price sheet in dollars per million tokens, in then out
    let sheet = [
        ("qwen2.5-7b-instruct", 0.267, 0.267, 0.534),
        ("qwen2.5-14b-instruct", 0.534, 0.534, 1.068),
        ("qwen2.5-32b-instruct", 1.22, 1.22, 2.44),
        ("qwen2.5-72b-instruct", 2.745, 2.745, 5.49),
        ("gemma-2-9b-it", 0.343, 0.343, 0.686),
        ("gemma-2-27b-it", 1.03, 1.03, 2.06),
        ("gpt-4o-mini", 0.15, 0.6, 0.75),
        ("gpt-4o", 2.5, 10.0, 12.5),
        ("gemini-1.5-flash", 0.075, 0.3, 0.375),
        ("claude-3-5-sonnet", 3.0, 15.0, 18.0),
    ];
    for (id, pin, pout, total) in sheet {
        let model = spec_model(id, pin, pout, Tier::Strong);
        let got = token_cost(&model, 1_000_000, 1_000_000);
        let want_picos = (total * 1e12_f64).round() as i64;
        if got.picos() != want_picos {
            problems.push(format!(
                "{id}: {} picos, expected {want_picos}",
                got.picos()
            ));
        }
    }
    let detail = "11 correct-counts, 10 price rows".to_string();
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn main() -> ExitCode {
    let run = oracle_trials();
    let results: Vec<(&str, Outcome)> = vec![
        ("oracle gap", oracle_gap(&run)),
        ("weak duality", weak_duality(&run)),
        ("argmin rule", argmin_rule()),
        ("quality slackness", slackness()),
        ("oracle monotone control", oracle_monotone()),
        ("controllability shape", controllability_shape()),
        ("predictor numerics", predictor_numerics()),
        ("simulator safety", simulator_safety()),
        ("dataset fidelity", dataset_fidelity()),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
