//! Executes an experiment config: one fit per (method, seed), evaluation on
//! a held-out batch, and the per-run and summary outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;
use stochdom_core::envs::{CliffSpec, Market};
use stochdom_core::models::{
    Checkpoint, Dataset, EpisodicEnv, PathwiseModel, PortfolioModel, SupervisedModel, TabularPolicy,
};
use stochdom_core::optim::LsdTrace;
use stochdom_core::optim::{
    cvar_pg_fit, lsd_fit, lsd_pg, mean_variance_fit, reinforce_fit, sgd_erm_fit, BaselineConfig,
    LsdConfig, Termination,
};
use stochdom_core::MetricReport;

use crate::compare::{compare, read_samples};
use crate::config::{ExperimentConfig, ExperimentKind, Method};
use crate::error::CliError;
use crate::output::{f2_curve_csv, histogram_csv, write_atomic};

pub const SEED_OFFSET_VAR: &str = "STOCHDOM_SEED_OFFSET";

/// Reads the seed offset from the environment (0 when unset).
pub fn seed_offset() -> Result<i64, CliError> {
    match std::env::var(SEED_OFFSET_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("{SEED_OFFSET_VAR}={v:?}: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(CliError::Config(format!("{SEED_OFFSET_VAR}: {e}"))),
    }
}

enum Task {
    Portfolio(PortfolioModel),
    Supervised(SupervisedModel),
    Cliff(CliffSpec),
}

impl Task {
    fn build(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let config_err = |e: stochdom_core::Error| CliError::Config(e.to_string());
        Ok(match cfg.experiment {
            ExperimentKind::Portfolio => {
                let spec = cfg.market.as_ref().expect("validated");
                Task::Portfolio(PortfolioModel::new(
                    Market::new(spec).map_err(config_err)?,
                    cfg.parameterization,
                ))
            }
            ExperimentKind::Supervised => {
                let (kind, data) = match &cfg.data {
                    Some(path) => {
                        let file = std::fs::File::open(path)
                            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                        let data = Dataset::read_csv(std::io::BufReader::new(file))
                            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                        (cfg.task, data)
                    }
                    None => {
                        let spec = cfg.supervised.clone().unwrap_or_default();
                        (spec.task, spec.generate().map_err(config_err)?)
                    }
                };
                Task::Supervised(SupervisedModel::new(kind, data))
            }
            ExperimentKind::Cliffwalk => Task::Cliff(cfg.cliff.clone().unwrap_or_default()),
            ExperimentKind::Compare => unreachable!("compare has no fits"),
        })
    }

    /// The risk-neutral method every curve is drawn against.
    fn reference(&self) -> Method {
        match self {
            Task::Cliff(_) => Method::Reinforce,
            _ => Method::Sgd,
        }
    }

    fn checkpoint(&self, theta: Vec<f64>) -> Checkpoint {
        match self {
            Task::Portfolio(m) => Checkpoint::new("portfolio", vec![m.dim()], theta),
            Task::Supervised(m) => {
                let kind = serde_json::to_value(m.kind()).expect("enum serializes");
                Checkpoint::new(kind.as_str().unwrap_or("supervised"), vec![m.dim()], theta)
            }
            Task::Cliff(env) => Checkpoint::new(
                "tabular_policy",
                vec![env.num_states(), env.num_actions()],
                theta,
            ),
        }
    }
}

/// Result of one fit before it is written out.
struct Fit {
    theta: Vec<f64>,
    trace: Vec<u8>,
    lsd_trace: Option<LsdTrace>,
    termination: Option<Termination>,
    outer_updates: Option<usize>,
    iterations: usize,
}

fn fit_pathwise<M: PathwiseModel>(
    model: &M,
    method: Method,
    lsd: &LsdConfig,
    base: &BaselineConfig,
) -> stochdom_core::Result<Fit> {
    let mut trace = Vec::new();
    match method {
        Method::Lsd => {
            let (theta, tr) = lsd_fit(model, lsd)?;
            tr.write_ndjson(&mut trace)?;
            Ok(Fit {
                theta: theta.into_inner(),
                trace,
                lsd_trace: Some(tr.clone()),
                termination: Some(tr.termination),
                outer_updates: Some(tr.updates.len()),
                iterations: tr.total_iterations(),
            })
        }
        Method::Sgd | Method::MeanVariance(_) => {
            let (theta, tr) = match method {
                Method::MeanVariance(l) => mean_variance_fit(model, l, base)?,
                _ => sgd_erm_fit(model, base)?,
            };
            tr.write_ndjson(&mut trace)?;
            Ok(Fit {
                theta: theta.into_inner(),
                trace,
                lsd_trace: None,
                termination: None,
                outer_updates: None,
                iterations: tr.records.len(),
            })
        }
        other => unreachable!("{} rejected by validation", other.label()),
    }
}

fn fit_policy(
    env: &CliffSpec,
    method: Method,
    lsd: &LsdConfig,
    base: &BaselineConfig,
) -> stochdom_core::Result<Fit> {
    let policy = TabularPolicy::uniform(env.num_states(), env.num_actions());
    let mut trace = Vec::new();
    match method {
        Method::Lsd => {
            let (theta, tr) = lsd_pg(&policy, env, lsd)?;
            tr.write_ndjson(&mut trace)?;
            Ok(Fit {
                theta: theta.into_inner(),
                trace,
                lsd_trace: Some(tr.clone()),
                termination: Some(tr.termination),
                outer_updates: Some(tr.updates.len()),
                iterations: tr.total_iterations(),
            })
        }
        Method::Reinforce | Method::CvarPg(_) => {
            let (theta, tr) = match method {
                Method::CvarPg(a) => cvar_pg_fit(&policy, env, a, base)?,
                _ => reinforce_fit(&policy, env, base)?,
            };
            tr.write_ndjson(&mut trace)?;
            Ok(Fit {
                theta: theta.into_inner(),
                trace,
                lsd_trace: None,
                termination: None,
                outer_updates: None,
                iterations: tr.records.len(),
            })
        }
        other => unreachable!("{} rejected by validation", other.label()),
    }
}

/// Per-run metrics file: identifiers, fit statistics and the metric report.
#[derive(Debug, Serialize)]
struct RunMetrics {
    experiment: ExperimentKind,
    method: String,
    seed: u64,
    eval_size: usize,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    termination: Option<Termination>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outer_updates: Option<usize>,
    #[serde(flatten)]
    metrics: MetricReport,
}

/// In-memory result of one run.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub theta: Vec<f64>,
    /// Held-out outcomes.
    pub values: Vec<f64>,
    /// Present for LSD runs.
    pub trace: Option<LsdTrace>,
}

struct Job {
    method: Method,
    seed: u64,
    /// Run only to provide the reference curve; no files of its own.
    hidden: bool,
}

struct Finished {
    values: Vec<f64>,
    metrics: MetricReport,
}

pub struct Runner {
    cfg: ExperimentConfig,
    out: PathBuf,
    jobs: usize,
    offset: i64,
}

impl Runner {
    pub fn new(cfg: ExperimentConfig, out: Option<PathBuf>, jobs: usize, offset: i64) -> Self {
        let out = out
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("stochdom_out"));
        Self {
            cfg,
            out,
            jobs: jobs.max(1),
            offset,
        }
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    fn io_err(&self, path: &Path, e: std::io::Error) -> CliError {
        CliError::Run(format!("{}: {e}", path.display()))
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out.join(name);
        write_atomic(&path, bytes).map_err(|e| self.io_err(&path, e))
    }

    fn seeds(&self) -> Result<Vec<u64>, CliError> {
        self.cfg
            .seeds
            .iter()
            .map(|&s| {
                s.checked_add_signed(self.offset).ok_or_else(|| {
                    CliError::Config(format!(
                        "seed {s} with offset {} is out of range",
                        self.offset
                    ))
                })
            })
            .collect()
    }

    pub fn run(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out).map_err(|e| self.io_err(&self.out, e))?;
        if self.cfg.experiment == ExperimentKind::Compare {
            return self.run_compare();
        }
        let task = Task::build(&self.cfg)?;
        let seeds = self.seeds()?;
        let methods = self.cfg.expand_methods();
        let reference = task.reference();

        let mut jobs = Vec::new();
        for &seed in &seeds {
            for &method in &methods {
                jobs.push(Job {
                    method,
                    seed,
                    hidden: false,
                });
            }
            if !methods.contains(&reference) {
                jobs.push(Job {
                    method: reference,
                    seed,
                    hidden: true,
                });
            }
        }

        let results: Vec<Mutex<Option<Result<Finished, CliError>>>> =
            jobs.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..self.jobs.min(jobs.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(job) = jobs.get(i) else { break };
                    let r = self.run_one(&task, job);
                    *results[i].lock().expect("no poisoned slot") = Some(r);
                });
            }
        });
        let mut finished = Vec::with_capacity(jobs.len());
        for (job, slot) in jobs.iter().zip(results) {
            let r = slot
                .into_inner()
                .expect("no poisoned slot")
                .expect("every job ran");
            finished.push(r.map_err(|e| match e {
                CliError::Run(msg) => {
                    CliError::Run(format!("{} seed {}: {msg}", job.method.label(), job.seed))
                }
                other => other,
            })?);
        }

        // Curves against the risk-neutral reference of the same seed.
        let reference_values: BTreeMap<u64, &Vec<f64>> = jobs
            .iter()
            .zip(&finished)
            .filter(|(j, _)| j.method == reference)
            .map(|(j, f)| (j.seed, &f.values))
            .collect();
        for (job, f) in jobs.iter().zip(&finished).filter(|(j, _)| !j.hidden) {
            let name = format!("f2_{}_{}.csv", job.method.label(), job.seed);
            let csv = f2_curve_csv(
                &f.values,
                reference_values[&job.seed],
                self.cfg.curve_points,
            );
            self.write(&name, csv.as_bytes())?;
        }
        self.write_summary(&jobs, &finished)
    }

    /// Fits `method` under `seed` and evaluates it on the held-out batch,
    /// without writing anything.
    pub fn fit_and_evaluate(&self, method: Method, seed: u64) -> Result<Evaluation, CliError> {
        let task = Task::build(&self.cfg)?;
        let (fit, values) = self.fit(&task, method, seed)?;
        Ok(Evaluation {
            theta: fit.theta,
            values,
            trace: fit.lsd_trace,
        })
    }

    fn fit(&self, task: &Task, method: Method, seed: u64) -> Result<(Fit, Vec<f64>), CliError> {
        let mut lsd = self.cfg.lsd.clone();
        lsd.seed = seed;
        let mut base = self.cfg.baseline.clone();
        base.seed = seed;
        let train_batch = match method {
            Method::Lsd => lsd.batch,
            _ => base.batch,
        };
        let eval_size = self.cfg.eval_multiplier * train_batch;
        let run_err = |e: stochdom_core::Error| CliError::Run(e.to_string());

        // Training draws from stream 0 of the seed; evaluation from stream 1.
        let mut eval_rng = ChaCha8Rng::seed_from_u64(seed);
        eval_rng.set_stream(1);
        Ok(match task {
            Task::Portfolio(m) => {
                let fit = fit_pathwise(m, method, &lsd, &base).map_err(run_err)?;
                let v = m
                    .sample_values(&fit.theta, eval_size, &mut eval_rng)
                    .map_err(run_err)?;
                (fit, v)
            }
            Task::Supervised(m) => {
                let fit = fit_pathwise(m, method, &lsd, &base).map_err(run_err)?;
                let v = m
                    .sample_values(&fit.theta, eval_size, &mut eval_rng)
                    .map_err(run_err)?;
                (fit, v)
            }
            Task::Cliff(env) => {
                let fit = fit_policy(env, method, &lsd, &base).map_err(run_err)?;
                let policy = TabularPolicy::from_logits(
                    env.num_states(),
                    env.num_actions(),
                    fit.theta.clone(),
                )
                .map_err(run_err)?;
                let v = (0..eval_size)
                    .map(|_| env.rollout(&policy, &mut eval_rng).ret)
                    .collect();
                (fit, v)
            }
        })
    }

    fn run_one(&self, task: &Task, job: &Job) -> Result<Finished, CliError> {
        let run_err = |e: stochdom_core::Error| CliError::Run(e.to_string());
        let (fit, values) = self.fit(task, job.method, job.seed)?;
        let eval_size = values.len();
        let metrics = MetricReport::from_samples(&values).map_err(run_err)?;
        if !job.hidden {
            let label = job.method.label();
            let record = RunMetrics {
                experiment: self.cfg.experiment,
                method: label.clone(),
                seed: job.seed,
                eval_size,
                iterations: fit.iterations,
                termination: fit.termination,
                outer_updates: fit.outer_updates,
                metrics: metrics.clone(),
            };
            let json =
                serde_json::to_vec_pretty(&record).map_err(|e| CliError::Run(e.to_string()))?;
            self.write(&format!("metrics_{label}_{}.json", job.seed), &json)?;
            self.write(&format!("trace_{label}_{}.ndjson", job.seed), &fit.trace)?;
            self.write(
                &format!("hist_{label}_{}.csv", job.seed),
                histogram_csv(&values, self.cfg.bins).as_bytes(),
            )?;
            let mut ckpt = Vec::new();
            task.checkpoint(fit.theta)
                .write(&mut ckpt)
                .map_err(run_err)?;
            self.write(&format!("theta_{label}_{}.json", job.seed), &ckpt)?;
        }
        Ok(Finished { values, metrics })
    }

    fn write_summary(&self, jobs: &[Job], finished: &[Finished]) -> Result<(), CliError> {
        let mut runs = Vec::new();
        let mut by_method: BTreeMap<String, Vec<&MetricReport>> = BTreeMap::new();
        for (job, f) in jobs.iter().zip(finished).filter(|(j, _)| !j.hidden) {
            let label = job.method.label();
            runs.push(serde_json::json!({
                "method": label,
                "seed": job.seed,
                "metrics": format!("metrics_{label}_{}.json", job.seed),
                "trace": format!("trace_{label}_{}.ndjson", job.seed),
                "f2": format!("f2_{label}_{}.csv", job.seed),
                "hist": format!("hist_{label}_{}.csv", job.seed),
                "theta": format!("theta_{label}_{}.json", job.seed),
            }));
            by_method.entry(label).or_default().push(&f.metrics);
        }
        let aggregate: BTreeMap<String, Value> = by_method
            .into_iter()
            .map(|(label, reports)| (label, aggregate(&reports)))
            .collect();
        let summary = serde_json::json!({
            "experiment": self.cfg.experiment,
            "runs": runs,
            "aggregate": aggregate,
        });
        let json = serde_json::to_vec_pretty(&summary).map_err(|e| CliError::Run(e.to_string()))?;
        self.write("summary.json", &json)
    }

    fn run_compare(&self) -> Result<(), CliError> {
        let c = self.cfg.compare.as_ref().expect("validated");
        let xs = read_samples(&c.x)?;
        let ys = read_samples(&c.y)?;
        let report = compare(&xs, &ys, c.a, c.b, c.k, c.tol)?;
        println!("{report}");
        let json = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Run(e.to_string()))?;
        self.write("compare.json", &json)
    }
}

/// Mean and sample standard deviation of each metric across seeds.
fn aggregate(reports: &[&MetricReport]) -> Value {
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in reports {
        let Value::Object(map) = serde_json::to_value(r).expect("report serializes") else {
            unreachable!("report is an object")
        };
        for (k, v) in map {
            if let Some(x) = v.as_f64() {
                columns.entry(k).or_default().push(x);
            }
        }
    }
    let stats: serde_json::Map<String, Value> = columns
        .into_iter()
        .map(|(k, xs)| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let std = if xs.len() > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            (
                k,
                serde_json::json!({"mean": mean, "std": std, "n": xs.len()}),
            )
        })
        .collect();
    Value::Object(stats)
}
