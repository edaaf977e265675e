//! The four subcommand implementations.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};

use oauc_core::data::{shuffled_stream, LabeledInstance};
use oauc_core::eval::{
    auc_with_ties, run_experiment, stratified_kfold, train_model, Algorithm, Scorer,
};
use oauc_core::kernel::{kernel_regret_curve, Kernel, KernelConfig};
use oauc_core::linear::{regret_curve, LinearConfig, RegretPoint, StepSchedule};
use oauc_core::surrogate::LossKind;
use oauc_core::verify;

use crate::config::RunConfig;
use crate::output::write_atomic;

/// Trains one model over a single shuffled pass of a stratified 80/20
/// train/test split, writes a JSON snapshot, and prints one metrics line.
pub fn cmd_train(config: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let dataset = config.load_dataset()?;
    let folds = stratified_kfold(&dataset, 5, config.seed)?;
    let (train_idx, test_idx) = &folds[0];
    let pick = |idx: &[usize]| -> anyhow::Result<oauc_core::data::Dataset> {
        Ok(oauc_core::data::Dataset::from_instances(
            idx.iter().map(|i| dataset.instances[*i].clone()).collect(),
        )?)
    };
    let (train, test) = (pick(train_idx)?, pick(test_idx)?);
    let options = config.train_options();
    let stream = shuffled_stream(&train, config.seed);
    let model = train_model(config.algorithm, &config.params.hyper(), &stream, train.dim, &options)?;

    let score_set = |set: &oauc_core::data::Dataset| -> anyhow::Result<f64> {
        let scores: Vec<f64> =
            set.instances.iter().map(|i| model.score(&i.x)).collect::<Result<_, _>>()?;
        let labels: Vec<f64> = set.instances.iter().map(|i| i.y).collect();
        Ok(auc_with_ties(&scores, &labels, options.strict_ties)?.value)
    };
    let train_auc = score_set(&train)?;
    let test_auc = score_set(&test)?;

    let snapshot = serde_json::json!({
        "algorithm": config.algorithm,
        "seed": config.seed,
        "params": config.params,
        "model": Snapshot(&model),
    });
    write_atomic(out, &serde_json::to_string_pretty(&snapshot)?)?;
    println!(
        "algorithm={:?} seed={} train_auc={:.6} test_auc={:.6} snapshot={}",
        config.algorithm,
        config.seed,
        train_auc,
        test_auc,
        out.display()
    );
    Ok(())
}

// serde passthrough so the snapshot embeds the model without cloning it
struct Snapshot<'a>(&'a Scorer);
impl serde::Serialize for Snapshot<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Runs the 4x5-fold protocol and writes the CSV report atomically.
pub fn cmd_experiment(config: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let dataset = config.load_dataset()?;
    let grids = config.grids.build(&config.params);
    let options = config.train_options();
    let report = run_experiment(&dataset, config.algorithm, &grids, config.seed, &options)
        .context("experiment protocol failed")?;
    write_atomic(out, &report.to_csv())?;
    println!(
        "algorithm={:?} runs={} mean_auc={:.4} stddev={:.4} report={}",
        config.algorithm,
        report.runs.len(),
        report.mean,
        report.stddev,
        out.display()
    );
    Ok(())
}

/// Emits per-round cumulative regret against the best-so-far hindsight
/// comparator, with the applicable logarithmic bound where one exists.
pub fn cmd_regret(config: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let stream: Vec<LabeledInstance> = match (&config.stream, &config.dataset) {
        (Some(s), _) => s.generate(config.seed),
        (None, Some(_)) => shuffled_stream(&config.load_dataset()?, config.seed),
        (None, None) => bail!("stream or dataset: required for the regret command"),
    };
    let lambda = config
        .params
        .lambda
        .ok_or_else(|| anyhow::anyhow!("params.lambda: required for the regret command"))?;

    let (curve, bound): (Vec<RegretPoint>, Option<Box<dyn Fn(usize) -> f64>>) =
        match config.algorithm {
            Algorithm::OaucM | Algorithm::OaucS | Algorithm::OaucMConst => {
                let (loss_kind, schedule) = match config.algorithm {
                    Algorithm::OaucS => {
                        (LossKind::SquareSecondOrder, StepSchedule::InverseLambdaT { lambda })
                    }
                    Algorithm::OaucM => {
                        (LossKind::HingeSecondOrder, StepSchedule::InverseLambdaT { lambda })
                    }
                    _ => (
                        LossKind::HingeSecondOrder,
                        StepSchedule::Constant {
                            eta: config.params.eta.ok_or_else(|| {
                                anyhow::anyhow!("params.eta: required for oauc-m-const")
                            })?,
                        },
                    ),
                };
                let linear = LinearConfig {
                    loss_kind,
                    lambda,
                    schedule,
                    zero_history_updates: config.flags.zero_history_updates,
                };
                let curve = regret_curve(&stream, &linear)?;
                // the logarithmic bound is only claimed for the hinge-based
                // surrogate on the 1/(lambda t) schedule
                let bound: Option<Box<dyn Fn(usize) -> f64>> =
                    if config.algorithm == Algorithm::OaucM {
                        Some(Box::new(move |t| 18.0 * (1.0 + (t as f64).ln()) / lambda))
                    } else {
                        None
                    };
                (curve, bound)
            }
            Algorithm::OkaucM | Algorithm::OkaucS => {
                let width = config
                    .params
                    .width
                    .ok_or_else(|| anyhow::anyhow!("params.width: required for kernel regret"))?;
                let budget = config.params.budget.unwrap_or(usize::MAX);
                let pos = stream.iter().filter(|i| i.y > 0.0).count();
                let full_buffer = budget >= pos.max(1) && budget >= (stream.len() - pos).max(1);
                let kernel = KernelConfig {
                    kernel: Kernel::Gaussian { width_sigma: width },
                    loss_kind: if config.algorithm == Algorithm::OkaucM {
                        LossKind::HingeSecondOrder
                    } else {
                        LossKind::SquareSecondOrder
                    },
                    lambda,
                    schedule: StepSchedule::InverseLambdaT { lambda },
                    pos_budget: budget.min(stream.len().max(1)),
                    neg_budget: budget.min(stream.len().max(1)),
                    eviction_rule: config.flags.eviction_rule,
                };
                let curve = kernel_regret_curve(&stream, &kernel)?;
                let bound: Option<Box<dyn Fn(usize) -> f64>> = if config.algorithm
                    == Algorithm::OkaucM
                    && full_buffer
                {
                    let coeff = (2.0 * 2.0_f64.sqrt() + 1.0).powi(2) / (2.0 * lambda);
                    Some(Box::new(move |t| coeff * (1.0 + (t as f64).ln())))
                } else {
                    if config.algorithm == Algorithm::OkaucM {
                        eprintln!(
                            "warning: the logarithmic regret bound assumes an unbounded \
                             support buffer; bound column omitted for budget {budget}"
                        );
                    }
                    None
                };
                (curve, bound)
            }
            other => bail!("algorithm {:?} has no regret analysis", other),
        };

    let mut csv = String::from(if bound.is_some() {
        "t,cumulative_regret,bound_value\n"
    } else {
        "t,cumulative_regret\n"
    });
    for point in &curve {
        match &bound {
            Some(b) => {
                let _ =
                    writeln!(csv, "{},{},{}", point.round, point.regret(), b(point.round));
            }
            None => {
                let _ = writeln!(csv, "{},{}", point.round, point.regret());
            }
        }
    }
    write_atomic(out, &csv)?;
    println!("algorithm={:?} rounds={} trace={}", config.algorithm, curve.len(), out.display());
    Ok(())
}

/// Runs the oracle suites; returns an error (nonzero exit) if any fails.
pub fn cmd_verify() -> anyhow::Result<()> {
    let suites = verify::run_all();
    let mut failed = false;
    for suite in &suites {
        println!("{}", suite.summary_line());
        for failure in &suite.failures {
            println!("  {failure}");
            failed = true;
        }
    }
    if failed {
        bail!("one or more oracle suites failed");
    }
    Ok(())
}
