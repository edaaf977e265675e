//! AUC metric, stratified cross-validation, grid search, and the 4x5-fold
//! experiment protocol with CSV reporting.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{shuffled_stream, Dataset, LabeledInstance};
use crate::kernel::{EvictionRule, Kernel, KernelConfig, KernelModel};
use crate::linalg::Vector;
use crate::linear::{BaselineKind, BaselineModel, LinearConfig, LinearModel, StepSchedule};
use crate::surrogate::LossKind;
use crate::{Error, Result};

/// Empirical AUC with class counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucResult {
    pub value: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// Mann-Whitney AUC via rank-sum with midranks: strict wins count 1, score
/// ties count 1/2.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<AucResult> {
    auc_with_ties(scores, labels, false)
}

/// As [`auc`]; with `strict_ties` tied pairs earn no credit (the bare
/// indicator `f(x_i) - f(x_j) > 0`).
pub fn auc_with_ties(scores: &[f64], labels: &[f64], strict_ties: bool) -> Result<AucResult> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), got: scores.len() });
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput("auc scores"));
    }
    for s in scores {
        if !s.is_finite() {
            return Err(Error::NonFinite { context: "auc score" });
        }
    }
    let mut positives = 0usize;
    for y in labels {
        if *y == 1.0 {
            positives += 1;
        } else if *y != -1.0 {
            return Err(Error::InvalidLabel(*y));
        }
    }
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|a, b| scores[*a].total_cmp(&scores[*b]));
    let mut pos_rank_sum = 0.0;
    let mut tied_pairs = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut pos_in_group = 0usize;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1.0 {
                pos_in_group += 1;
            }
            j += 1;
        }
        // ranks are 1-based; everyone in the tie group gets the midrank
        let midrank = (i + 1 + j) as f64 / 2.0;
        pos_rank_sum += midrank * pos_in_group as f64;
        tied_pairs += (pos_in_group * (j - i - pos_in_group)) as f64;
        i = j;
    }
    let np = positives as f64;
    let nn = negatives as f64;
    let mut value = (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
    if strict_ties {
        value -= 0.5 * tied_pairs / (np * nn);
    }
    Ok(AucResult { value, positives, negatives })
}

/// Stratified k-fold split: returns `k` pairs of (train, test) index sets.
/// Per-class counts across test folds differ by at most one.
pub fn stratified_kfold(
    dataset: &Dataset,
    k: usize,
    rng_seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    if k < 2 {
        return Err(Error::InvalidConfig("k-fold split needs k >= 2".into()));
    }
    let mut pos: Vec<usize> = Vec::new();
    let mut neg: Vec<usize> = Vec::new();
    for (i, inst) in dataset.instances.iter().enumerate() {
        if inst.y > 0.0 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    for class in [&pos, &neg] {
        if class.len() < k {
            return Err(Error::ClassTooSmall { size: class.len(), folds: k });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, idx) in pos.iter().chain(&neg).enumerate() {
        tests[i % k].push(*idx);
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut train: Vec<usize> = (0..dataset.len()).collect();
            train.retain(|i| test.binary_search(i).is_err());
            (train, test)
        })
        .collect())
}

/// Learner selector for the experiment harness; surrogate-based linear and
/// kernel learners plus the two classification baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Linear, square-based surrogate, step 1/(lambda t).
    OaucS,
    /// Linear, hinge-based surrogate, step 1/(lambda t).
    OaucM,
    /// Linear, hinge-based surrogate, constant step.
    OaucMConst,
    /// Kernelized square-based surrogate.
    OkaucS,
    /// Kernelized hinge-based surrogate.
    OkaucM,
    Perceptron,
    Pa1,
}

impl Algorithm {
    pub fn is_kernel(self) -> bool {
        matches!(self, Algorithm::OkaucS | Algorithm::OkaucM)
    }

    fn needs(self) -> (bool, bool, bool, bool) {
        // (lambda, eta, width, c)
        match self {
            Algorithm::OaucS | Algorithm::OaucM => (true, false, false, false),
            Algorithm::OaucMConst => (true, true, false, false),
            Algorithm::OkaucS | Algorithm::OkaucM => (true, false, true, false),
            Algorithm::Perceptron => (false, false, false, false),
            Algorithm::Pa1 => (false, false, false, true),
        }
    }
}

/// One concrete hyperparameter assignment; fields an algorithm does not use
/// stay `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HyperParams {
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub width: Option<f64>,
    pub c: Option<f64>,
}

fn require(field: Option<f64>, name: &str) -> Result<f64> {
    field.ok_or_else(|| Error::InvalidConfig(format!("missing hyperparameter `{name}`")))
}

/// Power-of-two candidate values per hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub lambda: Vec<f64>,
    pub eta: Vec<f64>,
    pub width: Vec<f64>,
    pub c: Vec<f64>,
}

fn powers(step: i32) -> Vec<f64> {
    (-10..=10)
        .step_by(step as usize)
        .map(|e| (e as f64).exp2())
        .collect()
}

impl Grids {
    /// 2^e for every integer exponent in [-10, 10]: 21 values per parameter.
    pub fn full() -> Self {
        let g = powers(1);
        Self { lambda: g.clone(), eta: g.clone(), width: g.clone(), c: g }
    }

    /// Every other exponent (11 values per parameter); desk-scale runs.
    pub fn subsampled() -> Self {
        let g = powers(2);
        Self { lambda: g.clone(), eta: g.clone(), width: g.clone(), c: g }
    }

    pub fn single(params: HyperParams) -> Self {
        Self {
            lambda: params.lambda.into_iter().collect(),
            eta: params.eta.into_iter().collect(),
            width: params.width.into_iter().collect(),
            c: params.c.into_iter().collect(),
        }
    }

    /// Candidate assignments for `algorithm`, in tie-break order: lambda
    /// ascending, then eta, then width, then c.
    pub fn candidates(&self, algorithm: Algorithm) -> Result<Vec<HyperParams>> {
        let (need_l, need_e, need_w, need_c) = algorithm.needs();
        let pick = |need: bool, grid: &[f64], name: &str| -> Result<Vec<Option<f64>>> {
            if !need {
                return Ok(vec![None]);
            }
            if grid.is_empty() {
                return Err(Error::InvalidConfig(format!("empty grid for `{name}`")));
            }
            let mut sorted = grid.to_vec();
            sorted.sort_by(f64::total_cmp);
            Ok(sorted.into_iter().map(Some).collect())
        };
        let lambdas = pick(need_l, &self.lambda, "lambda")?;
        let etas = pick(need_e, &self.eta, "eta")?;
        let widths = pick(need_w, &self.width, "width")?;
        let cs = pick(need_c, &self.c, "c")?;
        let mut out = Vec::new();
        for l in &lambdas {
            for e in &etas {
                for w in &widths {
                    for c in &cs {
                        out.push(HyperParams { lambda: *l, eta: *e, width: *w, c: *c });
                    }
                }
            }
        }
        Ok(out)
    }
}

/// A trained model of any supported family, reduced to its scoring rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    Linear(LinearModel),
    Kernel(Box<KernelModel>),
    Baseline(BaselineModel),
}

impl Scorer {
    pub fn score(&self, x: &Vector) -> Result<f64> {
        match self {
            Scorer::Linear(m) => m.score(x),
            Scorer::Kernel(m) => m.f_eval(x),
            Scorer::Baseline(m) => m.score(x),
        }
    }
}

/// Knobs shared by grid search and the experiment protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Per-class support budget for the kernel learners.
    pub budget: usize,
    /// Kernel training streams longer than this are truncated (after the
    /// shuffle, so it is a uniform subsample).
    pub kernel_sample_cap: usize,
    pub eviction_rule: EvictionRule,
    pub strict_ties: bool,
    /// With `TrainOnly`, scaling parameters are fit on each training portion
    /// and applied to its test portion; with `Global` the dataset is assumed
    /// scaled up front.
    pub scale_scope: ScaleScope,
}

/// Where feature-scaling parameters are fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScaleScope {
    #[default]
    Global,
    TrainOnly,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            budget: 100,
            kernel_sample_cap: 10_000,
            eviction_rule: EvictionRule::ResidualOptimal,
            strict_ties: false,
            scale_scope: ScaleScope::Global,
        }
    }
}

/// Single shuffled pass over the training stream; returns the scorer.
pub fn train_model(
    algorithm: Algorithm,
    params: &HyperParams,
    stream: &[LabeledInstance],
    dim: usize,
    options: &TrainOptions,
) -> Result<Scorer> {
    match algorithm {
        Algorithm::OaucS | Algorithm::OaucM | Algorithm::OaucMConst => {
            let lambda = require(params.lambda, "lambda")?;
            let (loss_kind, schedule) = match algorithm {
                Algorithm::OaucS => {
                    (LossKind::SquareSecondOrder, StepSchedule::InverseLambdaT { lambda })
                }
                Algorithm::OaucM => {
                    (LossKind::HingeSecondOrder, StepSchedule::InverseLambdaT { lambda })
                }
                _ => (
                    LossKind::HingeSecondOrder,
                    StepSchedule::Constant { eta: require(params.eta, "eta")? },
                ),
            };
            let mut model = LinearModel::new(
                dim,
                LinearConfig { loss_kind, lambda, schedule, zero_history_updates: false },
            )?;
            for inst in stream {
                model.step(inst)?;
            }
            Ok(Scorer::Linear(model))
        }
        Algorithm::OkaucS | Algorithm::OkaucM => {
            let lambda = require(params.lambda, "lambda")?;
            let width = require(params.width, "width")?;
            let loss_kind = if algorithm == Algorithm::OkaucS {
                LossKind::SquareSecondOrder
            } else {
                LossKind::HingeSecondOrder
            };
            let mut model = KernelModel::new(KernelConfig {
                kernel: Kernel::Gaussian { width_sigma: width },
                loss_kind,
                lambda,
                schedule: StepSchedule::InverseLambdaT { lambda },
                pos_budget: options.budget,
                neg_budget: options.budget,
                eviction_rule: options.eviction_rule,
            })?;
            for inst in stream.iter().take(options.kernel_sample_cap) {
                model.kernel_step(inst)?;
            }
            Ok(Scorer::Kernel(Box::new(model)))
        }
        Algorithm::Perceptron | Algorithm::Pa1 => {
            let kind = if algorithm == Algorithm::Perceptron {
                BaselineKind::Perceptron
            } else {
                BaselineKind::Pa1 { c: require(params.c, "c")? }
            };
            let mut model = BaselineModel::new(dim, kind)?;
            for inst in stream {
                model.step(inst)?;
            }
            Ok(Scorer::Baseline(model))
        }
    }
}

fn subset(dataset: &Dataset, indices: &[usize]) -> Result<Dataset> {
    Dataset::from_instances(indices.iter().map(|i| dataset.instances[*i].clone()).collect())
}

fn run_candidate(
    algorithm: Algorithm,
    params: &HyperParams,
    train: &Dataset,
    test: &Dataset,
    stream_seed: u64,
    options: &TrainOptions,
) -> Result<f64> {
    let scaled;
    let (train, test) = if options.scale_scope == ScaleScope::TrainOnly {
        let (train_s, params) = crate::data::scale_features(train)?;
        let test_s = crate::data::apply_scaling(test, &params)?;
        scaled = (train_s, test_s);
        (&scaled.0, &scaled.1)
    } else {
        (train, test)
    };
    let stream = shuffled_stream(train, stream_seed);
    let model = train_model(algorithm, params, &stream, train.dim, options)?;
    let scores: Vec<f64> = test
        .instances
        .iter()
        .map(|i| model.score(&i.x))
        .collect::<Result<_>>()?;
    let labels: Vec<f64> = test.instances.iter().map(|i| i.y).collect();
    Ok(auc_with_ties(&scores, &labels, options.strict_ties)?.value)
}

/// Joint grid search by k-fold cross-validation on `train_set`. Folds whose
/// split degenerates to a single class are skipped; a candidate with no
/// usable fold is dropped. Ties in mean AUC resolve to the earlier
/// candidate, i.e. smaller lambda, then eta, then width, then grid order.
pub fn grid_search_cv(
    train_set: &Dataset,
    algorithm: Algorithm,
    grids: &Grids,
    k: usize,
    rng_seed: u64,
) -> Result<HyperParams> {
    grid_search_cv_with(train_set, algorithm, grids, k, rng_seed, &TrainOptions::default())
}

/// [`grid_search_cv`] with explicit training options.
pub fn grid_search_cv_with(
    train_set: &Dataset,
    algorithm: Algorithm,
    grids: &Grids,
    k: usize,
    rng_seed: u64,
    options: &TrainOptions,
) -> Result<HyperParams> {
    let candidates = grids.candidates(algorithm)?;
    let folds = stratified_kfold(train_set, k, rng_seed)?;
    let means: Vec<Option<f64>> = candidates
        .par_iter()
        .map(|params| {
            let mut aucs = Vec::new();
            for (fi, (train_idx, test_idx)) in folds.iter().enumerate() {
                let (train, test) = match (subset(train_set, train_idx), subset(train_set, test_idx))
                {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => continue, // degenerate fold
                };
                let stream_seed = rng_seed ^ (fi as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                match run_candidate(algorithm, params, &train, &test, stream_seed, options) {
                    Ok(a) => aucs.push(a),
                    Err(_) => continue,
                }
            }
            if aucs.is_empty() {
                None
            } else {
                Some(aucs.iter().sum::<f64>() / aucs.len() as f64)
            }
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, mean) in means.iter().enumerate() {
        if let Some(m) = mean {
            if best.map_or(true, |(_, bm)| *m > bm) {
                best = Some((i, *m));
            }
        }
    }
    match best {
        Some((i, _)) => Ok(candidates[i]),
        None => Err(Error::InvalidConfig("every cross-validation fold failed".into())),
    }
}

/// One of the 20 protocol runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed_index: usize,
    pub seed: u64,
    pub fold: usize,
    pub params: HyperParams,
    pub auc: f64,
    pub seconds: f64,
}

/// Aggregated protocol result: 20 runs, mean and sample stddev.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub algorithm: Algorithm,
    pub runs: Vec<RunRecord>,
    pub mean: f64,
    pub stddev: f64,
}

impl ExperimentReport {
    fn aggregate(algorithm: Algorithm, runs: Vec<RunRecord>) -> Self {
        let n = runs.len() as f64;
        let mean = runs.iter().map(|r| r.auc).sum::<f64>() / n;
        let var = if runs.len() > 1 {
            runs.iter().map(|r| (r.auc - mean) * (r.auc - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { algorithm, runs, mean, stddev: var.sqrt() }
    }

    /// One row per run plus a trailing summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed_index,seed,fold,lambda,eta,width,c,auc,seconds\n");
        let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.seed_index,
                r.seed,
                r.fold,
                cell(r.params.lambda),
                cell(r.params.eta),
                cell(r.params.width),
                cell(r.params.c),
                r.auc,
                r.seconds
            );
        }
        let _ = writeln!(out, "summary,,,,,,,mean={} stddev={},", self.mean, self.stddev);
        out
    }
}

/// The 4-seed x 5-fold protocol: for each derived seed, split into 5
/// stratified folds; per fold, grid-search on the training portion, train on
/// it with the chosen hyperparameters over a single shuffled pass, and score
/// the held-out fold. Deterministic in `(dataset, config, master_seed)`.
pub fn run_experiment(
    dataset: &Dataset,
    algorithm: Algorithm,
    grids: &Grids,
    master_seed: u64,
    options: &TrainOptions,
) -> Result<ExperimentReport> {
    const PARTITIONS: usize = 4;
    const FOLDS: usize = 5;
    let tasks: Vec<(usize, u64, usize)> = (0..PARTITIONS)
        .flat_map(|s| {
            let seed = master_seed.wrapping_add((s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            (0..FOLDS).map(move |f| (s, seed, f))
        })
        .collect();
    let runs: Vec<Result<RunRecord>> = tasks
        .par_iter()
        .map(|&(seed_index, seed, fold)| {
            let started = Instant::now();
            let folds = stratified_kfold(dataset, FOLDS, seed)?;
            let (train_idx, test_idx) = &folds[fold];
            let train = subset(dataset, train_idx)?;
            let test = subset(dataset, test_idx)?;
            let inner_seed = seed ^ (fold as u64 + 1);
            let params = grid_search_cv_with(&train, algorithm, grids, FOLDS, inner_seed, options)?;
            let auc_value =
                run_candidate(algorithm, &params, &train, &test, inner_seed, options)?;
            Ok(RunRecord {
                seed_index,
                seed,
                fold,
                params,
                auc: auc_value,
                seconds: started.elapsed().as_secs_f64(),
            })
        })
        .collect();
    let runs: Vec<RunRecord> = runs.into_iter().collect::<Result<_>>()?;
    Ok(ExperimentReport::aggregate(algorithm, runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gaussian_pair_stream;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng as _};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn auc_fixed_cases() {
        let r = auc(&[0.9, 0.8, 0.2, 0.1], &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!((r.positives, r.negatives), (2, 2));
        assert_eq!(auc(&[0.1, 0.9], &[1.0, -1.0]).unwrap().value, 0.0);
        assert_eq!(auc(&[0.5, 0.5], &[1.0, -1.0]).unwrap().value, 0.5);
        // strict indicator drops the tied pair entirely
        assert_eq!(auc_with_ties(&[0.5, 0.5], &[1.0, -1.0], true).unwrap().value, 0.0);
        assert!(auc(&[0.1, 0.2], &[1.0, 1.0]).is_err());
        assert!(auc(&[0.1], &[2.0]).is_err());
        assert!(auc(&[], &[]).is_err());
    }

    fn pair_loop_auc(scores: &[f64], labels: &[f64], strict: bool) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, yi) in labels.iter().enumerate() {
            if *yi != 1.0 {
                continue;
            }
            for (j, yj) in labels.iter().enumerate() {
                if *yj != -1.0 {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] && !strict {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_matches_pair_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let n = 200;
            // quantized scores force plenty of ties
            let scores: Vec<f64> =
                (0..n).map(|_| (rng.gen_range(0.0f64..1.0) * 10.0).round() / 10.0).collect();
            let labels: Vec<f64> =
                (0..n).map(|_| if rng.gen_bool(0.3) { 1.0 } else { -1.0 }).collect();
            if !labels.contains(&1.0) || !labels.contains(&-1.0) {
                continue;
            }
            for strict in [false, true] {
                let fast = auc_with_ties(&scores, &labels, strict).unwrap().value;
                let slow = pair_loop_auc(&scores, &labels, strict);
                assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
            }
        }
    }

    proptest! {
        #[test]
        fn auc_monotone_transform_invariant(
            raw in proptest::collection::vec((0.0f64..1.0, prop::bool::ANY), 4..60)
        ) {
            let scores: Vec<f64> = raw.iter().map(|(s, _)| *s).collect();
            let labels: Vec<f64> =
                raw.iter().map(|(_, p)| if *p { 1.0 } else { -1.0 }).collect();
            prop_assume!(labels.contains(&1.0) && labels.contains(&-1.0));
            let base = auc(&scores, &labels).unwrap().value;
            let mapped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 1.0).collect();
            prop_assert!((auc(&mapped, &labels).unwrap().value - base).abs() <= 1e-12);
            // reflection identity holds exactly with midranks
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            prop_assert!((auc(&neg, &labels).unwrap().value - (1.0 - base)).abs() <= 1e-12);
        }
    }

    fn tiny_dataset(n_pos: usize, n_neg: usize, seed: u64) -> Dataset {
        let mut stream = gaussian_pair_stream(4 * (n_pos + n_neg), 3, 0.6, 0.3, seed);
        let mut pos: Vec<LabeledInstance> = Vec::new();
        let mut neg: Vec<LabeledInstance> = Vec::new();
        for inst in stream.drain(..) {
            if inst.y > 0.0 && pos.len() < n_pos {
                pos.push(inst);
            } else if inst.y < 0.0 && neg.len() < n_neg {
                neg.push(inst);
            }
        }
        assert_eq!((pos.len(), neg.len()), (n_pos, n_neg));
        pos.extend(neg);
        Dataset::from_instances(pos).unwrap()
    }

    #[test]
    fn kfold_exact_divisibility_and_partition() {
        let d = tiny_dataset(5, 5, 1);
        let folds = stratified_kfold(&d, 5, 9).unwrap();
        assert_eq!(folds.len(), 5);
        let mut seen = vec![false; d.len()];
        for (train, test) in &folds {
            assert_eq!(test.len(), 2);
            let pos = test.iter().filter(|i| d.instances[**i].y > 0.0).count();
            assert_eq!(pos, 1);
            assert_eq!(train.len() + test.len(), d.len());
            for i in test {
                assert!(!seen[*i], "index {i} in two test folds");
                seen[*i] = true;
            }
            for i in train {
                assert!(!test.contains(i));
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn kfold_determinism_and_errors() {
        let d = tiny_dataset(12, 20, 2);
        assert_eq!(stratified_kfold(&d, 5, 7).unwrap(), stratified_kfold(&d, 5, 7).unwrap());
        assert_ne!(stratified_kfold(&d, 5, 7).unwrap(), stratified_kfold(&d, 5, 8).unwrap());
        let small = tiny_dataset(3, 20, 3);
        assert!(matches!(
            stratified_kfold(&small, 5, 1),
            Err(Error::ClassTooSmall { size: 3, folds: 5 })
        ));
    }

    #[test]
    fn default_grids_have_21_values() {
        let g = Grids::full();
        for grid in [&g.lambda, &g.eta, &g.width, &g.c] {
            assert_eq!(grid.len(), 21);
            assert_eq!(grid[0], (-10.0f64).exp2());
            assert_eq!(grid[20], (10.0f64).exp2());
        }
        assert_eq!(Grids::subsampled().lambda.len(), 11);
    }

    #[test]
    fn grid_search_single_candidate() {
        let d = tiny_dataset(15, 15, 4);
        let grids = Grids::single(HyperParams { lambda: Some(0.25), ..Default::default() });
        let best = grid_search_cv(&d, Algorithm::OaucM, &grids, 3, 5).unwrap();
        assert_eq!(best.lambda, Some(0.25));
        let empty = Grids { lambda: vec![], ..grids };
        assert!(grid_search_cv(&d, Algorithm::OaucM, &empty, 3, 5).is_err());
    }

    #[test]
    fn grid_search_prefers_planted_step_size() {
        // with a constant step, eta * lambda > 1 makes the decay factor
        // negative, so the weight direction oscillates and ranks poorly;
        // cross-validation must reject it in favor of the stable step
        let d = Dataset::from_instances(gaussian_pair_stream(400, 6, 0.4, 0.3, 11)).unwrap();
        let grids = Grids {
            lambda: vec![1.0],
            eta: vec![0.25, 1.875],
            width: vec![],
            c: vec![],
        };
        let best = grid_search_cv(&d, Algorithm::OaucMConst, &grids, 5, 13).unwrap();
        assert_eq!(best.eta, Some(0.25), "chose {:?}", best.eta);
    }

    #[test]
    fn experiment_report_shape_and_determinism() {
        let d = Dataset::from_instances(gaussian_pair_stream(150, 3, 0.6, 0.3, 21)).unwrap();
        let grids = Grids::single(HyperParams { lambda: Some(1.0), ..Default::default() });
        let options = TrainOptions::default();
        let a = run_experiment(&d, Algorithm::OaucM, &grids, 99, &options).unwrap();
        assert_eq!(a.runs.len(), 20);
        let mean = a.runs.iter().map(|r| r.auc).sum::<f64>() / 20.0;
        assert!((a.mean - mean).abs() <= 1e-12);
        let var = a.runs.iter().map(|r| (r.auc - mean) * (r.auc - mean)).sum::<f64>() / 19.0;
        assert!((a.stddev - var.sqrt()).abs() <= 1e-12);
        assert!(a.mean > 0.8, "separable stream should rank well, got {}", a.mean);

        let b = run_experiment(&d, Algorithm::OaucM, &grids, 99, &options).unwrap();
        // independent of rayon scheduling, up to the wall-clock field
        let key = |rs: &[RunRecord]| -> Vec<_> {
            rs.iter().map(|r| (r.seed_index, r.seed, r.fold, r.params, r.auc)).collect()
        };
        assert_eq!(key(&a.runs), key(&b.runs));

        let csv = a.to_csv();
        assert_eq!(csv.lines().count(), 22); // header + 20 runs + summary
        assert!(csv.starts_with("seed_index,seed,fold,lambda"));
    }

    #[test]
    fn baselines_run_through_harness() {
        let d = Dataset::from_instances(gaussian_pair_stream(120, 3, 0.7, 0.2, 31)).unwrap();
        let options = TrainOptions::default();
        for (algorithm, grids) in [
            (Algorithm::Perceptron, Grids::single(HyperParams::default())),
            (
                Algorithm::Pa1,
                Grids::single(HyperParams { c: Some(1.0), ..Default::default() }),
            ),
        ] {
            let report = run_experiment(&d, algorithm, &grids, 5, &options).unwrap();
            assert_eq!(report.runs.len(), 20);
            assert!(report.mean > 0.7);
        }
    }

    #[test]
    fn missing_hyperparameter_is_named() {
        let stream = gaussian_pair_stream(30, 2, 0.5, 0.2, 1);
        let err = train_model(
            Algorithm::OaucM,
            &HyperParams::default(),
            &stream,
            2,
            &TrainOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("lambda"), "{err}");
    }
}
