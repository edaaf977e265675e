//! Budgeted online kernel AUC learners.
//!
//! The classifier is `f(x) = sum_i alpha_i k(x_i, x)` over two bounded
//! support buffers (one per class). Each round the incoming instance is
//! compared against the opposite-class buffer: the mean and variance of `f`
//! over that buffer feed the second-order surrogate, OGD updates the
//! coefficients, and the instance is inserted into its own buffer, evicting
//! the oldest member (FIFO) with a weight transfer when the budget is full.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::LabeledInstance;
use crate::gd;
use crate::linalg::Vector;
use crate::linear::{RegretPoint, RegretTrace, StepSchedule};
use crate::surrogate::{psi_m, psi_s, LossKind, EPS_SIGMA};
use crate::{Error, Result};

/// Kernel functions; Gaussian is `exp(-||x - x'||^2 / sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Gaussian { width_sigma: f64 },
    Linear,
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Gaussian { width_sigma } if *width_sigma <= 0.0 => {
                Err(Error::InvalidConfig("Gaussian kernel width must be > 0".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, a: &Vector, b: &Vector) -> Result<f64> {
        match self {
            Kernel::Gaussian { width_sigma } => {
                let d = a.sub(b)?;
                let n2: f64 = d.as_slice().iter().map(|v| v * v).sum();
                Ok((-n2 / (width_sigma * width_sigma)).exp())
            }
            Kernel::Linear => crate::linalg::dot(a, b),
        }
    }
}

/// Which target the transferred weight of an evicted support vector goes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EvictionRule {
    /// Minimizes the RKHS residual of the transfer, i.e. maximizes
    /// `k(x_r, x_j)^2 / k(x_r, x_r)` over candidates. Default.
    #[default]
    ResidualOptimal,
    /// Evicts by `r = argmin_r |k(x_r, x_j)|`, transferring to the least
    /// similar remaining support vector.
    LeastSimilar,
}

/// Fixed-budget FIFO store of support vectors with their arrival indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportBuffer {
    budget: usize,
    entries: Vec<(usize, Vector)>,
}

impl SupportBuffer {
    pub fn new(budget: usize) -> Result<Self> {
        if budget == 0 {
            return Err(Error::ZeroBudget);
        }
        Ok(Self { budget, entries: Vec::new() })
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, Vector)] {
        &self.entries
    }
}

/// Scalars of one kernel surrogate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelLossEval {
    /// Mean of `f` over the comparison buffer.
    pub mu_t: f64,
    /// Population variance of `f` over the comparison buffer.
    pub sigma2_t: f64,
    /// `1 - y (f(x_t) - mu_t)`.
    pub b_t: f64,
    /// `b_t^2 + sigma2_t`.
    pub a_t: f64,
    /// `(b_t + sqrt(a_t)) / 2`; the hinge-based surrogate value.
    pub psi_t: f64,
}

/// Configuration for a [`KernelModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub kernel: Kernel,
    pub loss_kind: LossKind,
    pub lambda: f64,
    pub schedule: StepSchedule,
    pub pos_budget: usize,
    pub neg_budget: usize,
    #[serde(default)]
    pub eviction_rule: EvictionRule,
}

/// Streaming kernel learner state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub config: KernelConfig,
    pub pos_buf: SupportBuffer,
    pub neg_buf: SupportBuffer,
    /// Coefficient per buffered arrival index; keys mirror the buffers.
    pub alpha: BTreeMap<usize, f64>,
    /// Stream round counter; also the next arrival index.
    pub t: usize,
    pub grad_rounds: usize,
}

impl KernelModel {
    pub fn new(config: KernelConfig) -> Result<Self> {
        config.kernel.validate()?;
        config.schedule.validate()?;
        if config.lambda <= 0.0 {
            return Err(Error::InvalidConfig("kernel learner needs lambda > 0".into()));
        }
        Ok(Self {
            pos_buf: SupportBuffer::new(config.pos_budget)?,
            neg_buf: SupportBuffer::new(config.neg_budget)?,
            config,
            alpha: BTreeMap::new(),
            t: 1,
            grad_rounds: 0,
        })
    }

    /// `f(x) = sum alpha_i k(x_i, x)` over both buffers.
    pub fn f_eval(&self, x: &Vector) -> Result<f64> {
        let mut acc = 0.0;
        for (idx, xi) in self.pos_buf.entries().iter().chain(self.neg_buf.entries()) {
            acc += self.alpha[idx] * self.config.kernel.eval(xi, x)?;
        }
        Ok(acc)
    }

    /// `||f||_H^2 = alpha^T K alpha` over the buffered points.
    pub fn rkhs_norm2(&self) -> Result<f64> {
        let supports: Vec<&(usize, Vector)> =
            self.pos_buf.entries().iter().chain(self.neg_buf.entries()).collect();
        let mut acc = 0.0;
        for (i, (idx_i, x_i)) in supports.iter().enumerate() {
            let a_i = self.alpha[idx_i];
            for (idx_j, x_j) in supports.iter().skip(i + 1).map(|e| (&e.0, &e.1)) {
                acc += 2.0 * a_i * self.alpha[idx_j] * self.config.kernel.eval(x_i, x_j)?;
            }
            acc += a_i * a_i * self.config.kernel.eval(x_i, x_i)?;
        }
        Ok(acc.max(0.0))
    }

    /// OGD step on the coefficients against the comparison buffer. Scales
    /// every existing weight by `(1 - lambda eta)`, applies the
    /// comparison-buffer corrections, and returns the incoming instance's
    /// weight (not yet inserted) with the loss scalars.
    ///
    /// Errors with [`Error::NoHistory`] when the comparison buffer is empty;
    /// the caller then inserts the instance with weight zero.
    pub fn update_classifier(
        &mut self,
        instance: &LabeledInstance,
    ) -> Result<(f64, KernelLossEval)> {
        let y = instance.y;
        let comparison = if y > 0.0 { &self.neg_buf } else { &self.pos_buf };
        if comparison.is_empty() {
            return Err(Error::NoHistory);
        }
        let n = comparison.len() as f64;
        let f_t = self.f_eval(&instance.x)?;
        let comp: Vec<(usize, f64)> = comparison
            .entries()
            .iter()
            .map(|(idx, xi)| Ok((*idx, self.f_eval(xi)?)))
            .collect::<Result<_>>()?;
        let mu_t = comp.iter().map(|(_, fi)| fi).sum::<f64>() / n;
        let sigma2_t = comp.iter().map(|(_, fi)| (fi - mu_t) * (fi - mu_t)).sum::<f64>() / n;
        let b_t = 1.0 - y * (f_t - mu_t);
        let a_t = b_t * b_t + sigma2_t;
        let psi_t = 0.5 * (b_t + a_t.sqrt());
        let eval = KernelLossEval { mu_t, sigma2_t, b_t, a_t, psi_t };

        self.grad_rounds += 1;
        let eta = self.config.schedule.eta(self.grad_rounds);
        let lambda = self.config.lambda;
        let decay = 1.0 - lambda * eta;
        for a in self.alpha.values_mut() {
            *a *= decay;
        }

        let incoming = match self.config.loss_kind {
            LossKind::HingeSecondOrder => {
                // psi_t / sqrt(a_t) -> 1/2 and (f_i - mu)/sqrt(a_t) -> 0 in
                // the degenerate limit (a_t = 0 forces b_t = 0, sigma_t = 0)
                let (ratio, spread_scale) = if a_t > EPS_SIGMA {
                    (psi_t / a_t.sqrt(), 1.0 / a_t.sqrt())
                } else {
                    (0.5, 0.0)
                };
                for (idx, f_i) in &comp {
                    let delta = (eta / n) * (y * ratio + 0.5 * spread_scale * (f_i - mu_t));
                    *self.alpha.get_mut(idx).expect("buffered alpha") -= delta;
                }
                eta * y * ratio
            }
            LossKind::SquareSecondOrder => {
                for (idx, f_i) in &comp {
                    let delta = (eta / n) * (y * b_t + (f_i - mu_t));
                    *self.alpha.get_mut(idx).expect("buffered alpha") -= delta;
                }
                eta * y * b_t
            }
        };
        Ok((incoming, eval))
    }

    /// Consumes one instance; returns the regularized round loss
    /// `lambda/2 ||f||_H^2 + psi(...)` or `None` on a skip round.
    pub fn kernel_step(&mut self, instance: &LabeledInstance) -> Result<Option<f64>> {
        if instance.y != 1.0 && instance.y != -1.0 {
            return Err(Error::InvalidLabel(instance.y));
        }
        let result = match self.update_classifier(instance) {
            Ok((incoming_alpha, eval)) => {
                let norm2 = {
                    // loss is charged at f_t, before this round's update; the
                    // alphas were already rescaled, so undo the decay factor
                    let eta = self.config.schedule.eta(self.grad_rounds);
                    let decay = 1.0 - self.config.lambda * eta;
                    // recompute from pre-update weights only when decay != 0
                    if decay != 0.0 {
                        self.rkhs_norm2()? / (decay * decay)
                    } else {
                        0.0
                    }
                };
                let psi = match self.config.loss_kind {
                    LossKind::HingeSecondOrder => eval.psi_t,
                    LossKind::SquareSecondOrder => eval.a_t,
                };
                let loss = 0.5 * self.config.lambda * norm2 + psi;
                (Some(loss), incoming_alpha)
            }
            Err(Error::NoHistory) => (None, 0.0),
            Err(e) => return Err(e),
        };
        let (loss, incoming_alpha) = result;
        let index = self.t;
        let own = if instance.y > 0.0 { &mut self.pos_buf } else { &mut self.neg_buf };
        update_buffer(
            own,
            &mut self.alpha,
            (index, instance.x.clone(), incoming_alpha),
            &self.config.kernel,
            self.config.eviction_rule,
        )?;
        self.t += 1;
        Ok(loss)
    }
}

/// Inserts `incoming` into the buffer, registering its weight. When the
/// buffer is full the oldest member `j` is evicted first and its weight is
/// transferred to one remaining candidate `r` as
/// `alpha_r += alpha_j k(x_r, x_j) / k(x_r, x_r)`; the incoming instance is
/// itself a candidate.
pub fn update_buffer(
    buf: &mut SupportBuffer,
    alpha: &mut BTreeMap<usize, f64>,
    incoming: (usize, Vector, f64),
    kernel: &Kernel,
    rule: EvictionRule,
) -> Result<()> {
    let (index, x, weight) = incoming;
    if alpha.contains_key(&index) {
        return Err(Error::InvalidConfig(format!("arrival index {index} is not fresh")));
    }
    if buf.len() < buf.budget {
        buf.entries.push((index, x));
        alpha.insert(index, weight);
        return Ok(());
    }
    // FIFO eviction: entries are kept in arrival order
    let (evicted_index, evicted_x) = buf.entries.remove(0);
    buf.entries.push((index, x));
    alpha.insert(index, weight);
    let evicted_alpha = alpha.remove(&evicted_index).expect("buffered alpha");

    let mut best: Option<(usize, f64, f64)> = None; // (target index, score, k_rj / k_rr)
    for (cand_index, cand_x) in buf.entries.iter() {
        let k_rj = kernel.eval(cand_x, &evicted_x)?;
        let k_rr = kernel.eval(cand_x, cand_x)?;
        if k_rr <= 0.0 {
            continue;
        }
        let score = match rule {
            EvictionRule::ResidualOptimal => k_rj * k_rj / k_rr,
            EvictionRule::LeastSimilar => -k_rj.abs(),
        };
        if best.map_or(true, |(_, s, _)| score > s) {
            best = Some((*cand_index, score, k_rj / k_rr));
        }
    }
    if let Some((target, _, ratio)) = best {
        *alpha.get_mut(&target).expect("buffered alpha") += evicted_alpha * ratio;
    }
    Ok(())
}

/// Shared machinery for the infinite-buffer hindsight solves: the Gram
/// matrix of the whole stream plus, per gradient round, the incoming index
/// and the comparison index set.
struct HindsightProblem {
    gram: Vec<Vec<f64>>,
    rounds: Vec<(usize, f64, Vec<usize>)>,
    lambda: f64,
    loss_kind: LossKind,
    n: usize,
}

impl HindsightProblem {
    fn build(stream: &[LabeledInstance], config: &KernelConfig) -> Result<Self> {
        let n = stream.len();
        let mut gram = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let k = config.kernel.eval(&stream[i].x, &stream[j].x)?;
                gram[i][j] = k;
                gram[j][i] = k;
            }
        }
        let mut rounds = Vec::new();
        let mut pos: Vec<usize> = Vec::new();
        let mut neg: Vec<usize> = Vec::new();
        for (t, inst) in stream.iter().enumerate() {
            let comparison = if inst.y > 0.0 { &neg } else { &pos };
            if !comparison.is_empty() {
                rounds.push((t, inst.y, comparison.clone()));
            }
            if inst.y > 0.0 {
                pos.push(t);
            } else {
                neg.push(t);
            }
        }
        Ok(Self { gram, rounds, lambda: config.lambda, loss_kind: config.loss_kind, n })
    }

    /// Objective over the first `round_count` gradient rounds.
    /// Returns `(value, grad_beta, hilbert_grad_norm2)`: the gradient in
    /// coefficient space is `K c` for the function-space gradient
    /// coefficients `c`, and its squared RKHS norm `c' K c` feeds the
    /// strong-convexity optimum certificate.
    fn objective(&self, beta: &[f64], round_count: usize) -> (f64, Vec<f64>, f64) {
        let n = self.n;
        // u = K beta (function values at every stream point)
        let mut u = vec![0.0; n];
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = self.gram[i].iter().zip(beta).map(|(k, b)| k * b).sum();
        }
        let norm2: f64 = beta.iter().zip(&u).map(|(b, ui)| b * ui).sum();
        let mut value = 0.0;
        // c = coefficients of the function-space gradient
        let mut c = vec![0.0; n];
        for (t, y, comparison) in &self.rounds[..round_count] {
            value += 0.5 * self.lambda * norm2;
            for (ci, bi) in c.iter_mut().zip(beta) {
                *ci += self.lambda * bi;
            }
            let m = comparison.len() as f64;
            let mu = comparison.iter().map(|i| u[*i]).sum::<f64>() / m;
            let sigma2 =
                comparison.iter().map(|i| (u[*i] - mu) * (u[*i] - mu)).sum::<f64>() / m;
            let margin = y * (u[*t] - mu);
            match self.loss_kind {
                LossKind::HingeSecondOrder => {
                    value += psi_m(margin, sigma2).expect("sigma2 >= 0").loss;
                    let b = 1.0 - margin;
                    let a = b * b + sigma2;
                    if a > EPS_SIGMA {
                        let sqrt_a = a.sqrt();
                        let psi = 0.5 * (b + sqrt_a);
                        c[*t] -= y * psi / sqrt_a;
                        for i in comparison {
                            c[*i] += (y * psi + 0.5 * (u[*i] - mu)) / (m * sqrt_a);
                        }
                    } else {
                        c[*t] -= y * 0.5;
                        for i in comparison {
                            c[*i] += y * 0.5 / m;
                        }
                    }
                }
                LossKind::SquareSecondOrder => {
                    value += psi_s(margin, sigma2).expect("sigma2 >= 0");
                    // calculus gradient of psi_s: twice the update operator
                    let b = 1.0 - margin;
                    c[*t] -= 2.0 * y * b;
                    for i in comparison {
                        c[*i] += 2.0 * (y * b + (u[*i] - mu)) / m;
                    }
                }
            }
        }
        // gradient in beta space is K c
        let mut grad = vec![0.0; n];
        for (i, gi) in grad.iter_mut().enumerate() {
            *gi = self.gram[i].iter().zip(&c).map(|(k, ci)| k * ci).sum();
        }
        let hilbert_norm2 = c.iter().zip(&grad).map(|(ci, gi)| ci * gi).sum();
        (value, grad, hilbert_norm2)
    }
}

/// Online losses plus the hindsight optimum over the representer span of the
/// whole stream. Requires buffers at least as large as the per-class stream
/// counts (the infinite-buffer regime the kernel regret bound assumes).
pub fn kernel_regret_trace(
    stream: &[LabeledInstance],
    config: &KernelConfig,
) -> Result<RegretTrace> {
    let per_round_losses = run_online(stream, config, true)?;
    if per_round_losses.is_empty() {
        return Ok(RegretTrace { per_round_losses, batch_optimum_loss: 0.0 });
    }
    let problem = HindsightProblem::build(stream, config)?;
    let total = problem.rounds.len();
    let (_, batch_optimum_loss, _) = gd::minimize(
        stream.len(),
        |b| {
            let (v, g, _) = problem.objective(b, total);
            (v, g)
        },
        1e-8,
        100_000,
    );
    Ok(RegretTrace { per_round_losses, batch_optimum_loss })
}

/// Per-round regret curve with warm-started prefix solves. The online run
/// honors the configured budgets; the hindsight comparator always spans the
/// whole stream, so the logarithmic bound claim only applies when the
/// budgets cover it.
pub fn kernel_regret_curve(
    stream: &[LabeledInstance],
    config: &KernelConfig,
) -> Result<Vec<RegretPoint>> {
    let losses = run_online(stream, config, false)?;
    let problem = HindsightProblem::build(stream, config)?;
    debug_assert_eq!(losses.len(), problem.rounds.len());
    let mut curve = Vec::with_capacity(losses.len());
    let mut warm = vec![0.0; stream.len()];
    let mut cumulative = 0.0;
    for r in 1..=losses.len() {
        cumulative += losses[r - 1];
        // loose warm-started solve with a strong-convexity certificate: the
        // prefix objective is (r lambda)-strongly convex in the RKHS, so
        // F(f) - ||grad F||_H^2 / (2 r lambda) lower-bounds its optimum and
        // the reported regret is a sound upper estimate
        let strong = r as f64 * problem.lambda;
        let tol = 1e-4 * (2.0 * strong).sqrt();
        let (argmin, value, _) = gd::minimize_from(
            warm.clone(),
            |b| {
                let (v, g, _) = problem.objective(b, r);
                (v, g)
            },
            tol,
            200,
        );
        let (_, _, hilbert2) = problem.objective(&argmin, r);
        warm = argmin;
        let prefix_optimum = (value - hilbert2 / (2.0 * strong)).max(0.0);
        curve.push(RegretPoint { round: r, cumulative_loss: cumulative, prefix_optimum });
    }
    Ok(curve)
}

fn run_online(
    stream: &[LabeledInstance],
    config: &KernelConfig,
    require_full_buffer: bool,
) -> Result<Vec<f64>> {
    if stream.is_empty() {
        return Err(Error::EmptyInput("kernel regret stream"));
    }
    let pos = stream.iter().filter(|i| i.y > 0.0).count();
    let neg = stream.len() - pos;
    if require_full_buffer && (config.pos_budget < pos.max(1) || config.neg_budget < neg.max(1)) {
        return Err(Error::InvalidConfig(
            "kernel regret analysis requires budgets covering the whole stream".into(),
        ));
    }
    let mut model = KernelModel::new(config.clone())?;
    let mut losses = Vec::new();
    for inst in stream {
        if let Some(loss) = model.kernel_step(inst)? {
            losses.push(loss);
        }
    }
    Ok(losses)
}
