//! Linear online AUC learners driven by the second-order surrogates, plus
//! Perceptron and PA-I baselines and a hindsight regret trace.
//!
//! Each round compares the incoming instance against the running moments of
//! the opposite class and applies one regularized OGD step
//! `w <- (1 - eta lambda) w - eta grad_psi`. Rounds arriving before any
//! opposite-class instance exists are skipped by default (no loss, no step);
//! `zero_history_updates` evaluates them against the zero moments instead.

use serde::{Deserialize, Serialize};

use crate::data::LabeledInstance;
use crate::gd;
use crate::linalg::{dot, quad_form, Vector};
use crate::moments::ClassMoments;
use crate::surrogate::{grad_psi_m, grad_psi_s, psi_m, psi_s, LossKind};
use crate::{Error, Result};

/// Step-size schedule indexed by the gradient-applying round (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    /// Fixed `eta` every round.
    Constant { eta: f64 },
    /// `eta_t = 1 / (lambda t)`; the schedule behind the logarithmic regret
    /// bound for the hinge-based learner.
    InverseLambdaT { lambda: f64 },
    /// The constant step tuned for the square-based learner's sqrt-T bound:
    /// `eta = 1 / (4 + lambda + sqrt((4 + lambda)^2 + (4 + lambda) lambda T L*))`.
    /// `l_star` (the hindsight optimum loss) must be supplied explicitly;
    /// cross-validation over `Constant` is the practical path.
    HorizonTuned { lambda: f64, horizon_t: usize, l_star: f64 },
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            StepSchedule::Constant { eta } => *eta > 0.0,
            StepSchedule::InverseLambdaT { lambda } => *lambda > 0.0,
            StepSchedule::HorizonTuned { lambda, l_star, .. } => *lambda > 0.0 && *l_star >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid step schedule {self:?}")))
        }
    }

    /// Step size for the `round`-th gradient round, `round >= 1`.
    pub fn eta(&self, round: usize) -> f64 {
        match self {
            StepSchedule::Constant { eta } => *eta,
            StepSchedule::InverseLambdaT { lambda } => 1.0 / (lambda * round as f64),
            StepSchedule::HorizonTuned { lambda, horizon_t, l_star } => {
                let a = 4.0 + lambda;
                1.0 / (a + (a * a + a * lambda * *horizon_t as f64 * l_star).sqrt())
            }
        }
    }
}

/// Configuration for a [`LinearModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub loss_kind: LossKind,
    pub lambda: f64,
    pub schedule: StepSchedule,
    /// Evaluate rounds with no opposite-class history against the zero
    /// moments, as the initialization in the update framework formally does.
    /// Off by default: the zero moments are an artifact of initialization,
    /// not data, and would trigger a spurious hinge-vs-origin update.
    #[serde(default)]
    pub zero_history_updates: bool,
}

/// Streaming linear learner state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub w: Vector,
    pub config: LinearConfig,
    /// Stream round counter; 1 + number of instances consumed.
    pub t: usize,
    /// Number of gradient-applying rounds so far; indexes the schedule.
    pub grad_rounds: usize,
    pub pos_moments: ClassMoments,
    pub neg_moments: ClassMoments,
}

impl LinearModel {
    pub fn new(dim: usize, config: LinearConfig) -> Result<Self> {
        if config.lambda < 0.0 {
            return Err(Error::InvalidConfig("lambda must be >= 0".into()));
        }
        config.schedule.validate()?;
        Ok(Self {
            w: Vector::zeros(dim),
            config,
            t: 1,
            grad_rounds: 0,
            pos_moments: ClassMoments::empty(dim),
            neg_moments: ClassMoments::empty(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    /// `w^T x`.
    pub fn score(&self, x: &Vector) -> Result<f64> {
        dot(&self.w, x)
    }

    /// Consumes one instance. Returns the regularized round loss
    /// `lambda/2 ||w||^2 + psi(...)` when a gradient step was applied, or
    /// `None` on a skip round (no opposite-class history yet).
    pub fn step(&mut self, instance: &LabeledInstance) -> Result<Option<f64>> {
        if instance.y != 1.0 && instance.y != -1.0 {
            return Err(Error::InvalidLabel(instance.y));
        }
        if instance.x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: instance.x.dim() });
        }
        let y = instance.y;
        let opposite = if y > 0.0 { &self.neg_moments } else { &self.pos_moments };

        let round_loss = if opposite.count() >= 1 || self.config.zero_history_updates {
            let zero_history = opposite.count() == 0;
            let centered = instance.x.sub(opposite.mean())?;
            let mu = y * dot(&self.w, &centered)?;
            let sigma2 = quad_form(opposite.cov(), &self.w)?;
            let psi = match self.config.loss_kind {
                LossKind::SquareSecondOrder => psi_s(mu, sigma2)?,
                LossKind::HingeSecondOrder => psi_m(mu, sigma2)?.loss,
            };
            let w_norm2 = dot(&self.w, &self.w)?;
            let loss = 0.5 * self.config.lambda * w_norm2 + psi;

            self.grad_rounds += 1;
            let eta = self.config.schedule.eta(self.grad_rounds);
            let grad = if zero_history {
                // gradient against the zero stand-in moments
                let stand_in = zero_moment_stand_in(opposite.dim());
                self.gradient(&instance.x, y, &stand_in)?
            } else {
                self.gradient(&instance.x, y, opposite)?
            };
            self.w.scale(1.0 - eta * self.config.lambda);
            self.w.add_scaled(&grad, -eta)?;
            if !self.w.is_finite() {
                return Err(Error::NonFinite { context: "LinearModel::step" });
            }
            Some(loss)
        } else {
            None
        };

        if y > 0.0 {
            self.pos_moments.update(&instance.x)?;
        } else {
            self.neg_moments.update(&instance.x)?;
        }
        self.t += 1;
        Ok(round_loss)
    }

    fn gradient(&self, x: &Vector, y: f64, opposite: &ClassMoments) -> Result<Vector> {
        match self.config.loss_kind {
            LossKind::SquareSecondOrder => grad_psi_s(x, y, opposite, &self.w),
            LossKind::HingeSecondOrder => grad_psi_m(x, y, opposite, &self.w),
        }
    }
}

fn zero_moment_stand_in(dim: usize) -> ClassMoments {
    // count 1 at the origin: mean 0, cov 0, satisfies the count >= 1 guard
    let mut m = ClassMoments::empty(dim);
    m.update(&Vector::zeros(dim)).expect("dims match");
    m
}

/// Baseline online classifiers compared against in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Perceptron,
    Pa1 { c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub kind: BaselineKind,
    pub w: Vector,
    pub bias: f64,
}

impl BaselineModel {
    pub fn new(dim: usize, kind: BaselineKind) -> Result<Self> {
        if let BaselineKind::Pa1 { c } = kind {
            if c <= 0.0 {
                return Err(Error::InvalidConfig("PA-I aggressiveness C must be > 0".into()));
            }
        }
        Ok(Self { kind, w: Vector::zeros(dim), bias: 0.0 })
    }

    pub fn score(&self, x: &Vector) -> Result<f64> {
        Ok(dot(&self.w, x)? + self.bias)
    }

    pub fn step(&mut self, instance: &LabeledInstance) -> Result<()> {
        if instance.y != 1.0 && instance.y != -1.0 {
            return Err(Error::InvalidLabel(instance.y));
        }
        let (x, y) = (&instance.x, instance.y);
        match self.kind {
            BaselineKind::Perceptron => {
                if y * dot(&self.w, x)? <= 0.0 {
                    self.w.add_scaled(x, y)?;
                }
            }
            BaselineKind::Pa1 { c } => {
                let loss = (1.0 - y * dot(&self.w, x)?).max(0.0);
                let norm2 = dot(x, x)?;
                if loss > 0.0 && norm2 > 0.0 {
                    let tau = c.min(loss / norm2);
                    self.w.add_scaled(x, tau * y)?;
                }
            }
        }
        Ok(())
    }
}

/// Cumulative online losses plus the best fixed hindsight loss.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    /// One entry per gradient-applying round, in stream order.
    pub per_round_losses: Vec<f64>,
    /// `min_w sum_t L_t(w)` computed by the batch hindsight solver.
    pub batch_optimum_loss: f64,
}

impl RegretTrace {
    /// Cumulative regret after each gradient round, against the scaled
    /// optimum (the hindsight optimum is over the full horizon; prefixes use
    /// the final optimal loss restricted to the rounds seen, so only the
    /// final entry is the formal regret — intermediate entries use the
    /// per-round share for plotting).
    pub fn cumulative_regret(&self) -> f64 {
        self.per_round_losses.iter().sum::<f64>() - self.batch_optimum_loss
    }
}

/// Runs the online learner over the full stream, then solves the hindsight
/// problem `min_w sum_t [lambda/2 ||w||^2 + psi_t(w)]` over the same gradient
/// rounds by full-batch descent (gradient norm tolerance 1e-8, at most 100k
/// iterations).
pub fn regret_trace(stream: &[LabeledInstance], config: &LinearConfig) -> Result<RegretTrace> {
    if stream.is_empty() {
        return Err(Error::EmptyInput("regret_trace stream"));
    }
    let dim = stream[0].x.dim();
    let mut model = LinearModel::new(dim, config.clone())?;
    let mut per_round_losses = Vec::new();
    // moments snapshots for the hindsight objective
    let mut rounds: Vec<(Vector, f64, ClassMoments)> = Vec::new();
    for instance in stream {
        let opposite =
            if instance.y > 0.0 { &model.neg_moments } else { &model.pos_moments };
        let snapshot = (opposite.count() >= 1).then(|| opposite.clone());
        if let Some(loss) = model.step(instance)? {
            per_round_losses.push(loss);
            let snap = snapshot.expect("gradient round implies opposite history");
            rounds.push((instance.x.clone(), instance.y, snap));
        }
    }
    if rounds.is_empty() {
        return Ok(RegretTrace { per_round_losses, batch_optimum_loss: 0.0 });
    }

    let lambda = config.lambda;
    let loss_kind = config.loss_kind;
    let objective = |w_raw: &[f64]| -> (f64, Vec<f64>) {
        let w = Vector::new(w_raw.to_vec()).expect("solver iterate finite");
        let mut value = 0.0;
        let mut grad = Vector::zeros(dim);
        let w_norm2: f64 = w_raw.iter().map(|a| a * a).sum();
        for (x, y, m) in &rounds {
            let centered = x.sub(m.mean()).expect("dims");
            let mu = *y * dot(&w, &centered).expect("dims");
            let sigma2 = quad_form(m.cov(), &w).expect("dims");
            value += 0.5 * lambda * w_norm2;
            // see regret_curve: the square update operator is half the
            // calculus gradient, so the solver doubles it
            let (g, g_scale) = match loss_kind {
                LossKind::SquareSecondOrder => {
                    value += psi_s(mu, sigma2).expect("sigma2 >= 0");
                    (grad_psi_s(x, *y, m, &w).expect("dims"), 2.0)
                }
                LossKind::HingeSecondOrder => {
                    value += psi_m(mu, sigma2).expect("sigma2 >= 0").loss;
                    (grad_psi_m(x, *y, m, &w).expect("dims"), 1.0)
                }
            };
            grad.add_scaled(&g, g_scale).expect("dims");
            grad.add_scaled(&w, lambda).expect("dims");
        }
        (value, grad.into())
    };
    let (_, batch_optimum_loss, _) = gd::minimize(dim, objective, 1e-8, 100_000);
    Ok(RegretTrace { per_round_losses, batch_optimum_loss })
}

/// One point of a per-round regret curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretPoint {
    /// Gradient-round index, 1-based.
    pub round: usize,
    /// Sum of online losses over gradient rounds 1..=round.
    pub cumulative_loss: f64,
    /// Certified lower bound on the hindsight optimum of the same prefix
    /// objective (strong-convexity certificate at an approximate minimizer),
    /// so [`RegretPoint::regret`] is a sound upper estimate.
    pub prefix_optimum: f64,
}

impl RegretPoint {
    pub fn regret(&self) -> f64 {
        self.cumulative_loss - self.prefix_optimum
    }
}

/// Per-round cumulative regret: solves the hindsight problem on every prefix
/// of gradient rounds, warm-starting each solve from the previous optimum.
pub fn regret_curve(stream: &[LabeledInstance], config: &LinearConfig) -> Result<Vec<RegretPoint>> {
    if stream.is_empty() {
        return Err(Error::EmptyInput("regret_curve stream"));
    }
    let dim = stream[0].x.dim();
    let mut model = LinearModel::new(dim, config.clone())?;
    let mut rounds: Vec<(Vector, f64, ClassMoments)> = Vec::new();
    let mut losses = Vec::new();
    for instance in stream {
        let opposite =
            if instance.y > 0.0 { &model.neg_moments } else { &model.pos_moments };
        let snapshot = (opposite.count() >= 1).then(|| opposite.clone());
        if let Some(loss) = model.step(instance)? {
            losses.push(loss);
            rounds.push((instance.x.clone(), instance.y, snapshot.expect("history")));
        }
    }

    let lambda = config.lambda;
    let loss_kind = config.loss_kind;
    let mut curve = Vec::with_capacity(rounds.len());
    let mut cumulative = 0.0;
    let mut warm = vec![0.0; dim];
    for r in 1..=rounds.len() {
        cumulative += losses[r - 1];
        let prefix = &rounds[..r];
        let objective = |w_raw: &[f64]| -> (f64, Vec<f64>) {
            let w = Vector::new(w_raw.to_vec()).expect("solver iterate finite");
            let mut value = 0.0;
            let mut grad = Vector::zeros(dim);
            let w_norm2: f64 = w_raw.iter().map(|a| a * a).sum();
            for (x, y, m) in prefix {
                let centered = x.sub(m.mean()).expect("dims");
                let mu = *y * dot(&w, &centered).expect("dims");
                let sigma2 = quad_form(m.cov(), &w).expect("dims");
                value += 0.5 * lambda * w_norm2;
                // the square-loss update operator is grad(psi_s)/2; the
                // solver needs the calculus gradient of the value it reports
                let (g, g_scale) = match loss_kind {
                    LossKind::SquareSecondOrder => {
                        value += psi_s(mu, sigma2).expect("sigma2 >= 0");
                        (grad_psi_s(x, *y, m, &w).expect("dims"), 2.0)
                    }
                    LossKind::HingeSecondOrder => {
                        value += psi_m(mu, sigma2).expect("sigma2 >= 0").loss;
                        (grad_psi_m(x, *y, m, &w).expect("dims"), 1.0)
                    }
                };
                grad.add_scaled(&g, g_scale).expect("dims");
                grad.add_scaled(&w, lambda).expect("dims");
            }
            (value, grad.into())
        };
        // loose warm-started solve; the prefix objective is (r lambda)-
        // strongly convex, so F(w) - ||grad F(w)||^2 / (2 r lambda) certifies
        // a lower bound on the prefix optimum and the reported regret is a
        // sound upper estimate
        let strong = r as f64 * lambda;
        let tol = 1e-4 * (2.0 * strong).sqrt();
        let (argmin, value, grad_norm) =
            gd::minimize_from(warm.clone(), objective, tol, 200);
        warm = argmin;
        let prefix_optimum = (value - grad_norm * grad_norm / (2.0 * strong)).max(0.0);
        curve.push(RegretPoint { round: r, cumulative_loss: cumulative, prefix_optimum });
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::auc;
    use crate::synth::gaussian_pair_stream;

    fn hinge_config(lambda: f64) -> LinearConfig {
        LinearConfig {
            loss_kind: LossKind::HingeSecondOrder,
            lambda,
            schedule: StepSchedule::InverseLambdaT { lambda },
            zero_history_updates: false,
        }
    }

    #[test]
    fn schedules() {
        let s = StepSchedule::InverseLambdaT { lambda: 2.0 };
        assert_eq!(s.eta(1), 0.5);
        assert_eq!(s.eta(4), 0.125);
        let t2 = StepSchedule::HorizonTuned { lambda: 1.0, horizon_t: 100, l_star: 0.0 };
        assert!((t2.eta(1) - 1.0 / 10.0).abs() < 1e-15);
        assert!(StepSchedule::Constant { eta: 0.0 }.validate().is_err());
    }

    #[test]
    fn first_round_is_skipped() {
        let mut model = LinearModel::new(2, hinge_config(1.0)).unwrap();
        let inst = LabeledInstance::new(Vector::new(vec![0.5, 0.1]).unwrap(), 1.0).unwrap();
        let loss = model.step(&inst).unwrap();
        assert!(loss.is_none());
        assert_eq!(model.w, Vector::zeros(2));
        assert_eq!(model.pos_moments.count(), 1);
        assert_eq!(model.t, 2);
    }

    #[test]
    fn second_round_hand_trace() {
        // x1 positive, x2 negative; at round 2 the model is still w = 0 so
        // sigma^2 = 0 and the hinge fallback fires: psi_m(0, 0) = 1 and the
        // subgradient is -y2 (x2 - x1), giving w2 = eta1 * y2 (x2 - x1).
        let lambda = 0.5;
        let mut model = LinearModel::new(2, hinge_config(lambda)).unwrap();
        let x1 = Vector::new(vec![0.8, 0.2]).unwrap();
        let x2 = Vector::new(vec![-0.3, 0.4]).unwrap();
        model.step(&LabeledInstance::new(x1.clone(), 1.0).unwrap()).unwrap();
        let loss = model
            .step(&LabeledInstance::new(x2.clone(), -1.0).unwrap())
            .unwrap()
            .expect("gradient round");
        assert!((loss - 1.0).abs() < 1e-12);
        let eta1 = 1.0 / lambda;
        let diff = x2.sub(&x1).unwrap();
        for i in 0..2 {
            assert!((model.w.get(i) - (-1.0) * eta1 * diff.get(i)).abs() < 1e-12);
        }
        assert_eq!(model.grad_rounds, 1);
    }

    #[test]
    fn score_is_linear() {
        let mut model = LinearModel::new(2, hinge_config(1.0)).unwrap();
        assert_eq!(model.score(&Vector::new(vec![3.0, 7.0]).unwrap()).unwrap(), 0.0);
        model.w = Vector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(model.score(&Vector::new(vec![3.0, 7.0]).unwrap()).unwrap(), 3.0);
        let x = Vector::new(vec![0.2, -0.4]).unwrap();
        let z = Vector::new(vec![1.0, 2.0]).unwrap();
        let mut combo = x.clone();
        combo.scale(2.0);
        combo.add_scaled(&z, -3.0).unwrap();
        let lhs = model.score(&combo).unwrap();
        let rhs = 2.0 * model.score(&x).unwrap() - 3.0 * model.score(&z).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn learns_separable_stream() {
        let stream = gaussian_pair_stream(500, 5, 0.6, 0.15, 2024);
        let mut model = LinearModel::new(5, hinge_config(1.0)).unwrap();
        for inst in &stream {
            model.step(inst).unwrap();
        }
        let scores: Vec<f64> = stream.iter().map(|i| model.score(&i.x).unwrap()).collect();
        let labels: Vec<f64> = stream.iter().map(|i| i.y).collect();
        let result = auc(&scores, &labels).unwrap();
        assert!(result.value >= 0.95, "in-sample AUC {}", result.value);
    }

    #[test]
    fn weight_norm_bound() {
        // ||w_t|| <= 3 / lambda throughout when eta_t = 1/(lambda t), ||x|| <= 1
        for lambda in [0.5, 1.0, 2.0] {
            let stream = gaussian_pair_stream(400, 4, 0.3, 0.3, 91);
            let mut model = LinearModel::new(4, hinge_config(lambda)).unwrap();
            for inst in &stream {
                model.step(inst).unwrap();
                assert!(model.w.norm() <= 3.0 / lambda + 1e-9);
            }
        }
    }

    #[test]
    fn determinism() {
        let stream = gaussian_pair_stream(300, 3, 0.4, 0.2, 5);
        let run = || {
            let mut model = LinearModel::new(3, hinge_config(1.0)).unwrap();
            for inst in &stream {
                model.step(inst).unwrap();
            }
            model.w
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn label_flip_symmetry() {
        // negating all labels and features reproduces the round losses
        let stream = gaussian_pair_stream(300, 3, 0.4, 0.2, 8);
        let flipped: Vec<LabeledInstance> = stream
            .iter()
            .map(|i| {
                let mut x = i.x.clone();
                x.scale(-1.0);
                LabeledInstance { x, y: -i.y }
            })
            .collect();
        let losses = |s: &[LabeledInstance]| {
            let mut model = LinearModel::new(3, hinge_config(1.0)).unwrap();
            s.iter().map(|i| model.step(i).unwrap()).collect::<Vec<_>>()
        };
        let a = losses(&stream);
        let b = losses(&flipped);
        assert_eq!(a.len(), b.len());
        for (la, lb) in a.iter().zip(&b) {
            match (la, lb) {
                (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-10),
                (None, None) => {}
                _ => panic!("skip rounds diverged"),
            }
        }
    }

    #[test]
    fn baselines() {
        let mut p = BaselineModel::new(2, BaselineKind::Perceptron).unwrap();
        p.step(&LabeledInstance::new(Vector::new(vec![1.0, 1.0]).unwrap(), 1.0).unwrap())
            .unwrap();
        assert_eq!(p.w.as_slice(), &[1.0, 1.0]);

        let mut pa = BaselineModel::new(2, BaselineKind::Pa1 { c: 1.0 }).unwrap();
        pa.step(&LabeledInstance::new(Vector::new(vec![1.0, 0.0]).unwrap(), 1.0).unwrap())
            .unwrap();
        assert_eq!(pa.w.as_slice(), &[1.0, 0.0]);
        // already correct with margin >= 1: tau = 0, unchanged
        let before = pa.w.clone();
        pa.step(&LabeledInstance::new(Vector::new(vec![1.0, 0.0]).unwrap(), 1.0).unwrap())
            .unwrap();
        assert_eq!(pa.w, before);
        // zero vector with nonzero loss: update skipped
        pa.step(&LabeledInstance::new(Vector::zeros(2), -1.0).unwrap()).unwrap();
        assert_eq!(pa.w, before);
    }

    #[test]
    fn regret_single_class_stream() {
        let stream = vec![
            LabeledInstance::new(Vector::new(vec![0.1]).unwrap(), 1.0).unwrap(),
            LabeledInstance::new(Vector::new(vec![0.2]).unwrap(), 1.0).unwrap(),
        ];
        let trace = regret_trace(&stream, &hinge_config(1.0)).unwrap();
        assert!(trace.per_round_losses.is_empty());
        assert_eq!(trace.batch_optimum_loss, 0.0);
        assert!(regret_trace(&[], &hinge_config(1.0)).is_err());
    }

    #[test]
    fn logarithmic_regret_bound_small() {
        let lambda = 1.0;
        let stream = gaussian_pair_stream(500, 5, 0.4, 0.25, 33);
        let trace = regret_trace(&stream, &hinge_config(lambda)).unwrap();
        let t = trace.per_round_losses.len() as f64;
        let bound = 18.0 * (1.0 + t.ln()) / lambda;
        let regret = trace.cumulative_regret();
        assert!(regret <= bound, "regret {regret} > bound {bound}");
    }
}
