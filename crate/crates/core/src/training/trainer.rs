use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{evaluate_model, ErrorReport, MetricTransform};
use crate::error::{Error, Result};
use crate::geomdata::OperatorDataset;
use crate::losses::{LossConfig, LossPlan};
use crate::netcore::{adam_step, lr_at, AdamState, LrSchedule, Tape};
use crate::operators::{
    pod_fit_basis, Affine, FusionConfig, Normalization, OperatorModel, Variant,
};
use crate::tensor::DenseTensor;
use crate::training::checkpoint::{Checkpoint, TrainState};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Optimizer steps; one minibatch per step.
    pub epochs: u64,
    /// Samples per step, 0 for the whole training set.
    pub batch_size: usize,
    pub schedule: LrSchedule,
    /// Evaluate (and keep the best parameters) every this many steps.
    pub eval_every: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 0,
            schedule: LrSchedule::default(),
            eval_every: 1000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eval_every == 0 {
            return Err(Error::contract("eval_every must be positive"));
        }
        LrSchedule::new(
            self.schedule.base_lr,
            self.schedule.decay_steps,
            self.schedule.decay_rate,
        )
        .map(|_| ())
    }
}

pub enum TrainEvent<'a> {
    Step {
        epoch: u64,
        loss: f64,
        lr: f64,
    },
    Eval {
        epoch: u64,
        report: &'a ErrorReport,
        improved: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs: u64,
    pub last_loss: f64,
    pub best_metric: f64,
    pub best_epoch: u64,
}

/// Scalings fitted on the training set: branch inputs and coordinates to
/// `[-1, 1]`, targets standardized; masked points are ignored.
pub fn fit_normalization(train: &OperatorDataset) -> Normalization {
    let mask = train.mask.as_ref().map(|m| m.data());
    let rows = train.len() * train.points();
    let coords = train
        .coords
        .clone()
        .reshape(&[rows, train.coord_dim()])
        .expect("same length");
    let targets = train
        .targets
        .clone()
        .reshape(&[rows, train.n_vars()])
        .expect("same length");
    Normalization {
        branch: Affine::fit_range(&train.branch, None),
        coords: Affine::fit_range(&coords, mask),
        targets: Affine::fit_standard(&targets, mask),
    }
}

/// A fresh model of `variant` with scalings (and, for POD, the basis) fitted on `train`.
pub fn prepare_model(
    variant: Variant,
    mut config: FusionConfig,
    train: &OperatorDataset,
) -> Result<OperatorModel> {
    if train.is_empty() {
        return Err(Error::contract("empty training set"));
    }
    config.branch_inputs = train.n_params();
    config.coord_dim = train.coord_dim();
    config.n_vars = train.n_vars();
    let norm = fit_normalization(train);
    match variant {
        Variant::Pod => {
            if train.shared_coords().is_none() {
                return Err(Error::contract(
                    "the POD variant needs every sample on the same grid",
                ));
            }
            let basis = pod_fit_basis(&norm.targets.forward(&train.targets), config.latent)?;
            OperatorModel::new_pod(config, basis, norm)
        }
        v => OperatorModel::new(v, config, norm),
    }
}

fn gather(t: &DenseTensor, stride_rows: usize, batch: &[usize]) -> DenseTensor {
    let c = t.cols();
    let stride = stride_rows * c;
    let mut data = Vec::with_capacity(batch.len() * stride);
    for &i in batch {
        data.extend_from_slice(&t.data()[i * stride..(i + 1) * stride]);
    }
    DenseTensor::new(vec![batch.len() * stride_rows, c], data).expect("sized")
}

/// Minibatch Adam over samples, every sample keeping its full point set.
pub struct Trainer {
    model: OperatorModel,
    transform: MetricTransform,
    cfg: TrainConfig,
    adam: AdamState,
    epoch: u64,
    best_metric: f64,
    best_epoch: u64,
    best_params: Vec<f64>,
    plan: LossPlan,
    xb: DenseTensor,
    xt: DenseTensor,
    shared_xt: Option<DenseTensor>,
    points: usize,
    samples: usize,
    eval: Option<OperatorDataset>,
    perm: (u64, Vec<usize>),
}

impl Trainer {
    /// `eval` drives best-parameter selection; the training set is used when absent.
    pub fn new(
        model: OperatorModel,
        transform: MetricTransform,
        train: &OperatorDataset,
        eval: Option<OperatorDataset>,
        loss: LossConfig,
        cfg: TrainConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let c = &model.config;
        if train.n_params() != c.branch_inputs
            || train.coord_dim() != c.coord_dim
            || train.n_vars() != c.n_vars
        {
            return Err(Error::dim(
                "training data vs model",
                format!(
                    "N_p={} N_c={} n_v={}",
                    c.branch_inputs, c.coord_dim, c.n_vars
                ),
                format!(
                    "N_p={} N_c={} n_v={}",
                    train.n_params(),
                    train.coord_dim(),
                    train.n_vars()
                ),
            ));
        }
        if train.is_empty() {
            return Err(Error::contract("empty training set"));
        }
        if let Some(e) = &eval {
            if e.n_params() != c.branch_inputs
                || e.coord_dim() != c.coord_dim
                || e.n_vars() != c.n_vars
            {
                return Err(Error::dim("evaluation data vs model", c.n_vars, e.n_vars()));
            }
        }
        let (n, pts) = (train.len(), train.points());
        let xb = model.branch_input(&train.branch);
        let xt = model.trunk_input(&train.coords);
        let shared_xt = match (model.variant, train.shared_coords()) {
            (Variant::Vanilla | Variant::Pod, Some(g)) => Some(model.trunk_input(&g)),
            _ => None,
        };
        let targets = model.norm.targets.forward(&train.targets);
        let plan_coords = xt.clone().reshape(&[n, pts, c.coord_dim])?;
        let plan = LossPlan::new(
            &targets,
            &plan_coords,
            train.mask.as_ref().map(|m| m.data()),
            loss,
        )?;
        let best_params = model.params.flat().to_vec();
        Ok(Self {
            adam: AdamState::new(model.params.len()),
            model,
            transform,
            cfg,
            epoch: 0,
            best_metric: f64::INFINITY,
            best_epoch: 0,
            best_params,
            plan,
            xb,
            xt,
            shared_xt,
            points: pts,
            samples: n,
            eval,
            perm: (u64::MAX, Vec::new()),
        })
    }

    /// Continues from a checkpoint written by [`Trainer::checkpoint`]; `best`
    /// restores the best parameters seen so far.
    pub fn resume(
        last: Checkpoint,
        best: Option<Checkpoint>,
        train: &OperatorDataset,
        eval: Option<OperatorDataset>,
        loss: LossConfig,
        cfg: TrainConfig,
    ) -> Result<Self> {
        let state = last
            .state
            .ok_or_else(|| Error::contract("checkpoint carries no optimizer state"))?;
        let mut t = Self::new(last.model, last.transform, train, eval, loss, cfg)?;
        if state.adam.m.len() != t.model.params.len() {
            return Err(Error::dim(
                "optimizer state",
                t.model.params.len(),
                state.adam.m.len(),
            ));
        }
        t.adam = state.adam;
        t.epoch = state.epoch;
        t.best_metric = state.best_metric;
        t.best_epoch = state.best_epoch;
        if let Some(b) = best {
            if b.model.params.len() != t.model.params.len() {
                return Err(Error::dim(
                    "best parameters",
                    t.model.params.len(),
                    b.model.params.len(),
                ));
            }
            t.best_params = b.model.params.flat().to_vec();
        }
        Ok(t)
    }

    pub fn model(&self) -> &OperatorModel {
        &self.model
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn best(&self) -> (f64, u64) {
        (self.best_metric, self.best_epoch)
    }

    fn state(&self) -> TrainState {
        TrainState {
            epoch: self.epoch,
            adam: self.adam.clone(),
            best_metric: self.best_metric,
            best_epoch: self.best_epoch,
        }
    }

    /// Current parameters with everything needed to resume.
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model: self.model.clone(),
            transform: self.transform.clone(),
            state: Some(self.state()),
        }
    }

    pub fn best_model(&self) -> OperatorModel {
        let mut m = self.model.clone();
        m.params.flat_mut().copy_from_slice(&self.best_params);
        m
    }

    pub fn best_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model: self.best_model(),
            transform: self.transform.clone(),
            state: Some(self.state()),
        }
    }

    fn batch_size(&self) -> usize {
        match self.cfg.batch_size {
            0 => self.samples,
            b => b.min(self.samples),
        }
    }

    /// Samples of step `epoch`: consecutive windows over a stream of
    /// per-pass shuffles, so the batch depends only on (seed, epoch).
    pub fn batch_at(&mut self, epoch: u64) -> Vec<usize> {
        let (n, b) = (self.samples as u64, self.batch_size() as u64);
        if b == n {
            return (0..self.samples).collect();
        }
        (epoch * b..(epoch + 1) * b)
            .map(|g| {
                let pass = g / n;
                if self.perm.0 != pass {
                    let mut rng = ChaCha8Rng::seed_from_u64(
                        self.cfg.seed ^ pass.wrapping_mul(0x9e37_79b9_7f4a_7c15),
                    );
                    let mut p: Vec<usize> = (0..self.samples).collect();
                    p.shuffle(&mut rng);
                    self.perm = (pass, p);
                }
                self.perm.1[(g % n) as usize]
            })
            .collect()
    }

    /// One optimizer step; returns the minibatch loss before the update.
    pub fn step(&mut self) -> Result<f64> {
        let batch = self.batch_at(self.epoch);
        let mut tape = Tape::new(self.model.params.len());
        let xb = tape.leaf(gather(&self.xb, 1, &batch));
        let xt = match &self.shared_xt {
            Some(g) => tape.leaf(g.clone()),
            None => tape.leaf(gather(&self.xt, self.points, &batch)),
        };
        let pred = self.model.graph(&mut tape, xb, Some(xt), self.points)?;
        let loss = self.plan.loss_graph(&mut tape, pred, &batch)?;
        let value = tape.value(loss).data()[0];
        if !value.is_finite() {
            return Err(Error::NonFinite(format!(
                "training loss {value} at epoch {}",
                self.epoch
            )));
        }
        let grads = tape.backward(loss)?;
        let lr = lr_at(self.epoch, &self.cfg.schedule);
        adam_step(
            self.model.params.flat_mut(),
            &grads.params,
            &mut self.adam,
            lr,
        )?;
        self.epoch += 1;
        Ok(value)
    }

    /// Error report of the current parameters on the evaluation set.
    pub fn evaluate(&self, train: &OperatorDataset) -> Result<ErrorReport> {
        evaluate_model(
            &self.model,
            self.eval.as_ref().unwrap_or(train),
            &self.transform,
        )
    }

    /// Runs until `cfg.epochs` steps have been taken, evaluating every
    /// `eval_every` steps and at the end. `hook` sees every event; an error
    /// from it stops training.
    pub fn run(
        &mut self,
        train: &OperatorDataset,
        mut hook: impl FnMut(&Trainer, &TrainEvent) -> Result<()>,
    ) -> Result<TrainSummary> {
        let mut last_loss = f64::NAN;
        while self.epoch < self.cfg.epochs {
            let epoch = self.epoch;
            last_loss = self.step()?;
            let lr = lr_at(epoch, &self.cfg.schedule);
            hook(
                self,
                &TrainEvent::Step {
                    epoch,
                    loss: last_loss,
                    lr,
                },
            )?;
            if self.epoch.is_multiple_of(self.cfg.eval_every) || self.epoch == self.cfg.epochs {
                let report = self.evaluate(train)?;
                let improved = report.aggregate < self.best_metric;
                if improved {
                    self.best_metric = report.aggregate;
                    self.best_epoch = self.epoch;
                    self.best_params.copy_from_slice(self.model.params.flat());
                }
                hook(
                    self,
                    &TrainEvent::Eval {
                        epoch: self.epoch,
                        report: &report,
                        improved,
                    },
                )?;
            }
        }
        Ok(TrainSummary {
            epochs: self.epoch,
            last_loss,
            best_metric: self.best_metric,
            best_epoch: self.best_epoch,
        })
    }
}
