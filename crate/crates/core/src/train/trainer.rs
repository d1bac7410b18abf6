//! The optimization loop.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::augment::{random_crop, Sample};
use super::config::TrainConfig;
use super::gt::TriStateGroundTruth;
use super::loss::total_loss;
use crate::autograd::Graph;
use crate::error::{Error, Result};
use crate::model::{Checkpoint, MsmsfNet, SIDE_OUTPUTS};
use crate::tensor::Tensor;

/// One optimizer step's losses (per batch, summed over its images).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub lr: f64,
    pub total_loss: f64,
    pub side1: f64,
    pub side2: f64,
    pub side3: f64,
    pub fuse: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossLog {
    pub records: Vec<StepRecord>,
}

impl LossLog {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.records {
            out.serialize(r).map_err(|e| Error::format(format!("writing loss log: {e}")))?;
        }
        out.flush().map_err(|e| Error::format(format!("writing loss log: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn first_loss(&self) -> Option<f64> {
        self.records.first().map(|r| r.total_loss)
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.total_loss)
    }
}

/// State handed to the per-epoch callback.
pub struct EpochEnd<'a> {
    pub epoch: usize,
    pub step: usize,
    pub net: &'a MsmsfNet,
    pub adam: &'a AdamState,
    /// Steps taken during this epoch.
    pub records: &'a [StepRecord],
}

impl EpochEnd<'_> {
    /// Parameters plus optimizer moments and the epoch counter.
    pub fn checkpoint(&self) -> Checkpoint {
        let mut ckpt = self.net.to_checkpoint();
        self.adam.write_to(self.net.params(), &mut ckpt);
        ckpt.insert_scalar("train.epoch", self.epoch as f32);
        ckpt
    }

    pub fn mean_loss(&self) -> f64 {
        let n = self.records.len().max(1) as f64;
        self.records.iter().map(|r| r.total_loss).sum::<f64>() / n
    }
}

/// Trains `net` in place on `samples`.
///
/// Each epoch shuffles the samples with a generator seeded from
/// `config.seed` and the epoch number, crops each to the configured size
/// (or the image size when smaller) and groups equally sized crops into
/// mini-batches. Samples whose labels are all ignored are skipped with a
/// warning. `on_epoch` runs after every epoch, including the last partial
/// one when `max_steps` ends training early.
pub fn train(
    net: &mut MsmsfNet,
    samples: &[Sample],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochEnd<'_>) -> Result<()>,
) -> Result<LossLog> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::data("training set is empty"));
    }
    let mut adam = AdamState::new(net.params(), config.adam);
    let mut log = LossLog::default();
    let mut step = 0usize;
    'epochs: for epoch in 1..=config.max_epochs() {
        let lr = config.lr_at(epoch);
        let epoch_start = log.records.len();
        let batches = epoch_batches(samples, config, epoch)?;
        for batch in batches {
            if config.max_steps.is_some_and(|m| step >= m) {
                finish_epoch(&mut on_epoch, epoch, step, net, &adam, &log.records[epoch_start..])?;
                break 'epochs;
            }
            let rec = train_step(net, &mut adam, &batch, config, lr, step, epoch)?;
            log.records.push(rec);
            step += 1;
        }
        finish_epoch(&mut on_epoch, epoch, step, net, &adam, &log.records[epoch_start..])?;
        if config.max_steps.is_some_and(|m| step >= m) {
            break;
        }
    }
    Ok(log)
}

fn finish_epoch(
    on_epoch: &mut impl FnMut(&EpochEnd<'_>) -> Result<()>,
    epoch: usize,
    step: usize,
    net: &MsmsfNet,
    adam: &AdamState,
    records: &[StepRecord],
) -> Result<()> {
    if records.is_empty() {
        return Ok(());
    }
    on_epoch(&EpochEnd {
        epoch,
        step,
        net,
        adam,
        records,
    })
}

/// Shuffled, cropped, shape-grouped mini-batches for one epoch.
fn epoch_batches(samples: &[Sample], config: &TrainConfig, epoch: usize) -> Result<Vec<Vec<Sample>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);
    let mut groups: Vec<((usize, usize), Vec<Sample>)> = Vec::new();
    for i in order {
        let s = &samples[i];
        if s.gt.lambda().is_none() {
            log::warn!("skipping sample {i}: every ground-truth pixel is ignored");
            continue;
        }
        let cropped = match config.crop {
            Some([h, w]) => random_crop(s, h.min(s.height()), w.min(s.width()), &mut rng)?,
            None => s.clone(),
        };
        let key = (cropped.height(), cropped.width());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(cropped),
            None => groups.push((key, vec![cropped])),
        }
    }
    let mut batches = Vec::new();
    for (_, group) in groups {
        let mut it = group.into_iter().peekable();
        while it.peek().is_some() {
            batches.push(it.by_ref().take(config.batch_size).collect());
        }
    }
    if batches.is_empty() {
        return Err(Error::data("every training sample is fully ignored"));
    }
    Ok(batches)
}

fn train_step(
    net: &mut MsmsfNet,
    adam: &mut AdamState,
    batch: &[Sample],
    config: &TrainConfig,
    lr: f64,
    step: usize,
    epoch: usize,
) -> Result<StepRecord> {
    let images: Vec<&Tensor> = batch.iter().map(|s| &s.image).collect();
    let gts: Vec<&TriStateGroundTruth> = batch.iter().map(|s| &s.gt).collect();
    let x = Tensor::stack(&images)?;
    let mut g = Graph::new();
    let vars = net.bind(&mut g, true);
    let input = g.constant(x);
    let outputs = net.forward(&mut g, &vars, input)?;
    let terms = total_loss(&mut g, &outputs, &gts, config.side_weights)?;
    let value = |g: &Graph, v| g.value(v).data()[0] as f64;
    let total = value(&g, terms.total);
    if !total.is_finite() {
        return Err(Error::numeric(format!("non-finite loss {total} at step {step}")));
    }
    let sides: [f64; SIDE_OUTPUTS] = terms.sides.map(|v| value(&g, v));
    let fuse = value(&g, terms.fused);
    g.backward(terms.total)?;
    let grads = net.params().gradients(&mut g, &vars);
    adam_step(net.params_mut(), &grads, adam, lr, config.weight_decay)
        .map_err(|e| Error::numeric(format!("step {step}: {e}")))?;
    Ok(StepRecord {
        step,
        epoch,
        lr,
        total_loss: total,
        side1: sides[0],
        side2: sides[1],
        side3: sides[2],
        fuse,
    })
}

/// Total loss of `net` on a fixed batch without updating anything.
pub fn evaluate_loss(net: &MsmsfNet, batch: &[Sample], side_weights: [f64; SIDE_OUTPUTS]) -> Result<f64> {
    let images: Vec<&Tensor> = batch.iter().map(|s| &s.image).collect();
    let gts: Vec<&TriStateGroundTruth> = batch.iter().map(|s| &s.gt).collect();
    let mut g = Graph::new();
    let vars = net.bind(&mut g, false);
    let input = g.constant(Tensor::stack(&images)?);
    let outputs = net.forward(&mut g, &vars, input)?;
    let terms = total_loss(&mut g, &outputs, &gts, side_weights)?;
    Ok(g.value(terms.total).data()[0] as f64)
}
