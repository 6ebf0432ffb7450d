//! Three-layer feedforward classifier: logistic hidden layer, softmax output,
//! cross-entropy loss, trained by per-example stochastic gradient descent
//! with validation-based early stopping.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::DataTable;
use crate::error::{Result, WdneError};
use crate::seed::derive_seed;

pub const DEFAULT_SIZE_OFFSET: usize = 4;
pub const DEFAULT_LEARNING_RATE: f64 = 0.05;
pub const DEFAULT_MAX_EPOCHS: usize = 500;
pub const DEFAULT_PATIENCE: usize = 30;

const SHUFFLE_STREAM: u64 = 0x5348_5546;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub inputs: usize,
    pub outputs: usize,
    /// Constant added to the rounded `√(inputs + outputs)`; 1 to 10.
    pub size_offset: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            inputs: 1,
            outputs: 2,
            size_offset: DEFAULT_SIZE_OFFSET,
            learning_rate: DEFAULT_LEARNING_RATE,
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn new(inputs: usize, outputs: usize) -> Self {
        MlpConfig {
            inputs,
            outputs,
            ..MlpConfig::default()
        }
    }

    /// Copy of this config with a different network shape and seed.
    pub fn for_shape(&self, inputs: usize, outputs: usize, seed: u64) -> Self {
        MlpConfig {
            inputs,
            outputs,
            seed,
            ..self.clone()
        }
    }

    pub fn hidden_size(&self) -> Result<usize> {
        hidden_size(self.inputs, self.outputs, self.size_offset)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs == 0 || self.outputs == 0 {
            return Err(WdneError::Config(format!(
                "network needs at least one input and output, got {}→{}",
                self.inputs, self.outputs
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(WdneError::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_epochs == 0 {
            return Err(WdneError::Config("max_epochs must be positive".into()));
        }
        self.hidden_size().map(|_| ())
    }
}

/// Hidden layer width: `round(√(n + m)) + a`, rounding half up.
pub fn hidden_size(inputs: usize, outputs: usize, size_offset: usize) -> Result<usize> {
    if !(1..=10).contains(&size_offset) {
        return Err(WdneError::Config(format!(
            "hidden size offset must be in 1..=10, got {size_offset}"
        )));
    }
    if inputs == 0 || outputs == 0 {
        return Err(WdneError::Config("inputs and outputs must be >= 1".into()));
    }
    let root = ((inputs + outputs) as f64).sqrt();
    Ok((root + 0.5).floor() as usize + size_offset)
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Network parameters. Weight matrices are row-major: `w1` is `hidden × inputs`,
/// `w2` is `outputs × hidden`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    inputs: usize,
    hidden: usize,
    outputs: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Parameter gradients, laid out like [`MlpModel::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub loss: f64,
    pub values: Vec<f64>,
}

struct Scratch {
    hidden: Vec<f64>,
    output: Vec<f64>,
    d_hidden: Vec<f64>,
}

impl Scratch {
    fn for_model(m: &MlpModel) -> Self {
        Scratch {
            hidden: vec![0.0; m.hidden],
            output: vec![0.0; m.outputs],
            d_hidden: vec![0.0; m.hidden],
        }
    }
}

impl MlpModel {
    /// Uniform initialization in `±1/√fan_in` from the config's seed.
    pub fn init(config: &MlpConfig) -> Result<Self> {
        config.validate()?;
        let (n, h, m) = (config.inputs, config.hidden_size()?, config.outputs);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let r1 = 1.0 / (n as f64).sqrt();
        let r2 = 1.0 / (h as f64).sqrt();
        let mut draw = |len: usize, r: f64| -> Vec<f64> {
            (0..len).map(|_| rng.random_range(-r..=r)).collect()
        };
        let w1 = draw(h * n, r1);
        let b1 = draw(h, r1);
        let w2 = draw(m * h, r2);
        let b2 = draw(m, r2);
        Ok(MlpModel {
            inputs: n,
            hidden: h,
            outputs: m,
            w1,
            b1,
            w2,
            b2,
        })
    }

    /// All-zero parameters.
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        MlpModel {
            inputs,
            hidden,
            outputs,
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; outputs * hidden],
            b2: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden_count(&self) -> usize {
        self.hidden
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Flattened parameters in the order `w1, b1, w2, b2`.
    pub fn parameters(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(WdneError::Shape {
                context: "MlpModel::set_parameters",
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let (a, rest) = params.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.b1.len());
        let (c, d) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2.copy_from_slice(d);
        Ok(())
    }

    /// First-layer weight `w1[hidden_unit][input]`.
    pub fn input_weight(&self, hidden_unit: usize, input: usize) -> f64 {
        self.w1[hidden_unit * self.inputs + input]
    }

    /// Copy whose first-layer column `i` is multiplied by `scale[i]`, so that
    /// `forward(scaled, x) == forward(self, scale ⊙ x)`.
    pub fn scale_inputs(&self, scale: &[f64]) -> Result<MlpModel> {
        self.check_input(scale)?;
        let mut out = self.clone();
        for row in out.w1.chunks_mut(self.inputs) {
            for (w, s) in row.iter_mut().zip(scale) {
                *w *= s;
            }
        }
        Ok(out)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.inputs {
            return Err(WdneError::Shape {
                context: "MlpModel input",
                expected: self.inputs,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn forward_into(&self, x: &[f64], s: &mut Scratch) {
        for (j, h) in s.hidden.iter_mut().enumerate() {
            let row = &self.w1[j * self.inputs..(j + 1) * self.inputs];
            let z: f64 = self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *h = sigmoid(z);
        }
        for (k, o) in s.output.iter_mut().enumerate() {
            let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
            *o = self.b2[k] + row.iter().zip(&s.hidden).map(|(w, v)| w * v).sum::<f64>();
        }
        // logits -> probabilities; returns log-sum-exp via the max shift
        let max = s.output.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut sum = 0.0;
        for o in s.output.iter_mut() {
            *o = (*o - max).exp();
            sum += *o;
        }
        for o in s.output.iter_mut() {
            *o /= sum;
        }
    }

    /// Class probabilities.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut s = Scratch::for_model(self);
        self.forward_into(x, &mut s);
        Ok(s.output)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Cross-entropy of one example.
    pub fn loss(&self, x: &[f64], label: usize) -> Result<f64> {
        let p = self.forward(x)?;
        Ok(-p[label].ln())
    }

    fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.outputs {
            return Err(WdneError::Shape {
                context: "MlpModel label",
                expected: self.outputs,
                got: label,
            });
        }
        Ok(())
    }

    /// Backpropagated gradient of the cross-entropy for one example.
    pub fn gradient(&self, x: &[f64], label: usize) -> Result<Gradient> {
        self.check_input(x)?;
        self.check_label(label)?;
        let mut s = Scratch::for_model(self);
        self.forward_into(x, &mut s);
        let loss = -s.output[label].ln();

        let (n, h, m) = (self.inputs, self.hidden, self.outputs);
        let mut g = vec![0.0; self.param_count()];
        let (gw1, rest) = g.split_at_mut(h * n);
        let (gb1, rest) = rest.split_at_mut(h);
        let (gw2, gb2) = rest.split_at_mut(m * h);

        s.d_hidden.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..m {
            let dz = s.output[k] - if k == label { 1.0 } else { 0.0 };
            gb2[k] = dz;
            for j in 0..h {
                gw2[k * h + j] = dz * s.hidden[j];
                s.d_hidden[j] += dz * self.w2[k * h + j];
            }
        }
        for j in 0..h {
            let dz = s.d_hidden[j] * s.hidden[j] * (1.0 - s.hidden[j]);
            gb1[j] = dz;
            for i in 0..n {
                gw1[j * n + i] = dz * x[i];
            }
        }
        Ok(Gradient { loss, values: g })
    }

    /// One SGD update on a single example; returns the pre-update loss.
    fn sgd_step(&mut self, x: &[f64], label: usize, lr: f64, s: &mut Scratch) -> f64 {
        self.forward_into(x, s);
        let loss = -s.output[label].ln();
        let (n, h) = (self.inputs, self.hidden);

        s.d_hidden.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.outputs {
            let dz = s.output[k] - if k == label { 1.0 } else { 0.0 };
            let row = &mut self.w2[k * h..(k + 1) * h];
            for j in 0..h {
                s.d_hidden[j] += dz * row[j];
                row[j] -= lr * dz * s.hidden[j];
            }
            self.b2[k] -= lr * dz;
        }
        for j in 0..h {
            let dz = s.d_hidden[j] * s.hidden[j] * (1.0 - s.hidden[j]);
            let row = &mut self.w1[j * n..(j + 1) * n];
            for (w, xi) in row.iter_mut().zip(x) {
                *w -= lr * dz * xi;
            }
            self.b1[j] -= lr * dz;
        }
        loss
    }

    /// Fraction of rows classified correctly; 0 for an empty table.
    pub fn accuracy(&self, table: &DataTable) -> Result<f64> {
        if table.is_empty() {
            return Ok(0.0);
        }
        self.check_input(table.features().row(0))?;
        let mut s = Scratch::for_model(self);
        let correct = table
            .features()
            .row_iter()
            .zip(table.labels())
            .filter(|(x, &y)| {
                self.forward_into(x, &mut s);
                argmax(&s.output) == y
            })
            .count();
        Ok(correct as f64 / table.len() as f64)
    }
}

/// Per-epoch record of a training run. Index 0 is the untrained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub validation_accuracy: Vec<f64>,
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn epochs_run(&self) -> usize {
        self.validation_accuracy.len() - 1
    }

    pub fn best_validation_accuracy(&self) -> f64 {
        self.validation_accuracy[self.best_epoch]
    }
}

fn check_table(model: &MlpModel, table: &DataTable, what: &str) -> Result<()> {
    if table.is_empty() {
        return Err(WdneError::Precondition(format!("{what} set is empty")));
    }
    if table.feature_count() != model.inputs {
        return Err(WdneError::Shape {
            context: "train: feature count",
            expected: model.inputs,
            got: table.feature_count(),
        });
    }
    if let Some(&l) = table.labels().iter().find(|&&l| l >= model.outputs) {
        return Err(WdneError::Shape {
            context: "train: label",
            expected: model.outputs,
            got: l,
        });
    }
    Ok(())
}

/// Trains from `model` and returns the snapshot with the best validation accuracy.
///
/// Stops after `max_epochs`, or once `patience` consecutive epochs fail to
/// improve on the best validation accuracy (so `patience = 0` returns `model`).
pub fn train(
    model: MlpModel,
    train: &DataTable,
    validation: &DataTable,
    config: &MlpConfig,
) -> Result<(MlpModel, TrainHistory)> {
    check_table(&model, train, "training")?;
    check_table(&model, validation, "validation")?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, SHUFFLE_STREAM));
    let mut scratch = Scratch::for_model(&model);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let initial_loss = train
        .features()
        .row_iter()
        .zip(train.labels())
        .map(|(x, &y)| {
            model.forward_into(x, &mut scratch);
            -scratch.output[y].ln()
        })
        .sum::<f64>()
        / train.len() as f64;

    let mut history = TrainHistory {
        train_loss: vec![initial_loss],
        validation_accuracy: vec![model.accuracy(validation)?],
        best_epoch: 0,
    };
    let mut best = model.clone();
    let mut current = model;
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        if stale >= config.patience {
            break;
        }
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            total += current.sgd_step(
                train.features().row(i),
                train.labels()[i],
                config.learning_rate,
                &mut scratch,
            );
        }
        let loss = total / train.len() as f64;
        if !loss.is_finite() || current.w1.iter().any(|w| !w.is_finite()) {
            return Err(WdneError::Divergence {
                epoch,
                learning_rate: config.learning_rate,
            });
        }
        let acc = current.accuracy(validation)?;
        history.train_loss.push(loss);
        history.validation_accuracy.push(acc);

        if acc > history.best_validation_accuracy() {
            history.best_epoch = epoch;
            best = current.clone();
            stale = 0;
        } else {
            stale += 1;
        }
    }
    Ok((best, history))
}
