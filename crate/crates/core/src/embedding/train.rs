use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;

use super::walk::{for_each_pair, pair_count};
use super::{EmbeddingModel, TrainConfig, TrainMode, WalkConfig, WalkCorpus};
use crate::error::{Error, Result};
use crate::graph::Adjacency;
use crate::rng::{rng_for, Rng};

const INIT_STREAM: u64 = 0x1417;
const TRAIN_STREAM: u64 = 0x7A1;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Softmax over all nodes of the scores `f(v) . f(u)`, using the input vectors.
fn softmax_row(model: &EmbeddingModel, u: u32) -> Result<Vec<f64>> {
    let fu = model.vector(u);
    let scores: Vec<f64> = (0..model.node_count() as u32)
        .map(|v| dot(model.vector(v), fu))
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numeric(format!("non-finite score for node {u}")));
    }
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    Ok(exp.into_iter().map(|e| e / z).collect())
}

/// `exp(f(n_i) . f(u)) / sum_v exp(f(v) . f(u))` over the input vectors.
pub fn softmax_probability(model: &EmbeddingModel, n_i: u32, u: u32) -> Result<f64> {
    Ok(softmax_row(model, u)?[n_i as usize])
}

fn group_by_source(pairs: &[(u32, u32)]) -> BTreeMap<u32, BTreeMap<u32, usize>> {
    let mut grouped: BTreeMap<u32, BTreeMap<u32, usize>> = BTreeMap::new();
    for &(u, n) in pairs {
        *grouped.entry(u).or_default().entry(n).or_default() += 1;
    }
    grouped
}

/// Sum of log softmax probabilities over `(u, n_i)` pairs.
pub fn objective(model: &EmbeddingModel, pairs: &[(u32, u32)]) -> Result<f64> {
    let mut total = 0.0;
    for (u, contexts) in group_by_source(pairs) {
        let fu = model.vector(u);
        let scores: Vec<f64> = (0..model.node_count() as u32)
            .map(|v| dot(model.vector(v), fu))
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Numeric(format!("non-finite score for node {u}")));
        }
        let log_z = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        for (n, count) in contexts {
            total += count as f64 * (scores[n as usize] - log_z);
        }
    }
    Ok(total)
}

/// Gradient of [`objective`] with respect to every input vector entry,
/// row-major like the model. Pairs with `u == n_i` are handled.
pub fn objective_gradient(model: &EmbeddingModel, pairs: &[(u32, u32)]) -> Result<Vec<f64>> {
    let (n, dim) = (model.node_count(), model.dim());
    let mut grad = vec![0.0; n * dim];
    for (u, contexts) in group_by_source(pairs) {
        let probs = softmax_row(model, u)?;
        let weight: usize = contexts.values().sum();
        let fu = model.vector(u).to_vec();
        let ui = u as usize * dim;
        for (&c, &count) in &contexts {
            let fc = model.vector(c);
            for k in 0..dim {
                grad[ui + k] += count as f64 * fc[k];
            }
            let ci = c as usize * dim;
            for k in 0..dim {
                grad[ci + k] += count as f64 * fu[k];
            }
        }
        for (v, &pv) in probs.iter().enumerate() {
            let fv = model.vector(v as u32);
            let w = weight as f64 * pv;
            for k in 0..dim {
                grad[ui + k] -= w * fv[k];
                grad[v * dim + k] -= w * fu[k];
            }
        }
    }
    Ok(grad)
}

/// Draws negative examples with probability proportional to corpus frequency^0.75.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    dist: WeightedIndex<f64>,
    probabilities: Vec<f64>,
}

impl NoiseSampler {
    pub fn from_frequencies(freq: &[u64]) -> Result<Self> {
        let weights: Vec<f64> = freq.iter().map(|&f| (f as f64).powf(0.75)).collect();
        let total: f64 = weights.iter().sum();
        let dist = WeightedIndex::new(&weights)
            .map_err(|e| Error::Domain(format!("cannot build noise distribution: {e}")))?;
        Ok(NoiseSampler {
            dist,
            probabilities: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn from_corpus(corpus: &WalkCorpus, n: usize) -> Result<Self> {
        Self::from_frequencies(&corpus.node_frequencies(n))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sample(&self, rng: &mut Rng) -> u32 {
        self.dist.sample(rng) as u32
    }
}

fn learning_rate(config: &TrainConfig, step: usize, total: usize) -> f64 {
    if total <= 1 {
        return config.lr_initial;
    }
    let frac = step as f64 / (total - 1) as f64;
    config.lr_initial - (config.lr_initial - config.lr_final) * frac
}

fn initialize(n: usize, config: &TrainConfig) -> Vec<f64> {
    let mut rng = rng_for(config.seed, &[INIT_STREAM]);
    let half = 0.5 / config.dim as f64;
    (0..n * config.dim)
        .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * half)
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Trains node vectors on the walk corpus. The graph supplies the node count.
///
/// Exact mode takes one full-batch ascent step per epoch on the mean
/// log-likelihood of all pairs. Negative-sampling mode makes one logistic
/// update per positive pair in corpus order. In both modes the learning rate
/// falls linearly from `lr_initial` to `lr_final` over all updates.
pub fn train(
    corpus: &WalkCorpus,
    graph: &Adjacency,
    config: &TrainConfig,
    walk: &WalkConfig,
) -> Result<EmbeddingModel> {
    config.validate()?;
    let n = graph.node_count();
    if corpus.walks.is_empty() || corpus.token_count() == 0 {
        return Err(Error::Domain("cannot train on an empty corpus".into()));
    }
    if let Some(&bad) = corpus.walks.iter().flatten().find(|&&v| v as usize >= n) {
        return Err(Error::Domain(format!(
            "corpus node {bad} outside graph of {n} nodes"
        )));
    }
    let input = initialize(n, config);
    match config.mode {
        TrainMode::ExactSoftmax => {
            let mut model = EmbeddingModel::from_rows(n, config.dim, input, None)?;
            let pairs = super::neighborhood_pairs(corpus, walk.window);
            if pairs.is_empty() {
                return Ok(model);
            }
            let scale = 1.0 / pairs.len() as f64;
            for epoch in 0..config.epochs {
                let lr = learning_rate(config, epoch, config.epochs);
                let grad = objective_gradient(&model, &pairs)?;
                for (x, g) in model.input_matrix_mut().iter_mut().zip(grad) {
                    *x += lr * scale * g;
                }
                if model.check_finite().is_err() {
                    return Err(Error::Numeric(format!(
                        "diverged in epoch {epoch} after pair {} (full batch)",
                        pairs.len() - 1
                    )));
                }
            }
            Ok(model)
        }
        TrainMode::NegativeSampling => {
            let context = vec![0.0; n * config.dim];
            let mut model = EmbeddingModel::from_rows(n, config.dim, input, Some(context))?;
            train_negative_sampling(&mut model, corpus, config, walk.window)?;
            Ok(model)
        }
    }
}

fn train_negative_sampling(
    model: &mut EmbeddingModel,
    corpus: &WalkCorpus,
    config: &TrainConfig,
    window: usize,
) -> Result<()> {
    let dim = config.dim;
    let noise = NoiseSampler::from_corpus(corpus, model.node_count())?;
    let per_epoch = pair_count(corpus, window);
    let total = per_epoch * config.epochs;
    let mut rng = rng_for(config.seed, &[TRAIN_STREAM]);
    let (input, context) = model.parts_mut();
    let context = context.expect("negative sampling uses a context matrix");
    let mut err = vec![0.0; dim];
    let mut step = 0usize;
    let mut failure = None;

    for epoch in 0..config.epochs {
        let mut index = 0usize;
        for_each_pair(corpus, window, |u, c| {
            if failure.is_some() {
                return;
            }
            let lr = learning_rate(config, step, total);
            step += 1;
            err.fill(0.0);
            let ui = u as usize * dim;
            for k in 0..=config.negatives {
                let (target, label) = if k == 0 {
                    (c, 1.0)
                } else {
                    let t = noise.sample(&mut rng);
                    if t == c {
                        continue;
                    }
                    (t, 0.0)
                };
                let ti = target as usize * dim;
                let f = dot(&input[ui..ui + dim], &context[ti..ti + dim]);
                let g = lr * (label - sigmoid(f));
                for d in 0..dim {
                    err[d] += g * context[ti + d];
                    context[ti + d] += g * input[ui + d];
                }
            }
            for d in 0..dim {
                input[ui + d] += err[d];
            }
            if input[ui..ui + dim].iter().any(|x| !x.is_finite()) {
                failure = Some(index);
            }
            index += 1;
        });
        if let Some(pair) = failure {
            return Err(Error::Numeric(format!(
                "diverged in epoch {epoch} at pair {pair}"
            )));
        }
    }
    Ok(())
}
