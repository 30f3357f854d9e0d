//! Metrics, cross-validation, grid search, and paired significance tests.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{apply_minmax, fit_minmax};
use crate::error::{Error, Result};
use crate::granulation::{generate_balls, LabeledDataset};
use crate::kernels::KernelSpec;
use crate::multiclass::{
    class_scores, predict, train, train_gb_from_balls, GranulationSettings, ModelKind,
    TrainConfig, TrainedModel,
};
use crate::twinpair::HyperParams;

/// Cross-validation outcome for one configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Sample standard deviation across folds (n-1 denominator).
    pub std_accuracy: f64,
    pub macro_auc: Option<f64>,
    /// Mean per-fold training wall time.
    pub train_time_seconds: f64,
    pub chosen_params: ChosenParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChosenParams {
    pub mode: ModelKind,
    pub hyperparams: HyperParams,
    pub granulation: Option<GranulationSettings>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    PairedT,
    Wilcoxon,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub kind: TestKind,
}

/// Percentage of matching entries.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions vs {} truths",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput("accuracy of empty prediction list".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(100.0 * hits as f64 / pred.len() as f64)
}

fn class_indices(data: &LabeledDataset) -> Vec<(usize, Vec<usize>)> {
    let mut by_class: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, &l) in data.labels.iter().enumerate() {
        match by_class.iter_mut().find(|(c, _)| *c == l) {
            Some((_, v)) => v.push(i),
            None => by_class.push((l, vec![i])),
        }
    }
    by_class.sort_by_key(|(c, _)| *c);
    by_class
}

/// Class-proportion-preserving train/test split. Per-class train counts
/// land within one of `train_fraction * class size`.
pub fn stratified_split(
    data: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (class, mut idx) in class_indices(data) {
        if idx.len() < 2 {
            return Err(Error::ClassTooSmall {
                class,
                count: idx.len(),
                needed: 2,
            });
        }
        idx.shuffle(&mut rng);
        let n_train = ((train_fraction * idx.len() as f64).round() as usize)
            .clamp(1, idx.len() - 1);
        train_idx.extend_from_slice(&idx[..n_train]);
        test_idx.extend_from_slice(&idx[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((data.subset(&train_idx), data.subset(&test_idx)))
}

/// Stratified fold assignment: per class, shuffled indices are dealt
/// round-robin over the k folds.
pub fn stratified_folds(data: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k = {k} folds")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    for (class, mut idx) in class_indices(data) {
        if idx.len() < k {
            return Err(Error::ClassTooSmall {
                class,
                count: idx.len(),
                needed: k,
            });
        }
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            folds[j % k].push(i);
        }
    }
    for f in folds.iter_mut() {
        f.sort_unstable();
    }
    Ok(folds)
}

/// k-fold stratified cross-validation of an arbitrary trainer.
pub fn kfold_cv(
    data: &LabeledDataset,
    k: usize,
    trainer: &(dyn Fn(&LabeledDataset) -> Result<TrainedModel> + Sync),
    seed: u64,
    chosen: ChosenParams,
) -> Result<EvalReport> {
    let folds = stratified_folds(data, k, seed)?;
    let mut per_fold = Vec::with_capacity(k);
    let mut fold_aucs: Vec<Option<f64>> = Vec::with_capacity(k);
    let mut total_time = 0.0;
    for held_out in 0..k {
        let train_idx: Vec<usize> = (0..k)
            .filter(|f| *f != held_out)
            .flat_map(|f| folds[f].iter().copied())
            .collect();
        let train_set = data.subset(&train_idx);
        let test_set = data.subset(&folds[held_out]);

        let t0 = Instant::now();
        let model = trainer(&train_set)?;
        total_time += t0.elapsed().as_secs_f64();

        let pred = predict(&model, &test_set.features)?;
        per_fold.push(accuracy(&pred, &test_set.labels)?);

        let scores: Vec<Vec<f64>> = (0..test_set.len())
            .map(|i| class_scores(&model, test_set.features.row(i)))
            .collect::<Result<_>>()?;
        let truth_cols: Vec<usize> = test_set
            .labels
            .iter()
            .map(|l| model.classes.iter().position(|c| c == l).unwrap_or(usize::MAX))
            .collect();
        fold_aucs.push(macro_ovr_auc(&scores, &truth_cols).ok());
    }

    let mean = per_fold.iter().sum::<f64>() / per_fold.len() as f64;
    let std = sample_std(&per_fold);
    let defined: Vec<f64> = fold_aucs.iter().flatten().copied().collect();
    let macro_auc = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    Ok(EvalReport {
        per_fold_accuracy: per_fold,
        mean_accuracy: mean,
        std_accuracy: std,
        macro_auc,
        train_time_seconds: total_time / k as f64,
        chosen_params: chosen,
    })
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

/// Hyperparameter and granulation grids for exhaustive search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    /// Values for the focal-side penalties (c1 = c3).
    pub c_focal: Vec<f64>,
    /// Values for the rest-side penalties (c2 = c4).
    pub c_rest: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub kernels: Vec<KernelSpec>,
    /// Minimum ball member counts (GB mode only).
    pub num: Vec<usize>,
    /// Purity thresholds (GB mode only).
    pub pur: Vec<f64>,
    pub delta: f64,
    /// Use ||w||-normalized distances in the pairwise tie-break.
    #[serde(default)]
    pub normalize_distance: bool,
}

impl GridSpec {
    pub fn validate(&self, mode: ModelKind) -> Result<()> {
        if self.c_focal.is_empty()
            || self.c_rest.is_empty()
            || self.epsilon.is_empty()
            || self.kernels.is_empty()
        {
            return Err(Error::EmptyInput("empty hyperparameter grid".into()));
        }
        if mode == ModelKind::GbTwksvc && (self.num.is_empty() || self.pur.is_empty()) {
            return Err(Error::EmptyInput("empty granulation grid".into()));
        }
        Ok(())
    }

    fn hyper_combos(&self) -> Vec<HyperParams> {
        let mut out = Vec::new();
        for &cf in &self.c_focal {
            for &cr in &self.c_rest {
                for &eps in &self.epsilon {
                    for &kernel in &self.kernels {
                        out.push(HyperParams {
                            c1: cf,
                            c2: cr,
                            c3: cf,
                            c4: cr,
                            epsilon: eps,
                            delta: self.delta,
                            kernel,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridOutcome {
    pub best: ChosenParams,
    pub best_mean_accuracy: f64,
    pub report: EvalReport,
}

/// Exhaustive grid search by mean CV accuracy. Granular balls are built
/// once per (num, pur, fold) and reused across the inner hyperparameter
/// grid; ties break in grid order; configurations that fail to train
/// score zero.
pub fn grid_search(
    data: &LabeledDataset,
    grids: &GridSpec,
    mode: ModelKind,
    folds: usize,
    seed: u64,
) -> Result<GridOutcome> {
    grids.validate(mode)?;
    let fold_idx = stratified_folds(data, folds, seed)?;

    struct FoldData {
        train: LabeledDataset,
        test: LabeledDataset,
    }
    let fold_data: Vec<FoldData> = (0..folds)
        .map(|held| {
            let train_idx: Vec<usize> = (0..folds)
                .filter(|f| *f != held)
                .flat_map(|f| fold_idx[f].iter().copied())
                .collect();
            FoldData {
                train: data.subset(&train_idx),
                test: data.subset(&fold_idx[held]),
            }
        })
        .collect();

    let hyper = grids.hyper_combos();
    let mut best: Option<(f64, ChosenParams)> = None;
    let consider = |mean: f64, params: ChosenParams, best: &mut Option<(f64, ChosenParams)>| {
        let better = match best {
            None => true,
            Some((b, _)) => mean > *b,
        };
        if better {
            *best = Some((mean, params));
        }
    };

    let eval_fold = |model: Result<TrainedModel>, fold: &FoldData| -> f64 {
        match model.and_then(|m| predict(&m, &fold.test.features)) {
            Ok(pred) => accuracy(&pred, &fold.test.labels).unwrap_or(0.0),
            Err(e) => {
                log::warn!("configuration failed on a fold: {e}");
                0.0
            }
        }
    };

    match mode {
        ModelKind::GbTwksvc => {
            for &num in &grids.num {
                for &pur in &grids.pur {
                    let gran = GranulationSettings {
                        theta: pur,
                        min_points: num,
                        seed,
                    };
                    // build balls once per fold for this (num, pur) cell
                    let cached: Vec<Option<(Vec<(f64, f64)>, crate::granulation::BallSet)>> =
                        fold_data
                            .par_iter()
                            .map(|fold| {
                                let norm = fit_minmax(&fold.train.features);
                                let normalized = apply_minmax(&fold.train.features, &norm).ok()?;
                                let nd = LabeledDataset::new(normalized, fold.train.labels.clone())
                                    .ok()?;
                                match generate_balls(&nd, pur, num, seed) {
                                    Ok(balls) => Some((norm, balls)),
                                    Err(e) => {
                                        log::warn!("granulation (num={num}, pur={pur}) failed: {e}");
                                        None
                                    }
                                }
                            })
                            .collect();
                    let means: Vec<f64> = hyper
                        .par_iter()
                        .map(|hp| {
                            let accs: Vec<f64> = fold_data
                                .iter()
                                .zip(&cached)
                                .map(|(fold, cache)| match cache {
                                    Some((norm, balls)) => eval_fold(
                                        train_gb_from_balls(
                                            balls,
                                            norm.clone(),
                                            hp,
                                            gran,
                                            grids.normalize_distance,
                                        ),
                                        fold,
                                    ),
                                    None => 0.0,
                                })
                                .collect();
                            accs.iter().sum::<f64>() / accs.len() as f64
                        })
                        .collect();
                    for (hp, mean) in hyper.iter().zip(means) {
                        consider(
                            mean,
                            ChosenParams {
                                mode,
                                hyperparams: *hp,
                                granulation: Some(gran),
                            },
                            &mut best,
                        );
                    }
                }
            }
        }
        ModelKind::TwinKsvc | ModelKind::OvrTsvm => {
            let means: Vec<f64> = hyper
                .par_iter()
                .map(|hp| {
                    let cfg = TrainConfig {
                        mode,
                        hp: *hp,
                        granulation: None,
                        normalize_distance: grids.normalize_distance,
                    };
                    let accs: Vec<f64> = fold_data
                        .iter()
                        .map(|fold| eval_fold(train(&fold.train, &cfg), fold))
                        .collect();
                    accs.iter().sum::<f64>() / accs.len() as f64
                })
                .collect();
            for (hp, mean) in hyper.iter().zip(means) {
                consider(
                    mean,
                    ChosenParams {
                        mode,
                        hyperparams: *hp,
                        granulation: None,
                    },
                    &mut best,
                );
            }
        }
    }

    let (best_mean, chosen) = best.expect("grids validated nonempty");
    let cfg = TrainConfig {
        mode: chosen.mode,
        hp: chosen.hyperparams,
        granulation: chosen.granulation,
        normalize_distance: grids.normalize_distance,
    };
    let report = kfold_cv(data, folds, &|d| train(d, &cfg), seed, chosen.clone())?;
    Ok(GridOutcome {
        best: chosen,
        best_mean_accuracy: best_mean,
        report,
    })
}

/// (num, pur, mean CV accuracy) surface at fixed hyperparameters.
pub fn sensitivity_grid(
    data: &LabeledDataset,
    hp: &HyperParams,
    num: &[usize],
    pur: &[f64],
    folds: usize,
    seed: u64,
) -> Result<Vec<(usize, f64, f64)>> {
    let mut out = Vec::new();
    for &n in num {
        for &p in pur {
            let cfg = TrainConfig {
                mode: ModelKind::GbTwksvc,
                hp: *hp,
                granulation: Some(GranulationSettings {
                    theta: p,
                    min_points: n,
                    seed,
                }),
                normalize_distance: false,
            };
            let mean = match kfold_cv(
                data,
                folds,
                &|d| train(d, &cfg),
                seed,
                ChosenParams {
                    mode: ModelKind::GbTwksvc,
                    hyperparams: *hp,
                    granulation: cfg.granulation,
                },
            ) {
                Ok(r) => r.mean_accuracy,
                Err(e) => {
                    log::warn!("sensitivity cell (num={n}, pur={p}) failed: {e}");
                    0.0
                }
            };
            out.push((n, p, mean));
        }
    }
    Ok(out)
}

/// Macro-averaged one-vs-rest rank AUC (percentage). `truth` holds column
/// indices into each score row; every column must appear in `truth`.
pub fn macro_ovr_auc(scores: &[Vec<f64>], truth: &[usize]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("AUC of empty score set".into()));
    }
    let k = scores[0].len();
    if k < 2 {
        return Err(Error::InvalidParameter("AUC needs at least 2 classes".into()));
    }
    for class in 0..k {
        if !truth.contains(&class) {
            return Err(Error::UndefinedAuc(class));
        }
    }
    let mut total = 0.0;
    for class in 0..k {
        let pos: Vec<f64> = scores
            .iter()
            .zip(truth)
            .filter(|(_, t)| **t == class)
            .map(|(s, _)| s[class])
            .collect();
        let neg: Vec<f64> = scores
            .iter()
            .zip(truth)
            .filter(|(_, t)| **t != class)
            .map(|(s, _)| s[class])
            .collect();
        if pos.is_empty() || neg.is_empty() {
            return Err(Error::UndefinedAuc(class));
        }
        let mut wins = 0.0;
        for p in &pos {
            for n in &neg {
                wins += if p > n {
                    1.0
                } else if p == n {
                    0.5
                } else {
                    0.0
                };
            }
        }
        total += wins / (pos.len() as f64 * neg.len() as f64);
    }
    Ok(100.0 * total / k as f64)
}

/// Two-sided paired Student t-test. Sample standard deviation uses the
/// n-1 denominator; the p-value comes from the regularized incomplete
/// beta evaluation of the t CDF.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "paired test on {} vs {} values",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::EmptyInput("paired t-test needs n >= 2".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let sd = sample_std(&d);
    if sd == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let t = mean / (sd / (n as f64).sqrt());
    let df = (n - 1) as f64;
    let p = reg_inc_beta(df / 2.0, 0.5, df / (df + t * t));
    Ok(TestResult {
        statistic: t,
        p_value: p.clamp(0.0, 1.0),
        kind: TestKind::PairedT,
    })
}

/// Two-sided Wilcoxon signed-rank test. Zero differences are dropped and
/// tied magnitudes receive average ranks. The p-value is exact (full
/// enumeration of sign patterns) for n <= 25, normal-approximated above.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "paired test on {} vs {} values",
            a.len(),
            b.len()
        )));
    }
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|v| *v != 0.0)
        .collect();
    if d.is_empty() {
        return Err(Error::AllZeroDifferences);
    }
    let n = d.len();
    // average ranks over |d|
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && d[order[j]].abs() == d[order[i]].abs() {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    let w_plus: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total: f64 = ranks.iter().sum();
    let w_minus = total - w_plus;
    let w = w_plus.min(w_minus);

    let p = if n <= 25 {
        exact_wilcoxon_p(&ranks, w)
    } else {
        // normal approximation with continuity correction
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
        let z = (w - mean + 0.5) / var.sqrt();
        (2.0 * normal_cdf(z)).min(1.0)
    };
    Ok(TestResult {
        statistic: w,
        p_value: p,
        kind: TestKind::Wilcoxon,
    })
}

/// Exact two-sided p: 2 * P(rank sum <= w) over all 2^n sign patterns,
/// computed by dynamic programming over doubled (integer) ranks.
fn exact_wilcoxon_p(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut ways = vec![0.0f64; total + 1];
    ways[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            ways[s] += ways[s - r];
        }
    }
    let limit = ((2.0 * w) + 1e-9).floor() as usize;
    let count: f64 = ways[..=limit.min(total)].iter().sum();
    let p = 2.0 * count / 2f64.powi(ranks.len() as i32);
    p.min(1.0)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc_approx(-z / std::f64::consts::SQRT_2)
}

fn erfc_approx(x: f64) -> f64 {
    // Numerical-recipes-style rational Chebyshev fit, |error| < 1.2e-7
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation (g = 5, n = 6)
    const COEF: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5 - (x + 0.5) * (x + 5.5).ln();
    let mut ser = 1.000000000190015;
    for c in COEF {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Regularized incomplete beta I_x(a, b) by Lentz continued fraction.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    // the nine benchmark mean accuracies of the three models
    pub const ACC_GB: [f64; 9] = [
        89.58, 90.74, 91.04, 76.74, 52.44, 99.34, 90.13, 97.61, 74.38,
    ];
    pub const ACC_TKSVC: [f64; 9] = [
        87.72, 84.34, 88.66, 69.99, 54.13, 97.31, 89.01, 93.81, 67.33,
    ];
    pub const ACC_TSVM: [f64; 9] = [
        84.88, 69.73, 80.68, 62.45, 51.17, 95.33, 77.03, 89.98, 64.67,
    ];

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&[1, 2], &[1, 2]).unwrap(), 100.0);
        assert_eq!(accuracy(&[1, 2], &[2, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 1, 1, 2], &[1, 1, 1, 1]).unwrap(), 75.0);
        assert!(accuracy(&[], &[]).is_err());
    }

    fn balanced_dataset(n_per_class: usize, k: usize) -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..k {
            for i in 0..n_per_class {
                rows.push(vec![c as f64 * 10.0 + (i % 7) as f64 * 0.1, i as f64 * 0.01]);
                labels.push(c);
            }
        }
        LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn stratified_split_balanced() {
        let data = balanced_dataset(50, 2);
        let (train, test) = stratified_split(&data, 0.8, 1).unwrap();
        for c in 0..2 {
            assert_eq!(train.labels.iter().filter(|l| **l == c).count(), 40);
            assert_eq!(test.labels.iter().filter(|l| **l == c).count(), 10);
        }
    }

    #[test]
    fn stratified_split_skewed_within_one() {
        // 46.8 / 46.8 / 7.84-style imbalance
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, n) in [(0usize, 293usize), (1, 288), (2, 49)] {
            for i in 0..n {
                rows.push(vec![c as f64, i as f64]);
                labels.push(c);
            }
        }
        let data = LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap();
        let (train, _) = stratified_split(&data, 0.8, 3).unwrap();
        for (c, n) in [(0usize, 293usize), (1, 288), (2, 49)] {
            let got = train.labels.iter().filter(|l| **l == c).count() as f64;
            assert!((got - 0.8 * n as f64).abs() <= 1.0, "class {c}: {got}");
        }
    }

    #[test]
    fn split_rejects_tiny_class() {
        let data = LabeledDataset::new(
            Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap(),
            vec![0, 0, 1],
        )
        .unwrap();
        assert!(matches!(
            stratified_split(&data, 0.8, 0),
            Err(Error::ClassTooSmall { class: 1, .. })
        ));
    }

    #[test]
    fn folds_are_stratified_and_deterministic() {
        let data = balanced_dataset(20, 3);
        let f1 = stratified_folds(&data, 5, 9).unwrap();
        let f2 = stratified_folds(&data, 5, 9).unwrap();
        assert_eq!(f1, f2);
        for fold in &f1 {
            for c in 0..3 {
                assert_eq!(
                    fold.iter().filter(|&&i| data.labels[i] == c).count(),
                    4,
                    "stratification broken"
                );
            }
        }
    }

    #[test]
    fn auc_perfect_and_constant() {
        // perfectly ordered scores
        let scores = vec![
            vec![2.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 2.0],
            vec![0.0, 2.0],
        ];
        let truth = vec![0, 0, 1, 1];
        assert!((macro_ovr_auc(&scores, &truth).unwrap() - 100.0).abs() < 1e-12);
        // all ties
        let flat = vec![vec![1.0, 1.0]; 4];
        assert!((macro_ovr_auc(&flat, &truth).unwrap() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn auc_single_inversion_hand_value() {
        // 4 points, class 0 scores 3,1 vs class-rest scores 2,0:
        // pairs (3>2, 3>0, 1<2, 1>0) -> 3/4 wins = 75; the mirrored
        // class-1 column: scores for class1: pos 2,0 neg 3,1 ->
        // (2<3,2>1,0<3,0<1) -> 1/4
        let scores = vec![
            vec![3.0, 0.0],
            vec![1.0, 2.0],
            vec![2.0, 3.0],
            vec![0.0, 1.0],
        ];
        let truth = vec![0, 0, 1, 1];
        // class 0: pos {3,1}, neg {2,0} -> 3/4; class 1: pos {3,1} neg {0,2} -> 3/4
        let auc = macro_ovr_auc(&scores, &truth).unwrap();
        assert!((auc - 75.0).abs() < 1e-9, "auc {auc}");
        let scores = vec![
            vec![4.0, 0.0],
            vec![3.0, 0.0],
            vec![1.5, 0.0],
            vec![2.0, 0.0],
        ];
        let truth = vec![0, 0, 0, 1];
        // class 0: pos {4,3,1.5} vs neg {2}: wins 1+1+0 = 2/3
        let got = macro_ovr_auc(&scores, &truth).unwrap();
        let class0 = 2.0 / 3.0;
        // class 1 column is constant 0 -> all ties -> 1/2
        let expect = 100.0 * (class0 + 0.5) / 2.0;
        assert!((got - expect).abs() < 1e-9, "got {got} expect {expect}");
    }

    #[test]
    fn auc_undefined_when_class_absent() {
        let scores = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(
            macro_ovr_auc(&scores, &[0, 0]),
            Err(Error::UndefinedAuc(1))
        ));
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let scores = vec![
            vec![3.0, 1.0],
            vec![1.0, 2.0],
            vec![2.0, 3.0],
            vec![0.5, 1.5],
        ];
        let truth = vec![0, 1, 1, 0];
        let base = macro_ovr_auc(&scores, &truth).unwrap();
        let transformed: Vec<Vec<f64>> = scores
            .iter()
            .map(|r| r.iter().map(|v| (3.0 * v + 1.0).exp()).collect())
            .collect();
        let t = macro_ovr_auc(&transformed, &truth).unwrap();
        assert!((base - t).abs() < 1e-9);
    }

    #[test]
    fn t_test_reference_values() {
        let r = paired_t_test(&ACC_GB, &ACC_TKSVC).unwrap();
        assert!((r.statistic - 3.347).abs() < 0.005, "t {}", r.statistic);
        assert!((r.p_value - 0.0101).abs() < 0.0005, "p {}", r.p_value);
        let r = paired_t_test(&ACC_GB, &ACC_TSVM).unwrap();
        assert!((r.statistic - 4.737).abs() < 0.005);
        assert!((r.p_value - 0.0015).abs() < 0.0005);
        let r = paired_t_test(&ACC_TKSVC, &ACC_TSVM).unwrap();
        assert!((r.statistic - 4.116).abs() < 0.005);
        assert!((r.p_value - 0.0034).abs() < 0.0005);
    }

    #[test]
    fn t_test_antisymmetric_and_degenerate() {
        let a = [1.0, 2.0, 3.0, 7.0];
        let b = [0.5, 2.5, 2.0, 3.0];
        let f = paired_t_test(&a, &b).unwrap();
        let r = paired_t_test(&b, &a).unwrap();
        assert!((f.statistic + r.statistic).abs() < 1e-12);
        assert!((f.p_value - r.p_value).abs() < 1e-12);
        let shifted: Vec<f64> = (0..9).map(|i| i as f64 + 1.0).collect();
        let base: Vec<f64> = (0..9).map(|i| i as f64).collect();
        assert!(matches!(
            paired_t_test(&shifted, &base),
            Err(Error::DegenerateVariance)
        ));
    }

    #[test]
    fn wilcoxon_reference_values() {
        let r = wilcoxon_signed_rank(&ACC_GB, &ACC_TKSVC).unwrap();
        assert_eq!(r.statistic, 2.0);
        assert!((r.p_value - 0.0117).abs() < 0.0005, "p {}", r.p_value);
        let r = wilcoxon_signed_rank(&ACC_GB, &ACC_TSVM).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 0.0039).abs() < 0.0005);
        let r = wilcoxon_signed_rank(&ACC_TKSVC, &ACC_TSVM).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 0.0039).abs() < 0.0005);
    }

    #[test]
    fn wilcoxon_all_positive_differences() {
        let a: Vec<f64> = (0..9).map(|i| 10.0 + i as f64).collect();
        let b: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn wilcoxon_all_zero_differences() {
        let a = [1.0, 2.0];
        assert!(matches!(
            wilcoxon_signed_rank(&a, &a),
            Err(Error::AllZeroDifferences)
        ));
    }
}
