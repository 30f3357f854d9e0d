//! Pairwise training over all class pairs, ternary voting prediction, and
//! the one-versus-rest TSVM baseline.
//!
//! Every unordered class pair (p, q) contributes one trained [`PlanePair`].
//! At prediction time a pair votes p, q, or abstains: the epsilon-tube
//! around each plane decides which side a point falls on, and when both
//! sides claim it the nearer plane wins. The class with the most votes
//! across all K(K-1)/2 pairs is returned.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{apply_minmax, fit_minmax, normalize_point};
use crate::error::{Error, Result};
use crate::granulation::{generate_balls, BallSet, LabeledDataset};
use crate::kernels::KernelSpec;
use crate::numerics::{dot, Matrix};
use crate::twinpair::{
    train_pair_full, HyperParams, PairProblem, PlanePair, TrainMode,
};

pub const MODEL_FORMAT_VERSION: &str = "gbtwin-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "gb-twksvc")]
    GbTwksvc,
    #[serde(rename = "twin-ksvc")]
    TwinKsvc,
    #[serde(rename = "ovr-tsvm")]
    OvrTsvm,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::GbTwksvc => "gb-twksvc",
            ModelKind::TwinKsvc => "twin-ksvc",
            ModelKind::OvrTsvm => "ovr-tsvm",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gb-twksvc" | "gb" => Ok(ModelKind::GbTwksvc),
            "twin-ksvc" | "tksvc" => Ok(ModelKind::TwinKsvc),
            "ovr-tsvm" | "ovr" => Ok(ModelKind::OvrTsvm),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GranulationSettings {
    pub theta: f64,
    pub min_points: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairEntry {
    pub p: usize,
    pub q: usize,
    pub plane: PlanePair,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OvrEntry {
    pub class: usize,
    /// Full TSVM for this class against the rest: plane 1 fits the class,
    /// plane 2 fits the rest.
    pub plane: PlanePair,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "lowercase")]
pub enum ModelPlanes {
    Pairwise { pairs: Vec<PairEntry> },
    OneVsRest { planes: Vec<OvrEntry> },
}

/// Sizes observed while training one pair; QP dimensions must track ball
/// counts, never raw point counts.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PairShape {
    pub p: usize,
    pub q: usize,
    pub rows_a: usize,
    pub rows_b: usize,
    pub rows_c: usize,
    pub dual_dims: (usize, usize),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainingDiagnostics {
    pub max_stationarity_residual: f64,
    pub max_dual_kkt_residual: f64,
    pub pair_shapes: Vec<PairShape>,
    pub training_unit_count: usize,
}

/// The persisted classifier artifact ("gbtwin-model/1").
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: String,
    pub mode: ModelKind,
    pub classes: Vec<usize>,
    /// Original label text per dense class id, when known.
    #[serde(default)]
    pub label_names: Option<Vec<String>>,
    /// Per-feature (min, max) fitted on the training data.
    pub normalization: Vec<(f64, f64)>,
    pub hyperparams: HyperParams,
    pub granulation: Option<GranulationSettings>,
    /// Divide pairwise plane distances by ||w|| in the tie-break rule.
    #[serde(default)]
    pub normalize_distance: bool,
    pub planes: ModelPlanes,
    #[serde(default)]
    pub diagnostics: TrainingDiagnostics,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub mode: ModelKind,
    pub hp: HyperParams,
    pub granulation: Option<GranulationSettings>,
    pub normalize_distance: bool,
}

fn train_mode_for(kernel: KernelSpec) -> TrainMode {
    match kernel {
        KernelSpec::Linear => TrainMode::Linear,
        KernelSpec::Gaussian { .. } => TrainMode::Kernel,
    }
}

/// Training units: one row per unit (ball centroid or raw point) plus its
/// radius and label.
struct Units {
    features: Matrix,
    radii: Vec<f64>,
    labels: Vec<usize>,
}

impl Units {
    fn from_balls(set: &BallSet) -> Units {
        let rows: Vec<Vec<f64>> = set.balls.iter().map(|b| b.centroid.clone()).collect();
        Units {
            features: Matrix::from_rows(&rows).expect("ball centroids share dimension"),
            radii: set.balls.iter().map(|b| b.radius).collect(),
            labels: set.balls.iter().map(|b| b.label).collect(),
        }
    }

    fn from_points(data: &LabeledDataset) -> Units {
        Units {
            features: data.features.clone(),
            radii: vec![0.0; data.len()],
            labels: data.labels.clone(),
        }
    }

    fn classes(&self) -> Vec<usize> {
        let mut cs = self.labels.clone();
        cs.sort_unstable();
        cs.dedup();
        cs
    }

    fn rows_of(&self, pred: impl Fn(usize) -> bool) -> (Matrix, Vec<f64>) {
        let mut rows = Vec::new();
        let mut radii = Vec::new();
        for (i, &l) in self.labels.iter().enumerate() {
            if pred(l) {
                rows.push(self.features.row(i).to_vec());
                radii.push(self.radii[i]);
            }
        }
        let m = if rows.is_empty() {
            Matrix::zeros(0, self.features.cols())
        } else {
            Matrix::from_rows(&rows).expect("rows share dimension")
        };
        (m, radii)
    }
}

/// Train a model on raw labeled data. Features are min-max normalized to
/// [0, 1] internally; the statistics are stored in the model and applied
/// again at prediction time.
pub fn train(data: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.hp.validate()?;
    let classes = data.classes();
    if classes.len() < 2 {
        return Err(Error::TooFewClasses(classes.len()));
    }
    let norm = fit_minmax(&data.features);
    let normalized = LabeledDataset::new(apply_minmax(&data.features, &norm)?, data.labels.clone())?;

    let units = match cfg.mode {
        ModelKind::GbTwksvc => {
            let g = cfg.granulation.ok_or_else(|| {
                Error::InvalidParameter("gb-twksvc mode needs granulation settings".into())
            })?;
            let balls = generate_balls(&normalized, g.theta, g.min_points, g.seed)?;
            Units::from_balls(&balls)
        }
        ModelKind::TwinKsvc | ModelKind::OvrTsvm => Units::from_points(&normalized),
    };
    train_from_units(&units, cfg, norm, classes)
}

/// Train a GB model from an already-granulated ball set; grid search uses
/// this to reuse balls across hyperparameter combinations. The ball
/// centroids must live in the same normalized space as `normalization`
/// maps into.
pub fn train_gb_from_balls(
    balls: &BallSet,
    normalization: Vec<(f64, f64)>,
    hp: &HyperParams,
    granulation: GranulationSettings,
    normalize_distance: bool,
) -> Result<TrainedModel> {
    hp.validate()?;
    let units = Units::from_balls(balls);
    let classes = units.classes();
    if classes.len() < 2 {
        return Err(Error::DegenerateGranulation);
    }
    let cfg = TrainConfig {
        mode: ModelKind::GbTwksvc,
        hp: *hp,
        granulation: Some(granulation),
        normalize_distance,
    };
    train_from_units(&units, &cfg, normalization, classes)
}

fn train_from_units(
    units: &Units,
    cfg: &TrainConfig,
    normalization: Vec<(f64, f64)>,
    classes: Vec<usize>,
) -> Result<TrainedModel> {
    let unit_classes = units.classes();
    if unit_classes.len() < 2 {
        return Err(Error::DegenerateGranulation);
    }
    let mode = train_mode_for(cfg.hp.kernel);

    let (planes, shapes, residuals) = match cfg.mode {
        ModelKind::GbTwksvc | ModelKind::TwinKsvc => {
            let mut pair_ids = Vec::new();
            for (i, &p) in unit_classes.iter().enumerate() {
                for &q in &unit_classes[i + 1..] {
                    pair_ids.push((p, q));
                }
            }
            let results: Vec<Result<(PairEntry, PairShape, (f64, f64))>> = pair_ids
                .par_iter()
                .map(|&(p, q)| {
                    let (a, r1) = units.rows_of(|l| l == p);
                    let (b, r2) = units.rows_of(|l| l == q);
                    let (c, r3) = units.rows_of(|l| l != p && l != q);
                    let problem = PairProblem { a, b, c, r1, r2, r3 };
                    let (plane, diag) =
                        train_pair_full(&problem, &cfg.hp, mode).map_err(|e| match e {
                            Error::DegeneratePair { reason, .. } => {
                                Error::DegeneratePair { p, q, reason }
                            }
                            other => other,
                        })?;
                    let shape = PairShape {
                        p,
                        q,
                        rows_a: problem.a.rows(),
                        rows_b: problem.b.rows(),
                        rows_c: problem.c.rows(),
                        dual_dims: diag.dual_dims,
                    };
                    Ok((
                        PairEntry { p, q, plane },
                        shape,
                        (diag.stationarity_residual, diag.dual_kkt_residual),
                    ))
                })
                .collect();
            let mut pairs = Vec::new();
            let mut shapes = Vec::new();
            let mut res = (0.0f64, 0.0f64);
            for r in results {
                let (entry, shape, (sr, kr)) = r?;
                res.0 = res.0.max(sr);
                res.1 = res.1.max(kr);
                pairs.push(entry);
                shapes.push(shape);
            }
            pairs.sort_by_key(|e| (e.p, e.q));
            shapes.sort_by_key(|s| (s.p, s.q));
            (ModelPlanes::Pairwise { pairs }, shapes, res)
        }
        ModelKind::OvrTsvm => {
            let results: Vec<Result<(OvrEntry, (f64, f64))>> = unit_classes
                .par_iter()
                .map(|&k| {
                    let (a, _) = units.rows_of(|l| l == k);
                    let (b, _) = units.rows_of(|l| l != k);
                    let problem =
                        PairProblem::from_points(a, b, Matrix::zeros(0, units.features.cols()));
                    // the binary TSVM only has two penalties; c1 guards the
                    // rest-side slack of plane 1, c3 the class-side slack of
                    // plane 2
                    let (plane, diag) = train_pair_full(&problem, &cfg.hp, mode)?;
                    Ok((
                        OvrEntry { class: k, plane },
                        (diag.stationarity_residual, diag.dual_kkt_residual),
                    ))
                })
                .collect();
            let mut planes = Vec::new();
            let mut res = (0.0f64, 0.0f64);
            for r in results {
                let (entry, (sr, kr)) = r?;
                res.0 = res.0.max(sr);
                res.1 = res.1.max(kr);
                planes.push(entry);
            }
            planes.sort_by_key(|e| e.class);
            (ModelPlanes::OneVsRest { planes }, Vec::new(), res)
        }
    };

    Ok(TrainedModel {
        version: MODEL_FORMAT_VERSION.to_string(),
        mode: cfg.mode,
        classes,
        label_names: None,
        normalization,
        hyperparams: cfg.hp,
        granulation: cfg.granulation,
        normalize_distance: cfg.normalize_distance,
        planes,
        diagnostics: TrainingDiagnostics {
            max_stationarity_residual: residuals.0,
            max_dual_kkt_residual: residuals.1,
            pair_shapes: shapes,
            training_unit_count: units.labels.len(),
        },
    })
}

/// Outcome of one pair's ternary vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairVote {
    First,
    Second,
    Neither,
}

/// Ternary decision of one plane pair at a normalized point.
///
/// Votes for the first class when only `f1 > -(1 - eps)` holds, for the
/// second when only `f2 < (1 - eps)` holds, abstains when neither does,
/// and falls back to the nearer plane when both do.
pub fn vote_pair(pp: &PlanePair, z: &[f64], epsilon: f64) -> PairVote {
    vote_pair_with(pp, z, epsilon, false)
}

pub fn vote_pair_with(pp: &PlanePair, z: &[f64], epsilon: f64, normalize_distance: bool) -> PairVote {
    let (f1, f2) = pp.decision_values(z);
    let band = 1.0 - epsilon;
    let says_first = f1 > -band;
    let says_second = f2 < band;
    match (says_first, says_second) {
        (true, false) => PairVote::First,
        (false, true) => PairVote::Second,
        (false, false) => PairVote::Neither,
        (true, true) => {
            let (d1, d2) = if normalize_distance {
                let n1 = dot(&pp.w1, &pp.w1).sqrt().max(f64::MIN_POSITIVE);
                let n2 = dot(&pp.w2, &pp.w2).sqrt().max(f64::MIN_POSITIVE);
                (f1.abs() / n1, f2.abs() / n2)
            } else {
                (f1.abs(), f2.abs())
            };
            if d1 <= d2 {
                PairVote::First
            } else {
                PairVote::Second
            }
        }
    }
}

fn class_index(model: &TrainedModel, class: usize) -> usize {
    model
        .classes
        .iter()
        .position(|&c| c == class)
        .expect("model planes reference known classes")
}

/// Per-class vote counts for one already-normalized point (pairwise modes).
fn tally_votes(model: &TrainedModel, z: &[f64]) -> Vec<usize> {
    let mut counts = vec![0usize; model.classes.len()];
    if let ModelPlanes::Pairwise { pairs } = &model.planes {
        for entry in pairs {
            match vote_pair_with(
                &entry.plane,
                z,
                model.hyperparams.epsilon,
                model.normalize_distance,
            ) {
                PairVote::First => counts[class_index(model, entry.p)] += 1,
                PairVote::Second => counts[class_index(model, entry.q)] += 1,
                PairVote::Neither => {}
            }
        }
    }
    counts
}

/// Per-class scores for one raw input row: integer vote counts in the
/// pairwise modes, the signed proximity margin in one-vs-rest mode.
pub fn class_scores(model: &TrainedModel, z_raw: &[f64]) -> Result<Vec<f64>> {
    let z = normalize_point(z_raw, &model.normalization)?;
    match &model.planes {
        ModelPlanes::Pairwise { .. } => {
            Ok(tally_votes(model, &z).into_iter().map(|c| c as f64).collect())
        }
        ModelPlanes::OneVsRest { planes } => {
            let mut scores = vec![f64::NEG_INFINITY; model.classes.len()];
            for entry in planes {
                let (f1, f2) = entry.plane.decision_values(&z);
                let n1 = dot(&entry.plane.w1, &entry.plane.w1).sqrt().max(f64::MIN_POSITIVE);
                let n2 = dot(&entry.plane.w2, &entry.plane.w2).sqrt().max(f64::MIN_POSITIVE);
                // distance to the rest plane minus distance to the class
                // plane: large when the point sits on this class's plane
                scores[class_index(model, entry.class)] = f2.abs() / n2 - f1.abs() / n1;
            }
            Ok(scores)
        }
    }
}

/// Integer vote counts per class (pairwise modes only); sums to at most
/// K(K-1)/2 per point.
pub fn vote_scores(model: &TrainedModel, z_raw: &[f64]) -> Result<Vec<usize>> {
    let z = normalize_point(z_raw, &model.normalization)?;
    Ok(tally_votes(model, &z))
}

/// Predict dense class identifiers for each row of `x` (raw feature units).
pub fn predict(model: &TrainedModel, x: &Matrix) -> Result<Vec<usize>> {
    let d = model.normalization.len();
    if x.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} features, input has {}",
            d,
            x.cols()
        )));
    }
    let mut out = Vec::with_capacity(x.rows());
    for i in 0..x.rows() {
        let scores = class_scores(model, x.row(i))?;
        // argmax with ties to the smallest class identifier
        let mut best = 0usize;
        for (j, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = j;
            }
        }
        out.push(model.classes[best]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;

    fn blob(cx: f64, cy: f64, n: usize, spread: f64) -> Vec<Vec<f64>> {
        // deterministic lattice jitter, no RNG needed
        (0..n)
            .map(|i| {
                let a = (i % 5) as f64 * spread - 2.0 * spread;
                let b = (i / 5) as f64 * spread - spread;
                vec![cx + a, cy + b]
            })
            .collect()
    }

    fn three_blobs() -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, (cx, cy)) in [(0.0, 0.0), (10.0, 0.0), (5.0, 9.0)].iter().enumerate() {
            for r in blob(*cx, *cy, 15, 0.3) {
                rows.push(r);
                labels.push(c);
            }
        }
        LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
    }

    fn gb_config() -> TrainConfig {
        TrainConfig {
            mode: ModelKind::GbTwksvc,
            hp: HyperParams {
                c1: 1.0,
                c2: 1.0,
                c3: 1.0,
                c4: 1.0,
                epsilon: 0.3,
                delta: 1e-4,
                kernel: KernelSpec::Linear,
            },
            granulation: Some(GranulationSettings {
                theta: 0.97,
                min_points: 2,
                seed: 5,
            }),
            normalize_distance: false,
        }
    }

    #[test]
    fn two_classes_one_pair_empty_rest() {
        let rows = [blob(0.0, 0.0, 10, 0.2), blob(8.0, 8.0, 10, 0.2)].concat();
        let labels = [vec![0usize; 10], vec![1; 10]].concat();
        let data = LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap();
        let model = train(&data, &gb_config()).unwrap();
        match &model.planes {
            ModelPlanes::Pairwise { pairs } => assert_eq!(pairs.len(), 1),
            _ => panic!("expected pairwise layout"),
        }
        for s in &model.diagnostics.pair_shapes {
            assert_eq!(s.rows_c, 0);
        }
    }

    #[test]
    fn pair_count_formula_six_classes() {
        // 6 classes laid out on a circle
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..6usize {
            let ang = c as f64;
            for r in blob(10.0 * ang.cos(), 10.0 * ang.sin(), 8, 0.2) {
                rows.push(r);
                labels.push(c);
            }
        }
        let data = LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap();
        let model = train(&data, &gb_config()).unwrap();
        match &model.planes {
            ModelPlanes::Pairwise { pairs } => assert_eq!(pairs.len(), 15),
            _ => panic!("expected pairwise layout"),
        }
    }

    #[test]
    fn separable_blobs_perfect_training_accuracy_all_modes() {
        let data = three_blobs();
        for mode in [ModelKind::GbTwksvc, ModelKind::TwinKsvc, ModelKind::OvrTsvm] {
            let cfg = TrainConfig {
                mode,
                ..gb_config()
            };
            let model = train(&data, &cfg).unwrap();
            let pred = predict(&model, &data.features).unwrap();
            let correct = pred
                .iter()
                .zip(&data.labels)
                .filter(|(a, b)| a == b)
                .count();
            assert_eq!(
                correct,
                data.len(),
                "mode {:?} got {}/{}",
                mode,
                correct,
                data.len()
            );
        }
    }

    #[test]
    fn vote_conservation_and_label_closure() {
        let data = three_blobs();
        let model = train(&data, &gb_config()).unwrap();
        let k = model.classes.len();
        for i in 0..data.len() {
            let votes = vote_scores(&model, data.features.row(i)).unwrap();
            assert!(votes.iter().sum::<usize>() <= k * (k - 1) / 2);
        }
        let pred = predict(&model, &data.features).unwrap();
        for p in pred {
            assert!(model.classes.contains(&p));
        }
    }

    #[test]
    fn unanimous_vote_counts() {
        let data = three_blobs();
        let model = train(&data, &gb_config()).unwrap();
        // a deep class-0 point gets both its pairs' votes
        let votes = vote_scores(&model, &[0.0, 0.0]).unwrap();
        assert_eq!(votes[0], 2);
        assert_eq!(votes[1] + votes[2], 0);
    }

    #[test]
    fn ambiguous_point_tie_breaks_to_nearer_plane() {
        let pp = PlanePair {
            w1: vec![1.0],
            b1: 0.2,
            w2: vec![1.0],
            b2: 0.1,
            reference: None,
            kernel: KernelSpec::Linear,
        };
        // at z = 0: f1 = 0.2, f2 = 0.1, eps = 0.5 -> both conditions hold,
        // |f2| < |f1| -> second class wins
        assert_eq!(vote_pair(&pp, &[0.0], 0.5), PairVote::Second);
    }

    #[test]
    fn epsilon_tube_abstains() {
        let pp = PlanePair {
            w1: vec![1.0],
            b1: -2.0,
            w2: vec![1.0],
            b2: 2.0,
            reference: None,
            kernel: KernelSpec::Linear,
        };
        // f1 = -2 <= -(1-eps), f2 = 2 >= (1-eps)
        assert_eq!(vote_pair(&pp, &[0.0], 0.3), PairVote::Neither);
    }

    #[test]
    fn determinism_across_runs() {
        let data = three_blobs();
        let m1 = train(&data, &gb_config()).unwrap();
        let m2 = train(&data, &gb_config()).unwrap();
        let p1 = predict(&m1, &data.features).unwrap();
        let p2 = predict(&m2, &data.features).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(
            serde_json::to_string(&m1).unwrap(),
            serde_json::to_string(&m2).unwrap()
        );
    }

    #[test]
    fn too_few_classes_rejected() {
        let rows = blob(0.0, 0.0, 10, 0.2);
        let data = LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), vec![0; 10]).unwrap();
        assert!(matches!(
            train(&data, &gb_config()),
            Err(Error::TooFewClasses(1))
        ));
    }

    #[test]
    fn predict_checks_dimensions() {
        let data = three_blobs();
        let model = train(&data, &gb_config()).unwrap();
        let bad = Matrix::zeros(1, 5);
        assert!(matches!(
            predict(&model, &bad),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
