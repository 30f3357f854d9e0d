//! `gbtwin`: train, evaluate, and benchmark granular-ball twin SVMs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gbtwin_core::dataio::{atomic_write, load_csv, load_model, save_model, DatasetSpec, LabelColumn};
use gbtwin_core::evaluation::{
    accuracy, grid_search, kfold_cv, paired_t_test, sensitivity_grid, wilcoxon_signed_rank,
    ChosenParams, GridSpec,
};
use gbtwin_core::granulation::generate_balls;
use gbtwin_core::kernels::KernelSpec;
use gbtwin_core::multiclass::{predict, train, GranulationSettings, ModelKind, TrainConfig};
use gbtwin_core::twinpair::HyperParams;
use gbtwin_core::{Error, LabeledDataset};

#[derive(Parser)]
#[command(name = "gbtwin", version, about = "Granular-ball twin SVM classifier")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct DatasetArgs {
    /// Dataset CSV path.
    data: PathBuf,
    /// Label column name (default: last column).
    #[arg(long)]
    label: Option<String>,
    /// Field delimiter.
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// Treat the first row as data, not a header.
    #[arg(long)]
    no_header: bool,
}

impl DatasetArgs {
    fn spec(&self) -> DatasetSpec {
        let mut spec = DatasetSpec::new(&self.data);
        spec.has_header = !self.no_header;
        spec.delimiter = self.delimiter as u8;
        if let Some(name) = &self.label {
            spec.label_column = LabelColumn::Name(name.clone());
        }
        spec
    }
}

#[derive(Args)]
struct HyperArgs {
    /// Penalty on class-q slack of plane 1.
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    /// Penalty on rest-class slack of plane 1.
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    /// Penalty on class-p slack of plane 2.
    #[arg(long, default_value_t = 1.0)]
    c3: f64,
    /// Penalty on rest-class slack of plane 2.
    #[arg(long, default_value_t = 1.0)]
    c4: f64,
    /// Epsilon-tube parameter, in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Ridge added to the regularized Gram.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Kernel: "linear" or "gaussian".
    #[arg(long, default_value = "linear")]
    kernel: String,
    /// Gaussian kernel width p.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
}

impl HyperArgs {
    fn build(&self) -> Result<HyperParams, Error> {
        let hp = HyperParams {
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            c4: self.c4,
            epsilon: self.epsilon,
            delta: self.delta,
            kernel: parse_kernel(&self.kernel, self.p)?,
        };
        hp.validate()?;
        Ok(hp)
    }
}

#[derive(Args)]
struct GranArgs {
    /// Purity threshold for granular balls, in (0.5, 1].
    #[arg(long, default_value_t = 0.99)]
    purity: f64,
    /// Minimum members per surviving ball.
    #[arg(long, default_value_t = 2)]
    min_points: usize,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Focal-side penalty grid (c1 = c3), comma separated.
    #[arg(long, default_value = "0.25,1,4")]
    c_grid: String,
    /// Rest-side penalty grid (c2 = c4); defaults to --c-grid.
    #[arg(long)]
    c_rest_grid: Option<String>,
    /// Epsilon grid, comma separated.
    #[arg(long, default_value = "0.1,0.5")]
    epsilon_grid: String,
    /// Minimum-members grid for granulation.
    #[arg(long, default_value = "2,3")]
    num_grid: String,
    /// Purity grid for granulation.
    #[arg(long, default_value = "0.97,0.99")]
    purity_grid: String,
    /// Kernel: "linear" or "gaussian".
    #[arg(long, default_value = "linear")]
    kernel: String,
    /// Gaussian width grid, comma separated.
    #[arg(long, default_value = "0.25,1,4")]
    p_grid: String,
    /// Ridge added to the regularized Gram.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Use ||w||-normalized distances in the pairwise tie-break.
    #[arg(long)]
    normalize_distance: bool,
}

impl GridArgs {
    fn build(&self) -> Result<GridSpec, Error> {
        let c_focal = parse_f64_list(&self.c_grid)?;
        let c_rest = match &self.c_rest_grid {
            Some(s) => parse_f64_list(s)?,
            None => c_focal.clone(),
        };
        let kernels = match self.kernel.as_str() {
            "linear" => vec![KernelSpec::Linear],
            "gaussian" => parse_f64_list(&self.p_grid)?
                .into_iter()
                .map(|p| KernelSpec::Gaussian { p })
                .collect(),
            other => {
                return Err(Error::InvalidParameter(format!("unknown kernel {other:?}")))
            }
        };
        Ok(GridSpec {
            c_focal,
            c_rest,
            epsilon: parse_f64_list(&self.epsilon_grid)?,
            kernels,
            num: parse_usize_list(&self.num_grid)?,
            pur: parse_f64_list(&self.purity_grid)?,
            delta: self.delta,
            normalize_distance: self.normalize_distance,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Granulate a dataset and dump the balls as CSV.
    GenBalls {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        gran: GranArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path (stdout when omitted).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Train a model and save it as JSON.
    Train {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Model kind: gb-twksvc, twin-ksvc, or ovr-tsvm.
        #[arg(long, default_value = "gb-twksvc")]
        mode: ModelKind,
        #[command(flatten)]
        hyper: HyperArgs,
        #[command(flatten)]
        gran: GranArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Use ||w||-normalized distances in the pairwise tie-break.
        #[arg(long)]
        normalize_distance: bool,
        /// Output model path.
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Predict labels for a dataset with a saved model.
    Predict {
        /// Trained model JSON path.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Output CSV path (stdout when omitted).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation of one configuration.
    Cv {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long, default_value = "gb-twksvc")]
        mode: ModelKind,
        #[command(flatten)]
        hyper: HyperArgs,
        #[command(flatten)]
        gran: GranArgs,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output report JSON path (stdout when omitted).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Exhaustive grid search by mean CV accuracy.
    Grid {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long, default_value = "gb-twksvc")]
        mode: ModelKind,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output JSON path (stdout when omitted).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Grid-search all models over the bundled fixtures; emit a summary CSV.
    Bench {
        /// Directory holding iris.csv, seeds.csv, and glass.csv.
        #[arg(long, default_value = "fixtures")]
        fixtures: PathBuf,
        /// Explicit dataset paths instead of the fixture directory.
        #[arg(long)]
        datasets: Vec<PathBuf>,
        /// Model kinds to run, comma separated (default: all three).
        #[arg(long, value_delimiter = ',')]
        models: Vec<ModelKind>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path (stdout when omitted).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Paired t-test and Wilcoxon signed-rank test of two accuracy columns.
    Stats {
        /// First accuracy column, comma separated.
        #[arg(long)]
        a: String,
        /// Second accuracy column, comma separated.
        #[arg(long)]
        b: String,
    },
    /// CV accuracy over a (num, purity) granulation grid at fixed penalties.
    Sensitivity {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        hyper: HyperArgs,
        /// Minimum-members grid.
        #[arg(long, default_value = "2,3,4,5")]
        num_grid: String,
        /// Purity grid.
        #[arg(long, default_value = "0.95,0.97,0.99,1.0")]
        purity_grid: String,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path (stdout when omitted).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn parse_kernel(name: &str, p: f64) -> Result<KernelSpec, Error> {
    match name {
        "linear" => Ok(KernelSpec::Linear),
        "gaussian" => Ok(KernelSpec::Gaussian { p }),
        other => Err(Error::InvalidParameter(format!("unknown kernel {other:?}"))),
    }
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("not a number: {t:?}")))
        })
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("not a count: {t:?}")))
        })
        .collect()
}

/// Seed precedence: flag, then GBTWIN_SEED, then 0.
fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("GBTWIN_SEED")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

fn emit(output: Option<&Path>, contents: &str) -> Result<(), Error> {
    match output {
        Some(path) => atomic_write(path, contents.as_bytes()),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.cmd {
        Command::GenBalls {
            dataset,
            gran,
            seed,
            output,
        } => {
            let ds = load_csv(&dataset.spec())?;
            let seed = resolve_seed(seed);
            // granulate in the same normalized space training uses
            let stats = gbtwin_core::dataio::fit_minmax(&ds.data.features);
            let normed = gbtwin_core::dataio::apply_minmax(&ds.data.features, &stats)?;
            let data = LabeledDataset::new(normed, ds.data.labels.clone())?;
            let set = generate_balls(&data, gran.purity, gran.min_points, seed)?;
            let dim = set.balls.first().map_or(0, |b| b.centroid.len());
            let mut out = String::from("label,radius,member_count");
            for j in 0..dim {
                let _ = write!(out, ",c{j}");
            }
            out.push('\n');
            for b in &set.balls {
                let _ = write!(
                    out,
                    "{},{},{}",
                    ds.label_names[b.label], b.radius, b.member_count
                );
                for v in &b.centroid {
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
            emit(output.as_deref(), &out)
        }
        Command::Train {
            dataset,
            mode,
            hyper,
            gran,
            seed,
            normalize_distance,
            output,
        } => {
            let ds = load_csv(&dataset.spec())?;
            let cfg = TrainConfig {
                mode,
                hp: hyper.build()?,
                granulation: Some(GranulationSettings {
                    theta: gran.purity,
                    min_points: gran.min_points,
                    seed: resolve_seed(seed),
                }),
                normalize_distance,
            };
            let mut model = train(&ds.data, &cfg)?;
            model.label_names = Some(ds.label_names.clone());
            save_model(&model, &output)?;
            eprintln!(
                "trained {} on {} rows, {} classes -> {}",
                mode.as_str(),
                ds.data.len(),
                model.classes.len(),
                output.display()
            );
            Ok(())
        }
        Command::Predict {
            model,
            dataset,
            output,
        } => {
            let model = load_model(&model)?;
            let ds = load_csv(&dataset.spec())?;
            let pred = predict(&model, &ds.data.features)?;
            let decode = |id: usize| -> String {
                match &model.label_names {
                    Some(names) if id < names.len() => names[id].clone(),
                    _ => id.to_string(),
                }
            };
            let mut out = String::from("index,predicted,actual\n");
            for (i, p) in pred.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{i},{},{}",
                    decode(*p),
                    ds.label_names[ds.data.labels[i]]
                );
            }
            // predicted ids are dense ids in model space; actual labels are
            // comparable only when the label texts match
            let actual_as_model_ids: Option<Vec<usize>> = model.label_names.as_ref().map(|names| {
                ds.data
                    .labels
                    .iter()
                    .map(|&l| {
                        names
                            .iter()
                            .position(|n| *n == ds.label_names[l])
                            .unwrap_or(usize::MAX)
                    })
                    .collect()
            });
            let truth = actual_as_model_ids.unwrap_or_else(|| ds.data.labels.clone());
            if let Ok(acc) = accuracy(&pred, &truth) {
                eprintln!("accuracy {acc:.2}%");
            }
            emit(output.as_deref(), &out)
        }
        Command::Cv {
            dataset,
            mode,
            hyper,
            gran,
            folds,
            seed,
            output,
        } => {
            let ds = load_csv(&dataset.spec())?;
            let seed = resolve_seed(seed);
            let hp = hyper.build()?;
            let granulation = match mode {
                ModelKind::GbTwksvc => Some(GranulationSettings {
                    theta: gran.purity,
                    min_points: gran.min_points,
                    seed,
                }),
                _ => None,
            };
            let cfg = TrainConfig {
                mode,
                hp,
                granulation,
                normalize_distance: false,
            };
            let report = kfold_cv(
                &ds.data,
                folds,
                &|d| train(d, &cfg),
                seed,
                ChosenParams {
                    mode,
                    hyperparams: hp,
                    granulation,
                },
            )?;
            let json = serde_json::to_string_pretty(&report)?;
            emit(output.as_deref(), &format!("{json}\n"))
        }
        Command::Grid {
            dataset,
            mode,
            grid,
            folds,
            seed,
            output,
        } => {
            let ds = load_csv(&dataset.spec())?;
            let outcome = grid_search(&ds.data, &grid.build()?, mode, folds, resolve_seed(seed))?;
            let json = serde_json::to_string_pretty(&outcome)?;
            emit(output.as_deref(), &format!("{json}\n"))
        }
        Command::Bench {
            fixtures,
            datasets,
            models,
            grid,
            folds,
            seed,
            output,
        } => {
            let paths: Vec<PathBuf> = if datasets.is_empty() {
                ["iris.csv", "seeds.csv", "glass.csv"]
                    .iter()
                    .map(|f| fixtures.join(f))
                    .collect()
            } else {
                datasets
            };
            let models = if models.is_empty() {
                vec![ModelKind::GbTwksvc, ModelKind::TwinKsvc, ModelKind::OvrTsvm]
            } else {
                models
            };
            let spec = grid.build()?;
            let seed = resolve_seed(seed);
            let mut out = String::from("dataset,model,mean_accuracy,std_accuracy,mean_time_s\n");
            for path in &paths {
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                let ds = load_csv(&DatasetSpec::new(path))?;
                for &model in &models {
                    let outcome = grid_search(&ds.data, &spec, model, folds, seed)?;
                    let r = &outcome.report;
                    let _ = writeln!(
                        out,
                        "{name},{},{:.2},{:.2},{:.4}",
                        model.as_str(),
                        r.mean_accuracy,
                        r.std_accuracy,
                        r.train_time_seconds
                    );
                    log::info!(
                        "{name}/{}: mean {:.2}% best config {:?}",
                        model.as_str(),
                        r.mean_accuracy,
                        outcome.best.hyperparams
                    );
                }
            }
            emit(output.as_deref(), &out)
        }
        Command::Stats { a, b } => {
            let a = parse_f64_list(&a)?;
            let b = parse_f64_list(&b)?;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            if a.is_empty() || b.is_empty() {
                return Err(Error::EmptyInput("stats needs two accuracy columns".into()));
            }
            println!("mean_a {:.4}", mean(&a));
            println!("mean_b {:.4}", mean(&b));
            let t = paired_t_test(&a, &b)?;
            println!("t {:.4} p {:.4}", t.statistic, t.p_value);
            let w = wilcoxon_signed_rank(&a, &b)?;
            println!("wilcoxon_w {:.4} p {:.4}", w.statistic, w.p_value);
            Ok(())
        }
        Command::Sensitivity {
            dataset,
            hyper,
            num_grid,
            purity_grid,
            folds,
            seed,
            output,
        } => {
            let ds = load_csv(&dataset.spec())?;
            let cells = sensitivity_grid(
                &ds.data,
                &hyper.build()?,
                &parse_usize_list(&num_grid)?,
                &parse_f64_list(&purity_grid)?,
                folds,
                resolve_seed(seed),
            )?;
            let mut out = String::from("num,purity,mean_accuracy\n");
            for (n, p, acc) in cells {
                let _ = writeln!(out, "{n},{p},{acc:.4}");
            }
            emit(output.as_deref(), &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
