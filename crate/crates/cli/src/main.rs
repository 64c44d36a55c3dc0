use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use glandseg::colornorm::{image_stats, reinhard_normalize};
use glandseg::config::RunConfig;
use glandseg::eval::{evaluate, load_split, run_experiment, table_variants, EvalReport, Split, TestItem};
use glandseg::features::{assemble_features, feature_names};
use glandseg::imaging::patch_grid;
use glandseg::model_io::{load_model, save_model};
use glandseg::pipeline::{predict_image_with, train_hierarchical, PredictionMode, Reference, TrainingPair};
use glandseg::postproc::postprocess;
use glandseg::ImageRGB;

#[derive(Parser)]
#[command(
    name = "glandseg",
    version,
    about = "Patch-based gland segmentation for histology images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on the `train` split of a dataset directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        no_normalize: bool,
        /// Colour reference image (defaults to the first training image).
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Segment one image or every image in a directory.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_postprocess: bool,
        #[arg(long)]
        mode: Option<PredictionMode>,
    },
    /// Score a model on a labelled split and write a CSV report.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "testA")]
        split: String,
        #[arg(long)]
        report: PathBuf,
    },
    /// Run the comparison sweep over configuration variants.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        rounds: usize,
        #[arg(long)]
        report_dir: PathBuf,
        /// Dataset directory (overrides `data` in the config file).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated subset of variant names.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
    },
    /// Dump first-level patch features of an image as CSV.
    Features {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn load_training(data: &Path) -> Result<Vec<TrainingPair>> {
    let items = load_split(data, Split::Train)?;
    if items.is_empty() {
        bail!("no annotated training images found in {}", data.display());
    }
    Ok(items
        .into_iter()
        .map(|t| TrainingPair {
            name: t.name,
            image: t.image,
            mask: t.mask,
        })
        .collect())
}

fn image_files(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(input).with_context(|| format!("listing {}", input.display()))? {
        let path = entry?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "bmp" | "png" | "tif" | "tiff" | "jpg"));
        let is_anno = path
            .file_stem()
            .and_then(|s| s.to_str())
            .is_some_and(|s| s.ends_with("_anno"));
        if is_image && !is_anno {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn train(
    data: &Path,
    config: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
    no_normalize: bool,
    reference: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = load_config(config)?.pipeline;
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    if no_normalize {
        cfg.normalize = false;
    }
    if let Some(r) = reference {
        cfg.reference = Reference::Image(r);
    }
    let pairs = load_training(data)?;
    info!("training on {} images", pairs.len());
    let model = train_hierarchical(&pairs, &cfg)?;
    save_model(&model, out)?;
    info!("model written to {}", out.display());
    Ok(())
}

fn predict(model: &Path, input: &Path, out: &Path, no_postprocess: bool, mode: Option<PredictionMode>) -> Result<()> {
    let model = load_model(model)?;
    let mode = mode.unwrap_or(model.config.mode);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let files = image_files(input)?;
    if files.is_empty() {
        bail!("no images found at {}", input.display());
    }
    for file in files {
        let img = ImageRGB::open(&file)?;
        let mut mask = predict_image_with(&model, &img, mode)?.mask;
        if !no_postprocess {
            mask = postprocess(&mask, &model.config.postproc)?;
        }
        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("mask");
        let dest = out.join(format!("{stem}.png"));
        mask.save(&dest)?;
        info!("{} -> {}", file.display(), dest.display());
    }
    Ok(())
}

fn evaluate_cmd(model: &Path, data: &Path, split: &str, report: &Path) -> Result<()> {
    let model = load_model(model)?;
    let items = load_split(data, split.parse()?)?;
    if items.is_empty() {
        bail!("no annotated `{split}` images in {}", data.display());
    }
    let rep = evaluate(&model, &items)?;
    rep.write_csv(report)?;
    print_summary(split, &rep);
    Ok(())
}

fn print_summary(name: &str, rep: &EvalReport) {
    for post in [false, true] {
        let s = rep.summary(post);
        println!(
            "{name}\t{}\timages={}\tpixel_accuracy={:.5}\tpatch_accuracy={:.5}",
            if post { "postprocessed" } else { "raw" },
            s.images,
            s.pixel_accuracy,
            s.patch_accuracy
        );
    }
}

fn experiment(
    config: Option<&Path>,
    rounds: usize,
    report_dir: &Path,
    data: Option<PathBuf>,
    only: &[String],
) -> Result<()> {
    let run = load_config(config)?;
    let data = data
        .or(run.data_dir.clone())
        .context("no dataset directory: pass --data or set `data` in the config")?;
    let train = load_training(&data)?;
    let mut test: Vec<TestItem> = Vec::new();
    for split in &run.test_splits {
        test.extend(load_split(&data, split.parse()?)?);
    }
    if test.is_empty() {
        bail!("no annotated test images in {}", data.display());
    }
    fs::create_dir_all(report_dir).with_context(|| format!("creating {}", report_dir.display()))?;
    let variants = table_variants(&run.pipeline, run.knn_k)?;
    if let Some(unknown) = only.iter().find(|n| !variants.iter().any(|(v, _)| v == *n)) {
        bail!("unknown variant `{unknown}`");
    }
    let mut summary = String::from("variant,rounds,pixel_accuracy,patch_accuracy,postprocessed\n");
    for (name, cfg) in variants.iter().filter(|(n, _)| only.is_empty() || only.contains(n)) {
        info!("variant {name}");
        let res = run_experiment(cfg, &train, &test, rounds)?;
        for (r, rep) in res.rounds.iter().enumerate() {
            rep.write_csv(report_dir.join(format!("{name}_round{}.csv", r + 1)))?;
        }
        res.average.write_csv(report_dir.join(format!("{name}_average.csv")))?;
        print_summary(name, &res.average);
        for post in [false, true] {
            let s = res.average.summary(post);
            writeln!(
                summary,
                "{name},{rounds},{},{},{post}",
                s.pixel_accuracy, s.patch_accuracy
            )?;
        }
    }
    let path = report_dir.join("summary.csv");
    fs::write(&path, summary).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn features(input: &Path, config: Option<&Path>, out: &Path) -> Result<()> {
    let cfg = load_config(config)?.pipeline;
    let level = cfg.levels[0];
    let mut img = ImageRGB::open(input)?;
    if let (true, Reference::Image(r)) = (cfg.normalize, &cfg.reference) {
        img = reinhard_normalize(&img, &image_stats(&ImageRGB::open(r)?));
    }
    let img = img.pad_replicate(level.window);
    let mut text = String::from("x0,y0,w");
    for n in feature_names(&level) {
        text.push(',');
        text.push_str(&n);
    }
    text.push('\n');
    for p in patch_grid(img.width(), img.height(), level.window)? {
        write!(text, "{},{},{}", p.x0, p.y0, p.w)?;
        for v in assemble_features(&img.patch(p)?, &level)? {
            write!(text, ",{v}")?;
        }
        text.push('\n');
    }
    fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Train {
            data,
            config,
            out,
            seed,
            no_normalize,
            reference,
        } => train(&data, config.as_deref(), &out, seed, no_normalize, reference),
        Command::Predict {
            model,
            input,
            out,
            no_postprocess,
            mode,
        } => predict(&model, &input, &out, no_postprocess, mode),
        Command::Evaluate {
            model,
            data,
            split,
            report,
        } => evaluate_cmd(&model, &data, &split, &report),
        Command::Experiment {
            config,
            rounds,
            report_dir,
            data,
            variants,
        } => experiment(config.as_deref(), rounds, &report_dir, data, &variants),
        Command::Features { input, config, out } => features(&input, config.as_deref(), &out),
    }
}
