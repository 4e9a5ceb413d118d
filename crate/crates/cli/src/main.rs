use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use playclass::analysis::{
    cka_matrix, confusion_percent_csv, distance_accuracy_rows, embeddings_csv, knn_csv, knn_probe,
    mean_pool_bundle, spearman, spearman_permutation, write_cka_csv, CkaTable,
};
use playclass::chunking::{
    apply_corrections, boundary_masks, detections_from_tracks, export_review_bundle,
    extract_point_prompts, load_corrections, load_detections, load_plan, match_identities,
    plan_video, BoundaryMatch, ChunkPlan, MaskCrops, PlannerConfig,
};
use playclass::dataset::features_io::{load_features, write_features};
use playclass::dataset::tracks::load_keyframes;
use playclass::dataset::{
    load_embeddings, load_labels, load_manifest, load_tracks, write_atomic, write_tracks, Category,
    TrackSet,
};
use playclass::features::{extract_features, FeatureConfig};
use playclass::loco::{
    evaluate, load_predictions, parse_toggles, run_ablation_grid, run_loco, write_confusion_csv,
    ConfusionMatrix, RunSpec,
};
use playclass::model::save_checkpoint;
use playclass::tracking::{evaluate_tracking, DEFAULT_IDF1_THRESHOLD};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "playclass",
    version,
    about = "Play-behaviour classification pipeline for tracked birds"
)]
struct Cli {
    /// Seed for every random choice; overrides the seed in --config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML configuration. Run spec for train and ablate, otherwise
    /// optional [features] and [planner] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory that receives every output file.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Load and check input files.
    Validate(ValidateArgs),
    /// Extract the 171-value handcrafted descriptor for every labelled window.
    Features(FeaturesArgs),
    /// Choose grounding frame, chunk boundaries and point prompts per video.
    PlanChunks(PlanArgs),
    /// Match track identities across chunk boundaries.
    MatchIds(MatchArgs),
    /// Write the review bundle (manifest plus crops) for the identity review UI.
    ReviewExport(MatchArgs),
    /// Relabel tracks with a reviewer's corrections file.
    ApplyCorrections(ApplyArgs),
    /// Score tracks against keyframe annotations with HOTA and IDF1.
    Trackeval(TrackevalArgs),
    /// Leave-one-cage-out training and evaluation of one run spec.
    Train,
    /// Pool per-fold results into one report.
    Evaluate(EvaluateArgs),
    /// Base run plus one run per toggle.
    Ablate(AblateArgs),
    /// CKA, nearest-neighbour probing and Spearman analysis.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args, Serialize)]
struct ValidateArgs {
    #[arg(long)]
    tracks: Option<PathBuf>,
    #[arg(long)]
    keyframes: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, requires = "birds")]
    videos: Option<PathBuf>,
    #[arg(long, requires = "videos")]
    birds: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct FeaturesArgs {
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Output CSV (default: <out-dir>/features.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PlanArgs {
    /// Detector boxes. Derived from --tracks when omitted.
    #[arg(long)]
    detections: Option<PathBuf>,
    /// Tracks whose final chunk masks provide the point prompts.
    #[arg(long)]
    tracks: Option<PathBuf>,
    /// Video manifest, for frame counts.
    #[arg(long)]
    videos: PathBuf,
    #[arg(long)]
    birds: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct MatchArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    tracks: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ApplyArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long)]
    corrections: PathBuf,
    /// Output tracks (default: <out-dir>/tracks_corrected.tsv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct TrackevalArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, default_value = "tracker")]
    method: String,
    #[arg(long, default_value_t = DEFAULT_IDF1_THRESHOLD)]
    idf1_threshold: f64,
}

#[derive(Debug, Args, Serialize)]
struct EvaluateArgs {
    /// `predictions.csv` from a train run; folds come from its fold column.
    #[arg(long, conflicts_with = "confusion")]
    predictions: Option<PathBuf>,
    /// One confusion CSV per fold.
    #[arg(long, num_args = 1..)]
    confusion: Vec<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct AblateArgs {
    /// Toggle to ablate (repeatable); defaults to the run spec's list.
    #[arg(long = "toggle")]
    toggles: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
struct AnalyzeArgs {
    /// Embedding bundle directory (repeatable, one per backbone).
    #[arg(long = "embeddings")]
    embeddings: Vec<PathBuf>,
    #[arg(long)]
    labels: PathBuf,
    /// Predictions for the distance/correctness correlation and confusion export.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, requires = "predictions")]
    features: Option<PathBuf>,
    #[arg(long, default_value = "f15_mean")]
    distance_column: String,
    /// Category whose windows enter the distance correlation.
    #[arg(long, default_value = "object")]
    category: String,
    /// Use a permutation p-value with this many shuffles.
    #[arg(long)]
    permutations: Option<usize>,
}

/// Settings for the stages that do not take a run spec.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct StageConfig {
    features: FeatureConfig,
    planner: PlannerConfig,
}

struct Ctx {
    out_dir: PathBuf,
    seed: Option<u64>,
    config: Option<PathBuf>,
}

impl Ctx {
    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn stage_config(&self) -> Result<StageConfig> {
        match &self.config {
            None => Ok(StageConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text)
                    .map_err(|e| playclass::Error::Config(format!("{}: {e}", p.display())).into())
            }
        }
    }

    fn run_spec(&self) -> Result<RunSpec> {
        let path = self
            .config
            .as_ref()
            .context("this command needs --config <run spec>")?;
        let spec = RunSpec::load(path)?;
        Ok(match self.seed {
            Some(s) => spec.with_seed(s),
            None => spec,
        })
    }
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn validate(args: &ValidateArgs) -> Result<Value> {
    let mut summary = BTreeMap::new();
    if let Some(p) = &args.tracks {
        let t = load_tracks(p)?;
        summary.insert(
            "tracks",
            json!({"records": t.len(), "videos": t.video_ids()}),
        );
    }
    if let Some(p) = &args.keyframes {
        summary.insert("keyframes", json!({"records": load_keyframes(p)?.len()}));
    }
    let labels = args.labels.as_deref().map(load_labels).transpose()?;
    if let Some(l) = &labels {
        let excluded = l.iter().filter(|w| w.excluded).count();
        summary.insert(
            "labels",
            json!({"windows": l.len(), "excluded_social": excluded}),
        );
    }
    if let (Some(v), Some(b)) = (&args.videos, &args.birds) {
        let m = load_manifest(v, b)?;
        summary.insert(
            "manifest",
            json!({"videos": m.videos.len(), "birds": m.birds.len(), "cages": m.cages()}),
        );
        if let Some(l) = &labels {
            if let Some(w) = l.iter().find(|w| m.cage_of_video(&w.video_id).is_none()) {
                bail!(playclass::Error::Validation(format!(
                    "labelled video {} missing from manifest",
                    w.video_id
                )));
            }
        }
    }
    if let Some(p) = &args.embeddings {
        let b = load_embeddings(p)?;
        let orphans = labels.as_ref().map(|l| b.orphans(l)).unwrap_or_default();
        for o in &orphans {
            log::warn!("embedding window {o} has no label");
        }
        summary.insert(
            "embeddings",
            json!({"backbone": b.backbone_id, "windows": b.sequences.len(), "dim": b.dim(), "orphans": orphans.len()}),
        );
    }
    if let Some(p) = &args.features {
        let f = load_features(p)?;
        let low = f.iter().filter(|w| w.low_coverage).count();
        summary.insert("features", json!({"windows": f.len(), "low_coverage": low}));
    }
    if summary.is_empty() {
        bail!(Usage("validate needs at least one input file".into()));
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(json!(summary))
}

fn features(ctx: &Ctx, args: &FeaturesArgs) -> Result<Value> {
    let cfg = ctx.stage_config()?.features;
    let tracks = load_tracks(&args.tracks)?;
    let labels = load_labels(&args.labels)?;
    let rows = extract_features(&tracks, &labels, &cfg);
    let out = args.out.clone().unwrap_or_else(|| ctx.out("features.csv"));
    write_features(&out, &rows)?;
    let low = rows.iter().filter(|r| r.low_coverage).count();
    log::info!(
        "wrote {} windows to {} ({low} low coverage)",
        rows.len(),
        out.display()
    );
    Ok(json!({"features": cfg, "windows": rows.len(), "out": out}))
}

fn plan_path(ctx: &Ctx, video: &str) -> PathBuf {
    ctx.out(&format!("plan_{video}.json"))
}

fn plan_chunks(ctx: &Ctx, args: &PlanArgs) -> Result<Value> {
    let cfg = ctx.stage_config()?.planner;
    let manifest = load_manifest(&args.videos, &args.birds)?;
    let tracks = args.tracks.as_deref().map(load_tracks).transpose()?;
    let streams = match (&args.detections, &tracks) {
        (Some(p), _) => load_detections(p)?,
        (None, Some(t)) => detections_from_tracks(t),
        (None, None) => bail!(Usage("plan-chunks needs --detections or --tracks".into())),
    };
    let mut written = Vec::new();
    for (video, stream) in &streams {
        let entry = manifest.video(video).ok_or_else(|| {
            playclass::Error::Validation(format!("video {video} missing from manifest"))
        })?;
        let mut plan = plan_video(video, stream, entry.frame_count, &cfg)?;
        for &b in &plan.warnings {
            log::warn!("video {video}: boundary {b} kept at its nominal frame");
        }
        if let Some(t) = &tracks {
            for &b in &plan.boundaries.clone() {
                let set = extract_point_prompts(b, &boundary_masks(t, video, b - 1));
                for id in &set.lost {
                    log::warn!("video {video}: track {id} has an empty mask before boundary {b}");
                }
                plan.prompts.extend(set.prompts);
            }
        }
        let path = plan_path(ctx, video);
        plan.write(&path)?;
        written.push(path);
    }
    Ok(json!({"planner": cfg, "plans": written}))
}

fn matches_for(plan: &ChunkPlan, tracks: &TrackSet, tau: f64) -> Vec<BoundaryMatch> {
    plan.boundaries
        .iter()
        .map(|&b| {
            let prev = boundary_masks(tracks, &plan.video_id, b - 1);
            let next = boundary_masks(tracks, &plan.video_id, b);
            match_identities(b, &prev, &next, tau)
        })
        .collect()
}

fn match_ids(ctx: &Ctx, args: &MatchArgs) -> Result<Value> {
    let cfg = ctx.stage_config()?.planner;
    let plan = load_plan(&args.plan)?;
    let tracks = load_tracks(&args.tracks)?;
    let matches = matches_for(&plan, &tracks, cfg.tau_match);
    let flagged: usize = matches.iter().map(|m| m.flags.len()).sum();
    let out = ctx.out(&format!("matches_{}.json", plan.video_id));
    write_json(&out, &matches)?;
    println!("{} boundaries, {flagged} flagged tracks", matches.len());
    Ok(json!({"planner": cfg, "matches": out}))
}

fn review_export(ctx: &Ctx, args: &MatchArgs) -> Result<Value> {
    let cfg = ctx.stage_config()?.planner;
    let plan = load_plan(&args.plan)?;
    let tracks = load_tracks(&args.tracks)?;
    let matches = matches_for(&plan, &tracks, cfg.tau_match);
    let dir = ctx.out("review");
    std::fs::create_dir_all(dir.join("crops"))
        .with_context(|| format!("creating {}", dir.display()))?;
    let manifest = export_review_bundle(
        &dir,
        &plan,
        &matches,
        &MaskCrops::new(&tracks),
        cfg.tau_match,
    )?;
    let missing = manifest
        .boundaries
        .iter()
        .flat_map(|b| &b.proposals)
        .filter(|p| p.crop_missing)
        .count();
    if missing > 0 {
        log::warn!("{missing} proposals have missing crops");
    }
    Ok(json!({"planner": cfg, "review": dir, "boundaries": manifest.boundaries.len()}))
}

fn apply(ctx: &Ctx, args: &ApplyArgs) -> Result<Value> {
    let plan = load_plan(&args.plan)?;
    let tracks = load_tracks(&args.tracks)?;
    let corr = load_corrections(&args.corrections)?;
    if corr.video_id != plan.video_id {
        bail!(playclass::Error::Validation(format!(
            "corrections are for video {} but the plan is for {}",
            corr.video_id, plan.video_id
        )));
    }
    let fixed = apply_corrections(&tracks, &plan.boundaries, &corr)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| ctx.out("tracks_corrected.tsv"));
    write_tracks(&out, &fixed, false)?;
    Ok(json!({"out": out, "records": fixed.len()}))
}

fn trackeval(ctx: &Ctx, args: &TrackevalArgs) -> Result<Value> {
    let gt = load_keyframes(&args.gt)?;
    let pred = load_tracks(&args.pred)?;
    let report = evaluate_tracking(&gt, &pred, &args.method, args.idf1_threshold)?;
    println!(
        "{}: HOTA {:.4} ± {:.4}  IDF1 {:.4} ± {:.4}  ({} videos, {:?} similarity)",
        report.method,
        report.hota.mean,
        report.hota.sd.unwrap_or(0.0),
        report.idf1.mean,
        report.idf1.sd.unwrap_or(0.0),
        report.videos.len(),
        report.similarity
    );
    let out = ctx.out("tracking_report.json");
    write_atomic(&out, (report.to_json() + "\n").as_bytes())?;
    Ok(json!({"report": out}))
}

fn print_report(name: &str, r: &playclass::loco::EvalReport) {
    let names = playclass::loco::class_names();
    let f1: Vec<String> = names
        .iter()
        .zip(&r.per_class)
        .map(|(n, c)| format!("{n} {:.1}", 100.0 * c.f1))
        .collect();
    println!(
        "{name}: macro-F1 {:.1} ± {:.1}  [{}]",
        100.0 * r.macro_f1,
        100.0 * r.fold_sd.unwrap_or(0.0),
        f1.join(", ")
    );
}

fn train(ctx: &Ctx) -> Result<Value> {
    let spec = ctx.run_spec()?;
    let data = spec.data.load()?;
    let run = run_loco(&data, &spec)?;
    for f in &run.folds {
        for w in &f.warnings {
            log::warn!("fold {}: {w}", f.fold.fold_id);
        }
        let meta = json!({"run": spec.name, "fold": f.fold, "best_epoch": f.best_epoch, "class_weights": f.class_weights});
        save_checkpoint(
            &ctx.out(&format!("fold{}.ckpt", f.fold.fold_id)),
            &f.params,
            &meta,
        )?;
    }
    run.write(&ctx.out_dir)?;
    print_report(&spec.name, &run.report);
    Ok(json!({"spec": spec}))
}

fn evaluate_cmd(ctx: &Ctx, args: &EvaluateArgs) -> Result<Value> {
    let matrices = if let Some(p) = &args.predictions {
        let preds = load_predictions(p)?;
        let mut by_fold: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for w in preds {
            let e = by_fold.entry(w.fold_id).or_default();
            e.0.push(w.truth);
            e.1.push(w.predicted);
        }
        by_fold
            .values()
            .map(|(t, p)| ConfusionMatrix::from_predictions(t, p, Category::TRAINED.len()))
            .collect()
    } else if !args.confusion.is_empty() {
        args.confusion
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                Ok(ConfusionMatrix::parse_csv(&text)?)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        bail!(Usage("evaluate needs --predictions or --confusion".into()));
    };
    let report = evaluate(&matrices)?;
    write_json(&ctx.out("evaluation.json"), &report)?;
    write_confusion_csv(&ctx.out("confusion.csv"), &report.confusion)?;
    write_atomic(
        &ctx.out("confusion_percent.csv"),
        confusion_percent_csv(&report.confusion).as_bytes(),
    )?;
    print_report("pooled", &report);
    Ok(json!({"folds": matrices.len()}))
}

fn ablate(ctx: &Ctx, args: &AblateArgs) -> Result<Value> {
    let spec = ctx.run_spec()?;
    let names = if args.toggles.is_empty() {
        spec.toggles.clone()
    } else {
        args.toggles.clone()
    };
    let toggles = parse_toggles(&names)?;
    let data = spec.data.load()?;
    let (table, _) = run_ablation_grid(&spec, &data, &toggles)?;
    write_json(&ctx.out("ablation.json"), &table)?;
    write_atomic(&ctx.out("ablation.csv"), table.to_csv().as_bytes())?;
    for row in &table.rows {
        print_report(&row.name, &row.report);
    }
    Ok(json!({"spec": spec, "toggles": names}))
}

fn analyze(ctx: &Ctx, args: &AnalyzeArgs) -> Result<Value> {
    let labels: Vec<_> = load_labels(&args.labels)?
        .into_iter()
        .filter(|l| !l.excluded)
        .collect();
    let keys: Vec<_> = labels.iter().map(|l| l.key()).collect();
    let fine: Vec<String> = labels
        .iter()
        .map(|l| l.behaviour.name().to_string())
        .collect();
    let coarse: Vec<String> = labels
        .iter()
        .map(|l| l.category.name().to_string())
        .collect();
    let mut outputs = BTreeMap::new();

    let mut names = Vec::new();
    let mut reps = Vec::new();
    for dir in &args.embeddings {
        let bundle = load_embeddings(dir)?;
        let pooled = mean_pool_bundle(&bundle, &keys)?;
        let knn = knn_probe(pooled.view(), &fine, &coarse)?;
        let tag = bundle.backbone_id.replace(['/', ' '], "_");
        write_atomic(
            &ctx.out(&format!("knn_{tag}.csv")),
            knn_csv(&knn).as_bytes(),
        )?;
        write_atomic(
            &ctx.out(&format!("embeddings_{tag}.csv")),
            embeddings_csv(&keys, &fine, &pooled)?.as_bytes(),
        )?;
        if names.is_empty() {
            write_atomic(&ctx.out("knn.csv"), knn_csv(&knn).as_bytes())?;
        }
        names.push(bundle.backbone_id.clone());
        reps.push(pooled);
    }
    if !reps.is_empty() {
        let table = CkaTable {
            names: names.clone(),
            matrix: cka_matrix(&reps)?,
        };
        write_cka_csv(&ctx.out("cka.csv"), &table)?;
        outputs.insert("backbones", json!(names));
    }

    if let Some(p) = &args.predictions {
        let preds = load_predictions(p)?;
        let truth: Vec<usize> = preds.iter().map(|w| w.truth).collect();
        let pred: Vec<usize> = preds.iter().map(|w| w.predicted).collect();
        let m = ConfusionMatrix::from_predictions(&truth, &pred, Category::TRAINED.len());
        write_atomic(
            &ctx.out("confusion_percent.csv"),
            confusion_percent_csv(&m).as_bytes(),
        )?;
        if let Some(fp) = &args.features {
            let class = playclass::loco::class_names()
                .iter()
                .position(|n| *n == args.category)
                .ok_or_else(|| {
                    playclass::Error::Config(format!("unknown category {:?}", args.category))
                })?;
            let rows = distance_accuracy_rows(&preds, &load_features(fp)?, &args.distance_column)?;
            let rows: Vec<_> = rows.into_iter().filter(|r| r.truth == class).collect();
            let x: Vec<f64> = rows.iter().map(|r| r.distance).collect();
            let y: Vec<f64> = rows
                .iter()
                .map(|r| f64::from(u8::from(r.correct)))
                .collect();
            let result = match args.permutations {
                Some(n) => spearman_permutation(&x, &y, n, ctx.seed.unwrap_or(0))?,
                None => spearman(&x, &y)?,
            };
            println!(
                "spearman rho {:.4}, p {:.3e} (n = {})",
                result.rho, result.p_value, result.n
            );
            write_json(
                &ctx.out("spearman.json"),
                &json!({
                    "x": args.distance_column,
                    "y": format!("correct ({})", args.category),
                    "rho": result.rho,
                    "p_value": result.p_value,
                    "n": result.n,
                    "method": if args.permutations.is_some() { "permutation" } else { "t" },
                    "windows": rows,
                }),
            )?;
        }
    }
    Ok(json!(outputs))
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let ctx = Ctx {
        out_dir: cli.out_dir.clone(),
        seed: cli.seed,
        config: cli.config.clone(),
    };
    let resolved = match &cli.command {
        Command::Validate(a) => validate(a)?,
        Command::Features(a) => features(&ctx, a)?,
        Command::PlanChunks(a) => plan_chunks(&ctx, a)?,
        Command::MatchIds(a) => match_ids(&ctx, a)?,
        Command::ReviewExport(a) => review_export(&ctx, a)?,
        Command::ApplyCorrections(a) => apply(&ctx, a)?,
        Command::Trackeval(a) => trackeval(&ctx, a)?,
        Command::Train => train(&ctx)?,
        Command::Evaluate(a) => evaluate_cmd(&ctx, a)?,
        Command::Ablate(a) => ablate(&ctx, a)?,
        Command::Analyze(a) => analyze(&ctx, a)?,
    };
    write_json(
        &ctx.out("run.json"),
        &json!({"version": env!("CARGO_PKG_VERSION"), "invocation": cli, "resolved": resolved}),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PLAYCLASS_LOG", "info"))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<Usage>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
