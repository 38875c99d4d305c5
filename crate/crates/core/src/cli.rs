//! Command-line entry point: one subcommand per pipeline stage.
//!
//! stdout carries only machine-readable results; diagnostics and the resolved
//! configuration go to stderr through `log`. Exit codes: 0 success, 1 usage or
//! input error, 2 internal failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;

use crate::config::{Resolved, RunConfig};
use crate::corpus::{self, default_scenarios, CorpusConfig, Durations, Manifest};
use crate::dsp::DspConfig;
use crate::embedder::{load_checkpoint, EmbeddingModel, ModelConfig};
use crate::error::{Error, Result};
use crate::eval::{self, EvalConfig, ProjectionMethod, TsneConfig};
use crate::features::{assemble_features, embed_utterance, scenario_vector};
use crate::matrix_file;
use crate::pipeline::{extract_all, UtteranceFeatures};
use crate::sampling::{SamplerConfig, SamplingMode};
use crate::training::{self, AdamConfig, TrainConfig};

pub const SCENARIO_VECTORS: &str = "scenario_vectors.scnm";
pub const SCENARIO_INDEX: &str = "scenario_vectors.tsv";

#[derive(Debug, Parser)]
#[command(name = "scenaware", version, about = "Scenario-aware speech features: corpus, training, embedding, evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// key=value file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads (default 1 for reproducible scheduling)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Source {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// trained model checkpoint (.scne)
    #[arg(long)]
    ckpt: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic multi-scenario corpus
    GenCorpus {
        #[command(flatten)]
        common: Common,
        /// number of default scenarios to use (2-5)
        #[arg(long)]
        scenarios: Option<usize>,
        #[arg(long)]
        utts: Option<usize>,
        /// fixed utterance duration in seconds (default: uniform 2-10 s)
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Dump log-mel and MFCC matrices per utterance
    Extract {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Train the window embedder with triplet loss
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// positive window radius in seconds (temporal mode)
        #[arg(long)]
        tau: Option<f64>,
        /// temporal | clip
        #[arg(long)]
        mode: Option<SamplingMode>,
        #[arg(long = "batch-clips")]
        batch_clips: Option<usize>,
        #[arg(long = "batch-windows")]
        batch_windows: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long = "checkpoint-every")]
        checkpoint_every: Option<usize>,
    },
    /// Write per-utterance scenario vectors
    Embed {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
    },
    /// Write per-frame [MFCC ; aux ; scenario] features
    Assemble {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
        /// TSV of utt_id followed by the auxiliary vector values
        #[arg(long)]
        aux: Option<PathBuf>,
    },
    /// Compute AUC, purity and probe accuracies; write the report and a projection
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
        /// pca | tsne
        #[arg(long)]
        method: Option<ProjectionMethod>,
        #[arg(long)]
        perplexity: Option<f64>,
    },
    /// 2D projection of scenario vectors as CSV
    Project {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        method: Option<ProjectionMethod>,
        #[arg(long)]
        perplexity: Option<f64>,
    },
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            if code == 0 {
                print!("{e}");
            } else {
                eprint!("{e}");
            }
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

struct Context {
    cfg: RunConfig,
    resolved: Resolved,
    seed: u64,
    threads: usize,
    out: PathBuf,
}

impl Context {
    fn new(common: Common, command: &str, keys: &[&str]) -> Result<Self> {
        let cfg = match &common.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let mut allowed = vec!["seed", "threads", "out"];
        allowed.extend_from_slice(keys);
        cfg.check_keys(&allowed)?;
        let seed = cfg.pick(common.seed, "seed")?.unwrap_or(7);
        let threads = cfg.pick(common.threads, "threads")?.unwrap_or(1);
        if threads == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        let out = cfg
            .pick(common.out, "out")?
            .ok_or_else(|| Error::invalid("--out is required"))?;
        let mut resolved = Resolved::default();
        resolved.set("command", command).set("seed", seed).set("threads", threads).set("out", out.display());
        Ok(Self {
            cfg,
            resolved,
            seed,
            threads,
            out,
        })
    }

    fn path(&mut self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf> {
        let p: PathBuf = self
            .cfg
            .pick(flag, key)?
            .ok_or_else(|| Error::invalid(format!("--{key} is required")))?;
        self.resolved.set(key, p.display());
        Ok(p)
    }

    /// Logs the resolved configuration and installs the thread pool.
    fn start(&self) -> Result<()> {
        for line in self.resolved.render().lines() {
            log::info!("config {line}");
        }
        // a pool may already exist when several commands run in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(self.threads).build_global();
        Ok(())
    }

    fn create_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))
    }
}

const TRAIN_KEYS: &[&str] = &[
    "manifest",
    "steps",
    "lr",
    "delta",
    "tau",
    "mode",
    "batch-clips",
    "batch-windows",
    "dim",
    "checkpoint-every",
];

fn dispatch(command: Command) -> Result<Vec<String>> {
    match command {
        Command::GenCorpus {
            common,
            scenarios,
            utts,
            duration,
        } => {
            let mut ctx = Context::new(common, "gen-corpus", &["scenarios", "utts", "duration"])?;
            let all = default_scenarios();
            let count = ctx.cfg.pick(scenarios, "scenarios")?.unwrap_or(all.len());
            if !(2..=all.len()).contains(&count) {
                return Err(Error::invalid(format!("--scenarios must be in 2..={}", all.len())));
            }
            let mut cfg = CorpusConfig {
                scenarios: all.into_iter().take(count).collect(),
                seed: ctx.seed,
                ..CorpusConfig::default()
            };
            cfg.utts_per_scenario = ctx.cfg.pick(utts, "utts")?.unwrap_or(cfg.utts_per_scenario);
            if let Some(d) = ctx.cfg.pick(duration, "duration")? {
                cfg.durations = Durations::Fixed(d);
            }
            cfg.validate()?;
            ctx.resolved
                .set("scenarios", count)
                .set("utts", cfg.utts_per_scenario)
                .set("duration", format!("{:?}", cfg.durations))
                .set("sample_rate", cfg.sample_rate)
                .set("param_spread", cfg.param_spread);
            ctx.start()?;
            let manifest = corpus::generate_corpus(&cfg, &ctx.out)?;
            Ok(vec![ctx.out.join(corpus::MANIFEST_FILE).display().to_string(), format!("{}", manifest.len())])
        }
        Command::Extract { common, manifest } => {
            let mut ctx = Context::new(common, "extract", &["manifest"])?;
            let manifest = load(&mut ctx, manifest)?;
            ctx.start()?;
            let utts = extract_all(&manifest, &DspConfig::default())?;
            ctx.create_out()?;
            let mut lines = Vec::with_capacity(utts.len());
            for u in &utts {
                let id = &u.entry.utt_id;
                let logmel = ctx.out.join(format!("{id}.logmel.scnm"));
                let mfcc = ctx.out.join(format!("{id}.mfcc.scnm"));
                matrix_file::write(&logmel, &u.logmel.frames)?;
                matrix_file::write(&mfcc, &u.mfcc.frames)?;
                lines.push(format!("{id}\t{}\t{}", u.mfcc.frames.nrows(), mfcc.display()));
            }
            Ok(lines)
        }
        Command::Train {
            common,
            manifest,
            steps,
            lr,
            delta,
            tau,
            mode,
            batch_clips,
            batch_windows,
            dim,
            checkpoint_every,
        } => {
            let mut ctx = Context::new(common, "train", TRAIN_KEYS)?;
            let c = ctx.cfg.clone();
            let mut cfg = TrainConfig {
                seed: ctx.seed,
                ..TrainConfig::default()
            };
            cfg.steps = c.pick(steps, "steps")?.unwrap_or(cfg.steps);
            cfg.adam = AdamConfig {
                learning_rate: c.pick(lr, "lr")?.unwrap_or(cfg.adam.learning_rate),
                ..cfg.adam
            };
            cfg.delta = c.pick(delta, "delta")?.unwrap_or(cfg.delta);
            cfg.clips_per_batch = c.pick(batch_clips, "batch-clips")?.unwrap_or(cfg.clips_per_batch);
            cfg.windows_per_clip = c.pick(batch_windows, "batch-windows")?.unwrap_or(cfg.windows_per_clip);
            cfg.checkpoint_every = c.pick(checkpoint_every, "checkpoint-every")?.unwrap_or(cfg.checkpoint_every);
            let mut sampler = SamplerConfig {
                rng_seed: ctx.seed,
                ..SamplerConfig::default()
            };
            sampler.mode = c.pick(mode, "mode")?.unwrap_or(sampler.mode);
            sampler.tau_s = c.pick(tau, "tau")?.unwrap_or(sampler.tau_s);
            let dsp = DspConfig::default();
            let model_cfg = ModelConfig {
                bands: dsp.bands,
                frames: dsp.window_frames,
                dim: c.pick(dim, "dim")?.unwrap_or(ModelConfig::default().dim),
                seed: ctx.seed,
                ..ModelConfig::default()
            };
            cfg.validate()?;
            cfg.adam.validate()?;
            if !(sampler.tau_s > 0.0) {
                return Err(Error::invalid("--tau must be positive"));
            }
            if model_cfg.dim < 2 {
                return Err(Error::invalid("--dim must be at least 2"));
            }
            let manifest = load(&mut ctx, manifest)?;
            ctx.resolved
                .set("steps", cfg.steps)
                .set("lr", cfg.adam.learning_rate)
                .set("delta", cfg.delta)
                .set("tau", sampler.tau_s)
                .set("mode", sampler.mode)
                .set("batch-clips", cfg.clips_per_batch)
                .set("batch-windows", cfg.windows_per_clip)
                .set("dim", model_cfg.dim)
                .set("hidden", format!("{:?}", model_cfg.hidden))
                .set("checkpoint-every", cfg.checkpoint_every);
            ctx.start()?;
            let utts = extract_all(&manifest, &dsp)?;
            let clips: Vec<_> = utts.into_iter().map(|u| u.windows).collect();
            training::train(&clips, &sampler, &model_cfg, &cfg, Some(&ctx.out))?;
            Ok(vec![ctx.out.join(training::FINAL_CHECKPOINT).display().to_string()])
        }
        Command::Embed { common, source } => {
            let mut ctx = Context::new(common, "embed", &["manifest", "ckpt"])?;
            let (manifest, model) = load_source(&mut ctx, source)?;
            ctx.start()?;
            let utts = extract_for(&manifest, &model)?;
            let mut rows = Vec::with_capacity(utts.len());
            let mut index = String::new();
            for (i, u) in utts.iter().enumerate() {
                let emb = embed_utterance(&model, &u.windows)?;
                rows.push(scenario_vector(&u.entry.utt_id, emb.view())?.values);
                index.push_str(&format!("{i}\t{}\n", u.entry.utt_id));
            }
            let matrix = stack_rows(&rows, model.dim());
            ctx.create_out()?;
            let path = ctx.out.join(SCENARIO_VECTORS);
            matrix_file::write(&path, &matrix)?;
            let index_path = ctx.out.join(SCENARIO_INDEX);
            fs::write(&index_path, index).map_err(|e| Error::io(&index_path, e))?;
            Ok(vec![path.display().to_string(), index_path.display().to_string()])
        }
        Command::Assemble { common, source, aux } => {
            let mut ctx = Context::new(common, "assemble", &["manifest", "ckpt", "aux"])?;
            let aux_path: Option<PathBuf> = ctx.cfg.pick(aux, "aux")?;
            if let Some(p) = &aux_path {
                ctx.resolved.set("aux", p.display());
            }
            let (manifest, model) = load_source(&mut ctx, source)?;
            let aux = aux_path.as_deref().map(load_aux).transpose()?;
            if let Some(aux) = &aux {
                if let Some(missing) = manifest.entries.iter().find(|e| !aux.contains_key(&e.utt_id)) {
                    return Err(Error::invalid(format!("aux file has no row for {}", missing.utt_id)));
                }
            }
            ctx.start()?;
            let utts = extract_for(&manifest, &model)?;
            let mut assembled = Vec::with_capacity(utts.len());
            for u in &utts {
                let emb = embed_utterance(&model, &u.windows)?;
                let sv = scenario_vector(&u.entry.utt_id, emb.view())?;
                let a = aux.as_ref().map(|m| m[&u.entry.utt_id].as_slice());
                assembled.push((u.entry.utt_id.clone(), assemble_features(&u.mfcc, a, &sv)?));
            }
            ctx.create_out()?;
            let mut lines = Vec::with_capacity(assembled.len());
            for (id, feat) in assembled {
                let path = ctx.out.join(format!("{id}.feats.scnm"));
                matrix_file::write(&path, &feat.frames)?;
                let (r, c) = feat.frames.dim();
                lines.push(format!("{id}\t{r}\t{c}\t{}", path.display()));
            }
            Ok(lines)
        }
        Command::Eval {
            common,
            source,
            method,
            perplexity,
        } => {
            let mut ctx = Context::new(common, "eval", &["manifest", "ckpt", "method", "perplexity"])?;
            let cfg = eval_config(&mut ctx, method, perplexity)?;
            let (manifest, model) = load_source(&mut ctx, source)?;
            ctx.start()?;
            let report = eval::evaluate(&manifest, &model, &cfg, &ctx.out)?;
            Ok(vec![report.to_json().trim_end().to_string()])
        }
        Command::Project {
            common,
            source,
            method,
            perplexity,
        } => {
            let mut ctx = Context::new(common, "project", &["manifest", "ckpt", "method", "perplexity"])?;
            let cfg = eval_config(&mut ctx, method, perplexity)?;
            let (manifest, model) = load_source(&mut ctx, source)?;
            ctx.start()?;
            let utts = eval::embed_corpus(&model, &extract_for(&manifest, &model)?)?;
            let coords = eval::project_2d(eval::scenario_matrix(&utts)?.view(), cfg.projection, &cfg.tsne, cfg.seed)?;
            ctx.create_out()?;
            let path = ctx.out.join(eval::PROJECTION_FILE);
            let ids: Vec<String> = utts.iter().map(|u| u.utt_id.clone()).collect();
            let labels: Vec<String> = utts.iter().map(|u| u.label.clone()).collect();
            eval::write_projection_csv(&path, &ids, &coords, &labels)?;
            Ok(vec![path.display().to_string()])
        }
    }
}

fn load(ctx: &mut Context, flag: Option<PathBuf>) -> Result<Manifest> {
    let path = ctx.path(flag, "manifest")?;
    let manifest = corpus::load_manifest(&path)?;
    if manifest.is_empty() {
        return Err(Error::invalid(format!("manifest {} has no entries", path.display())));
    }
    for e in &manifest.entries {
        let audio = manifest.audio_path(e);
        if !audio.is_file() {
            return Err(Error::io(
                &audio,
                std::io::Error::new(std::io::ErrorKind::NotFound, "audio listed in manifest is missing"),
            ));
        }
    }
    Ok(manifest)
}

fn load_source(ctx: &mut Context, source: Source) -> Result<(Manifest, EmbeddingModel)> {
    let manifest = load(ctx, source.manifest)?;
    let ckpt = ctx.path(source.ckpt, "ckpt")?;
    Ok((manifest, load_checkpoint(&ckpt)?))
}

fn eval_config(ctx: &mut Context, method: Option<ProjectionMethod>, perplexity: Option<f64>) -> Result<EvalConfig> {
    let mut cfg = EvalConfig {
        seed: ctx.seed,
        ..EvalConfig::default()
    };
    cfg.projection = ctx.cfg.pick(method, "method")?.unwrap_or(cfg.projection);
    cfg.tsne = TsneConfig {
        perplexity: ctx.cfg.pick(perplexity, "perplexity")?.unwrap_or(cfg.tsne.perplexity),
        ..cfg.tsne
    };
    if !(cfg.tsne.perplexity > 0.0) {
        return Err(Error::invalid("--perplexity must be positive"));
    }
    ctx.resolved
        .set("method", cfg.projection)
        .set("perplexity", cfg.tsne.perplexity)
        .set("auc_pairs", cfg.auc_pairs)
        .set("kmeans_restarts", cfg.kmeans_restarts)
        .set("probe_l2", cfg.probe_l2);
    Ok(cfg)
}

/// Extracts features with a front end matching the checkpoint's window shape.
fn extract_for(manifest: &Manifest, model: &EmbeddingModel) -> Result<Vec<UtteranceFeatures>> {
    let dsp = DspConfig::default();
    if model.window_shape() != (dsp.bands, dsp.window_frames) {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?} windows", (dsp.bands, dsp.window_frames)),
            actual: format!("checkpoint expects {:?}", model.window_shape()),
        });
    }
    extract_all(manifest, &dsp)
}

fn stack_rows(rows: &[ndarray::Array1<f64>], dim: usize) -> Array2<f64> {
    let mut m = Array2::zeros((rows.len(), dim));
    for (mut dst, src) in m.rows_mut().into_iter().zip(rows) {
        dst.assign(src);
    }
    m
}

fn load_aux(path: &Path) -> Result<std::collections::HashMap<String, Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::collections::HashMap::new();
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Malformed {
            what: "aux",
            line: i + 1,
            reason,
        };
        let mut cols = line.split('\t');
        let id = cols.next().unwrap_or_default().to_string();
        let values = cols
            .map(|v| v.trim().parse::<f64>().map_err(|e| bad(format!("{v:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(bad("expected utt_id followed by finite values".into()));
        }
        if *width.get_or_insert(values.len()) != values.len() {
            return Err(bad(format!("expected {} values, found {}", width.unwrap_or(0), values.len())));
        }
        if out.insert(id.clone(), values).is_some() {
            return Err(bad(format!("duplicate utt_id {id}")));
        }
    }
    Ok(out)
}
