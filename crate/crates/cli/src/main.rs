use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::{json, Value};

use ctxembed::config::{RunConfig, KEYS};
use ctxembed::context::{generate_pairs, read_pairs, write_pairs};
use ctxembed::embed::{train, EmbeddingFile};
use ctxembed::eval::{self, EvalReport, HitRow, SeriesRow};
use ctxembed::synth::{self, Scenario, ScenarioSpec};
use ctxembed::{write_atomic, Corpus, Error, Result};

/// Learn context-aware object embeddings from annotated video.
#[derive(Parser)]
#[command(name = "ctxembed", version)]
struct Cli {
    /// Worker threads for pair scoring and gradient evaluation.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario as an annotation file.
    Gen(GenArgs),
    /// Extract training pairs from an annotation file.
    Pairs(PairsArgs),
    /// Train an embedding table on a pair file.
    Train(TrainArgs),
    /// Compute metrics over one or more embedding files.
    Eval(EvalArgs),
    /// Print the nearest neighbors of a label.
    Nn(NnArgs),
    /// Cosine similarity of two labels at every timestamp.
    Series(SeriesArgs),
    /// Write the most similar pairs per timestamp as a narrative prompt.
    Narrate(NarrateArgs),
    /// Project embeddings onto their top two principal components.
    Pca(PcaArgs),
}

/// Configuration layering: defaults, then `--config`, then `--set` and the
/// dedicated flags.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, `KEY=VALUE` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    timestamps: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for kv in &self.set {
            let (k, v) =
                kv.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k, v)?;
        }
        let flags = [
            ("objective", self.objective.clone()),
            ("dim", self.dim.map(|v| v.to_string())),
            ("timestamps", self.timestamps.map(|v| v.to_string())),
            ("epochs", self.epochs.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenArgs {
    /// grid5x5, seq4 or school-event.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Timestamps (school-event only).
    #[arg(long, default_value_t = 10)]
    timestamps: usize,
    /// Annotation file to write.
    #[arg(long)]
    out: PathBuf,
    /// Ground truth file; defaults to `ground_truth.json` beside `--out`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct PairsArgs {
    /// Annotation file.
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    pairs: PathBuf,
    /// Annotation file the pairs were extracted from.
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Embedding file to write.
    #[arg(long)]
    out: PathBuf,
    /// Loss trace CSV; defaults to `<out>.loss.csv`.
    #[arg(long)]
    loss: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Embedding files (repeatable).
    #[arg(long = "emb", required = true)]
    emb: Vec<PathBuf>,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 1)]
    timestamps: usize,
    /// Comma list of hit_at_k, kmeans.
    #[arg(long, default_value = "hit_at_k")]
    metric: String,
    /// Neighbor counts for hit@k.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10")]
    k: Vec<usize>,
    /// Clusters for kmeans.
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    /// Ground truth with `classes` (grid5x5) for the Rand index.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for hit_at_k.csv and report.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NnArgs {
    #[arg(long)]
    emb: PathBuf,
    #[arg(long)]
    label: String,
    /// Timestamp slice (temporal tables).
    #[arg(long)]
    t: Option<usize>,
    #[arg(long, default_value_t = 10)]
    k: usize,
}

#[derive(Args)]
struct SeriesArgs {
    #[arg(long)]
    emb: PathBuf,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    /// CSV output; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NarrateArgs {
    #[arg(long)]
    emb: PathBuf,
    /// Pairs listed per timestamp.
    #[arg(long, default_value_t = 6)]
    m: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PcaArgs {
    #[arg(long)]
    emb: PathBuf,
    /// Timestamp slice; all slices jointly when absent.
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn keys_help() -> String {
    let mut s = String::from("Config keys (for --config files and --set):\n");
    for (k, doc) in KEYS {
        s.push_str(&format!("  {k:<16} {doc}\n"));
    }
    s
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_manifest(out: &Path, command: &str, body: Value) -> Result<()> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let doc = json!({
        "tool": "ctxembed",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "argv": argv,
        "output": out.file_name().map(|n| n.to_string_lossy().into_owned()),
        "details": body,
    });
    write_atomic(&manifest_path(out), serde_json::to_string_pretty(&doc)?.as_bytes())
}

fn config_echo(cfg: &RunConfig) -> Value {
    json!({ "text": cfg.to_text(), "resolved": cfg })
}

fn label_of(file: &EmbeddingFile, name: &str) -> Result<usize> {
    file.label_id(name).ok_or_else(|| Error::Index(format!("unknown label {name:?}")))
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let scenario: Scenario = a.scenario.parse()?;
    let spec = ScenarioSpec { scenario, n_frames: a.frames, seed: a.seed, n_timestamps: a.timestamps };
    let g = synth::generate(&spec)?;
    let mut buf = Vec::new();
    ctxembed::corpus::write_annotations(&g.records, &mut buf)?;
    let truth =
        a.truth.clone().unwrap_or_else(|| a.out.parent().unwrap_or_else(|| Path::new("")).join("ground_truth.json"));
    write_atomic(&truth, serde_json::to_string_pretty(&g.ground_truth)?.as_bytes())?;
    write_atomic(&a.out, &buf)?;
    write_manifest(&a.out, "gen", json!({ "spec": spec, "records": g.records.len() }))
}

fn cmd_pairs(a: &PairsArgs) -> Result<()> {
    let cfg = a.cfg.resolve()?;
    let corpus = Corpus::ingest(&a.corpus, cfg.timestamps)?;
    let pairs = generate_pairs(&corpus, &cfg.pair_config()?)?;
    let mut buf = Vec::new();
    write_pairs(&pairs, &mut buf)?;
    write_atomic(&a.out, &buf)?;
    log::info!("{} pairs written to {}", pairs.len(), a.out.display());
    write_manifest(
        &a.out,
        "pairs",
        json!({ "config": config_echo(&cfg), "pairs": pairs.len(), "seeds": { "pair_seed": cfg.pair_seed } }),
    )
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let cfg = a.cfg.resolve()?;
    let corpus = Corpus::ingest(&a.corpus, cfg.timestamps)?;
    let pairs = read_pairs(std::fs::File::open(&a.pairs)?)?;
    let out = train(&pairs, &cfg.train_config(), &corpus)?;
    let file = EmbeddingFile::new(out.embedding, corpus.labels().to_vec())?.with_provenance(
        cfg.objective,
        cfg.seed,
        config_echo(&cfg),
    );
    let mut loss = String::from("epoch,mean_loss\n");
    for (i, l) in out.loss_trace.iter().enumerate() {
        loss.push_str(&format!("{i},{l}\n"));
    }
    let loss_path = a.loss.clone().unwrap_or_else(|| {
        let mut p = a.out.as_os_str().to_owned();
        p.push(".loss.csv");
        PathBuf::from(p)
    });
    write_atomic(&loss_path, loss.as_bytes())?;
    file.save(&a.out)?;
    write_manifest(
        &a.out,
        "train",
        json!({
            "config": config_echo(&cfg),
            "seeds": { "seed": cfg.seed },
            "pairs": pairs.len(),
            "final_loss": out.loss_trace.last(),
        }),
    )
}

fn truth_classes(path: &Path, labels: &[String]) -> Result<Vec<usize>> {
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let classes = doc["classes"]
        .as_array()
        .ok_or_else(|| Error::Format { path: path.to_path_buf(), message: "no classes array".into() })?;
    labels
        .iter()
        .map(|l| {
            classes
                .iter()
                .position(|c| c["labels"].as_array().is_some_and(|ls| ls.iter().any(|x| x == l.as_str())))
                .ok_or_else(|| Error::Eval(format!("label {l:?} has no ground-truth class")))
        })
        .collect()
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let corpus = Corpus::ingest(&a.corpus, a.timestamps)?;
    let metrics: Vec<&str> = a.metric.split(',').map(str::trim).collect();
    for m in &metrics {
        if !["hit_at_k", "kmeans"].contains(m) {
            return Err(Error::Config(format!("unknown metric {m:?} (expected hit_at_k or kmeans)")));
        }
    }
    let mut report = EvalReport {
        config: json!({ "metrics": metrics, "k": a.k, "clusters": a.clusters, "timestamps": a.timestamps }),
        ..EvalReport::default()
    };
    report.seeds.insert("eval_seed".into(), a.seed);
    let mut rows = Vec::new();
    let sample = eval::default_sample(&corpus);
    for path in &a.emb {
        let file = EmbeddingFile::load(path)?;
        if file.labels() != corpus.labels() {
            return Err(Error::Config(format!("{} was not trained on this corpus", path.display())));
        }
        let name = file.header.objective.map_or_else(|| path.display().to_string(), |o| o.to_string());
        if let Some(s) = file.header.seed {
            report.seeds.insert(format!("{name}.seed"), s);
        }
        if metrics.contains(&"hit_at_k") {
            for &k in &a.k {
                let value = eval::hit_at_k(&file.table, &corpus, k, &sample)?;
                report.metrics.insert(format!("{name}.hit_at_{k}"), json!(value));
                rows.push(HitRow { objective: name.clone(), k, value });
            }
        }
        if metrics.contains(&"kmeans") {
            let c = eval::kmeans_silhouette(&file.table, a.clusters, a.seed)?;
            report.metrics.insert(format!("{name}.silhouette"), json!(c.silhouette));
            if let Some(truth) = &a.truth {
                let gt = truth_classes(truth, file.labels())?;
                report.metrics.insert(format!("{name}.rand_index"), json!(eval::rand_index(&c.assignment, &gt)?));
            }
            report.metrics.insert(format!("{name}.assignment"), json!(c.assignment));
        }
    }
    std::fs::create_dir_all(&a.out)?;
    if metrics.contains(&"hit_at_k") {
        let csv_path = a.out.join("hit_at_k.csv");
        write_atomic(&csv_path, eval::hit_at_k_csv(&rows)?.as_bytes())?;
        write_manifest(&csv_path, "eval", report.config.clone())?;
    }
    let report_path = a.out.join("report.json");
    write_atomic(&report_path, report.to_json()?.as_bytes())
}

fn cmd_nn(a: &NnArgs) -> Result<()> {
    let file = EmbeddingFile::load(&a.emb)?;
    let q = label_of(&file, &a.label)?;
    let nn = eval::nearest_neighbors(&file.table, q, a.t, a.k)?;
    for (l, s) in nn.neighbors {
        println!("{}\t{s:.6}", file.labels()[l]);
    }
    Ok(())
}

fn cmd_series(a: &SeriesArgs) -> Result<()> {
    let file = EmbeddingFile::load(&a.emb)?;
    let (x, y) = (label_of(&file, &a.a)?, label_of(&file, &a.b)?);
    let pair = format!("{}|{}", a.a, a.b);
    let rows: Vec<SeriesRow> = eval::similarity_series(&file.table, x, y)?
        .into_iter()
        .enumerate()
        .map(|(t, similarity)| SeriesRow { pair: pair.clone(), t, similarity })
        .collect();
    let text = eval::series_csv(&rows)?;
    match &a.out {
        Some(out) => {
            write_atomic(out, text.as_bytes())?;
            write_manifest(out, "series", json!({ "emb": a.emb, "a": a.a, "b": a.b }))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_narrate(a: &NarrateArgs) -> Result<()> {
    let file = EmbeddingFile::load(&a.emb)?;
    let text = eval::narrative_prompt(&file.table, file.labels(), a.m)?;
    write_atomic(&a.out, text.as_bytes())?;
    write_manifest(&a.out, "narrate", json!({ "emb": a.emb, "m": a.m }))
}

fn cmd_pca(a: &PcaArgs) -> Result<()> {
    let file = EmbeddingFile::load(&a.emb)?;
    let rows = eval::pca_table(&file.table, a.t)?;
    write_atomic(&a.out, eval::pca_csv(&rows, file.labels())?.as_bytes())?;
    write_manifest(&a.out, "pca", json!({ "emb": a.emb, "t": a.t }))
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Pairs(a) => cmd_pairs(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Nn(a) => cmd_nn(a),
        Command::Series(a) => cmd_series(a),
        Command::Narrate(a) => cmd_narrate(a),
        Command::Pca(a) => cmd_pca(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = Cli::command().after_long_help(keys_help()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}
