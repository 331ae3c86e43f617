//! Pipeline commands behind the `distill-parse` binary.
//!
//! Settings resolve in the order built-in defaults, language preset, config
//! file, command-line flags; later sources win. A config file holds one
//! `key = value` per line, `#` starts a comment, and the keys are the long
//! flag names (with `-` or `_`) plus the model-shape keys listed in
//! [`PipelineConfig::apply`].

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use rayon::prelude::*;

use crate::costs::CostKind;
use crate::decoders::Decoder;
use crate::ensemble::{
    build_training_votes, jackknife_split, load_parse_files, mbr_parse, tally_votes, SentenceVotes,
    VoteFile, VoteSource,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport, Punctuation, CHINESE_PUNCT_TAGS, ENGLISH_PUNCT_TAGS, GERMAN_PUNCT_TAGS};
use crate::scorers::{DecaySchedule, ScorerModel, ScorerVariant};
use crate::synth::{generate, SynthConfig};
use crate::training::{train, TrainConfig};
use crate::treebank::{read_conll, read_embeddings, write_conll, write_gold, ConllFormat, ParseTree, Sentence};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Language {
    English,
    Chinese,
    German,
    Custom,
}

impl std::str::FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "english" | "en" => Ok(Language::English),
            "chinese" | "zh" => Ok(Language::Chinese),
            "german" | "de" => Ok(Language::German),
            "custom" => Ok(Language::Custom),
            other => Err(Error::usage(format!("unknown language preset '{other}'"))),
        }
    }
}

/// Fully resolved settings of one command.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub language: Language,
    pub decoder: Decoder,
    pub punctuation: Punctuation,
    pub punct_tags: Vec<String>,
    pub format: ConllFormat,
    pub train: TrainConfig,
    /// Explicit base learning rate; the scorer's default otherwise.
    pub learning_rate: Option<f64>,
    pub seed: Option<u64>,
    pub folds: usize,
    pub models: usize,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl PipelineConfig {
    /// Defaults of a language preset: projective decoding without
    /// punctuation for English and Chinese, non-projective decoding with
    /// punctuation for German.
    pub fn preset(language: Language) -> Self {
        let (decoder, punctuation, tags): (Decoder, Punctuation, &[&str]) = match language {
            Language::English => (Decoder::Eisner, Punctuation::Exclude, ENGLISH_PUNCT_TAGS),
            Language::Chinese => (Decoder::Eisner, Punctuation::Exclude, CHINESE_PUNCT_TAGS),
            Language::German => (Decoder::default(), Punctuation::Include, GERMAN_PUNCT_TAGS),
            Language::Custom => (Decoder::default(), Punctuation::Include, &[]),
        };
        PipelineConfig {
            language,
            decoder,
            punctuation,
            punct_tags: tags.iter().map(|t| t.to_string()).collect(),
            format: ConllFormat::ConllX,
            train: TrainConfig {
                decoder,
                ..TrainConfig::linear()
            },
            learning_rate: None,
            seed: None,
            folds: 5,
            models: 5,
            jobs: 0,
        }
    }

    /// Set one key. Keys: `language` is handled by [`PipelineConfig::resolve`];
    /// `decoder`, `cost`, `punct`, `punct-tags` (comma separated), `format`,
    /// `seed`, `folds`, `models`, `jobs`, `epochs`, `scorer`,
    /// `learning-rate`, `decay`, `schedule`, `shuffle`, `train-labeler`,
    /// `lstm-dim`, `lstm-layers`, `pos-dim`, `word-dim`, `compose-dim`,
    /// `hidden-dim`, `labeler-hidden`, `linear-init`.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::usage(format!("'{key}' expects a number, got '{value}'")))
        }
        fn flag(key: &str, value: &str) -> Result<bool> {
            match value {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(Error::usage(format!("'{key}' expects true or false, got '{value}'"))),
            }
        }
        let s = &mut self.train.scorer;
        match key.replace('_', "-").as_str() {
            "language" => {}
            "decoder" => {
                self.decoder = value.parse()?;
                self.train.decoder = self.decoder;
            }
            "cost" => self.train.cost = value.parse()?,
            "punct" => self.punctuation = value.parse()?,
            "punct-tags" => {
                self.punct_tags = value
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(String::from)
                    .collect()
            }
            "format" => self.format = value.parse()?,
            "seed" => self.seed = Some(num(key, value)?),
            "folds" => self.folds = num(key, value)?,
            "models" => self.models = num(key, value)?,
            "jobs" => self.jobs = num(key, value)?,
            "epochs" => self.train.epochs = num(key, value)?,
            "scorer" => s.variant = value.parse()?,
            "learning-rate" => self.learning_rate = Some(num(key, value)?),
            "decay" => self.train.decay = num(key, value)?,
            "schedule" => self.train.schedule = value.parse::<DecaySchedule>()?,
            "shuffle" => self.train.shuffle = flag(key, value)?,
            "train-labeler" => self.train.train_labeler = flag(key, value)?,
            "lstm-dim" => s.lstm_dim = num(key, value)?,
            "lstm-layers" => s.lstm_layers = num(key, value)?,
            "pos-dim" => s.pos_dim = num(key, value)?,
            "word-dim" => s.word_dim = num(key, value)?,
            "compose-dim" => s.compose_dim = num(key, value)?,
            "hidden-dim" => s.hidden_dim = num(key, value)?,
            "labeler-hidden" => s.labeler_hidden = num(key, value)?,
            "linear-init" => s.linear_init = num(key, value)?,
            other => return Err(Error::usage(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    /// Resolve settings from an optional config file and flag values.
    pub fn resolve(config_file: Option<&Path>, flags: &[(&str, Option<String>)]) -> Result<Self> {
        let file_entries = match config_file {
            Some(path) => parse_config_file(path)?,
            None => Vec::new(),
        };
        let flag_language = flags
            .iter()
            .find(|(k, v)| *k == "language" && v.is_some())
            .and_then(|(_, v)| v.clone());
        let file_language = file_entries
            .iter()
            .find(|(k, _)| k.as_str() == "language")
            .map(|(_, v)| v.clone());
        let language = match flag_language.or(file_language) {
            Some(l) => l.parse()?,
            None => Language::Custom,
        };
        let mut config = PipelineConfig::preset(language);
        for (key, value) in &file_entries {
            config.apply(key, value)?;
        }
        for (key, value) in flags {
            if let Some(v) = value {
                config.apply(key, v)?;
            }
        }
        Ok(config)
    }

    /// Training settings with the seed and learning rate filled in.
    pub fn train_config(&self) -> TrainConfig {
        let learning_rate = self.learning_rate.unwrap_or(match self.train.scorer.variant {
            ScorerVariant::Linear => TrainConfig::linear().learning_rate,
            ScorerVariant::Bilstm => TrainConfig::bilstm().learning_rate,
        });
        TrainConfig {
            seed: self.seed.unwrap_or(1),
            learning_rate,
            ..self.train.clone()
        }
    }

    /// Fail in CI environments unless the seed was given explicitly.
    pub fn require_seed_in_ci(&self) -> Result<()> {
        let ci = std::env::var("CI").is_ok_and(|v| !v.is_empty() && v != "0" && v != "false");
        if ci && self.seed.is_none() {
            return Err(Error::usage("--seed is mandatory when CI is set"));
        }
        Ok(())
    }
}

fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
            line: i + 1,
            message: format!("expected 'key = value' in {}", path.display()),
        })?;
        entries.push((key.trim().replace('_', "-"), value.trim().to_string()));
    }
    Ok(entries)
}

#[derive(Parser, Debug)]
#[command(name = "distill-parse", version, about = "Arc-factored dependency parsing with ensemble distillation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a seeded synthetic treebank.
    Synth(SynthArgs),
    /// Train a scorer with the structured hinge loss.
    Train(TrainArgs),
    /// Train with the distillation cost from a votes file.
    Distill(TrainArgs),
    /// Parse a treebank with a trained model.
    Parse(ParseArgs),
    /// Consensus (MBR) parse of N aligned base-parse files.
    Ensemble(EnsembleArgs),
    /// Jackknifed ensemble votes for a training treebank.
    Jackknife(JackknifeArgs),
    /// Score predicted parses against gold.
    Eval(EvalArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Key-value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Language preset: english, chinese, german or custom.
    #[arg(long)]
    pub language: Option<String>,
    /// eisner, cle or cle-multiroot.
    #[arg(long)]
    pub decoder: Option<String>,
    /// conllx or conllu.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl CommonArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("language", self.language.clone()),
            ("decoder", self.decoder.clone()),
            ("format", self.format.clone()),
            ("seed", self.seed.map(|s| s.to_string())),
            ("jobs", self.jobs.map(|j| j.to_string())),
        ]
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// linear or bilstm.
    #[arg(long)]
    pub scorer: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Pretrained word vectors (word2vec text format).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

impl ModelArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("scorer", self.scorer.clone()),
            ("epochs", self.epochs.map(|e| e.to_string())),
            ("learning-rate", self.learning_rate.map(|r| r.to_string())),
        ]
    }
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    /// Output CoNLL file.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub sentences: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Probability of overriding a PP's lexical attachment preference.
    #[arg(long, default_value_t = 0.15)]
    pub noise: f64,
    #[arg(long, default_value = "conllx")]
    pub format: String,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model_args: ModelArgs,
    /// Training treebank.
    #[arg(long)]
    pub treebank: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    /// hamming or distill.
    #[arg(long)]
    pub cost: Option<String>,
    /// Votes file (required by the distillation cost).
    #[arg(long)]
    pub votes: Option<PathBuf>,
    /// Development treebank; the model file then holds the best-on-dev epoch.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Training log (default: model path with `.log` appended).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ParseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Input treebank (heads, if any, are ignored).
    #[arg(long)]
    pub treebank: PathBuf,
    /// Output file (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory holding one sentence-aligned CoNLL file per ensemble member.
    #[arg(long)]
    pub parses: PathBuf,
    /// Consensus output (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the vote tables here.
    #[arg(long)]
    pub votes: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct JackknifeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model_args: ModelArgs,
    #[arg(long)]
    pub treebank: PathBuf,
    /// Number of folds.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Total fold models, assigned to folds round-robin.
    #[arg(long)]
    pub models: Option<usize>,
    /// Output votes file.
    #[arg(long)]
    pub votes: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// include or exclude.
    #[arg(long)]
    pub punct: Option<String>,
    /// Comma-separated punctuation POS tags.
    #[arg(long)]
    pub punct_tags: Option<String>,
}

fn read_treebank(path: &Path, format: ConllFormat) -> Result<Vec<Sentence>> {
    let file = File::open(path).map_err(|e| Error::usage(format!("cannot open {}: {e}", path.display())))?;
    read_conll(BufReader::new(file), format)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path)
        .map_err(|e| Error::usage(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::usage(format!("thread pool: {e}")))
}

fn load_embeddings(path: Option<&Path>) -> Result<Option<Arc<crate::treebank::EmbeddingTable>>> {
    path.map(|p| {
        let file = File::open(p).map_err(|e| Error::usage(format!("cannot open {}: {e}", p.display())))?;
        read_embeddings(BufReader::new(file)).map(Arc::new)
    })
    .transpose()
}

pub fn read_votes(path: &Path) -> Result<VoteFile> {
    let file = File::open(path).map_err(|e| Error::usage(format!("cannot open {}: {e}", path.display())))?;
    VoteFile::read(BufReader::new(file))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let config = PipelineConfig {
        seed: args.seed,
        ..PipelineConfig::preset(Language::Custom)
    };
    config.require_seed_in_ci()?;
    let sentences = generate(&SynthConfig {
        sentences: args.sentences,
        seed: args.seed.unwrap_or(1),
        attachment_noise: args.noise,
        ..SynthConfig::default()
    });
    let mut out = create(&args.output)?;
    write_gold(&mut out, &sentences, args.format.parse()?)?;
    out.flush()?;
    info!("wrote {} sentences to {}", sentences.len(), args.output.display());
    Ok(())
}

fn resolve_train(args: &TrainArgs, cost: Option<&str>) -> Result<PipelineConfig> {
    let mut flags = args.common.flags();
    flags.extend(args.model_args.flags());
    flags.push(("cost", cost.map(String::from).or_else(|| args.cost.clone())));
    PipelineConfig::resolve(args.common.config.as_deref(), &flags)
}

fn run_training(args: &TrainArgs, config: &PipelineConfig) -> Result<ScorerModel> {
    config.require_seed_in_ci()?;
    let treebank = read_treebank(&args.treebank, config.format)?;
    let dev = args
        .dev
        .as_deref()
        .map(|p| read_treebank(p, config.format))
        .transpose()?;
    let votes = match (&args.votes, config.train.cost) {
        (Some(p), _) => Some(read_votes(p)?),
        (None, CostKind::Distillation) => {
            return Err(Error::usage("the distillation cost needs a votes file: pass --votes"))
        }
        (None, CostKind::Hamming) => None,
    };
    let train_config = TrainConfig {
        embeddings: load_embeddings(args.model_args.embeddings.as_deref())?,
        ..config.train_config()
    };
    let started = Instant::now();
    let outcome = train(&treebank, votes.as_ref(), &train_config, dev.as_deref())?;
    info!(
        "trained on {} sentences ({} excluded) in {:.1}s",
        treebank.len() - outcome.excluded,
        outcome.excluded,
        started.elapsed().as_secs_f64()
    );

    let log_path = args.log.clone().unwrap_or_else(|| {
        let mut p = args.model.clone().into_os_string();
        p.push(".log");
        PathBuf::from(p)
    });
    let mut log = create(&log_path)?;
    writeln!(log, "epoch, mean_loss, train_UAS, dev_UAS, lr")?;
    for record in &outcome.log {
        writeln!(log, "{}", record.log_line())?;
    }
    log.flush()?;

    let model = match outcome.best {
        Some((epoch, best)) => {
            info!("keeping epoch {epoch}, the best on the dev set");
            best
        }
        None => outcome.model,
    };
    model.save(&args.model)?;
    Ok(model)
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let config = resolve_train(args, None)?;
    run_training(args, &config).map(|_| ())
}

pub fn cmd_distill(args: &TrainArgs) -> Result<()> {
    let config = resolve_train(args, Some("distill"))?;
    if args.votes.is_none() {
        return Err(Error::usage("distill needs the ensemble votes: pass --votes"));
    }
    run_training(args, &config).map(|_| ())
}

/// Parse `sentences` with up to `jobs` threads.
pub fn parse_all(model: &ScorerModel, sentences: &[Sentence], decoder: Decoder, jobs: usize) -> Result<Vec<ParseTree>> {
    Ok(pool(jobs)?.install(|| sentences.par_iter().map(|s| model.parse(s, decoder)).collect()))
}

pub fn cmd_parse(args: &ParseArgs) -> Result<()> {
    let config = PipelineConfig::resolve(args.common.config.as_deref(), &args.common.flags())?;
    let model = ScorerModel::load(&args.model)?;
    let sentences = read_treebank(&args.treebank, config.format)?;
    let started = Instant::now();
    let trees = parse_all(&model, &sentences, config.decoder, config.jobs)?;
    let seconds = started.elapsed().as_secs_f64();
    info!(
        "parsed {} sentences in {seconds:.3}s ({:.1} sentences/s)",
        sentences.len(),
        sentences.len() as f64 / seconds.max(1e-9)
    );
    let mut out = output(args.output.as_deref())?;
    write_conll(&mut out, &sentences, &trees, config.format)?;
    out.flush()?;
    Ok(())
}

pub fn cmd_ensemble(args: &EnsembleArgs) -> Result<()> {
    let config = PipelineConfig::resolve(args.common.config.as_deref(), &args.common.flags())?;
    let mut paths: Vec<PathBuf> = fs::read_dir(&args.parses)
        .map_err(|e| Error::usage(format!("cannot list {}: {e}", args.parses.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
        .collect();
    paths.sort();
    let (sentences, parses) = load_parse_files(&paths, config.format)?;
    info!("ensemble of {} parse files over {} sentences", paths.len(), sentences.len());
    let tables = pool(config.jobs)?.install(|| {
        sentences
            .par_iter()
            .zip(&parses)
            .map(|(s, p)| tally_votes(p, s.len()))
            .collect::<Result<Vec<_>>>()
    })?;
    let trees: Vec<ParseTree> = tables.iter().map(|t| mbr_parse(t, config.decoder)).collect();
    let mut out = output(args.output.as_deref())?;
    write_conll(&mut out, &sentences, &trees, config.format)?;
    out.flush()?;
    if let Some(path) = &args.votes {
        let mut file = VoteFile::new(VoteSource::External);
        for (s, table) in sentences.iter().zip(tables) {
            file.push(SentenceVotes {
                id: s.id.clone(),
                fold: None,
                voters: Vec::new(),
                table,
            });
        }
        let mut out = create(path)?;
        file.write(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

pub fn cmd_jackknife_votes(args: &JackknifeArgs) -> Result<()> {
    let mut flags = args.common.flags();
    flags.extend(args.model_args.flags());
    flags.push(("folds", args.folds.map(|f| f.to_string())));
    flags.push(("models", args.models.map(|m| m.to_string())));
    let config = PipelineConfig::resolve(args.common.config.as_deref(), &flags)?;
    config.require_seed_in_ci()?;
    let treebank = read_treebank(&args.treebank, config.format)?;
    let train_config = TrainConfig {
        cost: CostKind::Hamming,
        embeddings: load_embeddings(args.model_args.embeddings.as_deref())?,
        ..config.train_config()
    };
    let plan = jackknife_split(&treebank, config.folds, train_config.seed)?;
    let jobs = if config.jobs == 0 { rayon::current_num_threads() } else { config.jobs };
    let votes = build_training_votes(&treebank, &plan, &train_config, config.models, jobs)?;
    votes.leakage_audit()?;
    let mut out = create(&args.votes)?;
    votes.write(&mut out)?;
    out.flush()?;
    info!(
        "wrote votes for {} sentences from {} fold models to {}",
        votes.len(),
        config.models,
        args.votes.display()
    );
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let mut flags = args.common.flags();
    flags.push(("punct", args.punct.clone()));
    flags.push(("punct-tags", args.punct_tags.clone()));
    let config = PipelineConfig::resolve(args.common.config.as_deref(), &flags)?;
    let gold = read_treebank(&args.gold, config.format)?;
    let pred = read_treebank(&args.pred, config.format)?
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.gold.ok_or_else(|| Error::usage(format!("predicted sentence {} has no heads", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = evaluate(&gold, &pred, config.punctuation, &config.punct_tags)?;
    print!("{report}\n{}", report.key_values());
    Ok(report)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Distill(a) => cmd_distill(&a),
        Command::Parse(a) => cmd_parse(&a),
        Command::Ensemble(a) => cmd_ensemble(&a),
        Command::Jackknife(a) => cmd_jackknife_votes(&a),
        Command::Eval(a) => cmd_eval(&a).map(|_| ()),
    }
}

/// Parse arguments, run, and map the outcome to an exit code: 0 on
/// success, 2 for usage errors, 1 otherwise.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("DISTILL_PARSE_LOG", "info")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => 2,
                _ => 1,
            }
        }
    }
}
