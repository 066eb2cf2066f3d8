use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ddeo_core::pipeline::{self, PipelineConfig};
use ddeo_core::ErrorKind;

/// Negative-sentiment topic discovery over short health-related posts.
#[derive(Debug, Parser)]
#[command(name = "ddeo", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read the corpus, tokenize, drop stop words and tag categories.
    Ingest {
        /// JSON-lines corpus (`id`, `text`, optional `lang`).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Language tag to keep; `any` disables the filter.
        #[arg(long)]
        lang: Option<String>,
    },
    /// Keep negative documents and build the modeling vocabulary.
    Sentiment {
        #[arg(long)]
        min_count: Option<u64>,
    },
    /// Pick the number of topics by held-out likelihood.
    SelectK {
        /// Comma-separated, strictly ascending.
        #[arg(long, value_delimiter = ',')]
        k_grid: Option<Vec<usize>>,
        #[arg(long)]
        train_frac: Option<f64>,
        #[arg(long)]
        particles: Option<usize>,
        #[command(flatten)]
        lda: LdaFlags,
    },
    /// Fit the final model.
    Train {
        /// Overrides the selected K.
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        lda: LdaFlags,
    },
    /// Label topics, attach sub-topics and write the report.
    Report {
        #[arg(long)]
        top_n: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Run ingest through report in one go.
    RunAll {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Write a synthetic corpus with known topics.
    Simulate {
        #[arg(long)]
        docs: Option<usize>,
        #[arg(long)]
        topics: Option<usize>,
        #[arg(long)]
        vocab_size: Option<usize>,
        #[arg(long)]
        mean_len: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct LdaFlags {
    #[arg(long)]
    alpha_sum: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
}

impl LdaFlags {
    fn apply(&self, c: &mut PipelineConfig) {
        set(&mut c.lda.alpha_sum, self.alpha_sum);
        set(&mut c.lda.beta, self.beta);
        set(&mut c.lda.iterations, self.iters);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn resolve(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut c = match &cli.global.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    set(&mut c.out_dir, cli.global.out_dir.clone());
    set(&mut c.seed, cli.global.seed);
    set(&mut c.workers, cli.global.workers);
    match &cli.command {
        Command::Ingest { input, lang } => {
            if input.is_some() {
                c.paths.input = input.clone();
            }
            if let Some(l) = lang {
                c.lang = (l != "any").then(|| l.clone());
            }
        }
        Command::Sentiment { min_count } => set(&mut c.min_count, *min_count),
        Command::SelectK {
            k_grid,
            train_frac,
            particles,
            lda,
        } => {
            set(&mut c.lda.k_grid, k_grid.clone());
            set(&mut c.selection.train_fraction, *train_frac);
            set(&mut c.selection.particles, *particles);
            lda.apply(&mut c);
        }
        Command::Train { k, lda } => {
            if k.is_some() {
                c.lda.k = *k;
            }
            lda.apply(&mut c);
        }
        Command::Report { top_n, tau } => {
            set(&mut c.labeling.top_n, *top_n);
            set(&mut c.labeling.tau, *tau);
        }
        Command::RunAll { input, k } => {
            if input.is_some() {
                c.paths.input = input.clone();
            }
            if k.is_some() {
                c.lda.k = *k;
            }
        }
        Command::Simulate {
            docs,
            topics,
            vocab_size,
            mean_len,
        } => {
            set(&mut c.simulate.docs, *docs);
            set(&mut c.simulate.topics, *topics);
            set(&mut c.simulate.vocab_size, *vocab_size);
            set(&mut c.simulate.mean_len, *mean_len);
        }
    }
    Ok(c)
}

fn run(cli: &Cli, config: &PipelineConfig) -> anyhow::Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build_global()
        .context("starting worker pool")?;
    match &cli.command {
        Command::Ingest { .. } => {
            let s = pipeline::run_ingest(config)?;
            println!(
                "ingested {} documents ({} tokens); {} malformed, {} skipped by language, {} duplicates, {} empty",
                s.docs, s.tokens, s.malformed, s.skipped_lang, s.duplicate_ids, s.dropped_empty
            );
        }
        Command::Sentiment { .. } => {
            let s = pipeline::run_sentiment(config)?;
            println!(
                "{} of {} documents negative ({}); vocabulary {}",
                s.stats.negative, s.stats.total, s.stats.fraction, s.vocabulary_size
            );
        }
        Command::SelectK { .. } => {
            let s = pipeline::run_select_k(config)?;
            for r in &s.curve {
                println!("k={:<5} per-token log-likelihood {}", r.k, r.per_token_ll);
            }
            println!("selected K = {}", s.best_k);
        }
        Command::Train { .. } => {
            let m = pipeline::run_train(config)?;
            println!("trained {} topics over {} documents", m.topics(), m.num_docs());
        }
        Command::Report { .. } => {
            pipeline::run_report(config)?;
            println!("report written to {}", config.out_dir.join(pipeline::REPORT).display());
        }
        Command::RunAll { .. } => {
            pipeline::run_all(config)?;
            println!("report written to {}", config.out_dir.join(pipeline::REPORT).display());
        }
        Command::Simulate { .. } => {
            let t = pipeline::run_simulate(config)?;
            println!(
                "wrote {} documents to {}",
                t.docs.len(),
                config.out_dir.join(pipeline::SIMULATED).display()
            );
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<ddeo_core::Error>().map(|e| e.kind()) {
        Some(ErrorKind::Data) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = resolve(&cli).and_then(|config| run(&cli, &config));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
