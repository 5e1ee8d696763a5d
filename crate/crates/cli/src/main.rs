use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use phimp_core::active::{active_select, rollout, Policy};
use phimp_core::estimation::{Criterion, PenaltyScheme};
use phimp_core::feature_map::{enumerate_closed_suffix_maps, is_fsm_closed, validate_suffix_set, EnumerationCap, FsmClosure, MapFile, MapKind};
use phimp_core::io::{self, Model, PolicyFile};
use phimp_core::selection::{countable_search, select, with_trivial, Data};
use phimp_core::seq::{ergodicity_diagnostic, Alphabet, DiagnosticConfig, PairedSequence, SymbolSequence};
use phimp_core::source::{cross_entropy_exact_markov, cross_entropy_mc, induced_hmm, sample_fsmx, Generator};
use serde::Serialize;

mod experiment;
mod schema;

#[derive(Parser)]
#[command(name = "phimp", version, about = "Select finite-state feature maps for sequence prediction")]
struct Cli {
    /// Worker threads for scoring candidates and seeds (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a sequence from an FSMX source.
    Sample {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Enumerate or check feature maps.
    #[command(subcommand)]
    Maps(MapsCommand),
    /// Score every map on a sequence, one JSON line per map.
    Score(ScoreArgs),
    /// Select the map with the smallest total cost.
    Select {
        #[command(flatten)]
        score: ScoreArgs,
        /// Search the suffix-map class of this depth with penalty pruning instead of `--maps`.
        #[arg(long, conflicts_with = "maps")]
        depth_budget: Option<usize>,
        #[arg(long, default_value_t = usize::MAX, requires = "depth_budget")]
        state_budget: usize,
    },
    /// Cross-entropy of a model on data from a true model, in nats per symbol.
    Xent {
        #[arg(long = "true")]
        truth: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = XentMode::Exact)]
        mode: XentMode,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run a consistency experiment and write its trajectory CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Roll out a policy in an environment and select a map on the rewards.
    Active {
        #[arg(long)]
        env: PathBuf,
        /// `uniform` or a JSON file `{"table": [[...]]}`.
        #[arg(long, default_value = "uniform")]
        policy: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        maps: PathBuf,
        #[arg(long, default_value = "bic:markov")]
        pen: String,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Substring-frequency convergence report for a sequence.
    Diagnose {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_pattern_len: usize,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check that a file written by this tool parses under its schema.
    ValidateOutput {
        #[arg(long, value_enum)]
        kind: schema::Kind,
        file: PathBuf,
    },
}

#[derive(Subcommand)]
enum MapsCommand {
    /// All FSM-closed suffix maps up to a depth.
    Enumerate {
        #[arg(long)]
        alphabet: usize,
        #[arg(long)]
        max_depth: usize,
        /// Also list the 1-state map.
        #[arg(long)]
        with_trivial: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Validate a map file (one map or a list) and report memory bounds.
    Check { file: PathBuf },
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    maps: Option<PathBuf>,
    /// Sequence file; a header `alphabet=X,Y` marks paired data.
    #[arg(long)]
    seq: PathBuf,
    #[arg(long, default_value = "cost")]
    criterion: String,
    #[arg(long, default_value = "bic:markov")]
    pen: String,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum XentMode {
    Exact,
    Mc,
}

enum Loaded {
    Single(SymbolSequence),
    Paired(PairedSequence),
}

impl Loaded {
    fn data(&self) -> Data<'_> {
        match self {
            Loaded::Single(y) => Data::Single(y),
            Loaded::Paired(p) => Data::Paired(p),
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| phimp_core::Error::Input(format!("{}: {e}", path.display())))
        .map_err(Into::into)
}

fn read_data(path: &Path) -> Result<Loaded> {
    let text = read_text(path)?;
    let header = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let parsed = if header.contains(',') {
        PairedSequence::parse(&text).map(Loaded::Paired)
    } else {
        SymbolSequence::parse(&text).map(Loaded::Single)
    };
    parsed.with_context(|| path.display().to_string())
}

fn emit(output: Option<&Path>, content: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, content).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(content.as_bytes())?,
    }
    Ok(())
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    Ok(s)
}

fn summary(line: String) {
    eprintln!("{line}");
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample { source, n, seed, output } => {
            let src = io::read_source(&source)?;
            let y = sample_fsmx(&src, n, seed);
            emit(output.as_deref(), &y.to_text())?;
            summary(format!("sampled {n} symbols from {} (seed {seed})", src.map().id()));
        }
        Command::Maps(MapsCommand::Enumerate {
            alphabet,
            max_depth,
            with_trivial: trivial,
            out,
        }) => {
            let mut maps = enumerate_closed_suffix_maps(&Alphabet::new(alphabet)?, max_depth, EnumerationCap::default())?;
            if trivial {
                maps = with_trivial(maps, alphabet);
            }
            emit(out.as_deref(), &io::maps_to_json(&maps)?)?;
            summary(format!("{} FSM-closed maps over {alphabet} symbols up to depth {max_depth}", maps.len()));
        }
        Command::Maps(MapsCommand::Check { file }) => check_maps(&file)?,
        Command::Score(args) => {
            let (maps, data, criterion, scheme) = load_scoring(&args)?;
            let result = select(&maps, data.data(), criterion, &scheme)?;
            let mut out = String::new();
            for c in &result.costs {
                out.push_str(&json_line(c)?);
            }
            emit(args.output.as_deref(), &out)?;
            summary(format!("scored {} maps on n = {}", maps.len(), data.data().len()));
        }
        Command::Select {
            score,
            depth_budget,
            state_budget,
        } => {
            let criterion = Criterion::parse(&score.criterion)?;
            let scheme = PenaltyScheme::parse(&score.pen)?;
            let data = read_data(&score.seq)?;
            let (result, note) = match depth_budget {
                Some(depth) => {
                    let r = countable_search(data.data(), criterion, &scheme, state_budget, depth, EnumerationCap::default())?;
                    let note = format!(
                        "selected {} ({} scored, {} pruned)",
                        r.selection.chosen_map_id,
                        r.selection.costs.len(),
                        r.pruned.len()
                    );
                    (serde_json::to_value(&r)?, note)
                }
                None => {
                    let maps = io::read_maps(score.maps.as_deref().context("--maps or --depth-budget is required").map_err(input)?)?;
                    let r = select(&maps, data.data(), criterion, &scheme)?;
                    let note = format!("selected {} among {} maps", r.chosen_map_id, maps.len());
                    (serde_json::to_value(&r)?, note)
                }
            };
            emit(score.output.as_deref(), &json_line(&result)?)?;
            summary(note);
        }
        Command::Xent {
            truth,
            model,
            mode,
            n,
            seed,
            output,
        } => {
            let truth = io::read_model(&truth)?;
            let model = io::read_model(&model)?;
            let est = match mode {
                XentMode::Exact => match (truth, model) {
                    (Model::Source(t), Model::Source(m)) => cross_entropy_exact_markov(&t, &m)?,
                    _ => bail!(input_err("exact mode needs FSMX sources for both --true and --model")),
                },
                XentMode::Mc => {
                    let generator = match truth {
                        Model::Source(s) => Generator::Fsmx(s),
                        Model::Hmm(h) => Generator::Hmm(h),
                    };
                    let theta = match model {
                        Model::Source(s) => induced_hmm(&s)?,
                        Model::Hmm(h) => h,
                    };
                    cross_entropy_mc(&generator, &theta, n, seed)?
                }
            };
            emit(output.as_deref(), &json_line(&est)?)?;
            summary(format!("cross-entropy {} nats/symbol", est.value));
        }
        Command::Experiment { config, out } => experiment::run(&config, out.as_deref())?,
        Command::Active {
            env,
            policy,
            n,
            seed,
            maps,
            pen,
            output,
        } => {
            let env = io::read_environment(&env)?;
            let policy = if policy == "uniform" {
                Policy::uniform(env.event_map().state_count(), env.events().actions)
            } else {
                io::read_json::<PolicyFile>(Path::new(&policy))?.build()?
            };
            let maps = io::read_maps(&maps)?;
            let scheme = PenaltyScheme::parse(&pen)?;
            let events = rollout(&env, &policy, n, seed)?;
            let result = active_select(&events, &maps, &scheme)?;
            emit(output.as_deref(), &json_line(&result)?)?;
            summary(format!("selected {} on {n} rewards (seed {seed})", result.chosen_map_id));
        }
        Command::Diagnose {
            seq,
            max_pattern_len,
            tol,
            output,
        } => {
            let y = match read_data(&seq)? {
                Loaded::Single(y) => y,
                Loaded::Paired(p) => p.joint(),
            };
            let mut config = DiagnosticConfig {
                max_pattern_len,
                ..DiagnosticConfig::default()
            };
            config.convergence.tol = tol;
            let report = ergodicity_diagnostic(&y, &config)?;
            emit(output.as_deref(), &json_line(&report)?)?;
            summary(format!(
                "{} patterns, all converged: {}",
                report.patterns.len(),
                report.all_converged
            ));
        }
        Command::ValidateOutput { kind, file } => {
            let rows = schema::validate(kind, &read_text(&file)?).map_err(input)?;
            summary(format!("{}: {rows} records valid", file.display()));
        }
    }
    Ok(())
}

fn load_scoring(args: &ScoreArgs) -> Result<(Vec<phimp_core::feature_map::FeatureMap>, Loaded, Criterion, PenaltyScheme)> {
    let criterion = Criterion::parse(&args.criterion)?;
    let scheme = PenaltyScheme::parse(&args.pen)?;
    let maps = io::read_maps(args.maps.as_deref().context("--maps is required").map_err(input)?)?;
    let data = read_data(&args.seq)?;
    Ok((maps, data, criterion, scheme))
}

#[derive(Serialize)]
struct MapCheck {
    map_id: String,
    states: usize,
    bounded: bool,
    kappa: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    suffix_set_valid: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fsm_closed: Option<bool>,
}

fn check_maps(file: &Path) -> Result<()> {
    let value: serde_json::Value = io::read_json(file)?;
    let files: Vec<MapFile> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|m| vec![m])
    }
    .map_err(|e| input_err(format!("{}: {e}", file.display())))?;
    let mut out = String::new();
    let mut unbounded = 0;
    for f in &files {
        let (map, bound) = phimp_core::feature_map::load_fsm_map(f)?;
        let (valid, closed) = match map.kind() {
            MapKind::SuffixTree { .. } => {
                let set = phimp_core::feature_map::SuffixSet::new(Alphabet::new(map.alphabet_size())?, map.suffixes().unwrap_or_default().to_vec())?;
                let valid = validate_suffix_set(&set)?.is_valid();
                let closed = matches!(is_fsm_closed(&set)?, FsmClosure::Closed { .. });
                (Some(valid), Some(closed))
            }
            MapKind::General => (None, None),
        };
        if !bound.bounded {
            unbounded += 1;
        }
        out.push_str(&json_line(&MapCheck {
            map_id: map.id().to_string(),
            states: map.state_count(),
            bounded: bound.bounded,
            kappa: bound.kappa,
            suffix_set_valid: valid,
            fsm_closed: closed,
        })?);
    }
    emit(None, &out)?;
    if unbounded > 0 {
        bail!(input_err(format!("{unbounded} of {} maps are not bounded-memory", files.len())));
    }
    summary(format!("{} maps valid", files.len()));
    Ok(())
}

fn input_err(msg: impl Into<String>) -> phimp_core::Error {
    phimp_core::Error::Input(msg.into())
}

fn input(e: anyhow::Error) -> anyhow::Error {
    if e.chain().any(|c| c.downcast_ref::<phimp_core::Error>().is_some()) {
        e
    } else {
        input_err(format!("{e:#}")).into()
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<phimp_core::Error>()) {
        Some(phimp_core::Error::Resource { .. }) => 3,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
