use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use phimp_core::estimation::{Criterion, PenaltyScheme};
use phimp_core::feature_map::{enumerate_closed_suffix_maps, EnumerationCap};
use phimp_core::io::{self, SourceFile};
use phimp_core::selection::{consistency_run, ConsistencyConfig};
use phimp_core::seq::Alphabet;
use serde::Deserialize;

/// `{source, class, criterion, pen, n_grid, seeds, inject_trivial?, kappa_max?, out?}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: SourceSpec,
    pub class: ClassSpec,
    #[serde(default = "default_criterion")]
    pub criterion: String,
    #[serde(default = "default_pen")]
    pub pen: PenSpec,
    pub n_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "yes")]
    pub inject_trivial: bool,
    #[serde(default)]
    pub kappa_max: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SourceSpec {
    Path(PathBuf),
    Inline(SourceFile),
}

/// Either `{"max_depth": d}` (all FSM-closed suffix maps) or `{"file": "maps.json"}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum PenSpec {
    Name(String),
    Scheme(PenaltyScheme),
}

fn default_criterion() -> String {
    "cost".into()
}

fn default_pen() -> PenSpec {
    PenSpec::Name("bic:markov".into())
}

fn yes() -> bool {
    true
}

fn input(msg: String) -> phimp_core::Error {
    phimp_core::Error::Input(msg)
}

pub fn run(config_path: &Path, out_override: Option<&Path>) -> Result<()> {
    let config: ExperimentConfig = io::read_json(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new(""));
    let source = match &config.source {
        SourceSpec::Path(p) => io::read_source(&base.join(p))?,
        SourceSpec::Inline(f) => f.build(Some(base))?,
    };
    let maps = match (&config.class.max_depth, &config.class.file) {
        (Some(d), None) => enumerate_closed_suffix_maps(&Alphabet::new(source.map().alphabet_size())?, *d, EnumerationCap::default())?,
        (None, Some(f)) => io::read_maps(&base.join(f))?,
        _ => return Err(input("class needs exactly one of `max_depth` and `file`".into()).into()),
    };
    let scheme = match config.pen {
        PenSpec::Name(s) => PenaltyScheme::parse(&s)?,
        PenSpec::Scheme(s) => s,
    };
    let mut run_config = ConsistencyConfig::new(Criterion::parse(&config.criterion)?, scheme, config.n_grid, config.seeds);
    run_config.inject_trivial = config.inject_trivial;
    if let Some(k) = config.kappa_max {
        run_config.kappa_max = k;
    }
    let out = out_override
        .map(Path::to_path_buf)
        .or_else(|| config.out.map(|o| base.join(o)))
        .ok_or_else(|| input("no output path: pass --out or set `out`".into()))?;

    let runs = consistency_run(&source, &maps, &run_config)?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    for run in &runs {
        for row in run.rows() {
            writer.serialize(row)?;
        }
    }
    let bytes = writer.into_inner().context("flushing CSV")?;
    std::fs::write(&out, bytes).with_context(|| format!("writing {}", out.display()))?;

    let truth = source.map().id();
    let hits = runs
        .iter()
        .filter(|r| r.results.last().is_some_and(|x| x.chosen_map_id == truth))
        .count();
    eprintln!(
        "{} seeds x {} grid points; final choice is the source map {truth} in {hits}/{} seeds; wrote {}",
        runs.len(),
        run_config.n_grid.len(),
        runs.len(),
        out.display()
    );
    Ok(())
}
