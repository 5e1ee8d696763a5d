//! Choosing a feature map by minimizing a penalized cost.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{cost, icost, ocost, CostBreakdown, Criterion, ModelShape, PenaltyScheme};
use crate::feature_map::{enumerate_closed_suffix_maps, memory_bound, EnumerationCap, FeatureMap};
use crate::seq::{Alphabet, PairedSequence, SymbolSequence};
use crate::source::{is_ergodic_chain, sample_fsmx, FsmxSource};

/// Data to score. Maps consume `y` for single sequences and the joint
/// `(x, y)` symbol for paired ones.
#[derive(Debug, Clone, Copy)]
pub enum Data<'a> {
    Single(&'a SymbolSequence),
    Paired(&'a PairedSequence),
}

impl Data<'_> {
    pub fn len(&self) -> usize {
        match self {
            Data::Single(y) => y.len(),
            Data::Paired(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Alphabet the candidate maps run on.
    pub fn map_alphabet(&self) -> Alphabet {
        match self {
            Data::Single(y) => y.alphabet().clone(),
            Data::Paired(p) => p.joint_alphabet(),
        }
    }
}

/// Scores one map. `cost` on paired data is the cost of the joint sequence;
/// `icost`/`ocost` on a single sequence treat it as having no side
/// information; `ml` is the `cost` data term with zero penalty.
pub fn score(map: &FeatureMap, data: Data<'_>, criterion: Criterion, scheme: &PenaltyScheme) -> Result<CostBreakdown> {
    let joint;
    let y = match data {
        Data::Single(y) => y,
        Data::Paired(p) => {
            joint = p.joint();
            &joint
        }
    };
    match (criterion, data) {
        (Criterion::Cost, _) => cost(map, y, scheme),
        (Criterion::Ml, _) => {
            let c = cost(map, y, scheme)?;
            Ok(CostBreakdown::new(map.id(), c.n, Criterion::Ml, c.data_cost, 0.0))
        }
        (Criterion::ICost, Data::Paired(p)) => icost(map, p, scheme),
        (Criterion::OCost, Data::Paired(p)) => ocost(map, p, scheme),
        (Criterion::ICost, Data::Single(y)) => icost(map, &PairedSequence::without_side_info(y), scheme),
        (Criterion::OCost, Data::Single(y)) => ocost(map, &PairedSequence::without_side_info(y), scheme),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen_map_id: String,
    /// Position of the chosen map in `costs`.
    pub chosen_index: usize,
    /// One entry per candidate, in input order.
    pub costs: Vec<CostBreakdown>,
    /// More than one candidate attained the minimum total.
    pub tie_broken: bool,
}

impl SelectionResult {
    pub fn chosen(&self) -> &CostBreakdown {
        &self.costs[self.chosen_index]
    }
}

fn rank(a: (&FeatureMap, &CostBreakdown), b: (&FeatureMap, &CostBreakdown)) -> Ordering {
    a.1.total.total_cmp(&b.1.total).then_with(|| a.0.canonical_cmp(b.0))
}

fn pick(maps: &[&FeatureMap], costs: Vec<CostBreakdown>) -> SelectionResult {
    let best = (0..maps.len())
        .min_by(|&i, &j| rank((maps[i], &costs[i]), (maps[j], &costs[j])))
        .expect("non-empty class");
    let best_total = costs[best].total;
    let tie_broken = costs.iter().filter(|c| c.total == best_total).count() > 1;
    SelectionResult {
        chosen_map_id: maps[best].id().to_string(),
        chosen_index: best,
        costs,
        tie_broken,
    }
}

/// Scores every candidate and returns the minimum total. Infinite totals rank
/// last; ties go to fewer states, then canonical map order.
pub fn select(maps: &[FeatureMap], data: Data<'_>, criterion: Criterion, scheme: &PenaltyScheme) -> Result<SelectionResult> {
    if maps.is_empty() {
        return Err(Error::input("candidate class is empty"));
    }
    if data.is_empty() {
        return Err(Error::input("cannot select on an empty sequence"));
    }
    let costs = maps
        .par_iter()
        .map(|m| score(m, data, criterion, scheme))
        .collect::<Result<Vec<_>>>()?;
    Ok(pick(&maps.iter().collect::<Vec<_>>(), costs))
}

/// Per-seed record of selections along a grid of prefix lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrajectory {
    pub seed: u64,
    pub n_grid: Vec<usize>,
    pub results: Vec<SelectionResult>,
    /// First grid index from which the chosen map never changes. `None` when
    /// the choice changes at the last grid point.
    pub stabilization_index: Option<usize>,
}

impl SelectionTrajectory {
    pub fn chosen_ids(&self) -> Vec<&str> {
        self.results.iter().map(|r| r.chosen_map_id.as_str()).collect()
    }

    pub fn chosen_totals(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.chosen().total).collect()
    }

    /// `seed,n,chosen_map_id,total,data_cost,penalty,stabilized` rows.
    pub fn rows(&self) -> Vec<TrajectoryRow> {
        self.n_grid
            .iter()
            .zip(&self.results)
            .enumerate()
            .map(|(i, (&n, r))| {
                let c = r.chosen();
                TrajectoryRow {
                    seed: self.seed,
                    n,
                    chosen_map_id: r.chosen_map_id.clone(),
                    total: c.total,
                    data_cost: c.data_cost,
                    penalty: c.penalty,
                    stabilized: self.stabilization_index.is_some_and(|s| i >= s),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub seed: u64,
    pub n: usize,
    pub chosen_map_id: String,
    pub total: f64,
    pub data_cost: f64,
    pub penalty: f64,
    pub stabilized: bool,
}

pub fn stabilization_index<T: PartialEq>(choices: &[T]) -> Option<usize> {
    let last = choices.last()?;
    let start = choices.iter().rposition(|c| c != last).map_or(0, |i| i + 1);
    if start + 1 == choices.len() && choices.len() > 1 {
        None
    } else {
        Some(start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyConfig {
    pub criterion: Criterion,
    pub scheme: PenaltyScheme,
    pub n_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Add the 1-state map when the class has no 1-state member.
    pub inject_trivial: bool,
    /// Largest memory bound accepted for candidate maps.
    pub kappa_max: usize,
}

impl ConsistencyConfig {
    pub fn new(criterion: Criterion, scheme: PenaltyScheme, n_grid: Vec<usize>, seeds: Vec<u64>) -> Self {
        ConsistencyConfig {
            criterion,
            scheme,
            n_grid,
            seeds,
            inject_trivial: true,
            kappa_max: 64,
        }
    }
}

/// Adds the trivial map unless the class already has a 1-state map.
pub fn with_trivial(mut maps: Vec<FeatureMap>, alphabet_size: usize) -> Vec<FeatureMap> {
    if !maps.iter().any(|m| m.state_count() == 1) {
        maps.insert(0, FeatureMap::trivial(alphabet_size));
    }
    maps
}

/// For each seed: sample `max(n_grid)` symbols from `source` and select on
/// every prefix length in the grid.
pub fn consistency_run(source: &FsmxSource, maps: &[FeatureMap], config: &ConsistencyConfig) -> Result<Vec<SelectionTrajectory>> {
    if !is_ergodic_chain(&source.state_chain()) {
        return Err(Error::NotErgodic(format!(
            "state chain of source map {} is not strongly connected under its emission probabilities",
            source.map().id()
        )));
    }
    if config.n_grid.is_empty() || config.n_grid[0] == 0 || config.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input("n_grid must be non-empty, positive and strictly increasing"));
    }
    let mut seen = config.seeds.clone();
    seen.sort_unstable();
    seen.dedup();
    if config.seeds.is_empty() || seen.len() != config.seeds.len() {
        return Err(Error::input("seeds must be non-empty and distinct"));
    }
    config.scheme.validate()?;
    for m in maps {
        if !memory_bound(m, config.kappa_max).bounded {
            return Err(Error::input(format!(
                "map {} has no memory bound up to {}",
                m.id(),
                config.kappa_max
            )));
        }
    }
    let maps = if config.inject_trivial {
        with_trivial(maps.to_vec(), source.map().alphabet_size())
    } else {
        maps.to_vec()
    };
    let n_max = *config.n_grid.last().expect("non-empty grid");
    config
        .seeds
        .par_iter()
        .map(|&seed| {
            let y = sample_fsmx(source, n_max, seed);
            let results = config
                .n_grid
                .iter()
                .map(|&n| select(&maps, Data::Single(&y.prefix(n)), config.criterion, &config.scheme))
                .collect::<Result<Vec<_>>>()?;
            let ids: Vec<&str> = results.iter().map(|r| r.chosen_map_id.as_str()).collect();
            let stabilization_index = stabilization_index(&ids);
            Ok(SelectionTrajectory {
                seed,
                n_grid: config.n_grid.clone(),
                results,
                stabilization_index,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneEntry {
    pub map_id: String,
    pub states: usize,
    pub penalty: f64,
    /// Best total at the moment the map was skipped.
    pub best_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountableSearchResult {
    /// Scored maps only.
    pub selection: SelectionResult,
    pub pruned: Vec<PruneEntry>,
}

/// Suffix maps of depth at most `depth_budget` with at most `state_budget`
/// states, plus the 1-state map, in canonical order.
pub fn budget_class(alphabet: &Alphabet, state_budget: usize, depth_budget: usize, cap: EnumerationCap) -> Result<Vec<FeatureMap>> {
    if state_budget == 0 {
        return Err(Error::input("state budget must be at least 1"));
    }
    let mut maps = vec![FeatureMap::trivial(alphabet.size())];
    if depth_budget > 0 && state_budget > 1 {
        maps.extend(
            enumerate_closed_suffix_maps(alphabet, depth_budget, cap)?
                .into_iter()
                .filter(|m| m.state_count() <= state_budget),
        );
    }
    maps.sort_by(FeatureMap::canonical_cmp);
    Ok(maps)
}

/// Walks the budget-limited class in canonical order and skips every map whose
/// penalty alone exceeds the best total so far. Data costs are non-negative,
/// so skipped maps cannot win and the result equals exhaustive selection.
pub fn countable_search(
    data: Data<'_>,
    criterion: Criterion,
    scheme: &PenaltyScheme,
    state_budget: usize,
    depth_budget: usize,
    cap: EnumerationCap,
) -> Result<CountableSearchResult> {
    if data.is_empty() {
        return Err(Error::input("cannot select on an empty sequence"));
    }
    let class = budget_class(&data.map_alphabet(), state_budget, depth_budget, cap)?;
    let n = data.len();
    let mut scored: Vec<&FeatureMap> = Vec::new();
    let mut costs: Vec<CostBreakdown> = Vec::new();
    let mut pruned = Vec::new();
    let mut best = f64::INFINITY;
    for map in &class {
        let penalty = if criterion == Criterion::Ml {
            0.0
        } else {
            scheme.value(n, ModelShape::of(map))?
        };
        if penalty > best {
            pruned.push(PruneEntry {
                map_id: map.id().to_string(),
                states: map.state_count(),
                penalty,
                best_total: best,
            });
            continue;
        }
        let c = score(map, data, criterion, scheme)?;
        best = best.min(c.total);
        scored.push(map);
        costs.push(c);
    }
    Ok(CountableSearchResult {
        selection: pick(&scored, costs),
        pruned,
    })
}
