//! Generative models and the numerics around them.
//!
//! HMM convention: `s_0 ~ initial`, then for `t = 1..n`,
//! `s_t ~ T(s_{t-1}, .)` and `y_t ~ E(s_t, .)`. An FSMX source draws
//! `y_t ~ emit(s_{t-1}, .)` and moves to `s_t = psi(s_{t-1}, y_t)`; its induced
//! HMM has `T(s, s') = sum_{y : psi(s, y) = s'} emit(s, y)`.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_map::{FeatureMap, MapKind};
use crate::rng::{stream_rng, streams};
use crate::seq::{Alphabet, SymbolSequence};

const ROW_SUM_TOL: f64 = 1e-12;
/// Above this many states the stationary distribution uses power iteration.
const DIRECT_SOLVE_MAX_STATES: usize = 300;
const BOOTSTRAP_REPLICATES: usize = 200;

fn check_distribution(row: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for p in row {
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::input(format!("{what} has an invalid probability {p}")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::input(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

fn check_row_stochastic(m: &DMatrix<f64>, what: &str) -> Result<()> {
    for r in 0..m.nrows() {
        check_distribution(m.row(r).iter().copied(), &format!("{what} row {r}"))?;
    }
    Ok(())
}

/// HMM parameters `(T, E, initial)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hmm {
    transition: DMatrix<f64>,
    emission: DMatrix<f64>,
    initial: Vec<f64>,
}

impl Hmm {
    pub fn new(transition: DMatrix<f64>, emission: DMatrix<f64>, initial: Vec<f64>) -> Result<Self> {
        let s = transition.nrows();
        if s == 0 || transition.ncols() != s || emission.nrows() != s || initial.len() != s || emission.ncols() == 0 {
            return Err(Error::input("HMM shapes must be S x S, S x Y and S"));
        }
        check_row_stochastic(&transition, "transition")?;
        check_row_stochastic(&emission, "emission")?;
        check_distribution(initial.iter().copied(), "initial distribution")?;
        Ok(Hmm {
            transition,
            emission,
            initial,
        })
    }

    pub fn states(&self) -> usize {
        self.transition.nrows()
    }

    pub fn alphabet_size(&self) -> usize {
        self.emission.ncols()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn emission(&self) -> &DMatrix<f64> {
        &self.emission
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    fn check_alphabet(&self, y: &SymbolSequence) -> Result<()> {
        if y.alphabet().size() != self.alphabet_size() {
            return Err(Error::input(format!(
                "HMM emits {} symbols, sequence has alphabet of size {}",
                self.alphabet_size(),
                y.alphabet().size()
            )));
        }
        Ok(())
    }
}

/// A feature map together with per-state next-symbol distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct FsmxSource {
    map: FeatureMap,
    emit: DMatrix<f64>,
}

impl FsmxSource {
    pub fn new(map: FeatureMap, emit: DMatrix<f64>) -> Result<Self> {
        if emit.nrows() != map.state_count() || emit.ncols() != map.alphabet_size() {
            return Err(Error::input(format!(
                "emission table is {}x{}, map needs {}x{}",
                emit.nrows(),
                emit.ncols(),
                map.state_count(),
                map.alphabet_size()
            )));
        }
        check_row_stochastic(&emit, "emit")?;
        Ok(FsmxSource { map, emit })
    }

    /// Binary source from `Pr(y = 1 | s)` per state.
    pub fn binary(map: FeatureMap, p_one: &[f64]) -> Result<Self> {
        let rows: Vec<f64> = p_one.iter().flat_map(|&p| [1.0 - p, p]).collect();
        FsmxSource::new(map, DMatrix::from_row_slice(p_one.len(), 2, &rows))
    }

    pub fn map(&self) -> &FeatureMap {
        &self.map
    }

    pub fn emit(&self) -> &DMatrix<f64> {
        &self.emit
    }

    /// `T(s, s') = sum_{y : psi(s, y) = s'} emit(s, y)`.
    pub fn state_chain(&self) -> DMatrix<f64> {
        let s = self.map.state_count();
        let mut t = DMatrix::zeros(s, s);
        for a in 0..s {
            for y in 0..self.map.alphabet_size() {
                t[(a, self.map.next(a, y))] += self.emit[(a, y)];
            }
        }
        t
    }
}

/// Per-state next-symbol probabilities of a model whose state is tracked by a
/// feature map.
pub trait Predictor {
    fn map(&self) -> &FeatureMap;
    /// Probability assigned to `y` as the next symbol in `state`.
    fn prob(&self, state: usize, y: usize) -> f64;
}

impl Predictor for FsmxSource {
    fn map(&self) -> &FeatureMap {
        &self.map
    }

    fn prob(&self, state: usize, y: usize) -> f64 {
        self.emit[(state, y)]
    }
}

/// Path-form model: the likelihood factor of `y` in state `s` is
/// `T(s, psi(s, y)) * E(psi(s, y), y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathModel {
    pub map: FeatureMap,
    pub transition: DMatrix<f64>,
    pub emission: DMatrix<f64>,
}

impl Predictor for PathModel {
    fn map(&self) -> &FeatureMap {
        &self.map
    }

    fn prob(&self, state: usize, y: usize) -> f64 {
        let next = self.map.next(state, y);
        self.transition[(state, next)] * self.emission[(next, y)]
    }
}

fn weighted_rows(m: &DMatrix<f64>) -> Vec<WeightedIndex<f64>> {
    (0..m.nrows())
        .map(|r| WeightedIndex::new(m.row(r).iter().copied()).expect("validated distribution row"))
        .collect()
}

/// Samples `n` symbols. Deterministic in `(source, n, seed)`, and a shorter
/// sample is a prefix of a longer one with the same seed.
pub fn sample_fsmx(source: &FsmxSource, n: usize, seed: u64) -> SymbolSequence {
    let mut rng = stream_rng(seed, streams::SAMPLE);
    let rows = weighted_rows(&source.emit);
    let mut s = source.map.start_state();
    let mut items = Vec::with_capacity(n);
    for _ in 0..n {
        let y = rows[s].sample(&mut rng);
        items.push(y);
        s = source.map.next(s, y);
    }
    SymbolSequence::new(Alphabet::new(source.map.alphabet_size()).expect("non-empty"), items)
        .expect("sampled symbols are in range")
}

pub fn sample_hmm(hmm: &Hmm, n: usize, seed: u64) -> SymbolSequence {
    let mut rng = stream_rng(seed, streams::SAMPLE);
    let trans = weighted_rows(&hmm.transition);
    let emit = weighted_rows(&hmm.emission);
    let mut s = WeightedIndex::new(hmm.initial.iter().copied())
        .expect("validated initial")
        .sample(&mut rng);
    let mut items = Vec::with_capacity(n);
    for _ in 0..n {
        s = trans[s].sample(&mut rng);
        items.push(emit[s].sample(&mut rng));
    }
    SymbolSequence::new(Alphabet::new(hmm.alphabet_size()).expect("non-empty"), items)
        .expect("sampled symbols are in range")
}

/// The HMM induced by an FSMX source.
///
/// When each state is entered by a single symbol (always the case for suffix
/// maps) `E(s, y)` is the indicator of that symbol. Otherwise
/// `E(s', y) = Pr(enter s' via y) / Pr(enter s')` under the stationary
/// distribution, which requires an ergodic state chain.
pub fn induced_hmm(source: &FsmxSource) -> Result<Hmm> {
    let map = &source.map;
    let (s, y_size) = (map.state_count(), map.alphabet_size());
    let transition = source.state_chain();
    let mut emission = DMatrix::zeros(s, y_size);
    match (map.kind(), map.entering_symbols()) {
        (MapKind::SuffixTree { suffixes }, _) => {
            for (state, suffix) in suffixes.iter().enumerate() {
                emission[(state, *suffix.last().expect("non-empty suffix"))] = 1.0;
            }
        }
        (MapKind::General, Some(entering)) => {
            for (state, sym) in entering.into_iter().enumerate() {
                match sym {
                    Some(y) => emission[(state, y)] = 1.0,
                    None => emission.row_mut(state).fill(1.0 / y_size as f64),
                }
            }
        }
        (MapKind::General, None) => {
            let pi = stationary(&transition)?;
            let mut inflow = vec![0.0; s];
            for (a, &w) in pi.iter().enumerate() {
                for y in 0..y_size {
                    let flow = w * source.emit[(a, y)];
                    let b = map.next(a, y);
                    emission[(b, y)] += flow;
                    inflow[b] += flow;
                }
            }
            for (b, &total) in inflow.iter().enumerate() {
                if total > 0.0 {
                    let mut row = emission.row_mut(b);
                    row /= total;
                } else {
                    emission.row_mut(b).fill(1.0 / y_size as f64);
                }
            }
        }
    }
    let mut initial = vec![0.0; s];
    initial[map.start_state()] = 1.0;
    Hmm::new(transition, emission, initial)
}

/// Per-step log normalizers `ln Pr(y_t | y_1..y_{t-1})` of the scaled forward
/// recursion. Stops with a final `-inf` entry at the first impossible symbol.
pub fn forward_terms(hmm: &Hmm, y: &SymbolSequence) -> Result<Vec<f64>> {
    hmm.check_alphabet(y)?;
    let s = hmm.states();
    let mut alpha = hmm.initial.clone();
    let mut next = vec![0.0; s];
    let mut terms = Vec::with_capacity(y.len());
    for &sym in y.items() {
        for (j, slot) in next.iter_mut().enumerate() {
            let e = hmm.emission[(j, sym)];
            *slot = if e == 0.0 {
                0.0
            } else {
                e * alpha.iter().enumerate().map(|(i, a)| a * hmm.transition[(i, j)]).sum::<f64>()
            };
        }
        let c: f64 = next.iter().sum();
        if c <= 0.0 {
            terms.push(f64::NEG_INFINITY);
            return Ok(terms);
        }
        terms.push(c.ln());
        for (a, v) in alpha.iter_mut().zip(&next) {
            *a = v / c;
        }
    }
    Ok(terms)
}

/// `ln Pr(y_1..y_n | hmm)`; `-inf` when the sequence is impossible.
pub fn forward_loglik(hmm: &Hmm, y: &SymbolSequence) -> Result<f64> {
    Ok(forward_terms(hmm, y)?.iter().sum())
}

/// Default cap on the number of state paths summed by [`brute_force_loglik`].
pub const BRUTE_FORCE_MAX_PATHS: u64 = 10_000_000;

/// Sums `initial(s_0) * prod_t T(s_{t-1}, s_t) E(s_t, y_t)` over every path
/// `s_0..s_n`. Exponential; a test oracle for [`forward_loglik`].
pub fn brute_force_loglik(hmm: &Hmm, y: &SymbolSequence, max_paths: u64) -> Result<f64> {
    hmm.check_alphabet(y)?;
    let s = hmm.states();
    let n = y.len();
    let paths = (s as u64).checked_pow(n as u32 + 1).unwrap_or(u64::MAX);
    if paths > max_paths {
        return Err(Error::Resource {
            limit: "state paths in brute-force likelihood",
            cap: max_paths,
        });
    }
    let mut total = 0.0;
    let mut path = vec![0usize; n + 1];
    for code in 0..paths {
        let mut c = code;
        for slot in path.iter_mut() {
            *slot = (c % s as u64) as usize;
            c /= s as u64;
        }
        let mut p = hmm.initial[path[0]];
        for t in 1..=n {
            if p == 0.0 {
                break;
            }
            p *= hmm.transition[(path[t - 1], path[t])] * hmm.emission[(path[t], y.items()[t - 1])];
        }
        total += p;
    }
    Ok(total.ln())
}

fn support_reaches_all(t: &DMatrix<f64>, transpose: bool) -> bool {
    let s = t.nrows();
    let mut seen = vec![false; s];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for v in 0..s {
            let w = if transpose { t[(v, u)] } else { t[(u, v)] };
            if w > 0.0 && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|b| b)
}

/// Every state reaches every other in finitely many steps (periodic chains
/// included).
pub fn is_ergodic_chain(t: &DMatrix<f64>) -> bool {
    t.nrows() > 0 && t.is_square() && support_reaches_all(t, false) && support_reaches_all(t, true)
}

/// The unique `pi` with `pi T = pi`, `sum pi = 1`, for an ergodic `T`.
pub fn stationary(t: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !t.is_square() || t.nrows() == 0 {
        return Err(Error::input("transition matrix must be square and non-empty"));
    }
    check_row_stochastic(t, "transition")?;
    if !is_ergodic_chain(t) {
        return Err(Error::NotErgodic(
            "support graph is not strongly connected; check with is_ergodic_chain".into(),
        ));
    }
    let s = t.nrows();
    let mut pi = if s <= DIRECT_SOLVE_MAX_STATES {
        // (T^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
        let mut a = t.transpose() - DMatrix::identity(s, s);
        a.row_mut(s - 1).fill(1.0);
        let mut b = DVector::zeros(s);
        b[s - 1] = 1.0;
        a.lu()
            .solve(&b)
            .ok_or_else(|| Error::NotErgodic("singular stationary system".into()))?
            .iter()
            .copied()
            .collect::<Vec<_>>()
    } else {
        power_iteration(t, 1e-12, 1_000_000)
    };
    for p in pi.iter_mut() {
        *p = p.max(0.0);
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    Ok(pi)
}

fn power_iteration(t: &DMatrix<f64>, tol: f64, max_iter: usize) -> Vec<f64> {
    let s = t.nrows();
    let mut pi = DVector::from_element(s, 1.0 / s as f64);
    // Lazy chain (I + T) / 2 has the same stationary law and is aperiodic.
    let lazy = (t.transpose() + DMatrix::identity(s, s)) * 0.5;
    for _ in 0..max_iter {
        let next = &lazy * &pi;
        let diff = (&next - &pi).amax();
        pi = next;
        if diff < tol {
            break;
        }
    }
    pi.iter().copied().collect()
}

/// The chain on pairs `(true state, model state)` restricted to its unique
/// closed class, with its stationary law.
struct ProductChain {
    /// `(true state, model state)` per class index.
    pairs: Vec<(usize, usize)>,
    pi: Vec<f64>,
}

fn product_chain(source: &FsmxSource, model_map: &FeatureMap) -> Result<ProductChain> {
    let truth = &source.map;
    if truth.alphabet_size() != model_map.alphabet_size() {
        return Err(Error::input("source and model maps consume different alphabets"));
    }
    let y_size = truth.alphabet_size();
    let start = (truth.start_state(), model_map.start_state());
    let mut index: HashMap<(usize, usize), usize> = HashMap::from([(start, 0)]);
    let mut pairs = vec![start];
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let (a, b) = pairs[i];
        for y in 0..y_size {
            let p = source.emit[(a, y)];
            if p == 0.0 {
                continue;
            }
            let next = (truth.next(a, y), model_map.next(b, y));
            let j = *index.entry(next).or_insert_with(|| {
                pairs.push(next);
                pairs.len() - 1
            });
            edges.push((i, j, p));
        }
        i += 1;
    }

    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..pairs.len()).map(|_| graph.add_node(())).collect();
    for &(u, v, _) in &edges {
        graph.add_edge(nodes[u], nodes[v], ());
    }
    let mut component = vec![0; pairs.len()];
    let sccs = tarjan_scc(&graph);
    for (c, scc) in sccs.iter().enumerate() {
        for node in scc {
            component[node.index()] = c;
        }
    }
    let mut leaves = vec![true; sccs.len()];
    for &(u, v, _) in &edges {
        if component[u] != component[v] {
            leaves[component[u]] = false;
        }
    }
    let bottom: Vec<usize> = (0..sccs.len()).filter(|&c| leaves[c]).collect();
    if bottom.len() != 1 {
        return Err(Error::NotErgodic(format!(
            "joint (source, model) chain has {} closed classes; the model map needs bounded memory and the source an ergodic chain",
            bottom.len()
        )));
    }
    let mut members: Vec<usize> = sccs[bottom[0]].iter().map(|n| n.index()).collect();
    members.sort_unstable();
    let local: HashMap<usize, usize> = members.iter().enumerate().map(|(k, &g)| (g, k)).collect();
    let mut t = DMatrix::zeros(members.len(), members.len());
    for &(u, v, p) in &edges {
        if let (Some(&lu), Some(&lv)) = (local.get(&u), local.get(&v)) {
            t[(lu, lv)] += p;
        }
    }
    let pi = stationary(&t)?;
    Ok(ProductChain {
        pairs: members.iter().map(|&g| pairs[g]).collect(),
        pi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossEntropyMode {
    ExactMarkov,
    MonteCarlo,
}

/// `H(theta_0, theta)` in nats per symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEntropyEstimate {
    /// `null` in JSON when infinite.
    #[serde(with = "value_or_null")]
    pub value: f64,
    pub mode: CrossEntropyMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_used: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

mod value_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Exact cross-entropy of `model` on data from `source`, from the stationary
/// law of the joint `(source state, model state)` chain:
/// `H = -sum pi(a, b) sum_y emit(a, y) ln model.prob(b, y)`.
pub fn cross_entropy_exact_markov(source: &FsmxSource, model: &impl Predictor) -> Result<CrossEntropyEstimate> {
    let chain = product_chain(source, model.map())?;
    let mut h = 0.0;
    'outer: for (&(a, b), &w) in chain.pairs.iter().zip(&chain.pi) {
        for y in 0..source.map.alphabet_size() {
            let p = source.emit[(a, y)];
            if p == 0.0 {
                continue;
            }
            let q = model.prob(b, y);
            if q == 0.0 {
                if w > 0.0 {
                    h = f64::INFINITY;
                    break 'outer;
                }
                continue;
            }
            h -= w * p * q.ln();
        }
    }
    Ok(CrossEntropyEstimate {
        value: h,
        mode: CrossEntropyMode::ExactMarkov,
        n_used: None,
        std_error: None,
    })
}

/// Limits of the estimates `(T(n), E(n))` of `map` on data from `source`.
/// States outside the recurrent class get uniform rows.
pub fn limiting_model(source: &FsmxSource, map: &FeatureMap) -> Result<PathModel> {
    let chain = product_chain(source, map)?;
    let (s, y_size) = (map.state_count(), map.alphabet_size());
    let mut transition = DMatrix::zeros(s, s);
    let mut emission = DMatrix::zeros(s, y_size);
    for (&(a, b), &w) in chain.pairs.iter().zip(&chain.pi) {
        for y in 0..y_size {
            let flow = w * source.emit[(a, y)];
            let next = map.next(b, y);
            transition[(b, next)] += flow;
            emission[(next, y)] += flow;
        }
    }
    for m in [&mut transition, &mut emission] {
        let cols = m.ncols();
        for r in 0..m.nrows() {
            let total: f64 = m.row(r).sum();
            if total > 0.0 {
                let mut row = m.row_mut(r);
                row /= total;
            } else {
                m.row_mut(r).fill(1.0 / cols as f64);
            }
        }
    }
    Ok(PathModel {
        map: map.clone(),
        transition,
        emission,
    })
}

/// A model that can generate data for Monte Carlo estimates.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Hmm(Hmm),
    Fsmx(FsmxSource),
}

impl Generator {
    pub fn sample(&self, n: usize, seed: u64) -> SymbolSequence {
        match self {
            Generator::Hmm(h) => sample_hmm(h, n, seed),
            Generator::Fsmx(s) => sample_fsmx(s, n, seed),
        }
    }
}

/// Minimum sample length for [`cross_entropy_mc`].
pub const MC_MIN_N: usize = 1000;

/// `-(1/n) ln Pr(y_1..y_n | theta)` on a sample of the truth. The standard
/// error comes from a block bootstrap of the per-step terms, block length
/// `floor(sqrt(n))`.
pub fn cross_entropy_mc(truth: &Generator, theta: &Hmm, n: usize, seed: u64) -> Result<CrossEntropyEstimate> {
    if n < MC_MIN_N {
        return Err(Error::input(format!("Monte Carlo cross-entropy needs n >= {MC_MIN_N}")));
    }
    let y = truth.sample(n, seed);
    let terms = forward_terms(theta, &y)?;
    if terms.last().is_some_and(|t| t.is_infinite()) {
        return Ok(CrossEntropyEstimate {
            value: f64::INFINITY,
            mode: CrossEntropyMode::MonteCarlo,
            n_used: Some(n),
            std_error: None,
        });
    }
    let value = -terms.iter().sum::<f64>() / n as f64;
    let block = (n as f64).sqrt().floor() as usize;
    let blocks: Vec<f64> = terms.chunks_exact(block).map(|c| -c.iter().sum::<f64>()).collect();
    let k = blocks.len();
    let mut rng = stream_rng(seed, streams::BOOTSTRAP);
    let replicates: Vec<f64> = (0..BOOTSTRAP_REPLICATES)
        .map(|_| (0..k).map(|_| blocks[rng.gen_range(0..k)]).sum::<f64>() / (k * block) as f64)
        .collect();
    let mean = replicates.iter().sum::<f64>() / replicates.len() as f64;
    let var = replicates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (replicates.len() - 1) as f64;
    Ok(CrossEntropyEstimate {
        value,
        mode: CrossEntropyMode::MonteCarlo,
        n_used: Some(n),
        std_error: Some(var.sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_map::{compile_suffix_map, SuffixSet};
    use crate::seq::substring_frequency;
    use approx::assert_abs_diff_eq;

    fn map(digits: &[&str]) -> FeatureMap {
        compile_suffix_map(&SuffixSet::from_digits(2, digits).unwrap(), 0).unwrap()
    }

    fn reference() -> FsmxSource {
        FsmxSource::binary(map(&["0", "01", "11"]), &[0.2, 0.5, 0.8]).unwrap()
    }

    fn binary_entropy(p: f64) -> f64 {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }

    #[test]
    fn point_mass_source_is_deterministic_orbit() {
        let src = FsmxSource::binary(map(&["0", "1"]), &[1.0, 0.0]).unwrap();
        let y = sample_fsmx(&src, 6, 3);
        assert_eq!(y.items(), &[1, 0, 1, 0, 1, 0]);
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_fsmx(&reference(), 500, 9);
        assert_eq!(a, sample_fsmx(&reference(), 500, 9));
        assert_eq!(a.prefix(100), sample_fsmx(&reference(), 100, 9));
        assert_ne!(a, sample_fsmx(&reference(), 500, 10));
    }

    #[test]
    fn reference_symbol_frequency_matches_stationary() {
        let src = reference();
        let hmm = induced_hmm(&src).unwrap();
        let pi = stationary(hmm.transition()).unwrap();
        let expected: f64 = (0..3).map(|s| pi[s] * src.emit()[(s, 1)]).sum();
        let y = sample_fsmx(&src, 100_000, 5);
        let one = SymbolSequence::from_digits(2, "1").unwrap();
        assert!((substring_frequency(&y, &one).unwrap() - expected).abs() < 0.02);
    }

    #[test]
    fn induced_transition_examples() {
        let src = FsmxSource::binary(map(&["0", "1"]), &[0.3, 0.6]).unwrap();
        let hmm = induced_hmm(&src).unwrap();
        assert_eq!(hmm.transition(), src.emit());

        let hmm = induced_hmm(&reference()).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0.8, 0.2, 0.0, 0.5, 0.0, 0.5, 0.2, 0.0, 0.8]);
        assert_abs_diff_eq!(hmm.transition().clone(), expected, epsilon = 1e-15);
        assert_eq!(hmm.emission(), &DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]));
    }

    #[test]
    fn induced_emission_for_hidden_general_map() {
        // Parity map: state entered by both symbols, emission from stationary flow.
        let parity = FeatureMap::general(None, 2, 2, 0, vec![0, 1, 1, 0]).unwrap();
        let src = FsmxSource::binary(parity, &[0.5, 0.5]).unwrap();
        let hmm = induced_hmm(&src).unwrap();
        for r in 0..2 {
            assert_abs_diff_eq!(hmm.emission().row(r).sum(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(hmm.emission()[(r, 0)], 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn forward_examples() {
        let hmm = Hmm::new(DMatrix::from_element(1, 1, 1.0), DMatrix::from_row_slice(1, 2, &[0.5, 0.5]), vec![1.0]).unwrap();
        let y = SymbolSequence::from_digits(2, "0110").unwrap();
        assert_abs_diff_eq!(forward_loglik(&hmm, &y).unwrap(), -4.0 * 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(brute_force_loglik(&hmm, &y, BRUTE_FORCE_MAX_PATHS).unwrap(), -4.0 * 2f64.ln(), epsilon = 1e-12);

        let never_one = Hmm::new(
            DMatrix::from_element(2, 2, 0.5),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]),
            vec![0.5, 0.5],
        )
        .unwrap();
        let y = SymbolSequence::from_digits(2, "001").unwrap();
        assert_eq!(forward_loglik(&never_one, &y).unwrap(), f64::NEG_INFINITY);
        assert_eq!(brute_force_loglik(&never_one, &y, BRUTE_FORCE_MAX_PATHS).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn brute_force_cap() {
        let hmm = induced_hmm(&reference()).unwrap();
        let y = SymbolSequence::from_digits(2, &"01".repeat(10)).unwrap();
        assert!(matches!(brute_force_loglik(&hmm, &y, 1000), Err(Error::Resource { .. })));
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary(&DMatrix::from_element(2, 2, 0.5)).unwrap();
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-12);

        let pi = stationary(&DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(pi[0], 5.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pi[1], 1.0 / 6.0, epsilon = 1e-12);

        let cyc = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        for p in stationary(&cyc).unwrap() {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-12);
        }

        let blocks = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(stationary(&blocks), Err(Error::NotErgodic(_))));
    }

    #[test]
    fn power_iteration_agrees_with_direct_solve() {
        let t = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.3, 0.0, 0.7, 1.0, 0.0, 0.0]);
        let direct = stationary(&t).unwrap();
        let power = power_iteration(&t, 1e-14, 1_000_000);
        for (a, b) in direct.iter().zip(&power) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn ergodicity_examples() {
        assert!(is_ergodic_chain(&DMatrix::from_element(3, 3, 1.0 / 3.0)));
        assert!(!is_ergodic_chain(&DMatrix::identity(2, 2)));
        let cyc = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert!(is_ergodic_chain(&cyc));
    }

    #[test]
    fn exact_cross_entropy_examples() {
        let uniform = FsmxSource::binary(map(&["0", "1"]), &[0.5, 0.5]).unwrap();
        let h = cross_entropy_exact_markov(&uniform, &uniform).unwrap();
        assert_abs_diff_eq!(h.value, 2f64.ln(), epsilon = 1e-12);

        let src = reference();
        let pi = stationary(&src.state_chain()).unwrap();
        let oracle: f64 = [0.2, 0.5, 0.8].iter().zip(&pi).map(|(p, w)| w * binary_entropy(*p)).sum();
        let h = cross_entropy_exact_markov(&src, &src).unwrap();
        assert_abs_diff_eq!(h.value, oracle, epsilon = 1e-12);

        let (p, q) = (0.3, 0.6);
        let bern = FsmxSource::binary(FeatureMap::trivial(2), &[p]).unwrap();
        let model = FsmxSource::binary(FeatureMap::trivial(2), &[q]).unwrap();
        let h = cross_entropy_exact_markov(&bern, &model).unwrap();
        assert_abs_diff_eq!(h.value, -p * f64::ln(q) - (1.0 - p) * f64::ln(1.0 - q), epsilon = 1e-12);

        let zero = FsmxSource::binary(FeatureMap::trivial(2), &[0.0]).unwrap();
        assert_eq!(cross_entropy_exact_markov(&bern, &zero).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn unbounded_model_map_rejected() {
        let parity = FeatureMap::general(None, 2, 2, 0, vec![0, 1, 1, 0]).unwrap();
        let model = FsmxSource::binary(parity, &[0.5, 0.5]).unwrap();
        let iid = FsmxSource::binary(FeatureMap::trivial(2), &[0.5]).unwrap();
        // Under an i.i.d. source the joint chain is the parity chain: ergodic.
        assert!(cross_entropy_exact_markov(&iid, &model).is_ok());
        // A deterministic 0-stream never flips parity: both start-pairs are closed.
        let zeros = FsmxSource::binary(map(&["0", "1"]), &[0.0, 0.0]).unwrap();
        let m2 = FsmxSource::binary(FeatureMap::general(None, 2, 2, 0, vec![0, 1, 1, 0]).unwrap(), &[0.5, 0.5]).unwrap();
        assert!(cross_entropy_exact_markov(&zeros, &m2).is_ok());
    }

    #[test]
    fn monte_carlo_examples() {
        let uniform = FsmxSource::binary(FeatureMap::trivial(2), &[0.5]).unwrap();
        let theta = induced_hmm(&uniform).unwrap();
        let est = cross_entropy_mc(&Generator::Fsmx(uniform.clone()), &theta, 100_000, 1).unwrap();
        assert_abs_diff_eq!(est.value, 2f64.ln(), epsilon = 0.01);

        let src = reference();
        let exact = cross_entropy_exact_markov(&src, &src).unwrap();
        let mc = cross_entropy_mc(&Generator::Fsmx(src.clone()), &induced_hmm(&src).unwrap(), 100_000, 2).unwrap();
        assert!((exact.value - mc.value).abs() <= 0.01);
        assert!(mc.std_error.unwrap() > 0.0);

        let zero = induced_hmm(&FsmxSource::binary(FeatureMap::trivial(2), &[0.0]).unwrap()).unwrap();
        let est = cross_entropy_mc(&Generator::Fsmx(uniform), &zero, 1000, 1).unwrap();
        assert_eq!(est.value, f64::INFINITY);
        assert!(serde_json::to_string(&est).unwrap().contains("\"value\":null"));
    }

    #[test]
    fn limiting_model_of_true_map_is_truth() {
        let src = reference();
        let lim = limiting_model(&src, src.map()).unwrap();
        for s in 0..3 {
            for y in 0..2 {
                assert_abs_diff_eq!(lim.prob(s, y), src.emit()[(s, y)], epsilon = 1e-12);
            }
        }
    }
}
