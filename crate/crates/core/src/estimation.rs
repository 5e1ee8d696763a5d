//! Maximum-likelihood estimation of the HMM induced by a feature map, penalty
//! schemes, and the `Cost` / `ICost` / `OCost` criteria.
//!
//! Timing convention: transitions are counted over `(s_{t-1}, s_t)` for
//! `t = 1..n`, including the pair leaving `s_0`; emissions over `(s_t, y_t)`.
//! Both count tables therefore sum to `n`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_map::FeatureMap;
use crate::seq::{PairedSequence, SymbolSequence};
use crate::source::{forward_loglik, Hmm, PathModel};

/// Counts and row-normalized estimates of `T(n)` and `E(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalHmm {
    pub states: usize,
    /// Size of the emitted alphabet (the target alphabet under side information).
    pub alphabet_size: usize,
    pub n: usize,
    pub epsilon: f64,
    pub start_state: usize,
    pub transition_counts: DMatrix<u64>,
    pub emission_counts: DMatrix<u64>,
    pub transition: DMatrix<f64>,
    pub emission: DMatrix<f64>,
    /// Rows of `transition` with at least one count; others are uniform.
    pub transition_visited: Vec<bool>,
    /// Rows of `emission` with at least one count; others are uniform.
    pub emission_visited: Vec<bool>,
}

impl EmpiricalHmm {
    pub fn path_model(&self, map: &FeatureMap) -> PathModel {
        PathModel {
            map: map.clone(),
            transition: self.transition.clone(),
            emission: self.emission.clone(),
        }
    }

    /// The estimate as an HMM with a point mass on the start state.
    pub fn to_hmm(&self) -> Hmm {
        let mut initial = vec![0.0; self.states];
        initial[self.start_state] = 1.0;
        Hmm::new(self.transition.clone(), self.emission.clone(), initial).expect("estimates are row-stochastic")
    }
}

fn normalize_rows(counts: &DMatrix<u64>, epsilon: f64) -> (DMatrix<f64>, Vec<bool>) {
    let (rows, cols) = counts.shape();
    let mut probs = DMatrix::zeros(rows, cols);
    let mut visited = vec![false; rows];
    for r in 0..rows {
        let total: u64 = counts.row(r).iter().sum();
        visited[r] = total > 0;
        let denom = total as f64 + epsilon * cols as f64;
        for c in 0..cols {
            probs[(r, c)] = if denom > 0.0 {
                (counts[(r, c)] as f64 + epsilon) / denom
            } else {
                1.0 / cols as f64
            };
        }
    }
    (probs, visited)
}

/// Estimates `T` from the state path driven by `drive` and `E` from the pairs
/// `(s_t, targets[t])`. `drive` and `targets` have equal length.
pub fn estimate_with(
    map: &FeatureMap,
    drive: &[usize],
    targets: &[usize],
    target_alphabet: usize,
    epsilon: f64,
) -> Result<EmpiricalHmm> {
    if drive.is_empty() {
        return Err(Error::input("cannot estimate from an empty sequence"));
    }
    if drive.len() != targets.len() {
        return Err(Error::input("drive and target sequences differ in length"));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::input(format!("smoothing epsilon must be finite and >= 0, got {epsilon}")));
    }
    let s = map.state_count();
    let mut transition_counts = DMatrix::<u64>::zeros(s, s);
    let mut emission_counts = DMatrix::<u64>::zeros(s, target_alphabet);
    let mut prev = map.start_state();
    for (&d, &y) in drive.iter().zip(targets) {
        let next = map.next(prev, d);
        transition_counts[(prev, next)] += 1;
        emission_counts[(next, y)] += 1;
        prev = next;
    }
    let (transition, transition_visited) = normalize_rows(&transition_counts, epsilon);
    let (emission, emission_visited) = normalize_rows(&emission_counts, epsilon);
    Ok(EmpiricalHmm {
        states: s,
        alphabet_size: target_alphabet,
        n: drive.len(),
        epsilon,
        start_state: map.start_state(),
        transition_counts,
        emission_counts,
        transition,
        emission,
        transition_visited,
        emission_visited,
    })
}

/// Maximum-likelihood `(T(n), E(n))` of `y` through `map`.
pub fn estimate(map: &FeatureMap, y: &SymbolSequence) -> Result<EmpiricalHmm> {
    estimate_smoothed(map, y, 0.0)
}

/// As [`estimate`], with add-`epsilon` smoothing of every row.
pub fn estimate_smoothed(map: &FeatureMap, y: &SymbolSequence, epsilon: f64) -> Result<EmpiricalHmm> {
    map.check_alphabet(y.alphabet().size())?;
    estimate_with(map, y.items(), y.items(), y.alphabet().size(), epsilon)
}

/// `-sum ln T(s_{t-1}, s_t) - sum ln E(s_t, y_t)` along the path driven by
/// `drive`. Returns `+inf` if any factor is zero.
pub fn path_data_cost(map: &FeatureMap, emp: &EmpiricalHmm, drive: &[usize], targets: &[usize]) -> f64 {
    let mut cost = 0.0;
    let mut prev = map.start_state();
    for (&d, &y) in drive.iter().zip(targets) {
        let next = map.next(prev, d);
        let t = emp.transition[(prev, next)];
        let e = emp.emission[(next, y)];
        if t == 0.0 || e == 0.0 {
            return f64::INFINITY;
        }
        cost -= t.ln() + e.ln();
        prev = next;
    }
    cost
}

/// `L_n = -ln Pr(y_1..y_n | T, E)` along the unique state path of `y`.
pub fn log_likelihood(map: &FeatureMap, emp: &EmpiricalHmm, y: &SymbolSequence) -> Result<f64> {
    map.check_alphabet(y.alphabet().size())?;
    check_shape(map, emp, y.alphabet().size())?;
    Ok(path_data_cost(map, emp, y.items(), y.items()))
}

fn check_shape(map: &FeatureMap, emp: &EmpiricalHmm, target_alphabet: usize) -> Result<()> {
    if emp.states != map.state_count() || emp.alphabet_size != target_alphabet {
        return Err(Error::input(format!(
            "estimate has shape {}x{}, map {} needs {}x{}",
            emp.states,
            emp.alphabet_size,
            map.id(),
            map.state_count(),
            target_alphabet
        )));
    }
    Ok(())
}

/// How the BIC dimension `d(S, Y)` is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimensionRule {
    /// `S (Y - 1)`.
    MarkovOnly,
    /// `S (S - 1) + S (Y - 1)`.
    FullHmm,
    /// Markov-only when the state determines the last symbol, full otherwise.
    Auto,
}

/// Penalty values `pen(n, S)` on a step grid over `n`, one row per state count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTable {
    /// Increasing breakpoints; `n_breaks[0]` must be 1.
    pub n_breaks: Vec<u64>,
    /// `values[S - 1][i]` applies for `n_breaks[i] <= n < n_breaks[i + 1]`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PenaltyScheme {
    /// `(d / 2) ln n`.
    Bic { dimension: DimensionRule },
    /// `beta(S) ln n` with `beta` a polynomial, coefficients from degree 0 up.
    LinearLog { beta: Vec<f64> },
    Table(PenaltyTable),
}

/// The model attributes a penalty may depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelShape {
    pub states: usize,
    /// Alphabet consumed by the map.
    pub alphabet_size: usize,
    pub deterministic_emission: bool,
}

impl ModelShape {
    pub fn of(map: &FeatureMap) -> Self {
        ModelShape {
            states: map.state_count(),
            alphabet_size: map.alphabet_size(),
            deterministic_emission: map.emission_is_deterministic(),
        }
    }
}

impl PenaltyScheme {
    pub fn bic_markov() -> Self {
        PenaltyScheme::Bic {
            dimension: DimensionRule::MarkovOnly,
        }
    }

    pub fn bic_full() -> Self {
        PenaltyScheme::Bic {
            dimension: DimensionRule::FullHmm,
        }
    }

    /// `S^3 ln n`.
    pub fn cubic() -> Self {
        PenaltyScheme::LinearLog {
            beta: vec![0.0, 0.0, 0.0, 1.0],
        }
    }

    /// Parses `bic:markov`, `bic:full`, `bic:auto`, `cubic`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "bic" | "bic:markov" => Ok(Self::bic_markov()),
            "bic:full" => Ok(Self::bic_full()),
            "bic:auto" => Ok(PenaltyScheme::Bic {
                dimension: DimensionRule::Auto,
            }),
            "cubic" => Ok(Self::cubic()),
            other => Err(Error::input(format!(
                "unknown penalty {other:?}; expected bic:markov, bic:full, bic:auto or cubic"
            ))),
        }
    }

    /// Rejects coefficient vectors or tables that are not positive and monotone.
    pub fn validate(&self) -> Result<()> {
        match self {
            PenaltyScheme::Bic { .. } => Ok(()),
            PenaltyScheme::LinearLog { beta } => {
                if beta.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                    return Err(Error::input("beta coefficients must be finite and non-negative"));
                }
                if !beta.iter().skip(1).any(|c| *c > 0.0) {
                    return Err(Error::input("beta must have a positive non-constant coefficient"));
                }
                Ok(())
            }
            PenaltyScheme::Table(t) => {
                if t.n_breaks.first() != Some(&1) || t.n_breaks.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::input("penalty table breakpoints must start at 1 and increase"));
                }
                if t.values.is_empty() || t.values.iter().any(|row| row.len() != t.n_breaks.len()) {
                    return Err(Error::input("penalty table rows must match the breakpoints"));
                }
                for (s, row) in t.values.iter().enumerate() {
                    if row.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                        return Err(Error::input(format!("penalty table row {} has a non-positive value", s + 1)));
                    }
                    if row.windows(2).any(|w| w[0] > w[1]) {
                        return Err(Error::input(format!("penalty table row {} decreases in n", s + 1)));
                    }
                    if s > 0 && row.iter().zip(&t.values[s - 1]).any(|(a, b)| a < b) {
                        return Err(Error::input(format!("penalty table decreases in S at S = {}", s + 1)));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn dimension(rule: DimensionRule, shape: ModelShape) -> f64 {
        let (s, y) = (shape.states as f64, shape.alphabet_size as f64);
        let markov = s * (y - 1.0);
        let full = s * (s - 1.0) + markov;
        match rule {
            DimensionRule::MarkovOnly => markov,
            DimensionRule::FullHmm => full,
            DimensionRule::Auto if shape.deterministic_emission => markov,
            DimensionRule::Auto => full,
        }
    }

    /// `pen(n, S)` in nats.
    pub fn value(&self, n: usize, shape: ModelShape) -> Result<f64> {
        self.value_at(n as f64, shape)
    }

    /// `pen(n, S)` for real `n >= 1`; tables use the breakpoint at or below `n`.
    pub fn value_at(&self, n: f64, shape: ModelShape) -> Result<f64> {
        if n.is_nan() || n < 1.0 || shape.states == 0 {
            return Err(Error::input("penalty needs n >= 1 and S >= 1"));
        }
        let ln_n = n.ln();
        match self {
            PenaltyScheme::Bic { dimension } => Ok(Self::dimension(*dimension, shape) / 2.0 * ln_n),
            PenaltyScheme::LinearLog { beta } => {
                let s = shape.states as f64;
                let b = beta.iter().rev().fold(0.0, |acc, c| acc * s + c);
                Ok(b * ln_n)
            }
            PenaltyScheme::Table(t) => {
                let row = t.values.get(shape.states - 1).ok_or_else(|| {
                    Error::input(format!("penalty table has no row for S = {}", shape.states))
                })?;
                let idx = t.n_breaks.partition_point(|&b| b as f64 <= n) - 1;
                Ok(row[idx])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Cost,
    #[serde(rename = "icost")]
    ICost,
    #[serde(rename = "ocost")]
    OCost,
    /// Data cost only (penalty zero).
    Ml,
}

impl Criterion {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cost" => Ok(Criterion::Cost),
            "icost" => Ok(Criterion::ICost),
            "ocost" => Ok(Criterion::OCost),
            "ml" => Ok(Criterion::Ml),
            other => Err(Error::input(format!("unknown criterion {other:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::Cost => "cost",
            Criterion::ICost => "icost",
            Criterion::OCost => "ocost",
            Criterion::Ml => "ml",
        }
    }
}

/// Penalized code length of one map on one data set, in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub map_id: String,
    pub n: usize,
    pub criterion: Criterion,
    /// `null` in JSON when infinite.
    #[serde(with = "nonfinite_as_null")]
    pub data_cost: f64,
    pub penalty: f64,
    #[serde(with = "nonfinite_as_null")]
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(map_id: &str, n: usize, criterion: Criterion, data_cost: f64, penalty: f64) -> Self {
        CostBreakdown {
            map_id: map_id.to_string(),
            n,
            criterion,
            data_cost,
            penalty,
            total: data_cost + penalty,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data_cost.is_finite()
    }
}

mod nonfinite_as_null {
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

/// `Cost_n = L_n + pen(n, S)` with parameters estimated from `y` itself.
pub fn cost(map: &FeatureMap, y: &SymbolSequence, scheme: &PenaltyScheme) -> Result<CostBreakdown> {
    cost_as(Criterion::Cost, map, y, scheme)
}

fn cost_as(criterion: Criterion, map: &FeatureMap, y: &SymbolSequence, scheme: &PenaltyScheme) -> Result<CostBreakdown> {
    let emp = estimate(map, y)?;
    let data = log_likelihood(map, &emp, y)?;
    let pen = scheme.value(y.len(), ModelShape::of(map))?;
    Ok(CostBreakdown::new(map.id(), y.len(), criterion, data, pen))
}

fn check_paired(map: &FeatureMap, p: &PairedSequence) -> Result<()> {
    map.check_alphabet(p.joint_alphabet().size())?;
    if p.is_empty() {
        return Err(Error::input("cannot score an empty sequence"));
    }
    Ok(())
}

/// Estimate for a map over pairs: `T` from the pair-driven path, `E` over `y`.
pub fn estimate_paired(map: &FeatureMap, p: &PairedSequence, epsilon: f64) -> Result<EmpiricalHmm> {
    check_paired(map, p)?;
    estimate_with(map, p.joint().items(), p.targets().items(), p.y_alphabet().size(), epsilon)
}

/// `ICost_n = -ln Pr(y_1..y_n | T, E) + pen(n, S)` where the state sequence is
/// marginalized by the forward algorithm from a point mass at the start state.
///
/// With a single side-information symbol the state path is a function of `y`
/// and the value is computed exactly as [`cost`] on `y`.
pub fn icost(map: &FeatureMap, p: &PairedSequence, scheme: &PenaltyScheme) -> Result<CostBreakdown> {
    check_paired(map, p)?;
    if p.x_alphabet().size() == 1 {
        return cost_as(Criterion::ICost, map, &p.targets(), scheme);
    }
    let emp = estimate_paired(map, p, 0.0)?;
    let ll = forward_loglik(&emp.to_hmm(), &p.targets())?;
    let pen = scheme.value(p.len(), ModelShape::of(map))?;
    Ok(CostBreakdown::new(map.id(), p.len(), Criterion::ICost, -ll, pen))
}

/// `OCost_n = -ln Pr(s_1..s_n) - ln Pr(y_1..y_n | s_1..s_n) + pen(n, S)` along
/// the realized pair-driven state path.
pub fn ocost(map: &FeatureMap, p: &PairedSequence, scheme: &PenaltyScheme) -> Result<CostBreakdown> {
    check_paired(map, p)?;
    if p.x_alphabet().size() == 1 {
        return cost_as(Criterion::OCost, map, &p.targets(), scheme);
    }
    let emp = estimate_paired(map, p, 0.0)?;
    let data = path_data_cost(map, &emp, p.joint().items(), p.targets().items());
    let pen = scheme.value(p.len(), ModelShape::of(map))?;
    Ok(CostBreakdown::new(map.id(), p.len(), Criterion::OCost, data, pen))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_map::{compile_suffix_map, SuffixSet};
    use crate::seq::Alphabet;
    use approx::assert_abs_diff_eq;

    fn map(digits: &[&str]) -> FeatureMap {
        compile_suffix_map(&SuffixSet::from_digits(2, digits).unwrap(), 0).unwrap()
    }

    fn seq(s: &str) -> SymbolSequence {
        SymbolSequence::from_digits(2, s).unwrap()
    }

    #[test]
    fn estimate_depth_one() {
        let emp = estimate(&map(&["0", "1"]), &seq("01101")).unwrap();
        // states 0,0,1,1,0,1: pairs (0,0) (0,1) (1,1) (1,0) (0,1)
        assert_eq!(emp.transition_counts, DMatrix::from_row_slice(2, 2, &[1, 2, 1, 1]));
        assert_abs_diff_eq!(emp.transition[(0, 1)], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(emp.transition[(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(emp.transition[(1, 1)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(emp.transition[(1, 0)], 0.5, epsilon = 1e-15);
        assert_eq!(emp.emission[(0, 0)], 1.0);
        assert_eq!(emp.emission[(1, 1)], 1.0);
        assert_eq!(emp.transition_counts.iter().sum::<u64>(), 5);
        assert_eq!(emp.emission_counts.iter().sum::<u64>(), 5);
    }

    #[test]
    fn estimate_trivial() {
        let emp = estimate(&FeatureMap::trivial(2), &seq("0101")).unwrap();
        assert_eq!(emp.transition[(0, 0)], 1.0);
        assert_eq!(emp.emission[(0, 0)], 0.5);
        assert_eq!(emp.emission[(0, 1)], 0.5);
    }

    #[test]
    fn estimate_three_state_walk() {
        let m = map(&["0", "01", "11"]);
        let emp = estimate(&m, &seq("111")).unwrap();
        let st = |l: &str| m.state_of_suffix(seq(l).items()).unwrap();
        assert_eq!(emp.transition[(st("0"), st("01"))], 1.0);
        assert_eq!(emp.transition[(st("01"), st("11"))], 1.0);
        assert_eq!(emp.transition[(st("11"), st("11"))], 1.0);
        assert!(!emp.emission_visited[st("0")]);
        assert!(emp.transition_visited[st("0")]);
    }

    #[test]
    fn empty_sequence_rejected() {
        assert!(estimate(&FeatureMap::trivial(2), &seq("")).is_err());
    }

    #[test]
    fn penalty_examples() {
        let shape = ModelShape { states: 2, alphabet_size: 2, deterministic_emission: true };
        assert_abs_diff_eq!(PenaltyScheme::bic_markov().value(100, shape).unwrap(), 4.605170185988092, epsilon = 1e-12);
        assert_abs_diff_eq!(PenaltyScheme::bic_full().value(100, shape).unwrap(), 9.210340371976184, epsilon = 1e-12);
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(PenaltyScheme::cubic().value_at(e, shape).unwrap(), 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            PenaltyScheme::cubic().value(100, shape).unwrap(),
            8.0 * 100f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn auto_dimension_follows_emission() {
        let det = ModelShape { states: 3, alphabet_size: 2, deterministic_emission: true };
        let hid = ModelShape { deterministic_emission: false, ..det };
        assert_eq!(PenaltyScheme::dimension(DimensionRule::Auto, det), 3.0);
        assert_eq!(PenaltyScheme::dimension(DimensionRule::Auto, hid), 9.0);
    }

    #[test]
    fn table_penalty_validation() {
        let good = PenaltyScheme::Table(PenaltyTable {
            n_breaks: vec![1, 100],
            values: vec![vec![1.0, 2.0], vec![1.5, 3.0]],
        });
        good.validate().unwrap();
        let shape = ModelShape { states: 2, alphabet_size: 2, deterministic_emission: true };
        assert_eq!(good.value(50, shape).unwrap(), 1.5);
        assert_eq!(good.value(100, shape).unwrap(), 3.0);
        assert!(good.value(5, ModelShape { states: 3, ..shape }).is_err());

        let bad = PenaltyScheme::Table(PenaltyTable {
            n_breaks: vec![1, 100],
            values: vec![vec![2.0, 1.0]],
        });
        assert!(bad.validate().is_err());
        let bad_s = PenaltyScheme::Table(PenaltyTable {
            n_breaks: vec![1],
            values: vec![vec![2.0], vec![1.0]],
        });
        assert!(bad_s.validate().is_err());
        assert!(PenaltyScheme::LinearLog { beta: vec![1.0] }.validate().is_err());
    }

    #[test]
    fn log_likelihood_examples() {
        let triv = FeatureMap::trivial(2);
        let y = seq("0101");
        let emp = estimate(&triv, &y).unwrap();
        assert_abs_diff_eq!(log_likelihood(&triv, &emp, &y).unwrap(), 4.0 * 2f64.ln(), epsilon = 1e-12);

        let d1 = map(&["0", "1"]);
        let y = seq("01101");
        let emp = estimate(&d1, &y).unwrap();
        // Path 0->0->1->1->0->1: T factors 1/3, 2/3, 1/2, 1/2, 2/3; E factors 1.
        let oracle = -((1.0f64 / 3.0).ln() + (2.0f64 / 3.0).ln() + 0.5f64.ln() + 0.5f64.ln() + (2.0f64 / 3.0).ln());
        assert_abs_diff_eq!(log_likelihood(&d1, &emp, &y).unwrap(), oracle, epsilon = 1e-12);

        let zeros = seq(&"0".repeat(50));
        let emp = estimate(&d1, &zeros).unwrap();
        assert_eq!(log_likelihood(&d1, &emp, &zeros).unwrap(), 0.0);
    }

    #[test]
    fn cross_sequence_zero_factor_is_infinite() {
        let d1 = map(&["0", "1"]);
        let emp = estimate(&d1, &seq("0000")).unwrap();
        assert_eq!(log_likelihood(&d1, &emp, &seq("0100")).unwrap(), f64::INFINITY);
    }

    #[test]
    fn cost_examples() {
        let c = cost(&FeatureMap::trivial(2), &seq("0101"), &PenaltyScheme::bic_markov()).unwrap();
        assert_abs_diff_eq!(c.total, 4.0 * 2f64.ln() + 0.5 * 4f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.total, 3.4657359027997265, epsilon = 1e-12);
        assert_eq!(c.total, c.data_cost + c.penalty);

        let c = cost(&map(&["0", "1"]), &seq(&"0".repeat(100)), &PenaltyScheme::bic_markov()).unwrap();
        assert_eq!(c.data_cost, 0.0);
        assert_abs_diff_eq!(c.total, 100f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn penalty_breaks_data_ties_by_state_count() {
        // Both maps fit 0^n perfectly; the larger one pays more.
        let y = seq(&"0".repeat(100));
        let small = cost(&map(&["0", "1"]), &y, &PenaltyScheme::bic_markov()).unwrap();
        let big = cost(&map(&["0", "01", "11"]), &y, &PenaltyScheme::bic_markov()).unwrap();
        assert_eq!(small.data_cost, big.data_cost);
        assert!(big.total > small.total);
    }

    #[test]
    fn side_information_degenerates_to_cost() {
        let y = seq("0110100111010");
        let p = PairedSequence::without_side_info(&y);
        for m in [map(&["0", "1"]), map(&["0", "01", "11"]), FeatureMap::trivial(2)] {
            let c = cost(&m, &y, &PenaltyScheme::bic_markov()).unwrap();
            let i = icost(&m, &p, &PenaltyScheme::bic_markov()).unwrap();
            let o = ocost(&m, &p, &PenaltyScheme::bic_markov()).unwrap();
            assert_eq!(c.total, i.total);
            assert_eq!(c.total, o.total);
        }
    }

    #[test]
    fn smoothing_converges_to_mle() {
        let m = map(&["0", "01", "11"]);
        let y = seq("0110100111010011");
        let mle = estimate(&m, &y).unwrap();
        let mut prev_err = f64::INFINITY;
        for eps in [1e-3, 1e-6] {
            let sm = estimate_smoothed(&m, &y, eps).unwrap();
            let err = (&sm.transition - &mle.transition).amax().max((&sm.emission - &mle.emission).amax());
            assert!(err < prev_err);
            assert!(err < eps * 10.0);
            prev_err = err;
        }
    }

    #[test]
    fn cost_json_line() {
        let c = CostBreakdown::new("{0,1}", 10, Criterion::ICost, f64::INFINITY, 1.0);
        let line = serde_json::to_string(&c).unwrap();
        assert_eq!(
            line,
            r#"{"map_id":"{0,1}","n":10,"criterion":"icost","data_cost":null,"penalty":1.0,"total":null}"#
        );
        let back: CostBreakdown = serde_json::from_str(&line).unwrap();
        assert_eq!(back.total, f64::INFINITY);
    }

    #[test]
    fn paired_alphabet_checked() {
        let p = PairedSequence::new(Alphabet::new(2).unwrap(), Alphabet::new(2).unwrap(), vec![(0, 1)]).unwrap();
        assert!(icost(&map(&["0", "1"]), &p, &PenaltyScheme::bic_markov()).is_err());
    }
}
