//! Feature maps from histories to states.
//!
//! A [`FeatureMap`] is a finite-state machine `s_t = psi(s_{t-1}, y_t)` with a
//! start state. Suffix-tree maps are built from proper, complete, FSM-closed
//! suffix sets; general maps are loaded from an explicit transition table.
//!
//! Suffixes are written in time order: the suffix `01` matches histories whose
//! last two symbols are `0` then `1`.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq::{all_strings, Alphabet, SymbolSequence};

/// Upper bound on the number of strings enumerated when checking completeness.
const MAX_COMPLETENESS_STRINGS: usize = 1 << 22;

/// A set of non-empty suffixes over an alphabet, kept in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixSet {
    alphabet: Alphabet,
    suffixes: Vec<Vec<usize>>,
}

impl SuffixSet {
    pub fn new(alphabet: Alphabet, mut suffixes: Vec<Vec<usize>>) -> Result<Self> {
        if suffixes.is_empty() {
            return Err(Error::input("suffix set must be non-empty"));
        }
        for s in &suffixes {
            if s.is_empty() {
                return Err(Error::input("suffixes must be non-empty strings"));
            }
            if let Some(&bad) = s.iter().find(|&&y| y >= alphabet.size()) {
                return Err(Error::input(format!("suffix symbol {bad} out of range")));
            }
        }
        suffixes.sort();
        Ok(SuffixSet { alphabet, suffixes })
    }

    /// Parses digit strings such as `["0", "01", "11"]`.
    pub fn from_digits(alphabet_size: usize, suffixes: &[&str]) -> Result<Self> {
        let parsed = suffixes
            .iter()
            .map(|s| SymbolSequence::from_digits(alphabet_size, s).map(|q| q.items().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        SuffixSet::new(Alphabet::new(alphabet_size)?, parsed)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn suffixes(&self) -> &[Vec<usize>] {
        &self.suffixes
    }

    pub fn depth(&self) -> usize {
        self.suffixes.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.suffixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.suffixes.is_empty()
    }

    /// Index of the unique member that `history` ends with, if any.
    pub fn match_history(&self, history: &[usize]) -> Option<usize> {
        self.suffixes.iter().position(|s| history.ends_with(s))
    }

    /// Set notation, e.g. `{0,01,11}`.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .suffixes
            .iter()
            .map(|s| render_string(s, self.alphabet.size()))
            .collect();
        format!("{{{}}}", parts.join(","))
    }
}

/// Digits when every symbol fits in one character, dot-separated otherwise.
pub fn render_string(s: &[usize], alphabet_size: usize) -> String {
    if alphabet_size <= 10 {
        s.iter().map(|y| char::from_digit(*y as u32, 10).unwrap()).collect()
    } else {
        s.iter().map(|y| y.to_string()).collect::<Vec<_>>().join(".")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SuffixViolation {
    /// `shorter` is an ending substring of `longer` (or equal to it).
    NotProper { shorter: Vec<usize>, longer: Vec<usize> },
    /// `witness` has length `depth` and ends with no member.
    Incomplete { witness: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixValidation {
    pub proper: bool,
    pub complete: bool,
    pub violations: Vec<SuffixViolation>,
}

impl SuffixValidation {
    pub fn is_valid(&self) -> bool {
        self.proper && self.complete
    }
}

pub fn validate_suffix_set(set: &SuffixSet) -> Result<SuffixValidation> {
    let mut violations = Vec::new();
    for (i, a) in set.suffixes.iter().enumerate() {
        for (j, b) in set.suffixes.iter().enumerate() {
            let clash = if a.len() == b.len() { i < j && a == b } else { a.len() < b.len() && b.ends_with(a) };
            if clash {
                violations.push(SuffixViolation::NotProper {
                    shorter: a.clone(),
                    longer: b.clone(),
                });
            }
        }
    }
    let proper = violations.is_empty();

    let size = set.alphabet.size();
    let depth = set.depth();
    let total = (size as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    if total > MAX_COMPLETENESS_STRINGS as u128 {
        return Err(Error::Resource {
            limit: "strings enumerated for the completeness check",
            cap: MAX_COMPLETENESS_STRINGS as u64,
        });
    }
    let mut complete = true;
    for h in all_strings(size, depth) {
        if set.match_history(&h).is_none() {
            complete = false;
            violations.push(SuffixViolation::Incomplete { witness: h });
            break;
        }
    }
    Ok(SuffixValidation {
        proper,
        complete,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FsmClosure {
    /// `psi[state * |Y| + symbol]` indexes into the (sorted) suffix list.
    Closed { psi: Vec<usize> },
    /// Histories ending in `state`, extended by `symbol`, do not share a member.
    Open { state: Vec<usize>, symbol: usize },
}

impl FsmClosure {
    pub fn is_closed(&self) -> bool {
        matches!(self, FsmClosure::Closed { .. })
    }
}

/// Checks whether `(suffix, next symbol)` always determines the next suffix.
///
/// For a proper, complete set over an alphabet of size at least two this
/// holds iff some member is an ending substring of `s·y` for every member `s`
/// and symbol `y`: otherwise every matching member is strictly longer than
/// `s·y` and differs across extensions.
pub fn is_fsm_closed(set: &SuffixSet) -> Result<FsmClosure> {
    let validation = validate_suffix_set(set)?;
    if !validation.is_valid() {
        return Err(Error::input(format!(
            "suffix set {} must be proper and complete: {:?}",
            set.label(),
            validation.violations
        )));
    }
    let size = set.alphabet.size();
    let mut psi = Vec::with_capacity(set.len() * size);
    let mut extended = Vec::with_capacity(set.depth() + 1);
    for s in &set.suffixes {
        for y in 0..size {
            extended.clear();
            extended.extend_from_slice(s);
            extended.push(y);
            match set.match_history(&extended) {
                Some(next) => psi.push(next),
                None => {
                    return Ok(FsmClosure::Open {
                        state: s.clone(),
                        symbol: y,
                    })
                }
            }
        }
    }
    Ok(FsmClosure::Closed { psi })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapKind {
    /// State `i` is the suffix `suffixes[i]`.
    SuffixTree { suffixes: Vec<Vec<usize>> },
    General,
}

/// A deterministic finite-state feature map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMap {
    id: String,
    alphabet_size: usize,
    states: usize,
    psi: Vec<usize>,
    start: usize,
    kind: MapKind,
}

impl FeatureMap {
    /// A general map from a flat row-major `states x alphabet_size` table.
    pub fn general(id: Option<String>, alphabet_size: usize, states: usize, start: usize, psi: Vec<usize>) -> Result<Self> {
        if alphabet_size == 0 || states == 0 {
            return Err(Error::input("map needs at least one state and one symbol"));
        }
        if psi.len() != states * alphabet_size {
            return Err(Error::input(format!(
                "psi table has {} entries, expected {} x {}",
                psi.len(),
                states,
                alphabet_size
            )));
        }
        if start >= states {
            return Err(Error::input(format!("start state {start} out of range")));
        }
        if let Some(bad) = psi.iter().find(|&&s| s >= states) {
            return Err(Error::input(format!("psi target {bad} out of range")));
        }
        let id = id.unwrap_or_else(|| general_id(alphabet_size, start, &psi));
        Ok(FeatureMap {
            id,
            alphabet_size,
            states,
            psi,
            start,
            kind: MapKind::General,
        })
    }

    /// The map that sends every history to a single state.
    pub fn trivial(alphabet_size: usize) -> Self {
        FeatureMap {
            id: "trivial".to_string(),
            alphabet_size,
            states: 1,
            psi: vec![0; alphabet_size],
            start: 0,
            kind: MapKind::General,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn start_state(&self) -> usize {
        self.start
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn psi_table(&self) -> &[usize] {
        &self.psi
    }

    /// Suffix labelling of the states, for suffix-tree maps.
    pub fn suffixes(&self) -> Option<&[Vec<usize>]> {
        match &self.kind {
            MapKind::SuffixTree { suffixes } => Some(suffixes),
            MapKind::General => None,
        }
    }

    /// Index of the state labelled by `suffix` (suffix-tree maps only).
    pub fn state_of_suffix(&self, suffix: &[usize]) -> Option<usize> {
        self.suffixes()?.iter().position(|s| s == suffix)
    }

    pub fn state_label(&self, state: usize) -> String {
        match &self.kind {
            MapKind::SuffixTree { suffixes } => render_string(&suffixes[state], self.alphabet_size),
            MapKind::General => state.to_string(),
        }
    }

    /// `psi(state, symbol)`, unchecked beyond slice bounds.
    #[inline]
    pub fn next(&self, state: usize, symbol: usize) -> usize {
        self.psi[state * self.alphabet_size + symbol]
    }

    pub fn step(&self, state: usize, symbol: usize) -> Result<usize> {
        if state >= self.states || symbol >= self.alphabet_size {
            return Err(Error::input(format!(
                "step({state}, {symbol}) out of range for {} states, {} symbols",
                self.states, self.alphabet_size
            )));
        }
        Ok(self.next(state, symbol))
    }

    /// State path `s_0..s_n` over raw symbols, assumed in range.
    pub fn run(&self, symbols: &[usize]) -> Vec<usize> {
        let mut path = Vec::with_capacity(symbols.len() + 1);
        let mut s = self.start;
        path.push(s);
        for &y in symbols {
            s = self.next(s, y);
            path.push(s);
        }
        path
    }

    /// `s_0 = start`, `s_t = psi(s_{t-1}, y_t)`; returns `n + 1` states.
    pub fn map_history(&self, y: &SymbolSequence) -> Result<Vec<usize>> {
        self.check_alphabet(y.alphabet().size())?;
        Ok(self.run(y.items()))
    }

    pub(crate) fn check_alphabet(&self, size: usize) -> Result<()> {
        if size != self.alphabet_size {
            return Err(Error::input(format!(
                "map {} consumes {} symbols, data has alphabet of size {}",
                self.id, self.alphabet_size, size
            )));
        }
        Ok(())
    }

    /// For each state, the unique symbol on its incoming edges (`None` when
    /// the state has no incoming edge). Returns `None` if some state is
    /// entered by two different symbols.
    pub fn entering_symbols(&self) -> Option<Vec<Option<usize>>> {
        let mut entering = vec![None; self.states];
        for s in 0..self.states {
            for y in 0..self.alphabet_size {
                let t = self.next(s, y);
                match entering[t] {
                    None => entering[t] = Some(y),
                    Some(prev) if prev != y => return None,
                    _ => {}
                }
            }
        }
        Some(entering)
    }

    /// Whether the current state determines the last consumed symbol.
    pub fn emission_is_deterministic(&self) -> bool {
        self.entering_symbols().is_some()
    }

    /// Sort key: state count, then suffix-tree before general, then the
    /// sorted suffix list (or the psi table and start state).
    pub fn canonical_cmp(&self, other: &FeatureMap) -> Ordering {
        let rank = |m: &FeatureMap| match m.kind {
            MapKind::SuffixTree { .. } => 0,
            MapKind::General => 1,
        };
        self.states
            .cmp(&other.states)
            .then(rank(self).cmp(&rank(other)))
            .then_with(|| match (&self.kind, &other.kind) {
                (MapKind::SuffixTree { suffixes: a }, MapKind::SuffixTree { suffixes: b }) => a.cmp(b),
                _ => (&self.psi, self.start).cmp(&(&other.psi, other.start)),
            })
            .then_with(|| self.id.cmp(&other.id))
    }
}

fn general_id(alphabet_size: usize, start: usize, psi: &[usize]) -> String {
    let rows: Vec<String> = psi
        .chunks(alphabet_size)
        .map(|r| r.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","))
        .collect();
    format!("fsm[{}]@{}", rows.join(";"), start)
}

/// Compiles an FSM-closed suffix set; the start state is the member matched
/// by `padding` repeated `depth` times.
pub fn compile_suffix_map(set: &SuffixSet, padding: usize) -> Result<FeatureMap> {
    if padding >= set.alphabet.size() {
        return Err(Error::input(format!("padding symbol {padding} out of range")));
    }
    let psi = match is_fsm_closed(set)? {
        FsmClosure::Closed { psi } => psi,
        FsmClosure::Open { state, symbol } => return Err(Error::NotClosed { state, symbol }),
    };
    let pre_history = vec![padding; set.depth()];
    let start = set
        .match_history(&pre_history)
        .expect("complete set matches every string of length depth");
    Ok(FeatureMap {
        id: set.label(),
        alphabet_size: set.alphabet.size(),
        states: set.len(),
        psi,
        start,
        kind: MapKind::SuffixTree {
            suffixes: set.suffixes.clone(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryBoundReport {
    pub bounded: bool,
    /// Smallest `k` such that the last `k + 1` symbols fix the state.
    pub kappa: Option<usize>,
}

/// Pair-set iteration: `P_0` is every pair of states and `P_k` the image of
/// `P_{k-1}` under all symbols. The map has memory `k - 1` at the first `k`
/// where `P_k` is diagonal. Gives up after `min(kappa_max + 1, S^2)` steps or
/// when the off-diagonal pair set repeats.
pub fn memory_bound(map: &FeatureMap, kappa_max: usize) -> MemoryBoundReport {
    let s = map.states;
    let cutoff = (kappa_max + 1).min((s * s).max(1));
    let mut pairs: BTreeSet<(usize, usize)> = (0..s).flat_map(|u| (u + 1..s).map(move |v| (u, v))).collect();
    let mut seen = vec![pairs.clone()];
    for k in 1..=cutoff {
        let mut next = BTreeSet::new();
        for &(u, v) in &pairs {
            for y in 0..map.alphabet_size {
                let (a, b) = (map.next(u, y), map.next(v, y));
                if a != b {
                    next.insert((a.min(b), a.max(b)));
                }
            }
        }
        if next.is_empty() {
            return MemoryBoundReport {
                bounded: true,
                kappa: Some(k - 1),
            };
        }
        if seen.contains(&next) {
            break;
        }
        seen.push(next.clone());
        pairs = next;
    }
    MemoryBoundReport {
        bounded: false,
        kappa: None,
    }
}

/// Limits on suffix-map enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationCap {
    /// Maximum `|Y|^max_depth`.
    pub max_leaves: u64,
    /// Maximum number of candidate context trees generated before filtering.
    pub max_trees: u64,
}

impl Default for EnumerationCap {
    fn default() -> Self {
        EnumerationCap {
            max_leaves: 1 << 12,
            max_trees: 200_000,
        }
    }
}

/// Number of full context trees of depth at most `depth` (including the
/// root-only tree): `t(0) = 1`, `t(d) = 1 + t(d-1)^Y`. Saturates.
fn count_trees(alphabet_size: usize, depth: usize) -> u64 {
    let mut t: u64 = 1;
    for _ in 0..depth {
        t = t.checked_pow(alphabet_size as u32).and_then(|p| p.checked_add(1)).unwrap_or(u64::MAX);
    }
    t
}

/// All full context trees of depth at most `depth`, as lists of leaf paths
/// (most recent symbol first).
fn context_trees(alphabet_size: usize, depth: usize) -> Vec<Vec<Vec<usize>>> {
    let mut trees = vec![vec![Vec::new()]];
    if depth == 0 {
        return trees;
    }
    let children = context_trees(alphabet_size, depth - 1);
    let mut combos: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for y in 0..alphabet_size {
        let mut extended = Vec::with_capacity(combos.len() * children.len());
        for partial in &combos {
            for child in &children {
                let mut tree = partial.clone();
                tree.extend(child.iter().map(|path| {
                    let mut p = Vec::with_capacity(path.len() + 1);
                    p.push(y);
                    p.extend_from_slice(path);
                    p
                }));
                extended.push(tree);
            }
        }
        combos = extended;
    }
    trees.extend(combos);
    trees
}

/// Every proper, complete, FSM-closed suffix set of depth at most
/// `max_depth`, compiled with padding symbol 0, in canonical order.
pub fn enumerate_closed_suffix_maps(alphabet: &Alphabet, max_depth: usize, cap: EnumerationCap) -> Result<Vec<FeatureMap>> {
    if max_depth == 0 {
        return Err(Error::input("max_depth must be at least 1"));
    }
    let size = alphabet.size();
    let leaves = (size as u64).checked_pow(max_depth as u32).unwrap_or(u64::MAX);
    if leaves > cap.max_leaves {
        return Err(Error::Resource {
            limit: "alphabet_size^max_depth",
            cap: cap.max_leaves,
        });
    }
    if count_trees(size, max_depth) - 1 > cap.max_trees {
        return Err(Error::Resource {
            limit: "candidate suffix sets",
            cap: cap.max_trees,
        });
    }
    let mut maps = Vec::new();
    for tree in context_trees(size, max_depth).into_iter().skip(1) {
        let suffixes = tree
            .into_iter()
            .map(|mut p| {
                p.reverse();
                p
            })
            .collect();
        let set = SuffixSet::new(alphabet.clone(), suffixes)?;
        if is_fsm_closed(&set)?.is_closed() {
            maps.push(compile_suffix_map(&set, 0)?);
        }
    }
    maps.sort_by(FeatureMap::canonical_cmp);
    Ok(maps)
}

/// JSON form of a map: `{kind, alphabet_size, states, start_state, psi, suffixes?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub kind: MapFileKind,
    pub alphabet_size: usize,
    pub states: usize,
    pub start_state: usize,
    pub psi: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suffixes: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapFileKind {
    SuffixTree,
    Fsm,
}

impl From<&FeatureMap> for MapFile {
    fn from(map: &FeatureMap) -> Self {
        MapFile {
            id: Some(map.id.clone()),
            kind: match map.kind {
                MapKind::SuffixTree { .. } => MapFileKind::SuffixTree,
                MapKind::General => MapFileKind::Fsm,
            },
            alphabet_size: map.alphabet_size,
            states: map.states,
            start_state: map.start,
            psi: map.psi.chunks(map.alphabet_size).map(<[usize]>::to_vec).collect(),
            suffixes: map.suffixes().map(<[Vec<usize>]>::to_vec),
        }
    }
}

/// Builds a validated map from its file form and reports its memory bound.
///
/// Suffix-tree entries are recompiled from their suffixes and must agree with
/// the stored table.
pub fn load_fsm_map(file: &MapFile) -> Result<(FeatureMap, MemoryBoundReport)> {
    if file.psi.len() != file.states {
        return Err(Error::input(format!(
            "psi table has {} rows, expected {}",
            file.psi.len(),
            file.states
        )));
    }
    if let Some((row, r)) = file.psi.iter().enumerate().find(|(_, r)| r.len() != file.alphabet_size) {
        return Err(Error::input(format!(
            "psi row {row} has {} entries, expected {}",
            r.len(),
            file.alphabet_size
        )));
    }
    let flat: Vec<usize> = file.psi.iter().flatten().copied().collect();
    let map = match file.kind {
        MapFileKind::Fsm => FeatureMap::general(file.id.clone(), file.alphabet_size, file.states, file.start_state, flat)?,
        MapFileKind::SuffixTree => {
            let suffixes = file
                .suffixes
                .clone()
                .ok_or_else(|| Error::input("suffix-tree map requires `suffixes`"))?;
            let set = SuffixSet::new(Alphabet::new(file.alphabet_size)?, suffixes.clone())?;
            if set.suffixes != suffixes {
                return Err(Error::input("suffixes must be listed in sorted order"));
            }
            let mut map = compile_suffix_map(&set, 0)?;
            if map.psi != flat {
                return Err(Error::input(format!("psi table disagrees with suffix set {}", set.label())));
            }
            if file.start_state >= map.states {
                return Err(Error::input(format!("start state {} out of range", file.start_state)));
            }
            map.start = file.start_state;
            if let Some(id) = &file.id {
                map.id = id.clone();
            }
            map
        }
    };
    let bound = memory_bound(&map, map.states * map.states);
    Ok((map, bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(digits: &[&str]) -> SuffixSet {
        SuffixSet::from_digits(2, digits).unwrap()
    }

    fn sym(s: &str) -> Vec<usize> {
        SymbolSequence::from_digits(2, s).unwrap().items().to_vec()
    }

    #[test]
    fn validation_examples() {
        let v = validate_suffix_set(&set(&["0", "01", "11"])).unwrap();
        assert!(v.proper && v.complete);

        let v = validate_suffix_set(&set(&["0", "1", "01"])).unwrap();
        assert!(!v.proper);
        assert!(v.violations.contains(&SuffixViolation::NotProper {
            shorter: sym("1"),
            longer: sym("01")
        }));

        let v = validate_suffix_set(&set(&["00", "11"])).unwrap();
        assert!(v.proper && !v.complete);
        assert_eq!(v.violations, vec![SuffixViolation::Incomplete { witness: sym("01") }]);
    }

    #[test]
    fn empty_set_rejected() {
        assert!(SuffixSet::new(Alphabet::new(2).unwrap(), vec![]).is_err());
        assert!(SuffixSet::new(Alphabet::new(2).unwrap(), vec![vec![]]).is_err());
    }

    #[test]
    fn closure_examples() {
        let s = set(&["0", "01", "11"]);
        let FsmClosure::Closed { psi } = is_fsm_closed(&s).unwrap() else {
            panic!("expected closed");
        };
        // states sorted: 0, 01, 11
        assert_eq!(psi, vec![0, 1, 0, 2, 0, 2]);

        assert_eq!(
            is_fsm_closed(&set(&["1", "00", "010", "110"])).unwrap(),
            FsmClosure::Open {
                state: sym("1"),
                symbol: 0
            }
        );
        assert!(is_fsm_closed(&set(&["00", "01", "10", "11"])).unwrap().is_closed());
        assert!(is_fsm_closed(&set(&["00", "11"])).is_err());
    }

    #[test]
    fn compile_examples() {
        let m = compile_suffix_map(&set(&["0", "01", "11"]), 0).unwrap();
        assert_eq!(m.state_count(), 3);
        assert_eq!(m.state_label(m.start_state()), "0");
        assert_eq!(m.id(), "{0,01,11}");

        let m = compile_suffix_map(&set(&["0", "1"]), 0).unwrap();
        assert_eq!(m.state_label(m.start_state()), "0");

        let m = compile_suffix_map(&set(&["00", "01", "10", "11"]), 1).unwrap();
        assert_eq!(m.state_label(m.start_state()), "11");

        assert!(matches!(
            compile_suffix_map(&set(&["1", "00", "010", "110"]), 0),
            Err(Error::NotClosed { .. })
        ));
    }

    #[test]
    fn step_examples() {
        let m = compile_suffix_map(&set(&["0", "01", "11"]), 0).unwrap();
        let st = |l: &str| m.state_of_suffix(&sym(l)).unwrap();
        assert_eq!(m.step(st("01"), 1).unwrap(), st("11"));
        assert_eq!(m.step(st("11"), 0).unwrap(), st("0"));
        assert!(m.step(3, 0).is_err());
        assert!(m.step(0, 2).is_err());

        let d1 = compile_suffix_map(&set(&["0", "1"]), 0).unwrap();
        for s in 0..2 {
            for y in 0..2 {
                assert_eq!(d1.state_label(d1.step(s, y).unwrap()), y.to_string());
            }
        }
    }

    #[test]
    fn map_history_examples() {
        let d1 = compile_suffix_map(&set(&["0", "1"]), 0).unwrap();
        let y = SymbolSequence::from_digits(2, "0110").unwrap();
        assert_eq!(d1.map_history(&y).unwrap(), vec![0, 0, 1, 1, 0]);

        let m = compile_suffix_map(&set(&["0", "01", "11"]), 0).unwrap();
        let path = m.map_history(&SymbolSequence::from_digits(2, "11").unwrap()).unwrap();
        let labels: Vec<String> = path.iter().map(|&s| m.state_label(s)).collect();
        assert_eq!(labels, vec!["0", "01", "11"]);

        let empty = SymbolSequence::from_digits(2, "").unwrap();
        assert_eq!(m.map_history(&empty).unwrap(), vec![m.start_state()]);

        let ternary = SymbolSequence::from_digits(3, "01").unwrap();
        assert!(m.map_history(&ternary).is_err());
    }

    #[test]
    fn memory_bound_examples() {
        let m = compile_suffix_map(&set(&["0", "01", "11"]), 0).unwrap();
        assert_eq!(memory_bound(&m, 9), MemoryBoundReport { bounded: true, kappa: Some(1) });
        assert_eq!(memory_bound(&FeatureMap::trivial(2), 1), MemoryBoundReport { bounded: true, kappa: Some(0) });

        let parity = FeatureMap::general(None, 2, 2, 0, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(memory_bound(&parity, 100), MemoryBoundReport { bounded: false, kappa: None });
    }

    #[test]
    fn enumeration_small_cases() {
        let bin = Alphabet::new(2).unwrap();
        let d1 = enumerate_closed_suffix_maps(&bin, 1, EnumerationCap::default()).unwrap();
        assert_eq!(d1.len(), 1);
        assert_eq!(d1[0].id(), "{0,1}");

        let d2 = enumerate_closed_suffix_maps(&bin, 2, EnumerationCap::default()).unwrap();
        let ids: Vec<&str> = d2.iter().map(FeatureMap::id).collect();
        assert_eq!(ids, vec!["{0,1}", "{0,01,11}", "{00,1,10}", "{00,01,10,11}"]);

        let ter = enumerate_closed_suffix_maps(&Alphabet::new(3).unwrap(), 1, EnumerationCap::default()).unwrap();
        assert_eq!(ter.len(), 1);
        assert_eq!(ter[0].state_count(), 3);
    }

    #[test]
    fn enumeration_cap_is_named() {
        let bin = Alphabet::new(2).unwrap();
        let cap = EnumerationCap { max_leaves: 4, max_trees: 1000 };
        let err = enumerate_closed_suffix_maps(&bin, 3, cap).unwrap_err();
        assert!(err.to_string().contains("cap = 4"), "{err}");
        let cap = EnumerationCap { max_leaves: 1 << 20, max_trees: 10 };
        assert!(matches!(enumerate_closed_suffix_maps(&bin, 3, cap), Err(Error::Resource { cap: 10, .. })));
    }

    #[test]
    fn tree_counts() {
        assert_eq!(count_trees(2, 3), 26);
        assert_eq!(context_trees(2, 3).len(), 26);
        assert_eq!(context_trees(3, 2).len() as u64, count_trees(3, 2));
    }

    #[test]
    fn map_file_round_trip_and_merged_states() {
        let m = compile_suffix_map(&set(&["0", "01", "11"]), 0).unwrap();
        let file = MapFile::from(&m);
        let (back, bound) = load_fsm_map(&file).unwrap();
        assert_eq!(back, m);
        assert_eq!(bound.kappa, Some(1));

        let general = MapFile { kind: MapFileKind::Fsm, suffixes: None, id: None, ..file.clone() };
        let (g, _) = load_fsm_map(&general).unwrap();
        assert_eq!(g.psi_table(), m.psi_table());

        // Full depth-2 tree with 01 and 11 merged: states 00, 10, *1.
        let merged = MapFile {
            id: None,
            kind: MapFileKind::Fsm,
            alphabet_size: 2,
            states: 3,
            start_state: 0,
            psi: vec![vec![0, 2], vec![0, 2], vec![1, 2]],
            suffixes: None,
        };
        let (g, bound) = load_fsm_map(&merged).unwrap();
        assert_eq!(g.state_count(), 3);
        assert_eq!(bound, MemoryBoundReport { bounded: true, kappa: Some(1) });

        let mut partial = merged.clone();
        partial.psi[2].pop();
        assert!(load_fsm_map(&partial).is_err());
        let mut bad = merged;
        bad.psi[0][0] = 7;
        assert!(load_fsm_map(&bad).is_err());
    }

    #[test]
    fn entering_symbols() {
        let m = compile_suffix_map(&set(&["0", "01", "11"]), 0).unwrap();
        assert_eq!(m.entering_symbols(), Some(vec![Some(0), Some(1), Some(1)]));
        let parity = FeatureMap::general(None, 2, 2, 0, vec![0, 1, 1, 0]).unwrap();
        assert!(!parity.emission_is_deterministic());
        assert!(!FeatureMap::trivial(2).emission_is_deterministic());
    }
}
