//! Alphabets, symbol sequences, substring frequencies and ergodicity diagnostics.
//!
//! Symbols are stored 0-indexed as `usize`. A sequence `y_1..y_n` in the docs
//! corresponds to `items[0..n]`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite alphabet `{0, .., size-1}` with optional display labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::input("alphabet size must be at least 1"));
        }
        Ok(Alphabet { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut alphabet = Alphabet::new(labels.len())?;
        let mut seen = labels.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != labels.len() {
            return Err(Error::input("alphabet labels must be distinct"));
        }
        alphabet.labels = Some(labels);
        Ok(alphabet)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Same size, labels ignored.
    pub fn compatible(&self, other: &Alphabet) -> bool {
        self.size == other.size
    }

    /// Product alphabet used for pairs `(x, y)`, encoded as `x * |Y| + y`.
    pub fn product(x: &Alphabet, y: &Alphabet) -> Alphabet {
        Alphabet {
            size: x.size * y.size,
            labels: None,
        }
    }

    /// Renders one symbol: its label if present, else the index.
    pub fn render(&self, symbol: usize) -> String {
        match &self.labels {
            Some(l) => l[symbol].clone(),
            None => symbol.to_string(),
        }
    }
}

/// A finite sequence over an alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSequence {
    alphabet: Alphabet,
    items: Vec<usize>,
}

impl SymbolSequence {
    pub fn new(alphabet: Alphabet, items: Vec<usize>) -> Result<Self> {
        if let Some((i, &s)) = items.iter().enumerate().find(|(_, &s)| s >= alphabet.size) {
            return Err(Error::input(format!(
                "symbol {s} at position {} out of range for alphabet of size {}",
                i + 1,
                alphabet.size
            )));
        }
        Ok(SymbolSequence { alphabet, items })
    }

    /// Convenience constructor for tests and small literals: `"0101"` over size `k`.
    pub fn from_digits(alphabet_size: usize, digits: &str) -> Result<Self> {
        let items = digits
            .chars()
            .map(|c| {
                c.to_digit(36)
                    .map(|d| d as usize)
                    .ok_or_else(|| Error::input(format!("bad digit {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        SymbolSequence::new(Alphabet::new(alphabet_size)?, items)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// The first `n` symbols.
    pub fn prefix(&self, n: usize) -> SymbolSequence {
        SymbolSequence {
            alphabet: self.alphabet.clone(),
            items: self.items[..n.min(self.items.len())].to_vec(),
        }
    }

    /// Parses the text format: a header line `alphabet=<Y>` followed by
    /// whitespace-separated symbol indices.
    pub fn parse(text: &str) -> Result<Self> {
        let (header, body) = split_header(text)?;
        let size: usize = header
            .parse()
            .map_err(|_| Error::input(format!("bad alphabet header value {header:?}")))?;
        let items = body
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| Error::input(format!("bad symbol token {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        SymbolSequence::new(Alphabet::new(size)?, items)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("alphabet={}\n", self.alphabet.size);
        write_tokens(&mut out, self.items.iter().map(|s| s.to_string()));
        out
    }
}

fn split_header(text: &str) -> Result<(&str, &str)> {
    let mut lines = text.splitn(2, '\n');
    let header = lines.next().unwrap_or("").trim();
    let body = lines.next().unwrap_or("");
    let value = header
        .strip_prefix("alphabet=")
        .ok_or_else(|| Error::input("missing `alphabet=` header line"))?;
    Ok((value.trim(), body))
}

fn write_tokens(out: &mut String, tokens: impl Iterator<Item = String>) {
    for (i, tok) in tokens.enumerate() {
        if i > 0 {
            out.push(if i % 40 == 0 { '\n' } else { ' ' });
        }
        out.push_str(&tok);
    }
    out.push('\n');
}

/// A sequence of pairs `(x_t, y_t)`: `x` is side information, `y` is the
/// prediction target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedSequence {
    x_alphabet: Alphabet,
    y_alphabet: Alphabet,
    items: Vec<(usize, usize)>,
}

impl PairedSequence {
    pub fn new(x_alphabet: Alphabet, y_alphabet: Alphabet, items: Vec<(usize, usize)>) -> Result<Self> {
        for (i, &(x, y)) in items.iter().enumerate() {
            if x >= x_alphabet.size || y >= y_alphabet.size {
                return Err(Error::input(format!(
                    "pair ({x},{y}) at position {} out of range for alphabets {}x{}",
                    i + 1,
                    x_alphabet.size,
                    y_alphabet.size
                )));
            }
        }
        Ok(PairedSequence {
            x_alphabet,
            y_alphabet,
            items,
        })
    }

    /// Pairs a target sequence with constant (size-1) side information.
    pub fn without_side_info(y: &SymbolSequence) -> Self {
        PairedSequence {
            x_alphabet: Alphabet::new(1).expect("size 1"),
            y_alphabet: y.alphabet.clone(),
            items: y.items.iter().map(|&s| (0, s)).collect(),
        }
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x_alphabet
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y_alphabet
    }

    pub fn items(&self) -> &[(usize, usize)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn joint_alphabet(&self) -> Alphabet {
        Alphabet::product(&self.x_alphabet, &self.y_alphabet)
    }

    /// Encodes pair `(x, y)` as the joint symbol `x * |Y| + y`.
    pub fn encode(&self, x: usize, y: usize) -> usize {
        x * self.y_alphabet.size + y
    }

    /// The pair sequence as a sequence over the product alphabet.
    pub fn joint(&self) -> SymbolSequence {
        SymbolSequence {
            alphabet: self.joint_alphabet(),
            items: self.items.iter().map(|&(x, y)| self.encode(x, y)).collect(),
        }
    }

    /// The target component `y_1..y_n`.
    pub fn targets(&self) -> SymbolSequence {
        SymbolSequence {
            alphabet: self.y_alphabet.clone(),
            items: self.items.iter().map(|&(_, y)| y).collect(),
        }
    }

    pub fn prefix(&self, n: usize) -> PairedSequence {
        PairedSequence {
            x_alphabet: self.x_alphabet.clone(),
            y_alphabet: self.y_alphabet.clone(),
            items: self.items[..n.min(self.items.len())].to_vec(),
        }
    }

    /// Parses `alphabet=<X>,<Y>` followed by whitespace-separated `x,y` tokens.
    pub fn parse(text: &str) -> Result<Self> {
        let (header, body) = split_header(text)?;
        let (xs, ys) = header
            .split_once(',')
            .ok_or_else(|| Error::input("paired header must be `alphabet=<X>,<Y>`"))?;
        let parse_size = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::input(format!("bad alphabet size {s:?}")))
        };
        let (x_alphabet, y_alphabet) = (Alphabet::new(parse_size(xs)?)?, Alphabet::new(parse_size(ys)?)?);
        let items = body
            .split_whitespace()
            .map(|tok| {
                let bad = || Error::input(format!("bad pair token {tok:?}"));
                let (x, y) = tok.split_once(',').ok_or_else(bad)?;
                Ok((x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?))
            })
            .collect::<Result<Vec<_>>>()?;
        PairedSequence::new(x_alphabet, y_alphabet, items)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("alphabet={},{}\n", self.x_alphabet.size, self.y_alphabet.size);
        write_tokens(&mut out, self.items.iter().map(|(x, y)| format!("{x},{y}")));
        out
    }
}

/// `#{t : 0 <= t <= n-m, y[t+1..t+m] = pattern} / n`, overlaps counted.
///
/// The denominator is `n`, not `n - m + 1`.
pub fn substring_frequency(seq: &SymbolSequence, pattern: &SymbolSequence) -> Result<f64> {
    if !seq.alphabet.compatible(&pattern.alphabet) {
        return Err(Error::input(format!(
            "alphabet mismatch: sequence over {} symbols, pattern over {}",
            seq.alphabet.size, pattern.alphabet.size
        )));
    }
    if pattern.is_empty() {
        return Err(Error::input("pattern must be non-empty"));
    }
    if seq.is_empty() {
        return Err(Error::input("sequence must be non-empty"));
    }
    Ok(count_occurrences(&seq.items, &pattern.items) as f64 / seq.len() as f64)
}

fn count_occurrences(hay: &[usize], pattern: &[usize]) -> usize {
    if pattern.len() > hay.len() {
        return 0;
    }
    hay.windows(pattern.len()).filter(|w| *w == pattern).count()
}

/// Tail-window convergence test parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    /// Maximum allowed spread (max - min) over the tail window.
    pub tol: f64,
    /// Fraction of the grid, counted from the end, that forms the tail window.
    pub tail_fraction: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            tol: 0.01,
            tail_fraction: 0.2,
        }
    }
}

impl ConvergenceConfig {
    fn window(&self, grid_len: usize) -> usize {
        let w = (self.tail_fraction * grid_len as f64).ceil() as usize;
        w.clamp(1, grid_len)
    }
}

/// Substring frequency evaluated along a grid of prefix lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub pattern: Vec<usize>,
    pub grid: Vec<usize>,
    pub values: Vec<f64>,
    pub converged: bool,
    pub final_spread: f64,
}

pub fn frequency_trajectory(
    seq: &SymbolSequence,
    pattern: &SymbolSequence,
    grid: &[usize],
    config: ConvergenceConfig,
) -> Result<FrequencyReport> {
    if grid.is_empty() {
        return Err(Error::input("frequency grid must be non-empty"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input("frequency grid must be strictly increasing"));
    }
    if grid[0] == 0 || *grid.last().unwrap() > seq.len() {
        return Err(Error::input(format!(
            "grid points must lie in 1..={}",
            seq.len()
        )));
    }
    let values = grid
        .iter()
        .map(|&n| substring_frequency(&seq.prefix(n), pattern))
        .collect::<Result<Vec<_>>>()?;
    let tail = &values[values.len() - config.window(values.len())..];
    let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let final_spread = max - min;
    Ok(FrequencyReport {
        pattern: pattern.items.clone(),
        grid: grid.to_vec(),
        values,
        converged: final_spread <= config.tol,
        final_spread,
    })
}

/// Roughly log-spaced prefix grid from `min(start, n)` to `n`, deduplicated.
pub fn log_grid(n: usize, start: usize, points: usize) -> Vec<usize> {
    let start = start.clamp(1, n.max(1));
    if points <= 1 || start >= n {
        return vec![n];
    }
    let (lo, hi) = ((start as f64).ln(), (n as f64).ln());
    let mut grid: Vec<usize> = (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp().round() as usize)
        .map(|g| g.clamp(1, n))
        .collect();
    *grid.last_mut().unwrap() = n;
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticConfig {
    pub max_pattern_len: usize,
    pub convergence: ConvergenceConfig,
    /// Smallest prefix length on the grid.
    pub grid_start: usize,
    pub grid_points: usize,
}

impl Default for DiagnosticConfig {
    fn default() -> Self {
        DiagnosticConfig {
            max_pattern_len: 2,
            convergence: ConvergenceConfig::default(),
            grid_start: 100,
            grid_points: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    /// Keyed by the pattern rendered as symbol indices joined with `.`.
    pub patterns: BTreeMap<String, FrequencyReport>,
    pub all_converged: bool,
}

impl ErgodicityReport {
    pub fn get(&self, pattern: &[usize]) -> Option<&FrequencyReport> {
        self.patterns.get(&pattern_key(pattern))
    }
}

fn pattern_key(pattern: &[usize]) -> String {
    pattern.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(".")
}

/// All strings of length `len` over `{0..size-1}` in lexicographic order.
pub fn all_strings(size: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = size.pow(len as u32);
    (0..total).map(move |mut code| {
        let mut s = vec![0; len];
        for slot in s.iter_mut().rev() {
            *slot = code % size;
            code /= size;
        }
        s
    })
}

/// Frequency trajectories of every pattern of length `1..=max_pattern_len`.
///
/// The verdict is heuristic: it reports tail spreads on a finite grid.
pub fn ergodicity_diagnostic(seq: &SymbolSequence, config: &DiagnosticConfig) -> Result<ErgodicityReport> {
    if config.max_pattern_len == 0 {
        return Err(Error::input("max_pattern_len must be at least 1"));
    }
    if seq.is_empty() {
        return Err(Error::input("sequence must be non-empty"));
    }
    let size = seq.alphabet.size;
    let grid = log_grid(seq.len(), config.grid_start, config.grid_points);
    let mut patterns = BTreeMap::new();
    for len in 1..=config.max_pattern_len {
        for p in all_strings(size, len) {
            let pattern = SymbolSequence::new(seq.alphabet.clone(), p)?;
            let report = frequency_trajectory(seq, &pattern, &grid, config.convergence)?;
            patterns.insert(pattern_key(&pattern.items), report);
        }
    }
    let all_converged = patterns.values().all(|r| r.converged);
    Ok(ErgodicityReport {
        patterns,
        all_converged,
    })
}

impl fmt::Display for SymbolSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.items {
            write!(f, "{}", self.alphabet.render(s))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn seq(s: &str) -> SymbolSequence {
        SymbolSequence::from_digits(2, s).unwrap()
    }

    #[test]
    fn frequency_examples() {
        assert_eq!(substring_frequency(&seq("0101"), &seq("01")).unwrap(), 0.5);
        assert_eq!(substring_frequency(&seq("0101"), &seq("0")).unwrap(), 0.5);
        assert_eq!(substring_frequency(&seq("01"), &seq("010")).unwrap(), 0.0);
    }

    #[test]
    fn alphabet_mismatch_is_an_input_error() {
        let ternary = SymbolSequence::from_digits(3, "01").unwrap();
        assert!(matches!(
            substring_frequency(&seq("0101"), &ternary),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn out_of_range_symbols_rejected() {
        assert!(SymbolSequence::from_digits(2, "012").is_err());
        assert!(Alphabet::new(0).is_err());
        assert!(Alphabet::with_labels(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn periodic_trajectory_is_flat() {
        let s = seq(&"01".repeat(500));
        let r = frequency_trajectory(&s, &seq("01"), &[100, 500, 1000], ConvergenceConfig::default()).unwrap();
        assert_eq!(r.values, vec![0.5, 0.5, 0.5]);
        assert!(r.converged);
    }

    #[test]
    fn constant_trajectory() {
        let s = seq(&"0".repeat(1000));
        let r = frequency_trajectory(&s, &seq("1"), &[10, 1000], ConvergenceConfig::default()).unwrap();
        assert_eq!(r.values, vec![0.0, 0.0]);
        assert!(r.converged);
    }

    #[test]
    fn empty_grid_rejected() {
        let s = seq("0101");
        assert!(frequency_trajectory(&s, &seq("0"), &[], ConvergenceConfig::default()).is_err());
        assert!(frequency_trajectory(&s, &seq("0"), &[5], ConvergenceConfig::default()).is_err());
    }

    #[test]
    fn bernoulli_frequency_converges() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let items: Vec<usize> = (0..100_000).map(|_| rng.gen_bool(0.3) as usize).collect();
        let s = SymbolSequence::new(Alphabet::new(2).unwrap(), items).unwrap();
        let r = frequency_trajectory(&s, &seq("1"), &[1_000, 10_000, 100_000], ConvergenceConfig::default())
            .unwrap();
        assert!((r.values[2] - 0.3).abs() < 0.02, "{:?}", r.values);
    }

    #[test]
    fn periodic_sequence_diagnosed_ergodic() {
        let s = seq(&"01".repeat(10_000));
        let report = ergodicity_diagnostic(&s, &DiagnosticConfig::default()).unwrap();
        assert_eq!(report.patterns.len(), 2 + 4);
        assert!(report.all_converged);
    }

    #[test]
    fn doubling_blocks_diagnosed_non_ergodic() {
        // 0^1 1^2 0^4 1^8 ...: the frequency of "1" swings between ~1/3 and ~2/3.
        let mut items = Vec::new();
        let mut block = 1;
        let mut sym = 0;
        while items.len() < 200_000 {
            items.extend(std::iter::repeat_n(sym, block));
            block *= 2;
            sym ^= 1;
        }
        let s = SymbolSequence::new(Alphabet::new(2).unwrap(), items).unwrap();
        let report = ergodicity_diagnostic(&s, &DiagnosticConfig::default()).unwrap();
        let one = report.get(&[1]).unwrap();
        assert!(!one.converged, "spread {}", one.final_spread);
        assert!(!report.all_converged);
    }

    #[test]
    fn text_round_trip() {
        let s = seq("0110");
        assert_eq!(SymbolSequence::parse(&s.to_text()).unwrap(), s);
        let p = PairedSequence::new(Alphabet::new(2).unwrap(), Alphabet::new(3).unwrap(), vec![(0, 2), (1, 1)])
            .unwrap();
        assert_eq!(PairedSequence::parse(&p.to_text()).unwrap(), p);
        assert!(SymbolSequence::parse("0 1 1").is_err());
        assert!(SymbolSequence::parse("alphabet=2\n0 1 2").is_err());
    }

    #[test]
    fn joint_encoding() {
        let p = PairedSequence::new(Alphabet::new(2).unwrap(), Alphabet::new(3).unwrap(), vec![(1, 2), (0, 1)])
            .unwrap();
        assert_eq!(p.joint().items(), &[5, 1]);
        assert_eq!(p.targets().items(), &[2, 1]);
    }

    #[test]
    fn log_grid_shape() {
        let g = log_grid(100_000, 100, 40);
        assert_eq!(g[0], 100);
        assert_eq!(*g.last().unwrap(), 100_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(log_grid(50, 100, 40), vec![50]);
    }
}
