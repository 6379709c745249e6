//! Shannon–Fano codes over the quantizer-cell alphabet.
//!
//! Codebooks are built per step from the cell probabilities conditioned on
//! the realized dither. The alphabet is countably infinite, so the support is
//! truncated at a small tail mass and everything outside it is sent as a
//! reserved escape codeword followed by Elias-gamma coded cell indices.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::validation::normal_interval;

/// Default truncation of the cell support.
pub const DEFAULT_TAIL_EPS: f64 = 1e-9;

/// Fixed-point precision for cumulative probabilities.
const FRAC_BITS: u32 = 96;

/// Smallest probability representable in the fixed-point accumulator with
/// room to spare; lighter cells are folded into the tail.
pub const MIN_CELL_PROB: f64 = 1.0 / (1u128 << 80) as f64;

/// Floor on the reported tail mass, so that an escape codeword always exists.
pub const MIN_TAIL_MASS: f64 = 1.0 / (1u64 << 60) as f64;

/// Cell probabilities sorted by nonincreasing probability.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPmf {
    support: Vec<(Vec<i64>, f64)>,
    tail_mass: f64,
}

impl CellPmf {
    /// Validates positivity and normalization and sorts the support.
    pub fn new(mut support: Vec<(Vec<i64>, f64)>, tail_mass: f64) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InsufficientSamples("empty pmf support".into()));
        }
        let dim = support[0].0.len();
        for (cell, p) in &support {
            if cell.len() != dim {
                return Err(Error::LengthMismatch {
                    expected: dim,
                    got: cell.len(),
                });
            }
            if !(*p > 0.0) || !p.is_finite() {
                return Err(Error::NonFinite(*p));
            }
        }
        if !(tail_mass >= 0.0) {
            return Err(Error::NonFinite(tail_mass));
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum::<f64>() + tail_mass;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InsufficientSamples(format!(
                "pmf mass {total} differs from one"
            )));
        }
        support.sort_by(|(ca, pa), (cb, pb)| pb.total_cmp(pa).then_with(|| ca.cmp(cb)));
        Ok(Self { support, tail_mass })
    }

    /// Scalar pmf over cells `0, 1, 2, …` with no tail; for hand-built tests.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        Self::new(
            probs
                .iter()
                .enumerate()
                .map(|(i, &p)| (vec![i as i64], p))
                .collect(),
            0.0,
        )
    }

    pub fn support(&self) -> &[(Vec<i64>, f64)] {
        &self.support
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn dim(&self) -> usize {
        self.support[0].0.len()
    }

    pub fn probability(&self, cell: &[i64]) -> Option<f64> {
        self.support
            .iter()
            .find(|(c, _)| c.as_slice() == cell)
            .map(|(_, p)| *p)
    }

    /// Entropy in bits, counting the tail as one symbol.
    pub fn entropy(&self) -> f64 {
        self.support
            .iter()
            .map(|(_, p)| *p)
            .chain((self.tail_mass > 0.0).then_some(self.tail_mass))
            .map(|p| -p * p.log2())
            .sum()
    }
}

/// Probability that `θ + ξ` falls in cell `k`, `θ ~ N(0, σ²)`.
pub fn cell_probability(k: i64, sigma: f64, delta: f64, xi: f64) -> f64 {
    let lo = k as f64 * delta - delta / 2.0 - xi;
    normal_interval(lo / sigma, (lo + delta) / sigma)
}

/// Scalar cell pmf: cells enumerated outward from the mode until the two
/// tails together weigh at most `eps`. Returns the unsorted support and the
/// tail mass.
pub fn marginal_cells(sigma: f64, xi: f64, delta: f64, eps: f64) -> (Vec<(i64, f64)>, f64) {
    let edge = |k: i64| (k as f64 * delta - delta / 2.0 - xi) / sigma;
    let mode = (xi / delta + 0.5).floor() as i64;
    let mut lo = mode;
    let mut hi = mode;
    let mut cells = vec![(mode, cell_probability(mode, sigma, delta, xi))];
    let left_tail = |lo: i64| crate::validation::normal_cdf(edge(lo));
    let right_tail = |hi: i64| crate::validation::normal_cdf(-edge(hi + 1));
    let mut left = left_tail(lo);
    let mut right = right_tail(hi);
    while left + right > eps {
        if left >= right {
            lo -= 1;
            cells.push((lo, cell_probability(lo, sigma, delta, xi)));
            left = left_tail(lo);
        } else {
            hi += 1;
            cells.push((hi, cell_probability(hi, sigma, delta, xi)));
            right = right_tail(hi);
        }
    }
    let mut tail = left + right;
    cells.retain(|&(_, p)| {
        if p < MIN_CELL_PROB {
            tail += p;
            false
        } else {
            true
        }
    });
    (cells, tail)
}

/// Cell pmf of `q̃ = Q_Δ(θ + ξ)` given `ξ` under the Gaussian model
/// `θ ~ N(0, theta_cov)`. Components are treated as independent with the
/// marginal variances on the diagonal of `theta_cov` (exact when it is
/// diagonal).
pub fn conditional_pmf(
    theta_cov: &SymMatrix,
    dither: &[f64],
    steps: &[f64],
    eps: f64,
) -> Result<CellPmf> {
    let r = theta_cov.dim();
    if dither.len() != r || steps.len() != r {
        return Err(Error::LengthMismatch {
            expected: r,
            got: dither.len().min(steps.len()),
        });
    }
    for i in 0..r {
        let v = theta_cov[(i, i)];
        if !(v > 0.0) {
            return Err(Error::DegenerateCovariance { index: i, value: v });
        }
    }
    let sigmas: Vec<f64> = (0..r).map(|i| theta_cov[(i, i)].sqrt()).collect();
    product_pmf(&sigmas, dither, steps, eps)
}

/// Product of scalar marginal pmfs with standard deviations `sigmas`.
pub fn product_pmf(sigmas: &[f64], dither: &[f64], steps: &[f64], eps: f64) -> Result<CellPmf> {
    let r = sigmas.len();
    let per = eps / r as f64;
    let mut support: Vec<(Vec<i64>, f64)> = vec![(Vec::with_capacity(r), 1.0)];
    let mut log_keep = 0.0;
    for i in 0..r {
        let (cells, tail) = marginal_cells(sigmas[i], dither[i], steps[i], per);
        log_keep += (-tail).ln_1p();
        let mut next = Vec::with_capacity(support.len() * cells.len());
        for (prefix, p) in &support {
            for &(k, q) in &cells {
                let mut c = prefix.clone();
                c.push(k);
                next.push((c, p * q));
            }
        }
        support = next;
    }
    let mut tail = -log_keep.exp_m1();
    support.retain(|(_, p)| {
        if *p < MIN_CELL_PROB {
            tail += *p;
            false
        } else {
            true
        }
    });
    CellPmf::new(support, tail.max(MIN_TAIL_MASS))
}

/// A binary codeword, most significant bit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Codeword {
    bits: Vec<bool>,
}

impl Codeword {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// The low `len` bits of `value`, most significant first.
    fn from_value(value: u128, len: u32) -> Self {
        Self {
            bits: (0..len).rev().map(|b| (value >> b) & 1 == 1).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_prefix_of(&self, other: &Codeword) -> bool {
        self.len() <= other.len() && other.bits[..self.len()] == self.bits[..]
    }

    fn extend(&mut self, other: &[bool]) {
        self.bits.extend_from_slice(other);
    }

    /// Hex rendering, zero-padded on the right to a multiple of four bits.
    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|c| {
                let v = c
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (3 - i)));
                char::from_digit(u32::from(v), 16).expect("nibble")
            })
            .collect()
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Codeword {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::DecodeFailure(format!("invalid bit {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Codeword::from_bits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Symbol {
    Cell(Vec<i64>),
    Escape,
}

#[derive(Debug, Clone)]
pub struct CodebookEntry {
    pub symbol: Symbol,
    pub probability: f64,
    pub codeword: Codeword,
}

/// Prefix-free code table plus a decoding trie.
#[derive(Debug, Clone)]
pub struct Codebook {
    dim: usize,
    entries: Vec<CodebookEntry>,
    lookup: HashMap<Vec<i64>, usize>,
    escape: Option<usize>,
    /// Child links per node; leaves carry the entry index.
    trie: Vec<TrieNode>,
}

#[derive(Debug, Clone, Copy, Default)]
struct TrieNode {
    child: [Option<u32>; 2],
    leaf: Option<u32>,
}

/// Shannon–Fano code: symbols in order of nonincreasing probability, symbol
/// `i` gets the first `⌈log₂ 1/pᵢ⌉` bits of the binary expansion of
/// `Fᵢ = Σ_{k<i} p_k`. A certain symbol gets the one-bit word `0`. When the
/// pmf has tail mass, an escape symbol with that probability joins the
/// alphabet.
pub fn build_shannon_fano(pmf: &CellPmf) -> Result<Codebook> {
    let mut symbols: Vec<(Symbol, f64)> = pmf
        .support()
        .iter()
        .map(|(c, p)| (Symbol::Cell(c.clone()), *p))
        .collect();
    if pmf.tail_mass() > 0.0 {
        let pos = symbols.partition_point(|(_, p)| *p >= pmf.tail_mass());
        symbols.insert(pos, (Symbol::Escape, pmf.tail_mass()));
    }
    let fixed = fixed_point_masses(&symbols.iter().map(|(_, p)| *p).collect::<Vec<_>>())?;

    let mut entries = Vec::with_capacity(symbols.len());
    let mut cumulative: u128 = 0;
    for ((symbol, _), &pf) in symbols.into_iter().zip(&fixed) {
        let floor_log2 = 127 - pf.leading_zeros();
        let len = (FRAC_BITS - floor_log2.min(FRAC_BITS)).max(1);
        let codeword = Codeword::from_value(cumulative >> (FRAC_BITS - len), len);
        entries.push(CodebookEntry {
            symbol,
            probability: pf as f64 / (1u128 << FRAC_BITS) as f64,
            codeword,
        });
        cumulative += pf;
    }
    Codebook::from_entries(pmf.dim(), entries)
}

/// Probabilities in units of `2⁻⁹⁶`, summing to at most one and still
/// nonincreasing. Any excess over one from rounding is removed from each
/// mass in proportion to its size.
fn fixed_point_masses(probs: &[f64]) -> Result<Vec<u128>> {
    let one = 1u128 << FRAC_BITS;
    let mut fixed: Vec<u128> = probs
        .iter()
        .map(|p| (p * one as f64).round() as u128)
        .collect();
    let total: u128 = fixed.iter().sum();
    if total > one {
        let ratio = (total - one) as f64 / total as f64 * (1.0 + 1e-12);
        for m in &mut fixed {
            let cut = ((*m as f64) * ratio).ceil() as u128;
            *m = m.saturating_sub(cut);
        }
    }
    if fixed.contains(&0) {
        return Err(Error::NonFinite(0.0));
    }
    Ok(fixed)
}

impl Codebook {
    fn from_entries(dim: usize, entries: Vec<CodebookEntry>) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(entries.len());
        let mut escape = None;
        let mut trie = vec![TrieNode::default()];
        for (i, e) in entries.iter().enumerate() {
            match &e.symbol {
                Symbol::Cell(c) => {
                    lookup.insert(c.clone(), i);
                }
                Symbol::Escape => escape = Some(i),
            }
            let mut node = 0usize;
            for &b in e.codeword.bits() {
                if trie[node].leaf.is_some() {
                    return Err(Error::DecodeFailure("codebook is not prefix-free".into()));
                }
                let slot = usize::from(b);
                node = match trie[node].child[slot] {
                    Some(next) => next as usize,
                    None => {
                        trie.push(TrieNode::default());
                        let next = trie.len() - 1;
                        trie[node].child[slot] = Some(next as u32);
                        next
                    }
                };
            }
            if trie[node].leaf.is_some() || trie[node].child.iter().any(Option::is_some) {
                return Err(Error::DecodeFailure("codebook is not prefix-free".into()));
            }
            trie[node].leaf = Some(i as u32);
        }
        Ok(Self {
            dim,
            entries,
            lookup,
            escape,
            trie,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[CodebookEntry] {
        &self.entries
    }

    pub fn has_escape(&self) -> bool {
        self.escape.is_some()
    }

    pub fn codeword(&self, cell: &[i64]) -> Option<&Codeword> {
        self.lookup.get(cell).map(|&i| &self.entries[i].codeword)
    }

    /// Coding probability of `cell`, or of the escape symbol when `cell` is
    /// outside the support.
    pub fn probability(&self, cell: &[i64]) -> f64 {
        self.lookup
            .get(cell)
            .or(self.escape.as_ref())
            .map_or(0.0, |&i| self.entries[i].probability)
    }

    pub fn escape_codeword(&self) -> Option<&Codeword> {
        self.escape.map(|i| &self.entries[i].codeword)
    }

    pub fn kraft_sum(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| (-(e.codeword.len() as f64)).exp2())
            .sum()
    }

    pub fn expected_length(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.probability * e.codeword.len() as f64)
            .sum()
    }

    /// Entropy (bits) of the coded alphabet.
    pub fn entropy(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| -e.probability * e.probability.log2())
            .sum()
    }

    /// Pairwise check that no codeword is a prefix of another.
    pub fn is_prefix_free(&self) -> bool {
        let words: Vec<&Codeword> = self.entries.iter().map(|e| &e.codeword).collect();
        for (i, a) in words.iter().enumerate() {
            for (j, b) in words.iter().enumerate() {
                if i != j && a.is_prefix_of(b) {
                    return false;
                }
            }
        }
        true
    }

    pub fn encode(&self, cell: &[i64]) -> Result<Codeword> {
        if cell.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: cell.len(),
            });
        }
        if let Some(w) = self.codeword(cell) {
            return Ok(w.clone());
        }
        let mut word = self
            .escape_codeword()
            .ok_or_else(|| Error::OutOfSupport(cell.to_vec()))?
            .clone();
        for &k in cell {
            word.extend(&elias_gamma(zigzag(k) + 1));
        }
        Ok(word)
    }

    /// Decodes one symbol from the front of `bits`; returns the cell and the
    /// number of bits consumed.
    pub fn decode(&self, bits: &[bool]) -> Result<(Vec<i64>, usize)> {
        let mut node = 0usize;
        let mut pos = 0usize;
        loop {
            if let Some(leaf) = self.trie[node].leaf {
                let entry = &self.entries[leaf as usize];
                return match &entry.symbol {
                    Symbol::Cell(c) => Ok((c.clone(), pos)),
                    Symbol::Escape => {
                        let mut cell = Vec::with_capacity(self.dim);
                        for _ in 0..self.dim {
                            let (v, used) = read_elias_gamma(&bits[pos..])?;
                            pos += used;
                            cell.push(unzigzag(v - 1));
                        }
                        Ok((cell, pos))
                    }
                };
            }
            let Some(&b) = bits.get(pos) else {
                return Err(Error::DecodeFailure(format!(
                    "bit stream ended after {pos} bits inside a codeword"
                )));
            };
            node = match self.trie[node].child[usize::from(b)] {
                Some(next) => next as usize,
                None => {
                    return Err(Error::DecodeFailure(format!(
                        "no codeword matches the first {} bits",
                        pos + 1
                    )))
                }
            };
            pos += 1;
        }
    }
}

pub fn encode(cell: &[i64], book: &Codebook) -> Result<Codeword> {
    book.encode(cell)
}

pub fn decode(bits: &[bool], book: &Codebook) -> Result<(Vec<i64>, usize)> {
    book.decode(bits)
}

fn zigzag(k: i64) -> u64 {
    ((k << 1) ^ (k >> 63)) as u64
}

fn unzigzag(z: u64) -> i64 {
    ((z >> 1) as i64) ^ -((z & 1) as i64)
}

/// Elias-gamma code of `v ≥ 1`.
fn elias_gamma(v: u64) -> Vec<bool> {
    debug_assert!(v >= 1);
    let nbits = 64 - v.leading_zeros();
    let mut out = vec![false; (nbits - 1) as usize];
    out.extend((0..nbits).rev().map(|b| (v >> b) & 1 == 1));
    out
}

fn read_elias_gamma(bits: &[bool]) -> Result<(u64, usize)> {
    let zeros = bits.iter().take_while(|&&b| !b).count();
    if zeros >= 64 || bits.len() < 2 * zeros + 1 {
        return Err(Error::DecodeFailure("truncated Elias-gamma integer".into()));
    }
    let v = bits[zeros..=2 * zeros]
        .iter()
        .fold(0u64, |acc, &b| (acc << 1) | u64::from(b));
    Ok((v, 2 * zeros + 1))
}

/// Dither grid resolution in units of the step size.
pub const DITHER_GRID: f64 = 1.0 / (1u64 << 20) as f64;

/// Memoized per-dither codebooks for one scalar component. The dither is
/// snapped to a grid of `Δ·2⁻²⁰` and the book for a grid point is built from
/// that grid value, so encoder and decoder always agree.
#[derive(Debug, Clone)]
pub struct CodebookCache {
    sigma: f64,
    step: f64,
    eps: f64,
    capacity: usize,
    books: HashMap<i64, Arc<Codebook>>,
}

impl CodebookCache {
    pub fn new(variance: f64, step: f64, eps: f64, capacity: usize) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::DegenerateCovariance {
                index: 0,
                value: variance,
            });
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::NonFinite(step));
        }
        Ok(Self {
            sigma: variance.sqrt(),
            step,
            eps,
            capacity: capacity.max(1),
            books: HashMap::new(),
        })
    }

    pub fn get(&mut self, xi: f64) -> Result<Arc<Codebook>> {
        let key = (xi / (self.step * DITHER_GRID)).round() as i64;
        if let Some(book) = self.books.get(&key) {
            return Ok(Arc::clone(book));
        }
        let snapped = key as f64 * self.step * DITHER_GRID;
        let pmf = product_pmf(&[self.sigma], &[snapped], &[self.step], self.eps)?;
        let book = Arc::new(build_shannon_fano(&pmf)?);
        if self.books.len() >= self.capacity {
            self.books.clear();
        }
        self.books.insert(key, Arc::clone(&book));
        Ok(book)
    }

    pub fn len(&self) -> usize {
        self.books.len()
    }

    pub fn is_empty(&self) -> bool {
        self.books.is_empty()
    }
}

/// Codes an `r`-component cell vector as `r` concatenated scalar codewords,
/// component `i` with the book for `N(0, Σᵢᵢ)` given `ξᵢ`.
#[derive(Debug, Clone)]
pub struct ComponentCoder {
    caches: Vec<CodebookCache>,
}

pub const DEFAULT_CACHE_CAPACITY: usize = 1 << 16;

impl ComponentCoder {
    pub fn new(theta_cov: &SymMatrix, steps: &[f64], eps: f64) -> Result<Self> {
        let r = theta_cov.dim();
        if steps.len() != r {
            return Err(Error::LengthMismatch {
                expected: r,
                got: steps.len(),
            });
        }
        let caches = (0..r)
            .map(|i| {
                CodebookCache::new(theta_cov[(i, i)], steps[i], eps, DEFAULT_CACHE_CAPACITY)
                    .map_err(|e| match e {
                        Error::DegenerateCovariance { value, .. } => {
                            Error::DegenerateCovariance { index: i, value }
                        }
                        other => other,
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { caches })
    }

    pub fn dim(&self) -> usize {
        self.caches.len()
    }

    pub fn encode(&mut self, cells: &[i64], dither: &[f64]) -> Result<Codeword> {
        self.encode_measured(cells, dither).map(|(w, _)| w)
    }

    /// Encodes and also returns the self-information `−log₂ P(q̃ | ξ)` of the
    /// cell vector under the coding model; escaped components count the
    /// escape probability.
    pub fn encode_measured(&mut self, cells: &[i64], dither: &[f64]) -> Result<(Codeword, f64)> {
        if cells.len() != self.dim() || dither.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                got: cells.len().min(dither.len()),
            });
        }
        let mut out = Codeword::default();
        let mut info = 0.0;
        for ((cache, &k), &xi) in self.caches.iter_mut().zip(cells).zip(dither) {
            let book = cache.get(xi)?;
            out.extend(book.encode(&[k])?.bits());
            info -= book.probability(&[k]).log2();
        }
        Ok((out, info))
    }

    /// Decodes one cell vector from the front of `bits`; returns it with the
    /// number of bits consumed.
    pub fn decode(&mut self, bits: &[bool], dither: &[f64]) -> Result<(Vec<i64>, usize)> {
        if dither.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                got: dither.len(),
            });
        }
        let mut pos = 0;
        let mut cells = Vec::with_capacity(self.dim());
        for (cache, &xi) in self.caches.iter_mut().zip(dither) {
            let (cell, used) = cache.get(xi)?.decode(&bits[pos..])?;
            cells.push(cell[0]);
            pos += used;
        }
        Ok((cells, pos))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_hand_case() {
        let pmf = CellPmf::from_probabilities(&[0.5, 0.25, 0.125, 0.125]).unwrap();
        let book = build_shannon_fano(&pmf).unwrap();
        let words: Vec<String> = book.entries().iter().map(|e| e.codeword.to_string()).collect();
        assert_eq!(words, ["0", "10", "110", "111"]);
        assert_eq!(book.kraft_sum(), 1.0);
        assert!(!book.has_escape());
        assert!(book.is_prefix_free());
        assert_eq!(book.expected_length(), 1.75);
        assert_eq!(book.entropy(), 1.75);
    }

    #[test]
    fn rounding_excess_keeps_code_prefix_free() {
        // The two halves and the tail sum to one in floating point only.
        let pmf = CellPmf::new(vec![(vec![-1], 0.5), (vec![0], 0.5)], MIN_TAIL_MASS).unwrap();
        let book = build_shannon_fano(&pmf).unwrap();
        assert!(book.is_prefix_free());
        assert!(book.kraft_sum() <= 1.0);
        let lens: Vec<usize> = book.entries().iter().map(|e| e.codeword.len()).collect();
        assert_eq!(lens, [2, 2, 61]);
    }

    #[test]
    fn single_symbol_gets_one_bit() {
        let pmf = CellPmf::from_probabilities(&[1.0]).unwrap();
        let book = build_shannon_fano(&pmf).unwrap();
        assert_eq!(book.entries()[0].codeword.to_string(), "0");
        assert_eq!(book.expected_length(), 1.0);
    }

    #[test]
    fn round_trip_and_escape() {
        let pmf = CellPmf::new(
            vec![(vec![0], 0.6), (vec![1], 0.25), (vec![-1], 0.15 - 1e-6)],
            1e-6,
        )
        .unwrap();
        let book = build_shannon_fano(&pmf).unwrap();
        for cell in [[0], [1], [-1], [7], [-300]] {
            let w = book.encode(&cell).unwrap();
            let (back, used) = book.decode(w.bits()).unwrap();
            assert_eq!(back, cell.to_vec());
            assert_eq!(used, w.len());
        }
        let esc = book.escape_codeword().unwrap();
        assert!(book.encode(&[7]).unwrap().bits().starts_with(esc.bits()));
    }

    #[test]
    fn out_of_support_without_escape() {
        let pmf = CellPmf::from_probabilities(&[0.5, 0.5]).unwrap();
        let book = build_shannon_fano(&pmf).unwrap();
        assert!(matches!(book.encode(&[5]), Err(Error::OutOfSupport(_))));
    }

    #[test]
    fn decode_failures() {
        let pmf = CellPmf::from_probabilities(&[0.5, 0.25, 0.125, 0.125]).unwrap();
        let book = build_shannon_fano(&pmf).unwrap();
        assert!(matches!(book.decode(&[]), Err(Error::DecodeFailure(_))));
        assert!(matches!(book.decode(&[true, true]), Err(Error::DecodeFailure(_))));
    }

    #[test]
    fn gaussian_pmf_examples() {
        let delta = 12f64.sqrt();
        let pmf = conditional_pmf(&SymMatrix::identity(1), &[0.0], &[delta], 1e-9).unwrap();
        let p0 = pmf.probability(&[0]).unwrap();
        let expect = 0.916_735_483_336_9; // Φ(√3) − Φ(−√3)
        assert!((p0 - expect).abs() < 1e-12, "{p0}");
        for k in 1..3 {
            let a = pmf.probability(&[k]).unwrap();
            let b = pmf.probability(&[-k]).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(pmf.tail_mass() <= 1e-9);

        let tiny = conditional_pmf(&SymMatrix::from_diagonal(&[1e-20]), &[0.0], &[1.0], 1e-9)
            .unwrap();
        assert!((tiny.probability(&[0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_covariance_rejected() {
        let err = conditional_pmf(&SymMatrix::zeros(1), &[0.0], &[1.0], 1e-9).unwrap_err();
        assert!(matches!(err, Error::DegenerateCovariance { index: 0, .. }));
    }

    #[test]
    fn elias_gamma_round_trip() {
        for v in [1u64, 2, 3, 4, 17, 1 << 40] {
            let bits = elias_gamma(v);
            assert_eq!(read_elias_gamma(&bits).unwrap(), (v, bits.len()));
        }
        for k in [-3i64, -1, 0, 1, 5, i64::MAX / 4] {
            assert_eq!(unzigzag(zigzag(k)), k);
        }
    }

    #[test]
    fn hex_rendering() {
        let w: Codeword = "10110".parse().unwrap();
        assert_eq!(w.to_hex(), "b0");
    }

    #[test]
    fn cache_reuses_books() {
        let mut cache = CodebookCache::new(1.0, 2.0, 1e-9, 16).unwrap();
        let a = cache.get(0.25).unwrap();
        let b = cache.get(0.25 + 1e-9).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn component_coder_round_trip() {
        let cov = SymMatrix::from_row_slice(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let steps = [1.0, 3.0];
        let mut enc = ComponentCoder::new(&cov, &steps, 1e-9).unwrap();
        let mut dec = enc.clone();
        let mut stream = Vec::new();
        let cases = [(vec![0, 0], [0.1, -0.4]), (vec![3, -1], [-0.2, 1.0]), (vec![-40, 9], [0.0, 0.0])];
        for (cells, xi) in &cases {
            stream.extend_from_slice(enc.encode(cells, xi).unwrap().bits());
        }
        let mut pos = 0;
        for (cells, xi) in &cases {
            let (back, used) = dec.decode(&stream[pos..], xi).unwrap();
            assert_eq!(&back, cells);
            pos += used;
        }
        assert_eq!(pos, stream.len());
    }
}
