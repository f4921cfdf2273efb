//! Binary sequences, feedback polynomials and the Fibonacci LFSR engine.
//!
//! Sequences are stored 0-based but every public contract that talks about a
//! *position* uses 1-based indices, so `s_1` is the first output bit.
//!
//! The recurrence convention is fixed: the register holds the first `L`
//! output bits, and for `n > L`
//!
//! ```text
//! s_n = XOR of s_{n-e} over every tap exponent e >= 1
//! ```
//!
//! so `1+x+x^7` means `s_n = s_{n-1} ^ s_{n-7}`.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported register length. Registers are packed into a `u64`
/// during state enumeration.
pub const MAX_DEGREE: usize = 64;

/// An ordered sequence of binary symbols.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(Vec<u8>);

impl Bits {
    pub fn new() -> Self {
        Bits(Vec::new())
    }

    /// Builds from 0/1 values; anything nonzero is taken as 1.
    pub fn from_slice(values: &[u8]) -> Self {
        Bits(values.iter().map(|&b| (b != 0) as u8).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Bits(vec![0; len])
    }

    pub fn ones(len: usize) -> Self {
        Bits(vec![1; len])
    }

    /// Packs `len` bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        Bits((0..len).map(|k| ((value >> (len - 1 - k)) & 1) as u8).collect())
    }

    /// Inverse of [`Bits::from_u64`]; panics past 64 bits.
    pub fn to_u64(&self) -> u64 {
        assert!(self.0.len() <= 64, "sequence longer than 64 bits");
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.0
    }

    pub fn push(&mut self, bit: u8) {
        self.0.push((bit != 0) as u8);
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    pub fn complement(&self) -> Bits {
        Bits(self.0.iter().map(|&b| b ^ 1).collect())
    }

    /// Bits `from..to` (0-based, half-open).
    pub fn slice(&self, from: usize, to: usize) -> Bits {
        Bits(self.0[from..to].to_vec())
    }

    pub fn concat(&self, other: &Bits) -> Bits {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Bits(v)
    }

    /// Length of the longest run of `value`.
    pub fn longest_run(&self, value: u8) -> usize {
        let mut best = 0;
        let mut run = 0;
        for &b in &self.0 {
            if b == value {
                run += 1;
                best = best.max(run);
            } else {
                run = 0;
            }
        }
        best
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().copied()
    }
}

impl Index<usize> for Bits {
    type Output = u8;
    fn index(&self, index: usize) -> &u8 {
        &self.0[index]
    }
}

impl From<Vec<u8>> for Bits {
    fn from(v: Vec<u8>) -> Self {
        Bits::from_slice(&v)
    }
}

impl FromIterator<u8> for Bits {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        Bits(iter.into_iter().map(|b| (b != 0) as u8).collect())
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::InvalidBits(format!("unexpected character {c:?}"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Bits)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses an ASCII bit string; shorthand for `s.parse::<Bits>()`.
pub fn bits(s: &str) -> Result<Bits> {
    s.parse()
}

/// Feedback polynomial given by its tap exponents. Always contains the
/// constant term and the leading term `x^L`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FeedbackPolynomial {
    taps: Vec<usize>,
}

impl FeedbackPolynomial {
    pub fn from_exponents(exponents: &[usize]) -> Result<Self> {
        let text = format!("{exponents:?}");
        let invalid = |reason: &str| Error::InvalidPolynomial {
            text: text.clone(),
            reason: reason.to_string(),
        };
        let mut set = BTreeSet::new();
        for &e in exponents {
            if !set.insert(e) {
                return Err(invalid(&format!("duplicate exponent {e}")));
            }
        }
        if !set.contains(&0) {
            return Err(invalid("missing constant term"));
        }
        let degree = *set.iter().next_back().unwrap();
        if degree == 0 {
            return Err(invalid("missing leading term"));
        }
        if degree > MAX_DEGREE {
            return Err(invalid(&format!("degree above {MAX_DEGREE}")));
        }
        Ok(FeedbackPolynomial {
            taps: set.into_iter().collect(),
        })
    }

    pub fn degree(&self) -> usize {
        *self.taps.last().unwrap()
    }

    /// All exponents, ascending, including 0 and the degree.
    pub fn exponents(&self) -> &[usize] {
        &self.taps
    }

    /// Exponents `e >= 1`: the lags used by the recurrence.
    pub fn lags(&self) -> impl Iterator<Item = usize> + '_ {
        self.taps.iter().copied().filter(|&e| e >= 1)
    }

    /// First `n` output bits from a register packed most-significant-first.
    pub fn sequence_from_u64(&self, register: u64, n: usize) -> Bits {
        let l = self.degree();
        let mut s = Vec::with_capacity(n.max(l));
        for k in 0..l {
            s.push(((register >> (l - 1 - k)) & 1) as u8);
        }
        self.extend(&mut s, n);
        s.truncate(n);
        Bits(s)
    }

    fn extend(&self, s: &mut Vec<u8>, n: usize) {
        while s.len() < n {
            let t = s.len();
            let bit = self.lags().fold(0u8, |acc, e| acc ^ s[t - e]);
            s.push(bit);
        }
    }

    /// True iff `segment` satisfies the recurrence at every position past the
    /// degree. Vacuous for segments no longer than the degree.
    pub fn is_consistent(&self, segment: &Bits) -> bool {
        let s = segment.as_slice();
        (self.degree()..s.len()).all(|t| self.lags().fold(0u8, |acc, e| acc ^ s[t - e]) == s[t])
    }
}

impl FromStr for FeedbackPolynomial {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidPolynomial {
            text: text.to_string(),
            reason,
        };
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let exponents = if let Some(inner) = t.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| invalid("unterminated exponent list".into()))?;
            inner
                .split(',')
                .map(|tok| {
                    tok.parse::<usize>()
                        .map_err(|_| invalid(format!("unparseable token {tok:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            t.split('+')
                .map(|tok| match tok {
                    "1" => Ok(0),
                    "x" => Ok(1),
                    _ => tok
                        .strip_prefix("x^")
                        .and_then(|e| e.parse::<usize>().ok())
                        .ok_or_else(|| invalid(format!("unparseable token {tok:?}"))),
                })
                .collect::<Result<Vec<_>>>()?
        };
        FeedbackPolynomial::from_exponents(&exponents).map_err(|e| match e {
            Error::InvalidPolynomial { reason, .. } => invalid(reason),
            other => other,
        })
    }
}

impl fmt::Display for FeedbackPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .taps
            .iter()
            .map(|&e| match e {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{e}"),
            })
            .collect();
        f.write_str(&terms.join("+"))
    }
}

impl fmt::Debug for FeedbackPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeedbackPolynomial({self})")
    }
}

impl Serialize for FeedbackPolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeedbackPolynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn parse_polynomial(text: &str) -> Result<FeedbackPolynomial> {
    text.parse()
}

/// A register loaded with `L` bits; the register is the first `L` outputs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LfsrState {
    polynomial: FeedbackPolynomial,
    register: Bits,
}

impl LfsrState {
    pub fn new(polynomial: FeedbackPolynomial, register: Bits) -> Result<Self> {
        if register.len() != polynomial.degree() {
            return Err(Error::RegisterLength {
                expected: polynomial.degree(),
                got: register.len(),
            });
        }
        Ok(LfsrState {
            polynomial,
            register,
        })
    }

    pub fn polynomial(&self) -> &FeedbackPolynomial {
        &self.polynomial
    }

    pub fn register(&self) -> &Bits {
        &self.register
    }

    pub fn generate(&self, n: usize) -> Bits {
        let mut s = self.register.0.clone();
        self.polynomial.extend(&mut s, n);
        s.truncate(n);
        Bits(s)
    }

    /// State `k` clocks later.
    pub fn step(&self, k: usize) -> LfsrState {
        let l = self.polynomial.degree();
        let s = self.generate(l + k);
        LfsrState {
            polynomial: self.polynomial.clone(),
            register: s.slice(k, k + l),
        }
    }

    /// State `k` clocks earlier. Relies on the constant term being present.
    pub fn reverse_step(&self, k: usize) -> LfsrState {
        let l = self.polynomial.degree();
        let mut reg: Vec<u8> = self.register.0.clone();
        for _ in 0..k {
            // s_L = s_0 ^ XOR_{1<=e<L} s_{L-e}, with reg[t] = s_{t+1}
            let mut prev = reg[l - 1];
            for e in self.polynomial.lags().filter(|&e| e < l) {
                prev ^= reg[l - 1 - e];
            }
            reg.pop();
            reg.insert(0, prev);
        }
        LfsrState {
            polynomial: self.polynomial.clone(),
            register: Bits(reg),
        }
    }

    /// The `k` output bits immediately preceding this state, in
    /// chronological order.
    pub fn preceding(&self, k: usize) -> Bits {
        self.reverse_step(k).generate(k)
    }
}

pub fn generate(state: &LfsrState, n: usize) -> Bits {
    state.generate(n)
}

pub fn is_consistent_segment(poly: &FeedbackPolynomial, segment: &Bits) -> bool {
    poly.is_consistent(segment)
}

pub fn reverse_step(state: &LfsrState, k: usize) -> LfsrState {
    state.reverse_step(k)
}

/// Affine space of registers over GF(2): `particular + span(basis)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSpace {
    polynomial: FeedbackPolynomial,
    particular: u64,
    basis: Vec<u64>,
}

impl StateSpace {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Number of registers in the space (saturating).
    pub fn len(&self) -> u128 {
        1u128 << self.basis.len().min(127)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn unique(&self) -> Option<LfsrState> {
        self.basis.is_empty().then(|| self.state(self.particular))
    }

    fn state(&self, packed: u64) -> LfsrState {
        LfsrState {
            polynomial: self.polynomial.clone(),
            register: Bits::from_u64(packed, self.polynomial.degree()),
        }
    }

    /// Every member, in ascending packed order. Only sensible for small
    /// dimensions.
    pub fn states(&self) -> Vec<LfsrState> {
        assert!(self.basis.len() <= 24, "state space too large to list");
        let mut packed: Vec<u64> = (0u64..1 << self.basis.len())
            .map(|combo| {
                self.basis
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| combo >> k & 1 == 1)
                    .fold(self.particular, |acc, (_, v)| acc ^ v)
            })
            .collect();
        packed.sort_unstable();
        packed.into_iter().map(|p| self.state(p)).collect()
    }
}

/// Every register whose output honors the `(position, bit)` constraints
/// (1-based positions). `Ok(None)` when the constraints are inconsistent.
pub fn solve_initial_state(
    poly: &FeedbackPolynomial,
    constraints: &[(usize, u8)],
) -> Result<Option<StateSpace>> {
    let l = poly.degree();
    let mut seen = BTreeSet::new();
    for &(p, _) in constraints {
        if p == 0 {
            return Err(Error::ZeroPosition);
        }
        if !seen.insert(p) {
            return Err(Error::DuplicateConstraint(p));
        }
    }
    let max_pos = seen.iter().next_back().copied().unwrap_or(0);

    // Linear form of s_p over the register bits; bit (l-1-k) stands for s_{k+1}.
    let mut forms: Vec<u64> = (0..l).map(|k| 1u64 << (l - 1 - k)).collect();
    while forms.len() < max_pos {
        let t = forms.len();
        let f = poly.lags().fold(0u64, |acc, e| acc ^ forms[t - e]);
        forms.push(f);
    }

    // Gaussian elimination, pivot on the highest set bit.
    let mut rows: Vec<(u64, u8)> = Vec::new();
    for &(p, bit) in constraints {
        let (mut form, mut rhs) = (forms[p - 1], bit & 1);
        for &(rf, rr) in &rows {
            let pivot = 63 - rf.leading_zeros();
            if form >> pivot & 1 == 1 {
                form ^= rf;
                rhs ^= rr;
            }
        }
        if form == 0 {
            if rhs == 1 {
                return Ok(None);
            }
            continue;
        }
        let pivot = 63 - form.leading_zeros();
        for row in rows.iter_mut() {
            if row.0 >> pivot & 1 == 1 {
                row.0 ^= form;
                row.1 ^= rhs;
            }
        }
        rows.push((form, rhs));
    }

    let pivots: u64 = rows
        .iter()
        .fold(0, |acc, (f, _)| acc | 1u64 << (63 - f.leading_zeros()));
    let mut particular = 0u64;
    for &(f, r) in &rows {
        if r == 1 {
            particular |= 1u64 << (63 - f.leading_zeros());
        }
    }
    let mut basis = Vec::new();
    for free in (0..l).filter(|&b| pivots >> b & 1 == 0) {
        let mut v = 1u64 << free;
        for &(f, _) in &rows {
            if f >> free & 1 == 1 {
                v |= 1u64 << (63 - f.leading_zeros());
            }
        }
        basis.push(v);
    }
    Ok(Some(StateSpace {
        polynomial: poly.clone(),
        particular,
        basis,
    }))
}
