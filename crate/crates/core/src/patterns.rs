//! Run hypotheses on the intercepted sequence, H-trimming, IS-patterns and
//! IS-anti-patterns over the target register, and candidate enumeration.
//!
//! A hypothesis says: if a run of the intercepted sequence is constant, then
//! a block of the candidate sequence is constant with the same value, since
//! otherwise every path through the corresponding cut set picks up a
//! substitution. In the decimation model the intercepted sequence is `Y`
//! (short, `M` bits) and the candidate `X` (long, `N`); in the insertion
//! model the roles swap. Indices are 1-based throughout.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corebits::Bits;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Target output `X` is decimated (and possibly noisy) into `Y`.
    Decimation,
    /// Target output `Y` is widened by inserted bits into `X`.
    Insertion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Generic,
    Sg,
    Asg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HypothesisParams {
    pub model: ModelKind,
    pub generator: GeneratorKind,
    /// Selector length `L_S`; sets the block width for SG/ASG rules.
    pub selector_len: usize,
    /// Length of the non-intercepted side used while counting: `N` for
    /// decimation, `M` for insertion. Defaults to `ceil(3M/2)` and
    /// `floor(2N/3)` respectively.
    pub counting_len: Option<usize>,
}

impl HypothesisParams {
    pub fn new(model: ModelKind, generator: GeneratorKind, selector_len: usize) -> Self {
        HypothesisParams {
            model,
            generator,
            selector_len,
            counting_len: None,
        }
    }

    fn counting_dims(&self, intercepted_len: usize) -> (usize, usize) {
        match self.model {
            ModelKind::Decimation => {
                let m = intercepted_len;
                (self.counting_len.unwrap_or((3 * m).div_ceil(2)), m)
            }
            ModelKind::Insertion => {
                let n = intercepted_len;
                (n, self.counting_len.unwrap_or(2 * n / 3))
            }
        }
    }

    fn blocked(&self) -> bool {
        self.generator != GeneratorKind::Generic
    }
}

/// One run hypothesis: if `premise` (on the intercepted sequence) is
/// constant, then `consequence` (on the candidate) equals the intercepted
/// bit at `value_at`. Ranges are inclusive and 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub block: u8,
    pub j: usize,
    pub premise: (usize, usize),
    pub consequence: (usize, usize),
    pub value_at: usize,
}

/// All hypotheses of the three blocks for dimensions `n` (long side) and
/// `m` (short side).
pub fn hypotheses(n: usize, m: usize, params: &HypothesisParams) -> Vec<Hypothesis> {
    let mut out = Vec::new();
    if m == 0 || n < m {
        return out;
    }
    let gap = n - m;
    let s = params.selector_len.max(1);
    let blocked = params.blocked();
    let dec = params.model == ModelKind::Decimation;
    let mut push = |block, j, premise, consequence, value_at| {
        out.push(Hypothesis {
            block,
            j,
            premise,
            consequence,
            value_at,
        })
    };

    for j in 2..=(gap + 1).min(m) {
        let b = s * (j / s);
        match (dec, blocked) {
            (true, false) => push(1, j, (1, j), (1, j + gap), j),
            (true, true) => push(1, j, (1 + j / s, j), (b + 1, (b + s).min(n)), j),
            (false, false) => push(1, j, (1, j + gap), (1, j), 1),
            (false, true) => push(1, j, (b + 1, (b + s).min(n)), (1 + j / s, j), b + 1),
        }
    }
    for j in gap + 2..=m {
        let tail = if blocked { (j + s - 1).min(n) } else { j + gap };
        if dec {
            push(2, j, (j - gap, j), (j, tail), j);
        } else {
            push(2, j, (j, tail), (j - gap, j), j);
        }
    }
    for j in m + 1..n {
        let lo = (j + m).saturating_sub(n).max(1);
        let hi = if blocked { m - (n - j) / s } else { m };
        let tail = if blocked { (j + s - 1).min(n) } else { n };
        if dec {
            push(3, j, (lo, hi), (j, tail), m);
        } else {
            push(3, j, (j, tail), (lo, hi), j);
        }
    }
    out
}

/// Whether the premise holds on `seq`; an empty or out-of-range premise
/// never holds.
pub fn premise_holds(h: &Hypothesis, seq: &Bits) -> bool {
    let (lo, hi) = h.premise;
    if lo < 1 || lo > hi || hi > seq.len() {
        return false;
    }
    let first = seq[lo - 1];
    (lo..=hi).all(|p| seq[p - 1] == first)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// First-block hypotheses by `j`.
    pub per_j: BTreeMap<usize, bool>,
    pub fulfilled_count: usize,
    pub model: ModelKind,
    pub generator: GeneratorKind,
    /// Blocks two and three, for inspection only.
    pub later_blocks: Vec<(Hypothesis, bool)>,
}

pub fn count_hypotheses(intercepted: &Bits, params: &HypothesisParams) -> HypothesisReport {
    let (n, m) = params.counting_dims(intercepted.len());
    let mut per_j = BTreeMap::new();
    let mut later_blocks = Vec::new();
    for h in hypotheses(n, m, params) {
        let ok = premise_holds(&h, intercepted);
        if h.block == 1 {
            per_j.insert(h.j, ok);
        } else {
            later_blocks.push((h, ok));
        }
    }
    HypothesisReport {
        fulfilled_count: per_j.values().filter(|&&v| v).count(),
        per_j,
        model: params.model,
        generator: params.generator,
        later_blocks,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trim {
    pub trimmed: Bits,
    pub discarded: Bits,
    /// Fulfilled count at every length tried, longest first.
    pub counts: Vec<usize>,
}

/// Drops leading bits until at least `h` first-block hypotheses hold.
pub fn trim_for_h(intercepted: &Bits, h: usize, l: usize, params: &HypothesisParams) -> Result<Trim> {
    if h > l {
        return Err(Error::HOutOfRange { h, l });
    }
    let mut counts = Vec::new();
    for cut in 0..intercepted.len() {
        let rest = intercepted.slice(cut, intercepted.len());
        let c = count_hypotheses(&rest, params).fulfilled_count;
        counts.push(c);
        if c >= h {
            return Ok(Trim {
                trimmed: rest,
                discarded: intercepted.slice(0, cut),
                counts,
            });
        }
    }
    Err(Error::TrimExhausted {
        h,
        discarded: intercepted.len(),
    })
}

/// Partial assignment of a length-`L` register; position 1 is the first
/// output bit.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitPattern(Vec<Option<u8>>);

impl BitPattern {
    pub fn free(len: usize) -> Self {
        BitPattern(vec![None; len])
    }

    /// Fixes the first `prefix.len()` positions.
    pub fn prefix(prefix: &Bits, len: usize) -> Self {
        let mut p = BitPattern::free(len);
        for (k, b) in prefix.iter().take(len).enumerate() {
            p.0[k] = Some(b);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, pos: usize) -> Option<u8> {
        self.0[pos - 1]
    }

    pub fn set(&mut self, pos: usize, bit: u8) {
        self.0[pos - 1] = Some(bit);
    }

    pub fn entries(&self) -> &[Option<u8>] {
        &self.0
    }

    pub fn fixed_positions(&self) -> Vec<usize> {
        (1..=self.len()).filter(|&p| self.0[p - 1].is_some()).collect()
    }

    pub fn free_count(&self) -> usize {
        self.0.iter().filter(|e| e.is_none()).count()
    }

    pub fn is_all_free(&self) -> bool {
        self.0.iter().all(Option::is_none)
    }

    /// Copy with fixed position `pos` complemented.
    pub fn complemented_at(&self, pos: usize) -> BitPattern {
        let mut p = self.clone();
        if let Some(b) = p.0[pos - 1] {
            p.0[pos - 1] = Some(b ^ 1);
        }
        p
    }

    /// `(mask, value)` over a register packed MSB-first.
    pub fn mask_value(&self) -> (u64, u64) {
        let l = self.len();
        let (mut mask, mut value) = (0u64, 0u64);
        for (k, e) in self.0.iter().enumerate() {
            if let Some(b) = e {
                let bit = 1u64 << (l - 1 - k);
                mask |= bit;
                if *b == 1 {
                    value |= bit;
                }
            }
        }
        (mask, value)
    }

    pub fn matches(&self, register: u64) -> bool {
        let (mask, value) = self.mask_value();
        register & mask == value
    }

    /// Nonzero registers matching the pattern.
    pub fn count_matching(&self) -> u128 {
        let total = 1u128 << self.free_count();
        if self.0.iter().all(|e| *e != Some(1)) {
            total - 1
        } else {
            total
        }
    }

    /// Matching nonzero registers, free bits counted up from zero with the
    /// leftmost free bit most significant.
    pub fn states(&self) -> impl Iterator<Item = u64> + '_ {
        let l = self.len();
        let (_, value) = self.mask_value();
        let free: Vec<u64> = (0..l)
            .filter(|&k| self.0[k].is_none())
            .map(|k| 1u64 << (l - 1 - k))
            .collect();
        let count = 1u128 << free.len();
        (0..count).filter_map(move |c| {
            let mut reg = value;
            for (idx, bit) in free.iter().rev().enumerate() {
                if (c >> idx) & 1 == 1 {
                    reg |= bit;
                }
            }
            (reg != 0).then_some(reg)
        })
    }
}

impl fmt::Display for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.0 {
            let c = match e {
                Some(0) => '0',
                Some(_) => '1',
                None => 'x',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitPattern({self})")
    }
}

impl FromStr for BitPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(Some(0)),
                '1' => Ok(Some(1)),
                'x' | 'X' | '*' => Ok(None),
                _ => Err(Error::InvalidPattern(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitPattern)
    }
}

impl Serialize for BitPattern {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitPattern {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// IS-pattern from the first-block hypotheses that hold on the (trimmed)
/// intercepted sequence. `other_len` is the candidate length (`N` for
/// decimation, `M` for insertion). Conflicting assignments give the
/// all-free pattern.
pub fn build_is_pattern(intercepted: &Bits, l: usize, other_len: usize, params: &HypothesisParams) -> BitPattern {
    let (n, m) = match params.model {
        ModelKind::Decimation => (other_len, intercepted.len()),
        ModelKind::Insertion => (intercepted.len(), other_len),
    };
    let mut pattern = BitPattern::free(l);
    for h in hypotheses(n, m, params).iter().filter(|h| h.block == 1) {
        if !premise_holds(h, intercepted) {
            continue;
        }
        let value = intercepted[h.value_at - 1];
        let (lo, hi) = h.consequence;
        for p in lo.max(1)..=hi.min(l) {
            match pattern.get(p) {
                Some(v) if v != value => return BitPattern::free(l),
                _ => pattern.set(p, value),
            }
        }
    }
    pattern
}

/// Registers matching `pattern` and none of `anti`, in enumeration order.
pub fn enumerate_states(pattern: &BitPattern, anti: &[BitPattern]) -> Vec<u64> {
    pattern
        .states()
        .filter(|&r| !anti.iter().any(|a| a.matches(r)))
        .collect()
}

/// Anti-pattern fixing `x_1..x_{j0+N-M}` when that prefix lies inside the
/// register. Decimation model.
pub fn derive_anti_pattern(x: &Bits, stop_column: usize, n: usize, m: usize, l: usize) -> Option<BitPattern> {
    let len = stop_column + n - m;
    (len <= l && len <= x.len()).then(|| BitPattern::prefix(&x.slice(0, len), l))
}

/// Model-aware variant: in the insertion model column `j0` depends on the
/// candidate prefix `y_1..y_{j0}` only.
pub fn anti_pattern_for(
    model: ModelKind,
    candidate: &Bits,
    stop_column: usize,
    n: usize,
    m: usize,
    l: usize,
) -> Option<BitPattern> {
    match model {
        ModelKind::Decimation => derive_anti_pattern(candidate, stop_column, n, m, l),
        ModelKind::Insertion => {
            (stop_column <= l).then(|| BitPattern::prefix(&candidate.slice(0, stop_column), l))
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxationOrder {
    /// Complement the rightmost fixed bit first.
    #[default]
    LastFixedFirst,
    FirstFixedFirst,
}

/// Single-bit complements of `original`, in trial order.
pub fn relaxations(original: &BitPattern, order: RelaxationOrder) -> Vec<BitPattern> {
    let mut fixed = original.fixed_positions();
    if order == RelaxationOrder::LastFixedFirst {
        fixed.reverse();
    }
    fixed.into_iter().map(|p| original.complemented_at(p)).collect()
}

/// Next untried single-bit complement of the original pattern.
pub fn relax_pattern(
    original: &BitPattern,
    tried: &BTreeSet<BitPattern>,
    order: RelaxationOrder,
) -> Option<BitPattern> {
    relaxations(original, order).into_iter().find(|p| !tried.contains(p))
}

/// Grow-only set of anti-patterns with the threshold in force when each was
/// derived.
#[derive(Clone, Debug, Default)]
pub struct AntiPatternSet {
    by_mask: BTreeMap<u64, HashMap<u64, u32>>,
    patterns: Vec<(BitPattern, u32)>,
}

impl AntiPatternSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `pattern`; returns false if it was already present.
    pub fn insert(&mut self, pattern: BitPattern, threshold: u32) -> bool {
        let (mask, value) = pattern.mask_value();
        let slot = self.by_mask.entry(mask).or_default();
        if slot.contains_key(&value) {
            return false;
        }
        slot.insert(value, threshold);
        self.patterns.push((pattern, threshold));
        true
    }

    /// Threshold of an anti-pattern matching `register`, if any. When several
    /// match, the one with the shortest fixed prefix wins.
    pub fn excludes(&self, register: u64) -> Option<u32> {
        self.by_mask
            .iter()
            .find_map(|(mask, values)| values.get(&(register & mask)).copied())
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[(BitPattern, u32)] {
        &self.patterns
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corebits::bits;

    fn sg() -> HypothesisParams {
        HypothesisParams::new(ModelKind::Decimation, GeneratorKind::Sg, 3)
    }

    fn pat(s: &str) -> BitPattern {
        s.parse().unwrap()
    }

    #[test]
    fn worked_trim_counts() {
        for (y, c) in [("1011110", 0), ("011110", 2), ("11110", 3)] {
            assert_eq!(count_hypotheses(&bits(y).unwrap(), &sg()).fulfilled_count, c, "{y}");
        }
        let t = trim_for_h(&bits("1011110").unwrap(), 3, 7, &sg()).unwrap();
        assert_eq!(t.trimmed.to_string(), "11110");
        assert_eq!(t.discarded.to_string(), "10");
        assert_eq!(t.counts, [0, 2, 3]);
    }

    #[test]
    fn trim_edges() {
        let y = bits("1011110").unwrap();
        let t = trim_for_h(&y, 0, 7, &sg()).unwrap();
        assert_eq!(t.trimmed, y);
        assert!(t.discarded.is_empty());

        let t = trim_for_h(&Bits::ones(9), 1, 7, &sg()).unwrap();
        assert!(t.discarded.is_empty());

        assert_eq!(trim_for_h(&y, 8, 7, &sg()), Err(Error::HOutOfRange { h: 8, l: 7 }));
        assert!(matches!(
            trim_for_h(&bits("0101").unwrap(), 3, 7, &sg()),
            Err(Error::TrimExhausted { .. })
        ));
    }

    #[test]
    fn worked_is_pattern() {
        let p = build_is_pattern(&bits("11110").unwrap(), 7, 10, &sg());
        assert_eq!(p.to_string(), "111111x");
        let p = build_is_pattern(&bits("00001").unwrap(), 7, 10, &sg());
        assert_eq!(p.to_string(), "000000x");
        let p = build_is_pattern(&bits("01010").unwrap(), 7, 10, &sg());
        assert!(p.is_all_free());
    }

    #[test]
    fn generic_rules() {
        let dec = HypothesisParams::new(ModelKind::Decimation, GeneratorKind::Generic, 0);
        let hs = hypotheses(10, 7, &dec);
        assert_eq!(hs[0], Hypothesis { block: 1, j: 2, premise: (1, 2), consequence: (1, 5), value_at: 2 });
        assert!(hs.iter().any(|h| h.block == 2 && h.j == 5 && h.premise == (2, 5) && h.consequence == (5, 8)));
        assert!(hs.iter().any(|h| h.block == 3 && h.j == 9 && h.premise == (6, 7) && h.consequence == (9, 10)));

        let p = build_is_pattern(&bits("1110110").unwrap(), 6, 10, &dec);
        assert_eq!(p.to_string(), "111111");

        let ins = HypothesisParams::new(ModelKind::Insertion, GeneratorKind::Generic, 0);
        let hs = hypotheses(10, 7, &ins);
        assert_eq!(hs[0].premise, (1, 5));
        assert_eq!(hs[0].consequence, (1, 2));
        let p = build_is_pattern(&bits("0000011011").unwrap(), 5, 7, &ins);
        assert_eq!(p.to_string(), "00xxx");
    }

    #[test]
    fn blocked_insertion_rule() {
        let asg = HypothesisParams::new(ModelKind::Insertion, GeneratorKind::Asg, 3);
        let hs = hypotheses(10, 6, &asg);
        let h4 = hs.iter().find(|h| h.block == 1 && h.j == 4).unwrap();
        assert_eq!(h4.premise, (4, 6));
        assert_eq!(h4.consequence, (2, 4));
        assert_eq!(h4.value_at, 4);
        let p = build_is_pattern(&bits("1110101011").unwrap(), 5, 6, &asg);
        assert_eq!(p.to_string(), "11xxx");
        // y_2 forced to 1 by j=2 and to 0 by j=3
        let p = build_is_pattern(&bits("1110001011").unwrap(), 5, 6, &asg);
        assert!(p.is_all_free());
    }

    #[test]
    fn state_enumeration() {
        let states = enumerate_states(&pat("111111x"), &[]);
        assert_eq!(states, [0b1111110, 0b1111111]);
        let all: Vec<String> = enumerate_states(&pat("xx"), &[]).iter().map(|&r| Bits::from_u64(r, 2).to_string()).collect();
        assert_eq!(all, ["01", "10", "11"]);
        assert!(enumerate_states(&pat("111111x"), &[pat("111111x")]).is_empty());
        assert_eq!(enumerate_states(&pat("x1x"), &[pat("01x")]), [0b110, 0b111]);
        assert_eq!(pat("xxx").count_matching(), 7);
        assert_eq!(pat("1xx").count_matching(), 4);
        assert_eq!(pat("0x0").count_matching(), 1);
    }

    #[test]
    fn anti_patterns() {
        let x = Bits::zeros(10);
        assert_eq!(derive_anti_pattern(&x, 1, 10, 5, 7).unwrap().to_string(), "000000x");
        assert_eq!(derive_anti_pattern(&x, 3, 10, 5, 7), None);
        let y = bits("0110100").unwrap();
        assert_eq!(
            anti_pattern_for(ModelKind::Insertion, &y, 3, 12, 7, 5).unwrap().to_string(),
            "011xx"
        );

        let mut set = AntiPatternSet::new();
        assert!(set.insert(pat("000000x"), 5));
        assert!(!set.insert(pat("000000x"), 4));
        assert!(set.insert(pat("01xxxxx"), 7));
        assert_eq!(set.excludes(0b0000001), Some(5));
        assert_eq!(set.excludes(0b0111111), Some(7));
        assert_eq!(set.excludes(0b1000000), None);
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn relaxation_order() {
        let original = pat("111111x");
        let mut tried = BTreeSet::new();
        let first = relax_pattern(&original, &tried, RelaxationOrder::LastFixedFirst).unwrap();
        assert_eq!(first.to_string(), "111110x");
        tried.insert(first);
        assert_eq!(
            relax_pattern(&original, &tried, RelaxationOrder::LastFixedFirst).unwrap().to_string(),
            "111101x"
        );
        assert_eq!(
            relax_pattern(&original, &BTreeSet::new(), RelaxationOrder::FirstFixedFirst).unwrap().to_string(),
            "011111x"
        );
        let all: BTreeSet<_> = relaxations(&original, RelaxationOrder::LastFixedFirst).into_iter().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(relax_pattern(&original, &all, RelaxationOrder::LastFixedFirst), None);
        assert_eq!(relax_pattern(&pat("xxx"), &BTreeSet::new(), RelaxationOrder::LastFixedFirst), None);
    }

    #[test]
    fn pattern_text_round_trip() {
        let p = pat("10x1x");
        assert_eq!(p.to_string(), "10x1x");
        assert_eq!(p.fixed_positions(), [1, 2, 4]);
        assert!("10a".parse::<BitPattern>().is_err());
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "\"10x1x\"");
        assert_eq!(serde_json::from_str::<BitPattern>(&json).unwrap(), p);
    }
}
