//! Shrinking and (modified) alternating step generators.

use crate::corebits::{Bits, LfsrState};
use crate::error::{Error, Result};

/// Shrinking generator: `a_i` is emitted iff `s_i = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SgInstance {
    pub selector: LfsrState,
    pub source: LfsrState,
}

impl SgInstance {
    pub fn new(selector: LfsrState, source: LfsrState) -> Result<Self> {
        if selector.register().is_zero() || source.register().is_zero() {
            return Err(Error::ZeroRegister);
        }
        Ok(SgInstance { selector, source })
    }

    /// First `m` keystream bits and the selector prefix that produced them.
    pub fn shrink(&self, m: usize) -> Result<(Bits, Bits)> {
        let l = self.selector.polynomial().degree();
        let mut n = (2 * m).max(l);
        loop {
            let sel = self.selector.generate(n);
            if sel.weight() >= m {
                let src = self.source.generate(n);
                return shrink_bits(&sel, &src, m);
            }
            if sel.is_zero() {
                return Err(Error::SelectorStuck);
            }
            n *= 2;
        }
    }
}

/// Decimates `source` by `selector` until `m` bits are produced. The
/// returned mask is the consumed selector prefix; it ends in a 1 when
/// `m > 0` and is empty when `m == 0`.
pub fn shrink_bits(selector: &Bits, source: &Bits, m: usize) -> Result<(Bits, Bits)> {
    let mut out = Bits::new();
    let mut mask = Bits::new();
    for (s, a) in selector.iter().zip(source.iter()) {
        if out.len() == m {
            break;
        }
        mask.push(s);
        if s == 1 {
            out.push(a);
        }
    }
    if out.len() < m {
        return Err(Error::SelectorStuck);
    }
    Ok((out, mask))
}

pub fn shrink(instance: &SgInstance, m: usize) -> Result<(Bits, Bits)> {
    instance.shrink(m)
}

/// Alternating step generator in the form where control bit 1 clocks `A`
/// and emits its bit, and control bit 0 does the same with `B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AsgInstance {
    pub control: LfsrState,
    pub branch_a: LfsrState,
    pub branch_b: LfsrState,
}

impl AsgInstance {
    pub fn new(control: LfsrState, branch_a: LfsrState, branch_b: LfsrState) -> Result<Self> {
        if [&control, &branch_a, &branch_b]
            .iter()
            .any(|s| s.register().is_zero())
        {
            return Err(Error::ZeroRegister);
        }
        Ok(AsgInstance {
            control,
            branch_a,
            branch_b,
        })
    }

    /// `n` keystream bits and the `n` control bits used.
    pub fn alternate(&self, n: usize) -> (Bits, Bits) {
        let control = self.control.generate(n);
        let ones = control.weight();
        let a = self.branch_a.generate(ones);
        let b = self.branch_b.generate(n - ones);
        (alternate_bits(&control, &a, &b), control)
    }
}

/// Interleaves `a` and `b` under `control`; each branch is consumed in
/// order. Panics if a branch runs out.
pub fn alternate_bits(control: &Bits, a: &Bits, b: &Bits) -> Bits {
    let (mut ia, mut ib) = (0, 0);
    control
        .iter()
        .map(|c| {
            if c == 1 {
                ia += 1;
                a[ia - 1]
            } else {
                ib += 1;
                b[ib - 1]
            }
        })
        .collect()
}

pub fn alternate(instance: &AsgInstance, n: usize) -> (Bits, Bits) {
    instance.alternate(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corebits::bits;

    fn st(p: &str, r: &str) -> LfsrState {
        LfsrState::new(p.parse().unwrap(), r.parse().unwrap()).unwrap()
    }

    #[test]
    fn shrinks_worked_example() {
        let sg = SgInstance::new(st("1+x+x^3", "001"), st("1+x+x^7", "1111101")).unwrap();
        let (ks, mask) = sg.shrink(5).unwrap();
        assert_eq!(ks.to_string(), "11110");
        assert_eq!(mask.to_string(), "0011101001");

        let (ks, _) = shrink_bits(
            &bits("0100111010").unwrap(),
            &bits("0111111101").unwrap(),
            5,
        )
        .unwrap();
        assert_eq!(ks.to_string(), "11110");
    }

    #[test]
    fn identity_selector() {
        let a = bits("1011001110").unwrap();
        let (ks, mask) = shrink_bits(&Bits::ones(10), &a, 6).unwrap();
        assert_eq!(ks, a.slice(0, 6));
        assert_eq!(mask, Bits::ones(6));
    }

    #[test]
    fn zero_length_and_stuck() {
        let sg = SgInstance::new(st("1+x+x^3", "001"), st("1+x+x^7", "1111101")).unwrap();
        let (ks, mask) = sg.shrink(0).unwrap();
        assert!(ks.is_empty() && mask.is_empty());
        assert_eq!(
            shrink_bits(&Bits::zeros(8), &Bits::ones(8), 1),
            Err(Error::SelectorStuck)
        );
        assert_eq!(
            SgInstance::new(st("1+x+x^3", "000"), st("1+x+x^7", "1111101")),
            Err(Error::ZeroRegister)
        );
    }

    #[test]
    fn alternates() {
        let a = bits("11111").unwrap();
        let b = bits("00000").unwrap();
        let ks = alternate_bits(&bits("10110").unwrap(), &a, &b);
        assert_eq!(ks.to_string(), "10110");

        let a = bits("1011001").unwrap();
        let b = bits("0110100").unwrap();
        assert_eq!(alternate_bits(&Bits::ones(7), &a, &b), a);
        assert_eq!(alternate_bits(&Bits::zeros(7), &a, &b), b);
    }

    #[test]
    fn asg_consumes_branches_in_order() {
        let asg = AsgInstance::new(
            st("1+x+x^3", "011"),
            st("1+x+x^7", "1000000"),
            st("1+x+x^7", "0000001"),
        )
        .unwrap();
        let (ks, control) = asg.alternate(20);
        let a = asg.branch_a.generate(control.weight());
        let b = asg.branch_b.generate(20 - control.weight());
        let picked_a: Bits = ks.iter().zip(control.iter()).filter(|(_, c)| *c == 1).map(|(k, _)| k).collect();
        let picked_b: Bits = ks.iter().zip(control.iter()).filter(|(_, c)| *c == 0).map(|(k, _)| k).collect();
        assert_eq!(picked_a, a);
        assert_eq!(picked_b, b);
    }
}
