//! Reference predicates for EQ, INT, NE^d and RNE, and the `¢ x #ⁿ y $` encoding.

use thiserror::Error;

use crate::machines::{Tape, TapeSymbol};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LangError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("expected {expected} bits, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("invalid language parameter: {0}")]
    InvalidParameter(String),
    #[error("bad bit string {0:?}")]
    BadBits(String),
}

pub type Bits = Vec<bool>;

pub fn parse_bits(s: &str) -> Result<Bits, LangError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(LangError::BadBits(s.to_string())),
        })
        .collect()
}

pub fn bits_to_string(b: &[bool]) -> String {
    b.iter().map(|&x| if x { '1' } else { '0' }).collect()
}

/// The `n`-bit string of `v`, most significant bit first.
pub fn bits_of(v: u64, n: usize) -> Bits {
    (0..n).rev().map(|k| k < 64 && (v >> k) & 1 == 1).collect()
}

/// `Num(x)`: the value of `x` read as binary, most significant bit first.
pub fn num_value(x: &[bool]) -> u128 {
    assert!(x.len() <= 128, "Num(x) is only defined here for |x| ≤ 128");
    x.iter().fold(0u128, |acc, &b| (acc << 1) | b as u128)
}

fn same_len(x: &[bool], y: &[bool]) -> Result<(), LangError> {
    if x.len() == y.len() {
        Ok(())
    } else {
        Err(LangError::LengthMismatch(x.len(), y.len()))
    }
}

pub fn eq_predicate(x: &[bool], y: &[bool]) -> Result<bool, LangError> {
    same_len(x, y)?;
    Ok(x == y)
}

pub fn int_predicate(x: &[bool], y: &[bool]) -> Result<bool, LangError> {
    same_len(x, y)?;
    Ok(x.iter().zip(y).any(|(&a, &b)| a && b))
}

pub fn and_bits(x: &[bool], y: &[bool]) -> Result<Bits, LangError> {
    same_len(x, y)?;
    Ok(x.iter().zip(y).map(|(&a, &b)| a && b).collect())
}

fn ne3(a: bool, b: bool, c: bool) -> bool {
    !(a == b && b == c)
}

/// Depth-`d` ternary composition of not-all-equal; `NE⁰(x₁) = x₁`.
pub fn ne_eval(d: u32, bits: &[bool]) -> Result<bool, LangError> {
    let expected = 3usize.pow(d);
    if bits.len() != expected {
        return Err(LangError::BadLength {
            expected,
            got: bits.len(),
        });
    }
    fn go(b: &[bool]) -> bool {
        if b.len() == 1 {
            return b[0];
        }
        let k = b.len() / 3;
        ne3(go(&b[..k]), go(&b[k..2 * k]), go(&b[2 * k..]))
    }
    Ok(go(bits))
}

pub fn rne_predicate(x: &[bool], y: &[bool], d: u32) -> Result<bool, LangError> {
    same_len(x, y)?;
    ne_eval(d, &and_bits(x, y)?)
}

/// `¢ x #ⁿ y $`.
pub fn encode_pair(x: &[bool], y: &[bool]) -> Result<Tape, LangError> {
    same_len(x, y)?;
    let n = x.len();
    let mut word = Vec::with_capacity(3 * n);
    word.extend(x.iter().map(|&b| TapeSymbol::from_bit(b)));
    word.extend(std::iter::repeat(TapeSymbol::Hash).take(n));
    word.extend(y.iter().map(|&b| TapeSymbol::from_bit(b)));
    Ok(Tape::from_word(&word).expect("encoded words contain no markers"))
}

/// Inverse of [`encode_pair`] for well-formed tapes with `|x| = |y| = n`.
pub fn decode_pair(tape: &Tape, n: usize) -> Option<(Bits, Bits)> {
    let w = &tape.cells()[1..tape.len() - 1];
    if w.len() != 3 * n || w[n..2 * n].iter().any(|&s| s != TapeSymbol::Hash) {
        return None;
    }
    let x: Option<Bits> = w[..n].iter().map(|s| s.bit()).collect();
    let y: Option<Bits> = w[2 * n..].iter().map(|s| s.bit()).collect();
    Some((x?, y?))
}

/// Interior word as bits, when the tape is `¢ x $` with `x ∈ {0,1}ⁿ`.
pub fn decode_plain(tape: &Tape, n: usize) -> Option<Bits> {
    let w = &tape.cells()[1..tape.len() - 1];
    if w.len() != n {
        return None;
    }
    w.iter().map(|s| s.bit()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LanguageId {
    Eq(usize),
    Int(usize),
    /// `L_NE(n)`, `n = 3^d`.
    Ne(usize),
}

impl LanguageId {
    pub fn new_eq(n: usize) -> Result<Self, LangError> {
        Self::check_n(n).map(|_| LanguageId::Eq(n))
    }

    pub fn new_int(n: usize) -> Result<Self, LangError> {
        Self::check_n(n).map(|_| LanguageId::Int(n))
    }

    pub fn new_ne(n: usize) -> Result<Self, LangError> {
        Self::check_n(n)?;
        ne_depth(n)
            .map(|_| LanguageId::Ne(n))
            .ok_or_else(|| LangError::InvalidParameter(format!("L_NE needs n = 3^d, got {n}")))
    }

    fn check_n(n: usize) -> Result<(), LangError> {
        if n == 0 {
            Err(LangError::InvalidParameter("n must be at least 1".into()))
        } else {
            Ok(())
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            LanguageId::Eq(n) | LanguageId::Int(n) | LanguageId::Ne(n) => n,
        }
    }
}

/// `d` with `3^d = n`.
pub fn ne_depth(n: usize) -> Option<u32> {
    let mut d = 0;
    let mut p = 1usize;
    while p < n {
        p *= 3;
        d += 1;
    }
    (p == n).then_some(d)
}

/// Ground-truth membership. Malformed tapes are non-members.
pub fn member(l: LanguageId, tape: &Tape) -> bool {
    let Some((x, y)) = decode_pair(tape, l.n()) else {
        return false;
    };
    match l {
        LanguageId::Eq(_) => x == y,
        LanguageId::Int(_) => int_predicate(&x, &y).unwrap_or(false),
        LanguageId::Ne(n) => ne_depth(n)
            .map(|d| rne_predicate(&x, &y, d).unwrap_or(false))
            .unwrap_or(false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Bits {
        parse_bits(s).unwrap()
    }

    /// Bottom-up evaluation with an explicit truth table, independent of `ne_eval`'s recursion.
    fn ne_table(d: u32, bits: &[bool]) -> bool {
        const TABLE: [bool; 8] = [false, true, true, true, true, true, true, false];
        let mut level: Vec<bool> = bits.to_vec();
        for _ in 0..d {
            level = level
                .chunks(3)
                .map(|c| TABLE[(c[0] as usize) << 2 | (c[1] as usize) << 1 | c[2] as usize])
                .collect();
        }
        level[0]
    }

    #[test]
    fn eq_and_int_examples() {
        assert!(eq_predicate(&b("00"), &b("00")).unwrap());
        assert!(!eq_predicate(&b("01"), &b("10")).unwrap());
        assert!(eq_predicate(&b("1011"), &b("1011")).unwrap());
        assert!(!int_predicate(&b("10"), &b("01")).unwrap());
        assert!(int_predicate(&b("11"), &b("01")).unwrap());
        assert!(!int_predicate(&b("0000"), &b("1111")).unwrap());
        assert_eq!(
            eq_predicate(&b("0"), &b("00")),
            Err(LangError::LengthMismatch(1, 2))
        );
    }

    #[test]
    fn ne_examples() {
        assert!(!ne_eval(1, &b("000")).unwrap());
        assert!(ne_eval(1, &b("010")).unwrap());
        assert!(ne_eval(2, &b("000111010")).unwrap());
        assert!(ne_eval(0, &b("1")).unwrap());
        assert!(ne_eval(1, &b("01")).is_err());
    }

    #[test]
    fn ne_matches_table_on_all_512_inputs() {
        for v in 0..512u64 {
            let bits = bits_of(v, 9);
            assert_eq!(
                ne_eval(2, &bits).unwrap(),
                ne_table(2, &bits),
                "{}",
                bits_to_string(&bits)
            );
        }
    }

    #[test]
    fn ne_block_permutation_symmetry() {
        for v in 0..512u64 {
            let bits = bits_of(v, 9);
            let (a, c, e) = (&bits[..3], &bits[3..6], &bits[6..]);
            let base = ne_eval(2, &bits).unwrap();
            for perm in [[a, e, c], [c, a, e], [c, e, a], [e, a, c], [e, c, a]] {
                assert_eq!(ne_eval(2, &perm.concat()).unwrap(), base);
            }
        }
    }

    #[test]
    fn rne_examples_and_identity() {
        assert!(!rne_predicate(&b("000"), &b("000"), 1).unwrap());
        assert!(rne_predicate(&b("111"), &b("010"), 1).unwrap());
        assert!(!rne_predicate(&b("000"), &b("111"), 1).unwrap());
        for v in 0..512u64 {
            let x = bits_of(v, 9);
            assert_eq!(
                rne_predicate(&x, &[true; 9], 2).unwrap(),
                ne_eval(2, &x).unwrap()
            );
        }
    }

    #[test]
    fn encoding_examples() {
        assert_eq!(encode_pair(&b("0"), &b("1")).unwrap().to_string(), "¢0#1$");
        let t = encode_pair(&b("01"), &b("10")).unwrap();
        assert_eq!(t.to_string(), "¢01##10$");
        assert_eq!(decode_pair(&t, 2), Some((b("01"), b("10"))));
        assert!(encode_pair(&b("0"), &b("10")).is_err());
    }

    #[test]
    fn membership() {
        assert!(member(LanguageId::Eq(2), &"¢01##01$".parse().unwrap()));
        assert!(!member(LanguageId::Int(2), &"¢10##01$".parse().unwrap()));
        let t = encode_pair(&b("111"), &b("010")).unwrap();
        assert!(member(LanguageId::new_ne(3).unwrap(), &t));
        assert!(!member(LanguageId::Eq(2), &"¢01#01$".parse().unwrap()));
        assert!(LanguageId::new_ne(4).is_err());
    }

    #[test]
    fn eq_membership_matches_predicate_exhaustively() {
        for n in 1..=6usize {
            for xv in 0..1u64 << n {
                for yv in 0..1u64 << n {
                    let (x, y) = (bits_of(xv, n), bits_of(yv, n));
                    let t = encode_pair(&x, &y).unwrap();
                    assert_eq!(member(LanguageId::Eq(n), &t), eq_predicate(&x, &y).unwrap());
                }
            }
        }
    }

    #[test]
    fn num_is_msb_first() {
        assert_eq!(num_value(&b("01")), 1);
        assert_eq!(num_value(&b("11")), 3);
        assert_eq!(num_value(&b("0110")), 6);
    }
}
