//! Exact encoding between rational points of `[0,1]` and fibers of the
//! position map `x ↦ Σ x(λ_j)/2^j`.
//!
//! Dyadic rationals `l/2^n` in the open interval are exactly the points with
//! two addresses: the expansion ending `…0111…` and the one ending `…1000…`.
//! Everything else has one address. All arithmetic is exact; floating point
//! never enters the codec or the verifier.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::index::Index;

/// Exact arc parameter.
pub type Param = BigRational;

/// Parses an exact parameter: an integer or a fraction `p/q`.
pub fn parse_param(text: &str) -> Result<Param> {
    let text = text.trim();
    let bad = |reason: String| Error::Parse {
        what: "parameter",
        reason,
    };
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad numerator in `{text}`")))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad denominator in `{text}`")))?;
        if q.is_zero() {
            return Err(bad(format!("zero denominator in `{text}`")));
        }
        Ok(BigRational::new(p, q))
    } else {
        let p: BigInt = text
            .parse()
            .map_err(|_| bad(format!("`{text}` is not an integer or p/q fraction")))?;
        Ok(BigRational::from_integer(p))
    }
}

fn check_unit_range(y: &Param) -> Result<()> {
    if y.is_negative() || *y > BigRational::one() {
        return Err(Error::ParamOutOfRange {
            value: y.to_string(),
        });
    }
    Ok(())
}

/// Which of the two fiber laws applies to a parameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParamClass {
    /// 0 or 1: a single-address endpoint.
    Endpoint { one: bool },
    /// `l/2^n` in lowest terms with `0 < l < 2^n`: a two-address point.
    Dyadic { numer: BigInt, log2_denom: u32 },
    /// Any other rational in `(0,1)`: a single eventually periodic address.
    NonDyadic,
}

/// Classifies `y` against the dyadic set `M = {l/2^n}`.
pub fn classify(y: &Param) -> Result<ParamClass> {
    check_unit_range(y)?;
    if y.is_zero() {
        return Ok(ParamClass::Endpoint { one: false });
    }
    if y.is_one() {
        return Ok(ParamClass::Endpoint { one: true });
    }
    let denom = y.denom();
    // power of two test: d & (d-1) == 0 for d > 0
    if (denom & &(denom - BigInt::one())).is_zero() {
        let log2_denom = denom.bits() as u32 - 1;
        Ok(ParamClass::Dyadic {
            numer: y.numer().clone(),
            log2_denom,
        })
    } else {
        Ok(ParamClass::NonDyadic)
    }
}

/// What the position coordinates do beyond the finite prefix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TailPattern {
    AllZeros,
    AllOnes,
    /// Repeats a primitive pattern that is neither all-zeros nor all-ones.
    Periodic(Vec<bool>),
    /// Tail coordinates left free; the spec is then exactly a cone.
    Unconstrained,
}

impl TailPattern {
    /// Builds a periodic tail, collapsing constant patterns and reducing to
    /// the primitive period.
    pub fn periodic(bits: Vec<bool>) -> TailPattern {
        assert!(!bits.is_empty(), "periodic tail pattern must be nonempty");
        if bits.iter().all(|&b| !b) {
            return TailPattern::AllZeros;
        }
        if bits.iter().all(|&b| b) {
            return TailPattern::AllOnes;
        }
        let n = bits.len();
        for d in 1..n {
            if n % d == 0 && (d..n).all(|i| bits[i] == bits[i - d]) {
                return TailPattern::Periodic(bits[..d].to_vec());
            }
        }
        TailPattern::Periodic(bits)
    }

    /// The tail digit at offset `i` (0-based past the prefix), if determined.
    fn digit(&self, i: usize) -> Option<bool> {
        match self {
            TailPattern::AllZeros => Some(false),
            TailPattern::AllOnes => Some(true),
            TailPattern::Periodic(p) => Some(p[i % p.len()]),
            TailPattern::Unconstrained => None,
        }
    }
}

impl fmt::Display for TailPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailPattern::AllZeros => write!(f, "0*"),
            TailPattern::AllOnes => write!(f, "1*"),
            TailPattern::Periodic(p) => {
                write!(f, "(")?;
                for &b in p {
                    write!(f, "{}", if b { '1' } else { '0' })?;
                }
                write!(f, ")*")
            }
            TailPattern::Unconstrained => write!(f, "?"),
        }
    }
}

/// One cylinder-with-tail piece of a fiber: selector constraints, a finite
/// bit prefix along the position axis, and a tail pattern for the rest.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AddressSpec {
    pub cone_part: Cone,
    pub prefix: Vec<bool>,
    pub tail: TailPattern,
}

impl AddressSpec {
    pub fn new(cone_part: Cone, prefix: Vec<bool>, tail: TailPattern) -> Self {
        AddressSpec {
            cone_part,
            prefix,
            tail,
        }
    }

    /// The position digit at 1-based depth `j`, if determined.
    pub fn digit(&self, j: usize) -> Option<bool> {
        assert!(j >= 1);
        if j <= self.prefix.len() {
            Some(self.prefix[j - 1])
        } else {
            self.tail.digit(j - self.prefix.len() - 1)
        }
    }

    /// Materializes the piece as a cone constraining the first `la_depth`
    /// position coordinates (where determined) on top of the selector part.
    pub fn to_cone_at_depth(&self, la_depth: usize) -> Cone {
        let mut constraints: Vec<(Index, bool)> = self
            .cone_part
            .constraints()
            .map(|(i, b)| (i.clone(), b))
            .collect();
        for j in 1..=la_depth {
            if let Some(bit) = self.digit(j) {
                constraints.push((Index::lambda(j as u32), bit));
            }
        }
        Cone::from_constraints(constraints)
    }

    /// Exact value (constant or periodic tails) or dyadic interval
    /// (unconstrained tail) of the position digits.
    pub fn decode(&self) -> Decoded {
        let k = self.prefix.len();
        let mut p = BigRational::zero();
        for (i, &bit) in self.prefix.iter().enumerate() {
            if bit {
                p += BigRational::new(BigInt::one(), BigInt::one() << (i + 1));
            }
        }
        let scale = BigRational::new(BigInt::one(), BigInt::one() << k);
        match &self.tail {
            TailPattern::AllZeros => Decoded::Point(p),
            TailPattern::AllOnes => Decoded::Point(p + scale),
            TailPattern::Periodic(pattern) => {
                // value of one period read as an integer, over 2^m - 1
                let m = pattern.len();
                let mut n = BigInt::zero();
                for &bit in pattern {
                    n = (n << 1) + BigInt::from(bit as u8);
                }
                let tail_value = BigRational::new(n, (BigInt::one() << m) - BigInt::one());
                Decoded::Point(p + scale * tail_value)
            }
            TailPattern::Unconstrained => Decoded::Interval(DyadicInterval {
                lo: p.clone(),
                hi: p + scale,
            }),
        }
    }

    /// Canonical text form `<cone> | <prefix bits> : <tail>`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::Parse {
            what: "address spec",
            reason,
        };
        let (cone_text, rest) = text
            .split_once('|')
            .ok_or_else(|| bad("missing `|` separator".into()))?;
        let (prefix_text, tail_text) = rest
            .split_once(':')
            .ok_or_else(|| bad("missing `:` separator".into()))?;
        let cone_part = Cone::parse(cone_text)?;
        let prefix_text = prefix_text.trim();
        let mut prefix = Vec::with_capacity(prefix_text.len());
        for c in prefix_text.chars() {
            match c {
                '0' => prefix.push(false),
                '1' => prefix.push(true),
                other => return Err(bad(format!("unexpected prefix character `{other}`"))),
            }
        }
        let tail = match tail_text.trim() {
            "0*" => TailPattern::AllZeros,
            "1*" => TailPattern::AllOnes,
            "?" => TailPattern::Unconstrained,
            t => {
                let inner = t
                    .strip_prefix('(')
                    .and_then(|t| t.strip_suffix(")*"))
                    .ok_or_else(|| bad(format!("unknown tail `{t}`")))?;
                if inner.is_empty() {
                    return Err(bad("empty periodic tail".into()));
                }
                let bits: Vec<bool> = inner
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(bad(format!("unexpected tail character `{other}`"))),
                    })
                    .collect::<Result<_>>()?;
                TailPattern::periodic(bits)
            }
        };
        Ok(AddressSpec::new(cone_part, prefix, tail))
    }
}

impl fmt::Display for AddressSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.cone_part.is_universe() {
            write!(f, "{} ", self.cone_part)?;
        }
        write!(f, "| ")?;
        for &b in &self.prefix {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        if !self.prefix.is_empty() {
            write!(f, " ")?;
        }
        write!(f, ": {}", self.tail)
    }
}

/// A closed dyadic interval with exact endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicInterval {
    pub lo: Param,
    pub hi: Param,
}

impl DyadicInterval {
    pub fn width(&self) -> Param {
        &self.hi - &self.lo
    }

    pub fn contains(&self, y: &Param) -> bool {
        self.lo <= *y && *y <= self.hi
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Result of decoding an address: an exact point or a dyadic interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decoded {
    Point(Param),
    Interval(DyadicInterval),
}

/// The full preimage of one parameter: a disjoint union of address pieces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberSpec {
    pieces: Vec<AddressSpec>,
}

impl FiberSpec {
    pub fn new(pieces: Vec<AddressSpec>) -> Self {
        assert!(!pieces.is_empty(), "a fiber has at least one piece");
        FiberSpec { pieces }
    }

    pub fn pieces(&self) -> &[AddressSpec] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for FiberSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, piece) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, "  u  ")?;
            }
            write!(f, "{piece}")?;
        }
        Ok(())
    }
}

/// Binary digits of `y` in `[0,1]` split into preperiod and period.
/// An empty period means the expansion terminates (digits then zeros).
/// `y = 1` yields an empty preperiod with period `[1]`.
fn binary_expansion(y: &Param) -> (Vec<bool>, Vec<bool>) {
    if y.is_one() {
        return (Vec::new(), vec![true]);
    }
    // long division by repeated doubling; remainders are numerators over
    // the fixed denominator, so a repeat closes the period
    let q = y.denom().clone();
    let mut r = y.numer().clone();
    let mut digits: Vec<bool> = Vec::new();
    let mut seen: Vec<(BigInt, usize)> = Vec::new();
    loop {
        if r.is_zero() {
            return (digits, Vec::new());
        }
        if let Some((_, at)) = seen.iter().find(|(rem, _)| *rem == r) {
            let period = digits.split_off(*at);
            return (digits, period);
        }
        seen.push((r.clone(), digits.len()));
        r <<= 1;
        if r >= q {
            digits.push(true);
            r -= &q;
        } else {
            digits.push(false);
        }
    }
}

/// Encodes a parameter as its fiber over `cone_part`.
///
/// Dyadic `l/2^n` yields two pieces sharing the first `n-1` digits, one
/// continuing `0` then all ones, one continuing `1` then all zeros. The
/// endpoints 0 and 1 and all non-dyadic rationals yield a single piece.
pub fn encode_param(y: &Param, cone_part: &Cone) -> Result<FiberSpec> {
    let class = classify(y)?;
    let pieces = match class {
        ParamClass::Endpoint { one: false } => vec![AddressSpec::new(
            cone_part.clone(),
            Vec::new(),
            TailPattern::AllZeros,
        )],
        ParamClass::Endpoint { one: true } => vec![AddressSpec::new(
            cone_part.clone(),
            Vec::new(),
            TailPattern::AllOnes,
        )],
        ParamClass::Dyadic { .. } => {
            let (digits, period) = binary_expansion(y);
            debug_assert!(period.is_empty());
            debug_assert_eq!(digits.last(), Some(&true));
            let shared = &digits[..digits.len() - 1];
            let mut low = shared.to_vec();
            low.push(false);
            let mut high = shared.to_vec();
            high.push(true);
            vec![
                AddressSpec::new(cone_part.clone(), low, TailPattern::AllOnes),
                AddressSpec::new(cone_part.clone(), high, TailPattern::AllZeros),
            ]
        }
        ParamClass::NonDyadic => {
            let (preperiod, period) = binary_expansion(y);
            debug_assert!(!period.is_empty());
            vec![AddressSpec::new(
                cone_part.clone(),
                preperiod,
                TailPattern::periodic(period),
            )]
        }
    };
    Ok(FiberSpec::new(pieces))
}

/// Exact value of an address piece; see [`AddressSpec::decode`].
pub fn decode_spec(spec: &AddressSpec) -> Decoded {
    spec.decode()
}

/// Depth-`k` stand-in for a parameter that need not be exactly encodable:
/// the unconstrained-tail piece over the first `k` binary digits of `y`.
/// Its decoded interval has width `2^-k` and contains `y`.
pub fn approximate_param(y: &Param, k: usize, cone_part: &Cone) -> Result<AddressSpec> {
    assert!(k >= 1);
    check_unit_range(y)?;
    let prefix = if y.is_one() {
        vec![true; k]
    } else {
        let mut digits = Vec::with_capacity(k);
        let mut r = y.clone();
        for _ in 0..k {
            r *= BigRational::from_integer(BigInt::from(2));
            if r >= BigRational::one() {
                digits.push(true);
                r -= BigRational::one();
            } else {
                digits.push(false);
            }
        }
        digits
    };
    Ok(AddressSpec::new(
        cone_part.clone(),
        prefix,
        TailPattern::Unconstrained,
    ))
}

/// Smallest 1-based depth at which two pieces disagree on a determined
/// position digit, probing up to `max_depth`. Pieces whose selector cones
/// already contradict are reported as depth 0.
pub fn first_disagreement(a: &AddressSpec, b: &AddressSpec, max_depth: usize) -> Option<usize> {
    if a.cone_part.is_disjoint_from(&b.cone_part) {
        return Some(0);
    }
    for j in 1..=max_depth {
        if let (Some(x), Some(y)) = (a.digit(j), b.digit(j)) {
            if x != y {
                return Some(j);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn q(p: i64, d: i64) -> Param {
        BigRational::new(BigInt::from(p), BigInt::from(d))
    }

    // Independent digit oracle: repeated doubling with exact rationals,
    // bypassing binary_expansion entirely.
    fn oracle_digits(y: &Param, k: usize) -> Vec<bool> {
        let mut r = y.clone();
        let mut out = Vec::new();
        for _ in 0..k {
            r *= BigRational::from_i64(2).unwrap();
            if r >= BigRational::one() {
                out.push(true);
                r -= BigRational::one();
            } else {
                out.push(false);
            }
        }
        out
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify(&q(1, 2)).unwrap(),
            ParamClass::Dyadic {
                numer: BigInt::one(),
                log2_denom: 1
            }
        );
        assert_eq!(
            classify(&q(0, 1)).unwrap(),
            ParamClass::Endpoint { one: false }
        );
        assert_eq!(
            classify(&q(1, 1)).unwrap(),
            ParamClass::Endpoint { one: true }
        );
        assert_eq!(classify(&q(1, 3)).unwrap(), ParamClass::NonDyadic);
        assert_eq!(
            classify(&q(3, 8)).unwrap(),
            ParamClass::Dyadic {
                numer: BigInt::from(3),
                log2_denom: 3
            }
        );
        assert_eq!(classify(&q(6, 12)).unwrap(), classify(&q(1, 2)).unwrap());
        assert!(classify(&q(-1, 2)).is_err());
        assert!(classify(&q(3, 2)).is_err());
    }

    #[test]
    fn encode_half_has_two_pieces() {
        let fiber = encode_param(&q(1, 2), &Cone::universe()).unwrap();
        assert_eq!(fiber.len(), 2);
        assert_eq!(fiber.pieces()[0].to_string(), "| 0 : 1*");
        assert_eq!(fiber.pieces()[1].to_string(), "| 1 : 0*");
    }

    #[test]
    fn encode_endpoints() {
        let zero = encode_param(&q(0, 1), &Cone::universe()).unwrap();
        assert_eq!(zero.len(), 1);
        assert_eq!(zero.pieces()[0].to_string(), "| : 0*");
        let one = encode_param(&q(1, 1), &Cone::universe()).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.pieces()[0].to_string(), "| : 1*");
    }

    #[test]
    fn encode_third_is_purely_periodic() {
        let fiber = encode_param(&q(1, 3), &Cone::universe()).unwrap();
        assert_eq!(fiber.len(), 1);
        let piece = &fiber.pieces()[0];
        assert!(piece.prefix.is_empty());
        assert_eq!(piece.tail, TailPattern::Periodic(vec![false, true]));
        // cross-check against the independent digit oracle
        let digits: Vec<bool> = (1..=8).map(|j| piece.digit(j).unwrap()).collect();
        assert_eq!(digits, oracle_digits(&q(1, 3), 8));
    }

    #[test]
    fn encode_sixth_has_preperiod_one() {
        let fiber = encode_param(&q(1, 6), &Cone::universe()).unwrap();
        let piece = &fiber.pieces()[0];
        assert_eq!(piece.prefix, vec![false]);
        assert_eq!(piece.tail, TailPattern::Periodic(vec![false, true]));
        let digits: Vec<bool> = (1..=9).map(|j| piece.digit(j).unwrap()).collect();
        assert_eq!(digits, oracle_digits(&q(1, 6), 9));
    }

    #[test]
    fn decode_examples() {
        // both pieces of the fiber of 1/2 decode to 1/2; bracket each value
        // with a 64-digit partial sum as an independent check
        for (prefix, tail) in [
            (vec![false], TailPattern::AllOnes),
            (vec![true], TailPattern::AllZeros),
        ] {
            let piece = AddressSpec::new(Cone::universe(), prefix, tail);
            let Decoded::Point(v) = piece.decode() else {
                panic!("expected a point")
            };
            assert_eq!(v, q(1, 2));
            let mut partial = BigRational::zero();
            for j in 1..=64usize {
                if piece.digit(j).unwrap() {
                    partial += BigRational::new(BigInt::one(), BigInt::one() << j);
                }
            }
            let eps = BigRational::new(BigInt::one(), BigInt::one() << 64usize);
            assert!(partial <= v && v <= &partial + &eps);
        }

        let open = AddressSpec::new(
            Cone::universe(),
            vec![false, true],
            TailPattern::Unconstrained,
        );
        assert_eq!(
            open.decode(),
            Decoded::Interval(DyadicInterval {
                lo: q(1, 4),
                hi: q(1, 2)
            })
        );
    }

    #[test]
    fn round_trip_small_denominators() {
        // every piece of every rational with denominator <= 64 decodes back
        for d in 1..=64i64 {
            for p in 0..=d {
                let y = q(p, d);
                let fiber = encode_param(&y, &Cone::universe()).unwrap();
                for piece in fiber.pieces() {
                    assert_eq!(piece.decode(), Decoded::Point(y.clone()), "y = {p}/{d}");
                }
                let dyadic = matches!(classify(&y).unwrap(), ParamClass::Dyadic { .. });
                assert_eq!(fiber.len(), if dyadic { 2 } else { 1 });
            }
        }
    }

    #[test]
    fn dyadic_pieces_split_at_digit_n() {
        // the two pieces of l/2^n differ exactly at position n
        for n in 1..=6u32 {
            for l in (1..(1i64 << n)).step_by(2) {
                let y = q(l, 1 << n);
                let fiber = encode_param(&y, &Cone::universe()).unwrap();
                let [a, b] = fiber.pieces() else {
                    panic!("dyadic fiber must have two pieces")
                };
                assert_eq!(first_disagreement(a, b, 64), Some(n as usize));
            }
        }
    }

    #[test]
    fn approximate_examples() {
        let a = approximate_param(&q(1, 3), 4, &Cone::universe()).unwrap();
        assert_eq!(a.to_string(), "| 0101 : ?");
        assert_eq!(
            a.decode(),
            Decoded::Interval(DyadicInterval {
                lo: q(5, 16),
                hi: q(6, 16)
            })
        );

        let z = approximate_param(&q(0, 1), 3, &Cone::universe()).unwrap();
        assert_eq!(
            z.decode(),
            Decoded::Interval(DyadicInterval {
                lo: q(0, 1),
                hi: q(1, 8)
            })
        );

        let o = approximate_param(&q(1, 1), 2, &Cone::universe()).unwrap();
        assert_eq!(o.to_string(), "| 11 : ?");
        assert_eq!(
            o.decode(),
            Decoded::Interval(DyadicInterval {
                lo: q(3, 4),
                hi: q(1, 1)
            })
        );
    }

    #[test]
    fn approximation_width_halves_with_depth() {
        let y = q(2, 7);
        for k in 1..=12usize {
            let spec = approximate_param(&y, k, &Cone::universe()).unwrap();
            let Decoded::Interval(iv) = spec.decode() else {
                panic!("expected an interval")
            };
            assert_eq!(iv.width(), BigRational::new(BigInt::one(), BigInt::one() << k));
            assert!(iv.contains(&y));
        }
    }

    #[test]
    fn periodic_constructor_collapses_and_reduces() {
        assert_eq!(TailPattern::periodic(vec![false, false]), TailPattern::AllZeros);
        assert_eq!(TailPattern::periodic(vec![true]), TailPattern::AllOnes);
        assert_eq!(
            TailPattern::periodic(vec![false, true, false, true]),
            TailPattern::Periodic(vec![false, true])
        );
        assert_eq!(
            TailPattern::periodic(vec![true, false, false]),
            TailPattern::Periodic(vec![true, false, false])
        );
    }

    #[test]
    fn spec_text_round_trip() {
        let texts = [
            "mu1@C1=1,mu2@C1=0 | 01 : 1*",
            "| : 0*",
            "xi1=0 | 1101 : (011)*",
            "| 0 : ?",
        ];
        for t in texts {
            let spec = AddressSpec::parse(t).unwrap();
            let printed = spec.to_string();
            assert_eq!(AddressSpec::parse(&printed).unwrap(), spec);
        }
        let spec = AddressSpec::parse("mu1@C1=1,mu2@C1=0 | 01 : 1*").unwrap();
        assert_eq!(spec.prefix, vec![false, true]);
        assert_eq!(spec.tail, TailPattern::AllOnes);
        assert!(AddressSpec::parse("xi1=0 | 01").is_err());
        assert!(AddressSpec::parse("| 01 : 2*").is_err());
    }

    #[test]
    fn parse_param_accepts_exact_fractions() {
        assert_eq!(parse_param("1/2").unwrap(), q(1, 2));
        assert_eq!(parse_param("0").unwrap(), q(0, 1));
        assert_eq!(parse_param(" 7/8 ").unwrap(), q(7, 8));
        assert!(parse_param("1/0").is_err());
        assert!(parse_param("0.5").is_err());
    }
}
