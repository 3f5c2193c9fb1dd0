//! Rational threshold arithmetic: canonical decomposition, multiplicative
//! orders, binary expansions with periodic tails, the gap value `eta`, and
//! the greedy maximal power-of-two sum that serves as its oracle.
//!
//! The central fact implemented here: if an integer `N` is a sum of at most
//! `m` powers of two and `N < rho * 2^n`, then already `N <= (rho - eta) *
//! 2^n` for a positive `eta` depending only on `rho` and `m`. The deciders
//! lean on this to turn "strictly below the threshold" into "below by a
//! margin", which is what makes their NO answers survive the error terms of
//! sunflower-core conditioning.
//!
//! Everything is exact. Where parameter schedules need comparisons against
//! quantities like `(3/4)^q` for astronomically large `q`, the crate-private
//! helpers at the bottom provide certified rational bounds on base-2
//! logarithms instead of materializing the numbers.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::formula::{BigRational, ExactCount, Threshold, ThresholdError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArithmeticError {
    #[error("multiplicative order is defined only for odd moduli, got an even value")]
    EvenModulus,
    #[error("odd denominator has {bits} bits; orders are only computed up to 2^24")]
    ModulusTooLarge { bits: u64 },
}

/// Canonicalizes `p/q` into the threshold form `a/(2^v*b)` with `b` odd and
/// `gcd(a, 2^v*b) = 1`. Errors unless `0 < p/q < 1`.
pub fn canonicalize_threshold(p: &BigUint, q: &BigUint) -> Result<Threshold, ThresholdError> {
    Threshold::new(p.clone(), q.clone())
}

/// Largest odd modulus accepted by [`ord2`]; the order can approach the
/// modulus itself, and this keeps the search loop desk-scale.
const ORD2_MAX_BITS: u64 = 24;

/// The multiplicative order of 2 modulo odd `b >= 1`: the smallest `d >= 1`
/// with `b | 2^d - 1`. This is the period of the binary expansion of
/// fractions with denominator `b`.
pub fn ord2(b: &BigUint) -> Result<u64, ArithmeticError> {
    if (b % 2u8).is_zero() {
        return Err(ArithmeticError::EvenModulus);
    }
    if b.bits() > ORD2_MAX_BITS {
        return Err(ArithmeticError::ModulusTooLarge { bits: b.bits() });
    }
    if b.is_one() {
        return Ok(1);
    }
    let two = BigUint::from(2u8);
    let mut cur = &two % b;
    let mut d = 1u64;
    while !cur.is_one() {
        cur = (cur * &two) % b;
        d += 1;
    }
    Ok(d)
}

/// Metadata about the eventually periodic tail of a non-terminating
/// expansion: the number of leading terms before the tail starts, the
/// exponent shift `d = ord2(b)` from one period to the next, and how many
/// expansion terms each period contributes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpansionPeriod {
    pub preperiod_len: usize,
    pub period_len: u64,
    pub terms_per_period: usize,
}

/// A prefix of the binary expansion of a threshold `rho`: strictly
/// decreasing exponents `e_1 > e_2 > ...` with `rho = sum 2^{e_i}`. Dyadic
/// thresholds terminate; all others continue forever with the period
/// recorded in `period`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryExpansion {
    exponents: Vec<i64>,
    period: Option<ExpansionPeriod>,
    terminated: bool,
}

impl BinaryExpansion {
    /// The materialized exponents, strictly decreasing.
    pub fn exponents(&self) -> &[i64] {
        &self.exponents
    }

    pub fn period(&self) -> Option<&ExpansionPeriod> {
        self.period.as_ref()
    }

    /// True if the materialized prefix is the entire (dyadic) expansion.
    pub fn is_complete(&self) -> bool {
        self.terminated
    }

    /// The partial sum of the materialized terms, an exact rational.
    pub fn partial_sum(&self) -> BigRational {
        let mut sum = BigRational::zero();
        for &e in &self.exponents {
            sum += pow2_ratio(e);
        }
        sum
    }
}

/// Descending bit positions of `x`.
fn bit_positions_desc(x: &BigUint) -> Vec<u64> {
    let mut out = Vec::with_capacity(x.count_ones() as usize);
    for i in (0..x.bits()).rev() {
        if x.bit(i) {
            out.push(i);
        }
    }
    out
}

/// Decomposition of a threshold's expansion structure shared by
/// [`binary_expansion`] and the `eta` computations.
struct ExpansionShape {
    /// Bits of the integer part of `a/b`, descending; empty when `a < b`.
    q_bits: Vec<u64>,
    /// Bits of the fractional remainder `r`, descending; empty iff dyadic.
    r_bits: Vec<u64>,
    /// `ord2(b)`; 0 stands in for the dyadic case.
    d: u64,
    r: BigUint,
}

fn expansion_shape(rho: &Threshold) -> Result<ExpansionShape, ArithmeticError> {
    let b = rho.denom_odd();
    if b.is_one() {
        return Ok(ExpansionShape {
            q_bits: bit_positions_desc(rho.numer()),
            r_bits: Vec::new(),
            d: 0,
            r: BigUint::zero(),
        });
    }
    let d = ord2(b)?;
    let pow = (BigUint::one() << d) - BigUint::one();
    let c = &pow / b;
    let ac = rho.numer() * &c;
    let q = &ac / &pow;
    let r = &ac % &pow;
    Ok(ExpansionShape { q_bits: bit_positions_desc(&q), r_bits: bit_positions_desc(&r), d, r })
}

/// The first `count` exponents of `rho`'s binary expansion (or all of them
/// if a dyadic expansion terminates sooner). Construction: the bits of the
/// integer part of `a/b`, then periodic blocks shifted down by `d = ord2(b)`
/// per period, all offset by `-v`.
pub fn binary_expansion(rho: &Threshold, count: usize) -> Result<BinaryExpansion, ArithmeticError> {
    let shape = expansion_shape(rho)?;
    let v = rho.denom_pow2() as i64;
    let mut exponents: Vec<i64> = Vec::with_capacity(count);
    for &qb in &shape.q_bits {
        if exponents.len() == count {
            break;
        }
        exponents.push(qb as i64 - v);
    }
    if shape.d == 0 {
        let terminated = exponents.len() == shape.q_bits.len();
        return Ok(BinaryExpansion { exponents, period: None, terminated });
    }
    let mut block = 1i64;
    'outer: while exponents.len() < count {
        for &rb in &shape.r_bits {
            if exponents.len() == count {
                break 'outer;
            }
            exponents.push(rb as i64 - block * shape.d as i64 - v);
        }
        block += 1;
    }
    Ok(BinaryExpansion {
        exponents,
        period: Some(ExpansionPeriod {
            preperiod_len: shape.q_bits.len(),
            period_len: shape.d,
            terms_per_period: shape.r_bits.len(),
        }),
        terminated: false,
    })
}

/// `2^e` as an exact rational, for possibly negative `e`.
pub fn pow2_ratio(e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(BigInt::one() << e as u64)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << e.unsigned_abs())
    }
}

/// The gap value: every integer expressible as a sum of at most `m` powers
/// of two that is strictly below `rho * 2^n` is already at most
/// `(rho - eta(rho, m)) * 2^n`, for every `n`.
///
/// Dyadic case: `eta = 2^{a_s - m + s - 1} / 2^v` where `a_1 > ... > a_s`
/// are the bit positions of the numerator. Otherwise `eta` is the full tail
/// of the binary expansion after its first `m` terms.
pub fn eta(rho: &Threshold, m: u64) -> Result<BigRational, ArithmeticError> {
    assert!(m >= 1, "eta requires m >= 1");
    if rho.is_dyadic() {
        let bits = bit_positions_desc(rho.numer());
        let s = bits.len() as i64;
        let a_s = *bits.last().expect("threshold numerator is positive") as i64;
        Ok(pow2_ratio(a_s - m as i64 + s - 1 - rho.denom_pow2() as i64))
    } else {
        let expansion = binary_expansion(rho, m as usize)?;
        Ok(rho.as_rational() - expansion.partial_sum())
    }
}

/// Certified bounds `(lo, hi)` with `lo <= log2(eta(rho, m)) <= hi`, without
/// materializing `eta`. Works for arbitrarily large `m`, which is what the
/// parameter schedules need: their `m` values are towers.
pub(crate) fn eta_log2_bounds(
    rho: &Threshold,
    m: &BigUint,
    frac_bits: u32,
) -> Result<(BigRational, BigRational), ArithmeticError> {
    assert!(!m.is_zero());
    let v = BigInt::from(rho.denom_pow2());
    if rho.is_dyadic() {
        let bits = bit_positions_desc(rho.numer());
        let s = BigInt::from(bits.len());
        let a_s = BigInt::from(*bits.last().expect("positive numerator"));
        let exact = BigRational::from_integer(a_s - BigInt::from(m.clone()) + s - BigInt::one() - v);
        return Ok((exact.clone(), exact));
    }
    let shape = expansion_shape(rho)?;
    let s = shape.q_bits.len();
    if m <= &BigUint::from(s) {
        // Tail still inside the integer-part bits: materialize directly.
        let m_small = m.to_u64().expect("m <= s fits in u64");
        let value = eta(rho, m_small)?;
        let (num, den) = ratio_to_parts(&value);
        let (lo, hi) = log2_bounds(&num, &den, frac_bits);
        return Ok((lo, hi));
    }
    let t = shape.r_bits.len();
    let u = m - BigUint::from(s);
    let big_t = BigUint::from(t);
    let j_blocks = &u / &big_t;
    let p = (&u % &big_t).to_usize().expect("remainder below t");
    // eta = 2^{-(J+1)d - v} * (W + r / (2^d - 1)) with W the unconsumed bits
    // of the current period block.
    let w: BigUint = shape.r_bits[p..]
        .iter()
        .fold(BigUint::zero(), |acc, &rb| acc + (BigUint::one() << rb));
    let pow = (BigUint::one() << shape.d) - BigUint::one();
    let bracket_num = w * &pow + &shape.r;
    let (lo, hi) = log2_bounds(&bracket_num, &pow, frac_bits);
    let shift = BigRational::from_integer(
        -(BigInt::from(j_blocks + BigUint::one()) * BigInt::from(shape.d)) - v,
    );
    Ok((lo + shift.clone(), hi + shift))
}

/// The maximum integer expressible as a sum of at most `m` powers of two
/// (repetitions allowed, exponents nonnegative) that is strictly below
/// `rho * 2^n`, found greedily largest-power-first. The greedy choice is
/// optimal: any larger power would overshoot the prefix it extends.
pub fn greedy_max_power_sum(rho: &Threshold, n: u32, m: u64) -> ExactCount {
    assert!(m >= 1, "greedy_max_power_sum requires m >= 1");
    // Work against rho * 2^n = a * 2^n / (2^v * b) in integers:
    // sum + 2^e < target  <=>  (sum + 2^e) * denom < a * 2^n.
    let denom = rho.denom();
    let target_num = rho.numer() << n;
    let mut sum = BigUint::zero();
    let mut terms = 0u64;
    for _ in 0..m {
        // Largest e >= 0 with (sum + 2^e) * denom < target_num.
        let room = &target_num - &sum * &denom; // > 0 while sum < target
        if room <= denom {
            break; // even 2^0 overshoots
        }
        // 2^e < room / denom: start from the bit-length estimate, adjust.
        let mut e = room.bits() - denom.bits();
        loop {
            let candidate = (&sum + (BigUint::one() << e)) * &denom;
            if candidate < target_num {
                // Try one larger; keep the largest that still fits.
                let bigger = (&sum + (BigUint::one() << (e + 1))) * &denom;
                if bigger < target_num {
                    e += 1;
                    continue;
                }
                break;
            }
            debug_assert!(e > 0, "room check guarantees 2^0 fits");
            e -= 1;
        }
        sum += BigUint::one() << e;
        terms += 1;
    }
    ExactCount::with_term_bound(sum, terms)
}

pub(crate) fn ratio_to_parts(r: &BigRational) -> (BigUint, BigUint) {
    assert!(r.is_positive(), "logarithms need positive arguments");
    (
        r.numer().magnitude().clone(),
        r.denom().magnitude().clone(),
    )
}

/// Certified rational bounds `(lo, hi)` with `lo <= log2(num/den) <= hi`
/// and `hi - lo <= 2^{-frac_bits+2}` (wider only if the bit extraction hits
/// an undecidable straddle, which the caller handles by asking for more
/// bits). Pure integer arithmetic, directed rounding.
pub(crate) fn log2_bounds(num: &BigUint, den: &BigUint, frac_bits: u32) -> (BigRational, BigRational) {
    assert!(!num.is_zero() && !den.is_zero());
    // Integer part: e with 2^e <= num/den < 2^{e+1}.
    let mut e = num.bits() as i64 - den.bits() as i64;
    loop {
        let fits = if e >= 0 { (den << e as u64) <= *num } else { den <= &(num << (-e) as u64) };
        let next = if e + 1 >= 0 {
            (den << (e + 1) as u64) <= *num
        } else {
            den <= &(num << (-(e + 1)) as u64)
        };
        match (fits, next) {
            (true, false) => break,
            (true, true) => e += 1,
            (false, _) => e -= 1,
        }
    }
    // Mantissa x = num/den / 2^e in [1, 2), as a P-bit fixed-point interval.
    let p = frac_bits + 8;
    let one = BigUint::one() << p;
    let two = &one << 1u8;
    let scaled_num = if e >= 0 { num << p } else { num << (p as u64 + (-e) as u64) };
    let scaled_den = if e >= 0 { den << e as u64 } else { den.clone() };
    let mut lo = &scaled_num / &scaled_den; // floor
    let mut hi = &lo + BigUint::one(); // ceil or floor+1
    let mut frac_lo = BigRational::zero();
    let mut width = BigRational::one();
    for _ in 0..frac_bits {
        width /= BigInt::from(2);
        // Square both ends with directed rounding back to P bits.
        lo = (&lo * &lo) >> p;
        hi = ((&hi * &hi) >> p) + BigUint::one();
        if lo >= two {
            frac_lo += &width;
            lo >>= 1;
            hi = (&hi >> 1) + BigUint::one();
        } else if hi <= two {
            // bit is 0 for both ends; nothing to add
        } else {
            // Straddling 2: the bit is undecided; stop with the bracket.
            break;
        }
        if hi >= &one << 2u8 {
            // Upper bound drifted past 4; squaring again would be wrong.
            break;
        }
    }
    let base = BigRational::from_integer(BigInt::from(e)) + frac_lo;
    (base.clone(), base + width * BigInt::from(2))
}

/// Decides `(num/den)^e < rhs` for `0 < num/den` and `rhs > 0`, with `e`
/// possibly far too large to materialize the power. Tries certified log
/// bounds at increasing precision, then exact arithmetic if the numbers
/// stay manageable. `None` means undecidable within resource limits (the
/// schedules translate that into a budget error).
pub(crate) fn pow_fraction_lt(
    num: &BigUint,
    den: &BigUint,
    e: &BigUint,
    rhs: &BigRational,
) -> Option<bool> {
    assert!(!num.is_zero() && !den.is_zero() && rhs.is_positive());
    if e.is_zero() {
        return Some(&BigRational::one() < rhs);
    }
    let e_big = BigRational::from_integer(BigInt::from(e.clone()));
    let (rhs_num, rhs_den) = ratio_to_parts(rhs);
    for bits in [64u32, 256, 1024, 4096] {
        let (base_lo, base_hi) = log2_bounds(num, den, bits);
        let (rhs_lo, rhs_hi) = log2_bounds(&rhs_num, &rhs_den, bits);
        if &e_big * &base_hi < rhs_lo {
            return Some(true);
        }
        if &e_big * &base_lo >= rhs_hi {
            return Some(false);
        }
    }
    // Exact fallback: (num/den)^e vs rhs, guarded by result size.
    let result_bits = e_big * BigRational::from_integer(BigInt::from(num.bits().max(den.bits())));
    if result_bits > BigRational::from_integer(BigInt::from(4_000_000u64)) {
        return None;
    }
    let e_small = e.to_u64()?;
    let pn = num.pow(e_small as u32);
    let pd = den.pow(e_small as u32);
    Some(BigRational::new(pn.into(), pd.into()) < *rhs)
}

/// Smallest `e >= 1` with `(num/den)^e < rhs`, for a base strictly between
/// 0 and 1 (so the predicate is upward closed). `Err(cap)` reports that the
/// answer exceeds `cap`; `None` inside means undecidable.
pub(crate) fn smallest_exponent_lt(
    num: &BigUint,
    den: &BigUint,
    rhs: &BigRational,
    cap: u64,
) -> Option<Result<u64, u64>> {
    assert!(num < den, "base must be < 1");
    if !rhs.is_positive() {
        return Some(Err(cap));
    }
    if rhs >= &BigRational::one() {
        return Some(Ok(1)).filter(|_| num < den); // base < 1 <= rhs
    }
    let holds = |e: u64| pow_fraction_lt(num, den, &BigUint::from(e), rhs);
    match holds(cap)? {
        false => return Some(Err(cap)),
        true => {}
    }
    let (mut lo, mut hi) = (0u64, cap); // predicate false at 0 (1 < rhs < 1 is false)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match holds(mid)? {
            true => hi = mid,
            false => lo = mid,
        }
    }
    Some(Ok(hi))
}

/// `ceil(mult * ln(x))` for rational `x > 1`, by interval refinement. Exact:
/// the result is certified by rational bounds on both `ln(x)` and `ln(2)`.
pub(crate) fn ceil_mul_ln(mult: u64, x: &BigRational) -> u64 {
    assert!(x > &BigRational::one());
    let (num, den) = ratio_to_parts(x);
    let mult_big = BigRational::from_integer(BigInt::from(mult));
    for bits in [64u32, 128, 256, 512, 1024] {
        let (log_lo, log_hi) = log2_bounds(&num, &den, bits);
        let (ln2_lo, ln2_hi) = ln2_bounds(bits);
        // ln(x) = log2(x) * ln(2); all factors positive.
        let lo = &mult_big * &log_lo * ln2_lo;
        let hi = &mult_big * &log_hi * ln2_hi;
        let ceil_lo = lo.ceil().to_integer();
        let ceil_hi = hi.ceil().to_integer();
        if ceil_lo == ceil_hi {
            return ceil_lo.to_u64().expect("ceiling fits u64 at desk scale");
        }
    }
    unreachable!("interval refinement failed to separate ceil(mult*ln(x))");
}

/// Certified rational bounds on `ln 2 = 2 * atanh(1/3)`, via the series
/// `2 * sum_{j>=0} (1/3)^{2j+1} / (2j+1)` with an explicit geometric tail
/// bound.
fn ln2_bounds(frac_bits: u32) -> (BigRational, BigRational) {
    let third = BigRational::new(BigInt::one(), BigInt::from(3));
    let third_sq = &third * &third;
    let mut term = third.clone(); // (1/3)^{2j+1}
    let mut sum = BigRational::zero();
    let mut j = 0u32;
    let eps = BigRational::new(BigInt::one(), BigInt::one() << frac_bits);
    loop {
        sum += &term / BigInt::from(2 * j + 1);
        term *= &third_sq;
        j += 1;
        // Tail <= term/(2j+1) * 1/(1 - 1/9) = term * 9 / (8 * (2j+1)).
        let tail = &term * BigRational::new(BigInt::from(9), BigInt::from(8 * (2 * j + 1)));
        if tail < eps {
            let lo = &sum * BigInt::from(2);
            let hi = (&sum + tail) * BigInt::from(2);
            return (lo, hi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn thr(p: u64, q: u64) -> Threshold {
        Threshold::from_u64(p, q).unwrap()
    }

    fn ratio(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn ord2_examples() {
        let ord = |b: u64| ord2(&BigUint::from(b)).unwrap();
        assert_eq!(ord(1), 1);
        assert_eq!(ord(7), 3);
        // independent brute loop for b = 9
        let mut d = 1;
        while (2u64.pow(d) - 1) % 9 != 0 {
            d += 1;
        }
        assert_eq!(ord(9), d as u64);
        assert_eq!(ord(9), 6);
        assert!(ord2(&BigUint::from(4u8)).is_err());
    }

    #[test]
    fn expansion_examples() {
        let e = binary_expansion(&thr(3, 7), 4).unwrap();
        assert_eq!(e.exponents(), &[-2, -3, -5, -6]);
        assert_eq!(
            e.period(),
            Some(&ExpansionPeriod { preperiod_len: 0, period_len: 3, terms_per_period: 2 })
        );
        // prefix sum sanity: 1/4 + 1/8 + 1/32 + 1/64 = 27/64 < 3/7
        assert_eq!(e.partial_sum(), ratio(27, 64));
        assert!(e.partial_sum() < thr(3, 7).as_rational());

        let e = binary_expansion(&thr(1, 2), 5).unwrap();
        assert_eq!(e.exponents(), &[-1]);
        assert!(e.is_complete());

        let e = binary_expansion(&thr(5, 8), 2).unwrap();
        assert_eq!(e.exponents(), &[-1, -3]);
    }

    #[test]
    fn expansion_prefix_sums_approach_from_below() {
        for (p, q) in [(3u64, 7u64), (1, 3), (2, 3), (1, 7), (5, 8), (113, 504)] {
            let rho = thr(p, q);
            let e = binary_expansion(&rho, 12).unwrap();
            let mut sum = BigRational::zero();
            let mut last = BigRational::from_i64(-1).unwrap();
            for &exp in e.exponents() {
                sum += pow2_ratio(exp);
                assert!(sum > last);
                if e.is_complete() {
                    assert!(sum <= rho.as_rational());
                } else {
                    assert!(sum < rho.as_rational());
                }
                last = sum.clone();
            }
        }
    }

    #[test]
    fn eta_closed_forms() {
        // dyadic: eta = rho / 2^m
        for v in 1..=4u64 {
            let rho = thr(1, 1 << v);
            for m in 1..=6u64 {
                assert_eq!(
                    eta(&rho, m).unwrap(),
                    rho.as_rational() / BigRational::from_integer(BigInt::one() << m)
                );
            }
        }
        // rho = 3/7: eta = rho/2^{3m/2} for even m, (5/3)rho/2^{ceil(3m/2)} odd
        let rho = thr(3, 7);
        for m in 1..=8u64 {
            let expect = if m % 2 == 0 {
                rho.as_rational() / pow2_ratio((3 * m / 2) as i64)
            } else {
                ratio(5, 3) * rho.as_rational() / pow2_ratio((3 * m).div_ceil(2) as i64)
            };
            assert_eq!(eta(&rho, m).unwrap(), expect);
        }
        // rho = 1/(2^v - 1): eta = rho / 2^{mv}
        for v in 2..=4u64 {
            let rho = thr(1, (1 << v) - 1);
            for m in 1..=5u64 {
                assert_eq!(eta(&rho, m).unwrap(), rho.as_rational() / pow2_ratio((m * v) as i64));
            }
        }
        // rho = 1/2 - 1/2^v with m >= v-1: eta = 1/2^{m+2}
        for v in 3..=5u64 {
            let rho = thr((1 << (v - 1)) - 1, 1 << v);
            for m in (v - 1)..=(v + 3) {
                assert_eq!(eta(&rho, m).unwrap(), pow2_ratio(-((m + 2) as i64)));
            }
        }
    }

    #[test]
    fn eta_lower_bound_in_full_denominator() {
        // eta >= rho / 2^{(q-1)m} with q the reduced full denominator
        for (p, q) in [(1u64, 2u64), (1, 4), (3, 4), (1, 8), (3, 7), (5, 8), (1, 3), (2, 3), (1, 7)]
        {
            let rho = thr(p, q);
            for m in 1..=6u64 {
                let bound = rho.as_rational() / pow2_ratio(((q - 1) * m) as i64);
                assert!(eta(&rho, m).unwrap() >= bound, "rho={p}/{q} m={m}");
            }
        }
    }

    #[test]
    fn eta_log2_bounds_agree_with_exact() {
        for (p, q) in [(1u64, 2u64), (3, 7), (1, 3), (5, 8), (1, 7), (2, 3)] {
            let rho = thr(p, q);
            for m in 1..=24u64 {
                let exact = eta(&rho, m).unwrap();
                let (num, den) = ratio_to_parts(&exact);
                let (exact_lo, exact_hi) = log2_bounds(&num, &den, 80);
                let (lo, hi) = eta_log2_bounds(&rho, &BigUint::from(m), 80).unwrap();
                assert!(lo <= exact_hi, "rho={p}/{q} m={m}");
                assert!(hi >= exact_lo, "rho={p}/{q} m={m}");
            }
        }
    }

    #[test]
    fn eta_log2_bounds_huge_m() {
        // For rho = 1/2 the tail is exact: log2(eta) = -1 - m.
        let rho = thr(1, 2);
        let m = BigUint::from(10u8).pow(40);
        let (lo, hi) = eta_log2_bounds(&rho, &m, 64).unwrap();
        let expect = BigRational::from_integer(BigInt::from(-1) - BigInt::from(m));
        assert_eq!(lo, expect);
        assert_eq!(hi, expect);
        // Non-dyadic huge m: bounds must stay ordered and finite.
        let rho = thr(3, 7);
        let m = BigUint::from(10u8).pow(30);
        let (lo, hi) = eta_log2_bounds(&rho, &m, 64).unwrap();
        assert!(lo <= hi);
        // roughly -3m/2
        let approx = BigRational::from_integer(BigInt::from(-3) * BigInt::from(m) / BigInt::from(2));
        assert!((&lo - &approx).abs() < BigRational::from_integer(BigInt::from(10)));
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_max_power_sum(&thr(1, 2), 3, 1).value(), &BigUint::from(2u8));
        assert_eq!(greedy_max_power_sum(&thr(3, 7), 4, 2).value(), &BigUint::from(6u8));
        assert_eq!(greedy_max_power_sum(&thr(5, 8), 4, 3).value(), &BigUint::from(9u8));
    }

    /// All sums of at most `m` powers of two (nonnegative exponents up to
    /// `max_exp`), for the exhaustive cross-checks.
    fn all_power_sums(m: u64, max_exp: u32) -> Vec<u64> {
        let mut sums = vec![0u64];
        for _ in 0..m {
            let mut next = sums.clone();
            for &s in &sums {
                for e in 0..=max_exp {
                    next.push(s + (1u64 << e));
                }
            }
            next.sort_unstable();
            next.dedup();
            sums = next;
        }
        sums
    }

    #[test]
    fn greedy_dominates_exhaustively() {
        for (p, q) in [(1u64, 2u64), (3, 7), (5, 8), (1, 3)] {
            let rho = thr(p, q);
            for n in 1..=10u32 {
                for m in 1..=4u64 {
                    let greedy = greedy_max_power_sum(&rho, n, m);
                    let best = all_power_sums(m, n + 1)
                        .into_iter()
                        .filter(|&s| {
                            rho.compare_scaled(&BigUint::from(s), n) == std::cmp::Ordering::Less
                        })
                        .max()
                        .unwrap();
                    assert_eq!(greedy.value(), &BigUint::from(best), "rho={p}/{q} n={n} m={m}");
                }
            }
        }
    }

    #[test]
    fn gap_property_small_slice() {
        // every <= m-power sum below rho*2^n is <= (rho - eta)*2^n
        for (p, q) in [(1u64, 2u64), (3, 7), (1, 3), (5, 8)] {
            let rho = thr(p, q);
            for m in 1..=4u64 {
                let gap = rho.as_rational() - eta(&rho, m).unwrap();
                for n in 1..=10u32 {
                    let cutoff = crate::formula::ratio_shl(gap.clone(), n);
                    for s in all_power_sums(m, n + 1) {
                        if rho.compare_scaled(&BigUint::from(s), n) == std::cmp::Ordering::Less {
                            assert!(
                                BigRational::from_integer(BigInt::from(s)) <= cutoff,
                                "rho={p}/{q} m={m} n={n} N={s}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn greedy_meets_eta_with_equality_when_dyadic() {
        for (p, q, dyadic) in [(1u64, 2u64, true), (5, 8, true), (3, 7, false), (1, 3, false)] {
            let rho = thr(p, q);
            for m in 1..=4u64 {
                let eta_val = eta(&rho, m).unwrap();
                // n large enough that the greedy expansion fits entirely
                for n in 12..=14u32 {
                    let greedy = greedy_max_power_sum(&rho, n, m);
                    let gap = rho.scaled(n)
                        - BigRational::from_integer(BigInt::from(greedy.value().clone()));
                    let eta_scaled = crate::formula::ratio_shl(eta_val.clone(), n);
                    assert!(gap >= eta_scaled, "rho={p}/{q} m={m} n={n}");
                    if dyadic {
                        assert_eq!(gap, eta_scaled, "rho={p}/{q} m={m} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn log2_bounds_brackets_known_values() {
        // midpoint agrees with f64 log2 to well under the f64 error, and
        // the certified width is tight
        let check = |num: u64, den: u64| {
            let (lo, hi) = log2_bounds(&BigUint::from(num), &BigUint::from(den), 64);
            assert!(lo <= hi, "log2({num}/{den})");
            let width = &hi - &lo;
            assert!(width <= pow2_ratio(-60), "log2({num}/{den}) width");
            let mid = (&lo + &hi) / BigInt::from(2);
            let mid_f = mid.to_f64().unwrap();
            let expect = (num as f64).log2() - (den as f64).log2();
            assert!((mid_f - expect).abs() < 1e-12, "log2({num}/{den}): {mid_f} vs {expect}");
        };
        check(8, 1);
        check(1, 1);
        check(3, 1);
        check(1, 3);
        check(7, 8);
        check(1000000, 999999);
        // exact bracketing at an integer point
        let (lo, hi) = log2_bounds(&BigUint::from(8u8), &BigUint::one(), 64);
        let three = BigRational::from_integer(BigInt::from(3));
        assert!(lo <= three && three <= hi);
    }

    #[test]
    fn pow_fraction_lt_matches_exact() {
        let half = ratio(1, 2);
        // (7/8)^6 < 1/2? 117649/262144 < 1/2 yes
        assert_eq!(
            pow_fraction_lt(&BigUint::from(7u8), &BigUint::from(8u8), &BigUint::from(6u8), &half),
            Some(true)
        );
        assert_eq!(
            pow_fraction_lt(&BigUint::from(7u8), &BigUint::from(8u8), &BigUint::from(5u8), &half),
            Some(false)
        );
        // huge exponent decided by log bounds
        let tiny = BigRational::new(BigInt::one(), BigInt::one() << 100);
        let e = BigUint::from(10u8).pow(30);
        assert_eq!(
            pow_fraction_lt(&BigUint::from(3u8), &BigUint::from(4u8), &e, &tiny),
            Some(true)
        );
    }

    #[test]
    fn smallest_exponent_examples() {
        let rho_half = ratio(1, 2);
        // smallest z with (7/8)^z < 1/2 is 6
        assert_eq!(
            smallest_exponent_lt(&BigUint::from(7u8), &BigUint::from(8u8), &rho_half, 1 << 20),
            Some(Ok(6))
        );
        // smallest z with (15/16)^z < 1/2 is 11
        assert_eq!(
            smallest_exponent_lt(&BigUint::from(15u8), &BigUint::from(16u8), &rho_half, 1 << 20),
            Some(Ok(11))
        );
        // (7/8)^z < 3/7: z = 7
        assert_eq!(
            smallest_exponent_lt(&BigUint::from(7u8), &BigUint::from(8u8), &ratio(3, 7), 1 << 20),
            Some(Ok(7))
        );
        // beyond cap
        let tiny = BigRational::new(BigInt::one(), BigInt::one() << 4000);
        assert_eq!(
            smallest_exponent_lt(&BigUint::from(3u8), &BigUint::from(4u8), &tiny, 1000),
            Some(Err(1000))
        );
    }

    #[test]
    fn ceil_mul_ln_examples() {
        // 72 ln 2 = 49.907...; 72 ln 4 = 99.81...; 72 ln(8/7) = 9.61...
        assert_eq!(ceil_mul_ln(72, &ratio(2, 1)), 50);
        assert_eq!(ceil_mul_ln(72, &ratio(4, 1)), 100);
        assert_eq!(ceil_mul_ln(72, &ratio(8, 7)), 10);
        assert_eq!(ceil_mul_ln(1, &ratio(100, 1)), 5); // ln 100 = 4.605...
    }
}
