//! Helpers on arbitrary-precision rationals: construction, p-adic valuation
//! and reduction into residue rings `Z/p^N`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `p`-adic valuation of a nonzero integer.
pub fn int_valuation(n: &BigInt, p: u64) -> u32 {
    debug_assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// `p`-adic valuation; `None` for zero.
pub fn valuation(q: &Rational, p: u64) -> Option<i64> {
    if q.is_zero() {
        return None;
    }
    Some(int_valuation(q.numer(), p) as i64 - int_valuation(q.denom(), p) as i64)
}

/// True when `v_p(q) >= k` (zero counts as infinitely divisible).
pub fn divisible_by_power(q: &Rational, p: u64, k: i64) -> bool {
    match valuation(q, p) {
        None => true,
        Some(v) => v >= k,
    }
}

pub fn is_p_integral(q: &Rational, p: u64) -> bool {
    divisible_by_power(q, p, 0)
}

pub fn is_p_unit(q: &Rational, p: u64) -> bool {
    valuation(q, p) == Some(0)
}

/// Reduce a `p`-integral rational into `Z/m` where `m` is a power of `p`.
/// Returns `None` if the denominator is divisible by `p`.
pub fn reduce_mod(q: &Rational, p: u64, m: u64) -> Option<u64> {
    let mb = BigInt::from(m);
    let num = q.numer().mod_floor(&mb).to_u64().unwrap();
    let den = q.denom().mod_floor(&mb).to_u64().unwrap();
    if den % p == 0 {
        return None;
    }
    let inv = inv_mod(den, m)?;
    Some(mul_mod(num, inv, m))
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let g = (a as i128).extended_gcd(&(m as i128));
    if g.gcd != 1 {
        return None;
    }
    Some(g.x.rem_euclid(m as i128) as u64)
}

pub fn pow_u64(base: u64, exp: u32) -> u64 {
    base.checked_pow(exp).expect("modulus overflow")
}

/// Least common multiple of denominators in `values`.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

/// Parse `"3"`, `"-2"` or `"1/2"`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Rational::new(n, d))
    } else {
        Some(Rational::from_integer(s.parse().ok()?))
    }
}

pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valuations() {
        assert_eq!(valuation(&rat(12), 2), Some(2));
        assert_eq!(valuation(&rat_frac(3, 8), 2), Some(-3));
        assert_eq!(valuation(&rat(0), 5), None);
        assert!(is_p_unit(&rat_frac(2, 3), 5));
    }

    #[test]
    fn reduction() {
        // 1/2 mod 9 = 5
        assert_eq!(reduce_mod(&rat_frac(1, 2), 3, 9), Some(5));
        assert_eq!(reduce_mod(&rat(-1), 3, 9), Some(8));
        assert_eq!(reduce_mod(&rat_frac(1, 3), 3, 9), None);
    }

    #[test]
    fn parse_roundtrip() {
        let q = parse_rational("-6/4").unwrap();
        assert_eq!(format_rational(&q), "-3/2");
        assert_eq!(parse_rational("x"), None);
    }
}
