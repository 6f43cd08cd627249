//! Exact rational scalars and their conversions to and from `f64`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Exact conversion of a finite float.
pub fn from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::BadRational(x.to_string()))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Parses `"p/q"`, `"p"` or a decimal literal such as `"0.25"` or `"1e-3"`.
pub fn parse(s: &str) -> Result<Q> {
    let t = s.trim();
    let bad = || Error::BadRational(s.to_string());
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Ok(n) = t.parse::<BigInt>() {
        return Ok(Q::from_integer(n));
    }
    parse_decimal(t).ok_or_else(bad)
}

fn parse_decimal(t: &str) -> Option<Q> {
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = Q::from_integer(digits);
    if scale >= 0 {
        r *= Q::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Q::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

/// Canonical text form: `"p/q"`, or `"p"` for integers.
pub fn format(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Scales a rational vector to the primitive integer vector on the same ray
/// whose first nonzero entry is positive. Zero vectors are returned unchanged.
pub fn primitive_integer(v: &[Q]) -> Vec<Q> {
    let lcm = v
        .iter()
        .filter(|x| !x.is_zero())
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(lcm.clone())).to_integer()).collect();
    let gcd = ints
        .iter()
        .filter(|x| !x.is_zero())
        .fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if gcd.is_zero() {
        return v.to_vec();
    }
    let sign = match ints.iter().find(|x| !x.is_zero()) {
        Some(first) if first.is_negative() => -BigInt::one(),
        _ => BigInt::one(),
    };
    ints.into_iter()
        .map(|x| Q::from_integer(sign.clone() * x / gcd.clone()))
        .collect()
}

/// Largest denominator appearing in the slice.
pub fn max_denominator<'a>(xs: impl IntoIterator<Item = &'a Q>) -> BigInt {
    xs.into_iter()
        .map(|x| x.denom().clone())
        .max()
        .unwrap_or_else(BigInt::one)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!(parse("3/6").unwrap(), q_frac(1, 2));
        assert_eq!(parse(" -4 ").unwrap(), q(-4));
        assert_eq!(parse("0.25").unwrap(), q_frac(1, 4));
        assert_eq!(parse("-1.5e2").unwrap(), q(-150));
        assert_eq!(parse("2e-3").unwrap(), q_frac(1, 500));
        assert_eq!(parse(".5").unwrap(), q_frac(1, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn format_round_trips() {
        for s in ["1/3", "-7", "0", "22/7"] {
            assert_eq!(format(&parse(s).unwrap()), s);
        }
    }

    #[test]
    fn primitive_form() {
        let v = vec![q_frac(-1, 2), q(1), q_frac(-1, 2)];
        assert_eq!(primitive_integer(&v), vec![q(1), q(-2), q(1)]);
        let z = vec![q(0), q(0)];
        assert_eq!(primitive_integer(&z), z);
    }

    #[test]
    fn float_conversion_is_exact() {
        let x = 0.1_f64;
        assert_eq!(to_f64(&from_f64(x).unwrap()), x);
        assert!(from_f64(f64::NAN).is_err());
    }
}
