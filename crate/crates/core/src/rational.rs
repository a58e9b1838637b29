//! Exact arbitrary-precision rationals.
//!
//! [`Rational`] wraps [`num_rational::BigRational`] and fixes the text
//! conventions used everywhere in the crate: input is either `p/q`, an
//! integer, or a finite decimal string (`30.94` is `1547/50`, never a binary
//! float), and output is always lowest-terms `p/q`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// An exact fraction, always stored in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: BigInt, denom: BigInt) -> Option<Self> {
        if denom.is_zero() {
            None
        } else {
            Some(Rational(BigRational::new(numer, denom)))
        }
    }

    /// Small-integer constructor for constants. Panics on a zero denominator.
    pub fn frac_of(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_integer<T: Into<BigInt>>(n: T) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    /// Caller guarantees `gcd(numer, denom) = 1` and `denom > 0`.
    pub(crate) fn from_reduced(numer: BigInt, denom: BigInt) -> Self {
        debug_assert!(denom.is_positive());
        debug_assert!(numer.gcd(&denom).is_one());
        Rational(BigRational::new_raw(numer, denom))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn half() -> Self {
        Rational::frac_of(1, 2)
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    pub fn into_inner(self) -> BigRational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// Largest integer not above `self`.
    pub fn floor_int(&self) -> BigInt {
        self.numer().div_floor(self.denom())
    }

    pub fn floor(&self) -> Rational {
        Rational::from_integer(self.floor_int())
    }

    /// `x - floor(x)`, in `[0, 1)` for every `x` including negatives.
    pub fn frac(&self) -> Rational {
        let r = self.numer().mod_floor(self.denom());
        Rational::from_reduced(r, self.denom().clone())
    }

    pub fn abs(&self) -> Rational {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Option<Rational> {
        if self.is_zero() {
            None
        } else {
            Some(Rational(self.0.recip()))
        }
    }

    pub fn pow(&self, exp: i32) -> Rational {
        Rational(num_traits::Pow::pow(&self.0, exp))
    }

    /// Bit length of the numerator's magnitude.
    pub fn numer_bits(&self) -> u64 {
        self.numer().bits()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// The exact value of a finite binary float (`0.1` becomes `3602879701896397/36028797018963968`).
    pub fn from_f64_exact(x: f64) -> Option<Rational> {
        BigRational::from_float(x).map(Rational)
    }

    /// Positional decimal rendering rounded half-up to `digits` fractional digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        let scale = BigInt::from(10u32).pow(digits as u32);
        let neg = self.is_negative();
        let mag = self.abs();
        // round(|x| * 10^d) = floor(|x| * 10^d + 1/2)
        let scaled = (mag.0 * BigRational::from_integer(scale.clone())
            + BigRational::new(1.into(), 2.into()))
        .floor()
        .to_integer();
        let (int_part, frac_part) = scaled.div_rem(&scale);
        let mut out = String::new();
        if neg && !scaled.is_zero() {
            out.push('-');
        }
        out.push_str(&int_part.to_string());
        if digits > 0 {
            let f = frac_part.to_string();
            out.push('.');
            for _ in f.len()..digits {
                out.push('0');
            }
            out.push_str(&f);
        }
        out
    }

    /// Positional rendering with `sig` significant digits, rounded half-up.
    pub fn to_significant(&self, sig: usize) -> String {
        if self.is_zero() || sig == 0 {
            return self.to_decimal(sig.saturating_sub(1));
        }
        let mag = self.abs();
        // exact decimal exponent e with 10^e <= |x| < 10^(e+1)
        let mut e = mag.to_f64().log10().floor() as i64;
        let ten = Rational::from_integer(10);
        while ten.pow(e as i32) > mag {
            e -= 1;
        }
        while ten.pow(e as i32 + 1) <= mag {
            e += 1;
        }
        let decimals = (sig as i64 - 1 - e).max(0) as usize;
        let s = self.to_decimal(decimals);
        // rounding may carry into a new leading digit (9.9996 -> 10.000)
        let digits = s.chars().filter(|c| c.is_ascii_digit()).skip_while(|&c| c == '0').count();
        if digits > sig && decimals > 0 {
            self.to_decimal(decimals - 1)
        } else {
            s
        }
    }

    /// The value of the binary double nearest to `self`.
    pub fn nearest_binary(&self) -> Option<Rational> {
        Rational::from_f64_exact(self.to_f64())
    }

    pub fn min(self, other: Rational) -> Rational {
        std::cmp::min(self, other)
    }

    pub fn max(self, other: Rational) -> Rational {
        std::cmp::max(self, other)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

fn parse_int(s: &str, whole: &str) -> Result<BigInt, ParseRationalError> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseRationalError::Invalid(whole.to_string()));
    }
    BigInt::from_str(s).map_err(|_| ParseRationalError::Invalid(whole.to_string()))
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let s = raw.trim();
        if s.is_empty() {
            return Err(ParseRationalError::Empty);
        }
        if let Some((p, q)) = s.split_once('/') {
            let p = parse_int(p.trim(), raw)?;
            let q = parse_int(q.trim(), raw)?;
            return Rational::new(p, q).ok_or_else(|| ParseRationalError::ZeroDenominator(raw.to_string()));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(ParseRationalError::Invalid(raw.to_string()));
            }
            let (neg, int) = match int.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, int.strip_prefix('+').unwrap_or(int)),
            };
            if !int.bytes().all(|b| b.is_ascii_digit()) {
                return Err(ParseRationalError::Invalid(raw.to_string()));
            }
            let mut digits = String::with_capacity(int.len() + frac.len());
            digits.push_str(int);
            digits.push_str(frac);
            let mut numer = BigInt::from_str(&digits).map_err(|_| ParseRationalError::Invalid(raw.to_string()))?;
            if neg {
                numer = -numer;
            }
            let denom = BigInt::from(10u32).pow(frac.len() as u32);
            return Ok(Rational(BigRational::new(numer, denom)));
        }
        Ok(Rational::from_integer(parse_int(s, raw)?))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

impl PartialEq<i64> for Rational {
    fn eq(&self, other: &i64) -> bool {
        self.is_integer() && *self.numer() == BigInt::from(*other)
    }
}

impl PartialOrd<i64> for Rational {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        Some(self.0.cmp(&BigRational::from_integer((*other).into())))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($trait::$method(self.0, rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational($trait::$method(self.0, &rhs.0))
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($trait::$method(&self.0, rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational($trait::$method(&self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

/// `2^n` as a big integer.
pub fn pow2(n: u32) -> BigInt {
    BigInt::one() << n as usize
}

/// `3^n` as a big integer.
pub fn pow3(n: u32) -> BigInt {
    num_traits::pow(BigInt::from(3u32), n as usize)
}
