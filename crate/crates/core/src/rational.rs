//! Exact rational helpers shared by the chain and bounds code.

use num::{BigInt, BigRational, BigUint, One, ToPrimitive, Zero};
use serde::Serialize;

pub type Q = BigRational;

pub fn ratio(numer: i64, denom: i64) -> Q {
    Q::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn from_biguint(v: BigUint) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn pow(base: &Q, exp: u32) -> Q {
    let mut out = Q::one();
    for _ in 0..exp {
        out *= base;
    }
    out
}

pub fn binomial(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut out = BigUint::one();
    for i in 0..r {
        out = out * (n - i) / (i + 1);
    }
    out
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `"p/q"` with the sign on the numerator; integers print without `/1`.
pub fn format_ratio(q: &Q) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `"p/q"` or an integer.
pub fn parse_ratio(text: &str) -> Option<Q> {
    let text = text.trim();
    match text.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            (!q.is_zero()).then(|| Q::new(p, q))
        }
        None => text.parse::<BigInt>().ok().map(Q::from_integer),
    }
}

/// JSON shape of an exact value: `{"exact": "3/13", "decimal": 0.2307...}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exact {
    pub exact: String,
    pub decimal: f64,
}

impl From<&Q> for Exact {
    fn from(q: &Q) -> Self {
        Exact { exact: format_ratio(q), decimal: to_f64(q) }
    }
}
