//! Coefficient rings and scalars.
//!
//! All arithmetic is exact: integers use arbitrary precision, prime-field
//! elements are kept reduced to `0..p`, and rationals are kept in lowest
//! terms. Equality of scalars is therefore structural equality of canonical
//! forms.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, Zero};

use crate::error::{Error, Result};

/// Coefficient ring: the integers, a prime field, or the rationals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ring {
    Integers,
    PrimeField(u64),
    Rationals,
}

/// An exact scalar. Integer and prime-field values use `Int`; rationals use
/// `Rat` and are always reduced.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Int(BigInt),
    Rat(BigRational),
}

impl Scalar {
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Int(n) => n.is_zero(),
            Scalar::Rat(q) => q.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Int(n) => n.is_one(),
            Scalar::Rat(q) => q.is_one(),
        }
    }

    /// The integer value, if this scalar is an integer (including rationals
    /// with denominator one).
    pub fn as_int(&self) -> Option<BigInt> {
        match self {
            Scalar::Int(n) => Some(n.clone()),
            Scalar::Rat(q) if q.denom().is_one() => Some(q.numer().clone()),
            Scalar::Rat(_) => None,
        }
    }
}

impl std::fmt::Display for Scalar {
    fn fmt(&self, w: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scalar::Int(n) => write!(w, "{n}"),
            Scalar::Rat(q) => {
                if q.denom().is_one() {
                    write!(w, "{}", q.numer())
                } else {
                    write!(w, "{}/{}", q.numer(), q.denom())
                }
            }
        }
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl Ring {
    /// Parses `"Z"`, `"Zp:<p>"` (p prime), or `"Q"`.
    pub fn parse(s: &str) -> Result<Ring> {
        match s {
            "Z" => Ok(Ring::Integers),
            "Q" => Ok(Ring::Rationals),
            _ => {
                let p = s
                    .strip_prefix("Zp:")
                    .and_then(|t| t.parse::<u64>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown ring {s:?}")))?;
                if !is_prime(p) {
                    return Err(Error::Parse(format!("{p} is not prime")));
                }
                Ok(Ring::PrimeField(p))
            }
        }
    }

    pub fn is_field(&self) -> bool {
        !matches!(self, Ring::Integers)
    }

    pub fn zero(&self) -> Scalar {
        match self {
            Ring::Rationals => Scalar::Rat(BigRational::zero()),
            _ => Scalar::Int(BigInt::zero()),
        }
    }

    pub fn one(&self) -> Scalar {
        match self {
            Ring::Rationals => Scalar::Rat(BigRational::one()),
            _ => Scalar::Int(BigInt::one()),
        }
    }

    pub fn from_i64(&self, n: i64) -> Scalar {
        self.from_bigint(BigInt::from(n))
    }

    pub fn from_bigint(&self, n: BigInt) -> Scalar {
        match self {
            Ring::Integers => Scalar::Int(n),
            Ring::PrimeField(p) => Scalar::Int(n.mod_floor(&BigInt::from(*p))),
            Ring::Rationals => Scalar::Rat(BigRational::from_integer(n)),
        }
    }

    pub fn from_ratio(&self, numer: BigInt, denom: BigInt) -> Result<Scalar> {
        match self {
            Ring::Rationals => {
                if denom.is_zero() {
                    return Err(Error::Parse("zero denominator".into()));
                }
                Ok(Scalar::Rat(BigRational::new(numer, denom)))
            }
            _ => Err(Error::Parse(format!(
                "fractional scalar not valid over {self}"
            ))),
        }
    }

    fn wrap(&self, n: BigInt) -> Scalar {
        match self {
            Ring::Integers => Scalar::Int(n),
            Ring::PrimeField(p) => Scalar::Int(n.mod_floor(&BigInt::from(*p))),
            Ring::Rationals => unreachable!("rational arithmetic stays in Rat"),
        }
    }

    pub fn add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (a, b) {
            (Scalar::Int(x), Scalar::Int(y)) => self.wrap(x + y),
            (Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(x + y),
            _ => panic!("mixed scalar representations"),
        }
    }

    pub fn sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (a, b) {
            (Scalar::Int(x), Scalar::Int(y)) => self.wrap(x - y),
            (Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(x - y),
            _ => panic!("mixed scalar representations"),
        }
    }

    pub fn mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (a, b) {
            (Scalar::Int(x), Scalar::Int(y)) => self.wrap(x * y),
            (Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(x * y),
            _ => panic!("mixed scalar representations"),
        }
    }

    pub fn neg(&self, a: &Scalar) -> Scalar {
        match a {
            Scalar::Int(x) => self.wrap(-x),
            Scalar::Rat(x) => Scalar::Rat(-x),
        }
    }

    /// Multiplicative inverse, if the element is a unit.
    pub fn inv(&self, a: &Scalar) -> Option<Scalar> {
        match (self, a) {
            (Ring::Integers, Scalar::Int(n)) => {
                if n.is_one() || (-n).is_one() {
                    Some(Scalar::Int(n.clone()))
                } else {
                    None
                }
            }
            (Ring::PrimeField(p), Scalar::Int(n)) => {
                if n.is_zero() {
                    return None;
                }
                let p = BigInt::from(*p);
                let e = n.extended_gcd(&p);
                debug_assert!(e.gcd.is_one());
                Some(Scalar::Int(e.x.mod_floor(&p)))
            }
            (Ring::Rationals, Scalar::Rat(q)) => {
                if q.is_zero() {
                    None
                } else {
                    Some(Scalar::Rat(q.recip()))
                }
            }
            _ => panic!("scalar does not belong to this ring"),
        }
    }

    /// Checks that a scalar is in the canonical representation for this ring.
    pub fn contains(&self, a: &Scalar) -> bool {
        match (self, a) {
            (Ring::Integers, Scalar::Int(_)) => true,
            (Ring::PrimeField(p), Scalar::Int(n)) => {
                !n.is_negative() && *n < BigInt::from(*p)
            }
            (Ring::Rationals, Scalar::Rat(_)) => true,
            _ => false,
        }
    }
}

impl std::fmt::Display for Ring {
    fn fmt(&self, w: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ring::Integers => write!(w, "Z"),
            Ring::PrimeField(p) => write!(w, "Zp:{p}"),
            Ring::Rationals => write!(w, "Q"),
        }
    }
}
