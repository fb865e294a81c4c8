//! Exact rational scalars. Everything in this crate computes over `Q`;
//! there is no floating point anywhere.

use num::bigint::BigInt;
pub use num::rational::BigRational as Q;
use num::traits::{One, Zero};

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_ratio(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn is_zero(x: &Q) -> bool {
    x.is_zero()
}

pub fn is_one(x: &Q) -> bool {
    x.is_one()
}

/// `(-1)^e` as a rational.
pub fn sign(e: usize) -> Q {
    if e % 2 == 0 {
        q(1)
    } else {
        q(-1)
    }
}

/// Renders `p/q`, or just `p` for integers.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `INT` or `INT/POSINT`.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d <= BigInt::from(0) {
            return None;
        }
        Some(Q::new(n, d))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(Q::from_integer(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_is_exact_and_reduced() {
        let a = q_ratio(1, 3) + q_ratio(1, 6);
        assert_eq!(a, q_ratio(1, 2));
        assert!(a.denom() > &BigInt::from(0));
        let b = q_ratio(2, 4);
        assert_eq!(b, q_ratio(1, 2));
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_q("-3/4"), Some(q_ratio(-3, 4)));
        assert_eq!(parse_q("7"), Some(q(7)));
        assert_eq!(parse_q("1/0"), None);
        assert_eq!(fmt_q(&q_ratio(-3, 4)), "-3/4");
        assert_eq!(fmt_q(&q(5)), "5");
    }
}
