use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact probability value.
pub type Prob = BigRational;

/// Parses `"num/den"` or a plain integer / decimal string into an exact rational.
pub fn parse_prob(text: &str) -> Option<Prob> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    parse_decimal(text)
}

/// Parses a decimal literal such as `0.25`, `.5` or `1` exactly.
pub fn parse_decimal(text: &str) -> Option<Prob> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = BigRational::new(num, den);
    Some(if neg { -value } else { value })
}

/// Renders a rational as `num/den` (always with a denominator).
pub fn format_prob(p: &Prob) -> String {
    format!("{}/{}", p.numer(), p.denom())
}

pub fn prob_to_f64(p: &Prob) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

/// Sparse probability distribution over state indices.
///
/// Construction does not check normalization; `ICGS` validation reports
/// rows that do not sum to one or that carry non-positive mass.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Distribution {
    support: BTreeMap<usize, Prob>,
}

impl Distribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dirac(state: usize) -> Self {
        let mut d = Self::new();
        d.insert(state, Prob::one());
        d
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, Prob)>>(pairs: I) -> Self {
        let mut d = Self::new();
        for (s, p) in pairs {
            d.add(s, p);
        }
        d
    }

    /// Sets the mass of `state`, replacing any previous value.
    pub fn insert(&mut self, state: usize, p: Prob) {
        self.support.insert(state, p);
    }

    /// Adds mass to `state`.
    pub fn add(&mut self, state: usize, p: Prob) {
        let slot = self.support.entry(state).or_insert_with(Prob::zero);
        *slot += p;
    }

    pub fn get(&self, state: usize) -> Option<&Prob> {
        self.support.get(&state)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Prob)> + '_ {
        self.support.iter().map(|(s, p)| (*s, p))
    }

    /// States carrying strictly positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.support
            .iter()
            .filter(|(_, p)| p.is_positive())
            .map(|(s, _)| *s)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total(&self) -> Prob {
        self.support.values().fold(Prob::zero(), |acc, p| acc + p)
    }

    pub fn is_normalized(&self) -> bool {
        self.total().is_one() && self.support.values().all(|p| p.is_positive())
    }

    pub fn is_dirac(&self) -> bool {
        self.support.len() == 1 && self.support.values().all(|p| p.is_one())
    }

    pub fn to_f64_pairs(&self) -> Vec<(usize, f64)> {
        self.support
            .iter()
            .map(|(s, p)| (*s, prob_to_f64(p)))
            .collect()
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (s, p)) in self.support.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{s}: {p}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Prob {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_prob("3/4"), Some(r(3, 4)));
        assert_eq!(parse_prob("0.25"), Some(r(1, 4)));
        assert_eq!(parse_prob(".5"), Some(r(1, 2)));
        assert_eq!(parse_prob("1"), Some(r(1, 1)));
        assert_eq!(parse_prob("1/0"), None);
        assert_eq!(parse_prob("abc"), None);
        assert_eq!(parse_prob("."), None);
    }

    #[test]
    fn formats_with_denominator() {
        assert_eq!(format_prob(&r(3, 4)), "3/4");
        assert_eq!(format_prob(&r(2, 2)), "1/1");
    }

    #[test]
    fn normalization() {
        let d = Distribution::from_pairs([(0, r(1, 3)), (1, r(2, 3))]);
        assert!(d.is_normalized());
        let half = Distribution::from_pairs([(0, r(1, 2))]);
        assert!(!half.is_normalized());
        assert_eq!(half.total(), r(1, 2));
        let zero_mass = Distribution::from_pairs([(0, r(1, 1)), (1, r(0, 1))]);
        assert!(!zero_mass.is_normalized());
        assert_eq!(zero_mass.support().collect::<Vec<_>>(), vec![0]);
    }
}
