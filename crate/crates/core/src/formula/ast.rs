use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{prob_to_f64, Prob};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        }
    }

    /// `>`/`>=` are lower bounds: the coalition wants the probability high.
    pub fn is_lower_bound(self) -> bool {
        matches!(self, Relation::Gt | Relation::Ge)
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Gt | Relation::Lt)
    }

    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::Le => value <= threshold,
            Relation::Lt => value < threshold,
            Relation::Gt => value > threshold,
            Relation::Ge => value >= threshold,
        }
    }
}

/// `⋈ d` with `d` an exact rational in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProbabilityBound {
    pub relation: Relation,
    #[serde(with = "prob_string")]
    pub threshold: Prob,
}

impl ProbabilityBound {
    pub fn threshold_f64(&self) -> f64 {
        prob_to_f64(&self.threshold)
    }
}

mod prob_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::model::{format_prob, parse_prob, Prob};

    pub fn serialize<S: Serializer>(p: &Prob, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_prob(p))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Prob, D::Error> {
        let text = String::deserialize(d)?;
        parse_prob(&text).ok_or_else(|| serde::de::Error::custom(format!("bad rational {text:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateFormula {
    True,
    False,
    Atom(String),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
    Implies(Box<StateFormula>, Box<StateFormula>),
    StrategicProb {
        coalition: Vec<String>,
        bound: ProbabilityBound,
        path: Box<PathFormula>,
    },
    StrategicPlain {
        coalition: Vec<String>,
        path: Box<PathFormula>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathFormula {
    Next(Box<StateFormula>),
    Until(Box<StateFormula>, Box<StateFormula>),
    Release(Box<StateFormula>, Box<StateFormula>),
    Finally(Box<StateFormula>),
    Globally(Box<StateFormula>),
}

impl StateFormula {
    pub fn atom(name: &str) -> Self {
        StateFormula::Atom(name.to_string())
    }

    pub fn not(f: StateFormula) -> Self {
        StateFormula::Not(Box::new(f))
    }

    pub fn and(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::Implies(Box::new(a), Box::new(b))
    }

    /// Atomic propositions mentioned, excluding `true`/`false`.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            StateFormula::True | StateFormula::False => {}
            StateFormula::Atom(p) => {
                out.insert(p.clone());
            }
            StateFormula::Not(f) => f.collect_atoms(out),
            StateFormula::And(a, b) | StateFormula::Or(a, b) | StateFormula::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            StateFormula::StrategicProb { path, .. }
            | StateFormula::StrategicPlain { path, .. } => {
                for f in path.operands() {
                    f.collect_atoms(out);
                }
            }
        }
    }

    /// Agents named in any coalition.
    pub fn agents(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let StateFormula::StrategicProb { coalition, .. }
            | StateFormula::StrategicPlain { coalition, .. } = f
            {
                out.extend(coalition.iter().cloned());
            }
        });
        out
    }

    /// True when some subformula carries a probability bound.
    pub fn has_probabilistic(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, StateFormula::StrategicProb { .. }));
        found
    }

    fn visit(&self, cb: &mut impl FnMut(&StateFormula)) {
        cb(self);
        match self {
            StateFormula::True | StateFormula::False | StateFormula::Atom(_) => {}
            StateFormula::Not(f) => f.visit(cb),
            StateFormula::And(a, b) | StateFormula::Or(a, b) | StateFormula::Implies(a, b) => {
                a.visit(cb);
                b.visit(cb);
            }
            StateFormula::StrategicProb { path, .. }
            | StateFormula::StrategicPlain { path, .. } => {
                for f in path.operands() {
                    f.visit(cb);
                }
            }
        }
    }
}

impl PathFormula {
    pub fn operands(&self) -> Vec<&StateFormula> {
        match self {
            PathFormula::Next(f) | PathFormula::Finally(f) | PathFormula::Globally(f) => vec![f],
            PathFormula::Until(a, b) | PathFormula::Release(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl fmt::Display for ProbabilityBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.relation, format_threshold(&self.threshold))
    }
}

/// Exact decimal when the denominator only has factors 2 and 5, else `n/d`.
pub fn format_threshold(p: &Prob) -> String {
    use num_bigint::BigInt;
    use num_traits::{One, Zero};

    let mut den = p.denom().clone();
    let mut twos = 0usize;
    let mut fives = 0usize;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", p.numer(), p.denom());
    }
    let digits = twos.max(fives);
    let scaled = p * Prob::from_integer(num_traits::pow(BigInt::from(10), digits));
    let n = scaled.to_integer();
    if digits == 0 {
        return n.to_string();
    }
    let neg = n < BigInt::zero();
    let s = if neg { (-n).to_string() } else { n.to_string() };
    let s = format!("{s:0>width$}", width = digits + 1);
    let (int, frac) = s.split_at(s.len() - digits);
    format!("{}{int}.{frac}", if neg { "-" } else { "" })
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFormula::True => f.write_str("true"),
            StateFormula::False => f.write_str("false"),
            StateFormula::Atom(p) => f.write_str(p),
            StateFormula::Not(g) => write!(f, "!{}", Operand(g)),
            StateFormula::And(a, b) => write!(f, "({a} & {b})"),
            StateFormula::Or(a, b) => write!(f, "({a} | {b})"),
            StateFormula::Implies(a, b) => write!(f, "({a} -> {b})"),
            StateFormula::StrategicProb {
                coalition,
                bound,
                path,
            } => {
                write!(f, "<<{}>>^{{{bound}}} {path}", coalition.join(","))
            }
            StateFormula::StrategicPlain { coalition, path } => {
                write!(f, "<<{}>> {path}", coalition.join(","))
            }
        }
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFormula::Next(g) => write!(f, "X {}", Operand(g)),
            PathFormula::Finally(g) => write!(f, "F {}", Operand(g)),
            PathFormula::Globally(g) => write!(f, "G {}", Operand(g)),
            PathFormula::Until(a, b) => write!(f, "({} U {})", Operand(a), Operand(b)),
            PathFormula::Release(a, b) => write!(f, "({} R {})", Operand(a), Operand(b)),
        }
    }
}

/// Prints a state formula in operand position: strategic formulas are
/// parenthesized so their path body does not capture what follows.
struct Operand<'a>(&'a StateFormula);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            StateFormula::StrategicProb { .. } | StateFormula::StrategicPlain { .. } => {
                write!(f, "({})", self.0)
            }
            other => write!(f, "{other}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn thresholds_print_exactly() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(format_threshold(&r(9, 10)), "0.9");
        assert_eq!(format_threshold(&r(1, 4)), "0.25");
        assert_eq!(format_threshold(&r(1, 1)), "1");
        assert_eq!(format_threshold(&r(0, 1)), "0");
        assert_eq!(format_threshold(&r(1, 3)), "1/3");
        assert_eq!(format_threshold(&r(1, 20)), "0.05");
    }

    #[test]
    fn relation_semantics() {
        assert!(Relation::Ge.holds(0.5, 0.5));
        assert!(!Relation::Gt.holds(0.5, 0.5));
        assert!(Relation::Le.holds(0.5, 0.5));
        assert!(!Relation::Lt.holds(0.5, 0.5));
        assert!(Relation::Ge.is_lower_bound());
        assert!(!Relation::Le.is_lower_bound());
    }
}
