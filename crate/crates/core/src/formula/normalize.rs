use super::ast::{PathFormula, StateFormula};

/// Rewrites derived operators: `F φ` becomes `true U φ`, `G φ` becomes
/// `false R φ` and `φ -> ψ` becomes `!φ | ψ`. Idempotent.
pub fn normalize(f: &StateFormula) -> StateFormula {
    match f {
        StateFormula::True | StateFormula::False | StateFormula::Atom(_) => f.clone(),
        StateFormula::Not(g) => StateFormula::not(normalize(g)),
        StateFormula::And(a, b) => StateFormula::and(normalize(a), normalize(b)),
        StateFormula::Or(a, b) => StateFormula::or(normalize(a), normalize(b)),
        StateFormula::Implies(a, b) => {
            StateFormula::or(StateFormula::not(normalize(a)), normalize(b))
        }
        StateFormula::StrategicProb {
            coalition,
            bound,
            path,
        } => StateFormula::StrategicProb {
            coalition: coalition.clone(),
            bound: bound.clone(),
            path: Box::new(normalize_path(path)),
        },
        StateFormula::StrategicPlain { coalition, path } => StateFormula::StrategicPlain {
            coalition: coalition.clone(),
            path: Box::new(normalize_path(path)),
        },
    }
}

fn normalize_path(p: &PathFormula) -> PathFormula {
    let n = |f: &StateFormula| Box::new(normalize(f));
    match p {
        PathFormula::Next(f) => PathFormula::Next(n(f)),
        PathFormula::Until(a, b) => PathFormula::Until(n(a), n(b)),
        PathFormula::Release(a, b) => PathFormula::Release(n(a), n(b)),
        PathFormula::Finally(f) => PathFormula::Until(Box::new(StateFormula::True), n(f)),
        PathFormula::Globally(f) => PathFormula::Release(Box::new(StateFormula::False), n(f)),
    }
}

/// True when only `X`/`U`/`R` path operators and no implications remain.
pub fn is_normalized(f: &StateFormula) -> bool {
    match f {
        StateFormula::True | StateFormula::False | StateFormula::Atom(_) => true,
        StateFormula::Not(g) => is_normalized(g),
        StateFormula::And(a, b) | StateFormula::Or(a, b) => is_normalized(a) && is_normalized(b),
        StateFormula::Implies(..) => false,
        StateFormula::StrategicProb { path, .. } | StateFormula::StrategicPlain { path, .. } => {
            match &**path {
                PathFormula::Finally(_) | PathFormula::Globally(_) => false,
                p => p.operands().into_iter().all(is_normalized),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    #[test]
    fn derived_operators() {
        assert_eq!(
            normalize(&parse("<<A>> F p").unwrap()),
            parse("<<A>> true U p").unwrap()
        );
        assert_eq!(
            normalize(&parse("<<A>> G p").unwrap()),
            parse("<<A>> false R p").unwrap()
        );
        let next = parse("<<A>> X p").unwrap();
        assert_eq!(normalize(&next), next);
        assert_eq!(
            normalize(&parse("a -> b").unwrap()),
            parse("!a | b").unwrap()
        );
    }

    #[test]
    fn normalizes_nested_operands() {
        let f = parse("<<A>>^{>=0.5} F (<<B>> G q)").unwrap();
        let n = normalize(&f);
        assert!(is_normalized(&n));
        assert_eq!(n, parse("<<A>>^{>=0.5} true U (<<B>> false R q)").unwrap());
    }
}
