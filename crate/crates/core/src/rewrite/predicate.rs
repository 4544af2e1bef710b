use std::collections::BTreeSet;

use crate::bigraph::{Bigraph, LinkTarget};
use crate::matching::{count_occurrences, MatchError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Comparison {
    fn holds(self, lhs: usize, rhs: usize) -> bool {
        match self {
            Comparison::Lt => lhs < rhs,
            Comparison::Le => lhs <= rhs,
            Comparison::Eq => lhs == rhs,
            Comparison::Ge => lhs >= rhs,
            Comparison::Gt => lhs > rhs,
        }
    }
}

/// Invariant predicates over a state.
#[derive(Clone, Debug)]
pub enum Predicate {
    /// The pattern has at least one occurrence.
    Occurs(Bigraph),
    /// Occurrence count compared against a bound.
    Count(Bigraph, Comparison, usize),
    /// The nodes labelled `.0` and `.1` share a link.
    NameLinked(String, String),
}

pub fn check_predicate(state: &Bigraph, pred: &Predicate) -> Result<bool, MatchError> {
    match pred {
        Predicate::Occurs(p) => Ok(count_occurrences(state, p)? > 0),
        Predicate::Count(p, cmp, k) => Ok(cmp.holds(count_occurrences(state, p)?, *k)),
        Predicate::NameLinked(x, y) => {
            let links_of = |label: &str| -> BTreeSet<LinkTarget> {
                state
                    .nodes()
                    .filter(|n| n.label.as_deref() == Some(label))
                    .flat_map(|n| n.ports.iter().cloned())
                    .collect()
            };
            Ok(!links_of(x).is_disjoint(&links_of(y)))
        }
    }
}
