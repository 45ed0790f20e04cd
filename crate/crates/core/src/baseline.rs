//! Non-contextual local assignments.
//!
//! Each photon's result depends only on its own setting: six ±1 values
//! `a[photon][setting]`. Exhaustive search over all 64 shows none of them
//! reproduces the four GHZ parity constraints.

use std::fmt;

use crate::polarization::{mermin_combination, Context, Outcome, Setting, SystemOutcome};

/// Six dichotomic values, packed as bits (set bit = -1).
///
/// Bit order from most significant: a1[X], a1[Y], a2[X], a2[Y], a3[X], a3[Y].
/// Index 0 is the all-+1 assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalAssignment(u8);

impl LocalAssignment {
    pub const COUNT: usize = 64;

    pub fn from_index(index: u8) -> Option<LocalAssignment> {
        (usize::from(index) < Self::COUNT).then_some(LocalAssignment(index))
    }

    /// `values[photon][setting]`, each ±1.
    pub fn from_values(values: [[i8; 2]; 3]) -> LocalAssignment {
        let mut bits = 0u8;
        for photon in values {
            for v in photon {
                bits = (bits << 1) | u8::from(v < 0);
            }
        }
        LocalAssignment(bits)
    }

    pub fn index(&self) -> u8 {
        self.0
    }

    /// `photon` is 0-based.
    pub fn value(&self, photon: usize, setting: Setting) -> i8 {
        let slot = 2 * photon + (setting == Setting::Y) as usize;
        if (self.0 >> (5 - slot)) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn values(&self) -> [[i8; 2]; 3] {
        [0, 1, 2].map(|p| Setting::ALL.map(|s| self.value(p, s)))
    }

    /// `a1[s1] · a2[s2] · a3[s3]`.
    pub fn predicted_product(&self, context: Context) -> i8 {
        context
            .settings()
            .iter()
            .enumerate()
            .map(|(photon, s)| self.value(photon, *s))
            .product()
    }

    /// The outcome tokens this assignment produces under `context`.
    pub fn outcome(&self, context: Context) -> SystemOutcome {
        let s = context.settings();
        SystemOutcome([0, 1, 2].map(|p| Outcome::from_parity(s[p], self.value(p, s[p]))))
    }

    /// How many of the four GHZ parity constraints hold.
    pub fn constraints_satisfied(&self) -> usize {
        GHZ_CONSTRAINTS
            .iter()
            .filter(|(c, target)| self.predicted_product(*c) == *target)
            .count()
    }

    pub fn satisfies_ghz_constraints(&self) -> bool {
        self.constraints_satisfied() == GHZ_CONSTRAINTS.len()
    }

    /// `P(xxx) - P(xyy) - P(yxy) - P(yyx)` for this deterministic assignment.
    pub fn mermin(&self) -> i32 {
        let p = Context::MERMIN.map(|c| f64::from(self.predicted_product(c)));
        mermin_combination(p) as i32
    }
}

impl fmt::Display for LocalAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = |v: i8| if v > 0 { '+' } else { '-' };
        let v = self.values();
        write!(
            f,
            "a1=({}x,{}y) a2=({}x,{}y) a3=({}x,{}y)",
            sign(v[0][0]),
            sign(v[0][1]),
            sign(v[1][0]),
            sign(v[1][1]),
            sign(v[2][0]),
            sign(v[2][1])
        )
    }
}

/// Parity products the GHZ state fixes with certainty.
pub const GHZ_CONSTRAINTS: [(Context, i8); 4] = [
    (Context::XXX, 1),
    (Context::XYY, -1),
    (Context::YXY, -1),
    (Context::YYX, -1),
];

/// All 64 assignments in canonical binary order.
pub fn enumerate_assignments() -> Vec<LocalAssignment> {
    (0..LocalAssignment::COUNT as u8).map(LocalAssignment).collect()
}

pub fn satisfies_ghz_constraints(a: &LocalAssignment) -> bool {
    a.satisfies_ghz_constraints()
}

/// Summary of the exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchSummary {
    pub assignments: usize,
    pub satisfying: usize,
    pub best_constraints: usize,
    pub mermin_max: i32,
    pub mermin_min: i32,
    /// First assignment (canonical order) attaining `mermin_max`.
    pub best_assignment: LocalAssignment,
}

/// Runs the exhaustive search over `assignments`.
pub fn search(assignments: &[LocalAssignment]) -> SearchSummary {
    let best_assignment = *assignments
        .iter()
        .max_by_key(|a| (a.mermin(), std::cmp::Reverse(a.index())))
        .expect("non-empty enumeration");
    SearchSummary {
        assignments: assignments.len(),
        satisfying: assignments.iter().filter(|a| a.satisfies_ghz_constraints()).count(),
        best_constraints: assignments.iter().map(|a| a.constraints_satisfied()).max().unwrap_or(0),
        mermin_max: best_assignment.mermin(),
        mermin_min: assignments.iter().map(|a| a.mermin()).min().unwrap_or(0),
        best_assignment,
    }
}

/// Largest Mermin value any non-contextual assignment reaches.
pub fn max_mermin_lhv() -> f64 {
    f64::from(search(&enumerate_assignments()).mermin_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_complete_and_ordered() {
        let all = enumerate_assignments();
        assert_eq!(all.len(), 64);
        assert_eq!(all[0].values(), [[1, 1], [1, 1], [1, 1]]);
        let mut dedup = all.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 64);
        for a in &all {
            assert_eq!(LocalAssignment::from_values(a.values()), *a);
        }
        assert!(LocalAssignment::from_index(64).is_none());
    }

    #[test]
    fn products() {
        let ones = LocalAssignment::from_index(0).unwrap();
        for c in Context::ALL {
            assert_eq!(ones.predicted_product(c), 1);
        }
        let a = LocalAssignment::from_values([[1, 1], [1, 1], [-1, 1]]);
        assert_eq!(a.predicted_product(Context::YYX), -1);
        assert_eq!(a.predicted_product(Context::YYY), 1);
        assert!(!ones.satisfies_ghz_constraints());
        assert_eq!(ones.constraints_satisfied(), 1);
    }

    #[test]
    fn outcome_tokens_follow_parity() {
        let ones = LocalAssignment::from_index(0).unwrap();
        assert_eq!(ones.outcome(Context::YYX), "R R H'".parse().unwrap());
        let minus = LocalAssignment::from_index(63).unwrap();
        assert_eq!(minus.outcome(Context::XYX), "V' L V'".parse().unwrap());
    }

    #[test]
    fn search_results() {
        let s = search(&enumerate_assignments());
        assert_eq!(s.assignments, 64);
        assert_eq!(s.satisfying, 0);
        assert_eq!(s.best_constraints, 3);
        assert_eq!(s.mermin_max, 2);
        assert_eq!(s.mermin_min, -2);
        assert_eq!(max_mermin_lhv(), 2.0);
        assert_eq!(s.best_assignment.mermin(), 2);
    }
}
