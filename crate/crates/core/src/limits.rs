use crate::error::Error;

/// Caps on the exponential parts of the search. Every decider that can blow
/// up takes a `&Limits` and reports [`Error::ResourceLimit`] instead of
/// running unbounded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Limits {
    /// Homomorphisms materialized by a single enumeration.
    pub homs: usize,
    /// Closed-null assignments tried by an RCN-cover search.
    pub sigma: usize,
    /// Subsets visited by subset enumerations (annotation minimization,
    /// sub-minimality filtering).
    pub subsets: usize,
    /// Null partitions visited by image enumeration.
    pub partitions: usize,
    /// Atom count of a materialized power.
    pub power_atoms: usize,
    /// Bijections tried when matching closed nulls.
    pub bijections: usize,
    /// Total functions visited by the brute-force oracles.
    pub brute: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            homs: 1_000_000,
            sigma: 1_000_000,
            subsets: 1 << 16,
            partitions: 200_000,
            power_atoms: 100_000,
            bijections: 40_320,
            brute: 20_000_000,
        }
    }
}

impl Limits {
    pub(crate) fn check(count: usize, cap: usize, what: &'static str) -> Result<(), Error> {
        if count > cap {
            Err(Error::ResourceLimit { what, cap })
        } else {
            Ok(())
        }
    }
}
