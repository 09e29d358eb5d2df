//! Every nonzero residue mod N generates a subgroup containing some `N/p`.

use serde::{Deserialize, Serialize};

use super::HorseshoeError;

/// Distinct prime factors of `n`, in increasing order.
pub fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut primes = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            primes.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        primes.push(n);
    }
    primes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueCoverEntry {
    pub n: usize,
    pub x: usize,
    pub prime: usize,
}

impl ResidueCoverEntry {
    pub fn holds(&self, modulus: usize) -> bool {
        (self.n * self.x) % modulus == modulus / self.prime && modulus.is_multiple_of(self.prime)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueCoverSolution {
    pub modulus: usize,
    /// Entry `i` is for `n = i + 1`.
    pub table: Vec<ResidueCoverEntry>,
}

impl ResidueCoverSolution {
    pub fn entry(&self, n: usize) -> Option<&ResidueCoverEntry> {
        n.checked_sub(1).and_then(|i| self.table.get(i))
    }
}

/// For each `n` in `1..N`, the smallest `x` in `1..N` with `n·x ≡ N/p (mod N)`
/// for some prime `p | N` (smallest such prime on ties).
pub fn solve_residue_cover(modulus: usize) -> Result<ResidueCoverSolution, HorseshoeError> {
    if modulus < 2 {
        return Err(HorseshoeError::ModulusTooSmall(modulus));
    }
    let primes = prime_factors(modulus);
    let table = (1..modulus)
        .map(|n| {
            (1..modulus)
                .find_map(|x| {
                    let r = (n * x) % modulus;
                    primes.iter().find(|&&p| r == modulus / p).map(|&prime| ResidueCoverEntry { n, x, prime })
                })
                .expect("every nonzero residue reaches a minimal subgroup")
        })
        .collect();
    Ok(ResidueCoverSolution { modulus, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let e = *solve_residue_cover(4).unwrap().entry(2).unwrap();
        assert_eq!((e.x, e.prime), (1, 2));
        let e = *solve_residue_cover(6).unwrap().entry(4).unwrap();
        assert_eq!((e.x, e.prime), (2, 3));
        let e = *solve_residue_cover(12).unwrap().entry(5).unwrap();
        assert_eq!((e.x, e.prime), (6, 2));
        assert_eq!(solve_residue_cover(1), Err(HorseshoeError::ModulusTooSmall(1)));
    }

    #[test]
    fn primes() {
        assert_eq!(prime_factors(12), vec![2, 3]);
        assert_eq!(prime_factors(97), vec![97]);
        assert_eq!(prime_factors(1), Vec::<usize>::new());
    }
}
