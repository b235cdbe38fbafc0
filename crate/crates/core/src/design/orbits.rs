//! Spin patterns modulo cyclic rotation of the propeller ring.

use std::collections::BTreeSet;

use crate::wrench::Spin;

/// Signs `w_1..w_6` of the six propellers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinPattern(pub [Spin; 6]);

impl SpinPattern {
    pub fn from_signs(w: [i64; 6]) -> crate::Result<Self> {
        let mut spins = [Spin::Positive; 6];
        for (s, &v) in spins.iter_mut().zip(&w) {
            *s = Spin::from_sign(v)?;
        }
        Ok(Self(spins))
    }

    pub fn signs(&self) -> [i64; 6] {
        self.0.map(|s| s.sign() as i64)
    }

    /// Pattern shifted left by `k` positions.
    pub fn rotated(&self, k: usize) -> Self {
        let mut w = self.0;
        w.rotate_left(k % 6);
        Self(w)
    }

    /// Lexicographically smallest rotation (with `-1 < +1`).
    pub fn canonical(&self) -> Self {
        (0..6)
            .map(|k| self.rotated(k))
            .min()
            .expect("six rotations")
    }

    /// Index `0..64` reading `+1` as a set bit, first propeller most significant.
    pub fn code(&self) -> u8 {
        self.0
            .iter()
            .fold(0u8, |acc, s| (acc << 1) | u8::from(*s == Spin::Positive))
    }

    pub fn from_code(code: u8) -> Self {
        Self(std::array::from_fn(|i| {
            if code >> (5 - i) & 1 == 1 {
                Spin::Positive
            } else {
                Spin::Negative
            }
        }))
    }
}

/// Canonical representatives of all 64 sign vectors under rotation, in
/// ascending order. There are 14 of them.
pub fn spin_orbits() -> Vec<SpinPattern> {
    (0u8..64)
        .map(|c| SpinPattern::from_code(c).canonical())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourteen_orbits() {
        assert_eq!(spin_orbits().len(), 14);
    }

    #[test]
    fn all_equal_patterns_are_distinct_orbits() {
        let plus = SpinPattern([Spin::Positive; 6]);
        let minus = SpinPattern([Spin::Negative; 6]);
        assert_ne!(plus.canonical(), minus.canonical());
        let orbits = spin_orbits();
        assert!(orbits.contains(&plus));
        assert!(orbits.contains(&minus));
    }

    #[test]
    fn single_flip_positions_share_an_orbit() {
        let a = SpinPattern::from_signs([1, -1, 1, 1, 1, 1]).unwrap();
        let b = SpinPattern::from_signs([1, 1, -1, 1, 1, 1]).unwrap();
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn orbits_cover_every_sign_vector_once() {
        let orbits = spin_orbits();
        let mut seen = BTreeSet::new();
        for rep in &orbits {
            assert_eq!(rep.canonical(), *rep);
            for k in 0..6 {
                seen.insert(rep.rotated(k).code());
            }
        }
        assert_eq!(seen.len(), 64);
        for code in 0u8..64 {
            let w = SpinPattern::from_code(code);
            assert_eq!(w.code(), code);
            assert_eq!(orbits.iter().filter(|r| **r == w.canonical()).count(), 1);
        }
    }

    #[test]
    fn ordering_puts_split_before_alternating() {
        let orbits = spin_orbits();
        let split = SpinPattern::from_signs([-1, -1, -1, 1, 1, 1]).unwrap();
        let alt = SpinPattern::from_signs([-1, 1, -1, 1, -1, 1]).unwrap();
        let i = orbits.iter().position(|o| *o == split).unwrap();
        let j = orbits.iter().position(|o| *o == alt).unwrap();
        assert_eq!((i, j), (4, 9));
    }
}
