//! Characters of the groups `G_m^n`: residue tuples with zero sum.

use std::collections::BTreeSet;

use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, rep0, units};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Character {
    pub m: u32,
    pub entries: Vec<u32>,
}

impl Character {
    /// Builds a character, reducing entries mod `m` and checking the zero-sum condition.
    pub fn new(m: u32, entries: &[i64]) -> Result<Self> {
        if m < 3 || m % 2 == 0 {
            return Err(Error::InvalidCharacter(format!("modulus {m} must be odd and >= 3")));
        }
        if entries.len() < 3 {
            return Err(Error::InvalidCharacter(format!("length {} < 3", entries.len())));
        }
        let entries: Vec<u32> = entries.iter().map(|&a| rep0(a, m)).collect();
        let s: u64 = entries.iter().map(|&a| a as u64).sum();
        if s % m as u64 != 0 {
            return Err(Error::InvalidCharacter(format!("entries sum to {s}, not 0 mod {m}")));
        }
        Ok(Self { m, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Multiplies every entry by `u`.
    pub fn scale(&self, u: u32) -> Self {
        Self {
            m: self.m,
            entries: self.entries.iter().map(|&a| ((a as u64 * u as u64) % self.m as u64) as u32).collect(),
        }
    }
}

/// `γ_i = (i, i, -2i)`.
pub fn gamma_char(m: u32, i: i64) -> Result<Character> {
    if rep0(i, m) == 0 {
        return Err(Error::InvalidIndex(i, m));
    }
    Character::new(m, &[i, i, -2 * i])
}

pub fn concat(a: &Character, b: &Character) -> Result<Character> {
    if a.m != b.m {
        return Err(Error::ModulusMismatch(a.m, b.m));
    }
    let mut entries = a.entries.clone();
    entries.extend_from_slice(&b.entries);
    Ok(Character { m: a.m, entries })
}

/// `Σ [t a_i] / m` with `[x]` in `[0, m-1]`.
pub fn weight(a: &Character, t: u32) -> Result<Rational> {
    if gcd(t as u64, a.m as u64) != 1 {
        return Err(Error::NotAUnit(t as i64, a.m as u64));
    }
    let s: u64 = a.scale(t).entries.iter().map(|&x| x as u64).sum();
    Ok(Rational::from((s, a.m as u64)))
}

/// Integer form `m * weight`, used where exactness and speed matter.
pub(crate) fn weight_numerator(m: u32, entries: &[u32], t: u32) -> u64 {
    entries.iter().map(|&x| (x as u64 * t as u64) % m as u64).sum()
}

pub fn is_tate_character(a: &Character) -> bool {
    if a.entries.iter().any(|&x| x == 0) {
        return false;
    }
    let w1 = weight_numerator(a.m, &a.entries, 1);
    units(a.m).into_iter().all(|t| weight_numerator(a.m, &a.entries, t) == w1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterOrbit {
    pub m: u32,
    pub members: BTreeSet<Character>,
    pub canonical: Character,
}

impl CharacterOrbit {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

pub fn orbit(a: &Character) -> CharacterOrbit {
    let members: BTreeSet<Character> = units(a.m).into_iter().map(|u| a.scale(u)).collect();
    let canonical = members.iter().next().cloned().expect("orbit contains a");
    CharacterOrbit { m: a.m, members, canonical }
}
