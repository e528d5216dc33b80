use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Parity of the spherical-harmonic embedding of degree `l`, i.e. `(-1)^l`.
    pub fn natural(l: u32) -> Self {
        if l.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn product(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Irreducible representation of O(3): a degree and a parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Irrep {
    pub degree: u32,
    pub parity: Parity,
}

impl Irrep {
    pub const fn new(degree: u32, parity: Parity) -> Self {
        Self { degree, parity }
    }

    /// The irrep carried by degree-`l` spherical harmonics.
    pub fn natural(degree: u32) -> Self {
        Self::new(degree, Parity::natural(degree))
    }

    pub fn dim(&self) -> usize {
        2 * self.degree as usize + 1
    }

    pub fn is_scalar(&self) -> bool {
        self.degree == 0 && self.parity == Parity::Even
    }
}

impl fmt::Display for Irrep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.parity {
            Parity::Even => 'e',
            Parity::Odd => 'o',
        };
        write!(f, "{}{}", self.degree, p)
    }
}

impl FromStr for Irrep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Precondition(format!("cannot parse irrep `{s}`"));
        let (deg, par) = s.split_at(s.len().checked_sub(1).ok_or_else(bad)?);
        let degree: u32 = deg.parse().map_err(|_| bad())?;
        let parity = match par {
            "e" => Parity::Even,
            "o" => Parity::Odd,
            _ => return Err(bad()),
        };
        Ok(Irrep::new(degree, parity))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub mult: usize,
    pub irrep: Irrep,
}

impl LayoutEntry {
    pub fn dim(&self) -> usize {
        self.mult * self.irrep.dim()
    }
}

/// Ordered sequence of `(multiplicity, irrep)` blocks.
///
/// Coefficients are stored entry by entry; within an entry, channel `u`
/// occupies `offset + u * (2l + 1) .. offset + (u + 1) * (2l + 1)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrrepsLayout {
    entries: Vec<LayoutEntry>,
}

impl IrrepsLayout {
    pub fn new(entries: Vec<LayoutEntry>) -> Result<Self> {
        for e in &entries {
            if e.mult == 0 {
                return Err(Error::Precondition(format!(
                    "layout entry {} has zero multiplicity",
                    e.irrep
                )));
            }
            super::check_degree(e.irrep.degree)?;
        }
        Ok(Self { entries })
    }

    /// Builds a layout from `(mult, degree, parity)` triples.
    pub fn from_triples(triples: &[(usize, u32, Parity)]) -> Result<Self> {
        Self::new(
            triples
                .iter()
                .map(|&(mult, l, p)| LayoutEntry {
                    mult,
                    irrep: Irrep::new(l, p),
                })
                .collect(),
        )
    }

    pub fn scalars(mult: usize) -> Self {
        Self::new(vec![LayoutEntry {
            mult,
            irrep: Irrep::natural(0),
        }])
        .expect("positive multiplicity")
    }

    /// One block per degree `0..=l_max`, each with natural parity.
    pub fn spherical_harmonics(l_max: u32) -> Result<Self> {
        Self::new(
            (0..=l_max)
                .map(|l| LayoutEntry {
                    mult: 1,
                    irrep: Irrep::natural(l),
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.entries.iter().map(LayoutEntry::dim).sum()
    }

    /// Start offset of each entry.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.entries
            .iter()
            .map(|e| {
                let o = acc;
                acc += e.dim();
                o
            })
            .collect()
    }

    pub fn max_degree(&self) -> u32 {
        self.entries.iter().map(|e| e.irrep.degree).max().unwrap_or(0)
    }

    /// Concatenation: `self` entries followed by `other` entries.
    pub fn concat(&self, other: &IrrepsLayout) -> IrrepsLayout {
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        IrrepsLayout { entries }
    }

    pub fn num_channels(&self) -> usize {
        self.entries.iter().map(|e| e.mult).sum()
    }
}

impl fmt::Display for IrrepsLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "()");
        }
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            write!(f, "{}x{}", e.mult, e.irrep)?;
        }
        Ok(())
    }
}

impl FromStr for IrrepsLayout {
    type Err = Error;

    /// Parses `"16x0e+8x1o+4x2e"`.
    fn from_str(s: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for part in s.split('+').map(str::trim).filter(|p| !p.is_empty()) {
            let (mult, irrep) = match part.split_once('x') {
                Some((m, ir)) => (
                    m.trim()
                        .parse()
                        .map_err(|_| Error::Precondition(format!("bad multiplicity in `{part}`")))?,
                    ir.parse()?,
                ),
                None => (1, part.parse()?),
            };
            entries.push(LayoutEntry { mult, irrep });
        }
        IrrepsLayout::new(entries)
    }
}
