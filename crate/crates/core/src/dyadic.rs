//! Dyadic cubes `Q_{level, m} = prod_i [2^-level m_i, 2^-level (m_i + 1))`.
//!
//! Negative levels are large cubes. Leaves of the reference cube
//! `Q_{-j, 0}` are enumerated lexicographically in the offset vector, first
//! coordinate most significant, so leaf index bits are the concatenation of
//! the coordinate bits.

use thiserror::Error;

use crate::params::Rational;

/// Largest `|level * d|` accepted anywhere in this module.
pub const MAX_LEVEL_BITS: u32 = 60;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DyadicError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("target level {target} is coarser than parent level {parent}")]
    LevelBelowParent { parent: i32, target: i32 },
    #[error("level span {0} exceeds the supported range")]
    TooLarge(i64),
    #[error("dimension must be positive")]
    ZeroDimension,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicCube {
    pub level: i32,
    pub offset: Vec<i64>,
}

impl DyadicCube {
    pub fn new(level: i32, offset: Vec<i64>) -> Result<Self, DyadicError> {
        if offset.is_empty() {
            return Err(DyadicError::ZeroDimension);
        }
        let span = level as i64 * offset.len() as i64;
        if span.unsigned_abs() > MAX_LEVEL_BITS as u64 {
            return Err(DyadicError::TooLarge(span));
        }
        Ok(DyadicCube { level, offset })
    }

    /// The cube `Q_{-j, 0}` in dimension `d`.
    pub fn reference(j: u32, d: u32) -> Result<Self, DyadicError> {
        DyadicCube::new(-(j as i32), vec![0; d as usize])
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    /// Volume `2^{-level d}`.
    pub fn volume(&self) -> Rational {
        let e = self.level as i64 * self.dim() as i64;
        if e >= 0 {
            Rational::new(1, 1i64 << e)
        } else {
            Rational::from_integer(1i64 << -e)
        }
    }

    pub fn contains(&self, child: &DyadicCube) -> Result<bool, DyadicError> {
        if self.dim() != child.dim() {
            return Err(DyadicError::DimensionMismatch(self.dim(), child.dim()));
        }
        if self.level > child.level {
            return Ok(false);
        }
        let shift = (child.level - self.level) as u32;
        if shift >= 63 {
            return Err(DyadicError::TooLarge(shift as i64));
        }
        Ok(self
            .offset
            .iter()
            .zip(&child.offset)
            .all(|(k, m)| m.div_euclid(1i64 << shift) == *k))
    }

    /// Subcubes at `level`, in lexicographic offset order.
    pub fn subcubes(&self, level: i32) -> Result<Vec<DyadicCube>, DyadicError> {
        if level < self.level {
            return Err(DyadicError::LevelBelowParent {
                parent: self.level,
                target: level,
            });
        }
        let shift = (level - self.level) as u32;
        let bits = shift as i64 * self.dim() as i64;
        if bits > 24 {
            return Err(DyadicError::TooLarge(bits));
        }
        let side = 1i64 << shift;
        let count = 1usize << bits;
        let d = self.dim();
        let mut out = Vec::with_capacity(count);
        for idx in 0..count {
            let mut offset = vec![0i64; d];
            let mut rest = idx as i64;
            for i in (0..d).rev() {
                offset[i] = self.offset[i] * side + rest % side;
                rest /= side;
            }
            out.push(DyadicCube { level, offset });
        }
        Ok(out)
    }
}

pub fn contains(parent: &DyadicCube, child: &DyadicCube) -> Result<bool, DyadicError> {
    parent.contains(child)
}

pub fn subcubes(parent: &DyadicCube, level: i32) -> Result<Vec<DyadicCube>, DyadicError> {
    parent.subcubes(level)
}

/// The unit cubes inside `Q_{-j, 0}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeIndexSet {
    pub j: u32,
    pub d: u32,
}

impl CubeIndexSet {
    pub fn new(j: u32, d: u32) -> Result<Self, DyadicError> {
        if d == 0 {
            return Err(DyadicError::ZeroDimension);
        }
        let bits = j as i64 * d as i64;
        if bits > 24 {
            return Err(DyadicError::TooLarge(bits));
        }
        Ok(CubeIndexSet { j, d })
    }

    pub fn len(&self) -> usize {
        1usize << (self.j * self.d)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn members(&self) -> Vec<DyadicCube> {
        DyadicCube::reference(self.j, self.d)
            .and_then(|q| q.subcubes(0))
            .expect("size checked at construction")
    }

    /// Offset vector of leaf `k`.
    pub fn offset_of(&self, k: usize) -> Vec<i64> {
        let mask = (1usize << self.j) - 1;
        (0..self.d)
            .map(|i| ((k >> (self.j * (self.d - 1 - i))) & mask) as i64)
            .collect()
    }

    pub fn index_of(&self, offset: &[i64]) -> Option<usize> {
        if offset.len() != self.d as usize {
            return None;
        }
        let side = 1i64 << self.j;
        offset.iter().try_fold(0usize, |acc, &m| {
            (0..side).contains(&m).then(|| (acc << self.j) | m as usize)
        })
    }

    /// For each leaf, the index of its ancestor at level `-nu` among the
    /// `2^{(j - nu) d}` such cubes (lexicographic).
    pub fn block_map(&self, nu: u32) -> Vec<usize> {
        assert!(nu <= self.j);
        let coarse = self.j - nu;
        let mask = (1usize << self.j) - 1;
        (0..self.len())
            .map(|k| {
                (0..self.d).fold(0usize, |acc, i| {
                    let m = (k >> (self.j * (self.d - 1 - i))) & mask;
                    (acc << coarse) | (m >> nu)
                })
            })
            .collect()
    }

    pub fn blocks_at(&self, nu: u32) -> usize {
        1usize << ((self.j - nu) * self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(level: i32, offset: &[i64]) -> DyadicCube {
        DyadicCube::new(level, offset.to_vec()).unwrap()
    }

    #[test]
    fn subcube_examples() {
        let q = cube(-2, &[0]);
        let subs = q.subcubes(0).unwrap();
        assert_eq!(
            subs.iter().map(|c| c.offset[0]).collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
        assert_eq!(cube(-1, &[0, 0]).subcubes(0).unwrap().len(), 4);
        assert_eq!(q.subcubes(-2).unwrap(), vec![q.clone()]);
        assert!(matches!(
            q.subcubes(-3),
            Err(DyadicError::LevelBelowParent { .. })
        ));
    }

    #[test]
    fn containment_examples() {
        assert!(cube(-1, &[0]).contains(&cube(0, &[1])).unwrap());
        assert!(!cube(0, &[0]).contains(&cube(0, &[1])).unwrap());
        let c = cube(3, &[5, -2]);
        assert!(c.contains(&c).unwrap());
        assert!(cube(0, &[-1]).contains(&cube(2, &[-1])).unwrap());
        assert!(cube(0, &[0]).contains(&cube(0, &[0, 0])).is_err());
    }

    #[test]
    fn volumes() {
        assert_eq!(cube(-2, &[0, 0]).volume(), Rational::from_integer(16));
        assert_eq!(cube(3, &[0]).volume(), Rational::new(1, 8));
        assert!(DyadicCube::new(-31, vec![0, 0]).is_err());
    }

    #[test]
    fn index_set_layout() {
        let set = CubeIndexSet::new(2, 2).unwrap();
        let members = set.members();
        assert_eq!(members.len(), 16);
        for (k, c) in members.iter().enumerate() {
            assert_eq!(set.offset_of(k), c.offset);
            assert_eq!(set.index_of(&c.offset), Some(k));
        }
        let map = set.block_map(1);
        let parents = DyadicCube::reference(2, 2).unwrap().subcubes(-1).unwrap();
        for (k, c) in members.iter().enumerate() {
            assert!(parents[map[k]].contains(c).unwrap());
        }
    }
}
