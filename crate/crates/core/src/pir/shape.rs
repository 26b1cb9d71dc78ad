use crate::encoding::{self, DecodeError, Reader};

use super::PirError;

/// Dimensions `m_1 × … × m_d` of a recursive PIR query. Dimension 1 is the
/// most significant digit of a pid.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QueryShape {
    dims: Vec<usize>,
    capacity: usize,
}

impl QueryShape {
    pub fn new(dims: Vec<usize>) -> Result<Self, PirError> {
        if dims.is_empty() || dims.len() > u8::MAX as usize {
            return Err(PirError::InvalidShape("dimension count must be in 1..=255".into()));
        }
        if let Some(m) = dims.iter().find(|m| **m < 2) {
            return Err(PirError::InvalidShape(format!("dimension of size {m} (minimum 2)")));
        }
        let capacity = dims
            .iter()
            .try_fold(1usize, |acc, m| acc.checked_mul(*m))
            .filter(|c| *c <= u32::MAX as usize)
            .ok_or_else(|| PirError::InvalidShape("capacity exceeds 2^32".into()))?;
        Ok(QueryShape { dims, capacity })
    }

    /// Parses `"3x4"` or `"3,4"`.
    pub fn parse(s: &str) -> Result<Self, PirError> {
        let dims = s
            .split(['x', 'X', ',', '×'])
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| PirError::InvalidShape(format!("cannot parse shape {s:?}")))?;
        Self::new(dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// `Σ m_i`, the number of ciphertexts in a query.
    pub fn slot_count(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn pid_to_coords(&self, pid: usize) -> Result<Vec<usize>, PirError> {
        if pid >= self.capacity {
            return Err(PirError::PidOutOfRange {
                pid,
                capacity: self.capacity,
            });
        }
        let mut coords = Vec::with_capacity(self.dims.len());
        let mut rest = pid;
        let mut stride = self.capacity;
        for m in &self.dims {
            stride /= m;
            coords.push(rest / stride);
            rest %= stride;
        }
        Ok(coords)
    }

    pub fn coords_to_pid(&self, coords: &[usize]) -> Result<usize, PirError> {
        if coords.len() != self.dims.len() {
            return Err(PirError::ShapeMismatch);
        }
        let mut pid = 0usize;
        for (k, m) in coords.iter().zip(&self.dims) {
            if k >= m {
                return Err(PirError::InvalidShape(format!("coordinate {k} outside dimension {m}")));
            }
            pid = pid * m + k;
        }
        Ok(pid)
    }

    pub fn encode(&self, buf: &mut Vec<u8>) {
        encoding::put_u8(buf, self.dims.len() as u8);
        for m in &self.dims {
            encoding::put_u32(buf, *m as u32);
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let d = r.u8()? as usize;
        let dims = (0..d)
            .map(|_| r.u32().map(|m| m as usize))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(dims).map_err(|e| DecodeError::invalid(e.to_string()))
    }

    /// Serialized size: a dimension count plus one `u32` per dimension.
    pub fn encoded_len(&self) -> usize {
        1 + 4 * self.dims.len()
    }
}

impl std::fmt::Display for QueryShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|m| m.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_by_four_coordinates() {
        let s = QueryShape::new(vec![3, 4]).unwrap();
        assert_eq!(s.pid_to_coords(6).unwrap(), vec![1, 2]);
        assert_eq!(s.coords_to_pid(&[1, 2]).unwrap(), 6);
    }

    #[test]
    fn single_dimension() {
        let s = QueryShape::new(vec![5]).unwrap();
        assert_eq!(s.pid_to_coords(0).unwrap(), vec![0]);
        assert!(s.pid_to_coords(5).is_err());
    }

    #[test]
    fn cube_is_a_bijection_onto_bits() {
        let s = QueryShape::new(vec![2, 2, 2]).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for pid in 0..8 {
            let c = s.pid_to_coords(pid).unwrap();
            assert_eq!(c, vec![(pid >> 2) & 1, (pid >> 1) & 1, pid & 1]);
            assert_eq!(s.coords_to_pid(&c).unwrap(), pid);
            seen.insert(c);
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(QueryShape::new(vec![]).is_err());
        assert!(QueryShape::new(vec![3, 1]).is_err());
        assert!(QueryShape::new(vec![1 << 20, 1 << 20]).is_err());
    }

    #[test]
    fn parse_and_display() {
        let s = QueryShape::parse("10x10x10x10").unwrap();
        assert_eq!(s.capacity(), 10_000);
        assert_eq!(s.to_string(), "10x10x10x10");
        assert_eq!(QueryShape::parse("3,4").unwrap().dims(), &[3, 4]);
    }
}
