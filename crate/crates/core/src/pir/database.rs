use std::collections::BTreeMap;
use std::path::Path;

use crate::encoding::{self, DecodeError, Reader};

use super::{PirError, QueryShape};

/// pid → payload table for one group at one lender. Absent pids are empty slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseDatabase {
    shape: QueryShape,
    payload_len: usize,
    entries: BTreeMap<usize, Vec<u8>>,
}

impl SparseDatabase {
    pub fn new(shape: QueryShape, payload_len: usize) -> Self {
        SparseDatabase {
            shape,
            payload_len,
            entries: BTreeMap::new(),
        }
    }

    pub fn shape(&self) -> &QueryShape {
        &self.shape
    }

    pub fn capacity(&self) -> usize {
        self.shape.capacity()
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts or replaces the payload at `pid`.
    pub fn insert(&mut self, pid: usize, payload: Vec<u8>) -> Result<(), PirError> {
        if pid >= self.capacity() {
            return Err(PirError::PidOutOfRange {
                pid,
                capacity: self.capacity(),
            });
        }
        if payload.len() != self.payload_len {
            return Err(PirError::PayloadLength {
                found: payload.len(),
                expected: self.payload_len,
            });
        }
        self.entries.insert(pid, payload);
        Ok(())
    }

    pub fn remove(&mut self, pid: usize) -> Option<Vec<u8>> {
        self.entries.remove(&pid)
    }

    pub fn get(&self, pid: usize) -> Option<&[u8]> {
        self.entries.get(&pid).map(Vec::as_slice)
    }

    pub fn contains(&self, pid: usize) -> bool {
        self.entries.contains_key(&pid)
    }

    /// Entries in increasing pid order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[u8])> {
        self.entries.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// Header (capacity, payload width, d, dims), then `(u32 pid, payload)` records.
    pub fn encode(&self, buf: &mut Vec<u8>) {
        encoding::put_u64(buf, self.capacity() as u64);
        encoding::put_u32(buf, self.payload_len as u32);
        self.shape.encode(buf);
        for (pid, payload) in &self.entries {
            encoding::put_u32(buf, *pid as u32);
            buf.extend_from_slice(payload);
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.encode(&mut buf);
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let capacity = r.u64()? as usize;
        let payload_len = r.u32()? as usize;
        let shape = QueryShape::decode(&mut r)?;
        if shape.capacity() != capacity {
            return Err(DecodeError::invalid("capacity does not match shape"));
        }
        let mut db = SparseDatabase::new(shape, payload_len);
        let mut last = None;
        while r.remaining() > 0 {
            let pid = r.u32()? as usize;
            if last.is_some_and(|l| pid <= l) {
                return Err(DecodeError::invalid("records not sorted by pid"));
            }
            last = Some(pid);
            let payload = r.take(payload_len)?.to_vec();
            db.insert(pid, payload)
                .map_err(|e| DecodeError::invalid(e.to_string()))?;
        }
        Ok(db)
    }

    pub fn save(&self, path: &Path) -> Result<(), PirError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PirError> {
        Ok(Self::from_bytes(&std::fs::read(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape() -> QueryShape {
        QueryShape::new(vec![3, 4]).unwrap()
    }

    #[test]
    fn insert_validates() {
        let mut db = SparseDatabase::new(shape(), 2);
        assert!(db.insert(12, vec![0, 0]).is_err());
        assert!(db.insert(3, vec![0]).is_err());
        db.insert(3, vec![1, 2]).unwrap();
        db.insert(3, vec![3, 4]).unwrap();
        assert_eq!(db.len(), 1);
        assert_eq!(db.get(3), Some(&[3u8, 4][..]));
    }

    #[test]
    fn file_format_round_trips() {
        let mut db = SparseDatabase::new(shape(), 3);
        db.insert(7, vec![7, 7, 7]).unwrap();
        db.insert(1, vec![1, 2, 3]).unwrap();
        let bytes = db.to_bytes();
        assert_eq!(bytes.len(), 8 + 4 + 9 + 2 * 7);
        assert_eq!(SparseDatabase::from_bytes(&bytes).unwrap(), db);

        let dir = std::env::temp_dir().join(format!("octopus-db-{}", std::process::id()));
        db.save(&dir).unwrap();
        assert_eq!(SparseDatabase::load(&dir).unwrap(), db);
        std::fs::remove_file(dir).unwrap();
    }

    #[test]
    fn rejects_unsorted_records() {
        let mut db = SparseDatabase::new(shape(), 1);
        db.insert(1, vec![1]).unwrap();
        db.insert(2, vec![2]).unwrap();
        let mut bytes = db.to_bytes();
        let n = bytes.len();
        bytes.swap(n - 2, n - 7);
        assert!(SparseDatabase::from_bytes(&bytes).is_err());
    }
}
