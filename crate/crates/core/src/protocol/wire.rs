//! Frame layout shared by the network transports and the registry log:
//! `len: u32 ‖ tag: u8 ‖ session: [u8; 16] ‖ body`, where `len` counts
//! everything after itself.

use std::io::{self, Read, Write};

use crate::encoding::{DecodeError, Reader};

pub type SessionId = [u8; 16];

pub const FRAME_OVERHEAD: usize = 4 + 1 + 16;
const MAX_FRAME: usize = 1 << 30;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub tag: u8,
    pub session: SessionId,
    pub body: Vec<u8>,
}

impl Frame {
    pub fn new(tag: u8, session: SessionId, body: Vec<u8>) -> Self {
        Frame { tag, session, body }
    }

    pub fn encoded_len(&self) -> usize {
        FRAME_OVERHEAD + self.body.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&((1 + 16 + self.body.len()) as u32).to_be_bytes());
        out.push(self.tag);
        out.extend_from_slice(&self.session);
        out.extend_from_slice(&self.body);
        out
    }

    /// Parses one frame from the front of `r`.
    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let len = r.u32()? as usize;
        if !(17..=MAX_FRAME).contains(&len) {
            return Err(DecodeError::invalid(format!("frame length {len}")));
        }
        let tag = r.u8()?;
        let mut session = [0u8; 16];
        session.copy_from_slice(r.take(16)?);
        let body = r.take(len - 17)?.to_vec();
        Ok(Frame { tag, session, body })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let f = Frame::decode(&mut r)?;
        r.finish()?;
        Ok(f)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&self.to_bytes())
    }

    /// Reads one frame, returning `None` on a clean end of stream.
    pub fn read_from<R: Read>(r: &mut R) -> io::Result<Option<Frame>> {
        let mut len = [0u8; 4];
        match r.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e),
        }
        let len = u32::from_be_bytes(len) as usize;
        if !(17..=MAX_FRAME).contains(&len) {
            return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame length {len}")));
        }
        let mut rest = vec![0u8; len];
        r.read_exact(&mut rest)?;
        let mut session = [0u8; 16];
        session.copy_from_slice(&rest[1..17]);
        Ok(Some(Frame {
            tag: rest[0],
            session,
            body: rest[17..].to_vec(),
        }))
    }
}
