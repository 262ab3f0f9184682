//! Little-endian cursor helpers shared by the LAVE/LAVS/LAVT codecs.

use crate::error::{Error, Result};

pub(crate) const VERSION: u32 = 1;

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::MalformedHeader(format!(
                    "need {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let found: [u8; 4] = self.take(4)?.try_into().unwrap();
        if &found != expected {
            return Err(Error::BadMagic {
                expected: *expected,
                found,
            });
        }
        Ok(())
    }

    pub fn version(&mut self) -> Result<()> {
        match self.u32()? {
            VERSION => Ok(()),
            v => Err(Error::BadVersion(v)),
        }
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn reserved(&mut self) -> Result<()> {
        match self.u32()? {
            0 => Ok(()),
            v => Err(Error::MalformedHeader(format!(
                "reserved field is {v:#x}, expected 0"
            ))),
        }
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    /// Checks that exactly `cells` f32 values (plus `trailer` bytes) remain.
    pub fn expect_payload(&self, cells: u64, trailer: u64) -> Result<()> {
        let declared = cells
            .checked_mul(4)
            .and_then(|b| b.checked_add(trailer))
            .ok_or_else(|| Error::MalformedHeader(format!("payload of {cells} cells overflows")))?;
        let actual = self.remaining() as u64;
        if declared != actual {
            return Err(Error::TruncatedPayload { declared, actual });
        }
        Ok(())
    }

    pub fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .take(n * 4)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }
}

#[derive(Default)]
pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            buf: Vec::with_capacity(n),
        }
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(b);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f32(&mut self, v: f32) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f32s(&mut self, vals: &[f64]) -> &mut Self {
        for &v in vals {
            self.f32(v as f32);
        }
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}
