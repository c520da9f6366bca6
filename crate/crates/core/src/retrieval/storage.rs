//! Binary database layout, all integers and floats little-endian:
//!
//! ```text
//! "WSBI"  version:u32  image_count:u32
//! per image:
//!     id_len:u32  id:[u8; id_len]            (UTF-8)
//!     has_pose:u8  x:f64  y:f64  z:f64        (pose is zero when has_pose = 0)
//!     edge_count:u32
//!     per edge: class_id:u16  coeff_count:u16  coeffs:[f32; coeff_count]
//! ```

use super::{DatabaseEntry, Pose, RetrievalDatabase, RetrievalError};
use crate::matching::ImageDescriptor;
use crate::wavelet::EdgeDescriptor;

pub const MAGIC: &[u8; 4] = b"WSBI";
pub const FORMAT_VERSION: u32 = 1;

fn len_u32(n: usize, what: &'static str) -> Result<u32, RetrievalError> {
    u32::try_from(n).map_err(|_| RetrievalError::Overflow { what })
}

pub(super) fn encode(db: &RetrievalDatabase) -> Result<Vec<u8>, RetrievalError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&len_u32(db.entries.len(), "image count")?.to_le_bytes());
    for entry in &db.entries {
        let id = entry.descriptor.image_id.as_bytes();
        out.extend_from_slice(&len_u32(id.len(), "image id length")?.to_le_bytes());
        out.extend_from_slice(id);
        let pose = entry.pose.unwrap_or(Pose::new(0.0, 0.0, 0.0));
        out.push(u8::from(entry.pose.is_some()));
        for v in [pose.x, pose.y, pose.z] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&len_u32(entry.descriptor.edge_count(), "edge count")?.to_le_bytes());
        for edge in entry.descriptor.edges() {
            let count = u16::try_from(edge.coeffs.len()).map_err(|_| RetrievalError::Overflow {
                what: "coefficient count",
            })?;
            out.extend_from_slice(&edge.class_id.to_le_bytes());
            out.extend_from_slice(&count.to_le_bytes());
            for &c in &edge.coeffs {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], RetrievalError> {
        let (head, rest) = self
            .buf
            .split_first_chunk::<N>()
            .ok_or(RetrievalError::Truncated)?;
        self.buf = rest;
        Ok(*head)
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8], RetrievalError> {
        if self.buf.len() < n {
            return Err(RetrievalError::Truncated);
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, RetrievalError> {
        Ok(self.take::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16, RetrievalError> {
        Ok(u16::from_le_bytes(self.take()?))
    }

    fn u32(&mut self) -> Result<u32, RetrievalError> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f32(&mut self) -> Result<f32, RetrievalError> {
        Ok(f32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64, RetrievalError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub(super) fn decode(bytes: &[u8]) -> Result<RetrievalDatabase, RetrievalError> {
    let mut r = Reader { buf: bytes };
    if &r.take::<4>().map_err(|_| RetrievalError::BadMagic)? != MAGIC {
        return Err(RetrievalError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(RetrievalError::UnsupportedVersion(version));
    }
    let count = r.u32()? as usize;
    let mut entries = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let id_len = r.u32()? as usize;
        let id = std::str::from_utf8(r.bytes(id_len)?)
            .map_err(|_| RetrievalError::InvalidId)?
            .to_owned();
        let has_pose = match r.u8()? {
            0 => false,
            1 => true,
            other => return Err(RetrievalError::Format(format!("bad pose flag {other}"))),
        };
        let pose = Pose::new(r.f64()?, r.f64()?, r.f64()?);
        let edge_count = r.u32()? as usize;
        let mut edges = Vec::with_capacity(edge_count.min(1 << 16));
        for _ in 0..edge_count {
            let class_id = r.u16()?;
            let n = r.u16()? as usize;
            let coeffs = (0..n)
                .map(|_| r.f32().map(f64::from))
                .collect::<Result<_, _>>()?;
            edges.push(EdgeDescriptor { class_id, coeffs });
        }
        entries.push(DatabaseEntry {
            descriptor: ImageDescriptor::new(id, edges),
            pose: has_pose.then_some(pose),
        });
    }
    if !r.buf.is_empty() {
        return Err(RetrievalError::TrailingData);
    }
    let ids_sorted = entries
        .windows(2)
        .all(|w| w[0].descriptor.image_id < w[1].descriptor.image_id);
    if !ids_sorted {
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = entries
            .iter()
            .find(|e| !seen.insert(&e.descriptor.image_id))
        {
            return Err(RetrievalError::DuplicateId(dup.descriptor.image_id.clone()));
        }
    }
    Ok(RetrievalDatabase::from_sorted(entries))
}
