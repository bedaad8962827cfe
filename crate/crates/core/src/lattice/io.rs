//! Binary field files.
//!
//! Layout (little-endian): `"HJVF"`, `u32` version, `u8` group tag,
//! `u32` n_t, n_x, n_y, n_z, `f64` spacing, the link words in site-major,
//! direction-minor order, then the CRC32 of the link words.

use std::fs;
use std::path::Path;

use super::{AnyField, GaugeField, Geometry};
use crate::error::{Error, FormatError, Result};
use crate::lie::{GroupKind, LieGroup};

pub const FIELD_MAGIC: [u8; 4] = *b"HJVF";
pub const FIELD_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 16 + 8;

pub fn encode_field<G: LieGroup>(field: &GaugeField<G>) -> Vec<u8> {
    let g = field.geometry();
    let mut out = Vec::with_capacity(HEADER_LEN + field.links().len() * G::RAW_WORDS * 8 + 4);
    out.extend_from_slice(&FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.push(G::KIND.tag());
    for n in g.dims() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&g.a.to_le_bytes());
    let mut words = Vec::with_capacity(G::RAW_WORDS);
    let start = out.len();
    for u in field.links() {
        words.clear();
        u.write_raw(&mut words);
        for w in &words {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Header {
    kind: GroupKind,
    geom: Geometry,
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn decode_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::Truncated { expected: HEADER_LEN, found: bytes.len() }.into());
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != FIELD_MAGIC {
        return Err(FormatError::Magic(magic).into());
    }
    let version = read_u32(bytes, 4);
    if version != FIELD_VERSION {
        return Err(FormatError::Version(version).into());
    }
    let kind = GroupKind::from_tag(bytes[8]).ok_or(FormatError::GroupTag(bytes[8]))?;
    let dims: Vec<usize> = (0..4).map(|i| read_u32(bytes, 9 + 4 * i) as usize).collect();
    let a = f64::from_le_bytes(bytes[25..33].try_into().expect("8 bytes"));
    let geom = Geometry::new(dims[0], dims[1], dims[2], dims[3], a)
        .map_err(|e| FormatError::Header(e.to_string()))?;
    Ok(Header { kind, geom })
}

fn decode_links<G: LieGroup>(bytes: &[u8], geom: Geometry) -> Result<GaugeField<G>> {
    let n_links = geom.volume() * 4;
    let payload = n_links * G::RAW_WORDS * 8;
    let expected = HEADER_LEN + payload + 4;
    if bytes.len() < expected {
        return Err(FormatError::Truncated { expected, found: bytes.len() }.into());
    }
    if bytes.len() > expected {
        return Err(FormatError::Header(format!("{} trailing bytes", bytes.len() - expected)).into());
    }
    let body = &bytes[HEADER_LEN..HEADER_LEN + payload];
    let stored = read_u32(bytes, HEADER_LEN + payload);
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(FormatError::Checksum { stored, computed }.into());
    }
    let mut words = vec![0.0; G::RAW_WORDS];
    let mut links = Vec::with_capacity(n_links);
    for chunk in body.chunks_exact(G::RAW_WORDS * 8) {
        for (w, b) in words.iter_mut().zip(chunk.chunks_exact(8)) {
            *w = f64::from_le_bytes(b.try_into().expect("8 bytes"));
        }
        links.push(G::read_raw(&words));
    }
    GaugeField::from_links(geom, links)
}

pub fn decode_field_any(bytes: &[u8]) -> Result<AnyField> {
    let h = decode_header(bytes)?;
    Ok(match h.kind {
        GroupKind::U1 => AnyField::U1(decode_links(bytes, h.geom)?),
        GroupKind::Su2 => AnyField::Su2(decode_links(bytes, h.geom)?),
    })
}

pub fn decode_field<G: LieGroup>(bytes: &[u8]) -> Result<GaugeField<G>> {
    let h = decode_header(bytes)?;
    if h.kind != G::KIND {
        return Err(Error::KindMismatch(format!(
            "file holds {} links, expected {}",
            h.kind.name(),
            G::KIND.name()
        )));
    }
    decode_links(bytes, h.geom)
}

pub fn save_field<G: LieGroup>(field: &GaugeField<G>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_field(field))?;
    Ok(())
}

pub fn load_field<G: LieGroup>(path: impl AsRef<Path>) -> Result<GaugeField<G>> {
    decode_field(&fs::read(path)?)
}

pub fn save_field_any(field: &AnyField, path: impl AsRef<Path>) -> Result<()> {
    match field {
        AnyField::U1(f) => save_field(f, path),
        AnyField::Su2(f) => save_field(f, path),
    }
}

pub fn load_field_any(path: impl AsRef<Path>) -> Result<AnyField> {
    decode_field_any(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{Su2, U1};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field<G: LieGroup>() -> GaugeField<G> {
        let g = Geometry::new(4, 4, 4, 5, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        GaugeField::from_links(g, (0..g.volume() * 4).map(|_| G::random(&mut rng)).collect()).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let f = field::<Su2>();
        let p = dir.path().join("f.hjvf");
        save_field(&f, &p).unwrap();
        assert_eq!(load_field::<Su2>(&p).unwrap(), f);
        let u = field::<U1>();
        save_field(&u, &p).unwrap();
        assert_eq!(load_field_any(&p).unwrap(), AnyField::U1(u));
    }

    #[test]
    fn corrupted_payload_fails_checksum() {
        let mut b = encode_field(&field::<Su2>());
        b[HEADER_LEN + 13] ^= 0x40;
        assert!(matches!(decode_field::<Su2>(&b), Err(Error::Format(FormatError::Checksum { .. }))));
    }

    #[test]
    fn newer_version_is_rejected() {
        let mut b = encode_field(&field::<U1>());
        b[4..8].copy_from_slice(&(FIELD_VERSION + 1).to_le_bytes());
        assert!(matches!(decode_field::<U1>(&b), Err(Error::Format(FormatError::Version(2)))));
    }

    #[test]
    fn truncation_and_magic_and_kind_are_checked() {
        let b = encode_field(&field::<U1>());
        assert!(matches!(
            decode_field::<U1>(&b[..b.len() - 9]),
            Err(Error::Format(FormatError::Truncated { .. }))
        ));
        let mut m = b.clone();
        m[0] = b'X';
        assert!(matches!(decode_field::<U1>(&m), Err(Error::Format(FormatError::Magic(_)))));
        assert!(matches!(decode_field::<Su2>(&b), Err(Error::KindMismatch(_))));
    }
}
