//! Canonical belief serialization for simulated non-volatile media.
//!
//! An image is a small framed container: magic, format version, medium tag,
//! record count, payload length, payload, and a CRC-32 of the payload. The
//! payload holds one length-prefixed record per belief, canonically sorted by
//! functor, then arity, then arguments, so the same belief set always encodes
//! to byte-identical images regardless of input order. All integers are
//! little-endian; numbers are IEEE 754 doubles, which makes round-trips
//! bit-exact.
//!
//! Energy is billed per payload byte: the frame is bookkeeping the simulated
//! hardware would keep in registers, and an empty belief set must cost
//! nothing to persist. Writes are all-or-nothing: if the buffer cannot cover
//! the whole write, no bytes are billed and no image is produced.

use crate::beliefs::{BeliefEntry, Origin};
use crate::error::PersistError;
use crate::platform::EnergyPlatform;
use helio_asl::{Annotation, Literal, Term};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

const MAGIC: [u8; 4] = *b"HLBI";
const FORMAT_VERSION: u8 = 1;

/// Non-volatile medium kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Medium {
    Fram,
    Flash,
}

impl Medium {
    pub fn name(self) -> &'static str {
        match self {
            Medium::Fram => "fram",
            Medium::Flash => "flash",
        }
    }

    pub fn lifetime(self) -> crate::beliefs::Lifetime {
        match self {
            Medium::Fram => crate::beliefs::Lifetime::Fram,
            Medium::Flash => crate::beliefs::Lifetime::Flash,
        }
    }

    fn code(self) -> u8 {
        match self {
            Medium::Fram => 0,
            Medium::Flash => 1,
        }
    }

    fn from_code(code: u8) -> Option<Medium> {
        match code {
            0 => Some(Medium::Fram),
            1 => Some(Medium::Flash),
            _ => None,
        }
    }
}

/// Per-medium energy and latency model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumProfile {
    pub write_cost_uj_per_byte: f64,
    pub read_cost_uj_per_byte: f64,
    pub write_latency_ms_per_byte: f64,
}

impl Default for MediumProfile {
    fn default() -> MediumProfile {
        MediumProfile::fram_default()
    }
}

impl MediumProfile {
    pub fn fram_default() -> MediumProfile {
        MediumProfile {
            write_cost_uj_per_byte: 0.01,
            read_cost_uj_per_byte: 0.005,
            write_latency_ms_per_byte: 0.001,
        }
    }

    pub fn flash_default() -> MediumProfile {
        MediumProfile {
            write_cost_uj_per_byte: 0.05,
            read_cost_uj_per_byte: 0.01,
            write_latency_ms_per_byte: 0.002,
        }
    }

    pub fn write_energy_uj(&self, payload_bytes: usize) -> f64 {
        self.write_cost_uj_per_byte * payload_bytes as f64
    }

    pub fn read_energy_uj(&self, payload_bytes: usize) -> f64 {
        self.read_cost_uj_per_byte * payload_bytes as f64
    }

    pub fn write_latency_ms(&self, payload_bytes: usize) -> u64 {
        (self.write_latency_ms_per_byte * payload_bytes as f64).ceil() as u64
    }
}

/// A serialized belief set bound for (or read from) one medium.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersistImage {
    pub medium: Medium,
    pub version: u8,
    pub count: u32,
    pub payload: Vec<u8>,
    pub checksum: u32,
}

impl PersistImage {
    pub fn payload_len(&self) -> usize {
        self.payload.len()
    }

    /// Full framed size, as written to disk.
    pub fn total_len(&self) -> usize {
        MAGIC.len() + 1 + 1 + 4 + 4 + self.payload.len() + 4
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.total_len());
        out.extend_from_slice(&MAGIC);
        out.push(self.version);
        out.push(self.medium.code());
        out.extend_from_slice(&self.count.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&self.checksum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<PersistImage, PersistError> {
        let mut r = Reader::new(bytes);
        if r.take(MAGIC.len())? != MAGIC {
            return Err(PersistError::Malformed("bad magic".into()));
        }
        let version = r.u8()?;
        if version != FORMAT_VERSION {
            return Err(PersistError::Version(version));
        }
        let medium = Medium::from_code(r.u8()?)
            .ok_or_else(|| PersistError::Malformed("unknown medium code".into()))?;
        let count = r.u32()?;
        let payload_len = r.u32()? as usize;
        let payload = r.take(payload_len)?.to_vec();
        let checksum = r.u32()?;
        if r.remaining() != 0 {
            return Err(PersistError::Malformed(format!("{} trailing bytes", r.remaining())));
        }
        Ok(PersistImage { medium, version, count, payload, checksum })
    }
}

/// Canonical order: functor, arity, arguments, negation, annotations.
pub fn canonical_cmp(a: &Literal, b: &Literal) -> Ordering {
    a.functor
        .cmp(&b.functor)
        .then_with(|| a.arity().cmp(&b.arity()))
        .then_with(|| a.args.cmp(&b.args))
        .then_with(|| a.negated.cmp(&b.negated))
        .then_with(|| a.annotations.cmp(&b.annotations))
}

/// Encodes entries into an image without billing. Entries are sorted
/// canonically; a variable anywhere makes the belief unserializable.
pub fn encode_image(entries: &[&BeliefEntry], medium: Medium) -> Result<PersistImage, PersistError> {
    let mut sorted: Vec<&BeliefEntry> = entries.to_vec();
    sorted.sort_by(|a, b| canonical_cmp(&a.literal, &b.literal));
    let mut payload = Vec::new();
    for entry in &sorted {
        encode_record(&mut payload, entry)?;
    }
    let checksum = crc32fast::hash(&payload);
    Ok(PersistImage {
        medium,
        version: FORMAT_VERSION,
        count: sorted.len() as u32,
        payload,
        checksum,
    })
}

/// Decodes an image back into belief entries. The checksum is verified
/// before any structural parsing; restored entries carry the medium's
/// lifetime and a zero timestamp for the caller to stamp.
pub fn decode_image(image: &PersistImage) -> Result<Vec<BeliefEntry>, PersistError> {
    let computed = crc32fast::hash(&image.payload);
    if computed != image.checksum {
        return Err(PersistError::Corrupt { stored: image.checksum, computed });
    }
    if image.version != FORMAT_VERSION {
        return Err(PersistError::Version(image.version));
    }
    let mut r = Reader::new(&image.payload);
    let mut entries = Vec::with_capacity(image.count as usize);
    for _ in 0..image.count {
        entries.push(decode_record(&mut r, image.medium)?);
    }
    if r.remaining() != 0 {
        return Err(PersistError::Malformed(format!("{} trailing payload bytes", r.remaining())));
    }
    Ok(entries)
}

/// Serializes and bills one medium's belief set: checks the whole write cost
/// against the buffer first, then draws energy over the write latency.
pub fn persist(
    entries: &[&BeliefEntry],
    medium: Medium,
    profile: &MediumProfile,
    platform: &mut EnergyPlatform,
) -> Result<PersistImage, PersistError> {
    debug_assert!(entries.iter().all(|e| e.lifetime == medium.lifetime()));
    let image = encode_image(entries, medium)?;
    let energy = profile.write_energy_uj(image.payload_len());
    let available = platform.level_uj();
    if available < energy {
        return Err(PersistError::InsufficientEnergy { needed_uj: energy, available_uj: available });
    }
    platform.advance(profile.write_latency_ms(image.payload_len()), energy);
    Ok(image)
}

/// Validates, decodes, and bills one image. Nothing is billed when the
/// checksum fails; a successful read costs read_cost per payload byte.
pub fn restore(
    image: &PersistImage,
    profile: &MediumProfile,
    platform: &mut EnergyPlatform,
) -> Result<Vec<BeliefEntry>, PersistError> {
    let mut entries = decode_image(image)?;
    platform.spend(profile.read_energy_uj(image.payload_len()));
    let now = platform.now_ms();
    for entry in &mut entries {
        entry.last_updated_ms = now;
    }
    Ok(entries)
}

/// Double-buffered image slots for one medium: writes go to the inactive
/// slot, which then becomes active, so a valid image survives a write that
/// never completes.
#[derive(Debug, Clone, Default)]
pub struct SlotPair {
    slots: [Option<PersistImage>; 2],
    active: usize,
}

impl SlotPair {
    pub fn write(&mut self, image: PersistImage) {
        let target = 1 - self.active;
        self.slots[target] = Some(image);
        self.active = target;
    }

    pub fn active(&self) -> Option<&PersistImage> {
        self.slots[self.active].as_ref()
    }
}

/// The fram and flash slot pairs owned by the simulator.
#[derive(Debug, Clone, Default)]
pub struct MediaStore {
    fram: SlotPair,
    flash: SlotPair,
}

impl MediaStore {
    pub fn new() -> MediaStore {
        MediaStore::default()
    }

    pub fn write(&mut self, image: PersistImage) {
        self.pair_mut(image.medium).write(image);
    }

    pub fn active(&self, medium: Medium) -> Option<&PersistImage> {
        self.pair(medium).active()
    }

    /// Fault injection: XOR-flips one payload byte of the active image
    /// without touching its checksum. Returns false when there is no active
    /// image or the index is out of range.
    pub fn flip_payload_byte(&mut self, medium: Medium, index: usize) -> bool {
        let pair = self.pair_mut(medium);
        if let Some(image) = pair.slots[pair.active].as_mut() {
            if let Some(byte) = image.payload.get_mut(index) {
                *byte ^= 0xFF;
                return true;
            }
        }
        false
    }

    fn pair(&self, medium: Medium) -> &SlotPair {
        match medium {
            Medium::Fram => &self.fram,
            Medium::Flash => &self.flash,
        }
    }

    fn pair_mut(&mut self, medium: Medium) -> &mut SlotPair {
        match medium {
            Medium::Fram => &mut self.fram,
            Medium::Flash => &mut self.flash,
        }
    }
}

const TERM_ATOM: u8 = 0;
const TERM_NUMBER: u8 = 1;
const TERM_STR: u8 = 2;
const TERM_STRUCTURE: u8 = 3;

fn encode_record(out: &mut Vec<u8>, entry: &BeliefEntry) -> Result<(), PersistError> {
    let lit = &entry.literal;
    put_str(out, &lit.functor)?;
    out.push(lit.negated as u8);
    out.push(entry.origin.code());
    put_u16(out, lit.args.len())?;
    for arg in &lit.args {
        encode_term(out, arg)?;
    }
    put_u16(out, lit.annotations.len())?;
    for ann in &lit.annotations {
        put_str(out, &ann.functor)?;
        put_u16(out, ann.args.len())?;
        for arg in &ann.args {
            encode_term(out, arg)?;
        }
    }
    Ok(())
}

fn decode_record(r: &mut Reader, medium: Medium) -> Result<BeliefEntry, PersistError> {
    let functor = r.string()?;
    let negated = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(PersistError::Malformed(format!("bad negation flag {other}"))),
    };
    let origin = Origin::from_code(r.u8()?)
        .ok_or_else(|| PersistError::Malformed("bad origin code".into()))?;
    let arg_count = r.u16()? as usize;
    let mut args = Vec::with_capacity(arg_count);
    for _ in 0..arg_count {
        args.push(decode_term(r)?);
    }
    let ann_count = r.u16()? as usize;
    let mut annotations = Vec::with_capacity(ann_count);
    for _ in 0..ann_count {
        let ann_functor = r.string()?;
        let ann_arg_count = r.u16()? as usize;
        let mut ann_args = Vec::with_capacity(ann_arg_count);
        for _ in 0..ann_arg_count {
            ann_args.push(decode_term(r)?);
        }
        annotations.push(Annotation::new(ann_functor, ann_args));
    }
    Ok(BeliefEntry {
        literal: Literal { functor, args, annotations, negated },
        lifetime: medium.lifetime(),
        origin,
        last_updated_ms: 0,
    })
}

fn encode_term(out: &mut Vec<u8>, term: &Term) -> Result<(), PersistError> {
    match term {
        Term::Atom(s) => {
            out.push(TERM_ATOM);
            put_str(out, s)
        }
        Term::Number(v) => {
            out.push(TERM_NUMBER);
            out.extend_from_slice(&v.to_le_bytes());
            Ok(())
        }
        Term::Str(s) => {
            out.push(TERM_STR);
            put_str(out, s)
        }
        Term::Var(name) => Err(PersistError::NotGround(name.clone())),
        Term::Structure(functor, args) => {
            out.push(TERM_STRUCTURE);
            put_str(out, functor)?;
            put_u16(out, args.len())?;
            for arg in args {
                encode_term(out, arg)?;
            }
            Ok(())
        }
    }
}

fn decode_term(r: &mut Reader) -> Result<Term, PersistError> {
    match r.u8()? {
        TERM_ATOM => Ok(Term::Atom(r.string()?)),
        TERM_NUMBER => Ok(Term::Number(r.f64()?)),
        TERM_STR => Ok(Term::Str(r.string()?)),
        TERM_STRUCTURE => {
            let functor = r.string()?;
            let arg_count = r.u16()? as usize;
            let mut args = Vec::with_capacity(arg_count);
            for _ in 0..arg_count {
                args.push(decode_term(r)?);
            }
            Ok(Term::Structure(functor, args))
        }
        other => Err(PersistError::Malformed(format!("bad term tag {other}"))),
    }
}

fn put_u16(out: &mut Vec<u8>, value: usize) -> Result<(), PersistError> {
    let value: u16 = value
        .try_into()
        .map_err(|_| PersistError::Malformed(format!("length {value} exceeds u16")))?;
    out.extend_from_slice(&value.to_le_bytes());
    Ok(())
}

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<(), PersistError> {
    put_u16(out, s.len())?;
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Reader<'a> {
        Reader { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], PersistError> {
        if self.remaining() < n {
            return Err(PersistError::Malformed(format!("truncated at byte {}", self.pos)));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, PersistError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, PersistError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, PersistError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, PersistError> {
        let len = self.u16()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| PersistError::Malformed(format!("invalid UTF-8 at byte {}", self.pos)))
    }
}
