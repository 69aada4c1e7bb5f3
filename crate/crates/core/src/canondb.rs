//! The database of canonical sequences: for every unitary reachable with at
//! most `l'` gates, the first sequence in [`seq_order`] that realises it.
//!
//! Sequences are ordered shortest first; sequences of equal length compare
//! lexicographically in reading order, so the last-applied gate is the most
//! significant digit. Every contiguous factor of a canonical sequence is
//! itself canonical, which is what the search relies on when it skips.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::hash::BuildHasherDefault;
use std::io::Write;
use std::path::Path;

use fnv::FnvHasher;
use log::{debug, info};

use crate::error::{Error, Result};
use crate::gateset::{GateId, GateSeq, NUM_GATES};
use crate::unitary::{
    distance, hash_key, phase_canonicalize, probe_keys, Unitary2, UNIQUENESS_EPS,
};

/// Largest supported `l'`; window keys are base-24 numbers packed in a `u64`.
pub const MAX_LPRIME: usize = 13;

/// Default `l'` used by the CLI.
pub const DEFAULT_LPRIME: usize = 10;

/// Default entry budget for [`build_canon_db`]. Each entry costs roughly
/// 100 bytes plus its sequence, so this is a few GiB at most.
pub const DEFAULT_ENTRY_BUDGET: usize = 20_000_000;

const MAGIC: &[u8; 4] = b"GFDB";
pub const FORMAT_VERSION: u16 = 1;

type FnvMap<K, V> = HashMap<K, V, BuildHasherDefault<FnvHasher>>;

/// Total order over sequences: shorter first, then lexicographic in reading
/// order.
pub fn seq_order(a: &GateSeq, b: &GateSeq) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.gates().cmp(b.gates()))
}

/// Successor of `seq` among all sequences of length at most `lmax`, or `None`
/// after the last length-`lmax` sequence.
pub fn seq_order_next(seq: &GateSeq, lmax: usize) -> Option<GateSeq> {
    let mut digits = seq.digits();
    for pos in (0..digits.len()).rev() {
        if (digits[pos] as usize) < NUM_GATES - 1 {
            digits[pos] += 1;
            return Some(GateSeq::from_digits(&digits));
        }
        digits[pos] = 0;
    }
    let len = seq.len() + 1;
    (len <= lmax).then(|| GateSeq::from_digits(&vec![0; len]))
}

/// Packs zero-based digits into a base-24 integer, first digit most
/// significant. Numeric order matches [`seq_order`] within one length.
#[inline]
pub(crate) fn window_key(digits: &[u8]) -> u64 {
    digits
        .iter()
        .fold(0u64, |acc, &d| acc * NUM_GATES as u64 + d as u64)
}

#[inline]
pub(crate) fn unpack_key(mut key: u64, out: &mut [u8]) {
    for slot in out.iter_mut().rev() {
        *slot = (key % NUM_GATES as u64) as u8;
        key /= NUM_GATES as u64;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DbEntry {
    pub seq: GateSeq,
    /// Phase-canonicalized matrix of `seq`.
    pub unitary: Unitary2,
    pub key: u64,
    pub t_count: u8,
}

#[derive(Clone, Debug)]
pub struct CanonDb {
    lprime: usize,
    entries: Vec<DbEntry>,
    /// Entries of length `k` are `entries[offsets[k]..offsets[k + 1]]`.
    offsets: Vec<usize>,
    index: FnvMap<u64, Vec<u32>>,
    /// Sorted window keys of the canonical sequences of each length.
    windows: Vec<Vec<u64>>,
}

impl PartialEq for CanonDb {
    fn eq(&self, other: &Self) -> bool {
        self.lprime == other.lprime && self.entries == other.entries
    }
}

impl CanonDb {
    fn empty(lprime: usize) -> Self {
        let mut db = CanonDb {
            lprime,
            entries: Vec::new(),
            offsets: vec![0],
            index: FnvMap::default(),
            windows: Vec::new(),
        };
        db.start_length();
        db.insert(GateSeq::empty(), Unitary2::IDENTITY);
        db.finish_length();
        db
    }

    pub fn lprime(&self) -> usize {
        self.lprime
    }

    pub fn entries(&self) -> &[DbEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries of exactly `len` gates, in order.
    pub fn entries_of_length(&self, len: usize) -> &[DbEntry] {
        if len > self.lprime {
            return &[];
        }
        &self.entries[self.offsets[len]..self.offsets[len + 1]]
    }

    /// Number of canonical sequences of each length `0..=l'`.
    pub fn counts_per_length(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Entry whose unitary equals `u` modulo phase, if any.
    pub fn find(&self, u: &Unitary2) -> Option<&DbEntry> {
        for key in probe_keys(u) {
            if let Some(ids) = self.index.get(&key) {
                for &id in ids {
                    let e = &self.entries[id as usize];
                    if distance(&e.unitary, u).value() < UNIQUENESS_EPS {
                        return Some(e);
                    }
                }
            }
        }
        None
    }

    #[inline]
    pub(crate) fn contains_window(&self, len: usize, key: u64) -> bool {
        self.windows[len].binary_search(&key).is_ok()
    }

    /// First canonical window of length `len` strictly after `key`.
    #[inline]
    pub(crate) fn successor_window(&self, len: usize, key: u64) -> Option<u64> {
        let table = &self.windows[len];
        let i = table.partition_point(|&k| k <= key);
        table.get(i).copied()
    }

    fn start_length(&mut self) {
        self.windows.push(Vec::new());
    }

    fn finish_length(&mut self) {
        self.offsets.push(self.entries.len());
    }

    fn insert(&mut self, seq: GateSeq, u: Unitary2) {
        let canon = phase_canonicalize(&u);
        let key = hash_key(&canon);
        let id = self.entries.len() as u32;
        self.index.entry(key).or_default().push(id);
        let len = seq.len();
        let wkey = window_key(&seq.digits());
        debug_assert!(self.windows[len].last().is_none_or(|&k| k < wkey));
        self.windows[len].push(wkey);
        let t_count = seq.t_count() as u8;
        self.entries.push(DbEntry {
            seq,
            unitary: canon,
            key,
            t_count,
        });
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len > self.lprime {
            Err(Error::LengthExceeded {
                len,
                limit: self.lprime,
            })
        } else {
            Ok(())
        }
    }
}

/// Builds the canonical set for sequences of up to `lprime` gates with the
/// default entry budget.
pub fn build_canon_db(lprime: usize) -> Result<CanonDb> {
    build_canon_db_with_budget(lprime, DEFAULT_ENTRY_BUDGET)
}

/// Builds the canonical set, aborting once more than `budget` entries would
/// be stored.
///
/// Candidates of length `k` are generated in order by appending each gate to
/// the canonical sequences of length `k − 1`, so a sequence whose `k − 1`
/// gate prefix is not canonical is never tested. Such a sequence is never
/// canonical (its prefix can be replaced by an earlier one), so the result is
/// the same set the plain all-sequences scan produces.
pub fn build_canon_db_with_budget(lprime: usize, budget: usize) -> Result<CanonDb> {
    if lprime > MAX_LPRIME {
        return Err(Error::InvalidParameter(format!(
            "lprime {lprime} exceeds the supported maximum {MAX_LPRIME}"
        )));
    }
    let mut db = CanonDb::empty(lprime);
    let mut digits = vec![0u8; lprime.max(1)];
    for len in 1..=lprime {
        db.start_length();
        let parents = db.offsets[len - 1]..db.offsets[len];
        for pid in parents {
            let (prefix, prefix_u) = {
                let p = &db.entries[pid];
                (p.seq.clone(), p.unitary)
            };
            digits[..len - 1].copy_from_slice(&prefix.digits());
            for g in GateId::all() {
                digits[len - 1] = g.digit();
                // the suffix is a factor, so it must be canonical too
                if len > 1 && !db.contains_window(len - 1, window_key(&digits[1..len])) {
                    continue;
                }
                let u = prefix_u * *g.matrix();
                if db.find(&u).is_some() {
                    continue;
                }
                if db.entries.len() >= budget {
                    return Err(Error::BudgetExceeded {
                        budget,
                        length: len,
                        completed: len - 1,
                    });
                }
                db.insert(GateSeq::from_digits(&digits[..len]), u);
            }
        }
        db.finish_length();
        debug!(
            "canonical length {len}: {} entries ({} total)",
            db.offsets[len + 1] - db.offsets[len],
            db.entries.len()
        );
    }
    info!(
        "built canonical database l'={lprime}: {} entries",
        db.entries.len()
    );
    Ok(db)
}

/// True iff `seq` is itself an entry of the database.
pub fn is_canonical(seq: &GateSeq, db: &CanonDb) -> Result<bool> {
    db.check_len(seq.len())?;
    Ok(db.contains_window(seq.len(), window_key(&seq.digits())))
}

/// The first canonical sequence of length `l'` strictly after `sub`.
pub fn canon_successor(sub: &GateSeq, db: &CanonDb) -> Result<Option<GateSeq>> {
    if sub.len() != db.lprime {
        return Err(Error::WindowLength {
            len: sub.len(),
            lprime: db.lprime,
        });
    }
    Ok(db
        .successor_window(db.lprime, window_key(&sub.digits()))
        .map(|k| {
            let mut digits = vec![0u8; db.lprime];
            unpack_key(k, &mut digits);
            GateSeq::from_digits(&digits)
        }))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    use std::hash::Hasher;
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Serializes to the `GFDB` format: magic, version `u16`, `l'` `u16`, entry
/// count `u64`, then per entry the length `u8`, gate indices as `u8`, and the
/// eight matrix components as little-endian `f64`. A trailing FNV-1a `u64`
/// covers every preceding byte.
pub fn encode_db(db: &CanonDb) -> Vec<u8> {
    let mut buf = Vec::with_capacity(16 + db.entries.len() * (1 + db.lprime + 64) + 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(db.lprime as u16).to_le_bytes());
    buf.extend_from_slice(&(db.entries.len() as u64).to_le_bytes());
    for e in &db.entries {
        buf.push(e.seq.len() as u8);
        buf.extend(e.seq.gates().iter().map(|g| g.index()));
        for x in e.unitary.to_f64s() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let sum = fnv1a(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    buf
}

pub fn save_db(db: &CanonDb, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_db(db))?;
    Ok(())
}

pub fn load_db(path: impl AsRef<Path>) -> Result<CanonDb> {
    decode_db(&fs::read(path)?)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated(format!(
                "reading {what} at byte {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_db(bytes: &[u8]) -> Result<CanonDb> {
    const HEADER: usize = 4 + 2 + 2 + 8;
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic("missing GFDB magic".into()));
    }
    if bytes.len() < HEADER + 8 {
        return Err(Error::Truncated(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let computed = fnv1a(payload);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }

    let mut r = Reader {
        buf: payload,
        pos: 6,
    };
    let lprime = r.u16("lprime")? as usize;
    if lprime > MAX_LPRIME {
        return Err(Error::InvalidParameter(format!(
            "stored lprime {lprime} unsupported"
        )));
    }
    let count = r.u64("entry count")?;
    let mut db = CanonDb {
        lprime,
        entries: Vec::with_capacity(count.min(1 << 24) as usize),
        offsets: vec![0],
        index: FnvMap::default(),
        windows: vec![Vec::new()],
    };
    let mut current_len = 0usize;
    for i in 0..count {
        let len = r.u8("sequence length")? as usize;
        if len > lprime || len < current_len {
            return Err(Error::InvalidParameter(format!(
                "entry {i} has length {len} out of order (l'={lprime})"
            )));
        }
        while current_len < len {
            db.finish_length();
            db.start_length();
            current_len += 1;
        }
        let ids = r.take(len, "gate indices")?;
        let gates = ids
            .iter()
            .map(|&g| GateId::new(g as u32))
            .collect::<Result<Vec<_>>>()?;
        let mut comps = [0.0; 8];
        for c in comps.iter_mut() {
            *c = r.f64("matrix entry")?;
        }
        let seq = GateSeq::new(gates);
        let wkey = window_key(&seq.digits());
        if db.windows[len].last().is_some_and(|&k| k >= wkey) {
            return Err(Error::InvalidParameter(format!("entry {i} out of order")));
        }
        let unitary = Unitary2::from_f64s_raw(&comps);
        let key = hash_key(&unitary);
        db.index
            .entry(key)
            .or_default()
            .push(db.entries.len() as u32);
        db.windows[len].push(wkey);
        let t_count = seq.t_count() as u8;
        db.entries.push(DbEntry {
            seq,
            unitary,
            key,
            t_count,
        });
    }
    while current_len < lprime {
        db.finish_length();
        db.start_length();
        current_len += 1;
    }
    db.finish_length();
    if r.pos != payload.len() {
        return Err(Error::InvalidParameter(format!(
            "{} trailing bytes after entries",
            payload.len() - r.pos
        )));
    }
    Ok(db)
}
