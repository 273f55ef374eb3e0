//! Append-only NDJSON store of computed invariants.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use zerosum::exact::{InvariantRecord, LengthSpec, Quantity, Status};
use zerosum::AbelianGroup;

pub const ENGINE_STAMP: &str = concat!("zerosum ", env!("CARGO_PKG_VERSION"), " engine-v1");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    pub group: String,
    pub quantity: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<LengthSpec>,
}

impl CacheKey {
    /// Length sets are stored in absolute form so `{1,2}·3` and `{3,6}` agree.
    pub fn new(group: &AbelianGroup, quantity: Quantity, lengths: Option<&LengthSpec>) -> Self {
        CacheKey {
            group: group.spec_string(),
            quantity,
            lengths: lengths.map(|l| LengthSpec::Absolute(l.lengths())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub engine: String,
    pub computed_at_ms: u64,
}

impl Stamp {
    pub fn now() -> Self {
        let ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        Stamp {
            engine: ENGINE_STAMP.to_string(),
            computed_at_ms: ms,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub record: InvariantRecord,
    pub stamp: Stamp,
    pub wall_ms: u64,
}

pub struct Cache {
    path: Option<PathBuf>,
    entries: Vec<CacheEntry>,
}

/// `a` is at least as informative as `b` for the same key.
fn dominates(a: &InvariantRecord, b: &InvariantRecord) -> bool {
    match (a.status, b.status) {
        (Status::Exact, _) => true,
        (_, Status::Exact) => false,
        (Status::UpperBound, Status::UpperBound) => a.value <= b.value,
        (Status::LowerBound, Status::LowerBound) => a.value >= b.value,
        _ => false,
    }
}

impl Cache {
    pub fn disabled() -> Self {
        Cache {
            path: None,
            entries: Vec::new(),
        }
    }

    /// Loads every well-formed line; malformed lines are skipped with a
    /// warning so a torn append never poisons the store.
    pub fn open(path: &Path) -> io::Result<Self> {
        let mut entries = Vec::new();
        match File::open(path) {
            Ok(f) => {
                for (i, line) in BufReader::new(f).lines().enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    match serde_json::from_str::<CacheEntry>(&line) {
                        Ok(e) => entries.push(e),
                        Err(err) => eprintln!("warning: {}:{}: skipping cache line: {err}", path.display(), i + 1),
                    }
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        Ok(Cache {
            path: Some(path.to_path_buf()),
            entries,
        })
    }

    #[cfg(test)]
    pub fn entries(&self) -> &[CacheEntry] {
        &self.entries
    }

    /// Most informative entry for `key`: an exact one if present.
    pub fn lookup(&self, key: &CacheKey) -> Option<&CacheEntry> {
        let mut best: Option<&CacheEntry> = None;
        for e in self.entries.iter().filter(|e| &e.key == key) {
            best = match best {
                Some(b) if dominates(&b.record, &e.record) => Some(b),
                _ => Some(e),
            };
        }
        best
    }

    /// Appends `entry` unless an existing entry already dominates it. Exact
    /// entries are never replaced.
    pub fn put(&mut self, entry: CacheEntry) -> io::Result<bool> {
        if let Some(old) = self.lookup(&entry.key) {
            if dominates(&old.record, &entry.record) {
                return Ok(false);
            }
        }
        if let Some(path) = &self.path {
            let mut line = serde_json::to_string(&entry).map_err(io::Error::other)?;
            line.push('\n');
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            // one write per line keeps concurrent appenders from interleaving
            f.write_all(line.as_bytes())?;
        }
        self.entries.push(entry);
        Ok(true)
    }

    /// Every stored record for `group`.
    pub fn known_for(&self, group: &AbelianGroup) -> Vec<InvariantRecord> {
        self.entries
            .iter()
            .filter(|e| &e.record.group == group)
            .map(|e| e.record.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use zerosum::exact::Provenance;
    use zerosum::parse_group;

    fn rec(value: u64, status: Status) -> InvariantRecord {
        InvariantRecord {
            group: parse_group("3").unwrap(),
            quantity: Quantity::SK,
            lengths: Some(LengthSpec::absolute([3]).unwrap()),
            value,
            status,
            provenance: Provenance::Search,
            witness: None,
        }
    }

    fn entry(r: InvariantRecord) -> CacheEntry {
        CacheEntry {
            key: CacheKey::new(&r.group, r.quantity, r.lengths.as_ref()),
            record: r,
            stamp: Stamp::now(),
            wall_ms: 0,
        }
    }

    #[test]
    fn exact_entries_are_immutable() {
        let mut c = Cache::disabled();
        assert!(c.put(entry(rec(5, Status::Exact))).unwrap());
        assert!(!c.put(entry(rec(6, Status::Exact))).unwrap());
        assert!(!c.put(entry(rec(4, Status::UpperBound))).unwrap());
        assert_eq!(c.entries().len(), 1);
    }

    #[test]
    fn bounds_only_tighten() {
        let mut c = Cache::disabled();
        assert!(c.put(entry(rec(9, Status::UpperBound))).unwrap());
        assert!(!c.put(entry(rec(10, Status::UpperBound))).unwrap());
        assert!(c.put(entry(rec(7, Status::UpperBound))).unwrap());
        assert_eq!(c.lookup(&entry(rec(0, Status::Exact)).key).unwrap().record.value, 7);
        assert!(c.put(entry(rec(5, Status::Exact))).unwrap());
        assert_eq!(c.lookup(&entry(rec(0, Status::Exact)).key).unwrap().record.status, Status::Exact);
    }

    #[test]
    fn scaled_and_absolute_keys_agree() {
        let g = parse_group("3,3").unwrap();
        let a = CacheKey::new(&g, Quantity::SK, Some(&LengthSpec::scaled([1, 2], 3).unwrap()));
        let b = CacheKey::new(&g, Quantity::SK, Some(&LengthSpec::absolute([3, 6]).unwrap()));
        assert_eq!(a, b);
    }
}
