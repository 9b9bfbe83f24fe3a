//! Correlation hashes and the trusted server.
//!
//! The hash of two distinct cross symbols is their dot product over `F_q`,
//! one scalar per pair. The trusted server stores the hash of every pair of
//! distinct symbols, `C(theta, 2)` values for `theta = C(n, 2)` symbols, and
//! is incorruptible by the adversary: repair and reconstruction compare
//! recomputed hashes of downloaded data against these stored values.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::field::{dot_product, FieldElement, FieldError, PrimeField};
use crate::pm_code::{CrossSymbol, SystemParams};

pub use crate::pm_code::SymbolId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HashError {
    #[error("correlation hash needs two distinct symbols ({0})")]
    SamePair(SymbolId),
    #[error("expected the complete set of {expected} cross symbols, got {got}")]
    IncompleteSymbolSet { expected: usize, got: usize },
    #[error("unknown symbol id {0}")]
    UnknownSymbolId(SymbolId),
    #[error("store is sealed and cannot be repopulated")]
    StoreSealed,
    #[error("store has not been populated")]
    StoreNotSealed,
    #[error("malformed store data: {0}")]
    Malformed(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// The correlation hash of two distinct symbols: their dot product in `F_q`.
pub fn correlation_hash(
    field: PrimeField,
    x: &CrossSymbol,
    y: &CrossSymbol,
) -> Result<FieldElement, HashError> {
    if x.id == y.id {
        return Err(HashError::SamePair(x.id));
    }
    Ok(dot_product(field, &x.value, &y.value)?)
}

fn pair_key(a: SymbolId, b: SymbolId) -> (SymbolId, SymbolId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// The trusted server: every pairwise correlation hash, keyed by the
/// canonically ordered pair of symbol ids. Populated once, then sealed
/// read-only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashStore {
    n: usize,
    entries: BTreeMap<(SymbolId, SymbolId), FieldElement>,
    sealed: bool,
}

impl HashStore {
    pub fn new(n: usize) -> Self {
        HashStore {
            n,
            entries: BTreeMap::new(),
            sealed: false,
        }
    }

    /// Builds and seals a store from the complete cross-symbol set.
    pub fn build(params: &SystemParams, symbols: &[CrossSymbol]) -> Result<Self, HashError> {
        let mut store = HashStore::new(params.n());
        store.populate(params.field(), symbols)?;
        Ok(store)
    }

    /// Number of distinct cross symbols covered, `theta = C(n, 2)`.
    pub fn theta(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    /// Computes all `C(theta, 2)` pairwise hashes and seals the store.
    /// Requires the complete symbol set, each id exactly once.
    pub fn populate(
        &mut self,
        field: PrimeField,
        symbols: &[CrossSymbol],
    ) -> Result<(), HashError> {
        if self.sealed {
            return Err(HashError::StoreSealed);
        }
        let expected = self.theta();
        if symbols.len() != expected {
            return Err(HashError::IncompleteSymbolSet {
                expected,
                got: symbols.len(),
            });
        }
        let mut seen = BTreeMap::new();
        for s in symbols {
            let (lo, hi) = s.id.nodes();
            if hi > self.n {
                return Err(HashError::UnknownSymbolId(s.id));
            }
            if seen.insert(s.id, ()).is_some() {
                return Err(HashError::IncompleteSymbolSet {
                    expected,
                    got: symbols.len(),
                });
            }
            let _ = lo;
        }
        for (i, x) in symbols.iter().enumerate() {
            for y in &symbols[i + 1..] {
                let h = correlation_hash(field, x, y)?;
                self.entries.insert(pair_key(x.id, y.id), h);
            }
        }
        self.sealed = true;
        Ok(())
    }

    fn validate_id(&self, id: SymbolId) -> Result<(), HashError> {
        let (_, hi) = id.nodes();
        if hi > self.n {
            return Err(HashError::UnknownSymbolId(id));
        }
        Ok(())
    }

    /// The stored hash for a pair of distinct symbols.
    pub fn get(&self, a: SymbolId, b: SymbolId) -> Result<FieldElement, HashError> {
        if !self.sealed {
            return Err(HashError::StoreNotSealed);
        }
        if a == b {
            return Err(HashError::SamePair(a));
        }
        self.validate_id(a)?;
        self.validate_id(b)?;
        self.entries
            .get(&pair_key(a, b))
            .copied()
            .ok_or(HashError::UnknownSymbolId(a))
    }

    /// All pairwise hashes among the requested ids, as a download from the
    /// trusted server.
    pub fn fetch_hashes(
        &self,
        ids: &[SymbolId],
    ) -> Result<BTreeMap<(SymbolId, SymbolId), FieldElement>, HashError> {
        if !self.sealed {
            return Err(HashError::StoreNotSealed);
        }
        let mut unique: Vec<SymbolId> = ids.to_vec();
        unique.sort();
        unique.dedup();
        for &id in &unique {
            self.validate_id(id)?;
        }
        let mut out = BTreeMap::new();
        for (i, &a) in unique.iter().enumerate() {
            for &b in &unique[i + 1..] {
                out.insert(pair_key(a, b), self.get(a, b)?);
            }
        }
        Ok(out)
    }

    /// Writes the store as decimal text: one header line `n k' d' q v`, then
    /// one `lo hi lo hi value` line per entry in sorted order, all fields
    /// tab-separated.
    pub fn write_text<W: Write>(&self, params: &SystemParams, w: &mut W) -> io::Result<()> {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            params.n(),
            params.k_eff(),
            params.d_eff(),
            params.q(),
            params.v()
        )?;
        for (&(a, b), &h) in &self.entries {
            let (alo, ahi) = a.nodes();
            let (blo, bhi) = b.nodes();
            writeln!(w, "{alo}\t{ahi}\t{blo}\t{bhi}\t{}", h.value())?;
        }
        Ok(())
    }

    /// Reads one store in the `write_text` layout; returns the header fields
    /// `(n, k', d', q, v)` alongside the sealed store.
    pub fn read_text<R: BufRead>(r: &mut R) -> Result<(StoreHeader, HashStore), HashError> {
        let mut line = String::new();
        if r.read_line(&mut line)
            .map_err(|e| HashError::Malformed(e.to_string()))?
            == 0
        {
            return Err(HashError::Malformed("missing header".into()));
        }
        let header = StoreHeader::parse(line.trim_end())?;
        let field = PrimeField::new(header.q)
            .map_err(|_| HashError::Malformed(format!("modulus {} is not prime", header.q)))?;
        let mut store = HashStore::new(header.n);
        let expected_entries = {
            let theta = store.theta();
            theta * (theta.saturating_sub(1)) / 2
        };
        for _ in 0..expected_entries {
            line.clear();
            if r.read_line(&mut line)
                .map_err(|e| HashError::Malformed(e.to_string()))?
                == 0
            {
                return Err(HashError::Malformed("truncated store".into()));
            }
            let fields: Vec<&str> = line.trim_end().split('\t').collect();
            if fields.len() != 5 {
                return Err(HashError::Malformed(format!(
                    "expected 5 fields, got {}",
                    fields.len()
                )));
            }
            let num = |s: &str| -> Result<u64, HashError> {
                s.parse()
                    .map_err(|_| HashError::Malformed(format!("bad number {s:?}")))
            };
            let a = SymbolId::new(num(fields[0])? as usize, num(fields[1])? as usize)
                .map_err(|e| HashError::Malformed(e.to_string()))?;
            let b = SymbolId::new(num(fields[2])? as usize, num(fields[3])? as usize)
                .map_err(|e| HashError::Malformed(e.to_string()))?;
            let value = num(fields[4])?;
            if value >= header.q {
                return Err(HashError::Malformed(format!(
                    "hash value {value} not reduced mod {}",
                    header.q
                )));
            }
            store.entries.insert(pair_key(a, b), field.elem(value));
        }
        if store.entries.len() != expected_entries {
            return Err(HashError::Malformed("duplicate entries".into()));
        }
        store.sealed = true;
        Ok((header, store))
    }
}

/// The `(n, k', d', q, v)` header of a serialized hash store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreHeader {
    pub n: usize,
    pub k_eff: usize,
    pub d_eff: usize,
    pub q: u64,
    pub v: usize,
}

impl StoreHeader {
    fn parse(line: &str) -> Result<Self, HashError> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(HashError::Malformed(format!(
                "header needs 5 fields, got {}",
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<u64, HashError> {
            s.parse()
                .map_err(|_| HashError::Malformed(format!("bad number {s:?}")))
        };
        Ok(StoreHeader {
            n: num(fields[0])? as usize,
            k_eff: num(fields[1])? as usize,
            d_eff: num(fields[2])? as usize,
            q: num(fields[3])?,
            v: num(fields[4])? as usize,
        })
    }
}

/// An exact nonnegative rational, kept reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Ratio {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den);
        Ratio {
            num: num / g.max(1),
            den: den / g.max(1),
        }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some((self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128)))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Ratio of hash storage to coded data storage: `C(theta, 2) / (n alpha v)`.
/// Shrinks as `O(1/v)` with the packet length.
pub fn overhead_ratio(params: &SystemParams) -> Ratio {
    let theta = params.theta() as u64;
    let hashes = theta * (theta - 1) / 2;
    let data = params.n() as u64 * params.alpha() as u64 * params.v() as u64;
    Ratio::new(hashes, data)
}
