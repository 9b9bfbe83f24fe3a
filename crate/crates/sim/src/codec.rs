//! Byte-level serialization and the on-disk node-directory layout.
//!
//! File mode needs `q >= 257` so every byte maps to a distinct field
//! element. A file is cut into stripes of `B * v` bytes, each stripe encoded
//! as one independent code instance; the final stripe ends with an 8-byte
//! little-endian length trailer (zero padding in between) so arbitrary file
//! sizes round-trip exactly.
//!
//! Layout under an encoded directory:
//!
//! ```text
//! manifest.txt        key=value lines: n, k, d, b, q, v, stripes
//! trust/hashes.txt    one hash-store block per stripe
//! node_<i>/symbols.txt  alpha lines per stripe: partner<TAB>c1<TAB>c2...
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use pmdss_core::field::SymbolVector;
use pmdss_core::hashing::HashStore;
use pmdss_core::pm_code::{encode_system, SymbolId};
use pmdss_core::{NodeState, SystemParams};

use crate::error::SimError;

const LENGTH_TRAILER: usize = 8;

/// Minimum modulus for byte-injective file mode.
pub const FILE_MODE_MIN_Q: u64 = 257;

/// Splits raw bytes into per-stripe symbol lists (each `B` symbols of `v`
/// elements). Appends zero padding plus the length trailer.
pub fn bytes_to_stripes(
    params: &SystemParams,
    data: &[u8],
) -> Result<Vec<Vec<SymbolVector>>, SimError> {
    if params.q() < FILE_MODE_MIN_Q {
        return Err(SimError::Config(format!(
            "file mode needs q >= {FILE_MODE_MIN_Q}, got {}",
            params.q()
        )));
    }
    let field = params.field();
    let payload = params.file_size() * params.v();
    let total = (data.len() + LENGTH_TRAILER).div_ceil(payload) * payload;
    let mut stream = Vec::with_capacity(total);
    stream.extend_from_slice(data);
    stream.resize(total - LENGTH_TRAILER, 0);
    stream.extend_from_slice(&(data.len() as u64).to_le_bytes());

    let mut stripes = Vec::with_capacity(total / payload);
    for chunk in stream.chunks(payload) {
        let symbols: Vec<SymbolVector> = chunk
            .chunks(params.v())
            .map(|bytes| SymbolVector::new(bytes.iter().map(|&b| field.elem(b as u64)).collect()))
            .collect();
        stripes.push(symbols);
    }
    Ok(stripes)
}

/// Inverse of [`bytes_to_stripes`]: flattens the stripes and strips the
/// padding using the length trailer.
pub fn stripes_to_bytes(
    params: &SystemParams,
    stripes: &[Vec<SymbolVector>],
) -> Result<Vec<u8>, SimError> {
    let payload = params.file_size() * params.v();
    let mut stream = Vec::with_capacity(stripes.len() * payload);
    for symbols in stripes {
        for s in symbols {
            for &c in s.components() {
                let value = c.value();
                if value > 255 {
                    return Err(SimError::Codec(format!(
                        "element {value} does not decode to a byte"
                    )));
                }
                stream.push(value as u8);
            }
        }
    }
    if stream.len() < LENGTH_TRAILER {
        return Err(SimError::Codec("decoded stream too short".into()));
    }
    let trailer: [u8; LENGTH_TRAILER] = stream[stream.len() - LENGTH_TRAILER..]
        .try_into()
        .expect("slice of trailer length");
    let len = u64::from_le_bytes(trailer) as usize;
    if len > stream.len() - LENGTH_TRAILER {
        return Err(SimError::Codec(format!(
            "length trailer {len} exceeds payload {}",
            stream.len() - LENGTH_TRAILER
        )));
    }
    stream.truncate(len);
    Ok(stream)
}

/// Everything one encoded directory describes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub params: SystemParams,
    pub stripes: usize,
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), SimError> {
    let p = &manifest.params;
    let text = format!(
        "n={}\nk={}\nd={}\nb={}\nq={}\nv={}\nstripes={}\n",
        p.n(),
        p.k(),
        p.d(),
        p.b(),
        p.q(),
        p.v(),
        manifest.stripes
    );
    fs::write(dir.join("manifest.txt"), text)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, SimError> {
    let text = fs::read_to_string(dir.join("manifest.txt"))?;
    let mut n = None;
    let mut k = None;
    let mut d = None;
    let mut b = None;
    let mut q = None;
    let mut v = None;
    let mut stripes = None;
    for line in text.lines() {
        let Some((key, value)) = line.split_once('=') else {
            return Err(SimError::Codec(format!("bad manifest line {line:?}")));
        };
        let value: u64 = value
            .parse()
            .map_err(|_| SimError::Codec(format!("bad manifest value {line:?}")))?;
        match key {
            "n" => n = Some(value as usize),
            "k" => k = Some(value as usize),
            "d" => d = Some(value as usize),
            "b" => b = Some(value as usize),
            "q" => q = Some(value),
            "v" => v = Some(value as usize),
            "stripes" => stripes = Some(value as usize),
            other => return Err(SimError::Codec(format!("unknown manifest key {other:?}"))),
        }
    }
    let missing = |what: &str| SimError::Codec(format!("manifest missing {what}"));
    let params = SystemParams::new(
        n.ok_or_else(|| missing("n"))?,
        k.ok_or_else(|| missing("k"))?,
        d.ok_or_else(|| missing("d"))?,
        b.ok_or_else(|| missing("b"))?,
        q.ok_or_else(|| missing("q"))?,
        v.ok_or_else(|| missing("v"))?,
    )?;
    Ok(Manifest {
        params,
        stripes: stripes.ok_or_else(|| missing("stripes"))?,
    })
}

/// Encodes all stripes into `dir`: node directories plus the trusted store.
pub fn write_system(
    dir: &Path,
    params: &SystemParams,
    stripes: &[Vec<SymbolVector>],
) -> Result<(), SimError> {
    fs::create_dir_all(dir.join("trust"))?;
    let mut node_files: Vec<fs::File> = Vec::with_capacity(params.n());
    for i in 1..=params.n() {
        let node_dir = dir.join(format!("node_{i}"));
        fs::create_dir_all(&node_dir)?;
        node_files.push(fs::File::create(node_dir.join("symbols.txt"))?);
    }
    let mut trust = fs::File::create(dir.join("trust").join("hashes.txt"))?;

    for symbols in stripes {
        let sys = encode_system(params, symbols)?;
        let store = HashStore::build(params, &sys.symbols)?;
        store.write_text(params, &mut trust)?;
        for (node, file) in sys.nodes.iter().zip(node_files.iter_mut()) {
            write_node_stripe(file, node)?;
        }
    }
    write_manifest(
        dir,
        &Manifest {
            params: *params,
            stripes: stripes.len(),
        },
    )?;
    Ok(())
}

fn write_node_stripe(w: &mut impl Write, node: &NodeState) -> Result<(), SimError> {
    for s in node.stored() {
        let partner = s
            .id
            .partner_of(node.node_id())
            .expect("stored symbol involves the node");
        let mut line = partner.to_string();
        for &c in s.value.components() {
            line.push('\t');
            line.push_str(&c.value().to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Loads one node's storage, one `NodeState` per stripe.
pub fn load_node(
    dir: &Path,
    manifest: &Manifest,
    node_id: usize,
) -> Result<Vec<NodeState>, SimError> {
    let params = &manifest.params;
    params.validate_node_id(node_id)?;
    let path = dir.join(format!("node_{node_id}")).join("symbols.txt");
    let file = fs::File::open(&path)
        .map_err(|e| SimError::Codec(format!("{}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let field = params.field();
    let mut out = Vec::with_capacity(manifest.stripes);
    for stripe in 0..manifest.stripes {
        let mut stored = Vec::with_capacity(params.alpha());
        for _ in 0..params.alpha() {
            let line = lines
                .next()
                .ok_or_else(|| SimError::Codec(format!("node {node_id}: truncated at stripe {stripe}")))?
                .map_err(SimError::Io)?;
            let mut fields = line.split('\t');
            let partner: usize = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| SimError::Codec(format!("bad symbol line {line:?}")))?;
            let components = fields
                .map(|s| {
                    let value: u64 = s
                        .parse()
                        .map_err(|_| SimError::Codec(format!("bad element {s:?}")))?;
                    if value >= params.q() {
                        return Err(SimError::Codec(format!(
                            "element {value} out of range mod {}",
                            params.q()
                        )));
                    }
                    Ok(field.elem(value))
                })
                .collect::<Result<Vec<_>, SimError>>()?;
            if components.len() != params.v() {
                return Err(SimError::Codec(format!(
                    "symbol has {} elements, expected {}",
                    components.len(),
                    params.v()
                )));
            }
            stored.push(pmdss_core::CrossSymbol {
                id: SymbolId::new(node_id, partner)?,
                value: SymbolVector::new(components),
            });
        }
        out.push(NodeState::from_symbols(node_id, stored));
    }
    Ok(out)
}

/// Rewrites one node's storage in place (the corrupt subcommand).
pub fn store_node(dir: &Path, states: &[NodeState]) -> Result<(), SimError> {
    let node_id = states
        .first()
        .map(NodeState::node_id)
        .ok_or_else(|| SimError::Codec("no stripes to store".into()))?;
    let path = dir.join(format!("node_{node_id}")).join("symbols.txt");
    let mut file = fs::File::create(path)?;
    for node in states {
        write_node_stripe(&mut file, node)?;
    }
    Ok(())
}

/// Loads the trusted store, one `HashStore` per stripe.
pub fn load_trust(dir: &Path, manifest: &Manifest) -> Result<Vec<HashStore>, SimError> {
    let path = dir.join("trust").join("hashes.txt");
    let file = fs::File::open(&path)
        .map_err(|e| SimError::Codec(format!("{}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let mut out = Vec::with_capacity(manifest.stripes);
    for _ in 0..manifest.stripes {
        let (header, store) = HashStore::read_text(&mut reader)?;
        if header.n != manifest.params.n()
            || header.q != manifest.params.q()
            || header.v != manifest.params.v()
        {
            return Err(SimError::Codec(
                "trusted store header disagrees with manifest".into(),
            ));
        }
        out.push(store);
    }
    Ok(out)
}
