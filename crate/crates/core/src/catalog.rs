//! Built-in metric pairs.
//!
//! Every entry is stored as a pair file under `catalog/` in this crate and
//! embedded at compile time, so loading an entry by name and loading its file
//! from disk produce the same pair.

use std::path::PathBuf;

use thiserror::Error;

use crate::pairfile::parse_pair_file;
use crate::projective::ProjectivePair;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown catalog entry `{0}`")]
pub struct UnknownEntry(pub String);

/// A named pair with its expected verdict.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub pair: ProjectivePair,
    pub expected_equivalent: bool,
    /// Signatures of `g` and `ḡ` on the domain.
    pub signature: &'static str,
    /// Which classical family the pair comes from.
    pub provenance: String,
    /// The pair file text.
    pub source: &'static str,
}

struct Record {
    name: &'static str,
    source: &'static str,
    expected_equivalent: bool,
    signature: &'static str,
}

macro_rules! record {
    ($name:literal, $equiv:expr, $sig:literal) => {
        Record {
            name: $name,
            source: include_str!(concat!("../catalog/", $name, ".toml")),
            expected_equivalent: $equiv,
            signature: $sig,
        }
    };
}

const RECORDS: &[Record] = &[
    record!("trivial", true, "g Riemannian, gbar Riemannian"),
    record!("trivial3", true, "g Riemannian, gbar Riemannian"),
    record!("scaled", true, "g Riemannian, gbar Riemannian"),
    record!("dini", true, "g Riemannian, gbar Riemannian"),
    record!("beltrami", true, "g Riemannian, gbar Riemannian"),
    record!("beltrami_sphere", true, "g Riemannian, gbar Riemannian"),
    record!("lorentz_dini", true, "g Riemannian, gbar Lorentzian"),
    record!("lorentz_lc", true, "g Lorentzian, gbar Lorentzian"),
    record!("lc3", true, "g Riemannian, gbar Riemannian"),
    record!("jordan", true, "g Lorentzian, gbar Lorentzian"),
    record!("control_nonequiv", false, "g Riemannian, gbar Riemannian"),
    record!("control_nonequiv3", false, "g Riemannian, gbar Riemannian"),
];

/// Names of all entries, in catalog order.
pub fn list_entries() -> Vec<&'static str> {
    RECORDS.iter().map(|r| r.name).collect()
}

/// Loads an entry by name.
pub fn get_entry(name: &str) -> Result<CatalogEntry, UnknownEntry> {
    let record = RECORDS
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| UnknownEntry(name.to_string()))?;
    let file = parse_pair_file(record.source)
        .unwrap_or_else(|e| panic!("catalog file {}.toml is malformed: {e}", record.name));
    Ok(CatalogEntry {
        name: record.name,
        pair: file.pair,
        expected_equivalent: record.expected_equivalent,
        signature: record.signature,
        provenance: file.notes.unwrap_or_default(),
        source: record.source,
    })
}

/// All entries.
pub fn entries() -> Vec<CatalogEntry> {
    RECORDS
        .iter()
        .map(|r| get_entry(r.name).expect("listed"))
        .collect()
}

/// Directory holding the pair files of the catalog in the source tree.
pub fn catalog_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("catalog")
}
