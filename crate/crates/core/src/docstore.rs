//! Local content-addressed document store.
//!
//! Documents are canonicalized to deterministic JSON bytes (sorted keys, no
//! whitespace, fixed-point numbers) and addressed by `cid:` + the lowercase
//! hex SHA-256 of those bytes. On disk each document lives at
//! `<root>/<first two hex chars>/<digest>`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use parking_lot::RwLock;
use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::crypto::Digest;

const CID_PREFIX: &str = "cid:";

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("unsupported value: {0}")]
    UnsupportedValue(String),
    #[error("document not found: {0}")]
    NotFound(String),
    #[error("malformed content address: {0:?}")]
    InvalidUri(String),
    #[error("stored document {0} failed its integrity check")]
    Corrupt(String),
    #[error("document store I/O: {0}")]
    Io(#[from] std::io::Error),
}

impl DocError {
    pub fn code(&self) -> &'static str {
        match self {
            DocError::UnsupportedValue(_) => "UnsupportedValue",
            DocError::NotFound(_) => "NotFound",
            DocError::InvalidUri(_) => "InvalidUri",
            DocError::Corrupt(_) => "Corrupt",
            DocError::Io(_) => "Io",
        }
    }
}

/// A structured document tree.
///
/// `Float` is accepted as input and emitted in fixed-point form; documents
/// read back from the store never contain it.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Number(Decimal),
    Float(f64),
    String(String),
    List(Vec<Value>),
    Map(BTreeMap<String, Value>),
}

impl Value {
    pub fn map<K: Into<String>>(entries: impl IntoIterator<Item = (K, Value)>) -> Value {
        Value::Map(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn str(s: impl Into<String>) -> Value {
        Value::String(s.into())
    }

    pub fn int(i: i64) -> Value {
        Value::Number(Decimal::from(i))
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        match self {
            Value::Map(m) => m.get(key),
            _ => None,
        }
    }

    /// Converts from a parsed JSON value. Numbers keep their exact decimal
    /// spelling (the workspace enables `arbitrary_precision`).
    pub fn from_json(json: &serde_json::Value) -> Result<Value, DocError> {
        Ok(match json {
            serde_json::Value::Null => Value::Null,
            serde_json::Value::Bool(b) => Value::Bool(*b),
            serde_json::Value::Number(n) => Value::Number(parse_number(&n.to_string())?),
            serde_json::Value::String(s) => Value::String(s.clone()),
            serde_json::Value::Array(items) => {
                Value::List(items.iter().map(Value::from_json).collect::<Result<_, _>>()?)
            }
            serde_json::Value::Object(obj) => Value::Map(
                obj.iter()
                    .map(|(k, v)| Ok((k.clone(), Value::from_json(v)?)))
                    .collect::<Result<_, DocError>>()?,
            ),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let bytes = canonicalize(self).expect("stored documents are canonicalizable");
        serde_json::from_slice(&bytes).expect("canonical bytes are valid JSON")
    }
}

fn parse_number(text: &str) -> Result<Decimal, DocError> {
    let parsed = if text.contains(['e', 'E']) {
        Decimal::from_scientific(text)
    } else {
        Decimal::from_str_exact(text)
    };
    parsed.map_err(|_| DocError::UnsupportedValue(format!("number {text} out of range")))
}

fn decimal_text(d: Decimal) -> String {
    let n = d.normalize();
    if n.is_zero() {
        "0".to_owned()
    } else {
        n.to_string()
    }
}

/// Deterministic byte encoding of a document.
pub fn canonicalize(value: &Value) -> Result<Vec<u8>, DocError> {
    let mut out = Vec::new();
    write_canonical(value, &mut out)?;
    Ok(out)
}

fn write_canonical(value: &Value, out: &mut Vec<u8>) -> Result<(), DocError> {
    match value {
        Value::Null => out.extend_from_slice(b"null"),
        Value::Bool(true) => out.extend_from_slice(b"true"),
        Value::Bool(false) => out.extend_from_slice(b"false"),
        Value::Number(d) => out.extend_from_slice(decimal_text(*d).as_bytes()),
        Value::Float(f) => {
            if !f.is_finite() {
                return Err(DocError::UnsupportedValue(format!("non-finite number {f}")));
            }
            // Shortest round-trip spelling, then exact decimal.
            let d = parse_number(&format!("{f:?}"))?;
            out.extend_from_slice(decimal_text(d).as_bytes());
        }
        Value::String(s) => out.extend_from_slice(serde_json::to_string(s).expect("string").as_bytes()),
        Value::List(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_canonical(item, out)?;
            }
            out.push(b']');
        }
        Value::Map(entries) => {
            // BTreeMap<String, _> iterates in byte order, which for UTF-8 is
            // code-point order.
            out.push(b'{');
            for (i, (k, v)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                out.extend_from_slice(serde_json::to_string(k).expect("key").as_bytes());
                out.push(b':');
                write_canonical(v, out)?;
            }
            out.push(b'}');
        }
    }
    Ok(())
}

/// Parses canonical (or any JSON) bytes back into a document.
pub fn parse(bytes: &[u8]) -> Result<Value, DocError> {
    let json: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| DocError::UnsupportedValue(format!("invalid JSON: {e}")))?;
    Value::from_json(&json)
}

/// `cid:` + lowercase hex SHA-256 of canonical bytes.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentAddress(Digest);

impl ContentAddress {
    pub fn of_bytes(canonical: &[u8]) -> Self {
        ContentAddress(Digest::of(canonical))
    }

    pub fn of(value: &Value) -> Result<Self, DocError> {
        Ok(Self::of_bytes(&canonicalize(value)?))
    }

    pub fn digest(&self) -> Digest {
        self.0
    }
}

impl fmt::Display for ContentAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{CID_PREFIX}{}", self.0)
    }
}

impl fmt::Debug for ContentAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for ContentAddress {
    type Err = DocError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix(CID_PREFIX)
            .and_then(|hex| hex.parse().ok())
            .map(ContentAddress)
            .ok_or_else(|| DocError::InvalidUri(s.to_owned()))
    }
}

impl Serialize for ContentAddress {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ContentAddress {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Append-only store. Without a root directory it keeps documents in memory
/// only.
#[derive(Debug, Default)]
pub struct DocStore {
    root: Option<PathBuf>,
    cache: RwLock<HashMap<ContentAddress, Vec<u8>>>,
}

impl DocStore {
    pub fn in_memory() -> Self {
        DocStore::default()
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self, DocError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(DocStore {
            root: Some(root),
            cache: RwLock::default(),
        })
    }

    fn path_for(root: &Path, address: &ContentAddress) -> PathBuf {
        let hex = address.digest().to_hex();
        root.join(&hex[..2]).join(hex)
    }

    pub fn put(&self, document: &Value) -> Result<ContentAddress, DocError> {
        let bytes = canonicalize(document)?;
        self.put_canonical(bytes)
    }

    fn put_canonical(&self, bytes: Vec<u8>) -> Result<ContentAddress, DocError> {
        let address = ContentAddress::of_bytes(&bytes);
        if self.cache.read().contains_key(&address) {
            return Ok(address);
        }
        if let Some(root) = &self.root {
            let path = Self::path_for(root, &address);
            if !path.exists() {
                let dir = path.parent().expect("sharded path has a parent");
                fs::create_dir_all(dir)?;
                // Unique temp name per writer; rename makes concurrent puts of
                // the same content converge on one file.
                let tmp = dir.join(format!(".{}.{}.tmp", address.digest().to_hex(), rand::random::<u64>()));
                let mut f = fs::File::create(&tmp)?;
                f.write_all(&bytes)?;
                f.sync_all()?;
                fs::rename(&tmp, &path)?;
            }
        }
        self.cache.write().entry(address).or_insert(bytes);
        Ok(address)
    }

    pub fn contains(&self, address: &ContentAddress) -> bool {
        self.get_bytes(address).is_ok()
    }

    pub fn get_bytes(&self, address: &ContentAddress) -> Result<Vec<u8>, DocError> {
        if let Some(bytes) = self.cache.read().get(address) {
            return Ok(bytes.clone());
        }
        let root = self
            .root
            .as_ref()
            .ok_or_else(|| DocError::NotFound(address.to_string()))?;
        let bytes = match fs::read(Self::path_for(root, address)) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(DocError::NotFound(address.to_string())),
            Err(e) => return Err(e.into()),
        };
        if ContentAddress::of_bytes(&bytes) != *address {
            return Err(DocError::Corrupt(address.to_string()));
        }
        self.cache.write().insert(*address, bytes.clone());
        Ok(bytes)
    }

    pub fn get(&self, address: &ContentAddress) -> Result<Value, DocError> {
        parse(&self.get_bytes(address)?)
    }

    pub fn get_uri(&self, uri: &str) -> Result<Value, DocError> {
        self.get(&uri.parse()?)
    }

    /// Number of distinct stored documents visible to this handle.
    pub fn len(&self) -> usize {
        match &self.root {
            None => self.cache.read().len(),
            Some(root) => walk_count(root),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn walk_count(root: &Path) -> usize {
    let Ok(shards) = fs::read_dir(root) else { return 0 };
    shards
        .flatten()
        .filter(|e| e.path().is_dir())
        .map(|shard| {
            fs::read_dir(shard.path())
                .map(|files| {
                    files
                        .flatten()
                        .filter(|f| !f.file_name().to_string_lossy().starts_with('.'))
                        .count()
                })
                .unwrap_or(0)
        })
        .sum()
}
