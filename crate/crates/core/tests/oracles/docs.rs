//! Random documents with their expected canonical encoding, computed
//! without the store's encoder, and a SHA-256 oracle for their addresses.

use rand::seq::SliceRandom;
use rand::Rng;
use sha2::{Digest as _, Sha256};

/// A document whose numbers are kept as `mantissa × 10^-scale`.
#[derive(Debug, Clone)]
pub enum Doc {
    Null,
    Bool(bool),
    Num {
        mantissa: i64,
        scale: u32,
    },
    Str(String),
    List(Vec<Doc>),
    /// Unique keys in generation order.
    Map(Vec<(String, Doc)>),
}

const ALPHABET: &[char] = &[
    'a', 'b', 'z', 'A', 'Q', '0', '7', ' ', '_', '-', '"', '\\', '/', '\n', '\t', '\u{1}', '\u{1f}', '\u{7f}', 'é',
    'ß', 'ж', '中', '😀', '\u{2028}',
];

pub fn random_string(rng: &mut impl Rng) -> String {
    let len = rng.gen_range(0..8);
    (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

pub fn random_doc(rng: &mut impl Rng, depth: u32) -> Doc {
    let leaf_only = depth == 0;
    match rng.gen_range(0..if leaf_only { 4 } else { 6 }) {
        0 => Doc::Null,
        1 => Doc::Bool(rng.gen()),
        2 => Doc::Num {
            mantissa: rng.gen_range(-1_000_000_000_000i64..1_000_000_000_000),
            scale: rng.gen_range(0..6),
        },
        3 => Doc::Str(random_string(rng)),
        4 => Doc::List((0..rng.gen_range(0..5)).map(|_| random_doc(rng, depth - 1)).collect()),
        _ => {
            let mut entries: Vec<(String, Doc)> = Vec::new();
            for _ in 0..rng.gen_range(0..6) {
                let k = random_string(rng);
                if entries.iter().all(|(e, _)| *e != k) {
                    entries.push((k, random_doc(rng, depth - 1)));
                }
            }
            Doc::Map(entries)
        }
    }
}

/// A random top-level map, the shape every stored document has in practice.
pub fn random_document(rng: &mut impl Rng) -> Doc {
    loop {
        if let d @ Doc::Map(_) = random_doc(rng, 3) {
            return d;
        }
    }
}

fn escape(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Shortest decimal spelling: no exponent, no trailing fractional zeros,
/// no negative zero.
fn number(mantissa: i64, scale: u32) -> String {
    if mantissa == 0 {
        return "0".into();
    }
    let digits = mantissa.unsigned_abs().to_string();
    let scale = scale as usize;
    let padded = format!("{digits:0>width$}", width = scale + 1);
    let (int, frac) = padded.split_at(padded.len() - scale);
    let frac = frac.trim_end_matches('0');
    let sign = if mantissa < 0 { "-" } else { "" };
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Expected canonical bytes: keys sorted by UTF-8 bytes, no whitespace.
pub fn canonical(doc: &Doc) -> String {
    let mut out = String::new();
    write_canonical(doc, &mut out);
    out
}

fn write_canonical(doc: &Doc, out: &mut String) {
    match doc {
        Doc::Null => out.push_str("null"),
        Doc::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Doc::Num { mantissa, scale } => out.push_str(&number(*mantissa, *scale)),
        Doc::Str(s) => escape(s, out),
        Doc::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Doc::Map(entries) => {
            let mut sorted: Vec<&(String, Doc)> = entries.iter().collect();
            sorted.sort_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
            out.push('{');
            for (i, (k, v)) in sorted.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                escape(k, out);
                out.push(':');
                write_canonical(v, out);
            }
            out.push('}');
        }
    }
}

/// Some valid JSON spelling of `doc`: shuffled keys, random whitespace,
/// redundant trailing zeros and `\u` escapes.
pub fn render(doc: &Doc, rng: &mut impl Rng) -> String {
    let mut out = String::new();
    write_render(doc, rng, &mut out);
    out
}

fn ws(rng: &mut impl Rng, out: &mut String) {
    for _ in 0..rng.gen_range(0..3) {
        out.push(*[' ', '\n', '\t', '\r'].choose(rng).unwrap());
    }
}

fn render_string(s: &str, rng: &mut impl Rng, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        let code = c as u32;
        if code < 0x20 || c == '"' || c == '\\' || (code < 0x10000 && rng.gen_bool(0.1)) {
            out.push_str(&format!("\\u{code:04X}"));
        } else {
            out.push(c);
        }
    }
    out.push('"');
}

fn write_render(doc: &Doc, rng: &mut impl Rng, out: &mut String) {
    ws(rng, out);
    match doc {
        Doc::Null => out.push_str("null"),
        Doc::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Doc::Num { mantissa, scale } => {
            let extra = rng.gen_range(0..3u32);
            let m = i128::from(*mantissa) * 10i128.pow(extra);
            let scale = (*scale + extra) as usize;
            let digits = m.unsigned_abs().to_string();
            let padded = format!("{digits:0>width$}", width = scale + 1);
            let (int, frac) = padded.split_at(padded.len() - scale);
            let sign = if m < 0 { "-" } else { "" };
            if frac.is_empty() {
                out.push_str(&format!("{sign}{int}"));
            } else {
                out.push_str(&format!("{sign}{int}.{frac}"));
            }
        }
        Doc::Str(s) => render_string(s, rng, out),
        Doc::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_render(item, rng, out);
            }
            ws(rng, out);
            out.push(']');
        }
        Doc::Map(entries) => {
            let mut shuffled: Vec<&(String, Doc)> = entries.iter().collect();
            shuffled.shuffle(rng);
            out.push('{');
            for (i, (k, v)) in shuffled.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                ws(rng, out);
                render_string(k, rng, out);
                ws(rng, out);
                out.push(':');
                write_render(v, rng, out);
            }
            ws(rng, out);
            out.push('}');
        }
    }
    ws(rng, out);
}

/// `cid:` + lowercase hex SHA-256.
pub fn expected_uri(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("cid:{hex}")
}

#[derive(Debug, Default)]
pub struct DocReport {
    pub documents: usize,
    pub distinct: usize,
    pub violations: Vec<String>,
}

/// Puts `count` random documents, each in two spellings, and checks the
/// address, idempotence, round trip and on-disk bytes of every one. With a
/// `root`, every document is read back again from a freshly opened store.
pub fn check_store(root: Option<&std::path::Path>, count: usize, rng: &mut impl Rng) -> DocReport {
    use std::collections::BTreeSet;
    use tdr_core::docstore::{canonicalize, parse, DocStore};

    let store = match root {
        Some(r) => DocStore::open(r).expect("open store"),
        None => DocStore::in_memory(),
    };
    let mut report = DocReport::default();
    let mut seen = BTreeSet::new();
    let mut stored = Vec::new();
    for i in 0..count {
        let doc = random_document(rng);
        let expected = canonical(&doc);
        let uri = expected_uri(&expected);
        let mut fail = |m: String| report.violations.push(format!("doc {i}: {m}"));
        let (a, b) = (render(&doc, rng), render(&doc, rng));
        let (va, vb) = match (parse(a.as_bytes()), parse(b.as_bytes())) {
            (Ok(va), Ok(vb)) => (va, vb),
            (ra, rb) => {
                fail(format!("parse failed: {:?} / {:?}", ra.err(), rb.err()));
                continue;
            }
        };
        if canonicalize(&va).ok().as_deref() != Some(expected.as_bytes()) {
            fail(format!("canonical form differs for {a:?}"));
        }
        let before = if root.is_none() { store.len() } else { 0 };
        let (ua, ub) = (store.put(&va).expect("put"), store.put(&vb).expect("put again"));
        if ua.to_string() != uri || ub.to_string() != uri {
            fail(format!("addresses {ua} / {ub}, oracle {uri}"));
        }
        let fresh = seen.insert(uri.clone());
        if root.is_none() && store.len() != before + usize::from(fresh) {
            fail(format!("store grew from {before} to {}", store.len()));
        }
        match store.get(&ua).map(|v| canonicalize(&v)) {
            Ok(Ok(bytes)) if bytes == expected.as_bytes() => {}
            other => fail(format!("round trip gave {other:?}")),
        }
        if let Some(root) = root {
            let hex = &uri[4..];
            let path = root.join(&hex[..2]).join(hex);
            if std::fs::read(&path).ok().as_deref() != Some(expected.as_bytes()) {
                fail(format!("{} does not hold the canonical bytes", path.display()));
            }
        }
        stored.push((ua, expected));
    }
    if let Some(root) = root {
        let reopened = DocStore::open(root).expect("reopen");
        for (uri, expected) in &stored {
            match reopened.get(uri).map(|v| canonicalize(&v)) {
                Ok(Ok(bytes)) if bytes == expected.as_bytes() => {}
                other => report.violations.push(format!("{uri} after reopen: {other:?}")),
            }
        }
    }
    if store.len() != seen.len() {
        report.violations.push(format!(
            "store holds {} documents, expected {}",
            store.len(),
            seen.len()
        ));
    }
    report.documents = count;
    report.distinct = seen.len();
    report
}
