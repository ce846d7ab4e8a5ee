//! Text file format for systems.
//!
//! A document is a JSON object with the fields `kind` (`"system"` or
//! `"block"`), `dim`, and then either `maps` (a list of `2^dim` map records)
//! or `f1` … `f4`. A map record is `{"perm": [..], "signs": [..], "v": [..]}`.
//! Unknown fields are rejected. [`emit_system`] writes the canonical layout:
//! fields in the order above, one map record per line, trailing newline.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{block_expand, BlockSystem, RepTileSystem};
use crate::lattice::{check_dim, LatticeIsometry};

/// A parsed file: either a plain system or a block system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IfsDocument {
    System(RepTileSystem),
    Block(BlockSystem),
}

impl IfsDocument {
    /// The system every analysis consumes; block systems are expanded.
    pub fn to_system(&self) -> RepTileSystem {
        match self {
            IfsDocument::System(s) => s.clone(),
            IfsDocument::Block(b) => block_expand(b),
        }
    }
}

impl From<RepTileSystem> for IfsDocument {
    fn from(s: RepTileSystem) -> Self {
        IfsDocument::System(s)
    }
}

impl From<BlockSystem> for IfsDocument {
    fn from(b: BlockSystem) -> Self {
        IfsDocument::Block(b)
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawMap {
    perm: Vec<i64>,
    signs: Vec<i64>,
    v: Vec<i64>,
}

/// Serde mirror of the document, also embedded verbatim in result-store lines.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawDoc {
    kind: String,
    dim: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    maps: Option<Vec<RawMap>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f1: Option<RawMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f2: Option<RawMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f3: Option<RawMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f4: Option<RawMap>,
}

fn raw_map(h: &LatticeIsometry) -> RawMap {
    RawMap {
        perm: h.matrix().perm().into_iter().map(|p| p as i64).collect(),
        signs: h.matrix().signs(),
        v: h.translation().coords().to_vec(),
    }
}

fn cook_map(raw: &RawMap, dim: usize, field: &str) -> Result<LatticeIsometry> {
    for (name, len) in [("perm", raw.perm.len()), ("signs", raw.signs.len()), ("v", raw.v.len())] {
        if len != dim {
            return Err(Error::validation(
                format!("{field}.{name}"),
                format!("expected {dim} entries, found {len}"),
            ));
        }
    }
    let perm = raw
        .perm
        .iter()
        .map(|&p| usize::try_from(p))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::validation(format!("{field}.perm"), "negative index"))?;
    LatticeIsometry::from_parts(&perm, &raw.signs, &raw.v).map_err(|e| match e {
        Error::Validation { field: inner, message } => {
            Error::validation(format!("{field}.{inner}"), message)
        }
        other => other,
    })
}

impl RawDoc {
    pub(crate) fn from_document(doc: &IfsDocument) -> RawDoc {
        match doc {
            IfsDocument::System(s) => RawDoc {
                kind: "system".into(),
                dim: s.dim() as i64,
                maps: Some(s.maps().iter().map(raw_map).collect()),
                f1: None,
                f2: None,
                f3: None,
                f4: None,
            },
            IfsDocument::Block(b) => RawDoc {
                kind: "block".into(),
                dim: 3,
                maps: None,
                f1: Some(raw_map(&b.f1)),
                f2: Some(raw_map(&b.f2)),
                f3: Some(raw_map(&b.f3)),
                f4: Some(raw_map(&b.f4)),
            },
        }
    }

    pub(crate) fn into_document(self) -> Result<IfsDocument> {
        let dim = usize::try_from(self.dim)
            .map_err(|_| Error::validation("dim", format!("{} is not 2 or 3", self.dim)))?;
        check_dim(dim).map_err(|_| Error::validation("dim", format!("{dim} is not 2 or 3")))?;
        let fs = [&self.f1, &self.f2, &self.f3, &self.f4];
        match self.kind.as_str() {
            "system" => {
                if let Some(i) = fs.iter().position(|f| f.is_some()) {
                    return Err(Error::validation(
                        format!("f{}", i + 1),
                        "not allowed for kind \"system\"",
                    ));
                }
                let raw = self
                    .maps
                    .ok_or_else(|| Error::validation("maps", "missing"))?;
                let m = 1usize << dim;
                if raw.len() != m {
                    return Err(Error::validation(
                        "maps",
                        format!("expected {m} maps, found {}", raw.len()),
                    ));
                }
                let maps = raw
                    .iter()
                    .enumerate()
                    .map(|(k, r)| cook_map(r, dim, &format!("maps[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(IfsDocument::System(RepTileSystem::new(dim, maps)?))
            }
            "block" => {
                if self.maps.is_some() {
                    return Err(Error::validation("maps", "not allowed for kind \"block\""));
                }
                if dim != 3 {
                    return Err(Error::validation("dim", "block systems require dim 3"));
                }
                let mut cooked = Vec::with_capacity(4);
                for (i, f) in fs.iter().enumerate() {
                    let name = format!("f{}", i + 1);
                    let raw = f
                        .as_ref()
                        .ok_or_else(|| Error::validation(name.clone(), "missing"))?;
                    cooked.push(cook_map(raw, 3, &name)?);
                }
                Ok(IfsDocument::Block(BlockSystem::new(
                    cooked[0], cooked[1], cooked[2], cooked[3],
                )?))
            }
            other => Err(Error::validation(
                "kind",
                format!("expected \"system\" or \"block\", found {other:?}"),
            )),
        }
    }
}

/// Parses a document, validating every invariant of the resulting types.
pub fn parse_system(text: &[u8]) -> Result<IfsDocument> {
    let text = std::str::from_utf8(text).map_err(|e| {
        let before = &text[..e.valid_up_to()];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = before.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
        Error::Parse {
            line,
            column,
            message: "input is not valid UTF-8".into(),
        }
    })?;
    let raw: RawDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    raw.into_document()
}

fn fmt_list(xs: &[i64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_map(h: &LatticeIsometry) -> String {
    let r = raw_map(h);
    format!(
        "{{\"perm\": {}, \"signs\": {}, \"v\": {}}}",
        fmt_list(&r.perm),
        fmt_list(&r.signs),
        fmt_list(&r.v)
    )
}

/// Canonical serialization of a document.
pub fn emit_system(doc: &IfsDocument) -> Vec<u8> {
    let mut out = String::new();
    match doc {
        IfsDocument::System(s) => {
            let _ = writeln!(out, "{{\n  \"kind\": \"system\",\n  \"dim\": {},", s.dim());
            out.push_str("  \"maps\": [\n");
            for (k, h) in s.maps().iter().enumerate() {
                let sep = if k + 1 == s.m() { "" } else { "," };
                let _ = writeln!(out, "    {}{sep}", fmt_map(h));
            }
            out.push_str("  ]\n}\n");
        }
        IfsDocument::Block(b) => {
            out.push_str("{\n  \"kind\": \"block\",\n  \"dim\": 3,\n");
            for (i, f) in b.maps().iter().enumerate() {
                let sep = if i == 3 { "" } else { "," };
                let _ = writeln!(out, "  \"f{}\": {}{sep}", i + 1, fmt_map(f));
            }
            out.push_str("}\n");
        }
    }
    out.into_bytes()
}

/// Single-line serialization used inside result-store records.
pub fn emit_compact(doc: &IfsDocument) -> String {
    serde_json::to_string(&RawDoc::from_document(doc)).expect("raw documents serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{enumerate_matrices, IntVector};
    use proptest::prelude::*;

    const CUBE: &str = r#"{
  "kind": "system",
  "dim": 3,
  "maps": [
    {"perm": [0, 1, 2], "signs": [1, 1, 1], "v": [0, 0, 0]},
    {"perm": [0, 1, 2], "signs": [1, 1, 1], "v": [0, 0, 1]},
    {"perm": [0, 1, 2], "signs": [1, 1, 1], "v": [0, 1, 0]},
    {"perm": [0, 1, 2], "signs": [1, 1, 1], "v": [0, 1, 1]},
    {"perm": [0, 1, 2], "signs": [1, 1, 1], "v": [1, 0, 0]},
    {"perm": [0, 1, 2], "signs": [1, 1, 1], "v": [1, 0, 1]},
    {"perm": [0, 1, 2], "signs": [1, 1, 1], "v": [1, 1, 0]},
    {"perm": [0, 1, 2], "signs": [1, 1, 1], "v": [1, 1, 1]}
  ]
}
"#;

    #[test]
    fn cube_golden() {
        let doc = IfsDocument::System(RepTileSystem::unit_cube(3).unwrap());
        assert_eq!(String::from_utf8(emit_system(&doc)).unwrap(), CUBE);
        assert_eq!(parse_system(CUBE.as_bytes()).unwrap(), doc);
        assert_eq!(emit_system(&doc), emit_system(&doc));
    }

    #[test]
    fn non_canonical_layout_round_trips_to_canonical() {
        let squashed: String = CUBE.split_whitespace().collect::<Vec<_>>().join(" ");
        let doc = parse_system(squashed.as_bytes()).unwrap();
        assert_eq!(String::from_utf8(emit_system(&doc)).unwrap(), CUBE);
    }

    #[test]
    fn wrong_map_count() {
        let seven = CUBE.replace(
            ",\n    {\"perm\": [0, 1, 2], \"signs\": [1, 1, 1], \"v\": [1, 1, 1]}",
            "",
        );
        let err = parse_system(seven.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("expected 8 maps"), "{err}");
    }

    #[test]
    fn bad_sign_names_field() {
        let bad = CUBE.replacen("\"signs\": [1, 1, 1], \"v\": [0, 1, 0]", "\"signs\": [1, 2, 1], \"v\": [0, 1, 0]", 1);
        match parse_system(bad.as_bytes()).unwrap_err() {
            Error::Validation { field, .. } => assert_eq!(field, "maps[2].signs"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bad_permutation_names_field() {
        let bad = CUBE.replacen("[0, 1, 2]", "[0, 0, 2]", 1);
        match parse_system(bad.as_bytes()).unwrap_err() {
            Error::Validation { field, .. } => assert_eq!(field, "maps[0].perm"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let broken = CUBE.replacen("\"dim\": 3,", "\"dim\": 3", 1);
        match parse_system(broken.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            parse_system(b"\xff\xfe"),
            Err(Error::Parse { line: 1, column: 1, .. })
        ));
    }

    #[test]
    fn unknown_fields_rejected() {
        let extra = CUBE.replacen("\"dim\": 3,", "\"dim\": 3, \"scale\": 2,", 1);
        assert!(parse_system(extra.as_bytes()).is_err());
        let extra_map = CUBE.replacen("\"v\": [0, 0, 0]}", "\"v\": [0, 0, 0], \"w\": 1}", 1);
        assert!(parse_system(extra_map.as_bytes()).is_err());
    }

    #[test]
    fn dimension_and_kind_checks() {
        assert!(parse_system(CUBE.replacen("\"dim\": 3", "\"dim\": 4", 1).as_bytes()).is_err());
        assert!(parse_system(CUBE.replacen("\"system\"", "\"tile\"", 1).as_bytes()).is_err());
        let block2 = r#"{"kind": "block", "dim": 2}"#;
        assert!(parse_system(block2.as_bytes()).is_err());
    }

    #[test]
    fn block_golden_and_expansion() {
        let text = r#"{
  "kind": "block",
  "dim": 3,
  "f1": {"perm": [0, 1, 2], "signs": [1, 1, 1], "v": [1, 0, 0]},
  "f2": {"perm": [0, 1, 2], "signs": [1, 1, 1], "v": [0, 1, 0]},
  "f3": {"perm": [0, 1, 2], "signs": [1, 1, 1], "v": [0, 0, 0]},
  "f4": {"perm": [0, 1, 2], "signs": [1, 1, 1], "v": [0, 0, 1]}
}
"#;
        let doc = parse_system(text.as_bytes()).unwrap();
        assert!(matches!(doc, IfsDocument::Block(_)));
        assert_eq!(String::from_utf8(emit_system(&doc)).unwrap(), text);
        let s = doc.to_system();
        let mut got: Vec<_> = s.maps().to_vec();
        got.sort();
        let mut want = RepTileSystem::unit_cube(3).unwrap().maps().to_vec();
        want.sort();
        assert_eq!(got, want);
        let missing = text.replacen(
            "  \"f4\": {\"perm\": [0, 1, 2], \"signs\": [1, 1, 1], \"v\": [0, 0, 1]}\n",
            "",
            1,
        ).replacen("[0, 0, 0]},", "[0, 0, 0]}", 1);
        match parse_system(missing.as_bytes()).unwrap_err() {
            Error::Validation { field, .. } => assert_eq!(field, "f4"),
            e => panic!("unexpected {e}"),
        }
    }

    fn arb_doc() -> impl Strategy<Value = IfsDocument> {
        let sys = (2usize..=3).prop_flat_map(|dim| {
            proptest::collection::vec(
                (0usize..48, proptest::collection::vec(-50i64..=50, dim)),
                1 << dim,
            )
            .prop_map(move |raw| {
                let ms = enumerate_matrices(dim).unwrap();
                let maps = raw
                    .into_iter()
                    .map(|(k, v)| {
                        LatticeIsometry::new(ms[k % ms.len()], IntVector::new(&v).unwrap()).unwrap()
                    })
                    .collect();
                IfsDocument::System(RepTileSystem::new(dim, maps).unwrap())
            })
        });
        let block = proptest::collection::vec(
            (0usize..48, proptest::collection::vec(-50i64..=50, 3)),
            4,
        )
        .prop_map(|raw| {
            let ms = enumerate_matrices(3).unwrap();
            let f: Vec<_> = raw
                .into_iter()
                .map(|(k, v)| LatticeIsometry::new(ms[k], IntVector::new(&v).unwrap()).unwrap())
                .collect();
            IfsDocument::Block(BlockSystem::new(f[0], f[1], f[2], f[3]).unwrap())
        });
        prop_oneof![sys, block]
    }

    proptest! {
        #[test]
        fn round_trip(doc in arb_doc()) {
            prop_assert_eq!(&parse_system(&emit_system(&doc)).unwrap(), &doc);
            prop_assert_eq!(&parse_system(emit_compact(&doc).as_bytes()).unwrap(), &doc);
        }
    }
}
