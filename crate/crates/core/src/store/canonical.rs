//! One canonical text form for every document: JSON with object keys in
//! sorted order and every non-integer number written with at most 6
//! significant digits. Files carry a `schema` tag naming their type and
//! version; parsing reports the path of the first offending field.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::StoreError;

/// Schema tags of the document types written by this crate.
pub trait SchemaTag {
    const SCHEMA: &'static str;
}

/// Write a number in canonical form. Finite floats are rounded to 6
/// significant digits and printed in their shortest round-trip form;
/// integers are printed exactly.
pub fn format_number(n: &serde_json::Number) -> String {
    if n.is_u64() || n.is_i64() {
        return n.to_string();
    }
    let x = n.as_f64().expect("JSON numbers are finite");
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn write_value(out: &mut String, v: &Value, indent: Option<usize>) {
    let newline = |out: &mut String, level: usize| {
        if let Some(step) = indent {
            out.push('\n');
            out.extend(std::iter::repeat_n(' ', step * level));
        }
    };
    fn go(out: &mut String, v: &Value, level: usize, indent: Option<usize>, newline: &dyn Fn(&mut String, usize)) {
        match v {
            Value::Null | Value::Bool(_) | Value::String(_) => {
                out.push_str(&serde_json::to_string(v).expect("scalar serializes"));
            }
            Value::Number(n) => out.push_str(&format_number(n)),
            Value::Array(items) if items.is_empty() => out.push_str("[]"),
            Value::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    newline(out, level + 1);
                    go(out, item, level + 1, indent, newline);
                }
                newline(out, level);
                out.push(']');
            }
            Value::Object(map) if map.is_empty() => out.push_str("{}"),
            Value::Object(map) => {
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                out.push('{');
                for (i, k) in keys.into_iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    newline(out, level + 1);
                    out.push_str(&serde_json::to_string(k).expect("key serializes"));
                    out.push(':');
                    if indent.is_some() {
                        out.push(' ');
                    }
                    go(out, &map[k], level + 1, indent, newline);
                }
                newline(out, level);
                out.push('}');
            }
        }
    }
    go(out, v, 0, indent, &newline);
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("document types serialize to JSON")
}

/// Indented canonical text, newline-terminated.
pub fn to_canonical_string<T: Serialize>(x: &T) -> String {
    let mut out = String::new();
    write_value(&mut out, &to_value(x), Some(2));
    out.push('\n');
    out
}

/// Single-line canonical text without a trailing newline.
pub fn to_canonical_line<T: Serialize>(x: &T) -> String {
    let mut out = String::new();
    write_value(&mut out, &to_value(x), None);
    out
}

fn deserialize_value<T: DeserializeOwned>(v: Value) -> Result<T, StoreError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        StoreError::schema(path, e.into_inner().to_string())
    })
}

/// Parse canonical (or any JSON) text into `T`.
pub fn from_canonical_str<T: DeserializeOwned>(text: &str) -> Result<T, StoreError> {
    let v: Value = serde_json::from_str(text).map_err(|e| StoreError::schema(".", e.to_string()))?;
    deserialize_value(v)
}

/// The value as it reads back from its canonical text: floats quantized to
/// 6 significant digits. Anything derived from a stored document should be
/// derived from this form so that it can be regenerated from the file.
pub fn canonicalize<T: Serialize + DeserializeOwned>(x: &T) -> T {
    from_canonical_str(&to_canonical_line(x)).expect("canonical text of a serializable value parses back")
}

/// Write `x` with its schema tag as canonical text.
pub fn write_document<T: Serialize + SchemaTag>(path: &Path, x: &T) -> Result<(), StoreError> {
    std::fs::write(path, document_text(x)).map_err(StoreError::io(path))
}

pub(crate) fn document_text<T: Serialize + SchemaTag>(x: &T) -> String {
    let mut v = to_value(x);
    match &mut v {
        Value::Object(map) => {
            map.insert("schema".to_string(), Value::String(T::SCHEMA.to_string()));
        }
        _ => panic!("documents serialize to JSON objects"),
    }
    let mut out = String::new();
    write_value(&mut out, &v, Some(2));
    out.push('\n');
    out
}

pub(crate) fn parse_document<T: DeserializeOwned + SchemaTag>(text: &str) -> Result<T, StoreError> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| StoreError::schema(".", e.to_string()))?;
    let Value::Object(map) = &mut v else {
        return Err(StoreError::schema(".", "expected an object"));
    };
    match map.remove("schema") {
        Some(Value::String(s)) if s == T::SCHEMA => {}
        Some(other) => {
            return Err(StoreError::schema(
                "schema",
                format!("expected \"{}\", found {other}", T::SCHEMA),
            ))
        }
        None => return Err(StoreError::schema("schema", format!("missing, expected \"{}\"", T::SCHEMA))),
    }
    deserialize_value(v)
}

/// Read a document written by [`write_document`], checking its schema tag.
pub fn read_document<T: DeserializeOwned + SchemaTag>(path: &Path) -> Result<T, StoreError> {
    let text = std::fs::read_to_string(path).map_err(StoreError::io(path))?;
    parse_document(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    fn num(x: f64) -> String {
        format_number(&serde_json::Number::from_f64(x).unwrap())
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(num(123.456789), "123.457");
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(30.0), "30");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(1.0 / 3.0), "0.333333");
        assert_eq!(num(-49.0712345), "-49.0712");
        assert_eq!(num(1.234567e-9), "1.23457e-9");
        assert_eq!(num(6.02e23), "6.02e23");
        assert_eq!(format_number(&serde_json::Number::from(u64::MAX)), u64::MAX.to_string());
    }

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Doc {
        b: f64,
        a: Vec<u32>,
        inner: Inner,
    }

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct Inner {
        z: Option<String>,
        y: bool,
    }

    impl SchemaTag for Doc {
        const SCHEMA: &'static str = "test.doc/1";
    }

    fn doc() -> Doc {
        Doc {
            b: 2.0 / 3.0,
            a: vec![1, 2],
            inner: Inner { z: None, y: true },
        }
    }

    #[test]
    fn keys_sorted_and_stable() {
        let text = to_canonical_string(&doc());
        assert_eq!(
            text,
            "{\n  \"a\": [\n    1,\n    2\n  ],\n  \"b\": 0.666667,\n  \"inner\": {\n    \"y\": true,\n    \"z\": null\n  }\n}\n"
        );
        let again: Doc = from_canonical_str(&text).unwrap();
        assert_eq!(to_canonical_string(&again), text);
        assert_eq!(to_canonical_line(&doc()), r#"{"a":[1,2],"b":0.666667,"inner":{"y":true,"z":null}}"#);
    }

    #[test]
    fn schema_tag_checked() {
        let text = document_text(&doc());
        assert!(text.contains("\"schema\": \"test.doc/1\""));
        assert_eq!(parse_document::<Doc>(&text).unwrap().a, vec![1, 2]);
        let wrong = text.replace("test.doc/1", "test.doc/2");
        match parse_document::<Doc>(&wrong) {
            Err(StoreError::SchemaViolation { path, .. }) => assert_eq!(path, "schema"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn violation_reports_field_path() {
        let text = r#"{"schema":"test.doc/1","a":[1,"x"],"b":1,"inner":{"y":true,"z":null}}"#;
        match parse_document::<Doc>(text) {
            Err(StoreError::SchemaViolation { path, .. }) => assert_eq!(path, "a[1]"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"schema":"test.doc/1","a":[],"b":1,"inner":{"y":true,"z":null,"w":3}}"#;
        match parse_document::<Doc>(text) {
            Err(StoreError::SchemaViolation { path, message }) => {
                assert_eq!(path, "inner.w", "{message}");
            }
            other => panic!("{other:?}"),
        }
    }
}
