#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn bin(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_microdiff"))
        .args(args)
        .env_remove("MICRODIFF_PRIME")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"))).unwrap()
}

/// Schema with the shared definitions inlined, so no reference resolver is needed.
pub fn schema(name: &str) -> jsonschema::JSONSchema {
    let dir = root().join("docs/schemas");
    let common = read_json(dir.join("common.schema.json"));
    let text = std::fs::read_to_string(dir.join(format!("{name}.schema.json"))).unwrap();
    let mut s: Value = serde_json::from_str(&text.replace("common.schema.json#/definitions/", "#/definitions/")).unwrap();
    let defs = s
        .as_object_mut()
        .unwrap()
        .entry("definitions")
        .or_insert_with(|| Value::Object(Default::default()));
    for (k, v) in common["definitions"].as_object().unwrap() {
        defs[k] = v.clone();
    }
    s.as_object_mut().unwrap().remove("$id");
    jsonschema::JSONSchema::compile(&s).expect("schema compiles")
}

pub fn assert_valid(name: &str, instance: &Value) {
    let s = schema(name);
    let msgs: Vec<String> = match s.validate(instance) {
        Ok(()) => return,
        Err(errs) => errs.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("{name} schema rejects {instance}: {msgs:?}");
}
