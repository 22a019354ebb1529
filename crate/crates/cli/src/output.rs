//! Artifacts: canonical JSON, a flattened CSV projection and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

/// Flatten nested JSON into `(dotted.key, scalar)` rows in document order.
pub fn flatten(value: &Value) -> Vec<(String, String)> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, x)| walk(&join(k), x, out)),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| walk(&join(&i.to_string()), x, out)),
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            Value::Null => out.push((prefix.to_string(), String::new())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk("", value, &mut out);
    out
}

pub fn to_csv(value: &Value) -> std::io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"])?;
    for (k, v) in flatten(value) {
        w.write_record([k, v])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Files written under one output directory, remembered for the manifest.
pub struct Artifacts {
    dir: PathBuf,
    digests: Map<String, Value>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), digests: Map::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.digests.insert(name.to_string(), json!(sha256_hex(contents.as_bytes())));
        Ok(())
    }

    /// `manifest.json`. Wall-clock time is recorded but kept out of the digests.
    pub fn finish(self, command: &str, params: &Value, seed: Option<u64>, threads: usize, seconds: f64) -> std::io::Result<()> {
        let manifest = json!({
            "command": command,
            "params": params,
            "seed": seed,
            "version": env!("CARGO_PKG_VERSION"),
            "threads": threads,
            "wall_clock_seconds": seconds,
            "outputs": self.digests,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(self.dir.join("manifest.json"), text + "\n")
    }
}
