use serde::Serialize;
use serde_json::{json, Map, Value};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn bad_flag(message: impl Into<String>) -> Self {
        Self::new("BadFlag", message)
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind.as_str() {
            "UnknownCommand" | "BadFlag" => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "error": { "kind": self.kind, "message": self.message },
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<grasshopper::Error> for CliError {
    fn from(e: grasshopper::Error) -> Self {
        CliError::new(e.kind(), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("Io", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new("Io", e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Output directory of one command; every file is written to a temporary
/// sibling and renamed into place.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::new("Io", format!("{}: {e}", root.display())))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let target = self.root.join(name);
        let tmp = self
            .root
            .join(format!(".{name}.tmp-{}", std::process::id()));
        let result = (|| -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(contents.as_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, &target)
        })();
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(CliError::new("Io", format!("{}: {e}", target.display())));
        }
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `result.json` with the common envelope fields followed by
    /// `fields`, and returns the document.
    pub fn finish<C: Serialize>(
        mut self,
        command: &str,
        config: &C,
        seed: Option<u64>,
        grid_hash: Option<&str>,
        best_p: Value,
        fields: Value,
    ) -> CliResult<Value> {
        let mut doc = Map::new();
        doc.insert("schema".into(), json!(SCHEMA));
        doc.insert("command".into(), json!(command));
        doc.insert("config".into(), serde_json::to_value(config)?);
        doc.insert("seed".into(), json!(seed));
        doc.insert("grid_hash".into(), json!(grid_hash));
        doc.insert("bestP".into(), best_p);
        if let Value::Object(extra) = fields {
            doc.extend(extra);
        }
        let mut files = self.written.clone();
        files.push("result.json".into());
        doc.insert("files".into(), json!(files));
        let doc = Value::Object(doc);
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.write("result.json", &text)?;
        Ok(doc)
    }
}

/// Formats `value` for JSON-like output; failures become `{"error": …}`.
pub fn outcome<T: Serialize>(r: &grasshopper::Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).unwrap_or(Value::Null),
        Err(e) => json!({ "error": { "kind": e.kind(), "message": e.to_string() } }),
    }
}
