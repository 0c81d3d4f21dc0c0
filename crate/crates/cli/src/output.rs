use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Provenance written at the top of every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: Option<String>,
    pub seed: u64,
    pub tolerances: Value,
    /// Derived values worth seeing without opening the body.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &str, config: Option<&[u8]>, seed: u64, tolerances: Value) -> Self {
        Header {
            tool: env!("CARGO_BIN_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sha256: config.map(sha256_hex),
            seed,
            tolerances,
            notes: Vec::new(),
        }
    }

    pub fn note(mut self, key: &str, value: String) -> Self {
        self.notes.push((key.to_string(), value));
        self
    }

    /// `# key: value` lines for CSV files.
    pub fn csv_lines(&self) -> String {
        let mut s = format!("# {} {}\n# command: {}\n", self.tool, self.version, self.command);
        if let Some(h) = &self.config_sha256 {
            s += &format!("# config_sha256: {h}\n");
        }
        s += &format!("# seed: {}\n# tolerances: {}\n", self.seed, self.tolerances);
        for (k, v) in &self.notes {
            s += &format!("# {k}: {v}\n");
        }
        s
    }

    pub fn xml_comment(&self) -> String {
        format!("<!-- {} -->\n", self.csv_lines().replace("--", "- -").trim_end().replace('\n', " | "))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct OutDir {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &Header, body: &[u8]) -> Result<(), CliError> {
        let text = header.csv_lines() + std::str::from_utf8(body).expect("csv is utf-8");
        self.write(name, &text)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, header: &Header, body: &T) -> Result<(), CliError> {
        let mut value = json!({ "header": header });
        let body = serde_json::to_value(body).map_err(|e| CliError::Io(e.to_string()))?;
        match body {
            Value::Object(map) => value.as_object_mut().unwrap().extend(map),
            other => {
                value["data"] = other;
            }
        }
        let text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Io(e.to_string()))? + "\n";
        self.write(name, &text)
    }

    pub fn svg(&mut self, name: &str, header: &Header, body: &str) -> Result<(), CliError> {
        // the comment goes after the root element's opening tag line
        let (first, rest) = body.split_once('\n').unwrap_or((body, ""));
        self.write(name, &format!("{first}\n{}{rest}", header.xml_comment()))
    }
}
