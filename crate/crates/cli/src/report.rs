use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable input; exit code 2.
    Usage(String),
    /// A computed object broke an invariant it must satisfy; exit code 3.
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violation: {m}"),
        }
    }
}

pub fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

pub type CliResult<T> = Result<T, CliError>;

/// Self-describing record of one command run.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: Map<String, Value>,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Map<String, Value>,
    pub verdicts: Vec<String>,
    #[serde(skip)]
    files: Vec<(String, String)>,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            parameters: Map::new(),
            version: env!("CONLEY_GAMES_VERSION").to_string(),
            wall_time_s: 0.0,
            outputs: Map::new(),
            verdicts: Vec::new(),
            files: Vec::new(),
            started: Some(Instant::now()),
        }
    }

    pub fn param(&mut self, key: &str, v: impl Serialize) {
        self.parameters.insert(key.into(), to_value(v));
    }

    pub fn output(&mut self, key: &str, v: impl Serialize) {
        self.outputs.insert(key.into(), to_value(v));
    }

    pub fn verdict(&mut self, v: impl Into<String>) {
        self.verdicts.push(v.into());
    }

    /// Queues a file for `--out`; its name, relative to the
    /// output directory, is listed under `outputs.files`.
    pub fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    /// First queued file with this name.
    pub fn file_contents(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    fn finish(&mut self, out: Option<&Path>) {
        if let Some(t) = self.started.take() {
            self.wall_time_s = t.elapsed().as_secs_f64();
        }
        if out.is_some() {
            let names: Vec<Value> = self.files.iter().map(|(n, _)| Value::String(n.clone())).collect();
            if !names.is_empty() {
                self.outputs.insert("files".into(), Value::Array(names));
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} ({})\n", self.command, self.version);
        for (k, v) in &self.parameters {
            s.push_str(&format!("  {k} = {}\n", compact(v)));
        }
        for (k, v) in &self.outputs {
            s.push_str(&format!("{k}: {}\n", compact(v)));
        }
        for v in &self.verdicts {
            s.push_str(&format!("verdict: {v}\n"));
        }
        s.push_str(&format!("wall time: {:.3} s\n", self.wall_time_s));
        s
    }

    /// Writes queued files and `report.json` under `out` (if given), then
    /// returns what goes to stdout.
    pub fn emit(mut self, out: Option<&PathBuf>, json: bool) -> CliResult<String> {
        self.finish(out.map(PathBuf::as_path));
        let body = serde_json::to_string_pretty(&self).map_err(|e| CliError::Invariant(e.to_string()))?;
        if let Some(dir) = out {
            std::fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
            for (name, contents) in &self.files {
                let p = dir.join(name);
                std::fs::write(&p, contents).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            }
            let p = dir.join("report.json");
            std::fs::write(&p, format!("{body}\n")).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        }
        Ok(if json { format!("{body}\n") } else { self.to_text() })
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn compact(v: &Value) -> String {
    let s = v.to_string();
    if s.len() > 160 {
        format!("{}…", &s[..s.char_indices().nth(157).map_or(s.len(), |(i, _)| i)])
    } else {
        s
    }
}

/// `"betti=(1,1,0,0,0): circle-like"` style summary.
pub fn betti_verdict(betti: &[usize]) -> String {
    let body: Vec<String> = betti.iter().map(usize::to_string).collect();
    let trimmed: Vec<usize> = {
        let mut t = betti.to_vec();
        while t.last() == Some(&0) {
            t.pop();
        }
        t
    };
    let shape = match trimmed.as_slice() {
        [1] => "ball-like",
        [1, 1] => "circle-like",
        [] => "empty",
        _ => "other",
    };
    format!("betti=({}): {shape}", body.join(","))
}
