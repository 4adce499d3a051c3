//! Flag / config-file / environment resolution. Flags win over the file,
//! the file over the environment, the environment over defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Flag,
    File,
    Env,
    Default,
}

impl Source {
    fn label(self) -> &'static str {
        match self {
            Source::Flag => "flag",
            Source::File => "file",
            Source::Env => "env",
            Source::Default => "default",
        }
    }
}

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    used: BTreeMap<String, ()>,
    resolved: Vec<(String, String, Source)>,
}

impl Settings {
    /// Parses a flat `key = value` file; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut file = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            let key = key.trim().replace('_', "-");
            if file.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key `{key}`", lineno + 1));
            }
        }
        Ok(Settings {
            file,
            ..Settings::default()
        })
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, env: Option<&str>, default: T) -> Result<T, String>
    where
        T: FromStr + Display + Clone,
        T::Err: Display,
    {
        self.used.insert(key.to_string(), ());
        let (value, source) = if let Some(v) = flag {
            (v, Source::Flag)
        } else if let Some(text) = self.file.get(key) {
            (parse(key, text)?, Source::File)
        } else if let Some(text) = env.and_then(|name| std::env::var(name).ok()) {
            (parse(key, &text)?, Source::Env)
        } else {
            (default, Source::Default)
        };
        self.resolved.push((key.to_string(), value.to_string(), source));
        Ok(value)
    }

    /// Keys in the file that no setting asked for.
    pub fn unknown_keys(&self) -> Vec<String> {
        self.file.keys().filter(|k| !self.used.contains_key(*k)).cloned().collect()
    }

    pub fn report(&self) -> String {
        let width = self.resolved.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let mut out = String::from("# resolved configuration\n");
        for (key, value, source) in &self.resolved {
            out.push_str(&format!("#   {key:<width$} = {value}  ({})\n", source.label()));
        }
        out
    }
}

fn parse<T>(key: &str, text: &str) -> Result<T, String>
where
    T: FromStr,
    T::Err: Display,
{
    text.parse().map_err(|e| format!("`{key}`: cannot parse `{text}`: {e}"))
}
