//! Adapters to external recognizers and synthesizers.
//!
//! Three transports are supported: a precomputed file, a subprocess and an
//! HTTP endpoint. Subprocess and HTTP results go through an on-disk,
//! content-addressed [`Cache`]. The wire contracts are documented in
//! `docs/providers.md`.

mod cache;
mod transport;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use cache::{Cache, CacheEntry, CacheKey};
pub use transport::param_env_name;

use crate::error::{Error, Result};
use crate::harness::ManifestCandidate;
use crate::prompt::read_wav;
use crate::rerank::{Candidate, NBestList};
use crate::textnorm::{normalize, NormalizationConfig};
use transport::{http_post, malformed_payload, run_subprocess, Request};

pub const DEFAULT_TIMEOUT_S: u64 = 120;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    PrecomputedFile,
    Subprocess,
    HttpEndpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestKind {
    FirstPass,
    Nbest,
    PrefixAudio,
}

impl RequestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestKind::FirstPass => "first-pass",
            RequestKind::Nbest => "nbest",
            RequestKind::PrefixAudio => "prefix-audio",
        }
    }
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_S
}

fn default_in_flight() -> usize {
    DEFAULT_MAX_IN_FLIGHT
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSpec {
    pub name: String,
    pub kind: ProviderKind,
    /// File path, program, or URL depending on `kind`.
    pub location: String,
    /// Extra leading arguments for subprocess providers.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<String>,
    /// Opaque settings forwarded to the provider and folded into the cache key.
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub providers: Vec<ProviderSpec>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            cache_dir: None,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            providers: Vec::new(),
        }
    }
}

impl ProviderConfig {
    /// Reads TOML (`.toml`) or JSON (anything else). Relative file
    /// locations and `cache_dir` are resolved against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ProviderConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(dir) = &cfg.cache_dir {
            if dir.is_relative() {
                cfg.cache_dir = Some(base.join(dir));
            }
        }
        for spec in &mut cfg.providers {
            let rel = Path::new(&spec.location).is_relative();
            let file_like = spec.kind == ProviderKind::PrecomputedFile
                || (spec.kind == ProviderKind::Subprocess && spec.location.contains('/'));
            if rel && file_like {
                spec.location = base.join(&spec.location).to_string_lossy().into_owned();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_in_flight == 0 {
            return Err(Error::InvalidConfig("max_in_flight must be at least 1".into()));
        }
        let mut names = HashSet::new();
        for spec in &self.providers {
            if spec.name.is_empty() {
                return Err(Error::InvalidConfig("provider with an empty name".into()));
            }
            if !names.insert(spec.name.as_str()) {
                return Err(Error::DuplicateId(spec.name.clone()));
            }
            if spec.timeout_s == 0 {
                return Err(Error::InvalidConfig(format!(
                    "provider `{}`: timeout_s must be positive",
                    spec.name
                )));
            }
            match spec.kind {
                ProviderKind::PrecomputedFile if !Path::new(&spec.location).is_file() => {
                    return Err(Error::InvalidConfig(format!(
                        "provider `{}`: file {} does not exist",
                        spec.name, spec.location
                    )))
                }
                ProviderKind::HttpEndpoint
                    if !(spec.location.starts_with("http://") || spec.location.starts_with("https://")) =>
                {
                    return Err(Error::InvalidConfig(format!(
                        "provider `{}`: `{}` is not an http(s) URL",
                        spec.name, spec.location
                    )))
                }
                _ if spec.location.is_empty() => {
                    return Err(Error::InvalidConfig(format!(
                        "provider `{}`: empty location",
                        spec.name
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FetchOptions {
    /// Consult only precomputed files and the cache; any miss is an error.
    pub offline: bool,
    /// Bypass cache hits and re-fetch; the fresh value must match what is stored.
    pub refresh: bool,
}

struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("slot lock");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock") += 1;
        self.0.cv.notify_one();
    }
}

enum Table {
    Text(HashMap<String, String>),
    Nbest(HashMap<String, Vec<ManifestCandidate>>),
}

/// The configured providers of one run.
pub struct ProviderSet {
    specs: BTreeMap<String, ProviderSpec>,
    cache: Option<Cache>,
    options: FetchOptions,
    slots: Slots,
    tables: Mutex<HashMap<(String, RequestKind), Arc<Table>>>,
}

fn sha256_hex(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

fn read_tsv(path: &Path, resolve_paths: bool) -> Result<HashMap<String, String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut map = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let manifest_err = |message: String| Error::Manifest {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let (id, value) = line
            .split_once('\t')
            .ok_or_else(|| manifest_err("expected `id<TAB>value`".into()))?;
        let value = if resolve_paths && Path::new(value).is_relative() {
            base.join(value).to_string_lossy().into_owned()
        } else {
            value.to_string()
        };
        if map.insert(id.to_string(), value).is_some() {
            return Err(manifest_err(format!("duplicate id `{id}`")));
        }
    }
    Ok(map)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NbestLine {
    id: String,
    nbest: Vec<ManifestCandidate>,
}

fn read_nbest_jsonl(path: &Path) -> Result<HashMap<String, Vec<ManifestCandidate>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut map = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let manifest_err = |message: String| Error::Manifest {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let rec: NbestLine = serde_json::from_str(&line).map_err(|e| manifest_err(e.to_string()))?;
        if map.contains_key(&rec.id) {
            return Err(manifest_err(format!("duplicate id `{}`", rec.id)));
        }
        map.insert(rec.id, rec.nbest);
    }
    Ok(map)
}

impl ProviderSet {
    pub fn new(config: &ProviderConfig, options: FetchOptions) -> Result<Self> {
        config.validate()?;
        Ok(ProviderSet {
            specs: config.providers.iter().map(|s| (s.name.clone(), s.clone())).collect(),
            cache: config.cache_dir.as_ref().map(Cache::new),
            options,
            slots: Slots {
                free: Mutex::new(config.max_in_flight),
                cv: Condvar::new(),
            },
            tables: Mutex::new(HashMap::new()),
        })
    }

    pub fn spec(&self, name: &str) -> Result<&ProviderSpec> {
        self.specs
            .get(name)
            .ok_or_else(|| Error::UnknownProvider(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.specs.keys().map(String::as_str)
    }

    fn table(&self, spec: &ProviderSpec, kind: RequestKind) -> Result<Arc<Table>> {
        let key = (spec.name.clone(), kind);
        if let Some(t) = self.tables.lock().expect("table lock").get(&key) {
            return Ok(Arc::clone(t));
        }
        let path = Path::new(&spec.location);
        let table = Arc::new(match kind {
            RequestKind::FirstPass => Table::Text(read_tsv(path, false)?),
            RequestKind::PrefixAudio => Table::Text(read_tsv(path, true)?),
            RequestKind::Nbest => Table::Nbest(read_nbest_jsonl(path)?),
        });
        self.tables
            .lock()
            .expect("table lock")
            .entry(key)
            .or_insert_with(|| Arc::clone(&table));
        Ok(table)
    }

    fn lookup(&self, spec: &ProviderSpec, kind: RequestKind, id: &str) -> Result<Value> {
        let not_found = || Error::NotFound {
            provider: spec.name.clone(),
            id: id.to_string(),
        };
        match &*self.table(spec, kind)? {
            Table::Text(map) => map.get(id).map(|s| Value::String(s.clone())).ok_or_else(not_found),
            Table::Nbest(map) => map
                .get(id)
                .map(|c| serde_json::to_value(c).expect("candidates serialize"))
                .ok_or_else(not_found),
        }
    }

    fn remote(&self, spec: &ProviderSpec, req: &Request<'_>) -> Result<Value> {
        let _slot = self.slots.acquire();
        log::debug!("provider `{}`: {} for `{}`", spec.name, req.kind.as_str(), req.id);
        match spec.kind {
            ProviderKind::Subprocess => {
                let line = run_subprocess(spec, req)?;
                match req.kind {
                    RequestKind::Nbest => serde_json::from_str(&line)
                        .map_err(|e| malformed_payload(spec, format!("n-best line is not JSON: {e}"))),
                    _ => Ok(Value::String(line)),
                }
            }
            ProviderKind::HttpEndpoint => {
                let mut obj = http_post(spec, req)?;
                let field = match req.kind {
                    RequestKind::FirstPass => "text",
                    RequestKind::Nbest => "nbest",
                    RequestKind::PrefixAudio => "audio_path",
                };
                obj.remove(field)
                    .ok_or_else(|| malformed_payload(spec, format!("reply has no `{field}` field")))
            }
            ProviderKind::PrecomputedFile => unreachable!("precomputed lookups never go remote"),
        }
    }

    fn fetch(&self, spec: &ProviderSpec, req: Request<'_>) -> Result<Value> {
        if spec.kind == ProviderKind::PrecomputedFile {
            return self.lookup(spec, req.kind, req.id);
        }
        let key = CacheKey {
            provider: spec.name.clone(),
            request: req.kind.as_str().to_string(),
            id: req.id.to_string(),
            params: spec.params.clone(),
            context_sha256: req.context.map(sha256_hex),
        };
        if let Some(cache) = &self.cache {
            if !self.options.refresh || self.options.offline {
                if let Some(hit) = cache.get(&key)? {
                    return Ok(hit.value);
                }
            }
        }
        if self.options.offline {
            return Err(Error::OfflineMiss {
                provider: spec.name.clone(),
                id: req.id.to_string(),
            });
        }
        let value = self.remote(spec, &req)?;
        if let Some(cache) = &self.cache {
            cache.put(&key, &value)?;
        }
        Ok(value)
    }

    /// Raw (unnormalized) first-pass hypothesis.
    pub fn fetch_first_pass(&self, provider: &str, id: &str, audio: Option<&Path>) -> Result<String> {
        let spec = self.spec(provider)?;
        let value = self.fetch(
            spec,
            Request {
                kind: RequestKind::FirstPass,
                id,
                audio,
                context: None,
            },
        )?;
        match value {
            Value::String(s) if !s.trim().is_empty() => Ok(s),
            Value::String(_) => Err(malformed_payload(spec, format!("empty hypothesis for `{id}`"))),
            other => Err(malformed_payload(spec, format!("expected a string, got {other}"))),
        }
    }

    /// N-best list with ranks validated; lists longer than `beam_size` are
    /// cut to their first `beam_size` candidates with a warning.
    pub fn fetch_nbest(
        &self,
        provider: &str,
        id: &str,
        audio: Option<&Path>,
        beam_size: usize,
        norm: &NormalizationConfig,
    ) -> Result<NBestList> {
        if beam_size == 0 {
            return Err(Error::InvalidInput("beam size must be positive".into()));
        }
        let spec = self.spec(provider)?;
        let value = self.fetch(
            spec,
            Request {
                kind: RequestKind::Nbest,
                id,
                audio,
                context: None,
            },
        )?;
        let raw: Vec<ManifestCandidate> =
            serde_json::from_value(value).map_err(|e| malformed_payload(spec, format!("n-best for `{id}`: {e}")))?;
        let candidates = raw
            .into_iter()
            .map(|c| Candidate {
                rank: c.rank,
                text: normalize(&c.text, norm),
                score: c.score,
            })
            .collect();
        let list = NBestList::new(candidates, beam_size)
            .map_err(|e| malformed_payload(spec, format!("n-best for `{id}`: {e}")))?;
        if list.len() > beam_size {
            log::warn!(
                "provider `{provider}`: `{id}` has {} candidates, keeping the first {beam_size}",
                list.len()
            );
            return list.truncated(beam_size);
        }
        Ok(list)
    }

    /// Path of a synthesized prefix recording. The file must be a readable
    /// 16 kHz mono PCM16 WAV.
    pub fn fetch_prefix_audio(
        &self,
        provider: &str,
        id: &str,
        context_text: &str,
        speaker_ref: Option<&Path>,
    ) -> Result<PathBuf> {
        let spec = self.spec(provider)?;
        let value = self.fetch(
            spec,
            Request {
                kind: RequestKind::PrefixAudio,
                id,
                audio: speaker_ref,
                context: Some(context_text),
            },
        )?;
        let Value::String(path) = value else {
            return Err(malformed_payload(spec, "audio path must be a string"));
        };
        let path = PathBuf::from(path);
        read_wav(&path)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn precomputed(dir: &Path) -> ProviderSet {
        let tsv = write(dir, "fp.tsv", "u1\tمرحبا بكم\nu2\tأهلا\n");
        let jsonl = write(
            dir,
            "nb.jsonl",
            concat!(
                r#"{"id":"u1","nbest":[{"rank":2,"text":"ب"},{"rank":1,"text":"ا"},{"rank":3,"text":"ت"}]}"#,
                "\n",
                r#"{"id":"bad","nbest":[{"rank":1,"text":"ا"},{"rank":3,"text":"ت"}]}"#,
                "\n"
            ),
        );
        let cfg = ProviderConfig {
            providers: vec![
                ProviderSpec {
                    name: "fp".into(),
                    kind: ProviderKind::PrecomputedFile,
                    location: tsv.to_string_lossy().into(),
                    args: vec![],
                    params: BTreeMap::new(),
                    timeout_s: 5,
                },
                ProviderSpec {
                    name: "nb".into(),
                    kind: ProviderKind::PrecomputedFile,
                    location: jsonl.to_string_lossy().into(),
                    args: vec![],
                    params: BTreeMap::new(),
                    timeout_s: 5,
                },
            ],
            ..Default::default()
        };
        ProviderSet::new(
            &cfg,
            FetchOptions {
                offline: true,
                refresh: false,
            },
        )
        .unwrap()
    }

    #[test]
    fn precomputed_lookup_and_not_found() {
        let dir = tempfile::tempdir().unwrap();
        let set = precomputed(dir.path());
        assert_eq!(set.fetch_first_pass("fp", "u1", None).unwrap(), "مرحبا بكم");
        assert!(matches!(
            set.fetch_first_pass("fp", "zz", None),
            Err(Error::NotFound { .. })
        ));
        assert!(matches!(
            set.fetch_first_pass("nope", "u1", None),
            Err(Error::UnknownProvider(_))
        ));
    }

    #[test]
    fn precomputed_nbest_validates_and_truncates() {
        let dir = tempfile::tempdir().unwrap();
        let set = precomputed(dir.path());
        let norm = NormalizationConfig::default();
        let l = set.fetch_nbest("nb", "u1", None, 10, &norm).unwrap();
        let texts: Vec<&str> = l.candidates().iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, ["ا", "ب", "ت"]);
        assert_eq!(set.fetch_nbest("nb", "u1", None, 2, &norm).unwrap().len(), 2);
        assert!(matches!(
            set.fetch_nbest("nb", "bad", None, 10, &norm),
            Err(Error::MalformedPayload { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "fp.tsv", "u1\tx\n");
        let toml_cfg = write(
            dir.path(),
            "p.toml",
            "cache_dir = \"cache\"\n[[providers]]\nname = \"fp\"\nkind = \"precomputed_file\"\nlocation = \"fp.tsv\"\n",
        );
        let cfg = ProviderConfig::load(&toml_cfg).unwrap();
        assert_eq!(cfg.providers[0].timeout_s, DEFAULT_TIMEOUT_S);
        assert_eq!(cfg.cache_dir.as_deref(), Some(dir.path().join("cache").as_path()));

        let json_cfg = write(
            dir.path(),
            "p.json",
            r#"{"providers":[{"name":"a","kind":"precomputed_file","location":"missing.tsv"}]}"#,
        );
        assert!(matches!(ProviderConfig::load(&json_cfg), Err(Error::InvalidConfig(_))));

        let dup = write(
            dir.path(),
            "dup.json",
            r#"{"providers":[{"name":"a","kind":"precomputed_file","location":"fp.tsv"},{"name":"a","kind":"subprocess","location":"true"}]}"#,
        );
        assert!(matches!(ProviderConfig::load(&dup), Err(Error::DuplicateId(_))));

        let url = write(
            dir.path(),
            "url.json",
            r#"{"providers":[{"name":"h","kind":"http_endpoint","location":"ftp://x"}]}"#,
        );
        assert!(ProviderConfig::load(&url).is_err());
    }

    #[test]
    fn offline_miss_is_loud() {
        let cfg = ProviderConfig {
            providers: vec![ProviderSpec {
                name: "s".into(),
                kind: ProviderKind::Subprocess,
                location: "/bin/false".into(),
                args: vec![],
                params: BTreeMap::new(),
                timeout_s: 5,
            }],
            ..Default::default()
        };
        let set = ProviderSet::new(
            &cfg,
            FetchOptions {
                offline: true,
                refresh: false,
            },
        )
        .unwrap();
        assert!(matches!(
            set.fetch_first_pass("s", "u1", None),
            Err(Error::OfflineMiss { .. })
        ));
    }

    #[test]
    fn param_env_names() {
        assert_eq!(param_env_name("beam-size"), "CTXDECODE_PARAM_BEAM_SIZE");
        assert_eq!(param_env_name("lang"), "CTXDECODE_PARAM_LANG");
    }
}
