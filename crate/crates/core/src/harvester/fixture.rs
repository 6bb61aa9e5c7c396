//! Record/replay store: one verbatim response body per request key, plus a
//! `manifest.tsv` index of `key<TAB>request line`.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::request::ApiRequest;

pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug)]
pub struct FixtureStore {
    dir: PathBuf,
    manifest: Mutex<BTreeMap<String, String>>,
}

impl FixtureStore {
    /// Opens (without creating) a store, loading any existing manifest.
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        let mut manifest = BTreeMap::new();
        match std::fs::read_to_string(dir.join(MANIFEST_FILE)) {
            Ok(raw) => {
                for line in raw.lines().filter(|l| !l.trim().is_empty()) {
                    if let Some((key, request)) = line.split_once('\t') {
                        manifest.insert(key.to_string(), request.to_string());
                    }
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        Ok(FixtureStore { dir, manifest: Mutex::new(manifest) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn read(&self, request: &ApiRequest) -> io::Result<Option<String>> {
        match std::fs::read_to_string(self.path_for(&request.key())) {
            Ok(body) => Ok(Some(body)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Stores a response body and registers it in the manifest. The body file
    /// is written to a temporary name first and renamed into place.
    pub fn write(&self, request: &ApiRequest, body: &str) -> io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let key = request.key();
        let path = self.path_for(&key);
        let tmp = self.dir.join(format!(".{key}.json.tmp"));
        std::fs::write(&tmp, body)?;
        std::fs::rename(&tmp, &path)?;
        self.manifest.lock().unwrap().insert(key, request.request_line());
        Ok(())
    }

    pub fn flush_manifest(&self) -> io::Result<()> {
        let manifest = self.manifest.lock().unwrap();
        if manifest.is_empty() && !self.dir.exists() {
            return Ok(());
        }
        std::fs::create_dir_all(&self.dir)?;
        let mut out = String::new();
        for (key, line) in manifest.iter() {
            out.push_str(key);
            out.push('\t');
            out.push_str(line);
            out.push('\n');
        }
        let tmp = self.dir.join(format!(".{MANIFEST_FILE}.tmp"));
        std::fs::write(&tmp, out)?;
        std::fs::rename(tmp, self.dir.join(MANIFEST_FILE))
    }

    pub fn request_line(&self, key: &str) -> Option<String> {
        self.manifest.lock().unwrap().get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.manifest.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
