//! Content-addressed response cache: one text file per completed request
//! plus a sidecar metadata file carrying the response digest for
//! integrity checking.
//!
//! The key digests (model_id, ordered messages, temperature,
//! request_seed), so two requests differing in any of those never
//! collide, and repeated sampling runs (distinct request seeds) opt out
//! of deduplication naturally.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AgentError, ChatMessage, RemoteConfig, Role};

/// Stable digest over everything that determines a remote completion.
pub fn cache_key(
    model_id: &str,
    messages: &[ChatMessage],
    temperature: f64,
    request_seed: u64,
) -> String {
    let mut hasher = Sha256::new();
    let mut eat = |bytes: &[u8]| {
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    };
    eat(model_id.as_bytes());
    for m in messages {
        eat(match m.role {
            Role::System => b"system",
            Role::User => b"user",
            Role::Assistant => b"assistant",
        });
        eat(m.content.as_bytes());
    }
    eat(&temperature.to_bits().to_le_bytes());
    eat(&request_seed.to_le_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Serialize, Deserialize)]
struct SidecarMeta {
    model_id: String,
    temperature: f64,
    request_seed: u64,
    /// RFC 3339 write time; informational only.
    created: String,
    /// SHA-256 of the stored response text.
    response_sha256: String,
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    root: PathBuf,
}

impl ResponseCache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, AgentError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| AgentError::CacheIo {
            path: root.display().to_string(),
            source,
        })?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.root.join(&key[..2]).join(format!("{key}.txt"))
    }

    fn meta_path(&self, key: &str) -> PathBuf {
        self.root.join(&key[..2]).join(format!("{key}.meta.json"))
    }

    /// Returns the cached response, verifying it against the stored
    /// digest. A missing entry is None; a tampered one is CacheCorrupt.
    pub fn get(&self, key: &str) -> Result<Option<String>, AgentError> {
        let path = self.entry_path(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => {
                return Err(AgentError::CacheIo {
                    path: path.display().to_string(),
                    source,
                })
            }
        };
        let meta_path = self.meta_path(key);
        let meta_text = fs::read_to_string(&meta_path).map_err(|source| match source.kind() {
            std::io::ErrorKind::NotFound => AgentError::CacheCorrupt {
                path: path.display().to_string(),
                reason: "sidecar metadata missing".to_string(),
            },
            _ => AgentError::CacheIo {
                path: meta_path.display().to_string(),
                source,
            },
        })?;
        let meta: SidecarMeta =
            serde_json::from_str(&meta_text).map_err(|e| AgentError::CacheCorrupt {
                path: meta_path.display().to_string(),
                reason: format!("unreadable metadata: {e}"),
            })?;
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        if digest != meta.response_sha256 {
            return Err(AgentError::CacheCorrupt {
                path: path.display().to_string(),
                reason: "response digest mismatch".to_string(),
            });
        }
        Ok(Some(text))
    }

    /// Stores a response. Writes go to a unique temp file and are
    /// renamed into place, so concurrent writers of one key can only
    /// race to identical content.
    pub fn put(
        &self,
        key: &str,
        text: &str,
        config: &RemoteConfig,
        request_seed: u64,
    ) -> Result<(), AgentError> {
        let dir = self.root.join(&key[..2]);
        let io_err = |path: &Path| {
            let p = path.display().to_string();
            move |source: std::io::Error| AgentError::CacheIo { path: p.clone(), source }
        };
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let meta = SidecarMeta {
            model_id: config.model_id.clone(),
            temperature: config.temperature,
            request_seed,
            created: chrono::Utc::now().to_rfc3339(),
            response_sha256: hex::encode(Sha256::digest(text.as_bytes())),
        };
        let unique = format!(
            "{}-{:x}",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos())
                .unwrap_or(0)
        );
        for (target, bytes) in [
            (self.meta_path(key), serde_json::to_string_pretty(&meta).expect("meta serializes")),
            (self.entry_path(key), text.to_string()),
        ] {
            let tmp = dir.join(format!(".tmp-{unique}-{}", target.file_name().unwrap().to_string_lossy()));
            fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
            fs::rename(&tmp, &target).map_err(io_err(&target))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> RemoteConfig {
        RemoteConfig {
            model_id: "test-model".into(),
            temperature: 1.0,
            endpoint: None,
            api_key: Some("k".into()),
        }
    }

    fn msgs(text: &str) -> Vec<ChatMessage> {
        vec![ChatMessage::user(text)]
    }

    #[test]
    fn round_trip_is_byte_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let key = cache_key("m", &msgs("hello"), 1.0, 7);
        assert_eq!(cache.get(&key).unwrap(), None);
        cache.put(&key, "reply \u{1F600}\nline2", &config(), 7).unwrap();
        assert_eq!(
            cache.get(&key).unwrap().as_deref(),
            Some("reply \u{1F600}\nline2")
        );
    }

    #[test]
    fn key_separates_every_request_dimension() {
        let base = cache_key("m", &msgs("x"), 1.0, 0);
        assert_ne!(base, cache_key("m2", &msgs("x"), 1.0, 0));
        assert_ne!(base, cache_key("m", &msgs("y"), 1.0, 0));
        assert_ne!(base, cache_key("m", &msgs("x"), 0.5, 0));
        assert_ne!(base, cache_key("m", &msgs("x"), 1.0, 1));
        let sys_then_user = vec![ChatMessage::system("x"), ChatMessage::user("x")];
        assert_ne!(
            cache_key("m", &sys_then_user, 1.0, 0),
            cache_key("m", &msgs("x"), 1.0, 0)
        );
    }

    #[test]
    fn tampered_entry_is_reported_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let key = cache_key("m", &msgs("q"), 1.0, 3);
        cache.put(&key, "original", &config(), 3).unwrap();
        std::fs::write(cache.entry_path(&key), "tampered").unwrap();
        assert!(matches!(
            cache.get(&key),
            Err(AgentError::CacheCorrupt { .. })
        ));
    }

    #[test]
    fn missing_sidecar_is_corrupt_not_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let key = cache_key("m", &msgs("q"), 1.0, 4);
        cache.put(&key, "text", &config(), 4).unwrap();
        std::fs::remove_file(cache.meta_path(&key)).unwrap();
        assert!(matches!(
            cache.get(&key),
            Err(AgentError::CacheCorrupt { .. })
        ));
    }

    #[test]
    fn entries_shard_by_key_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let key = cache_key("m", &msgs("shard"), 1.0, 9);
        cache.put(&key, "v", &config(), 9).unwrap();
        assert!(dir.path().join(&key[..2]).join(format!("{key}.txt")).exists());
    }
}
