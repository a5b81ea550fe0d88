//! Content-addressed ground-state cache: one JSON file per canonical
//! (params, solver-config) key, written atomically.

use std::path::PathBuf;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use dicke_core::{GroundState, GroundStateCache};

pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn open(dir: PathBuf) -> std::io::Result<Arc<Self>> {
        std::fs::create_dir_all(&dir)?;
        Ok(Arc::new(Self { dir }))
    }

    fn path_for(&self, key: &str) -> PathBuf {
        let mut hasher = Sha256::new();
        hasher.update(key.as_bytes());
        let digest = hasher.finalize();
        self.dir.join(format!("{}.json", hex::encode(digest)))
    }
}

impl GroundStateCache for DiskCache {
    fn lookup(&self, key: &str) -> Option<GroundState> {
        let path = self.path_for(key);
        let text = std::fs::read_to_string(&path).ok()?;
        match serde_json::from_str::<StoredState>(&text) {
            Ok(stored) if stored.key == key => Some(stored.state),
            Ok(_) => {
                eprintln!("cache: key mismatch in {}, ignoring entry", path.display());
                None
            }
            Err(e) => {
                eprintln!("cache: corrupt entry {} ({e}), ignoring", path.display());
                None
            }
        }
    }

    fn store(&self, key: &str, gs: &GroundState) {
        let path = self.path_for(key);
        let payload = StoredState {
            key: key.to_string(),
            state: gs.clone(),
        };
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        let write = || -> std::io::Result<()> {
            std::fs::write(&tmp, serde_json::to_vec(&payload)?)?;
            std::fs::rename(&tmp, &path)
        };
        if let Err(e) = write() {
            eprintln!("cache: failed to store {} ({e})", path.display());
            let _ = std::fs::remove_file(&tmp);
        }
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct StoredState {
    key: String,
    state: GroundState,
}

#[cfg(test)]
mod tests {
    use super::*;
    use dicke_core::{cache_key, ground_state, ModelParams, SolverConfig};

    #[test]
    fn round_trip_and_exact_keys() {
        let dir = std::env::temp_dir().join(format!("dicke-cache-{}", std::process::id()));
        let cache = DiskCache::open(dir.clone()).unwrap();
        let p = ModelParams::new(1.0, 1.0, 0.4, 0.3, 2).unwrap();
        let config = SolverConfig::default();
        let gs = ground_state(&p, &config).unwrap();
        let key = cache_key(&p, &config, "");
        cache.store(&key, &gs);
        let hit = cache.lookup(&key).unwrap();
        assert_eq!(hit.energy.to_bits(), gs.energy.to_bits());

        // a 1e-6 nudge of λ must miss: keys are exact
        let p2 = ModelParams::new(1.0, 1.0, 0.4 + 1e-6, 0.3, 2).unwrap();
        assert!(cache.lookup(&cache_key(&p2, &config, "")).is_none());

        // corrupt entries degrade to a miss
        let path = cache.path_for(&key);
        std::fs::write(&path, b"{ not json").unwrap();
        assert!(cache.lookup(&key).is_none());
        std::fs::remove_dir_all(&dir).ok();
    }
}
