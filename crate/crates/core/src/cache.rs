//! Content-addressed result cache: one JSON file per key, published by atomic rename.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, OnceLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const CACHE_ENV: &str = "FERMAT_ST_CACHE";

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    op: String,
    created: u64,
    digest: String,
    payload: String,
}

fn sha256_hex(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl Cache {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self { dir: dir.as_ref().to_path_buf() })
    }

    /// Flag first, then the environment variable; `None` disables caching.
    pub fn resolve(flag: Option<&Path>) -> Result<Option<Self>> {
        match flag.map(Path::to_path_buf).or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from)) {
            Some(d) => Ok(Some(Self::open(d)?)),
            None => Ok(None),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex SHA-256 of the canonical JSON of `(op, params)`.
    pub fn key<P: Serialize>(op: &str, params: &P) -> String {
        let s = serde_json::to_string(&(op, params)).expect("serializable key");
        sha256_hex(&s)
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Corrupt or mismatched entries count as misses.
    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Option<T> {
        let raw = fs::read_to_string(self.path(key)).ok()?;
        let e: Entry = serde_json::from_str(&raw).ok()?;
        if e.key != key || sha256_hex(&e.payload) != e.digest {
            return None;
        }
        serde_json::from_str(&e.payload).ok()
    }

    /// Existing valid entries are never rewritten.
    pub fn put<T: Serialize>(&self, key: &str, op: &str, value: &T) -> Result<()> {
        if self.get::<serde_json::Value>(key).is_some() {
            return Ok(());
        }
        let payload = serde_json::to_string(value)?;
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let e = Entry { key: key.into(), op: op.into(), created, digest: sha256_hex(&payload), payload };
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!(".{key}.{}.{n}.tmp", std::process::id()));
        fs::write(&tmp, serde_json::to_vec(&e)?)?;
        fs::rename(&tmp, self.path(key))?;
        Ok(())
    }

    pub fn get_or_compute<T, P, F>(&self, op: &str, params: &P, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        P: Serialize,
        F: FnOnce() -> Result<T>,
    {
        let key = Self::key(op, params);
        if let Some(v) = self.get(&key) {
            return Ok(v);
        }
        let v = compute()?;
        self.put(&key, op, &v)?;
        Ok(v)
    }
}

static GLOBAL: OnceLock<Cache> = OnceLock::new();

/// Installs the process-wide cache used by the expensive recognitions.
pub fn install(cache: Cache) -> bool {
    GLOBAL.set(cache).is_ok()
}

pub fn global() -> Option<&'static Cache> {
    GLOBAL.get()
}

fn memo() -> &'static Mutex<HashMap<String, serde_json::Value>> {
    static M: OnceLock<Mutex<HashMap<String, serde_json::Value>>> = OnceLock::new();
    M.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Looks `op(params)` up in process memory, then in the installed cache; computes and stores on a miss.
pub fn cached<T, P, F>(op: &str, params: &P, compute: F) -> Result<T>
where
    T: Serialize + DeserializeOwned,
    P: Serialize,
    F: FnOnce() -> Result<T>,
{
    let key = Cache::key(op, params);
    if let Some(v) = memo().lock().unwrap().get(&key) {
        if let Ok(x) = serde_json::from_value(v.clone()) {
            return Ok(x);
        }
    }
    let v = match global() {
        Some(c) => c.get_or_compute(op, params, compute)?,
        None => compute()?,
    };
    memo().lock().unwrap().insert(key, serde_json::to_value(&v)?);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::CycloNumber;

    #[test]
    fn round_trip_and_miss() {
        let d = tempfile::tempdir().unwrap();
        let c = Cache::open(d.path()).unwrap();
        let k = Cache::key("gamma", &(15u32, vec![9u32, 12, 7, 2]));
        assert!(c.get::<CycloNumber>(&k).is_none());
        let v = CycloNumber::from_ints(15, &[1, 0, 0, 0, 0, 2]);
        c.put(&k, "gamma", &v).unwrap();
        assert_eq!(c.get::<CycloNumber>(&k), Some(v));
        assert_eq!(k.len(), 64);
        assert_ne!(k, Cache::key("gamma", &(15u32, vec![9u32, 12, 7, 1])));
    }

    #[test]
    fn corruption_is_a_miss() {
        let d = tempfile::tempdir().unwrap();
        let c = Cache::open(d.path()).unwrap();
        let k = Cache::key("x", &1);
        c.put(&k, "x", &vec![1, 2, 3]).unwrap();
        let path = d.path().join(format!("{k}.json"));
        let raw = fs::read_to_string(&path).unwrap().replace("[1,2,3]", "[1,2,4]");
        fs::write(&path, raw).unwrap();
        assert!(c.get::<Vec<i32>>(&k).is_none());
        let v: Vec<i32> = c.get_or_compute("x", &1, || Ok(vec![1, 2, 3])).unwrap();
        assert_eq!(v, vec![1, 2, 3]);
        fs::write(&path, "{not json").unwrap();
        assert!(c.get::<Vec<i32>>(&k).is_none());
    }

    #[test]
    fn entries_are_immutable() {
        let d = tempfile::tempdir().unwrap();
        let c = Cache::open(d.path()).unwrap();
        let k = Cache::key("y", &2);
        c.put(&k, "y", &"first").unwrap();
        c.put(&k, "y", &"second").unwrap();
        assert_eq!(c.get::<String>(&k).as_deref(), Some("first"));
    }

    #[test]
    fn concurrent_puts_agree() {
        let d = tempfile::tempdir().unwrap();
        let c = Cache::open(d.path()).unwrap();
        let k = Cache::key("z", &3);
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| c.put(&k, "z", &vec![7u8; 100]).unwrap());
            }
        });
        assert_eq!(c.get::<Vec<u8>>(&k), Some(vec![7u8; 100]));
        let leftovers = fs::read_dir(d.path()).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp")).count();
        assert_eq!(leftovers, 0);
    }

    proptest::proptest! {
        #![proptest_config(crate::testutil::pt(32))]
        #[test]
        fn cache_deterministic(xs in proptest::collection::vec(-1000i64..1000, 0..20)) {
            let d = tempfile::tempdir().unwrap();
            let c = Cache::open(d.path()).unwrap();
            let k1 = Cache::key("p", &xs);
            proptest::prop_assert_eq!(&k1, &Cache::key("p", &xs.clone()));
            c.put(&k1, "p", &xs).unwrap();
            proptest::prop_assert_eq!(c.get::<Vec<i64>>(&k1), Some(xs));
        }
    }
}
