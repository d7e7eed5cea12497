//! Session manifests and self-checking certificate files.
//!
//! A certificate carries the manifest that produced it, the manifest's hash
//! and a digest over everything else, so a replay detects any edit before
//! re-checking the payload.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flatsurf::cover::CoverConnection;
use crate::flatsurf::{TorusFamily, Vec2};
use crate::hypgraph::{Backend, BackendDoc, CertificateConfig};
use crate::markov::MarkovConfig;
use crate::numeric::{parse_q, Q};
use crate::word::Word;

/// Everything needed to rerun a session: backend, configs, fixtures, the
/// seed of the single generator, and the commands issued.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SessionManifest {
    pub version: u32,
    pub tool: String,
    pub seed: u64,
    pub backend: Option<BackendDoc>,
    pub certificate: Option<CertificateConfig>,
    pub markov: Option<MarkovConfig>,
    pub fixtures: Vec<String>,
    pub commands: Vec<String>,
}

fn sha256_hex(v: &Value) -> String {
    // serde_json orders object keys, so this byte string is canonical.
    let bytes = serde_json::to_vec(v).expect("values serialize");
    hex::encode(Sha256::digest(&bytes))
}

impl SessionManifest {
    pub fn new(seed: u64, command: impl Into<String>) -> Self {
        SessionManifest {
            version: 1,
            tool: format!("thicklam {}", env!("CARGO_PKG_VERSION")),
            seed,
            commands: vec![command.into()],
            ..SessionManifest::default()
        }
    }

    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_value(self).expect("manifest serializes"))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub manifest: SessionManifest,
    pub manifest_hash: String,
    pub kind: String,
    pub pass: bool,
    pub payload: Value,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReplayOutcome {
    pub kind: String,
    pub pass: bool,
    /// Whether the payload itself was re-verified, beyond the digest.
    pub rechecked: bool,
    pub detail: String,
}

impl Certificate {
    pub fn issue(manifest: SessionManifest, kind: &str, pass: bool, payload: Value) -> Self {
        let manifest_hash = manifest.hash();
        let mut c = Certificate { manifest, manifest_hash, kind: kind.into(), pass, payload, digest: String::new() };
        c.digest = c.compute_digest();
        c
    }

    fn compute_digest(&self) -> String {
        digest_of(&self.manifest_hash, &self.kind, self.pass, &self.payload)
    }

    /// Parses a certificate; anything unreadable counts as tampering. Hashes
    /// are checked on the document as written, so fields that
    /// deserialization would ignore or default still count.
    pub fn from_json(s: &str) -> Result<Self> {
        let bad = |e: String| Error::Integrity(format!("unreadable certificate: {e}"));
        let raw: Value = serde_json::from_str(s).map_err(|e| bad(e.to_string()))?;
        let get = |k: &str| raw.get(k).ok_or_else(|| bad(format!("missing {k}")));
        if sha256_hex(get("manifest")?) != *get("manifest_hash")? {
            return Err(Error::Integrity("manifest hash mismatch".into()));
        }
        let hash = get("manifest_hash")?.as_str().unwrap_or_default();
        let kind = get("kind")?.as_str().unwrap_or_default();
        let pass = get("pass")?.as_bool().unwrap_or_default();
        if digest_of(hash, kind, pass, get("payload")?) != *get("digest")? {
            return Err(Error::Integrity("digest mismatch".into()));
        }
        serde_json::from_value(raw).map_err(|e| bad(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates serialize")
    }

    pub fn check_integrity(&self) -> Result<()> {
        if self.manifest.hash() != self.manifest_hash {
            return Err(Error::Integrity("manifest hash mismatch".into()));
        }
        if self.compute_digest() != self.digest {
            return Err(Error::Integrity("digest mismatch".into()));
        }
        Ok(())
    }

    /// Integrity first, then whatever can be re-verified from the payload.
    pub fn replay(&self) -> Result<ReplayOutcome> {
        self.check_integrity()?;
        let recheck = recheck_payload(&self.kind, &self.payload)?;
        let (rechecked, ok, detail) = match recheck {
            Some((ok, detail)) => (true, ok, detail),
            None => (false, true, "digest verified".to_string()),
        };
        Ok(ReplayOutcome { kind: self.kind.clone(), pass: self.pass && ok, rechecked, detail })
    }
}

fn digest_of(manifest_hash: &str, kind: &str, pass: bool, payload: &Value) -> String {
    sha256_hex(&serde_json::json!({
        "manifest_hash": manifest_hash,
        "kind": kind,
        "pass": pass,
        "payload": payload,
    }))
}

fn field<'a>(v: &'a Value, k: &str) -> Result<&'a Value> {
    v.get(k).ok_or_else(|| Error::Invalid(format!("payload lacks {k}")))
}

fn from_field<T: serde::de::DeserializeOwned>(v: &Value, k: &str) -> Result<T> {
    Ok(serde_json::from_value(field(v, k)?.clone())?)
}

/// Kind-specific checks that need only the payload.
fn recheck_payload(kind: &str, p: &Value) -> Result<Option<(bool, String)>> {
    match kind {
        "graph.geodesic" => {
            let backend = Backend::from_doc(&from_field(p, "backend")?)?;
            let path: Vec<String> = from_field(p, "path")?;
            let (Some(a), Some(b)) = (path.first(), path.last()) else {
                return Ok(Some((false, "empty path".into())));
            };
            let d = backend.distance(a, b)?;
            let steps_ok = path.windows(2).map(|w| backend.distance(&w[0], &w[1])).collect::<Result<Vec<_>>>()?;
            let ok = steps_ok.iter().all(|s| s.lo == 1 && s.hi == Some(1)) && d.hi == Some(path.len() as u64 - 1);
            Ok(Some((ok, format!("{} steps against distance {:?}", path.len() - 1, d.hi))))
        }
        "markov.sample" => {
            let config: CertificateConfig = from_field(p, "config")?;
            let words: Vec<String> = from_field(p, "orbit")?;
            let words = words.iter().map(|w| w.parse()).collect::<Result<Vec<Word>>>()?;
            let ok = crate::markov::fan::certify_orbit(&words, &config).is_ok();
            Ok(Some((ok, format!("orbit of {} vertices re-certified", words.len()))))
        }
        "flatsurf.findvertical" => {
            let family: TorusFamily = from_field(p, "family")?;
            let s: String = from_field(p, "s_star")?;
            let l: String = from_field(p, "l")?;
            let conn: CoverConnection = from_field(p, "connection")?;
            let (s, l): (Q, Q) = (parse_q(&s)?, parse_q(&l)?);
            let x = family.at(&s)?;
            let window = conn.hol.y >= l.recip() && conn.hol.y <= l;
            let found = x.census(&l)?.contains(&conn);
            let ok = conn.hol.x == Vec2::zero().x && window && found;
            Ok(Some((ok, format!("vertical connection of height {} at s = {}", conn.hol.y, s))))
        }
        "flatsurf.verify" => {
            let min_systole: f64 = from_field(p, "min_systole")?;
            let fraction: f64 = from_field(p, "passing_fraction")?;
            let c_hat: f64 = from_field(p, "c_hat")?;
            let params = field(p, "params")?;
            let need = |k: &str| -> Result<f64> { from_field(params, k) };
            let ok = min_systole > need("systole_min")? && fraction >= need("fraction")? && c_hat <= need("c_max")?;
            Ok(Some((ok, "summary thresholds re-evaluated".into())))
        }
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Certificate {
        let mut m = SessionManifest::new(7, "graph geodesic 0/1 1/0");
        m.backend = Some(Backend::Farey(Default::default()).to_doc());
        let payload = serde_json::json!({
            "backend": m.backend,
            "path": ["0/1", "1/0"],
        });
        Certificate::issue(m, "graph.geodesic", true, payload)
    }

    #[test]
    fn untampered_certificates_replay() {
        let c = sample();
        let back = Certificate::from_json(&c.to_json()).unwrap();
        let out = back.replay().unwrap();
        assert!(out.pass && out.rechecked);
    }

    #[test]
    fn every_single_bit_flip_is_caught() {
        let text = sample().to_json();
        let bytes = text.as_bytes();
        for i in 0..bytes.len() {
            for bit in 0..8 {
                let mut b = bytes.to_vec();
                b[i] ^= 1 << bit;
                let Ok(s) = String::from_utf8(b) else { continue };
                let outcome = Certificate::from_json(&s).and_then(|c| c.replay());
                // Whitespace edits outside strings leave the document unchanged.
                if let Ok(o) = &outcome {
                    let reparsed: Value = serde_json::from_str(&s).unwrap();
                    let original: Value = serde_json::from_str(&text).unwrap();
                    assert_eq!(reparsed, original, "flip at byte {i} bit {bit} went unnoticed: {o:?}");
                } else {
                    assert!(matches!(outcome, Err(Error::Integrity(_))), "byte {i} bit {bit}: {outcome:?}");
                }
            }
        }
    }

    #[test]
    fn wrong_payload_fails_recheck() {
        let mut m = SessionManifest::new(1, "graph geodesic");
        m.backend = Some(Backend::Farey(Default::default()).to_doc());
        let payload = serde_json::json!({ "backend": m.backend, "path": ["0/1", "2/1", "1/0"] });
        let c = Certificate::issue(m, "graph.geodesic", true, payload);
        assert!(!c.replay().unwrap().pass);
    }
}
