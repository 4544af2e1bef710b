use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

type HmacSha256 = Hmac<Sha256>;

/// Signed statement of what an agent may escalate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityToken {
    pub agent: String,
    pub scope: String,
    pub schemas: Vec<String>,
    pub issued: u64,
    pub expiry: u64,
    /// Lowercase hex HMAC-SHA-256 over [`CapabilityToken::signing_bytes`].
    pub signature: String,
}

#[derive(Serialize)]
struct Unsigned<'a> {
    agent: &'a str,
    expiry: u64,
    issued: u64,
    schemas: &'a [String],
    scope: &'a str,
}

impl CapabilityToken {
    pub fn mint(agent: &str, scope: &str, schemas: &[String], issued: u64, expiry: u64, secret: &[u8]) -> Self {
        let mut schemas = schemas.to_vec();
        schemas.sort();
        schemas.dedup();
        let mut t = CapabilityToken {
            agent: agent.to_string(),
            scope: scope.to_string(),
            schemas,
            issued,
            expiry,
            signature: String::new(),
        };
        t.signature = t.sign(secret);
        t
    }

    /// Canonical JSON of every field but the signature, keys sorted.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let u = Unsigned {
            agent: &self.agent,
            expiry: self.expiry,
            issued: self.issued,
            schemas: &self.schemas,
            scope: &self.scope,
        };
        serde_json::to_vec(&u).expect("token serializes")
    }

    fn sign(&self, secret: &[u8]) -> String {
        let mut mac = HmacSha256::new_from_slice(secret).expect("hmac accepts any key length");
        mac.update(&self.signing_bytes());
        hex::encode(mac.finalize().into_bytes())
    }

    /// Constant-time signature check.
    pub fn verify(&self, secret: &[u8]) -> bool {
        let Ok(sig) = hex::decode(&self.signature) else { return false };
        let mut mac = HmacSha256::new_from_slice(secret).expect("hmac accepts any key length");
        mac.update(&self.signing_bytes());
        mac.verify_slice(&sig).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rfc4231_case_2() {
        // key "Jefe", data "what do ya want for nothing?"
        let mut mac = HmacSha256::new_from_slice(b"Jefe").unwrap();
        mac.update(b"what do ya want for nothing?");
        assert_eq!(
            hex::encode(mac.finalize().into_bytes()),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"
        );
    }

    #[test]
    fn sign_and_verify() {
        let t = CapabilityToken::mint("leaf-a", "room-a.floor-1", &["b".into(), "a".into()], 0, 10, b"secret");
        assert_eq!(t.schemas, vec!["a", "b"]);
        assert!(t.verify(b"secret"));
        assert!(!t.verify(b"other"));
        let mut forged = t.clone();
        forged.expiry = 99;
        assert!(!forged.verify(b"secret"));
        let mut garbled = t;
        garbled.signature = "zz".into();
        assert!(!garbled.verify(b"secret"));
    }

    #[test]
    fn signing_bytes_sorted_keys() {
        let t = CapabilityToken::mint("a", "s", &["x".into()], 1, 2, b"k");
        assert_eq!(
            String::from_utf8(t.signing_bytes()).unwrap(),
            r#"{"agent":"a","expiry":2,"issued":1,"schemas":["x"],"scope":"s"}"#
        );
    }
}
