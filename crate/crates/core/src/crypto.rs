//! Signatures, canonical serialization, and content-derived identifiers.
//!
//! Everything that gets signed in this crate is first reduced to a single
//! unambiguous byte representation by [`canonicalize`]: minimal-whitespace
//! UTF-8 JSON with lexicographically sorted map keys and no floating-point
//! numbers. Signatures are deterministic Ed25519, so identical inputs always
//! produce identical signature bytes.

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Structured value type used for all canonical serialization.
///
/// `serde_json`'s map type is a `BTreeMap` (the `preserve_order` feature is
/// not enabled), so object keys are always held in sorted order and duplicate
/// keys are unrepresentable.
pub type Value = serde_json::Value;

/// The single registered signature suite.
pub const SUITE_ED25519: &str = "ed25519";

/// Suites a verification method may name. Currently exactly one; the
/// `suite_id` dispatch exists so further suites can be registered.
pub const REGISTERED_SUITES: &[&str] = &[SUITE_ED25519];

pub const SEED_LEN: usize = 32;
pub const PUBLIC_KEY_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;
pub const DIGEST_LEN: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("seed must be exactly {SEED_LEN} bytes, got {0}")]
    BadSeedLength(usize),
    #[error("unknown signature suite `{0}`")]
    UnknownSuite(String),
    #[error("floating-point numbers cannot be canonicalized")]
    FloatInValue,
    #[error("invalid hex: {0}")]
    BadHex(String),
}

/// Strict lowercase hex decoding.
///
/// Uppercase digits are rejected so that every byte string has exactly one
/// accepted textual form; otherwise a re-encoded value could differ from the
/// bytes a signature was computed over while still verifying.
pub fn hex_decode_strict(s: &str) -> Result<Vec<u8>, CryptoError> {
    if s.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(CryptoError::BadHex("uppercase digit".into()));
    }
    hex::decode(s).map_err(|e| CryptoError::BadHex(e.to_string()))
}

pub(crate) mod hex_bytes {
    use super::hex_decode_strict;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: impl AsRef<[u8]>, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&hex::encode(bytes.as_ref()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(de)?;
        hex_decode_strict(&s).map_err(serde::de::Error::custom)
    }
}

/// A deterministic Ed25519 signing key plus its derived verification key.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
    suite_id: String,
}

impl std::fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // Secret material stays out of debug output.
        f.debug_struct("KeyPair")
            .field("public_key", &hex::encode(self.public_key()))
            .field("suite_id", &self.suite_id)
            .finish()
    }
}

impl KeyPair {
    /// Derives a key pair from a 32-byte seed. Same seed, same keys.
    pub fn from_seed(seed: &[u8]) -> Result<Self, CryptoError> {
        let seed: &[u8; SEED_LEN] = seed
            .try_into()
            .map_err(|_| CryptoError::BadSeedLength(seed.len()))?;
        Ok(KeyPair {
            signing: SigningKey::from_bytes(seed),
            suite_id: SUITE_ED25519.to_string(),
        })
    }

    pub fn public_key(&self) -> [u8; PUBLIC_KEY_LEN] {
        self.signing.verifying_key().to_bytes()
    }

    pub fn suite_id(&self) -> &str {
        &self.suite_id
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        Signature {
            bytes: self.signing.sign(message).to_bytes().to_vec(),
            suite_id: self.suite_id.clone(),
        }
    }
}

/// A detached signature value tagged with the suite that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    #[serde(with = "hex_bytes")]
    pub bytes: Vec<u8>,
    pub suite_id: String,
}

/// Signature verification. Malformed keys, suites, or signature bytes map to
/// a plain reject; this never panics on arbitrary input.
pub fn verify(public_key: &[u8], message: &[u8], sig: &Signature) -> bool {
    if sig.suite_id != SUITE_ED25519 || sig.bytes.len() != SIGNATURE_LEN {
        return false;
    }
    let Ok(key_bytes) = <&[u8; PUBLIC_KEY_LEN]>::try_from(public_key) else {
        return false;
    };
    let Ok(vk) = VerifyingKey::from_bytes(key_bytes) else {
        return false;
    };
    let sig_bytes: &[u8; SIGNATURE_LEN] = sig.bytes.as_slice().try_into().expect("length checked");
    vk.verify(message, &ed25519_dalek::Signature::from_bytes(sig_bytes))
        .is_ok()
}

/// A 32-byte SHA-256 output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentDigest(pub [u8; DIGEST_LEN]);

impl ContentDigest {
    pub fn to_hex(self) -> String {
        hex::encode(self.0)
    }
}

impl Serialize for ContentDigest {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ContentDigest {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        let bytes = hex_decode_strict(&s).map_err(serde::de::Error::custom)?;
        let arr: [u8; DIGEST_LEN] = bytes
            .as_slice()
            .try_into()
            .map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))?;
        Ok(ContentDigest(arr))
    }
}

/// Content-derived identifier: SHA-256 of the input bytes.
pub fn content_id(bytes: &[u8]) -> ContentDigest {
    let mut h = Sha256::new();
    h.update(bytes);
    ContentDigest(h.finalize().into())
}

/// Canonical byte form of a structured value: sorted keys, no insignificant
/// whitespace, UTF-8, floats rejected. The output parses back to an equal
/// value.
pub fn canonicalize(value: &Value) -> Result<Vec<u8>, CryptoError> {
    reject_floats(value)?;
    Ok(serde_json::to_vec(value).expect("serializing a float-free Value cannot fail"))
}

/// Digest of the canonical form; the usual way content ids are computed.
pub fn canonical_digest(value: &Value) -> Result<ContentDigest, CryptoError> {
    Ok(content_id(&canonicalize(value)?))
}

fn reject_floats(value: &Value) -> Result<(), CryptoError> {
    match value {
        Value::Number(n) if n.as_i64().is_none() && n.as_u64().is_none() => {
            Err(CryptoError::FloatInValue)
        }
        Value::Array(items) => items.iter().try_for_each(reject_floats),
        Value::Object(map) => map.values().try_for_each(reject_floats),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keypair_is_deterministic_and_seed_sensitive() {
        let a = KeyPair::from_seed(&[0u8; 32]).unwrap();
        let b = KeyPair::from_seed(&[0u8; 32]).unwrap();
        assert_eq!(a.public_key(), b.public_key());

        let mut seed = [0u8; 32];
        seed[31] = 1;
        let c = KeyPair::from_seed(&seed).unwrap();
        assert_ne!(a.public_key(), c.public_key());
    }

    #[test]
    fn wrong_seed_length_is_an_input_error() {
        assert_eq!(
            KeyPair::from_seed(&[0u8; 31]).unwrap_err(),
            CryptoError::BadSeedLength(31)
        );
    }

    #[test]
    fn sign_verify_round_trip_including_empty_message() {
        let kp = KeyPair::from_seed(&[7u8; 32]).unwrap();
        for msg in [&b""[..], b"hello", &[0xffu8; 300]] {
            let sig = kp.sign(msg);
            assert!(verify(&kp.public_key(), msg, &sig));
        }
    }

    #[test]
    fn tampered_message_rejects() {
        let kp = KeyPair::from_seed(&[9u8; 32]).unwrap();
        let sig = kp.sign(b"original");
        assert!(!verify(&kp.public_key(), b"originaL", &sig));
        let other = KeyPair::from_seed(&[10u8; 32]).unwrap();
        assert!(!verify(&other.public_key(), b"original", &sig));
    }

    #[test]
    fn verify_tolerates_malformed_inputs() {
        let sig = Signature {
            bytes: vec![0u8; 64],
            suite_id: SUITE_ED25519.into(),
        };
        assert!(!verify(&[1, 2, 3], b"m", &sig));
        let short = Signature {
            bytes: vec![0u8; 12],
            suite_id: SUITE_ED25519.into(),
        };
        assert!(!verify(&[0u8; 32], b"m", &short));
        let bad_suite = Signature {
            bytes: vec![0u8; 64],
            suite_id: "nope".into(),
        };
        assert!(!verify(&[0u8; 32], b"m", &bad_suite));
    }

    #[test]
    fn canonicalize_is_key_order_independent() {
        // Maps built in different insertion orders collapse to one byte form.
        let mut a = serde_json::Map::new();
        a.insert("b".into(), json!(1));
        a.insert("a".into(), json!(2));
        let mut b = serde_json::Map::new();
        b.insert("a".into(), json!(2));
        b.insert("b".into(), json!(1));
        assert_eq!(
            canonicalize(&Value::Object(a)).unwrap(),
            canonicalize(&Value::Object(b)).unwrap()
        );
    }

    #[test]
    fn canonicalize_empty_map() {
        assert_eq!(canonicalize(&json!({})).unwrap(), b"{}");
    }

    #[test]
    fn canonicalize_rejects_floats() {
        assert_eq!(
            canonicalize(&json!({"x": 1.5})).unwrap_err(),
            CryptoError::FloatInValue
        );
        assert_eq!(
            canonicalize(&json!([1, [2, 3.0]])).unwrap_err(),
            CryptoError::FloatInValue
        );
    }

    #[test]
    fn canonical_output_parses_back() {
        let v = json!({"k": [1, "two", null, true], "m": {"n": -5}});
        let bytes = canonicalize(&v).unwrap();
        let back: Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn sha256_known_answers() {
        assert_eq!(
            content_id(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(
            content_id(b"").to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn content_id_is_suffix_sensitive() {
        for x in [&b""[..], b"a", b"some longer input"] {
            let mut y = x.to_vec();
            y.push(0);
            assert_ne!(content_id(x), content_id(&y));
            assert_eq!(content_id(x), content_id(x));
        }
    }

    #[test]
    fn strict_hex_rejects_uppercase() {
        assert!(hex_decode_strict("00ff").is_ok());
        assert!(hex_decode_strict("00FF").is_err());
        assert!(hex_decode_strict("0g").is_err());
    }
}
