//! Byte-level identifiers and the repo-wide hash function.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Name of the hash function every digest in the crate uses.
pub const HASH_FUNCTION: &str = "sha256";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HexError {
    #[error("missing 0x prefix")]
    MissingPrefix,
    #[error("expected {expected} hex characters, found {found}")]
    Length { expected: usize, found: usize },
    #[error("non-canonical hex (only lowercase 0-9a-f allowed)")]
    NotCanonical,
}

/// Decodes `0x`-prefixed lowercase hex. Uppercase digits are rejected so that
/// every byte string has exactly one text form.
pub fn decode_hex(text: &str) -> Result<Vec<u8>, HexError> {
    let body = text.strip_prefix("0x").ok_or(HexError::MissingPrefix)?;
    if body.len() % 2 != 0 {
        return Err(HexError::Length {
            expected: body.len() + 1,
            found: body.len(),
        });
    }
    if !body.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return Err(HexError::NotCanonical);
    }
    hex::decode(body).map_err(|_| HexError::NotCanonical)
}

pub fn encode_hex(bytes: &[u8]) -> String {
    format!("0x{}", hex::encode(bytes))
}

fn decode_fixed<const N: usize>(text: &str) -> Result<[u8; N], HexError> {
    let bytes = decode_hex(text)?;
    bytes.as_slice().try_into().map_err(|_| HexError::Length {
        expected: N * 2,
        found: bytes.len() * 2,
    })
}

/// SHA-256 of `data`.
pub fn sha256(data: &[u8]) -> Hash256 {
    let digest = Sha256::digest(data);
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest);
    Hash256(out)
}

macro_rules! byte_id {
    ($name:ident, $len:expr) => {
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name([u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub const fn new(bytes: [u8; $len]) -> Self {
                Self(bytes)
            }

            pub const fn zero() -> Self {
                Self([0u8; $len])
            }

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                encode_hex(&self.0)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.to_hex())
            }
        }

        impl FromStr for $name {
            type Err = HexError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                decode_fixed::<$len>(s).map(Self)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let text = String::deserialize(deserializer)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

byte_id!(Address, 20);
byte_id!(Hash256, 32);

impl Address {
    /// Deterministic address for a named actor (teams, the instructor,
    /// validators): the last 20 bytes of `sha256(label)`.
    pub fn from_label(label: &str) -> Self {
        let digest = sha256(label.as_bytes());
        let mut out = [0u8; 20];
        out.copy_from_slice(&digest.0[12..]);
        Address(out)
    }

    pub(crate) fn from_digest_tail(digest: &Hash256) -> Self {
        let mut out = [0u8; 20];
        out.copy_from_slice(&digest.0[12..]);
        Address(out)
    }
}

impl Hash256 {
    /// Number of leading zero bits when read as a big-endian 256-bit integer.
    pub fn leading_zero_bits(&self) -> u32 {
        let mut bits = 0;
        for byte in self.0 {
            if byte == 0 {
                bits += 8;
            } else {
                bits += byte.leading_zeros();
                break;
            }
        }
        bits
    }
}

/// Serde helpers for byte vectors as `0x` hex strings.
pub mod hex_bytes {
    use super::*;

    pub fn serialize<S: Serializer>(bytes: &[u8], serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&encode_hex(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(deserializer)?;
        decode_hex(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde helpers for `u128` amounts as canonical decimal strings (no sign, no
/// leading zeros). JSON numbers cannot carry 128-bit values losslessly.
pub mod dec_u128 {
    use super::*;

    pub fn serialize<S: Serializer>(value: &u128, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<u128, D::Error> {
        let text = String::deserialize(deserializer)?;
        let canonical =
            !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit()) && (text == "0" || !text.starts_with('0'));
        if !canonical {
            return Err(serde::de::Error::custom(format!(
                "non-canonical decimal amount {text:?}"
            )));
        }
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn address_text_form_is_42_chars() {
        let a = Address::from_label("team-1");
        assert_eq!(a.to_hex().len(), 42);
        assert!(a.to_hex().starts_with("0x"));
    }

    #[test]
    fn uppercase_hex_is_rejected() {
        let text = "0x00000000000000000000000000000000000000AB";
        assert_eq!(text.parse::<Address>(), Err(HexError::NotCanonical));
        assert!("00".parse::<Address>().is_err());
        assert!("0x00".parse::<Address>().is_err());
    }

    #[test]
    fn leading_zero_bits_counts_across_bytes() {
        let mut bytes = [0xffu8; 32];
        bytes[0] = 0;
        bytes[1] = 0b0001_0000;
        assert_eq!(Hash256::new(bytes).leading_zero_bits(), 11);
        assert_eq!(Hash256::zero().leading_zero_bits(), 256);
    }

    #[test]
    fn sha256_matches_known_vector() {
        assert_eq!(
            sha256(b"abc").to_hex(),
            "0xba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    proptest! {
        #[test]
        fn address_text_round_trip(bytes in any::<[u8; 20]>()) {
            let a = Address::new(bytes);
            prop_assert_eq!(a.to_hex().parse::<Address>().unwrap(), a);
        }

        #[test]
        fn hash_text_round_trip(bytes in any::<[u8; 32]>()) {
            let h = Hash256::new(bytes);
            prop_assert_eq!(h.to_hex().parse::<Hash256>().unwrap(), h);
        }
    }
}
