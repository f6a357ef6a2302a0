use sha2::{Digest, Sha256};

/// Hex-encoded SHA-256 of `bytes`. Used for cache keys and manifest digests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Byte offset of the `char_idx`-th character of `text`.
///
/// `char_idx` may equal the character count, in which case `text.len()` is
/// returned. Spans throughout this crate are character offsets, so slicing
/// goes through this helper.
pub fn char_to_byte(text: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    let mut seen = 0usize;
    for (byte, _) in text.char_indices() {
        if seen == char_idx {
            return Some(byte);
        }
        seen += 1;
    }
    seen += 1;
    if char_idx < seen {
        Some(text.len())
    } else {
        None
    }
}

/// Slice `text` by character offsets; `None` when out of range.
pub fn slice_chars(text: &str, start: usize, end: usize) -> Option<&str> {
    if end < start {
        return None;
    }
    let b_start = char_to_byte(text, start)?;
    let b_end = char_to_byte(text, end)?;
    text.get(b_start..b_end)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_slicing_handles_multibyte() {
        let text = "héllo wörld";
        assert_eq!(slice_chars(text, 0, 5), Some("héllo"));
        assert_eq!(slice_chars(text, 6, 11), Some("wörld"));
        assert_eq!(slice_chars(text, 0, 12), None);
        assert_eq!(slice_chars(text, 11, 11), Some(""));
    }

    #[test]
    fn sha256_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
