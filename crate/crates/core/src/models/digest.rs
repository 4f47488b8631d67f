use sha2::{Digest, Sha256};

/// Accumulates parameters, rounded to 1e-9, into a stable 64-bit digest.
pub(crate) struct DigestBuilder {
    text: String,
}

impl DigestBuilder {
    pub fn new(tag: &str) -> Self {
        Self {
            text: tag.to_string(),
        }
    }

    pub fn num(&mut self, x: f64) -> &mut Self {
        let r = (x * 1e9).round() / 1e9;
        self.text.push('|');
        if r == 0.0 {
            self.text.push('0');
        } else {
            self.text.push_str(&format!("{r:.9}"));
        }
        self
    }

    pub fn int(&mut self, x: u64) -> &mut Self {
        self.text.push('|');
        self.text.push_str(&x.to_string());
        self
    }

    pub fn finish(&self) -> u64 {
        let hash = Sha256::digest(self.text.as_bytes());
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&hash[..8]);
        u64::from_le_bytes(bytes)
    }
}
