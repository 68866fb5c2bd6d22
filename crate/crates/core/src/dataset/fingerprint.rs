use std::fmt;

/// Fixed-width bit vector. Bit `i` lives in word `i / 64` at position `i % 64`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    width: usize,
    words: Vec<u64>,
}

impl Fingerprint {
    pub fn zeros(width: usize) -> Self {
        Fingerprint {
            width,
            words: vec![0; width.div_ceil(64)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut fp = Fingerprint::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                fp.set(i, true);
            }
        }
        fp
    }

    /// Builds a fingerprint with the listed bit positions set.
    pub fn from_ones(width: usize, ones: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Fingerprint::zeros(width);
        for i in ones {
            fp.set(i, true);
        }
        fp
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.width,
            "bit {i} out of range for width {}",
            self.width
        );
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.width,
            "bit {i} out of range for width {}",
            self.width
        );
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(
            i < self.width,
            "bit {i} out of range for width {}",
            self.width
        );
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Positions of set bits in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    /// Panics if the widths differ.
    pub fn hamming(&self, other: &Fingerprint) -> u32 {
        assert_eq!(self.width, other.width, "hamming distance across widths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    /// Hex encoding, most significant bit first: bit 0 is the high bit of the first
    /// hex digit. Trailing pad bits of the last digit are zero.
    pub fn to_hex(&self) -> String {
        let digits = self.width.div_ceil(4);
        let mut out = String::with_capacity(digits);
        for d in 0..digits {
            let mut nibble = 0u8;
            for j in 0..4 {
                let i = d * 4 + j;
                if i < self.width && self.get(i) {
                    nibble |= 8 >> j;
                }
            }
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out
    }

    pub fn from_hex(hex: &str, width: usize) -> Result<Self, String> {
        let digits = width.div_ceil(4);
        if hex.len() != digits {
            return Err(format!(
                "expected {digits} hex digits for width {width}, found {}",
                hex.len()
            ));
        }
        let mut fp = Fingerprint::zeros(width);
        for (d, c) in hex.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| format!("invalid hex digit {c:?}"))?;
            for j in 0..4 {
                if nibble & (8 >> j) != 0 {
                    let i = d * 4 + j;
                    if i >= width {
                        return Err(format!("padding bit {i} set beyond width {width}"));
                    }
                    fp.set(i, true);
                }
            }
        }
        Ok(fp)
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({}:{})", self.width, self.to_hex())
    }
}
