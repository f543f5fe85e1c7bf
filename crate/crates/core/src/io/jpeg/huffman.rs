use crate::io::IoError;

const LOOKUP_BITS: u32 = 9;

fn corrupt(msg: &str) -> IoError {
    IoError::CorruptStream(msg.into())
}

/// Canonical Huffman table with a direct lookup for short codes.
#[derive(Clone)]
pub(super) struct HuffmanTable {
    // (length << 8) | value for codes of at most LOOKUP_BITS bits, 0 otherwise
    lookup: [u16; 1 << LOOKUP_BITS],
    // largest code of each length, -1 when the length is unused
    maxcode: [i32; 17],
    // values index minus the first code of each length
    delta: [i32; 17],
    values: Vec<u8>,
}

impl HuffmanTable {
    /// Builds a table from the 16 per-length code counts and the symbol list
    /// of a DHT segment.
    pub(super) fn new(counts: &[u8; 16], values: &[u8]) -> Result<Self, IoError> {
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        if total != values.len() || total > 256 {
            return Err(corrupt("huffman table size mismatch"));
        }
        let mut table = Self {
            lookup: [0; 1 << LOOKUP_BITS],
            maxcode: [-1; 17],
            delta: [0; 17],
            values: values.to_vec(),
        };
        let mut code: u32 = 0;
        let mut index = 0usize;
        for len in 1..=16u32 {
            let n = counts[len as usize - 1] as usize;
            if n > 0 {
                table.delta[len as usize] = index as i32 - code as i32;
                for _ in 0..n {
                    if code >= 1 << len {
                        return Err(corrupt("huffman code lengths overflow"));
                    }
                    if len <= LOOKUP_BITS {
                        let shift = LOOKUP_BITS - len;
                        let entry = ((len as u16) << 8) | values[index] as u16;
                        let start = (code << shift) as usize;
                        table.lookup[start..start + (1 << shift)].fill(entry);
                    }
                    code += 1;
                    index += 1;
                }
                table.maxcode[len as usize] = code as i32 - 1;
            }
            code <<= 1;
        }
        Ok(table)
    }
}

/// Reads entropy-coded bits, removing byte stuffing and stopping at markers.
pub(super) struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u64,
    bits: u32,
    at_marker: bool,
    // zero bytes fed in after the entropy data ran out
    padding: u32,
}

impl<'a> BitReader<'a> {
    pub(super) fn new(data: &'a [u8], pos: usize) -> Self {
        Self {
            data,
            pos,
            acc: 0,
            bits: 0,
            at_marker: false,
            padding: 0,
        }
    }

    /// Byte offset of the first byte not yet loaded.
    pub(super) fn position(&self) -> usize {
        self.pos
    }

    fn fill(&mut self) {
        while self.bits <= 56 {
            let byte = if self.at_marker {
                self.padding += 1;
                0
            } else if self.pos >= self.data.len() {
                self.at_marker = true;
                self.padding += 1;
                0
            } else {
                let b = self.data[self.pos];
                if b == 0xff {
                    let mut p = self.pos + 1;
                    while p < self.data.len() && self.data[p] == 0xff {
                        p += 1;
                    }
                    if p < self.data.len() && self.data[p] == 0 {
                        self.pos = p + 1;
                        0xff
                    } else {
                        self.at_marker = true;
                        self.padding += 1;
                        0
                    }
                } else {
                    self.pos += 1;
                    b
                }
            };
            self.acc |= (byte as u64) << (56 - self.bits);
            self.bits += 8;
        }
    }

    #[inline]
    fn ensure(&mut self, n: u32) {
        if self.bits < n {
            self.fill();
        }
    }

    #[inline]
    fn consume(&mut self, n: u32) {
        self.acc <<= n;
        self.bits -= n;
    }

    #[inline]
    pub(super) fn get_bits(&mut self, n: u32) -> u32 {
        if n == 0 {
            return 0;
        }
        self.ensure(n);
        let v = (self.acc >> (64 - n)) as u32;
        self.consume(n);
        v
    }

    /// Reads `s` magnitude bits and sign-extends them as in JPEG `EXTEND`.
    #[inline]
    pub(super) fn receive_extend(&mut self, s: u32) -> Result<i32, IoError> {
        if s == 0 {
            return Ok(0);
        }
        if s > 15 {
            return Err(corrupt("coefficient magnitude category out of range"));
        }
        let v = self.get_bits(s) as i32;
        Ok(if v < 1 << (s - 1) { v - (1 << s) + 1 } else { v })
    }

    #[inline]
    pub(super) fn decode(&mut self, table: &HuffmanTable) -> Result<u8, IoError> {
        self.ensure(16);
        let peek = (self.acc >> 48) as u32;
        let entry = table.lookup[(peek >> (16 - LOOKUP_BITS)) as usize];
        if entry != 0 {
            self.consume((entry >> 8) as u32);
            return Ok(entry as u8);
        }
        for len in LOOKUP_BITS + 1..=16 {
            let code = (peek >> (16 - len)) as i32;
            if code <= table.maxcode[len as usize] {
                self.consume(len);
                let index = (code + table.delta[len as usize]) as usize;
                return table
                    .values
                    .get(index)
                    .copied()
                    .ok_or_else(|| corrupt("huffman value index out of range"));
            }
        }
        Err(corrupt("invalid huffman code"))
    }

    /// Fails if decoding consumed bits past the end of the entropy data.
    pub(super) fn check_overrun(&self) -> Result<(), IoError> {
        if self.bits < self.padding * 8 {
            Err(corrupt("entropy-coded data is truncated"))
        } else {
            Ok(())
        }
    }

    /// Skips to and past the next restart marker and resets the bit buffer.
    pub(super) fn restart(&mut self) -> Result<(), IoError> {
        self.check_overrun()?;
        self.acc = 0;
        self.bits = 0;
        self.padding = 0;
        self.at_marker = false;
        match next_marker(self.data, self.pos) {
            Some((0xd0..=0xd7, after)) => {
                self.pos = after;
                Ok(())
            }
            _ => Err(corrupt("missing restart marker")),
        }
    }
}

/// Finds the next marker at or after `pos`, returning its code and the
/// offset just past it. Stuffed zero bytes and fill bytes are skipped.
pub(super) fn next_marker(data: &[u8], mut pos: usize) -> Option<(u8, usize)> {
    while pos + 1 < data.len() {
        if data[pos] != 0xff {
            pos += 1;
            continue;
        }
        match data[pos + 1] {
            0x00 => pos += 2,
            0xff => pos += 1,
            m => return Some((m, pos + 2)),
        }
    }
    None
}
