//! Fixed-size binary images.

/// Image side length in pixels.
pub const IMAGE_SIDE: usize = 30;
/// Total cell count of an image.
pub const IMAGE_CELLS: usize = IMAGE_SIDE * IMAGE_SIDE;
/// Packed byte length of one image (900 bits, zero-padded to whole bytes).
pub const BITMAP_BYTES: usize = IMAGE_CELLS.div_ceil(8);

/// A 30x30 binary image, stored as a packed row-major bitset.
///
/// Cell `(row, col)` maps to flat index `row * 30 + col`; flat index `i`
/// lives in byte `i / 8`, bit `i % 8` (least-significant bit first). The
/// last four bits of the final byte are padding and always zero.
#[derive(Clone, PartialEq, Eq)]
pub struct Bitmap {
    bits: [u8; BITMAP_BYTES],
}

impl Bitmap {
    pub fn new() -> Self {
        Self {
            bits: [0u8; BITMAP_BYTES],
        }
    }

    pub fn cell_index(row: usize, col: usize) -> usize {
        debug_assert!(row < IMAGE_SIDE && col < IMAGE_SIDE);
        row * IMAGE_SIDE + col
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.get_index(Self::cell_index(row, col))
    }

    pub fn get_index(&self, index: usize) -> bool {
        assert!(index < IMAGE_CELLS);
        self.bits[index / 8] >> (index % 8) & 1 == 1
    }

    pub fn set(&mut self, row: usize, col: usize) {
        self.set_index(Self::cell_index(row, col));
    }

    pub fn set_index(&mut self, index: usize) {
        assert!(index < IMAGE_CELLS);
        self.bits[index / 8] |= 1 << (index % 8);
    }

    /// Number of on-cells.
    pub fn popcount(&self) -> u32 {
        self.bits.iter().map(|b| b.count_ones()).sum()
    }

    /// Flat indices of all on-cells, ascending.
    pub fn on_indices(&self) -> Vec<u16> {
        let mut out = Vec::with_capacity(self.popcount() as usize);
        for (byte_idx, &byte) in self.bits.iter().enumerate() {
            let mut rest = byte;
            while rest != 0 {
                let bit = rest.trailing_zeros() as usize;
                out.push((byte_idx * 8 + bit) as u16);
                rest &= rest - 1;
            }
        }
        out
    }

    pub fn as_bytes(&self) -> &[u8; BITMAP_BYTES] {
        &self.bits
    }

    /// Rebuild from packed bytes. Returns `None` if any padding bit is set.
    pub fn from_bytes(bits: [u8; BITMAP_BYTES]) -> Option<Self> {
        let pad_bits = BITMAP_BYTES * 8 - IMAGE_CELLS;
        let pad_mask = !0u8 << (8 - pad_bits);
        if bits[BITMAP_BYTES - 1] & pad_mask != 0 {
            return None;
        }
        Some(Self { bits })
    }
}

impl Default for Bitmap {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for Bitmap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Bitmap(popcount={})", self.popcount())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_is_all_zero() {
        let bm = Bitmap::new();
        assert_eq!(bm.popcount(), 0);
        assert!(bm.on_indices().is_empty());
    }

    #[test]
    fn set_get_roundtrip() {
        let mut bm = Bitmap::new();
        bm.set(0, 0);
        bm.set(14, 17);
        bm.set(29, 29);
        assert!(bm.get(0, 0));
        assert!(bm.get(14, 17));
        assert!(bm.get(29, 29));
        assert!(!bm.get(0, 1));
        assert_eq!(bm.popcount(), 3);
        assert_eq!(
            bm.on_indices(),
            vec![0, (14 * 30 + 17) as u16, (29 * 30 + 29) as u16]
        );
    }

    #[test]
    fn set_index_is_idempotent() {
        let mut bm = Bitmap::new();
        bm.set_index(899);
        bm.set_index(899);
        assert_eq!(bm.popcount(), 1);
    }

    #[test]
    fn from_bytes_rejects_padding_bits() {
        let mut bytes = [0u8; BITMAP_BYTES];
        bytes[BITMAP_BYTES - 1] = 0b0001_0000; // bit 900: first padding bit
        assert!(Bitmap::from_bytes(bytes).is_none());

        let mut ok = [0u8; BITMAP_BYTES];
        ok[BITMAP_BYTES - 1] = 0b0000_1000; // bit 899: last real cell
        let bm = Bitmap::from_bytes(ok).expect("valid padding");
        assert!(bm.get(29, 29));
    }

    #[test]
    fn bytes_roundtrip() {
        let mut bm = Bitmap::new();
        for i in (0..IMAGE_CELLS).step_by(37) {
            bm.set_index(i);
        }
        let back = Bitmap::from_bytes(*bm.as_bytes()).unwrap();
        assert_eq!(back, bm);
    }

    #[test]
    #[should_panic]
    fn out_of_range_index_panics() {
        let bm = Bitmap::new();
        bm.get_index(IMAGE_CELLS);
    }
}
