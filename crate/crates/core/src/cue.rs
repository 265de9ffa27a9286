//! Rendering of the two cue types into binary images.
//!
//! A sample image carries up to two cues: a *symbol* cue (three 9-pixel
//! glyphs placed at random, non-overlapping positions) and a *pattern* cue
//! (27 distinct pixels drawn from a class-specific spatial distribution).
//! Both cues use exactly 27 pixels, so neither is separable by pixel count.

use crate::bitmap::{Bitmap, IMAGE_CELLS, IMAGE_SIDE};
use crate::rng::RngStream;

/// Side length of a glyph's bounding box.
pub const GLYPH_SIDE: usize = 5;
/// On-pixels per glyph.
pub const GLYPH_PIXELS: usize = 9;
/// Glyphs per symbol cue.
pub const SYMBOLS_PER_IMAGE: usize = 3;
/// On-pixels per cue (either kind).
pub const CUE_PIXELS: usize = 27;
/// Largest valid anchor coordinate keeping the glyph box inside the image.
pub const ANCHOR_MAX: usize = IMAGE_SIDE - GLYPH_SIDE;
/// Width of the Gaussian kernel behind the centered/cornered distributions.
pub const DEFAULT_PATTERN_SIGMA: f64 = 5.0;

const PLACEMENT_RETRY_CAP: u32 = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum CueError {
    #[error("no pairwise-disjoint symbol placement found in {0} attempts")]
    PlacementExhausted(u32),
}

/// The two symbol shapes. Both occupy a 5x5 box with exactly 9 on-pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Glyph {
    Plus,
    Cross,
}

impl Glyph {
    /// Cell offsets of the glyph within its 5x5 bounding box, row-major.
    pub fn mask(self) -> &'static [(u8, u8); GLYPH_PIXELS] {
        // Plus: middle row and middle column. Cross: both diagonals.
        const PLUS: [(u8, u8); GLYPH_PIXELS] = [
            (0, 2),
            (1, 2),
            (2, 0),
            (2, 1),
            (2, 2),
            (2, 3),
            (2, 4),
            (3, 2),
            (4, 2),
        ];
        const CROSS: [(u8, u8); GLYPH_PIXELS] = [
            (0, 0),
            (0, 4),
            (1, 1),
            (1, 3),
            (2, 2),
            (3, 1),
            (3, 3),
            (4, 0),
            (4, 4),
        ];
        match self {
            Glyph::Plus => &PLUS,
            Glyph::Cross => &CROSS,
        }
    }

    pub fn symbol_char(self) -> char {
        match self {
            Glyph::Plus => '+',
            Glyph::Cross => 'x',
        }
    }
}

/// A glyph anchored at the top-left corner of its 5x5 box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymbolPlacement {
    pub glyph: Glyph,
    pub row: u8,
    pub col: u8,
}

impl SymbolPlacement {
    fn boxes_overlap(&self, other: &SymbolPlacement) -> bool {
        let dr = (i16::from(self.row) - i16::from(other.row)).unsigned_abs() as usize;
        let dc = (i16::from(self.col) - i16::from(other.col)).unsigned_abs() as usize;
        dr < GLYPH_SIDE && dc < GLYPH_SIDE
    }
}

/// The three spatial distributions a pattern cue can be drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PatternDistribution {
    Uniform,
    Centered,
    Cornered,
}

impl PatternDistribution {
    pub const ALL: [PatternDistribution; 3] = [
        PatternDistribution::Uniform,
        PatternDistribution::Centered,
        PatternDistribution::Cornered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternDistribution::Uniform => "uniform",
            PatternDistribution::Centered => "centered",
            PatternDistribution::Cornered => "cornered",
        }
    }
}

/// Place glyphs uniformly at random with pairwise-disjoint bounding boxes.
///
/// Anchors are drawn uniformly from `[0, 25]^2` (row, then column, per
/// glyph); the whole tuple is redrawn until no two boxes overlap, so the
/// result is uniform over disjoint configurations. Output order matches
/// input order. The retry cap is unreachable at this density and exists to
/// surface RNG or bounds bugs.
pub fn place_symbols(
    glyphs: &[Glyph],
    rng: &mut RngStream,
) -> Result<Vec<SymbolPlacement>, CueError> {
    let bound = ANCHOR_MAX as u64 + 1;
    let mut placements: Vec<SymbolPlacement> = Vec::with_capacity(glyphs.len());
    for _ in 0..PLACEMENT_RETRY_CAP {
        placements.clear();
        for &glyph in glyphs {
            let row = rng.next_below(bound) as u8;
            let col = rng.next_below(bound) as u8;
            placements.push(SymbolPlacement { glyph, row, col });
        }
        let disjoint = placements
            .iter()
            .enumerate()
            .all(|(i, a)| placements[..i].iter().all(|b| !a.boxes_overlap(b)));
        if disjoint {
            return Ok(placements);
        }
    }
    Err(CueError::PlacementExhausted(PLACEMENT_RETRY_CAP))
}

/// Per-cell probability mass of a pattern distribution over the 900 cells,
/// using the default kernel width.
pub fn pattern_pmf(dist: PatternDistribution) -> Vec<f64> {
    pattern_pmf_with_sigma(dist, DEFAULT_PATTERN_SIGMA)
}

/// Per-cell probability mass with an explicit Gaussian width.
///
/// `Uniform` is constant. `Centered` and `Cornered` are an isotropic
/// Gaussian kernel truncated to the grid and normalized, centered on the
/// image midpoint and on cell `(0, 0)` respectively. Every entry is
/// strictly positive and the vector sums to 1.
pub fn pattern_pmf_with_sigma(dist: PatternDistribution, sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let center = match dist {
        PatternDistribution::Uniform => {
            return vec![1.0 / IMAGE_CELLS as f64; IMAGE_CELLS];
        }
        PatternDistribution::Centered => {
            let mid = (IMAGE_SIDE as f64 - 1.0) / 2.0;
            (mid, mid)
        }
        PatternDistribution::Cornered => (0.0, 0.0),
    };
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    let mut pmf = Vec::with_capacity(IMAGE_CELLS);
    for row in 0..IMAGE_SIDE {
        for col in 0..IMAGE_SIDE {
            let dr = row as f64 - center.0;
            let dc = col as f64 - center.1;
            pmf.push((-(dr * dr + dc * dc) * inv_two_sigma_sq).exp());
        }
    }
    let total: f64 = pmf.iter().sum();
    for p in &mut pmf {
        *p /= total;
    }
    pmf
}

/// Draw `count` distinct cells by sequential renormalization: each draw
/// picks a cell with probability proportional to its remaining weight,
/// then removes it.
pub fn sample_pattern(
    dist: PatternDistribution,
    count: usize,
    rng: &mut RngStream,
) -> Vec<usize> {
    assert!(
        (1..=IMAGE_CELLS).contains(&count),
        "count must be in [1, {IMAGE_CELLS}]"
    );
    sample_without_replacement(&pattern_pmf(dist), count, rng)
}

/// Weighted sampling without replacement from an arbitrary finite pmf.
///
/// Exposed so the sampling process can be checked against exhaustive
/// enumeration on small grids.
pub fn sample_without_replacement(
    weights: &[f64],
    count: usize,
    rng: &mut RngStream,
) -> Vec<usize> {
    assert!(count <= weights.len());
    assert!(weights.iter().all(|&w| w >= 0.0 && w.is_finite()));
    let mut remaining = weights.to_vec();
    let mut total: f64 = remaining.iter().sum();
    let mut chosen = Vec::with_capacity(count);
    for _ in 0..count {
        let target = rng.next_f64() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (idx, &w) in remaining.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            if target < acc {
                pick = Some(idx);
                break;
            }
        }
        // Rounding in `acc` can leave the target unmatched; fall back to
        // the last cell still in play.
        let pick = pick.unwrap_or_else(|| {
            remaining
                .iter()
                .rposition(|&w| w > 0.0)
                .expect("pmf exhausted before count reached")
        });
        chosen.push(pick);
        total -= remaining[pick];
        remaining[pick] = 0.0;
        if total <= 0.0 {
            // Recompute to shed accumulated subtraction error.
            total = remaining.iter().sum();
        }
    }
    chosen
}

/// Compose placements and pattern cells into a bitmap with logical OR.
pub fn render(placements: &[SymbolPlacement], pattern: &[usize]) -> Bitmap {
    let mut bitmap = Bitmap::new();
    for placement in placements {
        for &(dr, dc) in placement.glyph.mask() {
            bitmap.set(
                placement.row as usize + dr as usize,
                placement.col as usize + dc as usize,
            );
        }
    }
    for &cell in pattern {
        bitmap.set_index(cell);
    }
    bitmap
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn plus_mask_is_middle_row_and_column() {
        let expected: HashSet<(u8, u8)> = [
            (0, 2),
            (1, 2),
            (2, 0),
            (2, 1),
            (2, 2),
            (2, 3),
            (2, 4),
            (3, 2),
            (4, 2),
        ]
        .into_iter()
        .collect();
        let actual: HashSet<(u8, u8)> = Glyph::Plus.mask().iter().copied().collect();
        assert_eq!(actual, expected);
    }

    #[test]
    fn cross_mask_is_both_diagonals() {
        let expected: HashSet<(u8, u8)> = [
            (0, 0),
            (1, 1),
            (2, 2),
            (3, 3),
            (4, 4),
            (0, 4),
            (1, 3),
            (3, 1),
            (4, 0),
        ]
        .into_iter()
        .collect();
        let actual: HashSet<(u8, u8)> = Glyph::Cross.mask().iter().copied().collect();
        assert_eq!(actual, expected);
    }

    #[test]
    fn masks_have_nine_distinct_cells_and_differ() {
        for glyph in [Glyph::Plus, Glyph::Cross] {
            let set: HashSet<(u8, u8)> = glyph.mask().iter().copied().collect();
            assert_eq!(set.len(), GLYPH_PIXELS);
            assert!(set
                .iter()
                .all(|&(r, c)| (r as usize) < GLYPH_SIDE && (c as usize) < GLYPH_SIDE));
        }
        let plus: HashSet<(u8, u8)> = Glyph::Plus.mask().iter().copied().collect();
        let cross: HashSet<(u8, u8)> = Glyph::Cross.mask().iter().copied().collect();
        assert_ne!(plus, cross);
    }

    #[test]
    fn placements_in_bounds_disjoint_and_ordered() {
        let glyphs = [Glyph::Plus, Glyph::Cross, Glyph::Cross];
        for seed in 0..200 {
            let mut rng = RngStream::new(seed, 0);
            let placements = place_symbols(&glyphs, &mut rng).unwrap();
            assert_eq!(placements.len(), 3);
            for (placement, &glyph) in placements.iter().zip(glyphs.iter()) {
                assert_eq!(placement.glyph, glyph);
                assert!(placement.row as usize <= ANCHOR_MAX);
                assert!(placement.col as usize <= ANCHOR_MAX);
            }
            for i in 0..3 {
                for j in 0..i {
                    assert!(!placements[i].boxes_overlap(&placements[j]));
                }
            }
        }
    }

    #[test]
    fn uniform_pmf_is_constant() {
        let pmf = pattern_pmf(PatternDistribution::Uniform);
        assert_eq!(pmf.len(), IMAGE_CELLS);
        for &p in &pmf {
            assert_eq!(p, 1.0 / 900.0);
        }
    }

    #[test]
    fn pmfs_are_normalized_and_positive() {
        for dist in PatternDistribution::ALL {
            let pmf = pattern_pmf(dist);
            let sum: f64 = pmf.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "{}: sum = {sum}", dist.name());
            assert!(pmf.iter().all(|&p| p > 0.0), "{}", dist.name());
        }
    }

    #[test]
    fn centered_peaks_at_middle() {
        let pmf = pattern_pmf(PatternDistribution::Centered);
        assert!(pmf[Bitmap::cell_index(14, 14)] > pmf[Bitmap::cell_index(0, 0)]);
        assert!(pmf[Bitmap::cell_index(14, 14)] > pmf[Bitmap::cell_index(29, 29)]);
    }

    #[test]
    fn cornered_peaks_at_origin() {
        let pmf = pattern_pmf(PatternDistribution::Cornered);
        assert!(pmf[Bitmap::cell_index(0, 0)] > pmf[Bitmap::cell_index(29, 29)]);
        assert!(pmf[Bitmap::cell_index(0, 0)] > pmf[Bitmap::cell_index(14, 14)]);
    }

    #[test]
    fn sample_pattern_draws_distinct_cells() {
        for dist in PatternDistribution::ALL {
            let mut rng = RngStream::new(11, 3);
            let cells = sample_pattern(dist, CUE_PIXELS, &mut rng);
            assert_eq!(cells.len(), CUE_PIXELS);
            let set: HashSet<usize> = cells.iter().copied().collect();
            assert_eq!(set.len(), CUE_PIXELS);
            assert!(cells.iter().all(|&c| c < IMAGE_CELLS));
        }
    }

    #[test]
    fn sampling_everything_exhausts_the_grid() {
        let mut rng = RngStream::new(2, 9);
        let cells = sample_pattern(PatternDistribution::Uniform, IMAGE_CELLS, &mut rng);
        let set: HashSet<usize> = cells.iter().copied().collect();
        assert_eq!(set.len(), IMAGE_CELLS);
    }

    #[test]
    fn render_empty_is_blank() {
        assert_eq!(render(&[], &[]).popcount(), 0);
    }

    #[test]
    fn render_symbols_only_covers_27_cells() {
        let glyphs = [Glyph::Plus, Glyph::Plus, Glyph::Plus];
        for seed in 0..50 {
            let mut rng = RngStream::new(seed, 1);
            let placements = place_symbols(&glyphs, &mut rng).unwrap();
            assert_eq!(render(&placements, &[]).popcount() as usize, CUE_PIXELS);
        }
    }

    #[test]
    fn render_pattern_only_covers_27_cells() {
        for seed in 0..50 {
            let mut rng = RngStream::new(seed, 2);
            let cells = sample_pattern(PatternDistribution::Centered, CUE_PIXELS, &mut rng);
            assert_eq!(render(&[], &cells).popcount() as usize, CUE_PIXELS);
        }
    }

    #[test]
    fn render_both_cues_popcount_within_overlap_bounds() {
        let glyphs = [Glyph::Plus, Glyph::Cross, Glyph::Cross];
        for seed in 0..50 {
            let mut rng = RngStream::new(seed, 3);
            let placements = place_symbols(&glyphs, &mut rng).unwrap();
            let cells = sample_pattern(PatternDistribution::Uniform, CUE_PIXELS, &mut rng);
            let popcount = render(&placements, &cells).popcount() as usize;
            assert!((CUE_PIXELS..=2 * CUE_PIXELS).contains(&popcount));
        }
    }

    #[test]
    fn render_matches_naive_or_composition() {
        let glyphs = [Glyph::Cross, Glyph::Plus, Glyph::Cross];
        let mut rng = RngStream::new(77, 4);
        let placements = place_symbols(&glyphs, &mut rng).unwrap();
        let cells = sample_pattern(PatternDistribution::Cornered, CUE_PIXELS, &mut rng);
        let bitmap = render(&placements, &cells);

        let mut expected: HashSet<usize> = cells.iter().copied().collect();
        for p in &placements {
            for &(dr, dc) in p.glyph.mask() {
                expected.insert(Bitmap::cell_index(
                    p.row as usize + dr as usize,
                    p.col as usize + dc as usize,
                ));
            }
        }
        for idx in 0..IMAGE_CELLS {
            assert_eq!(bitmap.get_index(idx), expected.contains(&idx));
        }
    }

    #[test]
    fn identical_streams_render_identical_bitmaps() {
        let glyphs = [Glyph::Plus, Glyph::Plus, Glyph::Cross];
        let build = || {
            let mut rng = RngStream::new(123, 456);
            let placements = place_symbols(&glyphs, &mut rng).unwrap();
            let cells = sample_pattern(PatternDistribution::Centered, CUE_PIXELS, &mut rng);
            render(&placements, &cells)
        };
        assert_eq!(build(), build());
    }
}
