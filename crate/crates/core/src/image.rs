//! Synthetic camera frames and their ingestion back into measurement ratios.
//!
//! The optical encoding maps transverse position to quasimomentum: one
//! spatial period of the metasurface pattern (`bz_width_px` pixels) spans
//! one full zone, and pixel column `x` samples its own center,
//!
//! ```text
//! q(x) = 2π·(x + ½)/bz_width_px   (mod 2π),
//! ```
//!
//! under a Gaussian beam envelope `|A(x,y)|² = exp(−2 r²/w₀²)` centered on
//! the frame, with waist `w₀` at least one period so the whole zone is lit.
//! A full acquisition is one frame per polarimetric channel: inputs
//! `{L, H, D}` × projections `{L, R, H, V, D, A}`, eighteen frames.
//!
//! Ingestion reverses the mapping: each frame is block-averaged down to 90
//! columns, integrated along `y`, and the per-column intensities are
//! pair-normalized into the standard ratio records.  The envelope is common
//! to every channel, so it cancels exactly in the ratios; ingesting a
//! noiseless render at `width = bz_width_px = 90` reproduces the pointwise
//! ratio sets to machine precision, and wider frames agree up to the small
//! block-averaging bias.
//!
//! Frames serialize as 16-bit big-endian binary PGM (`P5`, maxval 65535)
//! with a scale common to the whole set, preserving inter-channel ratios.

use crate::polarimetry::{
    intensity_set, ratios_from_intensities, DatasetRecord, InputState, NoiseConfig,
    PolarimetryError, ProjectionState, CHANNELS, CHANNEL_NAMES,
};
use crate::spectral::{step_operator, ModelParams, Quasimomentum};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Fixed column count of the ingestion grid.
pub const INGEST_COLUMNS: usize = 90;

/// Errors from frame synthesis, serialization, and ingestion.
#[derive(Debug, Error)]
pub enum ImageError {
    /// The requested frame geometry is unusable.
    #[error("invalid frame geometry: {reason}")]
    Geometry { reason: String },
    /// A frame set does not contain each of the 18 channels exactly once.
    #[error("frame set must contain each of the 18 standard channels exactly once")]
    WrongChannelSet,
    /// Frames of one acquisition disagree on geometry.
    #[error("frames disagree on geometry")]
    MismatchedGeometry,
    /// A pixel buffer does not match its declared geometry.
    #[error("pixel buffer holds {got} values, geometry requires {expected}")]
    WrongBufferLength { got: usize, expected: usize },
    /// An ingested column carries no light in some projection pair.
    #[error("ingested column {column} is dark in a projection pair")]
    DarkColumn { column: usize },
    /// A PGM payload could not be parsed.
    #[error("malformed PGM payload: {reason}")]
    MalformedPgm { reason: String },
    /// Upstream measurement-model failure.
    #[error(transparent)]
    Polarimetry(#[from] PolarimetryError),
}

/// Pixel geometry of one synthetic acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameGeometry {
    /// Frame width in pixels.
    pub width: usize,
    /// Frame height in pixels.
    pub height: usize,
    /// Pixels per spatial period (one full zone).
    pub bz_width_px: usize,
    /// Gaussian beam waist in pixels (`w₀ ≥ bz_width_px` so the zone is lit).
    pub beam_waist_px: f64,
}

impl Default for FrameGeometry {
    /// One zone across a 1080×1080 frame with the waist equal to the period.
    fn default() -> Self {
        Self {
            width: 1080,
            height: 1080,
            bz_width_px: 1080,
            beam_waist_px: 1080.0,
        }
    }
}

impl FrameGeometry {
    /// Checks the geometric preconditions of the optical mapping.
    pub fn validate(&self) -> Result<(), ImageError> {
        let fail = |reason: &str| {
            Err(ImageError::Geometry {
                reason: reason.into(),
            })
        };
        if self.bz_width_px < INGEST_COLUMNS {
            return fail("one zone must span at least 90 pixels");
        }
        if self.width < self.bz_width_px {
            return fail("frame width must cover at least one full zone");
        }
        if self.height == 0 {
            return fail("frame height must be positive");
        }
        if !self.beam_waist_px.is_finite() || self.beam_waist_px < self.bz_width_px as f64 {
            return fail("beam waist must be at least one spatial period");
        }
        Ok(())
    }

    /// Quasimomentum sampled by pixel column `x` (column centers).
    pub fn momentum_of_column(&self, x: usize) -> Quasimomentum {
        Quasimomentum::new(2.0 * PI * (x as f64 + 0.5) / self.bz_width_px as f64)
    }

    /// Beam envelope intensity `|A(x,y)|²` at the center of pixel `(x, y)`.
    pub fn envelope(&self, x: usize, y: usize) -> f64 {
        let dx = (x as f64 + 0.5) - self.width as f64 / 2.0;
        let dy = (y as f64 + 0.5) - self.height as f64 / 2.0;
        (-2.0 * (dx * dx + dy * dy) / (self.beam_waist_px * self.beam_waist_px)).exp()
    }
}

/// One camera frame of a polarimetric acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage {
    /// Input polarization state of the frame.
    pub input: InputState,
    /// Analyzer projection state of the frame.
    pub projection: ProjectionState,
    /// Pixel geometry (shared across an acquisition).
    pub geometry: FrameGeometry,
    /// Row-major non-negative intensity samples, `width × height` values.
    pub values: Vec<f64>,
}

impl IntensityImage {
    /// Intensity at pixel `(x, y)`.
    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.geometry.width + x]
    }

    fn check_buffer(&self) -> Result<(), ImageError> {
        let expected = self.geometry.width * self.geometry.height;
        if self.values.len() != expected {
            return Err(ImageError::WrongBufferLength {
                got: self.values.len(),
                expected,
            });
        }
        Ok(())
    }
}

/// Renders the 18-channel synthetic acquisition of a walk configuration.
///
/// Pixel `(x, y)` of channel `(i, j)` holds
/// `|A(x,y)|²·|⟨j|U(q(x))|i⟩|²` degraded by the noise model (Poisson shot
/// noise at the configured photon budget, then multiplicative Gaussian gain
/// noise, clipped at zero).  Channel `c` consumes only RNG stream `c` of the
/// seed, pixels in row-major order, so output is a pure function of the
/// arguments and identical whether channels render serially or in parallel.
pub fn render_frames(
    params: &ModelParams,
    geometry: &FrameGeometry,
    noise: &NoiseConfig,
) -> Result<Vec<IntensityImage>, ImageError> {
    geometry.validate()?;
    noise.validate()?;
    let column_sets: Vec<[f64; 18]> = (0..geometry.width)
        .map(|x| intensity_set(step_operator(params, geometry.momentum_of_column(x)).matrix()))
        .collect();
    let envelope_row: Vec<f64> = (0..geometry.width)
        .map(|x| {
            let dx = (x as f64 + 0.5) - geometry.width as f64 / 2.0;
            (-2.0 * dx * dx / (geometry.beam_waist_px * geometry.beam_waist_px)).exp()
        })
        .collect();
    let gaussian = if noise.gaussian_sigma > 0.0 {
        Some(Normal::new(0.0, noise.gaussian_sigma).expect("validated sigma"))
    } else {
        None
    };
    let mut frames = Vec::with_capacity(18);
    for (c, &(input, projection)) in CHANNELS.iter().enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(noise.seed);
        rng.set_stream(c as u64);
        let mut values = Vec::with_capacity(geometry.width * geometry.height);
        for y in 0..geometry.height {
            let dy = (y as f64 + 0.5) - geometry.height as f64 / 2.0;
            let row_env =
                (-2.0 * dy * dy / (geometry.beam_waist_px * geometry.beam_waist_px)).exp();
            for x in 0..geometry.width {
                let mut v = row_env * envelope_row[x] * column_sets[x][c];
                if let Some(budget) = noise.photon_budget {
                    let lam = (v * budget).max(0.0);
                    v = if lam > 0.0 {
                        Poisson::new(lam).expect("positive mean").sample(&mut rng) / budget
                    } else {
                        0.0
                    };
                }
                if let Some(normal) = &gaussian {
                    v *= 1.0 + normal.sample(&mut rng);
                }
                values.push(v.max(0.0));
            }
        }
        frames.push(IntensityImage {
            input,
            projection,
            geometry: *geometry,
            values,
        });
    }
    Ok(frames)
}

/// Compresses an 18-frame acquisition into per-column measurement records.
///
/// Each frame is integrated along `y` and block-averaged down to
/// [`INGEST_COLUMNS`] columns (original column `x` lands in block
/// `⌊x·90/width⌋`); per column the 18 channel intensities are
/// pair-normalized into a ratio record labeled with the column-center
/// momentum `q = 2π(t + ½)/90`.  The beam envelope is channel-independent
/// and cancels in the ratios.
pub fn ingest_frames(frames: &[IntensityImage]) -> Result<Vec<DatasetRecord>, ImageError> {
    if frames.len() != 18 {
        return Err(ImageError::WrongChannelSet);
    }
    let geometry = frames[0].geometry;
    geometry.validate()?;
    // Locate each standard channel exactly once.
    let mut order = [usize::MAX; 18];
    for (f, frame) in frames.iter().enumerate() {
        if frame.geometry != geometry {
            return Err(ImageError::MismatchedGeometry);
        }
        frame.check_buffer()?;
        let c = CHANNELS
            .iter()
            .position(|&(i, j)| i == frame.input && j == frame.projection)
            .ok_or(ImageError::WrongChannelSet)?;
        if order[c] != usize::MAX {
            return Err(ImageError::WrongChannelSet);
        }
        order[c] = f;
    }
    // Column sums over y, then block means over x.
    let mut blocks = vec![[0.0_f64; 18]; INGEST_COLUMNS];
    let mut block_counts = [0usize; INGEST_COLUMNS];
    for x in 0..geometry.width {
        block_counts[x * INGEST_COLUMNS / geometry.width] += 1;
    }
    for (c, &f) in order.iter().enumerate() {
        let frame = &frames[f];
        for y in 0..geometry.height {
            let row = &frame.values[y * geometry.width..(y + 1) * geometry.width];
            for (x, &v) in row.iter().enumerate() {
                blocks[x * INGEST_COLUMNS / geometry.width][c] += v;
            }
        }
    }
    for (t, block) in blocks.iter_mut().enumerate() {
        for v in block.iter_mut() {
            *v /= block_counts[t] as f64;
        }
    }
    let scale = blocks
        .iter()
        .flat_map(|b| b.iter())
        .fold(0.0_f64, |acc, &v| acc.max(v));
    let mut records = Vec::with_capacity(INGEST_COLUMNS);
    for (t, block) in blocks.iter().enumerate() {
        for pair in 0..9 {
            if block[2 * pair] + block[2 * pair + 1] <= 1e-12 * scale {
                return Err(ImageError::DarkColumn { column: t });
            }
        }
        records.push(DatasetRecord {
            k: t,
            q: 2.0 * PI * (t as f64 + 0.5) / INGEST_COLUMNS as f64,
            ratios: ratios_from_intensities(block),
        });
    }
    Ok(records)
}

/// Standard file name of a channel frame, `<input><projection>.pgm`.
pub fn frame_filename(input: InputState, projection: ProjectionState) -> String {
    let c = CHANNELS
        .iter()
        .position(|&(i, j)| i == input && j == projection)
        .expect("all label combinations are standard channels");
    format!("{}.pgm", CHANNEL_NAMES[c])
}

/// Maximum sample value of the PGM encoding.
pub const PGM_MAX: u16 = u16::MAX;

/// Encodes an acquisition as named 16-bit binary PGM files.
///
/// One common scale maps the brightest pixel of the whole set to
/// [`PGM_MAX`], preserving the inter-channel ratios the analysis depends
/// on.  `comment` lines are embedded verbatim as `#` header comments in
/// every file (carry provenance: seed, configuration digest).  Returns
/// `(file name, payload)` pairs in standard channel order.
pub fn encode_frames(
    frames: &[IntensityImage],
    comment: &str,
) -> Result<Vec<(String, Vec<u8>)>, ImageError> {
    if frames.is_empty() {
        return Err(ImageError::WrongChannelSet);
    }
    for frame in frames {
        frame.check_buffer()?;
    }
    let peak = frames
        .iter()
        .flat_map(|f| f.values.iter())
        .fold(0.0_f64, |acc, &v| acc.max(v));
    let scale = if peak > 0.0 {
        f64::from(PGM_MAX) / peak
    } else {
        1.0
    };
    let mut files = Vec::with_capacity(frames.len());
    for frame in frames {
        let mut header = String::from("P5\n");
        for line in comment.lines() {
            header.push_str("# ");
            header.push_str(line);
            header.push('\n');
        }
        let mut bytes = header.into_bytes();
        bytes.extend_from_slice(
            format!(
                "{} {}\n{}\n",
                frame.geometry.width, frame.geometry.height, PGM_MAX
            )
            .as_bytes(),
        );
        for &v in &frame.values {
            let level = (v * scale).round().clamp(0.0, f64::from(PGM_MAX)) as u16;
            bytes.extend_from_slice(&level.to_be_bytes());
        }
        files.push((frame_filename(frame.input, frame.projection), bytes));
    }
    Ok(files)
}

/// A decoded PGM payload (samples as raw counts, labels supplied by caller).
#[derive(Debug, Clone, PartialEq)]
pub struct PgmImage {
    /// Frame width in pixels.
    pub width: usize,
    /// Frame height in pixels.
    pub height: usize,
    /// Declared maximum sample value.
    pub max_value: u16,
    /// Header comment lines (leading `#` and padding stripped).
    pub comments: Vec<String>,
    /// Row-major samples as counts.
    pub samples: Vec<f64>,
}

/// Decodes a binary (`P5`) PGM payload, 8- or 16-bit.
pub fn decode_pgm(bytes: &[u8]) -> Result<PgmImage, ImageError> {
    let malformed = |reason: &str| ImageError::MalformedPgm {
        reason: reason.into(),
    };
    let mut pos = 0usize;
    let mut comments = Vec::new();
    let mut fields = Vec::with_capacity(4);
    // Header: four whitespace-separated fields with interleaved comments.
    while fields.len() < 4 {
        match bytes.get(pos) {
            None => return Err(malformed("truncated header")),
            Some(b'#') => {
                let end = bytes[pos..]
                    .iter()
                    .position(|&b| b == b'\n')
                    .map_or(bytes.len(), |e| pos + e);
                let line = std::str::from_utf8(&bytes[pos + 1..end])
                    .map_err(|_| malformed("non-UTF-8 comment"))?;
                comments.push(line.trim().to_string());
                pos = end + 1;
            }
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            Some(_) => {
                let start = pos;
                while pos < bytes.len()
                    && !bytes[pos].is_ascii_whitespace()
                    && bytes[pos] != b'#'
                {
                    pos += 1;
                }
                let token = std::str::from_utf8(&bytes[start..pos])
                    .map_err(|_| malformed("non-UTF-8 header token"))?;
                fields.push(token.to_string());
            }
        }
    }
    if fields[0] != "P5" {
        return Err(malformed("not a binary PGM (P5) payload"));
    }
    let width: usize = fields[1].parse().map_err(|_| malformed("bad width"))?;
    let height: usize = fields[2].parse().map_err(|_| malformed("bad height"))?;
    let max_value: u32 = fields[3].parse().map_err(|_| malformed("bad maxval"))?;
    if width == 0 || height == 0 {
        return Err(malformed("zero dimension"));
    }
    if max_value == 0 || max_value > u32::from(u16::MAX) {
        return Err(malformed("maxval out of range"));
    }
    // Exactly one whitespace byte separates header from raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(malformed("missing raster separator")),
    }
    let n = width * height;
    let wide = max_value > 255;
    let need = n * if wide { 2 } else { 1 };
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| malformed("truncated raster"))?;
    let samples = if wide {
        raster
            .chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])))
            .collect()
    } else {
        raster.iter().map(|&b| f64::from(b)).collect()
    };
    Ok(PgmImage {
        width,
        height,
        max_value: max_value as u16,
        comments,
        samples,
    })
}

/// Rebuilds a labeled frame from a decoded PGM payload.
///
/// Counts are kept as-is (the common encoding scale cancels in the
/// ratios); dimensions must match the declared geometry.
pub fn frame_from_pgm(
    pgm: &PgmImage,
    input: InputState,
    projection: ProjectionState,
    geometry: &FrameGeometry,
) -> Result<IntensityImage, ImageError> {
    geometry.validate()?;
    if pgm.width != geometry.width || pgm.height != geometry.height {
        return Err(ImageError::MismatchedGeometry);
    }
    let frame = IntensityImage {
        input,
        projection,
        geometry: *geometry,
        values: pgm.samples.clone(),
    };
    frame.check_buffer()?;
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarimetry::normalized_set;
    use approx::assert_abs_diff_eq;

    fn zone_geometry() -> FrameGeometry {
        FrameGeometry {
            width: 90,
            height: 12,
            bz_width_px: 90,
            beam_waist_px: 90.0,
        }
    }

    fn max_ratio_deviation(records: &[DatasetRecord], params: &ModelParams) -> f64 {
        records
            .iter()
            .map(|rec| {
                let u = step_operator(params, Quasimomentum::new(rec.q));
                let truth = normalized_set(u.matrix()).unwrap().as_array();
                rec.ratios
                    .as_array()
                    .iter()
                    .zip(truth.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0_f64, f64::max)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn rendered_pixels_factor_into_envelope_and_intensity() {
        let p = ModelParams::new(1.3, 0.6).unwrap();
        let g = zone_geometry();
        let frames = render_frames(&p, &g, &NoiseConfig::noiseless(1)).unwrap();
        let ll = &frames[0];
        assert_eq!((ll.input, ll.projection), (InputState::L, ProjectionState::L));
        for (x, y) in [(0, 0), (45, 6), (89, 11), (17, 3)] {
            let u = step_operator(&p, g.momentum_of_column(x));
            let expected = g.envelope(x, y)
                * crate::polarimetry::intensity(u.matrix(), ll.input, ll.projection, 1.0);
            assert_abs_diff_eq!(ll.value(x, y), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn one_pixel_per_column_round_trips_exactly() {
        let p = ModelParams::new(1.3, 1.4).unwrap();
        let frames = render_frames(&p, &zone_geometry(), &NoiseConfig::noiseless(1)).unwrap();
        let records = ingest_frames(&frames).unwrap();
        assert_eq!(records.len(), INGEST_COLUMNS);
        assert!(max_ratio_deviation(&records, &p) < 1e-12);
    }

    #[test]
    fn wide_frames_round_trip_within_block_averaging_bias() {
        let p = ModelParams::new(std::f64::consts::FRAC_PI_4, 0.9).unwrap();
        let g = FrameGeometry {
            width: 1080,
            height: 24,
            bz_width_px: 1080,
            beam_waist_px: 1080.0,
        };
        let frames = render_frames(&p, &g, &NoiseConfig::noiseless(1)).unwrap();
        let records = ingest_frames(&frames).unwrap();
        let dev = max_ratio_deviation(&records, &p);
        assert!(dev < 5e-4, "deviation {dev}");
        assert!(dev > 1e-8, "block averaging should not be exact at 12:1");
    }

    #[test]
    fn uneven_blocks_still_yield_ninety_labeled_columns() {
        let p = ModelParams::new(1.3, 0.3).unwrap();
        let g = FrameGeometry {
            width: 135,
            height: 6,
            bz_width_px: 135,
            beam_waist_px: 200.0,
        };
        let frames = render_frames(&p, &g, &NoiseConfig::noiseless(1)).unwrap();
        let records = ingest_frames(&frames).unwrap();
        assert_eq!(records.len(), INGEST_COLUMNS);
        for (t, rec) in records.iter().enumerate() {
            assert_eq!(rec.k, t);
            assert_abs_diff_eq!(
                rec.q,
                2.0 * PI * (t as f64 + 0.5) / 90.0,
                epsilon = 1e-12
            );
        }
        assert!(max_ratio_deviation(&records, &p) < 0.05);
    }

    #[test]
    fn rendering_is_deterministic_and_channel_decorrelated() {
        let p = ModelParams::new(1.3, 0.6).unwrap();
        let g = zone_geometry();
        let noise = NoiseConfig {
            gaussian_sigma: 0.02,
            photon_budget: Some(1e4),
            seed: 9,
        };
        let a = render_frames(&p, &g, &noise).unwrap();
        let b = render_frames(&p, &g, &noise).unwrap();
        assert_eq!(a, b);
        let reseeded = render_frames(&p, &g, &NoiseConfig { seed: 10, ..noise }).unwrap();
        assert_ne!(a, reseeded);
    }

    #[test]
    fn geometry_preconditions_are_enforced() {
        let bad = [
            FrameGeometry {
                bz_width_px: 60,
                width: 60,
                ..zone_geometry()
            },
            FrameGeometry {
                width: 89,
                ..zone_geometry()
            },
            FrameGeometry {
                height: 0,
                ..zone_geometry()
            },
            FrameGeometry {
                beam_waist_px: 45.0,
                ..zone_geometry()
            },
        ];
        for g in bad {
            assert!(matches!(g.validate(), Err(ImageError::Geometry { .. })));
        }
    }

    #[test]
    fn ingest_rejects_broken_frame_sets() {
        let p = ModelParams::new(1.3, 0.6).unwrap();
        let g = zone_geometry();
        let frames = render_frames(&p, &g, &NoiseConfig::noiseless(1)).unwrap();
        assert!(matches!(
            ingest_frames(&frames[..17]),
            Err(ImageError::WrongChannelSet)
        ));
        let mut duplicated = frames.clone();
        duplicated[1] = duplicated[0].clone();
        assert!(matches!(
            ingest_frames(&duplicated),
            Err(ImageError::WrongChannelSet)
        ));
        let mut mismatched = frames.clone();
        mismatched[2].geometry.height = 13;
        assert!(matches!(
            ingest_frames(&mismatched),
            Err(ImageError::MismatchedGeometry)
                | Err(ImageError::WrongBufferLength { .. })
        ));
        let mut dark = frames;
        for frame in &mut dark {
            frame.values.iter_mut().for_each(|v| *v = 0.0);
        }
        assert!(matches!(
            ingest_frames(&dark),
            Err(ImageError::DarkColumn { column: 0 })
        ));
    }

    #[test]
    fn pgm_set_round_trips_through_bytes() {
        let p = ModelParams::new(1.3, 0.6).unwrap();
        let g = zone_geometry();
        let frames = render_frames(&p, &g, &NoiseConfig::noiseless(7)).unwrap();
        let files = encode_frames(&frames, "seed=7\ndigest=abc123").unwrap();
        assert_eq!(files.len(), 18);
        assert_eq!(files[0].0, "LL.pgm");
        assert_eq!(files[17].0, "DA.pgm");
        let mut decoded = Vec::new();
        for ((name, bytes), frame) in files.iter().zip(frames.iter()) {
            assert_eq!(*name, frame_filename(frame.input, frame.projection));
            let pgm = decode_pgm(bytes).unwrap();
            assert_eq!((pgm.width, pgm.height), (g.width, g.height));
            assert_eq!(pgm.max_value, PGM_MAX);
            assert_eq!(pgm.comments, vec!["seed=7", "digest=abc123"]);
            decoded.push(frame_from_pgm(&pgm, frame.input, frame.projection, &g).unwrap());
        }
        let original = ingest_frames(&frames).unwrap();
        let quantized = ingest_frames(&decoded).unwrap();
        let worst = original
            .iter()
            .zip(quantized.iter())
            .map(|(a, b)| {
                a.ratios
                    .as_array()
                    .iter()
                    .zip(b.ratios.as_array().iter())
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0_f64, f64::max)
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "quantization error {worst}");
    }

    #[test]
    fn pgm_decoder_rejects_malformed_payloads() {
        assert!(matches!(
            decode_pgm(b"P2\n2 2\n255\n0 0 0 0"),
            Err(ImageError::MalformedPgm { .. })
        ));
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n65535\n\x00\x01"),
            Err(ImageError::MalformedPgm { .. })
        ));
        assert!(matches!(
            decode_pgm(b"P5\n0 2\n255\n"),
            Err(ImageError::MalformedPgm { .. })
        ));
        // 8-bit payloads decode too.
        let pgm = decode_pgm(b"P5\n# note\n2 1\n255\n\x10\xff").unwrap();
        assert_eq!(pgm.samples, vec![16.0, 255.0]);
        assert_eq!(pgm.comments, vec!["note"]);
    }

    #[test]
    fn envelope_is_centered_and_normalized_at_the_peak() {
        let g = FrameGeometry {
            width: 90,
            height: 90,
            bz_width_px: 90,
            beam_waist_px: 120.0,
        };
        assert!(g.validate().is_ok());
        // Peak at the frame center, 4 central pixels tie by symmetry.
        assert_abs_diff_eq!(g.envelope(44, 44), g.envelope(45, 45), epsilon = 1e-15);
        assert!(g.envelope(44, 44) > g.envelope(0, 0));
        let expected_corner =
            (-2.0 * (44.5_f64.powi(2) * 2.0) / (120.0_f64 * 120.0)).exp();
        assert_abs_diff_eq!(g.envelope(0, 0), expected_corner, epsilon = 1e-15);
    }
}
