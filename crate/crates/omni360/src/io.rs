//! File formats: PFM float depth rasters, PNG-backed RGB/label rasters,
//! 24-bit entity-id color packing, semantic palettes, and sample manifests.
//!
//! Everything is little-endian and byte-deterministic: identical rasters
//! produce identical files on any platform.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::raster::Raster;
use crate::scene::{CameraPose, ENTITY_ID_LIMIT, SKY_DEPTH};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// PFM depth rasters

/// Writes a depth raster as a grayscale little-endian PFM (scale -1.0).
/// The sky sentinel +inf is stored as 0.0; finite values must be positive.
/// Scanlines are stored bottom-to-top, the standard PFM row order.
pub fn write_depth<W: Write>(raster: &Raster<f64>, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    write!(w, "Pf\n{} {}\n-1.0\n", raster.width(), raster.height())?;
    for row in (0..raster.height()).rev() {
        for col in 0..raster.width() {
            let v = *raster.get(col, row);
            let stored: f32 = if v == SKY_DEPTH {
                0.0
            } else if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidDepth(format!(
                    "depth at ({col}, {row}) must be positive or the sky sentinel, got {v}"
                )));
            } else {
                v as f32
            };
            w.write_all(&stored.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_depth_file(raster: &Raster<f64>, path: &Path) -> Result<()> {
    write_depth(raster, std::fs::File::create(path)?)
}

/// Reads a grayscale PFM written by [`write_depth`]; 0.0 restores the sky
/// sentinel.
pub fn read_depth<R: Read>(reader: R) -> Result<Raster<f64>> {
    let mut r = BufReader::new(reader);
    let mut header = String::new();
    r.read_line(&mut header)?;
    if header.trim_end() != "Pf" {
        return Err(Error::Format(format!(
            "expected grayscale PFM header 'Pf', got {:?}",
            header.trim_end()
        )));
    }
    let mut dims = String::new();
    r.read_line(&mut dims)?;
    let mut parts = dims.split_whitespace();
    let width: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Format("bad PFM width".into()))?;
    let height: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Format("bad PFM height".into()))?;
    if width == 0 || height == 0 || width.checked_mul(height).is_none_or(|n| n > (1 << 30)) {
        return Err(Error::Format(format!(
            "unreasonable PFM dimensions {width} x {height}"
        )));
    }
    let mut scale_line = String::new();
    r.read_line(&mut scale_line)?;
    let scale: f64 = scale_line
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad PFM scale {:?}", scale_line.trim())))?;
    if scale >= 0.0 {
        return Err(Error::Format(
            "big-endian PFM (non-negative scale) is not supported".into(),
        ));
    }
    let mut bytes = vec![0u8; width * height * 4];
    r.read_exact(&mut bytes)?;
    let mut raster = Raster::filled(width, height, 0.0f64);
    for (i, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        let row = height - 1 - i / width;
        let col = i % width;
        let depth = if v == 0.0 {
            SKY_DEPTH
        } else if v.is_nan() || v < 0.0 {
            return Err(Error::Format(format!(
                "PFM sample at ({col}, {row}) is not a valid depth: {v}"
            )));
        } else {
            v as f64
        };
        raster.set(col, row, depth);
    }
    Ok(raster)
}

pub fn read_depth_file(path: &Path) -> Result<Raster<f64>> {
    read_depth(std::fs::File::open(path)?)
}

// ---------------------------------------------------------------------------
// Entity id packing

/// Packs a 24-bit entity id into RGB: r is the low byte, b the high byte.
pub fn encode_entity(id: u32) -> Result<[u8; 3]> {
    if id >= ENTITY_ID_LIMIT {
        return Err(Error::Format(format!("entity id {id} out of 24-bit range")));
    }
    Ok([(id & 0xff) as u8, ((id >> 8) & 0xff) as u8, (id >> 16) as u8])
}

/// Inverse of [`encode_entity`]; total over all RGB triples.
pub fn decode_entity(rgb: [u8; 3]) -> u32 {
    rgb[0] as u32 | (rgb[1] as u32) << 8 | (rgb[2] as u32) << 16
}

// ---------------------------------------------------------------------------
// PNG-backed rasters

pub fn write_rgb_png(raster: &Raster<[u8; 3]>, path: &Path) -> Result<()> {
    let file = BufWriter::new(std::fs::File::create(path)?);
    let mut encoder = png::Encoder::new(file, raster.width() as u32, raster.height() as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header()?;
    let mut bytes = Vec::with_capacity(raster.data().len() * 3);
    for px in raster.data() {
        bytes.extend_from_slice(px);
    }
    writer.write_image_data(&bytes)?;
    Ok(())
}

pub fn read_rgb_png(path: &Path) -> Result<Raster<[u8; 3]>> {
    let decoder = png::Decoder::new(BufReader::new(std::fs::File::open(path)?));
    let mut reader = decoder.read_info()?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf)?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Format("expected an 8-bit RGB PNG".into()));
    }
    let data = buf[..info.buffer_size()]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Ok(Raster::from_vec(
        info.width as usize,
        info.height as usize,
        data,
    ))
}

/// Semantic ids as an 8-bit grayscale PNG.
pub fn write_semantic_png(raster: &Raster<u8>, path: &Path) -> Result<()> {
    let file = BufWriter::new(std::fs::File::create(path)?);
    let mut encoder = png::Encoder::new(file, raster.width() as u32, raster.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(raster.data())?;
    Ok(())
}

pub fn read_semantic_png(path: &Path) -> Result<Raster<u8>> {
    let decoder = png::Decoder::new(BufReader::new(std::fs::File::open(path)?));
    let mut reader = decoder.read_info()?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf)?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Format("expected an 8-bit grayscale PNG".into()));
    }
    Ok(Raster::from_vec(
        info.width as usize,
        info.height as usize,
        buf[..info.buffer_size()].to_vec(),
    ))
}

/// Entity ids as an RGB PNG via the 24-bit packing.
pub fn write_entity_png(raster: &Raster<u32>, path: &Path) -> Result<()> {
    let mut rgb = Raster::filled(raster.width(), raster.height(), [0u8; 3]);
    for (x, y, &id) in raster.pixels() {
        rgb.set(x, y, encode_entity(id)?);
    }
    write_rgb_png(&rgb, path)
}

pub fn read_entity_png(path: &Path) -> Result<Raster<u32>> {
    let rgb = read_rgb_png(path)?;
    let data = rgb.data().iter().map(|&px| decode_entity(px)).collect();
    Ok(Raster::from_vec(rgb.width(), rgb.height(), data))
}

// ---------------------------------------------------------------------------
// Semantic palettes

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaletteEntry {
    pub id: u8,
    pub name: String,
    pub rgb: [u8; 3],
}

/// Validated id -> (name, color) table with unique ids and unique colors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SemanticPalette {
    entries: Vec<PaletteEntry>,
}

impl SemanticPalette {
    pub fn entries(&self) -> &[PaletteEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u8) -> Option<&PaletteEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

/// Parses `id,name,r,g,b` CSV lines into a palette. Blank lines and lines
/// starting with `#` are skipped; duplicate ids or colors are rejected with
/// both offending line numbers.
pub fn load_palette(text: &str) -> Result<SemanticPalette> {
    let mut entries: Vec<PaletteEntry> = Vec::new();
    let mut id_lines: std::collections::HashMap<u8, usize> = Default::default();
    let mut color_lines: std::collections::HashMap<[u8; 3], usize> = Default::default();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::Format(format!(
                "palette line {lineno}: expected `id,name,r,g,b`, got {} fields",
                fields.len()
            )));
        }
        let id: u8 = fields[0].parse().map_err(|_| {
            Error::Format(format!("palette line {lineno}: bad id {:?}", fields[0]))
        })?;
        let mut rgb = [0u8; 3];
        for (slot, field) in rgb.iter_mut().zip(&fields[2..5]) {
            *slot = field.parse().map_err(|_| {
                Error::Format(format!("palette line {lineno}: bad channel {field:?}"))
            })?;
        }
        if let Some(prev) = id_lines.insert(id, lineno) {
            return Err(Error::Format(format!(
                "palette lines {prev} and {lineno} both define id {id}"
            )));
        }
        if let Some(prev) = color_lines.insert(rgb, lineno) {
            return Err(Error::Format(format!(
                "palette lines {prev} and {lineno} both use color {rgb:?}"
            )));
        }
        entries.push(PaletteEntry {
            id,
            name: fields[1].to_string(),
            rgb,
        });
    }
    Ok(SemanticPalette { entries })
}

pub fn load_palette_file(path: &Path) -> Result<SemanticPalette> {
    load_palette(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Sample manifests

/// Locates the artifacts of one rendered frame; paths are relative to the
/// manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub frame_id: u64,
    pub camera: CameraPose,
    pub rgb: String,
    pub depth: String,
    pub semantic: String,
    pub entity: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub keypoints: Option<String>,
}

impl SampleManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, serde_json::to_string_pretty(self)?)?)
    }

    /// Loads a manifest and verifies every referenced file exists next to it.
    pub fn load(path: &Path) -> Result<Self> {
        let manifest: SampleManifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut paths = vec![
            manifest.rgb.clone(),
            manifest.depth.clone(),
            manifest.semantic.clone(),
            manifest.entity.clone(),
        ];
        if let Some(kp) = &manifest.keypoints {
            paths.push(kp.clone());
        }
        for rel in paths {
            if !base.join(&rel).exists() {
                return Err(Error::Format(format!(
                    "manifest references missing file {rel:?}"
                )));
            }
        }
        if !manifest.camera.position.iter().all(|v| v.is_finite()) {
            return Err(Error::Format("manifest camera position is not finite".into()));
        }
        Ok(manifest)
    }
}
