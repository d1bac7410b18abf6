//! Image, label map and prediction file formats.

use std::io::{Read, Write};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};
use msmsf_core::infer::EdgeProbabilityMap;
use msmsf_core::{Error, Shape, Tensor};

use crate::error::{CliError, Result};

/// Extension of the raw little-endian float sidecar:
/// `u32 width`, `u32 height`, then `width·height` `f32` values row-major.
pub const SIDECAR_EXT: &str = "pmap";

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|source| CliError::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads PNG (8/16-bit) or PGM/PPM as a (1, 3, H, W) tensor in `[0, 1]`
/// (grayscale is replicated), optionally subtracting per-channel means.
pub fn load_image(path: &Path, mean: Option<[f32; 3]>) -> Result<Tensor> {
    let rgb = open(path)?.into_rgb32f();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut t = Tensor::zeros(Shape::new(1, 3, h, w));
    let m = mean.unwrap_or([0.0; 3]);
    for c in 0..3 {
        let plane = t.plane_mut(0, c);
        for (i, px) in rgb.pixels().enumerate() {
            plane[i] = px.0[c] - m[c];
        }
    }
    Ok(t)
}

/// Binary annotation: any nonzero pixel is an edge. Returns (h, w, mask).
pub fn load_binary(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let g = open(path)?.into_luma16();
    let (w, h) = (g.width() as usize, g.height() as usize);
    Ok((h, w, g.pixels().map(|p| p.0[0] > 0).collect()))
}

pub fn save_binary(path: &Path, height: usize, width: usize, mask: &[bool]) -> Result<()> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_vec(
        width as u32,
        height as u32,
        mask.iter().map(|&b| if b { 255 } else { 0 }).collect(),
    )
    .expect("buffer matches extents");
    buf.save(path).map_err(|source| CliError::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes an RGB tensor in `[0, 1]` of shape (1, 3, H, W) as an 8-bit PNG.
pub fn save_rgb(path: &Path, image: &Tensor) -> Result<()> {
    let s = image.shape();
    let mut bytes = Vec::with_capacity(s.h * s.w * 3);
    for i in 0..s.h * s.w {
        for c in 0..3 {
            bytes.push((image.plane(0, c)[i].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    let buf: ImageBuffer<image::Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_vec(s.w as u32, s.h as u32, bytes).expect("buffer matches extents");
    buf.save(path).map_err(|source| CliError::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Grayscale PNG with value `round(p · maxval)`; `bits` is 8 or 16.
pub fn save_probability_png(path: &Path, map: &EdgeProbabilityMap, bits: u8) -> Result<()> {
    let (w, h) = (map.width() as u32, map.height() as u32);
    let err = |source| CliError::Image {
        path: path.to_path_buf(),
        source,
    };
    match bits {
        8 => {
            let v = map.quantize(255).into_iter().map(|x| x as u8).collect();
            let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_vec(w, h, v).expect("extents");
            buf.save(path).map_err(err)
        }
        16 => {
            let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_vec(w, h, map.quantize(65535)).expect("extents");
            buf.save(path).map_err(err)
        }
        other => Err(CliError::usage(format!("PNG depth must be 8 or 16 bits, got {other}"))),
    }
}

pub fn write_sidecar(path: &Path, map: &EdgeProbabilityMap) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + 4 * map.values().len());
    bytes.write_all(&(map.width() as u32).to_le_bytes()).expect("vec write");
    bytes.write_all(&(map.height() as u32).to_le_bytes()).expect("vec write");
    for v in map.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e).into())
}

pub fn read_sidecar(path: &Path) -> Result<EdgeProbabilityMap> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let parse = || -> Option<EdgeProbabilityMap> {
        let w = u32::from_le_bytes(bytes.get(0..4)?.try_into().ok()?) as usize;
        let h = u32::from_le_bytes(bytes.get(4..8)?.try_into().ok()?) as usize;
        let body = bytes.get(8..)?;
        if body.len() != 4 * w * h {
            return None;
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect();
        EdgeProbabilityMap::new(h, w, values).ok()
    };
    parse().ok_or_else(|| {
        Error::Format(format!("{} is not a valid probability sidecar", path.display())).into()
    })
}

/// A probability map from a sidecar or a grayscale PNG (scaled by its
/// maximum code value).
pub fn load_prediction(path: &Path) -> Result<EdgeProbabilityMap> {
    if path.extension().is_some_and(|e| e == SIDECAR_EXT) {
        return read_sidecar(path);
    }
    // 8-bit codes widen to v·257, so both depths divide by 65535
    let g = open(path)?.into_luma16();
    let values = g.pixels().map(|p| (p.0[0] as f64 / 65535.0) as f32).collect();
    Ok(EdgeProbabilityMap::new(g.height() as usize, g.width() as usize, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pmap");
        let map = EdgeProbabilityMap::new(2, 3, vec![0.0, 0.1, 0.25, 1.0 / 3.0, 0.9, 1.0]).unwrap();
        write_sidecar(&p, &map).unwrap();
        assert_eq!(read_sidecar(&p).unwrap(), map);
        std::fs::write(&p, [1u8, 2, 3]).unwrap();
        assert!(read_sidecar(&p).is_err());
    }

    #[test]
    fn png_predictions_quantize() {
        let dir = tempfile::tempdir().unwrap();
        let map = EdgeProbabilityMap::new(1, 3, vec![0.0, 0.5, 1.0]).unwrap();
        for bits in [8, 16] {
            let p = dir.path().join(format!("m{bits}.png"));
            save_probability_png(&p, &map, bits).unwrap();
            let back = load_prediction(&p).unwrap();
            let tol = if bits == 8 { 1.0 / 255.0 } else { 1.0 / 65535.0 };
            for (a, b) in back.values().iter().zip(map.values()) {
                assert!((a - b).abs() <= tol);
            }
        }
        assert!(save_probability_png(&dir.path().join("x.png"), &map, 12).is_err());
    }

    #[test]
    fn images_and_masks_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mask = vec![true, false, false, true, true, false];
        let p = dir.path().join("gt.png");
        save_binary(&p, 2, 3, &mask).unwrap();
        assert_eq!(load_binary(&p).unwrap(), (2, 3, mask));

        let img = Tensor::from_vec(Shape::new(1, 3, 1, 2), vec![0.0, 1.0, 0.2, 0.4, 0.6, 0.8]).unwrap();
        let p = dir.path().join("img.png");
        save_rgb(&p, &img).unwrap();
        let back = load_image(&p, None).unwrap();
        for (a, b) in back.data().iter().zip(img.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-6);
        }
        let centered = load_image(&p, Some([0.5, 0.5, 0.5])).unwrap();
        assert!((centered.data()[1] - 0.5).abs() < 1e-6);
    }
}
