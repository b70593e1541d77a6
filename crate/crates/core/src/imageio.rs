//! PNG and PFM readers and writers for the on-disk dataset.
//!
//! * RGB and grayscale: 8-bit PNG, values mapped to `[0, 1]` by `1/255`.
//! * Masks: 8-bit PNG, `255` marks the positive class, binarized at 128.
//! * Depth: 16-bit PNG in millimetres with `0` = invalid, or PFM in metres
//!   with `0` = invalid.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use image::{GrayImage, ImageBuffer, Luma, Rgb, RgbImage};

use crate::dhg::DepthMap;
use crate::{BinaryMask, Error, Plane, Result};

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    Ok(())
}

fn open_image(path: &Path) -> Result<image::DynamicImage> {
    if !path.exists() {
        return Err(Error::data(path, "file does not exist"));
    }
    image::open(path).map_err(|e| Error::data(path, e.to_string()))
}

pub fn read_rgb(path: &Path) -> Result<[Plane; 3]> {
    let img = open_image(path)?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let channel = |c: usize| Plane::from_fn(w, h, |x, y| img.get_pixel(x as u32, y as u32)[c] as f64 / 255.0);
    Ok([channel(0), channel(1), channel(2)])
}

pub fn write_rgb(path: &Path, rgb: &[Plane; 3]) -> Result<()> {
    let (w, h) = rgb[0].dims();
    let img = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        Rgb([to_u8(rgb[0].get(x, y)), to_u8(rgb[1].get(x, y)), to_u8(rgb[2].get(x, y))])
    });
    ensure_parent(path)?;
    img.save(path).map_err(|e| Error::data(path, e.to_string()))
}

pub fn read_gray(path: &Path) -> Result<Plane> {
    let img = open_image(path)?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(Plane::from_fn(w, h, |x, y| img.get_pixel(x as u32, y as u32)[0] as f64 / 255.0))
}

/// Writes values in `[0, 1]` (clamped) as an 8-bit grayscale PNG.
pub fn write_gray(path: &Path, plane: &Plane) -> Result<()> {
    let (w, h) = plane.dims();
    let img = GrayImage::from_fn(w as u32, h as u32, |x, y| Luma([to_u8(plane.get(x as usize, y as usize))]));
    ensure_parent(path)?;
    img.save(path).map_err(|e| Error::data(path, e.to_string()))
}

pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let img = open_image(path)?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(BinaryMask::from_fn(w, h, |x, y| img.get_pixel(x as u32, y as u32)[0] >= 128))
}

pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let (w, h) = mask.dims();
    let img = GrayImage::from_fn(w as u32, h as u32, |x, y| {
        Luma([if mask.get(x as usize, y as usize) { 255 } else { 0 }])
    });
    ensure_parent(path)?;
    img.save(path).map_err(|e| Error::data(path, e.to_string()))
}

/// 16-bit millimetre depth, `0` = invalid.
pub fn read_depth_png(path: &Path) -> Result<DepthMap> {
    let img = open_image(path)?;
    let img = match img {
        image::DynamicImage::ImageLuma16(buf) => buf,
        other => {
            return Err(Error::data(
                path,
                format!("expected a 16-bit grayscale PNG, got {:?}", other.color()),
            ))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(DepthMap::from_fn(w, h, |x, y| {
        let mm = img.get_pixel(x as u32, y as u32)[0];
        (mm > 0).then(|| mm as f64 / 1000.0)
    }))
}

/// Rounds to the nearest millimetre; depths beyond 65.535 m saturate.
pub fn write_depth_png(path: &Path, depth: &DepthMap) -> Result<()> {
    let (w, h) = depth.dims();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let mm = depth
            .get(x as usize, y as usize)
            .map_or(0, |z| (z * 1000.0).round().clamp(1.0, 65535.0) as u16);
        Luma([mm])
    });
    ensure_parent(path)?;
    img.save(path).map_err(|e| Error::data(path, e.to_string()))
}

/// Single-channel little-endian portable float map, rows stored bottom-up.
pub fn write_pfm(path: &Path, depth: &DepthMap) -> Result<()> {
    let (w, h) = depth.dims();
    let mut bytes = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    for y in (0..h).rev() {
        for x in 0..w {
            let v = depth.get(x, y).unwrap_or(0.0) as f32;
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    ensure_parent(path)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<DepthMap> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = Vec::new();
    while header.len() < 4 {
        let mut line = String::new();
        if reader.read_line(&mut line).map_err(|e| Error::io(path, e))? == 0 {
            return Err(Error::data(path, "truncated PFM header"));
        }
        header.extend(line.split_whitespace().map(str::to_owned));
    }
    if header[0] != "Pf" {
        return Err(Error::data(path, format!("unsupported PFM kind {:?}", header[0])));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::data(path, format!("bad PFM size {s:?}")));
    let (w, h) = (parse(&header[1])?, parse(&header[2])?);
    let scale: f64 = header
        .get(3)
        .ok_or_else(|| Error::data(path, "missing PFM scale"))?
        .parse()
        .map_err(|_| Error::data(path, "bad PFM scale"))?;
    let mut raw = vec![0u8; w * h * 4];
    reader.read_exact(&mut raw).map_err(|e| Error::io(path, e))?;
    let value = |i: usize| {
        let b = [raw[4 * i], raw[4 * i + 1], raw[4 * i + 2], raw[4 * i + 3]];
        if scale < 0.0 {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        }
    };
    Ok(DepthMap::from_fn(w, h, |x, y| {
        let v = value((h - 1 - y) * w + x) as f64;
        (v > 0.0 && v.is_finite()).then_some(v)
    }))
}
