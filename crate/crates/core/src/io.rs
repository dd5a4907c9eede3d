//! Image and kernel files.
//!
//! Images are read as raw sample values (0..=255 or 0..=65535) without
//! rescaling. Kernels use a plain text layout: a header line `l s` followed
//! by `l` rows of `s` decimals.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::image::{ImageField, Kernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedImage {
    pub field: ImageField,
    pub depth: BitDepth,
}

/// Reads a grayscale or RGB PNG/PGM/PPM; alpha channels are dropped.
pub fn read_image(path: impl AsRef<Path>) -> Result<LoadedImage> {
    let img = image::open(path.as_ref())?;
    let sixteen = matches!(
        img,
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) | DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_)
    );
    let gray = !img.color().has_color();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let depth = if sixteen { BitDepth::Sixteen } else { BitDepth::Eight };
    let field = match (gray, sixteen) {
        (true, false) => {
            let buf = img.to_luma8();
            ImageField::gray(Array2::from_shape_fn((h, w), |(i, j)| buf.get_pixel(j as u32, i as u32)[0] as f64))
        }
        (true, true) => {
            let buf = img.to_luma16();
            ImageField::gray(Array2::from_shape_fn((h, w), |(i, j)| buf.get_pixel(j as u32, i as u32)[0] as f64))
        }
        (false, false) => {
            let buf = img.to_rgb8();
            let planes = (0..3)
                .map(|c| Array2::from_shape_fn((h, w), |(i, j)| buf.get_pixel(j as u32, i as u32)[c] as f64))
                .collect();
            ImageField::from_planes(planes)?
        }
        (false, true) => {
            let buf = img.to_rgb16();
            let planes = (0..3)
                .map(|c| Array2::from_shape_fn((h, w), |(i, j)| buf.get_pixel(j as u32, i as u32)[c] as f64))
                .collect();
            ImageField::from_planes(planes)?
        }
    };
    Ok(LoadedImage { field, depth })
}

/// Writes rounded, clamped samples; promotes to 16 bits when 8 bits cannot hold the values.
///
/// Returns the depth actually written. The format follows the file extension.
pub fn write_image(path: impl AsRef<Path>, img: &ImageField, depth: BitDepth) -> Result<BitDepth> {
    let depth = if depth == BitDepth::Eight && img.max() > 255.5 { BitDepth::Sixteen } else { depth };
    let (h, w) = img.dim();
    let limit = depth.max_value();
    let sample = |c: usize, x: u32, y: u32| img.plane(c)[[y as usize, x as usize]].round().clamp(0.0, limit);
    let (w32, h32) = (w as u32, h as u32);
    let dynamic = match (img.channels(), depth) {
        (1, BitDepth::Eight) => {
            DynamicImage::ImageLuma8(ImageBuffer::from_fn(w32, h32, |x, y| Luma([sample(0, x, y) as u8])))
        }
        (1, BitDepth::Sixteen) => {
            DynamicImage::ImageLuma16(ImageBuffer::from_fn(w32, h32, |x, y| Luma([sample(0, x, y) as u16])))
        }
        (_, BitDepth::Eight) => DynamicImage::ImageRgb8(ImageBuffer::from_fn(w32, h32, |x, y| {
            Rgb([sample(0, x, y) as u8, sample(1, x, y) as u8, sample(2, x, y) as u8])
        })),
        (_, BitDepth::Sixteen) => DynamicImage::ImageRgb16(ImageBuffer::from_fn(w32, h32, |x, y| {
            Rgb([sample(0, x, y) as u16, sample(1, x, y) as u16, sample(2, x, y) as u16])
        })),
    };
    dynamic.save(path.as_ref())?;
    Ok(depth)
}

pub fn format_kernel(k: &Kernel) -> String {
    let (l, s) = k.dim();
    let mut out = format!("{l} {s}\n");
    for row in k.data().rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

/// Parses the text layout; entries are clipped and renormalized to the simplex.
pub fn parse_kernel(text: &str) -> Result<Kernel> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("empty kernel file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad kernel header '{header}'"))))
        .collect::<Result<_>>()?;
    let [l, s] = dims[..] else {
        return Err(Error::Parse(format!("kernel header needs two sizes, got '{header}'")));
    };
    let mut values = Vec::with_capacity(l * s);
    for row in 0..l {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("kernel file ends before row {}", row + 1)))?;
        let parsed: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad kernel entry '{t}'"))))
            .collect::<Result<_>>()?;
        if parsed.len() != s {
            return Err(Error::Parse(format!("kernel row {} has {} entries, expected {s}", row + 1, parsed.len())));
        }
        values.extend(parsed);
    }
    if lines.next().is_some() {
        return Err(Error::Parse("trailing data after kernel rows".into()));
    }
    if values.iter().any(|v| *v < 0.0) {
        return Err(Error::Parse("kernel entries must be non-negative".into()));
    }
    let data = Array2::from_shape_vec((l, s), values).map_err(|e| Error::Parse(e.to_string()))?;
    Kernel::normalized(data)
}

pub fn read_kernel(path: impl AsRef<Path>) -> Result<Kernel> {
    parse_kernel(&fs::read_to_string(path)?)
}

pub fn write_kernel(path: impl AsRef<Path>, k: &Kernel) -> Result<()> {
    fs::write(path, format_kernel(k))?;
    Ok(())
}

/// Grayscale rendering of the kernel with its maximum mapped to 255.
pub fn write_kernel_image(path: impl AsRef<Path>, k: &Kernel) -> Result<()> {
    let max = k.data().iter().cloned().fold(0.0, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    write_image(path, &ImageField::gray(k.data().mapv(|v| v * scale)), BitDepth::Eight)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_text_roundtrip() {
        let k = Kernel::normalized(Array2::from_shape_fn((3, 5), |(i, j)| (i * 5 + j + 1) as f64)).unwrap();
        let back = parse_kernel(&format_kernel(&k)).unwrap();
        assert_eq!(back.dim(), (3, 5));
        for (a, b) in back.data().iter().zip(k.data().iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn kernel_text_errors() {
        assert!(parse_kernel("").is_err());
        assert!(parse_kernel("2 2\n1 1\n").is_err());
        assert!(parse_kernel("1 2\n1 1 1\n").is_err());
        assert!(parse_kernel("1 2\n1 -1\n").is_err());
        assert!(parse_kernel("1 1\n0\n").is_err());
        assert!(parse_kernel("1 1\n1\n2\n").is_err());
        let k = parse_kernel("# comment\n1 2\n3 1\n").unwrap();
        assert_eq!(k.data()[[0, 0]], 0.75);
    }

    #[test]
    fn image_roundtrip_both_depths() {
        let dir = tempfile::tempdir().unwrap();
        let img = ImageField::gray(Array2::from_shape_fn((4, 6), |(i, j)| (i * 40 + j * 7) as f64));
        for name in ["a.pgm", "a.png"] {
            let p = dir.path().join(name);
            assert_eq!(write_image(&p, &img, BitDepth::Eight).unwrap(), BitDepth::Eight);
            let back = read_image(&p).unwrap();
            assert_eq!(back.depth, BitDepth::Eight);
            assert_eq!(back.field, img);
        }
        let big = img.map(|v| v * 100.0);
        let p = dir.path().join("b.png");
        assert_eq!(write_image(&p, &big, BitDepth::Eight).unwrap(), BitDepth::Sixteen);
        let back = read_image(&p).unwrap();
        assert_eq!(back.depth, BitDepth::Sixteen);
        assert_eq!(back.field, big);
    }

    #[test]
    fn rgb_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let planes = (0..3).map(|c| Array2::from_shape_fn((3, 3), |(i, j)| (c * 50 + i * 3 + j) as f64)).collect();
        let img = ImageField::from_planes(planes).unwrap();
        let p = dir.path().join("c.png");
        write_image(&p, &img, BitDepth::Eight).unwrap();
        assert_eq!(read_image(&p).unwrap().field, img);
    }
}
