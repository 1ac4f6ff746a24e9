//! Binary foreground masks from RGB images via LAB thresholds.
//!
//! Images are converted sRGB (IEC 61966-2-1, D65) -> CIELAB and encoded
//! to 8 bits the way OpenCV does: `L* * 255/100`, `a* + 128`, `b* + 128`.
//! A pixel is foreground when its encoded b-channel is at least `b_min`
//! and its encoded a-channel is strictly below `a_max`.

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    /// `width * height * 3` bytes, RGB interleaved.
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), (width * height * 3) as usize);
        Image {
            width,
            height,
            pixels,
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Row-major binary mask; `true` marks foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    pub fn foreground_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// sRGB -> CIELAB under D65, encoded to 8 bits with a/b offset by 128.
pub fn rgb_to_lab8(pixel: [u8; 3]) -> [u8; 3] {
    let r = srgb_to_linear(pixel[0]);
    let g = srgb_to_linear(pixel[1]);
    let b = srgb_to_linear(pixel[2]);

    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

    let fx = lab_f(x / 0.95047);
    let fy = lab_f(y / 1.0);
    let fz = lab_f(z / 1.08883);

    let l = 116.0 * fy - 16.0;
    let a = 500.0 * (fx - fy);
    let bb = 200.0 * (fy - fz);

    [
        (l * 255.0 / 100.0).round().clamp(0.0, 255.0) as u8,
        (a + 128.0).round().clamp(0.0, 255.0) as u8,
        (bb + 128.0).round().clamp(0.0, 255.0) as u8,
    ]
}

/// Default encoded b-channel threshold (keep pixels with b >= 80).
pub const DEFAULT_B_MIN: u8 = 80;
/// Default encoded a-channel threshold (keep pixels with a < 140).
pub const DEFAULT_A_MAX: u8 = 140;

/// Foreground mask: encoded `b >= b_min` and encoded `a < a_max`.
pub fn make_mask(image: &Image, b_min: u8, a_max: u8) -> BinaryMask {
    let bits = image
        .pixels
        .chunks_exact(3)
        .map(|px| {
            let lab = rgb_to_lab8([px[0], px[1], px[2]]);
            lab[2] >= b_min && lab[1] < a_max
        })
        .collect();
    BinaryMask {
        width: image.width,
        height: image.height,
        bits,
    }
}

/// Load an RGB image (PNG or PPM/P6), converting other layouts to RGB8.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let img = image::open(path)
        .map_err(|e| Error::UnsupportedFormat(format!("{}: {e}", path.display())))?
        .into_rgb8();
    Ok(Image {
        width: img.width(),
        height: img.height(),
        pixels: img.into_raw(),
    })
}

/// Write a mask as an 8-bit grayscale PNG (foreground 255, background 0).
pub fn write_mask_png(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf: Vec<u8> = mask.bits.iter().map(|&b| if b { 255u8 } else { 0 }).collect();
    let img = image::GrayImage::from_raw(mask.width, mask.height, buf)
        .expect("mask dimensions consistent");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))
}

/// Read a grayscale mask PNG back; any nonzero pixel is foreground.
pub fn load_mask_png(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let img = image::open(path)
        .map_err(|e| Error::UnsupportedFormat(format!("{}: {e}", path.display())))?
        .into_luma8();
    Ok(BinaryMask {
        width: img.width(),
        height: img.height(),
        bits: img.into_raw().into_iter().map(|v| v != 0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_maps_to_peak_lightness_neutral_ab() {
        let lab = rgb_to_lab8([255, 255, 255]);
        assert_eq!(lab[0], 255);
        assert!((lab[1] as i32 - 128).abs() <= 1, "a = {}", lab[1]);
        assert!((lab[2] as i32 - 128).abs() <= 1, "b = {}", lab[2]);
    }

    #[test]
    fn black_maps_to_origin() {
        let lab = rgb_to_lab8([0, 0, 0]);
        assert_eq!(lab[0], 0);
        assert!((lab[1] as i32 - 128).abs() <= 1);
        assert!((lab[2] as i32 - 128).abs() <= 1);
    }

    #[test]
    fn mid_gray_is_neutral() {
        let lab = rgb_to_lab8([119, 119, 119]);
        assert!((lab[1] as i32 - 128).abs() <= 1);
        assert!((lab[2] as i32 - 128).abs() <= 1);
    }

    #[test]
    fn lab_reference_values() {
        // Saturated green and blue, checked against a reference CIELAB
        // implementation (D65, 2 degree observer):
        // green (0,255,0): L*=87.74, a*=-86.18, b*=83.18
        // blue  (0,0,255): L*=32.30, a*=79.19,  b*=-107.86
        let green = rgb_to_lab8([0, 255, 0]);
        assert!((green[0] as i32 - 224).abs() <= 1, "L {}", green[0]);
        assert!((green[1] as i32 - 42).abs() <= 1, "a {}", green[1]);
        assert!((green[2] as i32 - 211).abs() <= 1, "b {}", green[2]);
        let blue = rgb_to_lab8([0, 0, 255]);
        assert!((blue[0] as i32 - 82).abs() <= 1, "L {}", blue[0]);
        assert!((blue[1] as i32 - 207).abs() <= 1, "a {}", blue[1]);
        assert!((blue[2] as i32 - 20).abs() <= 1, "b {}", blue[2]);
    }

    #[test]
    fn boundary_a_exactly_at_threshold_is_dropped() {
        // A synthetic pixel does not land exactly on a = 140, so check the
        // predicate directly on the mask rule: encoded a == a_max must fail
        // the strict inequality.
        let img = Image::new(1, 1, vec![255, 0, 96]);
        let lab = rgb_to_lab8([255, 0, 96]);
        let mask = make_mask(&img, 0, lab[1]);
        assert!(!mask.get(0, 0));
        let mask = make_mask(&img, 0, lab[1].saturating_add(1));
        assert!(mask.get(0, 0));
    }

    #[test]
    fn green_kept_blue_dropped_with_paper_thresholds() {
        // Left half saturated green, right half saturated blue.
        let mut pixels = Vec::new();
        for _y in 0..4 {
            for x in 0..8 {
                if x < 4 {
                    pixels.extend_from_slice(&[0, 255, 0]);
                } else {
                    pixels.extend_from_slice(&[0, 0, 255]);
                }
            }
        }
        let img = Image::new(8, 4, pixels);
        let mask = make_mask(&img, DEFAULT_B_MIN, DEFAULT_A_MAX);
        for y in 0..4 {
            for x in 0..8 {
                assert_eq!(mask.get(x, y), x < 4, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn monotone_in_thresholds() {
        let mut pixels = Vec::new();
        for i in 0..64u32 {
            pixels.extend_from_slice(&[(i * 4) as u8, (255 - i) as u8, (i * 2) as u8]);
        }
        let img = Image::new(8, 8, pixels);
        let base = make_mask(&img, 90, 130).foreground_count();
        assert!(make_mask(&img, 100, 130).foreground_count() <= base);
        assert!(make_mask(&img, 90, 120).foreground_count() <= base);
    }

    #[test]
    fn mask_png_round_trip() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let bits: Vec<bool> = (0..12 * 9).map(|_| rng.gen()).collect();
        let mask = BinaryMask {
            width: 12,
            height: 9,
            bits,
        };
        let dir = std::env::temp_dir().join("phenocloud-mask-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.png");
        write_mask_png(&mask, &path).unwrap();
        let back = load_mask_png(&path).unwrap();
        assert_eq!(back, mask);
    }

    #[test]
    fn all_true_and_all_false_masks() {
        let dir = std::env::temp_dir().join("phenocloud-mask-tests");
        std::fs::create_dir_all(&dir).unwrap();
        for (name, value) in [("ones.png", true), ("zeros.png", false)] {
            let mask = BinaryMask {
                width: 4,
                height: 4,
                bits: vec![value; 16],
            };
            let path = dir.join(name);
            write_mask_png(&mask, &path).unwrap();
            let img = image::open(&path).unwrap().into_luma8();
            assert!(img.pixels().all(|p| p.0[0] == if value { 255 } else { 0 }));
        }
    }
}
