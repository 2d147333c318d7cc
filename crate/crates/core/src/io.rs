//! 8-bit grayscale image files and the contour JSON document.
//!
//! Images are binary PGM (P5) or 8-bit grayscale PNG, chosen by file
//! extension when writing and by content when reading. Intensities map to
//! `[0, 1]` as `value / 255`.

use std::io::Cursor;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, GrayImage, ImageEncoder, ImageFormat, ImageReader};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::bspline::BSplineContour;
use crate::error::{BeasError, Result};
use crate::geometry::{Image, Mask, PolarFrame};

pub const CONTOUR_VERSION: u32 = 1;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BeasError + '_ {
    move |source| BeasError::Io {
        path: path.to_owned(),
        source,
    }
}

fn decode_gray8(reader: ImageReader<impl std::io::BufRead + std::io::Seek>) -> Result<Array2<u8>> {
    let decoded = reader
        .decode()
        .map_err(|e| BeasError::Document(format!("cannot decode image: {e}")))?;
    let gray = match decoded {
        DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(BeasError::UnsupportedFormat(format!(
                "expected 8-bit grayscale, found {:?}",
                other.color()
            )))
        }
    };
    let (w, h) = gray.dimensions();
    Array2::from_shape_vec((h as usize, w as usize), gray.into_raw())
        .map_err(|e| BeasError::Document(e.to_string()))
}

/// Reads an 8-bit grayscale PGM or PNG.
pub fn load_gray8(path: &Path) -> Result<Array2<u8>> {
    let reader = ImageReader::open(path)
        .map_err(io_err(path))?
        .with_guessed_format()
        .map_err(io_err(path))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => decode_gray8(reader),
        other => Err(BeasError::UnsupportedFormat(format!(
            "{}: {other:?} is not PGM or PNG",
            path.display()
        ))),
    }
}

/// Decodes in-memory PGM or PNG bytes.
pub fn decode_gray8_bytes(bytes: &[u8]) -> Result<Array2<u8>> {
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| BeasError::Document(e.to_string()))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => decode_gray8(reader),
        other => Err(BeasError::UnsupportedFormat(format!(
            "{other:?} is not PGM or PNG"
        ))),
    }
}

pub fn load_image(path: &Path) -> Result<Image> {
    Ok(load_gray8(path)?.mapv(|v| v as f64 / 255.0))
}

pub fn to_gray8(image: &Image) -> Array2<u8> {
    image.mapv(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
}

pub fn mask_to_gray8(mask: &Mask) -> Array2<u8> {
    mask.mapv(|b| if b { 255 } else { 0 })
}

fn to_gray_image(pixels: &Array2<u8>) -> GrayImage {
    let (h, w) = pixels.dim();
    GrayImage::from_raw(w as u32, h as u32, pixels.iter().copied().collect())
        .expect("buffer length matches dimensions")
}

/// Binary PGM (P5) encoding.
pub fn encode_pgm(pixels: &Array2<u8>) -> Vec<u8> {
    let img = to_gray_image(pixels);
    let mut out = Vec::new();
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(
            img.as_raw(),
            img.width(),
            img.height(),
            image::ExtendedColorType::L8,
        )
        .expect("in-memory PGM encoding cannot fail");
    out
}

pub fn encode_png(pixels: &Array2<u8>) -> Vec<u8> {
    let img = to_gray_image(pixels);
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(
            img.as_raw(),
            img.width(),
            img.height(),
            image::ExtendedColorType::L8,
        )
        .expect("in-memory PNG encoding cannot fail");
    out
}

/// Writes PGM or PNG depending on the extension of `path`.
pub fn save_gray8(pixels: &Array2<u8>, path: &Path) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let bytes = match ext.as_deref() {
        Some("pgm") => encode_pgm(pixels),
        Some("png") => encode_png(pixels),
        _ => {
            return Err(BeasError::UnsupportedFormat(format!(
                "{}: extension must be .pgm or .png",
                path.display()
            )))
        }
    };
    std::fs::write(path, bytes).map_err(io_err(path))
}

pub fn save_mask(mask: &Mask, path: &Path) -> Result<()> {
    save_gray8(&mask_to_gray8(mask), path)
}

pub fn load_mask(path: &Path) -> Result<Mask> {
    Ok(load_gray8(path)?.mapv(|v| v >= 128))
}

pub fn save_image(image: &Image, path: &Path) -> Result<()> {
    save_gray8(&to_gray8(image), path)
}

/// Interchange form of a contour and its origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourDocument {
    pub version: u32,
    pub n_knots: usize,
    pub degree: u8,
    pub scale: f64,
    pub origin: [f64; 2],
    pub coefficients: Vec<f64>,
}

impl ContourDocument {
    pub fn new(contour: &BSplineContour, frame: &PolarFrame) -> Self {
        Self {
            version: CONTOUR_VERSION,
            n_knots: contour.n_knots(),
            degree: contour.degree(),
            scale: contour.scale(),
            origin: frame.origin,
            coefficients: contour.coefficients().to_vec(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ContourDocument = serde_json::from_str(text)
            .map_err(|e| BeasError::Document(format!("contour JSON: {e}")))?;
        if doc.version != CONTOUR_VERSION {
            return Err(BeasError::Document(format!(
                "contour version {} unsupported (expected {CONTOUR_VERSION})",
                doc.version
            )));
        }
        if doc.n_knots != doc.coefficients.len() {
            return Err(BeasError::Document(format!(
                "n_knots {} but {} coefficients",
                doc.n_knots,
                doc.coefficients.len()
            )));
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("contour document serializes")
    }

    pub fn contour(&self) -> Result<BSplineContour> {
        BSplineContour::with_scale(self.coefficients.clone(), self.degree, self.scale)
    }
}

pub fn save_contour(contour: &BSplineContour, frame: &PolarFrame, path: &Path) -> Result<()> {
    std::fs::write(path, ContourDocument::new(contour, frame).to_json()).map_err(io_err(path))
}

/// Reads a contour document, returning the contour and its origin.
pub fn load_contour(path: &Path) -> Result<(BSplineContour, [f64; 2])> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let doc = ContourDocument::from_json(&text)?;
    Ok((doc.contour()?, doc.origin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mask_round_trip_pgm_and_png() {
        let dir = tempfile::tempdir().unwrap();
        let mask = Mask::from_shape_fn((17, 23), |(r, c)| (r * 7 + c * 3) % 5 < 2);
        for name in ["m.pgm", "m.png"] {
            let p = dir.path().join(name);
            save_mask(&mask, &p).unwrap();
            assert_eq!(load_mask(&p).unwrap(), mask);
        }
    }

    #[test]
    fn pgm_is_binary_p5() {
        let bytes = encode_pgm(&Array2::from_elem((2, 3), 9u8));
        assert!(bytes.starts_with(b"P5"));
        assert!(bytes.ends_with(&[9u8; 6]));
    }

    #[test]
    fn sixteen_bit_png_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("deep.png");
        let img =
            image::ImageBuffer::<image::Luma<u16>, _>::from_pixel(4, 4, image::Luma([1000u16]));
        img.save(&p).unwrap();
        assert!(matches!(
            load_image(&p),
            Err(BeasError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn truncated_pgm_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cut.pgm");
        let mut bytes = encode_pgm(&Array2::from_elem((8, 8), 3u8));
        bytes.truncate(bytes.len() - 10);
        std::fs::write(&p, bytes).unwrap();
        assert!(load_image(&p).is_err());
    }

    #[test]
    fn unknown_extension_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bmp");
        assert!(save_mask(&Mask::from_elem((2, 2), true), &p).is_err());
    }

    #[test]
    fn contour_version_checked() {
        let doc = r#"{"version":2,"n_knots":7,"degree":3,"scale":1.0,"origin":[1,2],"coefficients":[1,1,1,1,1,1,1]}"#;
        assert!(matches!(
            ContourDocument::from_json(doc),
            Err(BeasError::Document(_))
        ));
        let doc = doc.replace("\"version\":2", "\"version\":1");
        assert!(ContourDocument::from_json(&doc).is_ok());
        let short = doc.replace("\"n_knots\":7", "\"n_knots\":8");
        assert!(ContourDocument::from_json(&short).is_err());
    }

    proptest! {
        #[test]
        fn contour_json_round_trip_is_bit_exact(
            coefs in proptest::collection::vec(1.0f64..500.0, 7..40),
            ox in 0.0f64..300.0,
            oy in 0.0f64..300.0,
        ) {
            let contour = BSplineContour::new(coefs, 3).unwrap();
            let frame = PolarFrame { origin: [ox, oy], initial_radius: 1.0 };
            let text = ContourDocument::new(&contour, &frame).to_json();
            let back = ContourDocument::from_json(&text).unwrap();
            prop_assert_eq!(back.origin, [ox, oy]);
            let c = back.contour().unwrap();
            for (a, b) in c.coefficients().iter().zip(contour.coefficients()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
