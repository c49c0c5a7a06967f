use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::model::LandmarkSet;

use super::contour::Contour;
use super::io::to_bytes;

const CONTOUR_COLOR: Rgb<u8> = Rgb([255, 40, 40]);
const LANDMARK_COLOR: Rgb<u8> = Rgb([40, 220, 60]);

/// Grayscale image with the contour drawn in red and each landmark as a
/// green plus sign.
pub fn overlay_image(image: &ScalarField, contour: &Contour, landmarks: &LandmarkSet) -> RgbImage {
    let (h, w) = image.dims();
    let gray = to_bytes(image);
    let mut out = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let v = gray[y as usize * w + x as usize];
        Rgb([v, v, v])
    });
    let mut plot = |r: f64, c: f64, color: Rgb<u8>| {
        let (i, j) = (r.round(), c.round());
        if i >= 0.0 && j >= 0.0 && (i as usize) < h && (j as usize) < w {
            out.put_pixel(j as u32, i as u32, color);
        }
    };
    for (a, b) in contour.segments() {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let steps = (len * 4.0).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            plot(
                a[0] + t * (b[0] - a[0]),
                a[1] + t * (b[1] - a[1]),
                CONTOUR_COLOR,
            );
        }
    }
    for v in contour.vertices() {
        plot(v[0], v[1], CONTOUR_COLOR);
    }
    for p in &landmarks.points {
        let (r, c) = (p.row as f64, p.col as f64);
        for d in -1..=1 {
            plot(r + d as f64, c, LANDMARK_COLOR);
            plot(r, c + d as f64, LANDMARK_COLOR);
        }
    }
    out
}

pub fn overlay_png(
    image: &ScalarField,
    contour: &Contour,
    landmarks: &LandmarkSet,
) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    overlay_image(image, contour, landmarks)
        .write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
    Ok(buf.into_inner())
}

/// Writes the overlay as an RGB PNG.
pub fn render_overlay(
    image: &ScalarField,
    contour: &Contour,
    landmarks: &LandmarkSet,
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, overlay_png(image, contour, landmarks)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Landmark;

    #[test]
    fn empty_contour_keeps_pixels_except_markers() {
        let img = ScalarField::from_fn(9, 9, |i, j| ((i * 9 + j) * 3) as f64 / 255.0);
        let lm = LandmarkSet::new(vec![Landmark::new(4, 4)]);
        let out = overlay_image(&img, &Contour::default(), &lm);
        for i in 0..9u32 {
            for j in 0..9u32 {
                let marker = (i == 4 && (3..=5).contains(&j)) || (j == 4 && (3..=5).contains(&i));
                let px = out.get_pixel(j, i);
                if marker {
                    assert_eq!(*px, LANDMARK_COLOR);
                } else {
                    let v = ((i * 9 + j) * 3) as u8;
                    assert_eq!(*px, Rgb([v, v, v]));
                }
            }
        }
    }

    #[test]
    fn contour_pixels_are_marked() {
        let img = ScalarField::zeros(10, 10);
        let c = Contour {
            polylines: vec![vec![[2.0, 2.0], [2.0, 7.0]]],
            closed: vec![false],
        };
        let out = overlay_image(&img, &c, &LandmarkSet::default());
        for j in 2..=7 {
            assert_eq!(*out.get_pixel(j, 2), CONTOUR_COLOR);
        }
        assert_eq!(*out.get_pixel(2, 5), Rgb([0, 0, 0]));
    }

    #[test]
    fn unwritable_path_errors() {
        let img = ScalarField::zeros(4, 4);
        let r = render_overlay(
            &img,
            &Contour::default(),
            &LandmarkSet::default(),
            "/nonexistent/dir/o.png",
        );
        assert!(r.is_err());
    }
}
