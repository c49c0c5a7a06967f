use crate::error::Result;
use crate::grid::ScalarField;

use super::contour::Contour;

/// 1 where `phi >= 0`, else 0.
pub fn mask_from_phi(phi: &ScalarField) -> ScalarField {
    phi.map(|v| if v >= 0.0 { 1.0 } else { 0.0 })
}

/// `2|A n B| / (|A| + |B|)` over pixels above 0.5; 1 when both are empty.
pub fn dice(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    a.check_dims(b)?;
    let (mut inter, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.values().iter().zip(b.values()) {
        let (x, y) = (x > 0.5, y > 0.5);
        na += x as usize;
        nb += y as usize;
        inter += (x && y) as usize;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

fn directed(a: &Contour, b: &Contour) -> f64 {
    a.vertices()
        .map(|p| {
            b.vertices()
                .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between contour vertex sets: 0 for two empty
/// contours, infinite when exactly one is empty.
pub fn hausdorff(a: &Contour, b: &Contour) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        _ => directed(a, b).max(directed(b, a)),
    }
}

/// Pixel count of a mask (values above 0.5).
pub fn area(mask: &ScalarField) -> usize {
    mask.values().iter().filter(|&&v| v > 0.5).count()
}
