use crate::calibration::WalkingArea;
use crate::geometry::GroundPoint;

/// Points of the hexagonal lattice with the given pitch that fall inside
/// `area` (boundary included).
///
/// Rows are `pitch·√3/2` apart and odd rows are shifted by half a pitch; the
/// lattice is anchored at the minimum corner of the area's bounding box.
pub fn hex_lattice(area: &WalkingArea, pitch: f64) -> Vec<GroundPoint> {
    assert!(pitch > 0.0, "lattice pitch must be positive");
    let (lo, hi) = area.bounding_box();
    let row_step = pitch * 3f64.sqrt() / 2.0;
    let mut out = Vec::new();
    let mut row = 0usize;
    loop {
        let y = lo.y + row as f64 * row_step;
        if y > hi.y {
            break;
        }
        let shift = if row % 2 == 1 { pitch / 2.0 } else { 0.0 };
        let mut col = 0usize;
        loop {
            let x = lo.x + shift + col as f64 * pitch;
            if x > hi.x {
                break;
            }
            let p = GroundPoint::new(x, y);
            if area.contains(p) {
                out.push(p);
            }
            col += 1;
        }
        row += 1;
    }
    out
}

/// Capacity estimate: how many people fit in `area` when kept `tau` apart on
/// the densest (hexagonal) packing. Never below 1.
pub fn estimate_capacity(area: &WalkingArea, tau: f64) -> u32 {
    let count = hex_lattice(area, tau).len();
    u32::try_from(count).unwrap_or(u32::MAX).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: f64, h: f64) -> WalkingArea {
        WalkingArea::new(vec![
            GroundPoint::new(0.0, 0.0),
            GroundPoint::new(w, 0.0),
            GroundPoint::new(w, h),
            GroundPoint::new(0.0, h),
        ])
        .unwrap()
    }

    #[test]
    fn ten_meter_square_at_two_meter_pitch() {
        // Rows at y = k·√3 for k = 0..=5 (5√3 ≈ 8.66 ≤ 10, 6√3 > 10).
        // Even rows: x = 0, 2, …, 10 → 6 points; odd rows: x = 1, 3, …, 9 → 5.
        // Three even and three odd rows → 33.
        assert_eq!(estimate_capacity(&rect(10.0, 10.0), 2.0), 33);
    }

    #[test]
    fn tiny_area_floors_at_one() {
        let tiny = WalkingArea::new(vec![
            GroundPoint::new(0.1, 0.1),
            GroundPoint::new(0.2, 0.1),
            GroundPoint::new(0.15, 0.2),
        ])
        .unwrap();
        assert_eq!(estimate_capacity(&tiny, 5.0), 1);
    }

    #[test]
    fn coarser_lattice_is_a_subset() {
        let area = rect(7.3, 4.1);
        let fine = hex_lattice(&area, 0.5);
        for p in hex_lattice(&area, 1.0) {
            assert!(fine.iter().any(|q| q.distance(&p) < 1e-9));
        }
    }
}
