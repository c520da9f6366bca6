use super::{Shape, ShapeSpec};
use crate::labelmap::{ClassId, LabelMap};

/// Paints every shape in order onto a background map, clipping to the frame.
pub(super) fn render(
    width: usize,
    height: usize,
    background: ClassId,
    shapes: &[ShapeSpec],
) -> LabelMap {
    let mut labels = vec![background; width * height];
    for s in shapes {
        let mut paint = |row: usize, c0: usize, c1: usize| {
            labels[row * width + c0..row * width + c1].fill(s.class_id);
        };
        match &s.shape {
            Shape::Polygon { vertices } => fill_polygon(vertices, width, height, &mut paint),
            Shape::Ellipse {
                center,
                radii,
                angle,
            } => fill_ellipse(*center, *radii, *angle, width, height, &mut paint),
            Shape::Skyline { points } => fill_skyline(points, width, height, &mut paint),
        }
    }
    LabelMap::new(width, height, labels).expect("dimensions checked by caller")
}

/// Column span `[c0, c1)` of the pixels whose centers fall in `[xa, xb)`.
fn span(xa: f64, xb: f64, width: usize) -> Option<(usize, usize)> {
    let lo = (xa - 0.5).ceil().max(0.0);
    let hi = (xb - 0.5).ceil().min(width as f64);
    (lo < hi).then_some((lo as usize, hi as usize))
}

fn fill_polygon(
    vertices: &[[f64; 2]],
    width: usize,
    height: usize,
    paint: &mut impl FnMut(usize, usize, usize),
) {
    let mut xs = Vec::new();
    for row in 0..height {
        let y = row as f64 + 0.5;
        xs.clear();
        for (i, a) in vertices.iter().enumerate() {
            let b = &vertices[(i + 1) % vertices.len()];
            // half-open in y, so a vertex on the scanline counts once
            if (a[1] <= y) != (b[1] <= y) {
                xs.push(a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            if let Some((c0, c1)) = span(pair[0], pair[1], width) {
                paint(row, c0, c1);
            }
        }
    }
}

fn fill_ellipse(
    center: [f64; 2],
    radii: [f64; 2],
    angle: f64,
    width: usize,
    height: usize,
    paint: &mut impl FnMut(usize, usize, usize),
) {
    let (s, c) = angle.sin_cos();
    let inside = |col: usize, row: usize| {
        let (x, y) = (col as f64 + 0.5 - center[0], row as f64 + 0.5 - center[1]);
        let (u, v) = (x * c + y * s, -x * s + y * c);
        (u / radii[0]).powi(2) + (v / radii[1]).powi(2) <= 1.0
    };
    for row in 0..height {
        // an ellipse is convex, so each row is a single run
        let mut run: Option<(usize, usize)> = None;
        for col in 0..width {
            if inside(col, row) {
                run = Some(run.map_or((col, col + 1), |(a, _)| (a, col + 1)));
            }
        }
        if let Some((c0, c1)) = run {
            paint(row, c0, c1);
        }
    }
}

fn fill_skyline(
    points: &[[f64; 2]],
    width: usize,
    height: usize,
    paint: &mut impl FnMut(usize, usize, usize),
) {
    let Some((c0, c1)) = span(points[0][0], points[points.len() - 1][0], width) else {
        return;
    };
    let mut seg = 0;
    for col in c0..c1 {
        let x = col as f64 + 0.5;
        while seg + 2 < points.len() && points[seg + 1][0] <= x {
            seg += 1;
        }
        let (a, b) = (points[seg], points[seg + 1]);
        let top = a[1] + (x - a[0]) * (b[1] - a[1]) / (b[0] - a[0]);
        let first_row = (top - 0.5).ceil().max(0.0);
        if first_row < height as f64 {
            for row in first_row as usize..height {
                paint(row, col, col + 1);
            }
        }
    }
}
