use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{GridMap, Position};

/// Square (Chebyshev) vision around an observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibilitySpec {
    pub radius: usize,
    /// Walls block sight when set.
    pub occlusion: bool,
}

impl VisibilitySpec {
    pub const fn new(radius: usize) -> Self {
        Self {
            radius,
            occlusion: false,
        }
    }
}

/// True when no wall lies strictly between the two tiles on the Bresenham
/// line joining their centres. The line is always drawn from the smaller
/// endpoint, so sight is symmetric.
pub fn has_line_of_sight(map: &GridMap, from: Position, to: Position) -> bool {
    let (from, to) = if from <= to { (from, to) } else { (to, from) };
    let (mut x, mut y) = (from.x as isize, from.y as isize);
    let (x1, y1) = (to.x as isize, to.y as isize);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if (x, y) == (x1, y1) {
            return true;
        }
        if (x, y) != (from.x as isize, from.y as isize)
            && map.is_wall(Position::new(x as usize, y as usize))
        {
            return false;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Floor tiles seen from `observer`, excluding its own tile, plus every
/// camera tile when `cameras_active`.
pub fn visible_set(
    map: &GridMap,
    observer: Position,
    spec: VisibilitySpec,
    cameras_active: bool,
) -> BTreeSet<Position> {
    let r = spec.radius;
    let mut out = BTreeSet::new();
    let y0 = observer.y.saturating_sub(r);
    let x0 = observer.x.saturating_sub(r);
    let y1 = (observer.y + r).min(map.height() - 1);
    let x1 = (observer.x + r).min(map.width() - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let p = Position::new(x, y);
            if p == observer || map.is_wall(p) {
                continue;
            }
            if spec.occlusion && !has_line_of_sight(map, observer, p) {
                continue;
            }
            out.insert(p);
        }
    }
    if cameras_active {
        out.extend(map.cameras().iter().copied());
    }
    out
}
