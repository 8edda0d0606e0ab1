use std::fmt::Write as _;
use std::path::Path;

use crate::grid::{GridMap, Position};
use crate::hmm::BeliefVector;

use super::{ExperimentError, StatsReport};

/// Colour of the most probable tile.
pub const HEATMAP_HIGH: [u8; 3] = [139, 0, 0];
const WALL: [u8; 3] = [0, 0, 0];
const WHITE: [u8; 3] = [255, 255, 255];

/// One CSV row per map row; walls are empty cells, floor tiles carry six
/// decimals.
pub fn heatmap_csv(belief: &BeliefVector, map: &GridMap) -> String {
    let mut out = String::new();
    for y in 0..map.height() {
        let cells: Vec<String> = (0..map.width())
            .map(|x| match map.state_index(Position::new(x, y)) {
                Some(s) => format!("{:.6}", belief.as_slice()[s]),
                None => String::new(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Binary PPM, `scale` pixels per tile side. Walls are black; floor runs from
/// white at zero to [`HEATMAP_HIGH`] at the belief's maximum.
pub fn heatmap_ppm(belief: &BeliefVector, map: &GridMap, scale: usize) -> Vec<u8> {
    let scale = scale.max(1);
    let (w, h) = (map.width() * scale, map.height() * scale);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    let max = belief.max();
    for py in 0..h {
        for px in 0..w {
            let p = Position::new(px / scale, py / scale);
            let rgb = match map.state_index(p) {
                None => WALL,
                Some(s) => ramp(if max > 0.0 {
                    belief.as_slice()[s] / max
                } else {
                    0.0
                }),
            };
            out.extend_from_slice(&rgb);
        }
    }
    out
}

fn ramp(level: f64) -> [u8; 3] {
    if level <= 0.0 {
        return WHITE;
    }
    let level = level.min(1.0);
    let mut rgb = [0u8; 3];
    for (k, c) in rgb.iter_mut().enumerate() {
        let v = f64::from(WHITE[k]) + (f64::from(HEATMAP_HIGH[k]) - f64::from(WHITE[k])) * level;
        *c = v.round() as u8;
    }
    rgb
}

/// Writes `<stem>.csv` and `<stem>.ppm`.
pub fn export_heatmap(
    belief: &BeliefVector,
    map: &GridMap,
    stem: &Path,
    scale: usize,
) -> Result<(), ExperimentError> {
    let csv = stem.with_extension("csv");
    std::fs::write(&csv, heatmap_csv(belief, map)).map_err(|e| ExperimentError::io(&csv, e))?;
    let ppm = stem.with_extension("ppm");
    std::fs::write(&ppm, heatmap_ppm(belief, map, scale))
        .map_err(|e| ExperimentError::io(&ppm, e))?;
    Ok(())
}

pub fn learning_curve_csv(report: &StatsReport) -> String {
    let mut out = String::from("game_index,variant,mean_distance\n");
    for curve in &report.variants {
        for (k, d) in curve.per_game_mean_distance.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", k + 1, curve.variant, d);
        }
    }
    out
}

pub fn export_learning_curve(report: &StatsReport, path: &Path) -> Result<(), ExperimentError> {
    std::fs::write(path, learning_curve_csv(report)).map_err(|e| ExperimentError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_map;

    fn pixels(ppm: &[u8]) -> Vec<[u8; 3]> {
        ppm[header_len(ppm)..]
            .chunks(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect()
    }

    fn header_len(ppm: &[u8]) -> usize {
        let mut newlines = 0;
        for (i, &b) in ppm.iter().enumerate() {
            if b == b'\n' {
                newlines += 1;
                if newlines == 3 {
                    return i + 1;
                }
            }
        }
        panic!("short header");
    }

    #[test]
    fn one_hot_has_single_coloured_pixel() {
        let m = parse_map("P.#\n.AG\n").unwrap();
        let b = BeliefVector::from_unnormalized(vec![0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let px = pixels(&heatmap_ppm(&b, &m, 1));
        assert_eq!(px.len(), 6);
        assert_eq!(px[2], WALL);
        assert_eq!(px.iter().filter(|&&p| p != WHITE && p != WALL).count(), 1);
        assert_eq!(px[1], HEATMAP_HIGH);
    }

    #[test]
    fn uniform_is_flat() {
        let m = parse_map("P.#\n.AG\n").unwrap();
        let b = BeliefVector::from_unnormalized(vec![1.0; 5]).unwrap();
        let px = pixels(&heatmap_ppm(&b, &m, 2));
        assert_eq!(px.len(), 24);
        let floor: Vec<_> = px.iter().filter(|&&p| p != WALL).collect();
        assert!(floor.iter().all(|&&p| p == HEATMAP_HIGH));
        let csv = heatmap_csv(&b, &m);
        assert_eq!(csv, "0.200000,0.200000,\n0.200000,0.200000,0.200000\n");
    }
}
