//! Thresholding and morphological thinning to unit-width curves.

/// Binary map of `values ≥ threshold`. The comparison runs in single
/// precision so that a value stored as `k/100` passes threshold `k/100`.
pub fn threshold(values: &[f32], threshold: f64) -> Vec<bool> {
    let t = threshold as f32;
    values.iter().map(|&v| v >= t).collect()
}

/// Thresholds then thins (see [`thin`]).
pub fn threshold_and_thin(values: &[f32], height: usize, width: usize, t: f64) -> Vec<bool> {
    let mut b = threshold(values, t);
    thin(&mut b, height, width);
    b
}

/// Two-subiteration parallel thinning repeated until stable.
///
/// A pixel is removed when it is a simple boundary point: exactly one
/// 4-connected crossing, between 2 and 3 occupied neighbor pairs, and the
/// directional condition of the current subiteration (south-east boundary
/// first, then north-west). Pixels outside the image count as background.
pub fn thin(map: &mut [bool], height: usize, width: usize) {
    assert_eq!(map.len(), height * width, "map size mismatch");
    let mut remove = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            remove.clear();
            for y in 0..height {
                for x in 0..width {
                    if map[y * width + x] && deletable(map, height, width, y, x, pass) {
                        remove.push(y * width + x);
                    }
                }
            }
            changed |= !remove.is_empty();
            for &i in &remove {
                map[i] = false;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Neighbors `x1..x8` counter-clockwise from east.
fn neighborhood(map: &[bool], h: usize, w: usize, y: usize, x: usize) -> [bool; 8] {
    const OFFSETS: [(isize, isize); 8] = [(0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1)];
    OFFSETS.map(|(dy, dx)| {
        let (yy, xx) = (y as isize + dy, x as isize + dx);
        yy >= 0 && xx >= 0 && (yy as usize) < h && (xx as usize) < w && map[yy as usize * w + xx as usize]
    })
}

fn deletable(map: &[bool], h: usize, w: usize, y: usize, x: usize, pass: usize) -> bool {
    let n = neighborhood(map, h, w, y, x);
    let at = |i: usize| n[(i - 1) % 8];
    let crossings = (1..=4)
        .filter(|&i| !at(2 * i - 1) && (at(2 * i) || at(2 * i + 1)))
        .count();
    if crossings != 1 {
        return false;
    }
    let n1 = (1..=4).filter(|&k| at(2 * k - 1) || at(2 * k)).count();
    let n2 = (1..=4).filter(|&k| at(2 * k) || at(2 * k + 1)).count();
    let m = n1.min(n2);
    if !(2..=3).contains(&m) {
        return false;
    }
    if pass == 0 {
        !((at(2) || at(3) || !at(8)) && at(1))
    } else {
        !((at(6) || at(7) || !at(4)) && at(5))
    }
}
