//! Exhaustive reference for the boundary metrics on tiny instances.
//!
//! Matches by enumerating every one-to-one assignment and sweeps every
//! distinct prediction value as a threshold. Assumes a single annotator per
//! image and predictions whose lit pixels are never 8-adjacent, so that
//! thinning is the identity.

#![allow(dead_code)]

use std::collections::BTreeMap;

pub struct Instance {
    pub height: usize,
    pub width: usize,
    pub pred: Vec<f32>,
    pub gt: Vec<bool>,
}

pub struct Reference {
    pub ods: f64,
    pub ois: f64,
    pub ap: f64,
}

fn coords(mask: impl Iterator<Item = bool>, width: usize) -> Vec<(i64, i64)> {
    mask.enumerate()
        .filter(|(_, b)| *b)
        .map(|(i, _)| ((i / width) as i64, (i % width) as i64))
        .collect()
}

/// Largest number of disjoint (pred, gt) pairs within distance `d`.
pub fn best_assignment(pred: &[(i64, i64)], gt: &[(i64, i64)], d: f64) -> usize {
    fn go(i: usize, pred: &[(i64, i64)], gt: &[(i64, i64)], used: &mut Vec<bool>, d2: f64) -> usize {
        if i == pred.len() {
            return 0;
        }
        let mut best = go(i + 1, pred, gt, used, d2);
        for j in 0..gt.len() {
            let (dy, dx) = ((pred[i].0 - gt[j].0) as f64, (pred[i].1 - gt[j].1) as f64);
            if !used[j] && dy * dy + dx * dx <= d2 {
                used[j] = true;
                best = best.max(1 + go(i + 1, pred, gt, used, d2));
                used[j] = false;
            }
        }
        best
    }
    go(0, pred, gt, &mut vec![false; gt.len()], d * d)
}

fn f_measure(mp: usize, tp: usize, mg: usize, tg: usize) -> f64 {
    let p = if tp == 0 { 0.0 } else { mp as f64 / tp as f64 };
    let r = if tg == 0 { 0.0 } else { mg as f64 / tg as f64 };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn reference(instances: &[Instance], tol_frac: f64) -> Reference {
    let mut levels: Vec<f32> = instances
        .iter()
        .flat_map(|i| i.pred.iter().copied())
        .filter(|&v| v > 0.0)
        .collect();
    levels.sort_by(f32::total_cmp);
    levels.dedup();

    // counts[t][image] = (matched, predicted, gt matched, gt total)
    let counts: Vec<Vec<(usize, usize, usize, usize)>> = levels
        .iter()
        .map(|&t| {
            instances
                .iter()
                .map(|inst| {
                    let d = tol_frac * ((inst.height.pow(2) + inst.width.pow(2)) as f64).sqrt();
                    let pred = coords(inst.pred.iter().map(|&v| v >= t), inst.width);
                    let gt = coords(inst.gt.iter().copied(), inst.width);
                    let m = best_assignment(&pred, &gt, d);
                    (m, pred.len(), m, gt.len())
                })
                .collect()
        })
        .collect();

    let totals: Vec<(usize, usize, usize, usize)> = counts
        .iter()
        .map(|row| {
            row.iter().fold((0, 0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2, a.3 + c.3))
        })
        .collect();
    let ods = totals
        .iter()
        .map(|c| f_measure(c.0, c.1, c.2, c.3))
        .fold(0.0, f64::max);

    let mut best = (0, 0, 0, 0);
    for img in 0..instances.len() {
        let mut pick = counts[0][img];
        for row in &counts {
            let c = row[img];
            if f_measure(c.0, c.1, c.2, c.3) > f_measure(pick.0, pick.1, pick.2, pick.3) {
                pick = c;
            }
        }
        best = (best.0 + pick.0, best.1 + pick.1, best.2 + pick.2, best.3 + pick.3);
    }
    let ois = f_measure(best.0, best.1, best.2, best.3);

    // recall → best precision, keyed by the exact rational recall
    let mut curve: BTreeMap<(u64, u64), (f64, f64)> = BTreeMap::new();
    for c in totals.iter().filter(|c| c.1 > 0) {
        let g = gcd(c.2 as u64, c.3 as u64).max(1);
        let key = (c.2 as u64 / g, c.3 as u64 / g);
        let r = c.2 as f64 / c.3 as f64;
        let p = c.0 as f64 / c.1 as f64;
        let e = curve.entry(key).or_insert((r, p));
        e.1 = e.1.max(p);
    }
    let mut pts: Vec<(f64, f64)> = curve.into_values().collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ap = 0.0;
    if let Some(&(_, p0)) = pts.first() {
        let mut prev = (0.0, p0);
        for (r, p) in pts {
            ap += (r - prev.0) * (p + prev.1) / 2.0;
            prev = (r, p);
        }
    }
    Reference { ods, ois, ap }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Random 16×16 instance with at most six isolated prediction pixels on the
/// percent grid and at most six ground-truth pixels near them.
pub fn random_instance(rng: &mut impl rand::Rng) -> Instance {
    let (h, w) = (16usize, 16usize);
    let mut pred = vec![0f32; h * w];
    let mut gt = vec![false; h * w];
    let mut placed: Vec<(usize, usize)> = Vec::new();
    while placed.len() < 6 {
        let (y, x) = (rng.gen_range(1..h - 1), rng.gen_range(1..w - 1));
        if placed.iter().all(|&(py, px)| py.abs_diff(y) >= 2 || px.abs_diff(x) >= 2) {
            placed.push((y, x));
        }
    }
    for &(y, x) in &placed {
        pred[y * w + x] = rng.gen_range(1..100u32) as f32 / 100.0;
    }
    for &(y, x) in placed.iter().take(5) {
        let gy = (y as i64 + rng.gen_range(-1..=1)) as usize;
        let gx = (x as i64 + rng.gen_range(-1..=1)) as usize;
        gt[gy * w + gx] = true;
    }
    gt[rng.gen_range(0..h) * w + rng.gen_range(0..w)] = true;
    Instance {
        height: h,
        width: w,
        pred,
        gt,
    }
}
