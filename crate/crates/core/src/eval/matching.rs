//! Tolerance-based correspondence between predicted and annotated edges.

use std::collections::VecDeque;

/// Outcome of matching one binary prediction against its annotators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correspondence {
    /// Prediction pixels matched to at least one annotator.
    pub matched_pred: Vec<bool>,
    /// Matched ground-truth pixel count, per annotator.
    pub matched_gt: Vec<usize>,
    /// Ground-truth pixel count, per annotator.
    pub gt_total: Vec<usize>,
}

impl Correspondence {
    pub fn matched_pred_count(&self) -> usize {
        self.matched_pred.iter().filter(|&&m| m).count()
    }
}

/// Matching radius in pixels for a tolerance given as a fraction of the
/// image diagonal.
pub fn max_distance(height: usize, width: usize, tol_frac: f64) -> f64 {
    tol_frac * ((height * height + width * width) as f64).sqrt()
}

/// Maximum-cardinality matching of `pred` against each annotator in `gts`,
/// with an edge between two pixels iff their Euclidean distance is at most
/// `tol_frac` times the image diagonal.
pub fn correspond(pred: &[bool], gts: &[Vec<bool>], height: usize, width: usize, tol_frac: f64) -> Correspondence {
    let d = max_distance(height, width, tol_frac);
    let pred_px: Vec<usize> = (0..pred.len()).filter(|&i| pred[i]).collect();
    let mut matched_pred = vec![false; pred.len()];
    let mut matched_gt = Vec::with_capacity(gts.len());
    let mut gt_total = Vec::with_capacity(gts.len());
    for gt in gts {
        assert_eq!(gt.len(), height * width, "annotation size mismatch");
        let (adj, gt_count) = adjacency(&pred_px, gt, height, width, d);
        let pair = hopcroft_karp(&adj, gt_count);
        let mut m = 0;
        for (i, p) in pair.iter().enumerate() {
            if p.is_some() {
                matched_pred[pred_px[i]] = true;
                m += 1;
            }
        }
        matched_gt.push(m);
        gt_total.push(gt_count);
    }
    Correspondence {
        matched_pred,
        matched_gt,
        gt_total,
    }
}

/// For each prediction pixel, indices of the ground-truth pixels in range.
fn adjacency(pred_px: &[usize], gt: &[bool], h: usize, w: usize, d: f64) -> (Vec<Vec<usize>>, usize) {
    let mut gt_index = vec![usize::MAX; gt.len()];
    let mut n = 0;
    for (i, &g) in gt.iter().enumerate() {
        if g {
            gt_index[i] = n;
            n += 1;
        }
    }
    let r = d.floor() as isize;
    let d2 = d * d;
    let adj = pred_px
        .iter()
        .map(|&p| {
            let (py, px) = ((p / w) as isize, (p % w) as isize);
            let mut out = Vec::new();
            for y in (py - r).max(0)..=(py + r).min(h as isize - 1) {
                for x in (px - r).max(0)..=(px + r).min(w as isize - 1) {
                    let (dy, dx) = ((y - py) as f64, (x - px) as f64);
                    let j = gt_index[y as usize * w + x as usize];
                    if j != usize::MAX && dy * dy + dx * dx <= d2 {
                        out.push(j);
                    }
                }
            }
            out
        })
        .collect();
    (adj, n)
}

/// Maximum bipartite matching; returns the right-side partner of every
/// left vertex.
pub fn hopcroft_karp(adj: &[Vec<usize>], right: usize) -> Vec<Option<usize>> {
    const FREE: usize = usize::MAX;
    let left = adj.len();
    let mut pair_l = vec![FREE; left];
    let mut pair_r = vec![FREE; right];
    let mut dist = vec![0usize; left];
    loop {
        // layered BFS from free left vertices
        let mut queue = VecDeque::new();
        for u in 0..left {
            if pair_l[u] == FREE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let next = pair_r[v];
                if next == FREE {
                    found = true;
                } else if dist[next] == usize::MAX {
                    dist[next] = dist[u] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            break;
        }
        for u in 0..left {
            if pair_l[u] == FREE {
                augment(u, adj, &mut pair_l, &mut pair_r, &mut dist);
            }
        }
    }
    pair_l.into_iter().map(|v| (v != FREE).then_some(v)).collect()
}

fn augment(u: usize, adj: &[Vec<usize>], pair_l: &mut [usize], pair_r: &mut [usize], dist: &mut [usize]) -> bool {
    for &v in &adj[u] {
        let next = pair_r[v];
        let ok = next == usize::MAX || (dist[next] == dist[u] + 1 && augment(next, adj, pair_l, pair_r, dist));
        if ok {
            pair_l[u] = v;
            pair_r[v] = u;
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}
