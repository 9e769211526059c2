use std::collections::VecDeque;

use crate::interval::iou;
use crate::types::EventBox;

const FREE: usize = usize::MAX;

/// Maximum-cardinality matching of a bipartite graph given as left-side
/// adjacency lists. Returns the partner of every left vertex.
///
/// Neighbours are tried in list order, so callers control which of several
/// equally large matchings comes out.
pub fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> Vec<Option<usize>> {
    let n_left = adj.len();
    let mut pair_left = vec![FREE; n_left];
    let mut pair_right = vec![FREE; n_right];
    let mut dist = vec![0usize; n_left];
    let mut cursor = vec![0usize; n_left];

    loop {
        // Layer the graph from all free left vertices.
        let mut queue = VecDeque::new();
        for u in 0..n_left {
            if pair_left[u] == FREE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut reachable_free = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = pair_right[v];
                if w == FREE {
                    reachable_free = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !reachable_free {
            break;
        }
        cursor.iter_mut().for_each(|c| *c = 0);
        let mut grew = false;
        for u in 0..n_left {
            if pair_left[u] == FREE && augment(u, adj, &mut pair_left, &mut pair_right, &mut dist, &mut cursor) {
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    pair_left
        .into_iter()
        .map(|v| (v != FREE).then_some(v))
        .collect()
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    pair_left: &mut [usize],
    pair_right: &mut [usize],
    dist: &mut [usize],
    cursor: &mut [usize],
) -> bool {
    while cursor[u] < adj[u].len() {
        let v = adj[u][cursor[u]];
        cursor[u] += 1;
        let w = pair_right[v];
        let ok = w == FREE
            || (dist[w] == dist[u].wrapping_add(1) && augment(w, adj, pair_left, pair_right, dist, cursor));
        if ok {
            pair_left[u] = v;
            pair_right[v] = u;
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}

fn order_by_time(boxes: &[EventBox]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..boxes.len()).collect();
    idx.sort_by(|&a, &b| {
        boxes[a]
            .onset()
            .total_cmp(&boxes[b].onset())
            .then(boxes[a].duration().total_cmp(&boxes[b].duration()))
            .then(a.cmp(&b))
    });
    idx
}

/// Maximum matching between two box lists.
///
/// Boxes are linked when they share a class and their IoU is at least
/// `iou_threshold`. Vertices are visited in `(onset, duration)` order and each
/// vertex's neighbours in decreasing IoU, which makes the result
/// deterministic and lets exact duplicates pair with each other. Pairs are
/// `(left_index, right_index)` into the original slices, sorted by left index.
pub fn max_bipartite_matching(left: &[EventBox], right: &[EventBox], iou_threshold: f64) -> Vec<(usize, usize)> {
    let left_order = order_by_time(left);
    let right_order = order_by_time(right);
    let adj: Vec<Vec<usize>> = left_order
        .iter()
        .map(|&li| {
            let mut nbrs: Vec<(f64, usize)> = right_order
                .iter()
                .enumerate()
                .filter(|(_, &ri)| left[li].class_id() == right[ri].class_id())
                .map(|(pos, &ri)| (iou(&left[li], &right[ri]), pos))
                .filter(|&(o, _)| o > 0.0 && o >= iou_threshold)
                .collect();
            nbrs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            nbrs.into_iter().map(|(_, pos)| pos).collect()
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> = hopcroft_karp(&adj, right.len())
        .into_iter()
        .enumerate()
        .filter_map(|(lpos, r)| r.map(|rpos| (left_order[lpos], right_order[rpos])))
        .collect();
    pairs.sort_unstable();
    pairs
}
