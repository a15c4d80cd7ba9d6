//! Non-dominated filtering and axis normalization.

/// Membership flags of the non-dominated set under minimization of both
/// coordinates. A point is dominated when another is no worse on both axes
/// and strictly better on at least one; exact duplicates do not dominate
/// each other.
pub fn pareto_front(points: &[(f64, f64)]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .0
            .total_cmp(&points[b].0)
            .then(points[a].1.total_cmp(&points[b].1))
    });
    let mut member = vec![false; points.len()];
    // Lowest y among points with strictly smaller x.
    let mut best_y = f64::INFINITY;
    let mut i = 0;
    while i < order.len() {
        let x = points[order[i]].0;
        let mut j = i;
        while j < order.len() && points[order[j]].0 == x {
            j += 1;
        }
        // Within the group the first entry has the lowest y.
        let group_min = points[order[i]].1;
        for &k in &order[i..j] {
            let y = points[k].1;
            member[k] = y < best_y && y == group_min;
        }
        best_y = best_y.min(group_min);
        i = j;
    }
    member
}

/// Min-max scaling to [0, 1]; a constant axis maps to 0.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}
