/// Indices of the `k` strongest circular local maxima of `s`, at least two
/// bins apart. Equal values resolve to the lower index. If there are fewer
/// than `k` separated maxima the remaining slots take the strongest
/// separated bins.
pub(crate) fn pick<T: PartialOrd + Copy>(s: &[T], k: usize) -> Vec<usize> {
    let g = s.len();
    let by_strength = |idx: &mut Vec<usize>| {
        idx.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    };
    let mut maxima: Vec<usize> = (0..g)
        .filter(|&i| {
            let left = s[(i + g - 1) % g];
            let right = s[(i + 1) % g];
            s[i] >= left && s[i] >= right
        })
        .collect();
    by_strength(&mut maxima);

    let mut chosen = Vec::with_capacity(k);
    let take = |pool: &[usize], chosen: &mut Vec<usize>| {
        for &i in pool {
            if chosen.len() == k {
                break;
            }
            if chosen.iter().all(|&c| circular_distance(c, i, g) >= 2) {
                chosen.push(i);
            }
        }
    };
    take(&maxima, &mut chosen);
    if chosen.len() < k {
        let mut all: Vec<usize> = (0..g).collect();
        by_strength(&mut all);
        take(&all, &mut chosen);
    }
    chosen
}

fn circular_distance(a: usize, b: usize, g: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(g - d)
}
