use crate::geom::{dist2, Vec3};
use crate::{Error, Result};

/// Greedy farthest point sampling starting at `start`.
///
/// Each step picks the unselected point whose squared distance to the nearest
/// selected point is largest, lowest index on ties.
pub fn farthest_point_sampling(positions: &[Vec3], count: usize, start: usize) -> Result<Vec<usize>> {
    let n = positions.len();
    if count > n {
        return Err(Error::Precondition(format!(
            "cannot sample {count} of {n} points"
        )));
    }
    if start >= n {
        return Err(Error::Precondition(format!("start vertex {start} out of range [0, {n})")));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut selected = Vec::with_capacity(count);
    let mut min_d = vec![f64::INFINITY; n];
    let mut taken = vec![false; n];
    let mut current = start;
    loop {
        selected.push(current);
        taken[current] = true;
        if selected.len() == count {
            break;
        }
        let c = positions[current];
        let mut best: Option<(f64, usize)> = None;
        for (j, p) in positions.iter().enumerate() {
            if taken[j] {
                continue;
            }
            let d = dist2(*p, c);
            if d < min_d[j] {
                min_d[j] = d;
            }
            if best.is_none_or(|(bd, _)| min_d[j] > bd) {
                best = Some((min_d[j], j));
            }
        }
        current = best.expect("count <= n leaves an unselected point").1;
    }
    Ok(selected)
}

/// Largest distance from any point to its nearest sample.
pub fn covering_radius(positions: &[Vec3], samples: &[usize]) -> f64 {
    positions
        .iter()
        .map(|p| {
            samples
                .iter()
                .map(|&s| dist2(*p, positions[s]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Vec<Vec3> {
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [10.0, 0.0, 0.0]]
    }

    #[test]
    fn picks_far_point_first() {
        assert_eq!(farthest_point_sampling(&line(), 3, 0).unwrap(), vec![0, 3, 2]);
    }

    #[test]
    fn exhaustive_is_permutation() {
        let mut s = farthest_point_sampling(&line(), 4, 2).unwrap();
        assert_eq!(s[0], 2);
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3]);
    }

    #[test]
    fn duplicates_never_reselected() {
        let p = vec![[0.0; 3]; 5];
        let mut s = farthest_point_sampling(&p, 5, 3).unwrap();
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn single_and_errors() {
        assert_eq!(farthest_point_sampling(&line(), 1, 1).unwrap(), vec![1]);
        assert!(farthest_point_sampling(&line(), 5, 0).is_err());
        assert!(farthest_point_sampling(&line(), 2, 4).is_err());
    }
}
