//! Closed-tour length: exact Held-Karp up to 16 points, nearest-neighbour
//! plus 2-opt beyond that.

use super::OracleError;

/// Largest instance the bitmask dynamic program accepts.
pub const TSP_EXACT_MAX: usize = 16;

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0) * (a.0 - b.0) + (a.1 - b.1) * (a.1 - b.1)).sqrt()
}

/// Exact optimal closed-tour length via Held-Karp.
pub fn tsp_exact(points: &[(f64, f64)]) -> Result<f64, OracleError> {
    let n = points.len();
    if n < 2 {
        return Err(OracleError::TooFewPoints { need: 2, got: n });
    }
    if n > TSP_EXACT_MAX {
        return Err(OracleError::TooManyPoints {
            max: TSP_EXACT_MAX,
            got: n,
        });
    }
    if n == 2 {
        return Ok(2.0 * dist(points[0], points[1]));
    }
    let d: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| dist(points[i], points[j])).collect())
        .collect();
    // dp[mask][i]: shortest path from 0 through `mask` ending at i (0 in mask)
    let full = 1usize << n;
    let mut dp = vec![f64::INFINITY; full * n];
    dp[(1 << 0) * n] = 0.0;
    for mask in 1..full {
        if mask & 1 == 0 {
            continue;
        }
        for last in 0..n {
            if mask & (1 << last) == 0 {
                continue;
            }
            let cur = dp[mask * n + last];
            if !cur.is_finite() {
                continue;
            }
            for next in 1..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nm = mask | (1 << next);
                let nd = cur + d[last][next];
                if nd < dp[nm * n + next] {
                    dp[nm * n + next] = nd;
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    for last in 1..n {
        let v = dp[(full - 1) * n + last] + d[last][0];
        if v < best {
            best = v;
        }
    }
    Ok(best)
}

/// Nearest-neighbour construction refined by 2-opt until no swap improves.
/// Returns the tour length and an `approximate` flag (always true).
pub fn tsp_heuristic(points: &[(f64, f64)]) -> Result<(f64, bool), OracleError> {
    let n = points.len();
    if n < 2 {
        return Err(OracleError::TooFewPoints { need: 2, got: n });
    }
    let mut tour: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    tour.push(0);
    used[0] = true;
    for _ in 1..n {
        let last = *tour.last().unwrap();
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..n {
            if !used[j] {
                let d = dist(points[last], points[j]);
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        tour.push(best.1);
        used[best.1] = true;
    }

    // 2-opt: reverse tour[i..=j] while any swap shortens the tour
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let a = tour[if i == 0 { n - 1 } else { i - 1 }];
                let b = tour[i];
                let c = tour[j];
                let e = tour[(j + 1) % n];
                if a == c || b == e {
                    continue;
                }
                let before = dist(points[a], points[b]) + dist(points[c], points[e]);
                let after = dist(points[a], points[c]) + dist(points[b], points[e]);
                if after + 1e-12 < before {
                    tour[i..=j].reverse();
                    improved = true;
                }
            }
        }
    }

    let mut len = 0.0;
    for i in 0..n {
        len += dist(points[tour[i]], points[tour[(i + 1) % n]]);
    }
    Ok((len, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// All (n-1)! tours from point 0; the independent check for Held-Karp.
    fn brute_force_tour(points: &[(f64, f64)]) -> f64 {
        let n = points.len();
        let mut order: Vec<usize> = (1..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut order, 0, points, &mut best);
        best
    }

    fn permute(order: &mut Vec<usize>, k: usize, points: &[(f64, f64)], best: &mut f64) {
        if k == order.len() {
            let mut len = dist(points[0], points[order[0]]);
            for w in order.windows(2) {
                len += dist(points[w[0]], points[w[1]]);
            }
            len += dist(points[*order.last().unwrap()], points[0]);
            *best = best.min(len);
            return;
        }
        for i in k..order.len() {
            order.swap(k, i);
            permute(order, k + 1, points, best);
            order.swap(k, i);
        }
    }

    #[test]
    fn right_triangle_perimeter() {
        let pts = [(0.0, 0.0), (3.0, 0.0), (0.0, 4.0)];
        assert!((tsp_exact(&pts).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn unit_square_perimeter() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        assert!((tsp_exact(&pts).unwrap() - 4.0).abs() < 1e-12);
        assert!((tsp_heuristic(&pts).unwrap().0 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn matches_permutation_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..100 {
            let n = 4 + (trial as usize) % 5;
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen_range(1.0..1000.0), rng.gen_range(1.0..1000.0)))
                .collect();
            let dp = tsp_exact(&pts).unwrap();
            let bf = brute_force_tour(&pts);
            assert!((dp - bf).abs() < 1e-9, "trial {trial}: {dp} vs {bf}");
        }
    }

    #[test]
    fn heuristic_never_beats_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..100 {
            let n = 4 + (trial as usize) % 5;
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen_range(1.0..1000.0), rng.gen_range(1.0..1000.0)))
                .collect();
            let exact = tsp_exact(&pts).unwrap();
            let (heur, approx) = tsp_heuristic(&pts).unwrap();
            assert!(approx);
            assert!(heur >= exact - 1e-9, "trial {trial}: {heur} < {exact}");
        }
    }

    #[test]
    fn collinear_points_are_solved_exactly_by_two_opt() {
        let pts = [(0.0, 0.0), (5.0, 0.0), (1.0, 0.0), (3.0, 0.0)];
        let (heur, _) = tsp_heuristic(&pts).unwrap();
        assert!((heur - 10.0).abs() < 1e-12);
    }

    #[test]
    fn tour_length_is_homogeneous_in_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let pts: Vec<(f64, f64)> = (0..7)
                .map(|_| (rng.gen_range(1.0..1000.0), rng.gen_range(1.0..1000.0)))
                .collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (2.0 * x, 2.0 * y)).collect();
            let a = tsp_exact(&pts).unwrap();
            let b = tsp_exact(&scaled).unwrap();
            assert!((b - 2.0 * a).abs() < 1e-9 * a.max(1.0));
        }
    }

    #[test]
    fn capacity_error_points_at_heuristic() {
        let pts: Vec<(f64, f64)> = (0..17).map(|i| (i as f64, 0.0)).collect();
        let err = tsp_exact(&pts).unwrap_err().to_string();
        assert!(err.contains("tsp_heuristic"), "{err}");
    }
}
