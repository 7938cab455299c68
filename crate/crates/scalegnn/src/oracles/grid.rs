//! Ground truth for grid navigation: BFS over passable cells.

use std::collections::VecDeque;

use super::OracleError;

/// Cells strictly above this height cannot be entered.
pub const IMPASSABLE_HEIGHT: f64 = 0.8;

#[derive(Debug, Clone)]
pub struct GridTruth {
    pub reachable: bool,
    /// Hop count of the shortest path (0 when src == tgt).
    pub hops: usize,
    /// Cell sequence src..=tgt; empty when unreachable.
    pub path: Vec<(usize, usize)>,
}

/// 4-connected BFS from `src` to `tgt` over cells with height <= 0.8.
pub fn grid_truth(
    heights: &[Vec<f64>],
    src: (usize, usize),
    tgt: (usize, usize),
) -> Result<GridTruth, OracleError> {
    let h = heights.len();
    if h == 0 {
        return Err(OracleError::InvalidInput("empty grid".into()));
    }
    let w = heights[0].len();
    if heights.iter().any(|row| row.len() != w) {
        return Err(OracleError::InvalidInput("ragged grid".into()));
    }
    for (name, cell) in [("source", src), ("target", tgt)] {
        if cell.0 >= h || cell.1 >= w {
            return Err(OracleError::InvalidInput(format!("{name} outside grid")));
        }
        if heights[cell.0][cell.1] > IMPASSABLE_HEIGHT {
            return Err(OracleError::InvalidInput(format!(
                "{name} cell is impassable"
            )));
        }
    }

    let idx = |r: usize, c: usize| r * w + c;
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; h * w];
    let mut dist = vec![usize::MAX; h * w];
    dist[idx(src.0, src.1)] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some((r, c)) = queue.pop_front() {
        if (r, c) == tgt {
            break;
        }
        let d = dist[idx(r, c)];
        let neighbours = [
            (r.wrapping_sub(1), c),
            (r + 1, c),
            (r, c.wrapping_sub(1)),
            (r, c + 1),
        ];
        for (nr, nc) in neighbours {
            if nr < h && nc < w && heights[nr][nc] <= IMPASSABLE_HEIGHT && dist[idx(nr, nc)] == usize::MAX
            {
                dist[idx(nr, nc)] = d + 1;
                prev[idx(nr, nc)] = Some((r, c));
                queue.push_back((nr, nc));
            }
        }
    }

    if dist[idx(tgt.0, tgt.1)] == usize::MAX {
        return Ok(GridTruth {
            reachable: false,
            hops: 0,
            path: vec![],
        });
    }
    let mut path = vec![tgt];
    let mut cur = tgt;
    while cur != src {
        cur = prev[idx(cur.0, cur.1)].expect("bfs predecessors form a tree");
        path.push(cur);
    }
    path.reverse();
    Ok(GridTruth {
        reachable: true,
        hops: dist[idx(tgt.0, tgt.1)],
        path,
    })
}
