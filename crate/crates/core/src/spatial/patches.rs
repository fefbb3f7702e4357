//! Fire patches: maximal 8-connected groups of equally labelled cells.

use std::collections::BTreeMap;

use serde::Serialize;

pub type GridIndex = (i64, i64);

/// Sparse label grid; positions absent from the map are outside the study
/// area.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabelGrid {
    labels: BTreeMap<GridIndex, String>,
}

impl LabelGrid {
    pub fn new() -> LabelGrid {
        LabelGrid::default()
    }

    /// Dense rows; `None` marks an excluded cell.
    pub fn from_rows<S: AsRef<str>>(rows: &[Vec<Option<S>>]) -> LabelGrid {
        let mut grid = LabelGrid::new();
        for (r, row) in rows.iter().enumerate() {
            for (c, label) in row.iter().enumerate() {
                if let Some(l) = label {
                    grid.insert((r as i64, c as i64), l.as_ref());
                }
            }
        }
        grid
    }

    pub fn insert(&mut self, at: GridIndex, label: &str) {
        self.labels.insert(at, label.to_string());
    }

    pub fn get(&self, at: GridIndex) -> Option<&str> {
        self.labels.get(&at).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (GridIndex, &str)> {
        self.labels.iter().map(|(k, v)| (*k, v.as_str()))
    }

    /// Drops every position for which `keep` is false.
    pub fn retain<F: FnMut(GridIndex) -> bool>(&mut self, mut keep: F) {
        self.labels.retain(|k, _| keep(*k));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Patch {
    pub id: usize,
    pub label: String,
    /// Member positions in row-major order.
    pub cells: Vec<GridIndex>,
}

impl Patch {
    pub fn size(&self) -> usize {
        self.cells.len()
    }
}

/// Connected components under 8-adjacency within equal labels. Patch ids
/// follow the row-major position of each patch's first cell.
pub fn build_patches(grid: &LabelGrid) -> Vec<Patch> {
    let mut seen: BTreeMap<GridIndex, bool> = grid.labels.keys().map(|k| (*k, false)).collect();
    let mut patches = Vec::new();
    for (&start, label) in &grid.labels {
        if seen[&start] {
            continue;
        }
        seen.insert(start, true);
        let mut stack = vec![start];
        let mut cells = Vec::new();
        while let Some((r, c)) = stack.pop() {
            cells.push((r, c));
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let nb = (r + dr, c + dc);
                    if (dr, dc) == (0, 0) || grid.get(nb) != Some(label.as_str()) || seen[&nb] {
                        continue;
                    }
                    seen.insert(nb, true);
                    stack.push(nb);
                }
            }
        }
        cells.sort_unstable();
        patches.push(Patch { id: patches.len(), label: label.clone(), cells });
    }
    patches
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> LabelGrid {
        let dense: Vec<Vec<Option<String>>> = rows
            .iter()
            .map(|r| r.chars().map(|c| if c == '.' { None } else { Some(c.to_string()) }).collect())
            .collect();
        LabelGrid::from_rows(&dense)
    }

    #[test]
    fn uniform_block_is_one_patch() {
        let p = build_patches(&grid(&["aaa", "aaa", "aaa"]));
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].size(), 9);
    }

    #[test]
    fn checkerboard_joins_diagonals() {
        let p = build_patches(&grid(&["abab", "baba", "abab", "baba"]));
        assert_eq!(p.len(), 2);
        assert!(p.iter().all(|q| q.size() == 8));
    }

    #[test]
    fn focal_cell_joins_the_cells_below() {
        // r: same class as the focal cell, b: another class, '.': outside
        let g = grid(&["bb.", "brb", "rrr"]);
        let p = build_patches(&g);
        let focal = p.iter().find(|q| q.cells.contains(&(1, 1))).unwrap();
        assert_eq!(focal.cells, vec![(1, 1), (2, 0), (2, 1), (2, 2)]);
        assert!(p.iter().all(|q| !q.cells.contains(&(0, 2))));
        let covered: usize = p.iter().map(Patch::size).sum();
        assert_eq!(covered, g.len());
    }

    #[test]
    fn masked_cells_break_connectivity() {
        let p = build_patches(&grid(&["a.a", "...", "a.a"]));
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn patches_are_connected_and_homogeneous() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let rows: Vec<Vec<Option<String>>> = (0..12)
                .map(|_| {
                    (0..12)
                        .map(|_| {
                            let v = rng.random_range(0..4);
                            (v < 3).then(|| ["x", "y", "z"][v].to_string())
                        })
                        .collect()
                })
                .collect();
            let g = LabelGrid::from_rows(&rows);
            let p = build_patches(&g);
            assert_eq!(p.iter().map(Patch::size).sum::<usize>(), g.len());
            for q in &p {
                assert!(q.cells.iter().all(|&c| g.get(c) == Some(q.label.as_str())));
                // every member after the first touches an earlier-reached member
                let mut reached = vec![q.cells[0]];
                let mut rest: Vec<_> = q.cells[1..].to_vec();
                while !rest.is_empty() {
                    let before = rest.len();
                    rest.retain(|&(r, c)| {
                        let touch = reached.iter().any(|&(a, b)| (a - r).abs() <= 1 && (b - c).abs() <= 1);
                        if touch {
                            reached.push((r, c));
                        }
                        !touch
                    });
                    assert!(rest.len() < before, "patch not connected");
                }
                // maximality: no same-label neighbour outside the patch
                for &(r, c) in &q.cells {
                    for dr in -1..=1 {
                        for dc in -1..=1 {
                            let nb = (r + dr, c + dc);
                            if g.get(nb) == Some(q.label.as_str()) {
                                assert!(q.cells.contains(&nb));
                            }
                        }
                    }
                }
            }
        }
    }
}
