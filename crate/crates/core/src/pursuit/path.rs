use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::grid::{GridMap, MoveAction, Position};

/// Single-source unit-weight distances over the move graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceField {
    source: usize,
    dist: Vec<Option<u32>>,
    pred: Vec<Option<usize>>,
}

impl DistanceField {
    pub fn source(&self) -> usize {
        self.source
    }

    /// `None` for unreachable states.
    pub fn distance(&self, state: usize) -> Option<u32> {
        self.dist[state]
    }

    pub fn distances(&self) -> &[Option<u32>] {
        &self.dist
    }

    pub fn predecessor(&self, state: usize) -> Option<usize> {
        self.pred[state]
    }

    /// States from the source to `target`, both included.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        self.dist[target]?;
        let mut path = vec![target];
        let mut cur = target;
        while let Some(p) = self.pred[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

/// Dijkstra from `source`; neighbours are relaxed in N, E, S, W order and
/// `Stay` is not an edge.
pub fn dijkstra(map: &GridMap, source: Position) -> DistanceField {
    let n = map.n_states();
    let src = map
        .state_index(source)
        .unwrap_or_else(|| panic!("dijkstra source {source} is not floor"));
    let mut dist: Vec<Option<u32>> = vec![None; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = Some(0);
    heap.push(Reverse((0u32, src)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for (_, q) in map.neighbors(map.position(u)) {
            let v = map.state_index(q).expect("neighbor is floor");
            let nd = d + 1;
            if dist[v].is_none_or(|old| nd < old) {
                dist[v] = Some(nd);
                pred[v] = Some(u);
                heap.push(Reverse((nd, v)));
            }
        }
    }
    DistanceField {
        source: src,
        dist,
        pred,
    }
}

/// First step of a shortest path from `from` toward `target`: the first
/// neighbour in N, E, S, W order that is one step closer. `Stay` when
/// already there or when the target is unreachable.
pub fn next_move(map: &GridMap, from: Position, target: Position) -> MoveAction {
    if from == target {
        return MoveAction::Stay;
    }
    let field = dijkstra(map, target);
    next_move_in(map, &field, from)
}

/// Same as [`next_move`] with a precomputed field rooted at the target.
pub fn next_move_in(map: &GridMap, field: &DistanceField, from: Position) -> MoveAction {
    let Some(here) = map.state_index(from).and_then(|s| field.distance(s)) else {
        return MoveAction::Stay;
    };
    if here == 0 {
        return MoveAction::Stay;
    }
    map.neighbors(from)
        .find(|&(_, q)| {
            map.state_index(q)
                .and_then(|s| field.distance(s))
                .is_some_and(|d| d + 1 == here)
        })
        .map(|(a, _)| a)
        .unwrap_or(MoveAction::Stay)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_map;

    #[test]
    fn source_has_zero_distance() {
        let m = parse_map("P..\n...\nA.G\n").unwrap();
        let f = dijkstra(&m, m.goals().first().copied().unwrap());
        assert_eq!(f.distance(f.source()), Some(0));
        assert_eq!(f.predecessor(f.source()), None);
    }

    #[test]
    fn corridor_distances_are_offsets() {
        let m = parse_map("#######\n#P...G#\n####A##\n#######\n").unwrap();
        let f = dijkstra(&m, Position::new(1, 1));
        for x in 1..6 {
            let s = m.state_index(Position::new(x, 1)).unwrap();
            assert_eq!(f.distance(s), Some(x as u32 - 1));
        }
        let goal = m.state_index(Position::new(5, 1)).unwrap();
        assert_eq!(f.path_to(goal).unwrap().len(), 5);
    }

    #[test]
    fn next_move_basics() {
        let m = parse_map("P..\n...\nA.G\n").unwrap();
        let p = Position::new(1, 1);
        assert_eq!(next_move(&m, p, p), MoveAction::Stay);
        assert_eq!(next_move(&m, p, Position::new(2, 1)), MoveAction::East);
        // Diagonal target: North is tried first.
        assert_eq!(next_move(&m, p, Position::new(2, 0)), MoveAction::North);
    }
}
