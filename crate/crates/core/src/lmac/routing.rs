//! Static minimum-hop routing over the unit-disk connectivity graph.
//!
//! One breadth-first search per destination yields hop distances; the next
//! hop from a node is its lowest-id neighbor one hop closer to the
//! destination. Unreachable pairs stay unrouted and the traffic generator
//! skips them.

use std::collections::VecDeque;

use crate::geometry::Connectivity;

/// Next-hop table: `next_hop[node][dst]`.
#[derive(Debug, Clone)]
pub struct RoutingTable {
    next_hop: Vec<Vec<Option<usize>>>,
}

impl RoutingTable {
    pub fn compute(conn: &Connectivity) -> Self {
        let n = conn.len();
        let mut next_hop = vec![vec![None; n]; n];
        for dst in 0..n {
            // Hop distance to dst; BFS visits neighbors in ascending id.
            let mut dist = vec![usize::MAX; n];
            dist[dst] = 0;
            let mut queue = VecDeque::from([dst]);
            while let Some(u) = queue.pop_front() {
                for &v in conn.neighbors(u) {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            for u in 0..n {
                if u == dst || dist[u] == usize::MAX {
                    continue;
                }
                // Lowest-id neighbor strictly closer to the destination.
                next_hop[u][dst] = conn
                    .neighbors(u)
                    .iter()
                    .copied()
                    .find(|&v| dist[v] + 1 == dist[u]);
            }
        }
        Self { next_hop }
    }

    /// Next hop from `node` toward `dst`; `None` when unreachable (or when
    /// node == dst).
    pub fn next_hop(&self, node: usize, dst: usize) -> Option<usize> {
        self.next_hop[node][dst]
    }

    pub fn reachable(&self, node: usize, dst: usize) -> bool {
        node != dst && self.next_hop[node][dst].is_some()
    }

    pub fn n_nodes(&self) -> usize {
        self.next_hop.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Position;

    fn table(points: &[(f64, f64)], range: f64) -> RoutingTable {
        let pos: Vec<Position> = points.iter().map(|&(x, y)| Position::new(x, y)).collect();
        RoutingTable::compute(&Connectivity::build(&pos, range))
    }

    #[test]
    fn adjacent_nodes_route_directly() {
        let t = table(&[(0.0, 0.0), (100.0, 0.0)], 250.0);
        assert_eq!(t.next_hop(0, 1), Some(1));
        assert_eq!(t.next_hop(1, 0), Some(0));
    }

    #[test]
    fn three_node_chain_routes_through_middle() {
        let t = table(&[(0.0, 0.0), (200.0, 0.0), (400.0, 0.0)], 250.0);
        assert_eq!(t.next_hop(0, 2), Some(1));
        assert_eq!(t.next_hop(1, 2), Some(2));
        assert_eq!(t.next_hop(2, 0), Some(1));
    }

    #[test]
    fn disconnected_pair_is_unrouted() {
        let t = table(&[(0.0, 0.0), (1000.0, 0.0)], 250.0);
        assert_eq!(t.next_hop(0, 1), None);
        assert!(!t.reachable(0, 1));
        assert!(!t.reachable(0, 0));
    }

    #[test]
    fn ties_break_to_lowest_id() {
        // Nodes 1 and 2 both bridge 0 and 3 at equal hop count.
        let t = table(&[(0.0, 0.0), (200.0, 10.0), (200.0, -10.0), (400.0, 0.0)], 250.0);
        assert_eq!(t.next_hop(0, 3), Some(1));
        assert_eq!(t.next_hop(3, 0), Some(1));
    }
}
