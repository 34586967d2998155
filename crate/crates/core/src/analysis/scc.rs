//! Strongly connected component condensation of the dependency graph.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::model::VariableId;

/// Condenses the graph on `n_vars` nodes into strongly connected components
/// listed in topological order (edge sources before targets).
///
/// Among components that are ready at the same time, the one containing the
/// lowest variable index goes first, so an edgeless graph lists variables in
/// declaration order. Members of a component are sorted by `member_key`
/// (the writing constraint's index), then by variable index.
pub fn build_scc_order(
    edges: &[(VariableId, VariableId)],
    n_vars: usize,
    member_key: impl Fn(VariableId) -> Option<usize>,
) -> Vec<Vec<VariableId>> {
    let mut adj = vec![Vec::new(); n_vars];
    for &(from, to) in edges {
        adj[from.index()].push(to.index());
    }
    let comp_of = tarjan(&adj);
    let n_comps = comp_of.iter().copied().max().map_or(0, |m| m + 1);

    let mut members: Vec<Vec<VariableId>> = vec![Vec::new(); n_comps];
    for (v, &c) in comp_of.iter().enumerate() {
        members[c].push(VariableId(v as u32));
    }

    let mut indegree = vec![0usize; n_comps];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n_comps];
    for (from, targets) in adj.iter().enumerate() {
        for &to in targets {
            let (a, b) = (comp_of[from], comp_of[to]);
            if a != b {
                succ[a].push(b);
                indegree[b] += 1;
            }
        }
    }

    // Members were pushed in index order, so members[c][0] is the minimum.
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..n_comps)
        .filter(|&c| indegree[c] == 0)
        .map(|c| Reverse((members[c][0].index(), c)))
        .collect();
    let mut order = Vec::with_capacity(n_comps);
    while let Some(Reverse((_, c))) = ready.pop() {
        for &s in &succ[c] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(Reverse((members[s][0].index(), s)));
            }
        }
        let mut comp = std::mem::take(&mut members[c]);
        comp.sort_by_key(|&v| (member_key(v).unwrap_or(usize::MAX), v));
        order.push(comp);
    }
    debug_assert_eq!(order.len(), n_comps);
    order
}

/// Iterative Tarjan; returns the component id of every node.
fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    const UNVISITED: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp_of = vec![UNVISITED; n];
    let mut next_index = 0;
    let mut next_comp = 0;
    // (node, position in its adjacency list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp_of[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp_of
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(i: u32) -> VariableId {
        VariableId(i)
    }

    fn ids(order: &[Vec<VariableId>]) -> Vec<Vec<u32>> {
        order.iter().map(|c| c.iter().map(|v| v.0).collect()).collect()
    }

    #[test]
    fn chain() {
        let order = build_scc_order(&[(v(0), v(1)), (v(1), v(2))], 3, |_| None);
        assert_eq!(ids(&order), [[0], [1], [2]]);
    }

    #[test]
    fn two_cycle_then_tail() {
        let order = build_scc_order(&[(v(0), v(1)), (v(1), v(0)), (v(1), v(2))], 3, |_| None);
        assert_eq!(ids(&order), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn edgeless_graph_in_declaration_order() {
        let order = build_scc_order(&[], 3, |_| None);
        assert_eq!(ids(&order), [[0], [1], [2]]);
    }

    #[test]
    fn members_sorted_by_writer_index() {
        // writer of 0 is constraint 1, writer of 1 is constraint 0
        let order = build_scc_order(&[(v(0), v(1)), (v(1), v(0))], 2, |x| Some(1 - x.index()));
        assert_eq!(ids(&order), vec![vec![1, 0]]);
    }

    #[test]
    fn reverse_declared_dependency() {
        // 2 feeds 0: 2 must precede 0 despite the higher index.
        let order = build_scc_order(&[(v(2), v(0))], 3, |_| None);
        assert_eq!(ids(&order), [[1], [2], [0]]);
    }

    /// Reachability oracle: transitive closure by repeated relaxation.
    #[allow(clippy::needless_range_loop)]
    fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            reach[i][i] = true;
        }
        for &(a, b) in edges {
            reach[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        reach
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn partitions_match_reachability_oracle(
            n in 1usize..=50,
            raw in prop::collection::vec((0usize..50, 0usize..50), 0..150),
        ) {
            let edges: Vec<_> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            let typed: Vec<_> = edges.iter().map(|&(a, b)| (v(a as u32), v(b as u32))).collect();
            let order = build_scc_order(&typed, n, |_| None);
            let reach = closure(n, &edges);

            let mut comp = vec![usize::MAX; n];
            for (ci, c) in order.iter().enumerate() {
                for m in c {
                    prop_assert_eq!(comp[m.index()], usize::MAX);
                    comp[m.index()] = ci;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let same = reach[i][j] && reach[j][i];
                    prop_assert_eq!(same, comp[i] == comp[j], "nodes {} {}", i, j);
                }
            }
            for &(a, b) in &edges {
                prop_assert!(comp[a] <= comp[b], "edge {}->{} violates order", a, b);
            }
        }
    }
}
