//! Morse decompositions of cell digraphs.
//!
//! Morse sets are the nontrivial strongly connected components (two or more
//! cells, or one cell with a self-loop). Trivial components are dropped from
//! the decomposition but still carry paths, so the partial order is computed
//! on the full condensation.

use std::collections::{BTreeSet, VecDeque};

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{barycenter, CellIndex, GridSpec};
use crate::transitions::Digraph;

const UNSEEN: usize = usize::MAX;

/// Tarjan's algorithm without recursion. Component ids come out in reverse
/// topological order: every condensation edge goes from a larger id to a
/// smaller one.
fn tarjan_with<'a, F>(succ: F, n: usize) -> (Vec<usize>, usize)
where
    F: Fn(usize) -> &'a [usize],
{
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let (mut counter, mut ncomp) = (0usize, 0usize);

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, 0));

        while let Some(frame) = call.last_mut() {
            let v = frame.0;
            let children = succ(v);
            if frame.1 < children.len() {
                let w = children[frame.1];
                frame.1 += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(u, _)) = call.last() {
                low[u] = low[u].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp[w] = ncomp;
                    if w == v {
                        break;
                    }
                }
                ncomp += 1;
            }
        }
    }
    (comp, ncomp)
}

fn components_of(g: &Digraph) -> (Vec<usize>, usize) {
    tarjan_with(|v| g.successors(v), g.node_count())
}

/// Strongly connected components, each sorted, listed by smallest member.
pub fn scc(g: &Digraph) -> Vec<Vec<CellIndex>> {
    let (comp, n) = components_of(g);
    let mut out = vec![Vec::new(); n];
    // nodes are sorted, so each component comes out sorted too
    for (v, &c) in comp.iter().enumerate() {
        out[c].push(g.nodes()[v]);
    }
    out.sort_by_key(|c| c[0]);
    out
}

fn is_nontrivial(g: &Digraph, component: &[CellIndex]) -> bool {
    component.len() > 1
        || g
            .index_of(component[0])
            .map(|v| g.has_self_loop(v))
            .unwrap_or(false)
}

/// Pairs `(a, b)` of positions in `components` such that some path in `g`
/// leads from component `a` to component `b`, `a != b`. Every component must
/// lie inside one strongly connected component of `g`.
pub fn condensation_reachability(
    g: &Digraph,
    components: &[Vec<CellIndex>],
) -> Result<BTreeSet<(usize, usize)>> {
    let (comp, ncomp) = components_of(g);
    let k = components.len();
    // scc id -> position in `components`
    let mut owner = vec![UNSEEN; ncomp];
    let mut scc_of = Vec::with_capacity(k);
    for (pos, set) in components.iter().enumerate() {
        let first = set
            .first()
            .ok_or(Error::Empty("component without cells"))?;
        let v = g
            .index_of(*first)
            .ok_or_else(|| Error::param(format!("cell {first} is not a node")))?;
        let c = comp[v];
        for cell in set {
            match g.index_of(*cell) {
                Some(u) if comp[u] == c => {}
                _ => {
                    return Err(Error::param(format!(
                        "component {pos} is not inside a single strongly connected component"
                    )))
                }
            }
        }
        if owner[c] != UNSEEN {
            return Err(Error::param("two components share a strongly connected component"));
        }
        owner[c] = pos;
        scc_of.push(c);
    }

    let mut cond: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for v in 0..g.node_count() {
        for &w in g.successors(v) {
            if comp[v] != comp[w] {
                cond[comp[v]].push(comp[w]);
            }
        }
    }
    // Reverse topological ids: successors always have smaller ids.
    let mut reach: Vec<FixedBitSet> = Vec::with_capacity(ncomp);
    for succ in &cond {
        let mut r = FixedBitSet::with_capacity(k);
        for &d in succ {
            r.union_with(&reach[d]);
            if owner[d] != UNSEEN {
                r.insert(owner[d]);
            }
        }
        reach.push(r);
    }
    let mut order = BTreeSet::new();
    for (a, &c) in scc_of.iter().enumerate() {
        for b in reach[c].ones() {
            order.insert((a, b));
        }
    }
    Ok(order)
}

/// Unique minimal relation with the same transitive closure as `edges` on
/// nodes `0..n`. Fails if the relation has a cycle.
pub fn transitive_reduction(
    n: usize,
    edges: &BTreeSet<(usize, usize)>,
) -> Result<BTreeSet<(usize, usize)>> {
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(Error::param(format!("edge ({a}, {b}) outside 0..{n}")));
        }
        succ[a].push(b);
        indeg[b] += 1;
    }
    let mut topo = Vec::with_capacity(n);
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    while let Some(v) = queue.pop_front() {
        topo.push(v);
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    if topo.len() < n {
        let node = (0..n).find(|&v| indeg[v] > 0).unwrap_or(0);
        return Err(Error::Cycle { node });
    }
    // reach[v]: nodes reachable from v by a path of length >= 1
    let mut reach = vec![FixedBitSet::with_capacity(n); n];
    for &v in topo.iter().rev() {
        let mut r = FixedBitSet::with_capacity(n);
        for &w in &succ[v] {
            r.insert(w);
            r.union_with(&reach[w]);
        }
        reach[v] = r;
    }
    Ok(edges
        .iter()
        .copied()
        .filter(|&(a, b)| !succ[a].iter().any(|&w| w != b && reach[w].contains(b)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MorseDecomposition {
    /// Morse sets by decreasing size; set `k` is named `MS{k}`.
    sets: Vec<Vec<CellIndex>>,
    /// `(higher, lower)`: a path leads from `higher` down to `lower`.
    order: BTreeSet<(usize, usize)>,
    reduced: BTreeSet<(usize, usize)>,
}

pub fn morse_set_name(k: usize) -> String {
    format!("MS{k}")
}

pub fn morse_decomposition(g: &Digraph) -> MorseDecomposition {
    let mut sets: Vec<Vec<CellIndex>> = scc(g)
        .into_iter()
        .filter(|c| is_nontrivial(g, c))
        .collect();
    sets.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let order = condensation_reachability(g, &sets).expect("sets are strongly connected components");
    let reduced = transitive_reduction(sets.len(), &order).expect("condensation is acyclic");
    MorseDecomposition {
        sets,
        order,
        reduced,
    }
}

impl MorseDecomposition {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[Vec<CellIndex>] {
        &self.sets
    }

    pub fn size(&self, k: usize) -> usize {
        self.sets[k].len()
    }

    pub fn order(&self) -> &BTreeSet<(usize, usize)> {
        &self.order
    }

    pub fn reduced_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.reduced
    }

    /// Sets with no outgoing reduced edge: the sinks of the Morse graph.
    pub fn minimal_sets(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| !self.reduced.iter().any(|&(a, _)| a == k))
            .collect()
    }

    /// Keeps the Morse sets with at least `min_size` cells. Since sets are
    /// ordered by size these form a prefix, so names are unchanged; the
    /// order is restricted and reduced again.
    pub fn with_min_size(&self, min_size: usize) -> MorseDecomposition {
        let keep = self.sets.iter().take_while(|s| s.len() >= min_size).count();
        let order: BTreeSet<(usize, usize)> = self
            .order
            .iter()
            .copied()
            .filter(|&(a, b)| a < keep && b < keep)
            .collect();
        let reduced = transitive_reduction(keep, &order).expect("restriction of a partial order");
        MorseDecomposition {
            sets: self.sets[..keep].to_vec(),
            order,
            reduced,
        }
    }

    /// `{sets: [[cell, ...]], order: [[hi, lo]], reduced: [[hi, lo]]}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data")
    }
}

/// Names of the combinatorial attractor candidates.
pub fn combinatorial_attractors(md: &MorseDecomposition) -> Vec<String> {
    md.minimal_sets().into_iter().map(morse_set_name).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseNode {
    pub name: String,
    pub size: usize,
    pub barycenter: Vec<f64>,
}

/// Morse sets with their geometry, joined by the reduced order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseGraph {
    pub nodes: Vec<MorseNode>,
    pub edges: Vec<(usize, usize)>,
}

impl MorseGraph {
    pub fn new(md: &MorseDecomposition, grid: &GridSpec) -> Result<Self> {
        let nodes = md
            .sets()
            .iter()
            .enumerate()
            .map(|(k, cells)| {
                Ok(MorseNode {
                    name: morse_set_name(k),
                    size: cells.len(),
                    barycenter: barycenter(cells, grid)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MorseGraph {
            nodes,
            edges: md.reduced_edges().iter().copied().collect(),
        })
    }

    /// Longest-path depth from the sources.
    fn depths(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut depth = vec![0usize; n];
        // edges come from a DAG; relax n times at most
        for _ in 0..n {
            let mut changed = false;
            for &(a, b) in &self.edges {
                if depth[b] < depth[a] + 1 {
                    depth[b] = depth[a] + 1;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        depth
    }
}

pub fn export_dot(mg: &MorseGraph) -> String {
    let mut out = String::from("digraph morse {\n");
    if mg.nodes.is_empty() {
        out.push_str("}\n");
        return out;
    }
    out.push_str("  rankdir=TB;\n  node [shape=ellipse];\n");
    for n in &mg.nodes {
        out.push_str(&format!("  {} [label=\"{} ({})\"];\n", n.name, n.name, n.size));
    }
    let depths = mg.depths();
    let max_depth = depths.iter().copied().max().unwrap_or(0);
    for d in 0..=max_depth {
        let names: Vec<&str> = mg
            .nodes
            .iter()
            .zip(&depths)
            .filter(|&(_, &x)| x == d)
            .map(|(n, _)| n.name.as_str())
            .collect();
        out.push_str(&format!("  {{ rank=same; {}; }}\n", names.join("; ")));
    }
    for &(a, b) in &mg.edges {
        out.push_str(&format!("  {} -> {};\n", mg.nodes[a].name, mg.nodes[b].name));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(i: u64) -> CellIndex {
        CellIndex(i)
    }

    fn graph(n: u64, edges: &[(u64, u64)]) -> Digraph {
        Digraph::new((0..n).map(c), edges.iter().map(|&(a, b)| (c(a), c(b)))).unwrap()
    }

    #[test]
    fn scc_examples() {
        let g = graph(3, &[(0, 1), (1, 0)]);
        assert_eq!(scc(&g), vec![vec![c(0), c(1)], vec![c(2)]]);

        let dag = graph(5, &[(0, 1), (1, 2), (0, 3), (3, 4), (2, 4)]);
        assert_eq!(scc(&dag).len(), 5);
    }

    #[test]
    fn decomposition_example() {
        // a <-> b -> c, c has a self-loop
        let g = graph(3, &[(0, 1), (1, 0), (1, 2), (2, 2)]);
        let md = morse_decomposition(&g);
        assert_eq!(md.sets(), &[vec![c(0), c(1)], vec![c(2)]]);
        assert_eq!(md.order().iter().copied().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(md.reduced_edges().iter().copied().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(combinatorial_attractors(&md), vec!["MS1".to_string()]);
    }

    #[test]
    fn decomposition_without_recurrence() {
        let md = morse_decomposition(&graph(4, &[(0, 1), (1, 2), (2, 3)]));
        assert!(md.is_empty());
        assert!(combinatorial_attractors(&md).is_empty());
    }

    #[test]
    fn double_well_shape() {
        // cells 0..9 on a line: sinks {0,1} and {7,8}, source {4}, gradient
        // cells in between.
        let g = graph(
            9,
            &[
                (0, 1), (1, 0), (7, 8), (8, 7), (4, 4),
                (4, 3), (3, 2), (2, 1), (4, 5), (5, 6), (6, 7),
            ],
        );
        let md = morse_decomposition(&g);
        assert_eq!(md.len(), 3);
        assert_eq!(md.sets()[2], vec![c(4)]);
        assert_eq!(
            md.reduced_edges().iter().copied().collect::<Vec<_>>(),
            vec![(2, 0), (2, 1)]
        );
        assert_eq!(combinatorial_attractors(&md), vec!["MS0".to_string(), "MS1".to_string()]);
        let single = morse_decomposition(&graph(2, &[(0, 1), (1, 0)]));
        assert_eq!(combinatorial_attractors(&single), vec!["MS0".to_string()]);
    }

    #[test]
    fn reachability_through_gradient_cells() {
        // MS a = {0,1}, x = 2 trivial, MS b = {3} with loop
        let g = graph(4, &[(0, 1), (1, 0), (1, 2), (2, 3), (3, 3)]);
        let comps = vec![vec![c(0), c(1)], vec![c(3)]];
        assert_eq!(
            condensation_reachability(&g, &comps).unwrap().into_iter().collect::<Vec<_>>(),
            vec![(0, 1)]
        );
        let apart = graph(4, &[(0, 1), (1, 0), (3, 3)]);
        assert!(condensation_reachability(&apart, &comps).unwrap().is_empty());
        assert!(condensation_reachability(&g, &[vec![c(0), c(3)]]).is_err());
    }

    #[test]
    fn reduction_examples() {
        let e: BTreeSet<_> = [(0, 1), (1, 2), (0, 2)].into();
        let r = transitive_reduction(3, &e).unwrap();
        assert_eq!(r, [(0, 1), (1, 2)].into());
        assert_eq!(transitive_reduction(3, &r).unwrap(), r);
        let cyc: BTreeSet<_> = [(0, 1), (1, 0)].into();
        assert!(matches!(transitive_reduction(2, &cyc), Err(Error::Cycle { .. })));
    }

    #[test]
    fn min_size_view_keeps_names() {
        // {0,1} -> {2} (loop) -> {3,4}
        let g = graph(5, &[(0, 1), (1, 0), (1, 2), (2, 2), (2, 3), (3, 4), (4, 3)]);
        let md = morse_decomposition(&g);
        assert_eq!(md.len(), 3);
        assert_eq!(md.sets()[2], vec![c(2)]);
        let big = md.with_min_size(2);
        assert_eq!(big.len(), 2);
        assert_eq!(big.reduced_edges().iter().copied().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn dot_export() {
        let grid = GridSpec::canonical(1, 1.0, 2.0).unwrap();
        let g = graph(3, &[(0, 1), (1, 0), (1, 2), (2, 2)]);
        let mg = MorseGraph::new(&morse_decomposition(&g), &grid).unwrap();
        let dot = export_dot(&mg);
        assert_eq!(dot.matches("label=").count(), 2);
        assert_eq!(dot.matches("->").count(), 1);
        assert!(dot.contains("MS0 [label=\"MS0 (2)\"]"));
        assert_eq!(dot, export_dot(&mg));

        let empty = MorseGraph::new(&morse_decomposition(&graph(2, &[])), &grid).unwrap();
        assert_eq!(export_dot(&empty), "digraph morse {\n}\n");
    }

    #[test]
    fn json_export_shape() {
        let g = graph(3, &[(0, 1), (1, 0), (1, 2), (2, 2)]);
        let v = morse_decomposition(&g).to_json();
        assert_eq!(v, serde_json::json!({"sets": [[0, 1], [2]], "order": [[0, 1]], "reduced": [[0, 1]]}));
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let n = 200_000u64;
        let edges: Vec<(u64, u64)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let comps = scc(&graph(n, &edges));
        assert_eq!(comps.len(), 1);
    }
}
