use std::collections::VecDeque;

use super::SparseSym;

/// Subgraphs at or below this size are ordered as they come.
const LEAF_SIZE: usize = 48;

struct Graph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    fn from_matrix(a: &SparseSym) -> Self {
        let n = a.n();
        let mut deg = vec![0usize; n];
        for (i, j, _) in a.upper_entries() {
            if i != j {
                deg[i] += 1;
                deg[j] += 1;
            }
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + deg[i];
        }
        let mut fill = ptr.clone();
        let mut adj = vec![0usize; ptr[n]];
        for (i, j, _) in a.upper_entries() {
            if i != j {
                adj[fill[i]] = j;
                fill[i] += 1;
                adj[fill[j]] = i;
                fill[j] += 1;
            }
        }
        Graph { ptr, adj }
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }
}

struct State<'g> {
    g: &'g Graph,
    /// Label of the subgraph each vertex currently belongs to.
    owner: Vec<usize>,
    level: Vec<usize>,
    next_label: usize,
    order: Vec<usize>,
}

impl State<'_> {
    /// BFS inside subgraph `label` from `root`; returns visited vertices in
    /// BFS order, with `level` filled in.
    fn bfs(&mut self, root: usize, label: usize) -> Vec<usize> {
        let mut seen = vec![root];
        self.level[root] = 0;
        let mut queue = VecDeque::from([root]);
        let stamp = usize::MAX;
        self.owner[root] = stamp;
        while let Some(v) = queue.pop_front() {
            for &w in self.g.neighbors(v) {
                if self.owner[w] == label {
                    self.owner[w] = stamp;
                    self.level[w] = self.level[v] + 1;
                    queue.push_back(w);
                    seen.push(w);
                }
            }
        }
        for &v in &seen {
            self.owner[v] = label;
        }
        seen
    }

    fn dissect(&mut self, verts: Vec<usize>, label: usize) {
        if verts.len() <= LEAF_SIZE {
            self.order.extend(verts);
            return;
        }
        // pseudo-peripheral root: repeat BFS from the last vertex reached
        let mut comp = self.bfs(verts[0], label);
        if comp.len() < verts.len() {
            let mut parts = Vec::new();
            for &v in &verts {
                if self.owner[v] == label {
                    let c = self.bfs(v, label);
                    let l = self.fresh();
                    for &w in &c {
                        self.owner[w] = l;
                    }
                    parts.push((c, l));
                }
            }
            for (c, l) in parts {
                self.dissect(c, l);
            }
            return;
        }
        for _ in 0..3 {
            let far = *comp.last().unwrap();
            let depth = self.level[far];
            comp = self.bfs(far, label);
            if self.level[*comp.last().unwrap()] <= depth {
                break;
            }
        }
        let max_level = self.level[*comp.last().unwrap()];
        if max_level < 2 {
            self.order.extend(comp);
            return;
        }
        // separator level: first level where the cumulative count passes half
        let mut count = vec![0usize; max_level + 1];
        for &v in &comp {
            count[self.level[v]] += 1;
        }
        let half = comp.len() / 2;
        let mut acc = 0;
        let mut sep_level = 1;
        for (l, c) in count.iter().enumerate() {
            acc += c;
            if acc >= half {
                sep_level = l.clamp(1, max_level - 1);
                break;
            }
        }
        let (la, lb, ls) = (self.fresh(), self.fresh(), self.fresh());
        for &v in &comp {
            let l = self.level[v];
            self.owner[v] = if l < sep_level {
                la
            } else if l > sep_level {
                lb
            } else {
                ls
            };
        }
        // separator vertices without neighbors beyond move to the near side
        for &v in &comp {
            if self.owner[v] == ls && !self.g.neighbors(v).iter().any(|&w| self.owner[w] == lb) {
                self.owner[v] = la;
            }
        }
        let mut part_a = Vec::new();
        let mut part_b = Vec::new();
        let mut sep = Vec::new();
        for &v in &comp {
            let o = self.owner[v];
            if o == la {
                part_a.push(v);
            } else if o == lb {
                part_b.push(v);
            } else {
                sep.push(v);
            }
        }
        self.dissect(part_a, la);
        self.dissect(part_b, lb);
        self.order.extend(sep);
    }

    fn fresh(&mut self) -> usize {
        self.next_label += 1;
        self.next_label
    }
}

/// Fill-reducing nested-dissection ordering from BFS level-set separators.
/// Returns `perm` with `perm[new] = old`.
pub fn nested_dissection(a: &SparseSym) -> Vec<usize> {
    let n = a.n();
    let g = Graph::from_matrix(a);
    let mut st = State { g: &g, owner: vec![0; n], level: vec![0; n], next_label: 0, order: Vec::with_capacity(n) };
    st.dissect((0..n).collect(), 0);
    debug_assert_eq!(st.order.len(), n);
    st.order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletBuilder;

    fn grid(m: usize) -> SparseSym {
        let n = m * m;
        let mut b = TripletBuilder::new(n);
        for i in 0..m {
            for j in 0..m {
                let v = i * m + j;
                b.add(v, v, 4.0);
                if i + 1 < m {
                    b.add(v, v + m, -1.0);
                }
                if j + 1 < m {
                    b.add(v, v + 1, -1.0);
                }
            }
        }
        b.finalize()
    }

    #[test]
    fn is_permutation() {
        for m in [1, 3, 10, 40] {
            let p = nested_dissection(&grid(m));
            let mut s = p.clone();
            s.sort_unstable();
            assert_eq!(s, (0..m * m).collect::<Vec<_>>());
        }
    }

    #[test]
    fn disconnected_graph() {
        let mut b = TripletBuilder::new(200);
        for i in 0..200 {
            b.add(i, i, 1.0);
        }
        let p = nested_dissection(&b.finalize());
        assert_eq!(p.len(), 200);
    }
}
