//! Optimal spanning arborescences (Chu-Liu/Edmonds).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimize {
    Max,
    Min,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arborescence {
    pub root: usize,
    /// parent[root] = None
    pub parent: Vec<Option<usize>>,
    pub weight: f64,
}

impl Arborescence {
    /// In-degree ≤ 1, root has none, every node reaches the root.
    pub fn is_valid(&self) -> bool {
        let n = self.parent.len();
        if self.parent.get(self.root) != Some(&None) {
            return false;
        }
        (0..n).all(|v| {
            let mut u = v;
            for _ in 0..=n {
                match self.parent[u] {
                    None => return u == self.root,
                    Some(p) => u = p,
                }
            }
            false
        })
    }
}

#[derive(Clone, Copy)]
struct E {
    from: usize,
    to: usize,
    w: f64,
    // tie-break key: original (from, to)
    key: (usize, usize),
    id: usize,
}

fn better(a: &E, b: &E) -> bool {
    (a.w, a.key) < (b.w, b.key)
}

/// Minimum-weight arborescence on nodes 0..n; returns chosen edge ids.
fn solve_min(n: usize, root: usize, edges: &[E]) -> Result<Vec<usize>> {
    let mut best: Vec<Option<E>> = vec![None; n];
    for e in edges {
        if e.to == root || e.from == e.to {
            continue;
        }
        if best[e.to].is_none_or(|b| better(e, &b)) {
            best[e.to] = Some(*e);
        }
    }
    for v in 0..n {
        if v != root && best[v].is_none() {
            return Err(Error::Contract(format!("node {v} unreachable from the root")));
        }
    }
    // find a cycle among the chosen in-edges
    let mut color = vec![0u8; n]; // 0 unvisited, 1 on stack, 2 done
    let mut cycle: Option<Vec<usize>> = None;
    'outer: for s in 0..n {
        let mut path = Vec::new();
        let mut u = s;
        while color[u] == 0 {
            color[u] = 1;
            path.push(u);
            if u == root {
                break;
            }
            u = best[u].unwrap().from;
        }
        if color[u] == 1 && u != root {
            let pos = path.iter().position(|&x| x == u).unwrap();
            cycle = Some(path[pos..].to_vec());
            break 'outer;
        }
        for &p in &path {
            color[p] = 2;
        }
    }
    let Some(cycle) = cycle else {
        return Ok((0..n).filter(|&v| v != root).map(|v| best[v].unwrap().id).collect());
    };

    // contract the cycle into a single node
    let mut in_cycle = vec![false; n];
    for &v in &cycle {
        in_cycle[v] = true;
    }
    let mut map = vec![0usize; n];
    let mut k = 0;
    for v in 0..n {
        if !in_cycle[v] {
            map[v] = k;
            k += 1;
        }
    }
    let c = k;
    for &v in &cycle {
        map[v] = c;
    }
    let mut contracted = Vec::with_capacity(edges.len());
    for e in edges {
        let (fi, ti) = (in_cycle[e.from], in_cycle[e.to]);
        if fi && ti {
            continue;
        }
        let w = if ti { e.w - best[e.to].unwrap().w } else { e.w };
        contracted.push(E {
            from: map[e.from],
            to: map[e.to],
            w,
            key: e.key,
            id: e.id,
        });
    }
    let chosen = solve_min(k + 1, map[root], &contracted)?;
    let by_id = |id: usize| edges.iter().find(|e| e.id == id).copied().unwrap();
    let mut out = Vec::with_capacity(n - 1);
    let mut entry_target = None;
    for id in chosen {
        let e = by_id(id);
        if in_cycle[e.to] {
            entry_target = Some(e.to);
        }
        out.push(id);
    }
    let entry = entry_target.expect("contracted node has an entering edge");
    for &v in &cycle {
        if v != entry {
            out.push(best[v].unwrap().id);
        }
    }
    Ok(out)
}

/// Optimal spanning arborescence rooted at `root`. Ties are broken by the
/// lexicographic order of (weight, source, target) of incoming edges.
pub fn edmonds_arborescence(n: usize, root: usize, edges: &[Edge], mode: Optimize) -> Result<Arborescence> {
    if root >= n {
        return Err(Error::Shape(format!("root {root} out of range for {n} nodes")));
    }
    if let Some(e) = edges.iter().find(|e| e.from >= n || e.to >= n || !e.w.is_finite()) {
        return Err(Error::Shape(format!("bad edge {e:?}")));
    }
    let sign = if mode == Optimize::Max { -1.0 } else { 1.0 };
    let es: Vec<E> = edges
        .iter()
        .enumerate()
        .map(|(id, e)| E {
            from: e.from,
            to: e.to,
            w: sign * e.w,
            key: (e.from, e.to),
            id,
        })
        .collect();
    let chosen = solve_min(n, root, &es)?;
    let mut parent = vec![None; n];
    let mut weight = 0.0;
    for id in chosen {
        parent[edges[id].to] = Some(edges[id].from);
        weight += edges[id].w;
    }
    Ok(Arborescence { root, parent, weight })
}

/// Exhaustive optimum over all parent choices. Exponential; tests only.
pub fn brute_force_arborescence(n: usize, root: usize, edges: &[Edge], mode: Optimize) -> Option<f64> {
    let incoming: Vec<Vec<&Edge>> = (0..n)
        .map(|v| edges.iter().filter(|e| e.to == v && e.from != v).collect())
        .collect();
    let nodes: Vec<usize> = (0..n).filter(|&v| v != root).collect();
    let mut idx = vec![0usize; nodes.len()];
    if nodes.iter().any(|&v| incoming[v].is_empty()) {
        return None;
    }
    let mut best: Option<f64> = None;
    loop {
        let mut parent = vec![None; n];
        let mut w = 0.0;
        for (k, &v) in nodes.iter().enumerate() {
            let e = incoming[v][idx[k]];
            parent[v] = Some(e.from);
            w += e.w;
        }
        if (Arborescence {
            root,
            parent,
            weight: w,
        })
        .is_valid()
        {
            best = Some(match (best, mode) {
                (None, _) => w,
                (Some(b), Optimize::Max) => b.max(w),
                (Some(b), Optimize::Min) => b.min(w),
            });
        }
        let mut k = 0;
        loop {
            if k == nodes.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < incoming[nodes[k]].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
