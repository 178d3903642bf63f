//! Energy landscape on an enumerated state space: communication heights,
//! stability levels, metastable sets and the cycle filtration.
//!
//! The transition graph is complete, so every algorithm here walks rows of
//! transition energies produced by [`StateSpace::transition_row`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::energy::{Level, ENERGY_TOL};
use crate::error::{Error, Result};
use crate::space::StateSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeightMethod {
    BottleneckSearch,
    ThresholdOracle,
}

/// Per-state energies, trap flags and stability levels for one field value.
#[derive(Clone, Debug)]
pub struct Landscape<'a> {
    space: &'a StateSpace,
    h: f64,
    energy: Vec<f64>,
    trap: Vec<bool>,
    stability: Vec<f64>,
    ground: usize,
}

impl<'a> Landscape<'a> {
    pub fn new(space: &'a StateSpace, h: f64) -> Result<Self> {
        crate::kernel::check_field(h)?;
        let energy: Vec<f64> = (0..space.len()).map(|x| space.energy(x, h)).collect();
        let trap = (0..space.len()).map(|x| space.is_trap(x)).collect();
        let ground = argmin(&energy);
        let mst = prim_mst(space, h);
        let stability = stability_from_mst(&energy, &mst);
        Ok(Landscape {
            space,
            h,
            energy,
            trap,
            stability,
            ground,
        })
    }

    pub fn space(&self) -> &StateSpace {
        self.space
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.energy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energy.is_empty()
    }

    pub fn energy(&self, x: usize) -> f64 {
        self.energy[x]
    }

    pub fn energies(&self) -> &[f64] {
        &self.energy
    }

    pub fn is_trap(&self, x: usize) -> bool {
        self.trap[x]
    }

    pub fn traps(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.trap[x]).collect()
    }

    /// `V_x`, `+inf` for the ground state.
    pub fn stability_level(&self, x: usize) -> f64 {
        self.stability[x]
    }

    pub fn stability_levels(&self) -> &[f64] {
        &self.stability
    }

    pub fn ground_state(&self) -> usize {
        self.ground
    }

    pub fn transition(&self, x: usize, y: usize) -> f64 {
        self.space.transition(x, y, self.h)
    }

    /// `Phi(x, A)` by a minimax best-first search from `x`.
    pub fn bottleneck_to_set(&self, x: usize, target: &[bool]) -> f64 {
        bottleneck_search(self.space, self.h, x, target)
    }

    pub fn comm_height(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return self.energy[x];
        }
        let mut target = vec![false; self.len()];
        target[y] = true;
        self.bottleneck_to_set(x, &target)
    }

    /// `Phi(A, B)`: minimum of `Phi(a, B)` over `a` in `A`.
    pub fn comm_height_sets(&self, a: &[usize], b: &[usize]) -> f64 {
        let mut target = vec![false; self.len()];
        for &y in b {
            target[y] = true;
        }
        a.iter()
            .map(|&x| {
                if target[x] {
                    self.energy[x]
                } else {
                    self.bottleneck_to_set(x, &target)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `V_x` recomputed by a single search towards `I_x`.
    pub fn stability_by_search(&self, x: usize) -> f64 {
        let hx = self.energy[x];
        let target: Vec<bool> = self.energy.iter().map(|&e| e < hx - ENERGY_TOL).collect();
        if !target.iter().any(|&t| t) {
            return f64::INFINITY;
        }
        self.bottleneck_to_set(x, &target) - hx
    }

    pub fn metastable(&self) -> MetastableSets {
        let ground: Vec<usize> = (0..self.len())
            .filter(|&x| self.stability[x].is_infinite())
            .collect();
        let gamma_m = self
            .stability
            .iter()
            .filter(|v| v.is_finite())
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let metastable = (0..self.len())
            .filter(|&x| (self.stability[x] - gamma_m).abs() <= ENERGY_TOL)
            .collect();
        MetastableSets {
            gamma_m,
            ground,
            metastable,
        }
    }

    /// `X_V = {x : V_x > v}`.
    pub fn level_set(&self, v: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&x| self.stability[x] > v + ENERGY_TOL)
            .collect()
    }

    pub fn filtration(&self) -> Filtration {
        cycle_filtration(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetastableSets {
    pub gamma_m: f64,
    pub ground: Vec<usize>,
    pub metastable: Vec<usize>,
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &e) in v.iter().enumerate() {
        if e < v[best] {
            best = i;
        }
    }
    best
}

/// Minimax best-first search from `x` to the first state in `target`.
/// Keys start at the direct edges, which bound every answer from above.
pub fn bottleneck_search(space: &StateSpace, h: f64, x: usize, target: &[bool]) -> f64 {
    let n = space.len();
    if target[x] {
        return space.energy(x, h);
    }
    let mut scratch = vec![Level::ZERO; n];
    let mut row = vec![0.0; n];
    let mut key = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    space.transition_row(x, h, &mut scratch, &mut row);
    key.copy_from_slice(&row);
    done[x] = true;
    loop {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for v in 0..n {
            if !done[v] && key[v] < best {
                best = key[v];
                u = v;
            }
        }
        if u == usize::MAX {
            return f64::INFINITY;
        }
        if target[u] {
            return best;
        }
        done[u] = true;
        space.transition_row(u, h, &mut scratch, &mut row);
        for v in 0..n {
            if !done[v] {
                let k = row[v].max(best);
                if k < key[v] {
                    key[v] = k;
                }
            }
        }
    }
}

/// Minimum spanning tree of the complete transition graph as
/// `(weight, u, v)` edges.
pub fn prim_mst(space: &StateSpace, h: f64) -> Vec<(f64, usize, usize)> {
    let n = space.len();
    let mut scratch = vec![Level::ZERO; n];
    let mut row = vec![0.0; n];
    let mut key = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut u = 0;
    for _ in 0..n {
        done[u] = true;
        if parent[u] != usize::MAX {
            edges.push((key[u], parent[u], u));
        }
        space.transition_row(u, h, &mut scratch, &mut row);
        let mut next = usize::MAX;
        let mut best = f64::INFINITY;
        for v in 0..n {
            if done[v] {
                continue;
            }
            if row[v] < key[v] {
                key[v] = row[v];
                parent[v] = u;
            }
            if key[v] < best {
                best = key[v];
                next = v;
            }
        }
        if next == usize::MAX {
            break;
        }
        u = next;
    }
    edges
}

/// Groups sorted weights into tie batches within [`ENERGY_TOL`].
fn tie_batches<T>(sorted: &[(f64, T)]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let w = sorted[start].0;
        let mut end = start + 1;
        while end < sorted.len() && sorted[end].0 <= w + ENERGY_TOL {
            end += 1;
        }
        out.push((start, end));
        start = end;
    }
    out
}

#[derive(Clone, Debug)]
struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// Returns the surviving root, or `None` if already joined.
    fn union(&mut self, a: usize, b: usize) -> Option<(usize, usize)> {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        Some((ra, rb))
    }
}

/// `V_x` for every state from a Kruskal sweep over MST edges; a state
/// resolves at the first threshold where its component holds a strictly
/// lower energy.
fn stability_from_mst(energy: &[f64], mst: &[(f64, usize, usize)]) -> Vec<f64> {
    let n = energy.len();
    let mut v = vec![f64::INFINITY; n];
    let mut edges: Vec<(f64, (usize, usize))> = mst.iter().map(|&(w, a, b)| (w, (a, b))).collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut dsu = Dsu::new(n);
    let mut min_h = energy.to_vec();
    let mut pending: Vec<Vec<usize>> = (0..n).map(|x| vec![x]).collect();
    for (s, e) in tie_batches(&edges) {
        let t = edges[e - 1].0;
        let mut touched = Vec::new();
        for &(_, (a, b)) in &edges[s..e] {
            if let Some((keep, gone)) = dsu.union(a, b) {
                min_h[keep] = min_h[keep].min(min_h[gone]);
                let moved = std::mem::take(&mut pending[gone]);
                pending[keep].extend(moved);
                touched.push(keep);
            }
        }
        for r in touched {
            let r = dsu.find(r);
            let m = min_h[r];
            let list = std::mem::take(&mut pending[r]);
            let mut keep = Vec::with_capacity(list.len());
            for x in list {
                if m < energy[x] - ENERGY_TOL {
                    v[x] = t - energy[x];
                } else {
                    keep.push(x);
                }
            }
            pending[r] = keep;
        }
    }
    v
}

/// Union-find sweep over the full sorted edge multiset, recording the
/// component structure after each distinct threshold.
#[derive(Clone, Debug)]
pub struct ThresholdOracle {
    energy: Vec<f64>,
    thresholds: Vec<f64>,
    /// `labels[k][x]`: component of `x` once all edges up to `thresholds[k]` are in.
    labels: Vec<Vec<u32>>,
    /// `comp_min[k][x]`: minimal energy in that component.
    comp_min: Vec<Vec<f64>>,
}

impl ThresholdOracle {
    pub fn new(space: &StateSpace, h: f64) -> Self {
        let n = space.len();
        let energy: Vec<f64> = (0..n).map(|x| space.energy(x, h)).collect();
        let mut row = vec![Level::ZERO; n];
        // Bucket edges by exact level; levels that collapse to the same
        // float threshold are merged below.
        let mut buckets: BTreeMap<Level, Vec<(u32, u32)>> = BTreeMap::new();
        for x in 0..n {
            space.delta_row(x, &mut row);
            let hx = space.level(x);
            for (y, d) in row.iter().enumerate().skip(x + 1) {
                buckets.entry(hx + *d).or_default().push((x as u32, y as u32));
            }
        }
        let mut levels: Vec<(f64, Vec<(u32, u32)>)> = buckets
            .into_iter()
            .map(|(l, e)| (l.value(h), e))
            .collect();
        levels.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut dsu = Dsu::new(n);
        let mut min_h = energy.clone();
        let mut thresholds = Vec::new();
        let mut labels = Vec::new();
        let mut comp_min = Vec::new();
        let weights: Vec<(f64, ())> = levels.iter().map(|l| (l.0, ())).collect();
        for (s, e) in tie_batches(&weights) {
            let mut changed = false;
            for (_, edges) in &levels[s..e] {
                for &(a, b) in edges {
                    if let Some((keep, gone)) = dsu.union(a as usize, b as usize) {
                        min_h[keep] = min_h[keep].min(min_h[gone]);
                        changed = true;
                    }
                }
            }
            if changed || thresholds.is_empty() {
                let lab: Vec<u32> = (0..n).map(|x| dsu.find(x) as u32).collect();
                let mins = lab.iter().map(|&r| min_h[r as usize]).collect();
                thresholds.push(levels[e - 1].0);
                labels.push(lab);
                comp_min.push(mins);
            }
        }
        ThresholdOracle {
            energy,
            thresholds,
            labels,
            comp_min,
        }
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// First index where `pred` holds; `pred` must be monotone.
    fn first_index(&self, pred: impl Fn(usize) -> bool) -> Option<usize> {
        let (mut lo, mut hi) = (0, self.thresholds.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if pred(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        (lo < self.thresholds.len()).then_some(lo)
    }

    pub fn comm_height(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return self.energy[x];
        }
        match self.first_index(|k| self.labels[k][x] == self.labels[k][y]) {
            Some(k) => self.thresholds[k],
            None => f64::INFINITY,
        }
    }

    pub fn stability_level(&self, x: usize) -> f64 {
        let hx = self.energy[x];
        match self.first_index(|k| self.comp_min[k][x] < hx - ENERGY_TOL) {
            Some(k) => self.thresholds[k] - hx,
            None => f64::INFINITY,
        }
    }
}

/// `Phi(x, y)` by the requested method.
pub fn comm_height(
    landscape: &Landscape,
    oracle: Option<&ThresholdOracle>,
    x: usize,
    y: usize,
    method: HeightMethod,
) -> Result<f64> {
    match method {
        HeightMethod::BottleneckSearch => Ok(landscape.comm_height(x, y)),
        HeightMethod::ThresholdOracle => oracle
            .map(|o| o.comm_height(x, y))
            .ok_or_else(|| Error::Param("threshold oracle not built".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub threshold: f64,
    /// Smallest state id of each component that took part in the merge.
    pub components: Vec<usize>,
    /// `threshold - min H` of each merging component, in the same order.
    pub depths: Vec<f64>,
    pub sizes: Vec<usize>,
    pub joins_ground: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Filtration {
    pub events: Vec<MergeEvent>,
    /// Maximal depth of the cycles partitioning `X \ {s}`.
    pub max_depth_without_ground: f64,
    /// Depth of the component of each state at the moment it joined the
    /// ground state's component.
    pub depth_at_join: Vec<f64>,
}

/// Kruskal filtration over the MST. Edges of equal weight are merged in
/// one step, so every component before a step is an energy cycle whose
/// exit height is the step's threshold.
pub fn cycle_filtration(landscape: &Landscape) -> Filtration {
    let n = landscape.len();
    let mst = prim_mst(landscape.space(), landscape.h());
    let mut edges: Vec<(f64, (usize, usize))> = mst.iter().map(|&(w, a, b)| (w, (a, b))).collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let energy = landscape.energies();
    let s = landscape.ground_state();
    let mut dsu = Dsu::new(n);
    let mut min_h = energy.to_vec();
    let mut low_id: Vec<usize> = (0..n).collect();
    let mut members: Vec<Vec<usize>> = (0..n).map(|x| vec![x]).collect();
    let mut depth_at_join = vec![f64::NAN; n];
    depth_at_join[s] = f64::INFINITY;
    let mut events = Vec::new();
    let mut max_depth = f64::NEG_INFINITY;
    for (a, b) in tie_batches(&edges) {
        let t = edges[b - 1].0;
        // Group the current roots touched by this batch without merging yet.
        let roots: Vec<(usize, usize)> = edges[a..b]
            .iter()
            .map(|&(_, (u, v))| (dsu.find(u), dsu.find(v)))
            .collect();
        let mut index: BTreeMap<usize, usize> = BTreeMap::new();
        for &(ru, rv) in &roots {
            let k = index.len();
            index.entry(ru).or_insert(k);
            let k = index.len();
            index.entry(rv).or_insert(k);
        }
        let keys: Vec<usize> = index.keys().copied().collect();
        let mut local = Dsu::new(keys.len());
        for &(ru, rv) in &roots {
            local.union(index[&ru], index[&rv]);
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, &r) in keys.iter().enumerate() {
            groups.entry(local.find(k)).or_default().push(r);
        }
        let ground_root = dsu.find(s);
        for olds in groups.values() {
            if olds.len() < 2 {
                continue;
            }
            let joins_ground = olds.contains(&ground_root);
            let mut comps = Vec::new();
            let mut depths = Vec::new();
            let mut sizes = Vec::new();
            for &r in olds {
                let d = t - min_h[r];
                comps.push(low_id[r]);
                sizes.push(dsu.size[r]);
                depths.push(d);
                if joins_ground && r != ground_root {
                    max_depth = max_depth.max(d);
                    for &x in &members[r] {
                        depth_at_join[x] = d;
                    }
                }
            }
            events.push(MergeEvent {
                threshold: t,
                components: comps,
                depths,
                sizes,
                joins_ground,
            });
        }
        for (ru, rv) in roots {
            if let Some((keep, gone)) = dsu.union(ru, rv) {
                min_h[keep] = min_h[keep].min(min_h[gone]);
                low_id[keep] = low_id[keep].min(low_id[gone]);
                let moved = std::mem::take(&mut members[gone]);
                members[keep].extend(moved);
            }
        }
    }
    Filtration {
        events,
        max_depth_without_ground: max_depth,
        depth_at_join,
    }
}

/// Trap-only waypoint oracle for `Gamma_m`: minimax closure over the
/// complete graph restricted to traps. Its values bound the true
/// communication heights from above.
pub fn trap_waypoint_gamma(landscape: &Landscape) -> f64 {
    let traps = landscape.traps();
    let k = traps.len();
    let mut m = vec![0.0; k * k];
    for (i, &a) in traps.iter().enumerate() {
        for (j, &b) in traps.iter().enumerate() {
            m[i * k + j] = landscape.transition(a, b);
        }
    }
    for p in 0..k {
        for i in 0..k {
            let ip = m[i * k + p];
            for j in 0..k {
                let c = ip.max(m[p * k + j]);
                if c < m[i * k + j] {
                    m[i * k + j] = c;
                }
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    for (i, &a) in traps.iter().enumerate() {
        let ha = landscape.energy(a);
        let mut reach = f64::INFINITY;
        for (j, &b) in traps.iter().enumerate() {
            if landscape.energy(b) < ha - ENERGY_TOL {
                reach = reach.min(m[i * k + j]);
            }
        }
        if reach.is_finite() {
            best = best.max(reach - ha);
        }
    }
    best
}
