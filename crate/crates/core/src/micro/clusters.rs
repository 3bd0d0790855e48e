//! Two-phase maps and 4-connected cluster labeling with open boundaries.

use crate::field::{GridSpec, ScalarField2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    TiRich,
    AlRich,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    spec: GridSpec,
    labels: Vec<Phase>,
    threshold: f64,
}

impl PhaseMap {
    /// Cells with `x > threshold` are Ti-rich.
    pub fn from_field(f: &ScalarField2D, threshold: f64) -> Self {
        PhaseMap {
            spec: f.spec(),
            labels: f
                .values()
                .iter()
                .map(|&x| if x > threshold { Phase::TiRich } else { Phase::AlRich })
                .collect(),
            threshold,
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(usize, usize) -> Phase) -> Self {
        let mut labels = Vec::with_capacity(spec.len());
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                labels.push(f(i, j));
            }
        }
        PhaseMap { spec, labels, threshold: f64::NAN }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn labels(&self) -> &[Phase] {
        &self.labels
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn fraction(&self, phase: Phase) -> f64 {
        self.labels.iter().filter(|&&p| p == phase).count() as f64 / self.labels.len() as f64
    }
}

/// Cluster id per cell (`None` outside the phase) and the size of each cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    pub spec: GridSpec,
    pub ids: Vec<Option<u32>>,
    pub sizes: Vec<usize>,
}

impl Labeling {
    pub fn n_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn largest(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

/// Hoshen-Kopelman sweep over an occupancy mask. Cluster ids are dense and
/// ordered by first appearance in row-major order.
pub fn label_mask(spec: GridSpec, occupied: &[bool]) -> Labeling {
    let nx = spec.nx;
    let mut provisional = vec![u32::MAX; occupied.len()];
    let mut set = DisjointSet { parent: Vec::new() };
    for k in 0..occupied.len() {
        if !occupied[k] {
            continue;
        }
        let left = (k % nx != 0 && occupied[k - 1]).then(|| provisional[k - 1]);
        let down = (k >= nx && occupied[k - nx]).then(|| provisional[k - nx]);
        provisional[k] = match (left, down) {
            (None, None) => {
                let id = set.parent.len() as u32;
                set.parent.push(id);
                id
            }
            (Some(a), None) | (None, Some(a)) => a,
            (Some(a), Some(b)) => set.union(a, b),
        };
    }

    let mut dense = vec![u32::MAX; set.parent.len()];
    let mut sizes = Vec::new();
    let ids = provisional
        .iter()
        .map(|&p| {
            if p == u32::MAX {
                return None;
            }
            let root = set.find(p) as usize;
            if dense[root] == u32::MAX {
                dense[root] = sizes.len() as u32;
                sizes.push(0);
            }
            sizes[dense[root] as usize] += 1;
            Some(dense[root])
        })
        .collect();
    Labeling { spec, ids, sizes }
}

/// Connected components of `phase` under 4-connectivity, non-periodic.
pub fn label_clusters(p: &PhaseMap, phase: Phase) -> Labeling {
    let mask: Vec<bool> = p.labels.iter().map(|&l| l == phase).collect();
    label_mask(p.spec, &mask)
}

/// True iff a single cluster touches both boundaries normal to `axis`.
pub fn spans(labeling: &Labeling, axis: Axis) -> bool {
    let GridSpec { nx, ny, .. } = labeling.spec;
    let mut touches_start = vec![false; labeling.sizes.len()];
    let (lines, len) = match axis {
        Axis::X => (ny, nx),
        Axis::Y => (nx, ny),
    };
    let at = |line: usize, pos: usize| match axis {
        Axis::X => labeling.ids[line * nx + pos],
        Axis::Y => labeling.ids[pos * nx + line],
    };
    for line in 0..lines {
        if let Some(id) = at(line, 0) {
            touches_start[id as usize] = true;
        }
    }
    (0..lines).any(|line| at(line, len - 1).is_some_and(|id| touches_start[id as usize]))
}
