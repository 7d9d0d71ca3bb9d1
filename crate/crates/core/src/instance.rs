//! Problem instances: weights, capacity and the conflict graph, plus the
//! instance generator and the trivial bin lower bound.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::rng_from_seed;

/// Graphs up to this many vertices also keep a dense bit matrix so that
/// conflict tests are a single load.
const BITSET_MAX_ITEMS: usize = 2048;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InstanceError {
    #[error("item {0} is out of range")]
    ItemOutOfRange(usize),
    #[error("item {0} conflicts with itself")]
    SelfConflict(usize),
    #[error("item {item} has weight {weight} which exceeds capacity {capacity}")]
    WeightExceedsCapacity { item: usize, weight: u64, capacity: u64 },
    #[error("item {0} has zero weight")]
    ZeroWeight(usize),
    #[error("capacity must be positive")]
    ZeroCapacity,
    #[error("weight vector has {weights} entries but the conflict graph has {vertices} vertices")]
    SizeMismatch { weights: usize, vertices: usize },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(&'static str),
    #[error("interval length calibration did not reach density {target:.3} (best {achieved:.3})")]
    Calibration { target: f64, achieved: f64 },
}

/// Symmetric conflict graph without self-loops over items `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    adjacency: Vec<Vec<usize>>,
    edges: usize,
    bits: Option<Vec<u64>>,
}

impl ConflictGraph {
    /// Builds a graph from an edge list. Edges may be given in either
    /// orientation and more than once.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, InstanceError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n {
                return Err(InstanceError::ItemOutOfRange(a));
            }
            if b >= n {
                return Err(InstanceError::ItemOutOfRange(b));
            }
            if a == b {
                return Err(InstanceError::SelfConflict(a));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut edges = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            edges += list.len();
        }
        edges /= 2;

        let bits = (n <= BITSET_MAX_ITEMS).then(|| {
            let words = n.div_ceil(64);
            let mut bits = vec![0u64; n * words];
            for (i, list) in adjacency.iter().enumerate() {
                for &j in list {
                    bits[i * words + j / 64] |= 1 << (j % 64);
                }
            }
            bits
        });

        Ok(ConflictGraph { adjacency, edges, bits })
    }

    pub fn empty(n: usize) -> Self {
        Self::from_edges(n, core::iter::empty()).expect("empty graph is valid")
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Sorted neighbours of `item`.
    pub fn neighbors(&self, item: usize) -> &[usize] {
        &self.adjacency[item]
    }

    pub fn degree(&self, item: usize) -> usize {
        self.adjacency[item].len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// Edge count over the number of unordered pairs; zero below two vertices.
    pub fn density(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        self.edges as f64 / (n * (n - 1) / 2) as f64
    }

    #[inline]
    pub fn is_conflict(&self, a: usize, b: usize) -> bool {
        match &self.bits {
            Some(bits) => {
                let words = self.len().div_ceil(64);
                bits[a * words + b / 64] >> (b % 64) & 1 == 1
            }
            None => self.adjacency[a].binary_search(&b).is_ok(),
        }
    }

    /// Every edge once, as `(low, high)` in increasing order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }
}

/// A bin packing instance with conflicts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    name: String,
    capacity: u64,
    weights: Vec<u64>,
    conflicts: ConflictGraph,
}

impl Instance {
    pub fn new(
        name: impl Into<String>,
        capacity: u64,
        weights: Vec<u64>,
        conflicts: ConflictGraph,
    ) -> Result<Self, InstanceError> {
        if capacity == 0 {
            return Err(InstanceError::ZeroCapacity);
        }
        if weights.len() != conflicts.len() {
            return Err(InstanceError::SizeMismatch {
                weights: weights.len(),
                vertices: conflicts.len(),
            });
        }
        for (item, &weight) in weights.iter().enumerate() {
            if weight == 0 {
                return Err(InstanceError::ZeroWeight(item));
            }
            if weight > capacity {
                return Err(InstanceError::WeightExceedsCapacity { item, weight, capacity });
            }
        }
        Ok(Instance { name: name.into(), capacity, weights, conflicts })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, item: usize) -> u64 {
        self.weights[item]
    }

    pub fn conflicts(&self) -> &ConflictGraph {
        &self.conflicts
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// `ceil(sum of weights / Q)`: no packing can use fewer bins.
    pub fn lower_bound(&self) -> usize {
        self.total_weight().div_ceil(self.capacity) as usize
    }
}

/// Weight distribution of generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum InstanceClass {
    /// Triples of weights summing exactly to `Q = 1000`.
    Triplet,
    /// Weights uniform in `[20, 100]`, `Q = 150`.
    Uniform,
    /// Weights uniform in `[500, 2500]`, `Q = 10000`.
    LargeWeight,
}

impl InstanceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            InstanceClass::Triplet => "triplet",
            InstanceClass::Uniform => "uniform",
            InstanceClass::LargeWeight => "largeweight",
        }
    }

    pub fn capacity(self) -> u64 {
        match self {
            InstanceClass::Triplet => 1000,
            InstanceClass::Uniform => 150,
            InstanceClass::LargeWeight => 10_000,
        }
    }
}

/// Structure of generated conflict graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum GraphKind {
    /// Overlap graph of equal-length random intervals in `[0, 1]`.
    Interval,
    /// Every pair is an edge independently with probability `density`.
    Arbitrary,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Interval => "interval",
            GraphKind::Arbitrary => "arbitrary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub class: InstanceClass,
    pub graph: GraphKind,
    pub n: usize,
    /// Target edge density. Values in `(0.95, 1]` are capped to `0.95`.
    pub density: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub const MAX_DENSITY: f64 = 0.95;
    /// Accepted distance between realized and target interval-graph density.
    pub const INTERVAL_TOLERANCE: f64 = 0.05;
    const CALIBRATION_ROUNDS: usize = 50;

    /// Name used for generated instances, e.g. `uniform-interval-120-0.30-7`.
    pub fn default_name(&self) -> String {
        alloc::format!(
            "{}-{}-{}-{:.2}-{}",
            self.class.as_str(),
            self.graph.as_str(),
            self.n,
            self.effective_density(),
            self.seed
        )
    }

    fn effective_density(&self) -> f64 {
        if self.density > Self::MAX_DENSITY {
            Self::MAX_DENSITY
        } else {
            self.density
        }
    }

    fn validate(&self) -> Result<(), InstanceError> {
        if self.n < 3 {
            return Err(InstanceError::InvalidSpec("at least three items are required"));
        }
        if self.class == InstanceClass::Triplet && !self.n.is_multiple_of(3) {
            return Err(InstanceError::InvalidSpec("triplet instances need a multiple of three items"));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(InstanceError::InvalidSpec("density must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Generates the instance. Identical specs give identical instances.
    pub fn generate(&self) -> Result<Instance, InstanceError> {
        self.validate()?;
        let density = self.effective_density();
        let mut rng = rng_from_seed(self.seed);
        let n = self.n;

        let weights: Vec<u64> = match self.class {
            InstanceClass::Uniform => (0..n).map(|_| rng.gen_range(20..=100)).collect(),
            InstanceClass::LargeWeight => (0..n).map(|_| rng.gen_range(500..=2500)).collect(),
            InstanceClass::Triplet => {
                let capacity = InstanceClass::Triplet.capacity();
                let mut weights = Vec::with_capacity(n);
                for _ in 0..n / 3 {
                    let first = rng.gen_range(380..=490);
                    let second = rng.gen_range(251..=(capacity - first) / 2);
                    weights.extend([first, second, capacity - first - second]);
                }
                weights.shuffle(&mut rng);
                weights
            }
        };

        let edges = match self.graph {
            GraphKind::Arbitrary => arbitrary_edges(n, density, &mut rng),
            GraphKind::Interval => interval_edges(n, density, &mut rng)?,
        };
        let graph = ConflictGraph::from_edges(n, edges)?;
        Instance::new(self.default_name(), self.class.capacity(), weights, graph)
    }
}

fn arbitrary_edges(n: usize, density: f64, rng: &mut crate::Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Pairs of sorted starts within `length` of each other.
fn overlapping_pairs(sorted_starts: &[f64], length: f64) -> usize {
    let mut count = 0;
    let mut lo = 0;
    for (hi, &s) in sorted_starts.iter().enumerate() {
        while s - sorted_starts[lo] > length {
            lo += 1;
        }
        count += hi - lo;
    }
    count
}

fn interval_edges(
    n: usize,
    density: f64,
    rng: &mut crate::Rng,
) -> Result<Vec<(usize, usize)>, InstanceError> {
    let starts: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut sorted = starts.clone();
    sorted.sort_unstable_by(f64::total_cmp);

    let pairs = (n * (n - 1) / 2) as f64;
    let target = density * pairs;
    let distance = |length: f64| {
        let d = overlapping_pairs(&sorted, length) as f64 - target;
        if d < 0.0 {
            -d
        } else {
            d
        }
    };

    // Density is non-decreasing in the interval length.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (distance(0.0), 0.0);
    for _ in 0..GeneratorSpec::CALIBRATION_ROUNDS {
        let mid = 0.5 * (lo + hi);
        let count = overlapping_pairs(&sorted, mid) as f64;
        let gap = distance(mid);
        if gap < best.0 {
            best = (gap, mid);
        }
        if gap < 0.5 {
            break;
        }
        if count < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (gap, length) = best;
    if gap / pairs > GeneratorSpec::INTERVAL_TOLERANCE {
        let achieved = overlapping_pairs(&sorted, length) as f64 / pairs;
        return Err(InstanceError::Calibration { target: density, achieved });
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = starts[i] - starts[j];
            if d <= length && -d <= length {
                edges.push((i, j));
            }
        }
    }
    Ok(edges)
}
