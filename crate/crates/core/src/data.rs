//! Synthetic directed-hypergraph benchmark, degree features, and splits.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hypergraph::{DirectedHypergraph, Hyperedge};
use crate::io;

/// Parameters of the class-block generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n: usize,
    pub classes: usize,
    pub h_min: usize,
    pub h_max: usize,
    /// Undirected hyperedges inside each class.
    pub intra: usize,
    /// Directed hyperedges per class pair `i < j`, tails in `i`, heads in `j`.
    pub inter: usize,
    pub seed: u64,
}

impl SyntheticConfig {
    /// 500 vertices, 5 classes, parts of 3 to 10 vertices, 30 intra-class
    /// hyperedges per class.
    pub fn benchmark(inter: usize, seed: u64) -> Self {
        SyntheticConfig {
            n: 500,
            classes: 5,
            h_min: 3,
            h_max: 10,
            intra: 30,
            inter,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.n % self.classes != 0 {
            return Err(Error::Config(format!(
                "{} classes do not divide {} vertices",
                self.classes, self.n
            )));
        }
        let size = self.n / self.classes;
        if !(2 <= self.h_min && self.h_min <= self.h_max && self.h_max <= size) {
            return Err(Error::Config(format!(
                "part sizes need 2 <= hmin <= hmax <= {size}, got {}..{}",
                self.h_min, self.h_max
            )));
        }
        Ok(())
    }

    /// `c·I_i + C(c, 2)·I_o`.
    pub fn expected_edges(&self) -> usize {
        self.classes * self.intra + self.classes * (self.classes - 1) / 2 * self.inter
    }
}

/// Hypergraph, node features, labels and train/validation/test vertex lists.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub hypergraph: DirectedHypergraph,
    /// Row-major `n × feature_width`.
    pub features: Vec<f64>,
    pub feature_width: usize,
    pub labels: Vec<usize>,
    /// Sorted vertex indices of the train, validation and test sets.
    pub splits: [Vec<usize>; 3],
}

pub const SPLIT_PROPORTIONS: [f64; 3] = [0.5, 0.25, 0.25];

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let size = cfg.n / cfg.classes;
    let class: Vec<Vec<usize>> = (0..cfg.classes).map(|i| (i * size..(i + 1) * size).collect()).collect();
    let mut edges = Vec::with_capacity(cfg.expected_edges());
    for members in &class {
        for _ in 0..cfg.intra {
            let k = rng.gen_range(cfg.h_min..=cfg.h_max);
            edges.push(Hyperedge::undirected(sample(&mut rng, members, k)));
        }
    }
    for i in 0..cfg.classes {
        for j in i + 1..cfg.classes {
            for _ in 0..cfg.inter {
                let kt = rng.gen_range(cfg.h_min..=cfg.h_max);
                let kh = rng.gen_range(cfg.h_min..=cfg.h_max);
                let tail = sample(&mut rng, &class[i], kt);
                let head = sample(&mut rng, &class[j], kh);
                edges.push(Hyperedge::new(tail, head));
            }
        }
    }
    let hypergraph = DirectedHypergraph::new(cfg.n, edges)?;
    let features = degree_features(&hypergraph);
    let labels = (0..cfg.n).map(|u| u / size).collect();
    let mut split_seed = ChaCha8Rng::seed_from_u64(cfg.seed);
    split_seed.set_stream(1);
    let splits = split(cfg.n, SPLIT_PROPORTIONS, split_seed.gen())?;
    Ok(LabeledDataset {
        hypergraph,
        features,
        feature_width: 1,
        labels,
        splits,
    })
}

/// `k` distinct members, uniformly.
fn sample<R: Rng>(rng: &mut R, pool: &[usize], k: usize) -> Vec<usize> {
    pool.choose_multiple(rng, k).copied().collect()
}

/// Number of hyperedges on each vertex, as an `n × 1` feature column.
pub fn degree_features(h: &DirectedHypergraph) -> Vec<f64> {
    h.incidence_counts().into_iter().map(|c| c as f64).collect()
}

/// Random partition of `0..n` into sets of the given proportions. Sizes are
/// floored, and the leftover vertices go one each to the earliest sets.
pub fn split(n: usize, proportions: [f64; 3], seed: u64) -> Result<[Vec<usize>; 3]> {
    let total: f64 = proportions.iter().sum();
    if (total - 1.0).abs() > 1e-9 || proportions.iter().any(|&p| p < 0.0) {
        return Err(Error::Config("split proportions must be non-negative and sum to 1".into()));
    }
    let mut sizes = proportions.map(|p| (p * n as f64 + 1e-9).floor() as usize);
    let mut left = n - sizes.iter().sum::<usize>();
    for s in sizes.iter_mut() {
        if left == 0 {
            break;
        }
        *s += 1;
        left -= 1;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out: [Vec<usize>; 3] = Default::default();
    let mut start = 0;
    for (set, size) in out.iter_mut().zip(sizes) {
        *set = perm[start..start + size].to_vec();
        set.sort_unstable();
        start += size;
    }
    Ok(out)
}

impl LabeledDataset {
    pub fn num_vertices(&self) -> usize {
        self.hypergraph.num_vertices()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Boolean train / validation / test masks.
    pub fn masks(&self) -> [Vec<bool>; 3] {
        let n = self.num_vertices();
        self.splits.clone().map(|set| {
            let mut m = vec![false; n];
            set.into_iter().for_each(|u| m[u] = true);
            m
        })
    }

    pub fn paths(prefix: &Path) -> [PathBuf; 4] {
        let with = |ext: &str| {
            let mut s = prefix.as_os_str().to_owned();
            s.push(ext);
            PathBuf::from(s)
        };
        [with(".hg"), with(".features"), with(".labels"), with(".splits")]
    }

    /// Writes `<prefix>.hg`, `.features`, `.labels` and `.splits`.
    pub fn save(&self, prefix: impl AsRef<Path>) -> Result<[PathBuf; 4]> {
        let paths = Self::paths(prefix.as_ref());
        io::write_hypergraph(&self.hypergraph, &paths[0])?;
        std::fs::write(&paths[1], io::format_features(&self.features, self.feature_width))?;
        std::fs::write(&paths[2], io::format_labels(&self.labels))?;
        std::fs::write(&paths[3], io::format_splits(&self.splits))?;
        Ok(paths)
    }

    pub fn load(prefix: impl AsRef<Path>) -> Result<Self> {
        let paths = Self::paths(prefix.as_ref());
        let hypergraph = io::read_hypergraph(&paths[0])?;
        let n = hypergraph.num_vertices();
        let (features, feature_width) = io::parse_features(&std::fs::read_to_string(&paths[1])?, n)?;
        let labels = io::parse_labels(&std::fs::read_to_string(&paths[2])?, n)?;
        let splits = io::parse_splits(&std::fs::read_to_string(&paths[3])?, n)?;
        Ok(LabeledDataset {
            hypergraph,
            features,
            feature_width,
            labels,
            splits,
        })
    }
}
