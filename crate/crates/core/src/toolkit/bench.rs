//! Lookup-cost comparison: a flat path-to-contents map scanned linearly,
//! recursive descent through the directory tree, and descent fronted by an
//! in-memory path cache.
//!
//! Every strategy counts the work it does in [`CostCounters`]. Directory
//! entries are scanned linearly in on-disk order so the per-level string
//! comparisons are observable.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use thiserror::Error;

use crate::alpha::{AlphaError, Contents, FsImage};
use crate::codec::{FileType, Name, PathName};
use crate::resolver::{self, Resolution};
use crate::toolkit::builder::{self, BuildError, BuildOptions};
use crate::toolkit::manifest::{Declaration, Manifest, PayloadSource};
use crate::verifier;
use crate::Index;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Disk(#[from] crate::blockdev::DiskError),
    #[error(transparent)]
    Alpha(#[from] AlphaError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostCounters {
    pub path_comparisons: u64,
    pub string_comparisons: u64,
    pub directory_fetches: u64,
    pub block_reads: u64,
}

impl std::ops::AddAssign for CostCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.path_comparisons += rhs.path_comparisons;
        self.string_comparisons += rhs.string_comparisons;
        self.directory_fetches += rhs.directory_fetches;
        self.block_reads += rhs.block_reads;
    }
}

/// One pair of the flat map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatEntry {
    pub path: PathName,
    pub index: Index,
    pub contents: Contents,
}

/// The defined dot-free paths of `fs` in breadth-first order, optionally
/// restricted to one file type.
pub fn flat_pairs(fs: &FsImage, only: Option<FileType>) -> Result<Vec<FlatEntry>, AlphaError> {
    let walk = verifier::walk(fs);
    let mut pairs = Vec::new();
    for v in walk.visits {
        if only.is_some_and(|t| t != v.ftype) {
            continue;
        }
        if let Some(contents) = fs.alpha(v.index)? {
            pairs.push(FlatEntry { path: v.path, index: v.index, contents });
        }
    }
    Ok(pairs)
}

/// Linear scan comparing whole paths element by element, stopping at the
/// first mismatch.
pub fn flat_lookup<'a>(pairs: &'a [FlatEntry], path: &PathName, counters: &mut CostCounters) -> Option<&'a FlatEntry> {
    let want = path.elements();
    for entry in pairs {
        counters.path_comparisons += 1;
        let have = entry.path.elements();
        let mut equal = true;
        for k in 0..want.len().max(have.len()) {
            match (want.get(k), have.get(k)) {
                (Some(a), Some(b)) => {
                    counters.string_comparisons += 1;
                    if a != b {
                        equal = false;
                        break;
                    }
                }
                _ => {
                    equal = false;
                    break;
                }
            }
        }
        if equal {
            return Some(entry);
        }
    }
    None
}

/// Link-blind descent from the root with cost accounting.
pub fn tree_lookup_instrumented(fs: &FsImage, path: &PathName, counters: &mut CostCounters) -> Result<Option<Index>, AlphaError> {
    let reads_before = fs.disk().block_reads();
    let result = descend(fs, path, counters);
    counters.block_reads += fs.disk().block_reads() - reads_before;
    result
}

fn descend(fs: &FsImage, path: &PathName, counters: &mut CostCounters) -> Result<Option<Index>, AlphaError> {
    let mut current = fs.root();
    for name in path.iter() {
        let entries = match fs.directory_entries(current) {
            Ok(Some(entries)) => entries,
            Ok(None) | Err(AlphaError::IndexOutOfRange { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        counters.directory_fetches += 1;
        let mut next = None;
        for (candidate, index) in entries {
            counters.string_comparisons += 1;
            if &candidate == name {
                next = Some(index);
                break;
            }
        }
        match next {
            Some(i) => current = i,
            None => return Ok(None),
        }
    }
    Ok(Some(current))
}

/// Path-to-index cache with FIFO eviction. Every entry satisfies
/// `namei(root, path) == index` because entries only come from successful
/// descents over an immutable image.
#[derive(Debug, Clone)]
pub struct PathCache {
    map: HashMap<PathName, Index>,
    order: VecDeque<PathName>,
    capacity: usize,
    pub hits: u64,
    pub misses: u64,
}

impl PathCache {
    pub fn new(capacity: usize) -> PathCache {
        PathCache { map: HashMap::new(), order: VecDeque::new(), capacity, hits: 0, misses: 0 }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&PathName, Index)> {
        self.map.iter().map(|(p, &i)| (p, i))
    }

    fn insert(&mut self, path: PathName, index: Index) {
        if self.capacity == 0 {
            return;
        }
        while self.map.len() >= self.capacity {
            let Some(old) = self.order.pop_front() else { break };
            self.map.remove(&old);
        }
        self.order.push_back(path.clone());
        self.map.insert(path, index);
    }

    /// Entries whose index disagrees with a fresh resolution.
    pub fn audit(&self, fs: &FsImage) -> Result<Vec<(PathName, Index, Resolution)>, AlphaError> {
        let mut bad = Vec::new();
        for (path, index) in self.entries() {
            let actual = resolver::namei(fs, fs.root(), path)?.result;
            if actual != Resolution::Found(index) {
                bad.push((path.clone(), index, actual));
            }
        }
        Ok(bad)
    }
}

/// Hits cost nothing; misses descend and cache positive results.
pub fn cached_lookup(
    cache: &mut PathCache,
    fs: &FsImage,
    path: &PathName,
    counters: &mut CostCounters,
) -> Result<Option<Index>, AlphaError> {
    if let Some(&index) = cache.map.get(path) {
        cache.hits += 1;
        return Ok(Some(index));
    }
    cache.misses += 1;
    let found = tree_lookup_instrumented(fs, path, counters)?;
    if let Some(index) = found {
        cache.insert(path.clone(), index);
    }
    Ok(found)
}

/// A tree of `n` files with `k` entries per directory: full levels of
/// directories `d0..d{k-1}` down to the depth where `k^depth >= n`, then
/// files `f0..` filling the last-level directories `k` at a time.
pub fn balanced_manifest(n: usize, k: usize) -> Result<Manifest, BenchError> {
    if n == 0 || k < 2 {
        return Err(BenchError::Config(format!("need n >= 1 and k >= 2, got n={n} k={k}")));
    }
    let mut depth = 1;
    let mut capacity = k;
    while capacity < n {
        depth += 1;
        capacity = capacity.saturating_mul(k);
    }
    let name = |prefix: &str, j: usize| Name::new(format!("{prefix}{j}")).expect("valid name");
    let mut manifest = Manifest::new();
    let mut level = vec![PathName::empty()];
    for _ in 1..depth {
        let mut next = Vec::with_capacity(level.len() * k);
        for parent in &level {
            for j in 0..k {
                let dir = parent.child(name("d", j));
                manifest.push(Declaration::Dir(dir.clone())).expect("fresh path");
                next.push(dir);
            }
        }
        level = next;
    }
    for f in 0..n {
        let parent = &level[f / k];
        let path = parent.child(name("f", f % k));
        let payload = format!("file {f}\n").into_bytes();
        manifest.push(Declaration::File(path, PayloadSource::Inline(payload))).expect("fresh path");
    }
    Ok(manifest)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Workload {
    Uniform,
    Zipf { exponent: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub n: usize,
    pub k: usize,
    pub queries: usize,
    pub workload: Workload,
    pub seed: u64,
    pub cache_capacity: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { n: 1000, k: 10, queries: 10_000, workload: Workload::Uniform, seed: 1, cache_capacity: 1024 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Flat,
    Tree,
    Cached,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Flat => "flat",
            Strategy::Tree => "tree",
            Strategy::Cached => "cached",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: BenchConfig,
    /// Totals per strategy over the whole query stream.
    pub rows: Vec<(Strategy, CostCounters)>,
    pub files: usize,
    /// Mean query path length in elements.
    pub mean_depth: f64,
    /// Queries where the strategies' answers differed.
    pub disagreements: usize,
    pub cache_hits: u64,
    pub cache_misses: u64,
    /// Cache entries that failed the coherence audit after the run.
    pub incoherent: usize,
}

impl BenchReport {
    pub fn totals(&self, strategy: Strategy) -> CostCounters {
        self.rows.iter().find(|(s, _)| *s == strategy).map(|(_, c)| *c).unwrap_or_default()
    }

    pub fn mean(&self, strategy: Strategy, field: fn(&CostCounters) -> u64) -> f64 {
        field(&self.totals(strategy)) as f64 / self.config.queries.max(1) as f64
    }
}

/// Header line, then `strategy path_cmp string_cmp dir_fetch block_read`
/// totals per strategy.
impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "strategy path_cmp string_cmp dir_fetch block_read")?;
        for (strategy, c) in &self.rows {
            writeln!(
                f,
                "{strategy} {} {} {} {}",
                c.path_comparisons, c.string_comparisons, c.directory_fetches, c.block_reads
            )?;
        }
        Ok(())
    }
}

/// Builds the balanced image and runs all three strategies over one seeded
/// query stream of present file paths.
pub fn bench_report(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    if config.queries == 0 {
        return Err(BenchError::Config("queries must be positive".into()));
    }
    if let Workload::Zipf { exponent } = config.workload {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(BenchError::Config(format!("zipf exponent must be positive, got {exponent}")));
        }
    }
    let manifest = balanced_manifest(config.n, config.k)?;
    let (bytes, _) = builder::build_image_bytes(&manifest, &BuildOptions::default())?;
    let fs = FsImage::from_bytes(bytes)?;
    let files = flat_pairs(&fs, Some(FileType::Ordinary))?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let picks: Vec<usize> = match config.workload {
        Workload::Uniform => (0..config.queries).map(|_| rng.random_range(0..files.len())).collect(),
        Workload::Zipf { exponent } => {
            // popularity ranks land on a random permutation of the files
            let mut by_rank: Vec<usize> = (0..files.len()).collect();
            by_rank.shuffle(&mut rng);
            let zipf = Zipf::new(files.len() as f64, exponent).map_err(|e| BenchError::Config(e.to_string()))?;
            (0..config.queries).map(|_| by_rank[zipf.sample(&mut rng) as usize - 1]).collect()
        }
    };

    let mut flat = CostCounters::default();
    let mut tree = CostCounters::default();
    let mut cached = CostCounters::default();
    let mut cache = PathCache::new(config.cache_capacity);
    let mut disagreements = 0;
    let mut depth_sum = 0usize;
    for &pick in &picks {
        let path = &files[pick].path;
        depth_sum += path.len();
        let a = flat_lookup(&files, path, &mut flat).map(|e| e.index);
        let b = tree_lookup_instrumented(&fs, path, &mut tree)?;
        let c = cached_lookup(&mut cache, &fs, path, &mut cached)?;
        if a != b || b != c {
            disagreements += 1;
        }
    }
    let incoherent = cache.audit(&fs)?.len();

    Ok(BenchReport {
        config: config.clone(),
        rows: vec![(Strategy::Flat, flat), (Strategy::Tree, tree), (Strategy::Cached, cached)],
        files: files.len(),
        mean_depth: depth_sum as f64 / picks.len() as f64,
        disagreements,
        cache_hits: cache.hits,
        cache_misses: cache.misses,
        incoherent,
    })
}
