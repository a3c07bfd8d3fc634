//! fsck-style consistency checks over a whole image.
//!
//! The graph checks walk dot-free directory entries breadth-first from the
//! root. Soft links are leaves for every check except [`check_softlink_loops`],
//! and `.`/`..` entries are only consulted by the dot-law check and the
//! dangling-reference check.
//!
//! Every failure carries a [`Witness`] that can be replayed through the
//! resolver to reproduce the violation.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::alpha::{AlphaError, Contents, FsImage};
use crate::codec::{FileType, Name, PathName, Strictness};
use crate::resolver::{self, LinkBudget, ListMode, Lookup, Resolution};
use crate::Index;

/// One defined inode reached by the walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Visit {
    pub path: PathName,
    pub index: Index,
    pub ftype: FileType,
    /// Index of the directory holding the entry; `None` for the root.
    pub parent: Option<Index>,
}

/// Breadth-first enumeration of the defined dot-free paths.
#[derive(Debug, Clone, Default)]
pub struct Walk {
    /// First visit of each index, in BFS order (root first).
    pub visits: Vec<Visit>,
    /// Later arrivals at an already visited index: (first path, second path, index).
    pub aliases: Vec<(PathName, PathName, Index)>,
    /// Inodes whose contents could not be decoded while walking.
    pub unreadable: BTreeMap<Index, String>,
    pub max_depth: usize,
}

impl Walk {
    pub fn path_of(&self, index: Index) -> Option<&PathName> {
        self.visits.iter().find(|v| v.index == index).map(|v| &v.path)
    }

    pub fn reachable(&self) -> BTreeSet<Index> {
        self.visits.iter().map(|v| v.index).collect()
    }
}

pub fn walk(fs: &FsImage) -> Walk {
    let mut out = Walk::default();
    let root = fs.root();
    let mut seen: HashMap<Index, usize> = HashMap::new();
    let root_type = match resolver::file_type(fs, root) {
        Ok(Some(t)) => t,
        Ok(None) => return out,
        Err(e) => {
            out.unreadable.insert(root, e.to_string());
            return out;
        }
    };
    seen.insert(root, 0);
    out.visits.push(Visit { path: PathName::empty(), index: root, ftype: root_type, parent: None });

    let mut queue = VecDeque::from([0usize]);
    while let Some(at) = queue.pop_front() {
        let Visit { path, index, ftype, .. } = out.visits[at].clone();
        if ftype != FileType::Directory {
            continue;
        }
        let dir = match fs.alpha(index) {
            Ok(Some(Contents::Directory(d))) => d,
            Ok(_) => continue,
            Err(e) => {
                out.unreadable.insert(index, e.to_string());
                continue;
            }
        };
        for (name, target) in dir.dot_free() {
            let child_type = match resolver::file_type(fs, target) {
                Ok(Some(t)) => t,
                Ok(None) => continue,
                Err(e) => {
                    out.unreadable.insert(target, e.to_string());
                    continue;
                }
            };
            let child = path.child(name.clone());
            if let Some(&first) = seen.get(&target) {
                out.aliases.push((out.visits[first].path.clone(), child, target));
                continue;
            }
            seen.insert(target, out.visits.len());
            out.max_depth = out.max_depth.max(child.len());
            queue.push_back(out.visits.len());
            out.visits.push(Visit { path: child, index: target, ftype: child_type, parent: Some(index) });
        }
    }
    debug_assert!((out.max_depth as u64) < fs.inode_count().max(1));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DotLaw {
    /// `F(p)(".") = Namei(root, p)`
    SelfEntry,
    /// `F(px)("..") = Namei(root, p)`
    ParentEntry,
    /// `F(root)("..") = root`
    RootParent,
}

impl fmt::Display for DotLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DotLaw::SelfEntry => "self",
            DotLaw::ParentEntry => "parent",
            DotLaw::RootParent => "root-parent",
        })
    }
}

/// Concrete evidence of a violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Orphan(Index),
    Dangling { dir: Index, dir_path: Option<PathName>, name: Name, target: Index },
    DotLaw { law: DotLaw, path: PathName, expected: Index, found: Option<Index> },
    Alias { first: PathName, second: PathName, index: Index },
    LinkConstraint { dir: Index, parents: Vec<Index> },
    Prefix { path: PathName, prefix: PathName },
    Resolves { path: PathName, expected: Index },
    SuspectedLoop { link: Index, path: Option<PathName>, target: PathName },
    Unreadable { index: Index, error: String },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Orphan(i) => write!(f, "orphan={i}"),
            Witness::Dangling { dir, dir_path, name, target } => {
                write!(f, "dir={dir}")?;
                if let Some(p) = dir_path {
                    write!(f, " path={p}")?;
                }
                write!(f, " name={name} target={target}")
            }
            Witness::DotLaw { law, path, expected, found } => {
                write!(f, "law={law} path={path} expected={expected} found=")?;
                match found {
                    Some(i) => write!(f, "{i}"),
                    None => write!(f, "missing"),
                }
            }
            Witness::Alias { first, second, index } => write!(f, "index={index} paths={first},{second}"),
            Witness::LinkConstraint { dir, parents } => {
                let parents: Vec<String> = parents.iter().map(Index::to_string).collect();
                write!(f, "dir={dir} parents={}", parents.join(","))
            }
            Witness::Prefix { path, prefix } => write!(f, "path={path} prefix={prefix}"),
            Witness::Resolves { path, expected } => write!(f, "path={path} expected={expected}"),
            Witness::SuspectedLoop { link, path, target } => {
                write!(f, "link={link}")?;
                if let Some(p) = path {
                    write!(f, " path={p}")?;
                }
                write!(f, " target={target}")
            }
            Witness::Unreadable { index, error } => write!(f, "index={index} error={error:?}"),
        }
    }
}

impl Witness {
    /// Re-derives the violation through resolver operations (and `oracle`
    /// for prefix witnesses). True when it reproduces.
    pub fn replay(&self, fs: &FsImage, oracle: &dyn PathOracle) -> Result<bool, AlphaError> {
        let root = fs.root();
        Ok(match self {
            Witness::Orphan(i) => {
                if resolver::alpha_defined(fs, *i)?.is_none() {
                    return Ok(false);
                }
                // breadth-first over listed names, resolving each path
                let mut seen = BTreeSet::from([root]);
                let mut queue = VecDeque::from([PathName::empty()]);
                while let Some(p) = queue.pop_front() {
                    for name in resolver::list_entries(fs, &p, ListMode::All)? {
                        let child = p.child(name);
                        if let Resolution::Found(j) = resolver::namei(fs, root, &child)?.result {
                            if seen.insert(j) {
                                queue.push_back(child);
                            }
                        }
                    }
                }
                !seen.contains(i)
            }
            Witness::Dangling { dir, dir_path, name, target } => {
                let contents = match dir_path {
                    Some(p) => resolver::f_lookup(fs, p)?.contents().cloned(),
                    None => resolver::alpha_defined(fs, *dir)?,
                };
                let entry = contents.as_ref().and_then(Contents::as_directory).and_then(|d| d.get(name));
                let undefined = match dir_path {
                    Some(p) => resolver::f_lookup(fs, &p.child(name.clone()))? == Lookup::Undefined,
                    None => resolver::alpha_defined(fs, *target)?.is_none(),
                };
                entry == Some(*target) && undefined
            }
            Witness::DotLaw { law, path, expected, found } => {
                let Some(Contents::Directory(dir)) = resolver::f_lookup(fs, path)?.contents().cloned() else {
                    return Ok(false);
                };
                let (entry, should_be) = match law {
                    DotLaw::SelfEntry => (".", resolver::namei(fs, root, path)?.result),
                    DotLaw::ParentEntry => {
                        let Some((parent, _)) = path.split_last() else { return Ok(false) };
                        ("..", resolver::namei(fs, root, &parent)?.result)
                    }
                    DotLaw::RootParent => ("..", Resolution::Found(root)),
                };
                dir.get_str(entry) == *found && should_be == Resolution::Found(*expected) && *found != Some(*expected)
            }
            Witness::Alias { first, second, index } => {
                first != second
                    && first.is_dot_free()
                    && second.is_dot_free()
                    && resolver::namei(fs, root, first)?.result == Resolution::Found(*index)
                    && resolver::namei(fs, root, second)?.result == Resolution::Found(*index)
            }
            Witness::LinkConstraint { dir, parents } => {
                let distinct: BTreeSet<Index> = parents.iter().copied().collect();
                for &j in &distinct {
                    let Some(Contents::Directory(d)) = resolver::alpha_defined(fs, j)? else {
                        return Ok(false);
                    };
                    if !d.dot_free().any(|(_, t)| t == *dir) {
                        return Ok(false);
                    }
                }
                let is_dir = matches!(resolver::alpha_defined(fs, *dir)?, Some(Contents::Directory(_)));
                is_dir && (distinct.len() >= 2 || (*dir == root && distinct.iter().any(|&j| j != root)))
            }
            Witness::Prefix { path, prefix } => {
                oracle.lookup(fs, path)?.contents().is_some()
                    && !matches!(oracle.lookup(fs, prefix)?.contents(), Some(Contents::Directory(_)))
            }
            Witness::Resolves { path, expected } => {
                oracle.resolve(fs, path)? != Resolution::Found(*expected)
            }
            Witness::SuspectedLoop { link, .. } => {
                let Some(Contents::SoftLink(target)) = resolver::alpha_defined(fs, *link)? else {
                    return Ok(false);
                };
                chase(fs, &target, LinkBudget(resolver::DEFAULT_LINK_BUDGET))? == Resolution::LinkBudgetExhausted
            }
            Witness::Unreadable { index, .. } => fs.inode_with(*index, Strictness::Strict).is_err() || fs.alpha(*index).is_err(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail(Vec<Witness>),
    /// Reported but not a consistency failure.
    Warn(Vec<Witness>),
}

impl Status {
    pub fn is_fail(&self) -> bool {
        matches!(self, Status::Fail(_))
    }

    pub fn witnesses(&self) -> &[Witness] {
        match self {
            Status::Pass => &[],
            Status::Fail(w) | Status::Warn(w) => w,
        }
    }

    fn from_witnesses(w: Vec<Witness>) -> Status {
        if w.is_empty() { Status::Pass } else { Status::Fail(w) }
    }
}

/// In-degree of each directory over dot-free entries from other directories.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinksMatrixSummary {
    /// Directory index -> number of distinct directories linking to it.
    pub in_degree: BTreeMap<Index, usize>,
    pub parents: BTreeMap<Index, BTreeSet<Index>>,
    /// Directories other than the root holding an entry for the root.
    pub root_in_degree_sources: BTreeSet<Index>,
}

impl LinksMatrixSummary {
    pub fn total(&self) -> usize {
        self.in_degree.values().sum()
    }
}

pub fn links_summary(fs: &FsImage) -> LinksMatrixSummary {
    let mut summary = LinksMatrixSummary::default();
    let dirs = defined_directories(fs);
    let is_dir: BTreeSet<Index> = dirs.iter().map(|(i, _)| *i).collect();
    for (j, dir) in &dirs {
        for (_, i) in dir.dot_free() {
            if is_dir.contains(&i) {
                summary.parents.entry(i).or_default().insert(*j);
            }
        }
    }
    for (i, parents) in &summary.parents {
        summary.in_degree.insert(*i, parents.len());
    }
    let root = fs.root();
    if let Some(p) = summary.parents.get(&root) {
        summary.root_in_degree_sources = p.iter().copied().filter(|&j| j != root).collect();
    }
    summary
}

/// Every readable directory inode in the table, reachable or not.
fn defined_directories(fs: &FsImage) -> Vec<(Index, crate::DirectoryMap)> {
    fs.indexes()
        .filter_map(|i| match fs.alpha(i) {
            Ok(Some(Contents::Directory(d))) => Some((i, d)),
            _ => None,
        })
        .collect()
}

pub fn check_no_orphans(fs: &FsImage) -> Status {
    check_no_orphans_in(fs, &walk(fs))
}

fn check_no_orphans_in(fs: &FsImage, walk: &Walk) -> Status {
    let reachable = walk.reachable();
    Status::from_witnesses(
        fs.indexes()
            .filter(|i| matches!(fs.inode(*i), Ok(Some(_))) && !reachable.contains(i))
            .map(Witness::Orphan)
            .collect(),
    )
}

pub fn check_no_dangling(fs: &FsImage) -> Status {
    check_no_dangling_in(fs, &walk(fs))
}

fn check_no_dangling_in(fs: &FsImage, walk: &Walk) -> Status {
    let mut witnesses = Vec::new();
    for (dir_index, dir) in defined_directories(fs) {
        for (name, target) in dir.iter() {
            let defined = matches!(fs.inode(target), Ok(Some(_)));
            if !defined && !matches!(fs.inode(target), Err(AlphaError::Codec { .. })) {
                witnesses.push(Witness::Dangling {
                    dir: dir_index,
                    dir_path: walk.path_of(dir_index).cloned(),
                    name: name.clone(),
                    target,
                });
            }
        }
    }
    Status::from_witnesses(witnesses)
}

pub fn check_dot_laws(fs: &FsImage) -> Status {
    check_dot_laws_in(fs, &walk(fs))
}

fn check_dot_laws_in(fs: &FsImage, walk: &Walk) -> Status {
    let mut witnesses = Vec::new();
    let root = fs.root();
    for v in walk.visits.iter().filter(|v| v.ftype == FileType::Directory) {
        let Ok(Some(Contents::Directory(dir))) = fs.alpha(v.index) else { continue };
        let found = dir.get_str(".");
        if found != Some(v.index) {
            witnesses.push(Witness::DotLaw { law: DotLaw::SelfEntry, path: v.path.clone(), expected: v.index, found });
        }
        let found = dir.get_str("..");
        let (law, expected) = match v.parent {
            None => (DotLaw::RootParent, root),
            Some(p) => (DotLaw::ParentEntry, p),
        };
        if found != Some(expected) {
            witnesses.push(Witness::DotLaw { law, path: v.path.clone(), expected, found });
        }
    }
    // a directory reached along a second path must name that path's parent too
    for (_, second, index) in &walk.aliases {
        let Ok(Some(Contents::Directory(dir))) = fs.alpha(*index) else { continue };
        let Some((parent_path, _)) = second.split_last() else { continue };
        let Ok(Resolution::Found(expected)) = resolver::namei(fs, root, &parent_path).map(|o| o.result) else { continue };
        let found = dir.get_str("..");
        if found != Some(expected) {
            witnesses.push(Witness::DotLaw { law: DotLaw::ParentEntry, path: second.clone(), expected, found });
        }
    }
    Status::from_witnesses(witnesses)
}

pub fn check_alias_free(fs: &FsImage) -> Status {
    check_alias_free_in(&walk(fs))
}

fn check_alias_free_in(walk: &Walk) -> Status {
    Status::from_witnesses(
        walk.aliases
            .iter()
            .map(|(first, second, index)| Witness::Alias { first: first.clone(), second: second.clone(), index: *index })
            .collect(),
    )
}

pub fn check_link_constraint(fs: &FsImage) -> Status {
    check_link_constraint_in(fs, &links_summary(fs))
}

fn check_link_constraint_in(fs: &FsImage, summary: &LinksMatrixSummary) -> Status {
    let root = fs.root();
    Status::from_witnesses(
        summary
            .parents
            .iter()
            .filter(|(i, parents)| parents.len() >= 2 || (**i == root && !summary.root_in_degree_sources.is_empty()))
            .map(|(i, parents)| Witness::LinkConstraint { dir: *i, parents: parents.iter().copied().collect() })
            .collect(),
    )
}

/// Path lookups used by [`check_prefix_property`]. The real implementation is
/// [`Resolver`]; tests substitute faulty ones to exercise the checker.
pub trait PathOracle {
    fn lookup(&self, fs: &FsImage, path: &PathName) -> Result<Lookup, AlphaError>;
    fn resolve(&self, fs: &FsImage, path: &PathName) -> Result<Resolution, AlphaError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Resolver;

impl PathOracle for Resolver {
    fn lookup(&self, fs: &FsImage, path: &PathName) -> Result<Lookup, AlphaError> {
        resolver::f_lookup(fs, path)
    }

    fn resolve(&self, fs: &FsImage, path: &PathName) -> Result<Resolution, AlphaError> {
        Ok(resolver::namei(fs, fs.root(), path)?.result)
    }
}

pub fn check_prefix_property(fs: &FsImage) -> Status {
    check_prefix_property_with(fs, &walk(fs), &Resolver)
}

/// Every enumerated path must resolve to its walk index, and its parent
/// prefix must be a directory. Parents of enumerated paths are enumerated
/// themselves, so this covers every proper prefix.
pub fn check_prefix_property_with(fs: &FsImage, walk: &Walk, oracle: &dyn PathOracle) -> Status {
    let mut witnesses = Vec::new();
    for v in &walk.visits {
        match oracle.resolve(fs, &v.path) {
            Ok(Resolution::Found(i)) if i == v.index => {}
            _ => witnesses.push(Witness::Resolves { path: v.path.clone(), expected: v.index }),
        }
        if let Some((prefix, _)) = v.path.split_last() {
            let is_dir = matches!(oracle.lookup(fs, &prefix), Ok(Lookup::Defined(Contents::Directory(_))));
            if !is_dir {
                witnesses.push(Witness::Prefix { path: v.path.clone(), prefix });
            }
        }
    }
    Status::from_witnesses(witnesses)
}

/// Resolves `target`, then keeps following while the result is itself a soft
/// link, all under one budget.
fn chase(fs: &FsImage, target: &PathName, budget: LinkBudget) -> Result<Resolution, AlphaError> {
    let mut remaining = budget.0;
    let mut path = target.clone();
    loop {
        let outcome = resolver::namei_links(fs, fs.root(), &path, LinkBudget(remaining))?;
        remaining -= outcome.links_followed;
        let Resolution::Found(i) = outcome.result else { return Ok(outcome.result) };
        match resolver::alpha_defined(fs, i)? {
            Some(Contents::SoftLink(next)) => {
                if remaining == 0 {
                    return Ok(Resolution::LinkBudgetExhausted);
                }
                remaining -= 1;
                path = next;
            }
            _ => return Ok(outcome.result),
        }
    }
}

/// Soft links whose chains exhaust `budget`. These are warnings: loops are
/// permitted, traversal is bounded instead.
pub fn check_softlink_loops(fs: &FsImage, budget: LinkBudget) -> Status {
    check_softlink_loops_in(fs, &walk(fs), budget)
}

fn check_softlink_loops_in(fs: &FsImage, walk: &Walk, budget: LinkBudget) -> Status {
    let mut witnesses = Vec::new();
    for i in fs.indexes() {
        let Ok(Some(Contents::SoftLink(target))) = fs.alpha(i) else { continue };
        if matches!(chase(fs, &target, budget), Ok(Resolution::LinkBudgetExhausted)) {
            witnesses.push(Witness::SuspectedLoop { link: i, path: walk.path_of(i).cloned(), target });
        }
    }
    if witnesses.is_empty() { Status::Pass } else { Status::Warn(witnesses) }
}

/// Every inode slot decodes strictly and every defined inode's contents
/// decode.
pub fn check_inode_integrity(fs: &FsImage) -> Status {
    let mut witnesses = Vec::new();
    for i in fs.indexes() {
        let result = fs.inode_with(i, Strictness::Strict).and_then(|_| fs.alpha(i));
        if let Err(e) = result {
            witnesses.push(Witness::Unreadable { index: i, error: e.to_string() });
        }
    }
    Status::from_witnesses(witnesses)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub inodes: u64,
    pub undefined: u64,
    pub ordinary: u64,
    pub directories: u64,
    pub softlinks: u64,
    pub reachable: usize,
    pub max_depth: usize,
    pub directory_links: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: Status,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub checks: Vec<CheckResult>,
    pub stats: Stats,
    pub links: LinksMatrixSummary,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        !self.checks.iter().any(|c| c.status.is_fail())
    }

    pub fn status(&self, name: &str) -> Option<&Status> {
        self.checks.iter().find(|c| c.name == name).map(|c| &c.status)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| c.status.is_fail()).map(|c| c.name).collect()
    }
}

/// `CHECK <name> PASS|FAIL|WARN <witness>...` per check, then `STATS k=v`.
impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for check in &self.checks {
            let verdict = match &check.status {
                Status::Pass => "PASS",
                Status::Fail(_) => "FAIL",
                Status::Warn(_) => "WARN",
            };
            write!(f, "CHECK {} {verdict}", check.name)?;
            for witness in check.status.witnesses() {
                write!(f, " [{witness}]")?;
            }
            writeln!(f)?;
        }
        let s = &self.stats;
        for (k, v) in [
            ("inodes", s.inodes as usize),
            ("undefined", s.undefined as usize),
            ("ordinary", s.ordinary as usize),
            ("directories", s.directories as usize),
            ("softlinks", s.softlinks as usize),
            ("reachable", s.reachable),
            ("max_depth", s.max_depth),
            ("directory_links", s.directory_links),
        ] {
            writeln!(f, "STATS {k}={v}")?;
        }
        Ok(())
    }
}

pub const CHECK_NAMES: [&str; 8] = [
    "inode_integrity",
    "no_orphans",
    "no_dangling",
    "dot_laws",
    "alias_free",
    "link_constraint",
    "prefix_property",
    "softlink_loops",
];

/// Runs every check. Clean iff no check fails; soft-link loops only warn.
pub fn fsck(fs: &FsImage, budget: LinkBudget) -> CheckReport {
    let walk = walk(fs);
    let links = links_summary(fs);
    let statuses = [
        check_inode_integrity(fs),
        check_no_orphans_in(fs, &walk),
        check_no_dangling_in(fs, &walk),
        check_dot_laws_in(fs, &walk),
        check_alias_free_in(&walk),
        check_link_constraint_in(fs, &links),
        check_prefix_property_with(fs, &walk, &Resolver),
        check_softlink_loops_in(fs, &walk, budget),
    ];
    let checks = CHECK_NAMES
        .iter()
        .zip(statuses)
        .map(|(&name, status)| CheckResult { name, status })
        .collect();

    let mut stats = Stats { inodes: fs.inode_count(), ..Stats::default() };
    for i in fs.indexes() {
        match fs.inode(i) {
            Ok(Some(r)) => match r.ftype {
                FileType::Ordinary => stats.ordinary += 1,
                FileType::Directory => stats.directories += 1,
                FileType::SoftLink => stats.softlinks += 1,
            },
            Ok(None) => stats.undefined += 1,
            Err(_) => {}
        }
    }
    stats.reachable = walk.visits.len();
    stats.max_depth = walk.max_depth;
    stats.directory_links = links.total();
    CheckReport { checks, stats, links }
}
