//! Path resolution: the tree layer on top of [`FsImage::alpha`].
//!
//! [`namei`] consumes the leftmost path element per step, looking it up in
//! the current directory. [`namei_links`] additionally splices soft links in
//! front of the remaining path and restarts from the root, paying one unit of
//! a [`LinkBudget`] per link so resolution always terminates.
//!
//! A trailing soft link is never followed: resolving a path that ends at a
//! link yields the link's own index.

use std::collections::BTreeSet;

use crate::alpha::{AlphaError, Contents, FsImage};
use crate::codec::{FileType, Name, PathName};
use crate::Index;

/// Links followed per resolution unless told otherwise.
pub const DEFAULT_LINK_BUDGET: u32 = 40;

/// Remaining soft-link traversals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinkBudget(pub u32);

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget(DEFAULT_LINK_BUDGET)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Found(Index),
    NotFound,
    LinkBudgetExhausted,
}

impl Resolution {
    pub fn index(self) -> Option<Index> {
        match self {
            Resolution::Found(i) => Some(i),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolveOutcome {
    pub result: Resolution,
    /// Recursive steps taken, counting the final base case.
    pub steps: usize,
    pub links_followed: u32,
}

/// α with out-of-range indexes read as undefined. A directory entry naming a
/// slot past the inode table is a dangling reference like any other.
pub(crate) fn alpha_defined(fs: &FsImage, index: Index) -> Result<Option<Contents>, AlphaError> {
    match fs.alpha(index) {
        Err(AlphaError::IndexOutOfRange { .. }) => Ok(None),
        other => other,
    }
}

pub(crate) fn file_type(fs: &FsImage, index: Index) -> Result<Option<FileType>, AlphaError> {
    match fs.inode(index) {
        Ok(record) => Ok(record.map(|r| r.ftype)),
        Err(AlphaError::IndexOutOfRange { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Link-blind resolution: soft links are plain leaves.
pub fn namei(fs: &FsImage, start: Index, path: &PathName) -> Result<ResolveOutcome, AlphaError> {
    let mut current = start;
    let mut steps = 1;
    for name in path.iter() {
        let next = match alpha_defined(fs, current)? {
            Some(Contents::Directory(dir)) => dir.get(name),
            _ => None,
        };
        let Some(next) = next else {
            return Ok(ResolveOutcome { result: Resolution::NotFound, steps, links_followed: 0 });
        };
        current = next;
        steps += 1;
    }
    Ok(ResolveOutcome { result: Resolution::Found(current), steps, links_followed: 0 })
}

/// Resolution that follows soft links met before the end of the path.
///
/// When the current index holds a link and elements remain, resolution
/// restarts at the root on `link ++ remaining`. A link met with an exhausted
/// budget yields [`Resolution::LinkBudgetExhausted`].
pub fn namei_links(
    fs: &FsImage,
    start: Index,
    path: &PathName,
    budget: LinkBudget,
) -> Result<ResolveOutcome, AlphaError> {
    let root = fs.root();
    let mut current = start;
    let mut remaining: Vec<Name> = path.elements().to_vec();
    // consumed from the front via a cursor; links splice a new vector
    let mut pos = 0;
    let mut budget = budget.0;
    let mut steps = 1;
    let mut links_followed = 0;
    let outcome = |result, steps, links_followed| Ok(ResolveOutcome { result, steps, links_followed });

    while pos < remaining.len() {
        match alpha_defined(fs, current)? {
            Some(Contents::Directory(dir)) => match dir.get(&remaining[pos]) {
                Some(next) => {
                    current = next;
                    pos += 1;
                }
                None => return outcome(Resolution::NotFound, steps, links_followed),
            },
            Some(Contents::SoftLink(target)) => {
                if budget == 0 {
                    return outcome(Resolution::LinkBudgetExhausted, steps, links_followed);
                }
                budget -= 1;
                links_followed += 1;
                remaining = target.concat(&remaining[pos..]).elements().to_vec();
                pos = 0;
                current = root;
            }
            _ => return outcome(Resolution::NotFound, steps, links_followed),
        }
        steps += 1;
    }
    outcome(Resolution::Found(current), steps, links_followed)
}

/// β: resolve from the root with the default link budget.
pub fn beta(fs: &FsImage, path: &PathName) -> Result<Resolution, AlphaError> {
    beta_with(fs, path, LinkBudget::default())
}

pub fn beta_with(fs: &FsImage, path: &PathName, budget: LinkBudget) -> Result<Resolution, AlphaError> {
    Ok(namei_links(fs, fs.root(), path, budget)?.result)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lookup {
    Defined(Contents),
    Undefined,
    LinkBudgetExhausted,
}

impl Lookup {
    pub fn contents(&self) -> Option<&Contents> {
        match self {
            Lookup::Defined(c) => Some(c),
            _ => None,
        }
    }
}

/// F = α ∘ β.
pub fn f_lookup(fs: &FsImage, path: &PathName) -> Result<Lookup, AlphaError> {
    f_lookup_with(fs, path, LinkBudget::default())
}

pub fn f_lookup_with(fs: &FsImage, path: &PathName, budget: LinkBudget) -> Result<Lookup, AlphaError> {
    Ok(match beta_with(fs, path, budget)? {
        Resolution::Found(i) => alpha_defined(fs, i)?.map_or(Lookup::Undefined, Lookup::Defined),
        Resolution::NotFound => Lookup::Undefined,
        Resolution::LinkBudgetExhausted => Lookup::LinkBudgetExhausted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ListMode {
    /// Only entries naming directories, as in the classic `list` definition.
    DirsOnly,
    /// Every entry naming a defined inode.
    #[default]
    All,
}

/// Names in `F(path)` other than `.` and `..` whose targets are defined
/// (and, in [`ListMode::DirsOnly`], directories). Empty when `F(path)` is
/// undefined or not a directory.
pub fn list_entries(fs: &FsImage, path: &PathName, mode: ListMode) -> Result<BTreeSet<Name>, AlphaError> {
    match f_lookup(fs, path)? {
        Lookup::Defined(Contents::Directory(dir)) => {
            let children = list_dir(fs, &dir, mode)?;
            Ok(children.into_iter().map(|(name, _, _)| name).collect())
        }
        _ => Ok(BTreeSet::new()),
    }
}

fn list_dir(
    fs: &FsImage,
    dir: &crate::DirectoryMap,
    mode: ListMode,
) -> Result<Vec<(Name, Index, FileType)>, AlphaError> {
    let mut out = Vec::new();
    for (name, target) in dir.dot_free() {
        let Some(ftype) = file_type(fs, target)? else { continue };
        if mode == ListMode::All || ftype == FileType::Directory {
            out.push((name.clone(), target, ftype));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FindResult {
    pub paths: BTreeSet<PathName>,
    /// Some subtree was pruned because a soft link could not be followed.
    pub budget_exhausted: bool,
    /// Longest returned path, in elements.
    pub max_depth: usize,
    /// Some branch was cut at the depth limit. Never set on alias-free
    /// images.
    pub depth_limited: bool,
}

/// All paths rooted at `path`.
///
/// Undefined `path` gives the empty set; an ordinary file, soft link or empty
/// directory gives `{path}`; otherwise `{path}` joined with the results for
/// each listed child. In [`ListMode::All`] a soft-link child whose target
/// resolves to a directory is descended into, paying for the link and any
/// links met while resolving its target out of `budget`, which is carried
/// down each branch. When a link cannot be paid for, its subtree is pruned
/// and `budget_exhausted` is set.
///
/// On an alias-free image no path is longer than the inode count per link
/// traversed; branches beyond `inode_count * (budget + 1)` elements are cut
/// and flagged in `depth_limited`.
pub fn find(fs: &FsImage, path: &PathName, mode: ListMode, budget: LinkBudget) -> Result<FindResult, AlphaError> {
    let mut result = FindResult::default();
    let start = namei_links(fs, fs.root(), path, budget)?;
    let index = match start.result {
        Resolution::Found(i) => i,
        Resolution::NotFound => return Ok(result),
        Resolution::LinkBudgetExhausted => {
            result.budget_exhausted = true;
            return Ok(result);
        }
    };
    let Some(contents) = alpha_defined(fs, index)? else {
        return Ok(result);
    };

    let depth_limit = (fs.inode_count() as usize).saturating_mul(budget.0 as usize + 1);
    let mut stack = vec![(contents, path.clone(), budget.0 - start.links_followed)];
    while let Some((contents, here, budget)) = stack.pop() {
        result.max_depth = result.max_depth.max(here.len());
        if here.len() >= path.len() + depth_limit {
            result.depth_limited = true;
            result.paths.insert(here);
            continue;
        }
        let dir = match contents {
            Contents::Directory(dir) => dir,
            _ => {
                result.paths.insert(here);
                continue;
            }
        };
        for (name, target, ftype) in list_dir(fs, &dir, mode)? {
            let child = here.child(name);
            match ftype {
                FileType::Directory => {
                    if let Some(c) = alpha_defined(fs, target)? {
                        stack.push((c, child, budget));
                    }
                }
                FileType::Ordinary => {
                    result.max_depth = result.max_depth.max(child.len());
                    result.paths.insert(child);
                }
                FileType::SoftLink => {
                    result.max_depth = result.max_depth.max(child.len());
                    if let Some((c, left)) = follow_link_child(fs, target, budget, &mut result)? {
                        stack.push((c, child.clone(), left));
                    }
                    result.paths.insert(child);
                }
            }
        }
        result.paths.insert(here);
    }
    Ok(result)
}

/// Resolves a link child for `find`; returns the directory to descend into
/// and the budget left afterwards.
fn follow_link_child(
    fs: &FsImage,
    link: Index,
    budget: u32,
    result: &mut FindResult,
) -> Result<Option<(Contents, u32)>, AlphaError> {
    if budget == 0 {
        result.budget_exhausted = true;
        return Ok(None);
    }
    let Some(Contents::SoftLink(target)) = alpha_defined(fs, link)? else {
        return Ok(None);
    };
    let outcome = namei_links(fs, fs.root(), &target, LinkBudget(budget - 1))?;
    match outcome.result {
        Resolution::Found(i) => match alpha_defined(fs, i)? {
            Some(c @ Contents::Directory(_)) => Ok(Some((c, budget - 1 - outcome.links_followed))),
            _ => Ok(None),
        },
        Resolution::NotFound => Ok(None),
        Resolution::LinkBudgetExhausted => {
            result.budget_exhausted = true;
            Ok(None)
        }
    }
}
