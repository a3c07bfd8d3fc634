//! Helpers shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use treefold::codec::{self, decode_indirect, Strictness};
use treefold::toolkit::builder::{build_image_bytes, BuildOptions};
use treefold::toolkit::manifest::{Declaration, Manifest, PayloadSource};
use treefold::{Block, FsImage, Index, Name, PathName, BLOCK_SIZE};

pub fn p(text: &str) -> PathName {
    PathName::parse(text).unwrap()
}

pub fn build(manifest: &Manifest) -> Vec<u8> {
    build_image_bytes(manifest, &BuildOptions::default()).unwrap().0
}

pub fn build_text(text: &str) -> Vec<u8> {
    build(&Manifest::parse(text).unwrap())
}

pub fn open(bytes: &[u8]) -> FsImage {
    FsImage::from_bytes(bytes.to_vec()).unwrap()
}

fn be32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn be64(bytes: &[u8], at: usize) -> u64 {
    u64::from_be_bytes(bytes[at..at + 8].try_into().unwrap())
}

/// Byte offset of inode `i`, read straight from the superblock fields.
pub fn inode_offset(bytes: &[u8], i: Index) -> usize {
    let table_start = be32(bytes, 36) as usize;
    (table_start + i.0 as usize) * BLOCK_SIZE
}

pub fn inode_count(bytes: &[u8]) -> u64 {
    be64(bytes, 20)
}

pub fn set_tag(bytes: &mut [u8], i: Index, tag: u8) {
    let at = inode_offset(bytes, i);
    bytes[at] = tag;
}

/// Makes inode `i` an undefined slot.
pub fn zero_inode(bytes: &mut [u8], i: Index) {
    let at = inode_offset(bytes, i);
    bytes[at..at + BLOCK_SIZE].fill(0);
}

/// Writes an empty ordinary file into slot `i`.
pub fn write_empty_file(bytes: &mut [u8], i: Index) {
    zero_inode(bytes, i);
    set_tag(bytes, i, 1);
}

/// Image byte offsets holding the contents of inode `i`, in file order.
fn content_offsets(bytes: &[u8], i: Index) -> Vec<usize> {
    let block = Block::from_slice(&bytes[inode_offset(bytes, i)..][..BLOCK_SIZE]).unwrap();
    let record = codec::decode_inode(&block, Strictness::Lenient).unwrap().unwrap();
    let mut blocks = record.direct.clone();
    if let Some(table) = record.indirect {
        let at = table.0 as usize * BLOCK_SIZE;
        let table = Block::from_slice(&bytes[at..at + BLOCK_SIZE]).unwrap();
        blocks.extend(decode_indirect(&table));
    }
    blocks
        .iter()
        .flat_map(|b| (0..BLOCK_SIZE).map(move |k| b.0 as usize * BLOCK_SIZE + k))
        .take(record.size as usize)
        .collect()
}

/// One directory entry's location: the image offsets of its 4 index bytes.
#[derive(Debug, Clone)]
pub struct EntrySlot {
    pub dir: Index,
    pub name: Name,
    pub target: Index,
    offsets: [usize; 4],
}

/// Every entry of every defined directory, found by parsing the raw bytes.
pub fn entry_slots(bytes: &[u8]) -> Vec<EntrySlot> {
    let mut slots = Vec::new();
    for i in 0..inode_count(bytes) {
        let i = Index(i);
        if bytes[inode_offset(bytes, i)] != 2 {
            continue;
        }
        let offsets = content_offsets(bytes, i);
        let data: Vec<u8> = offsets.iter().map(|&o| bytes[o]).collect();
        let mut pos = 0;
        while pos < data.len() {
            let nul = data[pos..].iter().position(|&b| b == 0).unwrap();
            let name = Name::new(std::str::from_utf8(&data[pos..pos + nul]).unwrap()).unwrap();
            let at = pos + nul + 2;
            let target = Index(u64::from(u32::from_be_bytes(data[at..at + 4].try_into().unwrap())));
            let offsets = [offsets[at], offsets[at + 1], offsets[at + 2], offsets[at + 3]];
            slots.push(EntrySlot { dir: i, name, target, offsets });
            pos = at + 4;
        }
    }
    slots
}

pub fn write_slot(bytes: &mut [u8], slot: &EntrySlot, target: Index) {
    let be = (target.0 as u32).to_be_bytes();
    for (k, &o) in slot.offsets.iter().enumerate() {
        bytes[o] = be[k];
    }
}

/// Retargets the entry `name` of directory `dir`.
pub fn patch_entry(bytes: &mut [u8], dir: Index, name: &str, target: Index) {
    let slot = entry_slots(bytes)
        .into_iter()
        .find(|s| s.dir == dir && s.name.as_str() == name)
        .unwrap_or_else(|| panic!("no entry {name} in {dir}"));
    write_slot(bytes, &slot, target);
}

const NAMES: [&str; 8] = ["a", "b", "c", "etc", "usr", "passwords", "x y", "ümlaut"];

/// A random valid manifest with up to `max_decls` declarations. Links point
/// at existing paths, random paths, or themselves.
pub fn random_manifest(rng: &mut impl Rng, max_decls: usize, links: bool) -> Manifest {
    let mut manifest = Manifest::new();
    let mut dirs = vec![PathName::empty()];
    let mut all: Vec<PathName> = Vec::new();
    let count = rng.random_range(0..=max_decls);
    let mut attempts = 0;
    while manifest.len() < count && attempts < count * 10 {
        attempts += 1;
        let parent = dirs.choose(rng).unwrap().clone();
        let base = NAMES.choose(rng).unwrap();
        let name = if rng.random_bool(0.5) { base.to_string() } else { format!("{base}{}", rng.random_range(0..4)) };
        let path = parent.child(Name::new(name).unwrap());
        let roll = rng.random_range(0..10);
        let decl = if roll < 4 {
            Declaration::Dir(path.clone())
        } else if roll < 8 || !links {
            let len = match rng.random_range(0..10) {
                0 => rng.random_range(BLOCK_SIZE..4 * BLOCK_SIZE),
                _ => rng.random_range(0..64),
            };
            let payload: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            Declaration::File(path.clone(), PayloadSource::Inline(payload))
        } else {
            let target = match rng.random_range(0..3) {
                0 if !all.is_empty() => all.choose(rng).unwrap().clone(),
                1 => path.clone(),
                _ => PathName::new((0..rng.random_range(0..3)).map(|_| Name::new(*NAMES.choose(rng).unwrap()).unwrap()).collect()),
            };
            Declaration::Link(path.clone(), target)
        };
        let is_dir = matches!(decl, Declaration::Dir(_));
        if manifest.push(decl).is_ok() {
            if is_dir {
                dirs.push(path.clone());
            }
            all.push(path);
        }
    }
    manifest
}

/// The defined paths a manifest declares, plus the root.
pub fn declared_paths(manifest: &Manifest) -> BTreeSet<PathName> {
    std::iter::once(PathName::empty()).chain(manifest.declarations().iter().map(|d| d.path().clone())).collect()
}

/// Every defined dot-free path, by exhaustive descent over raw directory
/// bytes. `None` when some path is longer than the inode count, which only
/// happens on cyclic images.
pub fn brute_force_paths(bytes: &[u8]) -> Option<BTreeSet<PathName>> {
    let count = inode_count(bytes);
    let root = Index(be64(bytes, 28));
    let slots = entry_slots(bytes);
    let defined = |i: Index| i.0 < count && bytes[inode_offset(bytes, i)] != 0;
    let mut out = BTreeSet::new();
    let mut stack = vec![(PathName::empty(), root)];
    while let Some((path, i)) = stack.pop() {
        if path.len() as u64 > count {
            return None;
        }
        out.insert(path.clone());
        for s in slots.iter().filter(|s| s.dir == i && !s.name.is_dot() && defined(s.target)) {
            stack.push((path.child(s.name.clone()), s.target));
        }
    }
    Some(out)
}

/// A corrupted image and the checks it must fail.
pub struct Fixture {
    pub name: &'static str,
    pub intended: &'static str,
    /// Checks that necessarily fail alongside the intended one.
    pub also: &'static [&'static str],
    pub bytes: Vec<u8>,
}

fn with_spares(text: &str, spare_inodes: u64) -> Vec<u8> {
    build_image_bytes(&Manifest::parse(text).unwrap(), &BuildOptions { spare_inodes }).unwrap().0
}

/// Byte-patched images, each aimed at one check.
pub fn corruption_fixtures() -> Vec<Fixture> {
    let mut out = Vec::new();
    let mut push = |name, intended, also, bytes| out.push(Fixture { name, intended, also, bytes });

    let mut b = with_spares("dir /a\n", 1);
    write_empty_file(&mut b, Index(2));
    push("orphan_in_spare_slot", "no_orphans", &[][..], b);

    let mut b = with_spares("dir /a\nfile /a/f inline:\n", 1);
    let last = Index(inode_count(&b) - 1);
    patch_entry(&mut b, Index(1), "f", last);
    zero_inode(&mut b, Index(2));
    push("entry_to_undefined_slot", "no_dangling", &[], b);

    let mut b = build_text("dir /a\nfile /a/f inline:\n");
    patch_entry(&mut b, Index(1), "f", Index(999));
    zero_inode(&mut b, Index(2));
    push("entry_out_of_range", "no_dangling", &[], b);

    let mut b = build_text("dir /a\ndir /a/b\n");
    patch_entry(&mut b, Index(1), ".", Index(0));
    push("self_entry_to_root", "dot_laws", &[], b);

    let mut b = build_text("dir /a\n");
    patch_entry(&mut b, Index(0), "..", Index(1));
    push("root_parent_to_child", "dot_laws", &[], b);

    let mut b = build_text("dir /a\ndir /a/b\n");
    patch_entry(&mut b, Index(2), "..", Index(0));
    push("parent_entry_skips_level", "dot_laws", &[], b);

    let mut b = build_text("dir /a\nfile /a/f inline:\ndir /b\nfile /b/g inline:\n");
    patch_entry(&mut b, Index(3), "g", Index(2));
    zero_inode(&mut b, Index(4));
    push("hard_alias_of_file", "alias_free", &[], b);

    let mut b = build_text("file /f inline:00\n");
    let at = inode_offset(&b, Index(1));
    b[at + 1] = 0xff;
    push("inode_padding", "inode_integrity", &[], b);

    // a second parent or an entry for the root cannot avoid a second path
    // to the directory, whose ".." then names the wrong parent
    let mut b = build_text("dir /a\ndir /b\ndir /b/c\n");
    patch_entry(&mut b, Index(2), "c", Index(1));
    zero_inode(&mut b, Index(3));
    push("directory_with_two_parents", "link_constraint", &["alias_free", "dot_laws"], b);

    let mut b = build_text("dir /a\ndir /a/b\n");
    patch_entry(&mut b, Index(1), "b", Index(0));
    zero_inode(&mut b, Index(2));
    push("entry_aliasing_root", "link_constraint", &["alias_free", "dot_laws"], b);

    out
}
