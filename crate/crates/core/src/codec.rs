//! Bit-exact encoders and decoders for inode blocks, indirect blocks,
//! directory contents and soft-link contents.
//!
//! Inode block layout (512 bytes):
//!
//! ```text
//! 0         type tag: 0 undefined, 1 ordinary, 2 directory, 3 soft link
//! 1..8      zero
//! 8..16     size in bytes, u64 BE
//! 16..496   120 direct block numbers, u32 BE, unused slots 0
//! 496..500  indirect block number, u32 BE, 0 = none
//! 500..512  zero
//! ```
//!
//! A directory is a sequence of entries, each the UTF-8 name, two zero bytes,
//! then the 4-byte big-endian index. `"passwords" -> 34832` encodes as
//! `70 61 73 73 77 6f 72 64 73 00 00 00 00 88 10`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::blockdev::{Block, BlockNumber, BLOCK_SIZE};
use crate::Index;

pub const DIRECT_SLOTS: usize = 120;
pub const INDIRECT_SLOTS: usize = BLOCK_SIZE / 4;
/// Largest file size addressable with one level of indirection.
pub const MAX_FILE_SIZE: u64 = ((DIRECT_SLOTS + INDIRECT_SLOTS) * BLOCK_SIZE) as u64;

const SIZE_OFFSET: usize = 8;
const DIRECT_OFFSET: usize = 16;
const INDIRECT_OFFSET: usize = DIRECT_OFFSET + DIRECT_SLOTS * 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("bad inode type tag {0}")]
    BadTypeTag(u8),
    #[error("size {0} exceeds the one-indirect maximum of {MAX_FILE_SIZE}")]
    SizeOverflow(u64),
    #[error("reserved inode bytes are not zero")]
    NonZeroPadding,
    #[error("{0} direct block numbers, at most {DIRECT_SLOTS} fit")]
    TooManyDirect(usize),
    #[error("{0} leftover bytes do not form a complete directory entry")]
    TrailingGarbage(usize),
    #[error("empty name at byte {0}")]
    EmptyName(usize),
    #[error("name terminator at byte {0} is not two zero bytes")]
    BadTerminator(usize),
    #[error("duplicate name {0:?}")]
    DuplicateName(String),
    #[error("name is not valid UTF-8")]
    BadUtf8,
    #[error("name contains a zero byte")]
    NameContainsZeroByte,
    #[error("name {0:?} contains '/'")]
    NameContainsSlash(String),
    #[error("empty path element")]
    EmptyElement,
    #[error("index {0} does not fit in a 4-byte directory entry")]
    IndexTooWide(Index),
}

/// A non-empty path element. Never contains `/` or a zero byte.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(String);

impl Name {
    pub fn new(s: impl Into<String>) -> Result<Name, CodecError> {
        let s = s.into();
        if s.is_empty() {
            return Err(CodecError::EmptyElement);
        }
        if s.contains('\0') {
            return Err(CodecError::NameContainsZeroByte);
        }
        if s.contains('/') {
            return Err(CodecError::NameContainsSlash(s));
        }
        Ok(Name(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True for the special self and parent entries.
    pub fn is_dot(&self) -> bool {
        self.0 == "." || self.0 == ".."
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Name {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// A finite sequence of names. The empty sequence is the null path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PathName(Vec<Name>);

impl PathName {
    pub fn empty() -> PathName {
        PathName(Vec::new())
    }

    pub fn new(elements: Vec<Name>) -> PathName {
        PathName(elements)
    }

    /// Parses `/`-separated text. A leading `/` is optional and both `""`
    /// and `"/"` denote the null path.
    pub fn parse(s: &str) -> Result<PathName, CodecError> {
        let rest = s.strip_prefix('/').unwrap_or(s);
        if rest.is_empty() {
            return Ok(PathName::empty());
        }
        rest.split('/').map(Name::new).collect::<Result<_, _>>().map(PathName)
    }

    pub fn elements(&self) -> &[Name] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Name> {
        self.0.iter()
    }

    /// The path with `name` appended on the right.
    pub fn child(&self, name: Name) -> PathName {
        let mut v = self.0.clone();
        v.push(name);
        PathName(v)
    }

    /// Concatenation `self ++ rest`.
    pub fn concat(&self, rest: &[Name]) -> PathName {
        let mut v = Vec::with_capacity(self.0.len() + rest.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(rest);
        PathName(v)
    }

    /// Splits off the rightmost element.
    pub fn split_last(&self) -> Option<(PathName, &Name)> {
        let (last, init) = self.0.split_last()?;
        Some((PathName(init.to_vec()), last))
    }

    pub fn is_dot_free(&self) -> bool {
        !self.0.iter().any(Name::is_dot)
    }

    /// Every proper prefix, shortest first, starting with the null path.
    pub fn proper_prefixes(&self) -> impl Iterator<Item = PathName> + '_ {
        (0..self.0.len()).map(|n| PathName(self.0[..n].to_vec()))
    }
}

impl fmt::Display for PathName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for name in &self.0 {
            write!(f, "/{name}")?;
        }
        Ok(())
    }
}

impl FromIterator<Name> for PathName {
    fn from_iter<I: IntoIterator<Item = Name>>(iter: I) -> Self {
        PathName(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FileType {
    Ordinary,
    Directory,
    SoftLink,
}

impl FileType {
    pub fn tag(self) -> u8 {
        match self {
            FileType::Ordinary => 1,
            FileType::Directory => 2,
            FileType::SoftLink => 3,
        }
    }

    fn from_tag(tag: u8) -> Result<Option<FileType>, CodecError> {
        match tag {
            0 => Ok(None),
            1 => Ok(Some(FileType::Ordinary)),
            2 => Ok(Some(FileType::Directory)),
            3 => Ok(Some(FileType::SoftLink)),
            t => Err(CodecError::BadTypeTag(t)),
        }
    }
}

impl fmt::Display for FileType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FileType::Ordinary => "ordinary",
            FileType::Directory => "directory",
            FileType::SoftLink => "softlink",
        })
    }
}

/// Decoded inode block: type, size and the file's block list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InodeRecord {
    pub ftype: FileType,
    pub size: u64,
    pub direct: Vec<BlockNumber>,
    pub indirect: Option<BlockNumber>,
}

impl InodeRecord {
    /// Blocks needed to hold `size` bytes.
    pub fn block_count(&self) -> usize {
        blocks_for(self.size)
    }
}

pub fn blocks_for(size: u64) -> usize {
    size.div_ceil(BLOCK_SIZE as u64) as usize
}

/// Whether reserved inode bytes must be zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    #[default]
    Lenient,
    Strict,
}

/// Decodes an inode block. `Ok(None)` means the slot is undefined (tag 0).
/// The direct list is cut to the number of blocks the size requires.
pub fn decode_inode(block: &Block, strictness: Strictness) -> Result<Option<InodeRecord>, CodecError> {
    let b = block.as_bytes();
    let Some(ftype) = FileType::from_tag(b[0])? else {
        return Ok(None);
    };
    if strictness == Strictness::Strict
        && (b[1..SIZE_OFFSET].iter().any(|&x| x != 0) || b[INDIRECT_OFFSET + 4..].iter().any(|&x| x != 0))
    {
        return Err(CodecError::NonZeroPadding);
    }
    let size = u64::from_be_bytes(b[SIZE_OFFSET..DIRECT_OFFSET].try_into().unwrap());
    if size > MAX_FILE_SIZE {
        return Err(CodecError::SizeOverflow(size));
    }
    let used = blocks_for(size).min(DIRECT_SLOTS);
    let direct = b[DIRECT_OFFSET..INDIRECT_OFFSET]
        .chunks_exact(4)
        .take(used)
        .map(read_block_number)
        .collect();
    let indirect = read_block_number(&b[INDIRECT_OFFSET..INDIRECT_OFFSET + 4]);
    Ok(Some(InodeRecord {
        ftype,
        size,
        direct,
        indirect: (!indirect.is_null()).then_some(indirect),
    }))
}

pub fn encode_inode(record: &InodeRecord) -> Result<Block, CodecError> {
    if record.direct.len() > DIRECT_SLOTS {
        return Err(CodecError::TooManyDirect(record.direct.len()));
    }
    if record.size > MAX_FILE_SIZE {
        return Err(CodecError::SizeOverflow(record.size));
    }
    let mut block = Block::zeroed();
    let b = block.as_bytes_mut();
    b[0] = record.ftype.tag();
    b[SIZE_OFFSET..DIRECT_OFFSET].copy_from_slice(&record.size.to_be_bytes());
    for (slot, n) in b[DIRECT_OFFSET..INDIRECT_OFFSET].chunks_exact_mut(4).zip(&record.direct) {
        slot.copy_from_slice(&n.0.to_be_bytes());
    }
    let indirect = record.indirect.unwrap_or(BlockNumber::NULL);
    b[INDIRECT_OFFSET..INDIRECT_OFFSET + 4].copy_from_slice(&indirect.0.to_be_bytes());
    Ok(block)
}

/// Reinterprets a block as 128 block numbers.
pub fn decode_indirect(block: &Block) -> Vec<BlockNumber> {
    block.as_bytes().chunks_exact(4).map(read_block_number).collect()
}

pub fn encode_indirect(numbers: &[BlockNumber]) -> Result<Block, CodecError> {
    if numbers.len() > INDIRECT_SLOTS {
        return Err(CodecError::TooManyDirect(numbers.len()));
    }
    let mut block = Block::zeroed();
    for (slot, n) in block.as_bytes_mut().chunks_exact_mut(4).zip(numbers) {
        slot.copy_from_slice(&n.0.to_be_bytes());
    }
    Ok(block)
}

fn read_block_number(bytes: &[u8]) -> BlockNumber {
    BlockNumber(u32::from_be_bytes(bytes.try_into().unwrap()))
}

/// A directory: a finite map from names to indexes, kept in canonical
/// (byte-lexicographic) order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DirectoryMap(BTreeMap<Name, Index>);

impl DirectoryMap {
    pub fn new() -> DirectoryMap {
        DirectoryMap::default()
    }

    /// Inserts an entry, returning the previous target if `name` was present.
    pub fn insert(&mut self, name: Name, index: Index) -> Option<Index> {
        self.0.insert(name, index)
    }

    pub fn get(&self, name: &Name) -> Option<Index> {
        self.0.get(name).copied()
    }

    pub fn get_str(&self, name: &str) -> Option<Index> {
        self.0.iter().find(|(n, _)| n.as_str() == name).map(|(_, &i)| i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, Index)> {
        self.0.iter().map(|(n, &i)| (n, i))
    }

    /// Entries other than `.` and `..`.
    pub fn dot_free(&self) -> impl Iterator<Item = (&Name, Index)> {
        self.iter().filter(|(n, _)| !n.is_dot())
    }
}

impl FromIterator<(Name, Index)> for DirectoryMap {
    fn from_iter<I: IntoIterator<Item = (Name, Index)>>(iter: I) -> Self {
        DirectoryMap(iter.into_iter().collect())
    }
}

/// Parses directory contents, keeping on-disk entry order.
pub fn decode_directory_entries(data: &[u8]) -> Result<Vec<(Name, Index)>, CodecError> {
    let mut entries = Vec::new();
    let mut pos = 0;
    while pos < data.len() {
        let Some(nul) = data[pos..].iter().position(|&b| b == 0) else {
            return Err(CodecError::TrailingGarbage(data.len() - pos));
        };
        if nul == 0 {
            return Err(CodecError::EmptyName(pos));
        }
        let name_end = pos + nul;
        if name_end + 6 > data.len() {
            return Err(CodecError::TrailingGarbage(data.len() - pos));
        }
        if data[name_end + 1] != 0 {
            return Err(CodecError::BadTerminator(name_end));
        }
        let text = std::str::from_utf8(&data[pos..name_end]).map_err(|_| CodecError::BadUtf8)?;
        let name = Name::new(text)?;
        let index = u32::from_be_bytes(data[name_end + 2..name_end + 6].try_into().unwrap());
        entries.push((name, Index(u64::from(index))));
        pos = name_end + 6;
    }
    Ok(entries)
}

pub fn decode_directory(data: &[u8]) -> Result<DirectoryMap, CodecError> {
    let mut map = DirectoryMap::new();
    for (name, index) in decode_directory_entries(data)? {
        if map.0.contains_key(&name) {
            return Err(CodecError::DuplicateName(name.0));
        }
        map.insert(name, index);
    }
    Ok(map)
}

/// Encodes entries in canonical order. Fails only for indexes wider than
/// four bytes; name rules are enforced by [`Name::new`].
pub fn encode_directory(dir: &DirectoryMap) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::new();
    for (name, index) in dir.iter() {
        let wide = u32::try_from(index.0).map_err(|_| CodecError::IndexTooWide(index))?;
        out.extend_from_slice(name.as_str().as_bytes());
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&wide.to_be_bytes());
    }
    Ok(out)
}

/// Soft-link contents are the stored path as `/`-joined UTF-8 text with no
/// leading slash. Empty text is the null path.
pub fn decode_softlink(data: &[u8]) -> Result<PathName, CodecError> {
    let text = std::str::from_utf8(data).map_err(|_| CodecError::BadUtf8)?;
    if text.is_empty() {
        return Ok(PathName::empty());
    }
    text.split('/')
        .map(|s| if s.is_empty() { Err(CodecError::EmptyElement) } else { Name::new(s) })
        .collect()
}

pub fn encode_softlink(path: &PathName) -> Vec<u8> {
    path.iter().map(Name::as_str).collect::<Vec<_>>().join("/").into_bytes()
}
