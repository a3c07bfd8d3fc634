//! Manifest to image.
//!
//! Layout: superblock, then the inode table starting at block 1, then data
//! blocks appended in inode order. The root is index 0 and declarations take
//! indexes 1.. in manifest order. Every directory gets `.` (itself) and `..`
//! (its parent; the root's parent is the root).

use std::path::Path;

use thiserror::Error;

use crate::blockdev::{Block, BlockNumber, Geometry, BLOCK_SIZE};
use crate::codec::{self, CodecError, DirectoryMap, FileType, InodeRecord, Name, PathName, DIRECT_SLOTS, MAX_FILE_SIZE};
use crate::toolkit::manifest::{Declaration, Manifest, PayloadSource};
use crate::Index;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("{path}: {size} bytes exceeds the {MAX_FILE_SIZE}-byte file limit")]
    FileTooLarge { path: PathName, size: u64 },
    #[error("image full: {0}")]
    ImageFull(String),
    #[error("reading payload for {path}: {source}")]
    Payload {
        path: PathName,
        #[source]
        source: std::io::Error,
    },
    #[error("writing image: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Undefined inode slots appended after the used ones.
    pub spare_inodes: u64,
}

/// Builds the image and writes it to `out`.
pub fn build_image(manifest: &Manifest, out: impl AsRef<Path>) -> Result<Geometry, BuildError> {
    build_image_with(manifest, out, &BuildOptions::default())
}

pub fn build_image_with(manifest: &Manifest, out: impl AsRef<Path>, options: &BuildOptions) -> Result<Geometry, BuildError> {
    let (bytes, geometry) = build_image_bytes(manifest, options)?;
    std::fs::write(out, bytes)?;
    Ok(geometry)
}

struct Node {
    ftype: FileType,
    payload: Vec<u8>,
    dir: DirectoryMap,
    path: PathName,
}

pub fn build_image_bytes(manifest: &Manifest, options: &BuildOptions) -> Result<(Vec<u8>, Geometry), BuildError> {
    let nodes = layout(manifest)?;

    let inode_count = nodes.len() as u64 + options.spare_inodes;
    if inode_count > 1 << 32 {
        return Err(BuildError::ImageFull(format!("{inode_count} inodes do not fit 4-byte indexes")));
    }
    let inode_table_start = 1u64;
    let mut data = DataArea { next: inode_table_start + inode_count, blocks: Vec::new() };
    let mut inode_blocks = Vec::with_capacity(nodes.len());

    for node in &nodes {
        let payload = match node.ftype {
            FileType::Directory => codec::encode_directory(&node.dir)?,
            _ => node.payload.clone(),
        };
        let size = payload.len() as u64;
        if size > MAX_FILE_SIZE {
            return Err(BuildError::FileTooLarge { path: node.path.clone(), size });
        }
        let mut chunks = payload.chunks(BLOCK_SIZE);
        let direct = chunks
            .by_ref()
            .take(DIRECT_SLOTS)
            .map(|c| data.append(c))
            .collect::<Result<Vec<_>, _>>()?;
        let indirect = if chunks.len() == 0 {
            None
        } else {
            // the table block precedes the blocks it lists
            let table = data.append(&[])?;
            let numbers = chunks.map(|c| data.append(c)).collect::<Result<Vec<_>, _>>()?;
            data.replace(table, codec::encode_indirect(&numbers)?);
            Some(table)
        };
        let record = InodeRecord { ftype: node.ftype, size, direct, indirect };
        inode_blocks.push(codec::encode_inode(&record)?);
    }
    let next_block = data.next;

    let geometry = Geometry {
        block_size: BLOCK_SIZE as u32,
        block_count: next_block,
        inode_count,
        root_index: Index(0),
        inode_table_start: BlockNumber(inode_table_start as u32),
    };
    let mut bytes = Vec::with_capacity(next_block as usize * BLOCK_SIZE);
    bytes.extend_from_slice(geometry.encode_superblock().as_bytes());
    for block in &inode_blocks {
        bytes.extend_from_slice(block.as_bytes());
    }
    bytes.resize((inode_table_start + inode_count) as usize * BLOCK_SIZE, 0);
    for block in &data.blocks {
        bytes.extend_from_slice(block.as_bytes());
    }
    Ok((bytes, geometry))
}

/// Sequentially appended data blocks.
struct DataArea {
    next: u64,
    blocks: Vec<Block>,
}

impl DataArea {
    fn append(&mut self, bytes: &[u8]) -> Result<BlockNumber, BuildError> {
        let n = u32::try_from(self.next).map_err(|_| BuildError::ImageFull("more than 2^32 blocks".into()))?;
        let mut block = Block::zeroed();
        block.as_bytes_mut()[..bytes.len()].copy_from_slice(bytes);
        self.blocks.push(block);
        self.next += 1;
        Ok(BlockNumber(n))
    }

    fn replace(&mut self, at: BlockNumber, block: Block) {
        let first = self.next - self.blocks.len() as u64;
        self.blocks[(u64::from(at.0) - first) as usize] = block;
    }
}

/// Assigns indexes and materializes every inode's contents.
fn layout(manifest: &Manifest) -> Result<Vec<Node>, BuildError> {
    let dot = Name::new(".").expect("valid");
    let dotdot = Name::new("..").expect("valid");
    let root = Index(0);

    let mut nodes = vec![Node {
        ftype: FileType::Directory,
        payload: Vec::new(),
        dir: [(dot.clone(), root), (dotdot.clone(), root)].into_iter().collect(),
        path: PathName::empty(),
    }];
    let mut by_path = std::collections::HashMap::new();
    by_path.insert(PathName::empty(), root);

    for decl in manifest.declarations() {
        let index = Index(nodes.len() as u64);
        let path = decl.path().clone();
        let (parent_path, name) = path.split_last().expect("manifest paths are non-empty");
        let parent = by_path[&parent_path];
        nodes[parent.0 as usize].dir.insert(name.clone(), index);

        let mut node = Node { ftype: FileType::Ordinary, payload: Vec::new(), dir: DirectoryMap::new(), path: path.clone() };
        match decl {
            Declaration::Dir(_) => {
                node.ftype = FileType::Directory;
                node.dir.insert(dot.clone(), index);
                node.dir.insert(dotdot.clone(), parent);
            }
            Declaration::File(_, PayloadSource::Inline(bytes)) => node.payload = bytes.clone(),
            Declaration::File(_, PayloadSource::HostFile(host)) => {
                let host = match manifest.base_dir() {
                    Some(base) if host.is_relative() => base.join(host),
                    _ => host.clone(),
                };
                node.payload = std::fs::read(&host).map_err(|source| BuildError::Payload { path: path.clone(), source })?;
            }
            Declaration::Link(_, target) => {
                node.ftype = FileType::SoftLink;
                node.payload = codec::encode_softlink(target);
            }
        }
        by_path.insert(path, index);
        nodes.push(node);
    }
    Ok(nodes)
}
