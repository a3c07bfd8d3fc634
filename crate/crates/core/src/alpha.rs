//! The index layer: inode index to decoded file contents.
//!
//! The inode table is contiguous, so the inode block of index `i` is
//! `inode_table_start + i`. A file's bytes are its blocks concatenated in
//! order (direct slots, then the indirect block's entries) and truncated to
//! the recorded size.

use std::path::Path;

use thiserror::Error;

use crate::blockdev::{DiskError, DiskHandle, Geometry, BLOCK_SIZE};
use crate::codec::{self, CodecError, DirectoryMap, FileType, InodeRecord, PathName, Strictness};
use crate::{BlockNumber, Index};

#[derive(Debug, Error)]
pub enum AlphaError {
    #[error(transparent)]
    Disk(#[from] DiskError),
    #[error("inode {index}: {source}")]
    Codec {
        index: Index,
        #[source]
        source: CodecError,
    },
    #[error("index {index} out of range (inode count {count})")]
    IndexOutOfRange { index: Index, count: u64 },
    #[error("dangling block reference {0}")]
    DanglingBlockRef(BlockNumber),
    #[error("file of {size} bytes needs {need} blocks, only {have} referenced")]
    ShortBlockList { size: u64, need: usize, have: usize },
}

/// Decoded file contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Contents {
    Ordinary(Vec<u8>),
    Directory(DirectoryMap),
    SoftLink(PathName),
}

impl Contents {
    pub fn file_type(&self) -> FileType {
        match self {
            Contents::Ordinary(_) => FileType::Ordinary,
            Contents::Directory(_) => FileType::Directory,
            Contents::SoftLink(_) => FileType::SoftLink,
        }
    }

    pub fn as_directory(&self) -> Option<&DirectoryMap> {
        match self {
            Contents::Directory(d) => Some(d),
            _ => None,
        }
    }
}

/// An opened image: geometry plus the index layer on top of the disk.
#[derive(Debug)]
pub struct FsImage {
    disk: DiskHandle,
}

impl FsImage {
    pub fn open(path: impl AsRef<Path>) -> Result<FsImage, DiskError> {
        Ok(FsImage { disk: DiskHandle::open_image(path)? })
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<FsImage, DiskError> {
        Ok(FsImage { disk: DiskHandle::from_bytes(bytes)? })
    }

    pub fn disk(&self) -> &DiskHandle {
        &self.disk
    }

    pub fn geometry(&self) -> &Geometry {
        self.disk.geometry()
    }

    pub fn root(&self) -> Index {
        self.geometry().root_index
    }

    pub fn inode_count(&self) -> u64 {
        self.geometry().inode_count
    }

    pub fn indexes(&self) -> impl Iterator<Item = Index> {
        (0..self.inode_count()).map(Index)
    }

    /// Address of the inode block for `index`.
    pub fn alpha1(&self, index: Index) -> Result<BlockNumber, AlphaError> {
        let g = self.geometry();
        if index.0 >= g.inode_count {
            return Err(AlphaError::IndexOutOfRange { index, count: g.inode_count });
        }
        // inode_table_start + inode_count <= block_count < 2^32 when opened
        Ok(BlockNumber(g.inode_table_start.0 + index.0 as u32))
    }

    pub fn inode(&self, index: Index) -> Result<Option<InodeRecord>, AlphaError> {
        self.inode_with(index, Strictness::Lenient)
    }

    pub fn inode_with(&self, index: Index, strictness: Strictness) -> Result<Option<InodeRecord>, AlphaError> {
        let block = self.disk.read_block(self.alpha1(index)?)?;
        codec::decode_inode(&block, strictness).map_err(|source| AlphaError::Codec { index, source })
    }

    /// Concatenates the record's blocks and truncates to its size.
    pub fn file_contents(&self, record: &InodeRecord) -> Result<Vec<u8>, AlphaError> {
        let need = record.block_count();
        let mut blocks = record.direct.clone();
        if need > blocks.len() {
            if let Some(indirect) = record.indirect {
                let table = self.data_block(indirect)?;
                blocks.extend(codec::decode_indirect(&table).into_iter().take(need - blocks.len()));
            }
        }
        if blocks.len() < need {
            return Err(AlphaError::ShortBlockList { size: record.size, need, have: blocks.len() });
        }
        let mut data = Vec::with_capacity(need * BLOCK_SIZE);
        for &b in &blocks[..need] {
            data.extend_from_slice(self.data_block(b)?.as_bytes());
        }
        data.truncate(record.size as usize);
        Ok(data)
    }

    /// α(i). `Ok(None)` is the undefined case (free inode slot); decode
    /// failures are errors.
    pub fn alpha(&self, index: Index) -> Result<Option<Contents>, AlphaError> {
        let Some(record) = self.inode(index)? else {
            return Ok(None);
        };
        let data = self.file_contents(&record)?;
        let codec_err = |source| AlphaError::Codec { index, source };
        Ok(Some(match record.ftype {
            FileType::Ordinary => Contents::Ordinary(data),
            FileType::Directory => Contents::Directory(codec::decode_directory(&data).map_err(codec_err)?),
            FileType::SoftLink => Contents::SoftLink(codec::decode_softlink(&data).map_err(codec_err)?),
        }))
    }

    /// Directory entries of `index` in on-disk order, or `None` when the
    /// inode is not a directory.
    pub fn directory_entries(&self, index: Index) -> Result<Option<Vec<(codec::Name, Index)>>, AlphaError> {
        match self.inode(index)? {
            Some(record) if record.ftype == FileType::Directory => {
                let data = self.file_contents(&record)?;
                codec::decode_directory_entries(&data)
                    .map(Some)
                    .map_err(|source| AlphaError::Codec { index, source })
            }
            _ => Ok(None),
        }
    }

    fn data_block(&self, b: BlockNumber) -> Result<crate::Block, AlphaError> {
        self.disk.read_data_block(b).map_err(|e| match e {
            DiskError::NullBlock | DiskError::OutOfRange { .. } => AlphaError::DanglingBlockRef(b),
            other => AlphaError::Disk(other),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode_indirect, encode_inode, Name};
    use crate::Block;

    /// Hand-assembled image: superblock, `inodes` inode blocks, then `data`.
    fn assemble(inodes: &[Option<InodeRecord>], data: &[Block]) -> Vec<u8> {
        let geometry = Geometry {
            block_size: 512,
            block_count: (1 + inodes.len() + data.len()) as u64,
            inode_count: inodes.len() as u64,
            root_index: Index(0),
            inode_table_start: BlockNumber(1),
        };
        let mut bytes = geometry.encode_superblock().as_bytes().to_vec();
        for inode in inodes {
            let block = inode.as_ref().map_or_else(Block::zeroed, |r| encode_inode(r).unwrap());
            bytes.extend_from_slice(block.as_bytes());
        }
        for block in data {
            bytes.extend_from_slice(block.as_bytes());
        }
        bytes
    }

    fn filled(byte: u8) -> Block {
        Block::from_slice(&[byte; 512]).unwrap()
    }

    fn ordinary(size: u64, direct: Vec<u32>, indirect: Option<u32>) -> InodeRecord {
        InodeRecord {
            ftype: FileType::Ordinary,
            size,
            direct: direct.into_iter().map(BlockNumber).collect(),
            indirect: indirect.map(BlockNumber),
        }
    }

    #[test]
    fn alpha1_is_offset() {
        let fs = FsImage::from_bytes(assemble(&vec![None; 6], &[])).unwrap();
        assert_eq!(fs.alpha1(Index(0)).unwrap(), BlockNumber(1));
        assert_eq!(fs.alpha1(Index(5)).unwrap(), BlockNumber(6));
        assert!(matches!(fs.alpha1(Index(6)), Err(AlphaError::IndexOutOfRange { .. })));
    }

    #[test]
    fn truncation() {
        let mut hello = Block::zeroed();
        hello.as_bytes_mut()[..5].copy_from_slice(b"hello");
        let fs = FsImage::from_bytes(assemble(
            &[Some(ordinary(0, vec![], None)), Some(ordinary(5, vec![4], None)), None],
            &[hello],
        ))
        .unwrap();
        assert_eq!(fs.alpha(Index(0)).unwrap(), Some(Contents::Ordinary(vec![])));
        assert_eq!(fs.alpha(Index(1)).unwrap(), Some(Contents::Ordinary(b"hello".to_vec())));
        assert_eq!(fs.alpha(Index(2)).unwrap(), None);
    }

    #[test]
    fn two_blocks_against_raw_offsets() {
        let (b1, b2) = (filled(0x11), filled(0x22));
        let bytes = assemble(&[Some(ordinary(600, vec![2, 3], None))], &[b1, b2]);
        let fs = FsImage::from_bytes(bytes.clone()).unwrap();
        let Some(Contents::Ordinary(data)) = fs.alpha(Index(0)).unwrap() else { panic!() };
        // oracle: slice the raw image
        let mut expected = bytes[2 * 512..3 * 512].to_vec();
        expected.extend_from_slice(&bytes[3 * 512..3 * 512 + 88]);
        assert_eq!(data, expected);
    }

    #[test]
    fn indirect_blocks_follow_direct_ones() {
        // 122 data blocks: 120 direct + 2 through the indirect table
        let size = 121 * 512 + 7;
        let first_data = 2u32;
        let direct: Vec<u32> = (0..120).map(|k| first_data + k).collect();
        let table_block = first_data + 122;
        let mut data: Vec<Block> = (0..122).map(|k| filled(k as u8)).collect();
        data.push(encode_indirect(&[BlockNumber(first_data + 120), BlockNumber(first_data + 121)]).unwrap());
        let fs = FsImage::from_bytes(assemble(&[Some(ordinary(size, direct, Some(table_block)))], &data)).unwrap();
        let Some(Contents::Ordinary(bytes)) = fs.alpha(Index(0)).unwrap() else { panic!() };
        assert_eq!(bytes.len() as u64, size);
        assert_eq!(bytes[120 * 512], 120);
        assert_eq!(bytes[121 * 512 + 6], 121);
    }

    #[test]
    fn block_list_errors() {
        let fs = FsImage::from_bytes(assemble(
            &[
                Some(ordinary(600, vec![4], None)),
                Some(ordinary(10, vec![0], None)),
                Some(ordinary(10, vec![99], None)),
            ],
            &[filled(1)],
        ))
        .unwrap();
        // the second direct slot decodes as zero
        assert!(matches!(fs.alpha(Index(0)), Err(AlphaError::DanglingBlockRef(BlockNumber(0)))));
        assert!(matches!(fs.alpha(Index(1)), Err(AlphaError::DanglingBlockRef(BlockNumber(0)))));
        assert!(matches!(fs.alpha(Index(2)), Err(AlphaError::DanglingBlockRef(BlockNumber(99)))));

        // past the direct slots with no indirect table
        let fs = FsImage::from_bytes(assemble(&[Some(ordinary(121 * 512, vec![2; 120], None))], &[filled(1)])).unwrap();
        assert!(matches!(fs.alpha(Index(0)), Err(AlphaError::ShortBlockList { need: 121, have: 120, .. })));
    }

    #[test]
    fn passwords_directory() {
        let mut block = Block::zeroed();
        block.as_bytes_mut()[..15].copy_from_slice(&[
            0x70, 0x61, 0x73, 0x73, 0x77, 0x6F, 0x72, 0x64, 0x73, 0x00, 0x00, 0x00, 0x00, 0x88, 0x10,
        ]);
        let dir = InodeRecord {
            ftype: FileType::Directory,
            size: 15,
            direct: vec![BlockNumber(2)],
            indirect: None,
        };
        let fs = FsImage::from_bytes(assemble(&[Some(dir)], &[block])).unwrap();
        let expected: DirectoryMap = [(Name::new("passwords").unwrap(), Index(34832))].into_iter().collect();
        assert_eq!(fs.alpha(Index(0)).unwrap(), Some(Contents::Directory(expected)));
    }

    #[test]
    fn corrupt_directory_is_an_error_not_undefined() {
        let dir = InodeRecord {
            ftype: FileType::Directory,
            size: 3,
            direct: vec![BlockNumber(2)],
            indirect: None,
        };
        let fs = FsImage::from_bytes(assemble(&[Some(dir)], &[filled(b'x')])).unwrap();
        assert!(matches!(
            fs.alpha(Index(0)),
            Err(AlphaError::Codec { source: CodecError::TrailingGarbage(3), .. })
        ));
    }
}
