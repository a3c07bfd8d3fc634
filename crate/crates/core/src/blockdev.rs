//! Simulated disk: a flat array of 512-byte blocks stored in one image file.
//!
//! Block 0 is the superblock. Its layout is fixed:
//!
//! ```text
//! 0..8     magic "TREEFLD1"
//! 8..12    block size, u32 BE (always 512)
//! 12..20   block count, u64 BE
//! 20..28   inode count, u64 BE
//! 28..36   root index, u64 BE
//! 36..40   first inode block, u32 BE
//! 40..512  zero
//! ```

use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::Index;

pub const BLOCK_SIZE: usize = 512;
pub const MAGIC: &[u8; 8] = b"TREEFLD1";

#[derive(Debug, Error)]
pub enum DiskError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a treefold image (bad magic)")]
    BadMagic,
    #[error("invalid geometry: {0}")]
    GeometryInvalid(String),
    #[error("truncated image: {len} bytes, need {need}")]
    TruncatedImage { len: u64, need: u64 },
    #[error("block {block} out of range (block count {count})")]
    OutOfRange { block: u32, count: u64 },
    #[error("block 0 dereferenced as data")]
    NullBlock,
}

/// One 512-byte disk block.
#[derive(Clone, PartialEq, Eq)]
pub struct Block(Box<[u8; BLOCK_SIZE]>);

impl Block {
    pub fn zeroed() -> Self {
        Block(Box::new([0; BLOCK_SIZE]))
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        let arr: [u8; BLOCK_SIZE] = bytes.try_into().ok()?;
        Some(Block(Box::new(arr)))
    }

    pub fn as_bytes(&self) -> &[u8; BLOCK_SIZE] {
        &self.0
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8; BLOCK_SIZE] {
        &mut self.0
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let used = self.0.iter().rposition(|&b| b != 0).map_or(0, |p| p + 1);
        write!(f, "Block({:02x?}", &self.0[..used.min(16)])?;
        if used > 16 {
            write!(f, "..")?;
        }
        write!(f, ")")
    }
}

/// Address of a block on the simulated disk. Zero means "absent" wherever a
/// block number refers to file data, since block 0 is always the superblock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BlockNumber(pub u32);

impl BlockNumber {
    pub const NULL: BlockNumber = BlockNumber(0);

    pub fn is_null(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for BlockNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub block_size: u32,
    pub block_count: u64,
    pub inode_count: u64,
    pub root_index: Index,
    pub inode_table_start: BlockNumber,
}

impl Geometry {
    pub fn validate(&self) -> Result<(), DiskError> {
        if self.block_size as usize != BLOCK_SIZE {
            return Err(DiskError::GeometryInvalid(format!(
                "block size {} (expected {BLOCK_SIZE})",
                self.block_size
            )));
        }
        if self.inode_table_start.is_null() {
            return Err(DiskError::GeometryInvalid(
                "inode table overlaps the superblock".into(),
            ));
        }
        let table_end = u64::from(self.inode_table_start.0)
            .checked_add(self.inode_count)
            .ok_or_else(|| DiskError::GeometryInvalid("inode table end overflows".into()))?;
        if table_end > 1 << 32 {
            return Err(DiskError::GeometryInvalid(
                "inode table extends past 32-bit block numbers".into(),
            ));
        }
        if table_end > self.block_count {
            return Err(DiskError::GeometryInvalid(format!(
                "inode table ends at block {table_end}, past block count {}",
                self.block_count
            )));
        }
        if self.root_index.0 >= self.inode_count {
            return Err(DiskError::GeometryInvalid(format!(
                "root index {} not below inode count {}",
                self.root_index, self.inode_count
            )));
        }
        Ok(())
    }

    pub fn encode_superblock(&self) -> Block {
        let mut block = Block::zeroed();
        let b = block.as_bytes_mut();
        b[0..8].copy_from_slice(MAGIC);
        b[8..12].copy_from_slice(&self.block_size.to_be_bytes());
        b[12..20].copy_from_slice(&self.block_count.to_be_bytes());
        b[20..28].copy_from_slice(&self.inode_count.to_be_bytes());
        b[28..36].copy_from_slice(&self.root_index.0.to_be_bytes());
        b[36..40].copy_from_slice(&self.inode_table_start.0.to_be_bytes());
        block
    }

    /// Parses and validates block 0.
    pub fn decode_superblock(block: &Block) -> Result<Geometry, DiskError> {
        let b = block.as_bytes();
        if &b[0..8] != MAGIC {
            return Err(DiskError::BadMagic);
        }
        let geometry = Geometry {
            block_size: u32::from_be_bytes(b[8..12].try_into().unwrap()),
            block_count: u64::from_be_bytes(b[12..20].try_into().unwrap()),
            inode_count: u64::from_be_bytes(b[20..28].try_into().unwrap()),
            root_index: Index(u64::from_be_bytes(b[28..36].try_into().unwrap())),
            inode_table_start: BlockNumber(u32::from_be_bytes(b[36..40].try_into().unwrap())),
        };
        if b[40..].iter().any(|&x| x != 0) {
            return Err(DiskError::GeometryInvalid(
                "superblock reserved bytes not zero".into(),
            ));
        }
        geometry.validate()?;
        Ok(geometry)
    }
}

/// Read-only view of an image. Shareable across threads; the only interior
/// state is a block-read counter used by the benchmarks.
#[derive(Debug)]
pub struct DiskHandle {
    bytes: Vec<u8>,
    geometry: Geometry,
    reads: AtomicU64,
}

impl DiskHandle {
    pub fn open_image(path: impl AsRef<Path>) -> Result<DiskHandle, DiskError> {
        let bytes = std::fs::read(path)?;
        DiskHandle::from_bytes(bytes)
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<DiskHandle, DiskError> {
        let len = bytes.len() as u64;
        if bytes.len() < BLOCK_SIZE || !bytes.len().is_multiple_of(BLOCK_SIZE) {
            let need = (len / BLOCK_SIZE as u64 + 1) * BLOCK_SIZE as u64;
            return Err(DiskError::TruncatedImage { len, need });
        }
        let superblock = Block::from_slice(&bytes[..BLOCK_SIZE]).expect("length checked");
        let geometry = Geometry::decode_superblock(&superblock)?;
        let need = geometry
            .block_count
            .checked_mul(BLOCK_SIZE as u64)
            .ok_or_else(|| DiskError::GeometryInvalid("block count overflows".into()))?;
        if len < need {
            return Err(DiskError::TruncatedImage { len, need });
        }
        if len > need {
            return Err(DiskError::GeometryInvalid(format!(
                "image is {len} bytes but block count implies {need}"
            )));
        }
        Ok(DiskHandle {
            bytes,
            geometry,
            reads: AtomicU64::new(0),
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Disk(b). Block 0 is readable here; use [`DiskHandle::read_data_block`]
    /// when following a file's block list.
    pub fn read_block(&self, b: BlockNumber) -> Result<Block, DiskError> {
        let start = self.range_check(b)?;
        self.reads.fetch_add(1, Ordering::Relaxed);
        Ok(Block::from_slice(&self.bytes[start..start + BLOCK_SIZE]).expect("in range"))
    }

    pub fn read_data_block(&self, b: BlockNumber) -> Result<Block, DiskError> {
        if b.is_null() {
            return Err(DiskError::NullBlock);
        }
        self.read_block(b)
    }

    /// Total blocks read through this handle so far.
    pub fn block_reads(&self) -> u64 {
        self.reads.load(Ordering::Relaxed)
    }

    fn range_check(&self, b: BlockNumber) -> Result<usize, DiskError> {
        if u64::from(b.0) >= self.geometry.block_count {
            return Err(DiskError::OutOfRange {
                block: b.0,
                count: self.geometry.block_count,
            });
        }
        Ok(b.0 as usize * BLOCK_SIZE)
    }
}
