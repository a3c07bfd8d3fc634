//! A read-only UNIX-style file system built over a simulated block device.
//!
//! The retrieval map from paths to file contents is split in two layers:
//!
//! * the index layer ([`alpha`]) maps an inode [`Index`] to decoded
//!   [`Contents`] by reading the inode block, gathering the file's blocks,
//!   concatenating them and truncating to the recorded size;
//! * the tree layer ([`resolver`]) maps a [`PathName`] to an index by
//!   recursive descent through directory maps from the root.
//!
//! Around that core sit a bit-exact [`codec`] for the on-disk structures, an
//! image builder and lookup-cost benchmarks in [`toolkit`], and an fsck-style
//! [`verifier`] for the tree consistency properties.
//!
//! ```no_run
//! use treefold::{resolver, toolkit::manifest::Manifest, toolkit::builder, FsImage, PathName};
//!
//! let manifest = Manifest::parse("dir /etc\nfile /etc/motd inline:6869\n")?;
//! let (bytes, _geometry) = builder::build_image_bytes(&manifest, &Default::default())?;
//! let fs = FsImage::from_bytes(bytes)?;
//! let index = resolver::beta(&fs, &PathName::parse("/etc/motd")?)?;
//! println!("{index:?}");
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

use std::fmt;

pub mod alpha;
pub mod blockdev;
pub mod cli;
pub mod codec;
pub mod resolver;
pub mod toolkit;
pub mod verifier;

pub use alpha::{AlphaError, Contents, FsImage};
pub use blockdev::{Block, BlockNumber, DiskHandle, Geometry, BLOCK_SIZE};
pub use codec::{DirectoryMap, FileType, InodeRecord, Name, PathName};

/// Names an inode slot; the domain of the index layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Index(pub u64);

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
