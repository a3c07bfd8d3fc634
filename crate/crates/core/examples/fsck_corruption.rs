// Damage a clean image by patching one directory entry and let fsck find
// it.

use std::error::Error;

use treefold::resolver::LinkBudget;
use treefold::toolkit::builder::{build_image_bytes, BuildOptions};
use treefold::toolkit::manifest::Manifest;
use treefold::verifier::{fsck, Resolver};
use treefold::FsImage;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let manifest = Manifest::parse("dir /a\ndir /a/b\n")?;
    let (mut bytes, geometry) = build_image_bytes(&manifest, &BuildOptions::default())?;

    let clean = fsck(&FsImage::from_bytes(bytes.clone())?, LinkBudget::default());
    assert!(clean.is_clean());

    // /a/b is inode 2; its ".." entry follows the 7-byte "." entry
    let inode = (geometry.inode_table_start.0 as usize + 2) * 512;
    let data_block = u32::from_be_bytes(bytes[inode + 16..inode + 20].try_into()?) as usize;
    let entry = &mut bytes[data_block * 512 + 7..];
    assert_eq!(&entry[..4], b"..\0\0");
    entry[4..8].copy_from_slice(&0u32.to_be_bytes());

    let fs = FsImage::from_bytes(bytes)?;
    let report = fsck(&fs, LinkBudget::default());
    print!("{report}");
    assert_eq!(report.failed(), ["dot_laws"]);
    for witness in report.status("dot_laws").into_iter().flat_map(|s| s.witnesses()) {
        assert!(witness.replay(&fs, &Resolver)?);
        println!("replayed: {witness}");
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
