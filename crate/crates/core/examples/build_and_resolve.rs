// Build an image from a manifest, then resolve paths and read files.
//
// ```text
// cargo run --example build_and_resolve
// ```

use std::error::Error;

use treefold::resolver::{self, Lookup};
use treefold::toolkit::builder::{build_image_bytes, BuildOptions};
use treefold::toolkit::manifest::Manifest;
use treefold::{Contents, FsImage, PathName};

const MANIFEST: &str = "\
dir  /etc
file /etc/motd   inline:77656c636f6d650a
dir  /usr
dir  /usr/share
file /usr/share/readme inline:72656164206d650a
";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let manifest = Manifest::parse(MANIFEST)?;
    let (bytes, geometry) = build_image_bytes(&manifest, &BuildOptions::default())?;
    println!("{} blocks, {} inodes, root {}", geometry.block_count, geometry.inode_count, geometry.root_index);

    let fs = FsImage::from_bytes(bytes)?;
    for text in ["/", "/etc/motd", "/usr/share/readme", "/usr/missing"] {
        let path = PathName::parse(text)?;
        let outcome = resolver::namei(&fs, fs.root(), &path)?;
        println!("{text:<20} -> {:?} in {} steps", outcome.result, outcome.steps);
    }

    let motd = PathName::parse("/etc/motd")?;
    let Lookup::Defined(Contents::Ordinary(data)) = resolver::f_lookup(&fs, &motd)? else {
        return Err("motd missing".into());
    };
    assert_eq!(data, b"welcome\n");
    print!("motd: {}", String::from_utf8_lossy(&data));
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
