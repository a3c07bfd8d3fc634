// The on-disk directory entry format: name, two zero bytes, 4-byte
// big-endian index.

use std::error::Error;

use treefold::codec::{decode_directory, encode_directory};
use treefold::{DirectoryMap, Index, Name};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut dir = DirectoryMap::new();
    dir.insert(Name::new("passwords")?, Index(34832));
    let bytes = encode_directory(&dir)?;
    println!("{}", hex::encode_upper(&bytes));
    assert_eq!(bytes, [0x70, 0x61, 0x73, 0x73, 0x77, 0x6F, 0x72, 0x64, 0x73, 0x00, 0x00, 0x00, 0x00, 0x88, 0x10]);
    assert_eq!(decode_directory(&bytes)?, dir);

    // entries are written in name order whatever the insertion order
    let mut dir = DirectoryMap::new();
    for (name, index) in [("zeta", 3), (".", 1), ("..", 0), ("alpha", 2)] {
        dir.insert(Name::new(name)?, Index(index));
    }
    let bytes = encode_directory(&dir)?;
    for chunk in bytes.split_inclusive(|&b| b == 0).filter(|c| c.len() > 1) {
        println!("{:?}", String::from_utf8_lossy(&chunk[..chunk.len() - 1]));
    }
    assert_eq!(decode_directory(&bytes)?, dir);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
