// Enumerate paths with find, in both listing modes.

use std::error::Error;

use treefold::resolver::{find, list_entries, LinkBudget, ListMode};
use treefold::toolkit::builder::{build_image_bytes, BuildOptions};
use treefold::toolkit::manifest::Manifest;
use treefold::{FsImage, PathName};

const MANIFEST: &str = "\
dir  /src
file /src/main.rs inline:
dir  /src/bin
file /src/bin/tool.rs inline:
link /latest src/bin
";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (bytes, _) = build_image_bytes(&Manifest::parse(MANIFEST)?, &BuildOptions::default())?;
    let fs = FsImage::from_bytes(bytes)?;
    let root = PathName::empty();

    let names: Vec<String> = list_entries(&fs, &root, ListMode::All)?.iter().map(|n| n.to_string()).collect();
    println!("ls /: {}", names.join(" "));

    for mode in [ListMode::All, ListMode::DirsOnly] {
        let found = find(&fs, &root, mode, LinkBudget::default())?;
        println!("{mode:?}:");
        for path in &found.paths {
            println!("  {path}");
        }
    }

    let all = find(&fs, &root, ListMode::All, LinkBudget::default())?;
    assert!(all.paths.contains(&PathName::parse("/latest/tool.rs")?));
    let no_links = find(&fs, &root, ListMode::All, LinkBudget(0))?;
    assert!(no_links.budget_exhausted);
    assert!(!no_links.paths.contains(&PathName::parse("/latest/tool.rs")?));
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
