// Soft links splice their stored path in at the root and cost one unit of
// the link budget each.

use std::error::Error;

use treefold::resolver::{namei_links, LinkBudget, Resolution};
use treefold::toolkit::builder::{build_image_bytes, BuildOptions};
use treefold::toolkit::manifest::Manifest;
use treefold::{FsImage, PathName};

const MANIFEST: &str = "\
dir  /home
dir  /home/ann
file /home/ann/notes inline:6e6f746573
link /h home/ann
link /hh h
link /loop loop
";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (bytes, _) = build_image_bytes(&Manifest::parse(MANIFEST)?, &BuildOptions::default())?;
    let fs = FsImage::from_bytes(bytes)?;
    let notes = namei_links(&fs, fs.root(), &PathName::parse("home/ann/notes")?, LinkBudget(0))?.result;

    for budget in 0..3 {
        let out = namei_links(&fs, fs.root(), &PathName::parse("hh/notes")?, LinkBudget(budget))?;
        println!("hh/notes budget {budget}: {:?} after {} links", out.result, out.links_followed);
        if budget >= 2 {
            assert_eq!(out.result, notes);
        }
    }

    let out = namei_links(&fs, fs.root(), &PathName::parse("loop/x")?, LinkBudget::default())?;
    println!("loop/x: {:?} after {} links", out.result, out.links_followed);
    assert_eq!(out.result, Resolution::LinkBudgetExhausted);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
