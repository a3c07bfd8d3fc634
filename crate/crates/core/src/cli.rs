//! Command-line front end. The binary only forwards to [`run`].

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::alpha::{Contents, FsImage};
use crate::codec::PathName;
use crate::resolver::{self, LinkBudget, ListMode, Lookup, Resolution, DEFAULT_LINK_BUDGET};
use crate::toolkit::bench::{self, BenchConfig, Workload};
use crate::toolkit::builder::{self, BuildOptions};
use crate::toolkit::manifest::Manifest;
use crate::verifier;

pub const EXIT_OK: i32 = 0;
/// Path not found, check failed, or budget exhausted.
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
/// I/O or format error.
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "treefold", version, about = "Build, inspect and check treefold images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    /// Soft-link budget.
    #[arg(long = "links", default_value_t = DEFAULT_LINK_BUDGET)]
    pub links: u32,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an image from a manifest.
    Build {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Undefined inode slots to append.
        #[arg(long, default_value_t = 0)]
        spare_inodes: u64,
    },
    /// Print the index a path resolves to.
    Resolve {
        image: PathBuf,
        path: String,
        #[command(flatten)]
        links: LinkArgs,
        /// Treat soft links as leaves.
        #[arg(long)]
        no_follow: bool,
    },
    /// Write a file's contents to stdout.
    Cat {
        image: PathBuf,
        path: String,
        #[command(flatten)]
        links: LinkArgs,
    },
    /// List a directory.
    Ls {
        image: PathBuf,
        #[arg(default_value = "/")]
        path: String,
        /// Only list subdirectories.
        #[arg(long)]
        dirs_only: bool,
        /// Show type and index for each entry.
        #[arg(short, long)]
        long: bool,
    },
    /// Print every path below a directory.
    Find {
        image: PathBuf,
        #[arg(default_value = "/")]
        path: String,
        #[command(flatten)]
        links: LinkArgs,
        /// Descend through directory entries only.
        #[arg(long)]
        dirs_only: bool,
    },
    /// Run consistency checks.
    Fsck {
        image: PathBuf,
        #[command(flatten)]
        links: LinkArgs,
    },
    /// Compare lookup costs on a generated balanced tree.
    Bench {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        queries: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Draw queries from a Zipf distribution with this exponent.
        #[arg(long)]
        zipf: Option<f64>,
        #[arg(long, default_value_t = 1024)]
        cache: usize,
    },
}

/// Parses `args` (including the program name) and runs the command,
/// returning the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "treefold: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Error(msg)) => {
            let _ = writeln!(err, "treefold: {msg}");
            EXIT_ERROR
        }
    }
}

enum Failure {
    Usage(String),
    Error(String),
}

fn error(e: impl std::fmt::Display) -> Failure {
    Failure::Error(e.to_string())
}

fn parse_path(text: &str) -> Result<PathName, Failure> {
    PathName::parse(text).map_err(|e| Failure::Usage(format!("bad path {text:?}: {e}")))
}

fn open(image: &PathBuf) -> Result<FsImage, Failure> {
    FsImage::open(image).map_err(|e| Failure::Error(format!("{}: {e}", image.display())))
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Build { manifest, out: target, spare_inodes } => {
            let m = Manifest::load(&manifest).map_err(|e| Failure::Error(format!("{}: {e}", manifest.display())))?;
            let g = builder::build_image_with(&m, &target, &BuildOptions { spare_inodes }).map_err(error)?;
            writeln!(out, "wrote {} ({} blocks, {} inodes)", target.display(), g.block_count, g.inode_count).map_err(error)?;
            Ok(EXIT_OK)
        }
        Command::Resolve { image, path, links, no_follow } => {
            let fs = open(&image)?;
            let path = parse_path(&path)?;
            let outcome = if no_follow {
                resolver::namei(&fs, fs.root(), &path)
            } else {
                resolver::namei_links(&fs, fs.root(), &path, LinkBudget(links.links))
            }
            .map_err(error)?;
            match outcome.result {
                Resolution::Found(i) => {
                    writeln!(out, "{i}").map_err(error)?;
                    Ok(EXIT_OK)
                }
                Resolution::NotFound => {
                    writeln!(out, "not found").map_err(error)?;
                    Ok(EXIT_NEGATIVE)
                }
                Resolution::LinkBudgetExhausted => {
                    writeln!(out, "link budget exhausted").map_err(error)?;
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Cat { image, path, links } => {
            let fs = open(&image)?;
            let parsed = parse_path(&path)?;
            match resolver::f_lookup_with(&fs, &parsed, LinkBudget(links.links)).map_err(error)? {
                Lookup::Defined(Contents::Ordinary(bytes)) => {
                    out.write_all(&bytes).map_err(error)?;
                    Ok(EXIT_OK)
                }
                Lookup::Defined(Contents::SoftLink(target)) => {
                    writeln!(out, "{target}").map_err(error)?;
                    Ok(EXIT_OK)
                }
                Lookup::Defined(Contents::Directory(_)) => Err(Failure::Usage(format!("{parsed}: is a directory"))),
                Lookup::Undefined => {
                    writeln!(out, "{parsed}: not found").map_err(error)?;
                    Ok(EXIT_NEGATIVE)
                }
                Lookup::LinkBudgetExhausted => {
                    writeln!(out, "{parsed}: link budget exhausted").map_err(error)?;
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Ls { image, path, dirs_only, long } => {
            let fs = open(&image)?;
            let parsed = parse_path(&path)?;
            let dir = match resolver::f_lookup(&fs, &parsed).map_err(error)? {
                Lookup::Defined(Contents::Directory(dir)) => dir,
                Lookup::Defined(_) => return Err(Failure::Usage(format!("{parsed}: not a directory"))),
                _ => {
                    writeln!(out, "{parsed}: not found").map_err(error)?;
                    return Ok(EXIT_NEGATIVE);
                }
            };
            let mode = if dirs_only { ListMode::DirsOnly } else { ListMode::All };
            for name in resolver::list_entries(&fs, &parsed, mode).map_err(error)? {
                if long {
                    let index = dir.get(&name).expect("listed names are entries");
                    let kind = match fs.inode(index).map_err(error)? {
                        Some(r) => r.ftype.to_string(),
                        None => "undefined".into(),
                    };
                    writeln!(out, "{kind:<9} {index:>6} {name}").map_err(error)?;
                } else {
                    writeln!(out, "{name}").map_err(error)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Find { image, path, links, dirs_only } => {
            let fs = open(&image)?;
            let parsed = parse_path(&path)?;
            let mode = if dirs_only { ListMode::DirsOnly } else { ListMode::All };
            let found = resolver::find(&fs, &parsed, mode, LinkBudget(links.links)).map_err(error)?;
            for p in &found.paths {
                writeln!(out, "{p}").map_err(error)?;
            }
            Ok(if found.paths.is_empty() || found.budget_exhausted { EXIT_NEGATIVE } else { EXIT_OK })
        }
        Command::Fsck { image, links } => {
            let fs = open(&image)?;
            let report = verifier::fsck(&fs, LinkBudget(links.links));
            write!(out, "{report}").map_err(error)?;
            Ok(if report.is_clean() { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Bench { n, k, queries, seed, zipf, cache } => {
            let workload = match zipf {
                Some(exponent) => Workload::Zipf { exponent },
                None => Workload::Uniform,
            };
            let config = BenchConfig { n, k, queries, workload, seed, cache_capacity: cache };
            let report = match bench::bench_report(&config) {
                Ok(r) => r,
                Err(bench::BenchError::Config(msg)) => return Err(Failure::Usage(msg)),
                Err(e) => return Err(error(e)),
            };
            write!(out, "{report}").map_err(error)?;
            Ok(EXIT_OK)
        }
    }
}
