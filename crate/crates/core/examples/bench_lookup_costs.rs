// Compare lookup costs of a flat path map, tree descent, and a path cache
// on a balanced tree.

use std::error::Error;

use treefold::toolkit::bench::{bench_report, BenchConfig, Strategy, Workload};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let uniform = BenchConfig { n: 1000, k: 10, queries: 2000, workload: Workload::Uniform, seed: 7, cache_capacity: 256 };
    let report = bench_report(&uniform)?;
    print!("{report}");
    let flat = report.mean(Strategy::Flat, |c| c.path_comparisons);
    let tree = report.mean(Strategy::Tree, |c| c.string_comparisons);
    println!("mean depth {:.2}, flat {flat:.1} paths vs tree {tree:.1} names per lookup", report.mean_depth);
    assert!(flat > tree);

    let zipf = BenchConfig { workload: Workload::Zipf { exponent: 1.1 }, ..uniform };
    let report = bench_report(&zipf)?;
    print!("{report}");
    println!("cache hits {} misses {}, incoherent entries {}", report.cache_hits, report.cache_misses, report.incoherent);
    assert_eq!(report.incoherent, 0);
    assert!(report.totals(Strategy::Cached).directory_fetches < report.totals(Strategy::Tree).directory_fetches);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
