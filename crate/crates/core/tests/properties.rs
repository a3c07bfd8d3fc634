mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treefold::resolver::{self, LinkBudget, ListMode, Lookup, Resolution};
use treefold::toolkit::manifest::{Declaration, Manifest, PayloadSource};
use treefold::verifier::{self, Witness};
use treefold::{Contents, FileType, PathName};

fn manifest(seed: u64, links: bool) -> Manifest {
    random_manifest(&mut ChaCha8Rng::seed_from_u64(seed), 24, links)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn builder_output_verifies_clean(seed in any::<u64>()) {
        let m = manifest(seed, true);
        let fs = open(&build(&m));
        let report = verifier::fsck(&fs, LinkBudget::default());
        prop_assert!(report.is_clean(), "{m}\n{report}");
    }

    #[test]
    fn builder_is_deterministic(seed in any::<u64>()) {
        let m = manifest(seed, true);
        prop_assert_eq!(build(&m), build(&m));
    }

    #[test]
    fn declared_contents_round_trip(seed in any::<u64>()) {
        let m = manifest(seed, true);
        let fs = open(&build(&m));
        for decl in m.declarations() {
            let Lookup::Defined(contents) = resolver::f_lookup_with(&fs, decl.path(), LinkBudget(0)).unwrap() else {
                // a path through a link would need budget; declarations never do
                panic!("{decl} undefined");
            };
            match (decl, contents) {
                (Declaration::Dir(_), Contents::Directory(d)) => prop_assert!(d.get_str(".").is_some()),
                (Declaration::File(_, PayloadSource::Inline(b)), Contents::Ordinary(got)) => prop_assert_eq!(b, &got),
                (Declaration::Link(_, t), Contents::SoftLink(got)) => prop_assert_eq!(t, &got),
                (d, c) => prop_assert!(false, "{d} decoded as {:?}", c.file_type()),
            }
        }
    }

    #[test]
    fn prefixes_of_defined_paths_are_directories(seed in any::<u64>()) {
        let m = manifest(seed, true);
        let fs = open(&build(&m));
        for path in declared_paths(&m) {
            for prefix in path.proper_prefixes() {
                let is_dir = matches!(resolver::f_lookup_with(&fs, &prefix, LinkBudget(0)).unwrap(), Lookup::Defined(Contents::Directory(_)));
                prop_assert!(is_dir, "{prefix} under {path}");
            }
        }
    }

    #[test]
    fn namei_steps_bounded(seed in any::<u64>()) {
        let m = manifest(seed, false);
        let fs = open(&build(&m));
        for path in declared_paths(&m) {
            let out = resolver::namei(&fs, fs.root(), &path).unwrap();
            prop_assert!(matches!(out.result, Resolution::Found(_)));
            prop_assert_eq!(out.steps, path.len() + 1);
        }
    }

    #[test]
    fn link_free_resolution_ignores_budget(seed in any::<u64>(), budget in 0u32..8) {
        let m = manifest(seed, false);
        let fs = open(&build(&m));
        for path in declared_paths(&m) {
            let plain = resolver::namei(&fs, fs.root(), &path).unwrap();
            let linked = resolver::namei_links(&fs, fs.root(), &path, LinkBudget(budget)).unwrap();
            prop_assert_eq!(plain, linked);
        }
    }

    #[test]
    fn find_matches_declarations(seed in any::<u64>()) {
        let m = manifest(seed, false);
        let bytes = build(&m);
        let fs = open(&bytes);
        let found = resolver::find(&fs, &PathName::empty(), ListMode::All, LinkBudget::default()).unwrap();
        prop_assert_eq!(&found.paths, &declared_paths(&m));
        prop_assert_eq!(Some(found.paths), brute_force_paths(&bytes));
    }

    #[test]
    fn dirs_only_find_keeps_directories(seed in any::<u64>()) {
        let m = manifest(seed, true);
        let fs = open(&build(&m));
        let found = resolver::find(&fs, &PathName::empty(), ListMode::DirsOnly, LinkBudget::default()).unwrap();
        let dirs: std::collections::BTreeSet<PathName> = std::iter::once(PathName::empty())
            .chain(m.declarations().iter().filter(|d| matches!(d, Declaration::Dir(_))).map(|d| d.path().clone()))
            .collect();
        prop_assert_eq!(found.paths, dirs);
    }

    #[test]
    fn random_entry_mutations_keep_witnesses_replayable(seed in any::<u64>(), picks in prop::collection::vec((any::<prop::sample::Index>(), 0u64..40), 1..4)) {
        let m = manifest(seed, true);
        let mut bytes = build(&m);
        let count = inode_count(&bytes);
        for (pick, target) in picks {
            let slots = entry_slots(&bytes);
            let slot = &slots[pick.index(slots.len())];
            write_slot(&mut bytes, slot, treefold::Index(target % (count + 2)));
        }
        let fs = open(&bytes);
        let report = verifier::fsck(&fs, LinkBudget(8));
        for check in &report.checks {
            for w in check.status.witnesses() {
                if matches!(w, Witness::Prefix { .. } | Witness::Resolves { .. }) {
                    continue;
                }
                prop_assert!(w.replay(&fs, &verifier::Resolver).unwrap(), "{}: {w}", check.name);
            }
        }
        // the prefix check agrees with the real resolver on any image
        prop_assert!(!report.status("prefix_property").unwrap().is_fail(), "{report}");
    }
}

#[test]
fn soft_links_resolve_through_targets() {
    let fs = open(&build_text("dir /etc\nfile /etc/passwd inline:726f6f74\nlink /cfg etc\nlink /pw cfg/passwd\n"));
    let passwd = resolver::beta(&fs, &p("etc/passwd")).unwrap();
    assert_eq!(resolver::beta(&fs, &p("cfg/passwd")).unwrap(), passwd);
    // the trailing link is returned, not followed
    let pw = resolver::beta(&fs, &p("pw")).unwrap().index().unwrap();
    assert_eq!(fs.inode(pw).unwrap().unwrap().ftype, FileType::SoftLink);
    let out = resolver::namei_links(&fs, fs.root(), &p("cfg/passwd"), LinkBudget(0)).unwrap();
    assert_eq!(out.result, Resolution::LinkBudgetExhausted);
}
