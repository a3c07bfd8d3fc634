mod common;

use std::collections::BTreeSet;

use common::*;
use treefold::resolver::LinkBudget;
use treefold::toolkit::manifest::Manifest;
use treefold::verifier::{self, Resolver, Status, Witness, CHECK_NAMES};
use treefold::Index;

#[test]
fn every_fixture_fails_exactly_its_checks() {
    for fixture in corruption_fixtures() {
        let fs = open(&fixture.bytes);
        let report = verifier::fsck(&fs, LinkBudget::default());
        let failed: BTreeSet<&str> = report.failed().into_iter().collect();
        let mut expected: BTreeSet<&str> = fixture.also.iter().copied().collect();
        expected.insert(fixture.intended);
        assert_eq!(failed, expected, "{}:\n{report}", fixture.name);
        for name in &failed {
            for w in report.status(name).unwrap().witnesses() {
                assert!(w.replay(&fs, &Resolver).unwrap(), "{}: {w} does not replay", fixture.name);
            }
        }
    }
}

#[test]
fn witnesses_name_the_damage() {
    let fixtures = corruption_fixtures();
    let find = |name: &str| open(&fixtures.iter().find(|f| f.name == name).unwrap().bytes);

    assert_eq!(verifier::check_no_orphans(&find("orphan_in_spare_slot")), Status::Fail(vec![Witness::Orphan(Index(2))]));

    let Status::Fail(w) = verifier::check_no_dangling(&find("entry_out_of_range")) else { panic!() };
    assert!(matches!(&w[..], [Witness::Dangling { dir: Index(1), target: Index(999), .. }]));

    let Status::Fail(w) = verifier::check_alias_free(&find("hard_alias_of_file")) else { panic!() };
    assert_eq!(w, vec![Witness::Alias { first: p("/a/f"), second: p("/b/g"), index: Index(2) }]);

    let Status::Fail(w) = verifier::check_link_constraint(&find("entry_aliasing_root")) else { panic!() };
    assert_eq!(w, vec![Witness::LinkConstraint { dir: Index(0), parents: vec![Index(1)] }]);

    let Status::Fail(w) = verifier::check_link_constraint(&find("directory_with_two_parents")) else { panic!() };
    assert_eq!(w, vec![Witness::LinkConstraint { dir: Index(1), parents: vec![Index(0), Index(2)] }]);
}

#[test]
fn witnesses_do_not_replay_on_clean_images() {
    let clean = open(&build_text("dir /a\nfile /a/f inline:\ndir /b\nfile /b/g inline:\n"));
    for fixture in corruption_fixtures() {
        let fs = open(&fixture.bytes);
        let report = verifier::fsck(&fs, LinkBudget::default());
        for name in report.failed() {
            for w in report.status(name).unwrap().witnesses() {
                if let Witness::Unreadable { .. } = w {
                    continue;
                }
                assert!(!w.replay(&clean, &Resolver).unwrap(), "{}: {w} replays on a clean image", fixture.name);
            }
        }
    }
}

#[test]
fn report_format() {
    let fs = open(&corruption_fixtures().remove(0).bytes);
    let text = verifier::fsck(&fs, LinkBudget::default()).to_string();
    let lines: Vec<&str> = text.lines().collect();
    for (line, name) in lines.iter().zip(CHECK_NAMES) {
        assert!(line.starts_with(&format!("CHECK {name} ")), "{line}");
    }
    assert_eq!(lines[1], "CHECK no_orphans FAIL [orphan=2]");
    assert!(lines[CHECK_NAMES.len()..].iter().all(|l| l.starts_with("STATS ")));
    assert!(text.contains("STATS inodes=3\n"));
}

#[test]
fn empty_and_builder_images_are_clean() {
    let fs = open(&build(&Manifest::new()));
    let report = verifier::fsck(&fs, LinkBudget::default());
    assert!(report.is_clean(), "{report}");
    assert_eq!(report.links.root_in_degree_sources.len(), 0);

    let fs = open(&build_text("dir /a\ndir /a/b\nfile /a/b/c inline:0102\nlink /l a/b\n"));
    let report = verifier::fsck(&fs, LinkBudget::default());
    assert!(report.is_clean(), "{report}");
    assert_eq!(report.stats.directory_links, 2);
}

#[test]
fn loops_warn_without_failing() {
    let fs = open(&build_text("link /self self\nlink /a b\nlink /b a\n"));
    let report = verifier::fsck(&fs, LinkBudget::default());
    assert!(report.is_clean());
    let Some(Status::Warn(w)) = report.status("softlink_loops") else { panic!("{report}") };
    let links: Vec<Index> = w
        .iter()
        .map(|w| match w {
            Witness::SuspectedLoop { link, .. } => *link,
            other => panic!("{other}"),
        })
        .collect();
    assert_eq!(links, vec![Index(1), Index(2), Index(3)]);
}
