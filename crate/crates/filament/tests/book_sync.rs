//! The guide's table of contents, the chapter files on disk, and the
//! doc-test harness in `src/guide.rs` must all agree, or chapters could
//! gain snippets that never run.

use std::collections::BTreeSet;
use std::path::Path;

fn book_src() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../book/src")
}

fn summary_chapters() -> BTreeSet<String> {
    let summary = std::fs::read_to_string(book_src().join("SUMMARY.md")).unwrap();
    summary
        .lines()
        .filter_map(|line| {
            let (_, rest) = line.split_once("](")?;
            let (path, _) = rest.split_once(')')?;
            Some(path.to_string())
        })
        .collect()
}

#[test]
fn every_summary_chapter_exists_and_is_doc_tested() {
    let chapters = summary_chapters();
    assert!(!chapters.is_empty(), "no chapters found in SUMMARY.md");

    let harness =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/guide.rs"))
            .unwrap();

    for chapter in &chapters {
        assert!(
            book_src().join(chapter).is_file(),
            "SUMMARY.md lists {chapter}, which does not exist"
        );
        assert!(
            harness.contains(&format!("book/src/{chapter}")),
            "{chapter} is not included in src/guide.rs; its snippets would never run"
        );
    }
}

#[test]
fn every_chapter_file_is_listed_in_the_summary() {
    let chapters = summary_chapters();
    for entry in std::fs::read_dir(book_src()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name.ends_with(".md") && name != "SUMMARY.md" {
            assert!(
                chapters.contains(&name),
                "{name} exists in book/src but is missing from SUMMARY.md"
            );
        }
    }
}
