//! Every chapter linked from SUMMARY.md is compiled by this crate.

#[test]
fn every_chapter_is_included() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../book/src/");
    let summary = std::fs::read_to_string(format!("{root}SUMMARY.md")).unwrap();
    let lib = include_str!("../src/lib.rs");
    let chapters: Vec<&str> = summary
        .split("](")
        .skip(1)
        .map(|rest| &rest[..rest.find(')').unwrap()])
        .collect();
    assert!(chapters.len() >= 5);
    for ch in chapters {
        assert!(
            std::path::Path::new(&format!("{root}{ch}")).exists(),
            "{ch} missing"
        );
        assert!(
            lib.contains(&format!("book/src/{ch}\")")),
            "{ch} not compiled"
        );
    }
}
