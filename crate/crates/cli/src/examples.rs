//! Scenarios shipped with the binary.

/// `(file name, contents)` of every shipped scenario.
pub const EXAMPLES: [(&str, &str); 7] = [
    ("minimal-flat.json", include_str!("../scenarios/minimal-flat.json")),
    ("sphere-latitude.json", include_str!("../scenarios/sphere-latitude.json")),
    ("sphere-two-charts.json", include_str!("../scenarios/sphere-two-charts.json")),
    ("axioms-constant-so3.json", include_str!("../scenarios/axioms-constant-so3.json")),
    ("abelian-area.json", include_str!("../scenarios/abelian-area.json")),
    ("inline-pure-gauge.json", include_str!("../scenarios/inline-pure-gauge.json")),
    ("roundtrip.json", include_str!("../scenarios/roundtrip.json")),
];

/// Looks up a shipped scenario by file name, with or without `.json`.
pub fn example(name: &str) -> Option<&'static str> {
    EXAMPLES
        .iter()
        .find(|(file, _)| *file == name || file.strip_suffix(".json") == Some(name))
        .map(|(_, text)| *text)
}
