//! Configuration files shipped with the crate and artifact invariants.

use std::path::PathBuf;

use proptest::prelude::*;
use thinhomog::harness::{parse_config, render_svg, Cell, CsvTable, PlotKind, StudyConfig, StudyKind};

fn read(name: &str) -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)).unwrap()
}

#[test]
fn standard_config_file_is_canonical() {
    let text = read("standard.cfg");
    let c = parse_config(&text).unwrap();
    assert_eq!(c.to_text(), text);
    assert_eq!(c, StudyConfig::standard());
    assert_eq!(c.hash(), StudyConfig::standard().hash());
}

#[test]
fn shipped_configs_parse() {
    let minimal = parse_config(&read("minimal.cfg")).unwrap();
    assert_eq!(minimal.epsilons, vec![0.1]);
    let resonant = parse_config(&read("resonant.cfg")).unwrap();
    assert_eq!(resonant.kind, Some(StudyKind::Ladder));
    assert!(resonant.allow_out_of_hypothesis);
    // Canonical text round trips even when the source file is not canonical.
    assert_eq!(parse_config(&minimal.to_text()).unwrap(), minimal);
}

#[test]
fn empty_table_renders_a_placeholder() {
    let t = CsvTable::new(&["epsilon", "dist_total"]).with_provenance("config_sha256", "abc");
    let svg = render_svg(&t, &PlotKind::loglog("epsilon", "dist_total"), "empty").unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("no data"));
    assert!(svg.contains("config abc"));
}

proptest! {
    #[test]
    fn text_and_numbers_round_trip(text in "[ -~]{0,12}", v in -1e6f64..1e6, i in any::<i32>()) {
        let mut t = CsvTable::new(&["s", "v", "i", "m"]);
        t.push(vec![text.clone().into(), v.into(), Cell::Int(i as i64), Cell::Missing]).unwrap();
        let back = CsvTable::parse(&t.to_text()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn config_hash_tracks_the_seed(seed in any::<u64>()) {
        let mut c = StudyConfig::standard();
        c.seed = seed;
        let back = parse_config(&c.to_text()).unwrap();
        prop_assert_eq!(back.hash(), c.hash());
        prop_assert_eq!(back.seed, seed);
    }
}
