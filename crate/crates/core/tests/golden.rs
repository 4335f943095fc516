//! Pins the binary dataset format. After an intended format change, rerun with
//! `SFCLAB_BLESS=1` to rewrite the golden files.

use std::path::PathBuf;

use sfclab_core::dataset::{decode_dataset, encode_dataset, Records};
use sfclab_core::gen::GenConfig;
use sfclab_core::heuristics::PolicyKind;
use sfclab_core::invdemo::iterate_demonstrations;
use sfclab_core::simulator::{run_episode, EpisodeConfig, HeuristicPolicy};

fn golden(name: &str, bytes: &[u8]) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    if std::env::var_os("SFCLAB_BLESS").is_some() {
        std::fs::write(&path, bytes).unwrap();
    }
    let expected = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == bytes, "{name} differs from the golden file ({} vs {} bytes)", bytes.len(), expected.len());
    assert_eq!(decode_dataset(&expected).unwrap().records, decode_dataset(bytes).unwrap().records);
}

#[test]
fn trajectory_file_is_stable() {
    let gen = GenConfig { nodes: 3, max_tracked: 3, length: [1, 3], ..GenConfig::default() };
    let cfg = EpisodeConfig::new(gen, 6, 12, 5);
    let ep = run_episode(&cfg, &mut HeuristicPolicy::new(PolicyKind::Greedy, 0).unwrap()).unwrap();
    let bytes = encode_dataset(&cfg.layout(), cfg.horizon, &Records::Trajectories(vec![ep.trajectory])).unwrap();
    golden("greedy_episode.bin", &bytes);
}

#[test]
fn demonstration_file_is_stable() {
    let cfg = GenConfig { nodes: 3, chains: 4, max_tracked: 4, horizon: 12, seed: 11, ..GenConfig::default() };
    let demos = iterate_demonstrations(&cfg, 2).unwrap();
    let bytes = encode_dataset(&cfg.layout(cfg.horizon), cfg.horizon, &Records::Demonstrations(demos)).unwrap();
    golden("demonstrations.bin", &bytes);
}
