use std::path::{Path, PathBuf};

use regaug_core::data::Schema;
use regaug_core::pipeline::ExperimentConfig;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_experiment_configs_parse() {
    for name in ["desk.toml", "public.toml"] {
        let cfg = ExperimentConfig::load_with_override(&configs().join(name), None).unwrap();
        assert!(!cfg.datasets.is_empty(), "{name}");
        assert!(cfg.output_dir.is_absolute(), "{name}");
    }
}

#[test]
fn shipped_schemas_parse() {
    for (name, target, width) in
        [("airfoil", "scaled_sound", 5), ("compress-stren", "strength", 8), ("combined-cycle", "PE", 4)]
    {
        let schema = Schema::load(configs().join(format!("{name}.schema.toml"))).unwrap();
        assert_eq!(schema.target, target);
        assert_eq!(schema.columns.len(), width);
    }
}
