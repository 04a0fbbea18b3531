use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::data::{drop_missing_rows, load_csv, Dataset, Schema};
use crate::discretize::{Discretization, LabelEncoding};
use crate::error::{Error, Result};
use crate::learners::{ForestParams, GridSearchSpec, RegressorKind};
use crate::synth::{generate, Generator};

/// Environment variable that replaces `output_dir` from the config file.
pub const OUTPUT_DIR_ENV: &str = "REGAUG_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub generator: Generator,
    pub n: usize,
    #[serde(default = "one")]
    pub d: usize,
    /// Defaults to the experiment seed.
    pub seed: Option<u64>,
}

fn one() -> usize {
    1
}

/// One dataset: a CSV with its schema, or a synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    pub csv: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetEntry>,
    pub regressors: Vec<RegressorKind>,
    #[serde(default = "default_s_values")]
    pub s_values: Vec<usize>,
    #[serde(default = "default_discretization")]
    pub discretization: Discretization,
    #[serde(default = "default_encoding")]
    pub encoding: LabelEncoding,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Trees per threshold classifier.
    #[serde(default = "default_trees")]
    pub trees: usize,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub grid: GridSearchSpec,
}

fn default_s_values() -> Vec<usize> {
    vec![1, 2, 4, 8, 16, 32]
}
fn default_discretization() -> Discretization {
    Discretization::EqualFrequency
}
fn default_encoding() -> LabelEncoding {
    LabelEncoding::BinaryPerThreshold
}
fn default_folds() -> usize {
    10
}
fn default_trees() -> usize {
    100
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("regaug-out")
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')) && name != "." && name != ".."
}

impl ExperimentConfig {
    /// Parses, resolves relative paths against the file's directory, applies
    /// the output-directory override from the environment, and validates.
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with_override(path, std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
    }

    pub fn load_with_override(path: &Path, output_dir: Option<PathBuf>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config { message, .. } => Error::config(path, message),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for d in &mut cfg.datasets {
            for p in [&mut d.csv, &mut d.schema].into_iter().flatten() {
                resolve(p);
            }
        }
        match output_dir {
            Some(dir) => cfg.output_dir = dir,
            None => resolve(&mut cfg.output_dir),
        }
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config("<config>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config("<config>", m));
        if self.datasets.is_empty() {
            return bad("`datasets` must list at least one dataset".into());
        }
        if self.regressors.is_empty() {
            return bad("`regressors` must list at least one of linear, tree, forest, gbt".into());
        }
        if self.s_values.is_empty() || self.s_values.contains(&0) {
            return bad("`s_values` must be a nonempty list of integers ≥ 1".into());
        }
        if self.folds < 2 {
            return bad(format!("`folds` must be at least 2, got {}", self.folds));
        }
        if self.trees == 0 {
            return bad("`trees` must be at least 1".into());
        }
        let mut names = BTreeSet::new();
        for d in &self.datasets {
            if !valid_name(&d.name) {
                return bad(format!("dataset name `{}` may only use letters, digits, `_`, `-`, `.`", d.name));
            }
            if !names.insert(&d.name) {
                return bad(format!("dataset `{}` is listed twice", d.name));
            }
            match (&d.csv, &d.schema, &d.synthetic) {
                (Some(_), Some(_), None) | (None, None, Some(_)) => {}
                _ => return bad(format!("dataset `{}` needs either `csv` and `schema`, or `synthetic`", d.name)),
            }
        }
        let uniq: BTreeSet<_> = self.regressors.iter().collect();
        if uniq.len() != self.regressors.len() {
            return bad("`regressors` lists a regressor twice".into());
        }
        self.grid.validate().map_err(|e| Error::config("<config>", e.to_string()))
    }

    pub fn augment_config(&self, s: usize) -> AugmentConfig {
        AugmentConfig {
            s,
            discretization: self.discretization,
            encoding: self.encoding,
            forest: ForestParams { n_trees: self.trees, ..ForestParams::default() },
        }
    }

    /// Sorted, deduplicated S values.
    pub fn sorted_s_values(&self) -> Vec<usize> {
        self.s_values.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn prep_dir(&self) -> PathBuf {
        self.output_dir.join("prep")
    }

    pub fn cells_dir(&self) -> PathBuf {
        self.output_dir.join("cells")
    }

    pub fn cells_csv(&self) -> PathBuf {
        self.output_dir.join("cells.csv")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.output_dir.join("report")
    }
}

impl DatasetEntry {
    /// Loads the raw rows, or generates them, before missing-row removal.
    pub fn load_raw(&self, experiment_seed: u64) -> Result<Dataset> {
        let mut ds = match (&self.csv, &self.schema, &self.synthetic) {
            (Some(csv), Some(schema), _) => load_csv(csv, &Schema::load(schema)?)?,
            (_, _, Some(s)) => generate(s.generator, s.n, s.d, s.seed.unwrap_or(experiment_seed))?,
            _ => return Err(Error::config("<config>", format!("dataset `{}` has no source", self.name))),
        };
        ds.name = self.name.clone();
        Ok(ds)
    }

    /// Rows with no missing cell.
    pub fn load(&self, experiment_seed: u64) -> Result<Dataset> {
        drop_missing_rows(&self.load_raw(experiment_seed)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
regressors = ["linear"]
[[datasets]]
name = "sine"
synthetic = { generator = "sine", n = 100 }
"#;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.s_values, vec![1, 2, 4, 8, 16, 32]);
        assert_eq!(c.folds, 10);
        assert_eq!(c.trees, 100);
        assert_eq!(c.discretization, Discretization::EqualFrequency);
        assert_eq!(c.grid, GridSearchSpec::default());
    }

    #[test]
    fn zero_regressors_rejected() {
        let text = MINIMAL.replace(r#"["linear"]"#, "[]");
        assert!(matches!(ExperimentConfig::from_toml_str(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        for text in [
            format!("{MINIMAL}\nfoo = 1"),
            MINIMAL.replace("regressors = [\"linear\"]", "regressors = [\"svm\"]"),
            format!("s_values = [0]\n{MINIMAL}"),
            format!("folds = 1\n{MINIMAL}"),
            MINIMAL.replace("name = \"sine\"", "name = \"../x\""),
        ] {
            let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
            assert!(err.is_config_error(), "{text}");
        }
    }

    #[test]
    fn relative_paths_and_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(
            &path,
            "regressors = [\"tree\"]\noutput_dir = \"out\"\n[[datasets]]\nname = \"a\"\ncsv = \"a.csv\"\nschema = \"a.toml\"\n",
        )
        .unwrap();
        let c = ExperimentConfig::load_with_override(&path, None).unwrap();
        assert_eq!(c.output_dir, dir.path().join("out"));
        assert_eq!(c.datasets[0].csv.as_deref(), Some(dir.path().join("a.csv").as_path()));
        let c = ExperimentConfig::load_with_override(&path, Some("/elsewhere".into())).unwrap();
        assert_eq!(c.output_dir, PathBuf::from("/elsewhere"));
    }

    #[test]
    fn missing_schema_names_the_file() {
        let entry = DatasetEntry {
            name: "a".into(),
            csv: Some("/nonexistent/a.csv".into()),
            schema: Some("/nonexistent/a-schema.toml".into()),
            synthetic: None,
        };
        let err = entry.load(0).unwrap_err();
        assert!(err.to_string().contains("a-schema.toml"));
        assert!(err.is_config_error());
    }
}
