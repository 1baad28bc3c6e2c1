//! Optional TOML configuration. Every key mirrors a long flag with dashes
//! replaced by underscores; flags given on the command line win.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub alpha_grid: Option<Vec<f64>>,
    pub pool: Option<PathBuf>,
    pub pool_size: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub noise: Option<String>,
    pub samples: Option<usize>,
    pub kappa_table: Option<usize>,
    pub replicas: Option<usize>,
    pub n_list: Option<Vec<u32>>,
    pub r: Option<f64>,
    pub r_list: Option<Vec<f64>>,
    pub u: Option<Vec<f64>>,
    pub ell: Option<Vec<f64>>,
    pub exponents: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}

/// First present value of flag, file, then the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        assert_eq!(pick(Some(3), Some(4), 5), 3);
        assert_eq!(pick(None, Some(4), 5), 4);
        assert_eq!(pick::<u32>(None, None, 5), 5);
    }

    #[test]
    fn parses_known_keys_and_rejects_others() {
        let c: FileConfig = toml::from_str("seed = 9\nalpha_grid = [1.5, 2.0]\nn_list = [16, 32]").unwrap();
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.alpha_grid, Some(vec![1.5, 2.0]));
        assert!(toml::from_str::<FileConfig>("sed = 1").is_err());
    }
}
