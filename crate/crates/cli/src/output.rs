use std::fs;
use std::path::Path;

use asmp_core::io::save_bundle_with_lcc;
use asmp_core::Graph;

use crate::config::RunConfig;
use crate::CliError;

pub const RESOLVED_CONFIG: &str = "resolved_config.txt";

/// Everything a command produces, held back until the command has succeeded.
#[derive(Default)]
pub struct Output {
    files: Vec<(String, String)>,
    bundles: Vec<(String, Graph, bool)>,
}

impl Output {
    pub fn file(&mut self, name: impl Into<String>, content: String) {
        self.files.push((name.into(), content));
    }

    pub fn bundle(&mut self, name: impl Into<String>, g: Graph, lcc: bool) {
        self.bundles.push((name.into(), g, lcc));
    }

    pub fn commit(self, dir: &Path, cfg: &RunConfig) -> Result<(), CliError> {
        let io = |e: std::io::Error, p: &Path| CliError::Io(format!("{}: {e}", p.display()));
        fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
        let resolved = std::iter::once((RESOLVED_CONFIG.to_string(), cfg.render()));
        for (name, content) in resolved.chain(self.files) {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| io(e, parent))?;
            }
            fs::write(&path, content).map_err(|e| io(e, &path))?;
        }
        for (name, g, lcc) in self.bundles {
            save_bundle_with_lcc(&g, dir.join(name), lcc)?;
        }
        Ok(())
    }
}

/// Rows of `%.17g` values separated by commas.
pub fn matrix_csv(m: &asmp_core::ndarray::Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|&v| asmp_core::fmt::g17(v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
