//! Plain-text checkpoint: one `key value...` line per field, floats in `%.17g`.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{ClassifierModel, Dense, Mlp};
use crate::energy::AsmpParams;
use crate::error::{Error, Result};
use crate::fmt::g17;

const MAGIC: &str = "asmp-classifier 1";
const FILE: &str = "checkpoint";

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(g17).collect::<Vec<_>>().join(" ")
}

pub fn to_text(model: &ClassifierModel) -> String {
    let p = &model.asmp;
    let mut out = vec![
        MAGIC.to_string(),
        format!("seed {}", model.seed),
        format!("normalization {}", model.normalization),
        format!("policy {}", model.policy),
        format!("update_structure {}", model.update_structure),
        format!("center_logits {}", model.center_logits),
        format!("gamma {}", g17(p.gamma)),
        format!("lambda {}", g17(p.lambda)),
        format!("mu1 {}", g17(p.mu1)),
        format!("mu2 {}", g17(p.mu2)),
        format!("eta1 {}", g17(p.eta1)),
        format!("eta2 {}", g17(p.eta2)),
        format!("k_layers {}", p.k_layers),
        format!("h_steps_per_iter {}", p.h_steps_per_iter),
        format!("s_steps_per_iter {}", p.s_steps_per_iter),
        format!("layers {}", model.mlp.layers.len()),
    ];
    for layer in &model.mlp.layers {
        out.push(format!("layer {} {}", layer.w.nrows(), layer.w.ncols()));
        out.push(format!("w {}", join(layer.w.iter().copied())).trim_end().to_string());
        out.push(format!("b {}", join(layer.b.iter().copied())).trim_end().to_string());
    }
    out.join("\n") + "\n"
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Reader<'a> {
    fn err(line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            file: FILE.to_string(),
            line,
            message: message.into(),
        }
    }

    /// Next line, which must start with `key`; returns its line number and fields.
    fn field(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (i, line) = self
            .lines
            .next()
            .ok_or_else(|| Self::err(0, format!("missing `{key}`")))?;
        let mut parts = line.split(' ');
        if parts.next() != Some(key) {
            return Err(Self::err(i + 1, format!("expected `{key}`")));
        }
        Ok((i + 1, parts.filter(|s| !s.is_empty()).collect()))
    }

    fn one<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (line, fields) = self.field(key)?;
        match fields.as_slice() {
            [v] => v.parse().map_err(|_| Self::err(line, format!("bad value for `{key}`"))),
            _ => Err(Self::err(line, format!("`{key}` takes one value"))),
        }
    }

    fn floats(&mut self, key: &str, expected: usize) -> Result<Vec<f64>> {
        let (line, fields) = self.field(key)?;
        if fields.len() != expected {
            return Err(Self::err(line, format!("`{key}` has {} values, expected {expected}", fields.len())));
        }
        fields
            .iter()
            .map(|v| v.parse().map_err(|_| Self::err(line, format!("`{v}` is not a number"))))
            .collect()
    }
}

pub fn from_text(text: &str) -> Result<ClassifierModel> {
    let mut r = Reader {
        lines: text.lines().enumerate(),
    };
    match r.lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(Reader::err(1, "not a classifier checkpoint")),
    }
    let seed = r.one("seed")?;
    let normalization = r.one("normalization")?;
    let policy = r.one("policy")?;
    let update_structure = r.one("update_structure")?;
    let center_logits = r.one("center_logits")?;
    let asmp = AsmpParams {
        gamma: r.one("gamma")?,
        lambda: r.one("lambda")?,
        mu1: r.one("mu1")?,
        mu2: r.one("mu2")?,
        eta1: r.one("eta1")?,
        eta2: r.one("eta2")?,
        k_layers: r.one("k_layers")?,
        h_steps_per_iter: r.one("h_steps_per_iter")?,
        s_steps_per_iter: r.one("s_steps_per_iter")?,
    };
    let n_layers: usize = r.one("layers")?;
    if n_layers == 0 {
        return Err(Reader::err(0, "a checkpoint needs at least one layer"));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let (line, dims) = r.field("layer")?;
        let parse = |s: &str| s.parse::<usize>().map_err(|_| Reader::err(line, "bad layer shape"));
        let (rows, cols) = match dims.as_slice() {
            [a, b] => (parse(a)?, parse(b)?),
            _ => return Err(Reader::err(line, "layer takes two dimensions")),
        };
        let w = Array2::from_shape_vec((rows, cols), r.floats("w", rows * cols)?).expect("length checked");
        let b = Array1::from(r.floats("b", cols)?);
        layers.push(Dense { w, b });
    }
    for pair in layers.windows(2) {
        if pair[0].w.ncols() != pair[1].w.nrows() {
            return Err(Reader::err(0, "consecutive layer shapes do not chain"));
        }
    }
    if let Some((i, _)) = r.lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Reader::err(i + 1, "trailing content"));
    }
    asmp.validate()?;
    Ok(ClassifierModel {
        mlp: Mlp { layers },
        asmp,
        normalization,
        policy,
        update_structure,
        center_logits,
        seed,
    })
}

pub fn save_checkpoint(model: &ClassifierModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_text(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ClassifierModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    from_text(&text)
}
