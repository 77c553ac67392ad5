//! Balanced labelled corpora on disk.
//!
//! `build_dataset` writes one pattern file per instance under
//! `<out>/<class_name>/<index>.coo` plus a `manifest.txt`:
//!
//! ```text
//! sparsegnn-manifest 1
//! seed 7
//! dims 64 256
//! classes diagonal random rand-diag kronecker
//! entry 0 diagonal/000000.coo
//! ...
//! ```
//!
//! Entry paths are relative to the manifest's directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::registry::{DimsRange, Registry};
use crate::error::{Error, Result};
use crate::pattern::CooPattern;
use crate::rng;

pub const MANIFEST_FILE: &str = "manifest.txt";
const MANIFEST_MAGIC: &str = "sparsegnn-manifest 1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    /// `(pattern path relative to root, class id)`
    pub entries: Vec<(PathBuf, usize)>,
    pub class_names: Vec<String>,
    pub seed: u64,
    pub dims_range: DimsRange,
    /// Directory the entry paths are relative to.
    pub root: PathBuf,
}

/// Seed of the per-class stream family. Depends on the class name only, so
/// adding a class leaves the other classes' instances untouched.
fn class_seed(master: u64, class_name: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in class_name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    rng::derive_seed(master, h)
}

/// Generates instance `index` of class `spec_idx` in `registry`.
pub fn generate_instance(
    registry: &Registry,
    spec_idx: usize,
    index: usize,
    dims: DimsRange,
    seed: u64,
) -> Result<CooPattern> {
    let spec = &registry.specs()[spec_idx];
    let mut r = rng::stream(class_seed(seed, &spec.class_name), index as u64);
    let p = spec.generate(dims, &mut r)?;
    if !p.is_square() {
        let (rows, cols) = p.shape();
        return Err(Error::UnsupportedShape { rows, cols });
    }
    Ok(p)
}

/// Generates `registry` in memory as `(class_id, pattern)` pairs, class by class.
pub fn generate_all(
    registry: &Registry,
    dims: DimsRange,
    seed: u64,
) -> impl Iterator<Item = Result<(usize, CooPattern)>> + '_ {
    registry.specs().iter().enumerate().flat_map(move |(si, spec)| {
        (0..spec.count).map(move |k| {
            generate_instance(registry, si, k, dims, seed).map(|p| (spec.class_id, p))
        })
    })
}

fn check_registry(registry: &Registry, dims: DimsRange) -> Result<()> {
    dims.validate()?;
    let Some(first) = registry.specs().first() else {
        return Err(Error::invalid("registry is empty"));
    };
    if let Some(s) = registry.specs().iter().find(|s| s.count != first.count) {
        return Err(Error::invalid(format!(
            "unbalanced registry: class {:?} has {} instances, {:?} has {}",
            s.class_name, s.count, first.class_name, first.count
        )));
    }
    Ok(())
}

fn class_dir_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes one pattern file per registry instance and the manifest.
pub fn build_dataset(
    registry: &Registry,
    dims: DimsRange,
    seed: u64,
    output_dir: &Path,
) -> Result<DatasetManifest> {
    check_registry(registry, dims)?;
    std::fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    let mut entries = Vec::new();
    for (si, spec) in registry.specs().iter().enumerate() {
        let dir_name = class_dir_name(&spec.class_name);
        let dir = output_dir.join(&dir_name);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for k in 0..spec.count {
            let pattern = generate_instance(registry, si, k, dims, seed)?;
            let rel = PathBuf::from(&dir_name).join(format!("{k:06}.coo"));
            pattern.write_file(output_dir.join(&rel))?;
            entries.push((rel, spec.class_id));
        }
    }
    let manifest = DatasetManifest {
        entries,
        class_names: registry.class_names(),
        seed,
        dims_range: dims,
        root: output_dir.to_path_buf(),
    };
    manifest.write(output_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

impl DatasetManifest {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.1).collect()
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    /// Instances per class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for &(_, c) in &self.entries {
            if c < counts.len() {
                counts[c] += 1;
            }
        }
        counts
    }

    pub fn is_balanced(&self) -> bool {
        let counts = self.class_counts();
        counts.windows(2).all(|w| w[0] == w[1])
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MANIFEST_MAGIC}");
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "dims {} {}", self.dims_range.min, self.dims_range.max);
        let _ = writeln!(out, "classes {}", self.class_names.join(" "));
        for (path, id) in &self.entries {
            // manifest paths always use forward slashes
            let p: Vec<String> = path
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect();
            let _ = writeln!(out, "entry {id} {}", p.join("/"));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Reads a manifest file, or `<dir>/manifest.txt` when given a directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut path = path.as_ref().to_path_buf();
        if path.is_dir() {
            path = path.join(MANIFEST_FILE);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let root = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Self::parse(&text, &path, root)
    }

    pub fn parse(text: &str, path: &Path, root: PathBuf) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut seed = None;
        let mut dims = None;
        let mut class_names = None;
        let mut entries = Vec::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == MANIFEST_MAGIC => {}
            _ => return Err(perr(1, format!("expected {MANIFEST_MAGIC:?} header"))),
        }
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            let num = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| perr(lineno, format!("expected an integer, found {s:?}")))
            };
            match key {
                "seed" => seed = Some(num(rest.trim())?),
                "dims" => {
                    let f: Vec<&str> = rest.split_whitespace().collect();
                    let [lo, hi] = f[..] else {
                        return Err(perr(lineno, "dims needs two values".into()));
                    };
                    dims = Some(
                        DimsRange::new(num(lo)? as usize, num(hi)? as usize)
                            .map_err(|e| perr(lineno, e.to_string()))?,
                    );
                }
                "classes" => {
                    class_names = Some(rest.split_whitespace().map(str::to_string).collect::<Vec<_>>())
                }
                "entry" => {
                    let (id, p) = rest
                        .split_once(' ')
                        .ok_or_else(|| perr(lineno, "entry needs a class id and a path".into()))?;
                    entries.push((PathBuf::from(p.trim()), num(id)? as usize));
                }
                other => return Err(perr(lineno, format!("unknown key {other:?}"))),
            }
        }
        let class_names: Vec<String> =
            class_names.ok_or_else(|| perr(0, "missing classes line".into()))?;
        if let Some((p, id)) = entries.iter().find(|e| e.1 >= class_names.len()) {
            return Err(perr(
                0,
                format!("entry {} has class id {id} but only {} classes", p.display(), class_names.len()),
            ));
        }
        Ok(Self {
            entries,
            class_names,
            seed: seed.ok_or_else(|| perr(0, "missing seed line".into()))?,
            dims_range: dims.ok_or_else(|| perr(0, "missing dims line".into()))?,
            root,
        })
    }

    /// Loads every referenced pattern, in manifest order.
    pub fn load_patterns(&self) -> Result<Vec<(CooPattern, usize)>> {
        self.entries
            .iter()
            .map(|(p, c)| CooPattern::read_file(self.resolve(p)).map(|pat| (pat, *c)))
            .collect()
    }

    /// Checks balance and that every file parses.
    pub fn validate(&self) -> Result<()> {
        if !self.is_balanced() {
            return Err(Error::InvalidInput(format!(
                "manifest is unbalanced: per-class counts {:?}",
                self.class_counts()
            )));
        }
        for (p, _) in &self.entries {
            CooPattern::read_file(self.resolve(p))?;
        }
        Ok(())
    }
}
