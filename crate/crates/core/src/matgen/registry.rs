use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::generators::{gen_diagonal, gen_kronecker, gen_random, gen_random_plus_diag};
use crate::error::{Error, Result};
use crate::pattern::CooPattern;
use crate::rng::StreamRng;

/// Instance count per class used by the full-size corpus.
pub const DEFAULT_COUNT_PER_CLASS: usize = 10_000;

/// Inclusive range of matrix dimensions drawn for each instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DimsRange {
    pub min: usize,
    pub max: usize,
}

impl DimsRange {
    /// Desk-scale default.
    pub const DESK: DimsRange = DimsRange { min: 64, max: 256 };
    /// Default for full-size corpora.
    pub const FULL: DimsRange = DimsRange { min: 128, max: 1024 };

    pub fn new(min: usize, max: usize) -> Result<Self> {
        let r = Self { min, max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min == 0 || self.min > self.max {
            return Err(Error::invalid(format!(
                "invalid dimension range [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(self.min..=self.max)
    }
}

impl Default for DimsRange {
    fn default() -> Self {
        Self::DESK
    }
}

/// Named numeric parameters handed from a sampler to its generator.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GenParams(BTreeMap<String, f64>);

impl GenParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.0
            .get(name)
            .copied()
            .ok_or_else(|| Error::invalid(format!("missing generator parameter {name:?}")))
    }

    pub fn get_usize(&self, name: &str) -> Result<usize> {
        let v = self.get(name)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::invalid(format!(
                "parameter {name:?} = {v} is not a non-negative integer"
            )));
        }
        Ok(v as usize)
    }

    pub fn get_i64(&self, name: &str) -> Result<i64> {
        let v = self.get(name)?;
        if v.fract() != 0.0 {
            return Err(Error::invalid(format!("parameter {name:?} = {v} is not an integer")));
        }
        Ok(v as i64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

pub type GenerateFn = Arc<dyn Fn(&GenParams, &mut StreamRng) -> Result<CooPattern> + Send + Sync>;
pub type ParamSampler = Arc<dyn Fn(DimsRange, &mut StreamRng) -> Result<GenParams> + Send + Sync>;

/// One structure class: how many instances to make and how to make them.
#[derive(Clone)]
pub struct GeneratorSpec {
    pub class_name: String,
    pub class_id: usize,
    pub count: usize,
    pub generator: GenerateFn,
    pub param_sampler: ParamSampler,
}

impl fmt::Debug for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorSpec")
            .field("class_name", &self.class_name)
            .field("class_id", &self.class_id)
            .field("count", &self.count)
            .finish_non_exhaustive()
    }
}

impl GeneratorSpec {
    /// A spec whose class id is assigned on registration.
    pub fn new<G, S>(class_name: &str, count: usize, generator: G, param_sampler: S) -> Self
    where
        G: Fn(&GenParams, &mut StreamRng) -> Result<CooPattern> + Send + Sync + 'static,
        S: Fn(DimsRange, &mut StreamRng) -> Result<GenParams> + Send + Sync + 'static,
    {
        Self {
            class_name: class_name.to_string(),
            class_id: 0,
            count,
            generator: Arc::new(generator),
            param_sampler: Arc::new(param_sampler),
        }
    }

    /// Draws parameters and generates one instance.
    pub fn generate(&self, dims: DimsRange, rng: &mut StreamRng) -> Result<CooPattern> {
        let params = (self.param_sampler)(dims, rng)?;
        (self.generator)(&params, rng)
    }
}

/// Canonical built-in class names, in default label order.
pub const BUILTIN_CLASSES: [&str; 4] = ["diagonal", "random", "rand-diag", "kronecker"];

/// Maps accepted spellings onto a canonical built-in class name.
pub fn canonical_class_name(name: &str) -> Option<&'static str> {
    match name.to_ascii_lowercase().as_str() {
        "diag" | "diagonal" => Some("diagonal"),
        "random" | "rand" => Some("random"),
        "rand-diag" | "random-diagonal" | "random+diagonal" | "rand+diag" | "randdiag" => {
            Some("rand-diag")
        }
        "kron" | "kronecker" => Some("kronecker"),
        _ => None,
    }
}

/// Density range for the random class, sampled log-uniformly.
pub const RANDOM_DENSITY_RANGE: (f64, f64) = (0.01, 0.3);
/// Cell probability for kronecker base patterns.
pub const KRON_BASE_DENSITY: f64 = 0.7;
/// Threshold used by the random-plus-diagonal class.
pub const RAND_DIAG_THRESHOLD: u32 = 2;

/// Spec for one of the built-in classes.
pub fn builtin_spec(name: &str, count: usize) -> Result<GeneratorSpec> {
    let canonical = canonical_class_name(name)
        .ok_or_else(|| Error::invalid(format!("unknown built-in class {name:?}")))?;
    let spec = match canonical {
        "diagonal" => GeneratorSpec::new(
            canonical,
            count,
            |p, _| gen_diagonal(p.get_usize("dim")?, p.get_i64("offset")?),
            |dims, rng| {
                let n = dims.sample(rng);
                let half = (n / 2) as i64;
                let offset = rng.gen_range(-half..=half);
                Ok(GenParams::new()
                    .with("dim", n as f64)
                    .with("offset", offset as f64))
            },
        ),
        "random" => GeneratorSpec::new(
            canonical,
            count,
            |p, rng| gen_random(p.get_usize("dim")?, p.get("density")?, rng),
            |dims, rng| {
                let n = dims.sample(rng);
                let (lo, hi) = RANDOM_DENSITY_RANGE;
                let density = (rng.gen_range(lo.ln()..=hi.ln())).exp();
                Ok(GenParams::new()
                    .with("dim", n as f64)
                    .with("density", density))
            },
        ),
        "rand-diag" => GeneratorSpec::new(
            canonical,
            count,
            |p, rng| gen_random_plus_diag(p.get_usize("dim")?, p.get_usize("threshold")? as u32, rng),
            |dims, rng| {
                Ok(GenParams::new()
                    .with("dim", dims.sample(rng) as f64)
                    .with("threshold", RAND_DIAG_THRESHOLD as f64))
            },
        ),
        "kronecker" => GeneratorSpec::new(
            canonical,
            count,
            |p, rng| {
                gen_kronecker(
                    p.get_usize("base_dim")?,
                    p.get("base_density")?,
                    p.get_usize("power")? as u32,
                    p.get_usize("max_dim")?,
                    rng,
                )
            },
            |dims, rng| {
                let (base_dim, power) = sample_kron_shape(dims, rng)?;
                Ok(GenParams::new()
                    .with("base_dim", base_dim as f64)
                    .with("power", power as f64)
                    .with("base_density", KRON_BASE_DENSITY)
                    .with("max_dim", dims.max as f64))
            },
        ),
        _ => unreachable!(),
    };
    Ok(spec)
}

/// Base dimension in {2, 3} and a power landing `base^power` inside `dims`,
/// both uniform over the feasible choices.
pub fn sample_kron_shape<R: Rng + ?Sized>(dims: DimsRange, rng: &mut R) -> Result<(usize, u32)> {
    let mut options = Vec::new();
    for base in [2usize, 3] {
        let mut d = base;
        let mut p = 1u32;
        while d <= dims.max {
            if d >= dims.min {
                options.push((base, p));
            }
            d *= base;
            p += 1;
        }
    }
    let bases: Vec<usize> = {
        let mut b: Vec<usize> = options.iter().map(|o| o.0).collect();
        b.dedup();
        b
    };
    if bases.is_empty() {
        return Err(Error::invalid(format!(
            "no power of 2 or 3 lies in dimension range [{}, {}]",
            dims.min, dims.max
        )));
    }
    let base = bases[rng.gen_range(0..bases.len())];
    let powers: Vec<u32> = options.iter().filter(|o| o.0 == base).map(|o| o.1).collect();
    Ok((base, powers[rng.gen_range(0..powers.len())]))
}

/// Ordered set of structure classes.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    specs: Vec<GeneratorSpec>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The four built-in classes with `count` instances each.
    pub fn builtin(count: usize) -> Result<Self> {
        Self::from_names(&BUILTIN_CLASSES, count)
    }

    pub fn from_names<S: AsRef<str>>(names: &[S], count: usize) -> Result<Self> {
        let mut reg = Self::new();
        for name in names {
            reg.register(builtin_spec(name.as_ref(), count)?)?;
        }
        Ok(reg)
    }

    /// Adds a class. Ids are renumbered to follow registration order.
    pub fn register(&mut self, spec: GeneratorSpec) -> Result<()> {
        if spec.class_name.is_empty() || spec.class_name.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!(
                "class name {:?} must be nonempty without whitespace",
                spec.class_name
            )));
        }
        if spec.count == 0 {
            return Err(Error::invalid(format!(
                "class {:?} needs a positive instance count",
                spec.class_name
            )));
        }
        if self.specs.iter().any(|s| s.class_name == spec.class_name) {
            return Err(Error::Conflict(format!(
                "class {:?} is already registered",
                spec.class_name
            )));
        }
        self.specs.push(spec);
        for (id, s) in self.specs.iter_mut().enumerate() {
            s.class_id = id;
        }
        Ok(())
    }

    /// Consuming variant of [`Registry::register`].
    pub fn with(mut self, spec: GeneratorSpec) -> Result<Self> {
        self.register(spec)?;
        Ok(self)
    }

    pub fn specs(&self) -> &[GeneratorSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn class_names(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.class_name.clone()).collect()
    }
}
