//! Synthetic structure classes and balanced dataset assembly.

mod dataset;
mod generators;
mod registry;

pub use dataset::{
    build_dataset, generate_all, generate_instance, DatasetManifest, MANIFEST_FILE,
};
pub use generators::{
    gen_diagonal, gen_kronecker, gen_random, gen_random_plus_diag, kron_power, kron_product,
    random_kron_base,
};
pub use registry::{
    builtin_spec, canonical_class_name, sample_kron_shape, DimsRange, GenParams, GenerateFn,
    GeneratorSpec, ParamSampler, Registry, BUILTIN_CLASSES, DEFAULT_COUNT_PER_CLASS,
    KRON_BASE_DENSITY, RAND_DIAG_THRESHOLD, RANDOM_DENSITY_RANGE,
};
