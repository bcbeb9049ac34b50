use std::fs::File;
use std::path::Path;

use rankone_core::matrix::io::read_field;
use rankone_core::matrix::{
    corpus, find, Clip, FunctionHandle, GridSpec, MatrixPoint, MatrixShape, SampledField, ScalarFunction,
};

use crate::CliError;

/// What an experiment runs on: an analytic corpus entry or a field read from disk.
#[derive(Clone, Debug)]
pub enum Target {
    Handle(FunctionHandle),
    Field(SampledField),
}

pub fn corpus_names() -> Vec<String> {
    corpus().iter().map(|f| f.name().to_string()).collect()
}

/// Corpus name first, then an existing CSV path.
pub fn resolve(name: &str) -> Result<Target, CliError> {
    if let Some(h) = find(name) {
        return Ok(Target::Handle(h));
    }
    let path = Path::new(name);
    if path.is_file() {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
        let field = read_field(File::open(path)?, stem)?;
        return Ok(Target::Field(field));
    }
    Err(CliError::Usage(format!(
        "unknown function `{name}`; valid names: {}",
        corpus_names().join(", ")
    )))
}

impl Target {
    pub fn function(&self) -> &dyn ScalarFunction {
        match self {
            Target::Handle(h) => h,
            Target::Field(f) => f,
        }
    }

    pub fn name(&self) -> &str {
        self.function().name()
    }

    pub fn shape(&self) -> MatrixShape {
        match self {
            Target::Handle(h) => h.default_shape(),
            Target::Field(f) => f.grid().spec().center.shape,
        }
    }

    /// The field's own grid, or a centered grid for a handle.
    pub fn domain(&self, radius: f64, points: usize, clip: Clip) -> GridSpec {
        match self {
            Target::Handle(h) => GridSpec::new(MatrixPoint::zeros(h.default_shape()), radius, points, clip),
            Target::Field(f) => f.grid().spec().clone(),
        }
    }

    pub fn handle(&self) -> Option<&FunctionHandle> {
        match self {
            Target::Handle(h) => Some(h),
            Target::Field(_) => None,
        }
    }
}
