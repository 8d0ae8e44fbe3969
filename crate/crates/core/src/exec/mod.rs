//! Statement execution: the shared [`Engine`] and per-user [`Session`]s.

mod compiled;
mod run;
mod session;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::catalog::{Catalog, SourceDescriptor};
use crate::error::{Error, Result};
use crate::plan::CostModel;
use crate::translate::{Dialect, PatternTranslator, Translator};
use crate::wrapper::{open_source, SourceRuntime};

pub use run::{execute_naive, execute_physical, ExecContext, Execution};
pub use session::{LogEntry, MetricsRecord, Outcome, ScriptOutcome, Session, Workspace};

/// Catalog document: source descriptors plus an optional cost-model file,
/// both relative to the document's directory.
#[derive(Debug, Deserialize)]
struct EngineFile {
    sources: Vec<SourceDescriptor>,
    #[serde(default)]
    cost_model: Option<String>,
}

/// Catalog, source runtimes, translator, and cost model. Shared read-only
/// by every session.
pub struct Engine {
    catalog: Catalog,
    runtimes: BTreeMap<String, Arc<SourceRuntime>>,
    translator: Arc<dyn Translator>,
    cost: CostModel,
    parallel: bool,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(Arc::new(PatternTranslator))
    }
}

impl Engine {
    pub fn new(translator: Arc<dyn Translator>) -> Self {
        Engine {
            catalog: Catalog::new(),
            runtimes: BTreeMap::new(),
            translator,
            cost: CostModel::default(),
            parallel: crate::par::enabled(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(path, Arc::new(PatternTranslator))
    }

    pub fn load_with(path: &Path, translator: Arc<dyn Translator>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Fixture {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let file: EngineFile = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut engine = Engine::new(translator);
        for desc in &file.sources {
            let (runtime, desc) = open_source(desc, base)?;
            engine.add_source(runtime, desc)?;
        }
        if let Some(c) = &file.cost_model {
            engine.cost = CostModel::load(&base.join(c))?;
        }
        Ok(engine)
    }

    pub fn add_source(&mut self, runtime: SourceRuntime, desc: SourceDescriptor) -> Result<()> {
        if runtime.name() != desc.name {
            return Err(Error::Catalog(format!(
                "runtime `{}` does not match descriptor `{}`",
                runtime.name(),
                desc.name
            )));
        }
        self.catalog.register_source(desc)?;
        self.runtimes.insert(runtime.name().to_string(), Arc::new(runtime));
        Ok(())
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn runtime(&self, source: &str) -> Result<&Arc<SourceRuntime>> {
        self.runtimes
            .get(source)
            .ok_or_else(|| Error::not_found("source", source))
    }

    pub fn dialect_of(&self, source: &str) -> Option<Dialect> {
        self.runtimes.get(source).map(|r| r.dialect())
    }

    pub fn translator(&self) -> &dyn Translator {
        self.translator.as_ref()
    }

    pub fn set_translator(&mut self, translator: Arc<dyn Translator>) {
        self.translator = translator;
    }

    pub fn cost_model(&self) -> &CostModel {
        &self.cost
    }

    pub fn set_cost_model(&mut self, model: CostModel) -> Result<()> {
        model.validate()?;
        self.cost = model;
        Ok(())
    }

    pub fn parallel(&self) -> bool {
        self.parallel
    }

    /// Sequential execution when false, regardless of the build feature.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel && crate::par::enabled();
    }

    /// Native invocations served per source since startup.
    pub fn native_invocations(&self) -> BTreeMap<String, u64> {
        self.runtimes
            .iter()
            .map(|(n, r)| (n.clone(), r.native_invocations()))
            .collect()
    }

    pub fn session(self: &Arc<Self>, principal: impl Into<String>) -> Session {
        Session::new(self.clone(), principal)
    }
}
