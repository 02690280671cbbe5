use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{OdeError, Rk4, Rk45, Trajectory, VectorField};

/// An integration strategy.
pub trait Integrator: Send + Sync {
    fn name(&self) -> &'static str;

    fn integrate(&self, field: &dyn VectorField, x0: &[f64], t0: f64, tf: f64) -> Result<Trajectory, OdeError>;
}

/// Integrator selection by name plus the parameters either method may read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: String,
    /// fixed step for `rk4-fixed`
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
    /// cap on the adaptive step; unbounded when absent
    pub max_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> IntegratorConfig {
        IntegratorConfig {
            method: "rk45-adaptive".to_string(),
            step: 1e-3,
            rtol: 1e-8,
            atol: 1e-8,
            max_step: None,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> IntegratorConfig {
        IntegratorConfig {
            method: "rk4-fixed".to_string(),
            step,
            ..IntegratorConfig::default()
        }
    }

    pub fn rk45(rtol: f64, atol: f64) -> IntegratorConfig {
        IntegratorConfig {
            rtol,
            atol,
            ..IntegratorConfig::default()
        }
    }

    /// Build through the built-in registry.
    pub fn build(&self) -> Result<Box<dyn Integrator>, OdeError> {
        IntegratorRegistry::builtin().build(self)
    }
}

type Factory = fn(&IntegratorConfig) -> Result<Box<dyn Integrator>, OdeError>;

/// Name-keyed table of integrator factories.
pub struct IntegratorRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl IntegratorRegistry {
    pub fn empty() -> IntegratorRegistry {
        IntegratorRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> IntegratorRegistry {
        let mut reg = IntegratorRegistry::empty();
        reg.register("rk4-fixed", |cfg| Ok(Box::new(Rk4::new(cfg.step)?)));
        reg.register("rk45-adaptive", |cfg| {
            Ok(Box::new(Rk45::new(cfg.rtol, cfg.atol, cfg.max_step.unwrap_or(f64::INFINITY))?))
        });
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, cfg: &IntegratorConfig) -> Result<Box<dyn Integrator>, OdeError> {
        let factory = self
            .factories
            .get(cfg.method.as_str())
            .ok_or_else(|| OdeError::UnknownMethod(cfg.method.clone()))?;
        factory(cfg)
    }
}
