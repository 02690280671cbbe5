use std::collections::BTreeMap;

use crate::system::System;

use super::{
    check_oes_equilibrium, check_oes_variational, check_output_contraction, check_partial_contraction, CheckConfig,
    ContractionError, SamplingPlan, Verdict,
};

/// Extra inputs that only some checks read.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckParams {
    pub y_star: Option<Vec<f64>>,
    pub x_ref0: Option<Vec<f64>>,
}

/// A sampling-based trajectory check.
pub trait Check: Send + Sync {
    fn name(&self) -> &'static str;

    fn run(
        &self,
        sys: &System,
        plan: &SamplingPlan,
        cfg: &CheckConfig,
        params: &CheckParams,
    ) -> Result<Verdict, ContractionError>;
}

struct OutputContraction;
struct PartialContraction;
struct OesVariational;
struct OesEquilibrium;

impl Check for OutputContraction {
    fn name(&self) -> &'static str {
        "contraction"
    }

    fn run(&self, sys: &System, plan: &SamplingPlan, cfg: &CheckConfig, _: &CheckParams) -> Result<Verdict, ContractionError> {
        check_output_contraction(sys, plan, cfg)
    }
}

impl Check for PartialContraction {
    fn name(&self) -> &'static str {
        "partial"
    }

    fn run(&self, sys: &System, plan: &SamplingPlan, cfg: &CheckConfig, _: &CheckParams) -> Result<Verdict, ContractionError> {
        check_partial_contraction(sys, plan, cfg)
    }
}

impl Check for OesVariational {
    fn name(&self) -> &'static str {
        "oes"
    }

    fn run(&self, sys: &System, plan: &SamplingPlan, cfg: &CheckConfig, _: &CheckParams) -> Result<Verdict, ContractionError> {
        check_oes_variational(sys, plan, cfg)
    }
}

impl Check for OesEquilibrium {
    fn name(&self) -> &'static str {
        "oes-eq"
    }

    fn run(
        &self,
        sys: &System,
        plan: &SamplingPlan,
        cfg: &CheckConfig,
        params: &CheckParams,
    ) -> Result<Verdict, ContractionError> {
        let y_star = params.y_star.as_deref().ok_or(ContractionError::MissingEquilibrium("oes-eq"))?;
        check_oes_equilibrium(sys, y_star, params.x_ref0.as_deref(), plan, cfg)
    }
}

/// Checks looked up by name.
pub struct CheckRegistry {
    checks: BTreeMap<&'static str, Box<dyn Check>>,
}

impl CheckRegistry {
    pub fn empty() -> CheckRegistry {
        CheckRegistry { checks: BTreeMap::new() }
    }

    pub fn builtin() -> CheckRegistry {
        let mut r = CheckRegistry::empty();
        r.register(Box::new(OutputContraction));
        r.register(Box::new(PartialContraction));
        r.register(Box::new(OesVariational));
        r.register(Box::new(OesEquilibrium));
        r
    }

    /// Adds a check, replacing any previous one of the same name.
    pub fn register(&mut self, check: Box<dyn Check>) {
        self.checks.insert(check.name(), check);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.checks.keys().copied()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Check, ContractionError> {
        self.checks
            .get(name)
            .map(|c| c.as_ref())
            .ok_or_else(|| ContractionError::UnknownCheck(name.to_string()))
    }
}
