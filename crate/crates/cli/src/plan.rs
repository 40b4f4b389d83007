//! `pruw plan`: storage plan and mixture costs for a configuration.

use anyhow::Result;
use pruw_core::Error;
use serde::Serialize;

use pruw_core::planner::{build_plan, CostScalars, MixtureChoice, StoragePlan};
use pruw_core::ratio::Exact;

use crate::config::{ConfigEcho, ScenarioConfig};

#[derive(Debug, Serialize)]
pub struct PlanReport {
    pub config: ConfigEcho,
    pub notes: Vec<String>,
    pub scalars: CostScalars,
    pub c1: Option<Exact>,
    pub c2: Option<Exact>,
    pub chosen: MixtureChoice,
    pub chosen_cost: Exact,
    pub plan: StoragePlan,
}

/// Builds the plan for `cfg`, recording padding in `notes`.
pub fn plan_for(cfg: &ScenarioConfig, notes: &mut Vec<String>) -> Result<StoragePlan> {
    let profile = cfg.profile()?;
    let plan = match build_plan(&profile, cfg.submodels, cfg.length, cfg.pad) {
        Err(e @ Error::IncompatibleLength { .. }) => {
            return Err(anyhow::Error::from(e).context("L: set \"pad\": true to round up to the granularity"))
        }
        other => other?,
    };
    if plan.length != plan.requested_length {
        notes.push(format!(
            "L padded from {} to {} (granularity {})",
            plan.requested_length, plan.length, plan.granularity
        ));
    }
    Ok(plan)
}

pub fn cmd_plan(cfg: &ScenarioConfig) -> Result<PlanReport> {
    let mut notes = cfg.notes.clone();
    let plan = plan_for(cfg, &mut notes)?;
    log::info!("planned {} classes, granularity {}", plan.classes.len(), plan.granularity);
    let d = &plan.decision;
    Ok(PlanReport {
        config: cfg.echo(),
        notes,
        scalars: plan.profile.scalars().clone(),
        c1: d.c1.clone(),
        c2: d.c2.clone(),
        chosen: d.chosen,
        chosen_cost: Exact(d.chosen_cost.clone()),
        plan,
    })
}
