//! `pruw simulate`: install a plan, run sessions against a plaintext oracle
//! and meter communication.

use std::collections::BTreeSet;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use pruw_core::ffield::PrimeField;
use pruw_core::planner::MixtureChoice;
use pruw_core::ratio::{Exact, Rational};
use pruw_core::sim::{install_plan, measure_costs, privacy_probe, ClassCost, PlainOracle, ProbeConfig, ProbeMode, ProbeReport};

use crate::config::{ConfigEcho, ScenarioConfig};
use crate::plan::plan_for;

#[derive(Debug, Clone, Copy)]
pub struct SimulateOptions {
    pub sessions: u64,
    pub probe: bool,
    pub probe_q: Option<u64>,
    pub probe_samples: u64,
}

#[derive(Debug, Serialize)]
pub struct PlanSummary {
    pub chosen: MixtureChoice,
    pub codes: Vec<(u64, u64)>,
    pub granularity: u64,
    pub requested_length: u64,
    pub length: u64,
}

#[derive(Debug, Serialize)]
pub struct SessionRecord {
    pub session: u64,
    pub theta: usize,
    pub read_correct: bool,
    pub reading: Exact,
    pub writing: Exact,
    pub total: Exact,
    pub within_tolerance: bool,
    pub query_upload: u64,
    pub classes: Vec<ClassCost>,
}

#[derive(Debug, Serialize)]
pub struct Aggregate {
    pub sessions: u64,
    pub reading: Exact,
    pub writing: Exact,
    pub total: Exact,
    pub theoretical: Exact,
    pub tolerance: Exact,
}

#[derive(Debug, Serialize)]
pub struct SimulationReport {
    pub config: ConfigEcho,
    pub notes: Vec<String>,
    pub plan: PlanSummary,
    pub sessions: Vec<SessionRecord>,
    pub aggregate: Option<Aggregate>,
    /// Every submodel privately read back after the last session and
    /// compared with the oracle.
    pub final_state_correct: bool,
    pub probes: Vec<ProbeReport>,
    pub pass: bool,
}

impl SimulationReport {
    /// Human-readable reasons the run failed; empty on success.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.sessions {
            if !s.read_correct {
                out.push(format!("session {} read the wrong submodel {}", s.session, s.theta));
            }
            if !s.within_tolerance {
                out.push(format!("session {} cost {} is off the theoretical value", s.session, s.total.0));
            }
        }
        if !self.final_state_correct {
            out.push("stored model differs from the oracle after the sessions".into());
        }
        for p in &self.probes {
            if !p.pass {
                out.push(format!("{:?} probe for ({}, {}) failed", p.mode, p.geometry.k, p.geometry.r));
            }
        }
        out
    }
}

pub fn cmd_simulate(cfg: &ScenarioConfig, opts: SimulateOptions) -> Result<SimulationReport> {
    let mut notes = cfg.notes.clone();
    let plan = plan_for(cfg, &mut notes)?;
    let field = PrimeField::new(cfg.q)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let m = cfg.submodels as usize;
    let l = cfg.length as usize;

    let model: Vec<Vec<u64>> = (0..m).map(|_| field.random_vec(&mut rng, l)).collect();
    let mut oracle = PlainOracle::new(&field, model.clone());
    let mut cluster = install_plan(&field, &plan, &model, &mut rng)?;
    log::info!("installed {} databases, {} classes", plan.n(), plan.classes.len());

    let mut sessions = Vec::new();
    let (mut down, mut up) = (0u64, 0u64);
    let mut last_report = None;
    for session in 0..opts.sessions {
        let theta = rng.gen_range(0..m);
        let delta = field.random_vec(&mut rng, l);
        let outcome = cluster.run_session(theta, &delta, &mut rng)?;
        let read_correct = outcome.recovered.as_slice() == oracle.submodel(theta);
        oracle.apply(theta, &delta);
        let costs = measure_costs(&outcome.ledger, &plan);
        down += outcome.ledger.downloaded();
        up += outcome.ledger.uploaded();
        log::debug!("session {session}: theta {theta}, total {}", costs.total);
        sessions.push(SessionRecord {
            session,
            theta,
            read_correct,
            reading: Exact(costs.reading.clone()),
            writing: Exact(costs.writing.clone()),
            total: Exact(costs.total.clone()),
            within_tolerance: costs.within_tolerance,
            query_upload: costs.query_upload,
            classes: costs.classes.clone(),
        });
        last_report = Some(costs);
    }

    let aggregate = last_report.map(|r| {
        let norm = Rational::from_integer((opts.sessions * plan.length).into());
        let reading = Rational::from_integer(down.into()) / &norm;
        let writing = Rational::from_integer(up.into()) / &norm;
        Aggregate {
            sessions: opts.sessions,
            total: Exact(&reading + &writing),
            reading: Exact(reading),
            writing: Exact(writing),
            theoretical: Exact(r.theoretical),
            tolerance: Exact(r.tolerance),
        }
    });
    let final_state_correct = cluster.verify_against(&oracle, &mut rng)?;

    let mut probes = Vec::new();
    if opts.probe {
        let q = opts.probe_q.unwrap_or(cfg.q);
        let geometries: BTreeSet<(usize, usize)> = plan.classes.iter().map(|c| (c.geometry.k, c.geometry.r)).collect();
        for (k, r) in geometries {
            for mode in [ProbeMode::Index, ProbeMode::Update, ProbeMode::Security] {
                let mut pc = ProbeConfig::new(mode, q, m, k, r);
                pc.samples = opts.probe_samples;
                pc.seed = cfg.seed;
                let report = privacy_probe(&pc)?;
                log::info!("{mode:?} probe ({k}, {r}): pass {}", report.pass);
                probes.push(report);
            }
        }
        if probes.iter().any(|p| p.max_tv.is_none()) {
            notes.push(format!("probe noise space too large to enumerate at q = {q}; sampled instead"));
        }
    }

    let mut report = SimulationReport {
        config: cfg.echo(),
        notes,
        plan: PlanSummary {
            chosen: plan.decision.chosen,
            codes: plan.classes.iter().map(|c| (c.code.k, c.code.r)).collect(),
            granularity: plan.granularity,
            requested_length: plan.requested_length,
            length: plan.length,
        },
        sessions,
        aggregate,
        final_state_correct,
        probes,
        pass: false,
    };
    report.pass = report.failures().is_empty();
    Ok(report)
}
