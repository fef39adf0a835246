//! Subcommand implementations. Each returns a `Report`; nothing here prints.

use std::time::Instant;

use normcompat::catalogue::{self, check_entry, list_catalogue, Filter};
use normcompat::groups::GroupError;
use normcompat::levels::{verify_lemma, LevelError, Variant};
use normcompat::mackey::{
    check_hypotheses, family_check_within, machine_family, norm_relation_unchecked, pair_level, verify_decomposition, CompactClass,
    MackeyError,
};
use normcompat::spherical::{
    check_condition_b, check_open_orbit, find_u, stabilizer_lie, torus_image, Pair, SearchOutcome, SearchStrategy, SphericalError,
};
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig};
use crate::report::{Record, Report, Status};

/// Command-line overrides of config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub p: Option<u64>,
    pub r_max: Option<u32>,
    pub depth: Option<u32>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
    pub extended: bool,
    pub timing: bool,
}

impl Overrides {
    pub fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig, ConfigError> {
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(r) = self.r_max {
            cfg.r_max = r;
        }
        if self.depth.is_some() {
            cfg.depth_override = self.depth;
        }
        if let Some(b) = self.budget {
            cfg.budgets.points = b;
            cfg.budgets.cosets = b;
            cfg.budgets.search = b;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate().map_err(|msg| ConfigError::Invalid { path: "command line".into(), msg })?;
        Ok(cfg)
    }
}

/// Pairs with `dim G` above this are simulated only with `--extended`.
pub const SLOW_DIM: usize = 8;

/// Largest class support listed in full in a report.
const SHOWN_SUPPORT: usize = 32;

fn group_budget(e: &GroupError) -> Option<String> {
    match e {
        GroupError::BudgetExceeded { estimate, budget } => Some(format!("needs {estimate} elements, budget {budget}")),
        _ => None,
    }
}

fn level_budget(e: &LevelError) -> Option<String> {
    match e {
        LevelError::Group(g) => group_budget(g),
        _ => None,
    }
}

fn spherical_budget(e: &SphericalError) -> Option<String> {
    match e {
        SphericalError::Group(g) => group_budget(g),
        _ => None,
    }
}

/// Status and data for a failed computation: budget exhaustion and unmet
/// hypotheses are kept apart from mathematical failures.
fn classify(e: &MackeyError) -> (Status, Value) {
    let budget = match e {
        MackeyError::BudgetExceeded { estimate, budget } => Some(format!("needs {estimate} elements, budget {budget}")),
        MackeyError::Group(g) => group_budget(g),
        MackeyError::Level(l) => level_budget(l),
        MackeyError::Spherical(s) => spherical_budget(s),
        _ => None,
    };
    if let Some(reason) = budget {
        return (Status::SkippedBudget, json!({ "reason": reason }));
    }
    match e {
        MackeyError::HypothesesUnmet(m) => (Status::HypothesesUnmet, json!({ "reason": m })),
        MackeyError::Unsupported(m) | MackeyError::Level(LevelError::Unsupported(m)) => {
            (Status::SkippedBudget, json!({ "reason": format!("unsupported: {m}") }))
        }
        other => (Status::Fail, json!({ "error": other.to_string() })),
    }
}

struct Ctx<'a> {
    report: Report,
    timing: bool,
    cfg: &'a RunConfig,
}

impl Ctx<'_> {
    fn run(&mut self, name: String, f: impl FnOnce() -> Result<(Status, Value), MackeyError>) -> Status {
        let t0 = Instant::now();
        let (status, data) = f().unwrap_or_else(|e| classify(&e));
        let mut rec = Record::new(name, status, data);
        if self.timing {
            rec.timing_ms = Some(t0.elapsed().as_millis() as u64);
        }
        self.report.push(rec);
        status
    }

    fn pair(&mut self) -> Option<Pair> {
        match Pair::new(self.cfg.pair.to_config()) {
            Ok(p) => Some(p),
            Err(e) => {
                self.run("pair".into(), || Err(e.into()));
                None
            }
        }
    }
}

fn new_ctx<'a>(command: &str, cfg: &'a RunConfig, ov: &Overrides) -> Ctx<'a> {
    Ctx { report: Report::new(command, Some(cfg.hash())), timing: ov.timing, cfg }
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn class_data(c: &CompactClass) -> Value {
    let mut v = json!({ "support": c.len(), "mass": c.mass().to_string() });
    if c.len() <= SHOWN_SUPPORT {
        v["cosets"] = json!(c.to_strings());
    }
    v
}

pub fn check_pair(cfg: &RunConfig, ov: &Overrides) -> Report {
    let mut cx = new_ctx("check-pair", cfg, ov);
    let Some(pair) = cx.pair() else { return cx.report };
    let p = cfg.p;
    cx.run("open_orbit".into(), || {
        let o = check_open_orbit(&pair)?;
        let ok = o.open && !o.bad_primes.contains(&p) && pair.u_is_integral_at(p);
        Ok((pass_if(ok), json!({ "p": p, "orbit": o })))
    });
    cx.run("stabilizer_lie".into(), || {
        let s = stabilizer_lie(&pair)?;
        let basis: Vec<Vec<String>> = s.in_h.basis_vectors().iter().map(|v| v.iter().map(|x| x.to_string()).collect()).collect();
        Ok((Status::Pass, json!({ "dim": s.in_h.dim(), "dim_in_g": s.in_g.dim(), "basis_h": basis })))
    });
    let depth = cfg.depth_override.unwrap_or(1);
    cx.run("condition_b".into(), || {
        let b = check_condition_b(&pair, p, depth, cfg.budgets.points)?;
        let status = if !b.lie_ok || b.points_ok == Some(false) {
            Status::Fail
        } else if b.points_ok.is_none() {
            Status::SkippedBudget
        } else {
            Status::Pass
        };
        Ok((status, json!({ "depth": depth, "result": b })))
    });
    cx.run("torus_image".into(), || {
        let t = torus_image(&pair)?;
        Ok((
            Status::Pass,
            json!({
                "characters": t.characters,
                "dim_lie_c": t.lie_c.dim(),
                "dim_image": t.image.dim(),
                "proper": t.proper,
                "vanishing": t.vanishing,
            }),
        ))
    });
    cx.report
}

pub fn simulate_norm(cfg: &RunConfig, ov: &Overrides) -> Report {
    let mut cx = new_ctx("simulate-norm", cfg, ov);
    let Some(pair) = cx.pair() else { return cx.report };
    let (p, budget) = (cfg.p, cfg.budgets.cosets);
    let hyp = cx.run("hypotheses".into(), || {
        check_hypotheses(&pair, p, cfg.budgets.points)?;
        Ok((Status::Pass, json!({ "p": p })))
    });
    if hyp != Status::Pass {
        return cx.report;
    }
    if pair.g.dim() > SLOW_DIM && !ov.extended {
        cx.run("simulation".into(), || {
            Ok((Status::SkippedBudget, json!({ "reason": format!("dim G = {} is marked slow; rerun with --extended", pair.g.dim()) })))
        });
        return cx.report;
    }
    for r in 1..=cfg.r_max {
        cx.run(format!("hecke_decomposition r={r}"), || {
            let v = pair_level(&pair, p, r, Variant::V)?;
            let cosets = v.n_index(0, 1);
            if cosets > budget as u128 {
                return Err(MackeyError::BudgetExceeded { estimate: cosets, budget });
            }
            Ok(match verify_decomposition(&v) {
                Ok(()) => (Status::Pass, json!({ "r": r })),
                Err(MackeyError::Decomposition(m)) => (Status::Fail, json!({ "r": r, "error": m })),
                Err(e) => return Err(e),
            })
        });
        cx.run(format!("norm_relation r={r}"), || {
            let nr = norm_relation_unchecked(&pair, p, r, budget)?;
            Ok((pass_if(nr.holds), json!({ "r": r, "lhs": class_data(&nr.lhs), "rhs": class_data(&nr.rhs), "witness": nr.witness })))
        });
    }
    cx.run(format!("compatible_family r<={}", cfg.r_max + 1), || {
        let fam = machine_family(&pair, p, cfg.r_max + 1, budget)?;
        let check = family_check_within(&fam, budget)?;
        let sizes: Vec<usize> = fam.classes.values().map(|c| c.len()).collect();
        Ok((pass_if(check.ok), json!({ "check": check, "support_sizes": sizes })))
    });
    cx.report
}

pub fn verify_lemma_cmd(cfg: &RunConfig, ov: &Overrides) -> Report {
    let mut cx = new_ctx("verify-lemma", cfg, ov);
    let Some(pair) = cx.pair() else { return cx.report };
    let p = cfg.p;
    for r in 1..=cfg.r_max {
        cx.run(format!("lemma r={r}"), || {
            let need = pair_level(&pair, p, r + 1, Variant::U)?
                .congruence_depth()
                .max(pair_level(&pair, p, r, Variant::Uprime)?.congruence_depth());
            let depth = cfg.depth_override.unwrap_or(need + 1);
            let rep = verify_lemma(&pair, p, r, depth, cfg.budgets.points)?;
            let ok = rep.part_i && rep.part_ii && rep.index == rep.expected_index && rep.reps_count as u64 == rep.expected_index;
            Ok((pass_if(ok), json!({ "r": r, "result": rep })))
        });
    }
    cx.report
}

pub fn find_u_cmd(cfg: &RunConfig, ov: &Overrides) -> Report {
    let mut cx = new_ctx("find-u", cfg, ov);
    let strategy = cfg.search.clone().unwrap_or(SearchStrategy::Enumerate);
    cx.run("find_u".into(), || {
        let out = find_u(&cfg.pair.to_config(), &strategy, cfg.p, cfg.budgets.search, cfg.seed)?;
        Ok(match out {
            SearchOutcome::Found { u, tried } => {
                let mut done = cfg.clone();
                done.pair.u = Some(u.clone());
                (Status::Pass, json!({ "u": u, "tried": tried, "completed_config": done }))
            }
            SearchOutcome::DimensionObstruction { dim_qh0, flag_dim } => (
                Status::HypothesesUnmet,
                json!({ "reason": "dimension obstruction, search skipped", "dim_qh0": dim_qh0, "flag_dim": flag_dim }),
            ),
            SearchOutcome::Exhausted { tried } => (Status::SkippedBudget, json!({ "reason": "search budget exhausted", "tried": tried })),
        })
    });
    cx.report
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum CatalogueFilter {
    None,
    Eisenstein,
    Torus,
}

/// Family instances are listed for these `n`.
pub const CATALOGUE_NS: std::ops::RangeInclusive<usize> = 2..=6;

pub fn catalogue_cmd(check_dims: bool, filter: CatalogueFilter) -> Report {
    let mut report = Report::new("catalogue", None);
    let f = match filter {
        CatalogueFilter::None => Filter::All,
        CatalogueFilter::Eisenstein => Filter::Eisenstein,
        CatalogueFilter::Torus => Filter::HasTorusFactor,
    };
    for e in list_catalogue(f, CATALOGUE_NS) {
        let mut data = json!({
            "g": catalogue::describe(&e.g_factors),
            "h": catalogue::describe(&e.h_factors),
            "kind": e.kind,
            "notes": e.notes,
        });
        if let Some(x) = &e.example {
            data["example"] = json!(x);
        }
        let mut status = Status::Pass;
        if check_dims {
            let c = check_entry(&e);
            data["dim_h"] = json!(c.dim_h);
            data["dim_flag_g"] = json!(c.dim_flag_g);
            status = pass_if(c.ok);
        }
        report.push(Record::new(e.name, status, data));
    }
    report
}
