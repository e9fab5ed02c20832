//! Brute-force reference for the token registry: a flat list of accepted
//! events, with every query answered by scanning it.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use tdr_core::application::Decision;
use tdr_core::crypto::Address;
use tdr_core::state::{Command, Outcome};
use tdr_core::token::LandParcel;

use super::world::World;

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Mint {
        token: u64,
        app: String,
        owner: Address,
        far: Decimal,
    },
    Transfer {
        token: u64,
        to: Address,
    },
    Approve {
        token: u64,
        operator: Option<Address>,
    },
    Utilize {
        token: u64,
        far: Decimal,
    },
    Burn {
        token: u64,
    },
}

#[derive(Debug, Clone)]
pub enum Op {
    Mint {
        app: String,
        caller: Address,
    },
    Approve {
        token: u64,
        caller: Address,
        operator: Option<Address>,
    },
    Transfer {
        token: u64,
        caller: Address,
        from: Address,
        to: Address,
    },
    Utilize {
        token: u64,
        caller: Address,
        far: Decimal,
        zone: String,
    },
    Burn {
        token: u64,
        caller: Address,
    },
}

/// Facts fixed before the run starts.
#[derive(Clone)]
pub struct Setup {
    pub world: World,
    pub admin: Address,
    pub officer: Address,
    pub users: Vec<Address>,
    pub outsider: Address,
    /// application id → (verified, applicant, claimed FAR).
    pub apps: BTreeMap<String, (bool, Address, Decimal)>,
    pub receiving_zones: Vec<String>,
}

#[derive(Default)]
pub struct Model {
    pub events: Vec<Event>,
}

impl Model {
    fn minted(&self, token: u64) -> Option<(&String, Address, Decimal)> {
        self.events.iter().find_map(|e| match e {
            Event::Mint {
                token: t,
                app,
                owner,
                far,
            } if *t == token => Some((app, *owner, *far)),
            _ => None,
        })
    }

    pub fn mint_count(&self) -> u64 {
        self.events.iter().filter(|e| matches!(e, Event::Mint { .. })).count() as u64
    }

    pub fn burned(&self, token: u64) -> bool {
        self.events
            .iter()
            .any(|e| matches!(e, Event::Burn { token: t } if *t == token))
    }

    pub fn owner(&self, token: u64) -> Option<Address> {
        let mut owner = None;
        for e in &self.events {
            match e {
                Event::Mint { token: t, owner: o, .. } if *t == token => owner = Some(*o),
                Event::Transfer { token: t, to } if *t == token => owner = Some(*to),
                _ => {}
            }
        }
        owner
    }

    /// The operator set by the latest approval since the latest change of
    /// hands (a transfer or burn clears it).
    pub fn approved(&self, token: u64) -> Option<Address> {
        let mut approved = None;
        for e in &self.events {
            match e {
                Event::Approve { token: t, operator } if *t == token => approved = *operator,
                Event::Transfer { token: t, .. } | Event::Burn { token: t } if *t == token => approved = None,
                _ => {}
            }
        }
        approved
    }

    pub fn used(&self, token: u64) -> Decimal {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Utilize { token: t, far } if *t == token => Some(*far),
                _ => None,
            })
            .sum()
    }

    pub fn available(&self, token: u64) -> Option<Decimal> {
        self.minted(token).map(|(_, _, far)| far - self.used(token))
    }

    pub fn live(&self, token: u64) -> bool {
        self.minted(token).is_some() && !self.burned(token)
    }

    fn issued_for(&self, app: &str) -> bool {
        self.events
            .iter()
            .any(|e| matches!(e, Event::Mint { app: a, .. } if a == app))
    }

    /// The event an operation would append, or `None` if it must fail.
    pub fn predict(&self, setup: &Setup, op: &Op) -> Option<Event> {
        let active = |a: &Address| *a != setup.outsider;
        match op {
            Op::Mint { app, caller } => {
                let &(verified, applicant, far) = setup.apps.get(app)?;
                (*caller == setup.admin && verified && !self.issued_for(app)).then(|| Event::Mint {
                    token: self.mint_count() + 1,
                    app: app.clone(),
                    owner: applicant,
                    far,
                })
            }
            Op::Approve {
                token,
                caller,
                operator,
            } => (self.live(*token) && self.owner(*token) == Some(*caller)).then_some(Event::Approve {
                token: *token,
                operator: *operator,
            }),
            Op::Transfer {
                token,
                caller,
                from,
                to,
            } => {
                let owner = self.owner(*token);
                let authorized = owner == Some(*caller) || self.approved(*token) == Some(*caller);
                (active(caller) && self.live(*token) && owner == Some(*from) && authorized && active(to))
                    .then_some(Event::Transfer { token: *token, to: *to })
            }
            Op::Utilize {
                token,
                caller,
                far,
                zone,
            } => (*caller == setup.officer
                && self.live(*token)
                && *far > Decimal::ZERO
                && setup.receiving_zones.contains(zone)
                && *far <= self.available(*token)?)
            .then_some(Event::Utilize {
                token: *token,
                far: *far,
            }),
            Op::Burn { token, caller } => {
                (*caller == setup.admin && self.live(*token) && self.available(*token) == Some(Decimal::ZERO))
                    .then_some(Event::Burn { token: *token })
            }
        }
    }
}

pub fn setup() -> Setup {
    let mut w = World::new();
    let departments = w.departments();
    let officers: Vec<Address> = departments.iter().map(|d| w.officer(d)).collect();
    let users: Vec<Address> = (0..3).map(|i| w.bind(&format!("user-{i}"))).collect();
    for n in ["N1", "N2", "N3"] {
        w.notice(n, "S1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut apps = BTreeMap::new();
    for (i, user) in users.iter().enumerate() {
        for (j, notice) in ["N1", "N2"].iter().enumerate() {
            let far = Decimal::new(rng.gen_range(4..40) * 5, 1);
            let id = w.submit(user, notice, &far.normalize().to_string());
            // user-1's second application stays mid-pipeline.
            let verified = j == 0 || i != 1;
            if verified {
                for (dept, officer) in officers.iter().enumerate() {
                    w.exec(
                        officer,
                        Command::VerifyStep {
                            application_id: id.clone(),
                            decision: Decision::Approve,
                            remarks: departments[dept].clone(),
                        },
                    )
                    .expect("approve");
                }
            }
            apps.insert(id, (verified, *user, far));
        }
    }
    let receiving_zones = w.state.params.receiving_zones.clone();
    Setup {
        admin: w.admin.address(),
        officer: officers[0],
        outsider: super::world::key("outsider").address(),
        world: w,
        users,
        apps,
        receiving_zones,
    }
}

fn random_op(rng: &mut ChaCha8Rng, setup: &Setup, model: &Model) -> Op {
    let mut people: Vec<Address> = setup.users.clone();
    people.extend([setup.admin, setup.officer, setup.outsider]);
    let someone = |rng: &mut ChaCha8Rng| *people.choose(rng).unwrap();
    let minted = model.mint_count();
    let token = rng.gen_range(0..=minted + 1);
    let owner = model.owner(token);
    let owner_biased = |rng: &mut ChaCha8Rng| match owner {
        Some(o) if rng.gen_bool(0.7) => o,
        _ => someone(rng),
    };
    match rng.gen_range(0..10) {
        0 | 1 => {
            let mut ids: Vec<&String> = setup.apps.keys().collect();
            let missing = "TDR-APP-999999".to_owned();
            ids.push(&missing);
            let app = (*ids.choose(rng).unwrap()).clone();
            let caller = if rng.gen_bool(0.8) { setup.admin } else { someone(rng) };
            Op::Mint { app, caller }
        }
        2 => {
            let caller = owner_biased(rng);
            let operator = rng.gen_bool(0.8).then(|| someone(rng));
            Op::Approve {
                token,
                caller,
                operator,
            }
        }
        3..=5 => {
            let approved = model.approved(token);
            let caller = match approved {
                Some(a) if rng.gen_bool(0.4) => a,
                _ => owner_biased(rng),
            };
            let from = if rng.gen_bool(0.85) {
                owner.unwrap_or_else(|| someone(rng))
            } else {
                someone(rng)
            };
            Op::Transfer {
                token,
                caller,
                from,
                to: someone(rng),
            }
        }
        6..=8 => {
            let available = model.available(token).unwrap_or(Decimal::ONE);
            let far = match rng.gen_range(0..6) {
                0 => Decimal::ZERO,
                1 => available,
                2 => available + Decimal::new(5, 1),
                3 => Decimal::new(rng.gen_range(1..20), 1),
                _ => (available / Decimal::from(rng.gen_range(2..4))).round_dp(2),
            };
            let zone = if rng.gen_bool(0.9) {
                setup.receiving_zones.choose(rng).unwrap().clone()
            } else {
                "S1".into()
            };
            let caller = if rng.gen_bool(0.85) {
                setup.officer
            } else {
                someone(rng)
            };
            Op::Utilize {
                token,
                caller,
                far,
                zone,
            }
        }
        _ => {
            let caller = if rng.gen_bool(0.85) { setup.admin } else { someone(rng) };
            Op::Burn { token, caller }
        }
    }
}

fn command(op: &Op) -> (Address, Command) {
    match op.clone() {
        Op::Mint { app, caller } => (
            caller,
            Command::IssueDrc {
                application_id: app,
                lands: vec![LandParcel {
                    plot_id: "P-1".into(),
                    area: "100".parse().unwrap(),
                    zone: "S1".into(),
                }],
            },
        ),
        Op::Approve {
            token,
            caller,
            operator,
        } => (
            caller,
            Command::Approve {
                token_id: token,
                approved: operator,
            },
        ),
        Op::Transfer {
            token,
            caller,
            from,
            to,
        } => (
            caller,
            Command::TransferFrom {
                from,
                to,
                token_id: token,
            },
        ),
        Op::Utilize {
            token,
            caller,
            far,
            zone,
        } => (
            caller,
            Command::UtilizeDrc {
                token_id: token,
                far_used: far.normalize().to_string().parse().unwrap(),
                receiving_zone: zone,
            },
        ),
        Op::Burn { token, caller } => (caller, Command::BurnDrc { token_id: token }),
    }
}

#[derive(Debug, Default)]
pub struct RunReport {
    pub steps: usize,
    pub accepted: usize,
    /// Accept/reject or outcome disagreements with the model.
    pub mismatches: Vec<String>,
    pub bijection_violations: Vec<String>,
    pub far_violations: Vec<String>,
    /// Burns attempted by ADMIN on live tokens.
    pub burn_checks: usize,
    pub final_equal: bool,
}

impl RunReport {
    pub fn clean(&self) -> bool {
        self.mismatches.is_empty()
            && self.bijection_violations.is_empty()
            && self.far_violations.is_empty()
            && self.final_equal
    }
}

/// Both token mappings are mutually inverse over live tokens, absent for
/// burned ones, and ids are never handed out twice.
pub fn check_bijection(w: &World, out: &mut Vec<String>) {
    let reg = &w.state.tokens;
    let (drc_to_token, token_to_drc) = reg.mappings();
    let mut live = 0;
    let mut seen = BTreeSet::new();
    for t in reg.tokens() {
        if !seen.insert(t.token_id) || t.token_id >= reg.next_token_id() {
            out.push(format!("token id {} reissued or ahead of counter", t.token_id));
        }
        if t.burned {
            if token_to_drc.contains_key(&t.token_id) || drc_to_token.contains_key(&t.drc_id) {
                out.push(format!("burned token {} still mapped", t.token_id));
            }
            if reg.token_for_drc(&t.drc_id).is_some() || reg.drc_for_token(t.token_id).is_some() {
                out.push(format!("burned token {} still resolvable", t.token_id));
            }
        } else {
            live += 1;
            let d = token_to_drc.get(&t.token_id);
            let back = d.and_then(|d| drc_to_token.get(d));
            if d != Some(&t.drc_id) || back != Some(&t.token_id) {
                out.push(format!("token {} maps {d:?} -> {back:?}", t.token_id));
            }
        }
    }
    if drc_to_token.len() != live || token_to_drc.len() != live {
        out.push(format!(
            "{live} live tokens but maps hold {} / {}",
            drc_to_token.len(),
            token_to_drc.len()
        ));
    }
}

/// `claimed_far = far_available + Σ far_used` for every token.
pub fn check_far(w: &World, out: &mut Vec<String>) {
    let reg = &w.state.tokens;
    for t in reg.tokens() {
        let drc = reg.drc_of(t.token_id).expect("drc");
        let claimed = w
            .state
            .applications
            .get(&drc.issued_against)
            .expect("app")
            .claimed_far
            .decimal();
        let used: Decimal = reg.utilizations(t.token_id).iter().map(|u| u.far_used.decimal()).sum();
        if claimed != drc.far_available.decimal() + used || drc.initial_far.decimal() != claimed {
            out.push(format!(
                "token {}: claimed {claimed} != available {} + used {used}",
                t.token_id, drc.far_available
            ));
        }
    }
}

/// One randomized sequence of `steps` operations.
pub fn run(setup: &Setup, seed: u64, steps: usize) -> RunReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = setup.world.clone();
    let mut model = Model::default();
    let mut report = RunReport::default();
    for step in 0..steps {
        let op = random_op(&mut rng, setup, &model);
        let predicted = model.predict(setup, &op);
        // Burn by ADMIN of a live token: accepted iff nothing is left.
        let burn_probe = match &op {
            Op::Burn { token, caller } if *caller == setup.admin && model.live(*token) => {
                Some(w.state.tokens.drc_of(*token).expect("drc").far_available.is_zero())
            }
            _ => None,
        };
        let (caller, cmd) = command(&op);
        let result = w.exec(&caller, cmd);
        report.steps += 1;
        match (&predicted, &result) {
            (Some(event), Ok(outcome)) => {
                report.accepted += 1;
                if let (Event::Mint { token, .. }, Outcome::DrcIssued { token_id, .. }) = (event, outcome) {
                    if token != token_id {
                        report
                            .mismatches
                            .push(format!("step {step}: minted {token_id}, model {token}"));
                    }
                }
                model.events.push(event.clone());
            }
            (None, Err(_)) => {}
            _ => report.mismatches.push(format!(
                "step {step}: {op:?} engine {:?}, model {:?}",
                result.as_ref().map(|_| "ok").map_err(|e| e.code()),
                predicted.is_some()
            )),
        }
        if let Some(zero) = burn_probe {
            report.burn_checks += 1;
            if result.is_ok() != zero {
                report.far_violations.push(format!(
                    "step {step}: burn accepted={} with far_available zero={zero}",
                    result.is_ok()
                ));
            }
        }
        check_bijection(&w, &mut report.bijection_violations);
        check_far(&w, &mut report.far_violations);
    }
    report.final_equal = final_state_matches(&w, &model, &mut report.mismatches);
    report
}

fn final_state_matches(w: &World, model: &Model, out: &mut Vec<String>) -> bool {
    let reg = &w.state.tokens;
    let before = out.len();
    let minted = model.mint_count();
    if reg.next_token_id() != minted + 1 || reg.tokens().count() as u64 != minted {
        out.push(format!(
            "registry holds {} tokens, model {minted}",
            reg.tokens().count()
        ));
    }
    for token in 1..=minted {
        let Ok(t) = reg.token(token) else {
            out.push(format!("token {token} missing"));
            continue;
        };
        let drc = reg.drc_of(token).expect("drc");
        let expected = (
            model.owner(token),
            model.burned(token),
            model.approved(token),
            model.available(token),
        );
        let actual = (Some(t.owner), t.burned, t.approved, Some(drc.far_available.decimal()));
        if expected != actual {
            out.push(format!("token {token}: engine {actual:?}, model {expected:?}"));
        }
        let kinds: Vec<&str> = reg.provenance(token).unwrap().iter().map(|e| e.kind.name()).collect();
        let model_kinds: Vec<&str> = model
            .events
            .iter()
            .filter_map(|e| match e {
                Event::Mint { token: t, .. } if *t == token => Some("mint"),
                Event::Transfer { token: t, .. } if *t == token => Some("transfer"),
                Event::Utilize { token: t, .. } if *t == token => Some("utilize"),
                Event::Burn { token: t } if *t == token => Some("burn"),
                _ => None,
            })
            .collect();
        if kinds != model_kinds {
            out.push(format!("token {token}: provenance {kinds:?}, model {model_kinds:?}"));
        }
    }
    out.len() == before
}
