//! Exhaustive check of the verification pipeline against a direct model.

use tdr_core::application::{ApplicationStatus, Decision};
use tdr_core::crypto::Address;
use tdr_core::state::Command;

use super::world::{uri, World};

pub const DECISIONS: [Decision; 3] = [Decision::Approve, Decision::Reject, Decision::SendBack];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Submitted,
    SentBack,
    Rejected,
    Verified,
    Issued,
}

/// What the pipeline should do, written from the rules alone.
struct Model {
    departments: usize,
    status: Status,
    next: usize,
    trail: Vec<(usize, Decision)>,
}

impl Model {
    /// Whether a decision from department `dept` is accepted.
    fn decide(&mut self, dept: usize, d: Decision) -> bool {
        if self.status != Status::Submitted || dept != self.next {
            return false;
        }
        self.trail.push((dept, d));
        match d {
            Decision::Approve => {
                self.next += 1;
                if self.next == self.departments {
                    self.status = Status::Verified;
                }
            }
            Decision::Reject => self.status = Status::Rejected,
            Decision::SendBack => self.status = Status::SentBack,
        }
        true
    }

    fn resubmit(&mut self) -> bool {
        if self.status != Status::SentBack {
            return false;
        }
        self.status = Status::Submitted;
        true
    }

    fn issue(&mut self) -> bool {
        if self.status != Status::Verified {
            return false;
        }
        self.status = Status::Issued;
        true
    }
}

fn engine_status(s: Status) -> ApplicationStatus {
    match s {
        Status::Submitted => ApplicationStatus::Submitted,
        Status::SentBack => ApplicationStatus::SentBackForCorrection,
        Status::Rejected => ApplicationStatus::Rejected,
        Status::Verified => ApplicationStatus::Verified,
        Status::Issued => ApplicationStatus::DrcIssued,
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub sequences: usize,
    pub calls: usize,
    pub violations: Vec<String>,
    pub terminal_counts: [usize; 2],
}

struct Fixture {
    world: World,
    applicant: Address,
    officers: Vec<Address>,
    admin: Address,
}

fn fixture() -> Fixture {
    let mut world = World::new();
    let applicant = world.bind("applicant");
    let officers = world.departments().iter().map(|d| world.officer(d)).collect();
    world.notice("N1", "S1");
    let admin = world.admin.address();
    Fixture {
        world,
        applicant,
        officers,
        admin,
    }
}

/// Every decision sequence of length `0..=max_len`, each driven by the
/// officer of the department the model expects next.
pub fn enumerate(max_len: usize) -> Report {
    let base = fixture();
    let mut report = Report::default();
    let mut seq = Vec::new();
    walk(&base, &mut seq, max_len, &mut report);
    report
}

fn walk(base: &Fixture, seq: &mut Vec<Decision>, max_len: usize, report: &mut Report) {
    run_sequence(base, seq, report);
    if seq.len() == max_len {
        return;
    }
    for d in DECISIONS {
        seq.push(d);
        walk(base, seq, max_len, report);
        seq.pop();
    }
}

fn run_sequence(base: &Fixture, seq: &[Decision], report: &mut Report) {
    report.sequences += 1;
    let mut w = base.world.clone();
    let n = base.officers.len();
    let app_id = w.submit(&base.applicant, "N1", "25");
    let mut model = Model {
        departments: n,
        status: Status::Submitted,
        next: 0,
        trail: Vec::new(),
    };
    let mut violations = Vec::new();
    let mut fail = |msg: String| violations.push(format!("{seq:?}: {msg}"));

    for (step, &d) in seq.iter().enumerate() {
        // A different department never gets to act out of turn.
        let wrong = (model.next + 1) % n;
        if n > 1 {
            let r = w.exec(&base.officers[wrong], verify(&app_id, d, step));
            if r.is_ok() {
                fail(format!("step {step}: department {wrong} acted out of turn"));
            }
        }
        let dept = model.next.min(n - 1);
        let expected = model.decide(dept, d);
        let accepted = w.exec(&base.officers[dept], verify(&app_id, d, step)).is_ok();
        report.calls += 1;
        if accepted != expected {
            fail(format!("step {step}: {d:?} accepted={accepted}, model says {expected}"));
        }
        if model.status == Status::SentBack {
            let expected = model.resubmit();
            let accepted = w
                .exec(
                    &base.applicant,
                    Command::Resubmit {
                        application_id: app_id.clone(),
                        land_details_uri: uri(&format!("fix-{step}")),
                    },
                )
                .is_ok();
            if accepted != expected {
                fail(format!("step {step}: resubmit accepted={accepted}"));
            }
        }
        compare(&w, &app_id, &model, &base.officers, &mut fail);
    }

    // Only a VERIFIED application can be issued, and only with every
    // department's approval in pipeline order.
    let expected = model.issue();
    let issued = w
        .exec(
            &base.admin,
            Command::IssueDrc {
                application_id: app_id.clone(),
                lands: vec![tdr_core::token::LandParcel {
                    plot_id: "P".into(),
                    area: "1".parse().unwrap(),
                    zone: "S1".into(),
                }],
            },
        )
        .is_ok();
    if issued != expected {
        fail(format!("issue accepted={issued}, model says {expected}"));
    }
    if issued {
        let approvals: Vec<usize> = model
            .trail
            .iter()
            .filter(|(_, d)| *d == Decision::Approve)
            .map(|(dept, _)| *dept)
            .collect();
        if approvals != (0..n).collect::<Vec<_>>() {
            fail(format!("issued with approvals {approvals:?}"));
        }
    }
    compare(&w, &app_id, &model, &base.officers, &mut fail);

    // REJECTED and DRC_ISSUED absorb every further call.
    let status = w.state.applications.get(&app_id).unwrap().status;
    if matches!(model.status, Status::Rejected | Status::Issued) {
        report.terminal_counts[usize::from(model.status == Status::Issued)] += 1;
        for (i, officer) in base.officers.iter().enumerate() {
            for d in DECISIONS {
                if w.exec(officer, verify(&app_id, d, 100 + i)).is_ok() {
                    fail(format!("terminal {status:?} accepted {d:?}"));
                }
            }
        }
        let r = w.exec(
            &base.applicant,
            Command::Resubmit {
                application_id: app_id.clone(),
                land_details_uri: uri("late"),
            },
        );
        if r.is_ok() {
            fail(format!("terminal {status:?} accepted resubmit"));
        }
    } else if status.is_terminal() {
        fail(format!("engine terminal {status:?} where model is {:?}", model.status));
    }
    report.violations.extend(violations);
}

fn verify(app_id: &str, d: Decision, step: usize) -> Command {
    Command::VerifyStep {
        application_id: app_id.to_owned(),
        decision: d,
        remarks: format!("step {step}"),
    }
}

fn compare(w: &World, app_id: &str, model: &Model, officers: &[Address], fail: &mut impl FnMut(String)) {
    let app = w.state.applications.get(app_id).unwrap();
    if app.status != engine_status(model.status) {
        fail(format!("status {:?}, model {:?}", app.status, model.status));
    }
    let departments = w.departments();
    let trail: Vec<(String, Decision, Address)> = app
        .verification_trail
        .iter()
        .map(|r| (r.sub_department.clone(), r.decision, r.officer))
        .collect();
    let expected: Vec<(String, Decision, Address)> = model
        .trail
        .iter()
        .map(|&(dept, d)| (departments[dept].clone(), d, officers[dept]))
        .collect();
    if trail != expected {
        fail(format!("trail {trail:?}, model {expected:?}"));
    }
}
