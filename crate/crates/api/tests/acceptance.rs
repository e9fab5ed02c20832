//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdr_core::application::Decision;
use tdr_core::config::{Resident, ServiceConfig};
use tdr_core::crypto::{Address, SigningKey};
use tdr_core::devnet::Devnet;
use tdr_core::identity::{verhoeff, KdfParams, RegistrationDetails};
use tdr_core::ledger::consensus::{ValidatorHarness, VotePolicy};
use tdr_core::ledger::{verify_blocks, verify_bytes, Block, SignedTransaction};
use tdr_core::service::{Credentials, ServiceError, TdrService};
use tdr_core::state::Command;
use tdr_core::token::LandParcel;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))
}

// ---- pipeline ----

fn lifecycle_enumeration() -> Outcome {
    let start = Instant::now();
    let report = oracles::lifecycle::enumerate(6);
    within(start, Duration::from_secs(10))?;
    let expected: usize = (0..=6).map(|k| 3usize.pow(k)).sum();
    ensure(report.sequences == expected, || {
        format!("{} sequences, expected {expected}", report.sequences)
    })?;
    ensure(report.violations.is_empty(), || {
        format!(
            "{} violations, first: {}",
            report.violations.len(),
            report.violations[0]
        )
    })?;
    Ok(format!(
        "{} sequences, {} calls, {} rejected and {} issued terminals",
        report.sequences, report.calls, report.terminal_counts[0], report.terminal_counts[1]
    ))
}

// ---- tokens ----

struct TokenRuns {
    runs: usize,
    matching: usize,
    steps: usize,
    accepted: usize,
    burn_checks: usize,
    first_mismatch: Option<String>,
    bijection: Vec<String>,
    far: Vec<String>,
    elapsed: Duration,
}

fn token_runs() -> TokenRuns {
    let start = Instant::now();
    let setup = oracles::token_model::setup();
    let mut out = TokenRuns {
        runs: 1000,
        matching: 0,
        steps: 0,
        accepted: 0,
        burn_checks: 0,
        first_mismatch: None,
        bijection: Vec::new(),
        far: Vec::new(),
        elapsed: Duration::ZERO,
    };
    for seed in 0..out.runs as u64 {
        let r = oracles::token_model::run(&setup, seed, 50);
        out.steps += r.steps;
        out.accepted += r.accepted;
        out.burn_checks += r.burn_checks;
        if r.mismatches.is_empty() && r.final_equal {
            out.matching += 1;
        } else if out.first_mismatch.is_none() {
            out.first_mismatch = Some(format!("seed {seed}: {:?}", r.mismatches.first()));
        }
        out.bijection.extend(r.bijection_violations);
        out.far.extend(r.far_violations);
    }
    out.elapsed = start.elapsed();
    out
}

fn token_model_agreement(runs: &TokenRuns) -> Outcome {
    ensure(runs.elapsed < Duration::from_secs(30), || {
        format!("took {:.2?}", runs.elapsed)
    })?;
    ensure(runs.matching == runs.runs, || {
        format!(
            "{}/{} runs match; {}",
            runs.matching,
            runs.runs,
            runs.first_mismatch.clone().unwrap_or_default()
        )
    })?;
    Ok(format!(
        "{}/{} runs, {} operations, {} accepted, {} burn probes in {:.2?}",
        runs.matching, runs.runs, runs.steps, runs.accepted, runs.burn_checks, runs.elapsed
    ))
}

fn token_bijection(runs: &TokenRuns) -> Outcome {
    ensure(runs.bijection.is_empty(), || {
        format!("{} violations, first: {}", runs.bijection.len(), runs.bijection[0])
    })?;
    Ok(format!("0 violations after each of {} operations", runs.steps))
}

fn far_conservation(runs: &TokenRuns) -> Outcome {
    ensure(runs.far.is_empty(), || {
        format!("{} violations, first: {}", runs.far.len(), runs.far[0])
    })?;
    Ok(format!("0 violations after each of {} operations", runs.steps))
}

// ---- consensus ----

fn policies(faults: &[(usize, VotePolicy)]) -> Vec<VotePolicy> {
    let mut p = vec![VotePolicy::Honest; 4];
    for &(i, policy) in faults {
        p[i] = policy;
    }
    p
}

fn one_faulty_validator(index: usize, policy: VotePolicy) -> Result<usize, String> {
    let mut net = Devnet::new(4, &policies(&[(index, policy)]));
    let quorum = net.node.harness().set().quorum();
    ensure(quorum == 3, || format!("quorum {quorum} for n=4"))?;
    let admin = net.admin.clone();
    let mut conflicting_seen = 0;
    for h in 1..=100u64 {
        if h % 10 == 0 {
            net.submit(
                &admin,
                Command::CloseNotice {
                    notice_id: format!("N{h}"),
                },
            )
            .map_err(|e| format!("submit: {e}"))?;
        }
        let mined = net
            .node
            .mine()
            .map_err(|e| format!("{policy:?} at {index}, height {h}: {e}"))?;
        let set = net.node.harness().set();
        let tally = set.verify_commit(&mined.block);
        ensure(mined.block.height == h, || {
            format!("height {} expected {h}", mined.block.height)
        })?;
        ensure(tally.valid.len() >= 3 && tally.rejected.is_empty(), || {
            format!("height {h}: {tally:?}")
        })?;
        for c in &mined.conflicting {
            conflicting_seen += 1;
            ensure(c.block.height == h && c.block.hash() != mined.block.hash(), || {
                "conflict shape".into()
            })?;
            // Only the equivocator signs the competing block.
            let votes: Vec<_> = mined.conflicting.iter().map(|c| c.vote.clone()).collect();
            let t = set.tally(&c.block.hash(), &votes);
            ensure(!t.committed(), || {
                format!("conflicting block reached quorum at height {h}")
            })?;
        }
    }
    if policy == VotePolicy::Equivocating {
        ensure(conflicting_seen >= 100, || {
            format!("only {conflicting_seen} conflicting votes")
        })?;
    }
    verify_blocks(net.node.genesis(), net.node.blocks()).map_err(|v| v.to_string())?;
    Ok(net.node.blocks().len() - 1)
}

/// Every way four validators can vote on two blocks at one height, with
/// at most one of them signing both. Returns the number of assignments.
fn no_double_commit() -> Result<usize, String> {
    let harness = ValidatorHarness::derived("acceptance", 4, &[]);
    let set = harness.set();
    let parent = Block::genesis(&tdr_core::devnet::genesis("acceptance", 4));
    let a = Block::new(&parent, vec![], "validator-1".into(), parent.timestamp + 1);
    let b = Block::new(&parent, vec![], "validator-1".into(), parent.timestamp + 2);
    let (ha, hb) = (a.hash(), b.hash());
    let mut assignments = 0;
    for equivocator in [None, Some(0), Some(1), Some(2), Some(3)] {
        // Choice per validator: 0 none, 1 A, 2 B, 3 both (equivocator only).
        let choices = |i: usize| if Some(i) == equivocator { 4 } else { 3 };
        let total: usize = (0..4).map(choices).product();
        for mut code in 0..total {
            let (mut va, mut vb) = (Vec::new(), Vec::new());
            for (i, m) in harness.members().iter().enumerate() {
                let c = code % choices(i);
                code /= choices(i);
                if c == 1 || c == 3 {
                    va.push(m.sign(&ha));
                }
                if c == 2 || c == 3 {
                    vb.push(m.sign(&hb));
                }
            }
            assignments += 1;
            if set.tally(&ha, &va).committed() && set.tally(&hb, &vb).committed() {
                return Err(format!("double commit with equivocator {equivocator:?}"));
            }
        }
    }
    // The quorum intersection bound holds for every size.
    for n in 1..=31usize {
        let h = ValidatorHarness::derived("sizes", n, &[]);
        let (q, f) = (h.set().quorum(), h.set().f());
        ensure(2 * q > n + f && q <= n - f, || format!("n={n}: q={q} f={f}"))?;
    }
    Ok(assignments)
}

fn consensus_faults() -> Outcome {
    let start = Instant::now();
    let mut blocks = 0;
    for policy in [VotePolicy::Silent, VotePolicy::Equivocating] {
        for i in 0..4 {
            blocks += one_faulty_validator(i, policy)?;
        }
    }
    let mut pairs = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            let mut net = Devnet::new(4, &policies(&[(i, VotePolicy::Silent), (j, VotePolicy::Silent)]));
            match net.node.mine() {
                Err(tdr_core::ledger::NodeError::NoQuorum { .. }) => {}
                other => return Err(format!("silent {i},{j}: {:?}", other.map(|m| m.block.height))),
            }
            ensure(net.node.height() == 0, || {
                format!("silent {i},{j}: height {}", net.node.height())
            })?;
            pairs += 1;
        }
    }
    let assignments = no_double_commit()?;
    within(start, Duration::from_secs(10))?;
    Ok(format!(
        "{blocks} blocks across 8 single-fault networks, {pairs}/6 two-silent networks halt, \
         {assignments} vote assignments without a double commit"
    ))
}

// ---- tamper evidence ----

fn devnet_chain(blocks: u64) -> (tdr_core::ledger::GenesisConfig, Vec<u8>) {
    let mut net = Devnet::new(4, &[]);
    let admin = net.admin.clone();
    let mut i = 0;
    while net.node.height() < blocks {
        i += 1;
        if i % 2 == 0 {
            net.onboard(&format!("user-{i}"));
        } else {
            let receipt = net.exec(
                &admin,
                Command::CreateNotice {
                    notice_id: format!("N{i}"),
                    sending_zone: "S1".into(),
                    land_description: oracles::world::uri(&format!("notice {i}")),
                },
            );
            assert!(receipt.is_success());
        }
    }
    let text: String = net.node.blocks().iter().map(|b| b.to_line() + "\n").collect();
    (net.node.genesis().clone(), text.into_bytes())
}

fn tamper_detection() -> Outcome {
    let (genesis, bytes) = devnet_chain(50);
    verify_bytes(&genesis, &bytes).map_err(|v| format!("clean chain rejected: {v}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a3e);
    let mut detected = 0;
    let mut failures = Vec::new();
    for _ in 0..200 {
        let pos = rng.gen_range(0..bytes.len());
        let mut copy = bytes.clone();
        copy[pos] ^= rng.gen_range(1..=255u8);
        let line = bytes[..pos].iter().filter(|&&b| b == b'\n').count() as u64;
        match verify_bytes(&genesis, &copy) {
            Err(v) if v.height <= line => detected += 1,
            Err(v) => failures.push(format!("byte {pos} on line {line} reported at {}", v.height)),
            Ok(_) => failures.push(format!("byte {pos} on line {line} went unnoticed")),
        }
    }
    ensure(failures.is_empty(), || {
        format!("{detected}/200 detected; {}", failures[0])
    })?;
    Ok(format!(
        "{detected}/200 mutations detected at or before their line, 51 blocks"
    ))
}

// ---- HTTP session and replay ----

struct Session {
    api: common::Api,
    runtime: tokio::runtime::Runtime,
}

fn http_happy_path(session: &Session) -> Outcome {
    let start = Instant::now();
    let run = session.runtime.block_on(common::happy_path(&session.api));
    let took = start.elapsed();
    within(start, Duration::from_secs(5))?;
    ensure(
        run.provenance == ["mint", "transfer", "utilize", "utilize", "burn"],
        || format!("provenance {:?}", run.provenance),
    )?;
    ensure(run.burn_receipt["outcome"]["kind"] == "burned", || {
        format!("burn {}", run.burn_receipt)
    })?;
    Ok(format!(
        "token {} provenance {} in {took:.2?}",
        run.token_id,
        run.provenance.join(",")
    ))
}

fn independent_replays(session: &Session) -> Outcome {
    let live = session.api.service.state_digest();
    let height = session.api.service.height();
    ensure(height > 0, || "nothing was committed".into())?;
    let data_dir = session.api.service.config().data_dir.clone();
    let mut digests = Vec::new();
    for _ in 0..2 {
        let out = Process::new(env!("CARGO_BIN_EXE_tdr"))
            .arg("--data-dir")
            .arg(&data_dir)
            .args(["--json", "chain", "replay"])
            .env_remove("TDR_CONFIG")
            .output()
            .map_err(|e| format!("spawn: {e}"))?;
        ensure(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        digests.push(v["state_digest"].as_str().unwrap_or_default().to_owned());
    }
    ensure(digests.iter().all(|d| *d == live.to_string()), || {
        format!("live {live}, replays {digests:?}")
    })?;
    Ok(format!(
        "two replay processes of {} blocks agree on {}",
        height + 1,
        &digests[0][..16]
    ))
}

// ---- identity ----

fn resident_nid(i: usize) -> String {
    verhoeff::complete_national_id(&format!("{}", 40_000_000_000u64 + i as u64)).unwrap()
}

fn identity_config(dir: &Path, residents: usize) -> ServiceConfig {
    ServiceConfig {
        data_dir: dir.to_owned(),
        chain_id: "tdr-identity".into(),
        block_interval_secs: 0,
        admin_password: Some("admin-pass-1".into()),
        kdf: KdfParams::INSECURE_FAST,
        ekyc_residents: (0..residents)
            .map(|i| Resident {
                national_id: resident_nid(i),
                name: format!("Resident {i}"),
                phone: format!("91234{i:05}"),
            })
            .collect(),
        ..ServiceConfig::default()
    }
}

fn admin() -> Credentials {
    Credentials::User {
        user_id: "admin".into(),
        password: "admin-pass-1".into(),
    }
}

fn user(id: &str, password: &str) -> Credentials {
    Credentials::User {
        user_id: id.into(),
        password: password.into(),
    }
}

fn files_under(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
    for entry in std::fs::read_dir(dir).unwrap().flatten() {
        let path = entry.path();
        if path.is_dir() {
            files_under(&path, out);
        } else {
            out.push(path);
        }
    }
}

fn concurrent_registration() -> Result<String, String> {
    let dir = tempfile::TempDir::new().unwrap();
    let svc = TdrService::open(identity_config(dir.path(), 60)).map_err(|e| e.message)?;
    // 100 requests over 60 residents: every resident once, 40 of them twice.
    let results: Vec<(usize, Result<_, ServiceError>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..100)
            .map(|k| {
                let svc = &svc;
                s.spawn(move || {
                    let r = k % 60;
                    let details = RegistrationDetails {
                        user_id: format!("resident-{k}"),
                        profile: tdr_core::identity::Profile {
                            name: format!("Resident {r}"),
                            phone: format!("91234{r:05}"),
                            ..Default::default()
                        },
                    };
                    (r, svc.register(details, &resident_nid(r)))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut winners = BTreeMap::new();
    let mut duplicates = 0;
    for (r, result) in results {
        match result {
            Ok(req) => {
                if winners.insert(r, req).is_some() {
                    return Err(format!("resident {r} registered twice"));
                }
            }
            Err(e) if e.code == "DuplicateNationalId" => duplicates += 1,
            Err(e) => return Err(format!("unexpected {}: {}", e.code, e.message)),
        }
    }
    ensure(winners.len() == 60 && duplicates == 40, || {
        format!("{} accounts, {duplicates} duplicates", winners.len())
    })?;

    for req in winners.values() {
        let otp = svc.identity().outbox().last_otp(&req.user_id).ok_or("no otp")?;
        svc.complete_kyc(&req.challenge_id, &otp, "resident-pass-1")
            .map_err(|e| e.message)?;
        svc.approve_user(&admin(), &req.user_id).map_err(|e| e.message)?;
    }
    svc.mine().map_err(|e| e.message)?;
    let active = svc.users().iter().filter(|u| u.active_address.is_some()).count();
    // 60 residents plus the bootstrap admin.
    ensure(active == 61, || format!("{active} active accounts"))?;

    let mut files = Vec::new();
    files_under(dir.path(), &mut files);
    let mut leaks = Vec::new();
    for path in &files {
        let bytes = std::fs::read(path).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        for r in 0..60 {
            if text.contains(&resident_nid(r)) {
                leaks.push(format!("{} holds resident {r}", path.display()));
            }
        }
    }
    ensure(leaks.is_empty(), || leaks.join("; "))?;
    Ok(format!(
        "60 accounts, 40 DuplicateNationalId, 0 raw ids across {} files",
        files.len()
    ))
}

fn exec(svc: &TdrService, creds: &Credentials, command: Command) -> Result<serde_json::Value, String> {
    let s = svc
        .execute(creds, command)
        .map_err(|e| format!("{}: {}", e.code, e.message))?;
    Ok(serde_json::to_value(s.receipt).unwrap())
}

fn onboard(svc: &TdrService, user_id: &str, r: usize, password: &str) -> Result<Address, String> {
    let details = RegistrationDetails {
        user_id: user_id.into(),
        profile: tdr_core::identity::Profile {
            name: format!("Resident {r}"),
            phone: format!("91234{r:05}"),
            ..Default::default()
        },
    };
    let req = svc.register(details, &resident_nid(r)).map_err(|e| e.message)?;
    let otp = svc.identity().outbox().last_otp(user_id).ok_or("no otp")?;
    svc.complete_kyc(&req.challenge_id, &otp, password)
        .map_err(|e| e.message)?;
    svc.approve_user(&admin(), user_id).map_err(|e| e.message)?;
    svc.address_of(user_id).map_err(|e| e.message)
}

fn holdings(svc: &TdrService, users: &[&str]) -> BTreeMap<String, BTreeSet<u64>> {
    users
        .iter()
        .map(|u| {
            let address = svc.address_of(u).unwrap();
            (u.to_string(), svc.tokens_owned_by(&address).into_iter().collect())
        })
        .collect()
}

fn recovery_preserves_holdings() -> Result<String, String> {
    let dir = tempfile::TempDir::new().unwrap();
    let mut config = identity_config(dir.path(), 5);
    config.mine_on_submit = true;
    let svc = TdrService::open(config).map_err(|e| e.message)?;
    let pass = "first-pass-1";
    let departments = svc.config().departments.clone();
    let mut officers = Vec::new();
    for (i, dept) in departments.iter().enumerate() {
        let name = format!("officer-{dept}");
        let address = onboard(&svc, &name, i, pass)?;
        exec(
            &svc,
            &admin(),
            Command::GrantRole {
                subject: address,
                role: tdr_core::roles::Role::Officer,
                department: Some(dept.clone()),
            },
        )?;
        officers.push(name);
    }
    let base = departments.len();
    onboard(&svc, "alice", base, pass)?;
    onboard(&svc, "bob", base + 1, pass)?;
    let doc = svc
        .put_document(&serde_json::json!({"plots": ["P-9"]}))
        .map_err(|e| e.message)?;

    let mut tokens = Vec::new();
    for (n, owner) in ["alice", "alice", "bob"].iter().enumerate() {
        let notice = format!("N{n}");
        exec(
            &svc,
            &admin(),
            Command::CreateNotice {
                notice_id: notice.clone(),
                sending_zone: "S1".into(),
                land_description: doc,
            },
        )?;
        let r = exec(
            &svc,
            &user(owner, pass),
            Command::SubmitApplication {
                notice_id: notice,
                land_details_uri: doc,
                claimed_far: "30".parse().unwrap(),
            },
        )?;
        let app = r["outcome"]["application_id"].as_str().unwrap().to_owned();
        for officer in &officers {
            exec(
                &svc,
                &user(officer, pass),
                Command::VerifyStep {
                    application_id: app.clone(),
                    decision: Decision::Approve,
                    remarks: String::new(),
                },
            )?;
        }
        let r = exec(
            &svc,
            &admin(),
            Command::IssueDrc {
                application_id: app,
                lands: vec![LandParcel {
                    plot_id: "P-9".into(),
                    area: "30".parse().unwrap(),
                    zone: "S1".into(),
                }],
            },
        )?;
        tokens.push(r["outcome"]["token_id"].as_u64().unwrap());
    }

    let people = ["alice", "bob"];
    let before = holdings(&svc, &people);
    let old_address = svc.address_of("alice").map_err(|e| e.message)?;
    let old_key: SigningKey = svc
        .identity()
        .with_signing_key("alice", pass, |k| k.clone())
        .map_err(|e| e.to_string())?;

    svc.request_reset("alice").map_err(|e| e.message)?;
    let otp = svc.identity().outbox().last_otp("alice").ok_or("no reset otp")?;
    let new_pass = "second-pass-2";
    svc.reset_password("alice", &otp, new_pass).map_err(|e| e.message)?;
    svc.recover_account(&admin(), "alice", None).map_err(|e| e.message)?;

    let after = holdings(&svc, &people);
    ensure(before == after, || format!("holdings {before:?} became {after:?}"))?;
    let new_address = svc.address_of("alice").map_err(|e| e.message)?;
    ensure(new_address != old_address, || "address did not rotate".into())?;
    ensure(svc.tokens_owned_by(&old_address).is_empty(), || {
        "old address still owns tokens".into()
    })?;

    let bob = svc.address_of("bob").map_err(|e| e.message)?;
    let token = *after["alice"].iter().next().ok_or("alice owns nothing")?;
    let transfer = |from| Command::TransferFrom {
        from,
        to: bob,
        token_id: token,
    };
    let nonce = svc.with_node(|n| n.next_nonce(&old_address));
    let stale = SignedTransaction::sign(&old_key, nonce, transfer(old_address), 1_700_000_100_000);
    match svc.submit_transaction(stale) {
        Err(e) if e.code == "InactiveSender" || e.code == "UnknownSender" => {}
        other => return Err(format!("old key: {:?}", other.map(|s| s.tx_id))),
    }
    match svc.execute(&user("alice", pass), transfer(new_address)) {
        Err(e) if e.code == "BadPassword" => {}
        other => {
            return Err(format!(
                "old password: {:?}",
                other.map(|s| s.tx_id).map_err(|e| e.code)
            ))
        }
    }
    exec(&svc, &user("alice", new_pass), transfer(new_address))?;
    let owner = svc.token(token).map_err(|e| e.message)?.token.owner;
    ensure(owner == bob, || format!("token {token} owned by {owner}"))?;
    let kept: usize = before.values().map(BTreeSet::len).sum();
    Ok(format!(
        "{kept} tokens kept across key rotation; old key and old password rejected"
    ))
}

fn identity_guarantees() -> Outcome {
    let a = concurrent_registration()?;
    let b = recovery_preserves_holdings()?;
    Ok(format!("{a}; {b}"))
}

// ---- documents ----

fn docstore_oracle() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xd0c5);
    let report = oracles::docs::check_store(Some(dir.path()), 1000, &mut rng);
    ensure(report.violations.is_empty(), || {
        format!(
            "{} violations, first: {}",
            report.violations.len(),
            report.violations[0]
        )
    })?;
    Ok(format!(
        "{} documents ({} distinct) match the SHA-256 oracle, survive reopen",
        report.documents, report.distinct
    ))
}

// ---- runner ----

fn run(results: &mut Vec<bool>, id: usize, name: &str, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let took = start.elapsed();
    match &outcome {
        Ok(detail) => println!("PASS [{id:>2}] {name} ({took:.2?}): {detail}"),
        Err(detail) => println!("FAIL [{id:>2}] {name} ({took:.2?}): {detail}"),
    }
    results.push(outcome.is_ok());
}

fn main() {
    let mut results = Vec::new();
    run(
        &mut results,
        1,
        "verification pipeline matches model",
        lifecycle_enumeration,
    );
    let runs = token_runs();
    run(&mut results, 2, "token operations match model", || {
        token_model_agreement(&runs)
    });
    run(&mut results, 3, "token ownership bijection", || token_bijection(&runs));
    run(&mut results, 4, "FAR conservation", || far_conservation(&runs));
    run(&mut results, 5, "consensus under faulty validators", consensus_faults);
    run(&mut results, 6, "single-byte tamper detection", tamper_detection);
    let session = Session {
        api: common::Api::new(),
        runtime: tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .unwrap(),
    };
    run(&mut results, 7, "HTTP end-to-end lifecycle", || {
        http_happy_path(&session)
    });
    run(&mut results, 8, "independent replays reproduce state", || {
        independent_replays(&session)
    });
    run(&mut results, 9, "identity and recovery", identity_guarantees);
    run(&mut results, 10, "document store canonical addressing", docstore_oracle);
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
