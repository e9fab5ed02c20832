//! The `tdr` command line. It drives the same [`TdrService`] as the HTTP
//! server directly against the data directory, committing each mutation
//! in its own block before returning.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use tdr_core::amount::Far;
use tdr_core::application::{ApplicationStatus, Decision};
use tdr_core::config::ServiceConfig;
use tdr_core::docstore::ContentAddress;
use tdr_core::identity::{Profile, RegistrationDetails};
use tdr_core::roles::Role;
use tdr_core::service::{replay_chain, Credentials, ServiceError, Submitted, TdrService};
use tdr_core::state::Command;
use tdr_core::token::{LandParcel, TokenId};

#[derive(Debug, Parser)]
#[command(name = "tdr", version, about = "Transferable development rights registry")]
pub struct Cli {
    /// TOML configuration file; TDR_* environment variables override it.
    #[arg(long, global = true, env = "TDR_CONFIG")]
    pub config: Option<PathBuf>,
    /// Overrides the configured data directory.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(flatten)]
    pub auth: AuthArgs,
    #[command(subcommand)]
    pub command: Cmd,
}

/// Signing identity for mutations. Without flags the configured admin
/// account is used.
#[derive(Debug, Args)]
pub struct AuthArgs {
    #[arg(long = "as", global = true, value_name = "USER_ID")]
    pub user: Option<String>,
    #[arg(long, global = true, env = "TDR_PASSWORD", hide_env_values = true)]
    pub password: Option<String>,
    #[arg(long, global = true, env = "TDR_ADMIN_TOKEN", hide_env_values = true)]
    pub admin_token: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run the REST service.
    Serve,
    #[command(subcommand)]
    Chain(ChainCmd),
    #[command(subcommand)]
    Doc(DocCmd),
    #[command(subcommand)]
    User(UserCmd),
    #[command(subcommand)]
    Notice(NoticeCmd),
    #[command(subcommand)]
    App(AppCmd),
    #[command(subcommand)]
    Drc(DrcCmd),
    #[command(subcommand)]
    Roles(RolesCmd),
}

#[derive(Debug, Subcommand)]
pub enum ChainCmd {
    /// Check every block from genesis: links, proposers, quorum
    /// certificates, signatures, nonces and re-execution.
    Verify,
    /// Re-execute the chain file and print the resulting state digest.
    Replay,
    Height,
    /// Print the block at a height.
    Show {
        height: u64,
    },
    /// Commit pending transactions now.
    Mine,
}

#[derive(Debug, Subcommand)]
pub enum DocCmd {
    /// Store a JSON document read from a file ("-" for stdin).
    Put {
        file: PathBuf,
    },
    Get {
        uri: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum UserCmd {
    /// Start onboarding; sends an OTP to the phone on record.
    Register {
        user_id: String,
        #[arg(long)]
        national_id: String,
        #[arg(long)]
        name: String,
        #[arg(long)]
        phone: String,
        #[arg(long, default_value = "")]
        address: String,
    },
    /// Answer the eKYC challenge and set the account password.
    Kyc {
        challenge_id: String,
        #[arg(long)]
        otp: String,
        #[arg(long = "new-password")]
        new_password: String,
    },
    /// Bind a verified user's key on the ledger.
    Approve {
        user_id: String,
    },
    /// Without --otp send a reset OTP; with it rotate the password.
    Reset {
        user_id: String,
        #[arg(long, requires = "new_password")]
        otp: Option<String>,
        #[arg(long = "new-password")]
        new_password: Option<String>,
    },
    /// Rebind a reset account to its new key.
    Recover {
        user_id: String,
    },
    Suspend {
        user_id: String,
        #[arg(long)]
        lift: bool,
    },
    Show {
        user_id: String,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum NoticeCmd {
    Create {
        notice_id: String,
        #[arg(long)]
        zone: String,
        /// Content address of the land description document.
        #[arg(long)]
        description: ContentAddress,
    },
    Close {
        notice_id: String,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum AppCmd {
    Submit {
        #[arg(long)]
        notice: String,
        #[arg(long)]
        land_details: ContentAddress,
        #[arg(long)]
        far: Far,
    },
    Verify {
        application_id: String,
        #[arg(long)]
        decision: Decision,
        #[arg(long, default_value = "")]
        remarks: String,
    },
    Resubmit {
        application_id: String,
        #[arg(long)]
        land_details: ContentAddress,
    },
    Show {
        application_id: String,
    },
    List {
        #[arg(long)]
        status: Option<String>,
        /// Only applications awaiting this department.
        #[arg(long)]
        department: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DrcCmd {
    Issue {
        application_id: String,
        /// Parcel as PLOT:AREA:ZONE; repeatable.
        #[arg(long = "land", required = true, value_parser = parse_parcel)]
        lands: Vec<LandParcel>,
    },
    /// Approve (or with no operator, clear) a single-use operator.
    Approve {
        token: TokenId,
        #[arg(long)]
        operator: Option<String>,
    },
    Transfer {
        token: TokenId,
        /// Recipient address or user id.
        #[arg(long)]
        to: String,
        /// Defaults to the current owner.
        #[arg(long)]
        from: Option<String>,
    },
    Utilize {
        token: TokenId,
        #[arg(long)]
        far: Far,
        #[arg(long)]
        zone: String,
    },
    Burn {
        token: TokenId,
    },
    Show {
        token: TokenId,
    },
    Provenance {
        token: TokenId,
    },
}

#[derive(Debug, Subcommand)]
pub enum RolesCmd {
    Grant {
        /// Address or user id.
        subject: String,
        role: Role,
        #[arg(long)]
        department: Option<String>,
    },
    Revoke {
        subject: String,
        role: Role,
    },
    List,
}

fn parse_parcel(s: &str) -> Result<LandParcel, String> {
    let mut parts = s.splitn(3, ':');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(plot), Some(area), Some(zone)) if !plot.is_empty() && !zone.is_empty() => Ok(LandParcel {
            plot_id: plot.to_owned(),
            area: area.parse().map_err(|e| format!("area: {e}"))?,
            zone: zone.to_owned(),
        }),
        _ => Err("expected PLOT:AREA:ZONE".into()),
    }
}

struct Output {
    value: serde_json::Value,
    summary: Option<String>,
}

fn out<T: Serialize>(value: T) -> Result<Output, ServiceError> {
    let value = serde_json::to_value(value).map_err(|e| ServiceError::new("Internal", e.to_string()))?;
    Ok(Output { value, summary: None })
}

fn summarized<T: Serialize>(value: T, summary: String) -> Result<Output, ServiceError> {
    out(value).map(|o| Output {
        summary: Some(summary),
        ..o
    })
}

fn committed(s: Submitted) -> Result<Output, ServiceError> {
    let summary = match &s.receipt {
        Some(r) => format!("committed {} at height {} (tx {})", r.command, r.height, s.tx_id),
        None => format!("submitted tx {} (nonce {})", s.tx_id, s.nonce),
    };
    let outcome = s
        .receipt
        .as_ref()
        .and_then(|r| r.outcome())
        .map(|o| serde_json::to_string(o).unwrap_or_default());
    summarized(
        &s,
        match outcome {
            Some(o) => format!("{summary}\n{o}"),
            None => summary,
        },
    )
}

fn credentials(auth: &AuthArgs, config: &ServiceConfig) -> Result<Credentials, ServiceError> {
    match (&auth.user, &auth.password, &auth.admin_token) {
        (Some(user_id), Some(password), _) => Ok(Credentials::User {
            user_id: user_id.clone(),
            password: password.clone(),
        }),
        (Some(_), None, _) => Err(ServiceError::new("Unauthorized", "--as requires --password")),
        (None, _, Some(token)) => Ok(Credentials::AdminToken(token.clone())),
        (None, _, None) => match &config.admin_password {
            Some(password) => Ok(Credentials::User {
                user_id: config.admin_user.clone(),
                password: password.clone(),
            }),
            None => Err(ServiceError::new(
                "Unauthorized",
                "pass --as/--password or --admin-token, or configure admin_password",
            )),
        },
    }
}

fn load_config(cli: &Cli) -> Result<ServiceConfig, ServiceError> {
    let mut config = ServiceConfig::load(cli.config.as_deref())?;
    if let Some(dir) = &cli.data_dir {
        config.data_dir = dir.clone();
    }
    Ok(config)
}

/// Parses `args` and runs the command, writing results to `stdout` and
/// `CODE: message` to `stderr` on failure. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let json = cli.json;
    match dispatch(cli) {
        Ok(o) => {
            let text = match (json, o.summary) {
                (false, Some(s)) => s,
                _ => serde_json::to_string_pretty(&o.value).unwrap_or_default(),
            };
            let _ = writeln!(stdout, "{text}");
            0
        }
        Err(e) => {
            let _ = if json {
                writeln!(stderr, "{}", json!({"error": e.code, "message": e.message}))
            } else {
                writeln!(stderr, "{}: {}", e.code, e.message)
            };
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<Output, ServiceError> {
    let mut config = load_config(&cli)?;
    match &cli.command {
        Cmd::Serve => {
            let service = Arc::new(TdrService::open(config)?);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime
                .block_on(crate::http::serve(service))
                .map_err(|e| ServiceError::new("Internal", e.to_string()))?;
            return summarized(json!({"stopped": true}), "stopped".into());
        }
        Cmd::Chain(ChainCmd::Verify) => {
            let state = replay_chain(&config)?;
            return summarized(
                json!({"ok": true, "height": state.head_height, "state_digest": state.digest()}),
                format!("ok: {} blocks verified", state.head_height + 1),
            );
        }
        Cmd::Chain(ChainCmd::Replay) => {
            let state = replay_chain(&config)?;
            let digest = state.digest();
            return summarized(
                json!({"height": state.head_height, "state_digest": digest}),
                digest.to_string(),
            );
        }
        _ => {}
    }
    config.mine_on_submit = true;
    let creds = || credentials(&cli.auth, &config);
    let svc = TdrService::open(config.clone())?;
    match cli.command {
        Cmd::Serve | Cmd::Chain(ChainCmd::Verify) | Cmd::Chain(ChainCmd::Replay) => unreachable!("handled above"),
        Cmd::Chain(c) => match c {
            ChainCmd::Height => {
                let h = svc.height();
                summarized(json!({"height": h}), h.to_string())
            }
            ChainCmd::Show { height } => out(svc.block(height)?),
            ChainCmd::Mine => match svc.mine_pending()? {
                Some(r) => summarized(
                    &r,
                    format!("committed block {} with {} transactions", r.height, r.transactions),
                ),
                None => summarized(json!(null), "nothing to mine".into()),
            },
            ChainCmd::Verify | ChainCmd::Replay => unreachable!("handled above"),
        },
        Cmd::Doc(c) => match c {
            DocCmd::Put { file } => {
                let mut text = String::new();
                if file.as_os_str() == "-" {
                    std::io::stdin().read_to_string(&mut text)?;
                } else {
                    text = std::fs::read_to_string(&file)?;
                }
                let doc: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| ServiceError::new("InvalidRequest", e.to_string()))?;
                let uri = svc.put_document(&doc)?;
                summarized(json!({"uri": uri}), uri.to_string())
            }
            DocCmd::Get { uri } => {
                let doc = svc.get_document(&uri)?;
                summarized(&doc, doc.to_string())
            }
        },
        Cmd::User(c) => match c {
            UserCmd::Register {
                user_id,
                national_id,
                name,
                phone,
                address,
            } => {
                let req = svc.register(
                    RegistrationDetails {
                        user_id,
                        profile: Profile {
                            name,
                            phone,
                            address,
                            photo_ref: None,
                        },
                    },
                    &national_id,
                )?;
                let line = format!("challenge {} sent to {}", req.challenge_id, req.masked_phone);
                summarized(req, line)
            }
            UserCmd::Kyc {
                challenge_id,
                otp,
                new_password,
            } => out(svc.complete_kyc(&challenge_id, &otp, &new_password)?),
            UserCmd::Approve { user_id } => committed(svc.approve_user(&creds()?, &user_id)?),
            UserCmd::Reset {
                user_id,
                otp,
                new_password,
            } => match (otp, new_password) {
                (Some(otp), Some(pw)) => {
                    let r = svc.reset_password(&user_id, &otp, &pw)?;
                    let line = format!("password reset; recovery to {} awaits admin approval", r.new_address);
                    summarized(r, line)
                }
                (None, None) => {
                    let req = svc.request_reset(&user_id)?;
                    let line = format!("reset OTP sent to {}", req.masked_phone);
                    summarized(req, line)
                }
                _ => Err(ServiceError::new(
                    "InvalidRequest",
                    "--otp and --new-password go together",
                )),
            },
            UserCmd::Recover { user_id } => committed(svc.recover_account(&creds()?, &user_id, None)?),
            UserCmd::Suspend { user_id, lift } => out(svc.set_suspended(&creds()?, &user_id, !lift)?),
            UserCmd::Show { user_id } => out(svc.user(&user_id)?),
            UserCmd::List => out(svc.users()),
        },
        Cmd::Notice(c) => match c {
            NoticeCmd::Create {
                notice_id,
                zone,
                description,
            } => committed(svc.execute(
                &creds()?,
                Command::CreateNotice {
                    notice_id,
                    sending_zone: zone,
                    land_description: description,
                },
            )?),
            NoticeCmd::Close { notice_id } => committed(svc.execute(&creds()?, Command::CloseNotice { notice_id })?),
            NoticeCmd::List => out(svc.notices()),
        },
        Cmd::App(c) => match c {
            AppCmd::Submit {
                notice,
                land_details,
                far,
            } => committed(svc.execute(
                &creds()?,
                Command::SubmitApplication {
                    notice_id: notice,
                    land_details_uri: land_details,
                    claimed_far: far,
                },
            )?),
            AppCmd::Verify {
                application_id,
                decision,
                remarks,
            } => committed(svc.execute(
                &creds()?,
                Command::VerifyStep {
                    application_id,
                    decision,
                    remarks,
                },
            )?),
            AppCmd::Resubmit {
                application_id,
                land_details,
            } => committed(svc.execute(
                &creds()?,
                Command::Resubmit {
                    application_id,
                    land_details_uri: land_details,
                },
            )?),
            AppCmd::Show { application_id } => out(svc.application(&application_id)?),
            AppCmd::List { status, department } => {
                let status: Option<ApplicationStatus> = status
                    .map(|s| serde_json::from_value(json!(s)))
                    .transpose()
                    .map_err(|e| ServiceError::new("InvalidRequest", format!("status: {e}")))?;
                out(svc.applications(status, department.as_deref()))
            }
        },
        Cmd::Drc(c) => match c {
            DrcCmd::Issue { application_id, lands } => {
                committed(svc.execute(&creds()?, Command::IssueDrc { application_id, lands })?)
            }
            DrcCmd::Approve { token, operator } => {
                let approved = operator.map(|o| svc.address_of(&o)).transpose()?;
                committed(svc.execute(
                    &creds()?,
                    Command::Approve {
                        token_id: token,
                        approved,
                    },
                )?)
            }
            DrcCmd::Transfer { token, to, from } => {
                let to = svc.address_of(&to)?;
                let from = match from {
                    Some(f) => svc.address_of(&f)?,
                    None => svc.token(token)?.token.owner,
                };
                committed(svc.execute(
                    &creds()?,
                    Command::TransferFrom {
                        from,
                        to,
                        token_id: token,
                    },
                )?)
            }
            DrcCmd::Utilize { token, far, zone } => committed(svc.execute(
                &creds()?,
                Command::UtilizeDrc {
                    token_id: token,
                    far_used: far,
                    receiving_zone: zone,
                },
            )?),
            DrcCmd::Burn { token } => committed(svc.execute(&creds()?, Command::BurnDrc { token_id: token })?),
            DrcCmd::Show { token } => out(svc.token(token)?),
            DrcCmd::Provenance { token } => out(svc.provenance(token)?),
        },
        Cmd::Roles(c) => match c {
            RolesCmd::Grant {
                subject,
                role,
                department,
            } => {
                let subject = svc.address_of(&subject)?;
                committed(svc.execute(
                    &creds()?,
                    Command::GrantRole {
                        subject,
                        role,
                        department,
                    },
                )?)
            }
            RolesCmd::Revoke { subject, role } => {
                let subject = svc.address_of(&subject)?;
                committed(svc.execute(&creds()?, Command::RevokeRole { subject, role })?)
            }
            RolesCmd::List => out(svc.roles()),
        },
    }
}
