//! Service configuration: a TOML file with `TDR_`-prefixed environment
//! overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::identity::{EkycProfile, KdfParams};
use crate::ledger::VotePolicy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resident {
    pub national_id: String,
    pub name: String,
    pub phone: String,
}

impl Resident {
    pub fn profile(&self) -> EkycProfile {
        EkycProfile {
            name: self.name.clone(),
            phone: self.phone.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    /// Base directory for every path left unset.
    pub data_dir: PathBuf,
    pub chain_file: Option<PathBuf>,
    pub genesis_file: Option<PathBuf>,
    pub state_file: Option<PathBuf>,
    pub docstore_root: Option<PathBuf>,
    pub user_store: Option<PathBuf>,
    pub vault: Option<PathBuf>,
    pub vault_key_file: Option<PathBuf>,
    pub outbox: Option<PathBuf>,

    pub chain_id: String,
    pub validators: usize,
    pub validator_policies: Vec<VotePolicy>,
    /// Seconds between produced blocks; 0 produces blocks on demand only.
    pub block_interval_secs: u64,
    pub sending_zones: Vec<String>,
    pub receiving_zones: Vec<String>,
    pub departments: Vec<String>,

    pub listen: String,
    /// Enables the mine-now endpoint.
    pub test_mode: bool,
    /// Commit every accepted transaction immediately in its own block.
    pub mine_on_submit: bool,

    pub admin_user: String,
    pub admin_password: Option<String>,
    pub admin_token: Option<String>,

    pub ekyc_seed: String,
    pub ekyc_residents: Vec<Resident>,
    pub kdf: KdfParams,
    pub otp_ttl_secs: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: PathBuf::from("tdr-data"),
            chain_file: None,
            genesis_file: None,
            state_file: None,
            docstore_root: None,
            user_store: None,
            vault: None,
            vault_key_file: None,
            outbox: None,
            chain_id: "tdr-local".into(),
            validators: 4,
            validator_policies: Vec::new(),
            block_interval_secs: 300,
            sending_zones: vec!["S1".into(), "S2".into()],
            receiving_zones: vec!["R1".into(), "R2".into()],
            departments: vec!["planning".into(), "survey".into(), "legal".into()],
            listen: "127.0.0.1:8080".into(),
            test_mode: false,
            mine_on_submit: false,
            admin_user: "admin".into(),
            admin_password: None,
            admin_token: None,
            ekyc_seed: "tdr-mock-ekyc".into(),
            ekyc_residents: Vec::new(),
            kdf: KdfParams::default(),
            otp_ttl_secs: 300,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        "ConfigInvalid"
    }
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| ConfigError::Invalid(format!("{key}: {e}")))
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<ServiceConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Reads `path` (if given), then applies overrides from the process
    /// environment, then validates.
    pub fn load(path: Option<&Path>) -> Result<ServiceConfig, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_owned(),
                    source,
                })?;
                Self::from_toml(&text)?
            }
            None => ServiceConfig::default(),
        };
        config.apply_env(std::env::vars())?;
        config.validate()?;
        Ok(config)
    }

    /// Applies `TDR_<FIELD>` overrides. Lists are comma separated.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        for (key, value) in vars {
            let Some(field) = key.strip_prefix("TDR_") else {
                continue;
            };
            let path = || Some(PathBuf::from(&value));
            match field {
                "DATA_DIR" => self.data_dir = PathBuf::from(&value),
                "CHAIN_FILE" => self.chain_file = path(),
                "GENESIS_FILE" => self.genesis_file = path(),
                "STATE_FILE" => self.state_file = path(),
                "DOCSTORE_ROOT" => self.docstore_root = path(),
                "USER_STORE" => self.user_store = path(),
                "VAULT" => self.vault = path(),
                "VAULT_KEY_FILE" => self.vault_key_file = path(),
                "OUTBOX" => self.outbox = path(),
                "CHAIN_ID" => self.chain_id = value,
                "VALIDATORS" => self.validators = parse(&key, &value)?,
                "VALIDATOR_POLICIES" => {
                    self.validator_policies = list(&value).iter().map(|p| parse(&key, p)).collect::<Result<_, _>>()?
                }
                "BLOCK_INTERVAL_SECS" => self.block_interval_secs = parse(&key, &value)?,
                "SENDING_ZONES" => self.sending_zones = list(&value),
                "RECEIVING_ZONES" => self.receiving_zones = list(&value),
                "DEPARTMENTS" => self.departments = list(&value),
                "LISTEN" => self.listen = value,
                "TEST_MODE" => self.test_mode = parse(&key, &value)?,
                "MINE_ON_SUBMIT" => self.mine_on_submit = parse(&key, &value)?,
                "ADMIN_USER" => self.admin_user = value,
                "ADMIN_PASSWORD" => self.admin_password = Some(value),
                "ADMIN_TOKEN" => self.admin_token = Some(value),
                "EKYC_SEED" => self.ekyc_seed = value,
                "OTP_TTL_SECS" => self.otp_ttl_secs = parse(&key, &value)?,
                "KDF_MEMORY_KIB" => self.kdf.memory_kib = parse(&key, &value)?,
                "KDF_ITERATIONS" => self.kdf.iterations = parse(&key, &value)?,
                "KDF_PARALLELISM" => self.kdf.parallelism = parse(&key, &value)?,
                // Unrelated TDR_ variables (e.g. TDR_LOG) are not config.
                _ => {}
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if self.sending_zones.is_empty() || self.receiving_zones.is_empty() {
            return fail("zone lists must be non-empty");
        }
        if self.departments.is_empty() {
            return fail("department pipeline must be non-empty");
        }
        if self.validators == 0 {
            return fail("at least one validator is required");
        }
        if self.validator_policies.len() > self.validators {
            return fail("more validator policies than validators");
        }
        if self.chain_id.is_empty() {
            return fail("chain_id must be set");
        }
        if self.admin_user.is_empty() {
            return fail("admin_user must be set");
        }
        Ok(())
    }

    fn under(&self, explicit: &Option<PathBuf>, default: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.data_dir.join(default))
    }

    pub fn chain_path(&self) -> PathBuf {
        self.under(&self.chain_file, "chain.ndjson")
    }
    pub fn genesis_path(&self) -> PathBuf {
        self.under(&self.genesis_file, "genesis.json")
    }
    pub fn state_path(&self) -> PathBuf {
        self.under(&self.state_file, "state.json")
    }
    pub fn docstore_path(&self) -> PathBuf {
        self.under(&self.docstore_root, "docs")
    }
    pub fn user_store_path(&self) -> PathBuf {
        self.under(&self.user_store, "users.json")
    }
    pub fn vault_path(&self) -> PathBuf {
        self.under(&self.vault, "vault.json")
    }
    pub fn vault_key_path(&self) -> PathBuf {
        self.under(&self.vault_key_file, "vault.key")
    }
    pub fn outbox_path(&self) -> PathBuf {
        self.under(&self.outbox, "outbox.ndjson")
    }
}
