//! A bare chain state driven command by command, without blocks or
//! signatures.

use tdr_core::crypto::{Address, Digest, SigningKey};
use tdr_core::devnet;
use tdr_core::docstore::ContentAddress;
use tdr_core::roles::Role;
use tdr_core::state::{ChainState, Command, CommandError, Outcome, TxContext};

pub const CHAIN: &str = "oracle";

#[derive(Clone)]
pub struct World {
    pub state: ChainState,
    pub admin: SigningKey,
    seq: u64,
}

pub fn key(name: &str) -> SigningKey {
    SigningKey::derive(&format!("{CHAIN}/{name}"))
}

pub fn uri(tag: &str) -> ContentAddress {
    ContentAddress::of_bytes(tag.as_bytes())
}

impl World {
    pub fn new() -> World {
        let config = devnet::genesis(CHAIN, 4);
        World {
            state: ChainState::genesis(&config),
            admin: devnet::admin_key(CHAIN),
            seq: 0,
        }
    }

    pub fn departments(&self) -> Vec<String> {
        self.state.params.departments.clone()
    }

    pub fn exec(&mut self, sender: &Address, command: Command) -> Result<Outcome, CommandError> {
        self.seq += 1;
        let ctx = TxContext {
            tx_id: Digest::of(&self.seq.to_be_bytes()),
            sender: *sender,
            height: self.seq,
            timestamp: 1_700_000_000_000 + self.seq,
        };
        self.state.apply_command(&ctx, &command)
    }

    pub fn admin_exec(&mut self, command: Command) -> Result<Outcome, CommandError> {
        let admin = self.admin.address();
        self.exec(&admin, command)
    }

    pub fn bind(&mut self, name: &str) -> Address {
        let k = key(name);
        self.admin_exec(Command::BindAccount {
            user_id: name.to_owned(),
            public_key: k.public_key(),
        })
        .expect("bind");
        k.address()
    }

    pub fn officer(&mut self, dept: &str) -> Address {
        let a = self.bind(&format!("officer-{dept}"));
        self.admin_exec(Command::GrantRole {
            subject: a,
            role: Role::Officer,
            department: Some(dept.to_owned()),
        })
        .expect("grant");
        a
    }

    pub fn notice(&mut self, notice_id: &str, zone: &str) {
        self.admin_exec(Command::CreateNotice {
            notice_id: notice_id.to_owned(),
            sending_zone: zone.to_owned(),
            land_description: uri(notice_id),
        })
        .expect("notice");
    }

    pub fn submit(&mut self, applicant: &Address, notice_id: &str, far: &str) -> String {
        match self.exec(
            applicant,
            Command::SubmitApplication {
                notice_id: notice_id.to_owned(),
                land_details_uri: uri(&format!("{applicant}/{notice_id}")),
                claimed_far: far.parse().expect("far"),
            },
        ) {
            Ok(Outcome::ApplicationUpdated { application_id, .. }) => application_id,
            other => panic!("submit: {other:?}"),
        }
    }
}
