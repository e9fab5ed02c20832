//! Notifications are appended to a log instead of being delivered.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use super::ekyc::OtpDelivery;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub at: u64,
    pub user_id: String,
    pub channel: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug)]
pub struct Outbox {
    path: Option<PathBuf>,
    entries: Mutex<Vec<Notification>>,
}

impl Outbox {
    pub fn new(path: Option<PathBuf>) -> Self {
        Outbox {
            path,
            entries: Mutex::new(Vec::new()),
        }
    }

    /// Notifications recorded since this process started.
    pub fn entries(&self) -> Vec<Notification> {
        self.entries.lock().clone()
    }

    fn push(&self, n: Notification) {
        let mut entries = self.entries.lock();
        if let Some(path) = &self.path {
            let line = serde_json::to_string(&n).expect("serializable");
            let written = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .and_then(|mut f| writeln!(f, "{line}"));
            if let Err(e) = written {
                tracing::warn!(error = %e, "outbox write failed");
            }
        }
        tracing::info!(user = %n.user_id, kind = %n.kind, channel = %n.channel, "notification");
        entries.push(n);
    }

    pub fn email(&self, at: u64, user_id: &str, kind: &str, message: &str) {
        self.push(Notification {
            at,
            user_id: user_id.to_owned(),
            channel: "email".into(),
            kind: kind.to_owned(),
            message: message.to_owned(),
        });
    }

    pub fn otp_sent(&self, at: u64, user_id: &str, delivery: &OtpDelivery, purpose: &str) {
        let message = match &delivery.code {
            Some(code) => format!("OTP {code} sent to {}", delivery.masked_phone),
            None => format!("OTP sent to {}", delivery.masked_phone),
        };
        self.push(Notification {
            at,
            user_id: user_id.to_owned(),
            channel: "sms".into(),
            kind: format!("otp_{purpose}"),
            message,
        });
    }

    /// Most recent OTP logged for `user_id`, as a simulated handset would
    /// show it.
    pub fn last_otp(&self, user_id: &str) -> Option<String> {
        self.entries
            .lock()
            .iter()
            .rev()
            .filter(|n| n.user_id == user_id && n.channel == "sms")
            .find_map(|n| n.message.split_whitespace().nth(1).map(str::to_owned))
            .filter(|c| c.len() == 6 && c.bytes().all(|b| b.is_ascii_digit()))
    }
}
