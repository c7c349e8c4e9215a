//! Blocking JSON-over-HTTP for the remote scorer and generator.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Environment variable holding the bearer token for remote endpoints.
pub const API_KEY_ENV: &str = "DELTOM_API_KEY";

#[derive(Clone)]
pub(crate) struct JsonClient {
    agent: ureq::Agent,
}

impl std::fmt::Debug for JsonClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("JsonClient")
    }
}

impl JsonClient {
    pub(crate) fn new(timeout_ms: u64) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(timeout_ms)))
            .build()
            .into();
        JsonClient { agent }
    }

    pub(crate) fn post<B: Serialize, R: DeserializeOwned>(&self, url: &str, body: &B) -> Result<R, String> {
        let mut req = self.agent.post(url);
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        resp.body_mut().read_json::<R>().map_err(|e| e.to_string())
    }
}
