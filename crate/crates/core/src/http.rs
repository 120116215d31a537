//! Minimal JSON-over-HTTP plumbing shared by the remote encoder and the
//! remote completion backend.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct HttpSettings {
    pub url: String,
    pub token: Option<String>,
    pub timeout: Duration,
    pub max_in_flight: usize,
}

impl HttpSettings {
    pub fn new(url: impl Into<String>) -> Self {
        HttpSettings {
            url: url.into(),
            token: None,
            timeout: Duration::from_secs(30),
            max_in_flight: 4,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Gate {
    available: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Gate {
            available: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut n = self.0.available.lock().unwrap_or_else(|e| e.into_inner());
        *n += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug)]
pub struct JsonClient {
    settings: HttpSettings,
    client: reqwest::blocking::Client,
    gate: Gate,
}

impl JsonClient {
    pub fn new(settings: HttpSettings) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(settings.timeout)
            .build()
            .map_err(|e| Error::Backend(format!("building http client: {e}")))?;
        Ok(JsonClient {
            gate: Gate::new(settings.max_in_flight),
            settings,
            client,
        })
    }

    pub fn url(&self) -> &str {
        &self.settings.url
    }

    fn post_once<B: Serialize, T: DeserializeOwned>(&self, body: &B) -> Result<T> {
        let _permit = self.gate.acquire();
        let mut req = self.client.post(&self.settings.url).json(body);
        if let Some(token) = &self.settings.token {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .map_err(|e| Error::Backend(format!("POST {}: {e}", self.settings.url)))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Error::Backend(format!("POST {}: HTTP {status}", self.settings.url)));
        }
        resp.json::<T>()
            .map_err(|e| Error::Backend(format!("POST {}: malformed response: {e}", self.settings.url)))
    }

    /// POSTs `body` and decodes the JSON reply, retrying once on failure.
    pub fn post<B: Serialize, T: DeserializeOwned>(&self, body: &B) -> Result<T> {
        match self.post_once(body) {
            Ok(v) => Ok(v),
            Err(_) => self.post_once(body),
        }
    }
}
