//! Request transports: live HTTP, recorded fixture replay, and a counting
//! wrapper used to verify that fixture runs touch the network zero times.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A decoded HTTP response. Header names are lowercased so lookups do not
/// depend on what the server happened to send.
#[derive(Debug, Clone)]
pub struct Response {
    pub status: u16,
    pub headers: BTreeMap<String, String>,
    pub body: String,
}

impl Response {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(&name.to_ascii_lowercase()).map(String::as_str)
    }

    /// Whether the Link header advertises another page.
    pub fn has_next_page(&self) -> bool {
        self.header("link").is_some_and(|l| l.contains("rel=\"next\""))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    /// Worth retrying: connection resets, timeouts, DNS hiccups.
    #[error("transient transport failure: {0}")]
    Transient(String),
    /// Not retryable: fixture misses, unreadable recordings.
    #[error("{0}")]
    Fatal(String),
}

/// One GET against the tracker API. `path_query` starts with `/` and carries
/// the full query string; the transport decides what host it runs against.
pub trait Transport: Send + Sync {
    fn get(&self, path_query: &str, headers: &[(String, String)])
        -> Result<Response, TransportError>;
}

impl<T: Transport + ?Sized> Transport for &T {
    fn get(&self, path_query: &str, headers: &[(String, String)])
        -> Result<Response, TransportError> {
        (**self).get(path_query, headers)
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn get(&self, path_query: &str, headers: &[(String, String)])
        -> Result<Response, TransportError> {
        (**self).get(path_query, headers)
    }
}

/// Live transport over HTTPS.
pub struct HttpTransport {
    base: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    /// `base` is scheme plus host, e.g. `https://api.github.com`.
    pub fn new(base: impl Into<String>) -> Self {
        HttpTransport { base: base.into(), agent: ureq::agent() }
    }
}

impl Transport for HttpTransport {
    fn get(&self, path_query: &str, headers: &[(String, String)])
        -> Result<Response, TransportError> {
        let url = format!("{}{}", self.base, path_query);
        let mut request = self
            .agent
            .get(&url)
            .set("User-Agent", "triage-lab")
            .set("Accept", "application/vnd.github+json");
        for (name, value) in headers {
            request = request.set(name, value);
        }
        match request.call() {
            Ok(response) => decode(response),
            // Non-2xx statuses still carry a response; retry policy lives
            // above the transport, so hand them up intact.
            Err(ureq::Error::Status(_, response)) => decode(response),
            Err(ureq::Error::Transport(err)) => {
                Err(TransportError::Transient(err.to_string()))
            }
        }
    }
}

fn decode(response: ureq::Response) -> Result<Response, TransportError> {
    let status = response.status();
    let mut headers = BTreeMap::new();
    for name in response.headers_names() {
        if let Some(value) = response.header(&name) {
            headers.insert(name.to_ascii_lowercase(), value.to_string());
        }
    }
    let body = response
        .into_string()
        .map_err(|err| TransportError::Transient(err.to_string()))?;
    Ok(Response { status, headers, body })
}

/// One recorded exchange in a fixture's `index.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureEntry {
    /// Path plus query, without the page parameter.
    pub endpoint: String,
    pub page: usize,
    /// Body file, relative to the fixture directory.
    pub file: String,
    pub status: u16,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
}

/// Replays recorded responses. Multiple entries for the same endpoint and
/// page are served in index order, which is how a recorded rate-limit stall
/// followed by a successful retry plays back.
pub struct FixtureTransport {
    dir: PathBuf,
    queues: Mutex<BTreeMap<(String, usize), VecDeque<FixtureEntry>>>,
}

impl FixtureTransport {
    pub fn open(dir: &Path) -> Result<Self, TransportError> {
        let index_path = dir.join("index.json");
        let text = fs::read_to_string(&index_path).map_err(|err| {
            TransportError::Fatal(format!("cannot read {}: {err}", index_path.display()))
        })?;
        let entries: Vec<FixtureEntry> = serde_json::from_str(&text).map_err(|err| {
            TransportError::Fatal(format!("malformed {}: {err}", index_path.display()))
        })?;
        let mut queues: BTreeMap<(String, usize), VecDeque<FixtureEntry>> = BTreeMap::new();
        for entry in entries {
            queues
                .entry((entry.endpoint.clone(), entry.page))
                .or_default()
                .push_back(entry);
        }
        Ok(FixtureTransport { dir: dir.to_path_buf(), queues: Mutex::new(queues) })
    }
}

impl Transport for FixtureTransport {
    fn get(&self, path_query: &str, _headers: &[(String, String)])
        -> Result<Response, TransportError> {
        let (endpoint, page) = split_page(path_query);
        let entry = self
            .queues
            .lock()
            .unwrap()
            .get_mut(&(endpoint, page))
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| {
                TransportError::Fatal(format!("no recorded response for {path_query}"))
            })?;
        let body_path = self.dir.join(&entry.file);
        let body = fs::read_to_string(&body_path).map_err(|err| {
            TransportError::Fatal(format!("cannot read {}: {err}", body_path.display()))
        })?;
        let headers = entry
            .headers
            .into_iter()
            .map(|(name, value)| (name.to_ascii_lowercase(), value))
            .collect();
        Ok(Response { status: entry.status, headers, body })
    }
}

/// Splits the page parameter off a path+query. A request with no page
/// parameter is page 1.
pub fn split_page(path_query: &str) -> (String, usize) {
    let Some((path, query)) = path_query.split_once('?') else {
        return (path_query.to_string(), 1);
    };
    let mut page = 1;
    let mut rest = Vec::new();
    for param in query.split('&') {
        if let Some(value) = param.strip_prefix("page=") {
            page = value.parse().unwrap_or(1);
        } else if !param.is_empty() {
            rest.push(param);
        }
    }
    if rest.is_empty() {
        (path.to_string(), page)
    } else {
        (format!("{path}?{}", rest.join("&")), page)
    }
}

/// Conventional body file name: twelve hex characters of the endpoint
/// digest plus the page number. `repeat` distinguishes replays of the same
/// endpoint and page.
pub fn fixture_file_name(endpoint: &str, page: usize, repeat: usize) -> String {
    let digest = Sha256::digest(endpoint.as_bytes());
    let hash: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    if repeat == 0 {
        format!("{hash}-{page}.json")
    } else {
        format!("{hash}-{page}.{repeat}.json")
    }
}

/// Builds fixture directories, for tests and for recording live sessions.
pub struct FixtureWriter {
    dir: PathBuf,
    entries: Vec<FixtureEntry>,
    counts: BTreeMap<(String, usize), usize>,
}

impl FixtureWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureWriter { dir: dir.into(), entries: Vec::new(), counts: BTreeMap::new() }
    }

    pub fn push(
        &mut self,
        endpoint: &str,
        page: usize,
        status: u16,
        headers: &[(&str, &str)],
        body: &str,
    ) -> io::Result<()> {
        let repeat = self.counts.entry((endpoint.to_string(), page)).or_insert(0);
        let file = fixture_file_name(endpoint, page, *repeat);
        *repeat += 1;
        fs::create_dir_all(&self.dir)?;
        fs::write(self.dir.join(&file), body)?;
        self.entries.push(FixtureEntry {
            endpoint: endpoint.to_string(),
            page,
            file,
            status,
            headers: headers
                .iter()
                .map(|(name, value)| (name.to_string(), value.to_string()))
                .collect(),
        });
        Ok(())
    }

    /// Writes `index.json` and returns the fixture directory.
    pub fn finish(self) -> io::Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let text = serde_json::to_string_pretty(&self.entries).expect("entries serialize");
        fs::write(self.dir.join("index.json"), text)?;
        Ok(self.dir)
    }
}

/// Records every request that passes through, plus whether it carried an
/// Authorization header.
pub struct CountingTransport<T> {
    inner: T,
    log: Mutex<Vec<(String, bool)>>,
}

impl<T> CountingTransport<T> {
    pub fn new(inner: T) -> Self {
        CountingTransport { inner, log: Mutex::new(Vec::new()) }
    }

    pub fn calls(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    /// Request paths in the order they were issued.
    pub fn requests(&self) -> Vec<String> {
        self.log.lock().unwrap().iter().map(|(path, _)| path.clone()).collect()
    }

    /// Per request, whether an Authorization header was attached.
    pub fn authorized(&self) -> Vec<bool> {
        self.log.lock().unwrap().iter().map(|&(_, authed)| authed).collect()
    }
}

impl<T: Transport> Transport for CountingTransport<T> {
    fn get(&self, path_query: &str, headers: &[(String, String)])
        -> Result<Response, TransportError> {
        let authed = headers.iter().any(|(name, _)| name.eq_ignore_ascii_case("authorization"));
        self.log.lock().unwrap().push((path_query.to_string(), authed));
        self.inner.get(path_query, headers)
    }
}
