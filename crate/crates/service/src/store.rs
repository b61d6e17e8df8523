//! Live sessions and their append-only transcript files.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use tokio::sync::{broadcast, Mutex};
use tom2_core::session::write_record;
use tom2_core::{
    resume, LearnerSession, LogRecord, SessionConfig, SessionEvent, Transcript, TranscriptError,
};

/// Buffered pushes per subscriber before a slow one starts losing events.
const EVENT_BUFFER: usize = 64;

/// One live session: the learner state machine plus its transcript sink.
/// Every handler holds the session's lock for the whole request, so updates
/// never interleave and the file always mirrors the engine.
pub struct LiveSession {
    pub id: String,
    pub session: LearnerSession,
    sink: Option<File>,
    persisted: usize,
    metrics_written: bool,
    feed: broadcast::Sender<SessionEvent>,
}

impl LiveSession {
    fn new(id: String, session: LearnerSession, sink: Option<File>) -> LiveSession {
        let persisted = session.events().len();
        LiveSession {
            id,
            session,
            sink,
            persisted,
            metrics_written: false,
            feed: broadcast::channel(EVENT_BUFFER).0,
        }
    }

    pub fn subscribe(&self) -> broadcast::Receiver<SessionEvent> {
        self.feed.subscribe()
    }

    /// Appends the events produced since the last call, plus the metrics
    /// record once the session ends, and pushes them to subscribers. Runs
    /// before the response goes out, so an acknowledged action is on disk.
    pub fn commit(&mut self) -> io::Result<()> {
        let fresh = &self.session.events()[self.persisted..];
        if let Some(sink) = &mut self.sink {
            let mut buf = Vec::new();
            for e in fresh {
                write_record(&mut buf, &LogRecord::Event(e.clone()))?;
            }
            if self.session.ended().is_some() && !self.metrics_written {
                write_record(&mut buf, &LogRecord::Metrics(self.session.metrics()))?;
            }
            sink.write_all(&buf)?;
            sink.flush()?;
        }
        for e in fresh {
            // No subscribers is fine.
            let _ = self.feed.send(e.redacted());
        }
        self.persisted = self.session.events().len();
        self.metrics_written |= self.session.ended().is_some();
        Ok(())
    }

    /// The transcript as a client may see it. While the session is open the
    /// header (which names the rule) is withheld and belief snapshots are
    /// stripped; afterwards it is the full log.
    pub fn visible_records(&self) -> Vec<LogRecord> {
        if self.session.ended().is_some() {
            self.session.records()
        } else {
            self.session
                .events()
                .iter()
                .map(|e| LogRecord::Event(e.redacted()))
                .collect()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{path}: {source}")]
    Transcript {
        path: PathBuf,
        source: TranscriptError,
    },
}

/// All sessions of one service instance.
#[derive(Default)]
pub struct SessionStore {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Mutex<LiveSession>>>>,
}

impl SessionStore {
    /// A store persisting under `dir`, or only in memory when `None`.
    pub fn new(dir: Option<PathBuf>) -> SessionStore {
        SessionStore {
            dir,
            sessions: RwLock::default(),
        }
    }

    /// Reopens every `*.log` under `dir` by replaying it through the engine.
    pub fn load(dir: PathBuf) -> Result<SessionStore, LoadError> {
        fs::create_dir_all(&dir)?;
        let store = SessionStore::new(Some(dir.clone()));
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("log") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned) else {
                continue;
            };
            let err = |source| LoadError::Transcript {
                path: path.clone(),
                source,
            };
            let transcript = Transcript::read(BufReader::new(File::open(&path)?)).map_err(err)?;
            let session = resume(&transcript).map_err(err)?;
            let sink = OpenOptions::new().append(true).open(&path)?;
            let mut live = LiveSession::new(id.clone(), session, Some(sink));
            live.metrics_written = transcript.metrics.is_some();
            store
                .sessions
                .write()
                .expect("store lock")
                .insert(id, Arc::new(Mutex::new(live)));
        }
        Ok(store)
    }

    fn path(&self, id: &str) -> Option<PathBuf> {
        self.dir
            .as_deref()
            .map(|d: &Path| d.join(format!("{id}.log")))
    }

    /// Registers a new session and writes its header.
    pub fn create(&self, config: SessionConfig) -> Result<String, CreateError> {
        let session =
            LearnerSession::new(config).map_err(|e| CreateError::Config(e.to_string()))?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let sink = match self.path(&id) {
            Some(path) => {
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent)?;
                }
                let mut f = OpenOptions::new()
                    .create_new(true)
                    .append(true)
                    .open(path)?;
                let mut buf = Vec::new();
                write_record(&mut buf, &session.header())?;
                f.write_all(&buf)?;
                f.flush()?;
                Some(f)
            }
            None => None,
        };
        let live = LiveSession::new(id.clone(), session, sink);
        self.sessions
            .write()
            .expect("store lock")
            .insert(id.clone(), Arc::new(Mutex::new(live)));
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Option<Arc<Mutex<LiveSession>>> {
        self.sessions.read().expect("store lock").get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CreateError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}
