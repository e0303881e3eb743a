//! Shared state and flat-file persistence.
//!
//! Each session has one writer lock. A mutation clones the current
//! snapshot, edits the clone, writes it to disk and then swaps it in, so
//! readers only ever see whole snapshots.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use forge_core::doc::{doc_full_coverage, DocOptions, DocParams};
use forge_core::VasDataSet;
use serde::Serialize;
use serde_json::json;

use crate::error::{ApiError, ApiResult};
use crate::session::{RunStatus, Session};

struct Slot {
    writer: tokio::sync::Mutex<()>,
    snapshot: RwLock<Arc<Session>>,
}

struct Inner {
    dir: PathBuf,
    options: DocOptions,
    datasets: RwLock<HashMap<String, Arc<VasDataSet>>>,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn write_atomic(path: &Path, text: &str) -> io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)
}

fn json_files(dir: &Path) -> io::Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    Ok(out)
}

fn load_error(path: &Path, e: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display()))
}

impl AppState {
    /// Opens (or creates) a data directory and loads what it holds.
    pub fn open(dir: impl Into<PathBuf>, options: DocOptions) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(dir.join("datasets"))?;
        fs::create_dir_all(dir.join("sessions"))?;
        let mut datasets = HashMap::new();
        for (id, path) in json_files(&dir.join("datasets"))? {
            let data = VasDataSet::from_json(&fs::read_to_string(&path)?).map_err(|e| load_error(&path, e))?;
            datasets.insert(id, Arc::new(data));
        }
        let mut sessions = HashMap::new();
        for (id, path) in json_files(&dir.join("sessions"))? {
            let s: Session = serde_json::from_str(&fs::read_to_string(&path)?).map_err(|e| load_error(&path, e))?;
            sessions.insert(
                id,
                Arc::new(Slot {
                    writer: tokio::sync::Mutex::new(()),
                    snapshot: RwLock::new(Arc::new(s)),
                }),
            );
        }
        Ok(AppState {
            inner: Arc::new(Inner {
                dir,
                options,
                datasets: RwLock::new(datasets),
                sessions: RwLock::new(sessions),
            }),
        })
    }

    pub fn options(&self) -> DocOptions {
        self.inner.options
    }

    pub fn dataset(&self, id: &str) -> ApiResult<Arc<VasDataSet>> {
        self.inner
            .datasets
            .read()
            .expect("dataset map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("dataset", id))
    }

    pub fn add_dataset(&self, data: VasDataSet) -> ApiResult<String> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let path = self.inner.dir.join("datasets").join(format!("{id}.json"));
        write_atomic(&path, &data.to_json()?).map_err(forge_core::ForgeError::from)?;
        self.inner
            .datasets
            .write()
            .expect("dataset map lock")
            .insert(id.clone(), Arc::new(data));
        Ok(id)
    }

    fn slot(&self, id: &str) -> ApiResult<Arc<Slot>> {
        self.inner
            .sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))
    }

    /// Current snapshot of a session.
    pub fn session(&self, id: &str) -> ApiResult<Arc<Session>> {
        Ok(self.slot(id)?.snapshot.read().expect("snapshot lock").clone())
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.inner.sessions.read().expect("session map lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    fn persist(&self, s: &Session) -> ApiResult<()> {
        let path = self.inner.dir.join("sessions").join(format!("{}.json", s.id));
        let text = serde_json::to_string_pretty(s)?;
        write_atomic(&path, &text).map_err(forge_core::ForgeError::from)?;
        Ok(())
    }

    pub fn create_session(&self, dataset: &str) -> ApiResult<Arc<Session>> {
        self.dataset(dataset)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mut s = Session::new(id.clone(), dataset.to_string());
        s.log("create", json!({ "dataset": dataset }));
        self.persist(&s)?;
        let s = Arc::new(s);
        self.inner.sessions.write().expect("session map lock").insert(
            id,
            Arc::new(Slot {
                writer: tokio::sync::Mutex::new(()),
                snapshot: RwLock::new(s.clone()),
            }),
        );
        Ok(s)
    }

    /// Applies `f` to a copy of the session under its writer lock. On
    /// success the copy is persisted and published; on error nothing changes.
    pub async fn mutate<R>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> ApiResult<R>,
    ) -> ApiResult<(R, Arc<Session>)> {
        let slot = self.slot(id)?;
        let _guard = slot.writer.lock().await;
        let mut next = Session::clone(&slot.snapshot.read().expect("snapshot lock"));
        let out = f(&mut next)?;
        self.persist(&next)?;
        let next = Arc::new(next);
        *slot.snapshot.write().expect("snapshot lock") = next.clone();
        Ok((out, next))
    }

    /// Runs the search for `run_id` on the blocking pool and records the
    /// outcome in the session.
    pub fn spawn_run(&self, session: String, run_id: String, data: Arc<VasDataSet>, params: DocParams) {
        let state = self.clone();
        let options = self.inner.options;
        tokio::spawn(async move {
            let outcome = tokio::task::spawn_blocking(move || doc_full_coverage(&data, &params, &options)).await;
            let _ = state
                .mutate(&session, |s| {
                    let rec = s.run_mut(&run_id).expect("run recorded before spawn");
                    match outcome {
                        Ok(Ok(run)) => {
                            rec.status = RunStatus::Done;
                            rec.result = Some(run);
                        }
                        Ok(Err(e)) => {
                            rec.status = RunStatus::Failed;
                            rec.error = Some(ApiError::from(e).body()["error"].clone());
                        }
                        Err(e) => {
                            rec.status = RunStatus::Failed;
                            rec.error = Some(json!({ "message": e.to_string() }));
                        }
                    }
                    let status = rec.status;
                    s.invalidate_merge_state();
                    s.log("run-finished", json!({ "run": run_id, "status": status }));
                    Ok(())
                })
                .await;
        });
    }

    /// Restarts runs that were still in flight when the service stopped.
    /// The search is deterministic, so the result is the one the
    /// interrupted run would have produced.
    pub fn resume_pending(&self) {
        for id in self.session_ids() {
            let Ok(s) = self.session(&id) else { continue };
            let Ok(data) = self.dataset(&s.dataset) else { continue };
            for run in s.runs.iter().filter(|r| r.status == RunStatus::Running) {
                let p = &run.params;
                let params = DocParams::new(p.w, p.alpha, p.beta, p.seed);
                self.spawn_run(id.clone(), run.id.clone(), data.clone(), params);
            }
        }
    }
}

/// Serializes with the same pretty layout the command line writes.
pub fn pretty<T: Serialize>(v: &T) -> ApiResult<String> {
    Ok(serde_json::to_string_pretty(v)?)
}
