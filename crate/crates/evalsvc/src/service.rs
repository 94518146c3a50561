use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uuid::Uuid;
use vcrobust_core::analysis::ExportedRating;
use vcrobust_core::augment::SeededRng;
use vcrobust_core::suite::SuiteManifest;

use crate::rubric::{Rubric, RubricEntry};
use crate::store::{export_ratings, read_events, Event, RatingEvent, SessionEvent, Store};
use crate::ServiceError;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Bearer token required by the export endpoint.
    pub admin_token: String,
    pub rubric: Rubric,
    /// Also offer the noised source clip with every item.
    pub with_reference: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            admin_token: random_token(),
            rubric: Rubric::default(),
            with_reference: false,
        }
    }
}

pub fn random_token() -> String {
    Uuid::new_v4().simple().to_string()
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Equality that does not stop at the first differing byte.
fn same_secret(a: &str, b: &str) -> bool {
    a.len() == b.len() && a.bytes().zip(b.bytes()).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

/// Blinded label for the `i`-th shuffled model: A, B, ..., Z, then S27, S28, ...
fn label(i: usize) -> String {
    if i < 26 {
        char::from(b'A' + i as u8).to_string()
    } else {
        format!("S{}", i + 1)
    }
}

#[derive(Debug)]
struct Session {
    id: String,
    annotator_id: String,
    token: String,
    /// Item ids (model_index * n_pairs + pair_index) in presentation order.
    order: Vec<usize>,
    /// Blinded label per model index.
    labels: Vec<String>,
    cursor: usize,
    /// Latest revision and score per position.
    answers: Vec<Option<(u32, u8)>>,
}

impl Session {
    fn new(id: String, annotator_id: String, token: String, seed: u64, models: usize, pairs: usize) -> Self {
        let mut rng = SeededRng::new(seed);
        let mut order: Vec<usize> = (0..models * pairs).collect();
        rng.shuffle(&mut order);
        let mut perm: Vec<usize> = (0..models).collect();
        rng.shuffle(&mut perm);
        let mut labels = vec![String::new(); models];
        for (slot, model) in perm.into_iter().enumerate() {
            labels[model] = label(slot);
        }
        Self {
            id,
            annotator_id,
            token,
            answers: vec![None; order.len()],
            order,
            labels,
            cursor: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub token: String,
    pub annotator_id: String,
    pub total: usize,
    pub cursor: usize,
    /// True when an existing session was returned.
    pub resumed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemView {
    pub index: usize,
    pub total: usize,
    pub label: String,
    pub clip_url: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_url: Option<String>,
    /// The annotator's latest score for this item, when revisiting it.
    pub previous_score: Option<u8>,
    pub rubric: Vec<RubricEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextItem {
    Item(ItemView),
    Done { total: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub index: usize,
    pub revision: u32,
    pub cursor: usize,
    pub total: usize,
    pub done: bool,
}

/// What was rebuilt from the store at startup.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Recovery {
    pub sessions: usize,
    pub completed_sessions: usize,
    pub ratings: usize,
    pub torn_bytes: usize,
}

#[derive(Default)]
struct Registry {
    sessions: HashMap<String, Arc<Mutex<Session>>>,
    by_annotator: HashMap<String, String>,
}

/// Listening-test state for one suite.
///
/// Sessions are locked individually; store appends go through a single
/// writer lock, and an operation only returns after its event is durable.
pub struct EvalService {
    manifest: SuiteManifest,
    root: PathBuf,
    config: ServiceConfig,
    /// Locator per [model][pair].
    output_locators: Vec<Vec<String>>,
    reference_locators: Vec<String>,
    clips: HashMap<String, PathBuf>,
    registry: RwLock<Registry>,
    store: Mutex<Store>,
    recovery: Recovery,
}

impl std::fmt::Debug for EvalService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EvalService")
            .field("suite_id", &self.manifest.suite_id)
            .field("root", &self.root)
            .finish_non_exhaustive()
    }
}

fn locator(salt: &[u8], rel: &str) -> String {
    let mut h = Sha256::new();
    h.update(salt);
    h.update(rel.as_bytes());
    hex::encode(&h.finalize()[..16])
}

impl EvalService {
    /// Loads the suite in `suite_dir`, replays the store and starts serving.
    pub fn open(
        suite_dir: impl AsRef<Path>,
        store_path: impl AsRef<Path>,
        config: ServiceConfig,
    ) -> Result<Self, ServiceError> {
        let suite_dir = suite_dir.as_ref();
        let manifest = SuiteManifest::load(suite_dir)
            .map_err(|e| ServiceError::SuiteNotLoaded(e.to_string()))?;
        Self::with_manifest(manifest, suite_dir, store_path, config)
    }

    pub fn with_manifest(
        manifest: SuiteManifest,
        suite_dir: impl AsRef<Path>,
        store_path: impl AsRef<Path>,
        config: ServiceConfig,
    ) -> Result<Self, ServiceError> {
        if manifest.model_ids.is_empty() || manifest.pairs.is_empty() {
            return Err(ServiceError::SuiteNotLoaded("suite has no models or no pairs".into()));
        }
        let missing = manifest.missing_outputs();
        if let Some((pair, model)) = missing.first() {
            return Err(ServiceError::SuiteNotLoaded(format!(
                "{} model outputs are not attached (first: pair {pair}, model {model})",
                missing.len()
            )));
        }
        let suite_dir = suite_dir.as_ref();
        let root = suite_dir.canonicalize().map_err(|source| ServiceError::Io {
            path: suite_dir.display().to_string(),
            source,
        })?;

        // locators are only meaningful for this process
        let salt = Uuid::new_v4();
        let mut clips = HashMap::new();
        let mut register = |rel: &str| {
            let loc = locator(salt.as_bytes(), rel);
            clips.insert(loc.clone(), PathBuf::from(rel));
            loc
        };
        let output_locators = manifest
            .model_ids
            .iter()
            .map(|m| manifest.pairs.iter().map(|p| register(&p.model_outputs[m])).collect())
            .collect();
        let reference_locators = manifest
            .pairs
            .iter()
            .map(|p| register(&p.source_clip.path.to_string_lossy()))
            .collect();

        let (store, events, torn) = Store::open(store_path)?;
        let mut svc = Self {
            manifest,
            root,
            config,
            output_locators,
            reference_locators,
            clips,
            registry: RwLock::new(Registry::default()),
            store: Mutex::new(store),
            recovery: Recovery {
                torn_bytes: torn,
                ..Recovery::default()
            },
        };
        svc.replay(&events)?;
        Ok(svc)
    }

    fn n_items(&self) -> usize {
        self.manifest.model_ids.len() * self.manifest.pairs.len()
    }

    fn split(&self, item: usize) -> (usize, usize) {
        let pairs = self.manifest.pairs.len();
        (item / pairs, item % pairs)
    }

    fn replay(&mut self, events: &[Event]) -> Result<(), ServiceError> {
        let models = self.manifest.model_ids.len();
        let pairs = self.manifest.pairs.len();
        let mut registry = Registry::default();
        let mut ratings = 0;
        for (i, event) in events.iter().enumerate() {
            let corrupt = |reason: String| ServiceError::CorruptStore { line: i + 1, reason };
            match event {
                Event::Session(s) => {
                    if s.suite_id != self.manifest.suite_id || s.n_items != self.n_items() {
                        return Err(ServiceError::SuiteMismatch(format!(
                            "session {} was created for suite {} with {} items",
                            s.session_id, s.suite_id, s.n_items
                        )));
                    }
                    let session = Session::new(
                        s.session_id.clone(),
                        s.annotator_id.clone(),
                        s.token.clone(),
                        s.seed,
                        models,
                        pairs,
                    );
                    registry.by_annotator.insert(s.annotator_id.clone(), s.session_id.clone());
                    registry
                        .sessions
                        .insert(s.session_id.clone(), Arc::new(Mutex::new(session)));
                }
                Event::Rating(r) => {
                    let handle = registry
                        .sessions
                        .get(&r.session_id)
                        .ok_or_else(|| corrupt(format!("rating for unknown session {}", r.session_id)))?;
                    let mut s = handle.lock().expect("session lock");
                    let item = *s
                        .order
                        .get(r.item_index)
                        .ok_or_else(|| corrupt(format!("item index {} out of range", r.item_index)))?;
                    let (m, p) = self.split(item);
                    if self.manifest.model_ids[m] != r.model_id || self.manifest.pairs[p].pair_id != r.pair_id {
                        return Err(corrupt(format!("item {} does not match its recorded ids", r.item_index)));
                    }
                    if r.item_index > s.cursor {
                        return Err(corrupt(format!("item {} answered out of order", r.item_index)));
                    }
                    s.answers[r.item_index] = Some((r.revision, r.score));
                    if r.item_index == s.cursor {
                        s.cursor += 1;
                    }
                    ratings += 1;
                }
            }
        }
        self.recovery.sessions = registry.sessions.len();
        self.recovery.completed_sessions = registry
            .sessions
            .values()
            .filter(|s| {
                let s = s.lock().expect("session lock");
                s.cursor == s.order.len()
            })
            .count();
        self.recovery.ratings = ratings;
        self.registry = RwLock::new(registry);
        Ok(())
    }

    pub fn recovery(&self) -> Recovery {
        self.recovery
    }

    pub fn manifest(&self) -> &SuiteManifest {
        &self.manifest
    }

    pub fn rubric(&self) -> &Rubric {
        &self.config.rubric
    }

    /// Starts a session, or returns the annotator's existing one.
    ///
    /// Each annotator has at most one session per suite; re-scoring happens
    /// through revisions within it.
    pub fn create_session(&self, annotator_id: &str, seed: Option<u64>) -> Result<SessionInfo, ServiceError> {
        let annotator_id = annotator_id.trim();
        if annotator_id.is_empty() || annotator_id.len() > 128 {
            return Err(ServiceError::BadRequest("annotator_id must be 1 to 128 characters".into()));
        }
        let mut registry = self.registry.write().expect("registry lock");
        if let Some(id) = registry.by_annotator.get(annotator_id) {
            let s = registry.sessions[id].lock().expect("session lock");
            return Ok(SessionInfo {
                session_id: s.id.clone(),
                token: s.token.clone(),
                annotator_id: s.annotator_id.clone(),
                total: s.order.len(),
                cursor: s.cursor,
                resumed: true,
            });
        }
        let seed = seed.unwrap_or_else(|| Uuid::new_v4().as_u64_pair().0);
        let event = SessionEvent {
            session_id: Uuid::new_v4().to_string(),
            annotator_id: annotator_id.to_string(),
            token: random_token(),
            seed,
            suite_id: self.manifest.suite_id.clone(),
            n_items: self.n_items(),
            created_at: now(),
        };
        self.store.lock().expect("store lock").append(&Event::Session(event.clone()))?;
        let session = Session::new(
            event.session_id.clone(),
            event.annotator_id.clone(),
            event.token.clone(),
            seed,
            self.manifest.model_ids.len(),
            self.manifest.pairs.len(),
        );
        let info = SessionInfo {
            session_id: event.session_id.clone(),
            token: event.token,
            annotator_id: event.annotator_id.clone(),
            total: session.order.len(),
            cursor: 0,
            resumed: false,
        };
        registry.by_annotator.insert(event.annotator_id, event.session_id.clone());
        registry.sessions.insert(event.session_id, Arc::new(Mutex::new(session)));
        Ok(info)
    }

    fn session(&self, session_id: &str, token: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        let handle = self
            .registry
            .read()
            .expect("registry lock")
            .sessions
            .get(session_id)
            .cloned()
            .ok_or(ServiceError::UnknownSession)?;
        let ok = same_secret(&handle.lock().expect("session lock").token, token);
        if ok {
            Ok(handle)
        } else {
            Err(ServiceError::Unauthorized)
        }
    }

    fn view(&self, s: &Session, index: usize) -> ItemView {
        let (m, p) = self.split(s.order[index]);
        ItemView {
            index,
            total: s.order.len(),
            label: s.labels[m].clone(),
            clip_url: format!("/api/clips/{}", self.output_locators[m][p]),
            reference_url: self
                .config
                .with_reference
                .then(|| format!("/api/clips/{}", self.reference_locators[p])),
            previous_score: s.answers[index].map(|(_, score)| score),
            rubric: self.config.rubric.entries().to_vec(),
        }
    }

    /// The item at the cursor, without advancing it.
    pub fn next_item(&self, session_id: &str, token: &str) -> Result<NextItem, ServiceError> {
        let handle = self.session(session_id, token)?;
        let s = handle.lock().expect("session lock");
        if s.cursor == s.order.len() {
            return Ok(NextItem::Done { total: s.order.len() });
        }
        Ok(NextItem::Item(self.view(&s, s.cursor)))
    }

    /// An already-answered item, or the current one, for revisiting.
    pub fn item(&self, session_id: &str, token: &str, index: i64) -> Result<ItemView, ServiceError> {
        let handle = self.session(session_id, token)?;
        let s = handle.lock().expect("session lock");
        let index = self.check_index(&s, index)?;
        Ok(self.view(&s, index))
    }

    fn check_index(&self, s: &Session, index: i64) -> Result<usize, ServiceError> {
        let total = s.order.len();
        let idx = usize::try_from(index)
            .ok()
            .filter(|i| *i < total)
            .ok_or(ServiceError::IndexOutOfRange { index, total })?;
        if idx > s.cursor {
            return Err(ServiceError::IndexAhead { index: idx, cursor: s.cursor });
        }
        Ok(idx)
    }

    /// Records a score. Scoring the cursor item advances the cursor; scoring
    /// an earlier item stores a new revision.
    pub fn submit_score(&self, session_id: &str, token: &str, index: i64, score: i64) -> Result<Ack, ServiceError> {
        let handle = self.session(session_id, token)?;
        let mut s = handle.lock().expect("session lock");
        if !(1..=5).contains(&score) {
            return Err(ServiceError::ScoreOutOfRange(score));
        }
        let index = self.check_index(&s, index)?;
        let (m, p) = self.split(s.order[index]);
        let revision = s.answers[index].map_or(1, |(r, _)| r + 1);
        let event = RatingEvent {
            session_id: s.id.clone(),
            annotator_id: s.annotator_id.clone(),
            model_id: self.manifest.model_ids[m].clone(),
            pair_id: self.manifest.pairs[p].pair_id.clone(),
            item_index: index,
            score: score as u8,
            revision,
            submitted_at: now(),
        };
        self.store.lock().expect("store lock").append(&Event::Rating(event))?;
        s.answers[index] = Some((revision, score as u8));
        if index == s.cursor {
            s.cursor += 1;
        }
        Ok(Ack {
            index,
            revision,
            cursor: s.cursor,
            total: s.order.len(),
            done: s.cursor == s.order.len(),
        })
    }

    /// Resolves a clip locator to a file inside the suite directory.
    pub fn clip_path(&self, locator: &str) -> Result<PathBuf, ServiceError> {
        if locator.contains(['/', '\\']) || locator.contains("..") {
            return Err(ServiceError::Forbidden);
        }
        let rel = self.clips.get(locator).ok_or(ServiceError::NotFound)?;
        let full = self.root.join(rel);
        let real = full.canonicalize().map_err(|_| ServiceError::NotFound)?;
        if !real.starts_with(&self.root) {
            return Err(ServiceError::Forbidden);
        }
        Ok(real)
    }

    pub fn check_admin(&self, token: &str) -> Result<(), ServiceError> {
        if same_secret(&self.config.admin_token, token) {
            Ok(())
        } else {
            Err(ServiceError::Unauthorized)
        }
    }

    /// Authoritative ratings read back from the store file.
    pub fn export(&self) -> Result<Vec<ExportedRating>, ServiceError> {
        // hold the writer so no append is half-visible
        let store = self.store.lock().expect("store lock");
        Ok(export_ratings(&read_events(store.path())?))
    }
}
