//! Blinded listening-test service.
//!
//! Annotators get a seeded random order over every (model, pair) item and
//! see only per-session letter labels in place of model ids. Ratings go to an
//! append-only, checksummed NDJSON store before they are acknowledged, and the
//! whole state is rebuilt from that store on restart.

mod error;
pub mod http;
pub mod rubric;
mod service;
pub mod store;

pub use error::{ErrorBody, ServiceError};
pub use rubric::{Rubric, RubricEntry};
pub use service::{
    random_token, Ack, EvalService, ItemView, NextItem, Recovery, ServiceConfig, SessionInfo,
};
