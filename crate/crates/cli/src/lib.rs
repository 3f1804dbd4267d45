//! Library surface of the command-line driver: the file format and report
//! plumbing, shared with the integration tests.

pub mod format;
pub mod report;
