//! Research toolkit for bug-report triage: loads issue/commit datasets,
//! retrieves similar reports and code, recommends fixers with several
//! approaches, learns which approach to trust per report, and evaluates the
//! whole pipeline under a chronological protocol.

pub mod classifiers;
pub mod corpus;
pub mod evalkit;
pub mod history;
pub mod index;
pub mod lupin;
pub mod metafeatures;
pub mod recommenders;
pub mod render;
pub mod synth;
