//! Cross-sentence argument detection by entailment of synthesized hypotheses.

pub mod backend;
pub mod candidates;
pub mod dataset;
pub mod entailment;
pub mod eval;
pub mod http;
pub mod hypothesis;
pub mod inflect;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod qasrl;
pub mod question;
pub mod tune;
