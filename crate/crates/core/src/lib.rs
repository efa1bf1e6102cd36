//! Product attribute extraction from review-site HTML.
//!
//! The pipeline parses a page into a [`dom::DomTree`], serializes it into a
//! node sequence under a [`dom::SerializationPolicy`], tags each node with an
//! [`AttributeLabel`], cleans the predictions up in [`postprocess`], and
//! scores them against gold annotations in [`evaluation`]. [`corpus`]
//! generates seeded synthetic review pages with known gold labels.

pub mod corpus;
pub mod dom;
pub mod error;
pub mod evaluation;
pub mod formats;
pub mod labels;
pub mod postprocess;
pub mod tagger;
pub mod xpath_encoding;

pub use error::{Error, Result};
pub use labels::AttributeLabel;
