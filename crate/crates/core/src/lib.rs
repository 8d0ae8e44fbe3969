pub mod aql;
pub mod bench;
pub mod catalog;
pub mod exec;
pub mod error;
pub mod par;
pub mod plan;
pub mod predicate;
pub mod table;
pub mod text;
pub mod translate;
pub mod value;
pub mod wrapper;

pub use error::{Error, Result, Stage};
