#[path = "../tests/common/oracle.rs"]
mod oracle;

pub use oracle::*;
