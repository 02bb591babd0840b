pub mod average;
pub mod bound;
pub mod oracle;
pub mod witness;
