#[allow(dead_code)]
pub mod liouvillian;
