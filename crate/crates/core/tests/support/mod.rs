pub mod brute;
pub mod standin;
