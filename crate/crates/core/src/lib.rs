pub mod bigraph;
pub mod hash;
pub mod matching;
pub mod rewrite;
pub mod dsl;
pub mod spatial;
pub mod sim;
pub mod dot;
