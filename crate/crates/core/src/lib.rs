pub mod bbn;
pub mod cli;
pub mod dataset;
pub mod eval;
pub mod hedge;
pub mod svm;
pub mod tabular;
pub mod transduce;
