pub mod atoms;
pub mod codegen;
pub mod corpus;
pub mod frontend;
pub mod interp;
pub mod normalize;
pub mod ops;
pub mod pipeline;
pub mod simulator;
