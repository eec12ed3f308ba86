//! QAOA parameter transfer across QUBO-encoded combinatorial problems.
//!
//! The pipeline is: [`problems::generate`] a seeded instance,
//! [`encoding::encode`] it into a normalized Ising Hamiltonian, optimize
//! angles with [`optimizer::optimize`] from a [`optimizer::linear_ramp`]
//! start, then reuse those angles elsewhere with [`transfer::sweep`].
//! [`mitigation`] post-processes samples and [`annealing`] turns angle
//! sequences into annealer schedules. [`oracle`] holds the slow reference
//! implementations the fast paths are checked against.
//!
//! Bit ordering: `x_0` is the leftmost bitstring character and the least
//! significant bit of a state-vector index. Bit value 0 is spin `+1`.

pub mod annealing;
pub mod bits;
pub mod encoding;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod io;
pub mod mitigation;
pub mod optimizer;
pub mod oracle;
pub mod problems;
pub mod simulator;
pub mod transfer;

pub use bits::Assignment;
pub use encoding::{encode, ising_energy, normalize, qubo_to_ising, to_qubo, IsingModel, PenaltyConfig, Qubo};
pub use error::{Error, Result};
pub use exec::Exec;
pub use optimizer::{linear_ramp, optimize, OptTrace, OptimizerConfig};
pub use oracle::{brute_force, dense_reference, GroundTruth};
pub use problems::{evaluate, generate, ProblemInstance, ProblemKind};
pub use simulator::{evolve, expectation, probability_of, sample, QaoaParams, QaoaSimulator, SampleSet, StateVector};
pub use transfer::{grover_baseline, sweep, transfer_run, ParameterBank, TlMetrics};
