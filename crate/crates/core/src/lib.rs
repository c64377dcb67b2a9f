//! Exact continued fractions of integer roots `k^(1/s)` and the ABC-style
//! equations `d_n + p_n^s = k·q_n^s` their convergents produce.
//!
//! * [`exact_arith`]: powers, integer roots, root comparison, factoring, radicals.
//! * [`cf_engine`]: the expansion itself, `d_n`, and the coefficient predictor.
//! * [`abc_model`]: resulting equations, qualities, hit predicates, WNEABC probes.
//! * [`analysis`]: series reports and the record-table regression.
//! * [`cli_io`]: the `abcroots` command line, configuration, and hit store.

pub mod abc_model;
pub mod analysis;
pub mod cf_engine;
pub mod exact_arith;
pub mod cli_io;
