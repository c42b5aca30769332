//! Finite Watts-Strogatz and Kleinberg graphs, and exact lattice quantities
//! of the Kleinberg grid (shell sizes, normalizers, incoming rates).

mod kleinberg;
mod ws;

pub use kleinberg::{
    diamond_count, diamond_point, generate_kleinberg, incoming_rate, incoming_rates, out_denominator, out_denominators,
    KleinbergParams,
};
pub use ws::{generate_ws, WsParams};
