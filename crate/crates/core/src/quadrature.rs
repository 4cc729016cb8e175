//! Gauss–Legendre quadrature on [0, 1].

/// Number of nodes per segment / per cell axis.
pub const NODES: usize = 8;

/// Highest polynomial degree integrated exactly by the 8-node rule.
pub const EXACT_DEGREE: u32 = 2 * NODES as u32 - 1;

const X: [f64; 4] = [
    0.18343464249564978,
    0.525532409916329,
    0.7966664774136267,
    0.9602898564975362,
];
const W: [f64; 4] = [
    0.36268378337836177,
    0.31370664587788705,
    0.22238103445337434,
    0.10122853629037669,
];

/// Nodes and weights mapped to [0, 1]; weights sum to 1.
pub fn unit_rule() -> [(f64, f64); NODES] {
    let mut out = [(0.0, 0.0); NODES];
    for i in 0..4 {
        out[3 - i] = (0.5 * (1.0 - X[i]), 0.5 * W[i]);
        out[4 + i] = (0.5 * (1.0 + X[i]), 0.5 * W[i]);
    }
    out
}
