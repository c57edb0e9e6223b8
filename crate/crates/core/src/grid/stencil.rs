use super::{Boundary, ScalarField};

const D1_O2: [f64; 3] = [-0.5, 0.0, 0.5];
const D1_O4: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
const D2_O2: [f64; 3] = [1.0, -2.0, 1.0];
const D2_O4: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];

fn central(deriv: usize, order: usize) -> &'static [f64] {
    match (deriv, order) {
        (1, 2) => &D1_O2,
        (1, _) => &D1_O4,
        (2, 2) => &D2_O2,
        _ => &D2_O4,
    }
}

/// Finite-difference weights for the `m`-th derivative at `z` using the
/// nodes `x` (Fornberg, Math. Comp. 51, 1988).
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Off-centre window used at node `i` of a clamped axis of length `n`.
struct EdgeStencil {
    start: usize,
    weights: Vec<f64>,
}

fn edge_stencil(i: usize, n: usize, deriv: usize, order: usize) -> EdgeStencil {
    // p+1 points give order p for a first derivative, p+2 for a second.
    let width = (order + deriv).min(n);
    let half = width / 2;
    let start = i.saturating_sub(half).min(n - width);
    let nodes: Vec<f64> = (start..start + width).map(|j| j as f64 - i as f64).collect();
    EdgeStencil {
        start,
        weights: fornberg_weights(0.0, &nodes, deriv),
    }
}

pub(super) fn derivative_along(field: &ScalarField, axis: usize, deriv: usize) -> Vec<f64> {
    let spec = field.spec();
    let f = field.values();
    let n = spec.shape[axis];
    let stride = spec.strides()[axis];
    let order = spec.stencil_order.as_usize();
    let scale = spec.spacing[axis].powi(deriv as i32);
    let w = central(deriv, order);
    let half = w.len() / 2;

    let edges: Vec<EdgeStencil> = match spec.boundary {
        Boundary::Periodic => Vec::new(),
        Boundary::ClampedGhost => (0..half)
            .chain(n - half..n)
            .map(|i| edge_stencil(i, n, deriv, order))
            .collect(),
    };

    let block = n * stride;
    let mut out = vec![0.0; f.len()];
    for outer in (0..f.len()).step_by(block) {
        for inner in 0..stride {
            let base = outer + inner;
            let at = |j: usize| f[base + j * stride];
            for i in 0..n {
                // Differences against the centre value: constants map to exactly zero.
                let fi = at(i);
                let at = |j: usize| at(j) - fi;
                let interior = i >= half && i + half < n;
                let acc = if interior {
                    w.iter().enumerate().map(|(k, wk)| wk * at(i + k - half)).sum::<f64>()
                } else if spec.boundary == Boundary::Periodic {
                    w.iter()
                        .enumerate()
                        .map(|(k, wk)| wk * at((i + n + k - half) % n))
                        .sum::<f64>()
                } else {
                    let e = if i < half { &edges[i] } else { &edges[half + i - (n - half)] };
                    e.weights
                        .iter()
                        .enumerate()
                        .map(|(k, wk)| wk * at(e.start + k))
                        .sum::<f64>()
                };
                out[base + i * stride] = acc / scale;
            }
        }
    }
    out
}
