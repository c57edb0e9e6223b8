/// Result of a one-dimensional minimization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimum of `f` on `[a, b]`, stopping once the
/// bracket is narrower than `tol`. Assumes `f` is unimodal on the bracket.
pub fn golden_section<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<Minimum, E> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evaluations = 2;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok(Minimum { x, value, evaluations })
}

/// Evaluates `f` at `samples` evenly spaced points of `[lo, hi]` (endpoints
/// included) and returns the bracket around the best one.
pub fn scan_bracket<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<(f64, f64), E> {
    let samples = samples.max(3);
    let step = (hi - lo) / (samples - 1) as f64;
    let mut table = Vec::with_capacity(samples);
    for i in 0..samples {
        let x = if i == samples - 1 { hi } else { lo + i as f64 * step };
        table.push((x, f(x)?));
    }
    let best = table
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("at least three samples");
    let a = table[best.saturating_sub(1)].0;
    let b = table[(best + 1).min(samples - 1)].0;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn finds_parabola_vertex() {
        let m = golden_section(|x| Ok::<_, Infallible>((x - 0.3).powi(2) + 1.0), -1.0, 2.0, 1e-10).unwrap();
        // A flat minimum resolves x only to about √ε.
        assert!((m.x - 0.3).abs() < 1e-7);
        assert!((m.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn monotone_function_runs_to_the_edge() {
        let m = golden_section(Ok::<_, Infallible>, 0.9, 1.1, 1e-8).unwrap();
        assert!((m.x - 0.9).abs() < 1e-8);
    }

    #[test]
    fn scan_brackets_global_minimum_of_bimodal() {
        // r²(2r−1)² has a bump between 0 and ½; the scan must skip it.
        let f = |r: f64| Ok::<_, Infallible>((r * (2.0 * r - 1.0)).powi(2));
        let (a, b) = scan_bracket(f, 0.1, 2.0, 17).unwrap();
        assert!(a < 0.5 && 0.5 < b);
        let m = golden_section(f, a, b, 1e-10).unwrap();
        assert!((m.x - 0.5).abs() < 1e-7);
    }
}
