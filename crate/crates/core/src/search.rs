//! Derivative-free minimization used by the min-max searches: a deterministic grid
//! over the unit 3-sphere to seed starts, then Nelder-Mead simplex descent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Configuration of the multi-start sphere search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Points per axis of the `[-1, 1]^4` grid projected onto the sphere.
    pub grid_resolution: usize,
    /// Number of best grid points refined by simplex descent.
    pub starts: usize,
    /// Stop when the simplex spread in objective value falls below this.
    pub tolerance: f64,
    /// Iteration cap per descent run.
    pub max_iterations: usize,
    /// Number of simplex restarts from the incumbent per start.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 24,
            starts: 8,
            tolerance: 1e-15,
            max_iterations: 4000,
            restarts: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Nelder-Mead with the standard coefficients (1, 2, 1/2, 1/2).
pub fn nelder_mead<F>(f: F, x0: &[f64], step: f64, tolerance: f64, max_iterations: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    let mut iterations = 0;

    while iterations < max_iterations {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let size = simplex[1..]
            .iter()
            .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= tolerance && size <= 1e-10 {
            break;
        }
        if size <= 1e-14 {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let p = along(-0.5);
            let v = f(&p);
            (p, v)
        } else {
            let p = along(0.5);
            let v = f(&p);
            (p, v)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        let best = simplex[0].clone();
        for i in 1..=n {
            simplex[i] = simplex[i]
                .iter()
                .zip(&best)
                .map(|(p, b)| b + 0.5 * (p - b))
                .collect();
            values[i] = f(&simplex[i]);
        }
    }

    let (ib, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty simplex");
    Minimum {
        x: simplex[ib].clone(),
        value: values[ib],
        iterations,
    }
}

/// Unit 4-vectors from a `resolution^4` grid on `[-1, 1]^4`, origin excluded.
pub fn sphere_grid(resolution: usize) -> Vec<[f64; 4]> {
    assert!(resolution >= 2, "grid resolution must be at least 2");
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / (resolution - 1) as f64;
    let mut out = Vec::with_capacity(resolution.pow(4));
    for a in 0..resolution {
        for b in 0..resolution {
            for c in 0..resolution {
                for d in 0..resolution {
                    let p = [coord(a), coord(b), coord(c), coord(d)];
                    let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if n > 1e-12 {
                        out.push(p.map(|x| x / n));
                    }
                }
            }
        }
    }
    out
}

pub fn normalize4(x: &[f64]) -> [f64; 4] {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n < 1e-300 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    [x[0] / n, x[1] / n, x[2] / n, x[3] / n]
}

/// Result of [`minimize_on_sphere`].
#[derive(Debug, Clone)]
pub struct SphereMinimum {
    pub point: [f64; 4],
    pub value: f64,
    pub starts: usize,
    pub iterations: usize,
}

/// Minimize `f` over the unit 3-sphere: grid scan, then simplex descent (in the
/// ambient space, with radial normalization) from the best `starts` grid points.
pub fn minimize_on_sphere<F>(f: F, config: &SearchConfig) -> SphereMinimum
where
    F: Fn(&[f64; 4]) -> f64 + Sync,
{
    let grid = sphere_grid(config.grid_resolution.max(2));
    let values: Vec<f64> = grid.par_iter().map(&f).collect();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let starts = config.starts.max(1).min(grid.len());
    let step = 2.0 / (config.grid_resolution.max(2) - 1) as f64;

    let lifted = |x: &[f64]| f(&normalize4(x));
    let runs: Vec<(Minimum, usize)> = order[..starts]
        .par_iter()
        .map(|&idx| {
            let mut x = grid[idx].to_vec();
            let mut total = 0;
            let mut s = step;
            let mut best = Minimum {
                x: x.clone(),
                value: values[idx],
                iterations: 0,
            };
            for _ in 0..=config.restarts {
                let m = nelder_mead(lifted, &x, s, config.tolerance, config.max_iterations);
                total += m.iterations;
                if m.value <= best.value {
                    x = normalize4(&m.x).to_vec();
                    best = Minimum {
                        x: x.clone(),
                        value: m.value,
                        iterations: 0,
                    };
                }
                s *= 0.1;
            }
            (best, total)
        })
        .collect();

    let iterations = runs.iter().map(|(_, it)| it).sum();
    let (best, _) = runs
        .into_iter()
        .min_by(|a, b| a.0.value.total_cmp(&b.0.value))
        .expect("at least one start");
    SphereMinimum {
        point: normalize4(&best.x),
        value: best.value,
        starts,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], 0.5, 1e-16, 10_000);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn grid_counts_and_norms() {
        let g = sphere_grid(4);
        assert_eq!(g.len(), 256);
        assert!(g.iter().all(|p| (p.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12));
        // Odd resolution contains the origin, which is dropped.
        assert_eq!(sphere_grid(3).len(), 80);
    }

    #[test]
    fn sphere_minimum_of_linear_form() {
        // min over the sphere of <a, x> is -|a|.
        let a = [0.3, -0.4, 1.2, 0.1];
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cfg = SearchConfig {
            grid_resolution: 8,
            ..Default::default()
        };
        let m = minimize_on_sphere(|x| x.iter().zip(&a).map(|(p, q)| p * q).sum(), &cfg);
        assert!((m.value + na).abs() < 1e-9);
    }
}
