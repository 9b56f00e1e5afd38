//! Derivative-free Nelder–Mead minimization with dimension-adaptive
//! coefficients (Gao & Han, 2012).

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Converged once every vertex is within this distance (max-norm) of the best.
    pub tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from the simplex `x0, x0 + steps[i] * e_i`.
///
/// Non-finite function values are treated as `+inf`, so the simplex moves away
/// from them. The returned value is never worse than `f(x0)`.
pub fn minimize<F>(mut f: F, x0: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(n, steps.len(), "one step per coordinate");
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    if n == 0 {
        let value = eval(x0);
        return Minimum {
            x: Vec::new(),
            value,
            iterations: 0,
            evaluations: 1,
            converged: true,
        };
    }

    let nf = n as f64;
    let reflect = 1.0;
    let expand = 1.0 + 2.0 / nf;
    let contract = 0.75 - 1.0 / (2.0 * nf);
    let shrink = 1.0 - 1.0 / nf;

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        sort_simplex(&mut simplex, &mut values);
        if simplex_size(&simplex) <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / nf;
            }
        }
        let worst = values[n];
        let second = values[n - 1];
        let best = values[0];

        along(&centroid, &simplex[n], reflect, &mut trial);
        let fr = eval(&trial);
        if fr < best {
            along(&centroid, &simplex[n], reflect * expand, &mut trial2);
            let fe = eval(&trial2);
            if fe < fr {
                simplex[n].copy_from_slice(&trial2);
                values[n] = fe;
            } else {
                simplex[n].copy_from_slice(&trial);
                values[n] = fr;
            }
            continue;
        }
        if fr < second {
            simplex[n].copy_from_slice(&trial);
            values[n] = fr;
            continue;
        }
        // contraction: outside if the reflected point beats the worst vertex
        let (coef, reference) = if fr < worst {
            (reflect * contract, fr)
        } else {
            (-contract, worst)
        };
        along(&centroid, &simplex[n], coef, &mut trial2);
        let fc = eval(&trial2);
        if fc <= reference {
            simplex[n].copy_from_slice(&trial2);
            values[n] = fc;
            continue;
        }
        let (head, tail) = simplex.split_at_mut(1);
        let best_vertex = &head[0];
        for (v, value) in tail.iter_mut().zip(values[1..].iter_mut()) {
            for (x, b) in v.iter_mut().zip(best_vertex) {
                *x = b + shrink * (*x - b);
            }
            *value = eval(v);
        }
    }

    Minimum {
        x: simplex.swap_remove(0),
        value: values[0],
        iterations,
        evaluations,
        converged,
    }
}

/// `out = centroid + coef * (centroid - worst)`
fn along(centroid: &[f64], worst: &[f64], coef: f64, out: &mut [f64]) {
    for ((o, c), w) in out.iter_mut().zip(centroid).zip(worst) {
        *o = c + coef * (c - w);
    }
}

fn sort_simplex(simplex: &mut [Vec<f64>], values: &mut [f64]) {
    // insertion sort: stable, and usually only the last vertex is out of place
    for i in 1..values.len() {
        let mut j = i;
        while j > 0 && values[j] < values[j - 1] {
            values.swap(j, j - 1);
            simplex.swap(j, j - 1);
            j -= 1;
        }
    }
}

fn simplex_size(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .flat_map(|v| v.iter().zip(best).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}
