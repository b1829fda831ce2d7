//! Derivative-free minimisation for the low-dimensional fits in
//! [`crate::analysis`].

#[derive(Debug, Clone, Copy)]
pub(crate) struct Minimum<const D: usize> {
    pub x: [f64; D],
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead with standard coefficients (1, 2, 0.5, 0.5).
///
/// Stops when both the spread of simplex values and the simplex diameter
/// drop below the tolerances, or after `max_iter` iterations with the best
/// vertex reported.
pub(crate) fn nelder_mead<const D: usize, F>(
    mut f: F,
    start: [f64; D],
    step: [f64; D],
    x_tol: f64,
    f_tol: f64,
    max_iter: usize,
) -> Minimum<D>
where
    F: FnMut(&[f64; D]) -> f64,
{
    // D + 1 vertices, kept in a fixed-size buffer of D + 1 <= 8 entries.
    assert!(D >= 1 && D < 8);
    let mut simplex = [[0.0; D]; 8];
    let mut values = [0.0; 8];
    simplex[0] = start;
    for i in 0..D {
        let mut v = start;
        v[i] += step[i];
        simplex[i + 1] = v;
    }
    for i in 0..=D {
        values[i] = f(&simplex[i]);
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut order = [0usize; 8];
        for (i, o) in order.iter_mut().enumerate().take(D + 1) {
            *o = i;
        }
        order[..=D].sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[D];
        let second_worst = order[D - 1];

        let spread = values[worst] - values[best];
        let diameter = (0..=D)
            .map(|i| {
                (0..D)
                    .map(|k| (simplex[i][k] - simplex[best][k]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= f_tol && diameter <= x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; D];
        for &i in order.iter().take(D) {
            for k in 0..D {
                centroid[k] += simplex[i][k] / D as f64;
            }
        }
        let along = |t: f64| {
            let mut p = [0.0; D];
            for k in 0..D {
                p[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
            }
            p
        };

        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[worst] {
            let p = along(-0.5);
            let v = f(&p);
            (p, v)
        } else {
            let p = along(0.5);
            let v = f(&p);
            (p, v)
        };
        if fc < values[worst].min(fr) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 0..=D {
            if i == best {
                continue;
            }
            for k in 0..D {
                simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
            }
            values[i] = f(&simplex[i]);
        }
    }

    let best = (0..=D)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        x: simplex[best],
        iterations,
        converged,
    }
}
