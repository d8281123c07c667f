//! Descent over isometries `V` (`M × r`, `V†V = I`) for objectives that
//! split as a sum over rows, `f(V) = Σ_i h(V_i·)`.
//!
//! Ensemble optimizations (convex roofs, Schmidt-number searches) and
//! Kraus-mixing searches both have this shape: row `i` of the mixing
//! determines ensemble member or Kraus operator `i` on its own. Gradients are
//! taken row by row (analytically when the objective provides them, by
//! central finite differences otherwise), projected onto the tangent space,
//! combined into Polak–Ribière conjugate directions, and the step is
//! retracted with a phase-fixed QR. Every accepted step satisfies an Armijo
//! decrease, so the objective trace is non-increasing.

use crate::linalg::{orthonormalize, ComplexMatrix, C64};

pub(crate) trait RowObjective: Sync {
    fn value(&self, row: &[C64]) -> f64;

    /// Writes `∂h/∂Re v_j + i ∂h/∂Im v_j` into `out`.
    fn gradient(&self, row: &[C64], out: &mut [C64]) {
        fd_gradient(self, row, out, FD_STEP);
    }
}

/// Wraps a closure; gradients by central differences.
#[cfg(test)]
pub(crate) struct FnRow<F>(pub F);

#[cfg(test)]
impl<F: Fn(&[C64]) -> f64 + Sync> RowObjective for FnRow<F> {
    fn value(&self, row: &[C64]) -> f64 {
        (self.0)(row)
    }
}

pub(crate) const FD_STEP: f64 = 1e-6;

pub(crate) fn fd_gradient<H: RowObjective + ?Sized>(h: &H, row: &[C64], out: &mut [C64], step: f64) {
    let mut work = row.to_vec();
    for j in 0..row.len() {
        let orig = work[j];
        work[j] = orig + step;
        let fp = h.value(&work);
        work[j] = orig - step;
        let fm = h.value(&work);
        work[j] = orig + C64::new(0.0, step);
        let gp = h.value(&work);
        work[j] = orig - C64::new(0.0, step);
        let gm = h.value(&work);
        work[j] = orig;
        out[j] = C64::new((fp - fm) / (2.0 * step), (gp - gm) / (2.0 * step));
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DescentOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Absolute decrease over [`STALL_WINDOW`] iterations below which the
    /// run is considered settled.
    pub value_tolerance: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { max_iterations: 2000, gradient_tolerance: 1e-8, value_tolerance: 1e-13 }
    }
}

pub(crate) const STALL_WINDOW: usize = 25;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-16;

#[derive(Debug, Clone)]
pub(crate) struct DescentOutcome {
    pub point: ComplexMatrix,
    pub value: f64,
    pub converged: bool,
    /// Objective after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

fn row_of(v: &ComplexMatrix, i: usize, buf: &mut [C64]) {
    for (j, slot) in buf.iter_mut().enumerate() {
        *slot = v[(i, j)];
    }
}

pub(crate) fn objective<H: RowObjective + ?Sized>(h: &H, v: &ComplexMatrix) -> f64 {
    let mut row = vec![C64::new(0.0, 0.0); v.ncols()];
    (0..v.nrows())
        .map(|i| {
            row_of(v, i, &mut row);
            h.value(&row)
        })
        .sum()
}

fn euclidean_gradient<H: RowObjective + ?Sized>(h: &H, v: &ComplexMatrix) -> ComplexMatrix {
    let (m, r) = v.shape();
    let mut g = ComplexMatrix::zeros(m, r);
    let mut row = vec![C64::new(0.0, 0.0); r];
    let mut out = vec![C64::new(0.0, 0.0); r];
    for i in 0..m {
        row_of(v, i, &mut row);
        h.gradient(&row, &mut out);
        for j in 0..r {
            g[(i, j)] = out[j];
        }
    }
    g
}

/// Tangent-space projection at `v`: `Z - V herm(V†Z)`.
fn project_tangent(v: &ComplexMatrix, z: &ComplexMatrix) -> ComplexMatrix {
    let vz = v.adjoint() * z;
    let herm = (&vz + vz.adjoint()).scale(0.5);
    z - v * herm
}

fn inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub(crate) fn minimize_rows<H, A>(h: &H, start: ComplexMatrix, opts: &DescentOptions, mut on_accept: A) -> DescentOutcome
where
    H: RowObjective + ?Sized,
    A: FnMut(&ComplexMatrix),
{
    let mut v = start;
    let mut value = objective(h, &v);
    let mut history = vec![value];
    let mut step: f64 = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut prev: Option<(ComplexMatrix, ComplexMatrix)> = None; // (gradient, direction)

    while iterations < opts.max_iterations {
        let grad = project_tangent(&v, &euclidean_gradient(h, &v));
        let gnorm2 = grad.norm_squared();
        if gnorm2.sqrt() < opts.gradient_tolerance {
            converged = true;
            break;
        }
        let mut dir = -grad.clone();
        if let Some((g_old, d_old)) = &prev {
            let g_old = project_tangent(&v, g_old);
            let d_old = project_tangent(&v, d_old);
            let beta = (inner(&grad, &(&grad - &g_old)) / g_old.norm_squared().max(1e-300)).max(0.0);
            let cand = &dir + d_old.scale(beta);
            if inner(&cand, &grad) < -1e-3 * cand.norm() * gnorm2.sqrt() {
                dir = cand;
            }
        }
        let slope = inner(&dir, &grad);
        let dnorm = dir.norm();
        step = (step * 2.0).min(1.0 / dnorm.max(1e-300)).max(MIN_STEP * 4.0);
        let mut accepted = None;
        while step >= MIN_STEP {
            let cand = orthonormalize(&(&v + dir.scale(step)));
            let cv = objective(h, &cand);
            if cv <= value + ARMIJO * step * slope {
                accepted = Some((cand, cv));
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((cand, cv)) => {
                v = cand;
                value = cv;
                history.push(value);
                prev = Some((grad, dir));
                on_accept(&v);
            }
            None if prev.is_some() => {
                // conjugate direction failed; retry from steepest descent
                prev = None;
                step = 1.0;
                continue;
            }
            None => {
                // no descent left at gradient resolution
                converged = true;
                break;
            }
        }
        if history.len() > STALL_WINDOW && history[history.len() - 1 - STALL_WINDOW] - value <= opts.value_tolerance {
            converged = true;
            break;
        }
    }

    DescentOutcome { point: v, value, converged, history }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_isometry, RandomStream};

    #[test]
    fn spreads_weight_evenly() {
        // Σ_i |v_i - 1|^2 over unit vectors in C^4 is minimized at v_i = 1/2
        let h = FnRow(|row: &[C64]| (row[0] - 1.0).norm_sqr());
        let mut rng = RandomStream::new(1, 0);
        let start = random_isometry(4, 1, &mut rng).unwrap();
        let out = minimize_rows(&h, start, &DescentOptions::default(), |_| {});
        assert!((out.value - 1.0).abs() < 1e-9, "{}", out.value);
        assert!(out.converged);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        assert!((out.point.adjoint() * &out.point - ComplexMatrix::identity(1, 1)).norm() < 1e-12);
    }

    #[test]
    fn fd_gradient_matches_analytic() {
        // h = |v0|^2 |v1|^2 → gradient 2 v0 |v1|^2, 2 v1 |v0|^2
        let h = FnRow(|row: &[C64]| row[0].norm_sqr() * row[1].norm_sqr());
        let row = [C64::new(0.3, -0.2), C64::new(0.5, 0.7)];
        let mut out = [C64::new(0.0, 0.0); 2];
        h.gradient(&row, &mut out);
        let want = [row[0] * (2.0 * row[1].norm_sqr()), row[1] * (2.0 * row[0].norm_sqr())];
        for k in 0..2 {
            assert!((out[k] - want[k]).norm() < 1e-9);
        }
    }
}
