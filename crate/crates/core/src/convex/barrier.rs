//! Dense log-barrier method with damped Newton centering steps.
//!
//! Minimizes a linear objective subject to affine inequalities and delay
//! inequalities built from sojourn-time terms. The feasible start must be
//! strictly interior. The Newton system is regularized when the barrier
//! Hessian is not positive definite.

use nalgebra::{Cholesky, DMatrix, DVector};

/// `constant + Σ coef · x[idx]`
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Affine {
    pub constant: f64,
    pub coefs: Vec<(usize, f64)>,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine { constant: c, coefs: Vec::new() }
    }

    pub fn var(idx: usize, coef: f64) -> Self {
        Affine { constant: 0.0, coefs: vec![(idx, coef)] }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coefs.iter().fold(self.constant, |acc, &(i, c)| acc + c * x[i])
    }

    pub fn scaled(&self, k: f64) -> Self {
        Affine {
            constant: self.constant * k,
            coefs: self.coefs.iter().map(|&(i, c)| (i, c * k)).collect(),
        }
    }

    pub fn plus(&self, other: &Affine) -> Self {
        let mut coefs = self.coefs.clone();
        for &(i, c) in &other.coefs {
            match coefs.iter_mut().find(|(j, _)| *j == i) {
                Some(slot) => slot.1 += c,
                None => coefs.push((i, c)),
            }
        }
        Affine { constant: self.constant + other.constant, coefs }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Capability {
    Const(f64),
    Var(usize),
}

impl Capability {
    fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Capability::Const(c) => c,
            Capability::Var(i) => x[i],
        }
    }

    pub fn as_affine(&self) -> Affine {
        match *self {
            Capability::Const(c) => Affine::constant(c),
            Capability::Var(i) => Affine::var(i, 1.0),
        }
    }
}

/// `coef · μ / ((μ - w)(μ - w - own))`
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SojournTerm {
    pub mu: Capability,
    pub ahead: Affine,
    pub own: f64,
    pub coef: f64,
}

struct TermDerivs {
    value: f64,
    d_mu: f64,
    d_w: f64,
    h_mumu: f64,
    h_muw: f64,
    h_ww: f64,
}

impl SojournTerm {
    fn derivs(&self, x: &[f64]) -> TermDerivs {
        let mu = self.mu.eval(x);
        let w = self.ahead.eval(x);
        let u = mu - w;
        let v = u - self.own;
        let g = 1.0 / (u * v);
        let a = 1.0 / u + 1.0 / v;
        let b = 1.0 / (u * u) + 1.0 / (v * v);
        let k = self.coef;
        TermDerivs {
            value: k * mu * g,
            d_mu: k * g * (1.0 - mu * a),
            d_w: k * mu * g * a,
            h_mumu: k * g * (mu * (a * a + b) - 2.0 * a),
            h_muw: k * g * (a - mu * (a * a + b)),
            h_ww: k * mu * g * (a * a + b),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mu = self.mu.eval(x);
        let u = mu - self.ahead.eval(x);
        self.coef * mu / (u * (u - self.own))
    }
}

/// `Σ terms - 1 - slack ≤ 0`
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DelayIneq {
    pub terms: Vec<SojournTerm>,
    pub slack: Option<usize>,
}

impl DelayIneq {
    pub fn value(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.terms.iter().map(|t| t.value(x)).sum();
        sum - 1.0 - self.slack.map_or(0.0, |s| x[s])
    }

    fn accumulate(&self, x: &[f64], grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) -> f64 {
        let mut total = -1.0;
        if let Some(s) = self.slack {
            total -= x[s];
            grad[s] -= 1.0;
        }
        for t in &self.terms {
            let d = t.derivs(x);
            total += d.value;
            // J maps (mu, w) to x: mu row and w row as sparse coefficient lists.
            let mu_row: Vec<(usize, f64)> = match t.mu {
                Capability::Var(i) => vec![(i, 1.0)],
                Capability::Const(_) => Vec::new(),
            };
            let w_row = &t.ahead.coefs;
            for &(i, c) in &mu_row {
                grad[i] += d.d_mu * c;
            }
            for &(i, c) in w_row {
                grad[i] += d.d_w * c;
            }
            for &(i, ci) in &mu_row {
                for &(j, cj) in &mu_row {
                    hess[(i, j)] += d.h_mumu * ci * cj;
                }
                for &(j, cj) in w_row {
                    hess[(i, j)] += d.h_muw * ci * cj;
                    hess[(j, i)] += d.h_muw * ci * cj;
                }
            }
            for &(i, ci) in w_row {
                for &(j, cj) in w_row {
                    hess[(i, j)] += d.h_ww * ci * cj;
                }
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Program {
    pub dim: usize,
    pub objective: Vec<f64>,
    /// Each `≤ 0`.
    pub affine: Vec<Affine>,
    pub delays: Vec<DelayIneq>,
}

impl Program {
    pub fn constraint_count(&self) -> usize {
        self.affine.len() + self.delays.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest constraint value; negative means strictly feasible.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.affine
            .iter()
            .map(|a| a.eval(x))
            .chain(self.delays.iter().map(|d| d.value(x)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn barrier_value(&self, x: &[f64], t: f64) -> Option<f64> {
        let mut phi = t * self.objective_value(x);
        for f in self.affine.iter().map(|a| a.eval(x)).chain(self.delays.iter().map(|d| d.value(x))) {
            if !(f < 0.0) {
                return None;
            }
            phi -= (-f).ln();
        }
        Some(phi)
    }

    fn barrier_derivs(&self, x: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dim;
        let mut grad = DVector::from_iterator(n, self.objective.iter().map(|c| c * t));
        let mut hess = DMatrix::zeros(n, n);
        for a in &self.affine {
            let f = a.eval(x);
            let inv = -1.0 / f;
            for &(i, ci) in &a.coefs {
                grad[i] += ci * inv;
                for &(j, cj) in &a.coefs {
                    hess[(i, j)] += ci * cj * inv * inv;
                }
            }
        }
        for d in &self.delays {
            let mut g = DVector::zeros(n);
            let mut h = DMatrix::zeros(n, n);
            let f = d.accumulate(x, &mut g, &mut h);
            let inv = -1.0 / f;
            grad += &g * inv;
            hess += &h * inv + (&g * g.transpose()) * (inv * inv);
        }
        (grad, hess)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Options {
    /// Stop once `constraints / t` falls below this.
    pub gap_tol: f64,
    pub max_newton: usize,
    pub t0: f64,
    pub growth: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options { gap_tol: 1e-8, max_newton: 500, t0: 1.0, growth: 20.0 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub newton_iterations: usize,
    /// `constraints / t` at exit.
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum Failure {
    NotInterior,
    Budget { iterations: usize, gap: f64 },
}

/// Runs the barrier method from the strictly feasible point `x0`.
///
/// `stop(objective, gap)` is consulted after every Newton step (with an
/// infinite gap until the iterate is centered) and ends
/// the run early when it returns true.
pub(crate) fn minimize(
    program: &Program,
    x0: Vec<f64>,
    opts: &Options,
    stop: &dyn Fn(f64, f64) -> bool,
) -> Result<Outcome, Failure> {
    let m = program.constraint_count().max(1) as f64;
    let mut x = x0;
    if program.barrier_value(&x, opts.t0).is_none() {
        return Err(Failure::NotInterior);
    }
    let mut t = opts.t0;
    let mut iterations = 0usize;
    loop {
        // centering
        loop {
            if iterations >= opts.max_newton {
                return Err(Failure::Budget { iterations, gap: m / t });
            }
            iterations += 1;
            let (grad, hess) = program.barrier_derivs(&x, t);
            let step = newton_step(&grad, hess);
            let decrement = -grad.dot(&step);
            let phi0 = program.barrier_value(&x, t).expect("iterate stays interior");
            // below this the decrease is lost in rounding of the barrier value
            let floor = 1e-12 + 1e-14 * phi0.abs();
            if !(decrement.is_finite()) || decrement / 2.0 <= floor {
                break;
            }
            let mut alpha = 1.0;
            let accepted = loop {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect();
                if let Some(phi) = program.barrier_value(&trial, t) {
                    if phi <= phi0 - 0.25 * alpha * decrement {
                        break Some(trial);
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-14 {
                    break None;
                }
            };
            match accepted {
                Some(next) => x = next,
                None => break,
            }
            // off the central path there is no duality bound yet
            if stop(program.objective_value(&x), f64::INFINITY) {
                return Ok(Outcome { x, newton_iterations: iterations, gap: m / t });
            }
        }
        let gap = m / t;
        if stop(program.objective_value(&x), gap) {
            return Ok(Outcome { x, newton_iterations: iterations, gap });
        }
        if gap < opts.gap_tol {
            return Ok(Outcome { x, newton_iterations: iterations, gap });
        }
        t *= opts.growth;
    }
}

fn newton_step(grad: &DVector<f64>, hess: DMatrix<f64>) -> DVector<f64> {
    let n = grad.len();
    let scale = (0..n).map(|i| hess[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut tau = 0.0;
    loop {
        let mut h = hess.clone();
        for i in 0..n {
            h[(i, i)] += tau;
        }
        if let Some(chol) = Cholesky::new(h) {
            return -chol.solve(grad);
        }
        tau = if tau == 0.0 { 1e-10 * scale } else { tau * 10.0 };
        if tau > 1e12 * scale {
            return -grad.clone() / scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_derivatives_match_finite_differences() {
        let term = SojournTerm {
            mu: Capability::Var(0),
            ahead: Affine::var(1, 1.0),
            own: 0.3,
            coef: 0.7,
        };
        let x = [1.0, 0.25];
        let d = term.derivs(&x);
        let h = 1e-6;
        let f = |a: f64, b: f64| term.value(&[a, b]);
        let fd_mu = (f(x[0] + h, x[1]) - f(x[0] - h, x[1])) / (2.0 * h);
        let fd_w = (f(x[0], x[1] + h) - f(x[0], x[1] - h)) / (2.0 * h);
        assert!((fd_mu - d.d_mu).abs() < 1e-6, "{fd_mu} vs {}", d.d_mu);
        assert!((fd_w - d.d_w).abs() < 1e-6);
        let h = 1e-4;
        let fd_mumu = (f(x[0] + h, x[1]) - 2.0 * f(x[0], x[1]) + f(x[0] - h, x[1])) / (h * h);
        let fd_ww = (f(x[0], x[1] + h) - 2.0 * f(x[0], x[1]) + f(x[0], x[1] - h)) / (h * h);
        let fd_muw = (f(x[0] + h, x[1] + h) - f(x[0] + h, x[1] - h) - f(x[0] - h, x[1] + h)
            + f(x[0] - h, x[1] - h))
            / (4.0 * h * h);
        assert!((fd_mumu - d.h_mumu).abs() < 1e-4 * d.h_mumu.abs().max(1.0));
        assert!((fd_ww - d.h_ww).abs() < 1e-4 * d.h_ww.abs().max(1.0));
        assert!((fd_muw - d.h_muw).abs() < 1e-4 * d.h_muw.abs().max(1.0));
    }

    #[test]
    fn minimizes_linear_objective_over_box() {
        // min x subject to 1 - x <= 0 and x - 3 <= 0
        let p = Program {
            dim: 1,
            objective: vec![1.0],
            affine: vec![
                Affine { constant: 1.0, coefs: vec![(0, -1.0)] },
                Affine { constant: -3.0, coefs: vec![(0, 1.0)] },
            ],
            delays: vec![],
        };
        let out = minimize(&p, vec![2.0], &Options::default(), &|_, _| false).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-7);
    }
}
