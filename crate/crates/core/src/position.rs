//! Antenna position optimization.
//!
//! Two objective families drive the same round-robin ascent:
//!
//! - the FP position subproblem `f_n(t) = Σ_k 2Re{h_k(t)* c_{k,n}} − d_{k,n}|h_k(t)|²`,
//!   which is the part of the FP surrogate that depends on `t_n` when the
//!   beamformer and auxiliaries are held fixed;
//! - the ZF layout objective `−tr((Hᴴ H)⁻¹)`.
//!
//! Each antenna takes one gradient step with backtracking: the step
//! multiplier starts at `u_ini` and halves until the candidate is feasible
//! and strictly improves, or drops below `u_min` (in which case the antenna
//! stays put).

use crate::channel::{channel_matrix, response_and_gradient, AntennaLayout, PathSet, Scenario};
use crate::error::invalid;
use crate::fp::FpAuxiliaries;
use crate::linalg::{checked_gram_eigen, gram};
use crate::{CMatrix, Complex64, Point, Result};

/// Per-user coefficients of the FP position subproblem for one antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCoefficients {
    pub c: Vec<Complex64>,
    pub d: Vec<f64>,
}

/// Backtracking line-search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig {
    pub u_ini: f64,
    pub u_min: f64,
    /// Maximum number of round-robin sweeps over all antennas.
    pub max_sweeps: usize,
    /// Stop early once a sweep improves the objective by less than this
    /// fraction of its magnitude. Zero disables the check.
    pub tolerance: f64,
    /// Length in which positions are measured for the step; a step moves
    /// `u · length_unit² · ∇f` meters.
    pub length_unit: f64,
}

impl LineSearchConfig {
    pub fn new(u_ini: f64, u_min: f64, max_sweeps: usize, length_unit: f64) -> Result<Self> {
        if !(u_min > 0.0) || !(u_ini > u_min) {
            return Err(invalid(format!(
                "need u_ini > u_min > 0 (got u_ini={u_ini}, u_min={u_min})"
            )));
        }
        if !(length_unit > 0.0) {
            return Err(invalid("length unit must be positive"));
        }
        Ok(Self {
            u_ini,
            u_min,
            max_sweeps,
            tolerance: 0.0,
            length_unit,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

/// Coefficients `c_{k,n}` and `d_{k,n}` of the FP position subproblem for
/// antenna `n`, given the channel `H` at the current layout, the precoder
/// `W` and the auxiliaries.
pub fn local_coefficients(
    n: usize,
    h: &CMatrix,
    w: &CMatrix,
    aux: &FpAuxiliaries,
) -> Result<LocalCoefficients> {
    let (n_ant, k_users) = (h.nrows(), h.ncols());
    if n >= n_ant || w.nrows() != n_ant || w.ncols() != k_users || aux.beta.len() != k_users {
        return Err(crate::Error::DimensionMismatch(format!(
            "antenna {n} with H {}x{} and W {}x{}",
            n_ant,
            k_users,
            w.nrows(),
            w.ncols()
        )));
    }
    // Row n of the beam Gram matrix Σ_k w_k w_kᴴ.
    let gram_row: Vec<Complex64> = (0..n_ant)
        .map(|m| (0..k_users).map(|k| w[(n, k)] * w[(m, k)].conj()).sum())
        .collect();
    let mut c = Vec::with_capacity(k_users);
    let mut d = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let weight = 1.0 + aux.lambda[k];
        let beta = aux.beta[k];
        let cross: Complex64 = (0..n_ant)
            .filter(|&m| m != n)
            .map(|m| gram_row[m] * h[(m, k)])
            .sum();
        c.push(weight * (beta * w[(n, k)] - cross * beta.norm_sqr()));
        d.push(weight * beta.norm_sqr() * gram_row[n].re);
    }
    Ok(LocalCoefficients { c, d })
}

/// FP position subproblem value at `t`.
pub fn local_objective(t: &Point, coeffs: &LocalCoefficients, paths: &[PathSet], wavelength: f64) -> f64 {
    paths
        .iter()
        .zip(coeffs.c.iter().zip(&coeffs.d))
        .map(|(p, (c, d))| {
            let h = crate::channel::channel_response(t, p, wavelength);
            2.0 * (h.conj() * c).re - d * h.norm_sqr()
        })
        .sum()
}

/// Analytic gradient of [`local_objective`] with respect to `t`.
pub fn grad_local_objective(
    t: &Point,
    coeffs: &LocalCoefficients,
    paths: &[PathSet],
    wavelength: f64,
) -> Point {
    let mut g = Point::zeros();
    for (p, (c, d)) in paths.iter().zip(coeffs.c.iter().zip(&coeffs.d)) {
        let (h, dh) = response_and_gradient(t, p, wavelength);
        for axis in 0..2 {
            g[axis] += 2.0 * (dh[axis].conj() * c).re - 2.0 * d * (h.conj() * dh[axis]).re;
        }
    }
    g
}

/// Whether antenna `n` may sit at `t`: inside `[0, A]²` and at least `D`
/// away from every other antenna of `layout`.
pub fn is_feasible(t: &Point, n: usize, layout: &AntennaLayout) -> bool {
    let a = layout.region();
    let inside = (0.0..=a).contains(&t.x) && (0.0..=a).contains(&t.y);
    inside
        && layout
            .positions()
            .iter()
            .enumerate()
            .all(|(m, q)| m == n || (t - q).norm() >= layout.min_spacing())
}

/// Objective restricted to one antenna's position.
pub trait AntennaObjective {
    fn value(&self, t: &Point) -> f64;
    fn gradient(&self, t: &Point) -> Point;
}

/// Objective over a whole layout, optimized one antenna at a time.
pub trait LayoutObjective {
    type Local<'a>: AntennaObjective
    where
        Self: 'a;

    /// Tracked objective for the whole layout.
    fn total(&self, layout: &AntennaLayout) -> Result<f64>;

    /// Local objective for antenna `n` with every other antenna fixed.
    fn for_antenna<'a>(&'a self, n: usize, layout: &AntennaLayout) -> Result<Self::Local<'a>>;
}

/// One backtracking gradient step for antenna `n`.
///
/// Returns the accepted position, or the current one if no step size down
/// to `u_min` gives a feasible strict improvement.
pub fn optimize_position<O: AntennaObjective + ?Sized>(
    n: usize,
    layout: &AntennaLayout,
    objective: &O,
    cfg: &LineSearchConfig,
) -> Point {
    let start = layout.position(n);
    let grad = objective.gradient(&start);
    if !(grad[0].is_finite() && grad[1].is_finite()) {
        return start;
    }
    let base = objective.value(&start);
    let scale = cfg.length_unit * cfg.length_unit;
    let mut u = cfg.u_ini;
    loop {
        let candidate = start + grad * (u * scale);
        u /= 2.0;
        if is_feasible(&candidate, n, layout) && objective.value(&candidate) > base {
            return candidate;
        }
        if u < cfg.u_min {
            return start;
        }
    }
}

/// Outcome of a full layout optimization.
#[derive(Debug, Clone)]
pub struct LayoutOutcome {
    pub layout: AntennaLayout,
    /// Tracked objective before the first sweep and after each sweep.
    pub trajectory: Vec<f64>,
    pub sweeps: usize,
}

/// Round-robin gradient ascent over all antennas.
pub fn optimize_layout<O: LayoutObjective>(
    initial: &AntennaLayout,
    objective: &O,
    cfg: &LineSearchConfig,
) -> Result<LayoutOutcome> {
    initial.validate()?;
    let mut layout = initial.clone();
    let mut current = objective.total(&layout)?;
    let mut trajectory = vec![current];
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        let mut moved = false;
        for n in 0..layout.len() {
            let local = objective.for_antenna(n, &layout)?;
            let t = optimize_position(n, &layout, &local, cfg);
            if t != layout.position(n) {
                layout.set_position(n, t);
                moved = true;
            }
        }
        sweeps += 1;
        let next = objective.total(&layout)?;
        trajectory.push(next);
        let gain = next - current;
        current = next;
        if !moved || gain <= cfg.tolerance * current.abs() {
            break;
        }
    }
    Ok(LayoutOutcome {
        layout,
        trajectory,
        sweeps,
    })
}

/// FP position objective for fixed precoder and auxiliaries.
///
/// The tracked total is the FP surrogate (in nats) up to terms that do not
/// depend on the layout.
#[derive(Debug, Clone)]
pub struct FpLayoutObjective<'s> {
    pub scenario: &'s Scenario,
    pub w: CMatrix,
    pub aux: FpAuxiliaries,
}

pub struct FpAntennaObjective<'a> {
    coeffs: LocalCoefficients,
    paths: &'a [PathSet],
    wavelength: f64,
}

impl AntennaObjective for FpAntennaObjective<'_> {
    fn value(&self, t: &Point) -> f64 {
        local_objective(t, &self.coeffs, self.paths, self.wavelength)
    }

    fn gradient(&self, t: &Point) -> Point {
        grad_local_objective(t, &self.coeffs, self.paths, self.wavelength)
    }
}

impl LayoutObjective for FpLayoutObjective<'_> {
    type Local<'a>
        = FpAntennaObjective<'a>
    where
        Self: 'a;

    fn total(&self, layout: &AntennaLayout) -> Result<f64> {
        let h = channel_matrix(layout, self.scenario);
        let nats = crate::fp::fp_objective(&h, &self.w, &self.aux, &self.scenario.noise)?
            * std::f64::consts::LN_2;
        Ok(nats)
    }

    fn for_antenna<'a>(&'a self, n: usize, layout: &AntennaLayout) -> Result<FpAntennaObjective<'a>> {
        let h = channel_matrix(layout, self.scenario);
        Ok(FpAntennaObjective {
            coeffs: local_coefficients(n, &h, &self.w, &self.aux)?,
            paths: &self.scenario.paths,
            wavelength: self.scenario.wavelength,
        })
    }
}

/// `−tr((Hᴴ H)⁻¹)` for an explicit channel matrix.
pub fn zf_objective_from_channel(h: &CMatrix) -> Result<f64> {
    if h.nrows() < h.ncols() {
        return Err(invalid(format!(
            "zero forcing needs at least as many antennas as users ({} < {})",
            h.nrows(),
            h.ncols()
        )));
    }
    let eig = checked_gram_eigen(&gram(h))?;
    Ok(-eig.values.iter().map(|v| 1.0 / v).sum::<f64>())
}

/// ZF layout objective `−tr((Hᴴ H)⁻¹)`.
pub fn zf_objective(layout: &AntennaLayout, scenario: &Scenario) -> Result<f64> {
    zf_objective_from_channel(&channel_matrix(layout, scenario))
}

/// Gradient of `−tr((Hᴴ H)⁻¹)` with respect to antenna `n`'s position for an
/// explicit channel matrix `h` whose row `n` is evaluated at `t`.
fn zf_gradient_at(h: &CMatrix, n: usize, t: &Point, scenario: &Scenario) -> Result<Point> {
    let eig = checked_gram_eigen(&gram(h))?;
    // d(−tr G⁻¹) = 2 Re tr(G⁻² Hᴴ dH); only row n of H moves.
    let inv_sq = eig.map(|v| 1.0 / (v * v));
    let m = inv_sq * h.row(n).adjoint();
    let mut g = Point::zeros();
    for (k, paths) in scenario.paths.iter().enumerate() {
        let (_, dh) = response_and_gradient(t, paths, scenario.wavelength);
        for axis in 0..2 {
            g[axis] += 2.0 * (m[k] * dh[axis]).re;
        }
    }
    Ok(g)
}

/// Analytic gradient of [`zf_objective`] with respect to `t_n`.
pub fn grad_zf_objective(n: usize, layout: &AntennaLayout, scenario: &Scenario) -> Result<Point> {
    if n >= layout.len() {
        return Err(invalid(format!("antenna index {n} out of range")));
    }
    let h = channel_matrix(layout, scenario);
    if h.nrows() < h.ncols() {
        return Err(invalid("zero forcing needs N ≥ K"));
    }
    zf_gradient_at(&h, n, &layout.position(n), scenario)
}

/// ZF layout objective scaled by a positive constant. Scaling leaves the
/// maximizers unchanged but sets the gradient magnitude the line search sees.
#[derive(Debug, Clone)]
pub struct ZfLayoutObjective<'s> {
    pub scenario: &'s Scenario,
    pub scale: f64,
}

impl<'s> ZfLayoutObjective<'s> {
    /// Scale so that the objective equals −1 at `reference`.
    pub fn normalized_at(scenario: &'s Scenario, reference: &AntennaLayout) -> Result<Self> {
        let f = zf_objective(reference, scenario)?;
        Ok(Self {
            scenario,
            scale: 1.0 / f.abs(),
        })
    }
}

pub struct ZfAntennaObjective<'a> {
    n: usize,
    h: CMatrix,
    scenario: &'a Scenario,
    scale: f64,
}

impl ZfAntennaObjective<'_> {
    fn channel_at(&self, t: &Point) -> CMatrix {
        let mut h = self.h.clone();
        for (k, paths) in self.scenario.paths.iter().enumerate() {
            h[(self.n, k)] = crate::channel::channel_response(t, paths, self.scenario.wavelength);
        }
        h
    }
}

impl AntennaObjective for ZfAntennaObjective<'_> {
    fn value(&self, t: &Point) -> f64 {
        zf_objective_from_channel(&self.channel_at(t))
            .map(|v| v * self.scale)
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn gradient(&self, t: &Point) -> Point {
        zf_gradient_at(&self.channel_at(t), self.n, t, self.scenario)
            .map(|g| g * self.scale)
            .unwrap_or_else(|_| Point::zeros())
    }
}

impl LayoutObjective for ZfLayoutObjective<'_> {
    type Local<'a>
        = ZfAntennaObjective<'a>
    where
        Self: 'a;

    fn total(&self, layout: &AntennaLayout) -> Result<f64> {
        Ok(zf_objective(layout, self.scenario)? * self.scale)
    }

    fn for_antenna<'a>(&'a self, n: usize, layout: &AntennaLayout) -> Result<ZfAntennaObjective<'a>> {
        Ok(ZfAntennaObjective {
            n,
            h: channel_matrix(layout, self.scenario),
            scenario: self.scenario,
            scale: self.scale,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_scenario, stream_rng};
    use crate::fp::{fp_objective, update_auxiliaries, BeamMatrix};
    use crate::harness::config::ExperimentConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{LN_2, PI};

    fn setup(seed: u64, n: usize, k: usize) -> (Scenario, AntennaLayout) {
        let cfg = ExperimentConfig {
            num_antennas: n,
            num_users: k,
            ..ExperimentConfig::default()
        };
        let sc = sample_scenario(&cfg, seed).unwrap();
        let lam = sc.wavelength;
        let mut rng = stream_rng(seed, 1);
        let layout = AntennaLayout::random_feasible(n, 2.0 * lam, lam / 2.0, 10_000, &mut rng).unwrap();
        (sc, layout)
    }

    fn fp_state(seed: u64, n: usize, k: usize) -> (Scenario, AntennaLayout, CMatrix, FpAuxiliaries) {
        let (sc, layout) = setup(seed, n, k);
        let h = channel_matrix(&layout, &sc);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let mut w = BeamMatrix::matched_filter(&h, 3e-3).w;
        for z in w.iter_mut() {
            *z *= Complex64::from_polar(1.0, rng.random::<f64>() * 6.0);
        }
        let aux = update_auxiliaries(&h, &w, &sc.noise).unwrap();
        (sc, layout, w, aux)
    }

    /// Term-by-term coefficient oracle over k', n'.
    fn coeff_oracle(n: usize, h: &CMatrix, w: &CMatrix, aux: &FpAuxiliaries) -> LocalCoefficients {
        let (nn, kk) = (h.nrows(), h.ncols());
        let big_w = |i: usize, j: usize| {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..kk {
                s += w[(i, k)] * w[(j, k)].conj();
            }
            s
        };
        let mut c = vec![];
        let mut d = vec![];
        for k in 0..kk {
            let b2 = aux.beta[k].norm_sqr();
            let mut cross = Complex64::new(0.0, 0.0);
            for m in 0..nn {
                if m != n {
                    cross += big_w(n, m) * h[(m, k)];
                }
            }
            c.push((1.0 + aux.lambda[k]) * (aux.beta[k] * w[(n, k)] - b2 * cross));
            d.push((1.0 + aux.lambda[k]) * b2 * big_w(n, n).re);
        }
        LocalCoefficients { c, d }
    }

    fn fd_gradient(f: impl Fn(&Point) -> f64, t: &Point, step: f64) -> Point {
        let mut g = Point::zeros();
        for axis in 0..2 {
            let mut a = *t;
            let mut b = *t;
            a[axis] += step;
            b[axis] -= step;
            g[axis] = (f(&a) - f(&b)) / (2.0 * step);
        }
        g
    }

    #[test]
    fn coefficients_match_oracle_and_are_nonnegative() {
        for seed in 0..10 {
            let (sc, layout, w, aux) = fp_state(seed, 4, 3);
            let h = channel_matrix(&layout, &sc);
            for n in 0..4 {
                let got = local_coefficients(n, &h, &w, &aux).unwrap();
                let want = coeff_oracle(n, &h, &w, &aux);
                for k in 0..3 {
                    assert!((got.c[k] - want.c[k]).norm() <= 1e-12 * (1e-300 + want.c[k].norm()));
                    assert!((got.d[k] - want.d[k]).abs() <= 1e-12 * want.d[k].abs());
                    assert!(got.d[k] >= 0.0);
                }
            }
        }
    }

    #[test]
    fn single_antenna_coefficients_have_no_cross_term() {
        let (sc, _, _, _) = fp_state(3, 1, 2);
        let layout = AntennaLayout::new(vec![Point::new(0.01, 0.01)], 0.12, 0.03).unwrap();
        let h = channel_matrix(&layout, &sc);
        let w = BeamMatrix::matched_filter(&h, 1e-3).w;
        let aux = update_auxiliaries(&h, &w, &sc.noise).unwrap();
        let co = local_coefficients(0, &h, &w, &aux).unwrap();
        for k in 0..2 {
            let expect = (1.0 + aux.lambda[k]) * aux.beta[k] * w[(0, k)];
            assert!((co.c[k] - expect).norm() <= 1e-14 * expect.norm());
        }
    }

    #[test]
    fn local_objective_trivial_cases() {
        let paths = vec![PathSet::new(vec![Complex64::new(1.0, 0.0)], vec![0.7], vec![0.3]).unwrap()];
        let zero = LocalCoefficients { c: vec![Complex64::new(0.0, 0.0)], d: vec![0.0] };
        assert_eq!(local_objective(&Point::new(0.3, 0.1), &zero, &paths, 0.06), 0.0);

        let lam = 0.06;
        let c = 0.8;
        let coeffs = LocalCoefficients { c: vec![Complex64::new(c, 0.0)], d: vec![0.0] };
        let rho = paths[0].directions()[0];
        for t in [Point::new(0.01, 0.02), Point::new(0.05, 0.0), Point::new(0.11, 0.07)] {
            let expect = 2.0 * c * (2.0 * PI / lam * t.dot(&rho)).cos();
            assert!((local_objective(&t, &coeffs, &paths, lam) - expect).abs() < 1e-12);
            // gradient of 2c·cos(κ tᵀρ) = −2cκ sin(κ tᵀρ) ρ
            let kappa = 2.0 * PI / lam;
            let g = grad_local_objective(&t, &coeffs, &paths, lam);
            let ge = rho * (-2.0 * c * kappa * (kappa * t.dot(&rho)).sin());
            assert!((g - ge).norm() <= 1e-10 * (1.0 + ge.norm()));
        }

        // d-term only with a single path is position independent.
        let coeffs = LocalCoefficients { c: vec![Complex64::new(0.0, 0.0)], d: vec![2.5] };
        let g = grad_local_objective(&Point::new(0.02, 0.04), &coeffs, &paths, lam);
        assert!(g.norm() < 1e-12);
    }

    #[test]
    fn moving_one_antenna_changes_fp_objective_by_local_delta() {
        for seed in 0..10 {
            let (sc, layout, w, aux) = fp_state(seed, 4, 4);
            let h = channel_matrix(&layout, &sc);
            let n = (seed % 4) as usize;
            let co = local_coefficients(n, &h, &w, &aux).unwrap();
            let x = layout.position(n);
            let y = x + Point::new(0.003, -0.002);
            let mut moved = layout.clone();
            moved.set_position(n, y);
            let h2 = channel_matrix(&moved, &sc);
            let before = fp_objective(&h, &w, &aux, &sc.noise).unwrap() * LN_2;
            let after = fp_objective(&h2, &w, &aux, &sc.noise).unwrap() * LN_2;
            let local = local_objective(&y, &co, &sc.paths, sc.wavelength)
                - local_objective(&x, &co, &sc.paths, sc.wavelength);
            assert!(
                ((after - before) - local).abs() <= 1e-9 * (1.0 + local.abs()),
                "{} vs {}",
                after - before,
                local
            );
        }
    }

    #[test]
    fn local_gradient_matches_finite_differences() {
        for seed in 0..30 {
            let (sc, layout, w, aux) = fp_state(seed, 4, 4);
            let h = channel_matrix(&layout, &sc);
            let n = (seed % 4) as usize;
            let co = local_coefficients(n, &h, &w, &aux).unwrap();
            let t = layout.position(n);
            let g = grad_local_objective(&t, &co, &sc.paths, sc.wavelength);
            let fd = fd_gradient(
                |p| local_objective(p, &co, &sc.paths, sc.wavelength),
                &t,
                1e-6 * sc.wavelength,
            );
            assert!((g - fd).norm() < 1e-5 * g.norm(), "{g:?} vs {fd:?}");
        }
    }

    #[test]
    fn feasibility_examples() {
        let a = 0.12;
        let single = AntennaLayout::new(vec![Point::new(0.0, 0.0)], a, 0.03).unwrap();
        assert!(is_feasible(&Point::new(a / 2.0, a / 2.0), 0, &single));
        assert!(!is_feasible(&Point::new(a + 1e-9, 0.0), 0, &single));
        assert!(!is_feasible(&Point::new(0.01, -1e-9), 0, &single));
        let two = AntennaLayout::new(vec![Point::new(0.0, 0.0), Point::new(0.1, 0.1)], a, 0.03).unwrap();
        assert!(!is_feasible(&Point::new(0.1 - 0.99 * 0.03, 0.1), 0, &two));
        assert!(is_feasible(&Point::new(0.1 - 0.03, 0.1), 0, &two));
    }

    struct Flat;
    impl AntennaObjective for Flat {
        fn value(&self, _: &Point) -> f64 {
            1.0
        }
        fn gradient(&self, _: &Point) -> Point {
            Point::zeros()
        }
    }

    #[test]
    fn zero_gradient_leaves_position() {
        let layout = AntennaLayout::new(vec![Point::new(0.05, 0.05)], 0.12, 0.03).unwrap();
        let cfg = LineSearchConfig::new(10.0, 1e-3, 20, 0.06).unwrap();
        assert_eq!(optimize_position(0, &layout, &Flat, &cfg), layout.position(0));
    }

    #[test]
    fn accepted_steps_are_feasible_and_improving() {
        for seed in 0..20 {
            let (sc, layout, w, aux) = fp_state(seed, 4, 4);
            let obj = FpLayoutObjective { scenario: &sc, w: w.clone(), aux: aux.clone() };
            let cfg = LineSearchConfig::new(10.0, 1e-3, 20, sc.wavelength).unwrap();
            for n in 0..4 {
                let local = obj.for_antenna(n, &layout).unwrap();
                let t = optimize_position(n, &layout, &local, &cfg);
                if t != layout.position(n) {
                    assert!(is_feasible(&t, n, &layout));
                    assert!(local.value(&t) > local.value(&layout.position(n)));
                }
            }
        }
    }

    #[test]
    fn layout_optimization_is_monotone_and_feasible() {
        for seed in 0..8 {
            let (sc, layout, w, aux) = fp_state(seed, 4, 4);
            let cfg = LineSearchConfig::new(10.0, 1e-3, 20, sc.wavelength).unwrap();
            let obj = FpLayoutObjective { scenario: &sc, w, aux };
            let out = optimize_layout(&layout, &obj, &cfg).unwrap();
            out.layout.validate().unwrap();
            assert!(out.sweeps <= 20);
            for pair in out.trajectory.windows(2) {
                assert!(pair[1] >= pair[0] - 1e-12 * pair[0].abs());
            }

            let zobj = ZfLayoutObjective::normalized_at(&sc, &layout).unwrap();
            let out = optimize_layout(&layout, &zobj, &cfg).unwrap();
            out.layout.validate().unwrap();
            for pair in out.trajectory.windows(2) {
                assert!(pair[1] >= pair[0]);
            }
        }
    }

    #[test]
    fn zero_sweeps_keep_layout() {
        let (sc, layout, w, aux) = fp_state(1, 4, 4);
        let cfg = LineSearchConfig::new(10.0, 1e-3, 0, sc.wavelength).unwrap();
        let out = optimize_layout(&layout, &FpLayoutObjective { scenario: &sc, w, aux }, &cfg).unwrap();
        assert_eq!(out.layout, layout);
        assert_eq!(out.trajectory.len(), 1);
    }

    #[test]
    fn infeasible_initial_layout_is_rejected() {
        let (sc, _, w, aux) = fp_state(1, 2, 2);
        // D bigger than the region diagonal: any two antennas violate it.
        let layout = AntennaLayout::new_unchecked(
            vec![Point::new(0.0, 0.0), Point::new(0.01, 0.01)],
            0.01,
            0.02,
        )
        .unwrap();
        let cfg = LineSearchConfig::new(10.0, 1e-3, 5, sc.wavelength).unwrap();
        let obj = FpLayoutObjective { scenario: &sc, w, aux };
        assert!(optimize_layout(&layout, &obj, &cfg).is_err());
    }

    #[test]
    fn line_search_config_validation() {
        assert!(LineSearchConfig::new(1e-3, 1e-3, 5, 1.0).is_err());
        assert!(LineSearchConfig::new(10.0, 0.0, 5, 1.0).is_err());
        assert!(LineSearchConfig::new(10.0, 1e-3, 5, 0.0).is_err());
    }

    #[test]
    fn zf_objective_examples() {
        // Orthonormal columns.
        let mut h = CMatrix::zeros(4, 3);
        h[(0, 0)] = Complex64::new(1.0, 0.0);
        h[(1, 1)] = Complex64::new(0.0, 1.0);
        h[(3, 2)] = Complex64::from_polar(1.0, 0.3);
        assert!((zf_objective_from_channel(&h).unwrap() + 3.0).abs() < 1e-14);

        let (sc, layout) = setup(2, 4, 3);
        let h = channel_matrix(&layout, &sc);
        let f = zf_objective_from_channel(&h).unwrap();
        assert!(f < 0.0);
        let f3 = zf_objective_from_channel(&h.scale(3.0)).unwrap();
        assert!((f3 - f / 9.0).abs() < 1e-12 * f.abs());

        // Explicit inverse oracle via nalgebra's LU on Hᴴ H.
        let g = h.adjoint() * &h;
        let inv = g.clone().try_inverse().unwrap();
        let oracle = -inv.trace().re;
        assert!((f - oracle).abs() <= 1e-10 * oracle.abs());

        let wide = CMatrix::from_element(2, 3, Complex64::new(1.0, 0.0));
        assert!(zf_objective_from_channel(&wide).is_err());
    }

    #[test]
    fn zf_objective_singular_gram() {
        let h = CMatrix::from_element(4, 2, Complex64::new(0.3, 0.1));
        assert!(matches!(zf_objective_from_channel(&h), Err(crate::Error::Singular { .. })));
    }

    #[test]
    fn zf_gradient_matches_finite_differences() {
        for seed in 0..30 {
            let (sc, layout) = setup(seed, 4, 2);
            let n = (seed % 4) as usize;
            let g = grad_zf_objective(n, &layout, &sc).unwrap();
            let f = |p: &Point| {
                let mut l = layout.clone();
                l.set_position(n, *p);
                zf_objective(&l, &sc).unwrap()
            };
            let fd = fd_gradient(f, &layout.position(n), 1e-6 * sc.wavelength);
            assert!((g - fd).norm() < 1e-5 * g.norm(), "{g:?} vs {fd:?}");
        }
    }

    #[test]
    fn zf_gradient_vanishes_for_single_path_single_user() {
        let paths = PathSet::new(vec![Complex64::new(1e-5, 2e-5)], vec![0.4], vec![1.1]).unwrap();
        let sc = Scenario::from_paths(vec![paths], 1e-13, 0.06).unwrap();
        let layout = AntennaLayout::new(
            vec![Point::new(0.0, 0.0), Point::new(0.05, 0.02), Point::new(0.1, 0.1)],
            0.12,
            0.03,
        )
        .unwrap();
        for n in 0..3 {
            let g = grad_zf_objective(n, &layout, &sc).unwrap();
            let f = zf_objective(&layout, &sc).unwrap();
            // relative to the natural gradient scale κ|f|
            assert!(g.norm() < 1e-9 * f.abs() * 2.0 * PI / 0.06);
        }
    }

    #[test]
    fn zf_gradient_is_user_permutation_invariant() {
        let (sc, layout) = setup(5, 4, 3);
        let mut perm = sc.clone();
        perm.paths = vec![sc.paths[2].clone(), sc.paths[0].clone(), sc.paths[1].clone()];
        for n in 0..4 {
            let a = grad_zf_objective(n, &layout, &sc).unwrap();
            let b = grad_zf_objective(n, &layout, &perm).unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm());
        }
    }
}
