//! Verification of linearization by point transformation. A nonlinear
//! system is linearizable iff it admits an infinite-parameter point symmetry
//! whose coefficients are linear in an arbitrary solution F of a linear
//! system LF = 0 in invariant coordinates X(x,u); the invariants and a
//! companion solution ψ of an inhomogeneous twin system assemble the mapping
//! z = X(x,u), w = ψ(x,u). Everything here verifies user-supplied
//! candidates; nothing tries to solve the characteristic systems.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dcm::{self, DcmError, MultiplierSet};
use crate::jetexpr::{
    diff, eval_at, expand, oracle, replace_coords, Coord, EvalError, Expr, JetPoint, JetVar,
    OracleConfig, OracleError, SubstError,
};
use crate::system::SystemDef;
use crate::varcalc::{
    adjoint, symmetry_determining, Generator, LinearOperator, VarcalcError,
};

/// Singular values below this fraction of the largest count as zero in
/// rank and invertibility checks.
const RANK_TOL: f64 = 1e-8;
/// Residual ceiling for the pointwise pullback check.
const PULLBACK_TOL: f64 = 1e-7;
const RANK_POINTS: usize = 16;

#[derive(Debug, Error)]
pub enum LinError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("sample {index} does not solve the linear system (residual {residual})")]
    SampleNotSolution { index: usize, residual: f64 },
    #[error("invariant X_{j} fails the characteristic equation for σ={sigma} (residual {residual})")]
    InvariantEquation { j: usize, sigma: usize, residual: f64 },
    #[error("candidate invariants are functionally dependent (singular value ratio {0})")]
    FunctionalDependence(f64),
    #[error("ψ^{gamma} fails the inhomogeneous equation for σ={sigma} (residual {residual})")]
    KroneckerEquation { gamma: usize, sigma: usize, residual: f64 },
    #[error("mapping (X, ψ) is not invertible at sampled points (singular value ratio {0})")]
    MappingNotInvertible(f64),
    #[error("only first-order systems and targets are supported here, got order {0}")]
    HigherOrder(usize),
    #[error("inverse mapping not resolvable at a sample point")]
    NotResolvable,
    #[error("could not find an evaluable sample point: {0}")]
    Sampling(EvalError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Varcalc(#[from] VarcalcError),
    #[error(transparent)]
    Dcm(#[from] DcmError),
    #[error(transparent)]
    Subst(#[from] SubstError),
}

/// A candidate for linearization by point transformation: the coefficient
/// matrices tying the symmetry to an arbitrary solution F of `target`,
/// plus the invariants and companion functions that assemble the mapping.
#[derive(Debug, Clone)]
pub struct LinearizationCandidate {
    /// ξ_i = Σ_σ alpha[i][σ]·F^σ(X); n × m, functions of (x, u).
    pub alpha: Vec<Vec<Expr>>,
    /// η^ν = Σ_σ beta[ν][σ]·F^σ(X); m × m.
    pub beta: Vec<Vec<Expr>>,
    /// The linear operator L, written in the z coordinates.
    pub target: LinearOperator,
    /// Names of the z coordinates, length n.
    pub z_names: Vec<String>,
    /// Names of the w components, length m.
    pub w_names: Vec<String>,
    /// X_j(x, u), length n.
    pub invariants: Vec<Expr>,
    /// ψ^γ(x, u), length m.
    pub psi: Vec<Expr>,
}

impl LinearizationCandidate {
    fn n(&self) -> usize {
        self.z_names.len()
    }

    fn m(&self) -> usize {
        self.w_names.len()
    }

    fn check_shape(&self) -> Result<(), LinError> {
        let (n, m) = (self.n(), self.m());
        let ok = self.alpha.len() == n
            && self.alpha.iter().all(|r| r.len() == m)
            && self.beta.len() == m
            && self.beta.iter().all(|r| r.len() == m)
            && self.invariants.len() == n
            && self.psi.len() == m
            && self.target.rows() == m
            && self.target.cols() == m;
        if ok {
            Ok(())
        } else {
            Err(LinError::Shape(format!(
                "expected α {n}×{m}, β {m}×{m}, {n} invariants, {m} ψ, target {m}×{m}"
            )))
        }
    }

    /// Substitute z_j → X_j(x, u) into an expression written in z.
    pub fn pull_back(&self, e: &Expr) -> Expr {
        let map: Vec<(Coord, Expr)> = self
            .z_names
            .iter()
            .zip(&self.invariants)
            .map(|(z, x)| (Coord::Indep(z.clone()), x.clone()))
            .collect();
        replace_coords(e, &map)
    }
}

/// The assembled point transformation z_j = X_j(x,u), w^γ = ψ^γ(x,u).
#[derive(Debug, Clone)]
pub struct Mapping {
    pub z: Vec<(String, Expr)>,
    pub w: Vec<(String, Expr)>,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub pass: bool,
    pub max_rel_residual: f64,
}

fn check_samples(
    target: &LinearOperator,
    samples: &[Vec<Expr>],
    cfg: &OracleConfig,
) -> Result<(), LinError> {
    for (index, f) in samples.iter().enumerate() {
        for r in target.apply(f) {
            let v = oracle::is_zero(&r, cfg)?;
            if !v.zero {
                return Err(LinError::SampleNotSolution {
                    index,
                    residual: v.max_rel_residual,
                });
            }
        }
    }
    Ok(())
}

/// The infinite-parameter symmetry form: for each concrete solution F of
/// LF = 0, the generator ξ_i = α_i^σ F^σ(X), η^ν = β_ν^σ F^σ(X) must be a
/// point symmetry of the system.
pub fn verify_symmetry_form(
    sys: &SystemDef,
    cand: &LinearizationCandidate,
    samples: &[Vec<Expr>],
    cfg: &OracleConfig,
) -> Result<Verdict, LinError> {
    cand.check_shape()?;
    check_samples(&cand.target, samples, cfg)?;
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for f in samples {
        let fx: Vec<Expr> = f.iter().map(|e| cand.pull_back(e)).collect();
        let combo = |row: &[Expr]| {
            Expr::sum(row.iter().zip(&fx).map(|(c, f)| c.mul(f)).collect())
        };
        let gen = Generator::Point {
            xis: sys
                .ctx
                .indep
                .iter()
                .zip(&cand.alpha)
                .map(|(x, row)| (x.clone(), combo(row)))
                .collect(),
            etas: sys
                .ctx
                .dep
                .iter()
                .zip(&cand.beta)
                .map(|(u, row)| (u.clone(), combo(row)))
                .collect(),
        };
        for det in symmetry_determining(sys, &gen)? {
            let v = oracle::is_zero(&det, cfg)?;
            worst = worst.max(v.max_rel_residual);
            pass &= v.zero;
        }
    }
    Ok(Verdict {
        pass,
        max_rel_residual: worst,
    })
}

/// Characteristic operator Σ_i α_i^σ ∂/∂x_i + Σ_ν β_ν^σ ∂/∂u^ν applied to a
/// function of (x, u).
fn characteristic_apply(
    cand: &LinearizationCandidate,
    ctx_indep: &[String],
    ctx_dep: &[String],
    sigma: usize,
    phi: &Expr,
) -> Expr {
    let mut terms = Vec::new();
    for (i, x) in ctx_indep.iter().enumerate() {
        terms.push(cand.alpha[i][sigma].mul(&diff(phi, &Coord::Indep(x.clone()))));
    }
    for (nu, u) in ctx_dep.iter().enumerate() {
        terms.push(cand.beta[nu][sigma].mul(&diff(phi, &Coord::Jet(JetVar::base(u)))));
    }
    Expr::sum(terms)
}

fn sample_jetpoint(coords: &[Coord], rng: &mut ChaCha8Rng, cfg: &OracleConfig) -> JetPoint {
    let mut p = JetPoint::new(cfg.seed);
    for c in coords {
        let mag = rng.gen_range(cfg.band.0..cfg.band.1);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        p.set(c.clone(), sign * mag);
    }
    p
}

/// Evaluate a matrix of expressions at random points until one point works
/// for every entry, then return the numeric matrix.
fn eval_matrix_at_sample(
    entries: &[Vec<Expr>],
    coords: &[Coord],
    rng: &mut ChaCha8Rng,
    cfg: &OracleConfig,
) -> Result<DMatrix<f64>, LinError> {
    let rows = entries.len();
    let cols = entries[0].len();
    let mut last = EvalError::NonFinite;
    for _ in 0..cfg.max_retries {
        let p = sample_jetpoint(coords, rng, cfg);
        let mut m = DMatrix::zeros(rows, cols);
        let mut ok = true;
        'fill: for (r, row) in entries.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                match eval_at(e, &p) {
                    Ok(v) => m[(r, c)] = v,
                    Err(e) => {
                        last = e;
                        ok = false;
                        break 'fill;
                    }
                }
            }
        }
        if ok {
            return Ok(m);
        }
    }
    Err(LinError::Sampling(last))
}

/// Smallest singular value of interest relative to the largest, minimized
/// over sampled points.
fn min_sv_ratio(
    entries: &[Vec<Expr>],
    coords: &[Coord],
    rank: usize,
    cfg: &OracleConfig,
) -> Result<f64, LinError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6c69_6e65);
    let mut worst = f64::INFINITY;
    for _ in 0..RANK_POINTS {
        let m = eval_matrix_at_sample(entries, coords, &mut rng, cfg)?;
        let svd = m.svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let top = sv[0].max(f64::MIN_POSITIVE);
        worst = worst.min(sv[rank - 1] / top);
    }
    Ok(worst)
}

/// The sufficient conditions for an invertible linearizing mapping: the
/// invariants solve the homogeneous characteristic system and are
/// functionally independent, the ψ^γ solve the Kronecker-δ inhomogeneous
/// twin, and the assembled mapping is invertible at sampled points.
pub fn verify_theorem5(
    cand: &LinearizationCandidate,
    ctx_indep: &[String],
    ctx_dep: &[String],
    cfg: &OracleConfig,
) -> Result<Mapping, LinError> {
    cand.check_shape()?;
    let (n, m) = (cand.n(), cand.m());
    for sigma in 0..m {
        for (j, x) in cand.invariants.iter().enumerate() {
            let r = characteristic_apply(cand, ctx_indep, ctx_dep, sigma, x);
            let v = oracle::is_zero(&r, cfg)?;
            if !v.zero {
                return Err(LinError::InvariantEquation {
                    j,
                    sigma,
                    residual: v.max_rel_residual,
                });
            }
        }
        for (gamma, psi) in cand.psi.iter().enumerate() {
            let delta = if gamma == sigma {
                Expr::num_i64(1)
            } else {
                Expr::zero()
            };
            let r = characteristic_apply(cand, ctx_indep, ctx_dep, sigma, psi).sub(&delta);
            let v = oracle::is_zero(&r, cfg)?;
            if !v.zero {
                return Err(LinError::KroneckerEquation {
                    gamma,
                    sigma,
                    residual: v.max_rel_residual,
                });
            }
        }
    }
    let coords: Vec<Coord> = ctx_indep
        .iter()
        .map(|x| Coord::Indep(x.clone()))
        .chain(ctx_dep.iter().map(|u| Coord::Jet(JetVar::base(u))))
        .collect();
    let jac_rows = |fs: &[Expr]| -> Vec<Vec<Expr>> {
        fs.iter()
            .map(|f| coords.iter().map(|c| diff(f, c)).collect())
            .collect()
    };
    let x_jac = jac_rows(&cand.invariants);
    let ratio = min_sv_ratio(&x_jac, &coords, n, cfg)?;
    if ratio <= RANK_TOL {
        return Err(LinError::FunctionalDependence(ratio));
    }
    let mut full = x_jac;
    full.extend(jac_rows(&cand.psi));
    let ratio = min_sv_ratio(&full, &coords, n + m, cfg)?;
    if ratio <= RANK_TOL {
        return Err(LinError::MappingNotInvertible(ratio));
    }
    Ok(Mapping {
        z: cand
            .z_names
            .iter()
            .cloned()
            .zip(cand.invariants.iter().cloned())
            .collect(),
        w: cand
            .w_names
            .iter()
            .cloned()
            .zip(cand.psi.iter().cloned())
            .collect(),
    })
}

/// Relative residual of an expression at a fully bound point: the value
/// scaled by the magnitude of the largest contributing term.
fn rel_residual(e: &Expr, p: &JetPoint) -> Result<f64, EvalError> {
    let total = eval_at(e, p)?;
    let mut scale: f64 = 1.0;
    for t in expand(e).terms() {
        scale = scale.max(eval_at(&t, p)?.abs());
    }
    Ok(total.abs() / scale)
}

/// Pointwise pullback check that the mapping sends the system to the target
/// linear operator. At each sampled point we pick first-order solution data
/// of the target through the image point, translate it back to jets of u
/// via the chain rule, and demand the original system vanish on the result.
/// Only first-order systems and targets are handled.
pub fn verify_mapped_linearity(
    sys: &SystemDef,
    mapping: &Mapping,
    target: &LinearOperator,
    points: usize,
    cfg: &OracleConfig,
) -> Result<Verdict, LinError> {
    let order = sys
        .equations
        .iter()
        .map(|g| g.max_jet_order())
        .max()
        .unwrap_or(0)
        .max(target.max_order());
    if order > 1 {
        return Err(LinError::HigherOrder(order));
    }
    let xs = &sys.ctx.indep;
    let us = &sys.ctx.dep;
    let (n, m) = (xs.len(), us.len());
    if mapping.z.len() != n || mapping.w.len() != m || target.cols() != m {
        return Err(LinError::Shape("mapping does not match system".into()));
    }
    let base: Vec<Coord> = xs
        .iter()
        .map(|x| Coord::Indep(x.clone()))
        .chain(us.iter().map(|u| Coord::Jet(JetVar::base(u))))
        .collect();
    let jet = |nu: usize, i: usize| {
        Coord::Jet(JetVar::new(
            &us[nu],
            crate::jetexpr::MultiIndex::new(vec![xs[i].clone()]),
        ))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6d61_7070);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut attempts = 0;
    while done < points {
        attempts += 1;
        if attempts > points * cfg.max_retries {
            return Err(LinError::Sampling(EvalError::NonFinite));
        }
        let mut p = sample_jetpoint(&base, &mut rng, cfg);
        // Image point.
        let mut zvals = Vec::with_capacity(n);
        let mut wvals = Vec::with_capacity(m);
        let mut img_ok = true;
        for (_, e) in &mapping.z {
            match eval_at(e, &p) {
                Ok(v) => zvals.push(v),
                Err(_) => {
                    img_ok = false;
                    break;
                }
            }
        }
        for (_, e) in &mapping.w {
            match eval_at(e, &p) {
                Ok(v) => wvals.push(v),
                Err(_) => {
                    img_ok = false;
                    break;
                }
            }
        }
        if !img_ok {
            continue;
        }
        let mut zp = JetPoint::new(cfg.seed);
        for ((zn, _), v) in mapping.z.iter().zip(&zvals) {
            zp.set(Coord::Indep(zn.clone()), *v);
        }
        // Target constraints at the image point: rows over the m·n entries
        // of W[γ][j] = ∂w^γ/∂z_j, inhomogeneity from order-0 terms.
        let mut cmat = DMatrix::zeros(target.rows(), m * n);
        let mut crhs = nalgebra::DVector::zeros(target.rows());
        let mut eval_ok = true;
        'rows: for (a, row) in target.entries.iter().enumerate() {
            for (gamma, entry) in row.iter().enumerate() {
                for (c, jidx) in entry {
                    let cv = match eval_at(c, &zp) {
                        Ok(v) => v,
                        Err(_) => {
                            eval_ok = false;
                            break 'rows;
                        }
                    };
                    if jidx.is_empty() {
                        crhs[a] -= cv * wvals[gamma];
                    } else {
                        let j = mapping
                            .z
                            .iter()
                            .position(|(zn, _)| zn == &jidx.vars()[0])
                            .expect("target index names a z coordinate");
                        cmat[(a, gamma * n + j)] += cv;
                    }
                }
            }
        }
        if !eval_ok {
            continue;
        }
        // Particular solution plus a random kernel direction: generic
        // first-order solution data of the target through the image point.
        let svd = cmat.clone().svd(true, true);
        let wpart = svd.solve(&crhs, 1e-12).map_err(|_| LinError::NotResolvable)?;
        // Random kernel direction of the constraint matrix: a random vector
        // minus its least-squares preimage under C, projected back.
        let rvec = nalgebra::DVector::from_fn(m * n, |_, _| rng.gen_range(-1.0..1.0_f64));
        let proj = svd
            .solve(&(&cmat * &rvec), 1e-12)
            .map_err(|_| LinError::NotResolvable)?;
        let wfull = wpart + (rvec - proj);
        // Chain rule: solve for the first jets of u.
        // Σ_ν [ψ^γ_{u^ν} − Σ_j W_{γj} X_{j,u^ν}] u^ν_i = Σ_j W_{γj} X_{j,x_i} − ψ^γ_{x_i}.
        let mut amat = DMatrix::zeros(m * n, m * n);
        let mut brhs = nalgebra::DVector::zeros(m * n);
        for gamma in 0..m {
            for i in 0..n {
                let r = gamma * n + i;
                for nu in 0..m {
                    let mut coef =
                        eval_at(&diff(&mapping.w[gamma].1, &Coord::Jet(JetVar::base(&us[nu]))), &p)
                            .map_err(LinError::Sampling)?;
                    for j in 0..n {
                        let dx = eval_at(
                            &diff(&mapping.z[j].1, &Coord::Jet(JetVar::base(&us[nu]))),
                            &p,
                        )
                        .map_err(LinError::Sampling)?;
                        coef -= wfull[gamma * n + j] * dx;
                    }
                    amat[(r, nu * n + i)] = coef;
                }
                let mut rhs = -eval_at(
                    &diff(&mapping.w[gamma].1, &Coord::Indep(xs[i].clone())),
                    &p,
                )
                .map_err(LinError::Sampling)?;
                for j in 0..n {
                    let dx = eval_at(&diff(&mapping.z[j].1, &Coord::Indep(xs[i].clone())), &p)
                        .map_err(LinError::Sampling)?;
                    rhs += wfull[gamma * n + j] * dx;
                }
                brhs[r] = rhs;
            }
        }
        let jets = amat
            .lu()
            .solve(&brhs)
            .ok_or(LinError::NotResolvable)?;
        for nu in 0..m {
            for i in 0..n {
                p.set(jet(nu, i), jets[nu * n + i]);
            }
        }
        let mut point_ok = true;
        for g in &sys.equations {
            match rel_residual(g, &p) {
                Ok(r) => worst = worst.max(r),
                Err(_) => {
                    point_ok = false;
                    break;
                }
            }
        }
        if point_ok {
            done += 1;
        }
    }
    Ok(Verdict {
        pass: worst < PULLBACK_TOL,
        max_rel_residual: worst,
    })
}

/// The multiplier counterpart: for each concrete solution F of the adjoint
/// target L*F = 0, the set Λ^σ = Σ_ρ A[ρ][σ]·F^ρ(X) must be a verified
/// multiplier set of the system.
pub fn verify_multiplier_form(
    sys: &SystemDef,
    a: &[Vec<Expr>],
    cand: &LinearizationCandidate,
    lstar: &LinearOperator,
    samples: &[Vec<Expr>],
    cfg: &OracleConfig,
) -> Result<Verdict, LinError> {
    check_samples(lstar, samples, cfg)?;
    let m = sys.equations.len();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for f in samples {
        let fx: Vec<Expr> = f.iter().map(|e| cand.pull_back(e)).collect();
        let exprs: Vec<Expr> = (0..m)
            .map(|sigma| {
                Expr::sum(
                    fx.iter()
                        .enumerate()
                        .map(|(rho, f)| a[rho][sigma].mul(f))
                        .collect(),
                )
            })
            .collect();
        let verdict = dcm::verify_multipliers(sys, &MultiplierSet { exprs }, cfg)?;
        pass &= verdict.pass;
        for (_, v) in verdict.residuals {
            worst = worst.max(v.max_rel_residual);
        }
    }
    Ok(Verdict {
        pass,
        max_rel_residual: worst,
    })
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for slot in 0..k {
            let mut q = p.clone();
            q.insert(slot, k - 1);
            out.push(q);
        }
    }
    out
}

fn rows_proportional(
    a: &[Vec<(Expr, crate::jetexpr::MultiIndex)>],
    b: &[Vec<(Expr, crate::jetexpr::MultiIndex)>],
    cfg: &OracleConfig,
) -> Result<bool, LinError> {
    // Flatten a whole operator row into aligned coefficient vectors over the
    // union of (column, index) keys, then test joint proportionality.
    let mut keys: Vec<(usize, crate::jetexpr::MultiIndex)> = Vec::new();
    for (col, entry) in a.iter().enumerate() {
        for (_, j) in entry {
            keys.push((col, j.clone()));
        }
    }
    for (col, entry) in b.iter().enumerate() {
        for (_, j) in entry {
            keys.push((col, j.clone()));
        }
    }
    keys.sort();
    keys.dedup();
    let pick = |row: &[Vec<(Expr, crate::jetexpr::MultiIndex)>], key: &(usize, crate::jetexpr::MultiIndex)| {
        row[key.0]
            .iter()
            .find(|(_, j)| *j == key.1)
            .map(|(c, _)| c.clone())
            .unwrap_or_else(Expr::zero)
    };
    let va: Vec<Expr> = keys.iter().map(|k| pick(a, k)).collect();
    let vb: Vec<Expr> = keys.iter().map(|k| pick(b, k)).collect();
    match oracle::is_proportional(&va, &vb, cfg) {
        Ok(v) => Ok(v.proportional),
        Err(OracleError::Degenerate) => Ok(true),
        Err(e) => Err(e.into()),
    }
}

/// Whether the formal adjoint of the symmetry-side operator equals the
/// multiplier-side operator, up to reordering and rescaling rows and a
/// consistent relabeling of the unknowns (columns).
pub fn adjoint_pairing_check(
    symmetry_system: &LinearOperator,
    multiplier_system: &LinearOperator,
    cfg: &OracleConfig,
) -> Result<bool, LinError> {
    let adj = adjoint(symmetry_system);
    if adj.rows() != multiplier_system.rows() || adj.cols() != multiplier_system.cols() {
        return Ok(false);
    }
    for cperm in permutations(adj.cols()) {
        let relabeled: Vec<Vec<_>> = adj
            .entries
            .iter()
            .map(|row| cperm.iter().map(|c| row[*c].clone()).collect())
            .collect();
        'rows: for rperm in permutations(adj.rows()) {
            for (r, pr) in rperm.iter().enumerate() {
                if !rows_proportional(&relabeled[r], &multiplier_system.entries[*pr], cfg)? {
                    continue 'rows;
                }
            }
            return Ok(true);
        }
    }
    Ok(false)
}
