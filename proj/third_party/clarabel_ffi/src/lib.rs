//! Minimal C ABI over the Clarabel interior-point solver.
//!
//! Problem form: minimize 1/2 x'Px + q'x  subject to  Ax + s = b, s in K,
//! with K a product of zero, nonnegative and second-order cones listed in
//! order. Matrices are CSC; P holds the upper triangle only.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use std::slice;

pub const CONE_ZERO: u32 = 0;
pub const CONE_NONNEG: u32 = 1;
pub const CONE_SOC: u32 = 2;

#[repr(C)]
pub struct ClarabelFfiCsc {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: *const usize,
    pub rowval: *const usize,
    pub nzval: *const f64,
}

#[repr(C)]
pub struct ClarabelFfiSettings {
    pub max_iter: u32,
    pub time_limit: f64,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_feas: f64,
    pub verbose: bool,
}

#[repr(C)]
pub struct ClarabelFfiResult {
    /// 0 solved, 1 almost solved, 2 primal infeasible, 3 dual infeasible,
    /// 4 max iterations, 5 max time, 6 numerical error, 7 other.
    pub status: u32,
    pub obj_val: f64,
    pub solve_time: f64,
    pub iterations: u32,
    pub r_prim: f64,
    pub r_dual: f64,
}

unsafe fn csc_from(m: &ClarabelFfiCsc) -> CscMatrix<f64> {
    let colptr = slice::from_raw_parts(m.colptr, m.ncols + 1).to_vec();
    let nnz = colptr[m.ncols];
    let rowval = if nnz == 0 { Vec::new() } else { slice::from_raw_parts(m.rowval, nnz).to_vec() };
    let nzval = if nnz == 0 { Vec::new() } else { slice::from_raw_parts(m.nzval, nnz).to_vec() };
    CscMatrix::new(m.nrows, m.ncols, colptr, rowval, nzval)
}

/// Solves one conic program. `x_out` must hold `a.ncols` doubles.
/// Returns 0 when the call ran (see `result.status`), nonzero on bad input.
///
/// # Safety
/// All pointers must reference arrays of the sizes implied by the dimensions.
#[no_mangle]
pub unsafe extern "C" fn clarabel_ffi_solve(
    p: *const ClarabelFfiCsc,
    q: *const f64,
    a: *const ClarabelFfiCsc,
    b: *const f64,
    ncones: usize,
    cone_types: *const u32,
    cone_dims: *const usize,
    settings: *const ClarabelFfiSettings,
    x_out: *mut f64,
    result: *mut ClarabelFfiResult,
) -> i32 {
    if p.is_null() || a.is_null() || settings.is_null() || result.is_null() {
        return 1;
    }
    let (p, a, settings) = (&*p, &*a, &*settings);
    let n = a.ncols;
    let m = a.nrows;
    if p.ncols != n || p.nrows != n {
        return 2;
    }

    let pm = csc_from(p);
    let am = csc_from(a);
    let qv = if n == 0 { Vec::new() } else { slice::from_raw_parts(q, n).to_vec() };
    let bv = if m == 0 { Vec::new() } else { slice::from_raw_parts(b, m).to_vec() };

    let mut cones = Vec::with_capacity(ncones);
    let mut total = 0usize;
    for k in 0..ncones {
        let dim = *cone_dims.add(k);
        total += dim;
        cones.push(match *cone_types.add(k) {
            CONE_ZERO => SupportedConeT::ZeroConeT(dim),
            CONE_NONNEG => SupportedConeT::NonnegativeConeT(dim),
            CONE_SOC => SupportedConeT::SecondOrderConeT(dim),
            _ => return 3,
        });
    }
    if total != m {
        return 4;
    }

    let built = DefaultSettingsBuilder::default()
        .max_iter(settings.max_iter)
        .time_limit(settings.time_limit)
        .tol_gap_abs(settings.tol_gap_abs)
        .tol_gap_rel(settings.tol_gap_rel)
        .tol_feas(settings.tol_feas)
        .verbose(settings.verbose)
        .build();
    let built = match built {
        Ok(s) => s,
        Err(_) => return 5,
    };

    let mut solver = DefaultSolver::new(&pm, &qv, &am, &bv, &cones, built);
    solver.solve();

    let sol = &solver.solution;
    if n > 0 {
        slice::from_raw_parts_mut(x_out, n).copy_from_slice(&sol.x);
    }
    let r = &mut *result;
    r.status = match sol.status {
        SolverStatus::Solved => 0,
        SolverStatus::AlmostSolved => 1,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => 2,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => 3,
        SolverStatus::MaxIterations => 4,
        SolverStatus::MaxTime => 5,
        SolverStatus::NumericalError | SolverStatus::InsufficientProgress => 6,
        _ => 7,
    };
    r.obj_val = sol.obj_val;
    r.solve_time = sol.solve_time;
    r.iterations = sol.iterations;
    r.r_prim = sol.r_prim;
    r.r_dual = sol.r_dual;
    0
}
