//! Experiment driver: generate a known-answer problem, run a solver and
//! record true errors step by step.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::accel::{modified_ab_run_with, AccelConfig};
use crate::msqrt::{
    q_step, relative_change, sqrtm_ab_observed, SqrtError, SqrtProblem, Stop, StopRule,
};
use crate::numerics::{smallest_right_singular_subspace, subspace_distance, ComplexMatrix, C64};
use crate::pencil::{ab_run_with, AbIterate, PencilError, RunOptions, Status};

use super::problem::{make_known_sqrt_problem, make_pencil_problem, ProblemSpec};
use super::trace::{ConvergenceTrace, TraceRecord};
use super::LabError;

/// Relative errors at or below this many ulps are treated as saturated and
/// excluded from order estimates.
const SATURATION_ULPS: f64 = 1e2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Pencil,
    Sqrt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub order: usize,
    pub gamma: f64,
    pub tol: f64,
    pub kmax: usize,
    /// Run the unaccelerated chain instead (`order` is then ignored).
    pub plain: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            order: 2,
            gamma: 1.0,
            tol: 1e-12,
            kmax: 100,
            plain: false,
        }
    }
}

impl SolverParams {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Runs one experiment. Generator and parameter problems are errors;
/// solver failures end the trace early and are recorded in its status.
pub fn run_experiment(
    kind: ExperimentKind,
    spec: &ProblemSpec,
    params: &SolverParams,
) -> Result<ConvergenceTrace, LabError> {
    let mut trace = match kind {
        ExperimentKind::Sqrt => run_sqrt(spec, params)?,
        ExperimentKind::Pencil => run_pencil(spec, params)?,
    };
    trace.fill_orders(SATURATION_ULPS * f64::EPSILON);
    Ok(trace)
}

fn run_sqrt(spec: &ProblemSpec, params: &SolverParams) -> Result<ConvergenceTrace, LabError> {
    let known = make_known_sqrt_problem(spec)?;
    let x_norm = known.x_true.norm_fro();
    let s_norm = known.s.norm_fro();
    let start = Instant::now();
    let mut trace = ConvergenceTrace::new();
    let record = |trace: &mut ConvergenceTrace, k: usize, q: &ComplexMatrix| {
        let err = rel((q - &known.x_true).norm_fro(), x_norm);
        let res = rel((&(q * q) - &known.s).norm_fro(), s_norm);
        trace.push(k, err, res, start.elapsed().as_secs_f64());
    };

    let outcome = if params.plain {
        plain_sqrt_chain(&known.s, params, |k, q| record(&mut trace, k, q))
    } else {
        let prob = SqrtProblem::new(known.s.clone())
            .gamma(params.gamma)
            .order(params.order)
            .tol(params.tol)
            .kmax(params.kmax);
        prob.validate()?;
        sqrtm_ab_observed(&prob, |k, q| record(&mut trace, k, q)).map(|r| r.status)
    };
    match outcome {
        Ok(status) => trace.status = Some(status),
        Err(e @ SqrtError::Breakdown { .. }) => {
            trace.status = Some(Status::Breakdown);
            trace.failure = Some(e.to_string());
        }
        Err(SqrtError::InvalidProblem(msg)) => return Err(LabError::InvalidParams(msg)),
        Err(e) => {
            trace.status = Some(Status::Breakdown);
            trace.failure = Some(e.to_string());
        }
    }
    Ok(trace)
}

/// Plain recursion `Q_{k+1} = (γQ_k + S)(γI + Q_k)^{-1}` with the same
/// stopping rule as the accelerated solver.
fn plain_sqrt_chain(
    s: &ComplexMatrix,
    params: &SolverParams,
    mut observe: impl FnMut(usize, &ComplexMatrix),
) -> Result<Status, SqrtError> {
    if !(params.gamma > 0.0) || !(params.tol > 0.0) || params.kmax < 2 {
        return Err(SqrtError::InvalidProblem(
            "need gamma > 0, tol > 0, kmax >= 2".into(),
        ));
    }
    let g = ComplexMatrix::scalar(s.rows(), C64::new(params.gamma, 0.0));
    let mut q = g.clone();
    let mut stop = StopRule::new(params.tol);
    observe(1, &q);
    for k in 2..=params.kmax {
        let next = q_step(&q, s, &g).map_err(|e| match e {
            SqrtError::SingularSum => SqrtError::Breakdown { outer: k, inner: 1 },
            other => other,
        })?;
        observe(k, &next);
        let change = relative_change(&next, &q);
        q = next;
        if stop.check(change) != Stop::Continue {
            return Ok(Status::Converged);
        }
    }
    Ok(Status::MaxIterations)
}

fn run_pencil(spec: &ProblemSpec, params: &SolverParams) -> Result<ConvergenceTrace, LabError> {
    let prob = make_pencil_problem(spec)?;
    let m = prob.u_true.dim();
    let start = Instant::now();
    let mut trace = ConvergenceTrace::new();
    let u = prob.u_true.matrix().clone();
    let mut observe = |k: usize, it: &AbIterate| {
        let est = smallest_right_singular_subspace(&it.a, m);
        let err = subspace_distance(&prob.u_true, &est).unwrap_or(f64::NAN);
        let res = rel((&it.a * &u).norm_fro(), (&it.b * &u).norm_fro());
        trace.push(k, err, res, start.elapsed().as_secs_f64());
    };
    let opts = RunOptions::new(params.tol, params.kmax).with_expected_dim(Some(m));
    let outcome = if params.plain {
        ab_run_with(&prob.pencil, &opts, &mut observe)
    } else {
        let cfg = AccelConfig::new(params.order, params.tol, params.kmax)
            .map_err(|e| LabError::InvalidParams(e.to_string()))?
            .with_expected_dim(Some(m));
        modified_ab_run_with(&prob.pencil, &cfg, &mut observe)
    };
    match outcome {
        Ok(res) => trace.status = Some(res.status),
        Err(PencilError::InvalidConfig(msg)) => return Err(LabError::InvalidParams(msg)),
        Err(e) => {
            trace.status = Some(Status::Breakdown);
            trace.failure = Some(e.to_string());
        }
    }
    Ok(trace)
}

#[derive(Serialize)]
struct JsonHeader<'a> {
    kind: ExperimentKind,
    spec: &'a ProblemSpec,
    params: &'a SolverParams,
    status: Option<Status>,
    failure: Option<&'a str>,
}

#[derive(Serialize)]
struct JsonTrace<'a> {
    header: JsonHeader<'a>,
    records: &'a [TraceRecord],
}

/// JSON form of a trace: a header with spec, parameters and status, then
/// one record per step.
pub fn write_trace_json<W: Write>(
    out: W,
    kind: ExperimentKind,
    spec: &ProblemSpec,
    params: &SolverParams,
    trace: &ConvergenceTrace,
) -> Result<(), LabError> {
    let doc = JsonTrace {
        header: JsonHeader {
            kind,
            spec,
            params,
            status: trace.status,
            failure: trace.failure.as_deref(),
        },
        records: &trace.records,
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}
