//! Runs the iteration, proposes a growth rate and assembles a certificate.

use std::time::Instant;

use rayon::prelude::*;

use crate::certify::{verify, Bound, Certificate, Verdict};
use crate::transform::{estimate_plan_bytes, estimate_vector_bytes};
use crate::{Alphabet, Backend, Error, FxScale, FxVector, MemoryBudget, Problem, Result, TransformPlan};

/// Everything needed to produce one bound.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Problem,
    pub alphabet: Alphabet,
    pub scale: FxScale,
    /// Index of the last computed vector; the run applies the transformation
    /// `iterations - 1` times starting from two zero vectors.
    pub iterations: u32,
    /// `None` picks a layout that fits the budget.
    pub backend: Option<Backend>,
    /// Worker threads; 0 uses rayon's default.
    pub threads: usize,
    pub budget: MemoryBudget,
    /// Print one line per iteration to stderr.
    pub progress: bool,
}

impl RunConfig {
    pub fn new(problem: Problem, alphabet: Alphabet, iterations: u32) -> Self {
        RunConfig {
            problem,
            alphabet,
            scale: FxScale::default(),
            iterations,
            backend: None,
            threads: 0,
            budget: MemoryBudget::default(),
            progress: false,
        }
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = Some(backend);
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_scale(mut self, scale: FxScale) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_budget(mut self, budget: MemoryBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_progress(mut self, progress: bool) -> Self {
        self.progress = progress;
        self
    }

    pub fn resolved_backend(&self) -> Backend {
        self.backend
            .unwrap_or_else(|| Backend::auto(&self.alphabet, self.budget))
    }

    /// Bytes for the plan plus three iteration vectors.
    pub fn estimated_bytes(&self) -> u64 {
        let vectors = estimate_vector_bytes(&self.alphabet).saturating_mul(3);
        vectors.saturating_add(estimate_plan_bytes(&self.alphabet, self.resolved_backend()))
    }

    fn validate(&self) -> Result<()> {
        if self.iterations < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 iterations, got {}",
                self.iterations
            )));
        }
        self.budget.check("run", self.estimated_bytes())
    }
}

/// Smallest and largest per-class increment `w_n - w_{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaRange {
    pub index: u32,
    pub min_num: i64,
    pub max_num: i64,
}

/// The last two vectors of a run.
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub last: FxVector,
    pub prev: FxVector,
    /// Every index when progress is on, otherwise only the final one.
    pub deltas: Vec<DeltaRange>,
}

/// Iterates the transformation up to index `config.iterations`.
pub fn iterate(config: &RunConfig) -> Result<IterationOutcome> {
    config.validate()?;
    with_pool(config.threads, || {
        let plan = TransformPlan::build(
            &config.alphabet,
            config.problem,
            config.resolved_backend(),
            config.budget,
        )?;
        iterate_plan(&plan, config)
    })
}

/// Iterates with a prebuilt plan, inside the caller's thread pool.
pub fn iterate_plan(plan: &TransformPlan, config: &RunConfig) -> Result<IterationOutcome> {
    if plan.alphabet() != &config.alphabet || plan.problem() != config.problem {
        return Err(Error::InvalidConfig("plan does not match the run configuration".into()));
    }
    if config.iterations < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 iterations, got {}",
            config.iterations
        )));
    }
    let len = plan.classes() as usize;
    let start = Instant::now();
    let mut older = FxVector::zeros(config.scale, len);
    let mut prev = FxVector::zeros(config.scale, len);
    let mut out = FxVector::zeros(config.scale, len);
    let mut deltas = Vec::new();
    for index in 2..=config.iterations {
        plan.apply_into(&prev, &older, &mut out)?;
        // a full extra pass, so only taken when someone looks at it
        if config.progress || index == config.iterations {
            let (min_num, max_num) = delta_extremes(&out, &prev);
            deltas.push(DeltaRange {
                index,
                min_num,
                max_num,
            });
        }
        if let (true, Some(d)) = (config.progress, deltas.last()) {
            let (min_num, max_num) = (d.min_num, d.max_num);
            let p = config.scale.p() as f64;
            eprintln!(
                "iter {index:>4}  delta [{:.6}, {:.6}]  {:.1}s  ~{} MiB",
                min_num as f64 / p,
                max_num as f64 / p,
                start.elapsed().as_secs_f64(),
                config.estimated_bytes() >> 20
            );
        }
        std::mem::swap(&mut older, &mut prev);
        std::mem::swap(&mut prev, &mut out);
    }
    Ok(IterationOutcome {
        last: prev,
        prev: older,
        deltas,
    })
}

fn delta_extremes(last: &FxVector, prev: &FxVector) -> (i64, i64) {
    last.values()
        .par_iter()
        .zip(prev.values().par_iter())
        .map(|(a, b)| {
            let d = a - b;
            (d, d)
        })
        .reduce(|| (i64::MAX, i64::MIN), |x, y| (x.0.min(y.0), x.1.max(y.1)))
}

/// Proposed growth rate numerator and the increments it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateProposal {
    pub r_num: i64,
    pub delta_min_num: i64,
    pub delta_max_num: i64,
}

/// Edit distance takes the largest increment plus slack, LCS the smallest
/// minus slack.
pub fn propose_rate(last: &FxVector, prev: &FxVector, problem: Problem) -> Result<RateProposal> {
    if last.len() != prev.len() || last.is_empty() {
        return Err(Error::InvalidInput("vectors must be non-empty and equally long".into()));
    }
    if last.scale() != prev.scale() {
        return Err(Error::InvalidInput("vectors use different scales".into()));
    }
    let (delta_min_num, delta_max_num) = delta_extremes(last, prev);
    let eps = last.scale().eps_num();
    let r_num = match problem {
        Problem::Edit => delta_max_num.checked_add(eps),
        Problem::Lcs => delta_min_num.checked_sub(eps),
    }
    .ok_or_else(|| Error::Overflow("rate numerator".into()))?;
    Ok(RateProposal {
        r_num,
        delta_min_num,
        delta_max_num,
    })
}

/// A verified certificate and the run that produced it.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub certificate: Certificate,
    pub rate: RateProposal,
    pub backend: Backend,
    pub deltas: Vec<DeltaRange>,
}

impl BoundReport {
    pub fn bound(&self) -> Bound {
        self.certificate.bound()
    }
}

/// Iterates, proposes a rate and verifies the resulting certificate.
/// Fails with [`Error::NoCertificate`] if the verifier rejects it.
pub fn compute_bound(config: &RunConfig) -> Result<BoundReport> {
    config.validate()?;
    let backend = config.resolved_backend();
    with_pool(config.threads, || {
        let outcome = {
            let plan = TransformPlan::build(&config.alphabet, config.problem, backend, config.budget)?;
            iterate_plan(&plan, config)?
        };
        let rate = propose_rate(&outcome.last, &outcome.prev, config.problem)?;
        let IterationOutcome { last, prev, deltas } = outcome;
        drop(prev);
        let certificate = Certificate::new(
            config.problem,
            &config.alphabet,
            config.scale.p(),
            rate.r_num,
            last.into_values(),
        );
        match verify(&certificate)? {
            Verdict::Valid => Ok(BoundReport {
                certificate,
                rate,
                backend,
                deltas,
            }),
            Verdict::Invalid { witness } => Err(Error::NoCertificate {
                witness,
                r_num: rate.r_num,
            }),
        }
    })
}

fn with_pool<T: Send>(threads: usize, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(job)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(problem: Problem, iterations: u32) -> RunConfig {
        RunConfig::new(problem, Alphabet::new(2, 1).unwrap(), iterations).with_budget(MemoryBudget::unlimited())
    }

    #[test]
    fn rate_examples() {
        let s = FxScale::default();
        let last = FxVector::new(s, vec![50_000, 150_000]);
        let prev = FxVector::new(s, vec![0, 100_000]);
        let r = propose_rate(&last, &prev, Problem::Edit).unwrap();
        assert_eq!(r.r_num, 50_005);
        let last = FxVector::new(s, vec![150_000, 75_000]);
        let prev = FxVector::new(s, vec![100_000, 50_000]);
        let r = propose_rate(&last, &prev, Problem::Lcs).unwrap();
        assert_eq!((r.r_num, r.delta_min_num, r.delta_max_num), (24_995, 25_000, 50_000));
    }

    #[test]
    fn tiny_runs_certify() {
        let edit = compute_bound(&small(Problem::Edit, 4)).unwrap();
        assert_eq!(edit.certificate.values, vec![50_000, 150_000]);
        assert_eq!(edit.bound().decimal(), "1.0001");
        let lcs = compute_bound(&small(Problem::Lcs, 4)).unwrap();
        assert_eq!(lcs.bound().decimal(), "0.4999");
    }

    #[test]
    fn iterations_are_final_index() {
        let out = iterate(&small(Problem::Edit, 2)).unwrap();
        assert_eq!(out.last.values(), &[0, 100_000]);
        assert_eq!(out.prev.values(), &[0, 0]);
        assert_eq!(out.deltas.len(), 1);
        assert!(iterate(&small(Problem::Edit, 1)).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = small(Problem::Edit, 3).with_budget(MemoryBudget::from_bytes(10));
        assert!(matches!(compute_bound(&cfg), Err(Error::Capacity { .. })));
    }
}
