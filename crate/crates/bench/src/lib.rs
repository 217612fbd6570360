//! Fixtures shared by the benchmarks.

use certbound::{Alphabet, Backend, FxScale, FxVector, MemoryBudget, Problem, TransformPlan};

/// A built plan and two deterministic input vectors for it.
pub struct Fixture {
    pub plan: TransformPlan,
    pub prev: FxVector,
    pub prev2: FxVector,
}

impl Fixture {
    pub fn new(problem: Problem, k: u32, h: u32, backend: Backend) -> Fixture {
        let alphabet = Alphabet::new(k, h).expect("valid alphabet");
        let plan = TransformPlan::build(&alphabet, problem, backend, MemoryBudget::unlimited()).expect("plan fits");
        let len = plan.classes() as usize;
        Fixture {
            prev: filled(len, 7919),
            prev2: filled(len, 104_729),
            plan,
        }
    }
}

/// Values spread over a few units of the default scale.
pub fn filled(len: usize, stride: i64) -> FxVector {
    let p = FxScale::DEFAULT_P;
    FxVector::new(
        FxScale::default(),
        (0..len as i64).map(|i| (i * stride) % (3 * p)).collect(),
    )
}
