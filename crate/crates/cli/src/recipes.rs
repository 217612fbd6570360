//! Published bounds the `table` subcommand recomputes.

use certbound::{Backend, FxScale, Problem};
use clap::ValueEnum;

/// A row counts as reproduced when it is at most this much weaker.
pub const SLACK: &str = "0.002";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RecipeName {
    EditBinary,
    EditSmall,
    EditLarge,
    LcsBinary,
    LcsSmall,
    LcsLarge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Row {
    pub problem: Problem,
    pub k: u32,
    pub h: u32,
    pub iterations: u32,
    pub backend: Backend,
    /// Fixed-point denominator; the six-digit binary rows need a finer one.
    pub p: i64,
    /// The published value, as printed.
    pub published: &'static str,
}

const fn row(problem: Problem, k: u32, h: u32, iterations: u32, backend: Backend, published: &'static str) -> Row {
    Row {
        problem,
        k,
        h,
        iterations,
        backend,
        p: FxScale::DEFAULT_P,
        published,
    }
}

const fn fine(k: u32, h: u32, published: &'static str) -> Row {
    Row {
        problem: Edit,
        k,
        h,
        iterations: 150,
        backend: Binary,
        p: 1_000_000,
        published,
    }
}

use Backend::{Binary, Dense, Sparse};
use Problem::{Edit, Lcs};

const EDIT_BINARY: &[Row] = &[
    fine(2, 14, "0.319052"),
    fine(2, 15, "0.317752"),
    fine(2, 16, "0.31658"),
    fine(2, 17, "0.315514"),
];

const EDIT_SMALL: &[Row] = &[
    row(Edit, 3, 9, 100, Dense, "0.47276"),
    row(Edit, 4, 8, 100, Dense, "0.56578"),
    row(Edit, 5, 7, 100, Dense, "0.6325"),
];

const EDIT_LARGE: &[Row] = &[
    row(Edit, 3, 8, 50, Sparse, "0.47626"),
    row(Edit, 4, 6, 50, Sparse, "0.57552"),
    row(Edit, 5, 6, 50, Sparse, "0.63792"),
    row(Edit, 6, 6, 50, Sparse, "0.68424"),
    row(Edit, 7, 6, 50, Sparse, "0.72016"),
    row(Edit, 8, 6, 50, Sparse, "0.74896"),
    row(Edit, 9, 6, 50, Sparse, "0.77264"),
    row(Edit, 10, 6, 50, Sparse, "0.7925"),
    row(Edit, 11, 6, 50, Sparse, "0.8095"),
    row(Edit, 12, 6, 50, Sparse, "0.82432"),
    row(Edit, 13, 6, 50, Sparse, "0.83744"),
    row(Edit, 14, 6, 150, Sparse, "0.84646"),
    row(Edit, 15, 6, 150, Sparse, "0.85608"),
    row(Edit, 16, 6, 150, Sparse, "0.86462"),
    row(Edit, 17, 6, 150, Sparse, "0.87228"),
    row(Edit, 18, 6, 150, Sparse, "0.87916"),
    row(Edit, 19, 6, 150, Sparse, "0.88536"),
    row(Edit, 20, 6, 150, Sparse, "0.89102"),
    row(Edit, 21, 6, 150, Sparse, "0.89614"),
    row(Edit, 22, 6, 150, Sparse, "0.90084"),
    row(Edit, 23, 6, 150, Sparse, "0.90514"),
    row(Edit, 24, 6, 150, Sparse, "0.90912"),
    row(Edit, 25, 6, 150, Sparse, "0.91278"),
    row(Edit, 32, 6, 150, Sparse, "0.93228"),
    row(Edit, 100, 6, 500, Sparse, "0.97946"),
    row(Edit, 1000, 6, 5000, Sparse, "0.9982"),
];

const LCS_BINARY: &[Row] = &[
    row(Lcs, 2, 15, 150, Binary, "0.78806"),
    row(Lcs, 2, 16, 150, Binary, "0.78901"),
    row(Lcs, 2, 17, 150, Binary, "0.789872"),
];

const LCS_SMALL: &[Row] = &[
    row(Lcs, 3, 9, 100, Dense, "0.6821"),
    row(Lcs, 3, 10, 100, Dense, "0.68422"),
    row(Lcs, 4, 7, 50, Dense, "0.61046"),
    row(Lcs, 4, 8, 100, Dense, "0.61422"),
    row(Lcs, 5, 7, 50, Dense, "0.56206"),
];

const LCS_LARGE: &[Row] = &[
    row(Lcs, 3, 8, 50, Sparse, "0.67932"),
    row(Lcs, 4, 7, 50, Sparse, "0.61046"),
    row(Lcs, 5, 6, 50, Sparse, "0.55686"),
    row(Lcs, 6, 6, 50, Sparse, "0.51850"),
    row(Lcs, 7, 6, 50, Sparse, "0.48712"),
    row(Lcs, 8, 6, 50, Sparse, "0.46074"),
    row(Lcs, 9, 6, 50, Sparse, "0.43806"),
    row(Lcs, 10, 6, 50, Sparse, "0.41826"),
    row(Lcs, 11, 6, 50, Sparse, "0.40072"),
    row(Lcs, 12, 6, 50, Sparse, "0.38504"),
    row(Lcs, 13, 6, 50, Sparse, "0.37088"),
    row(Lcs, 14, 6, 50, Sparse, "0.35798"),
    row(Lcs, 15, 6, 50, Sparse, "0.34616"),
    row(Lcs, 16, 6, 50, Sparse, "0.33528"),
    row(Lcs, 17, 6, 50, Sparse, "0.32518"),
    row(Lcs, 18, 6, 50, Sparse, "0.31580"),
    row(Lcs, 19, 6, 50, Sparse, "0.30702"),
    row(Lcs, 20, 6, 50, Sparse, "0.29880"),
    row(Lcs, 21, 6, 50, Sparse, "0.29106"),
    row(Lcs, 22, 6, 50, Sparse, "0.28376"),
    row(Lcs, 23, 6, 50, Sparse, "0.27686"),
    row(Lcs, 24, 6, 50, Sparse, "0.27032"),
    row(Lcs, 25, 6, 50, Sparse, "0.26412"),
    row(Lcs, 50, 6, 50, Sparse, "0.16930"),
    row(Lcs, 100, 6, 50, Sparse, "0.0991"),
    row(Lcs, 1000, 6, 50, Sparse, "0.01164"),
];

pub fn rows(recipe: RecipeName) -> &'static [Row] {
    match recipe {
        RecipeName::EditBinary => EDIT_BINARY,
        RecipeName::EditSmall => EDIT_SMALL,
        RecipeName::EditLarge => EDIT_LARGE,
        RecipeName::LcsBinary => LCS_BINARY,
        RecipeName::LcsSmall => LCS_SMALL,
        RecipeName::LcsLarge => LCS_LARGE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use certbound::certify::parse_decimal;

    #[test]
    fn rows_are_well_formed() {
        for name in RecipeName::value_variants() {
            let rows = rows(*name);
            assert!(!rows.is_empty());
            for r in rows {
                assert!(parse_decimal(r.published).is_ok(), "{r:?}");
                assert!(r.iterations >= 2);
                assert_eq!(r.backend == Backend::Binary, r.k == 2, "{r:?}");
            }
        }
    }
}
