//! Per-class metrics of generated projects against values derived from the
//! generator's own description, plus range properties of ratio metrics.

mod common;

use proptest::prelude::*;

use common::{check_project, project_strategy};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn metrics_match_description(classes in project_strategy()) {
        check_project(&classes)?;
    }
}
