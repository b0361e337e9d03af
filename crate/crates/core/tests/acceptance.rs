use qftkit::accept::{run_criterion, AcceptOptions, CRITERIA};

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for (id, _) in CRITERIA {
        let report = run_criterion(id, AcceptOptions::default()).unwrap();
        println!("{report}");
        if !report.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
