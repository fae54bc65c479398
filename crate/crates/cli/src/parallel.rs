//! The representation checker spread over worker threads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use repset_core::representation::{check_class, merge, plan, CheckerPolicy, RepresentationError, Violation, ViolationReport};
use repset_core::types::TypeOracle;
use repset_core::RepresentationMap;

/// Same result as `check_representation` for every worker count: classes
/// are handed out dynamically and reassembled in class order.
pub fn check_representation_parallel(
    r: &RepresentationMap,
    p: &CheckerPolicy,
    workers: usize,
) -> Result<ViolationReport, RepresentationError> {
    let plan = plan(r, p)?;
    let n = plan.classes.len();
    let workers = workers.clamp(1, n.max(1));
    let slots: Mutex<Vec<Option<Vec<Violation>>>> = Mutex::new(vec![None; n]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                let mut oracle = TypeOracle::new(r.source(), p.delta);
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let (q, class) = &plan.classes[i];
                    let found = check_class(r, &mut oracle, q, class);
                    slots.lock().expect("no worker panics while holding the lock")[i] = Some(found);
                }
            });
        }
    });
    let per_class = slots.into_inner().expect("workers finished").into_iter().map(|s| s.expect("every class checked")).collect();
    Ok(merge(&plan, per_class))
}
