use similar::{capture_diff_slices, Algorithm, DiffOp};

/// Lines removed from the parent and lines introduced in the child.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LineDiff {
    pub added: Vec<String>,
    pub deleted: Vec<String>,
}

/// Minimal line-level edit script between two texts (Myers, LCS semantics).
pub fn compute_diff(parent_text: &str, child_text: &str) -> LineDiff {
    let old: Vec<&str> = parent_text.lines().collect();
    let new: Vec<&str> = child_text.lines().collect();
    let mut out = LineDiff::default();
    for op in capture_diff_slices(Algorithm::Myers, &old, &new) {
        match op {
            DiffOp::Equal { .. } => {}
            DiffOp::Delete { old_index, old_len, .. } => {
                out.deleted
                    .extend(old[old_index..old_index + old_len].iter().map(|s| s.to_string()));
            }
            DiffOp::Insert { new_index, new_len, .. } => {
                out.added
                    .extend(new[new_index..new_index + new_len].iter().map(|s| s.to_string()));
            }
            DiffOp::Replace {
                old_index,
                old_len,
                new_index,
                new_len,
            } => {
                out.deleted
                    .extend(old[old_index..old_index + old_len].iter().map(|s| s.to_string()));
                out.added
                    .extend(new[new_index..new_index + new_len].iter().map(|s| s.to_string()));
            }
        }
    }
    out
}
