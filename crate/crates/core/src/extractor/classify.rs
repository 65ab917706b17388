use alloc::collections::BTreeSet;
use alloc::format;

use super::{ClassId, ExtractorError, SemanticPrototypes};

/// Nearest prototype among `allowed`: returns the class minimising
/// `‖s_c − s‖²` and that squared distance. Ties go to the lowest class id.
pub fn classify(
    s: &[f64],
    prototypes: &SemanticPrototypes,
    allowed: &BTreeSet<ClassId>,
) -> Result<(ClassId, f64), ExtractorError> {
    if s.len() != prototypes.dim() {
        return Err(ExtractorError::DimensionMismatch(format!(
            "semantic vector has length {}, prototypes have dimension {}",
            s.len(),
            prototypes.dim()
        )));
    }
    let vectors = prototypes.vectors();
    let mut best: Option<(ClassId, f64)> = None;
    // BTreeSet iterates in ascending id order, so a strict comparison keeps the lowest id.
    for &c in allowed {
        let j = prototypes
            .position(c)
            .ok_or(ExtractorError::UnknownClass(c))?;
        let d: f64 = (0..vectors.rows())
            .map(|i| {
                let e = vectors[(i, j)] - s[i];
                e * e
            })
            .sum();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((c, d));
        }
    }
    best.ok_or(ExtractorError::EmptyAllowedSet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use alloc::vec;

    fn unit_basis() -> SemanticPrototypes {
        SemanticPrototypes::new(vec![ClassId(3), ClassId(8)], Matrix::identity(2)).unwrap()
    }

    fn all(p: &SemanticPrototypes) -> BTreeSet<ClassId> {
        p.class_ids().iter().copied().collect()
    }

    #[test]
    fn exact_match_has_zero_loss() {
        let p = unit_basis();
        assert_eq!(classify(&[0.0, 1.0], &p, &all(&p)).unwrap(), (ClassId(8), 0.0));
    }

    #[test]
    fn hand_distance() {
        let p = unit_basis();
        let (c, d) = classify(&[0.9, 0.0], &p, &all(&p)).unwrap();
        assert_eq!(c, ClassId(3));
        assert!((d - 0.01).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let p = unit_basis();
        let (c, _) = classify(&[0.5, 0.5], &p, &all(&p)).unwrap();
        assert_eq!(c, ClassId(3));
    }

    #[test]
    fn empty_and_unknown_candidates() {
        let p = unit_basis();
        assert_eq!(
            classify(&[0.0, 0.0], &p, &BTreeSet::new()),
            Err(ExtractorError::EmptyAllowedSet)
        );
        let bad: BTreeSet<_> = [ClassId(4)].into_iter().collect();
        assert_eq!(
            classify(&[0.0, 0.0], &p, &bad),
            Err(ExtractorError::UnknownClass(ClassId(4)))
        );
    }
}
