use serde::{Deserialize, Serialize};

/// One entry of a ranked list: hits plus the tie-break key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub artifact_id: String,
    /// Normalized name, used to break hit ties.
    pub name_key: String,
    pub hits: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("fraction must be in (0, 1], got {0}")]
pub struct InvalidFraction(pub f64);

/// Number of items selected from a list of `n` at `fraction`.
pub fn selection_size(n: usize, fraction: f64) -> Result<usize, InvalidFraction> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(InvalidFraction(fraction));
    }
    // 0.3 * 10 evaluates to 3.0000000000000004; trim float noise before ceil
    let raw = fraction * n as f64;
    let rounded = raw.round();
    let k = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    Ok((k as usize).min(n))
}

/// Sorts by (hits, name_key, artifact_id) ascending and returns the first
/// `ceil(fraction * n)` entries.
pub fn select_bottom_fraction(
    candidates: &[RankedCandidate],
    fraction: f64,
) -> Result<Vec<RankedCandidate>, InvalidFraction> {
    let k = selection_size(candidates.len(), fraction)?;
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| {
        (a.hits, &a.name_key, &a.artifact_id).cmp(&(b.hits, &b.name_key, &b.artifact_id))
    });
    sorted.truncate(k);
    Ok(sorted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cand(name: &str, hits: u64) -> RankedCandidate {
        RankedCandidate {
            artifact_id: format!("id-{name}"),
            name_key: name.into(),
            hits,
        }
    }

    #[test]
    fn ceiling_sizes() {
        assert_eq!(selection_size(10, 0.3).unwrap(), 3);
        assert_eq!(selection_size(7, 0.3).unwrap(), 3);
        assert_eq!(selection_size(1, 0.3).unwrap(), 1);
        assert_eq!(selection_size(0, 0.3).unwrap(), 0);
        assert_eq!(selection_size(20, 0.3).unwrap(), 6);
        assert_eq!(selection_size(5, 1.0).unwrap(), 5);
        assert!(selection_size(5, 0.0).is_err());
        assert!(selection_size(5, 1.5).is_err());
        assert!(selection_size(5, f64::NAN).is_err());
    }

    #[test]
    fn lower_hits_rank_first() {
        let picked = select_bottom_fraction(&[cand("b", 1_000_000), cand("a", 10)], 0.3).unwrap();
        assert_eq!(picked, [cand("a", 10)]);
    }

    #[test]
    fn ties_break_by_name() {
        let picked = select_bottom_fraction(&[cand("zeta", 5), cand("alpha", 5), cand("mid", 9)], 0.3).unwrap();
        assert_eq!(picked[0].name_key, "alpha");
    }

    fn arb_list() -> impl Strategy<Value = Vec<RankedCandidate>> {
        prop::collection::vec((0u64..50, "[a-e]{1,3}"), 0..60).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (hits, name))| RankedCandidate {
                    artifact_id: format!("a{i:03}"),
                    name_key: name,
                    hits,
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn size_law(list in arb_list()) {
            let picked = select_bottom_fraction(&list, 0.3).unwrap();
            let expected = (list.len() * 3).div_ceil(10);
            prop_assert_eq!(picked.len(), expected);
        }

        #[test]
        fn permutation_invariant(list in arb_list(), seed in any::<u64>()) {
            let mut shuffled = list.clone();
            let n = shuffled.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(select_bottom_fraction(&list, 0.3).unwrap(), select_bottom_fraction(&shuffled, 0.3).unwrap());
        }

        #[test]
        fn boundary_dominance(list in arb_list()) {
            let picked = select_bottom_fraction(&list, 0.3).unwrap();
            let ids: std::collections::HashSet<_> = picked.iter().map(|c| &c.artifact_id).collect();
            let max_in = picked.iter().map(|c| c.hits).max();
            let min_out = list.iter().filter(|c| !ids.contains(&c.artifact_id)).map(|c| c.hits).min();
            if let (Some(a), Some(b)) = (max_in, min_out) {
                prop_assert!(a <= b);
            }
        }
    }
}
