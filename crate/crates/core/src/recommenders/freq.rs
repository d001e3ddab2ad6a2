//! FREQ: rank developers by how many past bug reports they fixed.

use crate::history::HistoryView;
use crate::recommenders::{Method, RankedRecommendation};

/// Score = number of past fixed bug reports; zero-fix developers are
/// omitted; count ties resolve to ascending developer id.
pub fn freq_recommend(report_id: &str, history: &HistoryView) -> RankedRecommendation {
    let scored = history
        .bug_fix_counts()
        .into_iter()
        .map(|(dev, count)| (dev, count as f64))
        .collect();
    RankedRecommendation::from_scores(report_id, Method::Freq, scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::HistoryView;
    use crate::recommenders::tests::{day, Builder};

    #[test]
    fn counts_rank_descending() {
        let corpus = Builder::new()
            .fixed_bug("1", 1, "ada", "one", &["src/a.rs"])
            .fixed_bug("2", 2, "ada", "two", &["src/a.rs"])
            .fixed_bug("3", 3, "ada", "three", &["src/a.rs"])
            .fixed_bug("4", 4, "ben", "four", &["src/b.rs"])
            .build();
        let rec = freq_recommend("q", &HistoryView::at(&corpus, day(10)));
        assert_eq!(
            rec.ranked,
            vec![("ada".to_string(), 3.0), ("ben".to_string(), 1.0)]
        );
    }

    #[test]
    fn equal_counts_fall_back_to_id_order() {
        let corpus = Builder::new()
            .fixed_bug("1", 1, "zara", "one", &["src/a.rs"])
            .fixed_bug("2", 2, "zara", "two", &["src/a.rs"])
            .fixed_bug("3", 3, "abe", "three", &["src/b.rs"])
            .fixed_bug("4", 4, "abe", "four", &["src/b.rs"])
            .build();
        let rec = freq_recommend("q", &HistoryView::at(&corpus, day(10)));
        assert_eq!(rec.developer_ids(), ["abe", "zara"]);
    }

    #[test]
    fn no_history_means_empty_ranking() {
        let corpus = Builder::new()
            .fixed_bug("1", 5, "ada", "later", &["src/a.rs"])
            .build();
        let rec = freq_recommend("q", &HistoryView::at(&corpus, day(2)));
        assert!(rec.is_empty());
    }

    #[test]
    fn non_bug_fixes_do_not_count() {
        let corpus = Builder::new()
            .resolved("1", 1, "ada", "maintenance", "task", &["src/a.rs"])
            .fixed_bug("2", 2, "ben", "bug", &["src/b.rs"])
            .build();
        let rec = freq_recommend("q", &HistoryView::at(&corpus, day(10)));
        assert_eq!(rec.developer_ids(), ["ben"]);
    }

    #[test]
    fn matches_brute_force_count_sort() {
        let corpus = Builder::new()
            .fixed_bug("1", 1, "mia", "a", &["src/a.rs"])
            .fixed_bug("2", 2, "noa", "b", &["src/b.rs"])
            .fixed_bug("3", 3, "mia", "c", &["src/c.rs"])
            .fixed_bug("4", 4, "ola", "d", &["src/d.rs"])
            .fixed_bug("5", 5, "noa", "e", &["src/e.rs"])
            .fixed_bug("6", 6, "mia", "f", &["src/f.rs"])
            .build();
        let history = HistoryView::at(&corpus, day(10));
        let rec = freq_recommend("q", &history);

        let mut brute: Vec<(String, usize)> = history.bug_fix_counts().into_iter().collect();
        brute.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let expected: Vec<String> = brute.into_iter().map(|(d, _)| d).collect();
        assert_eq!(rec.developer_ids(), expected);
    }
}
