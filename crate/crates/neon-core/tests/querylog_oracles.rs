//! Spike detection against an independent rolling-sum oracle, plus the
//! privacy-filter predicate oracle.

use neon_core::date::DateStamp;
use neon_core::querylog::{detect_spikes, privacy_filter, DailySeries, LoggedQuery};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn d(s: &str) -> DateStamp {
    DateStamp::parse(s).unwrap()
}

/// Independent reimplementation: explicit window loops, two-pass variance.
#[allow(clippy::needless_range_loop)]
fn oracle_spikes(counts: &[u64], start: DateStamp, window: usize) -> Vec<DateStamp> {
    let mut sums = Vec::new();
    for end in (window - 1)..counts.len() {
        let mut s = 0u64;
        for i in (end + 1 - window)..=end {
            s += counts[i];
        }
        sums.push((end, s as f64));
    }
    let n = sums.len() as f64;
    let mean = sums.iter().map(|&(_, s)| s).sum::<f64>() / n;
    let var = sums.iter().map(|&(_, s)| (s - mean) * (s - mean)).sum::<f64>() / n;
    let cut = mean + var.sqrt();
    sums.iter()
        .filter(|&&(_, s)| s > cut)
        .map(|&(end, _)| start.plus_days(end as i64))
        .collect()
}

fn series_from(counts: &[u64], start: &str) -> DailySeries {
    DailySeries {
        entity: "Q1".into(),
        points: counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (d(start).plus_days(i as i64), c))
            .collect(),
    }
}

#[test]
fn seven_day_fixture_matches_hand_computation() {
    // Counts 0,0,0,0,30,0,0 with a 3-day window: rolling sums over the five
    // full windows are [0, 0, 30, 30, 30], mean 18, population variance
    // ((18^2)*2 + (12^2)*3)/5 = 216, so the threshold is 18 + sqrt(216)
    // = 32.70. No sum exceeds it: a burst spanning three of five windows
    // dominates its own baseline. The detector needs more context than a
    // week to call this burst a spike (see the longer series below).
    let counts = [0u64, 0, 0, 0, 30, 0, 0];
    let series = series_from(&counts, "20230901");
    let got = detect_spikes(&series, 3).unwrap();
    let want = oracle_spikes(&counts, d("20230901"), 3);
    assert_eq!(got, want);
    assert!(got.is_empty());

    // Hand-check of the threshold arithmetic this fixture relies on.
    let sums = [0.0f64, 0.0, 30.0, 30.0, 30.0];
    let mean: f64 = sums.iter().sum::<f64>() / 5.0;
    assert_eq!(mean, 18.0);
    let var: f64 = sums.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / 5.0;
    assert_eq!(var, 216.0);
    assert!(30.0 <= mean + var.sqrt());
}

#[test]
fn same_burst_in_three_weeks_of_context_is_flagged() {
    let mut counts = vec![0u64; 21];
    counts[10] = 30;
    let series = series_from(&counts, "20230901");
    let got = detect_spikes(&series, 3).unwrap();
    let want = oracle_spikes(&counts, d("20230901"), 3);
    assert_eq!(got, want);
    // The three trailing windows containing the burst day.
    assert_eq!(got, vec![d("20230911"), d("20230912"), d("20230913")]);
}

#[test]
fn hundred_twenty_day_series_with_two_bursts_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let mut counts: Vec<u64> = (0..120).map(|_| rng.gen_range(0..6)).collect();
    // Two planted bursts.
    counts[30] = 80;
    counts[31] = 95;
    counts[90] = 120;
    let series = series_from(&counts, "20230501");
    let got = detect_spikes(&series, 3).unwrap();
    let want = oracle_spikes(&counts, d("20230501"), 3);
    assert_eq!(got, want);
    assert!(!got.is_empty());
    // Both bursts are represented.
    assert!(got.iter().any(|x| x.days_between(&d("20230531")) <= 3));
    assert!(got.iter().any(|x| x.days_between(&d("20230730")) <= 3));
}

#[test]
fn window_sizes_other_than_three_match_oracle() {
    let mut counts = vec![2u64; 40];
    counts[12] = 40;
    counts[28] = 55;
    for window in [1usize, 2, 5, 7] {
        let series = series_from(&counts, "20230601");
        let got = detect_spikes(&series, window).unwrap();
        let want = oracle_spikes(&counts, d("20230601"), window);
        assert_eq!(got, want, "window {window}");
        assert!(!got.is_empty(), "window {window}");
    }
}

#[test]
fn hundred_query_privacy_fixture_matches_predicate_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let queries: Vec<LoggedQuery> = (0..100)
        .map(|i| LoggedQuery {
            text: format!("query {i}"),
            date: d("20230901").plus_days(i % 30),
            distinct_users: rng.gen_range(1..12),
            entity: format!("Q{}", i % 7),
        })
        .collect();
    let got = privacy_filter(queries.clone(), 5);
    let want: Vec<LoggedQuery> = queries
        .iter()
        .filter(|q| q.distinct_users >= 5)
        .cloned()
        .collect();
    assert_eq!(got, want);
    assert!(got.len() < queries.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    // Scaling every count by a positive constant scales each rolling sum,
    // the mean, and the deviation identically, so the flagged set is
    // unchanged.
    #[test]
    fn positive_scaling_leaves_flags_unchanged(
        seed in 0u64..10_000,
        scale in prop_oneof![Just(2u64), Just(3), Just(7), Just(50)],
        len in 5usize..60,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts: Vec<u64> = (0..len).map(|_| rng.gen_range(0..40)).collect();
        let scaled: Vec<u64> = counts.iter().map(|c| c * scale).collect();
        let base = detect_spikes(&series_from(&counts, "20230901"), 3).unwrap();
        let big = detect_spikes(&series_from(&scaled, "20230901"), 3).unwrap();
        prop_assert_eq!(base, big);
    }

    #[test]
    fn flagged_dates_are_series_dates(seed in 0u64..10_000, len in 3usize..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts: Vec<u64> = (0..len).map(|_| rng.gen_range(0..100)).collect();
        let series = series_from(&counts, "20230901");
        let dates: Vec<DateStamp> = series.points.iter().map(|&(x, _)| x).collect();
        for spike in detect_spikes(&series, 3).unwrap() {
            prop_assert!(dates.contains(&spike));
        }
    }
}
