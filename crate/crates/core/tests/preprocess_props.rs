use proptest::prelude::*;
use stressdetect_core::preprocess::{filter_physiological_range, mad_trim, median_filter, minmax, zscore};
use stressdetect_core::{SignalKind, TimeSeries};

fn series(kind: SignalKind, lo: f64, hi: f64) -> impl Strategy<Value = TimeSeries> {
    proptest::collection::vec((0.05f64..2.0, lo..hi), 1..300).prop_map(move |steps| {
        let mut t = 0.0;
        let (mut ts, mut vs) = (Vec::new(), Vec::new());
        for (dt, v) in steps {
            t += dt;
            ts.push(t);
            vs.push(v);
        }
        TimeSeries::new(kind, ts, vs).unwrap()
    })
}

fn oracle_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

proptest! {
    #[test]
    fn range_filter_keeps_exactly_the_in_band_samples(s in series(SignalKind::HeartRate, 0.0, 300.0)) {
        let out = filter_physiological_range(&s);
        let expected: Vec<(f64, f64)> = s
            .timestamps()
            .iter()
            .zip(s.values())
            .filter(|(_, v)| (30.0..=220.0).contains(*v))
            .map(|(t, v)| (*t, *v))
            .collect();
        let got: Vec<(f64, f64)> = out.timestamps().iter().copied().zip(out.values().iter().copied()).collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn rr_range_filter_screens_implied_rate(s in series(SignalKind::RrInterval, 100.0, 3000.0)) {
        let out = filter_physiological_range(&s);
        prop_assert!(out.values().iter().all(|rr| (30.0..=220.0).contains(&(60_000.0 / rr))));
        let kept = s.values().iter().filter(|rr| (30.0..=220.0).contains(&(60_000.0 / **rr))).count();
        prop_assert_eq!(out.len(), kept);
    }

    #[test]
    fn mad_trim_band_on_original_series(s in series(SignalKind::HeartRate, 40.0, 200.0)) {
        let out = mad_trim(&s, 3.0).unwrap();
        let med = oracle_median(s.values());
        let dev: Vec<f64> = s.values().iter().map(|v| (v - med).abs()).collect();
        let mad = oracle_median(&dev);
        if mad == 0.0 {
            prop_assert_eq!(&out, &s);
        } else {
            prop_assert!(out.values().iter().all(|v| (v - med).abs() <= 3.0 * mad));
            prop_assert_eq!(out.len(), dev.iter().filter(|d| **d <= 3.0 * mad).count());
        }
    }

    #[test]
    fn median_filter_preserves_grid_and_matches_window_median(s in series(SignalKind::Eda, 0.01, 50.0)) {
        let out = median_filter(&s, 5.0).unwrap();
        prop_assert_eq!(out.timestamps(), s.timestamps());
        for (i, &t) in s.timestamps().iter().enumerate() {
            let mut w: Vec<f64> = s
                .timestamps()
                .iter()
                .zip(s.values())
                .filter(|(u, _)| (**u - t).abs() <= 2.5)
                .map(|(_, v)| *v)
                .collect();
            w.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assert_eq!(out.values()[i], w[(w.len() - 1) / 2]);
        }
    }

    #[test]
    fn zscore_has_zero_mean_unit_std(s in series(SignalKind::HeartRate, 40.0, 200.0)) {
        prop_assume!(s.len() >= 2);
        if let Ok((z, _)) = zscore(&s) {
            let n = z.len() as f64;
            let mean = z.values().iter().sum::<f64>() / n;
            let var = z.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            prop_assert!(mean.abs() <= 1e-9);
            prop_assert!((var.sqrt() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn minmax_hits_endpoints_exactly(s in series(SignalKind::Eda, 0.01, 50.0)) {
        if let Ok((m, _)) = minmax(&s) {
            let lo = m.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = m.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(lo, 0.0);
            prop_assert_eq!(hi, 1.0);
        }
    }
}
