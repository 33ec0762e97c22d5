use lsl_core::moments::{appendix_table, band_and_drift, CountingCase, SublevelOptions};

const XS: [f64; 5] = [1e4, 1e6, 1e8, 1e10, 1e12];

#[test]
fn counting_functions_track_closed_forms() {
    let cases = [
        CountingCase::M1,
        CountingCase::M2,
        CountingCase::M3,
        CountingCase::M4 { alpha: 0.5 },
    ];
    for case in cases {
        let rows = appendix_table(&case, &XS, &SublevelOptions::default()).unwrap();
        let (band, drift) = band_and_drift(&rows);
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        eprintln!("{case:?}: band {band:.3} drift {drift:.3} {ratios:.4?}");
        assert!(band <= 10.0, "{case:?}: {ratios:?}");
        assert!(drift < 0.25, "{case:?}: {ratios:?}");
    }
}
