use ma_core::gain_map::{evaluate_map, map_extrema, power_gain_db};
use ma_core::*;

fn four_wavelength_square() -> Region64 {
    Region64::square(4.0).unwrap()
}

/// In-plane projection of rx_dir_1 - rx_dir_2 for a two-path spec.
fn difference_vector(spec: &ChannelSpec64) -> [f64; 2] {
    let a = spec.paths()[0].rx_dir.as_array();
    let b = spec.paths()[1].rx_dir.as_array();
    [a[0] - b[0], a[1] - b[1]]
}

#[test]
fn two_path_fixture_dynamic_range() {
    let map = evaluate_map(&fixtures::two_path::<f64>(), &four_wavelength_square(), 0.02).unwrap();
    assert_eq!(map.shape(), [201, 201]);
    let e = map_extrema(&map);
    assert!(e.max_db - e.min_db > 40.0, "range {}", e.max_db - e.min_db);
    assert!((e.max_db - 10.0 * 4f64.log10()).abs() < 0.05, "max {}", e.max_db);
}

#[test]
fn two_path_periodicity_along_difference_vector() {
    let spec = fixtures::two_path::<f64>();
    let d = difference_vector(&spec);
    let n2 = d[0] * d[0] + d[1] * d[1];
    let period = Position::planar(d[0] / n2, d[1] / n2);
    let normal = Position::planar(-d[1], d[0]);
    for k in 0..50 {
        let r = Position::planar(-1.3 + 0.047 * k as f64, 0.9 - 0.031 * k as f64);
        let g = power_gain_db(&spec, &r);
        if g < -60.0 {
            continue;
        }
        assert!((power_gain_db(&spec, &(r + period)) - g).abs() < 1e-9);
        assert!((power_gain_db(&spec, &(r + normal * 0.37)) - g).abs() < 1e-9);
    }
}

#[test]
fn four_path_fixture_has_deep_fade_confirmed_by_fine_scan() {
    let spec = fixtures::four_path::<f64>();
    let map = evaluate_map(&spec, &four_wavelength_square(), 0.02).unwrap();
    let e = map.extrema();
    assert!(e.min_db < -30.0, "min {}", e.min_db);
    // Lambda/500 brute force in the lambda/50 cell neighbourhood of the null.
    let mut fine_min = f64::INFINITY;
    for i in -10..=10 {
        for j in -10..=10 {
            let r = e.argmin + Position::planar(i as f64 * 0.002, j as f64 * 0.002);
            fine_min = fine_min.min(power_gain_db(&spec, &r));
        }
    }
    assert!(fine_min <= e.min_db + 1e-12);
}

#[test]
fn single_path_maps_are_flat() {
    for seed in 0..5 {
        let spec = fixtures::unit_power_paths::<f64>(1, seed);
        let map = evaluate_map(&spec, &four_wavelength_square(), 0.02).unwrap();
        assert!(map.values_db().iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn halving_step_never_shrinks_the_range() {
    let spec = fixtures::four_path::<f64>();
    let mut prev: Option<(f64, f64)> = None;
    for step in [0.16, 0.08, 0.04, 0.02] {
        let e = evaluate_map(&spec, &four_wavelength_square(), step).unwrap().extrema();
        if let Some((mx, mn)) = prev {
            assert!(e.max_db >= mx - 1e-9);
            assert!(e.min_db <= mn + 1e-9);
        }
        prev = Some((e.max_db, e.min_db));
    }
}

#[test]
fn extrema_match_direct_scan() {
    let spec = fixtures::four_path::<f64>();
    let region = four_wavelength_square();
    let map = evaluate_map(&spec, &region, 0.05).unwrap();
    let grid = region.grid(0.05).unwrap();
    let values: Vec<f64> = grid.points().map(|r| power_gain_db(&spec, &r)).collect();
    let (mut imax, mut imin) = (0, 0);
    for (i, v) in values.iter().enumerate() {
        if *v > values[imax] {
            imax = i;
        }
        if *v < values[imin] {
            imin = i;
        }
    }
    let e = map.extrema();
    assert!((e.max_db - values[imax]).abs() < 1e-9);
    assert!((e.min_db - values[imin]).abs() < 1e-9);
    assert_eq!(e.argmax, grid.point(imax));
    assert!(region.contains(&e.argmax) && region.contains(&e.argmin));
}

#[test]
fn csv_rows_follow_grid_order() {
    let spec = fixtures::two_path::<f64>();
    let map = evaluate_map(&spec, &Region64::square(0.5).unwrap(), 0.25).unwrap();
    let mut buf = Vec::new();
    map.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    for (i, row) in rows.iter().enumerate() {
        let p = map.position(i);
        assert_eq!(row[0], p.x());
        assert_eq!(row[1], p.y());
        assert_eq!(row[2], map.values_db()[i]);
    }
}
