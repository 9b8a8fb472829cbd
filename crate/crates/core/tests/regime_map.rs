use qrmsim_core::regimes::{regime_map, AxisRange, RegimeGrid, RegimeLabel, RegimeThresholds, Region};

const WEAK: [Region; 5] = [Region::Jc, Region::Ajc, Region::Dispersive, Region::Decoupling, Region::Intermediate];

fn weak_grid(g: f64) -> RegimeGrid {
    // |ω₀|, |ω|, |ω ± ω₀| all at least 50 g
    RegimeGrid {
        omega0_over_g: AxisRange { min: -400.0, max: 400.0, steps: 9 },
        omega_over_g: AxisRange { min: 500.0, max: 2000.0, steps: 7 },
        g,
    }
}

#[test]
fn weak_coupling_grid_has_no_strong_labels() {
    let th = RegimeThresholds::default();
    let map = regime_map(&weak_grid(1.0), &th).unwrap();
    assert_eq!(map.points.len(), 63);
    let mut saw_weak = false;
    for p in &map.points {
        match p.label {
            RegimeLabel::Transition(a, b) => assert!(WEAK.contains(&a) && WEAK.contains(&b), "{}", p.label),
            RegimeLabel::Usc | RegimeLabel::Dsc | RegimeLabel::DiracLine => panic!("{:?} -> {}", p.params, p.label),
            _ => saw_weak = true,
        }
    }
    assert!(saw_weak);
}

#[test]
fn grid_labels_survive_rescaling() {
    let th = RegimeThresholds::default();
    let grid = RegimeGrid {
        omega0_over_g: AxisRange { min: -3.0, max: 3.0, steps: 13 },
        omega_over_g: AxisRange { min: -20.0, max: 20.0, steps: 41 },
        g: 1.0,
    };
    let base = regime_map(&grid, &th).unwrap();
    let scaled = regime_map(&RegimeGrid { g: 10.0, ..grid }, &th).unwrap();
    for (a, b) in base.points.iter().zip(&scaled.points) {
        assert_eq!(a.label, b.label, "{:?}", a.params);
    }
}

#[test]
fn csv_has_one_row_per_point() {
    let map = regime_map(&weak_grid(2.0), &RegimeThresholds::default()).unwrap();
    let mut buf = Vec::new();
    map.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("omega0_R,omega_R,g,label"));
    assert_eq!(lines.count(), map.rows * map.cols);
}

