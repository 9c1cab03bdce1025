use railmapf::gen::*;
use railmapf::graph::full_distance_map;
use railmapf::rail::{classify_cells, validate_grid, CellClass};

#[test]
fn schedule_endpoints() {
    let p0 = schedule(0).unwrap();
    assert_eq!((p0.n_agents, p0.n_cities, p0.x_dim, p0.y_dim), (1, 2, 25, 25));
    let p22 = schedule(22).unwrap();
    assert_eq!((p22.n_agents, p22.n_cities, p22.x_dim), (181, 20, 62));
    let p40 = schedule(40).unwrap();
    assert_eq!((p40.n_agents, p40.n_cities, p40.x_dim), (6256, 627, 314));
    assert!(schedule(41).is_err());
}

#[test]
fn agent_sequence_follows_recurrence() {
    let counts: Vec<u32> = (0..N_TESTS).map(|k| schedule(k).unwrap().n_agents).collect();
    let mut expect = vec![1u32];
    while expect.len() < 41 {
        let n = *expect.last().unwrap();
        let inc = match n {
            1..=9 => 1,
            10..=99 => 8,
            100..=999 => 75,
            _ => 750,
        };
        expect.push(n + inc);
    }
    assert_eq!(counts, expect);
    assert_eq!(&counts[..12], &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 18, 26]);
    assert_eq!(counts[21], 106);
}

#[test]
fn malfunction_rates() {
    assert_eq!(malfunction_rate(0).unwrap(), 0.0);
    assert_eq!(malfunction_rate(1).unwrap(), 0.004);
    assert_eq!(malfunction_rate(5).unwrap(), 1.0 / 1250.0);
    assert!(malfunction_rate(10).is_err());
}

#[test]
fn full_schedule_shape() {
    let all = full_schedule();
    assert_eq!(all.len(), 410);
    for chunk in all.chunks(10) {
        for (l, p) in chunk.iter().enumerate() {
            assert_eq!(p.env, l as u32);
            assert_eq!(p.malfunction_interval, l as u32 * 250);
            assert_eq!((p.n_agents, p.x_dim), (chunk[0].n_agents, chunk[0].x_dim));
        }
    }
    assert!(all.windows(11).all(|w| w[10].n_agents > w[0].n_agents));
}

#[test]
fn small_tests_generate_clean_reachable_layouts() {
    for k in [0, 3, 7, 12] {
        for seed in 0..4 {
            let p = test_params(k, 1).unwrap();
            let env = generate(&p, &GenConfig::new(seed)).unwrap();
            assert_eq!(env.grid.width(), p.x_dim);
            assert_eq!(env.agents.len() as u32, p.n_agents);
            assert!(validate_grid(&env.grid).is_clean(), "k={k} seed={seed}");
            let classes = classify_cells(&env.grid);
            for a in &env.agents {
                assert_ne!(classes.get(a.origin), CellClass::Decision);
                let dm = full_distance_map(&env.grid, a.target);
                assert!(dm.get(a.start_state()).is_some());
            }
        }
    }
}

#[test]
fn generation_is_deterministic() {
    let p = test_params(5, 2).unwrap();
    let a = generate(&p, &GenConfig::new(42)).unwrap();
    let b = generate(&p, &GenConfig::new(42)).unwrap();
    assert_eq!(a, b);
    let c = generate(&p, &GenConfig::new(43)).unwrap();
    assert_ne!(a.grid, c.grid);
}
