use mapsearch::experiments::{
    eval_stats, quality_records, run_eval_stats, run_quality_experiment, run_width_experiment, write_csv, CsvRow,
    Generator, QualityConfig, QualityRow, WidthConfig, WidthRow,
};
use mapsearch::search::{Algorithm, Init, Method};
use serde::Serialize;

fn small_quality(seed: u64) -> QualityConfig {
    QualityConfig {
        instances: 12,
        nodes: 25,
        generator: Generator::EdgeProb { p: 0.1 },
        biases: vec![0.0, 0.5],
        seed,
        ..QualityConfig::default()
    }
}

/// Column names as serde derives them from the row type.
fn serde_header<T: Serialize>(row: &T) -> Vec<String> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    w.serialize(row).unwrap();
    let bytes = w.into_inner().unwrap();
    let text = String::from_utf8(bytes).unwrap();
    text.lines().next().unwrap().split(',').map(str::to_string).collect()
}

fn read_back<T: CsvRow>(rows: &[T]) -> (Vec<String>, Vec<csv::StringRecord>) {
    let mut out = Vec::new();
    write_csv(rows, &mut out).unwrap();
    let mut r = csv::Reader::from_reader(out.as_slice());
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    (header, r.records().map(Result::unwrap).collect())
}

fn opt<T: std::str::FromStr>(s: &str) -> Option<T> {
    (!s.is_empty()).then(|| s.parse().ok().expect("parsable field"))
}

#[test]
fn quality_csv_round_trips_through_its_columns() {
    let run = run_quality_experiment(&small_quality(3)).unwrap();
    assert_eq!(serde_header(&run.rows[0]), QualityRow::COLUMNS);
    let (header, records) = read_back(&run.rows);
    assert_eq!(header, QualityRow::COLUMNS);
    assert_eq!(records.len(), run.rows.len());
    for (row, rec) in run.rows.iter().zip(&records) {
        assert_eq!(rec.len(), QualityRow::COLUMNS.len());
        assert_eq!(&rec[0], row.experiment);
        assert_eq!(rec[1].parse::<u64>().unwrap(), row.seed);
        assert_eq!(&rec[2], row.generator);
        assert_eq!(rec[3].parse::<usize>().unwrap(), row.nodes);
        assert_eq!(opt::<usize>(&rec[4]), row.c);
        assert_eq!(opt::<f64>(&rec[5]), row.p);
        assert_eq!(rec[6].parse::<f64>().unwrap(), row.bias);
        assert_eq!(&rec[7], row.method);
        assert_eq!(rec[8].parse::<usize>().unwrap(), row.instance);
        assert_eq!(rec[9].parse::<f64>().unwrap().to_bits(), row.exact_log_score.to_bits());
        assert_eq!(rec[10].parse::<f64>().unwrap().to_bits(), row.approx_log_score.to_bits());
        assert_eq!(rec[11].parse::<bool>().unwrap(), row.solved);
        assert_eq!(rec[12].parse::<usize>().unwrap(), row.evaluations_used);
        assert_eq!(rec[13].parse::<usize>().unwrap(), row.evaluations_to_best);
        assert_eq!(rec[14].parse::<usize>().unwrap(), row.peaks_found);
        assert_eq!(rec[15].parse::<usize>().unwrap(), row.map_vars);
        assert_eq!(opt::<usize>(&rec[16]), row.first_peak_evals);
    }
}

#[test]
fn width_csv_round_trips_and_empty_outputs_keep_the_header() {
    let config = WidthConfig {
        instances: 6,
        nodes: 40,
        generator: Generator::Connectivity { c_values: vec![2, 5] },
        seed: 4,
        ..WidthConfig::default()
    };
    let run = run_width_experiment(&config).unwrap();
    assert_eq!(serde_header(&run.rows[0]), WidthRow::COLUMNS);
    let (header, records) = read_back(&run.rows);
    assert_eq!(header, WidthRow::COLUMNS);
    for (row, rec) in run.rows.iter().zip(&records) {
        assert_eq!(opt::<usize>(&rec[4]), row.c);
        assert_eq!(rec[8].parse::<usize>().unwrap(), row.unconstrained_width);
        assert_eq!(rec[9].parse::<usize>().unwrap(), row.constrained_width);
    }
    let (header, records) = read_back::<WidthRow>(&[]);
    assert_eq!(header, WidthRow::COLUMNS);
    assert!(records.is_empty());
}

#[test]
fn width_records_cover_each_bucket_and_the_pool() {
    let config = WidthConfig {
        instances: 20,
        generator: Generator::Connectivity { c_values: vec![1, 8] },
        seed: 2,
        ..WidthConfig::default()
    };
    let run = run_width_experiment(&config).unwrap();
    let buckets: Vec<&str> = run.records.iter().map(|r| r.bucket.as_str()).collect();
    assert_eq!(buckets, ["c=1", "c=8", "all"]);
    let forest = &run.records[0];
    assert!(forest.unconstrained.max <= 2 && forest.constrained.max <= 2);
    assert!(forest.constrained.weighted_average - forest.unconstrained.weighted_average <= 1.0);
    assert_eq!(run.pooled().instances, 20);
    for row in &run.rows {
        assert!((10..=25).contains(&row.map_vars));
    }
}

#[test]
fn an_edgeless_network_has_width_zero() {
    let config = WidthConfig {
        instances: 1,
        nodes: 12,
        generator: Generator::EdgeProb { p: 0.0 },
        min_map_vars: 10,
        ..WidthConfig::default()
    };
    let run = run_width_experiment(&config).unwrap();
    assert_eq!((run.rows[0].unconstrained_width, run.rows[0].constrained_width), (0, 0));
}

#[test]
fn skipped_and_reported_instances_add_up() {
    for cap in [0, 1, 2, 3, 22] {
        let run = run_quality_experiment(&QualityConfig { width_cap: cap, ..small_quality(5) }).unwrap();
        assert_eq!(run.reported() + run.skipped.len(), run.requested);
        assert_eq!(run.rows.len(), run.reported() * 2 * Algorithm::ALL.len());
    }
    let none = run_quality_experiment(&QualityConfig { width_cap: 0, ..small_quality(5) }).unwrap();
    assert!(none.rows.is_empty() && none.skipped.len() == 12);
}

#[test]
fn summaries_respect_their_invariants() {
    let run = run_quality_experiment(&small_quality(6)).unwrap();
    let records = quality_records(&run.rows);
    assert_eq!(records.len(), Algorithm::ALL.len() * 2);
    assert_eq!(records[0].method, "Rand-Hill");
    for r in &records {
        assert!(r.solved <= r.instances);
        assert_eq!(r.instances, run.reported());
    }
    for row in &run.rows {
        assert!(row.approx_log_score <= row.exact_log_score + 1e-9);
    }
    for s in eval_stats(&run.rows, 0.5) {
        assert!(0.0 <= s.mean && s.mean <= s.max as f64 && s.stdev >= 0.0);
    }
    let (single, stats) = run_eval_stats(&small_quality(6), 0.5).unwrap();
    assert!(single.rows.iter().all(|r| r.bias == 0.5));
    assert_eq!(stats, eval_stats(&run.rows, 0.5));
}

#[test]
fn a_zero_budget_random_guess_does_no_search() {
    let config = QualityConfig {
        budget: 0,
        algorithms: vec![Algorithm { init: Init::Rand, method: Method::Hill }],
        ..small_quality(8)
    };
    let run = run_quality_experiment(&config).unwrap();
    assert!(run.rows.iter().all(|r| r.evaluations_used == 0 && r.peaks_found == 0));
    let bad = QualityConfig { budget: 0, ..small_quality(8) };
    assert!(run_quality_experiment(&bad).is_err());
}

#[test]
fn rerunning_a_seed_reproduces_the_csv() {
    let bytes = |seed| {
        let mut out = Vec::new();
        write_csv(&run_quality_experiment(&small_quality(seed)).unwrap().rows, &mut out).unwrap();
        out
    };
    assert_eq!(bytes(11), bytes(11));
    assert_ne!(bytes(11), bytes(12));
}
