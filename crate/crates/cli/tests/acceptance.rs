//! End-to-end acceptance run. Prints one line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::f64::consts::LN_2;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use expfam::circuits::circuit_basis;
use expfam::divmax::{
    dbar, estimate_max_divergence, is_partition_maximizer, local_maximizers, max_divergence_oracle, psi_family,
    psi_plus, LocalMaximum,
};
use expfam::lab::{caratheodory_witness, check_log2_structure, equality_case, random_family, scan_conjecture, EVIDENCE};
use expfam::projection::ri_project;
use expfam::rational::{q, q_frac, Q};
use expfam::zoo::{
    direct_sum, grouping_family, hierarchical_family, marginal_polytope_vertex_count, partition_family,
    unique_log2_family_n3, HierarchicalSpec, Partition,
};
use expfam::{ExponentialFamily, StateSpace};
use expfam_cli::{run, Command, Format, RunConfig};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const STARTS: usize = 64;

/// A family met along the way, with its multistart result when one was run.
struct Seen {
    name: String,
    family: ExponentialFamily,
    estimate: Option<f64>,
    maxima: Vec<LocalMaximum>,
}

#[derive(Default)]
struct Ledger {
    seen: Vec<Seen>,
}

impl Ledger {
    fn add(&mut self, name: impl Into<String>, family: &ExponentialFamily, estimate: Option<f64>, maxima: &[LocalMaximum]) {
        self.seen.push(Seen {
            name: name.into(),
            family: family.clone(),
            estimate,
            maxima: maxima.to_vec(),
        });
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_time(o: Outcome, elapsed: Duration, limit: Option<Duration>) -> Outcome {
    match limit {
        Some(l) if elapsed > l => outcome(false, format!("{}; runtime {:.2?} over {:?}", o.detail, elapsed, l)),
        _ => o,
    }
}

fn maximize(ledger: &mut Ledger, name: &str, f: &ExponentialFamily, seed: u64) -> (f64, Vec<LocalMaximum>) {
    if f.normal_dim() == 0 {
        ledger.add(name, f, Some(0.0), &[]);
        return (0.0, Vec::new());
    }
    let r = local_maximizers(f, STARTS, seed, 1e-9).expect("maximization");
    ledger.add(name, f, Some(r.global_estimate), &r.local_maxima);
    (r.global_estimate, r.local_maxima)
}

fn write_json(dir: &Path, name: &str, v: &Value) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string(v).unwrap()).unwrap();
    path
}

fn cli(command: Command, family: &Path, dist: Option<&Path>) -> Value {
    let mut c = RunConfig::new(command);
    c.family = Some(family.to_path_buf());
    c.dist = dist.map(Path::to_path_buf);
    let report = run(&c).expect("cli run");
    serde_json::from_str(&report.body).unwrap()
}

fn criterion_1(ledger: &mut Ledger) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let fam = write_json(dir.path(), "family.json", &serde_json::json!({"nu": [1, 4, 1], "A": [[0, 1, 2]]}));
    let report = cli(Command::Maximize, &fam, None);
    let maxima = report["result"]["local_maxima"].as_array().unwrap().clone();
    let mut values: Vec<f64> = maxima.iter().map(|m| m["D_value"].as_f64().unwrap()).collect();
    values.sort_by(f64::total_cmp);
    let expected = [1.5f64.ln(), 3f64.ln()];
    let values_ok = values.len() == 2 && values.iter().zip(expected).all(|(v, e)| (v - e).abs() <= 1e-6);
    let mut worst: f64 = 0.0;
    for (i, m) in maxima.iter().enumerate() {
        let dist = write_json(dir.path(), &format!("max{i}.json"), &m["P"]);
        let proj = cli(Command::Project, &fam, Some(&dist));
        let point: Vec<f64> = serde_json::from_value(proj["result"]["point"].clone()).unwrap();
        for (p, nu) in point.iter().zip([1.0, 4.0, 1.0]) {
            worst = worst.max((p - nu / 6.0).abs());
        }
    }
    let f = ExponentialFamily::from_integers(&[1.0, 4.0, 1.0], &[vec![0, 1, 2]]).unwrap();
    maximize(ledger, "example A=(0,1,2), nu=(1,4,1)", &f, 0);
    outcome(
        values_ok && worst <= 1e-8,
        format!("{} local maxima with D {:?}; projections within {:.1e} of nu/6", values.len(), values, worst),
    )
}

fn random_partition(rng: &mut ChaCha8Rng, n: usize) -> Partition {
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut ids: Vec<usize> = Vec::new();
    for (x, l) in labels.into_iter().enumerate() {
        match ids.iter().position(|&i| i == l) {
            Some(i) => blocks[i].push(x),
            None => {
                ids.push(l);
                blocks.push(vec![x]);
            }
        }
    }
    Partition::new(blocks, n).unwrap()
}

fn criterion_2(ledger: &mut Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut bad_maximizers = 0;
    for i in 0..20 {
        let n = rng.random_range(4..=8);
        let part = random_partition(&mut rng, n);
        let f = partition_family(&part, StateSpace::indexed(n).unwrap()).unwrap();
        let (est, maxima) = maximize(ledger, &format!("partition {:?}", part.blocks()), &f, i);
        worst = worst.max((est - (part.coarseness() as f64).ln()).abs());
        bad_maximizers += maxima
            .iter()
            .filter(|m| m.d_value >= est - 1e-6 && !is_partition_maximizer(&part, &m.p, 1e-6))
            .count();
    }
    outcome(
        worst <= 1e-6 && bad_maximizers == 0,
        format!("max |D - log c| = {worst:.1e}; {bad_maximizers} global maximizers violating the block conditions"),
    )
}

fn criterion_3(ledger: &mut Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut lowest = f64::INFINITY;
    for i in 0..50 {
        let n = rng.random_range(2..=6);
        let k = rng.random_range(0..=n - 2);
        let uniform = rng.random_bool(0.5);
        let f = random_family(n, k, uniform, &mut rng);
        assert!(f.normal_dim() > 0);
        let (est, _) = maximize(ledger, &format!("random N={n} k={k} #{i}"), &f, i);
        lowest = lowest.min(est);
    }
    outcome(lowest >= LN_2 - 1e-6, format!("smallest estimate {lowest:.9} vs log 2 = {LN_2:.9}"))
}

fn criterion_4(ledger: &Ledger) -> Outcome {
    let mut worst_gap: f64 = 0.0;
    let mut worst_trip: f64 = 0.0;
    let mut count = 0;
    for s in &ledger.seen {
        for m in &s.maxima {
            count += 1;
            let plus = psi_plus(&m.u);
            let d_plus = ri_project(&s.family, &plus).unwrap().divergence;
            let d_bar = dbar(&s.family, m.u.values()).unwrap();
            worst_gap = worst_gap.max((d_plus - (1.0 + d_bar.exp()).ln()).abs());
            let back = psi_family(&s.family, &plus).unwrap();
            let trip = back.values().iter().zip(m.u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst_trip = worst_trip.max(trip);
        }
    }
    outcome(
        worst_gap <= 1e-7 && worst_trip <= 1e-6,
        format!("{count} local maxima; duality gap {worst_gap:.1e}; round trip {worst_trip:.1e}"),
    )
}

fn criterion_5(ledger: &mut Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_slack = f64::INFINITY;
    for i in 0..20 {
        let n = rng.random_range(3..=8);
        let k = rng.random_range(0..n);
        let f = random_family(n, k, true, &mut rng);
        let w = caratheodory_witness(&f).unwrap();
        let d = ri_project(&f, &w.p).unwrap().divergence;
        let bound = (n as f64).ln() - ((f.dim() + 1) as f64).ln();
        worst_slack = worst_slack.min(d - bound);
        ledger.add(format!("uniform-reference N={n} k={k} #{i}"), &f, None, &[]);
    }
    let mut equality_fail = Vec::new();
    let mut homogeneous = 0;
    for c in 1..=8usize {
        for b in 1..=8 / c {
            let part = Partition::from_sizes(&vec![c; b]).unwrap();
            let f = partition_family(&part, StateSpace::indexed(c * b).unwrap()).unwrap();
            let w = caratheodory_witness(&f).unwrap();
            let max_d = estimate_max_divergence(&f, STARTS, 0).unwrap();
            let d = ri_project(&f, &w.p).unwrap().divergence;
            let eq = equality_case(&f, &w, max_d, 1e-6);
            homogeneous += 1;
            if (d - max_d).abs() > 1e-6 || eq.verdict != "partition model of a homogeneous partition" {
                equality_fail.push(format!("{c}x{b}: {d} vs {max_d}, {}", eq.verdict));
            }
            ledger.add(format!("homogeneous {c}x{b}"), &f, Some(max_d), &[]);
        }
    }
    outcome(
        worst_slack >= -1e-7 && equality_fail.is_empty(),
        format!(
            "min witness slack {worst_slack:.1e}; {homogeneous} homogeneous partitions, equality failures {equality_fail:?}"
        ),
    )
}

fn criterion_6(ledger: &mut Ledger) -> Outcome {
    let mut problems = Vec::new();
    let pairs = partition_family(&Partition::from_sizes(&[2, 2, 2]).unwrap(), StateSpace::indexed(6).unwrap()).unwrap();
    let r = check_log2_structure(&pairs, 1e-6, STARTS, 0).unwrap();
    let three_pairs = r.classes.len() == 3 && r.classes.iter().all(|c| c.len() == 2) && r.loops.is_empty();
    if !(r.hypothesis_met && r.dim == 2 && r.dim_lower_bound == 2 && three_pairs) {
        problems.push(format!("pairs: dim {} classes {:?}", r.dim, r.classes));
    }
    ledger.add("pair partition N=6", &pairs, Some(r.max_d), &[]);

    let two = partition_family(&Partition::from_sizes(&[2]).unwrap(), StateSpace::indexed(2).unwrap()).unwrap();
    let three = unique_log2_family_n3(&[q_frac(1, 2), q_frac(1, 2), q(-1)]).unwrap();
    let odd = direct_sum(&two, &three).unwrap();
    let r = check_log2_structure(&odd, 1e-6, STARTS, 0).unwrap();
    let expected = vec![vec![0, 1], vec![2, 3, 4]];
    if !(r.hypothesis_met && r.dim == 2 && r.classes == expected && r.components == expected && r.verdicts.iter().all(|v| v.pass)) {
        problems.push(format!("odd mixture: {}", r.summary));
    }
    ledger.add("odd mixture N=5", &odd, Some(r.max_d), &[]);

    let mut worst: f64 = 0.0;
    let directions: [[Q; 3]; 5] = [
        [q_frac(1, 2), q_frac(1, 2), q(-1)],
        [q(1), q(-3), q(2)],
        [q_frac(1, 7), q(-5), q_frac(34, 7)],
        [q(-2), q(9), q(-7)],
        [q_frac(-1, 3), q_frac(-1, 3), q_frac(2, 3)],
    ];
    for u in &directions {
        let f = unique_log2_family_n3(u).unwrap();
        let d = estimate_max_divergence(&f, STARTS, 0).unwrap();
        worst = worst.max((d - LN_2).abs());
        ledger.add(format!("log2 family {:?}", u.iter().map(|x| x.to_string()).collect::<Vec<_>>()), &f, Some(d), &[]);
    }
    if worst > 1e-6 {
        problems.push(format!("unique log2 families off by {worst:.1e}"));
    }
    outcome(problems.is_empty(), if problems.is_empty() {
        format!("pairs and odd mixture confirmed; {} log 2 families within {worst:.1e}", directions.len())
    } else {
        problems.join("; ")
    })
}

/// Nonempty subsets of `1..=n` as bitmasks; antichains of them as generator lists.
fn antichains(n: usize) -> Vec<Vec<Vec<usize>>> {
    let subsets: Vec<u32> = (1..(1u32 << n)).collect();
    let mut out = Vec::new();
    for pick in 0u64..(1 << subsets.len()) {
        let chosen: Vec<u32> = subsets.iter().enumerate().filter(|(i, _)| pick & (1 << i) != 0).map(|(_, &s)| s).collect();
        let anti = chosen.iter().all(|&a| chosen.iter().all(|&b| a == b || a & b != a));
        if anti {
            out.push(chosen.iter().map(|&s| (0..n).filter(|i| s & (1 << i) != 0).map(|i| i + 1).collect()).collect());
        }
    }
    out
}

fn criterion_7(ledger: &mut Ledger) -> Outcome {
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for n in 1..=3usize {
        let mut cards = vec![vec![]];
        for _ in 0..n {
            cards = cards.into_iter().flat_map(|c: Vec<usize>| (1..=3).map(move |v| [c.clone(), vec![v]].concat())).collect();
        }
        for card in &cards {
            for gens in antichains(n) {
                let spec = HierarchicalSpec::new(card.clone(), gens.clone());
                let f = hierarchical_family(&spec).unwrap();
                let vertices = f.convex_support_vertices().states;
                let distinct: BTreeSet<Vec<Q>> = vertices.iter().map(|&x| f.stats().column(x)).collect();
                let count = marginal_polytope_vertex_count(&spec);
                checked += 1;
                if distinct.len() != count {
                    mismatches.push(format!("{card:?} {gens:?}: {} vs {count}", distinct.len()));
                }
                if f.size() <= 6 {
                    ledger.add(format!("hierarchical {card:?} {gens:?}"), &f, None, &[]);
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for card in [vec![2, 2], vec![2, 3]] {
        for k in [vec![], vec![1], vec![2], vec![1, 2]] {
            let (f, _) = grouping_family(&k, &card).unwrap();
            let expected: f64 = (1..=2).filter(|i| !k.contains(i)).map(|i| (card[i - 1] as f64).ln()).sum();
            let d = estimate_max_divergence(&f, STARTS, 0).unwrap();
            worst = worst.max((d - expected).abs());
            ledger.add(format!("E_K K={k:?} N={card:?}"), &f, Some(d), &[]);
        }
    }
    outcome(
        mismatches.is_empty() && worst <= 1e-6,
        format!("{checked} hierarchical families, mismatches {mismatches:?}; E_K values within {worst:.1e}"),
    )
}

fn rank(mut rows: Vec<Vec<Q>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = &row[c] / &pivot_row[c];
                for (x, y) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                    *x -= &f * y;
                }
            }
        }
        r += 1;
    }
    r
}

fn dependent(f: &ExponentialFamily, set: &[usize]) -> bool {
    let cols: Vec<Vec<Q>> = set
        .iter()
        .map(|&x| {
            let mut c = f.stats().column(x);
            c.push(Q::one());
            c
        })
        .collect();
    rank(cols) < set.len()
}

fn enumerated_circuits(f: &ExponentialFamily) -> BTreeSet<Vec<usize>> {
    let n = f.size();
    (1u32..(1 << n))
        .map(|m| (0..n).filter(|&i| m & (1 << i) != 0).collect::<Vec<usize>>())
        .filter(|s| {
            dependent(f, s)
                && (0..s.len()).all(|d| {
                    let sub: Vec<usize> = s.iter().enumerate().filter(|&(i, _)| i != d).map(|(_, &x)| x).collect();
                    !dependent(f, &sub)
                })
        })
        .collect()
}

fn criterion_8(ledger: &Ledger) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_name = String::new();
    let mut compared = 0;
    let mut circuit_checks = 0;
    let mut circuit_mismatch = Vec::new();
    for (i, s) in ledger.seen.iter().enumerate() {
        if s.family.size() <= 7 {
            circuit_checks += 1;
            let scan: BTreeSet<Vec<usize>> = circuit_basis(&s.family).unwrap().supports().into_iter().collect();
            if scan != enumerated_circuits(&s.family) {
                circuit_mismatch.push(s.name.clone());
            }
        }
        if s.family.size() > 6 || s.family.normal_dim() == 0 {
            continue;
        }
        let est = match s.estimate {
            Some(e) => e,
            None => estimate_max_divergence(&s.family, STARTS, i as u64).unwrap(),
        };
        let oracle = max_divergence_oracle(&s.family, 0.05)
            .unwrap_or_else(|e| panic!("{}: {e} {:?}", s.name, serde_json::to_string(&expfam::io::family_to_value(&s.family))))
            .value;
        compared += 1;
        let gap = (est - oracle).abs();
        if gap > worst {
            worst = gap;
            worst_name = s.name.clone();
        }
    }
    outcome(
        worst <= 1e-3 && circuit_mismatch.is_empty(),
        format!(
            "{compared} families vs oracle, worst gap {worst:.1e} ({worst_name}); {circuit_checks} circuit bases, mismatches {circuit_mismatch:?}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut alerts = 0;
    let mut beaten = Vec::new();
    let mut scanned = 0;
    let mut labels_ok = true;
    for n in 2..=6usize {
        for k in 0..=n - 2 {
            let r = scan_conjecture(n, k, 200, 9, 16).unwrap();
            scanned += r.samples;
            alerts += r.alerts.len();
            labels_ok &= r.label == EVIDENCE && r.rows.len() == r.samples + 1;
            if r.beaten {
                beaten.push(format!("N={n} k={k}"));
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let mut c = RunConfig::new(Command::Scan);
    c.n = Some(4);
    c.k = Some(1);
    c.samples = 5;
    c.format = Format::Csv;
    c.out = Some(out.clone());
    let code = expfam_cli::execute(&c);
    let csv = fs::read_to_string(&out).unwrap_or_default();
    let csv_ok = code == 0 && csv.lines().count() == 7 && csv.starts_with("family_id,N,k,maxD,bound");
    outcome(
        beaten.is_empty() && labels_ok && csv_ok,
        format!(
            "{scanned} sampled families labeled \"{EVIDENCE}\"; {alerts} alerts rechecked by oracle; confirmed beaten {beaten:?}"
        ),
    )
}

fn main() {
    let mut ledger = Ledger::default();
    let mut all = true;
    let mut report = |id: usize, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = within_time(f(), t.elapsed(), limit);
        println!(
            "criterion {id}: {} ({:.2?}) {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed(),
            o.detail
        );
        all &= o.pass;
    };
    report(1, Some(Duration::from_secs(1)), &mut || criterion_1(&mut ledger));
    report(2, Some(Duration::from_secs(30)), &mut || criterion_2(&mut ledger));
    report(3, Some(Duration::from_secs(120)), &mut || criterion_3(&mut ledger));
    report(4, None, &mut || criterion_4(&ledger));
    report(5, None, &mut || criterion_5(&mut ledger));
    report(6, None, &mut || criterion_6(&mut ledger));
    report(7, None, &mut || criterion_7(&mut ledger));
    report(8, None, &mut || criterion_8(&ledger));
    report(9, None, &mut criterion_9);
    if !all {
        std::process::exit(1);
    }
}
