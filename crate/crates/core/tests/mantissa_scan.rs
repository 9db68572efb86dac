use lacunary::harmonic::cumulative_imbalance;
use lacunary::mantissa::*;

#[test]
fn bundled_fixture_regenerates_byte_for_byte() {
    let rows = rounded_amounts_fixture(FIXTURE_SEED).unwrap();
    let mut out = Vec::new();
    write_fixture_csv(&rows, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), ROUNDED_AMOUNTS_CSV);
}

#[test]
fn fixture_discordance_is_nonempty_and_reproducible() {
    let opts = ScanOptions::default();
    let a = scan_dataset(ROUNDED_AMOUNTS_CSV.as_bytes(), &opts).unwrap();
    let b = scan_dataset(ROUNDED_AMOUNTS_CSV.as_bytes(), &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.errors.is_empty());
    assert_eq!(a.records.len(), 200);
    for alpha in [0.05, 0.01] {
        let flagged = a.flagged(alpha);
        let disc = a.discordance(alpha);
        assert!(!disc.is_empty());
        assert!(disc.iter().all(|id| flagged.contains(id)));
    }
    // every planted amount is flagged at 5%
    let planted: Vec<_> = ROUNDED_AMOUNTS_CSV.lines().filter(|l| l.ends_with(",planted")).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(planted.len(), 13);
    let flagged = a.flagged(0.05);
    let hits = planted.iter().filter(|id| flagged.contains(id)).count();
    assert!(hits * 2 > planted.len(), "{hits} of {} planted amounts flagged", planted.len());
}

#[test]
fn fixture_amounts_are_scale_invariant() {
    for line in ROUNDED_AMOUNTS_CSV.lines().skip(1) {
        let amount = line.split(',').nth(1).unwrap();
        let (int, frac) = amount.split_once('.').unwrap();
        let times_ten = format!("{int}{}.{}", &frac[..1], &frac[1..]);
        assert_eq!(mantissa_digits(amount, 10, None).unwrap(), mantissa_digits(&times_ten, 10, None).unwrap(), "{amount}");
        assert_eq!(mantissa_digits(amount, 10, None).unwrap(), mantissa_digits(amount, 10, Some(80)).unwrap());
    }
}

#[test]
fn powers_of_ten_are_all_flagged() {
    let mut csv = String::from("id,amount\n");
    for k in 0..12 {
        csv.push_str(&format!("p{k},1{}\n", "0".repeat(k)));
    }
    csv.push_str("q,0.001\n");
    let s = scan_dataset(csv.as_bytes(), &ScanOptions::default()).unwrap();
    assert_eq!(s.records.len(), 13);
    for r in &s.records {
        assert_eq!(r.lacunary.statistic, 180.0);
        assert!(r.flags.iter().all(|f| f.lacunary));
    }
}

#[test]
fn trajectories_match_direct_recomputation() {
    let s = scan_dataset(ROUNDED_AMOUNTS_CSV.as_bytes(), &ScanOptions::default()).unwrap();
    let id = s.records[0].id.clone();
    let mut out = Vec::new();
    export_trajectories(&s, &[&id], &mut out).unwrap();
    let direct = cumulative_imbalance(&s.record(&id).unwrap().mantissa);
    let mut reader = csv::Reader::from_reader(&out[..]);
    let mut n = 0;
    for row in reader.records() {
        let row = row.unwrap();
        let t: usize = row[1].parse().unwrap();
        let d: usize = row[2].parse().unwrap();
        let v: f64 = row[3].parse().unwrap();
        assert!((v - direct[t - 1][d]).abs() < 1e-10);
        assert_eq!(&row[4], "0.09");
        n += 1;
    }
    assert_eq!(n, 100);
}

#[test]
fn uniform_reconstruction_gives_flat_trajectory() {
    // vanishing partial averages reconstruct p̂ = 1/b at every scale
    let zero = vec![vec![num_complex::Complex64::new(0.0, 0.0); 9]; 10];
    let traj = lacunary::harmonic::imbalance_trajectory(10, &zero);
    assert!(traj.iter().flatten().all(|&v| v == 0.0));
}
